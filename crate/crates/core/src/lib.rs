//! Cooperative single-photon emission from a one-dimensional atomic chain.
//!
//! The crate builds singly-excited collective states over a 1D lattice,
//! couples them through the resonant dipole-dipole interaction, and
//! extracts the observables a fluorescence experiment would measure:
//! super- and subradiant decay constants, collective-shift beats, and the
//! field pulses required to prepare each state.
//!
//! Units: lengths in the transition wavelength λ, times in 1/Γ, rates in
//! Γ, with Γ the single-atom natural decay rate.
//!
//! The core is generic over the floating-point scalar via [`Real`];
//! concrete `f64`/`f32` aliases for the main types are exported at the
//! crate root. Spectral routines additionally require the complex scalar
//! to be LAPACK-backed, which holds for both concrete types.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod interaction;
pub mod ode;
pub mod planner;
pub mod scalar;
pub mod spectral;
pub mod states;

pub use analysis::{DecayFitReport, EnvelopePoints, FitOptions, ScanRow};
pub use error::{Error, Result};
pub use geometry::ChainGeometry;
pub use interaction::CouplingMatrix;
pub use planner::{FieldPlan, Mechanism, PhysicalConstants, RobustnessRow, StarkMode};
pub use scalar::Real;
pub use spectral::{SpectralDecomposition, TimeGrid, WeightingTable};
pub use states::{AmplitudeVector, Basis};

pub type ChainGeometry64 = ChainGeometry<f64>;
pub type ChainGeometry32 = ChainGeometry<f32>;
pub type CouplingMatrix64 = CouplingMatrix<f64>;
pub type CouplingMatrix32 = CouplingMatrix<f32>;
pub type AmplitudeVector64 = AmplitudeVector<f64>;
pub type AmplitudeVector32 = AmplitudeVector<f32>;
pub type SpectralDecomposition64 = SpectralDecomposition<f64>;
pub type SpectralDecomposition32 = SpectralDecomposition<f32>;
pub type WeightingTable64 = WeightingTable<f64>;
pub type DecayFitReport64 = DecayFitReport<f64>;
pub type FieldPlan64 = FieldPlan<f64>;
