//! Pulse planning for state preparation and the phase-error robustness
//! study.
//!
//! A ramp state is prepared from the symmetric state by letting a field
//! gradient imprint the adjacent-site phase 2πm/N. The Zeeman route uses
//! the fitted gradient constant 0.92 mG·ms/μm for a full 2π adjacent-site
//! phase at λ = 780 nm; the Stark route converts the required end-of-chain
//! phase 2πm through U(ω,I) = −α(ω)·I/(2ε₀c). Numbers for the Stark
//! intensities are order-of-magnitude estimates and all physical constants
//! are configurable.

use ndarray::Array1;
use ndarray_linalg::{Lapack, Scalar};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_trace, FitOptions};
use crate::error::{Error, Result};
use crate::geometry::ChainGeometry;
use crate::interaction::{build_coupling_matrix, coupling_strength};
use crate::scalar::{real, Real};
use crate::spectral::{default_grid, diagonalize, evolve_projection, weightings};
use crate::states::AmplitudeVector;

/// How the phase gradient is imprinted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    Zeeman,
    StarkCw,
    StarkPulsed,
}

/// Field parameters required to prepare one target ramp state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldPlan<T> {
    pub mechanism: Mechanism,
    /// mG/μm for Zeeman, mW/cm² for Stark.
    pub gradient_or_intensity: T,
    /// Seconds.
    pub interaction_time: T,
    pub target_m: usize,
    /// Adjacent-site phase 2πm/N in radians.
    pub adjacent_phase: T,
    /// e^{−Γ_N τ_B}: survival of the initially prepared symmetric state
    /// over the imprinting time.
    pub efficiency: T,
}

/// Physical constants used by the planner, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants<T> {
    /// Gradient constant: mG/μm per (λ-unit spacing × ms) for a full 2π
    /// adjacent-site phase at λ = 780 nm.
    pub zeeman_full_cycle: T,
    /// Natural linewidth Γ in rad/s (Rb87 D2: 2π × 6.0666 MHz).
    pub natural_linewidth: T,
    /// Static polarizability α(0) in SI units, C·m²/V
    /// (Rb87 ground state: h × 0.0794 Hz/(V/cm)²).
    pub static_polarizability: T,
    /// Transition angular frequency ω_eg in rad/s (D2: 2π × 384.23 THz).
    pub transition_frequency: T,
}

impl<T: Real> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self {
            zeeman_full_cycle: real::<T>(0.92),
            natural_linewidth: real::<T>(2.0 * std::f64::consts::PI * 6.0666e6),
            static_polarizability: real::<T>(5.2612e-39),
            transition_frequency: real::<T>(2.0 * std::f64::consts::PI * 384.2304e12),
        }
    }
}

const EPSILON_0: f64 = 8.854_187_812_8e-12;
const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
const HBAR: f64 = 1.054_571_817e-34;

/// Magnetic-gradient plan: B' = 0.92/(d'·τ')·(m/N) mG/μm with τ' in ms
/// and d' in units of λ.
pub fn zeeman_plan<T: Real>(
    geom: &ChainGeometry<T>,
    m: usize,
    interaction_time_ms: T,
    spacing_in_lambda: T,
) -> Result<FieldPlan<T>> {
    zeeman_plan_with(
        geom,
        m,
        interaction_time_ms,
        spacing_in_lambda,
        &PhysicalConstants::default(),
    )
}

pub fn zeeman_plan_with<T: Real>(
    geom: &ChainGeometry<T>,
    m: usize,
    interaction_time_ms: T,
    spacing_in_lambda: T,
    consts: &PhysicalConstants<T>,
) -> Result<FieldPlan<T>> {
    let n = geom.n_atoms();
    if m > n {
        return Err(Error::StateIndex { m, min: 1, max: n });
    }
    if interaction_time_ms.is_nan()
        || interaction_time_ms <= T::zero()
        || spacing_in_lambda.is_nan()
        || spacing_in_lambda <= T::zero()
    {
        return Err(Error::domain("interaction time and spacing must be positive"));
    }
    let fraction = real::<T>(m as f64) / real::<T>(n as f64);
    let gradient =
        consts.zeeman_full_cycle / (spacing_in_lambda * interaction_time_ms) * fraction;
    let tau_s = interaction_time_ms * real::<T>(1e-3);
    Ok(FieldPlan {
        mechanism: Mechanism::Zeeman,
        gradient_or_intensity: gradient,
        interaction_time: tau_s,
        target_m: m,
        adjacent_phase: real::<T>(2.0) * T::PI() * fraction,
        efficiency: plan_efficiency(geom, tau_s, consts)?,
    })
}

/// Stark drive variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StarkMode<T> {
    /// Far-detuned ultrashort pulse; the static polarizability applies.
    Pulsed,
    /// Continuous wave at the given detuning (units of Γ).
    Cw { detuning_in_linewidths: T },
}

/// Light-shift plan: the intensity whose end-of-chain differential phase
/// U·τ/ħ reaches 2πm within `interaction_time_s`.
pub fn stark_plan<T: Real>(
    geom: &ChainGeometry<T>,
    m: usize,
    interaction_time_s: T,
    mode: StarkMode<T>,
) -> Result<FieldPlan<T>> {
    stark_plan_with(geom, m, interaction_time_s, mode, &PhysicalConstants::default())
}

pub fn stark_plan_with<T: Real>(
    geom: &ChainGeometry<T>,
    m: usize,
    interaction_time_s: T,
    mode: StarkMode<T>,
    consts: &PhysicalConstants<T>,
) -> Result<FieldPlan<T>> {
    let n = geom.n_atoms();
    if m > n {
        return Err(Error::StateIndex { m, min: 1, max: n });
    }
    if interaction_time_s.is_nan() || interaction_time_s <= T::zero() {
        return Err(Error::domain("interaction time must be positive"));
    }
    let alpha = match mode {
        StarkMode::Pulsed => consts.static_polarizability,
        StarkMode::Cw {
            detuning_in_linewidths,
        } => {
            if detuning_in_linewidths == T::zero() {
                return Err(Error::domain("CW Stark drive requires nonzero detuning"));
            }
            let omega_eg = consts.transition_frequency;
            let omega = omega_eg - detuning_in_linewidths * consts.natural_linewidth;
            let denom = omega_eg * omega_eg - omega * omega;
            if denom == T::zero() {
                return Err(Error::domain("polarizability diverges at zero detuning"));
            }
            consts.static_polarizability * omega_eg * omega_eg / denom
        }
    };
    let (mechanism, phase_total) = match mode {
        StarkMode::Pulsed => (Mechanism::StarkPulsed, phase_across_chain::<T>(m)),
        StarkMode::Cw { .. } => (Mechanism::StarkCw, phase_across_chain::<T>(m)),
    };
    // U = α I/(2 ε0 c); phase = U τ/ħ  ⇒  I = 2 ε0 c ħ φ /(α τ)
    let eps0_c = real::<T>(EPSILON_0 * SPEED_OF_LIGHT);
    let hbar = real::<T>(HBAR);
    let intensity_w_m2 =
        real::<T>(2.0) * eps0_c * hbar * phase_total / (alpha * interaction_time_s);
    // 1 W/m² = 0.1 mW/cm²
    let intensity = intensity_w_m2 * real::<T>(0.1);
    Ok(FieldPlan {
        mechanism,
        gradient_or_intensity: intensity,
        interaction_time: interaction_time_s,
        target_m: m,
        adjacent_phase: real::<T>(2.0) * T::PI() * real::<T>(m as f64)
            / real::<T>(n as f64),
        efficiency: plan_efficiency(geom, interaction_time_s, consts)?,
    })
}

/// End-of-chain phase: N sites at 2πm/N each accumulate 2πm.
fn phase_across_chain<T: Real>(m: usize) -> T {
    real::<T>(2.0) * T::PI() * real::<T>(m as f64)
}

fn plan_efficiency<T: Real>(
    geom: &ChainGeometry<T>,
    tau_seconds: T,
    consts: &PhysicalConstants<T>,
) -> Result<T> {
    let gamma_n = coupling_strength(geom, geom.n_atoms())?;
    let tau_natural = tau_seconds * consts.natural_linewidth;
    Ok(preparation_efficiency(gamma_n, tau_natural))
}

/// e^{−Γ_N τ_B} with both arguments in natural units (Γ and 1/Γ).
pub fn preparation_efficiency<T: Real>(gamma_n: T, tau_b: T) -> T {
    (-gamma_n * tau_b).exp()
}

/// Imprint a linear phase ramp of slope `total_offset/N` per site,
/// e^{i·offset·(μ−1)/N}. A full cycle (offset = 2π) maps ramp state m to
/// m+1. Norm is preserved; for N = 1 the ramp has no effect.
pub fn apply_phase_error<T: Real>(
    state: &AmplitudeVector<T>,
    total_offset: T,
) -> AmplitudeVector<T> {
    let n = state.len();
    let slope = total_offset / real::<T>(n as f64);
    let amps = Array1::from_iter(state.amps().iter().enumerate().map(|(idx, z)| {
        let phase = slope * real::<T>(idx as f64);
        *z * Complex::from_polar(T::one(), phase)
    }));
    AmplitudeVector::from_parts(amps, state.basis(), state.geometry())
        .expect("phase ramp preserves norm")
}

/// One row of the robustness study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessRow<T> {
    /// Total phase offset across the chain, radians.
    pub offset: T,
    /// Normalized weighting mass the perturbed state retains in the
    /// unperturbed dominant mode pair.
    pub subset_projection: T,
    pub gamma_f: T,
    pub spread: T,
    /// Relative deviation of the measured beat from the unperturbed
    /// spectral splitting, when the trace beats.
    pub beat_error: Option<T>,
}

/// Perturb the m-th ramp state by each phase offset, recompute its mode
/// weightings, evolve it, and fit the decay. The comparison subset and
/// the reference splitting come from the unperturbed state; the grid is
/// the default fluorescence window of the unperturbed dominant mode.
pub fn robustness_report<T>(
    geom: &ChainGeometry<T>,
    m: usize,
    offsets: &[T],
) -> Result<Vec<RobustnessRow<T>>>
where
    T: Real + Lapack + Scalar<Real = T, Complex = Complex<T>>,
    Complex<T>: Lapack + Scalar<Real = T, Complex = Complex<T>>,
{
    if offsets.is_empty() {
        return Err(Error::domain("offsets list must be non-empty"));
    }
    let matrix = build_coupling_matrix(geom)?;
    let decomp = diagonalize(&matrix)?;
    let phi = AmplitudeVector::dm_state(geom, m)?;
    let base = weightings(&decomp, &phi, m)?;
    let pair = base
        .top_pair()
        .ok_or_else(|| Error::domain("robustness study needs at least two modes"))?;
    let subset = [pair.0, pair.1];
    let splitting =
        num_traits::Float::abs(decomp.eigenvalues()[pair.0].im - decomp.eigenvalues()[pair.1].im);
    let gamma_dom = -real::<T>(2.0) * decomp.eigenvalues()[base.dominant_mode()].re;
    let times = default_grid(gamma_dom).to_vec();

    offsets
        .iter()
        .map(|&offset| {
            let state = apply_phase_error(&phi, offset);
            let table = weightings(&decomp, &state, m)?;
            let projection = table.subset_mass(&subset);
            let traj = evolve_projection(&decomp, &state, &times)?;
            let series: Vec<(T, T)> = times
                .iter()
                .zip(traj.iter())
                .map(|(&t, z)| (t, z.norm_sqr()))
                .collect();
            let report = fit_trace(&series, &FitOptions::default())?;
            let beat_error = report.beat_frequency.and_then(|b| {
                if splitting > T::zero() {
                    Some(num_traits::Float::abs(b - splitting) / splitting)
                } else {
                    None
                }
            });
            Ok(RobustnessRow {
                offset,
                subset_projection: projection,
                gamma_f: report.gamma_f,
                spread: report.spread,
                beat_error,
            })
        })
        .collect()
}
