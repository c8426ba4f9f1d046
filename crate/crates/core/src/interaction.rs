//! Resonant dipole-dipole kernels and the non-Hermitian coupling matrix.
//!
//! `f_kernel` carries the spatially dependent decay rates, `g_kernel` the
//! cooperative Lamb shifts. Both depend on a pair of sites only through the
//! dimensionless separation ξ = 2π d_s |μ−ν| and the dipole alignment
//! (d̂·r̂)². The coupling matrix in units of Γ is
//!
//! ```text
//! M[μ][ν] = (1/2)·(−F(ξ_{μν}) + 2i·G(ξ_{μν})·[μ≠ν])
//! ```
//!
//! complex-symmetric, with every diagonal entry −1/2.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::ChainGeometry;
use crate::scalar::{real, Real};
use crate::states::AmplitudeVector;

/// Below this ξ the decay kernel switches to its Taylor series: the closed
/// form loses ~5 digits to cancellation in cosξ/ξ² − sinξ/ξ³ there, while
/// the truncated series is accurate to machine precision up to the switch.
pub const SERIES_SWITCH: f64 = 5e-2;

/// Decay-rate kernel F(ξ).
///
/// F(ξ) = (3/2)·{ (1−a)·sinξ/ξ + (1−3a)·(cosξ/ξ² − sinξ/ξ³) } with
/// a = alignment; F(0) = 1 for every alignment.
pub fn f_kernel<T: Real>(xi: T, alignment: T) -> Result<T> {
    check_alignment(alignment)?;
    if xi < T::zero() {
        return Err(Error::domain(format!("negative separation xi = {xi}")));
    }
    let a = alignment;
    let c1 = T::one() - a;
    let c2 = T::one() - real::<T>(3.0) * a;
    let three_half = real::<T>(1.5);
    if xi < real::<T>(SERIES_SWITCH) {
        let x2 = xi * xi;
        // sinξ/ξ = 1 − ξ²/6 + ξ⁴/120 − ξ⁶/5040
        let sinc = T::one() - x2 / real::<T>(6.0) + x2 * x2 / real::<T>(120.0)
            - x2 * x2 * x2 / real::<T>(5040.0);
        // cosξ/ξ² − sinξ/ξ³ = −1/3 + ξ²/30 − ξ⁴/840 + ξ⁶/45360
        let tail = -T::one() / real::<T>(3.0) + x2 / real::<T>(30.0)
            - x2 * x2 / real::<T>(840.0)
            + x2 * x2 * x2 / real::<T>(45360.0);
        return Ok(three_half * (c1 * sinc + c2 * tail));
    }
    let (s, c) = (xi.sin(), xi.cos());
    Ok(three_half * (c1 * s / xi + c2 * (c / (xi * xi) - s / (xi * xi * xi))))
}

/// Lamb-shift kernel G(ξ).
///
/// G(ξ) = (3/4)·{ −(1−a)·cosξ/ξ + (1−3a)·(sinξ/ξ² + cosξ/ξ³) }. Diverges
/// as ξ→0 (1/ξ³); zero separation is a hard error.
pub fn g_kernel<T: Real>(xi: T, alignment: T) -> Result<T> {
    check_alignment(alignment)?;
    if xi < T::zero() {
        return Err(Error::domain(format!("negative separation xi = {xi}")));
    }
    if xi == T::zero() {
        return Err(Error::KernelDivergence);
    }
    let a = alignment;
    let c1 = T::one() - a;
    let c2 = T::one() - real::<T>(3.0) * a;
    let (s, c) = (xi.sin(), xi.cos());
    Ok(real::<T>(0.75) * (-c1 * c / xi + c2 * (s / (xi * xi) + c / (xi * xi * xi))))
}

fn check_alignment<T: Real>(alignment: T) -> Result<()> {
    if alignment >= T::zero() && alignment <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "alignment must lie in [0,1], got {alignment}"
        )))
    }
}

/// The N×N coupling matrix in units of Γ, tied to the geometry it was
/// built from.
#[derive(Debug, Clone)]
pub struct CouplingMatrix<T: Real> {
    entries: Array2<Complex<T>>,
    geom: ChainGeometry<T>,
}

impl<T: Real> CouplingMatrix<T> {
    /// Assemble the matrix. Kernel values are computed once per distinct
    /// site distance and written into the Toeplitz structure.
    pub fn build(geom: &ChainGeometry<T>) -> Result<Self> {
        let n = geom.n_atoms();
        let a = geom.dipole_alignment();
        let half = real::<T>(0.5);
        let mut by_distance = Vec::with_capacity(n);
        by_distance.push(Complex::new(-half, T::zero()));
        for d in 1..n {
            let xi = geom.pair_separation(1, 1 + d)?;
            let f = f_kernel(xi, a)?;
            let g = g_kernel(xi, a)?;
            by_distance.push(Complex::new(-half * f, g));
        }
        let entries =
            Array2::from_shape_fn((n, n), |(i, j)| by_distance[i.abs_diff(j)]);
        Ok(Self {
            entries,
            geom: geom.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.geom.n_atoms()
    }

    pub fn entries(&self) -> &Array2<Complex<T>> {
        &self.entries
    }

    pub fn geometry(&self) -> &ChainGeometry<T> {
        &self.geom
    }

    /// The real decay matrix F[μ][ν] = −2·Re M[μ][ν]; its positive
    /// semidefiniteness guarantees non-increasing excited population.
    pub fn decay_matrix(&self) -> Array2<T> {
        self.entries.mapv(|z| -real::<T>(2.0) * z.re)
    }

    /// Quadratic form ⟨state| M |state⟩.
    pub fn expectation(&self, state: &AmplitudeVector<T>) -> Result<Complex<T>> {
        let amps = self.check_state(state)?;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (i, ci) in amps.iter().enumerate() {
            let row = self.entries.row(i);
            let mut rowsum = Complex::new(T::zero(), T::zero());
            for (cj, mij) in amps.iter().zip(row.iter()) {
                rowsum += *mij * *cj;
            }
            acc += ci.conj() * rowsum;
        }
        Ok(acc)
    }

    /// Initial decay rate −2·Re⟨state|M|state⟩ of the total excited
    /// population when the system starts in `state`.
    pub fn initial_decay_rate(&self, state: &AmplitudeVector<T>) -> Result<T> {
        Ok(-real::<T>(2.0) * self.expectation(state)?.re)
    }

    /// Coupling strength Γ_{m,m} of the m-th phase-ramp state.
    pub fn dm_coupling_strength(&self, m: usize) -> Result<T> {
        let phi = AmplitudeVector::dm_state(&self.geom, m)?;
        self.initial_decay_rate(&phi)
    }

    fn check_state<'a>(
        &self,
        state: &'a AmplitudeVector<T>,
    ) -> Result<&'a Array1<Complex<T>>> {
        if state.len() != self.n() {
            return Err(Error::domain(format!(
                "state length {} does not match matrix size {}",
                state.len(),
                self.n()
            )));
        }
        Ok(state.amps())
    }
}

/// Free-function form of [`CouplingMatrix::build`].
pub fn build_coupling_matrix<T: Real>(geom: &ChainGeometry<T>) -> Result<CouplingMatrix<T>> {
    CouplingMatrix::build(geom)
}

/// Coupling strength Γ_{m,m} for a geometry, building the matrix on the fly.
pub fn coupling_strength<T: Real>(geom: &ChainGeometry<T>, m: usize) -> Result<T> {
    CouplingMatrix::build(geom)?.dm_coupling_strength(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    // reference values evaluated from the closed forms at high precision
    const F_HALF_PI: f64 = 0.567_911_245_352_978_1;
    const F_PI: f64 = -0.151_981_775_463_506_66;
    const G_PI: f64 = 0.214_543_763_812_943_39;
    const G_HALF_PI_PAR: f64 = -0.607_927_101_854_026_6;

    #[test]
    fn f_kernel_reference_values() {
        assert_relative_eq!(f_kernel(0.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(f_kernel(0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(f_kernel(PI / 2.0, 0.0).unwrap(), F_HALF_PI, epsilon = 1e-14);
        assert_relative_eq!(f_kernel(PI, 0.0).unwrap(), F_PI, epsilon = 1e-14);
        // bracket 1−3a vanishes at a = 1/3 and sin(2π) = 0 kills the rest
        assert!(f_kernel(2.0 * PI, 1.0 / 3.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn g_kernel_reference_values() {
        assert_relative_eq!(g_kernel(PI, 0.0).unwrap(), G_PI, epsilon = 1e-14);
        assert_relative_eq!(
            g_kernel(PI / 2.0, 1.0).unwrap(),
            G_HALF_PI_PAR,
            epsilon = 1e-14
        );
        assert_relative_eq!(g_kernel(PI / 2.0, 1.0).unwrap(), -6.0 / (PI * PI), epsilon = 1e-14);
    }

    #[test]
    fn g_kernel_diverges_at_zero() {
        assert!(matches!(
            g_kernel(0.0, 0.0),
            Err(Error::KernelDivergence)
        ));
    }

    #[test]
    fn kernels_reject_bad_arguments() {
        assert!(f_kernel(-1.0, 0.0).is_err());
        assert!(g_kernel(-1.0, 0.0).is_err());
        assert!(f_kernel(1.0, 1.1).is_err());
        assert!(g_kernel(1.0, -0.2).is_err());
    }

    #[test]
    fn series_and_closed_form_agree_near_switch() {
        // sample both sides of the switch; the closed form carries the
        // cancellation error, so agreement is asserted at 1e-12 absolute
        for &a in &[0.0, 0.5, 1.0] {
            for k in 0..200 {
                let xi = SERIES_SWITCH * (0.9 + 0.002 * k as f64);
                let closed = {
                    let (s, c) = (xi.sin(), xi.cos());
                    1.5 * ((1.0 - a) * s / xi
                        + (1.0 - 3.0 * a) * (c / (xi * xi) - s / (xi * xi * xi)))
                };
                let val = f_kernel(xi, a).unwrap();
                assert!(
                    (val - closed).abs() < 1e-12,
                    "xi={xi} a={a}: series {val} vs closed {closed}"
                );
            }
        }
    }

    #[test]
    fn f_kernel_f32_smoke() {
        let v: f32 = f_kernel(PI as f32 / 2.0, 0.0_f32).unwrap();
        assert!((v - F_HALF_PI as f32).abs() < 1e-6);
        assert_eq!(f_kernel(0.0_f32, 0.3_f32).unwrap(), 1.0_f32);
    }

    #[test]
    fn matrix_single_atom() {
        let geom = ChainGeometry::axial(1, 0.5).unwrap();
        let m = CouplingMatrix::build(&geom).unwrap();
        assert_eq!(m.entries().shape(), &[1, 1]);
        assert_eq!(m.entries()[[0, 0]], num_complex::Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn matrix_two_atoms_half_wavelength() {
        let geom = ChainGeometry::axial(2, 0.5).unwrap();
        let m = CouplingMatrix::build(&geom).unwrap();
        let off = m.entries()[[0, 1]];
        assert_relative_eq!(off.re, -F_PI / 2.0, epsilon = 1e-14);
        assert_relative_eq!(off.im, G_PI, epsilon = 1e-14);
        assert_eq!(m.entries()[[0, 1]], m.entries()[[1, 0]]);
    }

    #[test]
    fn matrix_diagonal_and_trace() {
        let geom = ChainGeometry::axial(16, 0.1).unwrap();
        let m = CouplingMatrix::build(&geom).unwrap();
        let mut trace = num_complex::Complex64::new(0.0, 0.0);
        for mu in 0..16 {
            assert_eq!(m.entries()[[mu, mu]], num_complex::Complex64::new(-0.5, 0.0));
            trace += m.entries()[[mu, mu]];
        }
        assert_relative_eq!(trace.re, -8.0);
        assert_eq!(trace.im, 0.0);
    }

    #[test]
    fn matrix_is_complex_symmetric() {
        let geom = ChainGeometry::new(12, 0.23, 0.4, true).unwrap();
        let m = CouplingMatrix::build(&geom).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert_eq!(m.entries()[[i, j]], m.entries()[[j, i]]);
            }
        }
    }

    #[test]
    fn coupling_strength_single_atom_is_natural_rate() {
        let geom = ChainGeometry::axial(1, 0.5).unwrap();
        assert_relative_eq!(coupling_strength(&geom, 1).unwrap(), 1.0);
    }

    #[test]
    fn coupling_strength_two_atoms_closed_form() {
        // for N=2 the quadratic form reduces to 1 ± F(ξ)·cos ξ
        for &ds in &[0.1, 0.25, 0.5] {
            let geom = ChainGeometry::axial(2, ds).unwrap();
            let xi = 2.0 * PI * ds;
            let f = f_kernel(xi, 0.0).unwrap();
            assert_relative_eq!(
                coupling_strength(&geom, 1).unwrap(),
                1.0 - f * xi.cos(),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                coupling_strength(&geom, 2).unwrap(),
                1.0 + f * xi.cos(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn lowest_coupling_strengths_at_small_spacing() {
        // N=16 landscape: the minimizing m is 6 at d_s=0.1 and 4 at 0.25
        for (ds, expected) in [(0.1, 6), (0.25, 4)] {
            let geom = ChainGeometry::axial(16, ds).unwrap();
            let matrix = CouplingMatrix::build(&geom).unwrap();
            let mut best = (0usize, f64::INFINITY);
            for m in 1..=16 {
                let g = matrix.dm_coupling_strength(m).unwrap();
                assert!(g >= 0.0, "coupling strength must be non-negative");
                if g < best.1 {
                    best = (m, g);
                }
            }
            assert_eq!(best.0, expected, "d_s = {ds}");
        }
    }

    #[test]
    fn minimizers_sit_below_half_chain() {
        let spacings = [0.1, 0.2, 0.3, 0.4];
        for &ds in &spacings {
            let geom = ChainGeometry::axial(16, ds).unwrap();
            let matrix = CouplingMatrix::build(&geom).unwrap();
            let mut best = (0usize, f64::INFINITY);
            for m in 1..=16 {
                let g = matrix.dm_coupling_strength(m).unwrap();
                if g < best.1 {
                    best = (m, g);
                }
            }
            assert!(best.0 <= 8, "d_s = {ds}: minimizing m = {}", best.0);
        }
    }

    #[test]
    fn independent_atom_limit_at_large_spacing() {
        let geom = ChainGeometry::axial(16, 50.0).unwrap();
        let matrix = CouplingMatrix::build(&geom).unwrap();
        for m in 1..=16 {
            let g: f64 = matrix.dm_coupling_strength(m).unwrap();
            assert!((g - 1.0).abs() <= 0.05, "m = {m}: {g}");
        }
    }

    #[test]
    fn state_index_out_of_range() {
        let geom = ChainGeometry::<f64>::axial(4, 0.5).unwrap();
        let matrix = CouplingMatrix::build(&geom).unwrap();
        assert!(matrix.dm_coupling_strength(0).is_err());
        assert!(matrix.dm_coupling_strength(5).is_err());
    }

    #[test]
    fn decay_matrix_is_positive_semidefinite() {
        use ndarray_linalg::{Eigh, UPLO};
        for &ds in &[0.1, 0.25, 0.5, 0.68, 1.0] {
            let geom = ChainGeometry::axial(16, ds).unwrap();
            let matrix = CouplingMatrix::build(&geom).unwrap();
            let f = matrix.decay_matrix();
            let (vals, _) = f.eigh(UPLO::Lower).unwrap();
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-10 * 16.0, "d_s = {ds}: min eigenvalue {min}");
        }
    }
}
