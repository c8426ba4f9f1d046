//! The 1D chain: unit conventions and position-dependent phases.
//!
//! Lengths are in units of the transition wavelength λ, times in 1/Γ and
//! rates in Γ throughout the crate. Sites are indexed 1..=N with site 1 at
//! the origin, so z_μ = (μ−1)·d_s·λ; only phase differences are physical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// An evenly spaced chain of identical two-level emitters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry<T: Real> {
    n_atoms: usize,
    spacing: T,
    dipole_alignment: T,
    excitation_along_chain: bool,
}

impl<T: Real> ChainGeometry<T> {
    /// Build a chain of `n_atoms` with lattice spacing `spacing` (units of λ).
    ///
    /// `dipole_alignment` is (d̂·r̂)² ∈ [0,1]; `excitation_along_chain`
    /// selects whether the excitation pulse travels along the chain axis
    /// (imprinting phases k·r_μ = 2π d_s (μ−1)) or transverse to it (no
    /// phases).
    pub fn new(
        n_atoms: usize,
        spacing: T,
        dipole_alignment: T,
        excitation_along_chain: bool,
    ) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::domain("n_atoms must be at least 1"));
        }
        if spacing.is_nan() || spacing <= T::zero() || !spacing.is_finite() {
            return Err(Error::domain(format!(
                "spacing must be positive and finite, got {spacing}"
            )));
        }
        if dipole_alignment.is_nan() || dipole_alignment < T::zero() || dipole_alignment > T::one()
        {
            return Err(Error::domain(format!(
                "dipole_alignment must lie in [0,1], got {dipole_alignment}"
            )));
        }
        Ok(Self {
            n_atoms,
            spacing,
            dipole_alignment,
            excitation_along_chain,
        })
    }

    /// Standard configuration: transverse linear polarization
    /// (alignment 0) and axial excitation.
    pub fn axial(n_atoms: usize, spacing: T) -> Result<Self> {
        Self::new(n_atoms, spacing, T::zero(), true)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn dipole_alignment(&self) -> T {
        self.dipole_alignment
    }

    pub fn excitation_along_chain(&self) -> bool {
        self.excitation_along_chain
    }

    pub(crate) fn check_site(&self, mu: usize) -> Result<()> {
        if mu == 0 || mu > self.n_atoms {
            return Err(Error::SiteIndex {
                index: mu,
                n: self.n_atoms,
            });
        }
        Ok(())
    }

    /// Site position z_μ = (μ−1)·d_s in units of λ.
    pub fn site_position(&self, mu: usize) -> Result<T> {
        self.check_site(mu)?;
        Ok(real::<T>((mu - 1) as f64) * self.spacing)
    }

    /// Dimensionless pair separation ξ = |k| r_{μν} = 2π d_s |μ−ν|.
    pub fn pair_separation(&self, mu: usize, nu: usize) -> Result<T> {
        self.check_site(mu)?;
        self.check_site(nu)?;
        let steps = real::<T>(mu.abs_diff(nu) as f64);
        Ok(real::<T>(2.0) * T::PI() * self.spacing * steps)
    }

    /// Excitation phase k·r_μ at site μ: 2π d_s (μ−1) for axial
    /// excitation, 0 otherwise.
    pub fn excitation_phase(&self, mu: usize) -> Result<T> {
        self.check_site(mu)?;
        if !self.excitation_along_chain {
            return Ok(T::zero());
        }
        Ok(real::<T>(2.0) * T::PI() * self.spacing * real::<T>((mu - 1) as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_parameters() {
        assert!(ChainGeometry::<f64>::new(0, 0.5, 0.0, true).is_err());
        assert!(ChainGeometry::new(4, 0.0, 0.0, true).is_err());
        assert!(ChainGeometry::new(4, -0.1, 0.0, true).is_err());
        assert!(ChainGeometry::new(4, 0.5, 1.5, true).is_err());
        assert!(ChainGeometry::new(4, 0.5, -0.1, true).is_err());
    }

    #[test]
    fn pair_separation_matches_definition() {
        let geom = ChainGeometry::axial(8, 0.5).unwrap();
        assert_relative_eq!(geom.pair_separation(1, 2).unwrap(), PI);
        assert_eq!(geom.pair_separation(3, 3).unwrap(), 0.0);

        let geom = ChainGeometry::axial(8, 0.1).unwrap();
        assert_relative_eq!(geom.pair_separation(1, 6).unwrap(), PI, epsilon = 1e-14);
    }

    #[test]
    fn pair_separation_is_symmetric_and_additive_on_the_line() {
        let geom = ChainGeometry::axial(10, 0.37).unwrap();
        for mu in 1..=10 {
            for nu in 1..=10 {
                assert_eq!(
                    geom.pair_separation(mu, nu).unwrap(),
                    geom.pair_separation(nu, mu).unwrap()
                );
            }
        }
        // triangle equality μ ≤ ν ≤ ρ
        for mu in 1..=8 {
            for nu in mu..=9 {
                for rho in nu..=10 {
                    let lhs = geom.pair_separation(mu, rho).unwrap();
                    let rhs = geom.pair_separation(mu, nu).unwrap()
                        + geom.pair_separation(nu, rho).unwrap();
                    assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn excitation_phase_matches_definition() {
        let geom = ChainGeometry::axial(4, 0.25).unwrap();
        assert_eq!(geom.excitation_phase(1).unwrap(), 0.0);
        assert_relative_eq!(geom.excitation_phase(3).unwrap(), PI);

        let transverse = ChainGeometry::new(4, 0.25, 0.0, false).unwrap();
        for mu in 1..=4 {
            assert_eq!(transverse.excitation_phase(mu).unwrap(), 0.0);
        }
    }

    #[test]
    fn adjacent_phase_difference_is_constant() {
        let geom = ChainGeometry::axial(12, 0.173).unwrap();
        let step = 2.0 * PI * 0.173;
        for mu in 1..12 {
            let diff =
                geom.excitation_phase(mu + 1).unwrap() - geom.excitation_phase(mu).unwrap();
            assert_relative_eq!(diff, step, epsilon = 1e-12);
        }
    }

    #[test]
    fn index_errors() {
        let geom = ChainGeometry::<f64>::axial(4, 0.5).unwrap();
        assert!(geom.excitation_phase(0).is_err());
        assert!(geom.excitation_phase(5).is_err());
        assert!(geom.pair_separation(1, 5).is_err());
        assert!(geom.site_position(0).is_err());
    }
}
