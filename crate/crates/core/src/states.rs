//! Singly-excited state families over the site basis.
//!
//! All constructors return unit-norm amplitude vectors. The phase-ramp
//! (De Moivre) family e^{i2πm(μ−1)/N} forms a complete orthonormal set;
//! the two nonsymmetric families are included for comparison studies and
//! enter the dynamics pipeline on equal footing.

use ndarray::Array1;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChainGeometry;
use crate::scalar::{real, Real};

/// Which basis the amplitudes refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// One amplitude per excited site, c_μ.
    Site,
    /// One amplitude per phase-ramp state, d_m.
    Dm,
}

/// N complex amplitudes tagged with their basis and originating geometry.
#[derive(Debug, Clone)]
pub struct AmplitudeVector<T: Real> {
    amps: Array1<Complex<T>>,
    basis: Basis,
    geom: ChainGeometry<T>,
}

impl<T: Real> AmplitudeVector<T> {
    /// Wrap raw amplitudes, renormalizing to unit norm.
    pub fn from_parts(
        amps: Array1<Complex<T>>,
        basis: Basis,
        geom: &ChainGeometry<T>,
    ) -> Result<Self> {
        if amps.len() != geom.n_atoms() {
            return Err(Error::domain(format!(
                "amplitude count {} does not match n_atoms {}",
                amps.len(),
                geom.n_atoms()
            )));
        }
        let norm = norm_of(&amps);
        if norm.is_nan() || norm <= T::zero() || !norm.is_finite() {
            return Err(Error::domain("amplitudes must have positive finite norm"));
        }
        let amps = amps.mapv(|z| z / norm);
        Ok(Self {
            amps,
            basis,
            geom: geom.clone(),
        })
    }

    /// Symmetric singly-excited state with the excitation phases,
    /// amps_μ = e^{i k·r_μ}/√N.
    pub fn timed_dicke(geom: &ChainGeometry<T>) -> Self {
        let n = geom.n_atoms();
        let root_n = real::<T>(n as f64).sqrt();
        let amps = Array1::from_iter((1..=n).map(|mu| {
            let phase = geom.excitation_phase(mu).expect("site in range");
            Complex::from_polar(T::one() / root_n, phase)
        }));
        Self {
            amps,
            basis: Basis::Site,
            geom: geom.clone(),
        }
    }

    /// m-th phase-ramp state, amps_μ = e^{i k·r_μ}·e^{i2πm(μ−1)/N}/√N,
    /// for m ∈ 1..=N. m = N reproduces [`Self::timed_dicke`].
    pub fn dm_state(geom: &ChainGeometry<T>, m: usize) -> Result<Self> {
        let n = geom.n_atoms();
        if m == 0 || m > n {
            return Err(Error::StateIndex { m, min: 1, max: n });
        }
        let root_n = real::<T>(n as f64).sqrt();
        let two_pi = real::<T>(2.0) * T::PI();
        let amps = Array1::from_iter((1..=n).map(|mu| {
            let ramp = two_pi * real::<T>((m * (mu - 1)) as f64) / real::<T>(n as f64);
            let phase = geom.excitation_phase(mu).expect("site in range") + ramp;
            Complex::from_polar(T::one() / root_n, phase)
        }));
        Ok(Self {
            amps,
            basis: Basis::Site,
            geom: geom.clone(),
        })
    }

    /// m-th nonsymmetric state of the all-atom family, m ∈ 1..=N−1:
    /// amps_μ = (C − (√N+1)/(N−1)·δ_{μN} − δ_{μm})·e^{i k·r_μ} with
    /// C = (1 + 1/√N)/(N−1), orthogonal to the symmetric state by
    /// construction.
    pub fn ns_state_mazets(geom: &ChainGeometry<T>, m: usize) -> Result<Self> {
        let n = geom.n_atoms();
        if n < 2 {
            return Err(Error::domain("nonsymmetric states need N >= 2"));
        }
        if m == 0 || m > n - 1 {
            return Err(Error::StateIndex {
                m,
                min: 1,
                max: n - 1,
            });
        }
        let root_n = real::<T>(n as f64).sqrt();
        let c = (T::one() + T::one() / root_n) / real::<T>((n - 1) as f64);
        let last = (root_n + T::one()) / real::<T>((n - 1) as f64);
        let amps = Array1::from_iter((1..=n).map(|mu| {
            let mut coeff = c;
            if mu == n {
                coeff -= last;
            }
            if mu == m {
                coeff -= T::one();
            }
            let phase = geom.excitation_phase(mu).expect("site in range");
            Complex::from_polar(T::one(), phase) * coeff
        }));
        Self::from_parts(amps, Basis::Site, geom)
    }

    /// m-th nonsymmetric state of the subset family, m ∈ 1..=N−1: the
    /// first m sites carry equal amplitudes against −m on site m+1,
    /// normalized by √(m + m²) so every member is unit norm.
    pub fn ns_state_svidzinsky(geom: &ChainGeometry<T>, m: usize) -> Result<Self> {
        let n = geom.n_atoms();
        if n < 2 {
            return Err(Error::domain("nonsymmetric states need N >= 2"));
        }
        if m == 0 || m > n - 1 {
            return Err(Error::StateIndex {
                m,
                min: 1,
                max: n - 1,
            });
        }
        let mf = real::<T>(m as f64);
        let scale = T::one() / (mf + mf * mf).sqrt();
        let amps = Array1::from_iter((1..=n).map(|mu| {
            let phase = geom.excitation_phase(mu).expect("site in range");
            let coeff = if mu <= m {
                scale
            } else if mu == m + 1 {
                -mf * scale
            } else {
                T::zero()
            };
            Complex::from_polar(T::one(), phase) * coeff
        }));
        Ok(Self {
            amps,
            basis: Basis::Site,
            geom: geom.clone(),
        })
    }

    pub fn amps(&self) -> &Array1<Complex<T>> {
        &self.amps
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn geometry(&self) -> &ChainGeometry<T> {
        &self.geom
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm(&self) -> T {
        norm_of(&self.amps)
    }

    /// Inner product ⟨self|other⟩ with conjugation on `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch {
                expected: self.basis,
                got: other.basis,
            });
        }
        if self.len() != other.len() {
            return Err(Error::domain("inner product of unequal lengths"));
        }
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, b) in self.amps.iter().zip(other.amps.iter()) {
            acc += a.conj() * *b;
        }
        Ok(acc)
    }

    /// Transform site amplitudes into the phase-ramp basis,
    /// d_m = Σ_μ e^{−i k·r_μ − i2πm(μ−1)/N} c_μ / √N.
    pub fn to_dm_basis(&self) -> Result<Self> {
        if self.basis != Basis::Site {
            return Err(Error::BasisMismatch {
                expected: Basis::Site,
                got: self.basis,
            });
        }
        let n = self.len();
        let amps = Array1::from_iter((1..=n).map(|m| {
            let phi = Self::dm_state(&self.geom, m).expect("m in range");
            let mut acc = Complex::new(T::zero(), T::zero());
            for (b, c) in phi.amps.iter().zip(self.amps.iter()) {
                acc += b.conj() * *c;
            }
            acc
        }));
        Ok(Self {
            amps,
            basis: Basis::Dm,
            geom: self.geom.clone(),
        })
    }

    /// Inverse of [`Self::to_dm_basis`].
    pub fn to_site_basis(&self) -> Result<Self> {
        if self.basis != Basis::Dm {
            return Err(Error::BasisMismatch {
                expected: Basis::Dm,
                got: self.basis,
            });
        }
        let n = self.len();
        let mut amps = Array1::from_elem(n, Complex::new(T::zero(), T::zero()));
        for (m, d) in self.amps.iter().enumerate() {
            let phi = Self::dm_state(&self.geom, m + 1).expect("m in range");
            for (out, b) in amps.iter_mut().zip(phi.amps.iter()) {
                *out += *b * *d;
            }
        }
        Ok(Self {
            amps,
            basis: Basis::Site,
            geom: self.geom.clone(),
        })
    }
}

fn norm_of<T: Real>(amps: &Array1<Complex<T>>) -> T {
    amps.iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

/// Free-function constructors mirroring the operation names.
pub fn timed_dicke<T: Real>(geom: &ChainGeometry<T>) -> AmplitudeVector<T> {
    AmplitudeVector::timed_dicke(geom)
}

pub fn dm_state<T: Real>(geom: &ChainGeometry<T>, m: usize) -> Result<AmplitudeVector<T>> {
    AmplitudeVector::dm_state(geom, m)
}

pub fn ns_state_mazets<T: Real>(
    geom: &ChainGeometry<T>,
    m: usize,
) -> Result<AmplitudeVector<T>> {
    AmplitudeVector::ns_state_mazets(geom, m)
}

pub fn ns_state_svidzinsky<T: Real>(
    geom: &ChainGeometry<T>,
    m: usize,
) -> Result<AmplitudeVector<T>> {
    AmplitudeVector::ns_state_svidzinsky(geom, m)
}
