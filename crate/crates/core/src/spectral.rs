//! Eigenmode decomposition of the coupling matrix and spectral time
//! evolution.
//!
//! The matrix is complex-symmetric but not Hermitian, so right eigenvectors
//! and the inverse of the eigenvector matrix both enter: with M = U Λ U⁻¹,
//! site amplitudes evolve as c(t) = U e^{Λt} U⁻¹ c(0). Eigenvalues are
//! sorted by ascending decay constant −2·Re λ (slowest mode first), ties
//! broken by ascending Im λ, so reported mode indices are reproducible.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, Lapack, Scalar};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geometry::ChainGeometry;
use crate::interaction::CouplingMatrix;
use crate::scalar::{real, Real};
use crate::states::{AmplitudeVector, Basis};

/// Condition-number level of the eigenvector matrix beyond which the
/// decomposition is flagged as near-defective.
pub const CONDITION_WARN: f64 = 1e12;

/// Weighting mass a dominant subset must reach by default.
pub const DEFAULT_SUBSET_THRESHOLD: f64 = 0.98;

/// Sorted eigenvalues with right eigenvectors and their inverse.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    eigenvalues: Array1<Complex<T>>,
    right_vectors: Array2<Complex<T>>,
    inverse_vectors: Array2<Complex<T>>,
    reconstruction_residual: T,
    ill_conditioned: bool,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues λ_n in units of Γ, ascending −2·Re λ.
    pub fn eigenvalues(&self) -> &Array1<Complex<T>> {
        &self.eigenvalues
    }

    /// Decay constants −2·Re λ_n in units of Γ.
    pub fn decay_constants(&self) -> Array1<T> {
        self.eigenvalues.mapv(|l| -real::<T>(2.0) * l.re)
    }

    /// Right eigenvectors as columns of U.
    pub fn right_vectors(&self) -> &Array2<Complex<T>> {
        &self.right_vectors
    }

    pub fn inverse_vectors(&self) -> &Array2<Complex<T>> {
        &self.inverse_vectors
    }

    /// Max-norm of U·diag(λ)·U⁻¹ − M.
    pub fn reconstruction_residual(&self) -> T {
        self.reconstruction_residual
    }

    /// True when cond∞(U) exceeds [`CONDITION_WARN`].
    pub fn is_ill_conditioned(&self) -> bool {
        self.ill_conditioned
    }
}

/// Diagonalize the coupling matrix.
pub fn diagonalize<T>(matrix: &CouplingMatrix<T>) -> Result<SpectralDecomposition<T>>
where
    T: Real,
    Complex<T>: Lapack + Scalar<Real = T, Complex = Complex<T>>,
{
    let m = matrix.entries();
    let (vals, vecs) = m
        .eig()
        .map_err(|e| Error::Eigensolver(e.to_string()))?;

    // deterministic order: ascending decay constant, ties by ascending Im
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        let da = -vals[a].re;
        let db = -vals[b].re;
        da.partial_cmp(&db)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                vals[a]
                    .im
                    .partial_cmp(&vals[b].im)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    let n = vals.len();
    let eigenvalues = Array1::from_iter(order.iter().map(|&k| vals[k]));
    let mut right_vectors = Array2::from_elem((n, n), Complex::new(T::zero(), T::zero()));
    for (col, &k) in order.iter().enumerate() {
        right_vectors.column_mut(col).assign(&vecs.column(k));
    }

    let inverse_vectors = right_vectors
        .inv()
        .map_err(|e| Error::Eigensolver(format!("eigenvector inversion: {e}")))?;

    // residual of the similarity reconstruction
    let mut residual = T::zero();
    let lam_uinv = {
        let mut a = inverse_vectors.clone();
        for (row, l) in a.rows_mut().into_iter().zip(eigenvalues.iter()) {
            for x in row {
                *x *= *l;
            }
        }
        a
    };
    let recon = right_vectors.dot(&lam_uinv);
    for (r, orig) in recon.iter().zip(m.iter()) {
        let dev = (*r - *orig).norm();
        if dev > residual {
            residual = dev;
        }
    }

    let cond = inf_norm(&right_vectors) * inf_norm(&inverse_vectors);
    let decomp = SpectralDecomposition {
        eigenvalues,
        right_vectors,
        inverse_vectors,
        reconstruction_residual: residual,
        ill_conditioned: cond > real::<T>(CONDITION_WARN),
    };

    let tol = real::<T>(1e-9) * real::<T>(n as f64);
    if decomp.reconstruction_residual > tol {
        return Err(Error::Eigensolver(format!(
            "reconstruction residual {} exceeds {}",
            decomp.reconstruction_residual, tol
        )));
    }
    Ok(decomp)
}

fn inf_norm<T: Real>(a: &Array2<Complex<T>>) -> T {
    let mut worst = T::zero();
    for row in a.rows() {
        let s = row
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |acc, x| acc + x);
        if s > worst {
            worst = s;
        }
    }
    worst
}

/// Bilinear projections of a prepared state onto the eigenmodes.
///
/// For a site-basis state |s⟩: v_n = ⟨s|u_n⟩ and w_n = (U⁻¹ s)_n, so that
/// the survival amplitude is ⟨s(0)|s(t)⟩ = Σ_n v_n e^{λ_n t} w_n with
/// Σ_n v_n w_n = 1.
#[derive(Debug, Clone)]
pub struct WeightingTable<T: Real> {
    v: Array1<Complex<T>>,
    w: Array1<Complex<T>>,
    raw_weighting: Array1<T>,
    normalized_weighting: Array1<T>,
    dominant_subset: Vec<usize>,
    m: usize,
}

impl<T: Real> WeightingTable<T> {
    pub fn v(&self) -> &Array1<Complex<T>> {
        &self.v
    }

    pub fn w(&self) -> &Array1<Complex<T>> {
        &self.w
    }

    /// |v_n w_n|² before normalization.
    pub fn raw_weighting(&self) -> &Array1<T> {
        &self.raw_weighting
    }

    /// |v_n w_n|² / Σ|v w|²; sums to one by construction.
    pub fn normalized_weighting(&self) -> &Array1<T> {
        &self.normalized_weighting
    }

    /// Smallest set of modes whose normalized weightings reach the default
    /// threshold, largest weights first.
    pub fn dominant_subset(&self) -> &[usize] {
        &self.dominant_subset
    }

    /// State index recorded for reporting.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dominant_subset_with(&self, threshold: T) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.normalized_weighting.len()).collect();
        idx.sort_by(|&a, &b| {
            self.normalized_weighting[b]
                .partial_cmp(&self.normalized_weighting[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out = Vec::new();
        let mut mass = T::zero();
        for k in idx {
            out.push(k);
            mass += self.normalized_weighting[k];
            if mass >= threshold {
                break;
            }
        }
        out
    }

    /// Index of the mode carrying the largest weighting.
    pub fn dominant_mode(&self) -> usize {
        self.dominant_subset[0]
    }

    /// The two modes with the largest weightings.
    pub fn top_pair(&self) -> Option<(usize, usize)> {
        if self.normalized_weighting.len() < 2 {
            return None;
        }
        let ranked = self.dominant_subset_with(T::infinity());
        Some((ranked[0], ranked[1]))
    }

    /// Combined normalized weighting carried by `subset`.
    pub fn subset_mass(&self, subset: &[usize]) -> T {
        subset
            .iter()
            .map(|&k| self.normalized_weighting[k])
            .fold(T::zero(), |a, b| a + b)
    }

    /// Σ_n v_n w_n; equals one for any unit-norm prepared state.
    pub fn completeness(&self) -> Complex<T> {
        self.v
            .iter()
            .zip(self.w.iter())
            .map(|(a, b)| *a * *b)
            .fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z)
    }
}

/// Project a site-basis state onto the eigenmodes. `m` is carried through
/// for bookkeeping only (reports and CSV output).
pub fn weightings<T: Real>(
    decomp: &SpectralDecomposition<T>,
    state: &AmplitudeVector<T>,
    m: usize,
) -> Result<WeightingTable<T>> {
    if state.basis() != Basis::Site {
        return Err(Error::BasisMismatch {
            expected: Basis::Site,
            got: state.basis(),
        });
    }
    if state.len() != decomp.n() {
        return Err(Error::domain(format!(
            "state length {} does not match decomposition size {}",
            state.len(),
            decomp.n()
        )));
    }
    let n = decomp.n();
    let amps = state.amps();
    let mut v = Array1::from_elem(n, Complex::new(T::zero(), T::zero()));
    for (k, out) in v.iter_mut().enumerate() {
        let col = decomp.right_vectors.column(k);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (c, u) in amps.iter().zip(col.iter()) {
            acc += c.conj() * *u;
        }
        *out = acc;
    }
    let mut w = Array1::from_elem(n, Complex::new(T::zero(), T::zero()));
    for (k, out) in w.iter_mut().enumerate() {
        let row = decomp.inverse_vectors.row(k);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (c, ui) in amps.iter().zip(row.iter()) {
            acc += *ui * *c;
        }
        *out = acc;
    }
    let raw = Array1::from_iter(
        v.iter()
            .zip(w.iter())
            .map(|(a, b)| (*a * *b).norm_sqr()),
    );
    let total = raw.iter().fold(T::zero(), |a, &b| a + b);
    if total.is_nan() || total <= T::zero() {
        return Err(Error::domain("weightings vanish identically"));
    }
    let normalized = raw.mapv(|x| x / total);

    let mut table = WeightingTable {
        v,
        w,
        raw_weighting: raw,
        normalized_weighting: normalized,
        dominant_subset: Vec::new(),
        m,
    };
    table.dominant_subset = table.dominant_subset_with(real::<T>(DEFAULT_SUBSET_THRESHOLD));
    Ok(table)
}

/// Survival amplitude ⟨state(0)|state(t)⟩ at the requested times.
pub fn evolve_projection<T: Real>(
    decomp: &SpectralDecomposition<T>,
    state: &AmplitudeVector<T>,
    times: &[T],
) -> Result<Vec<Complex<T>>> {
    check_times(times)?;
    let table = weightings(decomp, state, 0)?;
    let vw: Vec<Complex<T>> = table
        .v
        .iter()
        .zip(table.w.iter())
        .map(|(a, b)| *a * *b)
        .collect();
    let traj = times
        .iter()
        .map(|&t| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (coef, lam) in vw.iter().zip(decomp.eigenvalues.iter()) {
                acc += *coef * (*lam * t).exp();
            }
            acc
        })
        .collect();
    Ok(traj)
}

/// Amplitude d_m(t) of the m-th phase-ramp state under its own evolution.
/// d_m(0) = 1 up to roundoff.
pub fn evolve_dm<T: Real>(
    decomp: &SpectralDecomposition<T>,
    geom: &ChainGeometry<T>,
    m: usize,
    times: &[T],
) -> Result<Vec<Complex<T>>> {
    let phi = AmplitudeVector::dm_state(geom, m)?;
    evolve_projection(decomp, &phi, times)
}

/// Full site-basis trajectory c(t) = U e^{Λt} U⁻¹ c(0); one row per time.
pub fn evolve_site<T: Real>(
    decomp: &SpectralDecomposition<T>,
    c0: &AmplitudeVector<T>,
    times: &[T],
) -> Result<Array2<Complex<T>>> {
    check_times(times)?;
    if c0.basis() != Basis::Site {
        return Err(Error::BasisMismatch {
            expected: Basis::Site,
            got: c0.basis(),
        });
    }
    if c0.len() != decomp.n() {
        return Err(Error::domain("initial state length mismatch"));
    }
    let n = decomp.n();
    let w = {
        let mut out = Array1::from_elem(n, Complex::new(T::zero(), T::zero()));
        for (k, slot) in out.iter_mut().enumerate() {
            let row = decomp.inverse_vectors.row(k);
            let mut acc = Complex::new(T::zero(), T::zero());
            for (c, ui) in c0.amps().iter().zip(row.iter()) {
                acc += *ui * *c;
            }
            *slot = acc;
        }
        out
    };
    let mut traj = Array2::from_elem((times.len(), n), Complex::new(T::zero(), T::zero()));
    for (ti, &t) in times.iter().enumerate() {
        let phases: Vec<Complex<T>> = decomp
            .eigenvalues
            .iter()
            .zip(w.iter())
            .map(|(lam, wk)| (*lam * t).exp() * *wk)
            .collect();
        let mut row = traj.row_mut(ti);
        for (mu, slot) in row.iter_mut().enumerate() {
            let urow = decomp.right_vectors.row(mu);
            let mut acc = Complex::new(T::zero(), T::zero());
            for (u, p) in urow.iter().zip(phases.iter()) {
                acc += *u * *p;
            }
            *slot = acc;
        }
    }
    Ok(traj)
}

/// Total excited population Σ_μ |c_μ|² of one site-basis snapshot.
pub fn population<T: Real>(row: ndarray::ArrayView1<'_, Complex<T>>) -> T {
    row.iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |a, b| a + b)
}

fn check_times<T: Real>(times: &[T]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::domain("empty time grid"));
    }
    let mut prev = None;
    for &t in times {
        if t < T::zero() || !t.is_finite() {
            return Err(Error::domain("times must be finite and non-negative"));
        }
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::domain("times must be strictly increasing"));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// Uniform evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T: Real> {
    pub t_max: T,
    pub points: usize,
}

pub const DEFAULT_GRID_POINTS: usize = 2001;

impl<T: Real> TimeGrid<T> {
    pub fn new(t_max: T, points: usize) -> Result<Self> {
        if t_max.is_nan() || t_max <= T::zero() || points < 2 {
            return Err(Error::domain("grid needs t_max > 0 and at least 2 points"));
        }
        Ok(Self { t_max, points })
    }

    pub fn to_vec(self) -> Vec<T> {
        let step = self.t_max / real::<T>((self.points - 1) as f64);
        (0..self.points)
            .map(|k| step * real::<T>(k as f64))
            .collect()
    }
}

/// Default grid for fluorescence traces: t_max = min(50, 5/γ) with γ the
/// decay constant of the dominant mode.
pub fn default_grid<T: Real>(dominant_decay: T) -> TimeGrid<T> {
    let cap = real::<T>(50.0);
    let t_max = if dominant_decay > T::zero() {
        cap.min(real::<T>(5.0) / dominant_decay)
    } else {
        cap
    };
    TimeGrid {
        t_max: t_max.max(real::<T>(1.0)),
        points: DEFAULT_GRID_POINTS,
    }
}

/// Grid for decay-constant scans: slow subradiant states need windows long
/// enough to resolve their decay, so the cap acts as a floor instead,
/// t_max = max(50, 5/γ).
pub fn scan_grid<T: Real>(dominant_decay: T) -> TimeGrid<T> {
    let floor = real::<T>(50.0);
    let t_max = if dominant_decay > T::zero() {
        floor.max(real::<T>(5.0) / dominant_decay)
    } else {
        floor
    };
    TimeGrid {
        t_max,
        points: DEFAULT_GRID_POINTS,
    }
}
