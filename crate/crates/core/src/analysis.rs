//! Decay-constant extraction from fluorescence traces.
//!
//! Traces are noiseless simulator output of |d(t)|² on a uniform grid. The
//! envelope is the set of strict local maxima, guarded by a prominence
//! ratio against the shallow ripples that mode leakage superimposes near
//! the beat minima; a trace with fewer than three surviving maxima is
//! treated as non-oscillatory and its tail is the envelope. Fits are
//! log-linear least squares run twice, with and without the first
//! (intercept) point; the reported Γ_f is their mean and the spread half
//! their distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::build_coupling_matrix;
use crate::scalar::{real, Real};
use crate::spectral::{diagonalize, evolve_projection, scan_grid, weightings};
use crate::states::AmplitudeVector;

use ndarray_linalg::{Lapack, Scalar};
use num_complex::Complex;

/// A maximum must exceed both adjacent minima by this factor to count as
/// an envelope point.
pub const DEFAULT_PROMINENCE_RATIO: f64 = 2.0;

/// Envelope of a trace: either the filtered local maxima (oscillatory) or
/// the tail beyond the first sample (monotone).
#[derive(Debug, Clone)]
pub struct EnvelopePoints<T: Real> {
    pub points: Vec<(T, T)>,
    pub oscillatory: bool,
}

/// Extract the envelope with the default prominence guard.
pub fn envelope<T: Real>(series: &[(T, T)]) -> Result<EnvelopePoints<T>> {
    envelope_with_prominence(series, real::<T>(DEFAULT_PROMINENCE_RATIO))
}

/// Extract the envelope; `ratio = 1` reduces to bare strict local maxima.
pub fn envelope_with_prominence<T: Real>(
    series: &[(T, T)],
    ratio: T,
) -> Result<EnvelopePoints<T>> {
    if series.len() < 5 {
        return Err(Error::domain("envelope needs at least 5 samples"));
    }
    for pair in series.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::domain("envelope times must be strictly increasing"));
        }
    }
    let n = series.len();
    let ys: Vec<T> = series.iter().map(|p| p.1).collect();
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..n - 1 {
        if ys[i] > ys[i - 1] && ys[i] > ys[i + 1] {
            maxima.push(i);
        } else if ys[i] < ys[i - 1] && ys[i] < ys[i + 1] {
            minima.push(i);
        }
    }
    let mut keep = Vec::new();
    for &i in &maxima {
        let left = minima
            .iter()
            .rev()
            .find(|&&j| j < i)
            .map(|&j| ys[j])
            .unwrap_or(ys[0]);
        let right = minima
            .iter()
            .find(|&&j| j > i)
            .map(|&j| ys[j])
            .unwrap_or(ys[n - 1]);
        if ys[i] >= ratio * left && ys[i] >= ratio * right {
            keep.push(i);
        }
    }
    if keep.len() < 3 {
        return Ok(EnvelopePoints {
            points: series[1..].to_vec(),
            oscillatory: false,
        });
    }
    Ok(EnvelopePoints {
        points: keep.iter().map(|&i| series[i]).collect(),
        oscillatory: true,
    })
}

/// Result of an exponential fit to an intensity envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFitReport<T> {
    /// Decay constant of |d(t)|² ~ e^{−Γ_f t}, units of Γ. The amplitude
    /// envelope decays at Γ_f/2.
    pub gamma_f: T,
    /// Half-distance between the fits with and without the intercept point.
    pub spread: T,
    /// Dominant oscillation frequency of |d(t)|², if the trace beats.
    pub beat_frequency: Option<T>,
    /// Combined normalized weighting of the dominant mode pair, when known.
    pub dominant_weighting: Option<T>,
    /// State index minimizing Γ_f when produced by a scan.
    pub m_star: Option<usize>,
    /// Time window the fit actually used.
    pub fit_window: (T, T),
}

/// Log-linear least-squares fit of `points`, whose first element is the
/// intercept (t = 0) sample.
pub fn fit_decay<T: Real>(points: &[(T, T)]) -> Result<DecayFitReport<T>> {
    if points.len() < 3 {
        return Err(Error::domain("fit needs at least 3 points"));
    }
    for &(_, y) in points {
        if y.is_nan() || y <= T::zero() {
            return Err(Error::domain(
                "fit requires strictly positive intensities (log undefined)",
            ));
        }
    }
    let with = log_slope(points)?;
    let without = log_slope(&points[1..])?;
    let gamma_f = (with + without) / real::<T>(2.0);
    let spread = (with - without).abs() / real::<T>(2.0);
    Ok(DecayFitReport {
        gamma_f,
        spread,
        beat_frequency: None,
        dominant_weighting: None,
        m_star: None,
        fit_window: (points[0].0, points[points.len() - 1].0),
    })
}

fn log_slope<T: Real>(points: &[(T, T)]) -> Result<T> {
    if points.len() < 2 {
        return Err(Error::domain("fit needs at least 2 points"));
    }
    let n = real::<T>(points.len() as f64);
    let mut st = T::zero();
    let mut sy = T::zero();
    for &(t, y) in points {
        st += t;
        sy += y.ln();
    }
    let mt = st / n;
    let my = sy / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for &(t, y) in points {
        let dt = t - mt;
        num += dt * (y.ln() - my);
        den += dt * dt;
    }
    if den == T::zero() {
        return Err(Error::domain("degenerate fit abscissae"));
    }
    Ok(-num / den)
}

/// Dominant oscillation frequency of |d(t)|² from the mean spacing of its
/// envelope maxima: Ω = 2π/Δt. `None` when the trace does not beat.
pub fn beat_frequency<T: Real>(series: &[(T, T)]) -> Result<Option<T>> {
    let env = envelope(series)?;
    if !env.oscillatory {
        return Ok(None);
    }
    Ok(beat_from_envelope(&env))
}

fn beat_from_envelope<T: Real>(env: &EnvelopePoints<T>) -> Option<T> {
    if !env.oscillatory || env.points.len() < 2 {
        return None;
    }
    let first = env.points[0].0;
    let last = env.points[env.points.len() - 1].0;
    let spacing = (last - first) / real::<T>((env.points.len() - 1) as f64);
    Some(real::<T>(2.0) * T::PI() / spacing)
}

/// Options for the trace-fitting pipeline.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions<T: Real> {
    /// Restrict the envelope to this window before fitting.
    pub window: Option<(T, T)>,
    /// Prominence guard for maxima detection.
    pub prominence_ratio: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            window: None,
            prominence_ratio: real::<T>(DEFAULT_PROMINENCE_RATIO),
        }
    }
}

/// Envelope + fit + beat measurement of one trace (t, |d|²).
pub fn fit_trace<T: Real>(series: &[(T, T)], opts: &FitOptions<T>) -> Result<DecayFitReport<T>> {
    let env = envelope_with_prominence(series, opts.prominence_ratio)?;
    let mut pts: Vec<(T, T)> = match opts.window {
        Some((lo, hi)) => env
            .points
            .iter()
            .copied()
            .filter(|&(t, _)| t >= lo && t <= hi)
            .collect(),
        None => env.points.clone(),
    };
    // the first trace sample is the intercept point of the two-fit spread
    let anchor = series[0];
    if opts.window.is_none_or(|(lo, _)| anchor.0 >= lo || lo <= T::zero()) {
        pts.insert(0, anchor);
    }
    let mut report = fit_decay(&pts)?;
    report.beat_frequency = beat_from_envelope(&env);
    Ok(report)
}

/// Full pipeline for one ramp state: build the matrix, project onto the
/// eigenmodes, evolve on the default fluorescence grid, and fit. The
/// report carries the dominant-pair weighting alongside the decay fit.
pub fn fit_dm_state<T>(
    geom: &crate::geometry::ChainGeometry<T>,
    m: usize,
    opts: &FitOptions<T>,
) -> Result<DecayFitReport<T>>
where
    T: Real + Lapack + Scalar<Real = T, Complex = Complex<T>>,
    Complex<T>: Lapack + Scalar<Real = T, Complex = Complex<T>>,
{
    let matrix = build_coupling_matrix(geom)?;
    let decomp = diagonalize(&matrix)?;
    let phi = AmplitudeVector::dm_state(geom, m)?;
    let table = weightings(&decomp, &phi, m)?;
    let gamma_dom = -real::<T>(2.0) * decomp.eigenvalues()[table.dominant_mode()].re;
    let times = crate::spectral::default_grid(gamma_dom).to_vec();
    let traj = evolve_projection(&decomp, &phi, &times)?;
    let series: Vec<(T, T)> = times
        .iter()
        .zip(traj.iter())
        .map(|(&t, z)| (t, z.norm_sqr()))
        .collect();
    let mut report = fit_trace(&series, opts)?;
    report.dominant_weighting = table
        .top_pair()
        .map(|(a, b)| table.subset_mass(&[a, b]));
    Ok(report)
}

/// One row of a lowest-decay scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow<T> {
    pub n_atoms: usize,
    pub spacing: T,
    pub m_star: usize,
    pub gamma_f: T,
    pub spread: T,
}

/// For every (N, d_s) pair, fit all N ramp states and keep the one with
/// the lowest positive decay constant. Each state is evolved on a window
/// long enough to resolve its dominant mode, t_max = max(50, 5/γ_dom).
pub fn scan_lowest_decay<T>(n_list: &[usize], spacing_list: &[T]) -> Result<Vec<ScanRow<T>>>
where
    T: Real + Lapack + Scalar<Real = T, Complex = Complex<T>>,
    Complex<T>: Lapack + Scalar<Real = T, Complex = Complex<T>>,
{
    if n_list.is_empty() || spacing_list.is_empty() {
        return Err(Error::domain("scan lists must be non-empty"));
    }
    let cases: Vec<(usize, T)> = n_list
        .iter()
        .flat_map(|&n| spacing_list.iter().map(move |&ds| (n, ds)))
        .collect();
    let rows: Result<Vec<ScanRow<T>>> = cases
        .into_par_iter()
        .map(|(n, ds)| scan_case(n, ds))
        .collect();
    let mut rows = rows?;
    rows.sort_by(|a, b| {
        (a.n_atoms, a.spacing)
            .partial_cmp(&(b.n_atoms, b.spacing))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(rows)
}

fn scan_case<T>(n: usize, spacing: T) -> Result<ScanRow<T>>
where
    T: Real + Lapack + Scalar<Real = T, Complex = Complex<T>>,
    Complex<T>: Lapack + Scalar<Real = T, Complex = Complex<T>>,
{
    let geom = crate::geometry::ChainGeometry::new(n, spacing, T::zero(), true)?;
    let matrix = build_coupling_matrix(&geom)?;
    let decomp = diagonalize(&matrix)?;
    let mut best: Option<ScanRow<T>> = None;
    for m in 1..=n {
        let phi = AmplitudeVector::dm_state(&geom, m)?;
        let table = weightings(&decomp, &phi, m)?;
        let gamma_dom = -real::<T>(2.0) * decomp.eigenvalues()[table.dominant_mode()].re;
        let times = scan_grid(gamma_dom).to_vec();
        let traj = evolve_projection(&decomp, &phi, &times)?;
        let series: Vec<(T, T)> = times
            .iter()
            .zip(traj.iter())
            .map(|(&t, z)| (t, z.norm_sqr()))
            .collect();
        if series.iter().any(|&(_, y)| y.is_nan() || y <= T::zero()) {
            continue;
        }
        let report = match fit_trace(&series, &FitOptions::default()) {
            Ok(r) => r,
            Err(_) => continue,
        };
        if report.gamma_f.is_nan() || report.gamma_f <= T::zero() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => report.gamma_f < b.gamma_f,
        };
        if better {
            best = Some(ScanRow {
                n_atoms: n,
                spacing,
                m_star: m,
                gamma_f: report.gamma_f,
                spread: report.spread,
            });
        }
    }
    best.ok_or_else(|| {
        Error::domain(format!(
            "no state produced a valid decay fit for N={n}, d_s={spacing}"
        ))
    })
}
