//! Property tests over randomized geometries, states, and matrices.

use coopchain_core::analysis::{beat_frequency, envelope, fit_decay};
use coopchain_core::interaction::{build_coupling_matrix, f_kernel, g_kernel};
use coopchain_core::ode::{propagate_linear, OdeOptions};
use coopchain_core::planner::apply_phase_error;
use coopchain_core::spectral::{diagonalize, evolve_site, population, weightings};
use coopchain_core::states::dm_state;
use coopchain_core::ChainGeometry;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64;
use proptest::prelude::*;

fn geometry_strategy() -> impl Strategy<Value = ChainGeometry<f64>> {
    (2usize..=12, 0.05f64..1.5, 0.0f64..=1.0, any::<bool>())
        .prop_map(|(n, ds, a, axial)| ChainGeometry::new(n, ds, a, axial).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_finite_and_f_bounded(xi in 0.0f64..200.0, a in 0.0f64..=1.0) {
        let f = f_kernel(xi, a).unwrap();
        prop_assert!(f.is_finite());
        // |F| ≤ F(0) = 1 away from the near zone
        if xi > 3.0 {
            prop_assert!(f.abs() <= 1.0);
        }
        if xi > 0.0 {
            prop_assert!(g_kernel(xi, a).unwrap().is_finite());
        }
    }

    #[test]
    fn coupling_matrix_symmetric_with_fixed_diagonal(geom in geometry_strategy()) {
        let m = build_coupling_matrix(&geom).unwrap();
        let e = m.entries();
        let n = geom.n_atoms();
        for i in 0..n {
            prop_assert_eq!(e[[i, i]], Complex64::new(-0.5, 0.0));
            for j in 0..i {
                prop_assert_eq!(e[[i, j]], e[[j, i]]);
            }
        }
    }

    #[test]
    fn dm_family_orthonormal(geom in geometry_strategy()) {
        let n = geom.n_atoms();
        for m in 1..=n {
            let a = dm_state(&geom, m).unwrap();
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
            for k in 1..=n {
                let b = dm_state(&geom, k).unwrap();
                let g = a.inner(&b).unwrap();
                let expect = if m == k { 1.0 } else { 0.0 };
                prop_assert!((g - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_ramp_preserves_norm_and_inverts(
        geom in geometry_strategy(),
        offset in -6.3f64..6.3,
    ) {
        let n = geom.n_atoms();
        let phi = dm_state(&geom, 1 + n / 2).unwrap();
        let ramped = apply_phase_error(&phi, offset);
        prop_assert!((ramped.norm() - 1.0).abs() < 1e-12);
        let back = apply_phase_error(&ramped, -offset);
        for (a, b) in phi.amps().iter().zip(back.amps().iter()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn population_never_increases(geom in geometry_strategy(), m_frac in 0.0f64..1.0) {
        let n = geom.n_atoms();
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let matrix = build_coupling_matrix(&geom).unwrap();
        let decomp = diagonalize(&matrix).unwrap();
        let c0 = dm_state(&geom, m).unwrap();
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.25).collect();
        let traj = evolve_site(&decomp, &c0, &times).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..times.len() {
            let p = population(traj.row(k));
            prop_assert!(p <= prev + 1e-9);
            prev = p;
        }
    }

    #[test]
    fn weightings_resolve_identity_for_random_states(geom in geometry_strategy()) {
        let matrix = build_coupling_matrix(&geom).unwrap();
        let decomp = diagonalize(&matrix).unwrap();
        for m in 1..=geom.n_atoms() {
            let phi = dm_state(&geom, m).unwrap();
            let table = weightings(&decomp, &phi, m).unwrap();
            let c = table.completeness();
            prop_assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-10);
            let total: f64 = table.normalized_weighting().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_random_exponential_rates(rate in 0.01f64..5.0) {
        let points: Vec<(f64, f64)> = (0..100)
            .map(|k| {
                let t = k as f64 * 0.2;
                (t, (-rate * t).exp())
            })
            .collect();
        let report = fit_decay(&points).unwrap();
        prop_assert!((report.gamma_f - rate).abs() / rate < 1e-10);
        prop_assert!(report.spread < 1e-10 * rate.max(1.0));
    }

    #[test]
    fn beat_matches_two_mode_splitting(
        im_a in 0.3f64..1.2,
        gap in 0.25f64..0.8,
        decay in 0.005f64..0.02,
    ) {
        // two equal modes: beat at the splitting of their shifts
        let la = Complex64::new(-decay, im_a);
        let lb = Complex64::new(-decay * 1.3, im_a - gap);
        // ≥ 10 observed beats
        let t_max = 11.0 * 2.0 * std::f64::consts::PI / gap;
        let points = 4001;
        let series: Vec<(f64, f64)> = (0..points)
            .map(|k| {
                let t = t_max * k as f64 / (points - 1) as f64;
                let d = ((la * t).exp() + (lb * t).exp()) / 2.0;
                (t, d.norm_sqr())
            })
            .collect();
        let beat = beat_frequency(&series).unwrap();
        prop_assert!(beat.is_some());
        let beat = beat.unwrap();
        prop_assert!((beat - gap).abs() / gap < 0.005, "beat {} vs {}", beat, gap);
    }
}

proptest! {
    // heavier cases: keep the count small
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ode_matches_spectral_for_random_dissipative_matrices(seed in 0u64..1000) {
        // complex-symmetric with damped diagonal, scaled to stay dissipative
        let n = 8;
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
        for i in 0..n {
            for j in 0..=i {
                let z = Complex64::new(0.2 * next(), 0.2 * next());
                a[[i, j]] = z;
                a[[j, i]] = z;
            }
            a[[i, i]] = Complex64::new(-0.3 - next().abs(), next());
        }
        let (vals, vecs) = a.eig().unwrap();
        let inv = vecs.inv().unwrap();
        let c0 = Array1::from_shape_fn(n, |_| Complex64::new(next(), next()));
        let norm = c0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let c0 = c0.mapv(|z| z / norm);
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.5).collect();
        let ode = propagate_linear(&a, &c0, &times, &OdeOptions::default()).unwrap();
        let w = inv.dot(&c0);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (kt, &t) in times.iter().enumerate() {
            for i in 0..n {
                let mut exact = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    exact += vecs[[i, k]] * (vals[k] * t).exp() * w[k];
                }
                worst = worst.max((ode[[kt, i]] - exact).norm());
                scale = scale.max(exact.norm());
            }
        }
        prop_assert!(worst / scale < 1e-8, "deviation {} on scale {}", worst, scale);
    }

    #[test]
    fn envelope_monotone_trace_returns_tail(rate in 0.05f64..2.0) {
        let series: Vec<(f64, f64)> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.3;
                (t, (-rate * t).exp())
            })
            .collect();
        let env = envelope(&series).unwrap();
        prop_assert!(!env.oscillatory);
        prop_assert_eq!(env.points.len(), series.len() - 1);
    }
}
