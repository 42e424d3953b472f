mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qpagerank::classical::{
    build_google, build_hyperlink, build_patched, google_matrix, power_method,
    second_eigenvalue_modulus, stationary_solve, DEFAULT_MAX_ITERS,
};
use qpagerank::graph::{gen_binary_tree_up, gen_random, parse_edge_list, Digraph};
use qpagerank::qrank::{
    dense_series, initial_state, instantaneous_rank, run_protocol, run_protocol_on_matrix,
    ProtocolConfig, RankSeries,
};
use qpagerank::szegedy::{
    a_operator, build_walk_spectrum, dense_walk_operator, evolve, swap_operator, EdgeState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn digraph() -> impl Strategy<Value = Digraph> {
    (1usize..=12, 0.0f64..=1.0, any::<u64>())
        .prop_map(|(n, p, seed)| gen_random(n, p, seed).unwrap())
}

fn small_stochastic(max_n: usize) -> impl Strategy<Value = qpagerank::classical::StochasticMatrix> {
    (1usize..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_stochastic(n, &mut rng)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn edge_list_round_trip(g in digraph()) {
        let canon = g.canonicalized();
        prop_assert_eq!(parse_edge_list(&canon.to_edge_list()).unwrap(), canon);
    }

    #[test]
    fn google_matrix_is_positive_and_stochastic(g in digraph(), alpha in 0.01f64..0.99) {
        let m = google_matrix(&g, alpha).unwrap();
        prop_assert!(m.matrix().iter().all(|&x| x > 0.0));
        for col in m.matrix().column_iter() {
            prop_assert!((col.sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn power_method_matches_stationary_solve(g in digraph(), alpha in 0.05f64..0.95, seed in any::<u64>()) {
        let m = google_matrix(&g, alpha).unwrap();
        let oracle = stationary_solve(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..3 {
            let mut start: Vec<f64> = (0..g.node_count()).map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = start.iter().sum();
            start.iter_mut().for_each(|x| *x /= total);
            let fix = (1.0 - start.iter().sum::<f64>()) / start.len() as f64;
            start.iter_mut().for_each(|x| *x += fix);
            let r = power_method(&m, &start, 1e-12, DEFAULT_MAX_ITERS).unwrap();
            prop_assert!(r.converged);
            prop_assert!((r.vector.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            for (a, b) in r.vector.iter().zip(&oracle) {
                prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn damping_bounds_second_eigenvalue(g in digraph(), alpha in 0.0f64..1.0) {
        let m = google_matrix(&g, alpha).unwrap();
        prop_assert!(second_eigenvalue_modulus(&m).unwrap() <= alpha + 1e-10);
    }

    #[test]
    fn a_operator_identities(g in small_stochastic(8)) {
        let n = g.n();
        let a = a_operator(&g).unwrap();
        let s = swap_operator(n);
        prop_assert!(max_abs(&(a.adjoint() * &a - DMatrix::identity(n, n))) <= 1e-10);
        prop_assert!(max_abs(&(&a * a.adjoint() - projector_from_weights(&g))) <= 1e-10);
        let d = qpagerank::szegedy::build_d_matrix(&g).unwrap().map(|x| C64::new(x, 0.0));
        prop_assert!(max_abs(&(a.adjoint() * s * &a - d)) <= 1e-10);
    }

    #[test]
    fn eigenphases_come_from_d(g in small_stochastic(7)) {
        let spectrum = build_walk_spectrum(&g).unwrap();
        prop_assert!(spectrum.dyn_dimension() <= 2 * g.n());
        let mut allowed = spectrum.predicted_u2_phases();
        allowed.push(C64::new(1.0, 0.0));
        for mu in spectrum.u2_eigenphases() {
            prop_assert!((mu.norm() - 1.0).abs() <= 1e-10);
            let nearest = allowed.iter().map(|z| (z - mu).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-8, "phase {} unmatched", mu);
        }
        let u = spectrum.u2_restricted();
        let id = DMatrix::<C64>::identity(u.nrows(), u.nrows());
        prop_assert!(max_abs(&(u.adjoint() * u - id)) <= 1e-10);
        let b = spectrum.dyn_basis();
        let id = DMatrix::<C64>::identity(b.ncols(), b.ncols());
        prop_assert!(max_abs(&(b.adjoint() * b - id)) <= 1e-10);
        let v = spectrum.d_eigenvectors();
        prop_assert!((v.transpose() * v - DMatrix::identity(g.n(), g.n())).abs().max() <= 1e-10);
    }

    #[test]
    fn trivial_sector_of_u_squared(g in small_stochastic(5)) {
        let n = g.n();
        let u = dense_walk_operator(&g).unwrap();
        let unit = dense_eigenvalues(&(&u * &u))
            .iter()
            .filter(|z| (*z - C64::new(1.0, 0.0)).norm() <= 1e-8)
            .count();
        prop_assert!(unit + 2 * n >= n * n);
    }

    #[test]
    fn ansatz_vectors_are_eigenvectors_of_u(g in small_stochastic(6)) {
        let n = g.n();
        let spectrum = build_walk_spectrum(&g).unwrap();
        let u = dense_walk_operator(&g).unwrap();
        let a = a_operator(&g).unwrap();
        let s = swap_operator(n);
        for (k, &lambda) in spectrum.d_eigenvalues().iter().enumerate() {
            if lambda.abs() >= 1.0 - 1e-6 {
                continue;
            }
            let col = spectrum.d_eigenvectors().column(k).map(|x| C64::new(x, 0.0));
            let tilde: DVector<C64> = &a * col;
            for sign in [1.0, -1.0] {
                let mu = C64::from_polar(1.0, sign * lambda.acos());
                let v: DVector<C64> = &tilde - &s * &tilde * mu;
                let gap = (&u * &v - &v * mu).norm() / v.norm();
                prop_assert!(gap <= 1e-10, "λ = {}, gap {}", lambda, gap);
            }
        }
    }

    #[test]
    fn evolve_matches_dense_powers(g in small_stochastic(5), seed in any::<u64>(), m in 0u64..40) {
        let n = g.n();
        let spectrum = build_walk_spectrum(&g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_state_in(spectrum.dyn_basis(), &mut rng);
        let state = EdgeState::new(n, v.clone()).unwrap();
        let u = dense_walk_operator(&g).unwrap();
        let u2 = &u * &u;
        let mut dense = v;
        for _ in 0..m {
            dense = &u2 * dense;
        }
        let spectral = evolve(&spectrum, &state, m).unwrap();
        prop_assert!((spectral.amplitudes() - dense).norm() <= 1e-8);
    }

    #[test]
    fn moments_match_two_pass(g in digraph(), steps in 1usize..200) {
        let config = ProtocolConfig { steps, segments: None, ..ProtocolConfig::default() };
        let s = run_protocol(&g, &config).unwrap();
        let total: f64 = s.mean.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
        for i in 0..s.n {
            let mean = s.values.iter().map(|r| r[i]).sum::<f64>() / steps as f64;
            let var = s.values.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / steps as f64;
            prop_assert!((mean - s.mean[i]).abs() <= 1e-12);
            prop_assert!((var.sqrt() - s.std[i]).abs() <= 1e-12 || (var - s.std[i].powi(2)).abs() <= 1e-14);
            prop_assert!(s.values.iter().all(|r| (0.0..=1.0 + 1e-12).contains(&r[i])));
        }
    }

    #[test]
    fn series_matches_dense_oracle(g in (1usize..=6, 0.0f64..=1.0, any::<u64>()).prop_map(|(n, p, s)| gen_random(n, p, s).unwrap())) {
        let google = google_matrix(&g, 0.85).unwrap();
        let config = ProtocolConfig { steps: 60, segments: None, ..ProtocolConfig::default() };
        let spectral = run_protocol_on_matrix(&google, &config).unwrap();
        let dense = dense_series(&google, 60, 64).unwrap();
        for (a, b) in spectral.values.iter().zip(&dense) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn norm_is_preserved_over_long_runs() {
    let g = google_matrix(&gen_binary_tree_up(3).unwrap(), 0.85).unwrap();
    let spectrum = build_walk_spectrum(&g).unwrap();
    let s0 = initial_state(&spectrum);
    let propagator = spectrum.propagator(&s0).unwrap();
    for m in (0..=10_000).step_by(97) {
        let state = propagator.state_at(m);
        assert!((state.norm() - 1.0).abs() <= 1e-10, "m = {m}");
    }
    assert!((evolve(&spectrum, &s0, 10_000).unwrap().norm() - 1.0).abs() <= 1e-10);
}

#[test]
fn initial_state_lies_in_dynamical_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 1..=8 {
        let g = random_stochastic(n, &mut rng);
        let spectrum = build_walk_spectrum(&g).unwrap();
        let s0 = initial_state(&spectrum);
        assert!((s0.norm() - 1.0).abs() <= 1e-12);
        let b = spectrum.dyn_basis();
        let residual = (s0.amplitudes() - b * (b.adjoint() * s0.amplitudes())).norm();
        assert!(residual <= 1e-12, "n = {n}: {residual:e}");
    }
}

#[test]
fn tree_levels_share_quantum_rank() {
    for levels in 2..=4u32 {
        let g = gen_binary_tree_up(levels).unwrap();
        let config = ProtocolConfig {
            steps: 256,
            segments: Some(16),
            ..ProtocolConfig::default()
        };
        let s = run_protocol(&g, &config).unwrap();
        for row in &s.values {
            for level in 0..levels {
                let first = (1usize << level) - 1;
                let last = (1usize << (level + 1)) - 1;
                for v in first..last {
                    assert!((row[v] - row[first]).abs() <= 1e-10);
                }
            }
        }
    }
}

#[test]
fn instantaneous_rank_sums_to_one_and_matches_series() {
    let g = gen_random(6, 0.4, 99).unwrap();
    let google = google_matrix(&g, 0.85).unwrap();
    let spectrum = build_walk_spectrum(&google).unwrap();
    let s0 = initial_state(&spectrum);
    let config = ProtocolConfig {
        steps: 32,
        segments: None,
        ..ProtocolConfig::default()
    };
    let series = run_protocol(&g, &config).unwrap();
    for m in [0u64, 1, 7, 31] {
        let r = instantaneous_rank(&spectrum, &s0, m).unwrap();
        assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        for (a, b) in r.iter().zip(&series.values[m as usize]) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn single_node_everything_is_one() {
    let g = Digraph::new(1, vec![vec![]]).unwrap();
    let google = google_matrix(&g, 0.85).unwrap();
    let spectrum = build_walk_spectrum(&google).unwrap();
    let s0 = initial_state(&spectrum);
    for m in [0u64, 1, 5, 1000] {
        assert_eq!(instantaneous_rank(&spectrum, &s0, m).unwrap().len(), 1);
        assert!((instantaneous_rank(&spectrum, &s0, m).unwrap()[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn google_from_alpha_zero_is_uniform() {
    let g = gen_random(5, 0.5, 3).unwrap();
    let e = build_patched(&build_hyperlink(&g));
    let u = build_google(&e, 0.0).unwrap();
    assert!(u.matrix().iter().all(|&x| (x - 0.2).abs() < 1e-16));
    let v = stationary_solve(&u).unwrap();
    assert!(v.iter().all(|&x| (x - 0.2).abs() < 1e-14));
}

#[test]
fn stationary_residual_is_tiny() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=12 {
        let m = random_stochastic(n, &mut rng);
        let v = stationary_solve(&m).unwrap();
        let mv = m.matrix() * DVector::from_column_slice(&v);
        let worst = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10);
        assert!(v.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn coarse_rows_match_definition() {
    let s = RankSeries::from_values(
        (0..12)
            .map(|m| vec![m as f64 / 12.0, 1.0 - m as f64 / 12.0])
            .collect(),
        vec![0.5, 0.5],
        0.85,
        Some(3),
    )
    .unwrap();
    let coarse = s.coarse.unwrap();
    for (seg, row) in coarse.iter().enumerate() {
        let want = (4 * seg..4 * seg + 4).map(|m| m as f64 / 12.0).sum::<f64>() / 4.0;
        assert!((row[0] - want).abs() < 1e-15);
    }
}
