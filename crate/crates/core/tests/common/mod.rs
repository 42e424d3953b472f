//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix, DVector};
use qpagerank::classical::{google_matrix, StochasticMatrix};
use qpagerank::graph::{gen_random, Digraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

/// `count` seeded random digraphs with node counts in `n_range`.
pub fn random_digraphs(
    count: usize,
    n_range: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Vec<Digraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(n_range.clone());
            let p = rng.random_range(0.1..0.7);
            gen_random(n, p, rng.random()).unwrap()
        })
        .collect()
}

pub fn random_google(
    count: usize,
    n_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    alpha: f64,
) -> Vec<StochasticMatrix> {
    random_digraphs(count, n_range, seed)
        .iter()
        .map(|g| google_matrix(g, alpha).unwrap())
        .collect()
}

/// Dense column-stochastic matrix with random positive entries.
pub fn random_stochastic(n: usize, rng: &mut ChaCha8Rng) -> StochasticMatrix {
    let mut m = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..1.0f64));
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    StochasticMatrix::new(m).unwrap()
}

/// Projector onto span{ψ_j}, entry by entry from the matrix weights.
pub fn projector_from_weights(g: &StochasticMatrix) -> DMatrix<C64> {
    let n = g.n();
    let m = g.matrix();
    DMatrix::from_fn(n * n, n * n, |r, c| {
        let (j, k) = (r / n, r % n);
        let (jp, kp) = (c / n, c % n);
        if j == jp {
            C64::new((m[(k, j)] * m[(kp, j)]).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn dense_eigenvalues(m: &DMatrix<C64>) -> Vec<C64> {
    qpagerank::unitary::unitary_eigen(m).unwrap().eigenvalues
}

/// Removes from `pool` the entry nearest to `target`, if within `tol`.
pub fn take_nearest(pool: &mut Vec<C64>, target: C64, tol: f64) -> bool {
    let best = pool
        .iter()
        .enumerate()
        .map(|(i, z)| (i, (z - target).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((i, d)) if d <= tol => {
            pool.swap_remove(i);
            true
        }
        _ => false,
    }
}

/// Unit vector with random complex coordinates in the column span of `basis`.
pub fn random_state_in(basis: &DMatrix<C64>, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let coords = DVector::from_fn(basis.ncols(), |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let v = basis * coords;
    let norm = v.norm();
    v.unscale(norm)
}

pub fn second_factor_weights(n: usize, v: &DVector<C64>) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| v[j * n + i].norm_sqr()).sum())
        .collect()
}
