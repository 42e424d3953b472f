//! Szegedy quantization of a column-stochastic matrix.
//!
//! The walk lives on the edge space `C^n ⊗ C^n`; basis vector `|j⟩₁|k⟩₂` sits
//! at index `j * n + k`. With `|ψ_j⟩ = |j⟩₁ ⊗ Σ_k √G(k,j) |k⟩₂`, the projector
//! `Π = Σ_j |ψ_j⟩⟨ψ_j|` and the swap `S|j,k⟩ = |k,j⟩`, one step of the walk is
//! `U = S (2Π - 1)`.
//!
//! Two-step evolution `U²` only acts nontrivially on
//! `H_dyn = span{ψ_j, Sψ_j}`, which has dimension at most `2n`. The
//! [`WalkSpectrum`] builds an orthonormal basis of that subspace, restricts
//! `U²` to it and diagonalizes the restriction, so that evolving a state for
//! `m` double steps costs one pass over the eigenphases. The symmetric matrix
//! `D(i,j) = √(G(i,j) G(j,i))` fixes the spectrum: every eigenphase of `U²`
//! on `H_dyn` is `exp(±2i·arccos λ)` for an eigenvalue `λ` of `D`, or `1`.
//!
//! [`dense_walk_operator`] builds `U` explicitly and is only meant as a
//! brute-force cross-check for small graphs.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::classical::StochasticMatrix;
use crate::error::{domain, Error, Result};
use crate::unitary::unitary_eigen;

pub type C64 = Complex<f64>;

/// Vectors whose residual falls below this are dropped while building the
/// dynamical basis.
pub const RANK_TOL: f64 = 1e-10;
/// Largest tolerated `‖U² B - B (B† U² B)‖` for the dynamical basis `B`.
pub const CLOSURE_TOL: f64 = 1e-10;
/// States farther than this from `H_dyn` are rejected by [`evolve`].
pub const DYN_MEMBERSHIP_TOL: f64 = 1e-8;
/// Default node cap for [`dense_walk_operator`]; the matrix has `n⁴` entries.
pub const DEFAULT_DENSE_CAP: usize = 64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Index of the edge basis vector `|j⟩₁|k⟩₂`.
#[inline]
pub fn edge_index(n: usize, j: usize, k: usize) -> usize {
    j * n + k
}

/// Complex amplitudes over the `n²` directed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState {
    n: usize,
    amplitudes: DVector<C64>,
}

impl EdgeState {
    pub fn new(n: usize, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != n * n {
            return Err(domain(format!(
                "edge state for n = {n} needs {} amplitudes, got {}",
                n * n,
                amplitudes.len()
            )));
        }
        Ok(Self { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, j: usize, k: usize) -> C64 {
        self.amplitudes[edge_index(self.n, j, k)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Probability of finding the walker on an edge that points into each
    /// node: `Σ_j |⟨j, i|state⟩|²`.
    pub fn second_factor_weights(&self) -> Vec<f64> {
        second_factor_weights(self.n, &self.amplitudes)
    }

    pub fn inner(&self, other: &EdgeState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

pub(crate) fn second_factor_weights(n: usize, amps: &DVector<C64>) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for j in 0..n {
        for (k, wk) in w.iter_mut().enumerate() {
            *wk += amps[edge_index(n, j, k)].norm_sqr();
        }
    }
    w
}

fn require_stochastic(g: &StochasticMatrix) -> Result<()> {
    if g.is_substochastic() {
        Err(domain(
            "the walk needs a column-stochastic matrix; patch dangling columns first",
        ))
    } else {
        Ok(())
    }
}

/// `√G(k, j)` laid out like `G`.
fn sqrt_weights(g: &StochasticMatrix) -> DMatrix<f64> {
    g.matrix().map(f64::sqrt)
}

/// The isometry `A = Σ_j |ψ_j⟩⟨j|` as an `n² × n` matrix; column `j` is `ψ_j`.
pub fn a_operator(g: &StochasticMatrix) -> Result<DMatrix<C64>> {
    require_stochastic(g)?;
    let n = g.n();
    let sq = sqrt_weights(g);
    let mut a = DMatrix::from_element(n * n, n, ZERO);
    for j in 0..n {
        for k in 0..n {
            a[(edge_index(n, j, k), j)] = C64::new(sq[(k, j)], 0.0);
        }
    }
    Ok(a)
}

/// The `n` orthonormal vectors `|ψ_j⟩`.
pub fn psi_vectors(g: &StochasticMatrix) -> Result<Vec<EdgeState>> {
    let n = g.n();
    let a = a_operator(g)?;
    a.column_iter()
        .map(|col| EdgeState::new(n, col.into_owned()))
        .collect()
}

/// `D(i, j) = √(G(i, j) G(j, i))`.
pub fn build_d_matrix(g: &StochasticMatrix) -> Result<DMatrix<f64>> {
    require_stochastic(g)?;
    let n = g.n();
    let m = g.matrix();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        (m[(i, j)] * m[(j, i)]).sqrt()
    }))
}

/// Dense swap `S = Σ |j,k⟩⟨k,j|`.
pub fn swap_operator(n: usize) -> DMatrix<C64> {
    let mut s = DMatrix::from_element(n * n, n * n, ZERO);
    for j in 0..n {
        for k in 0..n {
            s[(edge_index(n, j, k), edge_index(n, k, j))] = ONE;
        }
    }
    s
}

/// Dense projector `Π = A A†`.
pub fn projector(g: &StochasticMatrix) -> Result<DMatrix<C64>> {
    let a = a_operator(g)?;
    Ok(&a * a.adjoint())
}

/// Dense walk operator `U = S (2Π - 1)` with the default node cap.
pub fn dense_walk_operator(g: &StochasticMatrix) -> Result<DMatrix<C64>> {
    dense_walk_operator_with_cap(g, DEFAULT_DENSE_CAP)
}

pub fn dense_walk_operator_with_cap(g: &StochasticMatrix, cap: usize) -> Result<DMatrix<C64>> {
    let n = g.n();
    if n > cap {
        return Err(Error::Resource {
            what: "dense oracle node count",
            requested: n,
            cap,
        });
    }
    let pi = projector(g)?;
    let reflection = pi * C64::new(2.0, 0.0) - DMatrix::identity(n * n, n * n);
    Ok(swap_operator(n) * reflection)
}

/// Matrix-free application of the walk, `O(n²)` per vector.
#[derive(Debug, Clone)]
struct WalkAction {
    n: usize,
    sqrt_g: DMatrix<f64>,
}

impl WalkAction {
    fn swap(&self, v: &DVector<C64>) -> DVector<C64> {
        let n = self.n;
        DVector::from_fn(n * n, |idx, _| {
            let (j, k) = (idx / n, idx % n);
            v[edge_index(n, k, j)]
        })
    }

    /// `(2Π - 1) v`.
    fn reflect(&self, v: &DVector<C64>) -> DVector<C64> {
        let n = self.n;
        let mut out = -v;
        for j in 0..n {
            let mut c = ZERO;
            for k in 0..n {
                c += v[edge_index(n, j, k)] * self.sqrt_g[(k, j)];
            }
            for k in 0..n {
                out[edge_index(n, j, k)] += c * (2.0 * self.sqrt_g[(k, j)]);
            }
        }
        out
    }

    fn step(&self, v: &DVector<C64>) -> DVector<C64> {
        self.swap(&self.reflect(v))
    }

    fn double_step(&self, v: &DVector<C64>) -> DVector<C64> {
        self.step(&self.step(v))
    }
}

/// Orthonormal basis of the span of `candidates`, built by Gram-Schmidt with
/// column pivoting on the largest remaining residual and a second
/// orthogonalization pass. Residuals below `tol` are treated as dependent.
fn orthonormal_span(mut residuals: Vec<DVector<C64>>, tol: f64) -> Vec<DVector<C64>> {
    let mut basis: Vec<DVector<C64>> = Vec::new();
    while !residuals.is_empty() {
        let (pivot, largest) = residuals
            .iter()
            .map(|r| r.norm())
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if largest < tol {
            break;
        }
        let mut q = residuals.swap_remove(pivot);
        for b in &basis {
            let c = b.dotc(&q);
            q.axpy(-c, b, ONE);
        }
        let norm = q.norm();
        if norm < tol {
            continue;
        }
        q.unscale_mut(norm);
        for r in residuals.iter_mut() {
            let c = q.dotc(r);
            r.axpy(-c, &q, ONE);
        }
        basis.push(q);
    }
    basis
}

/// Spectral data of the quantized walk for one stochastic matrix.
#[derive(Debug, Clone)]
pub struct WalkSpectrum {
    n: usize,
    d_eigenvalues: Vec<f64>,
    d_eigenvectors: DMatrix<f64>,
    psi: DMatrix<C64>,
    dyn_basis: DMatrix<C64>,
    u2_restricted: DMatrix<C64>,
    u2_eigenphases: Vec<C64>,
    u2_eigenvectors: DMatrix<C64>,
    closure_residual: f64,
}

/// JSON-friendly summary of a [`WalkSpectrum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDump {
    pub lambda: Vec<f64>,
    pub eigenphases: Vec<ComplexValue>,
    pub dyn_dimension: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexValue {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Builds the spectrum of the quantized walk:
///
/// 1. eigen-solve `D`, clamping eigenvalues into `[-1, 1]`;
/// 2. orthonormalize `{ψ_j} ∪ {Sψ_j}` into the dynamical basis `B`;
/// 3. restrict `U² = (2SΠS - 1)(2Π - 1)` to `B`, checking that `B` is closed;
/// 4. diagonalize the (unitary) restriction.
pub fn build_walk_spectrum(g: &StochasticMatrix) -> Result<WalkSpectrum> {
    require_stochastic(g)?;
    let n = g.n();

    let d = build_d_matrix(g)?;
    let eig = SymmetricEigen::new(d);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let d_eigenvalues: Vec<f64> = order
        .iter()
        .map(|&k| eig.eigenvalues[k].clamp(-1.0, 1.0))
        .collect();
    let d_eigenvectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);

    let action = WalkAction {
        n,
        sqrt_g: sqrt_weights(g),
    };
    let psi = a_operator(g)?;
    let mut candidates: Vec<DVector<C64>> = psi.column_iter().map(|c| c.into_owned()).collect();
    let swapped: Vec<DVector<C64>> = candidates.iter().map(|v| action.swap(v)).collect();
    candidates.extend(swapped);
    let basis = orthonormal_span(candidates, RANK_TOL);
    let dyn_basis = DMatrix::from_columns(&basis);

    let images: Vec<DVector<C64>> = basis.iter().map(|b| action.double_step(b)).collect();
    let images = DMatrix::from_columns(&images);
    let u2_restricted = dyn_basis.adjoint() * &images;
    let leak = &images - &dyn_basis * &u2_restricted;
    let closure_residual = leak.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if closure_residual > CLOSURE_TOL {
        return Err(Error::Consistency(format!(
            "dynamical subspace is not invariant under U² (residual {closure_residual:e})"
        )));
    }

    let eig = unitary_eigen(&u2_restricted)?;
    let u2_eigenvectors = eig.eigenvectors;
    let u2_eigenphases = eig.eigenvalues;

    Ok(WalkSpectrum {
        n,
        d_eigenvalues,
        d_eigenvectors,
        psi,
        dyn_basis,
        u2_restricted,
        u2_eigenphases,
        u2_eigenvectors,
        closure_residual,
    })
}

impl WalkSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Eigenvalues of `D`, descending, clamped into `[-1, 1]`.
    pub fn d_eigenvalues(&self) -> &[f64] {
        &self.d_eigenvalues
    }

    /// Orthonormal eigenvectors of `D`, one per column, matching
    /// [`d_eigenvalues`](Self::d_eigenvalues).
    pub fn d_eigenvectors(&self) -> &DMatrix<f64> {
        &self.d_eigenvectors
    }

    /// The isometry `A`; column `j` is `ψ_j`.
    pub fn psi(&self) -> &DMatrix<C64> {
        &self.psi
    }

    /// Orthonormal basis of `H_dyn`, one vector per column.
    pub fn dyn_basis(&self) -> &DMatrix<C64> {
        &self.dyn_basis
    }

    pub fn dyn_dimension(&self) -> usize {
        self.dyn_basis.ncols()
    }

    /// `U²` in dynamical-basis coordinates.
    pub fn u2_restricted(&self) -> &DMatrix<C64> {
        &self.u2_restricted
    }

    pub fn u2_eigenphases(&self) -> &[C64] {
        &self.u2_eigenphases
    }

    /// Eigenvectors of [`u2_restricted`](Self::u2_restricted) in dynamical
    /// coordinates, one per column.
    pub fn u2_eigenvectors(&self) -> &DMatrix<C64> {
        &self.u2_eigenvectors
    }

    pub fn closure_residual(&self) -> f64 {
        self.closure_residual
    }

    /// Candidate eigenphases `exp(±2i·arccos λ)` of `U²` on `H_dyn`.
    pub fn predicted_u2_phases(&self) -> Vec<C64> {
        self.d_eigenvalues
            .iter()
            .flat_map(|&lambda| {
                let theta = 2.0 * lambda.acos();
                [C64::from_polar(1.0, theta), C64::from_polar(1.0, -theta)]
            })
            .collect()
    }

    /// Coordinates of `state` in the dynamical basis. Fails if the state has
    /// a component outside `H_dyn` larger than [`DYN_MEMBERSHIP_TOL`].
    pub fn to_dyn_coordinates(&self, state: &EdgeState) -> Result<DVector<C64>> {
        if state.n() != self.n {
            return Err(domain(format!(
                "state is for n = {}, spectrum for n = {}",
                state.n(),
                self.n
            )));
        }
        let coords = self.dyn_basis.adjoint() * state.amplitudes();
        let outside = (state.amplitudes() - &self.dyn_basis * &coords).norm();
        if outside > DYN_MEMBERSHIP_TOL {
            return Err(domain(format!(
                "state has a component of norm {outside:e} outside the dynamical subspace"
            )));
        }
        Ok(coords)
    }

    pub fn from_dyn_coordinates(&self, coords: &DVector<C64>) -> EdgeState {
        EdgeState {
            n: self.n,
            amplitudes: &self.dyn_basis * coords,
        }
    }

    /// Precomputes the eigenmode expansion of `state0` so that the state after
    /// any number of double steps is one weighted sum over modes.
    pub fn propagator(&self, state0: &EdgeState) -> Result<Propagator> {
        let coords = self.to_dyn_coordinates(state0)?;
        let weights = self.u2_eigenvectors.adjoint() * coords;
        let mut modes = &self.dyn_basis * &self.u2_eigenvectors;
        for (mut col, w) in modes.column_iter_mut().zip(weights.iter()) {
            col *= *w;
        }
        let angles = self.u2_eigenphases.iter().map(|mu| mu.arg()).collect();
        Ok(Propagator {
            n: self.n,
            modes,
            angles,
        })
    }

    pub fn dump(&self) -> SpectrumDump {
        SpectrumDump {
            lambda: self.d_eigenvalues.clone(),
            eigenphases: self.u2_eigenphases.iter().map(|&z| z.into()).collect(),
            dyn_dimension: self.dyn_dimension(),
        }
    }
}

/// Eigenmode expansion of one initial state; see [`WalkSpectrum::propagator`].
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    /// Column `k` is eigenvector `k` in edge space scaled by its overlap with
    /// the initial state.
    modes: DMatrix<C64>,
    angles: Vec<f64>,
}

impl Propagator {
    /// Edge amplitudes of `U^{2m} |state0⟩`.
    pub fn amplitudes_at(&self, m: u64) -> DVector<C64> {
        let powers = DVector::from_iterator(
            self.angles.len(),
            self.angles
                .iter()
                .map(|&theta| C64::from_polar(1.0, theta * m as f64)),
        );
        &self.modes * powers
    }

    pub fn state_at(&self, m: u64) -> EdgeState {
        EdgeState {
            n: self.n,
            amplitudes: self.amplitudes_at(m),
        }
    }

    /// Second-factor weights of the evolved state.
    pub fn weights_at(&self, m: u64) -> Vec<f64> {
        second_factor_weights(self.n, &self.amplitudes_at(m))
    }
}

/// `U^{2m} |state0⟩` evaluated from the eigenphases of the restricted `U²`.
pub fn evolve(spectrum: &WalkSpectrum, state0: &EdgeState, m: u64) -> Result<EdgeState> {
    if m == 0 {
        spectrum.to_dyn_coordinates(state0)?;
        return Ok(state0.clone());
    }
    Ok(spectrum.propagator(state0)?.state_at(m))
}

/// Builds the naive single-walker step `√p|i+1⟩⟨i| + √(1-p)|i-1⟩⟨i|` on a
/// five-site ring and reports whether it fails to be unitary
/// (`‖U†U - 1‖ > 1e-6`). It is unitary only at the deterministic ends
/// `p ∈ {0, 1}`, where it degenerates into a shift.
pub fn naive_step_is_nonunitary(p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("hopping probability {p} is outside [0, 1]")));
    }
    const SITES: usize = 5;
    let mut u = DMatrix::<f64>::zeros(SITES, SITES);
    for i in 0..SITES {
        u[((i + 1) % SITES, i)] += p.sqrt();
        u[((i + SITES - 1) % SITES, i)] += (1.0 - p).sqrt();
    }
    let gram = u.transpose() * &u;
    let defect = (gram - DMatrix::identity(SITES, SITES)).abs().max();
    Ok(defect > 1e-6)
}
