//! Eigendecomposition of unitary matrices.
//!
//! A unitary `V` is rotated to `W = e^{iφ} V` so that no eigenvalue of `W`
//! sits near `-1`, then mapped through the Cayley transform
//! `H = i (1 - W)(1 + W)^{-1}`. `H` is Hermitian with the same eigenvectors
//! as `V`, and an eigenvalue `h` of `H` corresponds to `w = (1 + ih)/(1 - ih)`.
//! The map is one-to-one on the circle minus `-1`, so distinct eigenvalues of
//! `V` stay distinct and the Hermitian solver never has to separate phases
//! that the transform has merged.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{domain, Error, Result};

type C64 = Complex<f64>;

/// Largest tolerated `|V Q - Q diag(μ)|` and `|Q†Q - 1|` entries.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
/// Largest tolerated `|V†V - 1|` entry for an input to be treated as unitary.
pub const UNITARITY_TOL: f64 = 1e-8;

/// Eigenvalues (unit modulus) and orthonormal eigenvectors of a unitary
/// matrix, one eigenvector per column.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: DMatrix<C64>,
}

fn max_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Smallest `|1 + w|` over the eigenvalues `w` of `e^{iφ} V`, from the
/// smallest eigenvalue of the Hermitian part `cos(ψ + φ)`.
fn distance_from_minus_one(v: &DMatrix<C64>, phi: f64) -> f64 {
    let w = v * C64::from_polar(1.0, phi);
    let hermitian_part = (&w + w.adjoint()) * C64::new(0.5, 0.0);
    let lowest = hermitian_part
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    (2.0 + 2.0 * lowest).max(0.0).sqrt()
}

/// Van der Corput angles in `[0, 2π)`: 0, π, π/2, 3π/2, π/4, ...
fn probe_angle(k: usize) -> f64 {
    let mut x = 0.0;
    let mut base = 0.5;
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            x += base;
        }
        base *= 0.5;
        k >>= 1;
    }
    2.0 * std::f64::consts::PI * x
}

/// Picks a rotation that keeps the spectrum of `e^{iφ} V` away from `-1`.
/// `d` eigenvalues always leave a gap of at least `2π/d`, so a clearance of
/// about `2/d` is reachable.
fn choose_rotation(v: &DMatrix<C64>) -> f64 {
    let d = v.nrows();
    let target = (2.0 / d as f64).min(0.5);
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..(4 * d + 8) {
        let phi = probe_angle(k);
        let clearance = distance_from_minus_one(v, phi);
        if clearance > best.1 {
            best = (phi, clearance);
        }
        if clearance >= target {
            break;
        }
    }
    best.0
}

/// Diagonalizes a unitary matrix.
pub fn unitary_eigen(v: &DMatrix<C64>) -> Result<UnitaryEigen> {
    if !v.is_square() {
        return Err(domain("expected a square matrix"));
    }
    let d = v.nrows();
    if d == 0 {
        return Ok(UnitaryEigen {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let identity = DMatrix::<C64>::identity(d, d);
    let defect = max_entry(&(v.adjoint() * v - &identity));
    if defect > UNITARITY_TOL {
        return Err(domain(format!(
            "matrix is not unitary (|V†V - 1| = {defect:e})"
        )));
    }

    let phi = choose_rotation(v);
    let w = v * C64::from_polar(1.0, phi);
    let inverse = (&identity + &w)
        .try_inverse()
        .ok_or_else(|| Error::Consistency("1 + e^{iφ}V is singular".into()))?;
    let h = (&identity - &w) * inverse * C64::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);

    let eig = SymmetricEigen::new(h);
    let rotate_back = C64::from_polar(1.0, -phi);
    let eigenvalues: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&t| {
            let w = C64::new(1.0, t) / C64::new(1.0, -t);
            let mu = w * rotate_back;
            mu / mu.norm()
        })
        .collect();
    let eigenvectors = eig.eigenvectors;

    let mut scaled = eigenvectors.clone();
    for (mut col, mu) in scaled.column_iter_mut().zip(&eigenvalues) {
        col *= *mu;
    }
    let residual = max_entry(&(v * &eigenvectors - scaled));
    let orthogonality = max_entry(&(eigenvectors.adjoint() * &eigenvectors - identity));
    if residual > EIGEN_RESIDUAL_TOL || orthogonality > EIGEN_RESIDUAL_TOL {
        return Err(Error::Consistency(format!(
            "unitary eigendecomposition inaccurate (residual {residual:e}, orthogonality {orthogonality:e})"
        )));
    }
    Ok(UnitaryEigen {
        eigenvalues,
        eigenvectors,
    })
}
