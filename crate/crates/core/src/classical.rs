//! Classical PageRank: hyperlink, patched and Google matrices, the power
//! method, and the spectral diagnostics used to check it.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::export;
use crate::graph::Digraph;

pub const DEFAULT_ALPHA: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Column sums must equal one within this tolerance.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

/// Dense square matrix with nonnegative entries where entry `(i, j)` is the
/// weight of the move `j -> i`.
///
/// Columns sum to one unless the matrix is flagged `substochastic`, which only
/// happens for raw hyperlink matrices with dangling columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    matrix: DMatrix<f64>,
    substochastic: bool,
}

impl StochasticMatrix {
    /// Validates a column-stochastic matrix.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let m = Self::new_substochastic(matrix)?;
        if m.substochastic {
            return Err(domain("matrix has a column that does not sum to 1"));
        }
        Ok(m)
    }

    /// Validates a nonnegative matrix whose column sums are at most one, and
    /// flags it `substochastic` if any column falls short.
    pub fn new_substochastic(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(domain(format!(
                "expected a nonempty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(domain("matrix has a negative or non-finite entry"));
        }
        let mut substochastic = false;
        for (j, col) in matrix.column_iter().enumerate() {
            let sum = col.sum();
            if sum > 1.0 + COLUMN_SUM_TOL {
                return Err(domain(format!("column {} sums to {sum} > 1", j + 1)));
            }
            if (sum - 1.0).abs() > COLUMN_SUM_TOL {
                substochastic = true;
            }
        }
        Ok(Self {
            matrix,
            substochastic,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn is_substochastic(&self) -> bool {
        self.substochastic
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Row per line, comma-separated, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .matrix
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        export::rows_to_csv(rows.iter().map(Vec::as_slice))
    }
}

/// Outcome of [`power_method`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMethodReport {
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// L1 distance between the last two iterates.
    pub residual: f64,
}

/// A periodic orbit of the power iteration. `phases[k]` is followed by
/// `phases[(k + 1) % period]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    pub period: usize,
    pub phases: Vec<Vec<f64>>,
    /// Iterations run before the orbit closed.
    pub iterations: usize,
}

/// Hyperlink matrix: column `j` holds `1/outdeg(j)` on each out-neighbour.
/// Dangling columns stay zero.
pub fn build_hyperlink(g: &Digraph) -> StochasticMatrix {
    let n = g.node_count();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let targets = g.out_edges(j);
        let w = 1.0 / targets.len() as f64;
        for &i in targets {
            h[(i, j)] = w;
        }
    }
    StochasticMatrix {
        matrix: h,
        substochastic: !g.dangling_nodes().is_empty(),
    }
}

/// Replaces every all-zero column with the uniform column `1/n`.
pub fn build_patched(h: &StochasticMatrix) -> StochasticMatrix {
    let n = h.n();
    let mut e = h.matrix.clone();
    for mut col in e.column_iter_mut() {
        if col.iter().all(|&x| x == 0.0) {
            col.fill(1.0 / n as f64);
        }
    }
    StochasticMatrix {
        matrix: e,
        substochastic: false,
    }
}

/// Google matrix `alpha * E + (1 - alpha)/n`.
pub fn build_google(e: &StochasticMatrix, alpha: f64) -> Result<StochasticMatrix> {
    check_alpha(alpha)?;
    if e.substochastic {
        return Err(domain(
            "the Google matrix needs a stochastic input; patch dangling columns first",
        ));
    }
    let teleport = (1.0 - alpha) / e.n() as f64;
    let g = e.matrix.map(|x| alpha * x + teleport);
    Ok(StochasticMatrix {
        matrix: g,
        substochastic: false,
    })
}

/// Hyperlink, patch and damp in one go.
pub fn google_matrix(g: &Digraph, alpha: f64) -> Result<StochasticMatrix> {
    build_google(&build_patched(&build_hyperlink(g)), alpha)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(domain(format!("alpha = {alpha} is outside [0, 1]")))
    }
}

pub fn uniform_vector(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_probability_vector(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(domain(format!(
            "start vector has length {}, expected {n}",
            v.len()
        )));
    }
    if v.iter().any(|&x| x < 0.0 || x.is_nan()) {
        return Err(domain("start vector has a negative entry"));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(domain(format!("start vector sums to {sum}, expected 1")));
    }
    Ok(())
}

fn l1_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// Iterates `I <- M I` until the L1 change drops below `tol` or `max_iters`
/// is reached. No renormalization: a substochastic `M` is allowed to leak
/// mass, which is how the all-zero vector of an unpatched web shows up.
pub fn power_method(
    m: &StochasticMatrix,
    i0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<PowerMethodReport> {
    check_probability_vector(i0, m.n())?;
    let mut current = DVector::from_column_slice(i0);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let next = &m.matrix * &current;
        residual = l1_distance(&next, &current);
        current = next;
        iterations += 1;
        if residual < tol || residual == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(PowerMethodReport {
        vector: current.iter().copied().collect(),
        iterations,
        converged,
        residual,
    })
}

/// Runs the power iteration and reports the periodic orbit it settles into,
/// if one of period at most `max_period` closes to within `tol` (L1) before
/// `max_iters`. A fixed point is a cycle of period 1.
pub fn limit_cycle(
    m: &StochasticMatrix,
    i0: &[f64],
    max_period: usize,
    tol: f64,
    max_iters: usize,
) -> Result<Option<LimitCycle>> {
    check_probability_vector(i0, m.n())?;
    if max_period == 0 {
        return Err(domain("max_period must be at least 1"));
    }
    let mut history: Vec<DVector<f64>> = vec![DVector::from_column_slice(i0)];
    for iterations in 1..=max_iters {
        let next = &m.matrix * history.last().expect("history is never empty");
        history.push(next);
        if history.len() > max_period + 1 {
            history.remove(0);
        }
        let last = history.len() - 1;
        for period in 1..=max_period.min(last) {
            if l1_distance(&history[last], &history[last - period]) < tol {
                let phases = history[last - period + 1..=last]
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect();
                return Ok(Some(LimitCycle {
                    period,
                    phases,
                    iterations,
                }));
            }
        }
    }
    Ok(None)
}

/// Singular values of `M - 1` below this count toward the eigenvalue-1
/// eigenspace.
const NULLSPACE_TOL: f64 = 1e-9;

/// Stationary vector from the null space of `M - 1`, normalized to unit L1
/// mass. Independent of [`power_method`], so it also settles cases where the
/// iteration cycles.
pub fn stationary_solve(m: &StochasticMatrix) -> Result<Vec<f64>> {
    if m.substochastic {
        return Err(domain("stationary_solve needs a column-stochastic matrix"));
    }
    let n = m.n();
    let shifted = &m.matrix - DMatrix::<f64>::identity(n, n);
    let svd = shifted.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Consistency("SVD did not produce V^T".into()))?;
    let null: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < NULLSPACE_TOL)
        .map(|(k, _)| k)
        .collect();
    if null.len() != 1 {
        if null.is_empty() {
            return Err(Error::Consistency(
                "stochastic matrix shows no eigenvalue 1".into(),
            ));
        }
        return Err(Error::Ambiguous {
            dimension: null.len(),
        });
    }
    let row = v_t.row(null[0]);
    let sum: f64 = row.iter().sum();
    if sum.abs() < 1e-300 {
        return Err(Error::Consistency("null vector has zero mass".into()));
    }
    let v: Vec<f64> = row
        .iter()
        .map(|&x| {
            let y = x / sum;
            if y < 0.0 && y > -1e-12 {
                0.0
            } else {
                y
            }
        })
        .collect();
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::Consistency(
            "stationary vector has negative entries".into(),
        ));
    }
    Ok(v)
}

/// All eigenvalues of the matrix, in no particular order.
pub fn eigenvalues(m: &StochasticMatrix) -> Result<Vec<Complex<f64>>> {
    let n = m.n();
    let dense = faer::Mat::<f64>::from_fn(n, n, |i, j| m.matrix[(i, j)]);
    let values = dense
        .eigenvalues()
        .map_err(|e| Error::Consistency(format!("eigenvalue solver failed: {e:?}")))?;
    Ok(values.iter().map(|z| Complex::new(z.re, z.im)).collect())
}

/// Modulus of the second-largest-modulus eigenvalue (0 for a 1x1 matrix).
pub fn second_eigenvalue_modulus(m: &StochasticMatrix) -> Result<f64> {
    let mut moduli: Vec<f64> = eigenvalues(m)?.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli.get(1).copied().unwrap_or(0.0))
}

/// Classical PageRank of `g`: power iteration on the Google matrix from the
/// uniform vector.
pub fn classical_pagerank(
    g: &Digraph,
    alpha: f64,
    tol: f64,
    max_iters: usize,
) -> Result<PowerMethodReport> {
    let google = google_matrix(g, alpha)?;
    power_method(&google, &uniform_vector(g.node_count()), tol, max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_binary_tree_up, gen_cycle, gen_dangling_pair, gen_reducible_example};

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            rows.len(),
            rows[0].len(),
            rows.iter().flat_map(|r| r.iter().copied()),
        )
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let diff = (a - b).abs().max();
        assert!(diff <= tol, "max diff {diff}\n{a}\n{b}");
    }

    #[test]
    fn hyperlink_of_dangling_pair() {
        let h = build_hyperlink(&gen_dangling_pair());
        assert!(h.is_substochastic());
        assert_close(h.matrix(), &mat(&[&[0.0, 0.0], &[1.0, 0.0]]), 0.0);
    }

    #[test]
    fn hyperlink_of_four_cycle_is_the_shift() {
        let h = build_hyperlink(&gen_cycle(4).unwrap());
        assert!(!h.is_substochastic());
        let expected = mat(&[
            &[0.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        assert_close(h.matrix(), &expected, 0.0);
    }

    #[test]
    fn hyperlink_of_lone_node() {
        let g = Digraph::new(1, vec![vec![]]).unwrap();
        let h = build_hyperlink(&g);
        assert_eq!(h.matrix()[(0, 0)], 0.0);
        assert!(h.is_substochastic());
    }

    #[test]
    fn patching() {
        let e = build_patched(&build_hyperlink(&gen_dangling_pair()));
        assert_close(e.matrix(), &mat(&[&[0.0, 0.5], &[1.0, 0.5]]), 0.0);

        let e = build_patched(&build_hyperlink(&gen_reducible_example()));
        let third = 1.0 / 3.0;
        let expected = mat(&[
            &[0.0, 0.5, 0.0, 0.0],
            &[third, 0.0, 0.0, 0.0],
            &[third, 0.0, 0.0, 1.0],
            &[third, 0.5, 1.0, 0.0],
        ]);
        assert_close(e.matrix(), &expected, 1e-15);
        for col in e.matrix().column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-15);
        }

        let already = build_hyperlink(&gen_cycle(3).unwrap());
        assert_eq!(build_patched(&already), already);
    }

    #[test]
    fn google_matrix_entries() {
        let one = StochasticMatrix::new(mat(&[&[1.0]])).unwrap();
        assert_close(
            build_google(&one, 0.85).unwrap().matrix(),
            &mat(&[&[1.0]]),
            1e-15,
        );

        let e = StochasticMatrix::new(mat(&[&[0.0, 0.5], &[1.0, 0.5]])).unwrap();
        let g = build_google(&e, 0.85).unwrap();
        assert_close(g.matrix(), &mat(&[&[0.075, 0.5], &[0.925, 0.5]]), 1e-15);

        let u = build_google(&e, 0.0).unwrap();
        assert_close(u.matrix(), &DMatrix::from_element(2, 2, 0.5), 0.0);

        assert!(build_google(&e, 1.2).is_err());
        assert!(build_google(&e, -0.1).is_err());
        assert!(build_google(&build_hyperlink(&gen_dangling_pair()), 0.85).is_err());
    }

    #[test]
    fn validation() {
        assert!(StochasticMatrix::new(mat(&[&[0.5, 0.5], &[0.5, 0.4]])).is_err());
        assert!(StochasticMatrix::new(mat(&[&[1.5, 0.5], &[-0.5, 0.5]])).is_err());
        assert!(StochasticMatrix::new_substochastic(mat(&[&[0.7, 0.0], &[0.6, 0.0]])).is_err());
        assert!(StochasticMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn power_method_leaks_to_zero_without_patch() {
        let h = build_hyperlink(&gen_dangling_pair());
        let r = power_method(&h, &[1.0, 0.0], DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!(r.converged);
        assert_eq!(r.vector, vec![0.0, 0.0]);
    }

    #[test]
    fn power_method_cycles_on_four_cycle() {
        let e = build_patched(&build_hyperlink(&gen_cycle(4).unwrap()));
        let r = power_method(&e, &[1.0, 0.0, 0.0, 0.0], DEFAULT_TOL, 1000).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1000);
        assert_eq!(r.residual, 2.0);
        let cyc = limit_cycle(&e, &[1.0, 0.0, 0.0, 0.0], 8, 1e-12, 100)
            .unwrap()
            .unwrap();
        assert_eq!(cyc.period, 4);
    }

    #[test]
    fn power_method_rejects_bad_start() {
        let e = build_patched(&build_hyperlink(&gen_cycle(2).unwrap()));
        assert!(power_method(&e, &[0.7, 0.7], 1e-12, 10).is_err());
        assert!(power_method(&e, &[1.5, -0.5], 1e-12, 10).is_err());
        assert!(power_method(&e, &[1.0], 1e-12, 10).is_err());
    }

    #[test]
    fn tree_classical_column() {
        let g = google_matrix(&gen_binary_tree_up(3).unwrap(), 0.85).unwrap();
        let r = power_method(&g, &uniform_vector(7), DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!(r.converged);
        let expected = [
            0.37291, 0.18012, 0.18012, 0.06671, 0.06671, 0.06671, 0.06671,
        ];
        for (got, want) in r.vector.iter().zip(expected) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
        let s = stationary_solve(&g).unwrap();
        for (a, b) in s.iter().zip(&r.vector) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn stationary_of_uniform_and_reducible() {
        let u = StochasticMatrix::new(DMatrix::from_element(3, 3, 1.0 / 3.0)).unwrap();
        for x in stationary_solve(&u).unwrap() {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
        let e = build_patched(&build_hyperlink(&gen_reducible_example()));
        let v = stationary_solve(&e).unwrap();
        for (got, want) in v.iter().zip([0.0, 0.0, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn stationary_is_ambiguous_for_two_closed_classes() {
        let g = Digraph::new(4, vec![vec![1], vec![0], vec![3], vec![2]]).unwrap();
        let e = build_patched(&build_hyperlink(&g));
        assert_eq!(stationary_solve(&e), Err(Error::Ambiguous { dimension: 2 }));
    }

    #[test]
    fn second_eigenvalues() {
        let e = build_patched(&build_hyperlink(&gen_cycle(4).unwrap()));
        assert!((second_eigenvalue_modulus(&e).unwrap() - 1.0).abs() < 1e-12);
        for z in eigenvalues(&e).unwrap() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        for n in 2..40 {
            let e = build_hyperlink(&gen_cycle(n).unwrap());
            assert!(
                (second_eigenvalue_modulus(&e).unwrap() - 1.0).abs() < 1e-10,
                "n = {n}"
            );
        }
        let u = StochasticMatrix::new(DMatrix::from_element(4, 4, 0.25)).unwrap();
        assert!(second_eigenvalue_modulus(&u).unwrap() < 1e-12);
        let one = StochasticMatrix::new(mat(&[&[1.0]])).unwrap();
        assert_eq!(second_eigenvalue_modulus(&one).unwrap(), 0.0);
    }

    #[test]
    fn csv_export() {
        let e = StochasticMatrix::new(mat(&[&[0.0, 0.5], &[1.0, 0.5]])).unwrap();
        assert_eq!(
            e.to_csv(),
            "0.0000000000000000e0,5.0000000000000000e-1\n1.0000000000000000e0,5.0000000000000000e-1\n"
        );
    }
}
