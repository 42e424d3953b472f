//! Quantum PageRank: instantaneous importances from the two-step Szegedy
//! walk, their temporal statistics, coarse graining, and comparison of the
//! resulting hierarchy with the classical one.
//!
//! `I_q(P_i, m)` is the weight of `U^{2m}|ψ(0)⟩` on edges pointing into node
//! `i`, starting from `|ψ(0)⟩ = n^{-1/2} Σ_j |ψ_j⟩`. It sums to one over `i` at
//! every step.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classical::{
    check_alpha, google_matrix, power_method, uniform_vector, StochasticMatrix, DEFAULT_ALPHA,
    DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::error::{domain, Error, Result};
use crate::export::sig17;
use crate::graph::{Digraph, DEFAULT_MAX_NODES};
use crate::szegedy::{self, build_walk_spectrum, EdgeState, WalkSpectrum, C64};

pub const DEFAULT_STEPS: usize = 2048;
pub const DEFAULT_SEGMENTS: usize = 64;
/// Half-run and full-run means must agree to this per node, else the series
/// carries a warning.
pub const STABILIZATION_TOL: f64 = 1e-3;
/// Values closer than this are ranked as ties and ordered by node id.
pub const ORDER_TIE_TOL: f64 = 1e-9;

/// Parameters of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub alpha: f64,
    pub steps: usize,
    pub segments: Option<usize>,
    pub tol: f64,
    pub max_iters: usize,
    pub max_nodes: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            steps: DEFAULT_STEPS,
            segments: Some(DEFAULT_SEGMENTS),
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            max_nodes: DEFAULT_MAX_NODES,
        }
    }
}

/// Time series of instantaneous quantum importances with its statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSeries {
    pub n: usize,
    pub m_steps: usize,
    pub alpha: f64,
    /// `values[m][i] = I_q(P_i, m)`.
    pub values: Vec<Vec<f64>>,
    /// Classical PageRank of the same Google matrix.
    pub classical: Vec<f64>,
    pub mean: Vec<f64>,
    /// `√(⟨I²⟩ - ⟨I⟩²)` per node.
    pub std: Vec<f64>,
    pub coarse: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
}

impl RankSeries {
    /// Assembles a series from raw values, computing mean, standard deviation
    /// and (if `segments` is given) coarse-grained means.
    pub fn from_values(
        values: Vec<Vec<f64>>,
        classical: Vec<f64>,
        alpha: f64,
        segments: Option<usize>,
    ) -> Result<Self> {
        let m_steps = values.len();
        if m_steps == 0 {
            return Err(domain("a series needs at least one step"));
        }
        let n = classical.len();
        if let Some(bad) = values.iter().position(|row| row.len() != n) {
            return Err(domain(format!(
                "step {bad} has {} values, expected {n}",
                values[bad].len()
            )));
        }
        let (mean, std) = streaming_mean_std(&values, n);
        let mut series = Self {
            n,
            m_steps,
            alpha,
            values,
            classical,
            mean,
            std,
            coarse: None,
            warnings: Vec::new(),
        };
        if let Some(l) = segments {
            series.coarse = Some(coarse_grain(&series, l)?);
        }
        Ok(series)
    }

    /// `⟨I²⟩ - ⟨I⟩²` per node.
    pub fn variance(&self) -> Vec<f64> {
        self.std.iter().map(|s| s * s).collect()
    }

    /// CSV with header `step,node_1,...,node_N`, one row per step.
    pub fn series_csv(&self) -> String {
        table_csv("step", self.n, &self.values)
    }

    /// CSV with header `segment,node_1,...,node_N`, if coarse means exist.
    pub fn coarse_csv(&self) -> Option<String> {
        self.coarse
            .as_ref()
            .map(|rows| table_csv("segment", self.n, rows))
    }
}

/// Welford accumulation of per-node mean and population standard deviation.
fn streaming_mean_std(values: &[Vec<f64>], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for (count, row) in values.iter().enumerate() {
        let count = (count + 1) as f64;
        for i in 0..n {
            let delta = row[i] - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (row[i] - mean[i]);
        }
    }
    let total = values.len() as f64;
    let std = m2.iter().map(|&s| (s / total).max(0.0).sqrt()).collect();
    (mean, std)
}

fn table_csv(first: &str, n: usize, rows: &[Vec<f64>]) -> String {
    let mut out = String::from(first);
    for i in 1..=n {
        let _ = write!(out, ",node_{i}");
    }
    out.push('\n');
    for (idx, row) in rows.iter().enumerate() {
        let _ = write!(out, "{idx}");
        for &x in row {
            let _ = write!(out, ",{}", sig17(x));
        }
        out.push('\n');
    }
    out
}

/// Reads back a table written by [`RankSeries::series_csv`] or
/// [`RankSeries::coarse_csv`].
pub fn parse_series_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty series file".into(),
    })?;
    let columns: Vec<&str> = header.split(',').collect();
    let n = columns.len().saturating_sub(1);
    let header_ok = n > 0
        && columns
            .iter()
            .skip(1)
            .enumerate()
            .all(|(i, c)| *c == format!("node_{}", i + 1));
    if !header_ok {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 1 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected {} fields, got {}", n + 1, fields.len()),
            });
        }
        let row = fields[1..]
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("{f:?} is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// `|ψ(0)⟩ = n^{-1/2} Σ_j |ψ_j⟩`.
pub fn initial_state(spectrum: &WalkSpectrum) -> EdgeState {
    let n = spectrum.n();
    let psi = spectrum.psi();
    let scale = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let amps: DVector<C64> = psi.column_sum() * scale;
    EdgeState::new(n, amps).expect("ψ columns have n² entries")
}

/// `I_q(P_i, m)` for every node `i`.
pub fn instantaneous_rank(spectrum: &WalkSpectrum, state0: &EdgeState, m: u64) -> Result<Vec<f64>> {
    Ok(szegedy::evolve(spectrum, state0, m)?.second_factor_weights())
}

/// Runs the full protocol on a digraph: Google matrix, spectrum of `D` and of
/// `U²` on the dynamical subspace, then `I_q` for `m = 0..steps` with its
/// statistics and the classical reference vector.
pub fn run_protocol(g: &Digraph, config: &ProtocolConfig) -> Result<RankSeries> {
    check_alpha(config.alpha)?;
    let n = g.node_count();
    if n > config.max_nodes {
        return Err(Error::Resource {
            what: "node count",
            requested: n,
            cap: config.max_nodes,
        });
    }
    let google = google_matrix(g, config.alpha)?;
    run_protocol_on_matrix(&google, config)
}

/// Same as [`run_protocol`] for an already-built stochastic matrix.
pub fn run_protocol_on_matrix(
    google: &StochasticMatrix,
    config: &ProtocolConfig,
) -> Result<RankSeries> {
    if config.steps == 0 {
        return Err(domain("the protocol needs at least one step"));
    }
    if let Some(l) = config.segments {
        check_segments(config.steps, l)?;
    }
    let n = google.n();
    let spectrum = build_walk_spectrum(google)?;
    let propagator = spectrum.propagator(&initial_state(&spectrum))?;
    let values: Vec<Vec<f64>> = (0..config.steps as u64)
        .map(|m| propagator.weights_at(m))
        .collect();

    let mut warnings = Vec::new();
    let report = power_method(google, &uniform_vector(n), config.tol, config.max_iters)?;
    if !report.converged {
        warnings.push(format!(
            "classical power method did not converge in {} iterations (residual {:e})",
            report.iterations, report.residual
        ));
    }

    let mut series = RankSeries::from_values(values, report.vector, config.alpha, config.segments)?;
    if let Some(drift) = stabilization_drift(&series) {
        if drift > STABILIZATION_TOL {
            series.warnings.push(format!(
                "temporal means have not stabilized: half-run and full-run means differ by {drift:e}"
            ));
        }
    }
    warnings.append(&mut series.warnings);
    series.warnings = warnings;
    Ok(series)
}

/// Largest per-node gap between the mean over the first half of the run and
/// the mean over the whole run. `None` for runs shorter than two steps.
pub fn stabilization_drift(series: &RankSeries) -> Option<f64> {
    let half = series.m_steps / 2;
    if half == 0 {
        return None;
    }
    (0..series.n)
        .map(|i| {
            let h: f64 = series.values[..half].iter().map(|r| r[i]).sum::<f64>() / half as f64;
            (h - series.mean[i]).abs()
        })
        .reduce(f64::max)
}

/// The same time series from explicit powers of the dense `U²`. Brute-force
/// reference for [`run_protocol_on_matrix`]; limited to `n <= cap`.
pub fn dense_series(google: &StochasticMatrix, steps: usize, cap: usize) -> Result<Vec<Vec<f64>>> {
    let u = szegedy::dense_walk_operator_with_cap(google, cap)?;
    let u2: DMatrix<C64> = &u * &u;
    let n = google.n();
    let psi = szegedy::a_operator(google)?;
    let mut state: DVector<C64> = psi.column_sum() * C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut rows = Vec::with_capacity(steps);
    for _ in 0..steps {
        rows.push(szegedy::second_factor_weights(n, &state));
        state = &u2 * state;
    }
    Ok(rows)
}

fn check_segments(steps: usize, segments: usize) -> Result<()> {
    if segments == 0 || !steps.is_multiple_of(segments) {
        return Err(domain(format!(
            "segment count {segments} must be positive and divide the step count {steps}"
        )));
    }
    Ok(())
}

/// Means over `segments` equal consecutive blocks of the series.
pub fn coarse_grain(series: &RankSeries, segments: usize) -> Result<Vec<Vec<f64>>> {
    check_segments(series.m_steps, segments)?;
    let width = series.m_steps / segments;
    Ok(series
        .values
        .chunks(width)
        .map(|block| {
            (0..series.n)
                .map(|i| block.iter().map(|r| r[i]).sum::<f64>() / width as f64)
                .collect()
        })
        .collect())
}

/// Node ids sorted by descending value. Values within [`ORDER_TIE_TOL`] of
/// their neighbour in the sorted list form a tie group ordered by id.
pub fn rank_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end - 1]] - values[order[end]] <= ORDER_TIE_TOL {
            end += 1;
        }
        order[start..end].sort_unstable();
        start = end;
    }
    order
}

/// Comparison of the quantum hierarchy against the classical one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub classical_order: Vec<usize>,
    pub quantum_order: Vec<usize>,
    /// The classical and mean-quantum top pages coincide.
    pub weak_preserving: bool,
    /// The full classical and mean-quantum orders coincide.
    pub strong_preserving: bool,
    /// Nodes tied for the highest classical PageRank.
    pub top_classical: Vec<usize>,
    /// Per node, the steps where `I_q` strictly exceeds the node's classical
    /// value.
    pub outperform_instants: Vec<Vec<usize>>,
    /// Per node, whether the mean quantum value exceeds the classical one.
    pub average_outperforming: Vec<bool>,
    /// Steps whose instantaneous order differs from the previous step's.
    pub crossings: usize,
}

impl HierarchyReport {
    /// Whether some classically top-ranked page is instantaneously
    /// outperforming.
    pub fn instantaneously_outperforming(&self) -> bool {
        self.top_classical
            .iter()
            .any(|&i| !self.outperform_instants[i].is_empty())
    }
}

pub fn analyze_hierarchy(series: &RankSeries) -> HierarchyReport {
    let classical_order = rank_order(&series.classical);
    let quantum_order = rank_order(&series.mean);
    let weak_preserving = classical_order.first() == quantum_order.first();
    let strong_preserving = classical_order == quantum_order;

    let best = series
        .classical
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let top_classical = (0..series.n)
        .filter(|&i| best - series.classical[i] <= ORDER_TIE_TOL)
        .collect();

    let outperform_instants = (0..series.n)
        .map(|i| {
            series
                .values
                .iter()
                .enumerate()
                .filter(|(_, row)| row[i] > series.classical[i])
                .map(|(m, _)| m)
                .collect()
        })
        .collect();
    let average_outperforming = series
        .mean
        .iter()
        .zip(&series.classical)
        .map(|(q, c)| q > c)
        .collect();

    let orders: Vec<Vec<usize>> = series.values.iter().map(|row| rank_order(row)).collect();
    let crossings = orders.windows(2).filter(|w| w[0] != w[1]).count();

    HierarchyReport {
        classical_order,
        quantum_order,
        weak_preserving,
        strong_preserving,
        top_classical,
        outperform_instants,
        average_outperforming,
        crossings,
    }
}

/// Rank orders as stored in the summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orders {
    pub classical: Vec<usize>,
    pub quantum: Vec<usize>,
}

/// Hierarchy flags as stored in the summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub weak_preserving: bool,
    pub strong_preserving: bool,
    pub top_classical: Vec<usize>,
    pub outperform_instant_counts: Vec<usize>,
    pub average_outperforming: Vec<bool>,
    pub crossings: usize,
}

/// Summary export of one run. Node ids in `orders` and `flags` are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary<C> {
    pub config: C,
    pub n: usize,
    pub steps: usize,
    pub alpha: f64,
    pub classical: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub variance: Vec<f64>,
    pub coarse: Option<Vec<Vec<f64>>>,
    pub orders: Orders,
    pub flags: Flags,
    pub warnings: Vec<String>,
}

impl<C> Summary<C> {
    pub fn new(config: C, series: &RankSeries, report: &HierarchyReport) -> Self {
        let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
        Self {
            config,
            n: series.n,
            steps: series.m_steps,
            alpha: series.alpha,
            classical: series.classical.clone(),
            mean: series.mean.clone(),
            std: series.std.clone(),
            variance: series.variance(),
            coarse: series.coarse.clone(),
            orders: Orders {
                classical: one_based(&report.classical_order),
                quantum: one_based(&report.quantum_order),
            },
            flags: Flags {
                weak_preserving: report.weak_preserving,
                strong_preserving: report.strong_preserving,
                top_classical: one_based(&report.top_classical),
                outperform_instant_counts: report
                    .outperform_instants
                    .iter()
                    .map(Vec::len)
                    .collect(),
                average_outperforming: report.average_outperforming.clone(),
                crossings: report.crossings,
            },
            warnings: series.warnings.clone(),
        }
    }
}
