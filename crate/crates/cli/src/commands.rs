use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use qpagerank::classical::{
    build_google, build_hyperlink, build_patched, limit_cycle, power_method,
    second_eigenvalue_modulus, uniform_vector, LimitCycle, StochasticMatrix,
};
use qpagerank::export::sig17;
use qpagerank::graph::{
    gen_binary_tree_up, gen_cycle, gen_dangling_pair, gen_random, gen_reducible_example,
    parse_edge_list_with_cap, strongly_connected, Digraph, DEFAULT_MAX_NODES,
};
use qpagerank::qrank::{
    analyze_hierarchy, dense_series, parse_series_csv, run_protocol_on_matrix, Flags, Orders,
    ProtocolConfig, RankSeries, Summary, DEFAULT_SEGMENTS,
};
use qpagerank::szegedy::{build_walk_spectrum, DEFAULT_DENSE_CAP};
use qpagerank::Error;
use serde::{Deserialize, Serialize};

use crate::{AnalyzeArgs, ClassicalArgs, GraphKind, MatrixKind, QuantumArgs};

const DENSE_CAP_VAR: &str = "QRANK_DENSE_CAP";
const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable input, malformed file or failed numerical check.
    Input(String),
    /// Invalid parameters.
    Usage(String),
    /// A size cap was exceeded.
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Resource(_) => 3,
        }
    }

    /// Errors from parameters the user typed: domain problems are usage errors.
    fn from_params(e: Error) -> Self {
        match e {
            Error::Resource { .. } => CliError::Resource(e.to_string()),
            Error::Domain(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }

    /// Errors while loading or processing input data.
    fn from_input(e: Error) -> Self {
        match e {
            Error::Resource { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Usage(m) | CliError::Resource(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn load_graph(path: &Path) -> CliResult<Digraph> {
    parse_edge_list_with_cap(&read(path)?, DEFAULT_MAX_NODES)
        .map_err(|e| CliError::from_input(e).prefixed(path))
}

impl CliError {
    fn prefixed(self, path: &Path) -> Self {
        let tag = |m: String| format!("{}: {m}", path.display());
        match self {
            CliError::Input(m) => CliError::Input(tag(m)),
            CliError::Usage(m) => CliError::Usage(tag(m)),
            CliError::Resource(m) => CliError::Resource(tag(m)),
        }
    }
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

fn check_tol(tol: f64) -> CliResult<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--tol must be positive, got {tol}"
        )))
    }
}

pub fn generate(kind: &GraphKind, out: Option<&Path>) -> CliResult<()> {
    let g = match *kind {
        GraphKind::Tree { levels } => gen_binary_tree_up(levels),
        GraphKind::Cycle { n } => gen_cycle(n),
        GraphKind::Reducible => Ok(gen_reducible_example()),
        GraphKind::DanglingPair => Ok(gen_dangling_pair()),
        GraphKind::Random { n, p, seed } => gen_random(n, p, seed),
    }
    .map_err(CliError::from_params)?;
    let text = g.to_edge_list();
    match out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ClassicalReport {
    graph: String,
    matrix: &'static str,
    alpha: Option<f64>,
    tol: f64,
    max_iters: usize,
    start: Vec<f64>,
    rank: Vec<f64>,
    converged: bool,
    iterations: usize,
    residual: f64,
    lambda2_modulus: f64,
    strongly_connected: bool,
    limit_cycle: Option<LimitCycle>,
}

fn start_vector(choice: Option<&str>, kind: MatrixKind, n: usize) -> CliResult<Vec<f64>> {
    let choice = choice.unwrap_or(if kind == MatrixKind::Google {
        "uniform"
    } else {
        "1"
    });
    if choice == "uniform" {
        return Ok(uniform_vector(n));
    }
    match choice.parse::<usize>() {
        Ok(k) if (1..=n).contains(&k) => {
            let mut v = vec![0.0; n];
            v[k - 1] = 1.0;
            Ok(v)
        }
        _ => Err(CliError::Usage(format!(
            "--start must be `uniform` or a node id in 1..={n}, got `{choice}`"
        ))),
    }
}

pub fn classical(args: &ClassicalArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    check_tol(args.tol)?;
    let g = load_graph(&args.graph)?;
    let n = g.node_count();
    let h = build_hyperlink(&g);
    let (m, name): (StochasticMatrix, &'static str) = match args.matrix {
        MatrixKind::Hyperlink => (h, "hyperlink"),
        MatrixKind::Patched => (build_patched(&h), "patched"),
        MatrixKind::Google => (
            build_google(&build_patched(&h), args.alpha).map_err(CliError::from_params)?,
            "google",
        ),
    };
    let start = start_vector(args.start.as_deref(), args.matrix, n)?;
    let report =
        power_method(&m, &start, args.tol, args.max_iters).map_err(CliError::from_params)?;
    let lambda2 = second_eigenvalue_modulus(&m).map_err(CliError::from_input)?;
    let cycle = if report.converged {
        None
    } else {
        limit_cycle(&m, &start, n.max(2), args.tol, args.max_iters)
            .map_err(CliError::from_params)?
    };
    let connected = strongly_connected(&g);

    println!(
        "graph: {} ({n} nodes, {} edges)",
        args.graph.display(),
        g.edge_count()
    );
    match args.matrix {
        MatrixKind::Google => println!("matrix: google, alpha = {}", args.alpha),
        _ => println!("matrix: {name} (undamped)"),
    }
    if report.converged {
        println!(
            "converged after {} iterations (residual {:.3e})",
            report.iterations, report.residual
        );
    } else {
        println!(
            "NOT converged after {} iterations (residual {:.3e})",
            report.iterations, report.residual
        );
    }
    if let Some(c) = &cycle {
        println!("limit cycle of period {} detected", c.period);
    }
    println!("|lambda_2| = {lambda2:.12}");
    println!("strongly connected: {connected}");
    println!("node  rank");
    for (i, r) in report.vector.iter().enumerate() {
        println!("{:>4}  {r:.12}", i + 1);
    }

    let json = ClassicalReport {
        graph: args.graph.display().to_string(),
        matrix: name,
        alpha: (args.matrix == MatrixKind::Google).then_some(args.alpha),
        tol: args.tol,
        max_iters: args.max_iters,
        start,
        rank: report.vector.clone(),
        converged: report.converged,
        iterations: report.iterations,
        residual: report.residual,
        lambda2_modulus: lambda2,
        strongly_connected: connected,
        limit_cycle: cycle,
    };
    ensure_dir(&args.out)?;
    write(&args.out.join("classical.json"), &to_json(&json))?;
    write(&args.out.join(format!("{name}.csv")), &m.to_csv())
}

/// Configuration of a quantum run, embedded verbatim in `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub steps: usize,
    pub segments: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub dense_oracle: bool,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn dense_cap() -> CliResult<usize> {
    match std::env::var(DENSE_CAP_VAR) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!("{DENSE_CAP_VAR} must be a node count, got `{v}`"))
        }),
        Err(_) => Ok(DEFAULT_DENSE_CAP),
    }
}

pub fn quantum(args: &QuantumArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    check_tol(args.tol)?;
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let segments = match args.segments {
        Some(l) if l == 0 || !args.steps.is_multiple_of(l) => {
            return Err(CliError::Usage(format!(
                "--segments {l} does not divide --steps {}",
                args.steps
            )))
        }
        Some(l) => l,
        None => gcd(DEFAULT_SEGMENTS, args.steps),
    };
    let cap = if args.dense_oracle {
        Some(dense_cap()?)
    } else {
        None
    };

    let g = load_graph(&args.graph)?;
    let n = g.node_count();
    if let Some(cap) = cap {
        if n > cap {
            return Err(CliError::Resource(format!(
                "dense oracle: node count {n} exceeds the cap of {cap} (set {DENSE_CAP_VAR} to raise it)"
            )));
        }
    }
    let config = RunConfig {
        alpha: args.alpha,
        steps: args.steps,
        segments,
        tol: args.tol,
        max_iters: args.max_iters,
        dense_oracle: args.dense_oracle,
        seed: args.seed,
        output_dir: args.out.clone(),
    };
    let protocol = ProtocolConfig {
        alpha: args.alpha,
        steps: args.steps,
        segments: Some(segments),
        tol: args.tol,
        max_iters: args.max_iters,
        max_nodes: DEFAULT_MAX_NODES,
    };
    let google = build_google(&build_patched(&build_hyperlink(&g)), args.alpha)
        .map_err(CliError::from_params)?;
    let series = run_protocol_on_matrix(&google, &protocol).map_err(CliError::from_params)?;
    let spectrum = build_walk_spectrum(&google).map_err(CliError::from_input)?;

    if let Some(cap) = cap {
        let dense = dense_series(&google, args.steps, cap).map_err(CliError::from_input)?;
        let gap = series
            .values
            .iter()
            .zip(&dense)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        println!("dense oracle: max |spectral - dense| = {gap:.3e}");
        if gap > ORACLE_TOL {
            return Err(CliError::Input(format!(
                "dense oracle disagrees with the spectral path by {gap:.3e} (tolerance {ORACLE_TOL:e})"
            )));
        }
    }

    let report = analyze_hierarchy(&series);
    let summary = Summary::new(config, &series, &report);

    ensure_dir(&args.out)?;
    write(&args.out.join("series.csv"), &series.series_csv())?;
    if let Some(coarse) = series.coarse_csv() {
        write(&args.out.join("coarse.csv"), &coarse)?;
    }
    write(&args.out.join("summary.json"), &to_json(&summary))?;
    write(&args.out.join("spectrum.json"), &to_json(&spectrum.dump()))?;

    println!(
        "{n} nodes, {} steps, {segments} segments, alpha = {}, dim H_dyn = {}",
        args.steps,
        args.alpha,
        spectrum.dyn_dimension()
    );
    println!("node  classical       mean            std");
    for i in 0..n {
        println!(
            "{:>4}  {:.12}  {:.12}  {:.12}",
            i + 1,
            series.classical[i],
            series.mean[i],
            series.std[i]
        );
    }
    for w in &series.warnings {
        println!("warning: {w}");
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct HierarchyJson {
    n: usize,
    steps: usize,
    orders: Orders,
    flags: Flags,
}

pub fn analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let text = read(&args.summary)?;
    let summary: Summary<RunConfig> = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "{}: not a quantum summary: {e}",
            args.summary.display()
        ))
    })?;
    let dir = args
        .summary
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let series_path = args
        .series
        .clone()
        .unwrap_or_else(|| dir.join("series.csv"));
    let values = parse_series_csv(&read(&series_path)?)
        .map_err(|e| CliError::from_input(e).prefixed(&series_path))?;

    let n = summary.n;
    let schema = |msg: String| CliError::Input(format!("{}: {msg}", series_path.display()));
    if summary.classical.len() != n || summary.mean.len() != n {
        return Err(CliError::Input(format!(
            "{}: summary vectors do not have n = {n} entries",
            args.summary.display()
        )));
    }
    if values.len() != summary.steps {
        return Err(schema(format!(
            "{} rows, summary says {} steps",
            values.len(),
            summary.steps
        )));
    }
    if let Some(row) = values.iter().find(|r| r.len() != n) {
        return Err(schema(format!(
            "row of width {}, summary says n = {n}",
            row.len()
        )));
    }
    let series = RankSeries::from_values(
        values,
        summary.classical.clone(),
        summary.alpha,
        Some(summary.config.segments),
    )
    .map_err(|e| schema(e.to_string()))?;
    let drift = series
        .mean
        .iter()
        .zip(&summary.mean)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if drift > 1e-9 {
        return Err(schema(format!(
            "series means differ from the summary by {drift:.3e}"
        )));
    }

    let report = analyze_hierarchy(&series);
    let view = Summary::new((), &series, &report);
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    println!("classical order: {}", join(&view.orders.classical));
    println!("quantum order:   {}", join(&view.orders.quantum));
    println!("weak preserving:   {}", view.flags.weak_preserving);
    println!("strong preserving: {}", view.flags.strong_preserving);
    println!("node  outperform_instants  average_outperforming  mean - classical");
    for i in 0..n {
        println!(
            "{:>4}  {:>19}  {:>21}  {}",
            i + 1,
            view.flags.outperform_instant_counts[i],
            view.flags.average_outperforming[i],
            sig17(series.mean[i] - series.classical[i])
        );
    }
    println!("crossings: {}", view.flags.crossings);

    let out = args.out.clone().unwrap_or(dir);
    ensure_dir(&out)?;
    write(
        &out.join("hierarchy.json"),
        &to_json(&HierarchyJson {
            n,
            steps: summary.steps,
            orders: view.orders,
            flags: view.flags,
        }),
    )
}
