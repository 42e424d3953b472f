//! Directed graphs, the edge-list text format, and generators for the small
//! webs used throughout the crate.
//!
//! Node ids are 0-based in memory and 1-based in every text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest node count accepted by default. The edge space is `n²`-dimensional,
/// so this bounds memory for the quantum walk.
pub const DEFAULT_MAX_NODES: usize = 256;

/// A directed graph given by per-node ordered out-lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digraph {
    n: usize,
    out_edges: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds a digraph, dropping repeated edges (first occurrence wins).
    pub fn new(n: usize, out_edges: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(domain("a digraph needs at least one node"));
        }
        if out_edges.len() != n {
            return Err(domain(format!(
                "expected {n} out-lists, got {}",
                out_edges.len()
            )));
        }
        let mut cleaned = Vec::with_capacity(n);
        for (src, targets) in out_edges.into_iter().enumerate() {
            let mut seen = vec![false; n];
            let mut list = Vec::with_capacity(targets.len());
            for t in targets {
                if t >= n {
                    return Err(domain(format!(
                        "edge {} -> {} points outside the graph",
                        src + 1,
                        t + 1
                    )));
                }
                if !seen[t] {
                    seen[t] = true;
                    list.push(t);
                }
            }
            cleaned.push(list);
        }
        Ok(Self {
            n,
            out_edges: cleaned,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn out_lists(&self) -> &[Vec<usize>] {
        &self.out_edges
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_edges[node].len()
    }

    pub fn dangling_nodes(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.out_degree(v) == 0).collect()
    }

    /// Same graph with every out-list sorted ascending.
    pub fn canonicalized(&self) -> Self {
        let mut out_edges = self.out_edges.clone();
        for list in &mut out_edges {
            list.sort_unstable();
        }
        Self {
            n: self.n,
            out_edges,
        }
    }

    /// Renders the graph in the edge-list format read by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut text = format!("nodes {}\n", self.n);
        for (src, targets) in self.out_edges.iter().enumerate() {
            for &t in targets {
                let _ = writeln!(text, "{} {}", src + 1, t + 1);
            }
        }
        text
    }
}

/// Optional display names for nodes; unnamed nodes print as their 1-based id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLabelMap {
    labels: BTreeMap<usize, String>,
}

impl NodeLabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assigns a label. Fails if the label is already used by another node.
    pub fn insert(&mut self, node: usize, label: impl Into<String>) -> Result<()> {
        let label = label.into();
        if self
            .labels
            .iter()
            .any(|(&other, existing)| other != node && *existing == label)
        {
            return Err(domain(format!("label {label:?} is already assigned")));
        }
        self.labels.insert(node, label);
        Ok(())
    }

    pub fn label(&self, node: usize) -> String {
        self.labels
            .get(&node)
            .cloned()
            .unwrap_or_else(|| (node + 1).to_string())
    }
}

/// Parses the edge-list format with the default node cap.
pub fn parse_edge_list(text: &str) -> Result<Digraph> {
    parse_edge_list_with_cap(text, DEFAULT_MAX_NODES)
}

/// Parses the edge-list format:
///
/// ```text
/// # comment
/// nodes 3
/// 1 2
/// 2 3
/// ```
///
/// The first non-comment line declares the node count; each further line is a
/// `<src> <dst>` pair of 1-based ids.
pub fn parse_edge_list_with_cap(text: &str, max_nodes: usize) -> Result<Digraph> {
    let mut n: Option<usize> = None;
    let mut out_edges: Vec<Vec<usize>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();

        let Some(count) = n else {
            if tokens.len() != 2 || tokens[0] != "nodes" {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `nodes <N>`, found {line:?}"),
                });
            }
            let declared: i64 = tokens[1].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("node count {:?} is not an integer", tokens[1]),
            })?;
            if declared <= 0 {
                return Err(domain(format!(
                    "line {line_no}: node count must be positive, got {declared}"
                )));
            }
            let declared = declared as usize;
            if declared > max_nodes {
                return Err(Error::Resource {
                    what: "node count",
                    requested: declared,
                    cap: max_nodes,
                });
            }
            n = Some(declared);
            out_edges = vec![Vec::new(); declared];
            continue;
        };

        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `<src> <dst>`, found {line:?}"),
            });
        }
        let mut ids = [0usize; 2];
        for (slot, tok) in ids.iter_mut().zip(&tokens) {
            let id: i64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("node id {tok:?} is not an integer"),
            })?;
            if id < 1 || id as usize > count {
                return Err(Error::Range {
                    line: line_no,
                    id,
                    n: count,
                });
            }
            *slot = id as usize - 1;
        }
        let [src, dst] = ids;
        if !out_edges[src].contains(&dst) {
            out_edges[src].push(dst);
        }
    }

    match n {
        Some(count) => Digraph::new(count, out_edges),
        None => Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "missing `nodes <N>` header".into(),
        }),
    }
}

/// Directed n-cycle `i -> i+1 mod n`.
pub fn gen_cycle(n: usize) -> Result<Digraph> {
    if n < 2 {
        return Err(domain(format!("a cycle needs at least 2 nodes, got {n}")));
    }
    Digraph::new(n, (0..n).map(|i| vec![(i + 1) % n]).collect())
}

/// The 4-node web that is not strongly connected: nodes 3 and 4 form a closed
/// pair that drains importance from nodes 1 and 2.
pub fn gen_reducible_example() -> Digraph {
    Digraph::new(4, vec![vec![1, 2, 3], vec![0, 3], vec![3], vec![2]])
        .expect("static graph is valid")
}

/// Two nodes, `1 -> 2`, with node 2 dangling.
pub fn gen_dangling_pair() -> Digraph {
    Digraph::new(2, vec![vec![1], vec![]]).expect("static graph is valid")
}

/// Complete binary tree with `2^levels - 1` nodes and edges oriented from each
/// child to its parent. Node 0 is the root and has no out-links; the children
/// of node `i` are `2i+1` and `2i+2`.
pub fn gen_binary_tree_up(levels: u32) -> Result<Digraph> {
    if levels == 0 {
        return Err(domain("a tree needs at least one level"));
    }
    if levels >= usize::BITS {
        return Err(domain(format!("{levels} levels is too deep")));
    }
    let n = (1usize << levels) - 1;
    let out = (0..n)
        .map(|v| if v == 0 { vec![] } else { vec![(v - 1) / 2] })
        .collect();
    Digraph::new(n, out)
}

/// Erdős–Rényi style digraph: each ordered pair `i != j` is an edge with
/// probability `p`. Deterministic for a given seed.
pub fn gen_random(n: usize, p: f64, seed: u64) -> Result<Digraph> {
    if n == 0 {
        return Err(domain("a digraph needs at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("edge probability {p} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && rng.random_bool(p))
                .collect::<Vec<_>>()
        })
        .collect();
    Digraph::new(n, out)
}

/// True iff every node reaches every other node along directed edges.
pub fn strongly_connected(g: &Digraph) -> bool {
    let n = g.node_count();
    let reaches_all = |adj: &dyn Fn(usize) -> Vec<usize>| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in adj(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };

    let mut reverse = vec![Vec::new(); n];
    for (v, targets) in g.out_lists().iter().enumerate() {
        for &w in targets {
            reverse[w].push(v);
        }
    }
    reaches_all(&|v| g.out_edges(v).to_vec()) && reaches_all(&|v| reverse[v].clone())
}
