//! Graph construction and normalized operators.
//!
//! Graphs are simple, undirected, and 0-indexed. Every node must have
//! degree at least one so that `D^{-1/2}` exists; constructors reject
//! isolated nodes instead of silently patching the degree matrix.

use crate::error::{Error, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Simple undirected graph: node count plus a deduplicated edge set.
///
/// Edges are stored as `(min, max)` pairs, sorted. All constructors go
/// through [`Graph::new`], which enforces the structural invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// Dense symmetric normalized operators of a graph.
///
/// `lap_norm` is `I - adj_norm` elementwise, so both matrices are
/// symmetric by construction rather than symmetrized after the fact.
#[derive(Debug, Clone)]
pub struct NormalizedOperators {
    /// Normalized adjacency `D^{-1/2} A D^{-1/2}`.
    pub adj_norm: Array2<f64>,
    /// Normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
    pub lap_norm: Array2<f64>,
}

impl Graph {
    /// Builds a graph from raw undirected edges.
    ///
    /// Pairs are normalized to `(min, max)`, deduplicated, and validated:
    /// endpoints must lie in `[0, n)`, self-loops are rejected, and every
    /// node must end up with degree >= 1.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut normalized: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for n={n}"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();

        let graph = Graph {
            n,
            edges: normalized,
        };
        if let Some(node) = graph.degrees().iter().position(|&d| d == 0) {
            return Err(Error::IsolatedNode(node));
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as sorted `(min, max)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// BFS connectivity check.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.n];
        let mut queue = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(v) = queue.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    visited += 1;
                    queue.push(w);
                }
            }
        }
        visited == self.n
    }

    /// Parses an edge list: one edge per line, two whitespace-separated
    /// non-negative integers, `#` starts a comment. `n_hint` can enlarge
    /// the node count beyond `max index + 1` (never shrink it).
    pub fn from_edge_list(text: &str, n_hint: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_index = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                let tok = tok.ok_or_else(|| Error::EdgeList {
                    line: line_no,
                    reason: "expected two node indices".into(),
                })?;
                tok.parse::<usize>().map_err(|_| Error::EdgeList {
                    line: line_no,
                    reason: format!("invalid node index '{tok}'"),
                })
            };
            let a = parse(tokens.next())?;
            let b = parse(tokens.next())?;
            if tokens.next().is_some() {
                return Err(Error::EdgeList {
                    line: line_no,
                    reason: "expected exactly two node indices".into(),
                });
            }
            max_index = max_index.max(a).max(b);
            edges.push((a, b));
        }
        if edges.is_empty() {
            return Err(Error::InvalidParameter("edge list is empty".into()));
        }
        let n = (max_index + 1).max(n_hint.unwrap_or(0));
        Graph::new(n, edges)
    }

    /// 2D 4-neighbor grid with `rows * cols` pixel nodes.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows * cols < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 nodes, got {rows}x{cols}"
            )));
        }
        let at = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::with_capacity(2 * rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((at(r, c), at(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((at(r, c), at(r + 1, c)));
                }
            }
        }
        Graph::new(rows * cols, edges)
    }

    /// G(n, p) random graph with p = `avg_degree` / (n - 1).
    ///
    /// Deterministic for a given seed. Isolated nodes are repaired by
    /// attaching one uniformly random edge each; the second element of
    /// the returned pair counts the repairs.
    pub fn erdos_renyi(n: usize, avg_degree: f64, seed: u64) -> Result<(Self, usize)> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "erdos_renyi needs n >= 2, got {n}"
            )));
        }
        if !(avg_degree > 0.0) || avg_degree > (n - 1) as f64 {
            return Err(Error::InvalidParameter(format!(
                "avg_degree must lie in (0, n-1] = (0, {}], got {avg_degree}",
                n - 1
            )));
        }
        let p = avg_degree / (n - 1) as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let repaired = repair_isolated(n, &mut edges, &mut rng);
        Ok((Graph::new(n, edges)?, repaired))
    }

    /// Two-community stochastic block model over blocks `[0, n/2)` and
    /// `[n/2, n)`. Returns the graph, its block labels, and the number of
    /// isolated-node repairs (same repair rule as [`Graph::erdos_renyi`]).
    pub fn two_block_sbm(
        n: usize,
        p_in: f64,
        p_out: f64,
        seed: u64,
    ) -> Result<(Self, Vec<usize>, usize)> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!(
                "two_block_sbm needs n >= 4, got {n}"
            )));
        }
        for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        let half = n / 2;
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= half)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let p = if labels[i] == labels[j] { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let repaired = repair_isolated(n, &mut edges, &mut rng);
        Ok((Graph::new(n, edges)?, labels, repaired))
    }

    /// Dense normalized adjacency and Laplacian.
    pub fn normalized_operators(&self) -> NormalizedOperators {
        let n = self.n;
        let deg = self.degrees();

        let mut adj_norm = Array2::<f64>::zeros((n, n));
        for &(a, b) in &self.edges {
            let w = 1.0 / ((deg[a] * deg[b]) as f64).sqrt();
            adj_norm[[a, b]] = w;
            adj_norm[[b, a]] = w;
        }
        let mut lap_norm = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                lap_norm[[i, j]] = if i == j { 1.0 } else { 0.0 } - adj_norm[[i, j]];
            }
        }
        NormalizedOperators { adj_norm, lap_norm }
    }
}

/// Attaches one uniformly random edge to each isolated node, in node
/// order; returns how many nodes were repaired.
fn repair_isolated(n: usize, edges: &mut Vec<(usize, usize)>, rng: &mut ChaCha8Rng) -> usize {
    let mut deg = vec![0usize; n];
    for &(a, b) in edges.iter() {
        deg[a] += 1;
        deg[b] += 1;
    }
    let mut repaired = 0;
    for v in 0..n {
        if deg[v] == 0 {
            let mut other = rng.random_range(0..n - 1);
            if other >= v {
                other += 1;
            }
            edges.push((v.min(other), v.max(other)));
            deg[v] += 1;
            deg[other] += 1;
            repaired += 1;
        }
    }
    repaired
}
