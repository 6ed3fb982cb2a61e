//! Network generation, connectivity, influence matrices, and their left unit
//! eigenvector.
//!
//! A directed edge `j -> i` means agent `j`'s belief is visible to agent `i`,
//! so `i`'s neighbor set holds its in-neighbors. Self-reliance is carried by
//! the influence matrix diagonal, never by a self-loop edge.

use crate::core::{validate_influence_row, PROB_TOL};
use crate::rng::Stream;
use crate::{Error, Result};

/// Default retry budget for connected random-graph generation.
pub const DEFAULT_MAX_RETRIES: usize = 1000;

/// Default tolerance and iteration cap for the eigenvector power iteration.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;
pub const DEFAULT_EIGEN_MAX_ITER: usize = 100_000;

/// A directed network over `n` agents, stored as sorted in-neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    n: usize,
    neighbors: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network from directed edges `(j, i)` (belief of `j` visible
    /// to `i`). Self-loops are rejected; duplicate edges collapse.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("network must have at least one agent".into()));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(j, i) in edges {
            if j >= n || i >= n {
                return Err(Error::Domain(format!(
                    "edge ({j}, {i}) out of range for {n} agents"
                )));
            }
            if j == i {
                return Err(Error::Domain(format!(
                    "self-loop on agent {i}: self-reliance lives on the influence diagonal"
                )));
            }
            neighbors[i].push(j);
        }
        for list in neighbors.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Network { n, neighbors })
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    /// In-neighbors of agent `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// All directed edges `(j, i)`, sorted by `(i, j)`.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                edges.push((j, i));
            }
        }
        edges
    }

    /// Edge-list text format: header `n=<count>`, then one `j i` pair per
    /// directed edge, newline-delimited.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for (j, i) in self.directed_edges() {
            out.push_str(&format!("{j} {i}\n"));
        }
        out
    }

    /// Parses the edge-list text format produced by [`Network::to_edge_list`].
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Domain("empty edge list".into()))?;
        let n: usize = header
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Domain(format!("bad edge-list header `{header}`")))?;
        let mut edges = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split_whitespace();
            let j = parts.next().and_then(|v| v.parse().ok());
            let i = parts.next().and_then(|v| v.parse().ok());
            match (j, i, parts.next()) {
                (Some(j), Some(i), None) => edges.push((j, i)),
                _ => return Err(Error::Domain(format!("bad edge line `{line}`"))),
            }
        }
        Network::new(n, &edges)
    }
}

/// Generates a connected undirected Erdős–Rényi graph: each unordered pair is
/// included with probability `p` (both directed edges added), resampling with
/// fresh draws from the same stream until the graph is connected.
///
/// Pair draws scan `i < j` in ascending order, so the result is a pure
/// function of `(n, p, seed)`.
pub fn generate_er(n: usize, p: f64, seed: u64, max_retries: usize) -> Result<Network> {
    if n == 0 {
        return Err(Error::Parameter {
            name: "n",
            reason: "must be at least 1".into(),
        });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter {
            name: "p",
            reason: format!("must lie in (0, 1], got {p}"),
        });
    }
    if n == 1 {
        return Network::new(1, &[]);
    }
    let mut stream = Stream::from_seed(seed);
    for _attempt in 0..max_retries.max(1) {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if stream.bernoulli(p) {
                    edges.push((i, j));
                    edges.push((j, i));
                }
            }
        }
        let net = Network::new(n, &edges)?;
        if is_strongly_connected(&net) {
            return Ok(net);
        }
    }
    Err(Error::Generation {
        attempts: max_retries.max(1),
    })
}

/// True iff every agent reaches every other along directed edges: node 0
/// must reach all nodes following out-edges and following in-edges.
pub fn is_strongly_connected(net: &Network) -> bool {
    let n = net.agent_count();
    if n == 1 {
        return true;
    }
    // in-neighbor lists give backward reachability directly; build the
    // out-adjacency for the forward pass
    let mut out = vec![Vec::new(); n];
    for i in 0..n {
        for &j in net.neighbors(i) {
            out[j].push(i);
        }
    }
    let reach = |adj: &[Vec<usize>]| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    };
    reach(&out) && reach(&net.neighbors)
}

/// Row-stochastic influence matrix with positive diagonal, dense row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMatrix {
    n: usize,
    weights: Vec<f64>,
}

impl InfluenceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }
}

/// Uniform-weight influence: `a_ii = gamma` and `(1 - gamma)/|N_i|` on each
/// neighbor. Rows sum to one by construction.
pub fn uniform_influence(net: &Network, gamma: f64) -> Result<InfluenceMatrix> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter {
            name: "gamma",
            reason: format!("must lie in (0, 1], got {gamma}"),
        });
    }
    let n = net.agent_count();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        let degree = net.neighbors(i).len();
        if gamma < 1.0 && degree == 0 {
            return Err(Error::Domain(format!(
                "agent {i} is isolated but gamma = {gamma} < 1 assigns weight to neighbors"
            )));
        }
        weights[i * n + i] = gamma;
        if gamma < 1.0 {
            let share = (1.0 - gamma) / degree as f64;
            for &j in net.neighbors(i) {
                weights[i * n + j] = share;
            }
        }
    }
    Ok(InfluenceMatrix { n, weights })
}

/// Assembles an influence matrix from full-length weight rows. Each row must
/// pass [`validate_influence_row`] at its own index, and may place positive
/// weight only on the agent itself and its neighbors.
pub fn general_influence(net: &Network, rows: &[Vec<f64>]) -> Result<InfluenceMatrix> {
    let n = net.agent_count();
    if rows.len() != n {
        return Err(Error::Domain(format!(
            "expected {n} weight rows, got {}",
            rows.len()
        )));
    }
    let mut weights = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(
                Error::Domain(format!("row {i} has length {}, expected {n}", row.len()))
                    .for_agent(i),
            );
        }
        validate_influence_row(row, i).map_err(|e| e.for_agent(i))?;
        for (j, &w) in row.iter().enumerate() {
            if w > 0.0 && j != i && !net.neighbors(i).contains(&j) {
                return Err(Error::SupportViolation { target: j }.for_agent(i));
            }
        }
        weights.extend_from_slice(row);
    }
    Ok(InfluenceMatrix { n, weights })
}

/// True iff the support digraph of `a` is strongly connected.
fn is_irreducible(a: &InfluenceMatrix) -> bool {
    let n = a.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && a.weight(i, j) > 0.0 {
                edges.push((j, i));
            }
        }
    }
    match Network::new(n, &edges) {
        Ok(net) => is_strongly_connected(&net),
        Err(_) => false,
    }
}

/// The probability vector `v` with `v A = v`, computed by left power
/// iteration from a uniform start, renormalizing each pass, until
/// `||v A - v||_1 <= tol`.
///
/// Requires an irreducible matrix; reducible inputs (e.g. the identity) have
/// a whole family of unit left eigenvectors and are rejected rather than
/// resolved arbitrarily. Positive diagonals rule out periodicity, so the
/// iteration converges for every irreducible influence matrix.
pub fn left_unit_eigenvector(a: &InfluenceMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Parameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let n = a.n();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    if !is_irreducible(a) {
        return Err(Error::Convergence(
            "influence matrix is reducible: the unit left eigenvector is not unique".into(),
        ));
    }
    let mut v = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _iter in 0..max_iter {
        for x in next.iter_mut() {
            *x = 0.0;
        }
        for (i, &vi) in v.iter().enumerate() {
            let row = a.row(i);
            for j in 0..n {
                next[j] += vi * row[j];
            }
        }
        residual = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        let sum: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= sum;
        }
        std::mem::swap(&mut v, &mut next);
        if residual <= tol {
            return Ok(v);
        }
    }
    Err(Error::Convergence(format!(
        "power iteration residual {residual:.3e} above tol {tol:.3e} after {max_iter} iterations"
    )))
}

/// Checks all [`InfluenceMatrix`] invariants on an assembled matrix; used by
/// tests and by callers constructing matrices through non-standard paths.
pub fn check_influence_invariants(a: &InfluenceMatrix, net: &Network) -> Result<()> {
    let n = a.n();
    if net.agent_count() != n {
        return Err(Error::Domain("network/matrix size mismatch".into()));
    }
    for i in 0..n {
        let row = a.row(i);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL * n as f64 {
            return Err(Error::StochasticityViolation(format!(
                "row {i} sums to {sum}"
            )));
        }
        if a.weight(i, i) <= 0.0 {
            return Err(Error::SelfRelianceViolation {
                value: a.weight(i, i),
            }
            .for_agent(i));
        }
        for (j, &w) in row.iter().enumerate() {
            if w > 0.0 && j != i && !net.neighbors(i).contains(&j) {
                return Err(Error::SupportViolation { target: j }.for_agent(i));
            }
        }
    }
    Ok(())
}
