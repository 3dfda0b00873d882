//! Core undirected weighted graph, Laplacian assembly, and the smoothness /
//! objective functionals evaluated on it.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One undirected edge with a strictly positive conductance-like weight.
/// Canonical form has `s < t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub s: usize,
    pub t: usize,
    pub w: f64,
}

impl Edge {
    pub fn new(s: usize, t: usize, w: f64) -> Self {
        if s < t {
            Edge { s, t, w }
        } else {
            Edge { s: t, t: s, w }
        }
    }
}

/// Undirected weighted graph; the resistor network under study.
///
/// Edges are stored canonically (`s < t`, sorted lexicographically) so that
/// iteration order, and hence every ranking computed from it, is reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::MalformedGraph("node_count must be positive".into()));
        }
        let mut canon: Vec<Edge> = Vec::with_capacity(edges.len());
        for e in edges {
            if e.s == e.t {
                return Err(Error::MalformedGraph(format!("self-loop at node {}", e.s)));
            }
            if e.s >= node_count || e.t >= node_count {
                return Err(Error::MalformedGraph(format!(
                    "edge ({},{}) out of range for {} nodes",
                    e.s, e.t, node_count
                )));
            }
            if !(e.w > 0.0) || !e.w.is_finite() {
                return Err(Error::MalformedGraph(format!(
                    "edge ({},{}) has non-positive weight {}",
                    e.s, e.t, e.w
                )));
            }
            canon.push(Edge::new(e.s, e.t, e.w));
        }
        canon.sort_by(|a, b| (a.s, a.t).cmp(&(b.s, b.t)));
        for pair in canon.windows(2) {
            if pair[0].s == pair[1].s && pair[0].t == pair[1].t {
                return Err(Error::MalformedGraph(format!(
                    "duplicate edge ({},{})",
                    pair[0].s, pair[0].t
                )));
            }
        }
        Ok(WeightedGraph {
            node_count,
            edges: canon,
        })
    }

    pub fn from_tuples(node_count: usize, list: &[(usize, usize, f64)]) -> Result<Self> {
        Self::new(
            node_count,
            list.iter().map(|&(s, t, w)| Edge::new(s, t, w)).collect(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// |E| / |V|.
    pub fn density(&self) -> f64 {
        self.edges.len() as f64 / self.node_count as f64
    }

    /// New graph with extra edges added (pairs must not already exist).
    pub fn with_added_edges(&self, extra: &[Edge]) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.extend_from_slice(extra);
        Self::new(self.node_count, edges)
    }

    /// New graph with every weight multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(e.s, e.t, e.w * alpha))
            .collect();
        Self::new(self.node_count, edges)
    }

    /// Neighbor lists: for each node, sorted `(neighbor, weight)` pairs.
    pub fn adjacency(&self) -> Adjacency {
        let n = self.node_count;
        let mut ptr = vec![0usize; n + 1];
        for e in &self.edges {
            ptr[e.s + 1] += 1;
            ptr[e.t + 1] += 1;
        }
        for i in 0..n {
            ptr[i + 1] += ptr[i];
        }
        let mut items = vec![(0usize, 0.0f64); ptr[n]];
        let mut cursor = ptr.clone();
        for e in &self.edges {
            items[cursor[e.s]] = (e.t, e.w);
            cursor[e.s] += 1;
            items[cursor[e.t]] = (e.s, e.w);
            cursor[e.t] += 1;
        }
        // Canonical edge order emits neighbors of each node in ascending
        // order for t-side entries but not s-side; sort per node.
        for i in 0..n {
            items[ptr[i]..ptr[i + 1]].sort_unstable_by_key(|&(j, _)| j);
        }
        Adjacency { ptr, items }
    }

    /// Component id per node (BFS order, ids dense from 0).
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.node_count];
        let mut next = 0;
        let mut queue = std::collections::VecDeque::new();
        for start in 0..self.node_count {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for &(u, _) in adj.neighbors(v) {
                    if comp[u] == usize::MAX {
                        comp[u] = next;
                        queue.push_back(u);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        let comp = self.components();
        comp.iter().all(|&c| c == 0)
    }

    pub fn require_connected(&self) -> Result<()> {
        let comp = self.components();
        let count = comp.iter().copied().max().unwrap_or(0) + 1;
        if count > 1 {
            return Err(Error::Disconnected { components: count });
        }
        Ok(())
    }

    /// Weighted degree of every node.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.node_count];
        for e in &self.edges {
            d[e.s] += e.w;
            d[e.t] += e.w;
        }
        d
    }
}

/// Compact neighbor-list view shared by smoothing, clustering and traversals.
#[derive(Debug, Clone)]
pub struct Adjacency {
    ptr: Vec<usize>,
    items: Vec<(usize, f64)>,
}

impl Adjacency {
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.items[self.ptr[v]..self.ptr[v + 1]]
    }

    pub fn node_count(&self) -> usize {
        self.ptr.len() - 1
    }
}

/// Sparse symmetric view of L = D - W for a [`WeightedGraph`].
#[derive(Debug, Clone)]
pub struct LaplacianView {
    n: usize,
    edges: Vec<Edge>,
    adj: Adjacency,
    degree: Vec<f64>,
}

/// Assemble the Laplacian view; the graph's invariants guarantee the view's.
pub fn build_laplacian(g: &WeightedGraph) -> LaplacianView {
    LaplacianView {
        n: g.node_count(),
        edges: g.edges().to_vec(),
        adj: g.adjacency(),
        degree: g.degrees(),
    }
}

impl LaplacianView {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adj
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    /// Entry L(s,t): degree on the diagonal, -w off it.
    pub fn entry(&self, s: usize, t: usize) -> f64 {
        if s == t {
            return self.degree[s];
        }
        match self.adj.neighbors(s).binary_search_by_key(&t, |&(j, _)| j) {
            Ok(k) => -self.adj.neighbors(s)[k].1,
            Err(_) => 0.0,
        }
    }

    /// y = L x, edge-wise.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            y[i] = self.degree[i] * x[i];
        }
        for e in &self.edges {
            y[e.s] -= e.w * x[e.t];
            y[e.t] -= e.w * x[e.s];
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(u, _) in self.adj.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.component_count() == 1
    }

    pub fn require_connected(&self) -> Result<()> {
        let components = self.component_count();
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(())
    }
}

/// Smoothness of one signal: sum over edges of w (x(s) - x(t))^2.
pub fn quadratic_form(lap: &LaplacianView, x: &[f64]) -> Result<f64> {
    if x.len() != lap.n {
        return Err(Error::DimensionMismatch {
            expected: lap.n,
            got: x.len(),
        });
    }
    let mut acc = 0.0;
    for e in &lap.edges {
        let d = x[e.s] - x[e.t];
        acc += e.w * d * d;
    }
    Ok(acc)
}

/// Tr(X^T L X): smoothness of a signal set, accumulated edge-wise.
pub fn smoothness_trace(lap: &LaplacianView, x: &Matrix) -> Result<f64> {
    x.expect_rows(lap.n)?;
    let mut acc = 0.0;
    for e in &lap.edges {
        acc += e.w * x.row_dist_sq(e.s, e.t);
    }
    Ok(acc)
}

/// Prior feature variance and eigenvalue budget for the objective.
#[derive(Debug, Clone, Copy)]
pub struct PrecisionParams {
    /// sigma^2; `f64::INFINITY` drops the 1/sigma^2 terms.
    pub sigma_sq: f64,
    /// Number of nonzero eigenvalues used when evaluating the objective.
    pub eig_budget: usize,
}

impl Default for PrecisionParams {
    fn default() -> Self {
        PrecisionParams {
            sigma_sq: f64::INFINITY,
            eig_budget: 50,
        }
    }
}

impl PrecisionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > 0.0) {
            return Err(Error::InvalidConfig("sigma_sq must be positive".into()));
        }
        if self.eig_budget == 0 {
            return Err(Error::InvalidConfig("eig_budget must be >= 1".into()));
        }
        Ok(())
    }

    /// 1/sigma^2, zero when sigma^2 is infinite.
    pub fn inv_sigma_sq(&self) -> f64 {
        if self.sigma_sq.is_finite() {
            1.0 / self.sigma_sq
        } else {
            0.0
        }
    }
}

/// Penalized log-likelihood objective evaluated on the leading eigenvalues:
/// sum_i log(lambda_i + 1/sigma^2) - (1/M)(Tr(X^T X)/sigma^2 + sum_e w z_data).
///
/// The eigenvalue sum runs over the first `eig_budget` nonzero eigenvalues
/// (clamped to N-1).
pub fn objective_value(g: &WeightedGraph, x: &Matrix, params: &PrecisionParams) -> Result<f64> {
    params.validate()?;
    g.require_connected()?;
    x.expect_rows(g.node_count())?;
    let budget = params.eig_budget.min(g.node_count() - 1);
    let lap = build_laplacian(g);
    let eigenvalues =
        crate::eigen::smallest_nonzero_eigenvalues(&lap, budget, &crate::eigen::EigenConfig::default())?;
    let inv_s2 = params.inv_sigma_sq();
    let logdet: f64 = eigenvalues.iter().map(|l| (l + inv_s2).ln()).sum();
    let m = x.cols().max(1) as f64;
    let trace_term = x.frobenius_sq() * inv_s2 + smoothness_trace(&lap, x)?;
    Ok(logdet - trace_term / m)
}

/// Effective resistance e_{s,t}^T L^+ e_{s,t}, via one Laplacian solve on the
/// component containing both endpoints.
pub fn effective_resistance(g: &WeightedGraph, s: usize, t: usize) -> Result<f64> {
    if s == t {
        return Err(Error::MalformedGraph(
            "effective resistance requires s != t".into(),
        ));
    }
    let n = g.node_count();
    if s >= n || t >= n {
        return Err(Error::MalformedGraph(format!(
            "node {} out of range",
            s.max(t)
        )));
    }
    let comp = g.components();
    if comp[s] != comp[t] {
        return Err(Error::InfiniteResistance { s, t });
    }
    // Restrict to the shared component so a stray isolated node elsewhere
    // does not block the solve.
    let (sub, map) = induced_component(g, &comp, comp[s]);
    let (s2, t2) = (map[s], map[t]);
    let lap = build_laplacian(&sub);
    let mut b = vec![0.0; sub.node_count()];
    b[s2] = 1.0;
    b[t2] = -1.0;
    let cfg = crate::solver::SolverConfig::default();
    let x = crate::solver::solve_laplacian(&lap, &b, &cfg)?;
    Ok(x[s2] - x[t2])
}

/// |E| / |V|; free-function form of [`WeightedGraph::density`].
pub fn density(g: &WeightedGraph) -> f64 {
    g.density()
}

fn induced_component(
    g: &WeightedGraph,
    comp: &[usize],
    id: usize,
) -> (WeightedGraph, Vec<usize>) {
    let mut map = vec![usize::MAX; g.node_count()];
    let mut count = 0;
    for v in 0..g.node_count() {
        if comp[v] == id {
            map[v] = count;
            count += 1;
        }
    }
    let edges = g
        .edges()
        .iter()
        .filter(|e| comp[e.s] == id)
        .map(|e| Edge::new(map[e.s], map[e.t], e.w))
        .collect();
    (
        WeightedGraph::new(count, edges).expect("induced subgraph of a valid graph is valid"),
        map,
    )
}
