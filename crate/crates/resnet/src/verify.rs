//! Vectorless integrity verification: ground the conductance system, factor
//! it once, compute per-query adjoint sensitivities, and maximize the
//! sensitivity-weighted current subject to box bounds and laminar budget
//! constraints (exact greedy water-filling).

use crate::error::{Error, Result};
use crate::graph::{build_laplacian, WeightedGraph};
use crate::sparse::{LdltFactor, SymmetricCsr};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// One budget: total current drawn by `nodes` is at most `bound`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Budget {
    pub nodes: Vec<usize>,
    pub bound: f64,
}

/// Box bounds per node plus a laminar family of subset budgets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurrentConstraints {
    /// Per-node maximum draw; zero for non-source nodes.
    pub upper_bounds: Vec<f64>,
    pub budgets: Vec<Budget>,
}

impl CurrentConstraints {
    pub fn node_count(&self) -> usize {
        self.upper_bounds.len()
    }

    /// Budgets must form a laminar family (pairwise disjoint or nested) and
    /// each bound must be positive and attainable.
    pub fn validate(&self) -> Result<()> {
        if self.upper_bounds.iter().any(|&u| u < 0.0 || !u.is_finite()) {
            return Err(Error::UnsupportedConstraints(
                "upper bounds must be finite and nonnegative".into(),
            ));
        }
        let n = self.upper_bounds.len();
        let mut sets: Vec<std::collections::BTreeSet<usize>> = Vec::new();
        for (k, b) in self.budgets.iter().enumerate() {
            if !(b.bound > 0.0) {
                return Err(Error::UnsupportedConstraints(format!(
                    "budget {k} bound must be positive"
                )));
            }
            let set: std::collections::BTreeSet<usize> = b.nodes.iter().copied().collect();
            if set.len() != b.nodes.len() {
                return Err(Error::UnsupportedConstraints(format!(
                    "budget {k} has duplicate nodes"
                )));
            }
            if set.iter().any(|&p| p >= n) {
                return Err(Error::UnsupportedConstraints(format!(
                    "budget {k} references a node out of range"
                )));
            }
            let cap: f64 = set.iter().map(|&p| self.upper_bounds[p]).sum();
            if b.bound > cap + 1e-12 {
                return Err(Error::UnsupportedConstraints(format!(
                    "budget {k} bound {} exceeds its capacity {}",
                    b.bound, cap
                )));
            }
            sets.push(set);
        }
        for i in 0..sets.len() {
            for j in (i + 1)..sets.len() {
                let inter = sets[i].intersection(&sets[j]).count();
                if inter == 0 {
                    continue;
                }
                let nested = inter == sets[i].len() || inter == sets[j].len();
                if !nested {
                    return Err(Error::UnsupportedConstraints(format!(
                        "budgets {i} and {j} overlap without nesting"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A verification instance over a (learned or original) grid.
#[derive(Debug, Clone)]
pub struct VerificationProblem {
    pub grid: WeightedGraph,
    pub ground_nodes: Vec<usize>,
    pub constraints: CurrentConstraints,
    pub query_nodes: Vec<usize>,
}

impl VerificationProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.node_count();
        if self.ground_nodes.is_empty() {
            return Err(Error::InvalidConfig("ground node set is empty".into()));
        }
        if self.ground_nodes.iter().any(|&g| g >= n) {
            return Err(Error::InvalidConfig("ground node out of range".into()));
        }
        if self.constraints.node_count() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.constraints.node_count(),
            });
        }
        let grounds: std::collections::HashSet<usize> =
            self.ground_nodes.iter().copied().collect();
        if self.query_nodes.iter().any(|q| grounds.contains(q)) {
            return Err(Error::InvalidConfig(
                "query nodes must be disjoint from ground nodes".into(),
            ));
        }
        if self.query_nodes.iter().any(|&q| q >= n) {
            return Err(Error::InvalidConfig("query node out of range".into()));
        }
        self.constraints.validate()
    }
}

/// Grounded SPD conductance system. The LDL^T factorization is built on
/// first use, so iterative-only runs never pay for it.
pub struct GroundedSystem {
    full_n: usize,
    /// reduced index -> original node
    nodes: Vec<usize>,
    /// original node -> reduced index
    index: Vec<Option<usize>>,
    csr: SymmetricCsr,
    factor: std::sync::OnceLock<(LdltFactor, f64)>,
}

/// Remove ground rows/columns from the Laplacian. Errors if any remaining
/// component has no path to a ground (its block would be singular).
pub fn ground_system(grid: &WeightedGraph, ground_nodes: &[usize]) -> Result<GroundedSystem> {
    let n = grid.node_count();
    if ground_nodes.is_empty() {
        return Err(Error::InvalidConfig("ground node set is empty".into()));
    }
    let mut is_ground = vec![false; n];
    for &g in ground_nodes {
        if g >= n {
            return Err(Error::InvalidConfig(format!("ground node {g} out of range")));
        }
        is_ground[g] = true;
    }

    // Floating-island check: BFS from every ground through the full graph;
    // non-ground nodes never reached have no discharge path.
    let adj = grid.adjacency();
    let mut reached = is_ground.clone();
    let mut queue: std::collections::VecDeque<usize> = ground_nodes.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &(u, _) in adj.neighbors(v) {
            if !reached[u] {
                reached[u] = true;
                queue.push_back(u);
            }
        }
    }
    let floating: Vec<usize> = (0..n).filter(|&v| !reached[v]).collect();
    if !floating.is_empty() {
        return Err(Error::FloatingIsland { nodes: floating });
    }

    let mut nodes = Vec::with_capacity(n - ground_nodes.len());
    let mut index = vec![None; n];
    for v in 0..n {
        if !is_ground[v] {
            index[v] = Some(nodes.len());
            nodes.push(v);
        }
    }
    let lap = build_laplacian(grid);
    let mut diag = vec![0.0f64; nodes.len()];
    for (r, &v) in nodes.iter().enumerate() {
        diag[r] = lap.degree()[v];
    }
    let mut upper = Vec::new();
    for e in grid.edges() {
        if let (Some(a), Some(b)) = (index[e.s], index[e.t]) {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            upper.push((a, b, -e.w));
        }
    }
    let csr = SymmetricCsr::from_upper(nodes.len(), &diag, &upper);
    Ok(GroundedSystem {
        full_n: n,
        nodes,
        index,
        csr,
        factor: std::sync::OnceLock::new(),
    })
}

impl GroundedSystem {
    fn factor(&self) -> Result<&LdltFactor> {
        if self.factor.get().is_none() {
            let t0 = Instant::now();
            let f = LdltFactor::new(&self.csr)?;
            let _ = self.factor.set((f, t0.elapsed().as_secs_f64()));
        }
        Ok(&self.factor.get().expect("factor just initialized").0)
    }

    /// Wall time spent factorizing, zero if the factorization never ran.
    pub fn factor_seconds(&self) -> f64 {
        self.factor.get().map_or(0.0, |(_, t)| *t)
    }

    pub fn reduced_size(&self) -> usize {
        self.nodes.len()
    }

    pub fn reduced_nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn matrix(&self) -> &SymmetricCsr {
        &self.csr
    }

    /// Spread a reduced vector over the full node set (zeros at grounds).
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; self.full_n];
        for (r, &v) in self.nodes.iter().enumerate() {
            out[v] = reduced[r];
        }
        out
    }
}

/// Column of the grounded inverse for one query node: z(p) is the voltage
/// at `query` per unit current drawn at p. Entries are clamped at zero;
/// the grounded Laplacian is an M-matrix, so true entries are nonnegative.
pub fn adjoint_sensitivity(sys: &GroundedSystem, query: usize) -> Result<Vec<f64>> {
    adjoint_sensitivity_with(sys, query, &crate::solver::SolverConfig::default())
}

/// Like [`adjoint_sensitivity`] but honoring the solver method: the direct
/// path reuses one factorization across queries, the CG path iterates on
/// the grounded matrix with a Jacobi preconditioner.
pub fn adjoint_sensitivity_with(
    sys: &GroundedSystem,
    query: usize,
    cfg: &crate::solver::SolverConfig,
) -> Result<Vec<f64>> {
    let reduced = sys
        .index
        .get(query)
        .copied()
        .flatten()
        .ok_or_else(|| Error::InvalidConfig(format!("query node {query} is grounded or out of range")))?;
    let mut e = vec![0.0f64; sys.nodes.len()];
    e[reduced] = 1.0;
    let z = match cfg.method {
        crate::solver::SolverMethod::DirectFactorization => sys.factor()?.solve(&e),
        crate::solver::SolverMethod::ConjugateGradient => {
            let m = sys.reduced_size();
            let diag_inv: Vec<f64> = (0..m)
                .map(|i| {
                    let d = sys
                        .csr
                        .row(i)
                        .find(|&(j, _)| j == i)
                        .map(|(_, v)| v)
                        .unwrap_or(0.0);
                    if d > 0.0 {
                        1.0 / d
                    } else {
                        0.0
                    }
                })
                .collect();
            crate::solver::pcg(
                |v, out| sys.csr.matvec(v, out),
                &diag_inv,
                &e,
                cfg.tolerance,
                cfg.max_iterations.unwrap_or(10 * m.max(1)),
                false,
            )?
        }
    };
    Ok(z.into_iter().map(|v| v.max(0.0)).collect())
}

/// Worst case for one query: value and the witness current vector.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub value: f64,
    /// Full-length current assignment achieving the value.
    pub witness: Vec<f64>,
}

/// Maximize z^T j subject to 0 <= j <= I_max and the laminar budgets:
/// descending-z greedy water-filling, which is exact for this polytope.
/// `z` is indexed by full node id (grounded entries contribute nothing).
pub fn worst_case_voltage(z: &[f64], constraints: &CurrentConstraints) -> Result<WorstCase> {
    constraints.validate()?;
    let n = constraints.node_count();
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.len(),
        });
    }

    // budgets containing each node, outermost last (any order works: the
    // allocatable amount is the min over remaining capacities).
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, b) in constraints.budgets.iter().enumerate() {
        for &p in &b.nodes {
            containing[p].push(k);
        }
    }
    let mut remaining: Vec<f64> = constraints.budgets.iter().map(|b| b.bound).collect();

    let mut order: Vec<usize> = (0..n)
        .filter(|&p| constraints.upper_bounds[p] > 0.0)
        .collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));

    let mut witness = vec![0.0f64; n];
    let mut value = 0.0;
    for p in order {
        if z[p] <= 0.0 {
            // sorted descending: nothing past this point can help
            break;
        }
        let mut avail = constraints.upper_bounds[p];
        for &k in &containing[p] {
            avail = avail.min(remaining[k]);
        }
        if avail <= 0.0 {
            continue;
        }
        witness[p] = avail;
        value += z[p] * avail;
        for &k in &containing[p] {
            remaining[k] -= avail;
        }
    }
    Ok(WorstCase { value, witness })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyStats {
    pub factor_seconds: f64,
    pub solve_seconds: Vec<f64>,
    pub lp_seconds: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct WorstCaseResult {
    pub query_nodes: Vec<usize>,
    pub worst_values: Vec<f64>,
    pub witnesses: Vec<Vec<f64>>,
    pub stats: VerifyStats,
}

/// Factor once (or iterate with CG, per the solver config), then run
/// adjoint sensitivity + greedy maximization per query node.
pub fn verify(
    problem: &VerificationProblem,
    solver: &crate::solver::SolverConfig,
) -> Result<WorstCaseResult> {
    problem.validate()?;
    let sys = ground_system(&problem.grid, &problem.ground_nodes)?;
    let mut worst_values = Vec::with_capacity(problem.query_nodes.len());
    let mut witnesses = Vec::with_capacity(problem.query_nodes.len());
    let mut solve_seconds = Vec::with_capacity(problem.query_nodes.len());
    let mut lp_seconds = Vec::with_capacity(problem.query_nodes.len());
    for &q in &problem.query_nodes {
        let t0 = Instant::now();
        let z = adjoint_sensitivity_with(&sys, q, solver).map_err(|e| annotate_query(e, q))?;
        let z_full = sys.expand(&z);
        solve_seconds.push(t0.elapsed().as_secs_f64());
        let t1 = Instant::now();
        let wc = worst_case_voltage(&z_full, &problem.constraints)
            .map_err(|e| annotate_query(e, q))?;
        lp_seconds.push(t1.elapsed().as_secs_f64());
        worst_values.push(wc.value);
        witnesses.push(wc.witness);
    }
    Ok(WorstCaseResult {
        query_nodes: problem.query_nodes.clone(),
        worst_values,
        witnesses,
        stats: VerifyStats {
            factor_seconds: sys.factor_seconds(),
            solve_seconds,
            lp_seconds,
        },
    })
}

fn annotate_query(e: Error, q: usize) -> Error {
    match e {
        Error::InvalidConfig(msg) => Error::InvalidConfig(format!("query node {q}: {msg}")),
        other => other,
    }
}
