//! Single-level spectral graph learning: eigen-embedding, per-edge spectral
//! sensitivity and distortion scores, the densification iteration that grows
//! the maximum spanning tree with the most spectrally-critical candidates,
//! and the final global edge scaling.

use crate::eigen::{eigen_pairs, EigenConfig};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, Edge, WeightedGraph};
use crate::matrix::{dot, Matrix};
use crate::measurements::MeasurementSet;
use crate::mst::CandidatePool;
use crate::solver::{LaplacianSolver, SolverConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    /// Columns u_i / sqrt(lambda_i + 1/sigma^2).
    Eigensubspace,
    /// Gauss-Seidel smoothed random vectors.
    Smoothed,
}

/// Node embedding whose pair distances estimate effective resistances.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub coords: Matrix,
    pub kind: EmbeddingKind,
    /// Whether columns carry the 1/sqrt(lambda + 1/sigma^2) scaling.
    pub scaled: bool,
}

impl EmbeddingMatrix {
    /// ||coords^T e_{s,t}||^2, the squared embedding distance of a pair.
    #[inline]
    pub fn pair_dist_sq(&self, s: usize, t: usize) -> f64 {
        self.coords.row_dist_sq(s, t)
    }

    pub fn dimension(&self) -> usize {
        self.coords.cols()
    }
}

/// Scaled eigensubspace embedding with r nontrivial eigenvectors.
pub fn eigen_embedding(g: &WeightedGraph, r: usize, sigma_sq: f64) -> Result<EmbeddingMatrix> {
    eigen_embedding_with(g, r, sigma_sq, &EigenConfig::default())
}

pub fn eigen_embedding_with(
    g: &WeightedGraph,
    r: usize,
    sigma_sq: f64,
    eigen_cfg: &EigenConfig,
) -> Result<EmbeddingMatrix> {
    let lap = build_laplacian(g);
    let cfg = EigenConfig { r, ..*eigen_cfg };
    let pairs = eigen_pairs(&lap, &cfg)?;
    let inv_s2 = if sigma_sq.is_finite() {
        if !(sigma_sq > 0.0) {
            return Err(Error::InvalidConfig("sigma_sq must be positive".into()));
        }
        1.0 / sigma_sq
    } else {
        0.0
    };
    let n = g.node_count();
    let mut coords = Matrix::zeros(n, r);
    for (j, (u, &lambda)) in pairs.vectors.iter().zip(&pairs.values).enumerate() {
        let scale = 1.0 / (lambda + inv_s2).sqrt();
        for i in 0..n {
            coords.set(i, j, u[i] * scale);
        }
    }
    Ok(EmbeddingMatrix {
        coords,
        kind: EmbeddingKind::Eigensubspace,
        scaled: true,
    })
}

/// Spectral sensitivity s_{s,t} = ||emb^T e||^2 - ||X^T e||^2 / M, the
/// objective gradient for a candidate edge.
pub fn edge_sensitivity(emb: &EmbeddingMatrix, x: &Matrix, s: usize, t: usize) -> Result<f64> {
    if s == t {
        return Err(Error::DegeneratePair { s, t });
    }
    let m = x.cols().max(1) as f64;
    Ok(emb.pair_dist_sq(s, t) - x.row_dist_sq(s, t) / m)
}

/// Embedding distortion eta = M * z_emb / z_data; eta > 1 exactly when the
/// sensitivity is positive.
pub fn edge_distortion(
    emb: &EmbeddingMatrix,
    x: &Matrix,
    s: usize,
    t: usize,
    m: usize,
) -> Result<f64> {
    if s == t {
        return Err(Error::DegeneratePair { s, t });
    }
    let z_data = x.row_dist_sq(s, t);
    if z_data == 0.0 {
        return Err(Error::DegeneratePair { s, t });
    }
    Ok(m as f64 * emb.pair_dist_sq(s, t) / z_data)
}

#[derive(Debug, Clone, Copy)]
pub struct SglConfig {
    /// Embedding dimension.
    pub r: usize,
    /// Sensitivity threshold terminating the iterations.
    pub tol: f64,
    /// Edge-add ratio per iteration: up to ceil(N * beta) insertions.
    pub beta_sample: f64,
    /// Safety cap on densification iterations.
    pub max_iterations: usize,
    pub sigma_sq: f64,
    /// Eigensolver knobs for the per-iteration embedding.
    pub eigen: EigenConfig,
}

impl Default for SglConfig {
    fn default() -> Self {
        SglConfig {
            r: 5,
            tol: 1e-12,
            beta_sample: 1e-3,
            max_iterations: 500,
            sigma_sq: f64::INFINITY,
            eigen: EigenConfig::default(),
        }
    }
}

impl SglConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if !(self.beta_sample > 0.0 && self.beta_sample <= 1.0) {
            return Err(Error::InvalidConfig("beta_sample must lie in (0,1]".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LearnReport {
    pub iterations: usize,
    /// Maximum candidate sensitivity recorded at each iteration.
    pub s_max_trace: Vec<f64>,
    /// Candidate edges added beyond the spanning tree (all levels for the
    /// multilevel variant).
    pub edges_added: usize,
    pub alpha_prime: f64,
    pub converged: bool,
    pub density: f64,
}

/// The densification loop without the final scaling; shared by the
/// single-level and multilevel variants.
pub(crate) fn sgl_iterations(
    features: &Matrix,
    pool: &CandidatePool,
    cfg: &SglConfig,
) -> Result<(WeightedGraph, LearnReport)> {
    cfg.validate()?;
    let n = pool.knn_graph.node_count();
    features.expect_rows(n)?;
    let m = features.cols().max(1) as f64;

    // Learned-graph weight scale: the gradient vanishes where an edge's
    // effective resistance reaches z_data / M, so edges enter at M / z_data
    // (and the seed tree is lifted to the same scale). A unit constant
    // instead would need several times more insertions to reach the same
    // stationary point.
    let mut graph = pool.tree_graph()?.scaled(m)?;
    graph.require_connected()?;

    struct Candidate {
        s: usize,
        t: usize,
        z_data: f64,
    }
    let mut candidates: Vec<Candidate> = pool
        .offtree_edges
        .iter()
        .map(|&i| {
            let e = pool.knn_graph.edges()[i];
            let z_data = features.row_dist_sq(e.s, e.t);
            if z_data == 0.0 {
                return Err(Error::DegeneratePair { s: e.s, t: e.t });
            }
            Ok(Candidate {
                s: e.s,
                t: e.t,
                z_data,
            })
        })
        .collect::<Result<_>>()?;

    let batch = ((n as f64) * cfg.beta_sample).ceil() as usize;
    let batch = batch.max(1);
    let mut trace = Vec::new();
    let mut edges_added = 0usize;
    let mut converged = false;

    while !candidates.is_empty() {
        if trace.len() == cfg.max_iterations {
            break;
        }
        let emb = eigen_embedding_with(&graph, cfg.r, cfg.sigma_sq, &cfg.eigen)
            .map_err(|e| annotate_iteration(e, trace.len()))?;

        let mut scored: Vec<(f64, usize)> = candidates
            .iter()
            .enumerate()
            .map(|(idx, c)| (emb.pair_dist_sq(c.s, c.t) - c.z_data / m, idx))
            .collect();
        let s_max = scored
            .iter()
            .map(|&(s, _)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        trace.push(s_max);

        if s_max < cfg.tol {
            converged = true;
            break;
        }
        scored.retain(|&(s, _)| s > cfg.tol);
        if scored.is_empty() {
            // s_max sits exactly on the threshold; nothing left to add.
            converged = true;
            break;
        }
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0).then_with(|| {
                let (ca, cb) = (&candidates[a.1], &candidates[b.1]);
                (ca.s, ca.t).cmp(&(cb.s, cb.t))
            })
        });
        scored.truncate(batch);
        let mut chosen: Vec<usize> = scored.iter().map(|&(_, idx)| idx).collect();
        chosen.sort_unstable();

        let new_edges: Vec<Edge> = chosen
            .iter()
            .map(|&idx| {
                let c = &candidates[idx];
                Edge::new(c.s, c.t, m / c.z_data)
            })
            .collect();
        graph = graph.with_added_edges(&new_edges)?;
        edges_added += new_edges.len();
        for &idx in chosen.iter().rev() {
            candidates.swap_remove(idx);
        }
    }
    if candidates.is_empty() {
        converged = true;
    }

    let density = graph.density();
    Ok((
        graph,
        LearnReport {
            iterations: trace.len(),
            s_max_trace: trace,
            edges_added,
            alpha_prime: 1.0,
            converged,
            density,
        },
    ))
}

fn annotate_iteration(e: Error, iteration: usize) -> Error {
    match e {
        Error::EigensolverFailure(msg) => {
            Error::EigensolverFailure(format!("iteration {iteration}: {msg}"))
        }
        other => other,
    }
}

/// Algorithm: start from the MST of the kNN graph; each iteration embeds the
/// current graph, scores the remaining candidates, adds the top batch with
/// positive sensitivity, and stops once no candidate exceeds the threshold.
/// The learned weights are then globally scaled to match measured power
/// dissipation.
pub fn sgl_learn(
    ms: &MeasurementSet,
    pool: &CandidatePool,
    cfg: &SglConfig,
) -> Result<(WeightedGraph, LearnReport)> {
    let (graph, mut report) = sgl_iterations(&ms.x, pool, cfg)?;
    if ms.y.is_some() {
        let (scaled, alpha) = spectral_scale(&graph, ms, &SolverConfig::default())?;
        report.alpha_prime = alpha;
        report.density = scaled.density();
        Ok((scaled, report))
    } else {
        // Voltage-only (reduced-network) input: no dissipation reference, so
        // the graph keeps its unscaled weights.
        Ok((graph, report))
    }
}

/// Global edge scaling: alpha' = (1/M) sum_i (y_i^T x~_i) / (y_i^T x_i)
/// where x~ solves the learned system for each measured current; multiplying
/// every weight by alpha' matches the average power dissipation.
pub fn spectral_scale(
    g_learned: &WeightedGraph,
    ms: &MeasurementSet,
    solver: &SolverConfig,
) -> Result<(WeightedGraph, f64)> {
    let y = ms.y.as_ref().ok_or_else(|| {
        Error::InvalidConfig("spectral scaling needs current measurements".into())
    })?;
    g_learned.require_connected()?;
    ms.x.expect_rows(g_learned.node_count())?;
    let lap = build_laplacian(g_learned);
    let prepared = LaplacianSolver::new(&lap, solver)?;
    let m = ms.x.cols();
    let mut acc = 0.0;
    for col in 0..m {
        let y_col = y.column(col);
        let x_col = ms.x.column(col);
        let denom = dot(&y_col, &x_col);
        if !(denom > 0.0) {
            return Err(Error::InvalidMeasurement {
                column: col,
                value: denom,
            });
        }
        let x_learned = prepared.solve(&y_col)?;
        let numer = dot(&y_col, &x_learned);
        if !(numer > 0.0) {
            return Err(Error::InvalidMeasurement {
                column: col,
                value: numer,
            });
        }
        acc += numer / denom;
    }
    let alpha = acc / m as f64;
    Ok((g_learned.scaled(alpha)?, alpha))
}
