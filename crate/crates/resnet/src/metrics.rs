//! Learned-vs-original quality metrics: average relative eigenvalue error
//! over the first k nonzero pairs, average relative effective-resistance
//! error over sampled node pairs, densities, and optional objectives.

use crate::eigen::{smallest_nonzero_eigenvalues, EigenConfig};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, objective_value, PrecisionParams, WeightedGraph};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::solver::{LaplacianSolver, SolverConfig};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub err_lambda: f64,
    pub err_resistance: f64,
    pub density_original: f64,
    pub density_learned: f64,
    pub objective_original: Option<f64>,
    pub objective_learned: Option<f64>,
    pub eig_count: usize,
    pub pair_count: usize,
    /// (index, original, learned) eigenvalue triples for plotting.
    pub eigenvalues: Vec<(usize, f64, f64)>,
}

/// Average relative errors between a ground-truth graph and a learned graph.
/// Eigenvalue error uses the first `eig_count` nonzero eigenvalues (clamped
/// to N-1); resistance error uses `pair_count` uniformly sampled distinct
/// pairs. Passing measurements additionally records both objectives.
pub fn compute_metrics(
    g_true: &WeightedGraph,
    g_learned: &WeightedGraph,
    eig_count: usize,
    pair_count: usize,
    seed: u64,
    measurements: Option<&Matrix>,
) -> Result<MetricsReport> {
    let n = g_true.node_count();
    if g_learned.node_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: g_learned.node_count(),
        });
    }
    g_true.require_connected()?;
    g_learned.require_connected()?;
    if eig_count == 0 || pair_count == 0 {
        return Err(Error::InvalidConfig(
            "eig_count and pair_count must be >= 1".into(),
        ));
    }

    let k = eig_count.min(n - 1);
    let eig_cfg = EigenConfig::default();
    let lap_true = build_laplacian(g_true);
    let lap_learned = build_laplacian(g_learned);
    let vals_true = smallest_nonzero_eigenvalues(&lap_true, k, &eig_cfg)?;
    let vals_learned = smallest_nonzero_eigenvalues(&lap_learned, k, &eig_cfg)?;
    let err_lambda = vals_true
        .iter()
        .zip(&vals_learned)
        .map(|(t, l)| (l - t).abs() / t)
        .sum::<f64>()
        / k as f64;
    let eigenvalues = vals_true
        .iter()
        .zip(&vals_learned)
        .enumerate()
        .map(|(i, (t, l))| (i + 2, *t, *l))
        .collect();

    // Effective resistances on shared sampled pairs, one factorization per
    // graph.
    let solver_cfg = SolverConfig::default();
    let solver_true = LaplacianSolver::new(&lap_true, &solver_cfg)?;
    let solver_learned = LaplacianSolver::new(&lap_learned, &solver_cfg)?;
    let mut rng = Rng::stream(seed, 0xE0);
    let mut pairs = std::collections::BTreeSet::new();
    let total_pairs = n * (n - 1) / 2;
    let want = pair_count.min(total_pairs);
    while pairs.len() < want {
        let s = rng.below(n);
        let t = rng.below(n);
        if s != t {
            pairs.insert((s.min(t), s.max(t)));
        }
    }
    let mut err_resistance = 0.0;
    let mut b = vec![0.0f64; n];
    for &(s, t) in &pairs {
        b[s] = 1.0;
        b[t] = -1.0;
        let xt = solver_true.solve(&b)?;
        let xl = solver_learned.solve(&b)?;
        b[s] = 0.0;
        b[t] = 0.0;
        let rt = xt[s] - xt[t];
        let rl = xl[s] - xl[t];
        err_resistance += (rl - rt).abs() / rt;
    }
    err_resistance /= want as f64;

    let (objective_original, objective_learned) = match measurements {
        Some(x) => {
            let params = PrecisionParams {
                eig_budget: k,
                ..Default::default()
            };
            (
                Some(objective_value(g_true, x, &params)?),
                Some(objective_value(g_learned, x, &params)?),
            )
        }
        None => (None, None),
    };

    Ok(MetricsReport {
        err_lambda,
        err_resistance,
        density_original: g_true.density(),
        density_learned: g_learned.density(),
        objective_original,
        objective_learned,
        eig_count: k,
        pair_count: want,
        eigenvalues,
    })
}
