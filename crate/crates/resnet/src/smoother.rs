//! Solver-free local embedding: seeded random vectors smoothed by
//! Gauss-Seidel relaxation on L b = 0. Smoothing low-pass filters each
//! vector toward the small end of the spectrum, so the columns behave like
//! an inexpensive stand-in for the leading eigenvectors.

use crate::error::{Error, Result};
use crate::graph::LaplacianView;
use crate::matrix::{center, norm, Matrix};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy)]
pub struct SmootherConfig {
    /// Embedding dimension (number of smoothed vectors).
    pub k: usize,
    /// Gauss-Seidel sweeps; each sweep is forward then backward.
    pub sweeps: usize,
    pub seed: u64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            k: 5,
            sweeps: 10,
            seed: 0x60a55,
        }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("smoother k must be >= 1".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidConfig("smoother sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// One symmetric Gauss-Seidel sweep on L x = 0: ascending node order, then
/// descending. Each update replaces x(v) by the weighted neighbor average,
/// strictly in place (the ordering is part of the contract).
pub fn gauss_seidel_sweep(lap: &LaplacianView, x: &mut [f64]) {
    let adj = lap.adjacency();
    let deg = lap.degree();
    let n = lap.node_count();
    for v in 0..n {
        if deg[v] > 0.0 {
            let mut acc = 0.0;
            for &(u, w) in adj.neighbors(v) {
                acc += w * x[u];
            }
            x[v] = acc / deg[v];
        }
    }
    for v in (0..n).rev() {
        if deg[v] > 0.0 {
            let mut acc = 0.0;
            for &(u, w) in adj.neighbors(v) {
                acc += w * x[u];
            }
            x[v] = acc / deg[v];
        }
    }
}

/// N x K embedding: seeded random columns, orthogonalized to all-ones and
/// unit-normalized, smoothed by `sweeps` Gauss-Seidel sweeps on L b = 0,
/// then re-orthogonalized to all-ones.
pub fn smooth_embedding(lap: &LaplacianView, cfg: &SmootherConfig) -> Result<Matrix> {
    cfg.validate()?;
    lap.require_connected()?;
    let n = lap.node_count();
    let mut out = Matrix::zeros(n, cfg.k);
    for j in 0..cfg.k {
        let mut rng = Rng::stream(cfg.seed, j as u64);
        let mut col: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        center(&mut col);
        let nrm = norm(&col);
        if nrm > 0.0 {
            for v in col.iter_mut() {
                *v /= nrm;
            }
        }
        for _ in 0..cfg.sweeps {
            gauss_seidel_sweep(lap, &mut col);
        }
        center(&mut col);
        for i in 0..n {
            out.set(i, j, col[i]);
        }
    }
    Ok(out)
}
