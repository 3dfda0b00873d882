//! Truncated Laplacian eigendecomposition: the first nontrivial eigenpairs
//! via a dense tridiagonal path below a size cutoff and shift-inverted
//! subspace iteration (factorized solves) above it. The trivial pair
//! (lambda=0, constant vector) is always excluded.

use crate::dense;
use crate::error::{Error, Result};
use crate::graph::LaplacianView;
use crate::matrix::{center, dot, norm, Matrix};
use crate::rng::Rng;
use crate::solver::{LaplacianSolver, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    /// Number of nontrivial eigenpairs requested.
    pub r: usize,
    /// Forced method; `None` selects by `dense_cutoff`.
    pub method: Option<EigenMethod>,
    pub dense_cutoff: usize,
    /// Relative residual target per pair.
    pub tolerance: f64,
    /// Subspace-iteration step cap.
    pub max_iterations: usize,
    /// Seed for the iterative start block.
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            r: 5,
            method: None,
            dense_cutoff: 2000,
            tolerance: 1e-8,
            max_iterations: 600,
            seed: 0x5eed,
        }
    }
}

impl EigenConfig {
    pub fn with_r(r: usize) -> Self {
        EigenConfig {
            r,
            ..Default::default()
        }
    }

    fn effective_method(&self, n: usize) -> EigenMethod {
        self.method.unwrap_or(if n <= self.dense_cutoff {
            EigenMethod::Dense
        } else {
            EigenMethod::Iterative
        })
    }
}

/// Eigenvalues lambda_2..lambda_{r+1} (ascending) and matching orthonormal
/// eigenvectors, all orthogonal to the all-ones vector.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn eigen_pairs(lap: &LaplacianView, cfg: &EigenConfig) -> Result<EigenPairs> {
    let n = lap.node_count();
    if cfg.r == 0 || cfg.r > n.saturating_sub(1) {
        return Err(Error::InvalidConfig(format!(
            "r = {} out of range for {} nodes",
            cfg.r, n
        )));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidConfig("eigen tolerance must be > 0".into()));
    }
    lap.require_connected()?;
    match cfg.effective_method(n) {
        EigenMethod::Dense => dense_pairs(lap, cfg),
        EigenMethod::Iterative => iterative_pairs(lap, cfg),
    }
}

/// Values-only variant; the dense path skips eigenvector work entirely.
pub fn smallest_nonzero_eigenvalues(
    lap: &LaplacianView,
    k: usize,
    cfg: &EigenConfig,
) -> Result<Vec<f64>> {
    let n = lap.node_count();
    if k == 0 || k > n.saturating_sub(1) {
        return Err(Error::InvalidConfig(format!(
            "k = {k} out of range for {n} nodes"
        )));
    }
    lap.require_connected()?;
    match cfg.effective_method(n) {
        EigenMethod::Dense => {
            let tri = dense::tridiagonalize(dense::dense_laplacian(lap));
            let vals = dense::tridiag_eigenvalues(&tri.diag, &tri.sub)?;
            Ok(vals[1..=k].to_vec())
        }
        EigenMethod::Iterative => {
            let sub_cfg = EigenConfig { r: k, ..*cfg };
            Ok(iterative_pairs(lap, &sub_cfg)?.values)
        }
    }
}

/// Spectral drawing coordinates: u_2 as x, u_3 as y.
pub fn spectral_layout(lap: &LaplacianView) -> Result<Matrix> {
    let n = lap.node_count();
    if n < 3 {
        return Err(Error::InvalidConfig(
            "spectral layout needs at least 3 nodes".into(),
        ));
    }
    let pairs = eigen_pairs(lap, &EigenConfig::with_r(2))?;
    let mut coords = Matrix::zeros(n, 2);
    for i in 0..n {
        coords.set(i, 0, pairs.vectors[0][i]);
        coords.set(i, 1, pairs.vectors[1][i]);
    }
    Ok(coords)
}

fn gershgorin_bound(lap: &LaplacianView) -> f64 {
    lap.degree().iter().fold(0.0f64, |a, &d| a.max(2.0 * d)).max(1.0)
}

fn dense_pairs(lap: &LaplacianView, cfg: &EigenConfig) -> Result<EigenPairs> {
    let n = lap.node_count();
    let tri = dense::tridiagonalize(dense::dense_laplacian(lap));
    let vals = dense::tridiag_eigenvalues(&tri.diag, &tri.sub)?;
    let lam_max = vals[n - 1].abs().max(1.0);
    let cluster_eps = lam_max * n as f64 * 1e-14;

    let targets = &vals[1..=cfg.r];
    let mut tri_vectors: Vec<Vec<f64>> = Vec::with_capacity(cfg.r);
    let mut cluster_start = 0usize;
    for (i, &lambda) in targets.iter().enumerate() {
        if i > 0 && (lambda - targets[i - 1]).abs() > cluster_eps {
            cluster_start = i;
        }
        let prior: Vec<&[f64]> = tri_vectors[cluster_start..i]
            .iter()
            .map(|v| v.as_slice())
            .collect();
        tri_vectors.push(dense::tridiag_eigenvector(
            &tri.diag, &tri.sub, lambda, &prior,
        )?);
    }

    let mut vectors = Vec::with_capacity(cfg.r);
    for mut v in tri_vectors {
        tri.apply_q(&mut v);
        vectors.push(v);
    }
    finalize_pairs(lap, targets.to_vec(), vectors, cfg.tolerance, lam_max)
}

fn iterative_pairs(lap: &LaplacianView, cfg: &EigenConfig) -> Result<EigenPairs> {
    let n = lap.node_count();
    let extra = (cfg.r / 2).clamp(4, 30);
    let block = (cfg.r + extra).min(n - 1);
    let lam_max = gershgorin_bound(lap);
    let floor = lam_max * n as f64 * f64::EPSILON;

    let solver = LaplacianSolver::new(lap, &SolverConfig::default())?;

    // Seeded start block, orthogonal to all-ones.
    let mut v: Vec<Vec<f64>> = (0..block)
        .map(|j| {
            let mut rng = Rng::stream(cfg.seed, j as u64);
            let mut col: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            center(&mut col);
            col
        })
        .collect();
    orthonormalize(&mut v)?;

    let mut last_values = vec![f64::NAN; cfg.r];
    for _step in 0..cfg.max_iterations {
        // Apply the pseudoinverse to the whole block.
        let mut w = Vec::with_capacity(block);
        for col in &v {
            let mut x = solver.solve(col)?;
            center(&mut x);
            w.push(x);
        }
        orthonormalize(&mut w)?;
        v = w;

        // Rayleigh-Ritz on the current subspace.
        let lv: Vec<Vec<f64>> = v.iter().map(|col| lap.matvec_alloc(col)).collect();
        let mut s = Matrix::zeros(block, block);
        for i in 0..block {
            for j in i..block {
                let val = dot(&v[i], &lv[j]);
                s.set(i, j, val);
                s.set(j, i, val);
            }
        }
        let (theta, z) = dense::jacobi_eigh(&s);
        v = rotate(&v, &z);
        let lv = rotate(&lv, &z);

        // Residual check on the leading r Ritz pairs.
        let mut done = true;
        for i in 0..cfg.r {
            let mut res = 0.0;
            for k in 0..n {
                let d = lv[i][k] - theta[i] * v[i][k];
                res += d * d;
            }
            let res = res.sqrt();
            if res > cfg.tolerance * theta[i].max(floor) {
                done = false;
                break;
            }
        }
        last_values.copy_from_slice(&theta[..cfg.r]);
        if done {
            let values = theta[..cfg.r].to_vec();
            let vectors = v.into_iter().take(cfg.r).collect();
            return finalize_pairs(lap, values, vectors, cfg.tolerance, lam_max);
        }
    }
    Err(Error::EigensolverFailure(format!(
        "subspace iteration did not reach tolerance {} in {} steps (current values {:?})",
        cfg.tolerance, cfg.max_iterations, last_values
    )))
}

/// Common cleanup: project out all-ones, re-orthonormalize, verify residuals.
fn finalize_pairs(
    lap: &LaplacianView,
    values: Vec<f64>,
    mut vectors: Vec<Vec<f64>>,
    tolerance: f64,
    lam_max: f64,
) -> Result<EigenPairs> {
    let n = lap.node_count();
    for v in vectors.iter_mut() {
        center(v);
    }
    orthonormalize(&mut vectors)?;
    let floor = lam_max * n as f64 * f64::EPSILON;
    for (i, (v, &lambda)) in vectors.iter().zip(&values).enumerate() {
        let lv = lap.matvec_alloc(v);
        let mut res = 0.0;
        for k in 0..n {
            let d = lv[k] - lambda * v[k];
            res += d * d;
        }
        let res = res.sqrt();
        if res > 10.0 * tolerance * lambda.max(floor) {
            return Err(Error::EigensolverFailure(format!(
                "pair {i} (lambda = {lambda:.6e}) residual {res:.3e} exceeds target"
            )));
        }
    }
    Ok(EigenPairs { values, vectors })
}

fn orthonormalize(cols: &mut [Vec<f64>]) -> Result<()> {
    for i in 0..cols.len() {
        for j in 0..i {
            let (head, tail) = cols.split_at_mut(i);
            let d = dot(&head[j], &tail[0]);
            for (t, h) in tail[0].iter_mut().zip(&head[j]) {
                *t -= d * h;
            }
        }
        let nrm = norm(&cols[i]);
        if nrm < 1e-300 {
            return Err(Error::EigensolverFailure(
                "orthonormalization produced a zero column".into(),
            ));
        }
        let inv = 1.0 / nrm;
        for x in cols[i].iter_mut() {
            *x *= inv;
        }
    }
    Ok(())
}

fn rotate(cols: &[Vec<f64>], z: &Matrix) -> Vec<Vec<f64>> {
    let n = cols[0].len();
    let b = cols.len();
    let mut out = vec![vec![0.0f64; n]; b];
    for (new_k, out_col) in out.iter_mut().enumerate() {
        for (j, col) in cols.iter().enumerate() {
            let zjk = z.get(j, new_k);
            if zjk != 0.0 {
                for i in 0..n {
                    out_col[i] += zjk * col[i];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_laplacian, WeightedGraph};

    #[test]
    fn single_edge_pair() {
        let g = WeightedGraph::from_tuples(2, &[(0, 1, 1.0)]).unwrap();
        let lap = build_laplacian(&g);
        let p = eigen_pairs(&lap, &EigenConfig::with_r(1)).unwrap();
        assert!((p.values[0] - 2.0).abs() < 1e-10);
        let u = &p.vectors[0];
        let expected = 1.0 / 2.0f64.sqrt();
        assert!((u[0].abs() - expected).abs() < 1e-10);
        assert!((u[0] + u[1]).abs() < 1e-10);
    }

    #[test]
    fn complete_graph_k4_triple() {
        let g = WeightedGraph::from_tuples(
            4,
            &[
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        let lap = build_laplacian(&g);
        let p = eigen_pairs(&lap, &EigenConfig::with_r(3)).unwrap();
        for v in &p.values {
            assert!((v - 4.0).abs() < 1e-9, "value {v}");
        }
    }

    #[test]
    fn cycle_c8_fiedler_value() {
        let edges: Vec<(usize, usize, f64)> =
            (0..8).map(|i| (i, (i + 1) % 8, 1.0)).collect();
        let g = WeightedGraph::from_tuples(8, &edges).unwrap();
        let lap = build_laplacian(&g);
        let p = eigen_pairs(&lap, &EigenConfig::with_r(2)).unwrap();
        let expected = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 8.0).cos();
        assert!((p.values[0] - expected).abs() < 1e-9);
        assert!((p.values[1] - expected).abs() < 1e-9); // degenerate pair
    }

    #[test]
    fn iterative_matches_dense() {
        // Small 2D grid, solved both ways.
        let mut edges = Vec::new();
        let (a, b) = (6usize, 7usize);
        let id = |i: usize, j: usize| i * b + j;
        for i in 0..a {
            for j in 0..b {
                if i + 1 < a {
                    edges.push((id(i, j), id(i + 1, j), 1.0));
                }
                if j + 1 < b {
                    edges.push((id(i, j), id(i, j + 1), 1.0));
                }
            }
        }
        let g = WeightedGraph::from_tuples(a * b, &edges).unwrap();
        let lap = build_laplacian(&g);
        let dense_p = eigen_pairs(
            &lap,
            &EigenConfig {
                method: Some(EigenMethod::Dense),
                ..EigenConfig::with_r(5)
            },
        )
        .unwrap();
        let iter_p = eigen_pairs(
            &lap,
            &EigenConfig {
                method: Some(EigenMethod::Iterative),
                ..EigenConfig::with_r(5)
            },
        )
        .unwrap();
        for (d, i) in dense_p.values.iter().zip(&iter_p.values) {
            assert!((d - i).abs() < 1e-7 * d.max(1.0), "dense {d} vs iter {i}");
        }
    }

    #[test]
    fn vectors_orthonormal_and_mean_free() {
        let edges: Vec<(usize, usize, f64)> = (0..19).map(|i| (i, i + 1, 1.0)).collect();
        let g = WeightedGraph::from_tuples(20, &edges).unwrap();
        let lap = build_laplacian(&g);
        let p = eigen_pairs(&lap, &EigenConfig::with_r(4)).unwrap();
        for i in 0..4 {
            let s: f64 = p.vectors[i].iter().sum();
            assert!(s.abs() < 1e-8 * (20f64).sqrt());
            for j in 0..4 {
                let d = dot(&p.vectors[i], &p.vectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn layout_path_monotone() {
        let edges: Vec<(usize, usize, f64)> = (0..9).map(|i| (i, i + 1, 1.0)).collect();
        let g = WeightedGraph::from_tuples(10, &edges).unwrap();
        let lap = build_laplacian(&g);
        let coords = spectral_layout(&lap).unwrap();
        let xs: Vec<f64> = (0..10).map(|i| coords.get(i, 0)).collect();
        let increasing = xs.windows(2).all(|w| w[1] > w[0]);
        let decreasing = xs.windows(2).all(|w| w[1] < w[0]);
        assert!(increasing || decreasing, "Fiedler ordering: {xs:?}");
    }

    #[test]
    fn cycle_layout_lies_on_ellipse() {
        // C_12 eigenvectors for the degenerate Fiedler pair are sinusoids;
        // any orthonormal basis of that plane maps the cycle onto an
        // origin-centered ellipse. Fit a conic through three points and
        // check the rest satisfy it.
        let edges: Vec<(usize, usize, f64)> =
            (0..12).map(|i| (i, (i + 1) % 12, 1.0)).collect();
        let g = WeightedGraph::from_tuples(12, &edges).unwrap();
        let coords = spectral_layout(&build_laplacian(&g)).unwrap();
        let p = |i: usize| (coords.get(i, 0), coords.get(i, 1));
        // solve A x^2 + B xy + C y^2 = 1 from three well-spread points
        let rows = [p(0), p(3), p(7)];
        let mut m = [[0.0f64; 3]; 3];
        for (r, &(x, y)) in rows.iter().enumerate() {
            m[r] = [x * x, x * y, y * y];
        }
        let det = |m: &[[f64; 3]; 3]| -> f64 {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(&m);
        assert!(d.abs() > 1e-12, "degenerate fit points");
        let solve_col = |col: usize| -> f64 {
            let mut mm = m;
            for r in 0..3 {
                mm[r][col] = 1.0;
            }
            det(&mm) / d
        };
        let (a, b, c) = (solve_col(0), solve_col(1), solve_col(2));
        assert!(b * b - 4.0 * a * c < 0.0, "conic is not an ellipse");
        for i in 0..12 {
            let (x, y) = p(i);
            let v = a * x * x + b * x * y + c * y * y;
            assert!((v - 1.0).abs() < 1e-6, "node {i}: conic value {v}");
        }
    }

    #[test]
    fn disconnected_rejected() {
        let g = WeightedGraph::from_tuples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let lap = build_laplacian(&g);
        assert!(matches!(
            eigen_pairs(&lap, &EigenConfig::with_r(1)),
            Err(Error::Disconnected { .. })
        ));
    }
}
