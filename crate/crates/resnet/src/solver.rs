//! Laplacian linear solves: a direct grounded-LDL^T path and a
//! Jacobi-preconditioned conjugate gradient path, both behind one config.

use crate::error::{Error, Result};
use crate::graph::LaplacianView;
use crate::matrix::{axpy, center, dot, norm};
use crate::sparse::{LdltFactor, SymmetricCsr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    DirectFactorization,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullspaceHandling {
    /// Solve against the pseudoinverse: require mean(b) ~ 0, return the
    /// zero-mean solution.
    ProjectMean,
    /// Fix one node at zero and solve the grounded system; b need not be
    /// orthogonal to all-ones (the pinned row absorbs the imbalance).
    PinNode(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative residual target.
    pub tolerance: f64,
    /// Iteration cap for CG; `None` means 10 * N.
    pub max_iterations: Option<usize>,
    pub nullspace: NullspaceHandling,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::DirectFactorization,
            tolerance: 1e-10,
            max_iterations: None,
            nullspace: NullspaceHandling::ProjectMean,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::InvalidConfig(
                "solver tolerance must lie in (0,1)".into(),
            ));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }

    fn max_iter(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n)
    }
}

/// Laplacian of `lap` with the row/column of one pinned node removed,
/// SPD for a connected graph.
fn grounded_csr(lap: &LaplacianView, pin: usize) -> SymmetricCsr {
    let n = lap.node_count();
    debug_assert!(pin < n);
    let reduced = |v: usize| if v < pin { v } else { v - 1 };
    let mut diag = vec![0.0f64; n - 1];
    for v in 0..n {
        if v != pin {
            diag[reduced(v)] = lap.degree()[v];
        }
    }
    let mut upper = Vec::with_capacity(lap.edges().len());
    for e in lap.edges() {
        if e.s == pin || e.t == pin {
            continue;
        }
        let (a, b) = (reduced(e.s), reduced(e.t));
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        upper.push((a, b, -e.w));
    }
    SymmetricCsr::from_upper(n - 1, &diag, &upper)
}

enum Backend {
    Direct(LdltFactor),
    Cg,
}

/// Prepared solver for repeated right-hand sides on one Laplacian.
pub struct LaplacianSolver<'a> {
    lap: &'a LaplacianView,
    cfg: SolverConfig,
    pin: usize,
    backend: Backend,
    diag_inv: Vec<f64>,
}

impl<'a> LaplacianSolver<'a> {
    pub fn new(lap: &'a LaplacianView, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = lap.node_count();
        let pin = match cfg.nullspace {
            NullspaceHandling::PinNode(p) => {
                if p >= n {
                    return Err(Error::InvalidConfig(format!(
                        "pinned node {p} out of range for {n} nodes"
                    )));
                }
                p
            }
            NullspaceHandling::ProjectMean => 0,
        };
        let backend = match cfg.method {
            SolverMethod::DirectFactorization => {
                if n == 1 {
                    Backend::Cg // nothing to factor; solves are trivial below
                } else {
                    Backend::Direct(LdltFactor::new(&grounded_csr(lap, pin))?)
                }
            }
            SolverMethod::ConjugateGradient => Backend::Cg,
        };
        let diag_inv = lap
            .degree()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
            .collect();
        Ok(LaplacianSolver {
            lap,
            cfg: *cfg,
            pin,
            backend,
            diag_inv,
        })
    }

    /// Solve L x = b under the configured nullspace handling. The residual
    /// contract is checked against the effective right-hand side: the
    /// mean-projected b for ProjectMean, the non-pinned rows for PinNode.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lap.node_count();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        if n == 1 {
            return Ok(vec![0.0]);
        }

        let project = matches!(self.cfg.nullspace, NullspaceHandling::ProjectMean);
        let mut rhs = b.to_vec();
        if project {
            let bn0 = norm(b);
            if bn0 == 0.0 {
                return Ok(vec![0.0; n]);
            }
            let mu = b.iter().sum::<f64>() / n as f64;
            if mu.abs() > self.cfg.tolerance * bn0.max(1.0) {
                return Err(Error::InconsistentRhs { mean: mu });
            }
            center(&mut rhs);
        }
        let bn = norm(&rhs);
        if bn == 0.0 {
            return Ok(vec![0.0; n]);
        }

        let mut x = match &self.backend {
            Backend::Direct(factor) => {
                let reduced: Vec<f64> = (0..n).filter(|&v| v != self.pin).map(|v| rhs[v]).collect();
                let xr = factor.solve(&reduced);
                let mut x = vec![0.0f64; n];
                let mut k = 0;
                for (v, slot) in x.iter_mut().enumerate() {
                    if v != self.pin {
                        *slot = xr[k];
                        k += 1;
                    }
                }
                x
            }
            Backend::Cg => self.conjugate_gradient(&rhs, project)?,
        };

        if project {
            center(&mut x);
        }
        let res = self.residual(&x, &rhs, project) / bn;
        if res > self.cfg.tolerance * 10.0 {
            return Err(Error::SolverDiverged {
                iterations: self.cfg.max_iter(n),
                residual: res,
            });
        }
        Ok(x)
    }

    /// Residual of L x = rhs; PinNode mode skips the pinned row, which
    /// absorbs any imbalance by construction.
    fn residual(&self, x: &[f64], rhs: &[f64], project: bool) -> f64 {
        let lx = self.lap.matvec_alloc(x);
        let mut acc = 0.0;
        for i in 0..rhs.len() {
            if !project && i == self.pin {
                continue;
            }
            let d = lx[i] - rhs[i];
            acc += d * d;
        }
        acc.sqrt()
    }

    fn conjugate_gradient(&self, rhs: &[f64], project: bool) -> Result<Vec<f64>> {
        let n = rhs.len();
        if project {
            // Preconditioned CG on the singular Laplacian restricted to the
            // zero-mean subspace.
            let lap = self.lap;
            pcg(
                |v, out| lap.matvec(v, out),
                &self.diag_inv,
                rhs,
                self.cfg.tolerance,
                self.cfg.max_iter(n),
                true,
            )
        } else {
            // Grounded CG: iterate on the reduced SPD system.
            let csr = grounded_csr(self.lap, self.pin);
            let reduced_rhs: Vec<f64> = (0..n)
                .filter(|&v| v != self.pin)
                .map(|v| rhs[v])
                .collect();
            let diag_inv: Vec<f64> = (0..n)
                .filter(|&v| v != self.pin)
                .map(|v| self.diag_inv[v])
                .collect();
            let xr = pcg(
                |v, out| csr.matvec(v, out),
                &diag_inv,
                &reduced_rhs,
                self.cfg.tolerance,
                self.cfg.max_iter(n),
                false,
            )?;
            let mut x = vec![0.0f64; n];
            let mut k = 0;
            for (v, slot) in x.iter_mut().enumerate() {
                if v != self.pin {
                    *slot = xr[k];
                    k += 1;
                }
            }
            Ok(x)
        }
    }
}

/// Jacobi-preconditioned conjugate gradient. With `project`, every residual
/// and preconditioned vector is re-centered so the iteration stays in the
/// range of a singular Laplacian.
pub(crate) fn pcg(
    matvec: impl Fn(&[f64], &mut [f64]),
    diag_inv: &[f64],
    b: &[f64],
    tolerance: f64,
    max_iter: usize,
    project: bool,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0f64; n];
    let mut r = b.to_vec();
    let precond = |r: &[f64]| {
        let mut z: Vec<f64> = r.iter().zip(diag_inv).map(|(ri, di)| ri * di).collect();
        if project {
            center(&mut z);
        }
        z
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0f64; n];

    for iter in 0..max_iter {
        if norm(&r) <= tolerance * bn {
            return Ok(x);
        }
        matvec(&p, &mut ap);
        let denom = dot(&p, &ap);
        if denom <= 0.0 || !denom.is_finite() {
            return Err(Error::SolverDiverged {
                iterations: iter,
                residual: norm(&r) / bn,
            });
        }
        let alpha = rz / denom;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        if project && iter % 32 == 31 {
            center(&mut r);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    let final_res = norm(&r) / bn;
    if final_res <= tolerance {
        Ok(x)
    } else {
        Err(Error::SolverDiverged {
            iterations: max_iter,
            residual: final_res,
        })
    }
}

/// One-shot solve; prefer [`LaplacianSolver`] when reusing the same graph.
pub fn solve_laplacian(lap: &LaplacianView, b: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    LaplacianSolver::new(lap, cfg)?.solve(b)
}
