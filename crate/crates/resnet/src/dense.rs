//! Dense symmetric eigensolver kernels used below the sparse cutoff:
//! Householder tridiagonalization, implicit-shift QL for eigenvalues, and
//! tridiagonal inverse iteration for selected eigenvectors.

use crate::error::{Error, Result};
use crate::graph::LaplacianView;
use crate::matrix::Matrix;

/// Assemble the full dense Laplacian (test oracles and the dense eigen path).
pub fn dense_laplacian(lap: &LaplacianView) -> Matrix {
    let n = lap.node_count();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a.set(i, i, lap.degree()[i]);
    }
    for e in lap.edges() {
        a.set(e.s, e.t, -e.w);
        a.set(e.t, e.s, -e.w);
    }
    a
}

/// Householder reflectors captured during tridiagonalization, so selected
/// eigenvectors can be transformed back without accumulating the full Q.
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
    reflectors: Vec<(usize, Vec<f64>, f64)>, // (offset, v, tau) with H = I - tau v v^T
}

/// Reduce a symmetric matrix to tridiagonal form, destroying `a`.
pub fn tridiagonalize(mut a: Matrix) -> Tridiagonal {
    let n = a.rows();
    let mut diag = vec![0.0; n];
    let mut sub = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::new();

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut x = vec![0.0; m];
        for i in 0..m {
            x[i] = a.get(k + 1 + i, k);
        }
        let sigma = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sigma == 0.0 {
            sub[k] = 0.0;
            continue;
        }
        let alpha = if x[0] >= 0.0 { -sigma } else { sigma };
        let mut v = x;
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|z| z * z).sum();
        if vnorm_sq == 0.0 {
            sub[k] = alpha;
            continue;
        }
        let tau = 2.0 / vnorm_sq;

        // B <- H B H on the trailing block, via the symmetric rank-2 update
        // B - v w^T - w v^T with w = tau(Bv) - (tau^2/2)(v^T B v) v.
        let mut bv = vec![0.0; m];
        for i in 0..m {
            let row = a.row(k + 1 + i);
            let mut acc = 0.0;
            for j in 0..m {
                acc += row[k + 1 + j] * v[j];
            }
            bv[i] = acc;
        }
        let vbv: f64 = v.iter().zip(&bv).map(|(x, y)| x * y).sum();
        let mut w = vec![0.0; m];
        for i in 0..m {
            w[i] = tau * bv[i] - 0.5 * tau * tau * vbv * v[i];
        }
        for i in 0..m {
            for j in 0..m {
                let upd = v[i] * w[j] + w[i] * v[j];
                let cur = a.get(k + 1 + i, k + 1 + j);
                a.set(k + 1 + i, k + 1 + j, cur - upd);
            }
        }

        sub[k] = alpha;
        reflectors.push((k + 1, v, tau));
    }
    if n >= 2 {
        sub[n - 2] = a.get(n - 1, n - 2);
    }
    for i in 0..n {
        diag[i] = a.get(i, i);
    }
    Tridiagonal {
        diag,
        sub,
        reflectors,
    }
}

impl Tridiagonal {
    /// z <- Q z where Q is the accumulated Householder product.
    pub fn apply_q(&self, z: &mut [f64]) {
        for (offset, v, tau) in self.reflectors.iter().rev() {
            let seg = &mut z[*offset..*offset + v.len()];
            let dot: f64 = v.iter().zip(seg.iter()).map(|(a, b)| a * b).sum();
            for (zi, vi) in seg.iter_mut().zip(v) {
                *zi -= tau * dot * vi;
            }
        }
    }
}

/// All eigenvalues of a symmetric tridiagonal matrix (implicit-shift QL),
/// returned ascending.
pub fn tridiag_eigenvalues(diag: &[f64], sub: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(sub);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::EigensolverFailure(
                    "QL iteration did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

/// Eigenvector of the tridiagonal for a given eigenvalue via inverse
/// iteration; near-degenerate ones are orthogonalized against `prior`
/// vectors from the same cluster.
pub fn tridiag_eigenvector(
    diag: &[f64],
    sub: &[f64],
    lambda: f64,
    prior: &[&[f64]],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let norm_t = diag
        .iter()
        .map(|v| v.abs())
        .chain(sub.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max)
        .max(1.0);
    // Deterministic pseudo-random start vector.
    let mut v: Vec<f64> = (0..n)
        .map(|i| {
            let h = (i as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15);
            ((h >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect();
    orthogonalize(&mut v, prior);
    normalize(&mut v)?;

    // A slightly perturbed shift keeps the solve nonsingular for exact
    // eigenvalues of clusters.
    let shift = lambda + (prior.len() as f64) * 8.0 * f64::EPSILON * norm_t;
    for _ in 0..4 {
        let mut w = solve_shifted_tridiag(diag, sub, shift, &v);
        orthogonalize(&mut w, prior);
        normalize(&mut w)?;
        v = w;
    }
    Ok(v)
}

fn orthogonalize(v: &mut [f64], prior: &[&[f64]]) {
    for p in prior {
        let dot: f64 = v.iter().zip(p.iter()).map(|(a, b)| a * b).sum();
        for (vi, pi) in v.iter_mut().zip(p.iter()) {
            *vi -= dot * pi;
        }
    }
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::EigensolverFailure(
            "inverse iteration produced a zero vector".into(),
        ));
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(())
}

/// Solve (T - shift I) x = b, LU with partial pivoting (two superdiagonals
/// of fill). Near-zero pivots are perturbed; inverse iteration only needs a
/// direction, not an accurate solve.
fn solve_shifted_tridiag(diag: &[f64], sub: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let floor = f64::EPSILON
        * diag
            .iter()
            .chain(sub.iter())
            .map(|v| v.abs())
            .fold(1.0f64, f64::max);
    let guard = |p: f64| {
        if p.abs() < floor {
            floor.copysign(if p == 0.0 { 1.0 } else { p })
        } else {
            p
        }
    };
    if n == 1 {
        return vec![b[0] / guard(diag[0] - shift)];
    }

    let mut d: Vec<f64> = diag.iter().map(|&v| v - shift).collect();
    let mut du = sub.to_vec(); // superdiagonal (symmetric input)
    let mut dl = sub.to_vec(); // subdiagonal, becomes multipliers
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n - 1];

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let fact = dl[i] / guard(d[i]);
            d[i] = guard(d[i]);
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
            swapped[i] = true;
        }
    }
    d[n - 1] = guard(d[n - 1]);

    let mut x = b.to_vec();
    for i in 0..n - 1 {
        if swapped[i] {
            let temp = x[i];
            x[i] = x[i + 1];
            x[i + 1] = temp - dl[i] * x[i];
        } else {
            x[i + 1] -= dl[i] * x[i];
        }
    }
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}

/// Cyclic Jacobi eigensolver for small symmetric matrices (Rayleigh-Ritz
/// blocks). Returns ascending eigenvalues and eigenvectors as columns.
pub fn jacobi_eigh(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows();
    let mut d = a.clone();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += d.get(i, j).abs();
            }
        }
        if off <= 1e-14 * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = d.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = d.get(p, p);
                let aqq = d.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let dip = d.get(i, p);
                    let diq = d.get(i, q);
                    d.set(i, p, c * dip - s * diq);
                    d.set(i, q, s * dip + c * diq);
                }
                for j in 0..n {
                    let dpj = d.get(p, j);
                    let dqj = d.get(q, j);
                    d.set(p, j, c * dpj - s * dqj);
                    d.set(q, j, s * dpj + c * dqj);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d.get(i, i).total_cmp(&d.get(j, j)));
    let values: Vec<f64> = order.iter().map(|&i| d.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, col, v.get(i, idx));
        }
    }
    (values, vectors)
}
