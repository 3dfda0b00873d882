//! Sparse symmetric positive definite direct solver: greedy minimum-degree
//! ordering and an up-looking LDL^T factorization. Grounded Laplacians of
//! near-tree learned graphs factor with almost no fill, which is what makes
//! repeated eigen-embedding and verification solves cheap.

use crate::error::{Error, Result};

/// Symmetric sparse matrix, full pattern, CSR.
#[derive(Debug, Clone)]
pub struct SymmetricCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricCsr {
    /// Build from strict upper-triangle entries plus an explicit diagonal.
    /// `upper` must contain each pair once with s < t.
    pub fn from_upper(n: usize, diag: &[f64], upper: &[(usize, usize, f64)]) -> Self {
        debug_assert_eq!(diag.len(), n);
        let mut row_ptr = vec![0usize; n + 1];
        for &(s, t, _) in upper {
            debug_assert!(s < t && t < n);
            row_ptr[s + 1] += 1;
            row_ptr[t + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i] + 1; // +1 for the diagonal
        }
        let nnz = row_ptr[n];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut cursor: Vec<usize> = row_ptr[..n].to_vec();
        for i in 0..n {
            col_idx[cursor[i]] = i;
            values[cursor[i]] = diag[i];
            cursor[i] += 1;
        }
        for &(s, t, v) in upper {
            col_idx[cursor[s]] = t;
            values[cursor[s]] = v;
            cursor[s] += 1;
            col_idx[cursor[t]] = s;
            values[cursor[t]] = v;
            cursor[t] += 1;
        }
        let mut m = SymmetricCsr {
            n,
            row_ptr,
            col_idx,
            values,
        };
        m.sort_rows();
        m
    }

    fn sort_rows(&mut self) {
        for i in 0..self.n {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            let mut pairs: Vec<(usize, f64)> = (lo..hi)
                .map(|k| (self.col_idx[k], self.values[k]))
                .collect();
            pairs.sort_unstable_by_key(|&(c, _)| c);
            for (off, (c, v)) in pairs.into_iter().enumerate() {
                self.col_idx[lo + off] = c;
                self.values[lo + off] = v;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (lo..hi).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }
}

/// Greedy exact minimum-degree ordering with explicit fill tracking.
/// Returns `perm` such that elimination order k processes original node
/// `perm[k]`.
pub fn min_degree_order(n: usize, pattern: &SymmetricCsr) -> Vec<usize> {
    use std::collections::{BinaryHeap, HashSet};
    let mut adj: Vec<HashSet<u32>> = vec![HashSet::new(); n];
    for i in 0..n {
        for (j, _) in pattern.row(i) {
            if j != i {
                adj[i].insert(j as u32);
            }
        }
    }
    // Min-heap via Reverse on (degree, node); stale entries skipped lazily.
    let mut heap: BinaryHeap<std::cmp::Reverse<(usize, usize)>> = (0..n)
        .map(|i| std::cmp::Reverse((adj[i].len(), i)))
        .collect();
    let mut eliminated = vec![false; n];
    let mut perm = Vec::with_capacity(n);

    while let Some(std::cmp::Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || adj[v].len() != deg {
            continue;
        }
        eliminated[v] = true;
        perm.push(v);
        let nbrs: Vec<u32> = adj[v].iter().copied().collect();
        for &u in &nbrs {
            adj[u as usize].remove(&(v as u32));
        }
        for a in 0..nbrs.len() {
            for b in (a + 1)..nbrs.len() {
                let (x, y) = (nbrs[a] as usize, nbrs[b] as usize);
                if adj[x].insert(nbrs[b]) {
                    adj[y].insert(nbrs[a]);
                }
            }
        }
        for &u in &nbrs {
            heap.push(std::cmp::Reverse((adj[u as usize].len(), u as usize)));
        }
        adj[v].clear();
        adj[v].shrink_to_fit();
    }
    perm
}

/// LDL^T factors of a permuted SPD matrix.
pub struct LdltFactor {
    n: usize,
    perm: Vec<usize>,    // elimination order: new k -> old node
    col_ptr: Vec<usize>, // CSC of unit lower L (strict)
    row_idx: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
    pub fill_nnz: usize,
}

impl LdltFactor {
    /// Factor A = P^T (L D L^T) P with a fresh minimum-degree permutation.
    pub fn new(a: &SymmetricCsr) -> Result<Self> {
        let perm = min_degree_order(a.n(), a);
        Self::with_permutation(a, perm)
    }

    pub fn with_permutation(a: &SymmetricCsr, perm: Vec<usize>) -> Result<Self> {
        let n = a.n();
        let mut inv_perm = vec![0usize; n];
        for (k, &v) in perm.iter().enumerate() {
            inv_perm[v] = k;
        }

        // Upper-triangular pattern of the permuted matrix, by column:
        // for new column k, entries (new row i < k, value).
        let mut upper_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut diag = vec![0.0f64; n];
        for old_i in 0..n {
            let ni = inv_perm[old_i];
            for (old_j, v) in a.row(old_i) {
                let nj = inv_perm[old_j];
                if ni == nj {
                    diag[ni] = v;
                } else if ni < nj {
                    upper_cols[nj].push((ni, v));
                }
            }
        }

        let mut parent = vec![usize::MAX; n];
        let mut flag = vec![usize::MAX; n];
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n]; // L columns (strict lower)
        let mut d = vec![0.0f64; n];
        let mut x = vec![0.0f64; n];
        let mut reach: Vec<usize> = Vec::new();

        for k in 0..n {
            reach.clear();
            flag[k] = k;
            let mut dk = diag[k];
            for &(i, v) in &upper_cols[k] {
                x[i] = v;
                // Walk up the elimination tree, collecting new reach nodes.
                let mut j = i;
                while flag[j] != k {
                    if parent[j] == usize::MAX {
                        parent[j] = k;
                    }
                    flag[j] = k;
                    reach.push(j);
                    if parent[j] == k {
                        break;
                    }
                    j = parent[j];
                }
            }
            reach.sort_unstable();

            for &j in &reach {
                let yj = x[j];
                x[j] = 0.0;
                if yj == 0.0 {
                    continue;
                }
                let lkj = yj / d[j];
                dk -= yj * lkj;
                // Scatter updates into later reach rows.
                for &(r, lrj) in &cols[j] {
                    x[r] -= lrj * yj;
                }
                if lkj != 0.0 {
                    cols[j].push((k, lkj));
                }
            }
            if !(dk > 0.0) || !dk.is_finite() {
                return Err(Error::Factorization(format!(
                    "non-positive pivot {dk:.3e} at elimination step {k}; matrix not SPD"
                )));
            }
            d[k] = dk;
        }

        // Flatten to CSC. Row indices in each column are already ascending
        // because rows k were appended in elimination order.
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + cols[j].len();
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut l_values = vec![0.0f64; nnz];
        for j in 0..n {
            for (off, &(r, v)) in cols[j].iter().enumerate() {
                row_idx[col_ptr[j] + off] = r;
                l_values[col_ptr[j] + off] = v;
            }
        }

        Ok(LdltFactor {
            n,
            perm,
            col_ptr,
            row_idx,
            l_values,
            d,
            fill_nnz: nnz,
        })
    }

    /// Solve A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut y = vec![0.0f64; self.n];
        for k in 0..self.n {
            y[k] = b[self.perm[k]];
        }
        // L y' = y
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                    y[self.row_idx[k]] -= self.l_values[k] * yj;
                }
            }
        }
        // D
        for k in 0..self.n {
            y[k] /= self.d[k];
        }
        // L^T x' = y
        for j in (0..self.n).rev() {
            let mut acc = y[j];
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc -= self.l_values[k] * y[self.row_idx[k]];
            }
            y[j] = acc;
        }
        // Un-permute.
        let mut x = vec![0.0f64; self.n];
        for k in 0..self.n {
            x[self.perm[k]] = y[k];
        }
        x
    }

    pub fn n(&self) -> usize {
        self.n
    }
}
