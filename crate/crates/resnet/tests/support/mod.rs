//! Shared helpers and independent oracle implementations for integration
//! tests. Everything in `oracle` is deliberately written from scratch
//! (dense loops, Jacobi rotations, Prim, simplex) so it shares no code path
//! with the library it checks.

#![allow(dead_code)]

use resnet::graph::{Edge, WeightedGraph};
use resnet::rng::Rng;

/// Random connected graph: a random spanning tree plus extra random edges,
/// weights in (0.1, 1.1).
pub fn random_connected_graph(n: usize, extra: usize, rng: &mut Rng) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.below(i), i, 0.1 + rng.uniform()));
    }
    let mut have: std::collections::BTreeSet<(usize, usize)> =
        edges.iter().map(|&(s, t, _)| (s.min(t), s.max(t))).collect();
    let mut added = 0;
    let mut guard = 0;
    while added < extra && guard < 50 * extra + 100 {
        guard += 1;
        let s = rng.below(n);
        let t = rng.below(n);
        if s != t && have.insert((s.min(t), s.max(t))) {
            edges.push((s.min(t), s.max(t), 0.1 + rng.uniform()));
            added += 1;
        }
    }
    WeightedGraph::from_tuples(n, &edges).unwrap()
}

pub mod oracle {
    use super::*;
    use resnet::matrix::Matrix;
    use resnet::sparse::SymmetricCsr;
    use resnet::verify::{Budget, CurrentConstraints};
    use std::collections::{BTreeSet, HashMap};

    pub fn norm_inf(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// D - W assembled with independent dense loops.
    pub fn dense_laplacian_by_loops(g: &WeightedGraph) -> Vec<Vec<f64>> {
        let n = g.node_count();
        let mut w = vec![vec![0.0f64; n]; n];
        for e in g.edges() {
            w[e.s][e.t] = e.w;
            w[e.t][e.s] = e.w;
        }
        let mut l = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            let deg: f64 = w[i].iter().sum();
            for j in 0..n {
                l[i][j] = if i == j { deg } else { -w[i][j] };
            }
        }
        l
    }

    pub fn dense_quadratic_form(g: &WeightedGraph, x: &[f64]) -> f64 {
        let l = dense_laplacian_by_loops(g);
        let n = x.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += x[i] * l[i][j] * x[j];
            }
        }
        acc
    }

    /// Cyclic Jacobi eigensolver over a dense symmetric matrix; returns
    /// ascending eigenvalues and (optionally used) eigenvectors as columns.
    pub fn jacobi(a_in: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = a_in.len();
        let mut a: Vec<Vec<f64>> = a_in.to_vec();
        let mut v = vec![vec![0.0f64; n]; n];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for _sweep in 0..200 {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a[i][j].abs());
                }
            }
            if off < 1e-13 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p][q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for i in 0..n {
                        let aip = a[i][p];
                        let aiq = a[i][q];
                        a[i][p] = c * aip - s * aiq;
                        a[i][q] = s * aip + c * aiq;
                    }
                    for j in 0..n {
                        let apj = a[p][j];
                        let aqj = a[q][j];
                        a[p][j] = c * apj - s * aqj;
                        a[q][j] = s * apj + c * aqj;
                    }
                    for i in 0..n {
                        let vip = v[i][p];
                        let viq = v[i][q];
                        v[i][p] = c * vip - s * viq;
                        v[i][q] = s * vip + c * viq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
        let values: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
        let mut vectors = vec![vec![0.0f64; n]; n];
        for (col, &idx) in order.iter().enumerate() {
            for i in 0..n {
                vectors[i][col] = v[i][idx];
            }
        }
        (values, vectors)
    }

    pub fn jacobi_eigenvalues(g: &WeightedGraph) -> Vec<f64> {
        jacobi(&dense_laplacian_by_loops(g)).0
    }

    pub fn jacobi_eigenvalues_csr(m: &SymmetricCsr) -> Vec<f64> {
        let n = m.n();
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for (j, v) in m.row(i) {
                dense[i][j] = v;
            }
        }
        jacobi(&dense).0
    }

    /// Moore-Penrose pseudoinverse of the Laplacian via Jacobi eigenpairs.
    pub fn pseudoinverse(g: &WeightedGraph) -> Vec<Vec<f64>> {
        let n = g.node_count();
        let (vals, vecs) = jacobi(&dense_laplacian_by_loops(g));
        let mut pinv = vec![vec![0.0f64; n]; n];
        for k in 0..n {
            if vals[k].abs() < 1e-9 {
                continue;
            }
            let inv = 1.0 / vals[k];
            for i in 0..n {
                for j in 0..n {
                    pinv[i][j] += inv * vecs[i][k] * vecs[j][k];
                }
            }
        }
        pinv
    }

    /// Independent kNN edge set: full distance matrix, per-row selection by
    /// explicit sort of the whole row.
    pub fn knn_edge_set(x: &Matrix, k: usize) -> BTreeSet<(usize, usize)> {
        let n = x.rows();
        let mut dist = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut d = 0.0;
                for c in 0..x.cols() {
                    let diff = x.get(i, c) - x.get(j, c);
                    d += diff * diff;
                }
                dist[i][j] = d;
            }
        }
        let mut edges = BTreeSet::new();
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| dist[i][a].total_cmp(&dist[i][b]).then(a.cmp(&b)));
            for &j in order.iter().take(k) {
                edges.insert((i.min(j), i.max(j)));
            }
        }
        edges
    }

    /// Prim's algorithm for the maximum spanning tree weight.
    pub fn prim_max_spanning_weight(g: &WeightedGraph) -> f64 {
        let n = g.node_count();
        let mut adj = vec![Vec::new(); n];
        for e in g.edges() {
            adj[e.s].push((e.t, e.w));
            adj[e.t].push((e.s, e.w));
        }
        let mut in_tree = vec![false; n];
        let mut best = vec![f64::NEG_INFINITY; n];
        best[0] = 0.0;
        let mut total = 0.0;
        for _ in 0..n {
            let mut pick = usize::MAX;
            for v in 0..n {
                if !in_tree[v] && (pick == usize::MAX || best[v] > best[pick]) {
                    pick = v;
                }
            }
            in_tree[pick] = true;
            if best[pick].is_finite() && best[pick] > 0.0 {
                total += best[pick];
            }
            for &(u, w) in &adj[pick] {
                if !in_tree[u] && w > best[u] {
                    best[u] = w;
                }
            }
        }
        total
    }

    /// Weight of a uniformly-ish random spanning tree (random edge order +
    /// union-find).
    pub fn random_spanning_tree_weight(g: &WeightedGraph, rng: &mut Rng) -> f64 {
        let n = g.node_count();
        let mut order: Vec<usize> = (0..g.edges().len()).collect();
        // Fisher-Yates
        for i in (1..order.len()).rev() {
            let j = rng.below(i + 1);
            order.swap(i, j);
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        let mut total = 0.0;
        for idx in order {
            let e = g.edges()[idx];
            let (ra, rb) = (find(&mut parent, e.s), find(&mut parent, e.t));
            if ra != rb {
                parent[ra] = rb;
                total += e.w;
            }
        }
        total
    }

    /// Random aggregation whose clusters are connected: grow each cluster by
    /// a short BFS from random seeds.
    pub fn random_connected_clusters(g: &WeightedGraph, rng: &mut Rng) -> Vec<usize> {
        let n = g.node_count();
        let adj = g.adjacency();
        let mut assign = vec![usize::MAX; n];
        let mut next = 0;
        for v in 0..n {
            if assign[v] != usize::MAX {
                continue;
            }
            assign[v] = next;
            let mut frontier = vec![v];
            let target = 1 + rng.below(4);
            let mut size = 1;
            while size < target {
                let mut grew = false;
                let mut new_frontier = Vec::new();
                for &f in &frontier {
                    for &(u, _) in adj.neighbors(f) {
                        if assign[u] == usize::MAX && size < target {
                            assign[u] = next;
                            new_frontier.push(u);
                            size += 1;
                            grew = true;
                        }
                    }
                }
                frontier = new_frontier;
                if !grew {
                    break;
                }
            }
            next += 1;
        }
        assign
    }

    /// Coarse Laplacian by explicit dense H^-+ L H^+ products.
    pub fn dense_contracted_laplacian(
        g: &WeightedGraph,
        assignment: &[usize],
        coarse: usize,
    ) -> Vec<Vec<f64>> {
        let n = g.node_count();
        let l = dense_laplacian_by_loops(g);
        // H^+ (n x coarse): 1 if p in cluster i. H^-+ = (H^+)^T.
        let mut hp = vec![vec![0.0f64; coarse]; n];
        for (p, &c) in assignment.iter().enumerate() {
            hp[p][c] = 1.0;
        }
        // tmp = L H^+
        let mut tmp = vec![vec![0.0f64; coarse]; n];
        for i in 0..n {
            for j in 0..n {
                if l[i][j] != 0.0 {
                    for c in 0..coarse {
                        tmp[i][c] += l[i][j] * hp[j][c];
                    }
                }
            }
        }
        // out = (H^+)^T tmp
        let mut out = vec![vec![0.0f64; coarse]; coarse];
        for i in 0..n {
            for a in 0..coarse {
                if hp[i][a] != 0.0 {
                    for c in 0..coarse {
                        out[a][c] += hp[i][a] * tmp[i][c];
                    }
                }
            }
        }
        out
    }

    /// Diagonal of (H H^T)^{-1} computed by explicit products.
    pub fn hht_inverse_diagonal(assignment: &[usize], coarse: usize) -> Vec<f64> {
        let mut hht = vec![0.0f64; coarse];
        let mut sizes = vec![0usize; coarse];
        for &c in assignment {
            sizes[c] += 1;
        }
        for (c, hht_c) in hht.iter_mut().enumerate() {
            // row c of H has |S_c| entries each 1/|S_c|
            *hht_c = sizes[c] as f64 * (1.0 / sizes[c] as f64) * (1.0 / sizes[c] as f64);
        }
        hht.iter().map(|&v| 1.0 / v).collect()
    }

    /// Heaviest fine edge crossing two clusters; ties to smaller (s,t).
    pub fn max_crossing_edge(
        g: &WeightedGraph,
        assignment: &[usize],
        ca: usize,
        cb: usize,
    ) -> Option<(usize, usize, f64)> {
        let mut best: Option<Edge> = None;
        for e in g.edges() {
            let (x, y) = (assignment[e.s], assignment[e.t]);
            if (x, y) == (ca, cb) || (x, y) == (cb, ca) {
                let better = match &best {
                    None => true,
                    Some(cur) => {
                        e.w > cur.w || (e.w == cur.w && (e.s, e.t) < (cur.s, cur.t))
                    }
                };
                if better {
                    best = Some(*e);
                }
            }
        }
        best.map(|e| (e.s, e.t, e.w))
    }

    /// Dense inverse of the grounded Laplacian (Gauss-Jordan), returned as a
    /// map over original (query, node) pairs.
    pub fn grounded_inverse(
        g: &WeightedGraph,
        grounds: &[usize],
    ) -> HashMap<(usize, usize), f64> {
        let n = g.node_count();
        let keep: Vec<usize> = (0..n).filter(|v| !grounds.contains(v)).collect();
        let m = keep.len();
        let l = dense_laplacian_by_loops(g);
        let mut a = vec![vec![0.0f64; 2 * m]; m];
        for (i, &vi) in keep.iter().enumerate() {
            for (j, &vj) in keep.iter().enumerate() {
                a[i][j] = l[vi][vj];
            }
            a[i][m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting.
        for col in 0..m {
            let mut pivot = col;
            for r in col + 1..m {
                if a[r][col].abs() > a[pivot][col].abs() {
                    pivot = r;
                }
            }
            a.swap(col, pivot);
            let p = a[col][col];
            assert!(p.abs() > 1e-12, "grounded matrix singular");
            for c in 0..2 * m {
                a[col][c] /= p;
            }
            for r in 0..m {
                if r != col && a[r][col] != 0.0 {
                    let f = a[r][col];
                    for c in 0..2 * m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        let mut out = HashMap::new();
        for (i, &vi) in keep.iter().enumerate() {
            for (j, &vj) in keep.iter().enumerate() {
                out.insert((vi, vj), a[i][m + j]);
            }
        }
        out
    }

    /// Random box + laminar-budget instance with a mix of signs in z.
    pub fn random_laminar_instance(n: usize, rng: &mut Rng) -> (CurrentConstraints, Vec<f64>) {
        let mut upper = vec![0.0f64; n];
        for u in upper.iter_mut() {
            if rng.uniform() < 0.8 {
                *u = rng.uniform() * 2.0;
            }
        }
        let mut budgets = Vec::new();
        if n >= 3 && rng.uniform() < 0.9 {
            let root_size = 2 + rng.below(n - 1);
            let root: Vec<usize> = rng.sample_distinct(n, root_size);
            let cap: f64 = root.iter().map(|&p| upper[p]).sum();
            if cap > 0.0 {
                budgets.push(Budget {
                    nodes: root.clone(),
                    bound: cap * (0.2 + 0.6 * rng.uniform()),
                });
                // up to two nested disjoint children
                let half = root.len() / 2;
                if half >= 1 {
                    let child_a: Vec<usize> = root[..half].to_vec();
                    let cap_a: f64 = child_a.iter().map(|&p| upper[p]).sum();
                    if cap_a > 0.0 && rng.uniform() < 0.7 {
                        budgets.push(Budget {
                            nodes: child_a,
                            bound: cap_a * (0.3 + 0.5 * rng.uniform()),
                        });
                    }
                    let child_b: Vec<usize> = root[half..].to_vec();
                    let cap_b: f64 = child_b.iter().map(|&p| upper[p]).sum();
                    if cap_b > 0.0 && rng.uniform() < 0.5 {
                        budgets.push(Budget {
                            nodes: child_b,
                            bound: cap_b * (0.3 + 0.5 * rng.uniform()),
                        });
                    }
                }
            }
        }
        let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        (CurrentConstraints { upper_bounds: upper, budgets }, z)
    }

    /// Dense primal simplex (Bland's rule) for max z^T j subject to
    /// 0 <= j <= u and budget rows. Independent of the greedy.
    pub fn simplex_maximize(z: &[f64], constraints: &CurrentConstraints) -> f64 {
        let n = z.len();
        let k = constraints.budgets.len();
        let rows = n + k; // j_p <= u_p rows and budget rows
        let cols = n + rows; // variables + slacks
        let mut t = vec![vec![0.0f64; cols + 1]; rows + 1];
        for p in 0..n {
            t[p][p] = 1.0;
            t[p][n + p] = 1.0;
            t[p][cols] = constraints.upper_bounds[p];
        }
        for (b, budget) in constraints.budgets.iter().enumerate() {
            for &p in &budget.nodes {
                t[n + b][p] = 1.0;
            }
            t[n + b][n + n + b] = 1.0;
            t[n + b][cols] = budget.bound;
        }
        for p in 0..n {
            t[rows][p] = -z[p]; // maximize
        }
        let mut basis: Vec<usize> = (n..n + rows).collect();
        for _ in 0..20_000 {
            // entering: Bland (smallest index with negative cost)
            let mut enter = usize::MAX;
            for c in 0..cols {
                if t[rows][c] < -1e-12 {
                    enter = c;
                    break;
                }
            }
            if enter == usize::MAX {
                break;
            }
            // leaving: min ratio, Bland tie-break
            let mut leave = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            for r in 0..rows {
                if t[r][enter] > 1e-12 {
                    let ratio = t[r][cols] / t[r][enter];
                    if ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && (leave == usize::MAX || basis[r] < basis[leave]))
                    {
                        best_ratio = ratio;
                        leave = r;
                    }
                }
            }
            assert!(leave != usize::MAX, "unbounded LP in oracle");
            // pivot
            let p = t[leave][enter];
            for c in 0..=cols {
                t[leave][c] /= p;
            }
            for r in 0..=rows {
                if r != leave && t[r][enter] != 0.0 {
                    let f = t[r][enter];
                    for c in 0..=cols {
                        t[r][c] -= f * t[leave][c];
                    }
                }
            }
            basis[leave] = enter;
        }
        t[rows][cols]
    }

    /// True exhaustive enumeration of basic feasible points for tiny
    /// instances: choose n active constraints among {j_p = 0, j_p = u_p,
    /// budget tight}, solve, keep feasible, maximize.
    pub fn exhaustive_vertex_maximize(z: &[f64], constraints: &CurrentConstraints) -> f64 {
        let n = z.len();
        #[derive(Clone, Copy)]
        enum Con {
            Zero(usize),
            Upper(usize),
            Budget(usize),
        }
        let mut cons = Vec::new();
        for p in 0..n {
            cons.push(Con::Zero(p));
            cons.push(Con::Upper(p));
        }
        for b in 0..constraints.budgets.len() {
            cons.push(Con::Budget(b));
        }
        let mut best = f64::NEG_INFINITY;
        let mut choice = vec![0usize; n];
        enumerate(&cons, n, 0, &mut choice, &mut |subset: &[usize]| {
            // assemble square system
            let mut a = vec![vec![0.0f64; n]; n];
            let mut rhs = vec![0.0f64; n];
            for (row, &ci) in subset.iter().enumerate() {
                match cons[ci] {
                    Con::Zero(p) => {
                        a[row][p] = 1.0;
                        rhs[row] = 0.0;
                    }
                    Con::Upper(p) => {
                        a[row][p] = 1.0;
                        rhs[row] = constraints.upper_bounds[p];
                    }
                    Con::Budget(b) => {
                        for &p in &constraints.budgets[b].nodes {
                            a[row][p] = 1.0;
                        }
                        rhs[row] = constraints.budgets[b].bound;
                    }
                }
            }
            if let Some(j) = solve_square(&a, &rhs) {
                // feasibility
                for p in 0..n {
                    if j[p] < -1e-9 || j[p] > constraints.upper_bounds[p] + 1e-9 {
                        return;
                    }
                }
                for b in &constraints.budgets {
                    let used: f64 = b.nodes.iter().map(|&p| j[p]).sum();
                    if used > b.bound + 1e-9 {
                        return;
                    }
                }
                let val: f64 = (0..n).map(|p| z[p] * j[p]).sum();
                if val > best {
                    best = val;
                }
            }
        });
        fn enumerate(
            cons: &[Con],
            need: usize,
            start: usize,
            choice: &mut Vec<usize>,
            f: &mut impl FnMut(&[usize]),
        ) {
            let depth = choice.len() - need;
            if need == 0 {
                f(&choice[..depth]);
                return;
            }
            for i in start..cons.len() {
                choice[depth] = i;
                enumerate(cons, need - 1, i + 1, choice, f);
            }
        }
        fn solve_square(a_in: &[Vec<f64>], b_in: &[f64]) -> Option<Vec<f64>> {
            let n = b_in.len();
            let mut a = a_in.to_vec();
            let mut b = b_in.to_vec();
            for col in 0..n {
                let mut piv = col;
                for r in col + 1..n {
                    if a[r][col].abs() > a[piv][col].abs() {
                        piv = r;
                    }
                }
                if a[piv][col].abs() < 1e-10 {
                    return None;
                }
                a.swap(col, piv);
                b.swap(col, piv);
                for r in 0..n {
                    if r != col {
                        let f = a[r][col] / a[col][col];
                        if f != 0.0 {
                            for c in col..n {
                                a[r][c] -= f * a[col][c];
                            }
                            b[r] -= f * b[col];
                        }
                    }
                }
            }
            Some((0..n).map(|i| b[i] / a[i][i]).collect())
        }
        best
    }
}
