//! Exact brute-force kNN graph over voltage-profile rows, with
//! 1/distance^2 edge weights and connectivity augmentation.

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::matrix::Matrix;
use crate::par;

#[derive(Debug, Clone, Copy)]
pub struct KnnConfig {
    /// Neighbors per node before symmetrization.
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 5 }
    }
}

#[derive(Debug, Clone)]
pub struct KnnResult {
    pub graph: WeightedGraph,
    /// Inter-component edges added to make the graph connected.
    pub augmented_pairs: usize,
}

/// Symmetrized union of each row's k nearest rows (Euclidean), weight
/// 1/distance^2. Exact O(N^2 M) scan.
pub fn build_knn(x: &Matrix, cfg: &KnnConfig) -> Result<WeightedGraph> {
    Ok(build_knn_detailed(x, cfg)?.graph)
}

pub fn build_knn_detailed(x: &Matrix, cfg: &KnnConfig) -> Result<KnnResult> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::InvalidConfig("kNN needs at least 2 rows".into()));
    }
    if cfg.k == 0 || cfg.k >= n {
        return Err(Error::InvalidConfig(format!(
            "k = {} out of range for {} rows",
            cfg.k, n
        )));
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("feature rows must be finite".into()));
    }

    // Per-node k nearest, exact; ties broken by index.
    let k = cfg.k;
    let neighbor_lists: Vec<Result<Vec<(usize, f64)>>> = par::map_blocks(n, |range| {
        range
            .map(|s| {
                let mut dists: Vec<(f64, usize)> = (0..n)
                    .filter(|&t| t != s)
                    .map(|t| (x.row_dist_sq(s, t), t))
                    .collect();
                dists.select_nth_unstable_by(k - 1, |a, b| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                });
                dists.truncate(k);
                dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(d, t) in &dists {
                    if d == 0.0 {
                        return Err(Error::WeightOverflow {
                            s: s.min(t),
                            t: s.max(t),
                        });
                    }
                }
                Ok(dists.into_iter().map(|(d, t)| (t, d)).collect())
            })
            .collect()
    });

    let mut pairs = std::collections::BTreeMap::new();
    for (s, list) in neighbor_lists.into_iter().enumerate() {
        for (t, d) in list? {
            pairs.entry((s.min(t), s.max(t))).or_insert(d);
        }
    }
    let edges: Vec<Edge> = pairs
        .into_iter()
        .map(|((s, t), d)| Edge::new(s, t, 1.0 / d))
        .collect();
    let graph = WeightedGraph::new(n, edges)?;

    // Small k can leave isolated islands; bridge them with the shortest
    // inter-component pair until connected.
    let mut graph = graph;
    let mut augmented = 0usize;
    loop {
        let comp = graph.components();
        let ncomp = comp.iter().copied().max().unwrap_or(0) + 1;
        if ncomp <= 1 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for s in 0..n {
            for t in (s + 1)..n {
                if comp[s] != comp[t] {
                    let d = x.row_dist_sq(s, t);
                    if best.map_or(true, |(bd, bs, bt)| {
                        d < bd || (d == bd && (s, t) < (bs, bt))
                    }) {
                        best = Some((d, s, t));
                    }
                }
            }
        }
        let (d, s, t) = best.expect("disconnected graph has a crossing pair");
        if d == 0.0 {
            return Err(Error::WeightOverflow { s, t });
        }
        graph = graph.with_added_edges(&[Edge::new(s, t, 1.0 / d)])?;
        augmented += 1;
    }
    Ok(KnnResult {
        graph,
        augmented_pairs: augmented,
    })
}
