//! Solver-free multilevel learning: spectral coarsening of the candidate
//! graph via smoothed local embeddings, learning at the coarsest level, and
//! bottom-up mapping/refinement back to the finest level. Coarse graphs act
//! as low-pass filters, so each level repairs its own band of embedding
//! distortions with nothing more expensive than Gauss-Seidel sweeps.

use crate::error::{Error, Result};
use crate::graph::{build_laplacian, Edge, WeightedGraph};
use crate::learn::{sgl_iterations, spectral_scale, LearnReport, SglConfig};
use crate::matrix::Matrix;
use crate::measurements::MeasurementSet;
use crate::mst::{extract_mst, CandidatePool, UnionFind};
use crate::smoother::{smooth_embedding, SmootherConfig};
use crate::solver::SolverConfig;
use std::collections::HashMap;

/// Assignment of fine nodes to coarse clusters. Every cluster is non-empty
/// and induces a connected subgraph of the fine graph.
#[derive(Debug, Clone)]
pub struct AggregationMap {
    pub fine_count: usize,
    pub coarse_count: usize,
    pub assignment: Vec<usize>,
}

impl AggregationMap {
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.coarse_count];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.coarse_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Check non-empty, in-range, connected clusters against the fine graph.
    pub fn validate(&self, fine: &WeightedGraph) -> Result<()> {
        if self.assignment.len() != self.fine_count || fine.node_count() != self.fine_count {
            return Err(Error::HierarchyInconsistency(
                "assignment length mismatch".into(),
            ));
        }
        if self.assignment.iter().any(|&c| c >= self.coarse_count) {
            return Err(Error::HierarchyInconsistency(
                "cluster index out of range".into(),
            ));
        }
        let clusters = self.clusters();
        if clusters.iter().any(|c| c.is_empty()) {
            return Err(Error::HierarchyInconsistency("empty cluster".into()));
        }
        let adj = fine.adjacency();
        for (ci, members) in clusters.iter().enumerate() {
            // BFS inside the cluster.
            let inside: std::collections::HashSet<usize> = members.iter().copied().collect();
            let mut seen = std::collections::HashSet::new();
            let mut stack = vec![members[0]];
            seen.insert(members[0]);
            while let Some(v) = stack.pop() {
                for &(u, _) in adj.neighbors(v) {
                    if inside.contains(&u) && seen.insert(u) {
                        stack.push(u);
                    }
                }
            }
            if seen.len() != members.len() {
                return Err(Error::HierarchyInconsistency(format!(
                    "cluster {ci} induces a disconnected subgraph"
                )));
            }
        }
        Ok(())
    }
}

/// One level of the coarsening hierarchy.
#[derive(Debug, Clone)]
pub struct HierarchyLevel {
    pub graph: WeightedGraph,
    pub features: Matrix,
    /// Aggregation from the previous (finer) level; `None` at level 0.
    pub map: Option<AggregationMap>,
}

#[derive(Debug, Clone)]
pub struct CoarseningHierarchy {
    pub levels: Vec<HierarchyLevel>,
}

impl CoarseningHierarchy {
    pub fn coarsest(&self) -> &HierarchyLevel {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SfSglConfig {
    /// Stop coarsening once a level has at most this many nodes.
    pub coarsest_size: usize,
    /// Per-level reduction goal (matching rounds repeat until reached).
    pub coarsening_ratio_target: f64,
    /// Candidate-add ratio per refinement pass: ceil(n * quota) edges.
    pub distortion_quota: f64,
    /// Refinement passes per level.
    pub max_refine_passes: usize,
    pub smoother: SmootherConfig,
    /// SGL settings for the coarsest level.
    pub sgl: SglConfig,
    /// Solver for the final edge scaling.
    pub solver: SolverConfig,
    /// Cluster size cap during matching.
    pub max_cluster_size: usize,
}

impl Default for SfSglConfig {
    fn default() -> Self {
        // Larger per-iteration batches than single-level SGL: the coarsest
        // graph is small, and batching cuts the eigensolve count without
        // hurting quality.
        let sgl = SglConfig {
            beta_sample: 1e-2,
            ..Default::default()
        };
        SfSglConfig {
            coarsest_size: 500,
            coarsening_ratio_target: 2.0,
            distortion_quota: 1e-2,
            max_refine_passes: 3,
            smoother: SmootherConfig::default(),
            sgl,
            solver: SolverConfig::default(),
            max_cluster_size: 8,
        }
    }
}

impl SfSglConfig {
    pub fn validate(&self) -> Result<()> {
        if self.coarsest_size < 10 {
            return Err(Error::InvalidConfig("coarsest_size must be >= 10".into()));
        }
        if !(self.coarsening_ratio_target > 1.0 && self.coarsening_ratio_target <= 8.0) {
            return Err(Error::InvalidConfig(
                "coarsening ratio target must lie in (1, 8]".into(),
            ));
        }
        if !(self.distortion_quota > 0.0 && self.distortion_quota <= 1.0) {
            return Err(Error::InvalidConfig(
                "distortion_quota must lie in (0,1]".into(),
            ));
        }
        if self.max_refine_passes == 0 || self.max_cluster_size < 2 {
            return Err(Error::InvalidConfig(
                "refine passes >= 1 and cluster cap >= 2 required".into(),
            ));
        }
        self.smoother.validate()?;
        self.sgl.validate()
    }
}

/// Contract a graph through an aggregation map: coarse Laplacian
/// H^-+ L H^+, i.e. cluster-to-cluster summed weights.
pub fn contract_laplacian(g: &WeightedGraph, map: &AggregationMap) -> Result<WeightedGraph> {
    if g.node_count() != map.fine_count {
        return Err(Error::DimensionMismatch {
            expected: map.fine_count,
            got: g.node_count(),
        });
    }
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for e in g.edges() {
        let (a, b) = (map.assignment[e.s], map.assignment[e.t]);
        if a != b {
            let key = (a.min(b), a.max(b));
            *acc.entry(key).or_insert(0.0) += e.w;
        }
    }
    let edges: Vec<Edge> = acc
        .into_iter()
        .map(|((s, t), w)| Edge::new(s, t, w))
        .collect();
    WeightedGraph::new(map.coarse_count, edges)
}

/// Average fine feature rows per cluster: X_coarse = H X.
pub fn aggregate_features(x: &Matrix, map: &AggregationMap) -> Matrix {
    let sizes = map.cluster_sizes();
    let mut out = Matrix::zeros(map.coarse_count, x.cols());
    for node in 0..map.fine_count {
        let c = map.assignment[node];
        let row = x.row(node);
        let dst = out.row_mut(c);
        for (d, v) in dst.iter_mut().zip(row) {
            *d += v;
        }
    }
    for c in 0..map.coarse_count {
        let inv = 1.0 / sizes[c] as f64;
        for v in out.row_mut(c) {
            *v *= inv;
        }
    }
    out
}

/// Embedding-aware heavy-edge matching: visit nodes in ascending index and
/// merge each unassigned node with its best neighbor by affinity
/// w / ||B(s,:) - B(t,:)||^2. Repeated rounds until the reduction target or
/// the cluster-size cap stops progress.
fn cluster_nodes(
    g: &WeightedGraph,
    embedding: &Matrix,
    ratio_target: f64,
    max_cluster_size: usize,
) -> AggregationMap {
    let n = g.node_count();
    // assignment composed over rounds; start with identity.
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut current_graph = g.clone();
    let mut current_embedding = embedding.clone();
    let mut current_n = n;

    loop {
        let target_met = (n as f64 / current_n as f64) >= ratio_target;
        if target_met || current_n <= 1 {
            break;
        }
        // Sizes of composed clusters feeding the cap.
        let mut composed_size = vec![0usize; current_n];
        for &c in &assignment {
            composed_size[c] += 1;
        }

        let adj = current_graph.adjacency();
        let affinity = |s: usize, t: usize, w: f64| {
            let d = current_embedding.row_dist_sq(s, t);
            if d > 0.0 {
                w / d
            } else {
                f64::INFINITY
            }
        };

        let mut round = vec![usize::MAX; current_n];
        let mut round_size: Vec<usize> = Vec::new();
        let mut next = 0usize;
        let mut merges = 0usize;
        for v in 0..current_n {
            if round[v] != usize::MAX {
                continue;
            }
            // Best unassigned neighbor by affinity, ties to smaller index.
            let mut best: Option<(f64, usize)> = None;
            for &(u, w) in adj.neighbors(v) {
                if round[u] == usize::MAX
                    && composed_size[v] + composed_size[u] <= max_cluster_size
                {
                    let a = affinity(v, u, w);
                    if best.map_or(true, |(ba, bu)| a > ba || (a == ba && u < bu)) {
                        best = Some((a, u));
                    }
                }
            }
            if let Some((_, u)) = best {
                round[v] = next;
                round[u] = next;
                round_size.push(composed_size[v] + composed_size[u]);
                next += 1;
                merges += 1;
            } else {
                // Join the best already-formed cluster if the cap allows.
                let mut join: Option<(f64, usize)> = None;
                for &(u, w) in adj.neighbors(v) {
                    if round[u] != usize::MAX
                        && round_size[round[u]] + composed_size[v] <= max_cluster_size
                    {
                        let a = affinity(v, u, w);
                        if join.map_or(true, |(ba, bu)| a > ba || (a == ba && u < bu)) {
                            join = Some((a, u));
                        }
                    }
                }
                if let Some((_, u)) = join {
                    round[v] = round[u];
                    round_size[round[u]] += composed_size[v];
                    merges += 1;
                } else {
                    round[v] = next;
                    round_size.push(composed_size[v]);
                    next += 1;
                }
            }
        }
        if merges == 0 {
            break;
        }

        // Compose into the global assignment.
        for a in assignment.iter_mut() {
            *a = round[*a];
        }
        let round_map = AggregationMap {
            fine_count: current_n,
            coarse_count: next,
            assignment: round,
        };
        current_embedding = aggregate_features(&current_embedding, &round_map);
        current_graph = contract_laplacian(&current_graph, &round_map)
            .expect("contraction of a valid graph");
        current_n = next;
    }

    AggregationMap {
        fine_count: n,
        coarse_count: current_n,
        assignment,
    }
}

/// One coarsening step: smooth-embed the graph, cluster nodes that are close
/// in the embedding, contract the Laplacian, average the features, and
/// reweight every coarse edge by 1/feature-distance^2.
pub fn coarsen_level(
    g: &WeightedGraph,
    x: &Matrix,
    smoother: &SmootherConfig,
    ratio_target: f64,
    max_cluster_size: usize,
) -> Result<(AggregationMap, WeightedGraph, Matrix)> {
    g.require_connected()?;
    x.expect_rows(g.node_count())?;
    let lap = build_laplacian(g);
    let embedding = smooth_embedding(&lap, smoother)?;
    let map = cluster_nodes(g, &embedding, ratio_target, max_cluster_size);
    debug_assert!(map.validate(g).is_ok());
    let contracted = contract_laplacian(g, &map)?;
    let features = aggregate_features(x, &map);
    // Reweight by feature distance so coarse distances keep encoding the
    // measurement geometry.
    let edges: Vec<Edge> = contracted
        .edges()
        .iter()
        .map(|e| {
            let z = features.row_dist_sq(e.s, e.t);
            if z == 0.0 {
                return Err(Error::DegeneratePair { s: e.s, t: e.t });
            }
            Ok(Edge::new(e.s, e.t, 1.0 / z))
        })
        .collect::<Result<_>>()?;
    let coarse = WeightedGraph::new(map.coarse_count, edges)?;
    Ok((map, coarse, features))
}

/// Coarsen until `coarsest_size` or the reduction stalls (ratio < 1.05).
pub fn build_hierarchy(
    g0: &WeightedGraph,
    x0: &Matrix,
    cfg: &SfSglConfig,
) -> Result<CoarseningHierarchy> {
    cfg.validate()?;
    g0.require_connected()?;
    x0.expect_rows(g0.node_count())?;
    let mut levels = vec![HierarchyLevel {
        graph: g0.clone(),
        features: x0.clone(),
        map: None,
    }];
    while levels.last().unwrap().graph.node_count() > cfg.coarsest_size {
        let level = levels.len();
        let prev = levels.last().unwrap();
        let n_prev = prev.graph.node_count();
        let smoother = SmootherConfig {
            seed: cfg.smoother.seed.wrapping_add(level as u64),
            ..cfg.smoother
        };
        let (map, graph, features) = coarsen_level(
            &prev.graph,
            &prev.features,
            &smoother,
            cfg.coarsening_ratio_target,
            cfg.max_cluster_size,
        )?;
        let ratio = n_prev as f64 / graph.node_count() as f64;
        if ratio < 1.05 {
            if level == 1 {
                return Err(Error::CoarseningStall { level: 0, ratio });
            }
            break;
        }
        levels.push(HierarchyLevel {
            graph,
            features,
            map: Some(map),
        });
    }
    Ok(CoarseningHierarchy { levels })
}

/// Map a learned coarse graph one level down: per-cluster maximum spanning
/// trees form the inner-cluster edges, and each coarse edge contributes the
/// heaviest fine edge crossing its two clusters.
pub fn map_to_finer(
    p_coarse: &WeightedGraph,
    level: usize,
    hier: &CoarseningHierarchy,
) -> Result<WeightedGraph> {
    if level == 0 || level >= hier.levels.len() {
        return Err(Error::HierarchyInconsistency(format!(
            "level {level} has no finer level"
        )));
    }
    let map = hier.levels[level]
        .map
        .as_ref()
        .expect("levels above 0 carry maps");
    if p_coarse.node_count() != map.coarse_count {
        return Err(Error::DimensionMismatch {
            expected: map.coarse_count,
            got: p_coarse.node_count(),
        });
    }
    let fine = &hier.levels[level - 1].graph;
    let n_fine = fine.node_count();

    let mut edges: Vec<Edge> = Vec::new();

    // Inner-cluster MSTs over the induced subgraphs, with fine weights.
    let mut cluster_edges: Vec<Vec<Edge>> = vec![Vec::new(); map.coarse_count];
    let mut crossing_best: HashMap<(usize, usize), Edge> = HashMap::new();
    for e in fine.edges() {
        let (a, b) = (map.assignment[e.s], map.assignment[e.t]);
        if a == b {
            cluster_edges[a].push(*e);
        } else {
            let key = (a.min(b), a.max(b));
            crossing_best
                .entry(key)
                .and_modify(|cur| {
                    if e.w > cur.w || (e.w == cur.w && (e.s, e.t) < (cur.s, cur.t)) {
                        *cur = *e;
                    }
                })
                .or_insert(*e);
        }
    }
    let mut uf = UnionFind::new(n_fine);
    for list in cluster_edges.iter_mut() {
        list.sort_by(|a, b| b.w.total_cmp(&a.w).then((a.s, a.t).cmp(&(b.s, b.t))));
        for e in list.iter() {
            if uf.union(e.s, e.t) {
                edges.push(*e);
            }
        }
    }

    // Inter-cluster edges for each learned coarse edge.
    for ce in p_coarse.edges() {
        let key = (ce.s.min(ce.t), ce.s.max(ce.t));
        match crossing_best.get(&key) {
            Some(e) => edges.push(*e),
            None => {
                return Err(Error::HierarchyInconsistency(format!(
                    "coarse edge ({},{}) has no crossing fine edge",
                    ce.s, ce.t
                )))
            }
        }
    }
    WeightedGraph::new(n_fine, edges)
}

/// Add spectrally-critical candidates at one level: candidates are the
/// level's kNN edges missing from `p`, scored by eta = z_emb / z_data with a
/// smoothed embedding of `p`; each pass adds the top ceil(n * quota)
/// candidates above the median score.
pub fn refine_level(
    p: &WeightedGraph,
    level: usize,
    hier: &CoarseningHierarchy,
    cfg: &SfSglConfig,
) -> Result<WeightedGraph> {
    let lvl = &hier.levels[level];
    let n = lvl.graph.node_count();
    if p.node_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.node_count(),
        });
    }
    let features = &lvl.features;
    let mut present: std::collections::HashSet<(usize, usize)> =
        p.edges().iter().map(|e| (e.s, e.t)).collect();
    let mut candidates: Vec<(usize, usize, f64)> = lvl
        .graph
        .edges()
        .iter()
        .filter(|e| !present.contains(&(e.s, e.t)))
        .map(|e| (e.s, e.t, features.row_dist_sq(e.s, e.t)))
        .collect();
    if candidates.is_empty() {
        return Ok(p.clone());
    }
    let batch = ((n as f64) * cfg.distortion_quota).ceil() as usize;
    let batch = batch.max(1);
    let mut graph = p.clone();

    for pass in 0..cfg.max_refine_passes {
        if candidates.is_empty() {
            break;
        }
        let smoother = SmootherConfig {
            seed: cfg
                .smoother
                .seed
                .wrapping_add(0x9e37 * (level as u64 + 1) + pass as u64),
            ..cfg.smoother
        };
        let lap = build_laplacian(&graph);
        let embedding = smooth_embedding(&lap, &smoother)?;

        let mut scored: Vec<(f64, usize)> = candidates
            .iter()
            .enumerate()
            .map(|(idx, &(s, t, z_data))| {
                let z_emb = embedding.row_dist_sq(s, t);
                (z_emb / z_data, idx)
            })
            .collect();
        let mut etas: Vec<f64> = scored.iter().map(|&(e, _)| e).collect();
        etas.sort_by(|a, b| a.total_cmp(b));
        let median = etas[etas.len() / 2];

        scored.retain(|&(eta, _)| eta > median);
        if scored.is_empty() {
            break;
        }
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0).then_with(|| {
                let (ca, cb) = (&candidates[a.1], &candidates[b.1]);
                (ca.0, ca.1).cmp(&(cb.0, cb.1))
            })
        });
        scored.truncate(batch);
        let mut chosen: Vec<usize> = scored.iter().map(|&(_, i)| i).collect();
        chosen.sort_unstable();
        let new_edges: Vec<Edge> = chosen
            .iter()
            .map(|&i| {
                let (s, t, z_data) = candidates[i];
                Edge::new(s, t, 1.0 / z_data)
            })
            .collect();
        for e in &new_edges {
            present.insert((e.s, e.t));
        }
        graph = graph.with_added_edges(&new_edges)?;
        for &i in chosen.iter().rev() {
            candidates.swap_remove(i);
        }
    }
    Ok(graph)
}

/// Learn the coarsest-level graph (densification iterations only, no global
/// scaling), returned at the hierarchy's weight scale. Only its topology
/// feeds the finer levels, but the scale normalization keeps its spectrum
/// directly comparable with the hierarchy graphs.
pub fn learn_coarsest(
    hier: &CoarseningHierarchy,
    cfg: &SfSglConfig,
) -> Result<(WeightedGraph, LearnReport)> {
    let coarsest = hier.coarsest();
    let level = hier.level_count() - 1;
    let pool = extract_mst(&coarsest.graph).map_err(annotate_level(level))?;
    let (p, report) =
        sgl_iterations(&coarsest.features, &pool, &cfg.sgl).map_err(annotate_level(level))?;
    let m = coarsest.features.cols().max(1) as f64;
    Ok((p.scaled(1.0 / m)?, report))
}

/// The multilevel flow: build the hierarchy over the kNN graph, learn at the
/// coarsest level, then map and refine down to level 0 and scale globally.
pub fn sf_sgl_learn(
    ms: &MeasurementSet,
    pool: &CandidatePool,
    cfg: &SfSglConfig,
) -> Result<(WeightedGraph, LearnReport)> {
    cfg.validate()?;
    let hier = build_hierarchy(&pool.knn_graph, &ms.x, cfg)?;
    if hier.level_count() == 1 {
        // Degenerate hierarchy: identical to single-level SGL.
        return crate::learn::sgl_learn(ms, pool, &cfg.sgl);
    }

    let (mut p, mut report) = learn_coarsest(&hier, cfg)?;

    for level in (1..hier.level_count()).rev() {
        p = map_to_finer(&p, level, &hier).map_err(annotate_level(level))?;
        let before = p.edge_count();
        p = refine_level(&p, level - 1, &hier, cfg).map_err(annotate_level(level - 1))?;
        report.edges_added += p.edge_count() - before;
    }

    if ms.y.is_some() {
        let (scaled, alpha) = spectral_scale(&p, ms, &cfg.solver)?;
        report.alpha_prime = alpha;
        report.density = scaled.density();
        Ok((scaled, report))
    } else {
        report.density = p.density();
        Ok((p, report))
    }
}

fn annotate_level(level: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::EigensolverFailure(msg) => {
            Error::EigensolverFailure(format!("level {level}: {msg}"))
        }
        Error::Disconnected { components } => Error::HierarchyInconsistency(format!(
            "level {level}: graph disconnected ({components} components)"
        )),
        other => other,
    }
}

/// Diagnostic for one coarsening step: eigenvalue ratios of the first K
/// nonzero pairs, the cluster-size extremes gamma1/gamma2 (the spectrum of
/// (H H^T)^{-1} is exactly the cluster sizes), and flags for indices outside
/// the approximation band. The band's epsilon is evaluated at half its
/// critical value 1/sqrt(tau), which keeps the bound finite for any
/// spectrum.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CoarseningQuality {
    pub ratios: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub upper_factor: f64,
    pub violations: Vec<usize>,
}

pub fn coarsening_quality(
    fine: &WeightedGraph,
    coarse: &WeightedGraph,
    map: &AggregationMap,
    k: usize,
) -> Result<CoarseningQuality> {
    let k_max = coarse.node_count().min(fine.node_count()) - 1;
    if k == 0 || k > k_max {
        return Err(Error::InvalidConfig(format!(
            "K = {k} out of range (max {k_max})"
        )));
    }
    let cfg = crate::eigen::EigenConfig::default();
    let fine_vals =
        crate::eigen::smallest_nonzero_eigenvalues(&build_laplacian(fine), k, &cfg)?;
    let coarse_vals =
        crate::eigen::smallest_nonzero_eigenvalues(&build_laplacian(coarse), k, &cfg)?;
    let ratios: Vec<f64> = coarse_vals
        .iter()
        .zip(&fine_vals)
        .map(|(c, f)| c / f)
        .collect();
    let sizes = map.cluster_sizes();
    let gamma1 = *sizes.iter().min().unwrap() as f64;
    let gamma2 = *sizes.iter().max().unwrap() as f64;
    let tau = fine_vals[k - 1] / fine_vals[0];
    let epsilon = 0.5 / tau.sqrt();
    let upper_factor = gamma2 * (1.0 + epsilon) * (1.0 + epsilon) / (1.0 - tau * epsilon * epsilon);
    let violations = ratios
        .iter()
        .enumerate()
        .filter(|&(_, &r)| r < gamma1 * (1.0 - 1e-12) || r > upper_factor * (1.0 + 1e-12))
        .map(|(i, _)| i)
        .collect();
    Ok(CoarseningQuality {
        ratios,
        gamma1,
        gamma2,
        tau,
        epsilon,
        upper_factor,
        violations,
    })
}
