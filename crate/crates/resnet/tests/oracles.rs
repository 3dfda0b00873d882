//! Independent-oracle checks: every production path here is verified against
//! a second implementation that shares no code with it (dense pseudoinverse
//! via Jacobi rotations, an independent Prim MST, a quadratic-scan kNN, a
//! dense simplex LP, explicit H-matrix products).

mod support;

use resnet::graph::{build_laplacian, effective_resistance, quadratic_form, smoothness_trace};
use resnet::knn::{build_knn, KnnConfig};
use resnet::learn::{edge_distortion, eigen_embedding};
use resnet::matrix::Matrix;
use resnet::mst::extract_mst;
use resnet::multilevel::{contract_laplacian, AggregationMap};
use resnet::rng::Rng;
use resnet::solver::{solve_laplacian, SolverConfig};
use resnet::verify::{adjoint_sensitivity, ground_system, worst_case_voltage};

use support::oracle;
use support::random_connected_graph;

#[test]
fn laplacian_matches_dense_assembly() {
    let mut rng = Rng::new(2024);
    let g = random_connected_graph(20, 30, &mut rng);
    let lap = build_laplacian(&g);
    let dense = oracle::dense_laplacian_by_loops(&g);
    for i in 0..20 {
        for j in 0..20 {
            assert!(
                (lap.entry(i, j) - dense[i][j]).abs() < 1e-15,
                "entry ({i},{j})"
            );
        }
    }
}

#[test]
fn quadratic_form_matches_dense_product() {
    let mut rng = Rng::new(7);
    for _ in 0..5 {
        let g = random_connected_graph(30, 60, &mut rng);
        let lap = build_laplacian(&g);
        let x: Vec<f64> = (0..30).map(|_| rng.normal()).collect();
        let fast = quadratic_form(&lap, &x).unwrap();
        let dense = oracle::dense_quadratic_form(&g, &x);
        assert!(
            (fast - dense).abs() <= 1e-12 * dense.abs().max(1.0),
            "{fast} vs {dense}"
        );
    }
}

#[test]
fn smoothness_trace_matches_dense() {
    let mut rng = Rng::new(8);
    let g = random_connected_graph(25, 50, &mut rng);
    let lap = build_laplacian(&g);
    let x = Matrix::from_rows(
        (0..25)
            .map(|_| (0..4).map(|_| rng.normal()).collect())
            .collect(),
    );
    let fast = smoothness_trace(&lap, &x).unwrap();
    let mut dense = 0.0;
    for c in 0..4 {
        dense += oracle::dense_quadratic_form(&g, &x.column(c));
    }
    assert!((fast - dense).abs() <= 1e-12 * dense.max(1.0));
}

#[test]
fn effective_resistance_matches_pseudoinverse() {
    let mut rng = Rng::new(99);
    let g = random_connected_graph(50, 120, &mut rng);
    let pinv = oracle::pseudoinverse(&g);
    for _ in 0..25 {
        let s = rng.below(50);
        let mut t = rng.below(50);
        while t == s {
            t = rng.below(50);
        }
        let fast = effective_resistance(&g, s, t).unwrap();
        let slow = pinv[s][s] - 2.0 * pinv[s][t] + pinv[t][t];
        assert!(
            (fast - slow).abs() <= 1e-8 * slow,
            "pair ({s},{t}): {fast} vs {slow}"
        );
    }
}

#[test]
fn solve_matches_pseudoinverse_apply() {
    let mut rng = Rng::new(55);
    let g = random_connected_graph(100, 260, &mut rng);
    let lap = build_laplacian(&g);
    let pinv = oracle::pseudoinverse(&g);
    let mut b: Vec<f64> = (0..100).map(|_| rng.normal()).collect();
    resnet::matrix::center(&mut b);
    let x = solve_laplacian(&lap, &b, &SolverConfig::default()).unwrap();
    for i in 0..100 {
        let oracle_x: f64 = (0..100).map(|j| pinv[i][j] * b[j]).sum();
        assert!(
            (x[i] - oracle_x).abs() <= 1e-8 * oracle::norm_inf(&b).max(1.0),
            "row {i}: {} vs {oracle_x}",
            x[i]
        );
    }
}

#[test]
fn eigen_pairs_match_jacobi_oracle() {
    let mut rng = Rng::new(31);
    for trial in 0..5 {
        let n = 20 + rng.below(30);
        let g = random_connected_graph(n, 3 * n, &mut rng);
        let lap = build_laplacian(&g);
        let pairs =
            resnet::eigen::eigen_pairs(&lap, &resnet::eigen::EigenConfig::with_r(4)).unwrap();
        let all = oracle::jacobi_eigenvalues(&g);
        for (i, v) in pairs.values.iter().enumerate() {
            let reference = all[i + 1];
            assert!(
                (v - reference).abs() <= 1e-8 * reference.max(1e-12),
                "trial {trial} pair {i}: {v} vs {reference}"
            );
        }
    }
}

#[test]
fn objective_weight_scaling_law() {
    // Scaling all weights by c shifts the objective by
    // budget*ln(c) - (c-1) * sum(w z_data)/M, for sigma^2 = inf.
    let mut rng = Rng::new(71);
    let g = random_connected_graph(18, 40, &mut rng);
    let x = Matrix::from_rows(
        (0..18)
            .map(|_| (0..6).map(|_| rng.normal()).collect())
            .collect(),
    );
    let params = resnet::graph::PrecisionParams {
        eig_budget: 10,
        ..Default::default()
    };
    let f1 = resnet::graph::objective_value(&g, &x, &params).unwrap();
    let c = 2.5;
    let f2 = resnet::graph::objective_value(&g.scaled(c).unwrap(), &x, &params).unwrap();
    let lap = build_laplacian(&g);
    let trace = smoothness_trace(&lap, &x).unwrap();
    let expected = 10.0 * c.ln() - (c - 1.0) * trace / 6.0;
    assert!(
        ((f2 - f1) - expected).abs() <= 1e-8 * expected.abs().max(1.0),
        "delta {} vs expected {expected}",
        f2 - f1
    );
}

#[test]
fn sensitivity_matches_objective_finite_difference() {
    // d/dw of the objective at an existing small-weight edge, full spectrum.
    let mut rng = Rng::new(42);
    let n = 24;
    let g = random_connected_graph(n, 60, &mut rng);
    let x = Matrix::from_rows(
        (0..n)
            .map(|_| (0..8).map(|_| rng.normal()).collect())
            .collect(),
    );
    let params = resnet::graph::PrecisionParams {
        eig_budget: n - 1,
        ..Default::default()
    };
    let mut checked = 0;
    for _ in 0..40 {
        let s = rng.below(n);
        let t = rng.below(n);
        if s == t || g.edges().iter().any(|e| (e.s, e.t) == (s.min(t), s.max(t))) {
            continue;
        }
        let w0 = 2e-6;
        let delta = 1e-6;
        let mk = |w: f64| {
            g.with_added_edges(&[resnet::graph::Edge::new(s, t, w)])
                .unwrap()
        };
        let f_plus = resnet::graph::objective_value(&mk(w0 + delta), &x, &params).unwrap();
        let f_minus = resnet::graph::objective_value(&mk(w0 - delta), &x, &params).unwrap();
        let fd = (f_plus - f_minus) / (2.0 * delta);
        let emb = eigen_embedding(&mk(w0), n - 1, f64::INFINITY).unwrap();
        let sens = resnet::learn::edge_sensitivity(&emb, &x, s, t).unwrap();
        assert!(
            (sens - fd).abs() <= 1e-4 * fd.abs().max(1e-6),
            "pair ({s},{t}): sensitivity {sens} vs fd {fd}"
        );
        assert_eq!(sens > 0.0, fd > 0.0, "sign mismatch at ({s},{t})");
        checked += 1;
    }
    assert!(checked >= 10, "too few candidate pairs checked: {checked}");
}

#[test]
fn distortion_ranks_like_leverage_scores() {
    let mut rng = Rng::new(17);
    let g = random_connected_graph(40, 100, &mut rng);
    let x = Matrix::from_rows(
        (0..40)
            .map(|_| (0..12).map(|_| rng.normal()).collect())
            .collect(),
    );
    let emb = eigen_embedding(&g, 39, f64::INFINITY).unwrap();
    let mut pairs = Vec::new();
    for _ in 0..30 {
        let s = rng.below(40);
        let t = rng.below(40);
        if s != t && !pairs.contains(&(s.min(t), s.max(t))) {
            pairs.push((s.min(t), s.max(t)));
        }
    }
    let mut by_eta: Vec<usize> = (0..pairs.len()).collect();
    let mut by_leverage: Vec<usize> = (0..pairs.len()).collect();
    let etas: Vec<f64> = pairs
        .iter()
        .map(|&(s, t)| edge_distortion(&emb, &x, s, t, 12).unwrap())
        .collect();
    let leverages: Vec<f64> = pairs
        .iter()
        .map(|&(s, t)| {
            // leverage = w * R_eff with candidate weight 1/z_data
            let z = x.row_dist_sq(s, t);
            effective_resistance(&g, s, t).unwrap() / z
        })
        .collect();
    by_eta.sort_by(|&a, &b| etas[b].total_cmp(&etas[a]));
    by_leverage.sort_by(|&a, &b| leverages[b].total_cmp(&leverages[a]));
    assert_eq!(by_eta, by_leverage);
}

#[test]
fn knn_matches_independent_scan() {
    // Production kNN vs a second scan written differently: full distance
    // matrix, per-row threshold at the k-th smallest.
    let mut rng = Rng::new(12);
    let n = 200;
    let x = Matrix::from_rows(
        (0..n)
            .map(|_| (0..6).map(|_| rng.normal()).collect())
            .collect(),
    );
    let g = build_knn(&x, &KnnConfig { k: 5 }).unwrap();
    let expected = oracle::knn_edge_set(&x, 5);
    let got: std::collections::BTreeSet<(usize, usize)> =
        g.edges().iter().map(|e| (e.s, e.t)).collect();
    // production may add augmentation edges; the oracle set must be contained
    // and any extras must connect components of the oracle set
    assert!(expected.iter().all(|p| got.contains(p)), "missing kNN edges");
    let extras: Vec<_> = got.difference(&expected).collect();
    assert!(extras.len() <= 2, "too many augmentation edges: {extras:?}");
    // weights are 1/d^2 exactly
    for e in g.edges() {
        let d = x.row_dist_sq(e.s, e.t);
        assert_eq!(e.w.to_bits(), (1.0 / d).to_bits());
    }
}

#[test]
fn mst_matches_prim_and_beats_random_trees() {
    let mut rng = Rng::new(4);
    let g = random_connected_graph(100, 300, &mut rng);
    let pool = extract_mst(&g).unwrap();
    let tree_weight: f64 = pool
        .tree_edges
        .iter()
        .map(|&i| g.edges()[i].w)
        .sum();
    let prim_weight = oracle::prim_max_spanning_weight(&g);
    assert!(
        (tree_weight - prim_weight).abs() <= 1e-9 * prim_weight,
        "kruskal {tree_weight} vs prim {prim_weight}"
    );
    for _ in 0..10_000 {
        let w = oracle::random_spanning_tree_weight(&g, &mut rng);
        assert!(tree_weight >= w - 1e-9 * tree_weight);
    }
}

#[test]
fn contraction_matches_dense_h_product() {
    let mut rng = Rng::new(61);
    for _ in 0..5 {
        let n = 12 + rng.below(20);
        let g = random_connected_graph(n, 3 * n, &mut rng);
        let clusters = oracle::random_connected_clusters(&g, &mut rng);
        let coarse_count = clusters.iter().copied().max().unwrap() + 1;
        let map = AggregationMap {
            fine_count: n,
            coarse_count,
            assignment: clusters,
        };
        let fast = contract_laplacian(&g, &map).unwrap();
        let dense = oracle::dense_contracted_laplacian(&g, &map.assignment, coarse_count);
        let fast_lap = build_laplacian(&fast);
        for i in 0..coarse_count {
            for j in 0..coarse_count {
                assert!(
                    (fast_lap.entry(i, j) - dense[i][j]).abs() <= 1e-10,
                    "coarse entry ({i},{j})"
                );
            }
        }
        // (H H^T)^{-1} diagonal equals cluster sizes exactly.
        let sizes = map.cluster_sizes();
        let hht_inv_diag = oracle::hht_inverse_diagonal(&map.assignment, coarse_count);
        for (a, b) in sizes.iter().zip(&hht_inv_diag) {
            assert!((*a as f64 - b).abs() < 1e-12);
        }
    }
}

#[test]
fn map_to_finer_matches_crossing_enumeration() {
    use resnet::multilevel::{build_hierarchy, map_to_finer, SfSglConfig};
    let mut rng = Rng::new(23);
    let n = 60;
    let g = random_connected_graph(n, 150, &mut rng);
    let x = Matrix::from_rows(
        (0..n)
            .map(|_| (0..5).map(|_| rng.normal()).collect())
            .collect(),
    );
    let cfg = SfSglConfig {
        coarsest_size: 15,
        ..Default::default()
    };
    let hier = build_hierarchy(&g, &x, &cfg).unwrap();
    assert!(hier.level_count() >= 2);
    let level = hier.level_count() - 1;
    let coarse_graph = hier.levels[level].graph.clone();
    let mapped = map_to_finer(&coarse_graph, level, &hier).unwrap();
    assert!(mapped.is_connected());
    let map = hier.levels[level].map.as_ref().unwrap();
    let fine = &hier.levels[level - 1].graph;
    // every inter-cluster edge of the output is the max-weight crossing edge
    for e in mapped.edges() {
        let (ca, cb) = (map.assignment[e.s], map.assignment[e.t]);
        if ca != cb {
            let best = oracle::max_crossing_edge(fine, &map.assignment, ca, cb)
                .expect("coarse edge must have a crossing edge");
            assert_eq!((e.s.min(e.t), e.s.max(e.t), e.w), best);
        }
    }
    // inner edges stay within clusters and form spanning trees there
    let sizes = map.cluster_sizes();
    let mut inner_count = vec![0usize; map.coarse_count];
    for e in mapped.edges() {
        let (ca, cb) = (map.assignment[e.s], map.assignment[e.t]);
        if ca == cb {
            inner_count[ca] += 1;
        }
    }
    for (c, &cnt) in inner_count.iter().enumerate() {
        assert_eq!(cnt, sizes[c] - 1, "cluster {c} tree edge count");
    }
}

#[test]
fn adjoint_matches_dense_inverse() {
    let mut rng = Rng::new(203);
    let g = random_connected_graph(200, 520, &mut rng);
    let grounds = vec![0, 57, 140];
    let sys = ground_system(&g, &grounds).unwrap();
    let dense_inv = oracle::grounded_inverse(&g, &grounds);
    for &q in &[3usize, 99, 150, 199] {
        let z = adjoint_sensitivity(&sys, q).unwrap();
        let z_full = sys.expand(&z);
        for v in 0..200 {
            if grounds.contains(&v) {
                continue;
            }
            let reference = dense_inv[&(q, v)];
            assert!(
                (z_full[v] - reference).abs() <= 1e-8 * reference.abs().max(1e-9),
                "query {q} node {v}: {} vs {reference}",
                z_full[v]
            );
        }
    }
}

#[test]
fn grounded_system_positive_definite() {
    let mut rng = Rng::new(301);
    let g = random_connected_graph(120, 320, &mut rng);
    let sys = ground_system(&g, &[5, 80]).unwrap();
    let evals = oracle::jacobi_eigenvalues_csr(sys.matrix());
    assert!(evals[0] > 0.0, "smallest grounded eigenvalue {}", evals[0]);
}

#[test]
fn greedy_lp_matches_simplex() {
    let mut rng = Rng::new(88);
    for trial in 0..40 {
        let n = 5 + rng.below(36);
        let (constraints, z) = oracle::random_laminar_instance(n, &mut rng);
        let wc = worst_case_voltage(&z, &constraints).unwrap();
        let simplex = oracle::simplex_maximize(&z, &constraints);
        assert!(
            (wc.value - simplex).abs() <= 1e-10 * simplex.abs().max(1.0),
            "trial {trial}: greedy {} vs simplex {simplex}",
            wc.value
        );
        // witness feasibility and value consistency
        for (p, &j) in wc.witness.iter().enumerate() {
            assert!(j >= -1e-12 && j <= constraints.upper_bounds[p] + 1e-12);
        }
        let recomputed: f64 = z.iter().zip(&wc.witness).map(|(a, b)| a * b).sum();
        assert!((recomputed - wc.value).abs() <= 1e-8 * wc.value.abs().max(1.0));
        for b in &constraints.budgets {
            let used: f64 = b.nodes.iter().map(|&p| wc.witness[p]).sum();
            assert!(used <= b.bound + 1e-9);
        }
    }
}

#[test]
fn greedy_lp_matches_exhaustive_vertices_tiny() {
    let mut rng = Rng::new(89);
    for _ in 0..60 {
        let n = 2 + rng.below(5);
        let (constraints, z) = oracle::random_laminar_instance(n, &mut rng);
        let wc = worst_case_voltage(&z, &constraints).unwrap();
        let brute = oracle::exhaustive_vertex_maximize(&z, &constraints);
        assert!(
            (wc.value - brute).abs() <= 1e-10 * brute.abs().max(1.0),
            "greedy {} vs brute {brute}",
            wc.value
        );
    }
}
