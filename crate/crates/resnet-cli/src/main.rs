//! resnet: learn sparse resistor networks from voltage/current measurements
//! and run vectorless worst-case verification on them.
//!
//! Commands mirror the pipeline: `gen-mesh` and `gen-measurements` produce
//! inputs, `learn-sgl` / `learn-sfsgl` learn a network, `metrics` compares
//! it with the original, `layout` emits spectral drawing coordinates, and
//! `verify` bounds worst-case voltages under current constraints. A JSON
//! config may set any flag; explicit command-line flags win.
//! RESNET_THREADS caps internal parallelism.

mod config;

use clap::{Parser, Subcommand};
use resnet::eigen::spectral_layout;
use resnet::graph::build_laplacian;
use resnet::io;
use resnet::knn::{build_knn_detailed, KnnConfig};
use resnet::learn::{sgl_learn, SglConfig};
use resnet::measurements::{add_noise, generate_gaussian, generate_jl, JlConfig};
use resnet::mesh::{gen_mesh, MeshKind};
use resnet::metrics::compute_metrics;
use resnet::mst::extract_mst;
use resnet::multilevel::{sf_sgl_learn, SfSglConfig};
use resnet::smoother::SmootherConfig;
use resnet::verify::verify;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "resnet", version, about)]
struct Cli {
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic mesh graph (Matrix Market output).
    GenMesh {
        /// grid2d | grid3d | cycle | tree
        #[arg(long)]
        kind: Option<String>,
        /// Dimensions like 16x16 (grid2d), 8x8x8 (grid3d), or 100.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate voltage/current measurements from a ground-truth graph.
    GenMeasurements {
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Number of measurement vectors (Gaussian protocol).
        #[arg(long)]
        m: Option<usize>,
        /// Noise level zeta applied to the voltages.
        #[arg(long)]
        noise: Option<f64>,
        /// Use the random-projection protocol with this epsilon instead.
        #[arg(long)]
        jl_epsilon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn a network with single-level densification iterations.
    LearnSgl {
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// kNN neighbor count for the candidate graph.
        #[arg(long)]
        k: Option<usize>,
        /// Spectral embedding dimension.
        #[arg(long)]
        r: Option<usize>,
        /// Edge-add ratio per iteration.
        #[arg(long)]
        beta: Option<f64>,
        /// Sensitivity threshold ending the iterations.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Learning report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-iteration max-sensitivity trace (CSV).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Learn a network with the solver-free multilevel flow.
    LearnSfsgl {
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Coarsest-level size threshold.
        #[arg(long)]
        coarsest: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for per-level graphs and aggregation maps.
        #[arg(long)]
        dump_hierarchy: Option<PathBuf>,
    },
    /// Compare a learned graph against the original.
    Metrics {
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        learned: Option<PathBuf>,
        /// Number of nonzero eigenvalues compared.
        #[arg(long)]
        eigs: Option<usize>,
        /// Number of sampled node pairs for resistance comparison.
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Measurement CSV; enables objective reporting.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Metrics report (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Eigenvalue pairs (CSV) for plotting.
        #[arg(long)]
        eig_csv: Option<PathBuf>,
    },
    /// Spectral drawing coordinates (u2, u3) as CSV.
    Layout {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Worst-case voltage verification from a problem file.
    Verify {
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Results CSV (node, worst_value).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve statistics (JSON).
        #[arg(long)]
        stats: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: cli-io/config: {e}");
            return ExitCode::FAILURE;
        }
    };
    match run(cli.command, &cfg) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Error message carrying the module and operation that failed.
struct CliError {
    module: &'static str,
    operation: &'static str,
    source: resnet::Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}: {}", self.module, self.operation, self.source)
    }
}

trait Tag<T> {
    fn tag(self, module: &'static str, operation: &'static str) -> Result<T, CliError>;
}

impl<T> Tag<T> for resnet::Result<T> {
    fn tag(self, module: &'static str, operation: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError {
            module,
            operation,
            source,
        })
    }
}

fn run(command: Command, cfg: &config::FileConfig) -> Result<String, CliError> {
    match command {
        Command::GenMesh { kind, dims, out } => {
            let kind_str = cfg.str_or("kind", kind, "grid2d");
            let kind = MeshKind::parse(&kind_str).ok_or_else(|| CliError {
                module: "cli-io",
                operation: "gen-mesh",
                source: resnet::Error::InvalidConfig(format!("unknown mesh kind {kind_str}")),
            })?;
            let dims_str = cfg.str_or("dims", dims, "16x16");
            let dims = parse_dims(&dims_str).tag("cli-io", "gen-mesh")?;
            let out = cfg.path_or("out", out, "mesh.mtx");
            let g = gen_mesh(kind, &dims).tag("cli-io", "gen_mesh")?;
            io::write_graph(&out, &g, io::GraphConvention::Adjacency)
                .tag("cli-io", "write_graph")?;
            Ok(format!(
                "gen-mesh: {kind_str} {dims_str} -> {} ({} nodes, {} edges)",
                out.display(),
                g.node_count(),
                g.edge_count()
            ))
        }
        Command::GenMeasurements {
            graph,
            m,
            noise,
            jl_epsilon,
            seed,
            out,
        } => {
            let graph_path = cfg.path_or("graph", graph, "mesh.mtx");
            let g = io::read_graph(&graph_path).tag("cli-io", "read_graph")?;
            let seed = cfg.u64_or("seed", seed, 1);
            let noise = cfg.f64_or("noise", noise, 0.0);
            let jl_epsilon = jl_epsilon.or(cfg.f64_opt("jl_epsilon"));
            let ms = match jl_epsilon {
                Some(epsilon) => {
                    let jl = JlConfig {
                        epsilon,
                        ..Default::default()
                    };
                    generate_jl(&g, &jl, seed).tag("measurement-gen", "generate_jl")?
                }
                None => {
                    let m = cfg.usize_or("m", m, resnet::measurements::DEFAULT_MEASUREMENTS);
                    generate_gaussian(&g, m, seed).tag("measurement-gen", "generate_gaussian")?
                }
            };
            let ms = add_noise(&ms, noise, seed).tag("measurement-gen", "add_noise")?;
            let out = cfg.path_or("out", out, "measurements.csv");
            io::write_measurements(&out, &ms).tag("cli-io", "write_measurements")?;
            Ok(format!(
                "gen-measurements: {} -> {} (N = {}, M = {}, zeta = {}, {})",
                graph_path.display(),
                out.display(),
                ms.x.rows(),
                ms.x.cols(),
                ms.noise_level,
                ms.source.as_str()
            ))
        }
        Command::LearnSgl {
            measurements,
            k,
            r,
            beta,
            tol,
            seed,
            out,
            report,
            trace,
        } => {
            let ms_path = cfg.path_or("measurements", measurements, "measurements.csv");
            let ms = io::read_measurements(&ms_path).tag("cli-io", "read_measurements")?;
            let k = cfg.usize_or("k", k, KnnConfig::default().k);
            let knn = build_knn_detailed(&ms.x, &KnnConfig { k }).tag("init-graph", "build_knn")?;
            let pool = extract_mst(&knn.graph).tag("init-graph", "extract_mst")?;
            let mut sgl = SglConfig {
                r: cfg.usize_or("r", r, 5),
                beta_sample: cfg.f64_or("beta", beta, 1e-3),
                tol: cfg.f64_or("tol", tol, 1e-12),
                ..Default::default()
            };
            if let Some(s) = seed.or(cfg.u64_opt("seed")) {
                sgl.eigen.seed = s;
            }
            let (learned, report_data) = sgl_learn(&ms, &pool, &sgl).tag("sgl-learn", "sgl_learn")?;
            let out = cfg.path_or("out", out, "learned.mtx");
            io::write_graph(&out, &learned, io::GraphConvention::Adjacency)
                .tag("cli-io", "write_graph")?;
            if let Some(report_path) = report.or(cfg.path_opt("report")) {
                write_json(&report_path, &report_data).tag("cli-io", "write_report")?;
            }
            if let Some(trace_path) = trace.or(cfg.path_opt("trace")) {
                let rows: Vec<String> = report_data
                    .s_max_trace
                    .iter()
                    .enumerate()
                    .map(|(i, s)| format!("{},{}", i + 1, s))
                    .collect();
                io::write_csv_rows(&trace_path, "iteration,s_max", &rows)
                    .tag("cli-io", "write_trace")?;
            }
            Ok(format!(
                "learn-sgl: {} candidates -> {} ({} iterations, converged {}, density {:.4}, alpha {:.4e}, {} augmented kNN pairs)",
                pool.offtree_edges.len(),
                out.display(),
                report_data.iterations,
                report_data.converged,
                report_data.density,
                report_data.alpha_prime,
                knn.augmented_pairs
            ))
        }
        Command::LearnSfsgl {
            measurements,
            coarsest,
            k,
            seed,
            out,
            report,
            dump_hierarchy,
        } => {
            let ms_path = cfg.path_or("measurements", measurements, "measurements.csv");
            let ms = io::read_measurements(&ms_path).tag("cli-io", "read_measurements")?;
            let k = cfg.usize_or("k", k, KnnConfig::default().k);
            let knn = build_knn_detailed(&ms.x, &KnnConfig { k }).tag("init-graph", "build_knn")?;
            let pool = extract_mst(&knn.graph).tag("init-graph", "extract_mst")?;
            let mut sf = SfSglConfig {
                coarsest_size: cfg.usize_or("coarsest", coarsest, 500),
                ..Default::default()
            };
            if let Some(s) = seed.or(cfg.u64_opt("seed")) {
                sf.smoother = SmootherConfig {
                    seed: s,
                    ..sf.smoother
                };
                sf.sgl.eigen.seed = s;
            }
            if let Some(dump_dir) = dump_hierarchy.or(cfg.path_opt("dump_hierarchy")) {
                let hier = resnet::multilevel::build_hierarchy(&pool.knn_graph, &ms.x, &sf)
                    .tag("multilevel", "build_hierarchy")?;
                io::dump_hierarchy(&dump_dir, &hier).tag("cli-io", "dump_hierarchy")?;
            }
            let (learned, report_data) =
                sf_sgl_learn(&ms, &pool, &sf).tag("multilevel", "sf_sgl_learn")?;
            let out = cfg.path_or("out", out, "learned.mtx");
            io::write_graph(&out, &learned, io::GraphConvention::Adjacency)
                .tag("cli-io", "write_graph")?;
            if let Some(report_path) = report.or(cfg.path_opt("report")) {
                write_json(&report_path, &report_data).tag("cli-io", "write_report")?;
            }
            Ok(format!(
                "learn-sfsgl: -> {} (coarse iterations {}, density {:.4}, alpha {:.4e})",
                out.display(),
                report_data.iterations,
                report_data.density,
                report_data.alpha_prime
            ))
        }
        Command::Metrics {
            truth,
            learned,
            eigs,
            pairs,
            seed,
            measurements,
            out,
            eig_csv,
        } => {
            let truth_path = cfg.path_or("truth", truth, "mesh.mtx");
            let learned_path = cfg.path_or("learned", learned, "learned.mtx");
            let g_true = io::read_graph(&truth_path).tag("cli-io", "read_graph")?;
            let g_learned = io::read_graph(&learned_path).tag("cli-io", "read_graph")?;
            let ms = match measurements.or(cfg.path_opt("measurements")) {
                Some(p) => Some(io::read_measurements(&p).tag("cli-io", "read_measurements")?),
                None => None,
            };
            let report = compute_metrics(
                &g_true,
                &g_learned,
                cfg.usize_or("eigs", eigs, 50),
                cfg.usize_or("pairs", pairs, 100),
                cfg.u64_or("seed", seed, 1),
                ms.as_ref().map(|m| &m.x),
            )
            .tag("cli-io", "compute_metrics")?;
            if let Some(out_path) = out.or(cfg.path_opt("out")) {
                write_json(&out_path, &report).tag("cli-io", "write_metrics")?;
            }
            if let Some(csv_path) = eig_csv.or(cfg.path_opt("eig_csv")) {
                let rows: Vec<String> = report
                    .eigenvalues
                    .iter()
                    .map(|(i, t, l)| format!("{i},{t},{l}"))
                    .collect();
                io::write_csv_rows(&csv_path, "index,lambda_original,lambda_learned", &rows)
                    .tag("cli-io", "write_eig_csv")?;
            }
            Ok(format!(
                "metrics: Err(lambda) = {:.4} over {} eigenvalues, Err(R) = {:.4} over {} pairs, density {:.4} -> {:.4}",
                report.err_lambda,
                report.eig_count,
                report.err_resistance,
                report.pair_count,
                report.density_original,
                report.density_learned
            ))
        }
        Command::Layout { graph, out } => {
            let graph_path = cfg.path_or("graph", graph, "mesh.mtx");
            let g = io::read_graph(&graph_path).tag("cli-io", "read_graph")?;
            let coords =
                spectral_layout(&build_laplacian(&g)).tag("spectral-kernels", "spectral_layout")?;
            let out = cfg.path_or("out", out, "layout.csv");
            let rows: Vec<String> = (0..g.node_count())
                .map(|i| format!("{i},{},{}", coords.get(i, 0), coords.get(i, 1)))
                .collect();
            io::write_csv_rows(&out, "node,x,y", &rows).tag("cli-io", "write_layout")?;
            Ok(format!(
                "layout: {} -> {} ({} nodes)",
                graph_path.display(),
                out.display(),
                g.node_count()
            ))
        }
        Command::Verify { problem, out, stats } => {
            let problem_path = cfg.path_or("problem", problem, "problem.json");
            let prob = io::read_problem(&problem_path).tag("cli-io", "read_problem")?;
            let result = verify(&prob, &resnet::solver::SolverConfig::default())
                .tag("vectorless-verify", "verify")?;
            let out = cfg.path_or("out", out, "worst_case.csv");
            let rows: Vec<String> = result
                .query_nodes
                .iter()
                .zip(&result.worst_values)
                .map(|(q, v)| format!("{q},{v}"))
                .collect();
            io::write_csv_rows(&out, "node,worst_value", &rows).tag("cli-io", "write_results")?;
            if let Some(stats_path) = stats.or(cfg.path_opt("stats")) {
                write_json(&stats_path, &result.stats).tag("cli-io", "write_stats")?;
            }
            let max = result
                .worst_values
                .iter()
                .fold(0.0f64, |a, &b| a.max(b));
            Ok(format!(
                "verify: {} queries -> {} (max worst-case {:.6}, factorization {:.3}s)",
                result.query_nodes.len(),
                out.display(),
                max,
                result.stats.factor_seconds
            ))
        }
    }
}

fn parse_dims(text: &str) -> resnet::Result<Vec<usize>> {
    text.split('x')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| resnet::Error::InvalidConfig(format!("bad dimensions {text}")))
        })
        .collect()
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> resnet::Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| resnet::Error::InvalidConfig(format!("serialize: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
