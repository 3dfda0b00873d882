//! resnet: learning sparse resistor networks (weighted graph Laplacians)
//! from linear voltage/current measurements, and applying the learned
//! networks to vectorless power/thermal integrity verification.
//!
//! The pipeline: generate or import voltage/current measurements, build a
//! kNN candidate graph over voltage profiles, extract a maximum spanning
//! tree, then densify it by iteratively adding the candidate edges with the
//! largest spectral sensitivity until no candidate improves the objective.
//! A multilevel variant coarsens the candidate graph first, learns at the
//! coarsest level, and maps the result back down with solver-free smoothed
//! embeddings, which avoids eigensolves on the full graph.

pub mod dense;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod io;
pub mod knn;
pub mod learn;
pub mod matrix;
pub mod measurements;
pub mod mesh;
pub mod metrics;
pub mod mst;
pub mod multilevel;
pub mod par;
pub mod rng;
pub mod smoother;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{
    build_laplacian, density, effective_resistance, objective_value, quadratic_form,
    smoothness_trace, Edge, LaplacianView, PrecisionParams, WeightedGraph,
};
pub use knn::{build_knn, KnnConfig};
pub use learn::{sgl_learn, spectral_scale, EmbeddingMatrix, LearnReport, SglConfig};
pub use measurements::{generate_gaussian, generate_jl, JlConfig, MeasurementSet};
pub use mst::{extract_mst, CandidatePool};
pub use multilevel::{sf_sgl_learn, CoarseningHierarchy, SfSglConfig};
pub use verify::{verify, VerificationProblem, WorstCaseResult};
