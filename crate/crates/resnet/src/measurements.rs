//! Voltage/current measurement matrices: the Gaussian excitation protocol,
//! the random-projection (Johnson-Lindenstrauss) construction, measurement
//! noise, and node subsampling for reduced-network learning.

use crate::error::{Error, Result};
use crate::graph::{build_laplacian, WeightedGraph};
use crate::matrix::{center, dot, norm, Matrix};
use crate::rng::Rng;
use crate::solver::{LaplacianSolver, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementSource {
    GaussianProtocol,
    JlProtocol,
    External,
}

impl MeasurementSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            MeasurementSource::GaussianProtocol => "gaussian-protocol",
            MeasurementSource::JlProtocol => "jl-protocol",
            MeasurementSource::External => "external",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian-protocol" => Some(MeasurementSource::GaussianProtocol),
            "jl-protocol" => Some(MeasurementSource::JlProtocol),
            "external" => Some(MeasurementSource::External),
            _ => None,
        }
    }
}

/// Paired voltage (X) and current (Y) measurements, N rows (nodes) by M
/// columns (measurements). Y is absent after node subsampling, which keeps
/// voltages only.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub x: Matrix,
    pub y: Option<Matrix>,
    pub noise_level: f64,
    pub source: MeasurementSource,
}

impl MeasurementSet {
    pub fn external(x: Matrix, y: Option<Matrix>) -> Result<Self> {
        if let Some(y) = &y {
            if y.rows() != x.rows() || y.cols() != x.cols() {
                return Err(Error::DimensionMismatch {
                    expected: x.rows() * x.cols(),
                    got: y.rows() * y.cols(),
                });
            }
        }
        Ok(MeasurementSet {
            x,
            y,
            noise_level: 0.0,
            source: MeasurementSource::External,
        })
    }

    pub fn node_count(&self) -> usize {
        self.x.rows()
    }

    pub fn measurement_count(&self) -> usize {
        self.x.cols()
    }
}

/// Default number of measurement vectors.
pub const DEFAULT_MEASUREMENTS: usize = 50;

/// Gaussian protocol: i.i.d. standard-normal current vectors, each centered
/// (orthogonal to all-ones) and unit-normalized; voltages solve L x = y.
pub fn generate_gaussian(g_true: &WeightedGraph, m: usize, seed: u64) -> Result<MeasurementSet> {
    if m == 0 {
        return Err(Error::InvalidConfig("need at least one measurement".into()));
    }
    g_true.require_connected()?;
    let n = g_true.node_count();
    let lap = build_laplacian(g_true);
    let solver = LaplacianSolver::new(&lap, &SolverConfig::default())?;

    let mut x = Matrix::zeros(n, m);
    let mut y = Matrix::zeros(n, m);
    for col in 0..m {
        let mut rng = Rng::stream(seed, col as u64);
        let mut current: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        center(&mut current);
        let nrm = norm(&current);
        if nrm == 0.0 {
            return Err(Error::InvalidMeasurement {
                column: col,
                value: 0.0,
            });
        }
        for v in current.iter_mut() {
            *v /= nrm;
        }
        let voltage = solver.solve(&current)?;
        x.set_column(col, &voltage);
        y.set_column(col, &current);
    }
    Ok(MeasurementSet {
        x,
        y: Some(y),
        noise_level: 0.0,
        source: MeasurementSource::GaussianProtocol,
    })
}

/// Random-projection construction sized by the Johnson-Lindenstrauss bound.
#[derive(Debug, Clone, Copy)]
pub struct JlConfig {
    pub epsilon: f64,
    /// Override the derived measurement count.
    pub m_override: Option<usize>,
    /// Base of the logarithm in 24 log(N)/eps^2 (natural log by default).
    pub log_base: f64,
}

impl Default for JlConfig {
    fn default() -> Self {
        JlConfig {
            epsilon: 0.3,
            m_override: None,
            log_base: std::f64::consts::E,
        }
    }
}

impl JlConfig {
    pub fn measurement_count(&self, n: usize) -> Result<usize> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig("epsilon must lie in (0,1)".into()));
        }
        if let Some(m) = self.m_override {
            if m == 0 {
                return Err(Error::InvalidConfig("m_override must be >= 1".into()));
            }
            return Ok(m);
        }
        let m = (24.0 * (n as f64).ln() / self.log_base.ln() / (self.epsilon * self.epsilon))
            .ceil() as usize;
        Ok(m.max(1))
    }
}

/// JL protocol: y_i^T are the rows of C W^{1/2} B for a random +-1/sqrt(M)
/// matrix C, then L x_i = y_i. Pair distances on X then approximate
/// effective resistances within (1 +- eps) with high probability.
pub fn generate_jl(g_true: &WeightedGraph, cfg: &JlConfig, seed: u64) -> Result<MeasurementSet> {
    g_true.require_connected()?;
    let n = g_true.node_count();
    let m = cfg.measurement_count(n)?;
    let lap = build_laplacian(g_true);
    let solver = LaplacianSolver::new(&lap, &SolverConfig::default())?;
    let scale = 1.0 / (m as f64).sqrt();

    // Edge orientation: head = smaller index, tail = larger (fixed so runs
    // reproduce; any consistent orientation gives the same distances).
    let sqrt_w: Vec<f64> = g_true.edges().iter().map(|e| e.w.sqrt()).collect();

    let mut x = Matrix::zeros(n, m);
    let mut y = Matrix::zeros(n, m);
    let mut current = vec![0.0f64; n];
    for col in 0..m {
        let mut rng = Rng::stream(seed, col as u64);
        current.iter_mut().for_each(|v| *v = 0.0);
        for (e, sw) in g_true.edges().iter().zip(&sqrt_w) {
            let c = rng.sign() * scale * sw;
            current[e.s] += c;
            current[e.t] -= c;
        }
        let voltage = solver.solve(&current)?;
        x.set_column(col, &voltage);
        y.set_column(col, &current);
    }
    Ok(MeasurementSet {
        x,
        y: Some(y),
        noise_level: 0.0,
        source: MeasurementSource::JlProtocol,
    })
}

/// Replace each voltage column x by x + zeta * ||x|| * eps with eps a
/// unit-normalized Gaussian vector. Currents are untouched. Each column's
/// noise stream is keyed by the column's contents (not its position), so
/// adding noise commutes with column permutation.
pub fn add_noise(ms: &MeasurementSet, zeta: f64, seed: u64) -> Result<MeasurementSet> {
    if zeta < 0.0 {
        return Err(Error::InvalidConfig("noise level must be >= 0".into()));
    }
    let mut out = ms.clone();
    out.noise_level = zeta;
    if zeta == 0.0 {
        return Ok(out);
    }
    let n = ms.x.rows();
    for col in 0..ms.x.cols() {
        let key = fnv1a(&ms.x.column(col));
        let mut rng = Rng::stream(seed ^ 0xD015E, key);
        let mut eps: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let nrm = norm(&eps);
        for v in eps.iter_mut() {
            *v /= nrm;
        }
        let x_col = ms.x.column(col);
        let xn = norm(&x_col);
        let noisy: Vec<f64> = x_col
            .iter()
            .zip(&eps)
            .map(|(xv, ev)| xv + zeta * xn * ev)
            .collect();
        out.x.set_column(col, &noisy);
    }
    Ok(out)
}

fn fnv1a(values: &[f64]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// Keep ceil(fraction * N) uniformly sampled node rows of X; current rows
/// are dropped (reduced-network learning uses voltages only). Returns the
/// retained original node indices, ascending.
pub fn subsample_nodes(
    ms: &MeasurementSet,
    fraction: f64,
    seed: u64,
) -> Result<(MeasurementSet, Vec<usize>)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig("fraction must lie in (0,1]".into()));
    }
    let n = ms.x.rows();
    let keep = (fraction * n as f64).ceil() as usize;
    if keep < 3 {
        return Err(Error::TooFewNodes { kept: keep });
    }
    let indices = if keep == n {
        (0..n).collect::<Vec<_>>()
    } else {
        let mut rng = Rng::stream(seed ^ 0x5AB5A, 0);
        rng.sample_distinct(n, keep)
    };
    let mut x = Matrix::zeros(keep, ms.x.cols());
    for (row, &orig) in indices.iter().enumerate() {
        x.row_mut(row).copy_from_slice(ms.x.row(orig));
    }
    Ok((
        MeasurementSet {
            x,
            y: None,
            noise_level: ms.noise_level,
            source: ms.source,
        },
        indices,
    ))
}

/// Dissipation y_i^T x_i per column (diagnostic; equals x^T L x for exact
/// solves).
pub fn dissipation(ms: &MeasurementSet) -> Option<Vec<f64>> {
    let y = ms.y.as_ref()?;
    Some(
        (0..ms.x.cols())
            .map(|c| dot(&y.column(c), &ms.x.column(c)))
            .collect(),
    )
}
