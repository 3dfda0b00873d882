//! File formats: Matrix Market graphs (adjacency or Laplacian convention,
//! with a hex-float extension column for exact round-trips), measurement
//! CSV, and the verification problem JSON.

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::matrix::Matrix;
use crate::measurements::{MeasurementSet, MeasurementSource};
use crate::verify::{CurrentConstraints, VerificationProblem};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

// ---------------------------------------------------------------------------
// hex floats (C99 %a style: parseable by strtod and Python float.fromhex)
// ---------------------------------------------------------------------------

pub fn format_hex_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0x0p+0".into()
        } else {
            "0x0p+0".into()
        };
    }
    if !v.is_finite() {
        // Not expected in graph files; keep a readable marker.
        return format!("{v}");
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    let (lead, exp, mant) = if exp_bits == 0 {
        // subnormal: 0.mantissa * 2^-1022
        (0u64, -1022i64, mantissa)
    } else {
        (1u64, exp_bits - 1023, mantissa)
    };
    let mut hex = format!("{mant:013x}");
    while hex.len() > 1 && hex.ends_with('0') {
        hex.pop();
    }
    if mant == 0 {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{hex}p{exp:+}")
    }
}

pub fn parse_hex_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    let (sign, rest) = match s.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    let rest = rest.strip_prefix("0x").or_else(|| rest.strip_prefix("0X"))?;
    let p_pos = rest.find(['p', 'P'])?;
    let (mant_str, exp_str) = rest.split_at(p_pos);
    let exp: i32 = exp_str[1..].parse().ok()?;
    let (int_str, frac_str) = match mant_str.find('.') {
        Some(dot) => (&mant_str[..dot], &mant_str[dot + 1..]),
        None => (mant_str, ""),
    };
    if int_str.is_empty() && frac_str.is_empty() {
        return None;
    }
    let int_part = if int_str.is_empty() {
        0u64
    } else {
        u64::from_str_radix(int_str, 16).ok()?
    };
    let mut value = int_part as f64;
    if !frac_str.is_empty() {
        let frac = u64::from_str_radix(frac_str, 16).ok()?;
        value += frac as f64 / 16f64.powi(frac_str.len() as i32);
    }
    Some(sign * value * 2f64.powi(exp))
}

// ---------------------------------------------------------------------------
// Matrix Market graphs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphConvention {
    /// Entries are (s, t, w): edge weights.
    Adjacency,
    /// Entries are the Laplacian: off-diagonal (s, t, -w) plus diagonal.
    Laplacian,
}

pub fn write_graph(path: &Path, g: &WeightedGraph, convention: GraphConvention) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let n = g.node_count();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    let kind = match convention {
        GraphConvention::Adjacency => "adjacency",
        GraphConvention::Laplacian => "laplacian",
    };
    writeln!(w, "% resnet-graph kind={kind}")?;
    writeln!(w, "% columns: row col value value_hex")?;
    match convention {
        GraphConvention::Adjacency => {
            writeln!(w, "{} {} {}", n, n, g.edge_count())?;
            for e in g.edges() {
                // lower triangle, 1-based
                writeln!(
                    w,
                    "{} {} {} {}",
                    e.t + 1,
                    e.s + 1,
                    e.w,
                    format_hex_f64(e.w)
                )?;
            }
        }
        GraphConvention::Laplacian => {
            writeln!(w, "{} {} {}", n, n, g.edge_count() + n)?;
            let deg = g.degrees();
            for (i, d) in deg.iter().enumerate() {
                writeln!(w, "{} {} {} {}", i + 1, i + 1, d, format_hex_f64(*d))?;
            }
            for e in g.edges() {
                writeln!(
                    w,
                    "{} {} {} {}",
                    e.t + 1,
                    e.s + 1,
                    -e.w,
                    format_hex_f64(-e.w)
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path_str.clone(),
        line,
        message,
    };

    let mut convention = GraphConvention::Adjacency;
    let mut size: Option<(usize, usize)> = None;
    let mut edges: Vec<Edge> = Vec::new();
    let mut header_seen = false;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if !header_seen {
            let lower = text.to_ascii_lowercase();
            if !lower.starts_with("%%matrixmarket") {
                return Err(parse_err(lineno, "missing MatrixMarket header".into()));
            }
            if !lower.contains("coordinate") || !lower.contains("real") {
                return Err(parse_err(
                    lineno,
                    "expected coordinate real matrix".into(),
                ));
            }
            if !lower.contains("symmetric") {
                return Err(parse_err(lineno, "expected symmetric matrix".into()));
            }
            header_seen = true;
            continue;
        }
        if let Some(comment) = text.strip_prefix('%') {
            if comment.contains("kind=laplacian") {
                convention = GraphConvention::Laplacian;
            } else if comment.contains("kind=adjacency") {
                convention = GraphConvention::Adjacency;
            }
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        if size.is_none() {
            if fields.len() != 3 {
                return Err(parse_err(lineno, "size line needs rows cols nnz".into()));
            }
            let rows: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(lineno, "bad row count".into()))?;
            let cols: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(lineno, "bad col count".into()))?;
            if rows != cols {
                return Err(parse_err(lineno, "matrix must be square".into()));
            }
            size = Some((rows, cols));
            continue;
        }
        if fields.len() != 3 && fields.len() != 4 {
            return Err(parse_err(
                lineno,
                "entry needs: row col value [value_hex]".into(),
            ));
        }
        let r: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(lineno, "bad row index".into()))?;
        let c: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(lineno, "bad col index".into()))?;
        let value: f64 = if fields.len() == 4 {
            parse_hex_f64(fields[3])
                .ok_or_else(|| parse_err(lineno, format!("bad hex float {}", fields[3])))?
        } else {
            fields[2]
                .parse()
                .map_err(|_| parse_err(lineno, "bad value".into()))?
        };
        let n = size.unwrap().0;
        if r == 0 || c == 0 || r > n || c > n {
            return Err(parse_err(lineno, "index out of range".into()));
        }
        let (s, t) = (c - 1, r - 1);
        if s == t {
            match convention {
                GraphConvention::Adjacency => {
                    return Err(parse_err(lineno, "diagonal entry in adjacency file".into()))
                }
                GraphConvention::Laplacian => continue, // degrees are implied
            }
        } else {
            let w = match convention {
                GraphConvention::Adjacency => value,
                GraphConvention::Laplacian => -value,
            };
            if !(w > 0.0) {
                return Err(parse_err(lineno, format!("non-positive weight {w}")));
            }
            edges.push(Edge::new(s, t, w));
        }
    }
    let (n, _) = size.ok_or_else(|| parse_err(0, "missing size line".into()))?;
    WeightedGraph::new(n, edges)
}

// ---------------------------------------------------------------------------
// measurement CSV (column-major: one line per measurement column)
// ---------------------------------------------------------------------------

pub fn write_measurements(path: &Path, ms: &MeasurementSet) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "N,M,zeta,source")?;
    writeln!(
        w,
        "{},{},{},{}",
        ms.x.rows(),
        ms.x.cols(),
        ms.noise_level,
        ms.source.as_str()
    )?;
    let write_block = |w: &mut BufWriter<std::fs::File>, tag: &str, m: &Matrix| -> Result<()> {
        for col in 0..m.cols() {
            let mut line = String::with_capacity(m.rows() * 20 + 2);
            line.push_str(tag);
            for i in 0..m.rows() {
                line.push(',');
                line.push_str(&format!("{}", m.get(i, col)));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    };
    write_block(&mut w, "x", &ms.x)?;
    if let Some(y) = &ms.y {
        write_block(&mut w, "y", y)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path_str.clone(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?
        .1?;
    if header.trim() != "N,M,zeta,source" {
        return Err(parse_err(1, "expected header N,M,zeta,source".into()));
    }
    let meta = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing metadata line".into()))?
        .1?;
    let fields: Vec<&str> = meta.trim().split(',').collect();
    if fields.len() != 4 {
        return Err(parse_err(2, "metadata needs 4 fields".into()));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(2, "bad N".into()))?;
    let m: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(2, "bad M".into()))?;
    let zeta: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(2, "bad zeta".into()))?;
    let source = MeasurementSource::parse(fields[3])
        .ok_or_else(|| parse_err(2, format!("unknown source {}", fields[3])))?;

    let mut x = Matrix::zeros(n, m);
    let mut y = Matrix::zeros(n, m);
    let (mut x_cols, mut y_cols) = (0usize, 0usize);
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let mut parts = text.split(',');
        let tag = parts.next().unwrap_or("");
        let values: Vec<f64> = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(lineno, "bad float".into()))?;
        if values.len() != n {
            return Err(parse_err(
                lineno,
                format!("expected {n} values, got {}", values.len()),
            ));
        }
        match tag {
            "x" => {
                if x_cols == m {
                    return Err(parse_err(lineno, "too many x columns".into()));
                }
                x.set_column(x_cols, &values);
                x_cols += 1;
            }
            "y" => {
                if y_cols == m {
                    return Err(parse_err(lineno, "too many y columns".into()));
                }
                y.set_column(y_cols, &values);
                y_cols += 1;
            }
            other => return Err(parse_err(lineno, format!("unknown row tag {other}"))),
        }
    }
    if x_cols != m {
        return Err(parse_err(0, format!("expected {m} x columns, got {x_cols}")));
    }
    let y = match y_cols {
        0 => None,
        c if c == m => Some(y),
        c => return Err(parse_err(0, format!("expected 0 or {m} y columns, got {c}"))),
    };
    Ok(MeasurementSet {
        x,
        y,
        noise_level: zeta,
        source,
    })
}

// ---------------------------------------------------------------------------
// verification problem JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct ProblemFile {
    /// Matrix Market graph path, absolute or relative to the problem file.
    pub graph: String,
    pub ground_nodes: Vec<usize>,
    pub query_nodes: Vec<usize>,
    pub constraints: ConstraintsFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConstraintsFile {
    /// Sparse per-node bounds: [node, i_max]; unlisted nodes get zero.
    pub upper_bounds: Vec<(usize, f64)>,
    #[serde(default)]
    pub budgets: Vec<crate::verify::Budget>,
}

pub fn read_problem(path: &Path) -> Result<VerificationProblem> {
    let text = std::fs::read_to_string(path)?;
    let parsed: ProblemFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let graph_path = {
        let p = Path::new(&parsed.graph);
        if p.exists() {
            p.to_path_buf()
        } else {
            path.parent().unwrap_or(Path::new(".")).join(p)
        }
    };
    let grid = read_graph(&graph_path)?;
    let mut upper = vec![0.0f64; grid.node_count()];
    for (node, bound) in parsed.upper_bounds_checked(grid.node_count())? {
        upper[node] = bound;
    }
    Ok(VerificationProblem {
        grid,
        ground_nodes: parsed.ground_nodes,
        constraints: CurrentConstraints {
            upper_bounds: upper,
            budgets: parsed.constraints.budgets,
        },
        query_nodes: parsed.query_nodes,
    })
}

impl ProblemFile {
    fn upper_bounds_checked(&self, n: usize) -> Result<Vec<(usize, f64)>> {
        for &(node, bound) in &self.constraints.upper_bounds {
            if node >= n {
                return Err(Error::InvalidConfig(format!(
                    "upper bound references node {node}, grid has {n} nodes"
                )));
            }
            if bound < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "negative upper bound at node {node}"
                )));
            }
        }
        Ok(self.constraints.upper_bounds.clone())
    }
}

pub fn write_problem(path: &Path, problem: &ProblemFile) -> Result<()> {
    let text = serde_json::to_string_pretty(problem).expect("problem serializes");
    std::fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// hierarchy dump: per-level graph + aggregation assignment
// ---------------------------------------------------------------------------

/// Write `level_<l>.mtx` for every level and `assignment_<l>.csv` mapping
/// each level-(l-1) node to its level-l cluster.
pub fn dump_hierarchy(dir: &Path, hier: &crate::multilevel::CoarseningHierarchy) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (l, level) in hier.levels.iter().enumerate() {
        write_graph(
            &dir.join(format!("level_{l:02}.mtx")),
            &level.graph,
            GraphConvention::Adjacency,
        )?;
        if let Some(map) = &level.map {
            let rows: Vec<String> = map
                .assignment
                .iter()
                .enumerate()
                .map(|(node, cluster)| format!("{node},{cluster}"))
                .collect();
            write_csv_rows(
                &dir.join(format!("assignment_{l:02}.csv")),
                "fine_node,cluster",
                &rows,
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// small CSV writers used by the CLI
// ---------------------------------------------------------------------------

pub fn write_csv_rows(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}
