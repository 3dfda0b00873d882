//! Synthetic test structures: unit-weight 2D/3D grids, cycles, and trees
//! with deterministic row-major node numbering.

use crate::error::{Error, Result};
use crate::graph::{Edge, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Grid2d,
    Grid3d,
    Cycle,
    Tree,
}

impl MeshKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "grid2d" => Some(MeshKind::Grid2d),
            "grid3d" => Some(MeshKind::Grid3d),
            "cycle" => Some(MeshKind::Cycle),
            "tree" => Some(MeshKind::Tree),
            _ => None,
        }
    }
}

pub fn gen_mesh(kind: MeshKind, dims: &[usize]) -> Result<WeightedGraph> {
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidConfig("mesh dimensions must be positive".into()));
    }
    let expect_dims = |want: usize| {
        if dims.len() != want {
            Err(Error::InvalidConfig(format!(
                "{kind:?} expects {want} dimension(s), got {}",
                dims.len()
            )))
        } else {
            Ok(())
        }
    };
    match kind {
        MeshKind::Grid2d => {
            expect_dims(2)?;
            let (a, b) = (dims[0], dims[1]);
            let n = a
                .checked_mul(b)
                .ok_or_else(|| Error::InvalidConfig("dimension overflow".into()))?;
            let id = |i: usize, j: usize| i * b + j;
            let mut edges = Vec::with_capacity(2 * n);
            for i in 0..a {
                for j in 0..b {
                    if i + 1 < a {
                        edges.push(Edge::new(id(i, j), id(i + 1, j), 1.0));
                    }
                    if j + 1 < b {
                        edges.push(Edge::new(id(i, j), id(i, j + 1), 1.0));
                    }
                }
            }
            WeightedGraph::new(n, edges)
        }
        MeshKind::Grid3d => {
            expect_dims(3)?;
            let (a, b, c) = (dims[0], dims[1], dims[2]);
            let n = a
                .checked_mul(b)
                .and_then(|x| x.checked_mul(c))
                .ok_or_else(|| Error::InvalidConfig("dimension overflow".into()))?;
            let id = |i: usize, j: usize, k: usize| (i * b + j) * c + k;
            let mut edges = Vec::with_capacity(3 * n);
            for i in 0..a {
                for j in 0..b {
                    for k in 0..c {
                        if i + 1 < a {
                            edges.push(Edge::new(id(i, j, k), id(i + 1, j, k), 1.0));
                        }
                        if j + 1 < b {
                            edges.push(Edge::new(id(i, j, k), id(i, j + 1, k), 1.0));
                        }
                        if k + 1 < c {
                            edges.push(Edge::new(id(i, j, k), id(i, j, k + 1), 1.0));
                        }
                    }
                }
            }
            WeightedGraph::new(n, edges)
        }
        MeshKind::Cycle => {
            expect_dims(1)?;
            let n = dims[0];
            if n < 3 {
                return Err(Error::InvalidConfig("cycle needs at least 3 nodes".into()));
            }
            let edges = (0..n).map(|i| Edge::new(i, (i + 1) % n, 1.0)).collect();
            WeightedGraph::new(n, edges)
        }
        MeshKind::Tree => {
            expect_dims(1)?;
            let n = dims[0];
            if n < 2 {
                return Err(Error::InvalidConfig("tree needs at least 2 nodes".into()));
            }
            // Heap-shaped binary tree: parent of i is (i-1)/2.
            let edges = (1..n).map(|i| Edge::new((i - 1) / 2, i, 1.0)).collect();
            WeightedGraph::new(n, edges)
        }
    }
}
