//! Maximum spanning tree extraction (Kruskal over descending weights with
//! union-find); the tree seeds the learned graph and the remaining kNN
//! edges form the candidate pool.

use crate::error::Result;
use crate::graph::WeightedGraph;

pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns true when the sets were disjoint.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// kNN graph split into a maximum-weight spanning tree and the remaining
/// candidate edges; indices refer to `knn_graph.edges()`.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    pub knn_graph: WeightedGraph,
    pub tree_edges: Vec<usize>,
    pub offtree_edges: Vec<usize>,
}

impl CandidatePool {
    /// The spanning tree as its own graph.
    pub fn tree_graph(&self) -> Result<WeightedGraph> {
        let edges = self
            .tree_edges
            .iter()
            .map(|&i| self.knn_graph.edges()[i])
            .collect();
        WeightedGraph::new(self.knn_graph.node_count(), edges)
    }
}

/// Kruskal on descending weight; ties broken by (s asc, t asc).
pub fn extract_mst(g: &WeightedGraph) -> Result<CandidatePool> {
    g.require_connected()?;
    let n = g.node_count();
    let edges = g.edges();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| {
        edges[b]
            .w
            .total_cmp(&edges[a].w)
            .then((edges[a].s, edges[a].t).cmp(&(edges[b].s, edges[b].t)))
    });
    let mut uf = UnionFind::new(n);
    let mut tree = Vec::with_capacity(n - 1);
    let mut offtree = Vec::with_capacity(edges.len().saturating_sub(n - 1));
    for idx in order {
        if uf.union(edges[idx].s, edges[idx].t) {
            tree.push(idx);
        } else {
            offtree.push(idx);
        }
    }
    debug_assert_eq!(tree.len(), n - 1);
    tree.sort_unstable();
    offtree.sort_unstable();
    Ok(CandidatePool {
        knn_graph: g.clone(),
        tree_edges: tree,
        offtree_edges: offtree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn triangle_keeps_two_heaviest() {
        let g = WeightedGraph::from_tuples(3, &[(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)]).unwrap();
        let pool = extract_mst(&g).unwrap();
        let weights: Vec<f64> = pool
            .tree_edges
            .iter()
            .map(|&i| g.edges()[i].w)
            .collect();
        assert_eq!(weights.len(), 2);
        assert!(weights.contains(&3.0) && weights.contains(&2.0));
        assert_eq!(pool.offtree_edges.len(), 1);
    }

    #[test]
    fn tree_input_all_edges_kept() {
        let g = WeightedGraph::from_tuples(5, &[(0, 1, 1.0), (1, 2, 2.0), (1, 3, 0.5), (3, 4, 4.0)])
            .unwrap();
        let pool = extract_mst(&g).unwrap();
        assert_eq!(pool.tree_edges, vec![0, 1, 2, 3]);
        assert!(pool.offtree_edges.is_empty());
    }

    #[test]
    fn disconnected_rejected() {
        let g = WeightedGraph::from_tuples(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(matches!(
            extract_mst(&g),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn partition_is_exact() {
        let g = WeightedGraph::from_tuples(
            6,
            &[
                (0, 1, 1.0),
                (1, 2, 5.0),
                (2, 3, 2.0),
                (3, 4, 8.0),
                (4, 5, 1.5),
                (0, 5, 3.0),
                (1, 4, 0.5),
            ],
        )
        .unwrap();
        let pool = extract_mst(&g).unwrap();
        let mut all: Vec<usize> = pool
            .tree_edges
            .iter()
            .chain(&pool.offtree_edges)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert!(pool.tree_graph().unwrap().is_connected());
    }
}
