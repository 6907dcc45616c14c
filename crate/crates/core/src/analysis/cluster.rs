use std::fmt::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::retrieval::cosine_similarity;

/// Node of a merge tree. Leaves are `0..n`; internal node `n + k` is the
/// k-th merge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterNode {
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub distance: f64,
    pub size: usize,
    /// Smallest leaf index below this node.
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterTree {
    /// Caller-supplied label of each leaf (record ids).
    pub leaf_ids: Vec<usize>,
    pub nodes: Vec<ClusterNode>,
}

impl ClusterTree {
    pub fn n_leaves(&self) -> usize {
        self.leaf_ids.len()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// `(left, right, distance)` per merge, in merge order.
    pub fn merges(&self) -> Vec<(usize, usize, f64)> {
        self.nodes[self.n_leaves()..]
            .iter()
            .map(|n| (n.left.expect("internal"), n.right.expect("internal"), n.distance))
            .collect()
    }

    /// Leaf indices in in-order (left subtree first) traversal.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_leaves());
        let mut stack = vec![self.root()];
        while let Some(n) = stack.pop() {
            match (self.nodes[n].left, self.nodes[n].right) {
                (Some(l), Some(r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                _ => out.push(n),
            }
        }
        out
    }

    /// Parenthesised tree with merge distances, leaves labelled by id:
    /// `((3,5):0.25,7):0.5`.
    pub fn dendrogram(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root(), &mut out);
        out
    }

    fn write_node(&self, n: usize, out: &mut String) {
        let node = &self.nodes[n];
        match (node.left, node.right) {
            (Some(l), Some(r)) => {
                out.push('(');
                self.write_node(l, out);
                out.push(',');
                self.write_node(r, out);
                let _ = write!(out, "):{}", node.distance);
            }
            _ => {
                let _ = write!(out, "{}", self.leaf_ids[n]);
            }
        }
    }
}

/// Pairwise `1 − cosine` distances, rows computed in parallel.
pub fn cosine_distance_matrix<V: AsRef<[f32]> + Sync>(vectors: &[V]) -> Result<Vec<Vec<f64>>, AnalysisError> {
    vectors
        .par_iter()
        .map(|a| {
            vectors
                .iter()
                .map(|b| {
                    cosine_similarity(a.as_ref(), b.as_ref())
                        .map(|c| (1.0 - c).max(0.0))
                        .map_err(|e| AnalysisError::InvalidInput(e.to_string()))
                })
                .collect()
        })
        .collect()
}

/// Average-linkage clustering over a symmetric distance matrix.
///
/// Cluster distance is the mean of all cross-cluster leaf distances, kept as
/// running sums so merges never re-average. Among equally close pairs the
/// one with the lexicographically smallest (min-leaf, min-leaf) wins; the
/// child with the smaller min-leaf becomes the left child.
pub fn agglomerative_cluster(distances: &[Vec<f64>], leaf_ids: &[usize]) -> Result<ClusterTree, AnalysisError> {
    let n = distances.len();
    if n < 2 {
        return Err(AnalysisError::InvalidInput(format!("clustering needs at least 2 items, got {n}")));
    }
    if leaf_ids.len() != n || distances.iter().any(|r| r.len() != n) {
        return Err(AnalysisError::InvalidInput("distance matrix must be square and match the ids".into()));
    }
    if distances.iter().flatten().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(AnalysisError::InvalidInput("distances must be finite and non-negative".into()));
    }

    let mut nodes: Vec<ClusterNode> = (0..n)
        .map(|i| ClusterNode {
            left: None,
            right: None,
            distance: 0.0,
            size: 1,
            min_leaf: i,
        })
        .collect();
    // Active clusters by node index, with cross-distance sums between them.
    let mut active: Vec<usize> = (0..n).collect();
    let mut sums: Vec<Vec<f64>> = distances.to_vec();

    while active.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let (na, nb) = (&nodes[active[a]], &nodes[active[b]]);
                let d = sums[a][b] / (na.size * nb.size) as f64;
                let key = (na.min_leaf.min(nb.min_leaf), na.min_leaf.max(nb.min_leaf));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (d, _, a, b) = best.expect("at least two active clusters");
        let (left, right) = if nodes[active[a]].min_leaf < nodes[active[b]].min_leaf {
            (active[a], active[b])
        } else {
            (active[b], active[a])
        };
        nodes.push(ClusterNode {
            left: Some(left),
            right: Some(right),
            distance: d,
            size: nodes[left].size + nodes[right].size,
            min_leaf: nodes[left].min_leaf.min(nodes[right].min_leaf),
        });

        // Row a becomes the merged cluster; row b is removed.
        #[allow(clippy::needless_range_loop)]
        for k in 0..active.len() {
            let merged = sums[a][k] + sums[b][k];
            sums[a][k] = merged;
            sums[k][a] = merged;
        }
        sums[a][a] = 0.0;
        sums.remove(b);
        for row in &mut sums {
            row.remove(b);
        }
        active[a] = nodes.len() - 1;
        active.remove(b);
    }
    Ok(ClusterTree {
        leaf_ids: leaf_ids.to_vec(),
        nodes,
    })
}

/// Cosine-distance average-linkage tree over vectors labelled by `ids`.
pub fn cluster_vectors<V: AsRef<[f32]> + Sync>(vectors: &[V], ids: &[usize]) -> Result<ClusterTree, AnalysisError> {
    agglomerative_cluster(&cosine_distance_matrix(vectors)?, ids)
}
