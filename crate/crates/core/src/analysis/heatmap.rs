use super::category::{Category, CategoryMap};
use super::cluster::{agglomerative_cluster, ClusterTree};
use super::AnalysisError;
use crate::retrieval::EmbeddingStore;

/// All-pair cosine similarity, rows and columns in dendrogram leaf order.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// Record ids in row order.
    pub ids: Vec<usize>,
    pub types: Vec<String>,
    pub categories: Vec<Category>,
    pub matrix: Vec<Vec<f64>>,
    pub tree: ClusterTree,
}

pub fn category_heatmap(store: &EmbeddingStore, categories: &CategoryMap) -> Result<Heatmap, AnalysisError> {
    let records = store.records();
    let cats = categories.assign(records.iter().map(|r| r.sentence_type.as_str()))?;
    let distances = super::cosine_distance_matrix(&store.vectors())?;
    let ids: Vec<usize> = records.iter().map(|r| r.id).collect();
    let tree = agglomerative_cluster(&distances, &ids)?;
    let order = tree.leaf_order();
    let matrix = order
        .iter()
        .map(|&i| order.iter().map(|&j| 1.0 - distances[i][j]).collect())
        .collect();
    Ok(Heatmap {
        ids: order.iter().map(|&i| ids[i]).collect(),
        types: order.iter().map(|&i| records[i].sentence_type.clone()).collect(),
        categories: order.iter().map(|&i| cats[i]).collect(),
        matrix,
        tree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{cosine_similarity, EmbeddingRecord};

    fn store(types: &[&str]) -> EmbeddingStore {
        let mut s = EmbeddingStore::new("h", 3);
        for (i, t) in types.iter().enumerate() {
            let x = i as f32;
            s.push(EmbeddingRecord {
                id: 100 + i,
                sentence_type: t.to_string(),
                source_text: String::new(),
                file: String::new(),
                line: 0,
                z: vec![x.sin(), x.cos() + 0.5, 0.3 * x - 1.0],
            })
            .unwrap();
        }
        s
    }

    #[test]
    fn symmetric_with_unit_diagonal_in_leaf_order() {
        let s = store(&["IF", "MOVE", "READ", "PERFORM", "CALL", "IF", "EVALUATE"]);
        let h = category_heatmap(&s, &CategoryMap::default()).unwrap();
        let n = h.ids.len();
        for i in 0..n {
            assert!((h.matrix[i][i] - 1.0).abs() < 1e-6);
            for j in 0..n {
                assert_eq!(h.matrix[i][j], h.matrix[j][i]);
            }
        }
        let expected: Vec<usize> = h.tree.leaf_order().iter().map(|&i| 100 + i).collect();
        assert_eq!(h.ids, expected);
        let rec = |id: usize| s.records().iter().find(|r| r.id == id).unwrap();
        let direct = cosine_similarity(&rec(h.ids[0]).z, &rec(h.ids[1]).z).unwrap();
        assert!((h.matrix[0][1] - direct).abs() < 1e-12);
        assert_eq!(h.categories.len(), n);
    }

    #[test]
    fn unmapped_types_are_listed() {
        let s = store(&["IF", "MOVE", "CALL"]);
        let map = CategoryMap::parse("IF conditional").unwrap();
        match category_heatmap(&s, &map) {
            Err(AnalysisError::UnmappedType(t)) => assert_eq!(t, ["CALL", "MOVE"]),
            other => panic!("{other:?}"),
        }
    }
}
