//! Corpus-structure tooling over an embedding store: 2-D projection,
//! average-linkage clustering, category heatmaps and attention traces.

mod attention;
mod category;
mod cluster;
mod export;
mod heatmap;
mod pca;

pub use attention::{attention_trace, AttentionTrace};
pub use category::{Category, CategoryMap};
pub use cluster::{agglomerative_cluster, cluster_vectors, cosine_distance_matrix, ClusterNode, ClusterTree};
pub use export::{attention_csv, heatmap_csv, projection_csv, projection_html};
pub use heatmap::{category_heatmap, Heatmap};
pub use pca::{import_coordinates, pca_project, project_store, Projection, ProjectionPoint};

use thiserror::Error;

use crate::neural::NeuralError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("all vectors are identical; no direction of variance")]
    DegenerateData,
    #[error("{0}")]
    InvalidInput(String),
    #[error("sentence types without a category: {}", .0.join(", "))]
    UnmappedType(Vec<String>),
    #[error("category map line {line}: {message}")]
    MalformedCategoryMap { line: usize, message: String },
    #[error("coordinates file line {line}: {message}")]
    MalformedCoordinates { line: usize, message: String },
    #[error("no coordinates for record ids {0:?}")]
    MissingCoordinates(Vec<usize>),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}
