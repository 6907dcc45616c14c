use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::category::{Category, CategoryMap};
use super::AnalysisError;
use crate::retrieval::EmbeddingStore;

/// Top-2 principal-component coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coords: Vec<[f64; 2]>,
    /// Covariance eigenvalues of the two components, descending.
    pub eigenvalues: [f64; 2],
    pub components: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionPoint {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "type")]
    pub sentence_type: String,
    pub category: Category,
}

/// Centres the data and projects onto the two leading eigenvectors of the
/// sample covariance. Each component is signed so that its largest-magnitude
/// loading is positive.
pub fn pca_project<V: AsRef<[f32]>>(vectors: &[V]) -> Result<Projection, AnalysisError> {
    let n = vectors.len();
    let d = vectors.first().map_or(0, |v| v.as_ref().len());
    if n < 2 || d < 2 {
        return Err(AnalysisError::InvalidInput(format!(
            "projection needs at least 2 vectors of at least 2 dimensions, got {n} of {d}"
        )));
    }
    if vectors.iter().any(|v| v.as_ref().len() != d) {
        return Err(AnalysisError::InvalidInput("vectors have different dimensions".into()));
    }
    let first = vectors[0].as_ref();
    if vectors.iter().all(|v| v.as_ref() == first) {
        return Err(AnalysisError::DegenerateData);
    }

    let mut x = DMatrix::<f64>::from_fn(n, d, |i, j| vectors[i].as_ref()[j] as f64);
    for j in 0..d {
        let mean = x.column(j).sum() / n as f64;
        x.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = (x.transpose() * &x) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let component = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let components = [component(0), component(1)];
    let coords = (0..n)
        .map(|i| {
            let row = x.row(i);
            let proj = |c: &[f64]| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            [proj(&components[0]), proj(&components[1])]
        })
        .collect();
    Ok(Projection {
        coords,
        eigenvalues: [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]],
        components,
    })
}

/// Reads externally computed 2-D coordinates (`id,x,y` CSV, optional header).
pub fn import_coordinates(text: &str) -> Result<HashMap<usize, [f64; 2]>, AnalysisError> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let bad = |message: String| AnalysisError::MalformedCoordinates { line: i + 1, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(bad(format!("expected id,x,y, got '{line}'")));
        }
        let id: usize = fields[0].parse().map_err(|_| bad(format!("bad id '{}'", fields[0])))?;
        let coord = |s: &str| -> Result<f64, AnalysisError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("bad coordinate '{s}'")))
        };
        if out.insert(id, [coord(fields[1])?, coord(fields[2])?]).is_some() {
            return Err(bad(format!("duplicate id {id}")));
        }
    }
    Ok(out)
}

/// Joins coordinates (PCA or imported) with store metadata and categories.
pub fn project_store(
    store: &EmbeddingStore,
    coords: &HashMap<usize, [f64; 2]>,
    categories: &CategoryMap,
) -> Result<Vec<ProjectionPoint>, AnalysisError> {
    let cats = categories.assign(store.records().iter().map(|r| r.sentence_type.as_str()))?;
    let missing: Vec<usize> = store
        .records()
        .iter()
        .filter(|r| !coords.contains_key(&r.id))
        .map(|r| r.id)
        .collect();
    if !missing.is_empty() {
        return Err(AnalysisError::MissingCoordinates(missing));
    }
    Ok(store
        .records()
        .iter()
        .zip(cats)
        .map(|(r, category)| {
            let [x, y] = coords[&r.id];
            ProjectionPoint {
                id: r.id,
                x,
                y,
                sentence_type: r.sentence_type.clone(),
                category,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dominant eigenpair by power iteration, then deflation for the second.
    fn power_iteration_top2(cov: &[Vec<f64>]) -> [f64; 2] {
        let d = cov.len();
        let mut a: Vec<Vec<f64>> = cov.to_vec();
        let mut out = [0.0; 2];
        for slot in &mut out {
            let mut v = vec![1.0 / (d as f64).sqrt(); d];
            let mut lambda = 0.0;
            for _ in 0..20_000 {
                let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a[i][j] * v[j]).sum()).collect();
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                v = w.iter().map(|x| x / norm).collect();
                lambda = norm;
            }
            *slot = lambda;
            for i in 0..d {
                for j in 0..d {
                    a[i][j] -= lambda * v[i] * v[j];
                }
            }
        }
        out
    }

    #[test]
    fn eigenvalues_match_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let data: Vec<Vec<f32>> = (0..20)
            .map(|_| (0..8).map(|j| rng.random_range(-1.0f32..1.0) * (8 - j) as f32).collect())
            .collect();
        let p = pca_project(&data).unwrap();

        let n = data.len() as f64;
        let mean: Vec<f64> = (0..8).map(|j| data.iter().map(|r| r[j] as f64).sum::<f64>() / n).collect();
        let cov: Vec<Vec<f64>> = (0..8)
            .map(|a| {
                (0..8)
                    .map(|b| {
                        data.iter()
                            .map(|r| (r[a] as f64 - mean[a]) * (r[b] as f64 - mean[b]))
                            .sum::<f64>()
                            / (n - 1.0)
                    })
                    .collect()
            })
            .collect();
        let oracle = power_iteration_top2(&cov);
        assert!((p.eigenvalues[0] - oracle[0]).abs() < 1e-6, "{:?} vs {oracle:?}", p.eigenvalues);
        assert!((p.eigenvalues[1] - oracle[1]).abs() < 1e-6, "{:?} vs {oracle:?}", p.eigenvalues);
        // Coordinate variance equals the eigenvalue.
        let var = p.coords.iter().map(|c| c[0] * c[0]).sum::<f64>() / (n - 1.0);
        assert!((var - p.eigenvalues[0]).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_have_no_second_component() {
        let pts: Vec<Vec<f32>> = [-2.0f32, 0.5, 1.0, 3.0].iter().map(|&t| vec![t, t, t]).collect();
        let p = pca_project(&pts).unwrap();
        assert!(p.coords.iter().all(|c| c[1].abs() < 1e-9));
        assert!(p.eigenvalues[1].abs() < 1e-9);
        let expected = 1.0 / 3f64.sqrt();
        assert!(p.components[0].iter().all(|v| (v - expected).abs() < 1e-9));
    }

    #[test]
    fn two_dimensional_input_is_an_isometry() {
        let pts = vec![vec![3.0f32, 1.0], vec![-1.0, 2.0], vec![0.0, -4.0], vec![2.5, 0.5]];
        let p = pca_project(&pts).unwrap();
        let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        for i in 0..4 {
            for j in 0..4 {
                let orig = (((pts[i][0] - pts[j][0]) as f64).powi(2) + ((pts[i][1] - pts[j][1]) as f64).powi(2)).sqrt();
                assert!((dist(p.coords[i], p.coords[j]) - orig).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pca_project(&[vec![1.0f32, 2.0], vec![1.0, 2.0]]),
            Err(AnalysisError::DegenerateData)
        ));
        assert!(matches!(pca_project(&[vec![1.0f32, 2.0]]), Err(AnalysisError::InvalidInput(_))));
        assert!(matches!(
            pca_project(&[vec![1.0f32], vec![2.0]]),
            Err(AnalysisError::InvalidInput(_))
        ));
    }

    #[test]
    fn coordinate_import() {
        let c = import_coordinates("id,x,y\n3,0.5,-1\n7, 2, 3e2\n").unwrap();
        assert_eq!(c[&3], [0.5, -1.0]);
        assert_eq!(c[&7], [2.0, 300.0]);
        assert!(import_coordinates("1,2\n").is_err());
        assert!(import_coordinates("1,2,NaN\n").is_err());
        assert!(import_coordinates("1,2,3\n1,4,5\n").is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_reordering(
            rows in prop::collection::vec(prop::collection::vec(-5.0f32..5.0, 4), 3..12),
            seed in 0u64..1000,
        ) {
            prop_assume!(rows.iter().any(|r| r != &rows[0]));
            let base = pca_project(&rows).unwrap();
            let mut perm: Vec<usize> = (0..rows.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let shuffled: Vec<Vec<f32>> = perm.iter().map(|&i| rows[i].clone()).collect();
            let other = pca_project(&shuffled).unwrap();
            for k in 0..2 {
                prop_assert!((base.eigenvalues[k] - other.eigenvalues[k]).abs() < 1e-6);
            }
            // The leading direction is only defined when its eigenvalue is
            // separated from the next one.
            let [l0, l1] = base.eigenvalues;
            if l0 - l1 > 1e-3 * l0.max(1.0) {
                for (new_pos, &old) in perm.iter().enumerate() {
                    prop_assert!((base.coords[old][0] - other.coords[new_pos][0]).abs() < 1e-6);
                }
            }
        }
    }
}
