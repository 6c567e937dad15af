//! Exact k-nearest-neighbor search and per-point context matrices.
//!
//! The context of a point is its k nearest training neighbors under the
//! Euclidean metric; their feature vectors form the d×k dictionary used for
//! sparse reconstruction. Search is brute force and exact: distances are
//! compared as squared norms, ties broken by ascending point index.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Neighbor lists and context matrices for every training point.
///
/// For training points the point itself is excluded from its own context;
/// otherwise the trivial self-reconstruction would satisfy the coding
/// objective exactly.
#[derive(Debug, Clone)]
pub struct ContextIndex {
    pub k: usize,
    /// `neighbor_ids[i]` lists the k nearest training points to point i,
    /// distance-ascending, i itself excluded.
    pub neighbor_ids: Vec<Vec<usize>>,
    /// `context_mats[i]` is d×k; column j is the feature vector of
    /// `neighbor_ids[i][j]`.
    pub context_mats: Vec<DMatrix<f64>>,
}

fn squared_distance_to_row(features: &DMatrix<f64>, row: usize, x: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for c in 0..features.ncols() {
        let diff = features[(row, c)] - x[c];
        acc += diff * diff;
    }
    acc
}

fn nearest_rows(
    features: &DMatrix<f64>,
    x: &DVector<f64>,
    k: usize,
    exclude: Option<usize>,
) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = (0..features.nrows())
        .filter(|&j| Some(j) != exclude)
        .map(|j| (squared_distance_to_row(features, j, x), j))
        .collect();
    order.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    order.into_iter().take(k).map(|(_, j)| j).collect()
}

fn context_matrix(features: &DMatrix<f64>, ids: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(features.ncols(), ids.len(), |r, c| features[(ids[c], r)])
}

/// Build the training-time context index over standardized features.
pub fn build_index(train: &Dataset, k: usize) -> Result<ContextIndex> {
    build_index_features(&train.features, k)
}

pub fn build_index_features(features: &DMatrix<f64>, k: usize) -> Result<ContextIndex> {
    let n = features.nrows();
    if k < 1 || k > n.saturating_sub(1) {
        return Err(Error::Config(format!(
            "k must satisfy 1 <= k <= n-1 (k={k}, n={n})"
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features".into()));
    }
    let mut neighbor_ids = Vec::with_capacity(n);
    let mut context_mats = Vec::with_capacity(n);
    for i in 0..n {
        let x = features.row(i).transpose();
        let ids = nearest_rows(features, &x, k, Some(i));
        context_mats.push(context_matrix(features, &ids));
        neighbor_ids.push(ids);
    }
    Ok(ContextIndex {
        k,
        neighbor_ids,
        context_mats,
    })
}

/// Context of an unseen query point: its k nearest training points (no
/// self-exclusion — the query is not a training point). Returns the d×k
/// context matrix and the neighbor ids.
pub fn query_context(
    train: &Dataset,
    x: &DVector<f64>,
    k: usize,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    query_context_features(&train.features, x, k)
}

pub fn query_context_features(
    features: &DMatrix<f64>,
    x: &DVector<f64>,
    k: usize,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let n = features.nrows();
    if k < 1 || k > n {
        return Err(Error::Config(format!(
            "k must satisfy 1 <= k <= n (k={k}, n={n})"
        )));
    }
    if x.len() != features.ncols() {
        return Err(Error::Dimension(format!(
            "query has {} features, training data has {}",
            x.len(),
            features.ncols()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query point".into()));
    }
    let ids = nearest_rows(features, x, k, None);
    Ok((context_matrix(features, &ids), ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn line_dataset(values: &[f64]) -> Dataset {
        let n = values.len();
        Dataset::new(
            DMatrix::from_fn(n, 1, |r, _| values[r]),
            vec![0; n],
            vec!["a".into()],
        )
        .unwrap()
    }

    #[test]
    fn ordered_line_neighbors() {
        let ds = line_dataset(&[0.0, 1.0, 2.0, 10.0]);
        let idx = build_index(&ds, 2).unwrap();
        assert_eq!(idx.neighbor_ids[0], vec![1, 2]);
        assert_eq!(idx.context_mats[0][(0, 0)], 1.0);
        assert_eq!(idx.context_mats[0][(0, 1)], 2.0);
    }

    #[test]
    fn equidistant_tie_prefers_lower_index() {
        let ds = line_dataset(&[0.0, -1.0, 1.0]);
        let idx = build_index(&ds, 1).unwrap();
        assert_eq!(idx.neighbor_ids[0], vec![1]);
    }

    #[test]
    fn self_is_excluded() {
        let ds = line_dataset(&[0.0, 1.0, 2.0]);
        let idx = build_index(&ds, 2).unwrap();
        for (i, ids) in idx.neighbor_ids.iter().enumerate() {
            assert!(!ids.contains(&i));
            assert_eq!(ids.len(), 2);
        }
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let ds = line_dataset(&[0.0, 1.0, 2.0]);
        assert!(build_index(&ds, 0).is_err());
        assert!(build_index(&ds, 3).is_err());
    }

    #[test]
    fn query_on_training_point_finds_it_first() {
        let ds = line_dataset(&[0.0, 1.0, 5.0]);
        let (xmat, ids) = query_context(&ds, &dvector![1.0], 1).unwrap();
        assert_eq!(ids, vec![1]);
        assert_eq!(xmat[(0, 0)], 1.0);
    }

    #[test]
    fn query_midpoint_tie_breaks_by_index() {
        let ds = line_dataset(&[0.0, 2.0, 50.0]);
        let (_, ids) = query_context(&ds, &dvector![1.0], 2).unwrap();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn query_dimension_mismatch() {
        let ds = line_dataset(&[0.0, 1.0]);
        assert!(query_context(&ds, &dvector![0.0, 1.0], 1).is_err());
    }
}
