//! Prediction for unseen points, plus the KNN and whole-dictionary sparse
//! reconstruction baselines.
//!
//! An unseen point is standardized with the model's stored statistics,
//! coded against its k nearest training neighbors (label-free coding with
//! the training beta and gamma), and scored per class as w'X v. Ties go to
//! the lowest class id.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::context::query_context_features;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::solver::{coding_problem, feature_sign_search, code_point};

/// Outcome of classifying one point.
#[derive(Debug, Clone)]
pub struct Prediction {
    /// Winning class id (argmax of scores; ties to the lowest id).
    pub label: usize,
    /// Per-class decision values w_c' X v.
    pub scores: Vec<f64>,
    /// The point's sparse code over its context.
    pub code: DVector<f64>,
    /// Training points forming the context.
    pub neighbor_ids: Vec<usize>,
}

fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Classify one raw (unstandardized) point.
pub fn predict(model: &Model, x: &DVector<f64>) -> Result<Prediction> {
    if x.len() != model.d() {
        return Err(Error::Dimension(format!(
            "point has {} features, model expects {}",
            x.len(),
            model.d()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prediction input".into()));
    }
    let sx = model.standardizer.apply_point(x)?;
    let (xmat, neighbor_ids) =
        query_context_features(&model.train_features, &sx, model.hyper.k)?;
    let code = code_point(&sx, &xmat, model.hyper.beta, model.hyper.gamma)?;
    let xhat = &xmat * &code;
    let scores: Vec<f64> = model.weights.iter().map(|w| w.dot(&xhat)).collect();
    let label = argmax_lowest(&scores);
    Ok(Prediction {
        label,
        scores,
        code,
        neighbor_ids,
    })
}

/// Classify every row of a raw feature matrix. Rows are independent, so the
/// batch parallelizes; the output order matches the input order regardless
/// of the thread count.
pub fn predict_batch(model: &Model, features: &DMatrix<f64>) -> Result<Vec<Prediction>> {
    (0..features.nrows())
        .into_par_iter()
        .map(|i| predict(model, &features.row(i).transpose()))
        .collect()
}

/// Majority vote over the k nearest training points. Distance ties are
/// broken by ascending point index, vote ties by the smallest class id.
pub fn knn_classify(train: &Dataset, x: &DVector<f64>, k: usize) -> Result<usize> {
    let (_, ids) = query_context_features(&train.features, x, k)?;
    let mut votes = vec![0usize; train.class_names.len()];
    for id in ids {
        votes[train.labels[id]] += 1;
    }
    let mut best = 0;
    for (c, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = c;
        }
    }
    Ok(best)
}

/// Sparse-reconstruction residual classifier: code the point over the whole
/// training set as dictionary, then pick the class whose coefficients alone
/// reconstruct it best.
///
/// The n×n dictionary Gram matrix is validated once at construction, so one
/// classifier instance can score many points.
pub struct SrbcClassifier {
    /// d×n dictionary; column j is training point j.
    dict: DMatrix<f64>,
    problem: crate::solver::L1QuadProblem,
    labels: Vec<usize>,
    n_classes: usize,
    beta: f64,
}

impl SrbcClassifier {
    pub fn new(train: &Dataset, beta: f64, gamma: f64) -> Result<Self> {
        if train.class_names.len() < 2 {
            return Err(Error::Config("at least 2 classes required".into()));
        }
        let dict = train.features.transpose();
        // Validate against a zero linear term; each query swaps in its own.
        let problem = coding_problem(&DVector::zeros(train.d()), &dict, beta, gamma)?;
        Ok(SrbcClassifier {
            dict,
            problem,
            labels: train.labels.clone(),
            n_classes: train.class_names.len(),
            beta,
        })
    }

    pub fn classify(&self, x: &DVector<f64>) -> Result<usize> {
        if x.len() != self.dict.nrows() {
            return Err(Error::Dimension(format!(
                "point has {} features, dictionary has {}",
                x.len(),
                self.dict.nrows()
            )));
        }
        let mut problem = self.problem.clone();
        problem.set_linear(self.dict.tr_mul(x) * (-2.0 * self.beta))?;
        let v = feature_sign_search(&problem, &DVector::zeros(self.dict.ncols()))?;

        let mut best: Option<(usize, f64)> = None;
        for c in 0..self.n_classes {
            let mut recon = DVector::zeros(self.dict.nrows());
            for j in 0..v.len() {
                if v[j] != 0.0 && self.labels[j] == c {
                    recon.axpy(v[j], &self.dict.column(j), 1.0);
                }
            }
            let residual = (x - recon).norm();
            if best.is_none_or(|(_, br)| residual < br) {
                best = Some((c, residual));
            }
        }
        Ok(best.expect("n_classes >= 2").0)
    }
}

/// One-shot wrapper over [`SrbcClassifier`].
pub fn srbc_classify(train: &Dataset, x: &DVector<f64>, beta: f64, gamma: f64) -> Result<usize> {
    SrbcClassifier::new(train, beta, gamma)?.classify(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn toy_train() -> Dataset {
        Dataset::new(
            dmatrix![0.0, 0.0; 1.0, 0.0; 10.0, 0.0; 11.0, 0.0],
            vec![0, 0, 1, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn knn_on_top_of_a_training_point() {
        let train = toy_train();
        let x = train.point(2);
        assert_eq!(knn_classify(&train, &x, 1).unwrap(), 1);
    }

    #[test]
    fn knn_majority_vote() {
        let train = toy_train();
        // Near the class-0 pair: votes {a: 2, b: 1} -> a.
        let x = nalgebra::dvector![0.5, 0.0];
        assert_eq!(knn_classify(&train, &x, 3).unwrap(), 0);
    }

    #[test]
    fn knn_vote_tie_takes_smallest_class_id() {
        let train = toy_train();
        let x = nalgebra::dvector![5.5, 0.0];
        // k=2 picks one point from each class (ids 1 and 2): tie -> class 0.
        assert_eq!(knn_classify(&train, &x, 2).unwrap(), 0);
    }

    #[test]
    fn srbc_self_representation() {
        let train = toy_train();
        let x = train.point(0);
        assert_eq!(srbc_classify(&train, &x, 1.0, 1e-3).unwrap(), 0);
        let y = train.point(3);
        assert_eq!(srbc_classify(&train, &y, 1.0, 1e-3).unwrap(), 1);
    }

    #[test]
    fn srbc_orthogonal_one_point_classes() {
        let train = Dataset::new(
            dmatrix![1.0, 0.0; 0.0, 1.0],
            vec![0, 1],
            vec!["x".into(), "y".into()],
        )
        .unwrap();
        let x = train.point(0);
        assert_eq!(srbc_classify(&train, &x, 1.0, 1e-3).unwrap(), 0);
    }

    #[test]
    fn argmax_tie_breaks_to_lowest_id() {
        assert_eq!(argmax_lowest(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax_lowest(&[-1.0, 2.0, 2.0]), 1);
    }
}
