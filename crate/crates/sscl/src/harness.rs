//! Seeded k-fold cross validation, baseline comparison, and parameter
//! sweeps emitting plot-ready CSV.
//!
//! Per fold, imputation and standardization are fitted on the training rows
//! only, so no held-out information reaches the trained model. Folds are
//! independent and may run in parallel; results are keyed by fold id, so the
//! output is identical regardless of the thread count.

use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{fit_standardizer, reimpute_from_train, Dataset};
use crate::error::{Error, Result};
use crate::io_util::fmt12;
use crate::predict::{knn_classify, predict_batch, SrbcClassifier};
use crate::trainer::{train_ovr, Hyperparams};

/// Disjoint cover of 0..n by `folds` groups with sizes differing by at most
/// one, from a seeded shuffle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KFoldSplit {
    pub fold_of: Vec<usize>,
    pub folds: usize,
}

pub fn kfold_split(n: usize, folds: usize, seed: u64) -> Result<KFoldSplit> {
    if folds < 2 || folds > n {
        return Err(Error::Config(format!(
            "folds must satisfy 2 <= folds <= n (folds={folds}, n={n})"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let base = n / folds;
    let rem = n % folds;
    let mut fold_of = vec![0usize; n];
    let mut pos = 0;
    for f in 0..folds {
        let size = base + usize::from(f < rem);
        for &p in &perm[pos..pos + size] {
            fold_of[p] = f;
        }
        pos += size;
    }
    Ok(KFoldSplit { fold_of, folds })
}

impl KFoldSplit {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sscl,
    Knn,
    Srbc,
    /// Constant predictor: the training fold's most frequent class. A floor
    /// for every other method and a test hook for the harness itself.
    Majority,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sscl" => Ok(Method::Sscl),
            "knn" => Ok(Method::Knn),
            "srbc" => Ok(Method::Srbc),
            "majority" => Ok(Method::Majority),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected sscl, knn, srbc or majority)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Sscl => "sscl",
            Method::Knn => "knn",
            Method::Srbc => "srbc",
            Method::Majority => "majority",
        };
        f.write_str(s)
    }
}

/// One fold's outcome. A training failure is recorded (not propagated) so
/// the remaining folds still run.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub accuracy: Option<f64>,
    /// confusion[true][predicted], class-id indexed, over the held-out rows.
    pub confusion: Option<Vec<Vec<usize>>>,
    /// Wall-clock seconds for this fold (measurement only; never written to
    /// output files unless timing is explicitly requested).
    pub seconds: f64,
    pub error: Option<String>,
    /// Mean zero fraction of the trained codes (sscl only).
    pub code_zero_fraction: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CVResult {
    pub method: Method,
    pub hyper: Hyperparams,
    pub seed: u64,
    pub n_classes: usize,
    pub folds: Vec<FoldOutcome>,
}

impl CVResult {
    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().filter_map(|f| f.accuracy).collect()
    }

    pub fn mean_accuracy(&self) -> Option<f64> {
        let acc = self.accuracies();
        if acc.is_empty() {
            None
        } else {
            Some(acc.iter().sum::<f64>() / acc.len() as f64)
        }
    }

    pub fn std_accuracy(&self) -> Option<f64> {
        let acc = self.accuracies();
        let mean = self.mean_accuracy()?;
        let var = acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / acc.len() as f64;
        Some(var.sqrt())
    }

    pub fn failed_folds(&self) -> usize {
        self.folds.iter().filter(|f| f.error.is_some()).count()
    }

    pub fn mean_code_zero_fraction(&self) -> Option<f64> {
        let vals: Vec<f64> = self.folds.iter().filter_map(|f| f.code_zero_fraction).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

fn majority_class(labels: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (c, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = c;
        }
    }
    best
}

fn run_fold(
    data: &Dataset,
    method: Method,
    h: &Hyperparams,
    split: &KFoldSplit,
    fold: usize,
) -> FoldOutcome {
    let start = Instant::now();
    let n_classes = data.class_names.len();
    let body = || -> Result<(f64, Vec<Vec<usize>>, Option<f64>)> {
        let train_idx = split.train_indices(fold);
        let test_idx = split.test_indices(fold);
        let reimputed = reimpute_from_train(data, &train_idx)?;
        let train = reimputed.subset(&train_idx);
        let test = reimputed.subset(&test_idx);

        let mut confusion = vec![vec![0usize; n_classes]; n_classes];
        let mut correct = 0usize;
        let mut sparsity = None;

        let predictions: Vec<usize> = match method {
            Method::Sscl => {
                let (model, binaries) = train_ovr(&train, h)?;
                let trained: Vec<f64> = binaries
                    .iter()
                    .flatten()
                    .map(|b| b.codes.zero_fraction())
                    .collect();
                if !trained.is_empty() {
                    sparsity = Some(trained.iter().sum::<f64>() / trained.len() as f64);
                }
                predict_batch(&model, &test.features)?
                    .into_iter()
                    .map(|p| p.label)
                    .collect()
            }
            Method::Knn => {
                let s = fit_standardizer(&train);
                let st_train = s.apply(&train)?;
                let st_test = s.apply_features(&test.features)?;
                (0..test.n())
                    .map(|i| knn_classify(&st_train, &st_test.row(i).transpose(), h.k))
                    .collect::<Result<Vec<usize>>>()?
            }
            Method::Srbc => {
                let s = fit_standardizer(&train);
                let st_train = s.apply(&train)?;
                let st_test = s.apply_features(&test.features)?;
                let clf = SrbcClassifier::new(&st_train, h.beta, h.gamma)?;
                (0..test.n())
                    .map(|i| clf.classify(&st_test.row(i).transpose()))
                    .collect::<Result<Vec<usize>>>()?
            }
            Method::Majority => {
                let c = majority_class(&train.labels, n_classes);
                vec![c; test.n()]
            }
        };

        for (i, &p) in predictions.iter().enumerate() {
            confusion[test.labels[i]][p] += 1;
            if p == test.labels[i] {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / test.n() as f64;
        Ok((accuracy, confusion, sparsity))
    };

    match body() {
        Ok((accuracy, confusion, code_zero_fraction)) => FoldOutcome {
            fold,
            accuracy: Some(accuracy),
            confusion: Some(confusion),
            seconds: start.elapsed().as_secs_f64(),
            error: None,
            code_zero_fraction,
        },
        Err(e) => {
            log::warn!("fold {fold} failed: {e}");
            FoldOutcome {
                fold,
                accuracy: None,
                confusion: None,
                seconds: start.elapsed().as_secs_f64(),
                error: Some(e.to_string()),
                code_zero_fraction: None,
            }
        }
    }
}

/// Cross-validate one method. Fold splitting, imputation, standardization
/// and training are all derived from the training rows and the seed only.
pub fn run_cv(
    data: &Dataset,
    method: Method,
    h: &Hyperparams,
    folds: usize,
    seed: u64,
) -> Result<CVResult> {
    h.validate()?;
    let split = kfold_split(data.n(), folds, seed)?;
    let outcomes: Vec<FoldOutcome> = (0..folds)
        .into_par_iter()
        .map(|f| run_fold(data, method, h, &split, f))
        .collect();
    Ok(CVResult {
        method,
        hyper: h.clone(),
        seed,
        n_classes: data.class_names.len(),
        folds: outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Beta,
    Gamma,
    K,
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            "gamma" => Ok(SweepParam::Gamma),
            "k" => Ok(SweepParam::K),
            other => Err(Error::Config(format!(
                "unknown sweep parameter {other:?} (expected alpha, beta, gamma or k)"
            ))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::K => "k",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub result: Option<CVResult>,
    pub skipped: Option<String>,
}

fn apply_sweep_value(base: &Hyperparams, param: SweepParam, value: f64) -> Result<Hyperparams> {
    let mut h = base.clone();
    match param {
        SweepParam::Alpha => h.alpha = value,
        SweepParam::Beta => h.beta = value,
        SweepParam::Gamma => h.gamma = value,
        SweepParam::K => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "k must be a positive integer, got {value}"
                )));
            }
            h.k = value as usize;
        }
    }
    h.validate()?;
    Ok(h)
}

/// One CV run per value with the fold assignment shared across values (and
/// with any other run using the same seed), so comparisons are paired.
/// Values that violate a validation rule (e.g. the alpha <= sqrt(2*beta)
/// guard) are reported as skipped rather than failing the sweep.
pub fn sweep(
    data: &Dataset,
    method: Method,
    base: &Hyperparams,
    param: SweepParam,
    values: &[f64],
    folds: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        match apply_sweep_value(base, param, value) {
            Ok(h) => {
                let result = run_cv(data, method, &h, folds, seed)?;
                points.push(SweepPoint {
                    value,
                    result: Some(result),
                    skipped: None,
                });
            }
            Err(e) => {
                let reason = if e.to_string().contains("alpha <= sqrt(2*beta)") {
                    "skipped: convexity guard".to_string()
                } else {
                    format!("skipped: {e}")
                };
                log::warn!("sweep {param}={value}: {reason}");
                points.push(SweepPoint {
                    value,
                    result: None,
                    skipped: Some(reason),
                });
            }
        }
    }
    Ok(points)
}

/// Boxplot-ready CSV: `method,fold,accuracy,seconds`, one row per fold.
/// Failed folds carry NA accuracy. The seconds column is NA unless timing is
/// requested, keeping default outputs byte-identical across repeated runs.
pub fn cv_csv(result: &CVResult, config_echo: &str, include_timing: bool) -> String {
    let mut out = String::new();
    if !config_echo.is_empty() {
        out.push_str("# ");
        out.push_str(config_echo);
        out.push('\n');
    }
    out.push_str("method,fold,accuracy,seconds\n");
    for f in &result.folds {
        let acc = f.accuracy.map(fmt12).unwrap_or_else(|| "NA".into());
        let secs = if include_timing {
            fmt12(f.seconds)
        } else {
            "NA".into()
        };
        out.push_str(&format!("{},{},{acc},{secs}\n", result.method, f.fold));
    }
    out
}

/// Sweep CSV: `param,value,mean_acc,std_acc,skipped`.
pub fn sweep_csv(param: SweepParam, points: &[SweepPoint], config_echo: &str) -> String {
    let mut out = String::new();
    if !config_echo.is_empty() {
        out.push_str("# ");
        out.push_str(config_echo);
        out.push('\n');
    }
    out.push_str("param,value,mean_acc,std_acc,skipped\n");
    for p in points {
        let (mean, std) = match &p.result {
            Some(r) => (
                r.mean_accuracy().map(fmt12).unwrap_or_else(|| "NA".into()),
                r.std_accuracy().map(fmt12).unwrap_or_else(|| "NA".into()),
            ),
            None => ("".into(), "".into()),
        };
        let skipped = p.skipped.clone().unwrap_or_default();
        out.push_str(&format!("{param},{},{mean},{std},{skipped}\n", fmt12(p.value)));
    }
    out
}

/// Parsed row of the boxplot CSV (`NA` becomes None).
#[derive(Debug, Clone, PartialEq)]
pub struct CvCsvRow {
    pub method: String,
    pub fold: usize,
    pub accuracy: Option<f64>,
    pub seconds: Option<f64>,
}

pub fn parse_cv_csv(text: &str) -> Result<Vec<CvCsvRow>> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                path: "<cv csv>".into(),
                line: lineno + 1,
                msg: format!("expected 4 columns, got {}", parts.len()),
            });
        }
        let opt = |tok: &str| -> Result<Option<f64>> {
            if tok == "NA" {
                Ok(None)
            } else {
                Ok(Some(crate::io_util::parse_f64(tok, "<cv csv>", lineno + 1)?))
            }
        };
        rows.push(CvCsvRow {
            method: parts[0].to_string(),
            fold: parts[1].parse().map_err(|_| Error::Parse {
                path: "<cv csv>".into(),
                line: lineno + 1,
                msg: format!("bad fold index {:?}", parts[1]),
            })?,
            accuracy: opt(parts[2])?,
            seconds: opt(parts[3])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticKind};

    #[test]
    fn leave_one_out_shape() {
        let split = kfold_split(10, 10, 1).unwrap();
        for f in 0..10 {
            assert_eq!(split.test_indices(f).len(), 1);
        }
    }

    #[test]
    fn remainder_goes_to_the_first_fold() {
        let split = kfold_split(11, 10, 1).unwrap();
        let sizes: Vec<usize> = (0..10).map(|f| split.test_indices(f).len()).collect();
        assert_eq!(sizes[0], 2);
        assert!(sizes[1..].iter().all(|&s| s == 1));
    }

    #[test]
    fn split_is_deterministic_and_covers_everything() {
        let a = kfold_split(37, 5, 123).unwrap();
        let b = kfold_split(37, 5, 123).unwrap();
        assert_eq!(a, b);
        let mut seen = vec![false; 37];
        for f in 0..5 {
            for i in a.test_indices(f) {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn folds_out_of_range() {
        assert!(kfold_split(5, 1, 0).is_err());
        assert!(kfold_split(5, 6, 0).is_err());
    }

    #[test]
    fn majority_accuracy_equals_held_out_majority_fraction() {
        let data = gen_synthetic(SyntheticKind::TwoGauss, 40, 2, 3, 1.0).unwrap();
        let h = Hyperparams::default();
        let result = run_cv(&data, Method::Majority, &h, 4, 9).unwrap();
        let split = kfold_split(40, 4, 9).unwrap();
        for f in 0..4 {
            let train_idx = split.train_indices(f);
            let maj = majority_class(
                &train_idx.iter().map(|&i| data.labels[i]).collect::<Vec<_>>(),
                2,
            );
            let test_idx = split.test_indices(f);
            let frac = test_idx.iter().filter(|&&i| data.labels[i] == maj).count() as f64
                / test_idx.len() as f64;
            assert_eq!(result.folds[f].accuracy.unwrap(), frac);
        }
    }

    #[test]
    fn cv_csv_round_trips_at_12_digits() {
        let data = gen_synthetic(SyntheticKind::TwoGauss, 24, 2, 5, 3.0).unwrap();
        let h = Hyperparams {
            k: 3,
            max_outer: 4,
            ..Hyperparams::default()
        };
        let result = run_cv(&data, Method::Knn, &h, 3, 7).unwrap();
        let text = cv_csv(&result, "test echo", true);
        let rows = parse_cv_csv(&text).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, fold) in rows.iter().zip(result.folds.iter()) {
            assert_eq!(row.fold, fold.fold);
            assert_eq!(fmt12(row.accuracy.unwrap()), fmt12(fold.accuracy.unwrap()));
            assert_eq!(fmt12(row.seconds.unwrap()), fmt12(fold.seconds));
        }
    }

    #[test]
    fn sweep_marks_guard_violations_as_skipped() {
        let data = gen_synthetic(SyntheticKind::TwoGauss, 20, 2, 5, 3.0).unwrap();
        let h = Hyperparams {
            k: 2,
            max_outer: 2,
            ..Hyperparams::default()
        };
        let points = sweep(
            &data,
            Method::Majority,
            &h,
            SweepParam::Alpha,
            &[0.5, 2.0],
            4,
            1,
        )
        .unwrap();
        assert!(points[0].result.is_some());
        assert_eq!(points[1].skipped.as_deref(), Some("skipped: convexity guard"));
        let text = sweep_csv(SweepParam::Alpha, &points, "");
        assert!(text.contains("skipped: convexity guard"));
    }

    #[test]
    fn empty_sweep_values_error() {
        let data = gen_synthetic(SyntheticKind::TwoGauss, 20, 2, 5, 3.0).unwrap();
        let h = Hyperparams::default();
        assert!(sweep(&data, Method::Knn, &h, SweepParam::Gamma, &[], 4, 1).is_err());
    }
}
