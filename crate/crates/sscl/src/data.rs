//! Dataset representation, CSV ingestion, missing-value imputation,
//! per-column standardization, and seeded synthetic generators.
//!
//! The CSV format is: UTF-8, comma-separated, label in column 0, remaining
//! columns numeric with `?` marking a missing cell. Lines starting with `#`
//! are comments. An optional single header row (after any comments) is
//! skipped when `has_header` is set.

use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::io_util::{atomic_write, fmt12, read_to_string};

/// A labeled dataset of `n` points with `d` numeric features each.
///
/// Labels are dense integer ids into `class_names`, assigned in first
/// appearance order by the loader. `missing` records cells that were imputed
/// at load time so that leak-free pipelines can re-impute them from a
/// training subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// n×d feature matrix, one row per point.
    pub features: DMatrix<f64>,
    /// Dense class id per point.
    pub labels: Vec<usize>,
    /// Distinct label names, in first-appearance order.
    pub class_names: Vec<String>,
    /// (row, column) cells that were missing in the source and hold imputed
    /// values. Empty for fully observed data.
    pub missing: Vec<(usize, usize)>,
}

impl Dataset {
    pub fn new(
        features: DMatrix<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.shape();
        if n < 2 {
            return Err(Error::Config(format!("dataset needs at least 2 points, got {n}")));
        }
        if d < 1 {
            return Err(Error::Config("dataset needs at least 1 feature column".into()));
        }
        if labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {} rows",
                labels.len(),
                n
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::Config(format!(
                "label id {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features".into()));
        }
        Ok(Dataset {
            features,
            labels,
            class_names,
            missing: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// Feature vector of point `i` as an owned column vector.
    pub fn point(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    /// Row subset (e.g. one side of a fold split). Class names and label ids
    /// are preserved; the missing mask is remapped to the new row numbering.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let d = self.d();
        let features = DMatrix::from_fn(rows.len(), d, |r, c| self.features[(rows[r], c)]);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        let missing = self
            .missing
            .iter()
            .filter_map(|&(r, c)| rows.iter().position(|&x| x == r).map(|nr| (nr, c)))
            .collect();
        Dataset {
            features,
            labels,
            class_names: self.class_names.clone(),
            missing,
        }
    }
}

/// Load the CSV format described in the module docs.
///
/// Missing cells (`?`) are imputed with the column mean over the observed
/// entries of the whole file; the affected cells are recorded in
/// [`Dataset::missing`]. A column with no observed entry at all is an error.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_csv(&text, has_header, &path.display().to_string())
}

pub(crate) fn parse_csv(text: &str, has_header: bool, origin: &str) -> Result<Dataset> {
    let mut rows: Vec<(usize, &str)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        rows.push((idx + 1, line));
    }
    if has_header && !rows.is_empty() {
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: origin.into(),
            line: 0,
            msg: "no rows".into(),
        });
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    let mut d: Option<usize> = None;

    for &(lineno, line) in &rows {
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or("").trim().to_string();
        let feats: Vec<&str> = fields.collect();
        match d {
            None => {
                if feats.is_empty() {
                    return Err(Error::Parse {
                        path: origin.into(),
                        line: lineno,
                        msg: "no feature columns".into(),
                    });
                }
                d = Some(feats.len());
            }
            Some(expect) if feats.len() != expect => {
                return Err(Error::Parse {
                    path: origin.into(),
                    line: lineno,
                    msg: format!("expected {} feature columns, got {}", expect, feats.len()),
                });
            }
            _ => {}
        }
        let id = match class_names.iter().position(|c| *c == label) {
            Some(id) => id,
            None => {
                class_names.push(label);
                class_names.len() - 1
            }
        };
        labels.push(id);
        let mut row = Vec::with_capacity(feats.len());
        for tok in feats {
            let tok = tok.trim();
            if tok == "?" {
                row.push(None);
            } else {
                row.push(Some(crate::io_util::parse_f64(tok, origin, lineno)?));
            }
        }
        cells.push(row);
    }

    let n = cells.len();
    let d = d.unwrap();
    let mut features = DMatrix::zeros(n, d);
    let mut missing = Vec::new();
    for c in 0..d {
        let observed: Vec<f64> = cells.iter().filter_map(|row| row[c]).collect();
        if observed.is_empty() {
            return Err(Error::Parse {
                path: origin.into(),
                line: 0,
                msg: format!("feature column {c} has no observed values (all missing)"),
            });
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        for (r, row) in cells.iter().enumerate() {
            match row[c] {
                Some(v) => features[(r, c)] = v,
                None => {
                    features[(r, c)] = mean;
                    missing.push((r, c));
                }
            }
        }
    }

    let mut ds = Dataset::new(features, labels, class_names)?;
    ds.missing = missing;
    Ok(ds)
}

/// Serialize in the loadable CSV format (label name first, features at 12
/// significant digits, no header).
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..data.n() {
        out.push_str(&data.class_names[data.labels[i]]);
        for c in 0..data.d() {
            out.push(',');
            out.push_str(&fmt12(data.features[(i, c)]));
        }
        out.push('\n');
    }
    out
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &dataset_to_csv(data))
}

/// Re-impute the originally-missing cells using column means computed from
/// the observed entries of `train_rows` only. Returns a dataset where no
/// information from rows outside `train_rows` leaks into any imputed value.
pub fn reimpute_from_train(data: &Dataset, train_rows: &[usize]) -> Result<Dataset> {
    if data.missing.is_empty() {
        return Ok(data.clone());
    }
    let mut out = data.clone();
    let mut columns: Vec<usize> = data.missing.iter().map(|&(_, c)| c).collect();
    columns.sort_unstable();
    columns.dedup();
    for &c in &columns {
        let observed: Vec<f64> = train_rows
            .iter()
            .filter(|&&r| !data.missing.contains(&(r, c)))
            .map(|&r| data.features[(r, c)])
            .collect();
        if observed.is_empty() {
            return Err(Error::Config(format!(
                "feature column {c} has no observed values in the training rows"
            )));
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        for &(r, mc) in &data.missing {
            if mc == c {
                out.features[(r, c)] = mean;
            }
        }
    }
    Ok(out)
}

/// Per-column affine transform fitted on training data: subtract the mean,
/// divide by the population standard deviation. Columns with stddev below
/// 1e-12 are centered only.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: DVector<f64>,
    pub stddevs: DVector<f64>,
}

const STD_FLOOR: f64 = 1e-12;

pub fn fit_standardizer(train: &Dataset) -> Standardizer {
    let (n, d) = train.features.shape();
    let mut means = DVector::zeros(d);
    let mut stddevs = DVector::zeros(d);
    for c in 0..d {
        let col = train.features.column(c);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        means[c] = mean;
        stddevs[c] = var.sqrt();
    }
    Standardizer { means, stddevs }
}

impl Standardizer {
    pub fn d(&self) -> usize {
        self.means.len()
    }

    pub fn apply_features(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.d() {
            return Err(Error::Dimension(format!(
                "standardizer fitted on {} columns, data has {}",
                self.d(),
                features.ncols()
            )));
        }
        let mut out = features.clone();
        for c in 0..self.d() {
            let (mu, sd) = (self.means[c], self.stddevs[c]);
            for r in 0..out.nrows() {
                out[(r, c)] -= mu;
                if sd >= STD_FLOOR {
                    out[(r, c)] /= sd;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        let features = self.apply_features(&data.features)?;
        let mut out = data.clone();
        out.features = features;
        Ok(out)
    }

    pub fn apply_point(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.d() {
            return Err(Error::Dimension(format!(
                "standardizer fitted on {} columns, point has {}",
                self.d(),
                x.len()
            )));
        }
        let mut out = x.clone();
        for c in 0..self.d() {
            out[c] -= self.means[c];
            if self.stddevs[c] >= STD_FLOOR {
                out[c] /= self.stddevs[c];
            }
        }
        Ok(out)
    }
}

/// Synthetic dataset families for desk-scale experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Two unit-covariance Gaussians at -separation*e1 (class "0") and
    /// +separation*e1 (class "1"), n/2 points each.
    TwoGauss,
    /// Class "0" is a unit Gaussian blob at the origin; class "1" lies on a
    /// ring of radius `separation` in the first two coordinates (radial
    /// noise 0.25), with unit Gaussian noise in the remaining coordinates.
    /// Not linearly separable. Requires d >= 2.
    XorRing,
}

impl FromStr for SyntheticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-gauss" => Ok(SyntheticKind::TwoGauss),
            "xor-ring" => Ok(SyntheticKind::XorRing),
            other => Err(Error::Config(format!(
                "unknown synthetic kind {other:?} (expected two-gauss or xor-ring)"
            ))),
        }
    }
}

/// Deterministic seeded generator; identical (kind, n, d, seed, separation)
/// always produce identical datasets.
pub fn gen_synthetic(
    kind: SyntheticKind,
    n: usize,
    d: usize,
    seed: u64,
    separation: f64,
) -> Result<Dataset> {
    if n % 2 != 0 {
        return Err(Error::Config(format!("n must be even, got {n}")));
    }
    if n < 4 {
        return Err(Error::Config(format!("n must be at least 4, got {n}")));
    }
    if d < 1 {
        return Err(Error::Config("d must be at least 1".into()));
    }
    if !separation.is_finite() {
        return Err(Error::NonFinite("separation".into()));
    }
    if kind == SyntheticKind::XorRing && d < 2 {
        return Err(Error::Config("xor-ring requires d >= 2".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut features = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);

    match kind {
        SyntheticKind::TwoGauss => {
            for i in 0..n {
                let class = usize::from(i >= half);
                let sign = if class == 0 { -1.0 } else { 1.0 };
                for c in 0..d {
                    let z: f64 = rng.sample(StandardNormal);
                    features[(i, c)] = if c == 0 { z + sign * separation } else { z };
                }
                labels.push(class);
            }
        }
        SyntheticKind::XorRing => {
            for i in 0..n {
                let class = usize::from(i >= half);
                if class == 0 {
                    for c in 0..d {
                        features[(i, c)] = rng.sample(StandardNormal);
                    }
                } else {
                    let angle = rng.gen::<f64>() * std::f64::consts::TAU;
                    let radial: f64 = rng.sample(StandardNormal);
                    let rho = separation + 0.25 * radial;
                    features[(i, 0)] = rho * angle.cos();
                    features[(i, 1)] = rho * angle.sin();
                    for c in 2..d {
                        features[(i, c)] = rng.sample(StandardNormal);
                    }
                }
                labels.push(class);
            }
        }
    }

    Dataset::new(features, labels, vec!["0".into(), "1".into()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_csv(text: &str) -> Dataset {
        parse_csv(text, false, "<test>").unwrap()
    }

    #[test]
    fn impute_uses_column_mean_of_observed() {
        let ds = tiny_csv("1,0.5,2\n2,?,4\n1,1.5,6\n");
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.features[(1, 0)], 1.0); // mean of 0.5 and 1.5
        assert_eq!(ds.missing, vec![(1, 0)]);
        assert_eq!(ds.class_names, vec!["1", "2"]);
        assert_eq!(ds.labels, vec![0, 1, 0]);
    }

    #[test]
    fn empty_file_is_an_error() {
        let err = parse_csv("", false, "<test>").unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn comment_lines_and_header_are_skipped() {
        let ds = parse_csv("# generated\nlabel,f0\na,1\nb,2\n", true, "<test>").unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.class_names, vec!["a", "b"]);
    }

    #[test]
    fn row_arity_mismatch_is_an_error() {
        let err = parse_csv("a,1,2\nb,3\n", false, "<test>").unwrap_err();
        assert!(err.to_string().contains("feature columns"), "{err}");
    }

    #[test]
    fn fully_missing_column_is_an_error() {
        let err = parse_csv("a,?,1\nb,?,2\n", false, "<test>").unwrap_err();
        assert!(err.to_string().contains("no observed values"), "{err}");
    }

    #[test]
    fn non_finite_token_is_an_error() {
        assert!(parse_csv("a,inf\nb,1\n", false, "<test>").is_err());
        assert!(parse_csv("a,nan\nb,1\n", false, "<test>").is_err());
    }

    #[test]
    fn csv_round_trip_is_text_stable() {
        let ds = tiny_csv("pos,0.5,2\nneg,?,4\npos,1.5,6.0000001\n");
        let text1 = dataset_to_csv(&ds);
        let reloaded = parse_csv(&text1, false, "<test>").unwrap();
        let text2 = dataset_to_csv(&reloaded);
        assert_eq!(text1, text2);
        assert_eq!(reloaded.labels, ds.labels);
        assert_eq!(reloaded.class_names, ds.class_names);
    }

    #[test]
    fn label_ids_bijective_with_class_names() {
        let ds = tiny_csv("x,1\ny,2\nz,3\nx,4\n");
        assert_eq!(ds.class_names.len(), 3);
        for (i, name) in ds.class_names.iter().enumerate() {
            assert!(ds.labels.iter().any(|&l| l == i), "class {name} unused");
        }
    }

    #[test]
    fn reimpute_uses_train_rows_only() {
        // Missing cell in row 1; train rows {0, 2} have values 1.0 and 5.0.
        let ds = tiny_csv("a,1,7\nb,?,8\na,5,9\nb,100,10\n");
        let re = reimpute_from_train(&ds, &[0, 2]).unwrap();
        assert_eq!(re.features[(1, 0)], 3.0);
        // Full-file mean at load used rows 0, 2, 3 -> (1+5+100)/3.
        assert!((ds.features[(1, 0)] - 106.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn reimpute_fails_when_train_rows_all_missing() {
        let ds = tiny_csv("a,?,7\nb,?,8\na,5,9\n");
        assert!(reimpute_from_train(&ds, &[0, 1]).is_err());
    }

    #[test]
    fn standardize_two_point_column() {
        let ds = tiny_csv("a,1\nb,3\n");
        let s = fit_standardizer(&ds);
        assert_eq!(s.means[0], 2.0);
        assert_eq!(s.stddevs[0], 1.0);
        let out = s.apply(&ds).unwrap();
        assert_eq!(out.features[(0, 0)], -1.0);
        assert_eq!(out.features[(1, 0)], 1.0);
    }

    #[test]
    fn constant_column_is_centered_only() {
        let ds = tiny_csv("a,5\nb,5\n");
        let s = fit_standardizer(&ds);
        let out = s.apply(&ds).unwrap();
        assert_eq!(out.features[(0, 0)], 0.0);
        assert_eq!(out.features[(1, 0)], 0.0);
    }

    #[test]
    fn standardizing_standardized_data_is_idempotent() {
        let ds = gen_synthetic(SyntheticKind::TwoGauss, 40, 3, 11, 2.0).unwrap();
        let s1 = fit_standardizer(&ds);
        let once = s1.apply(&ds).unwrap();
        let s2 = fit_standardizer(&once);
        let twice = s2.apply(&once).unwrap();
        for (a, b) in once.features.iter().zip(twice.features.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        // Self-application statistics: mean ~ 0, stddev ~ 1 (or 0).
        let check = fit_standardizer(&once);
        for c in 0..once.d() {
            assert!(check.means[c].abs() < 1e-9);
            assert!(check.stddevs[c] == 0.0 || (check.stddevs[c] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn standardizer_dimension_mismatch() {
        let ds = tiny_csv("a,1\nb,3\n");
        let s = fit_standardizer(&ds);
        let wide = tiny_csv("a,1,2\nb,3,4\n");
        assert!(s.apply(&wide).is_err());
    }

    #[test]
    fn two_gauss_is_separable_at_high_separation() {
        let ds = gen_synthetic(SyntheticKind::TwoGauss, 4, 1, 7, 100.0).unwrap();
        let max_neg = (0..2).map(|i| ds.features[(i, 0)]).fold(f64::MIN, f64::max);
        let min_pos = (2..4).map(|i| ds.features[(i, 0)]).fold(f64::MAX, f64::min);
        assert!(min_pos > 0.0 && max_neg < 0.0 && min_pos > max_neg);
    }

    #[test]
    fn gen_is_deterministic() {
        let a = gen_synthetic(SyntheticKind::TwoGauss, 20, 4, 99, 1.5).unwrap();
        let b = gen_synthetic(SyntheticKind::TwoGauss, 20, 4, 99, 1.5).unwrap();
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
        let c = gen_synthetic(SyntheticKind::XorRing, 20, 4, 99, 5.0).unwrap();
        let d = gen_synthetic(SyntheticKind::XorRing, 20, 4, 99, 5.0).unwrap();
        assert_eq!(c.features, d.features);
    }

    #[test]
    fn gen_rejects_bad_shapes() {
        assert!(gen_synthetic(SyntheticKind::TwoGauss, 3, 1, 7, 1.0).is_err());
        assert!(gen_synthetic(SyntheticKind::TwoGauss, 2, 1, 7, 1.0).is_err());
        assert!(gen_synthetic(SyntheticKind::XorRing, 10, 1, 7, 1.0).is_err());
        assert!("nope".parse::<SyntheticKind>().is_err());
    }
}
