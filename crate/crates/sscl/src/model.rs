//! Trained one-vs-rest model and its plain-text file format.
//!
//! Format "SSCL v1" (line oriented, all numbers at 17 significant digits so
//! every f64 round-trips exactly):
//!
//! ```text
//! SSCL v1
//! hyper <alpha> <beta> <gamma> <k> <max_outer> <tol>
//! classes <C>
//! <class name>            (C lines; names may contain spaces, not newlines)
//! standardizer <d>
//! means <d numbers>
//! stds <d numbers>
//! train <n> <d>
//! labels <n dense ids>
//! row <d numbers>         (n lines: standardized training features)
//! weights <C>
//! flagged <C zero-or-one flags>
//! w <d numbers>           (C lines)
//! end
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::Standardizer;
use crate::error::{Error, Result};
use crate::io_util::{atomic_write, fmt17, read_to_string};
use crate::trainer::Hyperparams;

/// Everything prediction needs: per-class classifiers, hyperparameters, the
/// fitted standardizer and the standardized training features (the context
/// dictionary for unseen points).
#[derive(Debug, Clone)]
pub struct Model {
    pub hyper: Hyperparams,
    pub class_names: Vec<String>,
    pub standardizer: Standardizer,
    /// Standardized training features, n×d.
    pub train_features: DMatrix<f64>,
    pub train_labels: Vec<usize>,
    /// Per-class classifier vectors (length d).
    pub weights: Vec<DVector<f64>>,
    /// Classes trained with fewer than two positive points (or none at all).
    pub flagged: Vec<bool>,
}

impl Model {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn d(&self) -> usize {
        self.train_features.ncols()
    }

    pub fn n_train(&self) -> usize {
        self.train_features.nrows()
    }
}

fn join17<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    values
        .into_iter()
        .map(|&v| fmt17(v))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn model_to_string(model: &Model) -> String {
    let mut out = String::new();
    out.push_str("SSCL v1\n");
    let h = &model.hyper;
    out.push_str(&format!(
        "hyper {} {} {} {} {} {}\n",
        fmt17(h.alpha),
        fmt17(h.beta),
        fmt17(h.gamma),
        h.k,
        h.max_outer,
        fmt17(h.tol)
    ));
    out.push_str(&format!("classes {}\n", model.n_classes()));
    for name in &model.class_names {
        out.push_str(name);
        out.push('\n');
    }
    out.push_str(&format!("standardizer {}\n", model.d()));
    out.push_str(&format!("means {}\n", join17(model.standardizer.means.iter())));
    out.push_str(&format!("stds {}\n", join17(model.standardizer.stddevs.iter())));
    out.push_str(&format!("train {} {}\n", model.n_train(), model.d()));
    let labels = model
        .train_labels
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    out.push_str(&format!("labels {labels}\n"));
    for i in 0..model.n_train() {
        let row: Vec<f64> = model.train_features.row(i).iter().copied().collect();
        out.push_str(&format!("row {}\n", join17(row.iter())));
    }
    out.push_str(&format!("weights {}\n", model.n_classes()));
    let flags = model
        .flagged
        .iter()
        .map(|&f| if f { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join(" ");
    out.push_str(&format!("flagged {flags}\n"));
    for w in &model.weights {
        out.push_str(&format!("w {}\n", join17(w.iter())));
    }
    out.push_str("end\n");
    out
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), &model_to_string(model))
}

struct Lines<'a> {
    path: String,
    lines: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.lines.next().ok_or_else(|| Error::ModelFormat {
            path: self.path.clone(),
            msg: format!("unexpected end of file at line {}", self.lineno),
        })
    }

    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::ModelFormat {
            path: self.path.clone(),
            msg: format!("line {}: {}", self.lineno, msg.into()),
        }
    }

    fn tagged(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(t) if t == tag => Ok(parts.collect()),
            other => Err(self.fail(format!("expected {tag:?} line, got {other:?}"))),
        }
    }

    fn floats(&mut self, tag: &str, expect: usize) -> Result<Vec<f64>> {
        let toks = self.tagged(tag)?;
        if toks.len() != expect {
            return Err(self.fail(format!(
                "{tag}: expected {expect} values, got {}",
                toks.len()
            )));
        }
        toks.iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.fail(format!("bad number {t:?}")))
            })
            .collect()
    }
}

pub fn model_from_string(text: &str, origin: &str) -> Result<Model> {
    let mut r = Lines {
        path: origin.to_string(),
        lines: text.lines(),
        lineno: 0,
    };
    let version = r.next_line()?;
    if version != "SSCL v1" {
        return Err(r.fail(format!("unsupported model version {version:?}")));
    }

    let hyper_toks = r.tagged("hyper")?;
    if hyper_toks.len() != 6 {
        return Err(r.fail("hyper: expected 6 values"));
    }
    let parse_f = |r: &Lines, t: &str| -> Result<f64> {
        t.parse().map_err(|_| r.fail(format!("bad number {t:?}")))
    };
    let parse_u = |r: &Lines, t: &str| -> Result<usize> {
        t.parse().map_err(|_| r.fail(format!("bad integer {t:?}")))
    };
    let hyper = Hyperparams {
        alpha: parse_f(&r, hyper_toks[0])?,
        beta: parse_f(&r, hyper_toks[1])?,
        gamma: parse_f(&r, hyper_toks[2])?,
        k: parse_u(&r, hyper_toks[3])?,
        max_outer: parse_u(&r, hyper_toks[4])?,
        tol: parse_f(&r, hyper_toks[5])?,
    };

    let class_toks = r.tagged("classes")?;
    if class_toks.len() != 1 {
        return Err(r.fail("classes: expected a count"));
    }
    let n_classes = parse_u(&r, class_toks[0])?;
    if n_classes < 2 {
        return Err(r.fail("model must have at least 2 classes"));
    }
    let mut class_names = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        class_names.push(r.next_line()?.to_string());
    }

    let std_toks = r.tagged("standardizer")?;
    if std_toks.len() != 1 {
        return Err(r.fail("standardizer: expected a dimension"));
    }
    let d = parse_u(&r, std_toks[0])?;
    let means = DVector::from_vec(r.floats("means", d)?);
    let stddevs = DVector::from_vec(r.floats("stds", d)?);

    let train_toks = r.tagged("train")?;
    if train_toks.len() != 2 {
        return Err(r.fail("train: expected n and d"));
    }
    let n = parse_u(&r, train_toks[0])?;
    let d2 = parse_u(&r, train_toks[1])?;
    if d2 != d {
        return Err(r.fail(format!("train dimension {d2} != standardizer dimension {d}")));
    }
    let label_toks = r.tagged("labels")?;
    if label_toks.len() != n {
        return Err(r.fail(format!("labels: expected {n} ids, got {}", label_toks.len())));
    }
    let mut train_labels = Vec::with_capacity(n);
    for t in label_toks {
        let id = parse_u(&r, t)?;
        if id >= n_classes {
            return Err(r.fail(format!("label id {id} out of range")));
        }
        train_labels.push(id);
    }
    let mut train_features = DMatrix::zeros(n, d);
    for i in 0..n {
        let row = r.floats("row", d)?;
        for (c, v) in row.into_iter().enumerate() {
            train_features[(i, c)] = v;
        }
    }

    let w_toks = r.tagged("weights")?;
    if w_toks.len() != 1 || parse_u(&r, w_toks[0])? != n_classes {
        return Err(r.fail("weights: count must equal the class count"));
    }
    let flag_toks = r.tagged("flagged")?;
    if flag_toks.len() != n_classes {
        return Err(r.fail("flagged: one flag per class expected"));
    }
    let flagged = flag_toks
        .iter()
        .map(|t| match *t {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(r.fail(format!("bad flag {other:?}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    let mut weights = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        weights.push(DVector::from_vec(r.floats("w", d)?));
    }
    let endline = r.next_line()?;
    if endline != "end" {
        return Err(r.fail(format!("expected \"end\", got {endline:?}")));
    }

    let model = Model {
        hyper,
        class_names,
        standardizer: Standardizer { means, stddevs },
        train_features,
        train_labels,
        weights,
        flagged,
    };
    model.hyper.validate()?;
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    model_from_string(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticKind};
    use crate::trainer::train_ovr;

    fn small_model() -> Model {
        let data = gen_synthetic(SyntheticKind::TwoGauss, 16, 3, 5, 4.0).unwrap();
        let h = Hyperparams {
            k: 3,
            max_outer: 5,
            ..Hyperparams::default()
        };
        train_ovr(&data, &h).unwrap().0
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let model = small_model();
        let text = model_to_string(&model);
        let back = model_from_string(&text, "<test>").unwrap();
        assert_eq!(back.class_names, model.class_names);
        assert_eq!(back.train_labels, model.train_labels);
        assert_eq!(back.flagged, model.flagged);
        assert_eq!(back.train_features, model.train_features);
        for (a, b) in back.weights.iter().zip(model.weights.iter()) {
            assert_eq!(a, b);
        }
        assert_eq!(back.hyper, model.hyper);
        // Text form is a fixed point.
        assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn version_line_is_enforced() {
        let model = small_model();
        let text = model_to_string(&model).replace("SSCL v1", "SSCL v2");
        let err = model_from_string(&text, "<test>").unwrap_err();
        assert!(err.to_string().contains("unsupported model version"), "{err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let model = small_model();
        let text = model_to_string(&model);
        let cut = &text[..text.len() / 2];
        assert!(model_from_string(cut, "<test>").is_err());
    }
}
