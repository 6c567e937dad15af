//! Alternating training of sparse context codes and a max-margin linear
//! classifier.
//!
//! The joint objective over the classifier w, per-point codes v_i and hinge
//! slacks is
//!
//! ```text
//!   1/2 ||w||^2 + alpha * sum_i xi_i
//!     + beta * sum_i ||x_i - X_i v_i||^2 + gamma * sum_i ||v_i||_1
//! ```
//!
//! with xi_i = max(0, 1 - y_i w'X_i v_i). Dualizing the margin constraints
//! gives box-bounded multipliers 0 <= delta_i <= alpha and the recovery
//! w = sum_i delta_i y_i X_i v_i. Training alternates:
//!
//! * V-step: per point i, the codes minimize an L1-regularized quadratic
//!   with Hessian (2*beta - delta_i^2) X_i'X_i (+ ridge) and linear term
//!   -2*beta*X_i'x_i - delta_i y_i X_i'u_i, where u_i is the classifier
//!   contribution of all other points. Points are swept in ascending order,
//!   Gauss-Seidel style, and an update is kept only if it does not increase
//!   its block objective, so the sweep is monotone.
//! * delta-step: a box-constrained concave QP over the multipliers, solved
//!   by exact coordinate ascent.
//!
//! Requiring alpha <= sqrt(2*beta) keeps every V-step Hessian positive
//! semidefinite (delta_i <= alpha). At exact equality a saturated
//! multiplier makes the quadratic term vanish; that subproblem is linear
//! plus L1 and is handled in closed form (zero when bounded, otherwise the
//! previous code is kept).

use nalgebra::{DMatrix, DVector};

use crate::context::{build_index_features, ContextIndex};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::qp::{solve_box_qp, BoxQP, DualState};
use crate::solver::{feature_sign_search, L1QuadProblem, SparseCodes, RIDGE_REL};

/// Trade-off parameters and iteration controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Hinge-loss weight; also the upper bound of the dual box.
    pub alpha: f64,
    /// Reconstruction-error weight.
    pub beta: f64,
    /// Sparsity (L1) weight.
    pub gamma: f64,
    /// Context size: number of nearest neighbors.
    pub k: usize,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Relative change of the primal objective that stops the alternation.
    pub tol: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.1,
            k: 10,
            max_outer: 30,
            tol: 1e-5,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.max_outer < 1 {
            return Err(Error::Config("max_outer must be >= 1".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::Config(format!("tol must be > 0, got {}", self.tol)));
        }
        let bound = (2.0 * self.beta).sqrt();
        if self.alpha > bound {
            return Err(Error::Config(format!(
                "alpha <= sqrt(2*beta) is required so every per-point Hessian \
                 (2*beta - delta_i^2) X_i'X_i stays positive semidefinite; \
                 got alpha={} > sqrt(2*beta)={bound}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Binary labels, every entry +1 or -1 with both classes present.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLabels(Vec<f64>);

impl BinaryLabels {
    pub fn new(labels: Vec<f64>) -> Result<Self> {
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::Config("labels must be +1 or -1".into()));
        }
        let pos = labels.iter().filter(|&&y| y == 1.0).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::Config("both classes required".into()));
        }
        Ok(BinaryLabels(labels))
    }

    /// One-vs-rest view of multiclass ids: +1 for `positive`, -1 otherwise.
    pub fn from_class(labels: &[usize], positive: usize) -> Result<Self> {
        Self::new(
            labels
                .iter()
                .map(|&l| if l == positive { 1.0 } else { -1.0 })
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for BinaryLabels {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-point subproblem of the V-step.
#[derive(Debug, Clone)]
pub enum VStepProblem {
    Solvable(L1QuadProblem),
    /// The quadratic term vanished (saturated multiplier at
    /// alpha = sqrt(2*beta), or an all-zero context). The remaining
    /// objective is c'v + gamma*||v||_1: minimized by v = 0 when
    /// ||c||_inf <= gamma, unbounded otherwise (the caller keeps the
    /// previous iterate in that case).
    Degenerate { c: DVector<f64>, gamma: f64 },
}

/// Relative tolerance under which 2*beta - delta_i^2 is treated as exactly
/// zero rather than a convexity violation (absorbs sqrt rounding when
/// alpha = sqrt(2*beta) saturates).
const SCALE_ZERO_REL: f64 = 1e-12;

struct PointCache {
    xmat: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_trace: f64,
    gram_min_eig: f64,
    /// X_i' x_i
    xtx: DVector<f64>,
    x: DVector<f64>,
}

fn point_cache(features: &DMatrix<f64>, index: &ContextIndex, i: usize) -> PointCache {
    let xmat = index.context_mats[i].clone();
    let gram = {
        let g = xmat.tr_mul(&xmat);
        (&g + g.transpose()) * 0.5
    };
    let gram_trace = gram.trace();
    let gram_min_eig = gram
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let x = features.row(i).transpose();
    let xtx = xmat.tr_mul(&x);
    PointCache {
        xmat,
        gram,
        gram_trace,
        gram_min_eig,
        xtx,
        x,
    }
}

fn build_caches(features: &DMatrix<f64>, index: &ContextIndex) -> Vec<PointCache> {
    (0..features.nrows())
        .map(|i| point_cache(features, index, i))
        .collect()
}

fn assemble_from_cache(
    i: usize,
    cache: &PointCache,
    delta_i: f64,
    y_i: f64,
    u_i: &DVector<f64>,
    h: &Hyperparams,
) -> Result<(VStepProblem, f64, f64)> {
    let two_beta = 2.0 * h.beta;
    let mut scale = two_beta - delta_i * delta_i;
    if scale < -SCALE_ZERO_REL * two_beta {
        return Err(Error::ConvexityViolated {
            index: i,
            value: scale,
        });
    }
    scale = scale.max(0.0);
    let k = cache.gram.nrows();
    let c = &cache.xtx * (-two_beta) - cache.xmat.tr_mul(u_i) * (delta_i * y_i);
    let lambda = RIDGE_REL * scale * cache.gram_trace / k as f64;
    let min_eig = scale * cache.gram_min_eig + lambda;
    let pd_floor = 1e-12 * (scale * cache.gram_trace / k as f64 + lambda).max(0.0);
    if scale == 0.0 || cache.gram_trace <= 0.0 || min_eig <= pd_floor {
        return Ok((VStepProblem::Degenerate { c, gamma: h.gamma }, scale, min_eig));
    }
    let mut hmat = &cache.gram * scale;
    for j in 0..k {
        hmat[(j, j)] += lambda;
    }
    let p = L1QuadProblem::with_min_eig_bound(hmat, c, h.gamma, min_eig)?;
    Ok((VStepProblem::Solvable(p), scale, min_eig))
}

/// Assemble the per-point V-step subproblem from explicit training state.
/// `delta` must lie in [0, alpha]; the contribution u_i of the other points
/// is computed from scratch. The trainer itself uses an incrementally
/// maintained equivalent.
pub fn assemble_vstep(
    i: usize,
    delta: &DVector<f64>,
    labels: &BinaryLabels,
    index: &ContextIndex,
    codes: &SparseCodes,
    features: &DMatrix<f64>,
    h: &Hyperparams,
) -> Result<VStepProblem> {
    let n = features.nrows();
    if i >= n || delta.len() != n || labels.len() != n || codes.n() != n {
        return Err(Error::Dimension(
            "assemble_vstep: inconsistent state shapes".into(),
        ));
    }
    let w = compute_w(delta, labels, index, codes);
    let r_i = &index.context_mats[i] * codes.col(i);
    let u_i = &w - &r_i * (delta[i] * labels[i]);
    let cache = point_cache(features, index, i);
    let (problem, _, _) = assemble_from_cache(i, &cache, delta[i], labels[i], &u_i, h)?;
    Ok(problem)
}

/// Classifier recovery: w = sum_i delta_i y_i X_i v_i. Points with
/// delta_i = 0 are skipped, so they contribute exactly nothing.
pub fn compute_w(
    delta: &DVector<f64>,
    labels: &BinaryLabels,
    index: &ContextIndex,
    codes: &SparseCodes,
) -> DVector<f64> {
    let d = index.context_mats[0].nrows();
    let mut w = DVector::zeros(d);
    for i in 0..delta.len() {
        if delta[i] == 0.0 {
            continue;
        }
        let r_i = &index.context_mats[i] * codes.col(i);
        w.axpy(delta[i] * labels[i], &r_i, 1.0);
    }
    w
}

/// The primal objective at an arbitrary state.
pub fn primal_objective(
    w: &DVector<f64>,
    labels: &BinaryLabels,
    index: &ContextIndex,
    codes: &SparseCodes,
    features: &DMatrix<f64>,
    h: &Hyperparams,
) -> f64 {
    let n = features.nrows();
    let mut hinge = 0.0;
    let mut rec = 0.0;
    let mut l1 = 0.0;
    for i in 0..n {
        let r_i = &index.context_mats[i] * codes.col(i);
        let margin = labels[i] * w.dot(&r_i);
        hinge += (1.0 - margin).max(0.0);
        let x_i = features.row(i).transpose();
        rec += (&x_i - &r_i).norm_squared();
        l1 += codes.column_l1(i);
    }
    0.5 * w.norm_squared() + h.alpha * hinge + h.beta * rec + h.gamma * l1
}

/// Per-iteration audit values recorded during training.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    /// Primal objective after the iteration.
    pub primal: f64,
    /// Saddle objective (dual quadratic plus coding terms) after the
    /// iteration; logged, not used for stopping.
    pub saddle: f64,
    /// Fixed-delta objective before/after the V sweep (non-increasing).
    pub vstep_before: f64,
    pub vstep_after: f64,
    /// Dual objective before/after the delta step (non-decreasing).
    pub dual_before: f64,
    pub dual_after: f64,
    /// Smallest minimum eigenvalue among the V-step Hessians assembled in
    /// this iteration (degenerate zero-Hessian subproblems count as 0).
    pub min_hessian_eig: f64,
    /// KKT residual of the delta step at return.
    pub dual_kkt_residual: f64,
}

/// A trained binary classifier with its dual state and codes.
#[derive(Debug, Clone)]
pub struct BinaryModel {
    pub w: DVector<f64>,
    pub delta: DualState,
    pub codes: SparseCodes,
    pub hyper: Hyperparams,
    /// Primal objective per iteration, starting with the value after the
    /// unsupervised initialization.
    pub objective_trace: Vec<f64>,
    pub iter_stats: Vec<IterationStats>,
}

/// Per-point diagnostics of a trained binary model.
#[derive(Debug, Clone)]
pub struct TrainDiagnostics {
    /// Hinge slacks xi_i = max(0, 1 - y_i w'X_i v_i); always >= 0.
    pub hinge_slacks: Vec<f64>,
    /// Squared reconstruction errors ||x_i - X_i v_i||^2.
    pub reconstruction_errors: Vec<f64>,
    /// Zero fraction of each code vector.
    pub code_sparsity: Vec<f64>,
}

pub fn diagnostics(
    model: &BinaryModel,
    labels: &BinaryLabels,
    index: &ContextIndex,
    features: &DMatrix<f64>,
) -> TrainDiagnostics {
    let n = features.nrows();
    let k = model.codes.k() as f64;
    let mut hinge_slacks = Vec::with_capacity(n);
    let mut reconstruction_errors = Vec::with_capacity(n);
    let mut code_sparsity = Vec::with_capacity(n);
    for i in 0..n {
        let r_i = &index.context_mats[i] * model.codes.col(i);
        let margin = labels[i] * model.w.dot(&r_i);
        hinge_slacks.push((1.0 - margin).max(0.0));
        reconstruction_errors.push((&features.row(i).transpose() - &r_i).norm_squared());
        let zeros = model.codes.col(i).iter().filter(|&&x| x == 0.0).count();
        code_sparsity.push(zeros as f64 / k);
    }
    TrainDiagnostics {
        hinge_slacks,
        reconstruction_errors,
        code_sparsity,
    }
}

/// Train a binary model, building the context index internally. Features
/// are used as given (standardize beforehand if the scales are mixed).
pub fn train_binary(
    train: &Dataset,
    labels: &BinaryLabels,
    h: &Hyperparams,
) -> Result<BinaryModel> {
    if labels.len() != train.n() {
        return Err(Error::Dimension(format!(
            "{} labels for {} points",
            labels.len(),
            train.n()
        )));
    }
    h.validate()?;
    let index = build_index_features(&train.features, h.k)?;
    train_binary_with_index(&train.features, labels, &index, h)
}

/// Monotonicity slack: recomputed sweep objectives may differ from the sum
/// of exact per-block decrements by accumulation roundoff.
fn mono_slack(x: f64) -> f64 {
    1e-9 * (1.0 + x.abs())
}

/// Train a binary model against a prebuilt context index (shared across the
/// one-vs-rest classes).
pub fn train_binary_with_index(
    features: &DMatrix<f64>,
    labels: &BinaryLabels,
    index: &ContextIndex,
    h: &Hyperparams,
) -> Result<BinaryModel> {
    h.validate()?;
    let n = features.nrows();
    let d = features.ncols();
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} points", labels.len())));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features".into()));
    }
    if index.k != h.k {
        return Err(Error::Config(format!(
            "context index was built with k={}, hyperparameters say k={}",
            index.k, h.k
        )));
    }
    if index.context_mats.len() != n || index.context_mats[0].nrows() != d {
        return Err(Error::Dimension(
            "context index does not match the training features".into(),
        ));
    }
    let k = index.k;

    let caches = build_caches(features, index);
    let mut codes = SparseCodes::zeros(k, n);
    let mut recon: Vec<DVector<f64>> = vec![DVector::zeros(d); n];
    let mut delta = DualState::zeros(n);
    let mut w: DVector<f64> = DVector::zeros(d);

    // Sweep the codes once; with the current delta (zero on the first call)
    // each block subproblem is solved by feature-sign search from its
    // previous value, and the update is kept only if its block objective
    // does not increase. Returns the smallest assembled Hessian eigenvalue.
    let sweep_codes = |codes: &mut SparseCodes,
                       recon: &mut Vec<DVector<f64>>,
                       w: &mut DVector<f64>,
                       delta: &DVector<f64>|
     -> Result<f64> {
        let mut min_hess = f64::INFINITY;
        for i in 0..n {
            let cache = &caches[i];
            let di = delta[i];
            let yi = labels[i];
            let v_old = codes.col(i);
            let u_i = &*w - &recon[i] * (di * yi);
            let (problem, scale, min_eig) =
                assemble_from_cache(i, cache, di, yi, &u_i, h)
                    .map_err(|e| e.with_context(format!("V-step at point {i}")))?;
            min_hess = min_hess.min(min_eig);
            let (c, v_new) = match problem {
                VStepProblem::Solvable(p) => {
                    let v = feature_sign_search(&p, &v_old)
                        .map_err(|e| e.with_context(format!("V-step at point {i}")))?;
                    (p.c().clone(), v)
                }
                VStepProblem::Degenerate { c, gamma } => {
                    let bounded = c.amax() <= gamma;
                    let v = if bounded {
                        DVector::zeros(k)
                    } else {
                        v_old.clone()
                    };
                    (c, v)
                }
            };
            // True block objective (no ridge): accept only non-increasing
            // updates so the sweep objective is monotone by construction.
            let block = |v: &DVector<f64>| {
                0.5 * scale * v.dot(&(&cache.gram * v))
                    + c.dot(v)
                    + h.gamma * v.iter().map(|x| x.abs()).sum::<f64>()
            };
            if block(&v_new) <= block(&v_old) {
                let r_new = &cache.xmat * &v_new;
                w.axpy(di * yi, &(&r_new - &recon[i]), 1.0);
                recon[i] = r_new;
                codes.set_col(i, &v_new);
            }
        }
        Ok(min_hess)
    };

    // Initialization: unsupervised codes (the delta = 0 collapse), delta = 0.
    let init_min_hess = sweep_codes(&mut codes, &mut recon, &mut w, &delta.delta)?;
    w = compute_w_from_recon(&delta.delta, labels, &recon, d);

    let rec_sum = |recon: &Vec<DVector<f64>>| -> f64 {
        (0..n)
            .map(|i| (&caches[i].x - &recon[i]).norm_squared())
            .sum()
    };

    let mut objective_trace =
        vec![primal_from_state(&w, labels, &recon, &codes, rec_sum(&recon), h)];
    let mut iter_stats: Vec<IterationStats> = Vec::new();

    // Bookkeeping for the fixed-delta objective across the V sweep.
    let mut prev_quad = 0.0; // delta'Q delta at (V_prev, delta_prev)
    let mut prev_rec = rec_sum(&recon);
    let mut prev_l1 = codes.total_l1();
    let mut prev_primal = objective_trace[0];

    for outer in 1..=h.max_outer {
        let min_hess = sweep_codes(&mut codes, &mut recon, &mut w, &delta.delta)?;
        let min_hess = if outer == 1 { min_hess.min(init_min_hess) } else { min_hess };

        let rec_now = rec_sum(&recon);
        let l1_now = codes.total_l1();
        let qp = build_dual_qp(labels, &recon, h.alpha)
            .map_err(|e| e.with_context(format!("delta-step at iteration {outer}")))?;
        let sum_delta = delta.delta.sum();
        let quad_now = delta.delta.dot(&(qp.q() * &delta.delta));

        let vstep_before = -0.5 * prev_quad + h.beta * prev_rec + h.gamma * prev_l1 + sum_delta;
        let vstep_after = -0.5 * quad_now + h.beta * rec_now + h.gamma * l1_now + sum_delta;
        debug_assert!(
            vstep_after <= vstep_before + mono_slack(vstep_before),
            "V sweep must not increase the fixed-delta objective \
             ({vstep_before} -> {vstep_after})"
        );

        let dual_before = qp.objective(&delta.delta);
        let new_delta = solve_box_qp(&qp, &delta.delta)
            .map_err(|e| e.with_context(format!("delta-step at iteration {outer}")))?;
        let dual_after = qp.objective(&new_delta.delta);
        debug_assert!(
            dual_after >= dual_before - mono_slack(dual_before),
            "delta step must not decrease the dual objective \
             ({dual_before} -> {dual_after})"
        );
        delta = new_delta;

        w = compute_w_from_recon(&delta.delta, labels, &recon, d);

        let primal = primal_from_state(&w, labels, &recon, &codes, rec_now, h);
        let saddle = qp.objective(&delta.delta) + h.beta * rec_now + h.gamma * l1_now;
        log::debug!(
            "iteration {outer}: primal {primal:.6e}, saddle {saddle:.6e}, \
             dual {dual_before:.6e} -> {dual_after:.6e}"
        );
        objective_trace.push(primal);
        iter_stats.push(IterationStats {
            primal,
            saddle,
            vstep_before,
            vstep_after,
            dual_before,
            dual_after,
            min_hessian_eig: min_hess,
            dual_kkt_residual: delta.kkt_residual,
        });

        prev_quad = delta.delta.dot(&(qp.q() * &delta.delta));
        prev_rec = rec_now;
        prev_l1 = l1_now;

        let rel = (primal - prev_primal).abs() / prev_primal.abs().max(1.0);
        prev_primal = primal;
        if rel < h.tol {
            break;
        }
    }

    Ok(BinaryModel {
        w,
        delta,
        codes,
        hyper: h.clone(),
        objective_trace,
        iter_stats,
    })
}

fn compute_w_from_recon(
    delta: &DVector<f64>,
    labels: &BinaryLabels,
    recon: &[DVector<f64>],
    d: usize,
) -> DVector<f64> {
    let mut w = DVector::zeros(d);
    for i in 0..delta.len() {
        if delta[i] == 0.0 {
            continue;
        }
        w.axpy(delta[i] * labels[i], &recon[i], 1.0);
    }
    w
}

fn primal_from_state(
    w: &DVector<f64>,
    labels: &BinaryLabels,
    recon: &[DVector<f64>],
    codes: &SparseCodes,
    rec_sum: f64,
    h: &Hyperparams,
) -> f64 {
    let hinge: f64 = (0..labels.len())
        .map(|i| (1.0 - labels[i] * w.dot(&recon[i])).max(0.0))
        .sum();
    0.5 * w.norm_squared() + h.alpha * hinge + h.beta * rec_sum + h.gamma * codes.total_l1()
}

/// Gram matrix of label-signed reconstructions:
/// Q_ij = y_i y_j (X_i v_i)'(X_j v_j).
fn build_dual_qp(labels: &BinaryLabels, recon: &[DVector<f64>], alpha: f64) -> Result<BoxQP> {
    let n = recon.len();
    let d = recon[0].len();
    let mut signed = DMatrix::zeros(d, n);
    for i in 0..n {
        signed.set_column(i, &(&recon[i] * labels[i]));
    }
    let q = signed.tr_mul(&signed);
    BoxQP::new(q, alpha)
}

/// One-vs-rest training: per class c the labels collapse to +1 (class c)
/// vs -1 (rest). Standardization is fitted on `train` and embedded in the
/// returned model together with the standardized features, so prediction is
/// self-contained. Classes with fewer than two positive points are still
/// trained (or given a zero classifier when absent entirely) and flagged.
///
/// Also returns the per-class binary models (None for absent classes) for
/// diagnostics.
pub fn train_ovr(train: &Dataset, h: &Hyperparams) -> Result<(Model, Vec<Option<BinaryModel>>)> {
    h.validate()?;
    let n = train.n();
    let n_classes = train.class_names.len();
    if n_classes < 2 {
        return Err(Error::Config(format!(
            "at least 2 classes required, got {n_classes}"
        )));
    }
    if h.k + 1 > n {
        return Err(Error::Config(format!(
            "k must satisfy k <= n-1 (k={}, n={n})",
            h.k
        )));
    }
    let standardizer = crate::data::fit_standardizer(train);
    let strain = standardizer.apply(train)?;
    let index = build_index_features(&strain.features, h.k)?;

    let mut weights = Vec::with_capacity(n_classes);
    let mut flagged = Vec::with_capacity(n_classes);
    let mut binaries = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let pos = train.labels.iter().filter(|&&l| l == c).count();
        if pos == 0 {
            log::warn!(
                "class {:?} has no training points; using a zero classifier",
                train.class_names[c]
            );
            weights.push(DVector::zeros(train.d()));
            flagged.push(true);
            binaries.push(None);
            continue;
        }
        let y = BinaryLabels::from_class(&train.labels, c)?;
        let bm = train_binary_with_index(&strain.features, &y, &index, h)
            .map_err(|e| e.with_context(format!("class {:?}", train.class_names[c])))?;
        if pos < 2 {
            log::warn!(
                "class {:?} has a single training point; model flagged",
                train.class_names[c]
            );
        }
        weights.push(bm.w.clone());
        flagged.push(pos < 2);
        binaries.push(Some(bm));
    }

    let model = Model {
        hyper: h.clone(),
        class_names: train.class_names.clone(),
        standardizer,
        train_features: strain.features,
        train_labels: train.labels.clone(),
        weights,
        flagged,
    };
    Ok((model, binaries))
}
