//! Supervised sparse context learning (SSCL).
//!
//! Each data point is represented as a sparse linear reconstruction of its
//! context — its k nearest training neighbors — and classified by a linear
//! function of that reconstruction. Codes and classifier are learned
//! jointly: the hinge loss of the classifier shapes the codes, and the codes
//! shape the classifier, through an alternating scheme that solves an
//! L1-regularized quadratic per point (feature-sign search) and a
//! box-constrained concave QP over the dual multipliers (exact coordinate
//! ascent).
//!
//! The crate is organized around that pipeline:
//!
//! * [`data`] — CSV ingestion, missing-value imputation, standardization,
//!   seeded synthetic generators.
//! * [`context`] — exact brute-force nearest-neighbor search and per-point
//!   context matrices.
//! * [`solver`] — the feature-sign search solver and per-point coding.
//! * [`qp`] — the box-constrained dual solver.
//! * [`trainer`] — the alternating optimization and one-vs-rest wrapping.
//! * [`model`] — the trained model and its plain-text file format.
//! * [`predict`] — prediction for unseen points plus KNN / sparse
//!   reconstruction baselines.
//! * [`harness`] — seeded k-fold cross validation and parameter sweeps.
//! * [`cli`] — the `sscl` command-line front end.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example train_and_predict`.
//!
//! Everything is deterministic: generators and fold splits take explicit
//! seeds, training contains no randomness, and parallel runs (`--jobs`)
//! produce bit-identical results to sequential ones.

pub mod cli;
pub mod context;
pub mod data;
pub mod error;
pub mod harness;
mod io_util;
pub mod model;
pub mod predict;
pub mod qp;
pub mod solver;
pub mod trainer;

pub use context::{build_index, query_context, ContextIndex};
pub use data::{
    fit_standardizer, gen_synthetic, load_csv, save_csv, Dataset, Standardizer, SyntheticKind,
};
pub use error::{Error, Result};
pub use harness::{kfold_split, run_cv, sweep, CVResult, KFoldSplit, Method, SweepParam};
pub use model::{load_model, save_model, Model};
pub use predict::{knn_classify, predict, predict_batch, srbc_classify, Prediction};
pub use qp::{solve_box_qp, BoxQP, DualState};
pub use solver::{code_point, feature_sign_search, L1QuadProblem, SparseCodes};
pub use trainer::{
    assemble_vstep, compute_w, primal_objective, train_binary, train_ovr, BinaryLabels,
    BinaryModel, Hyperparams, TrainDiagnostics, VStepProblem,
};
