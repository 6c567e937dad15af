//! Command-line front end: generate data, train, predict, cross-validate,
//! sweep. All randomness flows from the `--seed` flags; repeated invocations
//! with identical flags produce byte-identical output files (timing is
//! written only on request, since wall-clock is not reproducible).
//!
//! Exit codes: 0 success, 1 runtime failure (including failed folds),
//! 2 usage or validation error. `SSCL_LOG` in {quiet, info, debug} controls
//! diagnostic verbosity on stderr.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::data::{dataset_to_csv, gen_synthetic, load_csv, SyntheticKind};
use crate::error::{Error, Result};
use crate::harness::{cv_csv, run_cv, sweep, sweep_csv, Method, SweepParam};
use crate::io_util::{atomic_write, fmt12};
use crate::model::{load_model, save_model};
use crate::predict::predict_batch;
use crate::trainer::{train_ovr, Hyperparams};

#[derive(Parser)]
#[command(
    name = "sscl",
    version,
    about = "Supervised sparse context learning: nearest-neighbor sparse coding \
             trained jointly with a max-margin linear classifier",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Generate a synthetic dataset CSV
    Gen(GenArgs),
    /// Train a one-vs-rest model and write a model file
    Train(TrainArgs),
    /// Batch-classify a CSV with a trained model
    Predict(PredictArgs),
    /// k-fold cross validation of one method
    Cv(CvArgs),
    /// Sweep one hyperparameter over repeated cross validations
    Sweep(SweepArgs),
    /// Cross-validate a baseline method (knn, srbc or majority)
    Baseline(BaselineArgs),
}

#[derive(Args)]
pub struct HyperArgs {
    /// Hinge-loss weight; must satisfy alpha <= sqrt(2*beta)
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Reconstruction-error weight
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Sparsity (L1) weight
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Context size (nearest-neighbor count)
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Outer iteration cap for the alternating trainer
    #[arg(long, default_value_t = 30)]
    pub max_outer: usize,
    /// Relative primal-objective change that stops training
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

impl HyperArgs {
    fn to_hyper(&self) -> Hyperparams {
        Hyperparams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            k: self.k,
            max_outer: self.max_outer,
            tol: self.tol,
        }
    }

    fn echo(&self) -> String {
        format!(
            "alpha={} beta={} gamma={} k={} max_outer={} tol={}",
            self.alpha, self.beta, self.gamma, self.k, self.max_outer, self.tol
        )
    }
}

#[derive(Args)]
pub struct GenArgs {
    /// Generator: two-gauss or xor-ring
    #[arg(long, default_value = "two-gauss")]
    pub kind: String,
    /// Number of points (even, >= 4)
    #[arg(long)]
    pub n: usize,
    /// Feature dimension
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Class separation
    #[arg(long, default_value_t = 4.0)]
    pub sep: f64,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Training CSV (label in column 0, "?" = missing)
    #[arg(long)]
    pub data: String,
    /// Skip one header row
    #[arg(long, default_value_t = false)]
    pub has_header: bool,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Output model path
    #[arg(long)]
    pub out: String,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Model file written by `train`
    #[arg(long)]
    pub model: String,
    /// Input CSV (column 0 is echoed as the true label)
    #[arg(long)]
    pub data: String,
    #[arg(long, default_value_t = false)]
    pub has_header: bool,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct CvArgs {
    #[arg(long)]
    pub data: String,
    #[arg(long, default_value_t = false)]
    pub has_header: bool,
    /// sscl, knn, srbc or majority
    #[arg(long, default_value = "sscl")]
    pub method: String,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads for fold-level parallelism (results are identical for
    /// any value)
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Record wall-clock seconds per fold in the output (breaks byte-level
    /// reproducibility of the file)
    #[arg(long, default_value_t = false)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: String,
    #[arg(long, default_value_t = false)]
    pub has_header: bool,
    #[arg(long, default_value = "sscl")]
    pub method: String,
    /// Parameter to sweep: alpha, beta, gamma or k
    #[arg(long)]
    pub param: String,
    /// Comma-separated values, e.g. --values 0.01,0.1,1,10
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data: String,
    #[arg(long, default_value_t = false)]
    pub has_header: bool,
    /// knn, srbc or majority
    #[arg(long)]
    pub method: String,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = false)]
    pub timing: bool,
    #[arg(long)]
    pub out: Option<String>,
}

fn init_logging() {
    let level = match std::env::var("SSCL_LOG").ok().as_deref() {
        Some("quiet") => log::LevelFilter::Off,
        Some("info") => log::LevelFilter::Info,
        Some("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .is_test(false)
        .try_init();
}

fn emit(out: Option<&str>, contents: &str) -> Result<()> {
    match out {
        Some(path) => atomic_write(Path::new(path), contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs < 1 {
        return Err(Error::Config("jobs must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("could not build thread pool: {e}")))
}

fn check_fold_failures(failed: usize) -> Result<()> {
    if failed > 0 {
        Err(Error::Runtime(format!("{failed} fold(s) failed; see warnings")))
    } else {
        Ok(())
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let kind = SyntheticKind::from_str(&a.kind)?;
            let echo = format!(
                "sscl gen kind={} n={} d={} seed={} sep={}",
                a.kind, a.n, a.d, a.seed, a.sep
            );
            log::info!("{echo}");
            let data = gen_synthetic(kind, a.n, a.d, a.seed, a.sep)?;
            let csv = format!("# {echo}\n{}", dataset_to_csv(&data));
            emit(a.out.as_deref(), &csv)
        }
        Cmd::Train(a) => {
            let h = a.hyper.to_hyper();
            h.validate()?;
            log::info!("sscl train data={} {}", a.data, a.hyper.echo());
            let data = load_csv(&a.data, a.has_header)?;
            let (model, _) = train_ovr(&data, &h)?;
            save_model(&model, &a.out)?;
            log::info!("model written to {}", a.out);
            Ok(())
        }
        Cmd::Predict(a) => {
            let model = load_model(&a.model)?;
            let data = load_csv(&a.data, a.has_header)?;
            if data.d() != model.d() {
                return Err(Error::Dimension(format!(
                    "input has {} features, model expects {}",
                    data.d(),
                    model.d()
                )));
            }
            let echo = format!(
                "sscl predict model={} data={} has_header={}",
                a.model, a.data, a.has_header
            );
            log::info!("{echo}");
            let predictions = predict_batch(&model, &data.features)?;
            let mut out = format!("# {echo}\n");
            out.push_str("index,true_label,predicted");
            for c in 0..model.n_classes() {
                let _ = write!(out, ",score_{c}");
            }
            out.push('\n');
            for (i, p) in predictions.iter().enumerate() {
                let truth = &data.class_names[data.labels[i]];
                let _ = write!(out, "{i},{truth},{}", model.class_names[p.label]);
                for s in &p.scores {
                    let _ = write!(out, ",{}", fmt12(*s));
                }
                out.push('\n');
            }
            emit(a.out.as_deref(), &out)
        }
        Cmd::Cv(a) => {
            let h = a.hyper.to_hyper();
            h.validate()?;
            let method = Method::from_str(&a.method)?;
            let echo = format!(
                "sscl cv data={} has_header={} method={} {} folds={} seed={} jobs={} timing={}",
                a.data,
                a.has_header,
                a.method,
                a.hyper.echo(),
                a.folds,
                a.seed,
                a.jobs,
                a.timing
            );
            log::info!("{echo}");
            let data = load_csv(&a.data, a.has_header)?;
            let pool = thread_pool(a.jobs)?;
            let result = pool.install(|| run_cv(&data, method, &h, a.folds, a.seed))?;
            emit(a.out.as_deref(), &cv_csv(&result, &echo, a.timing))?;
            check_fold_failures(result.failed_folds())
        }
        Cmd::Sweep(a) => {
            let h = a.hyper.to_hyper();
            let method = Method::from_str(&a.method)?;
            let param = SweepParam::from_str(&a.param)?;
            let values_echo = a
                .values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let echo = format!(
                "sscl sweep data={} has_header={} method={} param={} values={} {} folds={} seed={} jobs={}",
                a.data,
                a.has_header,
                a.method,
                a.param,
                values_echo,
                a.hyper.echo(),
                a.folds,
                a.seed,
                a.jobs
            );
            log::info!("{echo}");
            let data = load_csv(&a.data, a.has_header)?;
            let pool = thread_pool(a.jobs)?;
            let points =
                pool.install(|| sweep(&data, method, &h, param, &a.values, a.folds, a.seed))?;
            emit(a.out.as_deref(), &sweep_csv(param, &points, &echo))?;
            let failed: usize = points
                .iter()
                .filter_map(|p| p.result.as_ref())
                .map(|r| r.failed_folds())
                .sum();
            check_fold_failures(failed)
        }
        Cmd::Baseline(a) => {
            let h = a.hyper.to_hyper();
            h.validate()?;
            let method = Method::from_str(&a.method)?;
            if method == Method::Sscl {
                return Err(Error::Config(
                    "baseline expects knn, srbc or majority; use `cv` for sscl".into(),
                ));
            }
            let echo = format!(
                "sscl baseline data={} has_header={} method={} {} folds={} seed={} jobs={} timing={}",
                a.data,
                a.has_header,
                a.method,
                a.hyper.echo(),
                a.folds,
                a.seed,
                a.jobs,
                a.timing
            );
            log::info!("{echo}");
            let data = load_csv(&a.data, a.has_header)?;
            let pool = thread_pool(a.jobs)?;
            let result = pool.install(|| run_cv(&data, method, &h, a.folds, a.seed))?;
            emit(a.out.as_deref(), &cv_csv(&result, &echo, a.timing))?;
            check_fold_failures(result.failed_folds())
        }
    }
}

/// Entry point for the binary. Returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}
