//! `ogr-bench` command line.
//!
//! Exit codes: 0 success, 1 a check failed (or a run could not be written),
//! 2 usage error. Tables go to stdout; machine-readable results only to files.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::export::{self, Format};
use crate::harness::{self, BenchmarkSummary, ExperimentConfig, OptimizerKind, SplitMix64};
use crate::linalg::{mat_vec, sym_eig, DenseMatrix, DenseVector, DEFAULT_EIG_TOL};
use crate::linesearch::LineSearchConfig;
use crate::ogr::{estimate, estimate_stationary, Estimator, OgrState, DEFAULT_BETA, DEFAULT_EPS_EIG};
use crate::testfuns::{self, check_gradient, TestFunction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable consulted when `--out` is not given.
pub const OUT_DIR_ENV: &str = "OGR_BENCH_OUT";

#[derive(Debug, Parser)]
#[command(name = "ogr-bench", version, about = "OGR vs BFGS benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Final-loss distributions over seeded random starts.
    Bench(BenchArgs),
    /// Best-of-N two-dimensional trajectories, written per step.
    Trajectory(TrajectoryArgs),
    /// Finite-difference audit of every analytic gradient.
    CheckGrad(CheckGradArgs),
    /// Recover a random quadratic's Hessian from exact gradient samples.
    EstimateHessian(EstimateHessianArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LineSearchMode {
    Off,
    On,
    Both,
}

impl LineSearchMode {
    fn variants(self) -> &'static [bool] {
        match self {
            LineSearchMode::Off => &[false],
            LineSearchMode::On => &[true],
            LineSearchMode::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunsFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Raw,
    Symmetric,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Raw => Estimator::Raw,
            EstimatorArg::Symmetric => Estimator::Symmetric,
        }
    }
}

/// Optimizer hyperparameters shared by `bench` and `trajectory`.
#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Comma-separated optimizers to run.
    #[arg(long, value_delimiter = ',', default_value = "ogr,bfgs")]
    pub optimizers: Vec<String>,
    /// Step length α [default: 0.6 for rastrigin, 0.5 otherwise].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// OGR EMA decay β.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// OGR eigenvalue clip ε.
    #[arg(long, default_value_t = DEFAULT_EPS_EIG)]
    pub eps_eig: f64,
    /// OGR maximum step norm τ [default: 10 α].
    #[arg(long)]
    pub tau_norm: Option<f64>,
    /// OGR Hessian estimator.
    #[arg(long, value_enum, default_value_t = EstimatorArg::Symmetric)]
    pub estimator: EstimatorArg,
    /// Step budget per run.
    #[arg(long, default_value_t = harness::DEFAULT_STEPS)]
    pub steps: usize,
    /// Seed for start points.
    #[arg(long, default_value_t = harness::DEFAULT_SEED)]
    pub seed: u64,
    /// Stop a run once ‖g‖ drops to this value; 0 disables.
    #[arg(long, default_value_t = harness::EARLY_STOP_GRAD_NORM)]
    pub early_stop_grad_norm: f64,
    /// Worker threads; results are identical for any value.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated function names, or `all`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub function: Vec<String>,
    /// Dimension for variable-dimension functions.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, value_enum, default_value_t = LineSearchMode::Both)]
    pub line_search: LineSearchMode,
    /// Random starts per configuration.
    #[arg(long, default_value_t = harness::DEFAULT_STARTS)]
    pub starts: usize,
    /// Armijo constant c.
    #[arg(long, default_value_t = 1e-4)]
    pub armijo_c: f64,
    /// Backtracking factor τ.
    #[arg(long, default_value_t = 0.5)]
    pub backtrack_factor: f64,
    /// Maximum backtracking trials K_max.
    #[arg(long, default_value_t = 50)]
    pub max_backtracks: usize,
    /// Draw separate start points for every optimizer/line-search combination.
    #[arg(long)]
    pub unshared_starts: bool,
    /// Success threshold on final_loss - known minimum.
    #[arg(long, default_value_t = harness::DEFAULT_SUCCESS_TOL)]
    pub success_tol: f64,
    /// Format of the per-run files.
    #[arg(long, value_enum, default_value_t = RunsFormat::Csv)]
    pub format: RunsFormat,
    /// Also write one trajectory CSV per run (2-D only).
    #[arg(long)]
    pub trajectories: bool,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    /// One two-dimensional function.
    #[arg(long)]
    pub function: String,
    /// Must be 2.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Restarts; the run with the lowest final loss is kept.
    #[arg(long, default_value_t = harness::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[command(flatten)]
    pub opt: OptimizerArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckGradArgs {
    /// Seeded in-bounds points per function.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = harness::DEFAULT_SEED)]
    pub seed: u64,
    /// Maximum allowed relative error.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Relative central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    pub fd_step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateHessianArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Number of (θ, ∇f) samples streamed into the statistics.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// EMA decay; 1 gives an unweighted least-squares fit.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = harness::DEFAULT_SEED)]
    pub seed: u64,
    /// Maximum allowed relative Frobenius error.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_EIG)]
    pub eps_eig: f64,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with_functions(args, &testfuns::catalog(), out, err)
}

/// Like [`run`], with `check-grad` auditing `functions` instead of the
/// built-in catalog.
pub fn run_with_functions<I, T>(args: I, functions: &[TestFunction], out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Bench(a) => cmd_bench(&a, out),
        Command::Trajectory(a) => cmd_trajectory(&a, out),
        Command::CheckGrad(a) => cmd_check_grad(&a, functions, out),
        Command::EstimateHessian(a) => cmd_estimate_hessian(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Io { .. } | Error::Csv { .. } | Error::NonFinite(_) => EXIT_CHECK_FAILED,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn parse_optimizers(names: &[String]) -> Result<Vec<OptimizerKind>> {
    let mut kinds = Vec::new();
    for n in names {
        let k: OptimizerKind = n.trim().parse()?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("no optimizers given".into()));
    }
    Ok(kinds)
}

fn apply_opt_args(cfg: &mut ExperimentConfig, a: &OptimizerArgs) {
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    cfg.beta = a.beta;
    cfg.eps_eig = a.eps_eig;
    cfg.tau_norm = a.tau_norm;
    cfg.estimator = a.estimator.into();
    cfg.max_steps = a.steps;
    cfg.seed = a.seed;
    cfg.early_stop_grad_norm = (a.early_stop_grad_norm > 0.0).then_some(a.early_stop_grad_norm);
    cfg.jobs = a.jobs.max(1);
}

fn resolve_functions(names: &[String]) -> Result<Vec<TestFunction>> {
    if names.iter().any(|n| n == "all") {
        return Ok(testfuns::catalog());
    }
    names.iter().map(|n| testfuns::lookup(n.trim())).collect()
}

fn fmt_loss(v: f64) -> String {
    format!("{v:.3e}")
}

fn print_table(out: &mut dyn Write, summaries: &[BenchmarkSummary]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<11} {:<5} {:<3} {:>10} {:>10} {:>10} {:>8}",
        "function", "opt", "LS", "median", "best", "worst", "success"
    )?;
    for s in summaries {
        writeln!(
            out,
            "{:<11} {:<5} {:<3} {:>10} {:>10} {:>10} {:>7.1}%",
            s.function,
            s.optimizer.as_str(),
            if s.line_search { "yes" } else { "no" },
            fmt_loss(s.median),
            fmt_loss(s.best),
            fmt_loss(s.worst),
            100.0 * s.success_rate
        )?;
    }
    Ok(())
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<i32> {
    let functions = resolve_functions(&a.function)?;
    let optimizers = parse_optimizers(&a.opt.optimizers)?;
    let mut configs = Vec::new();
    for f in &functions {
        let dim = match f.dim_rule {
            testfuns::DimRule::Fixed(n) => n,
            testfuns::DimRule::Any { .. } => a.dim,
        };
        for &opt in &optimizers {
            for &ls in a.line_search.variants() {
                let mut cfg = ExperimentConfig::new(f.name, opt, ls)?;
                apply_opt_args(&mut cfg, &a.opt);
                cfg.dim = dim;
                cfg.n_starts = a.starts;
                cfg.ls_config = LineSearchConfig {
                    c: a.armijo_c,
                    backtrack_factor: a.backtrack_factor,
                    max_backtracks: a.max_backtracks,
                    ..LineSearchConfig::default()
                };
                cfg.shared_starts = !a.unshared_starts;
                cfg.success_tol = a.success_tol;
                cfg.record_trajectory = a.trajectories && dim == 2;
                cfg.validate()?;
                configs.push(cfg);
            }
        }
    }

    let dir = export::ensure_dir(&a.opt.out)?;
    let mut summaries = Vec::new();
    for cfg in &configs {
        let bench = harness::run_benchmark(cfg)?;
        let (format, ext) = match a.format {
            RunsFormat::Csv => (Format::Csv, "csv"),
            RunsFormat::Jsonl => (Format::JsonLines, "jsonl"),
        };
        let name = export::runs_file_name(cfg).replace(".csv", &format!(".{ext}"));
        export::export_runs(&bench.records, cfg, format, &dir.join(name))?;
        if cfg.record_trajectory {
            let tdir = export::ensure_dir(&dir.join("trajectories"))?;
            for r in &bench.records {
                let stem = export::runs_file_name(cfg).replace("runs_", "traj_").replace(".csv", "");
                export::export_trajectory(r, &tdir.join(format!("{stem}_{:04}.csv", r.start_index)))?;
            }
        }
        summaries.push(bench.summary);
    }
    export::export_summaries_json(&summaries, &dir.join("summary.json"))?;
    export::export_summaries_csv(&summaries, &dir.join("summary.csv"))?;
    print_table(out, &summaries).map_err(stdout_err)?;
    Ok(EXIT_OK)
}

pub fn cmd_trajectory(a: &TrajectoryArgs, out: &mut dyn Write) -> Result<i32> {
    let f = testfuns::lookup(a.function.trim())?;
    if a.dim != 2 || f.check_dim(2).is_err() {
        return Err(Error::InvalidConfig(format!(
            "trajectory experiments are two-dimensional; `{}` with dim {} is not",
            f.name, a.dim
        )));
    }
    let optimizers = parse_optimizers(&a.opt.optimizers)?;
    let dir = export::ensure_dir(&a.opt.out)?;
    writeln!(out, "{:<11} {:<5} {:>6} {:>10} {:>14}", "function", "opt", "steps", "final", "steps_to_1e-6")
        .map_err(stdout_err)?;
    for opt in optimizers {
        let mut cfg = ExperimentConfig::new(f.name, opt, false)?;
        apply_opt_args(&mut cfg, &a.opt);
        cfg.dim = 2;
        cfg.validate()?;
        let best = harness::run_trajectory_experiment(&f, &cfg, a.restarts)?;
        let path = dir.join(export::trajectory_file_name(f.name, opt.as_str()));
        export::export_trajectory(&best, &path)?;
        let reach = best
            .steps_to_reach(f.known_min_value + 1e-6)
            .map_or_else(|| "-".to_string(), |k| k.to_string());
        writeln!(
            out,
            "{:<11} {:<5} {:>6} {:>10} {:>14}",
            f.name,
            opt.as_str(),
            best.iterations_used,
            fmt_loss(best.final_loss),
            reach
        )
        .map_err(stdout_err)?;
    }
    Ok(EXIT_OK)
}

/// Largest relative gradient error of `f` over `points` seeded in-bounds points.
pub fn max_gradient_error(f: &TestFunction, points: usize, seed: u64, h: f64) -> f64 {
    let starts = harness::sample_starts(&f.bounds_for(f.default_dim()), points, seed);
    starts
        .iter()
        .map(|x| check_gradient(f, x.as_slice(), h))
        .fold(0.0, f64::max)
}

pub fn cmd_check_grad(a: &CheckGradArgs, functions: &[TestFunction], out: &mut dyn Write) -> Result<i32> {
    let mut failed = false;
    writeln!(out, "{:<11} {:>12} {:>6}", "function", "max_rel_err", "ok").map_err(stdout_err)?;
    for f in functions {
        let worst = max_gradient_error(f, a.points, a.seed, a.fd_step);
        // NaN counts as a failure
        let ok = worst <= a.tol;
        failed |= !ok;
        writeln!(out, "{:<11} {:>12.3e} {:>6}", f.name, worst, if ok { "yes" } else { "NO" })
            .map_err(stdout_err)?;
    }
    Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
}

/// A seeded symmetric matrix `Q diag(±λ) Qᵀ` with `|λ| ∈ [0.5, 3]` and a
/// random sign per eigenvalue, plus a stationary point in `[-1, 1]^d`.
pub fn random_quadratic(d: usize, rng: &mut SplitMix64) -> Result<(DenseMatrix, DenseVector)> {
    let mut m = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = rng.uniform(-1.0, 1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let q = sym_eig(&m, DEFAULT_EIG_TOL)?.eigenvectors;
    let lambdas: Vec<f64> = (0..d)
        .map(|_| {
            let mag = rng.uniform(0.5, 3.0);
            if rng.next_f64() < 0.5 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let a = q.matmul(&DenseMatrix::from_diag(&lambdas))?.matmul(&q.transpose())?.symmetrized();
    let p: DenseVector = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>().into();
    Ok((a, p))
}

pub fn cmd_estimate_hessian(a: &EstimateHessianArgs, out: &mut dyn Write) -> Result<i32> {
    if a.dim == 0 {
        return Err(Error::InvalidConfig("dim must be >= 1".into()));
    }
    if !(a.beta > 0.0 && a.beta <= 1.0) {
        return Err(Error::InvalidConfig(format!("beta must be in (0, 1], got {}", a.beta)));
    }
    let mut rng = SplitMix64::new(a.seed);
    let (target, p0) = random_quadratic(a.dim, &mut rng)?;
    let mut state = OgrState::zeroed(a.dim);
    for _ in 0..a.samples {
        let theta: DenseVector = (0..a.dim).map(|_| rng.uniform(-2.0, 2.0)).collect::<Vec<_>>().into();
        let g = mat_vec(&target, &theta.sub(&p0))?;
        state.update(&theta, &g, a.beta)?;
    }

    let norm = target.frobenius_norm();
    let mut failed = false;
    writeln!(out, "dim {} samples {} beta {} seed {}", a.dim, a.samples, a.beta, a.seed).map_err(stdout_err)?;
    for kind in [Estimator::Raw, Estimator::Symmetric] {
        let kind_name = kind.to_string();
        let line = match estimate(&state, kind, a.eps_eig) {
            Ok(h) if h.degraded => {
                failed = true;
                format!("{kind_name:<9} rank-deficient covariance (clamped eigen-pairs)")
            }
            Ok(h) => {
                let err_h = h.h.sub(&target).frobenius_norm() / norm;
                let err_p = estimate_stationary(&state, &h, a.eps_eig)
                    .map(|p| p.sub(&p0).norm())
                    .unwrap_or(f64::INFINITY);
                let ok = err_h <= a.tol;
                failed |= !ok;
                format!(
                    "{kind_name:<9} hessian_rel_err {err_h:.3e} stationary_err {err_p:.3e} {}",
                    if ok { "ok" } else { "FAIL" }
                )
            }
            Err(e @ Error::RankDeficient { .. }) => {
                failed = true;
                format!("{kind_name:<9} {e}")
            }
            Err(e) => return Err(e),
        };
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
