//! Experiment protocol: seeded start points, per-run optimization loops,
//! sorted final-loss summaries and best-of-N trajectory runs.

pub mod export;
pub mod rng;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bfgs::Bfgs;
use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::linesearch::{armijo_backtrack, LineSearchConfig};
use crate::ogr::{Estimator, Ogr, OgrConfig, DEFAULT_BETA, DEFAULT_EPS_EIG};
use crate::testfuns::{self, TestFunction};

pub use rng::SplitMix64;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_STEPS: usize = 2000;
pub const DEFAULT_STARTS: usize = 200;
pub const DEFAULT_RESTARTS: usize = 10;
pub const EARLY_STOP_GRAD_NORM: f64 = 1e-13;
pub const DEFAULT_SUCCESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Ogr,
    Bfgs,
}

impl OptimizerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Ogr => "ogr",
            OptimizerKind::Bfgs => "bfgs",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ogr" => Ok(OptimizerKind::Ogr),
            "bfgs" => Ok(OptimizerKind::Bfgs),
            other => Err(Error::InvalidConfig(format!(
                "unknown optimizer `{other}` (expected ogr or bfgs)"
            ))),
        }
    }
}

/// Step length used for every function except Rastrigin (0.6).
pub fn default_alpha(function: &str) -> f64 {
    if function == "rastrigin" {
        0.6
    } else {
        0.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub function_name: String,
    pub dim: usize,
    pub optimizer: OptimizerKind,
    pub line_search: bool,
    pub n_starts: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub eps_eig: f64,
    /// `None` means `10 α`.
    pub tau_norm: Option<f64>,
    pub estimator: Estimator,
    pub ls_config: LineSearchConfig,
    pub record_trajectory: bool,
    /// Stop once `‖g‖` drops to this value; `None` always runs `max_steps`.
    pub early_stop_grad_norm: Option<f64>,
    /// Use the same start points for every optimizer/line-search combination.
    pub shared_starts: bool,
    /// A run succeeds when `final_loss - known_min_value <= success_tol`.
    pub success_tol: f64,
    /// Worker threads for independent runs; output order never depends on it.
    pub jobs: usize,
}

impl ExperimentConfig {
    /// Full-protocol defaults: 200 starts, 2000 steps, seed 42, β = 0.2,
    /// ε = 1e-12, τ = 0.5 backtracking with 50 trials.
    pub fn new(function: &str, optimizer: OptimizerKind, line_search: bool) -> Result<Self> {
        let f = testfuns::lookup(function)?;
        Ok(Self {
            function_name: f.name.to_string(),
            dim: f.default_dim(),
            optimizer,
            line_search,
            n_starts: DEFAULT_STARTS,
            max_steps: DEFAULT_STEPS,
            seed: DEFAULT_SEED,
            alpha: default_alpha(f.name),
            beta: DEFAULT_BETA,
            eps_eig: DEFAULT_EPS_EIG,
            tau_norm: None,
            estimator: Estimator::Symmetric,
            ls_config: LineSearchConfig::default(),
            record_trajectory: false,
            early_stop_grad_norm: Some(EARLY_STOP_GRAD_NORM),
            shared_starts: true,
            success_tol: DEFAULT_SUCCESS_TOL,
            jobs: 1,
        })
    }

    pub fn ogr_config(&self) -> OgrConfig {
        OgrConfig {
            beta: self.beta,
            alpha: self.alpha,
            eps_eig: self.eps_eig,
            tau_norm: self.tau_norm.unwrap_or(10.0 * self.alpha),
            estimator: self.estimator,
        }
    }

    pub fn function(&self) -> Result<TestFunction> {
        testfuns::lookup(&self.function_name)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.function()?;
        f.check_dim(self.dim)?;
        if self.n_starts < 1 {
            return Err(Error::InvalidConfig("n_starts must be >= 1".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        self.ogr_config().validate()?;
        self.ls_config.validate()?;
        Ok(())
    }

    /// Seed used to draw start points for this configuration.
    pub fn start_seed(&self) -> u64 {
        if self.shared_starts {
            self.seed
        } else {
            let tag = 1 + 2 * (self.optimizer as u64) + u64::from(self.line_search);
            SplitMix64::new(self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)).next_u64()
        }
    }
}

/// `n` points with coordinates drawn in order (point-major) from
/// [`SplitMix64`], uniform in each coordinate's `[low, high)`.
pub fn sample_starts(bounds: &[(f64, f64)], n: usize, seed: u64) -> Vec<DenseVector> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| rng.uniform(lo, hi))
                .collect::<Vec<_>>()
                .into()
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunDiagnostics {
    /// OGR steps that used the plain gradient.
    pub fallback_steps: u64,
    pub clipped_steps: u64,
    pub degraded_estimates: u64,
    pub curvature_skips: u64,
    /// Line searches that ended without a decrease.
    pub ls_fallbacks: u64,
    pub early_stopped: bool,
    /// The run hit a non-finite loss or gradient and stopped.
    pub non_finite: bool,
    /// The run could not start; `final_loss` is `+inf`.
    pub failure: Option<String>,
}

impl RunDiagnostics {
    /// Count exported as `fallback_count`.
    pub fn fallback_count(&self) -> u64 {
        self.fallback_steps + self.ls_fallbacks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub start_index: usize,
    pub start_point: DenseVector,
    /// Loss before the first step, then after every step.
    pub losses: Vec<f64>,
    /// Positions matching `losses`, when recorded.
    pub trajectory: Option<Vec<DenseVector>>,
    pub final_loss: f64,
    pub iterations_used: usize,
    pub diagnostics: RunDiagnostics,
}

impl RunRecord {
    fn failed(start_index: usize, start_point: DenseVector, err: &Error) -> Self {
        Self {
            start_index,
            start_point,
            losses: vec![f64::INFINITY],
            trajectory: None,
            final_loss: f64::INFINITY,
            iterations_used: 0,
            diagnostics: RunDiagnostics {
                failure: Some(err.to_string()),
                ..Default::default()
            },
        }
    }

    /// First step index at which the loss is `<= threshold`.
    pub fn steps_to_reach(&self, threshold: f64) -> Option<usize> {
        self.losses.iter().position(|&l| l <= threshold)
    }
}

enum Driver {
    Ogr(Ogr),
    Bfgs(Bfgs),
}

impl Driver {
    fn new(config: &ExperimentConfig, d: usize) -> Result<Self> {
        Ok(match config.optimizer {
            OptimizerKind::Ogr => Driver::Ogr(Ogr::new(d, config.ogr_config())?),
            OptimizerKind::Bfgs => Driver::Bfgs(Bfgs::new(d, config.alpha)?),
        })
    }

    fn propose(&mut self, x: &DenseVector, g: &DenseVector) -> Result<DenseVector> {
        match self {
            Driver::Ogr(o) => Ok(o.step(x, g)?.delta),
            Driver::Bfgs(b) => b.step(x, g),
        }
    }

    fn record(&self, diag: &mut RunDiagnostics) {
        match self {
            Driver::Ogr(o) => {
                let d = o.diagnostics();
                diag.fallback_steps = d.fallback_steps;
                diag.clipped_steps = d.clipped_steps;
                diag.degraded_estimates = d.degraded_estimates;
            }
            Driver::Bfgs(b) => diag.curvature_skips = b.diagnostics().curvature_skips,
        }
    }
}

/// Runs one optimization from `start` for up to `config.max_steps` steps.
///
/// With line search enabled the optimizer's proposed step is used as the
/// search direction and the step returned by the search is applied.
pub fn run_single(
    f: &TestFunction,
    start: &DenseVector,
    config: &ExperimentConfig,
    start_index: usize,
) -> Result<RunRecord> {
    let d = start.len();
    f.check_dim(d)?;
    let mut driver = Driver::new(config, d)?;
    let mut diag = RunDiagnostics::default();

    let mut x = start.clone();
    let f0 = (f.eval)(x.as_slice());
    if !f0.is_finite() || !x.is_finite() {
        return Err(Error::NonFinite("loss at start point"));
    }
    let mut losses = vec![f0];
    let mut trajectory = config.record_trajectory.then(|| vec![x.clone()]);

    for _ in 0..config.max_steps {
        let g: DenseVector = (f.grad)(x.as_slice()).into();
        if !g.is_finite() {
            diag.non_finite = true;
            break;
        }
        if let Some(tol) = config.early_stop_grad_norm {
            if g.norm() <= tol {
                diag.early_stopped = true;
                break;
            }
        }
        let delta = driver.propose(&x, &g)?;
        let step = if config.line_search {
            let out = armijo_backtrack(f.eval, &x, &delta, Some(&g), &config.ls_config)?;
            if out.is_fallback() {
                diag.ls_fallbacks += 1;
            }
            out.step
        } else {
            delta
        };
        let next = x.add(&step);
        let loss = (f.eval)(next.as_slice());
        if !loss.is_finite() || !next.is_finite() {
            diag.non_finite = true;
            break;
        }
        x = next;
        losses.push(loss);
        if let Some(t) = trajectory.as_mut() {
            t.push(x.clone());
        }
    }
    driver.record(&mut diag);

    Ok(RunRecord {
        start_index,
        start_point: start.clone(),
        final_loss: *losses.last().expect("initial loss"),
        iterations_used: losses.len() - 1,
        losses,
        trajectory,
        diagnostics: diag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSummary {
    pub function: String,
    pub optimizer: OptimizerKind,
    pub line_search: bool,
    pub dim: usize,
    pub n_starts: usize,
    pub sorted_final_losses: Vec<f64>,
    pub median: f64,
    pub best: f64,
    pub worst: f64,
    pub success_rate: f64,
    pub failed_runs: usize,
}

impl BenchmarkSummary {
    pub fn from_records(config: &ExperimentConfig, f: &TestFunction, records: &[RunRecord]) -> Self {
        let mut sorted: Vec<f64> = records.iter().map(|r| r.final_loss).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n == 0 {
            f64::NAN
        } else if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let successes = sorted
            .iter()
            .filter(|&&l| l - f.known_min_value <= config.success_tol)
            .count();
        Self {
            function: config.function_name.clone(),
            optimizer: config.optimizer,
            line_search: config.line_search,
            dim: config.dim,
            n_starts: n,
            median,
            best: sorted.first().copied().unwrap_or(f64::NAN),
            worst: sorted.last().copied().unwrap_or(f64::NAN),
            success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
            failed_runs: records.iter().filter(|r| r.diagnostics.failure.is_some()).count(),
            sorted_final_losses: sorted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub summary: BenchmarkSummary,
    /// Ordered by `start_index`.
    pub records: Vec<RunRecord>,
}

fn run_all(f: &TestFunction, starts: &[DenseVector], config: &ExperimentConfig) -> Vec<RunRecord> {
    let one = |(i, s): (usize, &DenseVector)| {
        run_single(f, s, config, i).unwrap_or_else(|e| RunRecord::failed(i, s.clone(), &e))
    };
    if config.jobs <= 1 {
        return starts.iter().enumerate().map(one).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(config.jobs).build() {
        Ok(pool) => pool.install(|| starts.par_iter().enumerate().map(one).collect()),
        Err(_) => starts.iter().enumerate().map(one).collect(),
    }
}

/// Runs every sampled start and summarizes the final losses.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<Benchmark> {
    config.validate()?;
    let f = config.function()?;
    let starts = sample_starts(&f.bounds_for(config.dim), config.n_starts, config.start_seed());
    let records = run_all(&f, &starts, config);
    let summary = BenchmarkSummary::from_records(config, &f, &records);
    Ok(Benchmark { summary, records })
}

/// Best (lowest final loss, earliest on ties) of `n_restarts` seeded
/// two-dimensional runs without line search, trajectory recorded.
pub fn run_trajectory_experiment(
    f: &TestFunction,
    config: &ExperimentConfig,
    n_restarts: usize,
) -> Result<RunRecord> {
    if config.dim != 2 {
        return Err(Error::InvalidConfig(format!(
            "trajectory experiments are two-dimensional, got dim {}",
            config.dim
        )));
    }
    f.check_dim(2)?;
    if config.line_search {
        return Err(Error::InvalidConfig("trajectory experiments run without line search".into()));
    }
    if n_restarts < 1 {
        return Err(Error::InvalidConfig("n_restarts must be >= 1".into()));
    }
    let cfg = ExperimentConfig {
        record_trajectory: true,
        ..config.clone()
    };
    let starts = sample_starts(&f.bounds_for(2), n_restarts, cfg.start_seed());
    let records = run_all(f, &starts, &cfg);
    records
        .into_iter()
        .filter(|r| r.diagnostics.failure.is_none())
        .reduce(|best, r| if r.final_loss < best.final_loss { r } else { best })
        .ok_or(Error::NonFinite("every restart failed"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfuns::{ROSENBROCK, SPHERE};

    fn cfg(function: &str, opt: OptimizerKind) -> ExperimentConfig {
        ExperimentConfig::new(function, opt, false).unwrap()
    }

    #[test]
    fn paper_defaults() {
        let c = cfg("rastrigin", OptimizerKind::Ogr);
        assert_eq!((c.n_starts, c.max_steps, c.seed, c.dim), (200, 2000, 42, 2));
        assert_eq!(c.alpha, 0.6);
        assert_eq!(cfg("sphere", OptimizerKind::Bfgs).alpha, 0.5);
        assert_eq!(c.beta, 0.2);
        assert_eq!(c.eps_eig, 1e-12);
        assert_eq!(c.ls_config.backtrack_factor, 0.5);
        assert_eq!(c.ls_config.max_backtracks, 50);
        assert_eq!(c.ogr_config().tau_norm, 6.0);
    }

    #[test]
    fn starts_within_bounds_and_deterministic() {
        let b = SPHERE.bounds_for(2);
        let a = sample_starts(&b, 200, 42);
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|p| p.iter().all(|v| (-5.0..5.0).contains(v))));
        assert_eq!(a, sample_starts(&b, 200, 42));
        assert_ne!(a, sample_starts(&b, 200, 43));
    }

    #[test]
    fn sphere_ogr_reaches_zero() {
        let c = cfg("sphere", OptimizerKind::Ogr);
        let r = run_single(&SPHERE, &[3.0, 4.0].into(), &c, 0).unwrap();
        assert!(r.final_loss <= 1e-12);
        assert_eq!(r.losses.len(), r.iterations_used + 1);
        assert_eq!(*r.losses.last().unwrap(), r.final_loss);
    }

    #[test]
    fn zero_step_run() {
        let mut c = cfg("sphere", OptimizerKind::Ogr);
        c.max_steps = 0;
        let r = run_single(&SPHERE, &[3.0, 4.0].into(), &c, 0).unwrap();
        assert_eq!(r.losses, vec![25.0]);
        assert_eq!(r.final_loss, 25.0);
        assert_eq!(r.iterations_used, 0);
    }

    #[test]
    fn start_at_minimizer_stays() {
        for opt in [OptimizerKind::Ogr, OptimizerKind::Bfgs] {
            let c = cfg("rosenbrock", opt);
            let r = run_single(&ROSENBROCK, &[1.0, 1.0].into(), &c, 0).unwrap();
            assert!(r.final_loss <= 1e-15);
            assert_eq!(r.iterations_used, 0);
            assert!(r.diagnostics.early_stopped);
        }
    }

    #[test]
    fn non_finite_mid_run_keeps_last_finite_loss() {
        let blowup = TestFunction {
            name: "blowup",
            eval: |x| if x[0] > 2.0 { f64::INFINITY } else { -x[0] },
            grad: |_| vec![-1.0, 0.0],
            ..SPHERE
        };
        let c = cfg("sphere", OptimizerKind::Bfgs);
        let r = run_single(&blowup, &[0.0, 0.0].into(), &c, 3).unwrap();
        assert!(r.diagnostics.non_finite);
        assert!(r.final_loss.is_finite());
        assert_eq!(r.start_index, 3);
    }

    #[test]
    fn trajectory_requires_2d_and_no_line_search() {
        let mut c = cfg("sphere", OptimizerKind::Ogr);
        c.dim = 3;
        assert!(run_trajectory_experiment(&SPHERE, &c, 2).is_err());
        let mut c = cfg("sphere", OptimizerKind::Ogr);
        c.line_search = true;
        assert!(run_trajectory_experiment(&SPHERE, &c, 2).is_err());
    }

    #[test]
    fn summary_median_and_success() {
        let c = cfg("sphere", OptimizerKind::Ogr);
        let mk = |l: f64| RunRecord {
            start_index: 0,
            start_point: DenseVector::zeros(2),
            losses: vec![l],
            trajectory: None,
            final_loss: l,
            iterations_used: 0,
            diagnostics: RunDiagnostics::default(),
        };
        let recs: Vec<_> = [3.0, 1e-9, f64::INFINITY, 2.0].into_iter().map(mk).collect();
        let s = BenchmarkSummary::from_records(&c, &SPHERE, &recs);
        assert_eq!(s.sorted_final_losses, vec![1e-9, 2.0, 3.0, f64::INFINITY]);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.best, 1e-9);
        assert_eq!(s.success_rate, 0.25);
    }
}
