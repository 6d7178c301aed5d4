//! Online Gradient Regression.
//!
//! OGR fits the linear gradient model `g ≈ H (θ - p)` to the recent stream of
//! `(θ, g)` pairs by exponentially weighted least squares. The fit only needs
//! five running sums, which are updated with the same unnormalized rule
//! `v ← β v + sample`:
//!
//! | statistic | sample      |
//! |-----------|-------------|
//! | `s`       | `1`         |
//! | `θ̄`       | `θ`         |
//! | `ḡ`       | `g`         |
//! | `θθ̄`      | `θ θᵀ`      |
//! | `gθ̄`      | `g θᵀ`      |
//!
//! With `Ĉ = s·θθ̄ - θ̄θ̄ᵀ` (weighted covariance, up to a factor `s²`) and
//! `Ĝ = s·gθ̄ - ḡθ̄ᵀ`, the unconstrained estimate is `H = Ĝ Ĉ⁻¹`, and the
//! estimate constrained to symmetric `H` solves the Lyapunov equation
//! `Ĝ + Ĝᵀ = H Ĉ + Ĉ H` in the eigenbasis of `Ĉ`. Every estimate is invariant
//! under a common rescaling of all five statistics, so `(1 - β)`-normalized
//! moments give the same `H` and `p`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{outer, sym_eig, DenseMatrix, DenseVector, DEFAULT_EIG_TOL};

pub const DEFAULT_BETA: f64 = 0.2;
pub const DEFAULT_EPS_EIG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    Raw,
    #[default]
    Symmetric,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Raw => "raw",
            Estimator::Symmetric => "symmetric",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Estimator::Raw),
            "symmetric" | "sym" => Ok(Estimator::Symmetric),
            other => Err(Error::InvalidConfig(format!(
                "unknown estimator `{other}` (expected raw or symmetric)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OgrConfig {
    /// EMA decay.
    pub beta: f64,
    /// Step length multiplying the Newton-like direction.
    pub alpha: f64,
    /// Minimum absolute eigenvalue of `H` before inversion.
    pub eps_eig: f64,
    /// Maximum L2 norm of a single step.
    pub tau_norm: f64,
    pub estimator: Estimator,
}

impl OgrConfig {
    /// Default hyperparameters for a given step length; `tau_norm` is `10 α`.
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            beta: DEFAULT_BETA,
            alpha,
            eps_eig: DEFAULT_EPS_EIG,
            tau_norm: 10.0 * alpha,
            estimator: Estimator::Symmetric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidConfig(format!("beta must be in (0, 1), got {}", self.beta)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.eps_eig > 0.0) {
            return Err(Error::InvalidConfig(format!("eps_eig must be > 0, got {}", self.eps_eig)));
        }
        if !(self.tau_norm > 0.0) {
            return Err(Error::InvalidConfig(format!("tau_norm must be > 0, got {}", self.tau_norm)));
        }
        Ok(())
    }
}

impl Default for OgrConfig {
    fn default() -> Self {
        Self::with_alpha(0.5)
    }
}

/// Exponentially weighted sufficient statistics of the `(θ, g)` stream.
#[derive(Debug, Clone, PartialEq)]
pub struct OgrState {
    pub s: f64,
    pub mean_theta: DenseVector,
    pub mean_g: DenseVector,
    pub mom_theta_theta: DenseMatrix,
    pub mom_g_theta: DenseMatrix,
    pub step_count: u64,
}

impl OgrState {
    /// Optimizer start state: both moment matrices seeded with the identity,
    /// means and weight at zero.
    pub fn new(d: usize) -> Self {
        Self {
            s: 0.0,
            mean_theta: DenseVector::zeros(d),
            mean_g: DenseVector::zeros(d),
            mom_theta_theta: DenseMatrix::identity(d),
            mom_g_theta: DenseMatrix::identity(d),
            step_count: 0,
        }
    }

    /// All statistics zero; the pure least-squares setting.
    pub fn zeroed(d: usize) -> Self {
        Self {
            mom_theta_theta: DenseMatrix::zeros(d, d),
            mom_g_theta: DenseMatrix::zeros(d, d),
            ..Self::new(d)
        }
    }

    pub fn dim(&self) -> usize {
        self.mean_theta.len()
    }

    /// Folds one `(θ, g)` pair into the statistics with decay `beta`.
    ///
    /// `beta = 1` (plain sums) is accepted here so that exact batch
    /// regressions can be reproduced.
    pub fn update(&mut self, theta: &DenseVector, g: &DenseVector, beta: f64) -> Result<()> {
        let d = self.dim();
        for v in [theta, g] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        if !theta.is_finite() {
            return Err(Error::NonFinite("position"));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidConfig(format!("beta must be in (0, 1], got {beta}")));
        }
        self.s = beta * self.s + 1.0;
        self.mean_theta = self.mean_theta.scaled(beta).add(theta);
        self.mean_g = self.mean_g.scaled(beta).add(g);
        self.mom_theta_theta.scale_add_assign(beta, 1.0, &outer(theta, theta));
        self.mom_g_theta.scale_add_assign(beta, 1.0, &outer(g, theta));
        self.step_count += 1;
        Ok(())
    }

    /// Every statistic multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            s: c * self.s,
            mean_theta: self.mean_theta.scaled(c),
            mean_g: self.mean_g.scaled(c),
            mom_theta_theta: self.mom_theta_theta.scaled(c),
            mom_g_theta: self.mom_g_theta.scaled(c),
            step_count: self.step_count,
        }
    }

    /// `s·θθ̄ - θ̄θ̄ᵀ`.
    pub fn covariance(&self) -> DenseMatrix {
        self.mom_theta_theta
            .scaled(self.s)
            .sub(&outer(&self.mean_theta, &self.mean_theta))
    }

    /// `s·gθ̄ - ḡθ̄ᵀ`.
    pub fn cross_covariance(&self) -> DenseMatrix {
        self.mom_g_theta
            .scaled(self.s)
            .sub(&outer(&self.mean_g, &self.mean_theta))
    }
}

/// Validates `config` and returns the identity-seeded start state.
pub fn ogr_init(d: usize, config: &OgrConfig) -> Result<OgrState> {
    config.validate()?;
    if d == 0 {
        return Err(Error::InvalidConfig("dimension must be >= 1".into()));
    }
    Ok(OgrState::new(d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianEstimate {
    pub h: DenseMatrix,
    pub symmetric: bool,
    /// Some eigen-pair sums of the covariance were clamped.
    pub degraded: bool,
}

/// `H = Ĝ Ĉ⁻¹`. Fails with [`Error::RankDeficient`] when
/// `min |λ(Ĉ)| < eps_eig · max |λ(Ĉ)|`.
pub fn estimate_raw(state: &OgrState, eps_eig: f64) -> Result<HessianEstimate> {
    let cov = state.covariance();
    let eig = sym_eig(&cov, DEFAULT_EIG_TOL)?;
    let (min, max) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| (lo.min(l.abs()), hi.max(l.abs())));
    if !(max > 0.0) || min < eps_eig * max {
        return Err(Error::RankDeficient { min, max });
    }
    let cov_inv = eig.reconstruct_with(|l| 1.0 / l);
    let h = state.cross_covariance().matmul(&cov_inv)?;
    Ok(HessianEstimate {
        h,
        symmetric: false,
        degraded: false,
    })
}

/// Symmetric least-squares estimate.
///
/// With `Ĉ = O diag(σ²) Oᵀ`, `H = O [ (Oᵀ(Ĝ + Ĝᵀ)O)_ij / (σ²_i + σ²_j) ] Oᵀ`.
/// Pair sums at or below `eps_eig · 2 max σ²` are clamped to that value and
/// the estimate is flagged `degraded`. A covariance with no positive
/// eigenvalue carries no information and is reported as rank-deficient.
pub fn estimate_symmetric(state: &OgrState, eps_eig: f64) -> Result<HessianEstimate> {
    let d = state.dim();
    let cov = state.covariance();
    let eig = sym_eig(&cov, DEFAULT_EIG_TOL)?;
    let sigma = &eig.eigenvalues;
    let top = sigma[0];
    if !(top > 0.0) {
        return Err(Error::RankDeficient {
            min: sigma[d - 1].abs(),
            max: top.abs(),
        });
    }
    let floor = eps_eig * 2.0 * top;

    let g = state.cross_covariance();
    let sym_g = g.add(&g.transpose());
    let o = &eig.eigenvectors;
    let mut rotated = congruence_t(o, &sym_g);
    let mut degraded = false;
    for i in 0..d {
        for j in i..d {
            let mut pair = sigma[i] + sigma[j];
            if pair <= floor {
                pair = floor;
                degraded = true;
            }
            let v = rotated[(i, j)] / pair;
            rotated[(i, j)] = v;
            rotated[(j, i)] = v;
        }
    }
    let h = congruence(o, &rotated);
    Ok(HessianEstimate {
        h,
        symmetric: true,
        degraded,
    })
}

/// Runs the estimator selected by `kind`.
pub fn estimate(state: &OgrState, kind: Estimator, eps_eig: f64) -> Result<HessianEstimate> {
    match kind {
        Estimator::Raw => estimate_raw(state, eps_eig),
        Estimator::Symmetric => estimate_symmetric(state, eps_eig),
    }
}

/// Zero-gradient point of the fitted quadratic model, `p = (θ̄ - H⁻¹ḡ) / s`,
/// using the sign-preserving clipped inverse.
pub fn estimate_stationary(state: &OgrState, h: &HessianEstimate, eps_eig: f64) -> Result<DenseVector> {
    if !(state.s > 0.0) {
        return Err(Error::NoData);
    }
    let hinv_g = clipped_inverse_apply(h, &state.mean_g, eps_eig)?;
    Ok(state.mean_theta.sub(&hinv_g).scaled(1.0 / state.s))
}

/// How eigenvalues of `H` are treated before inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    /// `λ → sign(λ) max(|λ|, ε)` with `sign(0) = +1`. Inverts the model
    /// exactly, so solving for a stationary point keeps saddles as saddles.
    Signed,
    /// `λ → max(|λ|, ε)`. A step `-α |H|⁻¹ g` always descends and moves away
    /// from saddles along negative-curvature directions.
    Absolute,
}

impl Curvature {
    fn clip(self, lambda: f64, eps: f64) -> f64 {
        let mag = lambda.abs().max(eps);
        match self {
            Curvature::Signed if lambda < 0.0 => -mag,
            _ => mag,
        }
    }
}

/// `H_clipped⁻¹ v` with the sign-preserving clip; see [`Curvature::Signed`].
pub fn clipped_inverse_apply(h: &HessianEstimate, v: &DenseVector, eps_eig: f64) -> Result<DenseVector> {
    clipped_inverse_apply_with(h, v, eps_eig, Curvature::Signed)
}

/// `H_clipped⁻¹ v` through the eigendecomposition of `(H + Hᵀ) / 2`.
pub fn clipped_inverse_apply_with(
    h: &HessianEstimate,
    v: &DenseVector,
    eps_eig: f64,
    mode: Curvature,
) -> Result<DenseVector> {
    let sym = if h.symmetric { h.h.clone() } else { h.h.symmetrized() };
    let eig = sym_eig(&sym, DEFAULT_EIG_TOL)?;
    eig.apply_with(v, |l| 1.0 / mode.clip(l, eps_eig))
}

/// `Oᵀ M O` for symmetric `M`, mirrored so the result is exactly symmetric.
fn congruence_t(o: &DenseMatrix, m: &DenseMatrix) -> DenseMatrix {
    let n = o.rows();
    let mo = m.matmul(o).expect("square operands");
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| o[(k, i)] * mo[(k, j)]).sum();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `O M Oᵀ` for symmetric `M`, mirrored so the result is exactly symmetric.
fn congruence(o: &DenseMatrix, m: &DenseMatrix) -> DenseMatrix {
    let n = o.rows();
    let om = o.matmul(m).expect("square operands");
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| om[(i, k)] * o[(j, k)]).sum();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OgrDiagnostics {
    /// Steps that used `-α g` (warm-up or unusable estimate).
    pub fallback_steps: u64,
    /// Steps rescaled to `tau_norm`.
    pub clipped_steps: u64,
    /// Steps taken with a degraded symmetric estimate.
    pub degraded_estimates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OgrStep {
    pub delta: DenseVector,
    pub fallback: bool,
    pub clipped: bool,
}

/// OGR as an iterative optimizer.
#[derive(Debug, Clone)]
pub struct Ogr {
    config: OgrConfig,
    state: OgrState,
    diagnostics: OgrDiagnostics,
    last_estimate: Option<HessianEstimate>,
}

impl Ogr {
    pub fn new(d: usize, config: OgrConfig) -> Result<Self> {
        let state = ogr_init(d, &config)?;
        Ok(Self {
            config,
            state,
            diagnostics: OgrDiagnostics::default(),
            last_estimate: None,
        })
    }

    pub fn config(&self) -> &OgrConfig {
        &self.config
    }

    pub fn state(&self) -> &OgrState {
        &self.state
    }

    pub fn diagnostics(&self) -> OgrDiagnostics {
        self.diagnostics
    }

    /// Hessian estimate used by the most recent non-fallback step.
    pub fn last_estimate(&self) -> Option<&HessianEstimate> {
        self.last_estimate.as_ref()
    }

    /// Number of initial steps that use a plain gradient step while the
    /// statistics fill up.
    pub fn warmup_steps(&self) -> u64 {
        self.state.dim().max(2) as u64
    }

    /// Records `(θ, g)` and proposes `Δθ = -α |H|⁻¹ g`, rescaled to at most
    /// `tau_norm`.
    pub fn step(&mut self, theta: &DenseVector, g: &DenseVector) -> Result<OgrStep> {
        self.state.update(theta, g, self.config.beta)?;

        let newton = if self.state.step_count <= self.warmup_steps() {
            None
        } else {
            self.newton_direction(g)
        };
        let fallback = newton.is_none();
        let direction = newton.unwrap_or_else(|| g.clone());
        if fallback {
            self.diagnostics.fallback_steps += 1;
        }

        let mut delta = direction.scaled(-self.config.alpha);
        let norm = delta.norm();
        let clipped = norm > self.config.tau_norm;
        if clipped {
            delta = delta.scaled(self.config.tau_norm / norm);
            self.diagnostics.clipped_steps += 1;
        }
        Ok(OgrStep {
            delta,
            fallback,
            clipped,
        })
    }

    fn newton_direction(&mut self, g: &DenseVector) -> Option<DenseVector> {
        let est = estimate(&self.state, self.config.estimator, self.config.eps_eig).ok()?;
        if !est.h.is_finite() {
            return None;
        }
        let dir = clipped_inverse_apply_with(&est, g, self.config.eps_eig, Curvature::Absolute).ok()?;
        if !dir.is_finite() {
            return None;
        }
        if est.degraded {
            self.diagnostics.degraded_estimates += 1;
        }
        self.last_estimate = Some(est);
        Some(dir)
    }
}
