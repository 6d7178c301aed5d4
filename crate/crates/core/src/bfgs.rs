//! BFGS with an explicit inverse-Hessian approximation.
//!
//! The update is the standard rank-two formula
//!
//! ```text
//! B⁻¹ ← (I - ρ s yᵀ) B⁻¹ (I - ρ y sᵀ) + ρ s sᵀ,    ρ = 1 / (yᵀs)
//! ```
//!
//! and is skipped whenever the curvature condition `yᵀs > tol ‖s‖ ‖y‖` fails,
//! which keeps `B⁻¹` positive definite on non-convex objectives.

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, outer, DenseMatrix, DenseVector};

pub const DEFAULT_CURVATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsState {
    pub b_inv: DenseMatrix,
    pub prev_x: Option<DenseVector>,
    pub prev_g: Option<DenseVector>,
    pub alpha: f64,
    pub curvature_skip_count: u64,
}

impl BfgsState {
    /// `B⁻¹ = I`, no history.
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidConfig("dimension must be >= 1".into()));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self {
            b_inv: DenseMatrix::identity(d),
            prev_x: None,
            prev_g: None,
            alpha,
            curvature_skip_count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.b_inv.rows()
    }

    /// Applies the inverse update for the pair `(s, y)`. Returns `false` (and
    /// counts a skip) when the curvature condition fails.
    pub fn update(&mut self, s: &DenseVector, y: &DenseVector, curvature_tol: f64) -> Result<bool> {
        let d = self.dim();
        for v in [s, y] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        if !s.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("BFGS update pair"));
        }
        let ys = y.dot(s);
        if !(ys > curvature_tol * s.norm() * y.norm()) {
            self.curvature_skip_count += 1;
            return Ok(false);
        }
        let rho = 1.0 / ys;
        // expanded with hy = B y:
        //   B - ρ (s hyᵀ + hy sᵀ) + (ρ² yᵀ B y + ρ) s sᵀ
        let hy = mat_vec(&self.b_inv, y)?;
        let yhy = y.dot(&hy);
        let mut next = self.b_inv.clone();
        for i in 0..d {
            for j in 0..d {
                next[(i, j)] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
            }
        }
        self.b_inv = next.symmetrized();
        Ok(true)
    }

    /// `-B⁻¹ g`.
    pub fn direction(&self, g: &DenseVector) -> Result<DenseVector> {
        Ok(mat_vec(&self.b_inv, g)?.scaled(-1.0))
    }
}

/// Literal form of the update, `(I - ρ s yᵀ) B (I - ρ y sᵀ) + ρ s sᵀ`,
/// evaluated with full matrix products. Kept as a cross-check for the
/// expanded form used by [`BfgsState::update`].
pub fn inverse_update_reference(b_inv: &DenseMatrix, s: &DenseVector, y: &DenseVector) -> Result<DenseMatrix> {
    let d = b_inv.rows();
    let rho = 1.0 / y.dot(s);
    let eye = DenseMatrix::identity(d);
    let left = eye.sub(&outer(s, y).scaled(rho));
    let right = eye.sub(&outer(y, s).scaled(rho));
    Ok(left.matmul(b_inv)?.matmul(&right)?.add(&outer(s, s).scaled(rho)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BfgsDiagnostics {
    pub curvature_skips: u64,
}

/// BFGS as an iterative optimizer: update from the previous iterate, then
/// step `α (-B⁻¹ g)`.
#[derive(Debug, Clone)]
pub struct Bfgs {
    state: BfgsState,
    curvature_tol: f64,
}

impl Bfgs {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            state: BfgsState::new(d, alpha)?,
            curvature_tol: DEFAULT_CURVATURE_TOL,
        })
    }

    pub fn with_curvature_tol(mut self, tol: f64) -> Self {
        self.curvature_tol = tol;
        self
    }

    pub fn state(&self) -> &BfgsState {
        &self.state
    }

    pub fn diagnostics(&self) -> BfgsDiagnostics {
        BfgsDiagnostics {
            curvature_skips: self.state.curvature_skip_count,
        }
    }

    pub fn step(&mut self, x: &DenseVector, g: &DenseVector) -> Result<DenseVector> {
        let d = self.state.dim();
        for v in [x, g] {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: v.len() });
            }
        }
        if let (Some(px), Some(pg)) = (&self.state.prev_x, &self.state.prev_g) {
            let s = x.sub(px);
            let y = g.sub(pg);
            self.state.update(&s, &y, self.curvature_tol)?;
        }
        let delta = self.state.direction(g)?.scaled(self.state.alpha);
        self.state.prev_x = Some(x.clone());
        self.state.prev_g = Some(g.clone());
        Ok(delta)
    }
}
