//! Backtracking line search with an Armijo sufficient-decrease test.
//!
//! Trial steps are `α d` for `α = 1, τ, τ², …` (at most `max_backtracks`
//! trials). When the slope along `d` is negative the first trial satisfying
//! `f(x + α d) ≤ f(x) + c α slope` is accepted; otherwise `d` is not a descent
//! direction and the first trial with any decrease is accepted. If nothing is
//! accepted the lowest finite trial is returned, or `min_step_scale · d` when
//! every trial was non-finite.

use crate::error::{Error, Result};
use crate::linalg::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    /// Armijo constant `c`.
    pub c: f64,
    /// Backtracking factor `τ`.
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Finite-difference scale used when no gradient is supplied.
    pub fd_epsilon: f64,
    /// Step scale returned when no finite trial was seen.
    pub min_step_scale: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            c: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 50,
            fd_epsilon: 1e-8,
            min_step_scale: 1e-12,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::InvalidConfig(format!("armijo c must be in (0, 1), got {}", self.c)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "backtrack factor must be in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if self.max_backtracks < 1 {
            return Err(Error::InvalidConfig("max_backtracks must be >= 1".into()));
        }
        if !(self.fd_epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("fd_epsilon must be > 0, got {}", self.fd_epsilon)));
        }
        Ok(())
    }
}

/// Which exit of the search produced the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceptance {
    ZeroDirection,
    Armijo,
    SimpleDecrease,
    /// No trial accepted; lowest finite trial returned.
    BestSeen,
    /// No finite trial at all; `min_step_scale · d` returned.
    MinimalStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub step: DenseVector,
    /// Multiplier applied to the direction.
    pub scale: f64,
    pub acceptance: Acceptance,
    pub slope: f64,
    /// Objective evaluations including `f(x)`.
    pub evaluations: usize,
    /// Objective value at `x + step`, when it was evaluated.
    pub value: Option<f64>,
}

impl LineSearchOutcome {
    /// True when no trial passed a decrease test.
    pub fn is_fallback(&self) -> bool {
        matches!(self.acceptance, Acceptance::BestSeen | Acceptance::MinimalStep)
    }
}

fn trial_point(x: &DenseVector, scale: f64, d: &DenseVector) -> Vec<f64> {
    x.iter().zip(d.iter()).map(|(xi, di)| xi + scale * di).collect()
}

/// Searches along `d` from `x`. Uses `g·d` as the slope when `g` is given,
/// otherwise a forward difference with step `fd_epsilon / max(‖d‖, 1)`.
pub fn armijo_backtrack<F>(
    mut f: F,
    x: &DenseVector,
    d: &DenseVector,
    g: Option<&DenseVector>,
    config: &LineSearchConfig,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&[f64]) -> f64,
{
    if d.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: d.len() });
    }
    let f0 = f(x.as_slice());
    let mut evaluations = 1;
    if !f0.is_finite() {
        return Err(Error::NonFinite("objective at line-search origin"));
    }

    let n = d.norm();
    if n == 0.0 {
        return Ok(LineSearchOutcome {
            step: DenseVector::zeros(d.len()),
            scale: 0.0,
            acceptance: Acceptance::ZeroDirection,
            slope: 0.0,
            evaluations,
            value: Some(f0),
        });
    }

    let slope = match g {
        Some(g) => {
            if g.len() != x.len() {
                return Err(Error::DimensionMismatch { expected: x.len(), got: g.len() });
            }
            g.dot(d)
        }
        None => {
            let delta = config.fd_epsilon / n.max(1.0);
            let probe = f(&trial_point(x, delta, d));
            evaluations += 1;
            (probe - f0) / delta
        }
    };
    let use_armijo = slope < 0.0;

    let mut scale = 1.0;
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..config.max_backtracks {
        let trial = trial_point(x, scale, d);
        let f_new = f(&trial);
        evaluations += 1;
        if f_new.is_finite() {
            let accepted = if use_armijo {
                f_new <= f0 + config.c * scale * slope
            } else {
                f_new < f0
            };
            if accepted {
                return Ok(LineSearchOutcome {
                    step: d.scaled(scale),
                    scale,
                    acceptance: if use_armijo {
                        Acceptance::Armijo
                    } else {
                        Acceptance::SimpleDecrease
                    },
                    slope,
                    evaluations,
                    value: Some(f_new),
                });
            }
            if best.is_none_or(|(bf, _)| f_new < bf) {
                best = Some((f_new, scale));
            }
        }
        scale *= config.backtrack_factor;
    }

    Ok(match best {
        Some((bf, bs)) => LineSearchOutcome {
            step: d.scaled(bs),
            scale: bs,
            acceptance: Acceptance::BestSeen,
            slope,
            evaluations,
            value: Some(bf),
        },
        None => LineSearchOutcome {
            step: d.scaled(config.min_step_scale),
            scale: config.min_step_scale,
            acceptance: Acceptance::MinimalStep,
            slope,
            evaluations,
            value: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x: &[f64]) -> f64 {
        x[0] * x[0]
    }

    #[test]
    fn full_step_accepted_on_parabola() {
        let out = armijo_backtrack(
            square,
            &[1.0].into(),
            &[-1.0].into(),
            Some(&[2.0].into()),
            &LineSearchConfig::default(),
        )
        .unwrap();
        assert_eq!(out.acceptance, Acceptance::Armijo);
        assert_eq!(out.step.as_slice(), &[-1.0]);
        assert_eq!(out.evaluations, 2);
    }

    #[test]
    fn zero_direction() {
        let out = armijo_backtrack(square, &[1.0].into(), &[0.0].into(), None, &LineSearchConfig::default()).unwrap();
        assert_eq!(out.acceptance, Acceptance::ZeroDirection);
        assert_eq!(out.step.as_slice(), &[0.0]);
    }

    #[test]
    fn no_decrease_returns_smallest_trial() {
        let cfg = LineSearchConfig::default();
        let out = armijo_backtrack(square, &[0.0].into(), &[1.0].into(), Some(&[0.0].into()), &cfg).unwrap();
        assert_eq!(out.acceptance, Acceptance::BestSeen);
        assert_eq!(out.step[0], 0.5f64.powi(49));
        assert_eq!(out.evaluations, 51);
    }

    #[test]
    fn backtracks_until_armijo() {
        // f = x², from x = 1 along d = -4: α=1 → 9, α=0.5 → 1 (not < 1 - ...), α=0.25 → 0
        let out = armijo_backtrack(square, &[1.0].into(), &[-4.0].into(), Some(&[2.0].into()), &LineSearchConfig::default()).unwrap();
        assert_eq!(out.acceptance, Acceptance::Armijo);
        assert_eq!(out.scale, 0.25);
        assert_eq!(out.step.as_slice(), &[-1.0]);
    }

    #[test]
    fn finite_difference_slope() {
        let out = armijo_backtrack(square, &[1.0].into(), &[-1.0].into(), None, &LineSearchConfig::default()).unwrap();
        assert_eq!(out.acceptance, Acceptance::Armijo);
        assert!((out.slope + 2.0).abs() < 1e-6);
        assert_eq!(out.evaluations, 3);
    }

    #[test]
    fn non_finite_handling() {
        let cfg = LineSearchConfig::default();
        let nan_origin = armijo_backtrack(|_| f64::NAN, &[1.0].into(), &[1.0].into(), None, &cfg);
        assert!(matches!(nan_origin, Err(Error::NonFinite(_))));

        // everything away from the origin overflows
        let wall = |x: &[f64]| if x[0] == 1.0 { 1.0 } else { f64::INFINITY };
        let out = armijo_backtrack(wall, &[1.0].into(), &[1.0].into(), Some(&[-1.0].into()), &cfg).unwrap();
        assert_eq!(out.acceptance, Acceptance::MinimalStep);
        assert_eq!(out.step.as_slice(), &[1e-12]);
    }

    #[test]
    fn simple_decrease_branch_for_ascent_direction() {
        // slope > 0 along d but the big step jumps over the hill
        let f = |x: &[f64]| (x[0] * 3.0).sin();
        let x = DenseVector::from([0.0]);
        let d = DenseVector::from([1.5]);
        let out = armijo_backtrack(f, &x, &d, Some(&[3.0].into()), &LineSearchConfig::default()).unwrap();
        assert_eq!(out.acceptance, Acceptance::SimpleDecrease);
        assert!(out.value.unwrap() < 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(LineSearchConfig::default().validate().is_ok());
        assert!(LineSearchConfig { c: 1.0, ..Default::default() }.validate().is_err());
        assert!(LineSearchConfig { backtrack_factor: 0.0, ..Default::default() }.validate().is_err());
        assert!(LineSearchConfig { max_backtracks: 0, ..Default::default() }.validate().is_err());
    }
}
