//! The nine analytic benchmark objectives, with hand-derived gradients.
//!
//! Bounds are sampling bounds for start points only; optimizers are
//! unconstrained and may leave them.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::linalg::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimRule {
    /// Defined only for exactly this many coordinates.
    Fixed(usize),
    /// Defined for any `d >= min`.
    Any { min: usize },
}

impl DimRule {
    pub fn accepts(self, d: usize) -> bool {
        match self {
            DimRule::Fixed(n) => d == n,
            DimRule::Any { min } => d >= min,
        }
    }

    fn expected(self, d: usize) -> usize {
        match self {
            DimRule::Fixed(n) => n,
            DimRule::Any { min } => d.max(min),
        }
    }
}

/// A named objective with its analytic gradient.
///
/// Fields are public so that callers can build variants (for instance a
/// deliberately wrong gradient when testing the gradient checker).
#[derive(Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub dim_rule: DimRule,
    pub eval: fn(&[f64]) -> f64,
    pub grad: fn(&[f64]) -> Vec<f64>,
    /// Per-coordinate sampling interval, identical for every coordinate.
    pub bounds: (f64, f64),
    pub known_min_value: f64,
    pub min_points: fn(usize) -> Vec<Vec<f64>>,
    /// How close `eval(min_point)` is to `known_min_value`.
    pub min_value_tol: f64,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dim_rule", &self.dim_rule)
            .field("bounds", &self.bounds)
            .field("known_min_value", &self.known_min_value)
            .finish()
    }
}

impl TestFunction {
    pub fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim_rule.accepts(d) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim_rule.expected(d),
                got: d,
            })
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok((self.eval)(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<DenseVector> {
        self.check_dim(x.len())?;
        Ok((self.grad)(x).into())
    }

    pub fn bounds_for(&self, d: usize) -> Vec<(f64, f64)> {
        vec![self.bounds; d]
    }

    pub fn known_min_points(&self, d: usize) -> Vec<DenseVector> {
        (self.min_points)(d).into_iter().map(DenseVector::from).collect()
    }

    /// Default dimension used by the harness.
    pub fn default_dim(&self) -> usize {
        match self.dim_rule {
            DimRule::Fixed(n) => n,
            DimRule::Any { min } => min.max(2),
        }
    }
}

/// Maximum over coordinates of `|analytic - central difference| / max(1, |analytic|)`,
/// with per-coordinate step `h * max(1, |x_i|)`.
pub fn check_gradient(f: &TestFunction, x: &[f64], h: f64) -> f64 {
    let analytic = (f.grad)(x);
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        probe[i] = x[i] + step;
        let fp = (f.eval)(&probe);
        probe[i] = x[i] - step;
        let fm = (f.eval)(&probe);
        probe[i] = x[i];
        let fd = (fp - fm) / (2.0 * step);
        let err = (analytic[i] - fd).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

pub const NAMES: [&str; 9] = [
    "sphere",
    "rosenbrock",
    "rastrigin",
    "ackley",
    "griewank",
    "schwefel",
    "zakharov",
    "himmelblau",
    "beale",
];

pub fn catalog() -> Vec<TestFunction> {
    vec![
        SPHERE, ROSENBROCK, RASTRIGIN, ACKLEY, GRIEWANK, SCHWEFEL, ZAKHAROV, HIMMELBLAU, BEALE,
    ]
}

pub fn lookup(name: &str) -> Result<TestFunction> {
    catalog()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFunction {
            name: name.to_string(),
            valid: NAMES.join(", "),
        })
}

fn origin(d: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; d]]
}

pub const SPHERE: TestFunction = TestFunction {
    name: "sphere",
    dim_rule: DimRule::Any { min: 1 },
    eval: sphere,
    grad: sphere_grad,
    bounds: (-5.0, 5.0),
    known_min_value: 0.0,
    min_points: origin,
    min_value_tol: 1e-8,
};

pub const ROSENBROCK: TestFunction = TestFunction {
    name: "rosenbrock",
    dim_rule: DimRule::Any { min: 2 },
    eval: rosenbrock,
    grad: rosenbrock_grad,
    bounds: (-2.0, 2.0),
    known_min_value: 0.0,
    min_points: |d| vec![vec![1.0; d]],
    min_value_tol: 1e-8,
};

pub const RASTRIGIN: TestFunction = TestFunction {
    name: "rastrigin",
    dim_rule: DimRule::Any { min: 1 },
    eval: rastrigin,
    grad: rastrigin_grad,
    bounds: (-5.12, 5.12),
    known_min_value: 0.0,
    min_points: origin,
    min_value_tol: 1e-8,
};

pub const ACKLEY: TestFunction = TestFunction {
    name: "ackley",
    dim_rule: DimRule::Any { min: 1 },
    eval: ackley,
    grad: ackley_grad,
    bounds: (-5.0, 5.0),
    known_min_value: 0.0,
    min_points: origin,
    min_value_tol: 1e-8,
};

pub const GRIEWANK: TestFunction = TestFunction {
    name: "griewank",
    dim_rule: DimRule::Any { min: 1 },
    eval: griewank,
    grad: griewank_grad,
    bounds: (-5.0, 5.0),
    known_min_value: 0.0,
    min_points: origin,
    min_value_tol: 1e-8,
};

/// Approximate coordinate of the Schwefel minimizer.
pub const SCHWEFEL_ARGMIN: f64 = 420.9687;

pub const SCHWEFEL: TestFunction = TestFunction {
    name: "schwefel",
    dim_rule: DimRule::Any { min: 1 },
    eval: schwefel,
    grad: schwefel_grad,
    bounds: (-500.0, 500.0),
    known_min_value: 0.0,
    min_points: |d| vec![vec![SCHWEFEL_ARGMIN; d]],
    // the 418.9829 constant is rounded, so the minimum is only ~1.3e-5 per coordinate
    min_value_tol: 1e-3,
};

pub const ZAKHAROV: TestFunction = TestFunction {
    name: "zakharov",
    dim_rule: DimRule::Any { min: 1 },
    eval: zakharov,
    grad: zakharov_grad,
    bounds: (-5.0, 5.0),
    known_min_value: 0.0,
    min_points: origin,
    min_value_tol: 1e-8,
};

pub const HIMMELBLAU: TestFunction = TestFunction {
    name: "himmelblau",
    dim_rule: DimRule::Fixed(2),
    eval: himmelblau,
    grad: himmelblau_grad,
    bounds: (-5.0, 5.0),
    known_min_value: 0.0,
    min_points: |_| {
        vec![
            vec![3.0, 2.0],
            vec![-2.805_118_086_952_745, 3.131_312_518_250_573],
            vec![-3.779_310_253_377_747, -3.283_185_991_286_169],
            vec![3.584_428_340_330_492, -1.848_126_526_964_404],
        ]
    },
    min_value_tol: 1e-8,
};

pub const BEALE: TestFunction = TestFunction {
    name: "beale",
    dim_rule: DimRule::Fixed(2),
    eval: beale,
    grad: beale_grad,
    bounds: (-4.5, 4.5),
    known_min_value: 0.0,
    min_points: |_| vec![vec![3.0, 0.5]],
    min_value_tol: 1e-8,
};

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn sphere_grad(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| 2.0 * v).collect()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

fn rosenbrock_grad(x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len().saturating_sub(1) {
        let r = x[i + 1] - x[i] * x[i];
        g[i] += -400.0 * x[i] * r - 2.0 * (1.0 - x[i]);
        g[i + 1] += 200.0 * r;
    }
    g
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

fn rastrigin_grad(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| 2.0 * v + 20.0 * PI * (2.0 * PI * v).sin())
        .collect()
}

pub fn ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sum_sq: f64 = x.iter().map(|v| v * v).sum();
    let sum_cos: f64 = x.iter().map(|v| (2.0 * PI * v).cos()).sum();
    -20.0 * (-0.2 * (sum_sq / n).sqrt()).exp() - (sum_cos / n).exp() + 20.0 + E
}

fn ackley_grad(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let sum_sq: f64 = x.iter().map(|v| v * v).sum();
    let sum_cos: f64 = x.iter().map(|v| (2.0 * PI * v).cos()).sum();
    let r = (sum_sq / n).sqrt();
    let cone = if r > 0.0 {
        4.0 * (-0.2 * r).exp() / (n * r)
    } else {
        // cone tip; use the zero subgradient
        0.0
    };
    let wave = (sum_cos / n).exp() * 2.0 * PI / n;
    x.iter()
        .map(|v| cone * v + wave * (2.0 * PI * v).sin())
        .collect()
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v / 4000.0).sum();
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    sum - prod + 1.0
}

fn griewank_grad(x: &[f64]) -> Vec<f64> {
    let cosines: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .collect();
    (0..x.len())
        .map(|i| {
            let root = ((i + 1) as f64).sqrt();
            let others: f64 = cosines
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c)
                .product();
            x[i] / 2000.0 + (x[i] / root).sin() / root * others
        })
        .collect()
}

pub fn schwefel(x: &[f64]) -> f64 {
    418.9829 * x.len() as f64 - x.iter().map(|v| v * v.abs().sqrt().sin()).sum::<f64>()
}

// d/dx [x sin(sqrt|x|)] = sin(sqrt|x|) + sqrt|x| cos(sqrt|x|) / 2, which is 0 at x = 0
fn schwefel_grad(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let r = v.abs().sqrt();
            -(r.sin() + 0.5 * r * r.cos())
        })
        .collect()
}

fn zakharov_weighted(x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, v)| 0.5 * (i + 1) as f64 * v)
        .sum()
}

pub fn zakharov(x: &[f64]) -> f64 {
    let w = zakharov_weighted(x);
    x.iter().map(|v| v * v).sum::<f64>() + w * w + w.powi(4)
}

fn zakharov_grad(x: &[f64]) -> Vec<f64> {
    let w = zakharov_weighted(x);
    let outer = 2.0 * w + 4.0 * w.powi(3);
    x.iter()
        .enumerate()
        .map(|(i, v)| 2.0 * v + outer * 0.5 * (i + 1) as f64)
        .collect()
}

pub fn himmelblau(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2)
}

fn himmelblau_grad(x: &[f64]) -> Vec<f64> {
    let (a, b) = (x[0], x[1]);
    let r1 = a * a + b - 11.0;
    let r2 = a + b * b - 7.0;
    vec![4.0 * a * r1 + 2.0 * r2, 2.0 * r1 + 4.0 * b * r2]
}

const BEALE_CONSTS: [f64; 3] = [1.5, 2.25, 2.625];

pub fn beale(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    BEALE_CONSTS
        .iter()
        .zip(1..)
        .map(|(c, k)| (c - a + a * b.powi(k)).powi(2))
        .sum()
}

fn beale_grad(x: &[f64]) -> Vec<f64> {
    let (a, b) = (x[0], x[1]);
    let mut g = vec![0.0, 0.0];
    for (c, k) in BEALE_CONSTS.iter().zip(1..) {
        let r = c - a + a * b.powi(k);
        g[0] += 2.0 * r * (b.powi(k) - 1.0);
        g[1] += 2.0 * r * a * k as f64 * b.powi(k - 1);
    }
    g
}
