//! Independent oracles shared by the integration tests. Nothing here calls
//! the eigensolver or the estimators under test.
#![allow(dead_code, clippy::needless_range_loop)]

use std::cell::RefCell;

use ogr_core::harness::SplitMix64;
use ogr_core::linalg::{DenseMatrix, DenseVector};
use ogr_core::linesearch::{armijo_backtrack, Acceptance, LineSearchConfig};
use ogr_core::ogr::OgrState;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        assert!(a[col][col] != 0.0, "singular system");
        for r in col + 1..n {
            let m = a[r][col] / a[col][col];
            if m == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= m * a[col][c];
            }
            b[r] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Weighted least squares `min Σ w_t ‖H θ_t + c − g_t‖²` solved through
/// the normal equations on the stacked unknowns.
///
/// With `symmetric`, H is parameterized by its upper triangle.
/// Returns `(H, c)`.
pub fn wls_fit(thetas: &[Vec<f64>], grads: &[Vec<f64>], weights: &[f64], symmetric: bool) -> (DenseMatrix, Vec<f64>) {
    let d = thetas[0].len();
    // basis: each unknown maps to a list of (row, col) entries of H set to 1,
    // or to an intercept component
    enum Unknown {
        H(Vec<(usize, usize)>),
        C(usize),
    }
    let mut unknowns = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if symmetric {
                if j < i {
                    continue;
                }
                let mut e = vec![(i, j)];
                if i != j {
                    e.push((j, i));
                }
                unknowns.push(Unknown::H(e));
            } else {
                unknowns.push(Unknown::H(vec![(i, j)]));
            }
        }
    }
    for i in 0..d {
        unknowns.push(Unknown::C(i));
    }
    let m = unknowns.len();
    // prediction for output k is linear in the unknowns: coefficient of unknown u
    let coef = |u: &Unknown, theta: &[f64], k: usize| -> f64 {
        match u {
            Unknown::H(entries) => entries.iter().filter(|(r, _)| *r == k).map(|&(_, c)| theta[c]).sum(),
            Unknown::C(i) => f64::from(u8::from(*i == k)),
        }
    };
    let mut ata = vec![vec![0.0; m]; m];
    let mut atb = vec![0.0; m];
    for ((theta, g), &w) in thetas.iter().zip(grads).zip(weights) {
        for k in 0..d {
            let row: Vec<f64> = unknowns.iter().map(|u| coef(u, theta, k)).collect();
            for a in 0..m {
                if row[a] == 0.0 {
                    continue;
                }
                atb[a] += w * row[a] * g[k];
                for b in 0..m {
                    ata[a][b] += w * row[a] * row[b];
                }
            }
        }
    }
    let x = solve(ata, atb);
    let mut h = DenseMatrix::zeros(d, d);
    for (u, v) in unknowns.iter().zip(&x) {
        if let Unknown::H(entries) = u {
            for &(r, c) in entries {
                h[(r, c)] = *v;
            }
        }
    }
    (h, x[m - d..].to_vec())
}

pub fn random_vec(rng: &mut SplitMix64, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.uniform(lo, hi)).collect()
}

/// Product of Householder reflections: an orthogonal matrix built without
/// any eigensolver.
pub fn random_orthogonal(rng: &mut SplitMix64, d: usize) -> DenseMatrix {
    let mut q = DenseMatrix::identity(d);
    for _ in 0..d {
        let v = random_vec(rng, d, -1.0, 1.0);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv < 1e-12 {
            continue;
        }
        let mut h = DenseMatrix::identity(d);
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] -= 2.0 * v[i] * v[j] / vv;
            }
        }
        q = q.matmul(&h).unwrap();
    }
    q
}

/// `Q diag(λ) Qᵀ` with known eigenvalues.
pub fn with_spectrum(q: &DenseMatrix, lambdas: &[f64]) -> DenseMatrix {
    q.matmul(&DenseMatrix::from_diag(lambdas))
        .unwrap()
        .matmul(&q.transpose())
        .unwrap()
        .symmetrized()
}

/// Symmetric matrix with eigenvalues of magnitude in `[lo, hi]`; negative
/// eigenvalues only when `indefinite`.
pub fn random_symmetric(rng: &mut SplitMix64, d: usize, lo: f64, hi: f64, indefinite: bool) -> (DenseMatrix, Vec<f64>) {
    let q = random_orthogonal(rng, d);
    let lambdas: Vec<f64> = (0..d)
        .map(|_| {
            let m = rng.uniform(lo, hi);
            if indefinite && rng.next_f64() < 0.5 {
                -m
            } else {
                m
            }
        })
        .collect();
    (with_spectrum(&q, &lambdas), lambdas)
}

pub fn mat_vec_plain(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a[(i, j)] * x[j]).sum()).collect()
}

pub fn rel_frobenius(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dv(v: &[f64]) -> DenseVector {
    DenseVector::from(v)
}

/// Every statistic multiplied by `1 + u·ε/2`, `u ∈ [-1, 1]`: the size of the
/// rounding a decimal rescale introduces. Keeps `θθ̄` symmetric.
pub fn jitter_half_ulp(st: &OgrState, rng: &mut SplitMix64) -> OgrState {
    let mut j = |v: f64| v * (1.0 + rng.uniform(-1.0, 1.0) * f64::EPSILON / 2.0);
    let mut q = st.clone();
    let d = q.mean_theta.len();
    q.s = j(q.s);
    for i in 0..d {
        q.mean_theta[i] = j(q.mean_theta[i]);
        q.mean_g[i] = j(q.mean_g[i]);
        for k in 0..d {
            q.mom_g_theta[(i, k)] = j(q.mom_g_theta[(i, k)]);
            if k >= i {
                let v = j(q.mom_theta_theta[(i, k)]);
                q.mom_theta_theta[(i, k)] = v;
                q.mom_theta_theta[(k, i)] = v;
            }
        }
    }
    q
}

#[derive(Clone, Copy, Debug)]
pub enum Family {
    Quadratic,
    Wavy,
    Walled,
    Cliff,
}

fn objective(family: Family, shift: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| match family {
        Family::Quadratic => x.iter().map(|v| (v - shift).powi(2)).sum(),
        Family::Wavy => x.iter().map(|v| (3.0 * v).sin() + 0.1 * v * v).sum(),
        Family::Walled => {
            if x.iter().any(|v| v.abs() > 2.0) {
                f64::INFINITY
            } else {
                x.iter().map(|v| (v - shift).powi(2)).sum()
            }
        }
        Family::Cliff => {
            let r: f64 = x.iter().map(|v| v * v).sum();
            if r > 4.0 {
                f64::NAN
            } else {
                -r.sqrt()
            }
        }
    }
}

fn grad(family: Family, shift: f64, x: &[f64]) -> Vec<f64> {
    match family {
        Family::Quadratic | Family::Walled => x.iter().map(|v| 2.0 * (v - shift)).collect(),
        Family::Wavy => x.iter().map(|v| 3.0 * (3.0 * v).cos() + 0.2 * v).collect(),
        Family::Cliff => {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            x.iter().map(|v| -v / r).collect()
        }
    }
}

/// Runs `cases` fuzzed searches and panics on any contract violation.
/// Returns how often each exit (zero, Armijo, simple decrease, best-seen,
/// minimal step) fired.
pub fn line_search_fuzz(cases: usize, seed: u64) -> [usize; 5] {
    let mut rng = SplitMix64::new(seed);
    let families = [Family::Quadratic, Family::Wavy, Family::Walled, Family::Cliff];
    let mut seen = [0usize; 5];
    for case in 0..cases {
        let family = families[case % 4];
        let d = 1 + (rng.next_u64() % 4) as usize;
        let shift = rng.uniform(-1.0, 1.0);
        let x: DenseVector = (0..d).map(|_| rng.uniform(-0.9, 0.9)).collect::<Vec<_>>().into();
        let scale = [1e-3, 1.0, 10.0, 1e3][(rng.next_u64() % 4) as usize];
        let d_vec: DenseVector = if case % 50 == 0 {
            DenseVector::zeros(d)
        } else {
            (0..d).map(|_| scale * rng.uniform(-1.0, 1.0)).collect::<Vec<_>>().into()
        };
        let config = LineSearchConfig {
            max_backtracks: 1 + (rng.next_u64() % 60) as usize,
            ..Default::default()
        };
        let with_grad = rng.next_f64() < 0.5;
        let g: DenseVector = grad(family, shift, x.as_slice()).into();

        let f = objective(family, shift);
        let log = RefCell::new(Vec::new());
        let logged = |p: &[f64]| {
            let v = f(p);
            log.borrow_mut().push(v);
            v
        };
        let out = armijo_backtrack(logged, &x, &d_vec, with_grad.then_some(&g), &config).unwrap();
        let values = log.into_inner();
        let f0 = values[0];

        assert_eq!(out.evaluations, values.len());
        assert!(out.evaluations <= config.max_backtracks + 2, "case {case}");

        if d_vec.norm() == 0.0 {
            assert_eq!(out.acceptance, Acceptance::ZeroDirection);
            assert!(out.step.iter().all(|v| *v == 0.0));
            seen[0] += 1;
            continue;
        }
        let trials = &values[if with_grad { 1 } else { 2 }..];
        let applied = f(x.add(&out.step).as_slice());
        match out.acceptance {
            Acceptance::Armijo => {
                assert!(out.slope < 0.0);
                assert!(applied <= f0 + config.c * out.scale * out.slope, "case {case}");
                seen[1] += 1;
            }
            Acceptance::SimpleDecrease => {
                assert!(out.slope >= 0.0);
                assert!(applied < f0);
                seen[2] += 1;
            }
            Acceptance::BestSeen => {
                assert_eq!(trials.len(), config.max_backtracks);
                let best = trials.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
                assert_eq!(out.value, Some(best));
                assert!(applied <= best, "case {case}");
                seen[3] += 1;
            }
            Acceptance::MinimalStep => {
                assert!(trials.iter().all(|v| !v.is_finite()));
                assert_eq!(out.scale, config.min_step_scale);
                seen[4] += 1;
            }
            Acceptance::ZeroDirection => panic!("non-zero direction reported as zero"),
        }
    }
    seen
}

