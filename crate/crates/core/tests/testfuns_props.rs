use ogr_core::cli::max_gradient_error;
use ogr_core::harness::sample_starts;
use ogr_core::testfuns::*;
use proptest::prelude::*;

#[test]
fn known_minima_evaluate_to_known_value() {
    for f in catalog() {
        for d in [f.default_dim(), 3, 5] {
            if f.check_dim(d).is_err() {
                continue;
            }
            for p in f.known_min_points(d) {
                let v = f.evaluate(p.as_slice()).unwrap();
                assert!((v - f.known_min_value).abs() <= f.min_value_tol, "{} d={d}: {v:e}", f.name);
            }
        }
    }
}

#[test]
fn gradient_vanishes_at_minima() {
    for f in catalog() {
        let d = f.default_dim();
        for p in f.known_min_points(d) {
            let g = f.gradient(p.as_slice()).unwrap();
            let tol = if f.name == "schwefel" { 1e-3 } else { 1e-7 };
            assert!(g.norm() <= tol, "{}: ‖g‖ = {:e}", f.name, g.norm());
        }
    }
}

#[test]
fn gradient_audit_100_points_each() {
    for f in catalog() {
        let err = max_gradient_error(&f, 100, 42, 1e-6);
        assert!(err <= 1e-6, "{}: {err:e}", f.name);
    }
}

#[test]
fn gradient_audit_higher_dimensions() {
    for f in catalog() {
        for d in [3usize, 5, 10] {
            if f.check_dim(d).is_err() {
                continue;
            }
            for x in sample_starts(&f.bounds_for(d), 30, 7) {
                let err = check_gradient(&f, x.as_slice(), 1e-6);
                assert!(err <= 1e-6, "{} d={d}: {err:e}", f.name);
            }
        }
    }
}

#[test]
fn fixed_dimension_functions_reject_others() {
    for name in ["himmelblau", "beale"] {
        let f = lookup(name).unwrap();
        assert!(f.evaluate(&[0.0; 3]).is_err());
        assert!(f.gradient(&[0.0]).is_err());
    }
    assert!(lookup("sphere").unwrap().evaluate(&[]).is_err());
}

#[test]
fn names_match_catalog() {
    let names: Vec<_> = catalog().iter().map(|f| f.name).collect();
    assert_eq!(names, NAMES);
    let err = lookup("nope").unwrap_err().to_string();
    for n in NAMES {
        assert!(err.contains(n));
    }
}

proptest! {
    #[test]
    fn non_negative_on_bounds(idx in 0usize..9, seed in any::<u64>()) {
        let f = catalog()[idx];
        for x in sample_starts(&f.bounds_for(f.default_dim()), 8, seed) {
            let v = (f.eval)(x.as_slice());
            prop_assert!(v.is_finite());
            prop_assert!(v >= f.known_min_value - f.min_value_tol);
        }
    }
}
