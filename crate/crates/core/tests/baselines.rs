mod common;

use proptest::prelude::*;
use rand::Rng;
use rolling_lab::baselines::*;
use rolling_lab::datasets::{generate_record, DatasetManifest};
use rolling_lab::mechanics::Family;

/// Normal equations solved by an explicit adjugate inverse, coordinate by
/// coordinate, for degree <= 2.
fn oracle(values: &[f64], degree: usize) -> Vec<f64> {
    let k = degree + 1;
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (i, y) in values.iter().enumerate() {
        let t = i as f64;
        let basis = [1.0, t, t * t];
        for r in 0..k {
            b[r] += basis[r] * y;
            for c in 0..k {
                a[r][c] += basis[r] * basis[c];
            }
        }
    }
    if k == 2 {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        return vec![(a[1][1] * b[0] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det];
    }
    let cof = |r: usize, c: usize| {
        let rs: Vec<usize> = (0..3).filter(|&x| x != r).collect();
        let cs: Vec<usize> = (0..3).filter(|&x| x != c).collect();
        let m = a[rs[0]][cs[0]] * a[rs[1]][cs[1]] - a[rs[0]][cs[1]] * a[rs[1]][cs[0]];
        if (r + c) % 2 == 0 { m } else { -m }
    };
    let det = (0..3).map(|c| a[0][c] * cof(0, c)).sum::<f64>();
    (0..3).map(|r| (0..3).map(|c| cof(c, r) * b[c]).sum::<f64>() / det).collect()
}

#[test]
fn matches_normal_equation_oracle() {
    let mut rng = common::rng(11);
    for _ in 0..100 {
        let pts: Vec<[f64; 2]> = (0..10).map(|_| [rng.random_range(0.0..64.0), rng.random_range(0.0..64.0)]).collect();
        for degree in [1, 2] {
            let f = fit(&pts, degree).unwrap();
            for d in 0..2 {
                let want = oracle(&pts.iter().map(|p| p[d]).collect::<Vec<_>>(), degree);
                for (got, want) in f.coefficients[d].iter().zip(&want) {
                    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn exact_fits() {
    let line: Vec<[f64; 2]> = (0..10).map(|t| [3.0 + 1.5 * t as f64, 40.0 - 0.7 * t as f64]).collect();
    let parab: Vec<[f64; 2]> =
        (0..10).map(|t| { let t = t as f64; [1.0 + 2.0 * t - 0.3 * t * t, 5.0 + 0.25 * t * t] }).collect();
    for (pts, degree) in [(&line, 1), (&line, 2), (&parab, 2)] {
        let f = fit(pts, degree).unwrap();
        for (t, p) in pts.iter().enumerate() {
            let q = f.extrapolate2(t as f64);
            assert!((q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9);
        }
    }
    let f = fit(&line, 1).unwrap();
    for t in [10.0, 25.0, 100.0] {
        let q = f.extrapolate2(t);
        assert!((q[0] - (3.0 + 1.5 * t)).abs() < 1e-9 && (q[1] - (40.0 - 0.7 * t)).abs() < 1e-9);
    }
}

#[test]
fn linear_fit_of_a_parabola() {
    // Regressing t^2 on t over t = 0..9 gives 9t - 12, so the error at t
    // is t^2 - 9t + 12.
    let pts: Vec<[f64; 1]> = (0..10).map(|t| [(t * t) as f64]).collect();
    let f = fit(&pts, 1).unwrap();
    assert!((f.coefficients[0][0] + 12.0).abs() < 1e-9 && (f.coefficients[0][1] - 9.0).abs() < 1e-9);
    for t in [10.0f64, 20.0, 40.0] {
        let err = t * t - f.extrapolate(t)[0];
        assert!((err - (t * t - 9.0 * t + 12.0)).abs() < 1e-8);
    }
}

#[test]
fn bad_arguments() {
    assert_eq!(fit_series(&[1.0; 10], 3), Err(BaselineError::Degree(3)));
    assert_eq!(fit_series(&[1.0; 2], 2), Err(BaselineError::TooFewPoints { needed: 3, got: 2 }));
}

#[test]
fn window_alignment_on_constant_velocity() {
    let mut m = DatasetManifest::new(Family::Hemispherical, 1, 1, 3);
    m.image_size = 16;
    let (mut rec, _) = generate_record(&m, 0).unwrap();
    for (i, step) in rec.positions.iter_mut().enumerate() {
        step[0] = [5.0 + 0.5 * i as f64, 9.0 - 0.25 * i as f64];
    }
    for (i, step) in rec.angular_velocities.iter_mut().enumerate() {
        step[0] = [1.0, 0.1 * i as f64, -2.0];
    }
    let base = PolyBaseline { fit_angular_velocity: true, ..PolyBaseline::linear() };
    let start = 7;
    let out = base.predict_window(&rec, start, 30).unwrap();
    assert_eq!(out.steps.len(), 30);
    for (k, step) in out.steps.iter().enumerate() {
        let truth = rec.positions[start + 4 + k][0];
        let p = step[0].position;
        assert!((p[0] - truth[0]).abs() < 1e-9 && (p[1] - truth[1]).abs() < 1e-9);
        let w = step[0].angular_velocity.unwrap();
        assert!((w[1] - rec.angular_velocities[start + 4 + k][0][1]).abs() < 1e-9);
    }
    assert!(matches!(base.predict_window(&rec, rec.len() - 5, 30), Err(BaselineError::TooShort { .. })));
}

proptest! {
    #[test]
    fn translation_equivariance(
        pts in proptest::collection::vec((0.0f64..64.0, 0.0f64..64.0), 10),
        dx in -20.0f64..20.0, dy in -20.0f64..20.0, degree in 1usize..3,
    ) {
        let a: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let b: Vec<[f64; 2]> = a.iter().map(|p| [p[0] + dx, p[1] + dy]).collect();
        let (fa, fb) = (fit(&a, degree).unwrap(), fit(&b, degree).unwrap());
        for t in [0.0, 9.0, 19.0, 39.0] {
            let (qa, qb) = (fa.extrapolate2(t), fb.extrapolate2(t));
            prop_assert!((qb[0] - qa[0] - dx).abs() < 1e-8 && (qb[1] - qa[1] - dy).abs() < 1e-8);
        }
    }

    #[test]
    fn quadratic_fits_no_worse(pts in proptest::collection::vec(-50.0f64..50.0, 10)) {
        let sse = |degree| {
            let c = fit_series(&pts, degree).unwrap();
            pts.iter().enumerate().map(|(t, y)| (eval_poly(&c, t as f64) - y).powi(2)).sum::<f64>()
        };
        prop_assert!(sse(2) <= sse(1) + 1e-9);
    }
}
