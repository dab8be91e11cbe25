use super::*;
use proptest::prelude::*;

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn generic() -> CurveConfig {
    CurveConfig::new(&[c(1.1, 0.2), c(-0.3, 0.9), c(-1.0, -0.4), c(0.2, -1.2)], c(0.7, -0.4)).unwrap()
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    while (a - b).abs() > 1e-15 * a {
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    a
}

/// Complex primitive `c ∫_0^z dz/w` plus the full singular primitive.
fn holomorphic_primitive(curve: &CurveConfig, z: Complex64) -> Complex64 {
    curve.c * curve.primitives(z).unwrap()[0]
}

/// A point `e_i + d` off the cut with `|d| = r`.
fn near(curve: &CurveConfig, i: usize, r: f64) -> (Complex64, Complex64) {
    let e = curve.points[i];
    let d = Complex64::from_polar(r, e.arg() + 0.5 * PI);
    (e + d, curve.local_sqrt(i, d))
}

#[test]
fn square_a_is_unit() {
    let a = oracle_a(&CurveConfig::square(c(1.0, 0.0)));
    for v in &a {
        assert!((v.norm() - 1.0).abs() < 1e-14, "{v}");
    }
    assert!((a[0].re.abs() - 1.0).abs() < 1e-14);
}

#[test]
fn a_scales_and_is_linear_in_class() {
    let cv = generic();
    let a = oracle_a(&cv);
    for lambda in [0.5, 2.0, 3.0] {
        let s = cv.scaled(c(lambda, 0.0)).unwrap();
        for (x, y) in oracle_a(&s).iter().zip(&a) {
            assert!((x - y * lambda.powf(-1.5)).norm() < 1e-13 * y.norm());
        }
    }
    let mut twice = cv.clone();
    twice.c *= 2.0;
    for (x, y) in oracle_a(&twice).iter().zip(&a) {
        assert!((x - 2.0 * y).norm() < 1e-14);
    }
}

#[test]
fn square_b_has_equal_moduli() {
    let b = oracle_b(&CurveConfig::square(c(1.0, 0.0)));
    for v in &b {
        assert!(v.norm().is_finite() && v.norm() > 0.0);
        assert!((v.norm() - b[0].norm()).abs() < 1e-14);
    }
}

#[test]
fn b_blows_up_when_points_merge() {
    let mut last = 0.0;
    for gap in [0.3, 0.1, 0.03, 0.01] {
        let cv = CurveConfig::new(&[c(1.0, 0.0), c(1.0, gap), c(-1.0, 0.0), c(0.0, -1.0)], c(1.0, 0.0)).unwrap();
        let b = oracle_b(&cv)[0].norm();
        assert!(b > 2.0 * last, "{b} after {last}");
        last = b;
    }
}

#[test]
fn local_expansion_matches_a_and_b() {
    let cv = generic();
    let (a, b) = (oracle_a(&cv), oracle_b(&cv));
    let r = cv.endpoint_integrals().unwrap();
    for i in 0..NUM_POINTS {
        let c0 = cv.c * r[0][i];
        let (z1, s1) = near(&cv, i, 1e-4);
        let (z2, s2) = near(&cv, i, 4e-4);
        // F − c0 = A s + B s³ + O(s⁵)
        let f1 = holomorphic_primitive(&cv, z1) - c0;
        let f2 = holomorphic_primitive(&cv, z2) - c0;
        let a_est = (4.0 * f1 / s1 - f2 / s2) / 3.0;
        assert!((a_est - a[i]).norm() < 1e-8 * a[i].norm(), "A at {i}: {a_est} vs {}", a[i]);
        let b_est = (f2 - a[i] * s2) / (s2 * s2 * s2);
        assert!((b_est - b[i]).norm() < 1e-3 * b[i].norm(), "B at {i}: {b_est} vs {}", b[i]);
    }
}

#[test]
fn phi_vanishes_at_basepoint_and_rejects_cuts() {
    let cv = generic();
    assert_eq!(oracle_phi(&cv, c(0.0, 0.0)).unwrap(), 0.0);
    let on = cv.points[0] * 1.5;
    assert!(cv.on_cut(on).is_some());
    assert!(oracle_phi(&cv, on).is_err());
    let through = [c(0.0, 0.0), cv.points[1], c(0.1, 2.0)];
    assert!(oracle_phi_along(&cv, &through).is_err());
}

#[test]
fn homotopic_paths_agree() {
    let cv = CurveConfig::square(c(0.6, 0.8));
    let q = c(0.4, 0.5);
    let straight = oracle_phi(&cv, q).unwrap();
    let bent = oracle_phi_along(&cv, &[c(0.0, 0.0), c(0.6, -0.2), q]).unwrap();
    assert!((straight - bent.0).abs() < 1e-11);
    assert_eq!(bent.1, 1.0);
    // crosses the first cut twice without enclosing its branch point
    let wiggle = [c(0.0, 0.0), c(1.5, -0.2), c(1.5, 0.2), c(1.6, -0.2), c(0.8, -0.2), q];
    let (v, sheet) = oracle_phi_along(&cv, &wiggle).unwrap();
    assert_eq!(sheet, 1.0);
    assert!((v - straight).abs() < 1e-11, "{v} vs {straight}");
}

#[test]
fn loop_around_two_points_adds_a_period() {
    let cv = CurveConfig::square(c(0.6, 0.8));
    let basis = MeromorphicBasis::compute(&cv).unwrap();
    let lp = [
        c(0.0, 0.0),
        Complex64::from_polar(1.4, -0.5),
        Complex64::from_polar(1.4, 0.25 * PI),
        Complex64::from_polar(1.4, 0.5 * PI + 0.5),
        c(0.0, 0.0),
    ];
    let (v, sheet) = oracle_phi_along(&cv, &lp).unwrap();
    assert_eq!(sheet, 1.0);
    let period = (cv.c * basis.periods[0][0]).re;
    assert!(period.abs() > 0.1);
    assert!((v.abs() - period.abs()).abs() < 1e-10, "{v} vs {period}");
    // once around a single point lands on the other sheet
    let one = [c(0.0, 0.0), c(0.9, -0.3), c(1.3, 0.0 - 0.3), c(1.3, 0.3), c(0.9, 0.3), c(0.0, 0.0)];
    assert_eq!(oracle_phi_along(&cv, &one).unwrap().1, -1.0);
}

#[test]
fn square_periods_match_agm() {
    let cv = CurveConfig::square(c(1.0, 0.0));
    let basis = MeromorphicBasis::compute(&cv).unwrap();
    let half_lemniscate = PI / (2.0 * agm(1.0, 2f64.sqrt()));
    for k in 0..NUM_POINTS {
        assert!((basis.endpoint[0][k].norm() - half_lemniscate).abs() < 1e-10);
    }
    for per in &basis.periods {
        assert!((per[0].norm() - 2f64.sqrt() * 2.0 * half_lemniscate).abs() < 1e-10, "{}", per[0]);
    }
}

#[test]
fn contour_periods_match_endpoint_periods() {
    for cv in [generic(), CurveConfig::square(c(1.0, 0.0))] {
        let basis = MeromorphicBasis::compute(&cv).unwrap();
        let ends = basis.endpoint_periods();
        for (per, end) in basis.periods.iter().zip(&ends) {
            let sign = if (per[0] - end[0]).norm() < (per[0] + end[0]).norm() { 1.0 } else { -1.0 };
            for (x, y) in per.iter().zip(end) {
                assert!((x - y * sign).norm() < 1e-9 * (1.0 + y.norm()), "{x} vs {y}");
            }
        }
    }
}

#[test]
fn periods_stable_under_refinement() {
    let cv = generic();
    let a = MeromorphicBasis::with_panels(&cv, CYCLE_PANELS).unwrap();
    let b = MeromorphicBasis::with_panels(&cv, 2 * CYCLE_PANELS).unwrap();
    for (x, y) in a.periods.iter().flatten().zip(b.periods.iter().flatten()) {
        assert!((x - y).norm() < 1e-10 * (1.0 + y.norm()));
    }
}

#[test]
fn residues_vanish() {
    for cv in [generic(), CurveConfig::square(c(1.0, 0.0))] {
        assert!(MeromorphicBasis::compute(&cv).unwrap().max_residue < 1e-10);
    }
}

#[test]
fn zero_sigma_gives_zero() {
    let op = OracleP::new(&generic()).unwrap();
    let eta = op.solve(&[c(0.0, 0.0); 4]).unwrap();
    assert!(eta.beta.iter().all(|b| b.norm() == 0.0));
    assert!(eta.p.iter().all(|p| p.norm() == 0.0));
}

#[test]
fn singular_solution_is_consistent() {
    let cv = generic();
    let op = OracleP::new(&cv).unwrap();
    let sigma = [c(1.0, -0.5), c(0.2, 0.3), c(-0.7, 0.1), c(0.4, 0.9)];
    let eta = op.solve(&sigma).unwrap();
    assert!(eta.period_residual < 1e-10);
    for k in 0..NUM_POINTS {
        assert!(eta.local_constant(&op.basis, k).re.abs() < 1e-10);
    }
    // F = σ/s + c0 + P s + O(s³) at every point
    for i in 0..NUM_POINTS {
        let c0 = eta.local_constant(&op.basis, i);
        let est = |r: f64| {
            let (z, s) = near(&cv, i, r);
            let prim = cv.primitives(z).unwrap();
            let f: Complex64 = eta.beta.iter().zip(&prim).map(|(b, v)| b * v).sum::<Complex64>() + eta.constant;
            (f - sigma[i] / s - c0) / s
        };
        let (p1, p2) = (est(1e-4), est(4e-4));
        let extrapolated = (4.0 * p1 - p2) / 3.0;
        assert!((extrapolated - eta.p[i]).norm() < 1e-6 * eta.p[i].norm().max(1.0), "P at {i}: {extrapolated} vs {}", eta.p[i]);
    }
}

#[test]
fn rotation_covariance() {
    let cv = generic();
    let alpha = 0.7;
    let rot = Complex64::from_polar(1.0, alpha);
    let mut rotated = cv.scaled(rot).unwrap();
    rotated.c = cv.c * rot;
    let half = Complex64::from_polar(1.0, 0.5 * alpha);
    let eps: Vec<f64> = (0..NUM_POINTS)
        .map(|i| {
            let d = Complex64::from_polar(0.1, cv.points[i].arg() + 2.0);
            (rotated.local_sqrt(i, d * rot) / (half * cv.local_sqrt(i, d))).re
        })
        .collect();
    let (a, a2) = (oracle_a(&cv), oracle_a(&rotated));
    let (b, b2) = (oracle_b(&cv), oracle_b(&rotated));
    let global = (a2[0] * half / (a[0] * eps[0])).re.signum();
    for i in 0..NUM_POINTS {
        assert!((a2[i] - global * eps[i] * a[i] / half).norm() < 1e-12, "A at {i}");
        assert!((b2[i] - global * eps[i] * b[i] / (half * half * half)).norm() < 1e-12, "B at {i}");
    }
    let sigma = [c(0.3, 0.1), c(-0.2, 0.5), c(0.0, -0.4), c(0.6, 0.2)];
    let sigma2: Vec<Complex64> = (0..NUM_POINTS).map(|i| sigma[i] * eps[i] * half).collect();
    let p = oracle_p(&cv, &sigma).unwrap();
    let p2 = oracle_p(&rotated, &sigma2).unwrap();
    for i in 0..NUM_POINTS {
        assert!((p2[i] - eps[i] * p[i] / half).norm() < 1e-9 * (1.0 + p[i].norm()), "P at {i}: {} vs {}", p2[i], eps[i] * p[i] / half);
    }
}

#[test]
fn rejects_bad_curves() {
    assert!(CurveConfig::new(&[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)], c(1.0, 0.0)).is_err());
    assert!(CurveConfig::new(&[c(1.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)], c(1.0, 0.0)).is_err());
    assert!(CurveConfig::new(&[c(1.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)], c(1.0, 0.0)).is_err());
    assert!(CurveConfig::new(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)], c(1.0, 0.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn p_is_real_linear(x in proptest::collection::vec(-1.0f64..1.0, 16), t in -2.0f64..2.0) {
        let op = OracleP::new(&generic()).unwrap();
        let s1: Vec<Complex64> = (0..4).map(|i| c(x[2 * i], x[2 * i + 1])).collect();
        let s2: Vec<Complex64> = (0..4).map(|i| c(x[8 + 2 * i], x[9 + 2 * i])).collect();
        let comb: Vec<Complex64> = s1.iter().zip(&s2).map(|(a, b)| a * t + b).collect();
        let (p1, p2, pc) = (op.solve(&s1).unwrap().p, op.solve(&s2).unwrap().p, op.solve(&comb).unwrap().p);
        for i in 0..4 {
            prop_assert!((pc[i] - (p1[i] * t + p2[i])).norm() < 1e-10);
        }
    }
}
