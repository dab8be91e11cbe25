use branched_core::asymptotics::{decay_exponent, extract_ab};
use branched_core::domain::{ConfigSpec, GridSpec, CANONICAL_CUTOFF};
use branched_core::oracle::{oracle_a, CurveConfig, OracleFarField};
use branched_core::p_operator::{check_potential_quadrature, PotentialPoint};
use branched_core::solver::{solve_harmonic_plus, SolveOptions};
use branched_core::Complex64;
use std::sync::Arc;

fn solve_a(spec: &ConfigSpec) -> Vec<Complex64> {
    let cfg = Arc::new(spec.validate().unwrap());
    let sol = solve_harmonic_plus(cfg.clone(), None, &SolveOptions::default()).unwrap();
    (0..cfg.num_points())
        .map(|i| extract_ab(&sol.field, i, Complex64::new(0.0, 0.0)).unwrap().a)
        .collect()
}

#[test]
fn solver_reproduces_oracle_coefficients_on_a_coarse_grid() {
    let curve = CurveConfig::square(Complex64::new(1.0, 0.0));
    let ff = OracleFarField::new(&curve).unwrap();
    let h = 1.0 / 64.0;
    let spec = curve
        .solver_spec(1.25, GridSpec { spacing: h, cutoff_radius: CANONICAL_CUTOFF.max(8.0 * h) })
        .unwrap();
    let cfg = Arc::new(spec.validate().unwrap());
    let harmonic = |z: Complex64| ff.harmonic(z);
    let sol = solve_harmonic_plus(cfg, Some(&harmonic), &SolveOptions::default()).unwrap();
    for (i, want) in oracle_a(&curve).iter().enumerate() {
        let got = extract_ab(&sol.field, i, Complex64::new(0.0, 0.0)).unwrap().a;
        assert!((got - want).norm() < 1e-2 * want.norm(), "point {i}: {got} vs {want}");
    }
}

#[test]
fn coefficients_are_linear_in_the_class() {
    let spec = ConfigSpec::canonical_torus(1.0 / 64.0);
    let mut doubled = spec.clone();
    for t in doubled.representation.cut_translations.iter_mut() {
        *t *= -2.0;
    }
    for t in doubled.representation.period_translations.iter_mut() {
        *t *= -2.0;
    }
    let a1 = solve_a(&spec);
    let a2 = solve_a(&doubled);
    let scale = a1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (x, y) in a1.iter().zip(&a2) {
        assert!((y + 2.0 * x).norm() < 1e-6 * scale, "{y} vs {}", -2.0 * x);
    }
}

#[test]
fn field_decays_like_the_square_root_of_the_distance() {
    let cfg = Arc::new(ConfigSpec::canonical_torus(1.0 / 64.0).validate().unwrap());
    let sol = solve_harmonic_plus(cfg.clone(), None, &SolveOptions::default()).unwrap();
    for i in 0..cfg.num_points() {
        let hi = 0.05f64.min(0.5 * cfg.clear_radius(i));
        let radii: Vec<f64> = (0..8).map(|k| hi / 10.0 * 10f64.powf(k as f64 / 7.0)).collect();
        let fit = decay_exponent(&sol.field, i, &radii).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.05, "point {i}: slope {}", fit.slope);
    }
}

#[test]
fn potential_of_a_line_source_matches_the_strip_solution() {
    let bump = |t: f64| if t.abs() < 1.0 { (1.0 - t * t).powi(3) } else { 0.0 };
    let points: Vec<PotentialPoint> = [(0.4, -0.5), (1.9, 0.2), (-1.1, 0.7)]
        .iter()
        .map(|&(th, t)| PotentialPoint { z: Complex64::from_polar(0.5, th), t })
        .collect();
    let rep = check_potential_quadrature(bump, 1.0, &points).unwrap();
    assert!(rep.max_relative_error < 1e-2, "{rep:?}");
}

#[test]
fn potential_check_rejects_mixed_distances() {
    let points = vec![
        PotentialPoint { z: Complex64::new(0.5, 0.0), t: 0.0 },
        PotentialPoint { z: Complex64::new(0.7, 0.0), t: 0.0 },
    ];
    assert!(check_potential_quadrature(|_| 1.0, 1.0, &points).is_err());
}
