use super::*;
use crate::domain::ConfigSpec;

fn canonical(h: f64) -> Arc<Config> {
    Arc::new(ConfigSpec::canonical_torus(h).validate().unwrap())
}

#[test]
fn twisted_matrix_is_exactly_symmetric() {
    let sys = TwistedSystem::assemble(canonical(1.0 / 32.0));
    assert_eq!(sys.asymmetry(), 0.0);
}

#[test]
fn eigenvalues_twisted_and_untwisted() {
    let cfg = canonical(1.0 / 32.0);
    let lam = smallest_eigenvalue(&TwistedSystem::assemble(cfg.clone()), 1e-8).unwrap();
    assert!(lam > 1.0, "{lam}");
    let lam0 = smallest_eigenvalue(&TwistedSystem::assemble_untwisted(cfg), 1e-8).unwrap();
    assert!(lam0.abs() < 1e-6, "{lam0}");
}

#[test]
fn zero_class_is_rejected() {
    let mut spec = ConfigSpec::canonical_torus(1.0 / 32.0);
    spec.representation.period_translations = [0.0, 0.0];
    let cfg = Arc::new(spec.validate().unwrap());
    assert!(matches!(
        solve_harmonic_plus(cfg, None, &SolveOptions::default()),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn zero_sigma_gives_zero() {
    let cfg = canonical(1.0 / 64.0);
    let sol = solve_with_singularity(cfg, &[Complex64::new(0.0, 0.0); 2], None, &SolveOptions::default()).unwrap();
    assert!(sol.field.values().iter().all(|v| *v == 0.0));
}

#[test]
fn harmonic_section_is_affine_linear_in_translations() {
    let h = 1.0 / 32.0;
    let opts = SolveOptions {
        subtract_regular: false,
        ..Default::default()
    };
    let a = solve_harmonic_plus(canonical(h), None, &opts).unwrap().field;
    let mut spec = ConfigSpec::canonical_torus(h);
    spec.representation.cut_translations = spec.representation.cut_translations.iter().map(|c| 2.0 * c).collect();
    spec.representation.period_translations = [2.0 * spec.representation.period_translations[0], 2.0 * spec.representation.period_translations[1]];
    let b = solve_harmonic_plus(Arc::new(spec.validate().unwrap()), None, &opts).unwrap().field;
    let va = a.values();
    let vb = b.values();
    let scale = va.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.1);
    for (x, y) in va.iter().zip(&vb) {
        assert!((2.0 * x - y).abs() < 1e-8 * scale);
    }
}

#[test]
fn singular_solve_is_linear() {
    let cfg = canonical(1.0 / 32.0);
    let opts = SolveOptions {
        subtract_regular: false,
        ..Default::default()
    };
    let s1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let s2 = [Complex64::new(0.0, 0.0), Complex64::new(0.3, -0.7)];
    let s12 = [s1[0] + s2[0], s1[1] + s2[1]];
    let f1 = solve_with_singularity(cfg.clone(), &s1, None, &opts).unwrap().field.values();
    let f2 = solve_with_singularity(cfg.clone(), &s2, None, &opts).unwrap().field.values();
    let f12 = solve_with_singularity(cfg, &s12, None, &opts).unwrap().field.values();
    for k in 0..f1.len() {
        assert!((f1[k] + f2[k] - f12[k]).abs() < 1e-8, "{k}");
    }
}

#[test]
fn fixed_point_converges() {
    let sol = solve_harmonic_plus(canonical(1.0 / 64.0), None, &SolveOptions::default()).unwrap();
    let u = &sol.report.fixed_point_updates;
    assert!(u.len() >= 2);
    assert!(*u.last().unwrap() < 1e-6, "{u:?}");
}
