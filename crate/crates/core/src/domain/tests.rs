use super::*;
use proptest::prelude::*;

fn z(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn canonical() -> Config {
    ConfigSpec::canonical_torus(1.0 / 128.0).validate().unwrap()
}

fn circle(center: Complex64, r: f64, n: usize) -> Vec<Complex64> {
    (0..=n)
        .map(|k| center + Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64 + 0.1))
        .collect()
}

fn four_point() -> ConfigSpec {
    ConfigSpec::torus_pairs(
        [1.0, 1.0],
        &[z(0.3, 0.3), z(0.7, 0.3), z(0.3, 0.7), z(0.7, 0.7)],
        &[1.0, -0.5],
        [0.3, 0.7],
        GridSpec {
            spacing: 1.0 / 64.0,
            cutoff_radius: 0.125,
        },
    )
}

#[test]
fn canonical_config_is_valid() {
    let cfg = canonical();
    assert_eq!(cfg.num_points(), 2);
    assert_eq!(cfg.grid.num_unknowns(), 128 * 128);
    // vertical edges between the two points cross the cut
    let n = cfg.crossings.keys().filter(|(_, d)| *d == Dir::N).count();
    assert_eq!(n, 64);
    assert!(!cfg.class_is_zero());
}

#[test]
fn odd_point_count_rejected() {
    let mut spec = ConfigSpec::canonical_torus(1.0 / 128.0);
    spec.points.push([0.5, 0.2]);
    let err = spec.validate().unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(ref m) if m.contains("even")), "{err}");
}

#[test]
fn cuts_sharing_a_point_rejected() {
    let mut spec = four_point();
    spec.cuts[1] = CutSpec {
        start: 1,
        end: Some(2),
        via: vec![],
    };
    spec.validate().unwrap_err();
}

#[test]
fn cuts_sharing_a_vertex_rejected() {
    let mut spec = four_point();
    spec.cuts[0].via = vec![[0.5, 0.5]];
    spec.cuts[1].via = vec![[0.5, 0.5]];
    let err = spec.validate().unwrap_err();
    assert!(err.to_string().contains("intersect"), "{err}");
}

#[test]
fn other_invariants_rejected() {
    let spec = ConfigSpec::canonical_torus(1.0 / 128.0);
    let mut s = spec.clone();
    s.points[1] = [0.27, 0.5];
    assert!(s.validate().is_err(), "too close");
    let mut s = spec.clone();
    s.points[1] = [1.5, 0.5];
    assert!(s.validate().is_err(), "outside");
    let mut s = spec.clone();
    s.grid.cutoff_radius = 0.01;
    assert!(s.validate().is_err(), "cutoff");
    let mut s = spec.clone();
    s.representation.cut_translations.clear();
    assert!(s.validate().is_err(), "translations");
    let mut s = spec.clone();
    s.schema_version = 7;
    assert!(s.validate().is_err(), "schema");
    let mut s = spec;
    s.cuts[0].end = None;
    assert!(s.validate().is_err(), "boundary cut on torus");
}

#[test]
fn zero_class_detected() {
    let mut spec = ConfigSpec::canonical_torus(1.0 / 64.0);
    spec.representation.period_translations = [0.0, 0.0];
    assert!(spec.validate().unwrap().class_is_zero());
}

#[test]
fn small_loop_is_a_reflection() {
    let cfg = canonical();
    let g = holonomy_of_loop(&cfg, &circle(z(0.25, 0.5), 0.05, 17)).unwrap();
    assert!(g.approx_eq(&Affine::reflection(1.0), 0.0));
    assert!(g.compose(&g).approx_eq(&Affine::IDENTITY, 0.0));
}

#[test]
fn contractible_and_double_crossing_loops() {
    let cfg = canonical();
    let g = holonomy_of_loop(&cfg, &circle(z(0.5, 0.2), 0.1, 12)).unwrap();
    assert_eq!(g, Affine::IDENTITY);
    // enclosing both endpoints crosses nothing
    let g = holonomy_of_loop(&cfg, &circle(z(0.5, 0.5), 0.4, 40)).unwrap();
    assert_eq!(g, Affine::IDENTITY);
    // across the cut and back
    let g = holonomy_of_loop(&cfg, &[z(0.5, 0.4), z(0.5, 0.6), z(0.55, 0.6), z(0.55, 0.4), z(0.5, 0.4)]).unwrap();
    assert_eq!(g, Affine::IDENTITY);
}

#[test]
fn torus_generators_carry_the_period_translations() {
    let cfg = canonical();
    let g = holonomy_of_loop(&cfg, &[z(0.1, 0.2), z(0.6, 0.2), z(1.1, 0.2)]).unwrap();
    assert!(g.approx_eq(&Affine::translation(1.0), 0.0));
    let g = holonomy_of_loop(&cfg, &[z(1.1, 0.2), z(0.6, 0.2), z(0.1, 0.2)]).unwrap();
    assert!(g.approx_eq(&Affine::translation(-1.0), 0.0));
    let g = holonomy_of_loop(&cfg, &[z(0.1, 0.2), z(0.1, 0.7), z(0.1, 1.2)]).unwrap();
    assert_eq!(g, Affine::IDENTITY);
}

#[test]
fn loop_touching_a_point_rejected() {
    let cfg = canonical();
    assert!(holonomy_of_loop(&cfg, &[z(0.1, 0.5), z(0.25, 0.5), z(0.2, 0.3)]).is_err());
}

#[test]
fn transitions_are_consistent_on_every_edge() {
    let cfg = ConfigSpec::canonical_torus(1.0 / 32.0).validate().unwrap();
    for node in 0..cfg.grid.len() {
        for d in Dir::ALL {
            let b = cfg.grid.neighbor(node, d).unwrap();
            let t = cfg.edge_transition(node, d).compose(&cfg.edge_transition(b, d.opposite()));
            assert!(t.approx_eq(&Affine::IDENTITY, 1e-15));
        }
    }
}

#[test]
fn crossing_table_is_complete() {
    let spec = four_point();
    let cfg = spec.validate().unwrap();
    let h = cfg.grid.h;
    for node in 0..cfg.grid.len() {
        for d in [Dir::E, Dir::N] {
            let pa = cfg.grid.position(node);
            let brute = geometry::crossings_of_segment(pa, pa + d.offset() * h, &cfg.cut_paths);
            let table = cfg.crossings.get(&(node, d)).cloned().unwrap_or_default();
            assert_eq!(brute, table);
            for c in &table {
                assert!(c.sign == 1 || c.sign == -1);
            }
        }
    }
}

#[test]
fn grid_loop_holonomy_matches_edge_transitions() {
    // walking the 4 edges around the cell containing a point
    let cfg = canonical();
    let g = &cfg.grid;
    let (i, j, _, _) = g.cell(z(0.25, 0.5) + z(1e-9, 1e-9)).unwrap();
    let a = g.node(i, j);
    let b = g.neighbor(a, Dir::E).unwrap();
    let c = g.neighbor(b, Dir::N).unwrap();
    let d = g.neighbor(c, Dir::W).unwrap();
    let t = cfg
        .edge_transition(a, Dir::E)
        .compose(&cfg.edge_transition(b, Dir::N))
        .compose(&cfg.edge_transition(c, Dir::W))
        .compose(&cfg.edge_transition(d, Dir::S));
    assert!(t.approx_eq(&Affine::reflection(1.0), 0.0));
}

#[test]
fn plane_chart_radial_config() {
    let spec = ConfigSpec::plane_radial(
        1.25,
        FarField::Zero,
        &[z(1.0, 0.0), z(0.0, 1.0), z(-1.0, 0.0), z(0.0, -1.0)],
        &[0.1, 0.2, 0.3, 0.4],
        GridSpec {
            spacing: 1.0 / 32.0,
            cutoff_radius: 0.25,
        },
    );
    let cfg = spec.validate().unwrap();
    for (k, p) in cfg.points.iter().enumerate() {
        assert!((p.cut_angle - (PI / 2.0) * k as f64).rem_euclid(2.0 * PI).min((PI / 2.0 * k as f64 - p.cut_angle).rem_euclid(2.0 * PI)) < 1e-12);
        let g = holonomy_of_loop(&cfg, &circle(p.position, 0.1, 13)).unwrap();
        assert!(g.approx_eq(&Affine::reflection(0.1 * (k + 1) as f64), 1e-15));
    }
    // a loop around 1 and i crosses two cuts
    let lp = circle(z(0.5, 0.5), 0.8, 64);
    let g = holonomy_of_loop(&cfg, &lp).unwrap();
    assert_eq!(g.sign, 1.0);
    assert!((g.shift.abs() - 0.1).abs() < 1e-15);
}

#[test]
fn default_frames_are_cut_compatible() {
    let cfg = canonical();
    for p in &cfg.points {
        let s = cfg.local_sqrt(0, Complex64::from_polar(0.01, p.cut_angle + PI));
        assert!(s.norm() > 0.0);
    }
    // frame of the point whose cut points east: root of -1 agreeing with the principal branch
    assert!((cfg.points[0].frame - z(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn config_json_rejects_unknown_keys() {
    let mut v: serde_json::Value = serde_json::from_str(&ConfigSpec::canonical_torus(0.0625).to_json()).unwrap();
    v["bogus"] = serde_json::json!(1);
    assert!(ConfigSpec::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&ConfigSpec::canonical_torus(0.0625).to_json()).unwrap();
    v["grid"]["spacing"] = serde_json::json!("fine");
    assert!(matches!(ConfigSpec::from_json(&v.to_string()), Err(Error::InvalidConfig(_))));
}

proptest! {
    #[test]
    fn config_round_trips_bit_exactly(x in 0.1f64..0.45, y in 0.1f64..0.9, c1 in -10.0f64..10.0, a in -3.0f64..3.0, h in 1e-3f64..1e-2) {
        let mut spec = ConfigSpec::canonical_torus(h);
        spec.points[0] = [x, y];
        spec.representation.cut_translations[0] = c1;
        spec.representation.period_translations = [a, a / 3.0];
        spec.frames = Some(vec![[0.6, 0.8], [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]]);
        let back = ConfigSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn homotopic_loops_agree(radii in prop::collection::vec(0.02f64..0.2, 8..20), phase in 0.0f64..6.0) {
        // star-shaped loops about p1 staying clear of p2 are all homotopic
        let cfg = ConfigSpec::canonical_torus(1.0 / 64.0).validate().unwrap();
        let n = radii.len();
        let mut lp: Vec<Complex64> = radii.iter().enumerate()
            .map(|(k, &r)| z(0.25, 0.5) + Complex64::from_polar(r, phase + 2.0 * PI * k as f64 / n as f64))
            .collect();
        lp.push(lp[0]);
        let g = holonomy_of_loop(&cfg, &lp).unwrap();
        prop_assert!(g.approx_eq(&Affine::reflection(1.0), 0.0));
        prop_assert!(g.compose(&g).approx_eq(&Affine::IDENTITY, 0.0));
    }

    #[test]
    fn loops_around_pairs(radii in prop::collection::vec(0.3f64..0.45, 8..16)) {
        // loops about both points of a cut see nothing; about points of two cuts, a translation
        let cfg = four_point().validate().unwrap();
        let n = radii.len();
        let star = |center: Complex64, scale: Complex64| -> Vec<Complex64> {
            let mut v: Vec<Complex64> = radii.iter().enumerate()
                .map(|(k, &r)| {
                    let w = Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64);
                    center + Complex64::new(w.re * scale.re, w.im * scale.im)
                })
                .collect();
            v.push(v[0]);
            v
        };
        let g = holonomy_of_loop(&cfg, &star(z(0.5, 0.3), z(1.0, 0.3))).unwrap();
        prop_assert!(g.approx_eq(&Affine::IDENTITY, 1e-15));
        let g = holonomy_of_loop(&cfg, &star(z(0.3, 0.5), z(0.3, 1.0))).unwrap();
        prop_assert_eq!(g.sign, 1.0);
        prop_assert!((g.shift.abs() - 1.5).abs() < 1e-15);
    }
}
