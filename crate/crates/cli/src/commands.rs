//! The checks behind each command. Every assertion reads its tolerance from
//! the run configuration so the manifest records what was used.

use crate::{load_spec, read_config, CliError, CliResult, Context};
use branched_core::asymptotics::{convergence_order, decay_exponent, extract_ab, residual_exponent, OrderEstimate};
use branched_core::conventions::{FINITE_PART_FACTOR, H1_X1_H0_COEFFICIENT};
use branched_core::deformation::{
    approx_inverse_error, fd_sweep, formula_derivative, measure_ab, moved_spec, relative_error, run_newton, DerivativeInputs, NewtonOptions,
    B_MIN, FD_EPSILONS,
};
use branched_core::domain::{Config, ConfigSpec, GridSpec, CANONICAL_CUTOFF};
use branched_core::flat_kernel::{
    correction_residual, eval_h0, eval_i0, eval_i1, eval_i1_with_coefficient, gamma_coefficient, gamma_flat, integrate_h0_tangential,
    integrate_h1_tangential, kappa, KernelPoint,
};
use branched_core::io::{fmt_f64, svg_heatmap, svg_line_plot, AssertionResult, Series, Table};
use branched_core::oracle::{oracle_a, CurveConfig, OracleFarField};
use branched_core::p_operator::{basis_input, calibrate_line_model, check_potential_quadrature, p_matrix, PotentialPoint};
use branched_core::solver::{smallest_eigenvalue, solve_harmonic_plus, SolveOptions, TwistedSystem};
use branched_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn f(x: f64) -> String {
    fmt_f64(x)
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn need_resolutions(ctx: &Context, min: usize) -> CliResult<Vec<f64>> {
    let hs = ctx.run.resolutions.clone();
    if hs.len() < min {
        return Err(CliError::Config(format!(
            "{} needs at least {min} resolutions, got {}",
            ctx.run.command.name(),
            hs.len()
        )));
    }
    Ok(hs)
}

/// Transverse radii and tangential offsets of the integral identities.
pub const INTEGRAL_RADII: [f64; 3] = [0.5, 1.0, 2.0];
const INTEGRAL_PHASES: [f64; 3] = [0.3, 2.0, -2.5];
/// Curvature used for the first correction term.
pub const CORRECTION_CURVATURE: f64 = 1.0;
/// Finite-difference steps of the correction-equation order study.
pub const CORRECTION_STEPS: [f64; 3] = [2e-2, 1e-2, 5e-3];
pub const GAMMA_OFFSETS: [f64; 3] = [1.0, 2.0, 4.0];

/// Points of the integral identities: `|z| ∈ INTEGRAL_RADII` at assorted phases.
pub fn integral_points() -> Vec<Complex64> {
    INTEGRAL_RADII
        .iter()
        .flat_map(|&r| INTEGRAL_PHASES.iter().map(move |&th| Complex64::from_polar(r, th)))
        .collect()
}

/// Random flat-model points with `R ∈ [0.5, 2]`, kept away from the branch
/// line and from the principal cut so centred stencils stay on one sheet.
pub fn correction_points(seed: u64, count: usize) -> Vec<KernelPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r: f64 = rng.random_range(0.5..2.0);
        let u: f64 = rng.random_range(-1.0..1.0);
        let th: f64 = rng.random_range(-PI..PI);
        let rho = r * (1.0 - u * u).sqrt();
        let z = Complex64::from_polar(rho, th);
        if rho < 0.2 * r || (z.re < 0.0 && z.im.abs() < 0.1) {
            continue;
        }
        out.push(KernelPoint::n3(z, r * u));
    }
    out
}

/// Observed order of the correction residual from the two finest steps.
pub fn correction_order(p: &KernelPoint) -> CliResult<f64> {
    let r: Vec<f64> = CORRECTION_STEPS
        .iter()
        .map(|&s| correction_residual(p, CORRECTION_CURVATURE, s).map(|v| v.norm()))
        .collect::<branched_core::Result<_>>()?;
    Ok((r[1] / r[2]).ln() / (CORRECTION_STEPS[1] / CORRECTION_STEPS[2]).ln())
}

pub fn kernel_check(ctx: &mut Context) -> CliResult<()> {
    ctx.set_input(&serde_json::json!({ "n": 3, "m": CORRECTION_CURVATURE, "seed": ctx.run.seed }));
    let mut table = Table::new(&["check", "case", "value", "reference", "error"]);
    let row = |t: &mut Table, check: &str, case: String, v: f64, r: f64, e: f64| t.push(vec![check.into(), case, f(v), f(r), f(e)]);

    let t0 = Instant::now();
    let k3 = kappa(3)?;
    let e_kappa = (k3 - 1.0 / PI).abs();
    row(&mut table, "kappa3", "n=3".into(), k3, 1.0 / PI, e_kappa)?;
    let unit = eval_h0(&KernelPoint::n3(c(1.0, 0.0), 0.0))?.value;
    let e_unit = (unit - c(1.0 / PI, 0.0)).norm();
    row(&mut table, "h0_unit", "z=1,t=0".into(), unit.re, 1.0 / PI, e_unit)?;
    let mut e_hom: f64 = 0.0;
    for p in [KernelPoint::n3(c(0.3, 0.4), 0.5), KernelPoint::n3(c(-0.7, 0.2), -1.1), KernelPoint::n3(c(1.5, -0.8), 0.2)] {
        let base = eval_h0(&p)?.value;
        for lambda in [0.5f64, 2.0, 7.0] {
            let want = base * lambda.powf(-1.5);
            let got = eval_h0(&p.scaled(lambda))?.value;
            let e = (got - want).norm() / want.norm();
            e_hom = e_hom.max(e);
            row(&mut table, "homogeneity", format!("z={},t={},lambda={lambda}", p.z, p.t[0]), got.norm(), want.norm(), e)?;
        }
    }
    let t_const = t0.elapsed().as_secs_f64();
    ctx.check(AssertionResult::at_most("kappa3", e_kappa, ctx.tol("kappa3")));
    ctx.check(AssertionResult::at_most("h0_unit", e_unit, ctx.tol("h0_unit")));
    ctx.check(AssertionResult::at_most("homogeneity", e_hom, ctx.tol("homogeneity")));
    ctx.check(AssertionResult::at_most("constants_runtime_s", t_const, ctx.tol("constants_runtime_s")));

    let t0 = Instant::now();
    let (mut e_i0, mut e_i1, mut e_i1_literal): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let m = CORRECTION_CURVATURE;
    for z in integral_points() {
        let q0 = integrate_h0_tangential(z)?;
        let want = z.norm().powf(-0.5);
        let e = (q0.norm() - want).abs() / want;
        e_i0 = e_i0.max(e);
        row(&mut table, "i0_modulus", format!("z={z}"), q0.norm(), want, e)?;
        let phase = (q0 - eval_i0(z)?.conj()).norm() / want;
        row(&mut table, "i0_conjugate_phase", format!("z={z}"), q0.arg(), eval_i0(z)?.conj().arg(), phase)?;
        let q1 = integrate_h1_tangential(z, m, H1_X1_H0_COEFFICIENT)?;
        let closed = eval_i1_with_coefficient(z, m, H1_X1_H0_COEFFICIENT)?.conj();
        let e = (q1 - closed).norm() / closed.norm();
        e_i1 = e_i1.max(e);
        row(&mut table, "i1_closed_form", format!("z={z}"), q1.norm(), closed.norm(), e)?;
        // the closed form with unit x1 coefficient, reported for reference
        let literal = eval_i1(z, m)?.conj();
        let e = (q1 - literal).norm() / literal.norm();
        e_i1_literal = e_i1_literal.max(e);
        row(&mut table, "i1_unit_coefficient_form", format!("z={z}"), q1.norm(), literal.norm(), e)?;
    }
    let t_int = t0.elapsed().as_secs_f64();
    ctx.check(AssertionResult::at_most("i0_modulus", e_i0, ctx.tol("i0_modulus")));
    ctx.check(
        AssertionResult::at_most("i1_closed_form", e_i1, ctx.tol("i1_closed_form"))
            .with_detail(format!("unit x1-coefficient form differs by up to {e_i1_literal:.3e}")),
    );
    ctx.check(AssertionResult::at_most("integrals_runtime_s", t_int, ctx.tol("integrals_runtime_s")));

    let mut dev: f64 = 0.0;
    for p in correction_points(ctx.run.seed, 20) {
        let order = correction_order(&p)?;
        dev = dev.max((order - 2.0).abs());
        row(&mut table, "correction_order", format!("z={},t={}", p.z, p.t[0]), order, 2.0, (order - 2.0).abs())?;
    }
    ctx.check(AssertionResult::at_most("correction_order_deviation", dev, ctx.tol("correction_order_deviation")));

    let mut e_gamma: f64 = 0.0;
    for t in GAMMA_OFFSETS {
        let g = gamma_coefficient(t)?;
        let want = gamma_flat(t, 0.0)?;
        let e = (g.re - want).abs() / want;
        e_gamma = e_gamma.max(e);
        row(&mut table, "gamma_fit", format!("t={t}"), g.re, want, e)?;
    }
    ctx.check(AssertionResult::at_most("gamma_fit", e_gamma, ctx.tol("gamma_fit")));
    ctx.write_table("kernel_checks.csv", &table)
}

/// Line period and sample count of the line-model cross-validation.
pub const LINE_PERIOD: f64 = 2.0;
pub const LINE_SAMPLES: usize = 256;

/// `(1 - t²)³` on `[-1, 1]`.
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - t * t).powi(3)
    } else {
        0.0
    }
}

/// Evaluation points of the potential comparison: five points at distance
/// 0.5 from the line.
pub fn potential_points() -> Vec<PotentialPoint> {
    [(0.3, -0.6), (1.2, -0.2), (2.0, 0.0), (-0.8, 0.4), (-2.6, 1.3)]
        .iter()
        .map(|&(th, t)| PotentialPoint {
            z: Complex64::from_polar(0.5, th),
            t,
        })
        .collect()
}

pub fn p_check(ctx: &mut Context) -> CliResult<()> {
    ctx.set_input(&serde_json::json!({ "period": LINE_PERIOD, "samples": LINE_SAMPLES, "bump": "(1 - t^2)^3 on [-1, 1]" }));
    let t0 = Instant::now();
    let cal = calibrate_line_model(LINE_PERIOD, LINE_SAMPLES)?;
    let t_line = t0.elapsed().as_secs_f64();
    let mut table = Table::new(&["k", "multiplier", "strip", "finite_part", "finite_part_calibrated"]);
    let fp = cal.finite_part_calibrated();
    let mut agree: f64 = 0.0;
    for (j, &k) in cal.modes.iter().enumerate() {
        let (mu, st, fpc) = (cal.multiplier[j], cal.strip[j], fp[j]);
        agree = agree.max((st / mu - 1.0).abs()).max((fpc / mu - 1.0).abs()).max((fpc / st - 1.0).abs());
        table.push(vec![k.to_string(), f(mu), f(st), f(cal.finite_part[j]), f(fpc)])?;
    }
    ctx.write_table("line_modes.csv", &table)?;
    let ks: Vec<f64> = cal.modes.iter().map(|&k| k as f64).collect();
    let series = |name: &str, v: &[f64]| Series {
        name: name.into(),
        points: ks.iter().zip(v).map(|(&k, &y)| (k, y.abs())).collect(),
    };
    ctx.write_plot(
        "line_modes.svg",
        "line-model eigenvalue magnitude",
        "mode k",
        "|eigenvalue|",
        &[series("multiplier", &cal.multiplier), series("strip", &cal.strip), series("finite part / ledger factor", &fp)],
        false,
    )?;
    ctx.check(
        AssertionResult::at_most("route_agreement", agree, ctx.tol("route_agreement"))
            .with_detail(format!("finite part / strip = {:.6} (ledger {FINITE_PART_FACTOR:.6})", cal.finite_part_over_strip)),
    );
    ctx.check(AssertionResult::at_most("slope_deviation", (cal.slope_ratio - 1.0).abs(), ctx.tol("slope_deviation")));
    ctx.check(AssertionResult::at_most("line_runtime_s", t_line, ctx.tol("line_runtime_s")));

    let rep = check_potential_quadrature(bump, 1.0, &potential_points())?;
    let mut table = Table::new(&["re_z", "im_z", "t", "strip", "kernel", "ratio"]);
    for (j, p) in rep.points.iter().enumerate() {
        table.push(vec![f(p.z.re), f(p.z.im), f(p.t), f(rep.strip[j]), f(rep.kernel[j]), f(rep.ratios[j])])?;
    }
    ctx.write_table("potential.csv", &table)?;
    ctx.check(AssertionResult::at_most("potential_agreement", rep.max_relative_error, ctx.tol("potential_agreement")));
    Ok(())
}

/// Decade of radii for the decay study about point `i`.
pub fn decay_radii(config: &Config, i: usize) -> Vec<f64> {
    let hi = 0.05f64.min(0.5 * config.clear_radius(i));
    let lo = hi / 10.0;
    (0..8).map(|k| lo * 10f64.powf(k as f64 / 7.0)).collect()
}

/// Outer radii for the residual-exponent study about point `i`.
pub fn residual_radii(config: &Config, i: usize) -> Vec<f64> {
    let hi = 0.96 * config.clear_radius(i);
    let lo = hi / 3.0;
    (0..6).map(|k| lo * 3f64.powf(k as f64 / 5.0)).collect()
}

pub fn solve(ctx: &mut Context) -> CliResult<()> {
    let hs = need_resolutions(ctx, 1)?;
    let spec0 = load_spec(ctx.run, ConfigSpec::canonical_torus)?;
    ctx.set_input(&spec0);
    let opts = SolveOptions::default();
    let mut eig = Table::new(&["h", "lambda_min"]);
    let mut decay = Table::new(&["h", "point", "slope", "ci95"]);
    let mut lambdas = Vec::new();
    let mut dev: f64 = 0.0;
    for (k, &h) in hs.iter().enumerate() {
        let cfg = Arc::new(spec0.with_spacing(h).validate()?);
        let lam = smallest_eigenvalue(&TwistedSystem::assemble(cfg.clone()), 1e-6)?;
        lambdas.push(lam);
        eig.push(vec![f(h), f(lam)])?;
        let sol = solve_harmonic_plus(cfg.clone(), None, &opts)?;
        for i in 0..cfg.num_points() {
            let fit = decay_exponent(&sol.field, i, &decay_radii(&cfg, i))?;
            dev = dev.max((fit.slope - 0.5).abs());
            decay.push(vec![f(h), i.to_string(), f(fit.slope), f(fit.slope_ci95)])?;
        }
        if k == 0 {
            let g = &cfg.grid;
            ctx.write_text("field_coarse.svg", &svg_heatmap("harmonic section", &sol.field.values(), g.nx, g.ny)?)?;
        }
        if k + 1 == hs.len() {
            let mut buf = Vec::new();
            sol.field.write_csv(&mut buf)?;
            ctx.write_text("field.csv", &String::from_utf8_lossy(&buf))?;
        }
    }
    ctx.write_table("eigenvalues.csv", &eig)?;
    ctx.write_table("decay.csv", &decay)?;
    let lam_min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let mut a = AssertionResult::at_least("min_eigenvalue", lam_min, ctx.tol("min_eigenvalue"));
    a.passed = lam_min > ctx.tol("min_eigenvalue");
    ctx.check(a);
    let drift = lambdas.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()).fold(0.0, f64::max);
    ctx.check(AssertionResult::at_most("eigenvalue_drift", drift, ctx.tol("eigenvalue_drift")));
    ctx.check(AssertionResult::at_most("decay_exponent_deviation", dev, ctx.tol("decay_exponent_deviation")));
    Ok(())
}

pub fn fit(ctx: &mut Context) -> CliResult<()> {
    let hs = need_resolutions(ctx, 3)?;
    let spec0 = load_spec(ctx.run, ConfigSpec::canonical_torus)?;
    ctx.set_input(&spec0);
    let opts = SolveOptions::default();
    let zero = c(0.0, 0.0);
    let mut table = Table::new(&["h", "point", "re_a", "im_a", "re_b", "im_b", "residual", "r1", "r2"]);
    let mut a_by_point: Vec<Vec<Complex64>> = Vec::new();
    let mut finest = None;
    for &h in &hs {
        let cfg = Arc::new(spec0.with_spacing(h).validate()?);
        let sol = solve_harmonic_plus(cfg.clone(), None, &opts)?;
        a_by_point.resize(cfg.num_points(), Vec::new());
        for i in 0..cfg.num_points() {
            let ab = extract_ab(&sol.field, i, zero)?;
            a_by_point[i].push(ab.a);
            table.push(vec![
                f(h),
                i.to_string(),
                f(ab.a.re),
                f(ab.a.im),
                f(ab.b.re),
                f(ab.b.im),
                f(ab.residual),
                f(ab.annulus.0),
                f(ab.annulus.1),
            ])?;
        }
        finest = Some((cfg, sol));
    }
    ctx.write_table("ab.csv", &table)?;

    let mut orders = Table::new(&["point", "order", "extrapolated_re_a", "extrapolated_im_a", "oscillating"]);
    let mut min_order = f64::INFINITY;
    let mut detail = String::new();
    let mut series = Vec::new();
    for (i, a) in a_by_point.iter().enumerate() {
        match convergence_order(&hs, a) {
            Ok(OrderEstimate::Exact) => orders.push(vec![i.to_string(), "exact".into(), f(a[a.len() - 1].re), f(a[a.len() - 1].im), "false".into()])?,
            Ok(OrderEstimate::Measured {
                richardson,
                extrapolated,
                oscillating,
                ..
            }) => {
                min_order = min_order.min(richardson);
                orders.push(vec![i.to_string(), f(richardson), f(extrapolated.re), f(extrapolated.im), oscillating.to_string()])?;
                series.push(Series {
                    name: format!("point {i}"),
                    points: hs.iter().zip(a).map(|(&h, v)| (h, (v - extrapolated).norm())).collect(),
                });
            }
            Err(e) => {
                min_order = f64::NEG_INFINITY;
                detail.push_str(&format!("point {i}: {e}; "));
            }
        }
    }
    ctx.write_table("orders.csv", &orders)?;
    ctx.write_plot("convergence.svg", "A error against the extrapolated limit", "h", "|A - A_extrapolated|", &series, true)?;
    ctx.check(AssertionResult::at_least("min_order", min_order, ctx.tol("min_order")).with_detail(detail));

    let (cfg, sol) = finest.expect("at least three resolutions");
    let mut res = Table::new(&["point", "slope", "ci95"]);
    let mut dev: f64 = 0.0;
    for i in 0..cfg.num_points() {
        let fit = residual_exponent(&sol.field, i, &residual_radii(&cfg, i))?;
        dev = dev.max((fit.slope - 2.5).abs());
        res.push(vec![i.to_string(), f(fit.slope), f(fit.slope_ci95)])?;
    }
    ctx.write_table("residual_exponent.csv", &res)?;
    ctx.check(AssertionResult::at_most("residual_exponent_deviation", dev, ctx.tol("residual_exponent_deviation")));
    Ok(())
}

/// Outer radius of the plane chart used against the oracle.
pub const ORACLE_CHART_RADIUS: f64 = 1.25;

pub fn oracle_compare(ctx: &mut Context) -> CliResult<()> {
    let hs = need_resolutions(ctx, 1)?;
    let curve = match &ctx.run.config {
        None => CurveConfig::square(c(1.0, 0.0)),
        Some(path) => serde_json::from_str::<CurveConfig>(&read_config(path)?)
            .map_err(|e| CliError::Config(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column())))?,
    };
    curve.validate()?;
    ctx.set_input(&curve);
    let t0 = Instant::now();
    let ff = OracleFarField::new(&curve)?;
    let m = curve.points.len();
    let a_or = oracle_a(&curve);
    let p_or: Vec<Vec<Complex64>> = (0..2 * m)
        .map(|col| ff.oracle.solve(&basis_input(m, col)).map(|s| s.p))
        .collect::<branched_core::Result<_>>()?;
    let opts = SolveOptions::default();
    let mut table = Table::new(&["h", "quantity", "column", "point", "re_solver", "im_solver", "re_oracle", "im_oracle"]);
    let (mut e_a, mut e_p) = (0.0f64, 0.0f64);
    for &h in &hs {
        let spec = curve.solver_spec(
            ORACLE_CHART_RADIUS,
            GridSpec {
                spacing: h,
                cutoff_radius: CANONICAL_CUTOFF.max(8.0 * h),
            },
        )?;
        let cfg = Arc::new(spec.validate()?);
        let harmonic = |z: Complex64| ff.harmonic(z);
        let sol = solve_harmonic_plus(cfg.clone(), Some(&harmonic), &opts)?;
        e_a = 0.0;
        for i in 0..m {
            let ab = extract_ab(&sol.field, i, c(0.0, 0.0))?;
            e_a = e_a.max((ab.a - a_or[i]).norm() / a_or[i].norm());
            table.push(vec![f(h), "A".into(), String::new(), i.to_string(), f(ab.a.re), f(ab.a.im), f(a_or[i].re), f(a_or[i].im)])?;
        }
        let singular = |s: &[Complex64], z: Complex64| ff.singular(s, z);
        let p = p_matrix(cfg.clone(), Some(&singular), &opts)?;
        e_p = 0.0;
        for (col, want) in p_or.iter().enumerate() {
            let got = p.column(col);
            let diff: Vec<Complex64> = got.iter().zip(want).map(|(x, y)| x - y).collect();
            e_p = e_p.max(inf_norm(&diff) / inf_norm(want));
            for i in 0..m {
                table.push(vec![
                    f(h),
                    "P".into(),
                    col.to_string(),
                    i.to_string(),
                    f(got[i].re),
                    f(got[i].im),
                    f(want[i].re),
                    f(want[i].im),
                ])?;
            }
        }
    }
    ctx.write_table("oracle_compare.csv", &table)?;
    ctx.check(AssertionResult::at_most("a_agreement", e_a, ctx.tol("a_agreement")));
    ctx.check(AssertionResult::at_most("p_agreement", e_p, ctx.tol("p_agreement")));
    ctx.check(AssertionResult::at_most("runtime_s", t0.elapsed().as_secs_f64(), ctx.tol("runtime_s")));
    Ok(())
}

/// Seeded random complex vector with entries uniform in the unit square.
pub fn random_vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<Complex64> {
    (0..m).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

pub const DERIVATIVE_DIRECTIONS: usize = 5;

pub fn derivative_check(ctx: &mut Context) -> CliResult<()> {
    let hs = need_resolutions(ctx, 2)?;
    let spec0 = load_spec(ctx.run, ConfigSpec::four_point_torus)?;
    ctx.set_input(&spec0);
    let m = spec0.points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.run.seed);
    let dirs: Vec<Vec<Complex64>> = (0..DERIVATIVE_DIRECTIONS).map(|_| random_vector(&mut rng, m)).collect();
    let opts = SolveOptions::default();
    let mut values = Table::new(&["h", "direction", "point", "re_fd", "im_fd", "re_formula", "im_formula"]);
    let mut errors = Table::new(&["h", "direction", "relative_error", "sweep_consistency"]);
    let mut errs: Vec<Vec<f64>> = Vec::new();
    for &h in &hs {
        let spec = spec0.with_spacing(h);
        let cfg = Arc::new(spec.validate()?);
        let inputs = DerivativeInputs::compute(cfg, &opts)?;
        let mut row = Vec::new();
        for (d, v) in dirs.iter().enumerate() {
            let formula = formula_derivative(&inputs, v)?;
            let sweep = fd_sweep(&spec, v, &FD_EPSILONS, &opts)?;
            let e = relative_error(&sweep.estimate, &formula);
            row.push(e);
            errors.push(vec![f(h), d.to_string(), f(e), f(sweep.consistency)])?;
            for i in 0..m {
                values.push(vec![
                    f(h),
                    d.to_string(),
                    i.to_string(),
                    f(sweep.estimate[i].re),
                    f(sweep.estimate[i].im),
                    f(formula[i].re),
                    f(formula[i].im),
                ])?;
            }
        }
        errs.push(row);
    }
    ctx.write_table("derivative.csv", &values)?;
    ctx.write_table("derivative_errors.csv", &errors)?;
    let series: Vec<Series> = (0..dirs.len())
        .map(|d| Series {
            name: format!("direction {d}"),
            points: hs.iter().zip(&errs).map(|(&h, e)| (h, e[d])).collect(),
        })
        .collect();
    ctx.write_plot("derivative_errors.svg", "formula against finite differences", "h", "relative error", &series, true)?;
    let fine = &errs[errs.len() - 1];
    let coarse = &errs[errs.len() - 2];
    let worst = fine.iter().copied().fold(0.0, f64::max);
    ctx.check(AssertionResult::at_most("max_relative_error", worst, ctx.tol("max_relative_error")));
    let ratio = fine.iter().zip(coarse).map(|(a, b)| a / b).fold(0.0, f64::max);
    let mut a = AssertionResult::at_most("refinement_ratio", ratio, ctx.tol("refinement_ratio"))
        .with_detail("largest fine/coarse error ratio; must be strictly below the tolerance");
    a.passed = ratio < ctx.tol("refinement_ratio");
    ctx.check(a);
    Ok(())
}

/// Size of the random displacement of each point from the reference.
pub const NEWTON_PERTURBATION: f64 = 0.02;
pub const NEWTON_ITERATIONS: usize = 4;
pub const CLASS_SCALES: [f64; 3] = [0.5, 1.0, 2.0];
pub const INVERSE_SAMPLES: usize = 5;

fn scaled_class(spec: &ConfigSpec, s: f64) -> ConfigSpec {
    let mut out = spec.clone();
    out.representation.cut_translations.iter_mut().for_each(|t| *t *= s);
    out.representation.period_translations.iter_mut().for_each(|t| *t *= s);
    out
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

pub fn newton(ctx: &mut Context) -> CliResult<()> {
    let hs = need_resolutions(ctx, 1)?;
    let spec_ref = load_spec(ctx.run, ConfigSpec::newton_reference_torus)?.with_spacing(hs[hs.len() - 1]);
    ctx.set_input(&spec_ref);
    let opts = NewtonOptions::default();
    let cfg_ref = Arc::new(spec_ref.validate()?);
    let m = cfg_ref.num_points();
    let (target, _) = measure_ab(cfg_ref.clone(), &opts.solve)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.run.seed);
    let v: Vec<Complex64> = (0..m)
        .map(|_| Complex64::from_polar(NEWTON_PERTURBATION, rng.random_range(-PI..PI)))
        .collect();
    let start = moved_spec(&spec_ref, &cfg_ref, &v, 1.0)?;
    let trace = run_newton(&start, &target, NEWTON_ITERATIONS, 0.0, &opts)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    ctx.write_text("newton_trace.csv", &String::from_utf8_lossy(&buf))?;
    let residual_series = Series {
        name: "residual".into(),
        points: trace.residuals.iter().enumerate().map(|(k, &r)| (k as f64, r)).collect(),
    };
    ctx.write_text(
        "newton_trace.svg",
        &svg_line_plot("Newton iteration", "iteration", "max |A - A*|", &[residual_series], false, true),
    )?;
    let r0 = trace.residuals[0];
    let best = trace.residuals.iter().copied().fold(f64::INFINITY, f64::min);
    ctx.check(
        AssertionResult::at_least("min_reduction", r0 / best, ctx.tol("min_reduction"))
            .with_detail(format!("{:?} after {} iterations", trace.outcome, trace.iterations())),
    );

    let inputs = DerivativeInputs::compute(cfg_ref.clone(), &opts.solve)?;
    let etas: Vec<Vec<Complex64>> = (0..INVERSE_SAMPLES).map(|_| random_vector(&mut rng, m)).collect();
    let mut table = Table::new(&["eta", "class_scale", "error", "ratio"]);
    let mut by_scale: Vec<Vec<f64>> = Vec::new();
    for &s in &CLASS_SCALES {
        let scaled = if s == 1.0 {
            inputs.clone()
        } else {
            let (a, b) = measure_ab(Arc::new(scaled_class(&spec_ref, s).validate()?), &opts.solve)?;
            // P does not depend on the class
            DerivativeInputs { a, b, p: inputs.p.clone() }
        };
        let mut row = Vec::new();
        for (k, eta) in etas.iter().enumerate() {
            let e = approx_inverse_error(&scaled, eta, B_MIN)?;
            row.push(e.ratio);
            table.push(vec![k.to_string(), f(s), f(e.error), f(e.ratio)])?;
        }
        by_scale.push(row);
    }
    ctx.write_table("approx_inverse.csv", &table)?;
    let unit = CLASS_SCALES.iter().position(|&s| s == 1.0).expect("unit scale present");
    ctx.check(
        AssertionResult::at_most("ratio_spread_eta", spread(&by_scale[unit]), ctx.tol("max_ratio_spread"))
            .with_detail("max/min of e(η)/(|A| |η|) over random η; ±50% about a common centre means at most 3"),
    );
    let across: f64 = (0..etas.len())
        .map(|k| spread(&by_scale.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    ctx.check(
        AssertionResult::at_most("ratio_spread_class_scaling", across, ctx.tol("max_ratio_spread"))
            .with_detail("max/min of the ratio over class scalings 1/2, 1, 2 for each η"),
    );
    Ok(())
}
