//! Derivative of `A` under motion of the branch points, its finite-difference
//! check, and Newton iteration with the approximate inverse `(2/3)B⁻¹`.
//!
//! Frames are transported by translation: a moved configuration keeps the
//! frames of the configuration it came from, so the local roots `s` at the
//! old and new positions are literally comparable.

use crate::asymptotics::extract_ab;
use crate::domain::{Config, ConfigSpec};
use crate::error::{Error, Result};
use crate::p_operator::{p_matrix, POperatorDiscrete};
use crate::solver::{solve_harmonic_plus, SolveOptions};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

/// Default lower bound on `|B_i|` for Newton steps.
pub const B_MIN: f64 = 1e-3;
/// Default step sizes of the finite-difference sweep.
pub const FD_EPSILONS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `v_i` per branch point, in the stored frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationDirection {
    pub v: Vec<Complex64>,
}

/// `A`, `B` and `P` at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeInputs {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub p: POperatorDiscrete,
}

/// `A` and `B` of the harmonic section at every point.
pub fn measure_ab(config: Arc<Config>, opts: &SolveOptions) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let sol = solve_harmonic_plus(config.clone(), None, opts)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut a = Vec::with_capacity(config.num_points());
    let mut b = Vec::with_capacity(config.num_points());
    for i in 0..config.num_points() {
        let f = extract_ab(&sol.field, i, zero)?;
        a.push(f.a);
        b.push(f.b);
    }
    Ok((a, b))
}

impl DerivativeInputs {
    pub fn compute(config: Arc<Config>, opts: &SolveOptions) -> Result<Self> {
        let (a, b) = measure_ab(config.clone(), opts)?;
        let p = p_matrix(config, None, opts)?;
        Ok(Self { a, b, p })
    }

    fn check(&self, len: usize) -> Result<()> {
        let m = self.a.len();
        if self.b.len() != m || self.p.num_points() != m {
            return Err(Error::InvalidArgument("A, B and P disagree on the number of points".into()));
        }
        if len != m {
            return Err(Error::InvalidArgument(format!("{len} values for {m} points")));
        }
        Ok(())
    }
}

/// `δA_i = (3/2) B_i v_i − ½ [P(A·v)]_i`.
pub fn formula_derivative(inputs: &DerivativeInputs, v: &[Complex64]) -> Result<Vec<Complex64>> {
    inputs.check(v.len())?;
    let av: Vec<Complex64> = inputs.a.iter().zip(v).map(|(a, v)| a * v).collect();
    let pav = inputs.p.apply(&av)?;
    Ok((0..v.len()).map(|i| 1.5 * inputs.b[i] * v[i] - 0.5 * pav[i]).collect())
}

/// `spec` with every point moved by `t v_i` and the frames of `base` kept.
pub fn moved_spec(spec: &ConfigSpec, base: &Config, v: &[Complex64], t: f64) -> Result<ConfigSpec> {
    if v.len() != base.num_points() {
        return Err(Error::InvalidArgument(format!("{} displacements for {} points", v.len(), base.num_points())));
    }
    let pts: Vec<Complex64> = base.points.iter().zip(v).map(|(p, v)| p.position + v * t).collect();
    let mut out = spec.with_points(&pts);
    out.frames = Some(base.points.iter().map(|p| [p.frame.re, p.frame.im]).collect());
    Ok(out)
}

/// Central difference `(A(Σ + εv) − A(Σ − εv)) / 2ε`.
pub fn fd_derivative(spec: &ConfigSpec, v: &[Complex64], eps: f64, opts: &SolveOptions) -> Result<Vec<Complex64>> {
    let base = spec.validate()?;
    if v.iter().all(|z| z.norm() == 0.0) {
        return Ok(vec![Complex64::new(0.0, 0.0); v.len()]);
    }
    let sides: Vec<Vec<Complex64>> = [eps, -eps]
        .par_iter()
        .map(|&t| {
            let cfg = Arc::new(moved_spec(spec, &base, v, t)?.validate()?);
            Ok(measure_ab(cfg, opts)?.0)
        })
        .collect::<Result<_>>()?;
    Ok(sides[0].iter().zip(&sides[1]).map(|(p, m)| (p - m) / (2.0 * eps)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdSweep {
    pub epsilons: Vec<f64>,
    pub per_eps: Vec<Vec<Complex64>>,
    /// Second-order Richardson combinations of consecutive step sizes.
    pub richardson: Vec<Vec<Complex64>>,
    /// Best estimate: the last Richardson combination.
    pub estimate: Vec<Complex64>,
    /// Disagreement of the two Richardson combinations relative to the estimate.
    pub consistency: f64,
}

/// Tolerance on [`FdSweep::consistency`] beyond which fit noise dominates.
pub const FD_CONSISTENCY_TOL: f64 = 0.05;

/// Central differences over a halving sweep of step sizes, combined by
/// second-order Richardson extrapolation.
pub fn fd_sweep(spec: &ConfigSpec, v: &[Complex64], epsilons: &[f64], opts: &SolveOptions) -> Result<FdSweep> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidArgument("the sweep needs at least two step sizes".into()));
    }
    let per_eps: Vec<Vec<Complex64>> = epsilons.iter().map(|&e| fd_derivative(spec, v, e, opts)).collect::<Result<_>>()?;
    let richardson: Vec<Vec<Complex64>> = epsilons
        .windows(2)
        .zip(per_eps.windows(2))
        .map(|(e, d)| {
            let r2 = (e[0] / e[1]).powi(2);
            d[1].iter().zip(&d[0]).map(|(f, c)| (r2 * f - c) / (r2 - 1.0)).collect()
        })
        .collect();
    let estimate = richardson.last().cloned().unwrap_or_default();
    let scale = inf_norm(&estimate);
    let consistency = if richardson.len() >= 2 && scale > 0.0 {
        let n = richardson.len();
        let diff: Vec<Complex64> = richardson[n - 1].iter().zip(&richardson[n - 2]).map(|(a, b)| a - b).collect();
        inf_norm(&diff) / scale
    } else {
        0.0
    };
    if consistency > FD_CONSISTENCY_TOL {
        return Err(Error::NonMonotone(format!(
            "finite differences are dominated by noise: sweep disagreement {consistency:.3e}"
        )));
    }
    Ok(FdSweep {
        epsilons: epsilons.to_vec(),
        per_eps,
        richardson,
        estimate,
        consistency,
    })
}

/// `max_i |x_i − y_i| / max_i |y_i|`.
pub fn relative_error(x: &[Complex64], y: &[Complex64]) -> f64 {
    let diff: Vec<Complex64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    inf_norm(&diff) / inf_norm(y)
}

/// `v_i = −(2/3)(A_i − A*_i)/B_i`, rejecting `|B_i| < b_min`.
pub fn newton_direction(a: &[Complex64], b: &[Complex64], target: &[Complex64], b_min: f64) -> Result<Vec<Complex64>> {
    if a.len() != target.len() || b.len() != a.len() {
        return Err(Error::InvalidArgument("A, B and the target differ in length".into()));
    }
    if let Some((i, bi)) = b.iter().enumerate().find(|(_, b)| !(b.norm() >= b_min)) {
        return Err(Error::Hypothesis(format!("|B_{i}| = {:.3e} is below b_min = {b_min:.1e}", bi.norm())));
    }
    Ok((0..a.len()).map(|i| -(2.0 / 3.0) * (a[i] - target[i]) / b[i]).collect())
}

/// Smallest distance between two points (displacement-aware on the torus).
pub fn min_separation(config: &Config) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..config.num_points() {
        for j in i + 1..config.num_points() {
            d = d.min(config.displacement(config.points[i].position, config.points[j].position).norm());
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub solve: SolveOptions,
    pub b_min: f64,
    /// Cap on `max_i |v_i|` as a fraction of the minimum separation.
    pub step_cap: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            b_min: B_MIN,
            step_cap: 0.2,
            max_backtracks: 4,
        }
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub spec: ConfigSpec,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    /// `max_i |v_i|` actually applied.
    pub step_norm: f64,
    pub backtracks: usize,
    pub capped: bool,
}

/// `A`, `B` at `spec` measured with `opts`.
fn measure_spec(spec: &ConfigSpec, opts: &SolveOptions) -> Result<(Arc<Config>, Vec<Complex64>, Vec<Complex64>)> {
    let cfg = Arc::new(spec.validate()?);
    let (a, b) = measure_ab(cfg.clone(), opts)?;
    Ok((cfg, a, b))
}

fn residual(a: &[Complex64], target: &[Complex64]) -> f64 {
    a.iter().zip(target).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// One damped step from a configuration with known `A`, `B`: move by the
/// capped Newton direction, halving while `‖A − A*‖∞` does not decrease.
pub fn newton_step_from(spec: &ConfigSpec, config: &Config, a: &[Complex64], b: &[Complex64], target: &[Complex64], opts: &NewtonOptions) -> Result<NewtonStep> {
    let v = newton_direction(a, b, target, opts.b_min)?;
    let norm = inf_norm(&v);
    let before = residual(a, target);
    if norm == 0.0 {
        return Ok(NewtonStep {
            spec: spec.clone(),
            a: a.to_vec(),
            b: b.to_vec(),
            step_norm: 0.0,
            backtracks: 0,
            capped: false,
        });
    }
    let cap = opts.step_cap * min_separation(config);
    let capped = norm > cap;
    let mut t = if capped { cap / norm } else { 1.0 };
    let mut last = None;
    for k in 0..=opts.max_backtracks {
        let trial = moved_spec(spec, config, &v, t)?;
        match measure_spec(&trial, &opts.solve) {
            Ok((_, a_new, b_new)) => {
                let after = residual(&a_new, target);
                let step = NewtonStep {
                    spec: trial,
                    a: a_new,
                    b: b_new,
                    step_norm: t * norm,
                    backtracks: k,
                    capped,
                };
                if after < before {
                    return Ok(step);
                }
                last = Some(step);
            }
            // an invalid trial configuration counts as a failed step
            Err(Error::InvalidConfig(_)) => {}
            Err(e) => return Err(e),
        }
        t *= 0.5;
    }
    last.ok_or_else(|| Error::Diverged("no valid configuration along the Newton direction".into()))
}

/// One Newton step from `spec` towards the target coefficients.
pub fn newton_step(spec: &ConfigSpec, target: &[Complex64], opts: &NewtonOptions) -> Result<NewtonStep> {
    let (cfg, a, b) = measure_spec(spec, &opts.solve)?;
    newton_step_from(spec, &cfg, &a, &b, target, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonOutcome {
    Converged,
    MaxIterations,
    /// The residual grew three iterations in a row.
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonTrace {
    /// Iterates, starting with the initial configuration.
    pub iterates: Vec<ConfigSpec>,
    /// `‖A − A*‖∞` per iterate.
    pub residuals: Vec<f64>,
    /// Step norms; entry `k` leads from iterate `k` to `k + 1`.
    pub step_norms: Vec<f64>,
    pub backtracks: Vec<usize>,
    pub capped: Vec<bool>,
    pub outcome: NewtonOutcome,
}

impl NewtonTrace {
    /// `residual[k + 1] / residual[k]`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Iterations taken (accepted steps).
    pub fn iterations(&self) -> usize {
        self.step_norms.len()
    }

    /// CSV: iteration, positions, residual, step norm, contraction ratio.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.iterates.first().map_or(0, |s| s.points.len());
        let mut header = String::from("iteration");
        for i in 0..m {
            header.push_str(&format!(",x{i},y{i}"));
        }
        writeln!(w, "{header},residual,step_norm,contraction")?;
        let ratios = self.contraction_ratios();
        for (k, spec) in self.iterates.iter().enumerate() {
            let mut row = format!("{k}");
            for p in &spec.points {
                row.push_str(&format!(",{:e},{:e}", p[0], p[1]));
            }
            let step = self.step_norms.get(k).map_or(String::new(), |s| format!("{s:e}"));
            let ratio = if k > 0 { format!("{:e}", ratios[k - 1]) } else { String::new() };
            writeln!(w, "{row},{:e},{step},{ratio}", self.residuals[k])?;
        }
        Ok(())
    }
}

/// Newton iteration towards `target` until `‖A − A*‖∞ ≤ tol` or
/// `max_iter` steps.
pub fn run_newton(spec0: &ConfigSpec, target: &[Complex64], max_iter: usize, tol: f64, opts: &NewtonOptions) -> Result<NewtonTrace> {
    let (mut cfg, mut a, mut b) = measure_spec(spec0, &opts.solve)?;
    if a.len() != target.len() {
        return Err(Error::InvalidArgument(format!("target has {} values for {} points", target.len(), a.len())));
    }
    let mut spec = spec0.clone();
    let mut trace = NewtonTrace {
        iterates: vec![spec.clone()],
        residuals: vec![residual(&a, target)],
        step_norms: vec![],
        backtracks: vec![],
        capped: vec![],
        outcome: NewtonOutcome::MaxIterations,
    };
    let mut growth = 0;
    loop {
        let r = *trace.residuals.last().expect("nonempty");
        if r <= tol {
            trace.outcome = NewtonOutcome::Converged;
            return Ok(trace);
        }
        if trace.iterations() >= max_iter {
            return Ok(trace);
        }
        let step = newton_step_from(&spec, &cfg, &a, &b, target, opts)?;
        let r_new = residual(&step.a, target);
        growth = if r_new > r { growth + 1 } else { 0 };
        spec = step.spec;
        cfg = Arc::new(spec.validate()?);
        a = step.a;
        b = step.b;
        trace.iterates.push(spec.clone());
        trace.residuals.push(r_new);
        trace.step_norms.push(step.step_norm);
        trace.backtracks.push(step.backtracks);
        trace.capped.push(step.capped);
        if growth >= 3 {
            trace.outcome = NewtonOutcome::Diverged;
            return Ok(trace);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxInverseError {
    /// `‖formula_derivative((2/3)B⁻¹η) − η‖∞`.
    pub error: f64,
    /// `error / (‖A‖∞ ‖η‖∞)`. Since `A` and `B` are both linear in the
    /// class, `error / ‖η‖∞` is invariant under scaling the class and this
    /// ratio scales inversely with it.
    pub ratio: f64,
}

/// How far `(2/3)B⁻¹` is from inverting the derivative on `η`.
pub fn approx_inverse_error(inputs: &DerivativeInputs, eta: &[Complex64], b_min: f64) -> Result<ApproxInverseError> {
    inputs.check(eta.len())?;
    let zero = vec![Complex64::new(0.0, 0.0); eta.len()];
    // the direction whose B-term alone reproduces η
    let v = newton_direction(&zero, &inputs.b, eta, b_min)?;
    let d = formula_derivative(inputs, &v)?;
    let diff: Vec<Complex64> = d.iter().zip(eta).map(|(x, y)| x - y).collect();
    let error = inf_norm(&diff);
    let denom = inf_norm(&inputs.a) * inf_norm(eta);
    // undefined (NaN) when A vanishes identically
    let ratio = if denom > 0.0 { error / denom } else { f64::NAN };
    Ok(ApproxInverseError { error, ratio })
}
