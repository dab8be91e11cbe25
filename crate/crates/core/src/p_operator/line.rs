//! The operator on a straight periodic line in three dimensions, computed by
//! three independent routes: the half-plane Dirichlet-to-Neumann multiplier,
//! a finite-difference strip solve of the reduced equation, and the
//! finite-part integral with the flat kernel `π⁻¹ t⁻²`.

use crate::conventions::{POTENTIAL_FACTOR, FINITE_PART_FACTOR, LINE_P_SIGN};
use crate::error::{Error, Result};
use crate::flat_kernel::{eval_h0, kappa, KernelPoint};
use crate::numerics::{adaptive_gk_real, gauss_legendre};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Periodic samples `σ(t_j)`, `t_j = j T / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSamples {
    pub period: f64,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineMethod {
    Multiplier,
    StripSolve,
    FinitePart,
}

impl LineSamples {
    pub fn new(period: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
        }
        if values.len() < 8 {
            return Err(Error::InvalidArgument("at least 8 samples are needed".into()));
        }
        Ok(Self { period, values })
    }

    /// Samples of a function on `[0, T)`.
    pub fn from_fn(period: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(period, (0..n).map(|j| f(j as f64 * period / n as f64)).collect())
    }

    /// The Fourier mode `e^{2πikt/T}`.
    pub fn mode(period: f64, n: usize, k: i64) -> Result<Self> {
        Self::from_fn(period, n, |t| Complex64::from_polar(1.0, 2.0 * PI * k as f64 * t / period))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.values.len() as f64
    }

    /// Angular wavenumber of FFT bin `k`.
    fn wavenumber(&self, k: usize) -> f64 {
        let n = self.len();
        let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        2.0 * PI * signed / self.period
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf
    }

    fn from_spectrum(&self, mut spec: Vec<Complex64>) -> Self {
        let n = spec.len();
        FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
        let inv = 1.0 / n as f64;
        Self {
            period: self.period,
            values: spec.into_iter().map(|v| v * inv).collect(),
        }
    }

    fn map_modes(&self, f: impl Fn(f64) -> Complex64) -> Self {
        let spec: Vec<Complex64> = self.spectrum().into_iter().enumerate().map(|(k, c)| c * f(self.wavenumber(k))).collect();
        self.from_spectrum(spec)
    }

    /// `⟨σ, τ⟩ = Σ Re(σ̄ τ)·spacing`.
    pub fn inner(&self, other: &LineSamples) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a.conj() * b).re).sum::<f64>() * self.spacing()
    }
}

/// Half-plane Dirichlet-to-Neumann multiplier: mode `ξ` is multiplied by
/// `LINE_P_SIGN · |ξ|`.
pub fn p_line_multiplier(sigma: &LineSamples) -> LineSamples {
    sigma.map_modes(|xi| Complex64::new(LINE_P_SIGN * xi.abs(), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripOptions {
    /// Strip depth; defaults to `3T`.
    pub r_max: Option<f64>,
    /// Grid steps per decay length `1/|ξ|` in the normal direction.
    pub steps_per_decay: f64,
}

impl Default for StripOptions {
    fn default() -> Self {
        Self {
            r_max: None,
            steps_per_decay: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub values: LineSamples,
    pub r_max: f64,
    /// `e^{-2π R_max / T}`: the relative effect of the far wall on mode 1.
    pub truncation_bound: f64,
}

/// Profile of one mode of the reduced equation `g'' = ξ² g` on `[0, R]` with
/// `g(0) = 1`, `g(R) = 0`, by second-order finite differences. Returns the
/// one-sided second-order derivative at 0 and the value at `r_eval` (a node).
fn mode_profile(xi: f64, r_max: f64, steps_per_decay: f64, r_eval: Option<f64>) -> (f64, f64) {
    let xi = xi.abs();
    // beyond 40 decay lengths the mode is zero to machine precision
    let mut len = if xi > 0.0 { (40.0 / xi).min(r_max) } else { r_max };
    let mut dr = if xi > 0.0 { 1.0 / (xi * steps_per_decay) } else { len / 64.0 };
    if let Some(re) = r_eval {
        len = len.max(2.0 * re).min(r_max.max(re));
        dr = dr.min(re / 16.0);
        dr = re / (re / dr).ceil();
    }
    let n = ((len / dr).ceil() as usize).max(4);
    let dr = if r_eval.is_some() { dr } else { len / n as f64 };
    // interior nodes 1..n-1, Thomas algorithm on -g_{i-1} + (2 + ξ²dr²) g_i - g_{i+1} = 0
    let diag = 2.0 + xi * xi * dr * dr;
    let m = n - 1;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for i in 0..m {
        let rhs = if i == 0 { 1.0 } else { 0.0 };
        let denom = if i == 0 { diag } else { diag + c[i - 1] };
        c[i] = -1.0 / denom;
        d[i] = (rhs + if i == 0 { 0.0 } else { d[i - 1] }) / denom;
    }
    let mut g = vec![0.0; n + 1];
    g[0] = 1.0;
    for i in (0..m).rev() {
        g[i + 1] = d[i] - c[i] * g[i + 2];
    }
    let deriv = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * dr);
    let at = r_eval.map_or(0.0, |re| {
        let k = (re / dr).round() as usize;
        if k <= n {
            g[k]
        } else {
            0.0
        }
    });
    (deriv, at)
}

/// Strip route: solves the reduced equation on `r ∈ (0, R_max]`, `t`
/// periodic, `g(0, t) = σ(t)`, `g(R_max, t) = 0` (spectral in `t`, finite
/// differences in `r`) and returns `∂g/∂r` at `r = 0`.
pub fn p_line_strip(sigma: &LineSamples, opts: &StripOptions) -> Result<StripReport> {
    let t = sigma.period;
    let r_max = opts.r_max.unwrap_or(3.0 * t);
    if r_max < 3.0 * t / (2.0 * PI) {
        return Err(Error::InvalidArgument(format!(
            "strip depth {r_max} is below 3T/2π = {:.4}: mode 1 is not resolved",
            3.0 * t / (2.0 * PI)
        )));
    }
    let values = sigma.map_modes(|xi| Complex64::new(mode_profile(xi, r_max, opts.steps_per_decay, None).0, 0.0));
    Ok(StripReport {
        values,
        r_max,
        truncation_bound: (-2.0 * PI * r_max / t).exp(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePartOptions {
    /// Cutoffs as multiples of the sample spacing, decreasing by halves.
    pub delta_multiples: Vec<f64>,
    /// Gauss-Legendre points per panel.
    pub order: usize,
}

impl Default for FinitePartOptions {
    fn default() -> Self {
        Self {
            delta_multiples: vec![16.0, 8.0, 4.0],
            order: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePartReport {
    /// Extrapolated values (including the `π` prefactor).
    pub values: LineSamples,
    pub deltas: Vec<f64>,
    /// Values at each cutoff.
    pub per_delta: Vec<LineSamples>,
    /// Largest change between the last two extrapolation stages.
    pub extrapolation_error: f64,
    /// `e(δ)/e(δ/2)` for successive cutoffs, `e` measured from the final value.
    pub halving_ratios: Vec<f64>,
}

/// Truncated integral `∫_{|τ| ≥ δ} γ(τ) σ(t + τ) dτ` over the whole line for
/// periodic `σ`, via the periodized kernel, at every sample point.
fn truncated_integral(sigma: &LineSamples, delta: f64, order: usize) -> Vec<Complex64> {
    let t = sigma.period;
    let s = sigma.spacing();
    let gl = gauss_legendre(order);
    // panels on [δ, T/2]: geometric up to width 2s, uniform after
    let mut edges = vec![delta];
    let mut x = delta;
    while x < 0.5 * t {
        let w = (0.5 * x).min(2.0 * s);
        x = (x + w).min(0.5 * t);
        edges.push(x);
    }
    // the periodized kernel also drops |τ - nT| < δ for n ≠ 0; the panel
    // [0, δ] with kernel K_per - τ⁻² restores those windows
    let restore = |tau: f64| (PI / t).powi(2) / (PI * tau / t).sin().powi(2) - 1.0 / (tau * tau);
    let mut panels: Vec<(f64, f64, bool)> = (0..4).map(|q| (delta * q as f64 / 4.0, delta * (q + 1) as f64 / 4.0, true)).collect();
    panels.extend(edges.windows(2).map(|p| (p[0], p[1], false)));
    let spec = sigma.spectrum();
    let n = sigma.len();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let k3 = 1.0 / PI;
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    for (a, b, inner) in panels {
        for (xq, wq) in gl.nodes.iter().zip(&gl.weights) {
            let tau = 0.5 * (a + b) + 0.5 * (b - a) * xq;
            // Σ_n (τ + nT)^{-2} = (π/T)² / sin²(πτ/T)
            let kern = if inner { k3 * restore(tau) } else { k3 * (PI / t).powi(2) / (PI * tau / t).sin().powi(2) };
            let w = 0.5 * (b - a) * wq * kern;
            // σ(t + τ) + σ(t - τ) on the sample grid via the trigonometric interpolant
            let mut buf: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(k, c)| c * (2.0 * (sigma.wavenumber(k) * tau).cos()))
                .collect();
            ifft.process(&mut buf);
            for (o, v) in acc.iter_mut().zip(&buf) {
                *o += v * (w / n as f64);
            }
        }
    }
    acc
}

/// Finite-part route: `π[∫_{|t1-t2| ≥ δ} γ σ - 2κ3 δ⁻¹ σ(t1)]` for each cutoff,
/// followed by two-stage Richardson extrapolation in `δ` (errors are odd in δ).
pub fn p_line_finite_part(sigma: &LineSamples, opts: &FinitePartOptions) -> Result<FinitePartReport> {
    let s = sigma.spacing();
    let m = &opts.delta_multiples;
    if m.len() != 3 {
        return Err(Error::InvalidArgument("the δ-sequence must have three halving steps".into()));
    }
    if m.iter().any(|&d| d < 4.0) {
        return Err(Error::InvalidArgument("every δ must be at least 4 sample spacings".into()));
    }
    if m.windows(2).any(|w| (w[0] / w[1] - 2.0).abs() > 1e-12) {
        return Err(Error::InvalidArgument("the δ-sequence must halve at each step".into()));
    }
    if m[0] * s >= 0.25 * sigma.period {
        return Err(Error::InvalidArgument("largest δ must stay below a quarter period".into()));
    }
    let k3 = kappa(3)?;
    let deltas: Vec<f64> = m.iter().map(|d| d * s).collect();
    let per: Vec<Vec<Complex64>> = deltas
        .iter()
        .map(|&d| {
            truncated_integral(sigma, d, opts.order)
                .into_iter()
                .zip(&sigma.values)
                .map(|(i, v)| (i - v * (2.0 * k3 / d)) * PI)
                .collect()
        })
        .collect();
    let n = sigma.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut err: f64 = 0.0;
    for j in 0..n {
        let r1a = per[1][j] * 2.0 - per[0][j];
        let r1b = per[2][j] * 2.0 - per[1][j];
        let r2 = (r1b * 8.0 - r1a) / 7.0;
        out[j] = r2;
        err = err.max((r2 - r1b).norm());
    }
    // cutoff errors at roundoff relative to the counterterm carry no order
    let counter = sigma.values.iter().map(|v| v.norm()).fold(0.0, f64::max) * 2.0 / deltas[0];
    let e: Vec<f64> = per
        .iter()
        .map(|p| p.iter().zip(&out).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    let halving_ratios: Vec<f64> = e.windows(2).map(|w| w[0] / w[1].max(1e-300)).collect();
    if e[0] > 1e-9 * counter && halving_ratios.iter().any(|&r| r < 1.8) {
        return Err(Error::NonMonotone(format!(
            "δ-halving reduced the cutoff error by only {halving_ratios:?}; the extrapolation is not converging"
        )));
    }
    let wrap = |v: Vec<Complex64>| LineSamples {
        period: sigma.period,
        values: v,
    };
    Ok(FinitePartReport {
        values: wrap(out),
        deltas,
        per_delta: per.into_iter().map(wrap).collect(),
        extrapolation_error: err,
        halving_ratios,
    })
}

/// Applies one route to `σ`.
pub fn apply_line(method: LineMethod, sigma: &LineSamples) -> Result<LineSamples> {
    match method {
        LineMethod::Multiplier => Ok(p_line_multiplier(sigma)),
        LineMethod::StripSolve => Ok(p_line_strip(sigma, &StripOptions::default())?.values),
        LineMethod::FinitePart => Ok(p_line_finite_part(sigma, &FinitePartOptions::default())?.values),
    }
}

/// Eigenvalue of a route on mode `k`: the least-squares ratio output/input.
pub fn line_eigenvalue(method: LineMethod, period: f64, n: usize, k: i64) -> Result<f64> {
    let sigma = LineSamples::mode(period, n, k)?;
    let out = apply_line(method, &sigma)?;
    let num: Complex64 = sigma.values.iter().zip(&out.values).map(|(a, b)| a.conj() * b).sum();
    Ok(num.re / n as f64)
}

/// Constants relating the three routes, measured on modes 1, 2 and 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineCalibration {
    pub period: f64,
    pub modes: Vec<i64>,
    pub multiplier: Vec<f64>,
    pub strip: Vec<f64>,
    pub finite_part: Vec<f64>,
    /// Mean of strip / multiplier (expected 1 after the sign convention).
    pub strip_over_multiplier: f64,
    /// Mean of finite part / strip.
    pub finite_part_over_strip: f64,
    /// Slope of |strip eigenvalue| against k, divided by 2π/T.
    pub slope_ratio: f64,
}

impl LineCalibration {
    /// Compares measured constants with the frozen ledger values.
    pub fn matches_ledger(&self, tol: f64) -> bool {
        (self.strip_over_multiplier - 1.0).abs() <= tol && (self.finite_part_over_strip / FINITE_PART_FACTOR - 1.0).abs() <= tol
    }

    /// Finite-part eigenvalues after dividing out the ledger factor.
    pub fn finite_part_calibrated(&self) -> Vec<f64> {
        self.finite_part.iter().map(|v| v / FINITE_PART_FACTOR).collect()
    }
}

pub fn calibrate_line_model(period: f64, n: usize) -> Result<LineCalibration> {
    let modes = vec![1, 2, 4];
    let ev = |m: LineMethod| -> Result<Vec<f64>> { modes.iter().map(|&k| line_eigenvalue(m, period, n, k)).collect() };
    let multiplier = ev(LineMethod::Multiplier)?;
    let strip = ev(LineMethod::StripSolve)?;
    let finite_part = ev(LineMethod::FinitePart)?;
    let mean = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x / y).sum::<f64>() / a.len() as f64;
    let ks: Vec<f64> = modes.iter().map(|&k| k as f64).collect();
    let mk = ks.iter().sum::<f64>() / 3.0;
    let mv = strip.iter().map(|v| v.abs()).sum::<f64>() / 3.0;
    let slope = ks.iter().zip(&strip).map(|(k, v)| (k - mk) * (v.abs() - mv)).sum::<f64>() / ks.iter().map(|k| (k - mk).powi(2)).sum::<f64>();
    Ok(LineCalibration {
        period,
        strip_over_multiplier: mean(&strip, &multiplier),
        finite_part_over_strip: mean(&finite_part, &strip),
        slope_ratio: slope / (2.0 * PI / period),
        modes,
        multiplier,
        strip,
        finite_part,
    })
}

/// One evaluation point `q = (z, t)` off the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialPoint {
    pub z: Complex64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub points: Vec<PotentialPoint>,
    /// `Q(q)` from the strip solve.
    pub strip: Vec<f64>,
    /// `π ∫ Re(conj(h0(q - t2)) σ(t2)) dt2`.
    pub kernel: Vec<f64>,
    /// kernel / strip per point.
    pub ratios: Vec<f64>,
    /// Largest |ratio / POTENTIAL_FACTOR - 1|.
    pub max_relative_error: f64,
}

/// Compares the strip-solved section `Q(q) = Re(z^{-1/2} g(|z|, t))` with the
/// kernel representation `π ∫ h0(q - t2) σ(t2) dt2` for a real `σ` supported
/// in `[-support, support]`. The strip is periodized with a long period so
/// images contribute below the reported error.
pub fn check_potential_quadrature<F>(sigma: F, support: f64, points: &[PotentialPoint]) -> Result<PotentialReport>
where
    F: Fn(f64) -> f64,
{
    if points.is_empty() {
        return Err(Error::InvalidArgument("no evaluation points".into()));
    }
    let r = points[0].z.norm();
    if points.iter().any(|p| (p.z.norm() - r).abs() > 1e-12 * r) || r == 0.0 {
        return Err(Error::InvalidArgument("evaluation points must share one positive distance from the line".into()));
    }
    // kernel route
    let mut kernel = Vec::with_capacity(points.len());
    for p in points {
        let f = |t2: f64| -> f64 {
            let h = eval_h0(&KernelPoint::n3(p.z, p.t - t2)).map(|v| v.value).unwrap_or_default();
            h.re * sigma(t2)
        };
        kernel.push(PI * adaptive_gk_real(f, -support, support, 1e-14, 1e-11)?);
    }
    // strip route on a long period
    let period = 1024.0 * support.max(r);
    let n: usize = 1 << 15;
    let samples = LineSamples::from_fn(period, n, |t| {
        let tt = if t > 0.5 * period { t - period } else { t };
        Complex64::new(if tt.abs() < support { sigma(tt) } else { 0.0 }, 0.0)
    })?;
    let spec = samples.spectrum();
    let r_max = period;
    let prof: Vec<f64> = (0..n)
        .map(|k| {
            let xi = samples.wavenumber(k);
            // e^{-40} is below double precision relative to the low modes
            if xi.abs() * r > 40.0 {
                0.0
            } else {
                mode_profile(xi, r_max, 50.0, Some(r)).1
            }
        })
        .collect();
    let mut strip = Vec::with_capacity(points.len());
    for p in points {
        let mut g = Complex64::new(0.0, 0.0);
        for k in 0..n {
            g += spec[k] * prof[k] * Complex64::from_polar(1.0, samples.wavenumber(k) * p.t);
        }
        g /= n as f64;
        strip.push((p.z.sqrt().inv() * g).re);
    }
    let ratios: Vec<f64> = kernel.iter().zip(&strip).map(|(k, s)| k / s).collect();
    let max_relative_error = ratios.iter().map(|q| (q / POTENTIAL_FACTOR - 1.0).abs()).fold(0.0, f64::max);
    Ok(PotentialReport {
        points: points.to_vec(),
        strip,
        kernel,
        ratios,
        max_relative_error,
    })
}
