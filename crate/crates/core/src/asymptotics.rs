//! Extraction of the branch-point coefficients `A` (of `s = z^{1/2}`) and `B`
//! (of `s³`) by least squares on an annulus.

use crate::domain::{Config, NodeKind};
use crate::error::{Error, Result};
use crate::numerics::{loglog_fit, LogLogFit};
use crate::solver::{SectionKind, TwistedField};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const MIN_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ABCoefficients {
    pub a: Complex64,
    pub b: Complex64,
    /// RMS misfit of the returned coefficients over the samples.
    pub residual: f64,
    pub annulus: (f64, f64),
    pub samples: usize,
    /// Least-squares standard errors (modulus) of `a` and `b`.
    pub a_stderr: f64,
    pub b_stderr: f64,
}

/// Sample weighting over the annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
    /// `sin²` window in the radius, vanishing on both rims; makes the fit a
    /// continuous function of the point position.
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    /// Mean-curvature vector `μ` (zero for point branch sets). A non-zero value
    /// multiplies the `A` basis by `1 - ½ Re(μ̄ z)`.
    pub mu: Complex64,
    /// Number of nuisance terms `s⁵, s⁷, …` fitted alongside and discarded.
    /// Zero reproduces the two-term expansion, whose residual measures the
    /// `O(r^{5/2})` remainder.
    pub extra_terms: usize,
}

/// Fits `value ≈ Re(σ s^{-1}) + Re(A s)(1 - ½Re(μ̄ z)) + Re(B s³)` with `σ`
/// known, given per-sample displacements `z` and roots `s`.
pub fn fit_samples(
    z: &[Complex64],
    s: &[Complex64],
    values: &[f64],
    sigma: Complex64,
    annulus: (f64, f64),
    opts: &FitOptions,
) -> Result<ABCoefficients> {
    let n = values.len();
    if z.len() != n || s.len() != n {
        return Err(Error::InvalidArgument("sample arrays differ in length".into()));
    }
    let cols = 4 + 2 * opts.extra_terms;
    if n < cols {
        return Err(Error::IllConditioned(format!("{n} samples for {cols} unknowns")));
    }
    let (r1, r2) = annulus;
    let mut m = DMatrix::<f64>::zeros(n, cols);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut w = vec![1.0; n];
    for k in 0..n {
        if opts.weighting == Weighting::Window {
            let t = (z[k].norm() - r1) / (r2 - r1);
            w[k] = (std::f64::consts::PI * t.clamp(0.0, 1.0)).sin().powi(2);
        }
        let sw = w[k].sqrt();
        let mu_factor = 1.0 - 0.5 * (opts.mu.conj() * z[k]).re;
        let s1 = s[k];
        let s3 = s1 * s1 * s1;
        m[(k, 0)] = sw * s1.re * mu_factor;
        m[(k, 1)] = -sw * s1.im * mu_factor;
        m[(k, 2)] = sw * s3.re;
        m[(k, 3)] = -sw * s3.im;
        let mut sp = s3;
        for e in 0..opts.extra_terms {
            sp *= s1 * s1;
            m[(k, 4 + 2 * e)] = sw * sp.re;
            m[(k, 5 + 2 * e)] = -sw * sp.im;
        }
        rhs[k] = sw * (values[k] - (sigma / s1).re);
    }
    // column scaling before the SVD keeps the conditioning test meaningful
    let scale: Vec<f64> = (0..cols).map(|j| m.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for j in 0..cols {
        let sj = scale[j];
        m.column_mut(j).scale_mut(1.0 / sj);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::IllConditioned(format!(
            "normal equations have condition {:.3e}; the annulus is too thin or too sparse",
            smax / smin
        )));
    }
    let x = svd.solve(&rhs, 0.0).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let coef: Vec<f64> = (0..cols).map(|j| x[j] / scale[j]).collect();
    let a = Complex64::new(coef[0], coef[1]);
    let b = Complex64::new(coef[2], coef[3]);

    // unweighted RMS misfit
    let mut ss = 0.0;
    let mut wss = 0.0;
    for k in 0..n {
        let mu_factor = 1.0 - 0.5 * (opts.mu.conj() * z[k]).re;
        let s1 = s[k];
        let mut model = (sigma / s1).re + (a * s1).re * mu_factor + (b * s1 * s1 * s1).re;
        let mut sp = s1 * s1 * s1;
        for e in 0..opts.extra_terms {
            sp *= s1 * s1;
            model += (Complex64::new(coef[4 + 2 * e], coef[5 + 2 * e]) * sp).re;
        }
        let e = values[k] - model;
        ss += e * e;
        wss += w[k] * e * e;
    }
    let residual = (ss / n as f64).sqrt();
    // covariance σ²(MᵀM)⁻¹ in scaled coordinates
    let sigma2 = wss / (n as f64 - cols as f64).max(1.0);
    let vt = svd.v_t.as_ref().expect("requested");
    let var = |j: usize| -> f64 {
        let mut v = 0.0;
        for k in 0..cols {
            let sv = svd.singular_values[k];
            v += (vt[(k, j)] / sv).powi(2);
        }
        sigma2 * v / (scale[j] * scale[j])
    };
    Ok(ABCoefficients {
        a,
        b,
        residual,
        annulus,
        samples: n,
        a_stderr: (var(0) + var(1)).sqrt(),
        b_stderr: (var(2) + var(3)).sqrt(),
    })
}

/// Default annulus about point `i`: `r1 = max(10h, r_c)`, `r2 = 2 r1`, with
/// `r2` clipped to the clear radius of the point. When the clipping leaves a
/// ratio below 1.5 (coarse grids), `r1` falls back to `r2 / 2`.
pub fn default_annulus(config: &Config, i: usize) -> (f64, f64) {
    let r1 = (10.0 * config.spacing()).max(config.cutoff_radius());
    let r2 = (2.0 * r1).min(0.98 * config.clear_radius(i));
    if r2 < 1.5 * r1 {
        (0.5 * r2, r2)
    } else {
        (r1, r2)
    }
}

/// Grid samples of a field on an annulus about point `i`: displacements and
/// values with the fixed-point constant of an affine section removed.
pub fn annulus_samples(field: &TwistedField, i: usize, annulus: (f64, f64)) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let cfg = &field.config;
    let (r1, r2) = annulus;
    if !(r1 >= 0.0 && r2 > r1) {
        return Err(Error::InvalidArgument(format!("bad annulus ({r1}, {r2})")));
    }
    let clear = cfg.clear_radius(i);
    if r2 > clear {
        return Err(Error::InvalidArgument(format!(
            "annulus radius {r2:.4} about point {i} reaches other geometry (clear radius {clear:.4})"
        )));
    }
    let g = &cfg.grid;
    let p = cfg.points[i].position;
    let offset = if field.kind == SectionKind::Affine { cfg.fixed_value(i) } else { 0.0 };
    let rel = p - g.origin;
    let span = (r2 / g.h).ceil() as i64 + 1;
    let ci = (rel.re / g.h).floor() as i64;
    let cj = (rel.im / g.h).floor() as i64;
    let mut zs = Vec::new();
    let mut vs = Vec::new();
    for dj in -span..=span {
        for di in -span..=span {
            let (mut ii, mut jj) = (ci + di, cj + dj);
            if g.periodic {
                ii = ii.rem_euclid(g.nx as i64);
                jj = jj.rem_euclid(g.ny as i64);
            } else if ii < 0 || jj < 0 || ii >= g.nx as i64 || jj >= g.ny as i64 {
                continue;
            }
            let node = g.node(ii as usize, jj as usize);
            if g.kind[node] != NodeKind::Unknown {
                continue;
            }
            let d = cfg.displacement(p, g.position(node));
            let r = d.norm();
            if r >= r1 && r <= r2 {
                zs.push(d);
                vs.push(field.node_value(node) - offset);
            }
        }
    }
    Ok((zs, vs))
}

fn fit_field(field: &TwistedField, i: usize, sigma: Complex64, annulus: (f64, f64), opts: &FitOptions) -> Result<ABCoefficients> {
    let (zs, vs) = annulus_samples(field, i, annulus)?;
    if zs.len() < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "annulus ({:.4}, {:.4}) holds {} nodes, fewer than {MIN_SAMPLES}",
            annulus.0,
            annulus.1,
            zs.len()
        )));
    }
    let ss: Vec<Complex64> = zs.iter().map(|&d| field.config.local_sqrt(i, d)).collect();
    fit_samples(&zs, &ss, &vs, sigma, annulus, opts)
}

/// `A` and `B` of a field at point `i` on `annulus`.
pub fn fit_ab(field: &TwistedField, i: usize, annulus: (f64, f64)) -> Result<ABCoefficients> {
    fit_field(field, i, Complex64::new(0.0, 0.0), annulus, &FitOptions::default())
}

/// As [`fit_ab`], after removing the known singular part `Re(σ s^{-1})`. The
/// returned `a` is the value of `Pσ` at this point.
pub fn fit_with_singular(field: &TwistedField, i: usize, sigma: Complex64, annulus: (f64, f64)) -> Result<ABCoefficients> {
    fit_field(field, i, sigma, annulus, &FitOptions::default())
}

/// Nuisance terms used by [`extract_ab`].
pub const EXTRACTION_EXTRA_TERMS: usize = 2;

/// Best estimate of the local coefficients at point `i`: default annulus, known
/// singular part removed, and [`EXTRACTION_EXTRA_TERMS`] higher odd powers
/// fitted as nuisance terms so the annulus remainder does not bias `A`, `B`.
pub fn extract_ab(field: &TwistedField, i: usize, sigma: Complex64) -> Result<ABCoefficients> {
    let opts = FitOptions {
        extra_terms: EXTRACTION_EXTRA_TERMS,
        ..Default::default()
    };
    fit_field(field, i, sigma, default_annulus(&field.config, i), &opts)
}

pub fn fit_with_options(field: &TwistedField, i: usize, sigma: Complex64, annulus: (f64, f64), opts: &FitOptions) -> Result<ABCoefficients> {
    fit_field(field, i, sigma, annulus, opts)
}

/// Rays per circle in [`decay_exponent`].
pub const DECAY_RAYS: usize = 128;

/// Log-log slope of `max |φ - φ(p_i)|` over circles about point `i` against
/// the radius, with the field interpolated on [`DECAY_RAYS`] rays.
pub fn decay_exponent(field: &TwistedField, i: usize, radii: &[f64]) -> Result<LogLogFit> {
    let cfg = &field.config;
    let p = cfg.points[i].position;
    let offset = if field.kind == SectionKind::Affine { cfg.fixed_value(i) } else { 0.0 };
    let peaks: Vec<f64> = radii
        .iter()
        .map(|&r| {
            if r <= 0.0 || r >= cfg.clear_radius(i) {
                return Err(Error::InvalidArgument(format!("radius {r:.4} is not inside the clear disk of point {i}")));
            }
            (0..DECAY_RAYS).try_fold(0.0f64, |m, k| {
                let th = std::f64::consts::TAU * (k as f64 + 0.5) / DECAY_RAYS as f64;
                Ok(m.max((field.eval(p + Complex64::from_polar(r, th))? - offset).abs()))
            })
        })
        .collect::<Result<_>>()?;
    loglog_fit(radii, &peaks)
}

/// Log-log slope of the two-term fit residual against the outer radius over
/// annuli `(r2 / 2, r2)`; the remainder predicts `5/2`.
pub fn residual_exponent(field: &TwistedField, i: usize, outer_radii: &[f64]) -> Result<LogLogFit> {
    let residuals: Vec<f64> = outer_radii
        .iter()
        .map(|&r2| fit_ab(field, i, (0.5 * r2, r2)).map(|f| f.residual))
        .collect::<Result<_>>()?;
    loglog_fit(outer_radii, &residuals)
}

/// Observed convergence of a coefficient sequence on refined grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OrderEstimate {
    /// Differences at roundoff level: no order can be measured.
    Exact,
    Measured {
        /// `log(|v0 - v1| / |v1 - v2|) / log(ratio)` from the finest triple.
        richardson: f64,
        /// Log-log slope of successive difference magnitudes against `h`.
        slope: f64,
        /// 95% half-width of the slope (0 with only two differences).
        slope_ci95: f64,
        /// Richardson-extrapolated limit using the measured order.
        extrapolated: Complex64,
        /// Successive differences change direction: the extrapolated limit is
        /// then only indicative.
        oscillating: bool,
    },
}

/// Order estimate from values on grids `hs` (coarse to fine, constant ratio).
/// Sequences whose successive differences fail to shrink are reported as
/// [`Error::NonMonotone`] rather than fitted.
pub fn convergence_order(hs: &[f64], values: &[Complex64]) -> Result<OrderEstimate> {
    let n = hs.len();
    if n < 3 || values.len() != n {
        return Err(Error::InvalidArgument("convergence order needs at least 3 resolutions".into()));
    }
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let diffs: Vec<Complex64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    if diffs.iter().all(|d| d.norm() <= 1e-13 * scale) {
        return Ok(OrderEstimate::Exact);
    }
    let mut oscillating = false;
    for w in diffs.windows(2) {
        if w[1].norm() >= w[0].norm() {
            return Err(Error::NonMonotone(format!(
                "successive differences {:.3e} then {:.3e} do not shrink",
                w[0].norm(),
                w[1].norm()
            )));
        }
        oscillating |= (w[0] * w[1].conj()).re <= 0.0;
    }
    let ratio = hs[n - 2] / hs[n - 1];
    let d0 = diffs[n - 3].norm();
    let d1 = diffs[n - 2].norm();
    let richardson = (d0 / d1).ln() / ratio.ln();
    let fit = loglog_fit(&hs[..n - 1], &diffs.iter().map(|d| d.norm()).collect::<Vec<_>>())?;
    let extrapolated = values[n - 1] + diffs[n - 2] * (-1.0 / (ratio.powf(richardson) - 1.0));
    Ok(OrderEstimate::Measured {
        richardson,
        slope: fit.slope,
        slope_ci95: fit.slope_ci95,
        extrapolated,
        oscillating,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn annulus_points(r1: f64, r2: f64, n: usize) -> Vec<Complex64> {
        let mut out = Vec::new();
        for k in 0..n {
            let r = r1 + (r2 - r1) * ((k * 7919) % n) as f64 / n as f64;
            let th = 2.0 * PI * (k as f64 + 0.5) / n as f64 - PI;
            out.push(Complex64::from_polar(r, th));
        }
        out
    }

    fn roots(z: &[Complex64]) -> Vec<Complex64> {
        z.iter().map(|w| w.sqrt()).collect()
    }

    fn fit(z: &[Complex64], f: impl Fn(Complex64) -> f64, sigma: Complex64) -> ABCoefficients {
        let s = roots(z);
        let v: Vec<f64> = s.iter().map(|&x| f(x)).collect();
        fit_samples(z, &s, &v, sigma, (0.1, 0.2), &FitOptions::default()).unwrap()
    }

    #[test]
    fn pure_half_power() {
        let z = annulus_points(0.1, 0.2, 400);
        let c = fit(&z, |s| s.re, Complex64::new(0.0, 0.0));
        assert!((c.a - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(c.b.norm() < 1e-12);
        assert!(c.residual < 1e-14);
    }

    #[test]
    fn pure_three_halves_power() {
        let z = annulus_points(0.1, 0.2, 400);
        let b = Complex64::new(2.0, 1.0);
        let c = fit(&z, |s| (b * s * s * s).re, Complex64::new(0.0, 0.0));
        assert!(c.a.norm() < 1e-12);
        assert!((c.b - b).norm() < 1e-12);
    }

    #[test]
    fn singular_part_is_removed() {
        let z = annulus_points(0.1, 0.2, 400);
        let one = Complex64::new(1.0, 0.0);
        let c = fit(&z, |s| (one / s).re, one);
        assert!(c.a.norm() < 1e-12 && c.b.norm() < 1e-12);
        let c = fit(&z, |s| (one / s + 3.0 * s).re, one);
        assert!((c.a - Complex64::new(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn remainder_is_orthogonal_on_full_circles() {
        // an s⁵ term hardly biases A on a uniformly sampled annulus
        let z = annulus_points(0.1, 0.2, 2000);
        let c = fit(&z, |s| (s + s.powi(5) * 4.0).re, Complex64::new(0.0, 0.0));
        assert!((c.a - 1.0).norm() < 1e-3);
        assert!(c.residual > 1e-3);
    }

    #[test]
    fn nuisance_terms_absorb_the_remainder() {
        let z = annulus_points(0.1, 0.2, 2000);
        let s = roots(&z);
        let v: Vec<f64> = s.iter().map(|x| (x + x.powi(3) * 0.5 + x.powi(5) * 4.0 - x.powi(7)).re).collect();
        let o = FitOptions { extra_terms: 2, ..Default::default() };
        let c = fit_samples(&z, &s, &v, Complex64::new(0.0, 0.0), (0.1, 0.2), &o).unwrap();
        assert!((c.a - 1.0).norm() < 1e-9 && (c.b - 0.5).norm() < 1e-8);
        assert!(c.residual < 1e-13);
    }

    #[test]
    fn thin_annulus_is_flagged() {
        let z = vec![Complex64::new(0.1, 0.0); 300];
        let s = roots(&z);
        let v = vec![1.0; 300];
        assert!(matches!(
            fit_samples(&z, &s, &v, Complex64::new(0.0, 0.0), (0.1, 0.1), &FitOptions::default()),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn mean_curvature_term_enters_the_basis() {
        let z = annulus_points(0.1, 0.2, 400);
        let mu = Complex64::new(0.4, -0.3);
        let a = Complex64::new(1.5, -0.5);
        let s = roots(&z);
        let v: Vec<f64> = z.iter().zip(&s).map(|(zz, ss)| (a * ss).re * (1.0 - 0.5 * (mu.conj() * zz).re)).collect();
        let c = fit_samples(&z, &s, &v, Complex64::new(0.0, 0.0), (0.1, 0.2), &FitOptions { mu, ..Default::default() }).unwrap();
        assert!((c.a - a).norm() < 1e-12);
    }

    #[test]
    fn convergence_orders() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let v: Vec<Complex64> = hs.iter().map(|h| Complex64::new(1.0 + 0.3 * h * h, -2.0 * h * h)).collect();
        match convergence_order(&hs, &v).unwrap() {
            OrderEstimate::Measured { richardson, slope, extrapolated, oscillating, .. } => {
                assert!(!oscillating);
                assert!((richardson - 2.0).abs() < 1e-9);
                assert!((slope - 2.0).abs() < 1e-9);
                assert!((extrapolated - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
            e => panic!("{e:?}"),
        }
        let exact = vec![Complex64::new(1.0, 2.0); 3];
        assert_eq!(convergence_order(&hs[..3], &exact).unwrap(), OrderEstimate::Exact);
        let zigzag = [Complex64::new(1.0, 0.0), Complex64::new(1.1, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(convergence_order(&hs[..3], &zigzag), Err(Error::NonMonotone(_))));
        let damped = [Complex64::new(1.0, 0.0), Complex64::new(1.1, 0.0), Complex64::new(1.05, 0.0)];
        match convergence_order(&hs[..3], &damped).unwrap() {
            OrderEstimate::Measured { oscillating, richardson, .. } => assert!(oscillating && (richardson - 1.0).abs() < 1e-9),
            e => panic!("{e:?}"),
        }
    }

    proptest! {
        #[test]
        fn fit_is_linear(ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let z = annulus_points(0.1, 0.2, 300);
            let s = roots(&z);
            let f: Vec<f64> = s.iter().map(|x| (Complex64::new(ar, ai) * x).re + x.im * x.re * 0.3).collect();
            let g: Vec<f64> = s.iter().map(|x| (Complex64::new(br, 0.5) * x * x * x).re + x.norm_sqr()).collect();
            let h: Vec<f64> = f.iter().zip(&g).map(|(a, b)| alpha * a + beta * b).collect();
            let o = FitOptions::default();
            let cf = fit_samples(&z, &s, &f, Complex64::new(0.0, 0.0), (0.1, 0.2), &o).unwrap();
            let cg = fit_samples(&z, &s, &g, Complex64::new(0.0, 0.0), (0.1, 0.2), &o).unwrap();
            let ch = fit_samples(&z, &s, &h, Complex64::new(0.0, 0.0), (0.1, 0.2), &o).unwrap();
            prop_assert!((ch.a - (cf.a * alpha + cg.a * beta)).norm() < 1e-10);
            prop_assert!((ch.b - (cf.b * alpha + cg.b * beta)).norm() < 1e-9);
        }

        #[test]
        fn rotation_equivariance(alpha in -1.5f64..1.5, ar in -2.0f64..2.0, br in -2.0f64..2.0) {
            // the field Re(A z^{1/2} + B z^{3/2}) written in the coordinate w = e^{iα} z
            let a = Complex64::new(ar, 0.7);
            let b = Complex64::new(br, -0.4);
            let rot = Complex64::from_polar(1.0, alpha);
            let w = annulus_points(0.1, 0.2, 400);
            let s: Vec<Complex64> = w.iter().map(|x| x.sqrt()).collect();
            let v: Vec<f64> = w.iter().map(|x| {
                // z = e^{-iα} w, with the root continuous from the w-root
                let sz = x.sqrt() * Complex64::from_polar(1.0, -alpha / 2.0);
                (a * sz + b * sz * sz * sz).re
            }).collect();
            let c = fit_samples(&w, &s, &v, Complex64::new(0.0, 0.0), (0.1, 0.2), &FitOptions::default()).unwrap();
            let _ = rot;
            prop_assert!((c.a - a * Complex64::from_polar(1.0, -alpha / 2.0)).norm() < 1e-10);
            prop_assert!((c.b - b * Complex64::from_polar(1.0, -1.5 * alpha)).norm() < 1e-10);
        }
    }
}
