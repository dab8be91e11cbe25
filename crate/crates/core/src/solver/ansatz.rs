//! Singular subtraction: `S = Σ χ_i Re(σ_i s^{-1} + a_i s + b_i s³)` with a C²
//! cutoff `χ_i`, `s = (z - p_i)^{1/2}` in the stored frame.

use crate::domain::Config;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointTerms {
    pub sigma: Complex64,
    pub a: Complex64,
    pub b: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularAnsatz {
    pub terms: Vec<PointTerms>,
    pub cutoff_radius: f64,
}

/// C² bump: 1 on `r ≤ rc/2`, 0 on `r ≥ rc`, quintic smoothstep between.
/// Returns `(χ, χ', χ'')`.
pub fn cutoff(r: f64, rc: f64) -> (f64, f64, f64) {
    let half = 0.5 * rc;
    if r <= half {
        return (1.0, 0.0, 0.0);
    }
    if r >= rc {
        return (0.0, 0.0, 0.0);
    }
    let t = (r - half) / half;
    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let dds = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (1.0 - s, -ds / half, -dds / (half * half))
}

impl SingularAnsatz {
    pub fn zero(m: usize, cutoff_radius: f64) -> Self {
        Self {
            terms: vec![PointTerms::default(); m],
            cutoff_radius,
        }
    }

    pub fn with_sigma(sigma: &[Complex64], cutoff_radius: f64) -> Self {
        Self {
            terms: sigma
                .iter()
                .map(|&s| PointTerms {
                    sigma: s,
                    ..Default::default()
                })
                .collect(),
            cutoff_radius,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| *t == PointTerms::default())
    }

    /// Rejects cutoff discs that overlap each other or reach another cut, a
    /// seam, the outer circle or the bent part of the point's own cut.
    pub fn check(&self, config: &Config) -> Result<()> {
        if self.terms.len() != config.num_points() {
            return Err(Error::InvalidArgument(format!(
                "{} ansatz terms for {} points",
                self.terms.len(),
                config.num_points()
            )));
        }
        for i in 0..config.num_points() {
            let clear = config.clear_radius(i);
            // discs about two points must not overlap: half the separation
            let limit = config
                .points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| 0.5 * config.displacement(config.points[i].position, q.position).norm())
                .fold(clear, f64::min);
            if self.cutoff_radius > limit {
                return Err(Error::InvalidConfig(format!(
                    "cutoff disc of radius {} about point {i} overlaps other geometry (limit {limit:.4})",
                    self.cutoff_radius
                )));
            }
        }
        Ok(())
    }

    /// `(S, ΔS)` at displacement `d` from point `i`.
    pub fn eval_point(&self, config: &Config, i: usize, d: Complex64) -> (f64, f64) {
        let r = d.norm();
        let (chi, dchi, ddchi) = cutoff(r, self.cutoff_radius);
        if chi == 0.0 && dchi == 0.0 {
            return (0.0, 0.0);
        }
        let t = &self.terms[i];
        let s = config.local_sqrt(i, d);
        let s2 = s * s;
        let g = (t.sigma / s + t.a * s + t.b * s2 * s).re;
        if dchi == 0.0 && ddchi == 0.0 {
            // harmonic where χ ≡ 1
            return (g, 0.0);
        }
        // dG/dz = G'(s) / (2s)
        let gz = (-t.sigma / s2 + t.a + t.b * s2 * 3.0) / (s * 2.0);
        let grad = Complex64::new(gz.re, -gz.im);
        let radial = (grad.re * d.re + grad.im * d.im) / r;
        let lap = 2.0 * dchi * radial + g * (ddchi + dchi / r);
        (chi * g, lap)
    }

    /// `(S, ΔS)` at a domain position.
    pub fn eval(&self, config: &Config, q: Complex64) -> (f64, f64) {
        for (i, p) in config.points.iter().enumerate() {
            let d = config.displacement(p.position, q);
            if d.norm() < self.cutoff_radius {
                return self.eval_point(config, i, d);
            }
        }
        (0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConfigSpec;

    #[test]
    fn cutoff_is_c2() {
        let rc = 0.2;
        let e = 1e-6;
        for &r in &[0.1, 0.13, 0.15, 0.17, 0.2] {
            let (a, _, _) = cutoff(r - e, rc);
            let (b, _, _) = cutoff(r + e, rc);
            let (_, d, dd) = cutoff(r, rc);
            assert!(((b - a) / (2.0 * e) - d).abs() < 1e-5);
            let (_, d1, _) = cutoff(r - e, rc);
            let (_, d2, _) = cutoff(r + e, rc);
            assert!(((d2 - d1) / (2.0 * e) - dd).abs() < 1e-3 / (0.25 * rc * rc), "{r}: {} vs {dd}", (d2 - d1) / (2.0 * e));
        }
        assert_eq!(cutoff(0.05, rc).0, 1.0);
        assert_eq!(cutoff(0.25, rc).0, 0.0);
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let cfg = ConfigSpec::canonical_torus(1.0 / 64.0).validate().unwrap();
        let mut a = SingularAnsatz::zero(2, 0.125);
        a.terms[0] = PointTerms {
            sigma: Complex64::new(0.3, -0.2),
            a: Complex64::new(1.0, 0.5),
            b: Complex64::new(-0.7, 0.2),
        };
        let p = cfg.points[0].position;
        let e = 1e-4;
        // points away from the cut (which runs east of p)
        for d in [Complex64::new(-0.08, 0.03), Complex64::new(0.02, 0.09), Complex64::new(-0.05, -0.07)] {
            let q = p + d;
            let f = |w: Complex64| a.eval(&cfg, w).0;
            let lap = (f(q + e) + f(q - e) + f(q + Complex64::new(0.0, e)) + f(q - Complex64::new(0.0, e)) - 4.0 * f(q)) / (e * e);
            let want = a.eval(&cfg, q).1;
            assert!((lap - want).abs() < 1e-4 * (1.0 + want.abs()), "{lap} vs {want}");
        }
    }

    #[test]
    fn ansatz_is_odd_across_its_cut() {
        let cfg = ConfigSpec::canonical_torus(1.0 / 64.0).validate().unwrap();
        let mut a = SingularAnsatz::zero(2, 0.125);
        a.terms[0].a = Complex64::new(1.0, 2.0);
        let p = cfg.points[0].position;
        let up = a.eval(&cfg, p + Complex64::new(0.03, 1e-9)).0;
        let down = a.eval(&cfg, p + Complex64::new(0.03, -1e-9)).0;
        assert!((up + down).abs() < 1e-6);
    }

    #[test]
    fn oversized_cutoff_rejected() {
        let cfg = ConfigSpec::canonical_torus(1.0 / 64.0).validate().unwrap();
        assert!(SingularAnsatz::zero(2, 0.3).check(&cfg).is_err());
        assert!(SingularAnsatz::zero(2, 0.125).check(&cfg).is_ok());
    }
}
