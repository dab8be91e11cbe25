use super::geometry::{crossings_of_segment, distance_to_segment};
use super::{Config, Domain2D};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// An element `u ↦ sign·u + shift` of the isometry group of the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub sign: f64,
    pub shift: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { sign: 1.0, shift: 0.0 };

    pub fn reflection(c: f64) -> Self {
        Self { sign: -1.0, shift: c }
    }

    pub fn translation(t: f64) -> Self {
        Self { sign: 1.0, shift: t }
    }

    pub fn apply(&self, u: f64) -> f64 {
        self.sign * u + self.shift
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Affine) -> Affine {
        Affine {
            sign: self.sign * other.sign,
            shift: self.sign * other.shift + self.shift,
        }
    }

    pub fn inverse(&self) -> Affine {
        Affine {
            sign: self.sign,
            shift: -self.sign * self.shift,
        }
    }

    /// The transition of the underlying linear bundle.
    pub fn linear_part(&self) -> Affine {
        Affine { sign: self.sign, shift: 0.0 }
    }

    pub fn approx_eq(&self, other: &Affine, tol: f64) -> bool {
        self.sign == other.sign && (self.shift - other.shift).abs() <= tol
    }
}

/// Holonomy along a closed polyline.
///
/// The result `g` expresses the value continued once around the loop in the
/// chart of the starting point: `u_start = g(u_end)`. On a torus the loop is
/// given in unwrapped coordinates and must close up to a period vector.
pub fn holonomy_of_loop(config: &Config, lp: &[Complex64]) -> Result<Affine> {
    if lp.len() < 2 {
        return Err(Error::InvalidArgument("a loop needs at least two vertices".into()));
    }
    let mut verts = lp.to_vec();
    let periods = match config.spec.domain {
        Domain2D::Torus { periods } => Some(periods),
        Domain2D::PlaneChart { .. } => None,
    };
    let gap = verts[verts.len() - 1] - verts[0];
    match periods {
        Some(p) => {
            let kx = gap.re / p[0];
            let ky = gap.im / p[1];
            if (kx - kx.round()).abs() > 1e-9 || (ky - ky.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument("loop does not close on the torus".into()));
            }
        }
        None => {
            if gap.norm() > 0.0 {
                verts.push(verts[0]);
            }
        }
    }
    transition_along(config, &verts, periods)
}

/// Transition along an open polyline: the value at the end, expressed in the
/// chart of the start, is `T(u_end)`. On a torus the polyline is given in
/// unwrapped coordinates.
pub fn path_transition(config: &Config, path: &[Complex64]) -> Result<Affine> {
    let periods = match config.spec.domain {
        Domain2D::Torus { periods } => Some(periods),
        Domain2D::PlaneChart { .. } => None,
    };
    transition_along(config, path, periods)
}

fn transition_along(config: &Config, verts: &[Complex64], periods: Option<[f64; 2]>) -> Result<Affine> {
    let scale = verts.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let tiny = 1e-12 * scale;
    let r = &config.spec.representation.period_translations;
    let mut g = Affine::IDENTITY;
    let mut prev_offset: Option<Complex64> = None;
    for s in verts.windows(2) {
        for (pa, pb, offset) in split_at_seams(s[0], s[1], periods) {
            if let (Some(p), Some(prev)) = (periods, prev_offset) {
                // moving into the next copy of the fundamental domain
                let d = offset - prev;
                let shift = (d.re / p[0]).round() * r[0] + (d.im / p[1]).round() * r[1];
                if shift != 0.0 {
                    g = g.compose(&Affine::translation(shift));
                }
            }
            prev_offset = Some(offset);
            // touching any branch point (or its image) is rejected
            for info in &config.points {
                if distance_to_segment(info.position + offset, pa, pb) <= tiny {
                    return Err(Error::InvalidArgument("loop touches a branch point".into()));
                }
            }
            for cr in crossings_of_segment(pa - offset, pb - offset, &config.cut_paths) {
                g = g.compose(&config.cut_transition(cr.cut));
            }
        }
    }
    Ok(g)
}

/// Cell index of a coordinate, for the unwrapped torus.
fn cell(x: f64, l: f64) -> f64 {
    (x / l).floor()
}

/// Pieces of `a → b` lying in single copies of the fundamental domain, each
/// with the offset of its copy.
fn split_at_seams(a: Complex64, b: Complex64, periods: Option<[f64; 2]>) -> Vec<(Complex64, Complex64, Complex64)> {
    let Some(p) = periods else {
        return vec![(a, b, Complex64::new(0.0, 0.0))];
    };
    let mut ts = vec![0.0, 1.0];
    for (axis, l) in [(0usize, p[0]), (1, p[1])] {
        let (xa, xb) = if axis == 0 { (a.re, b.re) } else { (a.im, b.im) };
        if xa == xb {
            continue;
        }
        let (lo, hi) = (cell(xa.min(xb), l) as i64, cell(xa.max(xb), l) as i64);
        for k in lo + 1..=hi {
            let t = (k as f64 * l - xa) / (xb - xa);
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let pa = a + (b - a) * w[0];
            let pb = a + (b - a) * w[1];
            let mid = (pa + pb) * 0.5;
            let off = Complex64::new(cell(mid.re, p[0]) * p[0], cell(mid.im, p[1]) * p[1]);
            (pa, pb, off)
        })
        .collect()
}
