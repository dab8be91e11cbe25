//! Closed-form and quadrature oracle for four branch points in the plane.
//!
//! The double cover `w² = Π(z − e_k)` is an elliptic curve. With every cut
//! running radially outwards from its branch point, the slit plane is star
//! shaped about the origin, `w = Π sqrt(z − e_k)` is single valued on it, and
//! primitives of the anti-invariant differentials
//! `ω_0 = dz/w`, `ω_k = dz/((z − e_k) w)` are integrals along straight
//! segments from the origin. Everything here is independent of the grid
//! solver.

use crate::domain::{frame_sqrt, segment_crossing, segment_distance as distance_to_segment};
use crate::domain::{default_frame, ConfigSpec, FarField, GridSpec};
use crate::error::{Error, Result};
use crate::numerics::{adaptive_gk, gauss_legendre, sqrt_with_cut};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

/// Number of branch points of the curve.
pub const NUM_POINTS: usize = 4;
/// Number of basis differentials.
pub const NUM_BASIS: usize = NUM_POINTS + 1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const QUAD_ABS_TOL: f64 = 1e-13;
const QUAD_REL_TOL: f64 = 1e-12;

type Basis = [Complex64; NUM_BASIS];

/// Four distinct nonzero branch points, the class coefficient `c` of the
/// holomorphic differential `c dz/w`, and the frames fixing the local square
/// roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub points: Vec<Complex64>,
    pub c: Complex64,
    pub frames: Vec<Complex64>,
}

impl CurveConfig {
    /// Validates the points and attaches the default frames of radial cuts.
    pub fn new(points: &[Complex64], c: Complex64) -> Result<Self> {
        let frames = points.iter().map(|p| default_frame(p.arg())).collect();
        Self::with_frames(points, c, frames)
    }

    pub fn with_frames(points: &[Complex64], c: Complex64, frames: Vec<Complex64>) -> Result<Self> {
        let out = Self {
            points: points.to_vec(),
            c,
            frames,
        };
        out.validate()?;
        Ok(out)
    }

    /// `e = {1, i, −1, −i}`.
    pub fn square(c: Complex64) -> Self {
        let pts = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        Self::new(&pts, c).expect("square configuration is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != NUM_POINTS {
            return Err(Error::InvalidConfig(format!("the curve needs {NUM_POINTS} branch points, got {}", self.points.len())));
        }
        if self.frames.len() != NUM_POINTS {
            return Err(Error::InvalidConfig(format!("{} frames for {NUM_POINTS} points", self.frames.len())));
        }
        let scale = self.points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        for (i, p) in self.points.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() || p.norm() <= 1e-12 * scale.max(1e-300) {
                return Err(Error::InvalidConfig(format!("branch point {i} must be finite and away from the origin")));
            }
            for (j, q) in self.points.iter().enumerate().skip(i + 1) {
                if (p - q).norm() <= 1e-12 * scale {
                    return Err(Error::InvalidConfig(format!("branch points {i} and {j} coincide")));
                }
            }
            let same_ray = self.points.iter().enumerate().any(|(j, q)| j != i && (q.arg() - p.arg()).abs() < 1e-12 && q.norm() > p.norm());
            if same_ray {
                return Err(Error::InvalidConfig(format!("branch point {i} has another point on its radial cut")));
            }
            let f = self.frames[i];
            if ((f * f).norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("frame {i} must have unit modulus")));
            }
        }
        Ok(())
    }

    /// Multiplies the points by `lambda` and re-derives default frames.
    pub fn scaled(&self, lambda: Complex64) -> Result<Self> {
        let pts: Vec<Complex64> = self.points.iter().map(|p| p * lambda).collect();
        Self::new(&pts, self.c)
    }

    fn cut_angle(&self, k: usize) -> f64 {
        self.points[k].arg()
    }

    /// `w(z)` on the slit plane.
    pub fn w(&self, z: Complex64) -> Complex64 {
        (0..NUM_POINTS).map(|k| sqrt_with_cut(z - self.points[k], self.cut_angle(k))).product()
    }

    /// Local coordinate `s` at point `i` in its frame, `d = z − e_i`.
    pub fn local_sqrt(&self, i: usize, d: Complex64) -> Complex64 {
        frame_sqrt(d, self.cut_angle(i), self.frames[i])
    }

    /// `+1` or `−1`: the frame root over the slit-plane root.
    fn frame_sign(&self, i: usize) -> f64 {
        let d = Complex64::from_polar(1.0, self.cut_angle(i) + PI);
        (self.local_sqrt(i, d) / sqrt_with_cut(d, self.cut_angle(i))).re.signum()
    }

    /// `C_i(z) = w(z) / s_i(z)`, holomorphic near `e_i`.
    pub fn cofactor(&self, i: usize, z: Complex64) -> Complex64 {
        let g: Complex64 = (0..NUM_POINTS)
            .filter(|&j| j != i)
            .map(|j| sqrt_with_cut(z - self.points[j], self.cut_angle(j)))
            .product();
        g * self.frame_sign(i)
    }

    /// `Σ_{j≠i} 1/(e_i − e_j)`, twice the logarithmic derivative of `C_i` at `e_i`.
    fn log_derivative_sum(&self, i: usize) -> Complex64 {
        (0..NUM_POINTS).filter(|&j| j != i).map(|j| 1.0 / (self.points[i] - self.points[j])).sum()
    }

    /// Index of the cut containing `q`, if any.
    pub fn on_cut(&self, q: Complex64) -> Option<usize> {
        (0..NUM_POINTS).find(|&k| {
            let e = self.points[k];
            let u = e.unscale(e.norm());
            let along = (q.conj() * u).re;
            let across = (q.conj() * u).im.abs();
            along >= e.norm() - 1e-14 * e.norm() && across <= 1e-14 * (1.0 + q.norm())
        })
    }

    fn basis_values(&self, z: Complex64, w: Complex64) -> Basis {
        let mut out = [ZERO; NUM_BASIS];
        out[0] = 1.0 / w;
        for k in 0..NUM_POINTS {
            out[k + 1] = 1.0 / ((z - self.points[k]) * w);
        }
        out
    }

    fn check_segment(&self, a: Complex64, b: Complex64) -> Result<()> {
        let scale = a.norm() + b.norm() + 1.0;
        for (k, e) in self.points.iter().enumerate() {
            if distance_to_segment(*e, a, b) <= 1e-12 * scale {
                return Err(Error::InvalidArgument(format!("path passes through branch point {k}")));
            }
        }
        Ok(())
    }

    /// Basis integrals along the segment `a → b` on the sheet `sheet · w`,
    /// assuming the segment crosses no cut.
    fn segment_integrals(&self, a: Complex64, b: Complex64, sheet: f64) -> Result<Basis> {
        if a == b {
            return Ok([ZERO; NUM_BASIS]);
        }
        let d = b - a;
        let v = adaptive_gk(
            |t, out: &mut [Complex64]| {
                let z = a + d * t;
                let vals = self.basis_values(z, self.w(z) * sheet);
                for (o, v) in out.iter_mut().zip(vals) {
                    *o = v * d;
                }
            },
            0.0,
            1.0,
            NUM_BASIS,
            QUAD_ABS_TOL,
            QUAD_REL_TOL,
        )?;
        let mut out = [ZERO; NUM_BASIS];
        out.copy_from_slice(&v);
        Ok(out)
    }

    /// Basis primitives at `q` along the stored straight path from the origin.
    pub fn primitives(&self, q: Complex64) -> Result<Basis> {
        if let Some(k) = self.on_cut(q) {
            return Err(Error::InvalidArgument(format!("{q} lies on cut {k}")));
        }
        self.check_segment(ZERO, q)?;
        self.segment_integrals(ZERO, q, 1.0)
    }

    /// Basis integrals along a polyline starting on the slit-plane sheet,
    /// switching sheet at every cut crossing. Returns the integrals and the
    /// final sheet sign.
    pub fn path_integrals(&self, path: &[Complex64]) -> Result<(Basis, f64)> {
        if path.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two vertices".into()));
        }
        if let Some(k) = self.on_cut(path[0]) {
            return Err(Error::InvalidArgument(format!("path starts on cut {k}")));
        }
        let reach = path.iter().map(|p| p.norm()).fold(0.0, f64::max) + 1.0;
        let mut total = [ZERO; NUM_BASIS];
        let mut sheet = 1.0;
        for seg in path.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            self.check_segment(a, b)?;
            let mut ts: Vec<f64> = (0..NUM_POINTS)
                .filter_map(|k| {
                    let e = self.points[k];
                    segment_crossing(a, b, e, e.unscale(e.norm()) * (e.norm() + reach)).map(|(t, _)| t)
                })
                .collect();
            ts.sort_by(f64::total_cmp);
            let mut start = a;
            for t in ts {
                let x = a + (b - a) * t;
                let part = self.segment_integrals(start, x, sheet)?;
                add(&mut total, &part, 1.0);
                sheet = -sheet;
                start = x;
            }
            let part = self.segment_integrals(start, b, sheet)?;
            add(&mut total, &part, 1.0);
        }
        Ok((total, sheet))
    }

    /// Regularized integrals `R[b][k]` of `ω_b` from the origin to `e_k`: the
    /// constant term of the local expansion of the primitive at `e_k`.
    pub fn endpoint_integrals(&self) -> Result<[[Complex64; NUM_POINTS]; NUM_BASIS]> {
        let mut r = [[ZERO; NUM_POINTS]; NUM_BASIS];
        for k in 0..NUM_POINTS {
            let e = self.points[k];
            // z(u) = e (1 − u²) runs from e_k (u = 0) to the origin (u = 1)
            let regular = adaptive_gk(
                |u, out: &mut [Complex64]| {
                    let z = e * (1.0 - u * u);
                    let vals = self.basis_values(z, self.w(z));
                    for (b, o) in out.iter_mut().enumerate() {
                        *o = if b == k + 1 { ZERO } else { vals[b] * e * (2.0 * u) };
                    }
                },
                0.0,
                1.0,
                NUM_BASIS,
                QUAD_ABS_TOL,
                QUAD_REL_TOL,
            )?;
            for b in 0..NUM_BASIS {
                if b != k + 1 {
                    r[b][k] = regular[b];
                }
            }
            let s1 = self.local_sqrt(k, -e);
            let c0 = self.cofactor(k, e);
            let rem = adaptive_gk(
                |u, out: &mut [Complex64]| {
                    let t = s1 * u;
                    let ck = self.cofactor(k, e + t * t);
                    out[0] = (c0 - ck) / (ck * c0) * 2.0 / (t * t) * s1;
                },
                0.0,
                1.0,
                1,
                QUAD_ABS_TOL,
                QUAD_REL_TOL,
            )?;
            r[k + 1][k] = 2.0 / (c0 * s1) - rem[0];
        }
        Ok(r)
    }

    /// Residue of `ω_b` at `e_k` in the local coordinate, by the trapezoid rule
    /// on a small circle.
    pub fn residue(&self, b: usize, k: usize) -> Complex64 {
        let e = self.points[k];
        let clear = (0..NUM_POINTS)
            .filter(|&j| j != k)
            .map(|j| (self.points[j] - e).norm())
            .fold(f64::INFINITY, f64::min);
        let rho = 0.5 * clear.sqrt();
        let n = 128;
        let mut acc = ZERO;
        for j in 0..n {
            let s = Complex64::from_polar(rho, 2.0 * PI * j as f64 / n as f64);
            let z = e + s * s;
            let w = s * self.cofactor(k, z);
            let vals = self.basis_values(z, w);
            // ω = f(z) dz with dz = 2 s ds; ds = i s dθ
            acc += vals[b] * 2.0 * s * Complex64::i() * s;
        }
        acc * (2.0 * PI / n as f64) / (2.0 * PI * Complex64::i())
    }

    /// Solver configuration spec on a plane chart of the given radius with
    /// radial cuts, matching frames and the cut translations of `Re(c ∫ dz/w)`.
    pub fn solver_spec(&self, radius: f64, grid: GridSpec) -> Result<ConfigSpec> {
        let r = self.endpoint_integrals()?;
        let translations: Vec<f64> = (0..NUM_POINTS).map(|k| 2.0 * (self.c * r[0][k]).re).collect();
        let mut spec = ConfigSpec::plane_radial(radius, FarField::OracleSupplied, &self.points, &translations, grid);
        spec.frames = Some(self.frames.iter().map(|f| [f.re, f.im]).collect());
        Ok(spec)
    }
}

fn add(acc: &mut Basis, v: &Basis, scale: f64) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b * scale;
    }
}

/// Periods of the basis differentials over the cycles around `(e_1, e_2)`
/// and `(e_2, e_3)`, with the regularized endpoint integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct MeromorphicBasis {
    /// `periods[a][b]`: cycle `a`, differential `b`.
    pub periods: [Basis; 2],
    pub endpoint: [[Complex64; NUM_POINTS]; NUM_BASIS],
    /// Largest residue modulus of any basis differential at any branch point.
    pub max_residue: f64,
}

/// Index pairs enclosed by the two reference cycles.
pub const CYCLES: [(usize, usize); 2] = [(0, 1), (1, 2)];

/// Default number of Gauss–Legendre panels on a cycle contour.
pub const CYCLE_PANELS: usize = 64;

impl MeromorphicBasis {
    pub fn compute(curve: &CurveConfig) -> Result<Self> {
        Self::with_panels(curve, CYCLE_PANELS)
    }

    pub fn with_panels(curve: &CurveConfig, panels: usize) -> Result<Self> {
        let periods = [
            cycle_integrals(curve, CYCLES[0].0, CYCLES[0].1, panels)?,
            cycle_integrals(curve, CYCLES[1].0, CYCLES[1].1, panels)?,
        ];
        let endpoint = curve.endpoint_integrals()?;
        let mut max_residue = 0.0f64;
        for b in 0..NUM_BASIS {
            for k in 0..NUM_POINTS {
                max_residue = max_residue.max(curve.residue(b, k).norm());
            }
        }
        Ok(Self {
            periods,
            endpoint,
            max_residue,
        })
    }

    /// Periods predicted by the endpoint integrals, `2(R_b − R_a)` per cycle.
    pub fn endpoint_periods(&self) -> [Basis; 2] {
        let mut out = [[ZERO; NUM_BASIS]; 2];
        for (c, &(a, b)) in CYCLES.iter().enumerate() {
            for d in 0..NUM_BASIS {
                out[c][d] = 2.0 * (self.endpoint[d][b] - self.endpoint[d][a]);
            }
        }
        out
    }
}

/// Integrals of the basis over an ellipse enclosing `e_a` and `e_b` only,
/// following `w` continuously around the loop.
pub fn cycle_integrals(curve: &CurveConfig, a: usize, b: usize, panels: usize) -> Result<Basis> {
    let (ea, eb) = (curve.points[a], curve.points[b]);
    let m = 0.5 * (ea + eb);
    let d = 0.5 * (eb - ea);
    let (alpha, beta) = (1.35, 0.6);
    for (k, p) in curve.points.iter().enumerate() {
        if k == a || k == b {
            continue;
        }
        let u = (p - m) / d;
        if (u.re / alpha).powi(2) + (u.im / beta).powi(2) < 1.3 {
            return Err(Error::InvalidConfig(format!("branch point {k} is too close to the cycle around {a} and {b}")));
        }
    }
    let gl = gauss_legendre(16);
    let width = 2.0 * PI / panels as f64;
    let mut prev = curve.w(m + d * alpha);
    let mut acc = [ZERO; NUM_BASIS];
    let z_of = |th: f64| m + d * Complex64::new(alpha * th.cos(), beta * th.sin());
    let dz_of = |th: f64| d * Complex64::new(-alpha * th.sin(), beta * th.cos());
    let track = |z: Complex64, prev: Complex64| -> Complex64 {
        let raw = curve.w(z);
        if (raw - prev).norm() <= (raw + prev).norm() {
            raw
        } else {
            -raw
        }
    };
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
            let th = mid + 0.5 * width * x;
            let z = z_of(th);
            let w = track(z, prev);
            prev = w;
            let vals = curve.basis_values(z, w);
            let f = dz_of(th) * (0.5 * width * wt);
            for (o, v) in acc.iter_mut().zip(vals) {
                *o += v * f;
            }
        }
    }
    let closing = track(z_of(2.0 * PI), prev);
    if (closing - curve.w(z_of(0.0))).norm() > 1e-8 * closing.norm() {
        return Err(Error::InvalidConfig(format!("the cycle around {a} and {b} does not close on the cover")));
    }
    Ok(acc)
}

/// `A_i = 2c / C_i(e_i)` in the stored frames.
pub fn oracle_a(curve: &CurveConfig) -> Vec<Complex64> {
    (0..NUM_POINTS).map(|i| 2.0 * curve.c / curve.cofactor(i, curve.points[i])).collect()
}

/// `B_i = −c S_i / (3 C_i(e_i))` with `S_i = Σ_{j≠i} 1/(e_i − e_j)`.
pub fn oracle_b(curve: &CurveConfig) -> Vec<Complex64> {
    (0..NUM_POINTS)
        .map(|i| -curve.c * curve.log_derivative_sum(i) / (3.0 * curve.cofactor(i, curve.points[i])))
        .collect()
}

/// `φ(q) = Re(c ∫_0^q dz/w)` along the straight path from the origin.
pub fn oracle_phi(curve: &CurveConfig, q: Complex64) -> Result<f64> {
    Ok((curve.c * curve.primitives(q)?[0]).re)
}

/// `Re(c ∫ dz/w)` along an arbitrary polyline from the origin, tracking the
/// sheet through cut crossings. Returns the value and the final sheet sign.
pub fn oracle_phi_along(curve: &CurveConfig, path: &[Complex64]) -> Result<(f64, f64)> {
    if path.first() != Some(&ZERO) {
        return Err(Error::InvalidArgument("paths start at the origin".into()));
    }
    let (v, sheet) = curve.path_integrals(path)?;
    Ok(((curve.c * v[0]).re, sheet))
}

/// The differential `η = Σ β_b ω_b` realizing `Q(σ) = Re(∫η) + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularDifferential {
    pub beta: Basis,
    /// Real constant making `Q` odd under the sheet swap.
    pub constant: f64,
    /// `Pσ` per point.
    pub p: Vec<Complex64>,
    /// Largest `|Re period|` after solving.
    pub period_residual: f64,
}

impl SingularDifferential {
    /// `Q(z)` on the slit plane from precomputed basis primitives at `z`.
    pub fn value_from(&self, primitives: &Basis) -> f64 {
        let f: Complex64 = self.beta.iter().zip(primitives).map(|(b, v)| b * v).sum();
        f.re + self.constant
    }

    /// Constant term of the local expansion at `e_k` (real part zero).
    pub fn local_constant(&self, basis: &MeromorphicBasis, k: usize) -> Complex64 {
        let f: Complex64 = (0..NUM_BASIS).map(|b| self.beta[b] * basis.endpoint[b][k]).sum();
        f + self.constant
    }
}

/// The linear system for `Pσ` prefactored for one curve.
#[derive(Debug, Clone)]
pub struct OracleP {
    pub curve: CurveConfig,
    pub basis: MeromorphicBasis,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Smallest over largest singular value of the 10 × 10 system.
    pub conditioning: f64,
}

/// Below this conditioning the configuration is treated as degenerate.
pub const DEGENERATE_CONDITIONING: f64 = 1e-12;

impl OracleP {
    pub fn new(curve: &CurveConfig) -> Result<Self> {
        let basis = MeromorphicBasis::compute(curve)?;
        Self::with_basis(curve, basis)
    }

    pub fn with_basis(curve: &CurveConfig, basis: MeromorphicBasis) -> Result<Self> {
        let n = 2 * NUM_BASIS;
        let mut m = DMatrix::<f64>::zeros(n, n);
        // Re(γβ) = γ.re x − γ.im y, Im(γβ) = γ.im x + γ.re y
        let mut put = |row: usize, col: usize, g: Complex64, imag: bool| {
            if imag {
                m[(row, 2 * col)] = g.im;
                m[(row, 2 * col + 1)] = g.re;
            } else {
                m[(row, 2 * col)] = g.re;
                m[(row, 2 * col + 1)] = -g.im;
            }
        };
        for i in 0..NUM_POINTS {
            let g = -2.0 / curve.cofactor(i, curve.points[i]);
            put(2 * i, i + 1, g, false);
            put(2 * i + 1, i + 1, g, true);
        }
        for (a, per) in basis.periods.iter().enumerate() {
            for (b, &g) in per.iter().enumerate() {
                put(2 * NUM_POINTS + a, b, g, false);
            }
        }
        let sv = m.clone().singular_values();
        let conditioning = sv.min() / sv.max();
        if !(conditioning > DEGENERATE_CONDITIONING) {
            return Err(Error::IllConditioned(format!(
                "singular oracle system (conditioning {conditioning:.2e}); the configuration is degenerate"
            )));
        }
        Ok(Self {
            curve: curve.clone(),
            basis,
            lu: m.lu(),
            conditioning,
        })
    }

    /// Solves for `η(σ)` and reads off `Pσ`.
    pub fn solve(&self, sigma: &[Complex64]) -> Result<SingularDifferential> {
        if sigma.len() != NUM_POINTS {
            return Err(Error::InvalidArgument(format!("{} values for {NUM_POINTS} points", sigma.len())));
        }
        let mut rhs = DVector::<f64>::zeros(2 * NUM_BASIS);
        for (i, s) in sigma.iter().enumerate() {
            rhs[2 * i] = s.re;
            rhs[2 * i + 1] = s.im;
        }
        let x = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::IllConditioned("singular oracle system".into()))?;
        let mut beta = [ZERO; NUM_BASIS];
        for (b, v) in beta.iter_mut().enumerate() {
            *v = Complex64::new(x[2 * b], x[2 * b + 1]);
        }
        let curve = &self.curve;
        let p = (0..NUM_POINTS)
            .map(|i| {
                let ei = curve.points[i];
                let ci = curve.cofactor(i, ei);
                let mut v = beta[0] * 2.0 / ci - beta[i + 1] * curve.log_derivative_sum(i) / ci;
                for j in (0..NUM_POINTS).filter(|&j| j != i) {
                    v += beta[j + 1] * 2.0 / ((ei - curve.points[j]) * ci);
                }
                v
            })
            .collect();
        let period_residual = self
            .basis
            .periods
            .iter()
            .map(|per| per.iter().zip(&beta).map(|(g, b)| g * b).sum::<Complex64>().re.abs())
            .fold(0.0, f64::max);
        let c0: Complex64 = (0..NUM_BASIS).map(|b| beta[b] * self.basis.endpoint[b][0]).sum();
        Ok(SingularDifferential {
            beta,
            constant: -c0.re,
            p,
            period_residual,
        })
    }
}

/// `Pσ` from the exact meromorphic realization.
pub fn oracle_p(curve: &CurveConfig, sigma: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(OracleP::new(curve)?.solve(sigma)?.p)
}

/// Far-field boundary data for solver comparisons, caching the basis
/// primitives per evaluation point.
pub struct OracleFarField {
    pub oracle: OracleP,
    cache: Mutex<HashMap<(u64, u64), Basis>>,
}

impl OracleFarField {
    pub fn new(curve: &CurveConfig) -> Result<Self> {
        Ok(Self {
            oracle: OracleP::new(curve)?,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn primitives(&self, z: Complex64) -> Basis {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let v = self
            .oracle
            .curve
            .primitives(z)
            .unwrap_or_else(|e| panic!("oracle far field at {z}: {e}"));
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }

    /// `φ(z)` of the harmonic section.
    pub fn harmonic(&self, z: Complex64) -> f64 {
        (self.oracle.curve.c * self.primitives(z)[0]).re
    }

    /// `Q(σ)(z)`.
    pub fn singular(&self, sigma: &[Complex64], z: Complex64) -> f64 {
        let eta = self.oracle.solve(sigma).unwrap_or_else(|e| panic!("oracle P: {e}"));
        eta.value_from(&self.primitives(z))
    }
}

#[cfg(test)]
mod tests;
