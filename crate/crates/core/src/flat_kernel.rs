//! Closed-form kernels of the flat model `C × R^{n-2}` with a branch locus
//! along `{0} × R^{n-2}`.
//!
//! Points are written `(z, t)` with `z = x1 + i x2` transverse and `t`
//! tangential; `R = (|z|² + |t|²)^{1/2}`. Two-valued quantities are returned on
//! sheet 0 (principal `z^{1/2}`); sheet 1 is the negative.

use crate::conventions::H1_X1_H0_COEFFICIENT;
use crate::error::{Error, Result};
use crate::numerics::quadrature::adaptive_gk;
use num_complex::Complex64;
use std::f64::consts::PI;

/// A point of the flat model.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPoint {
    pub z: Complex64,
    pub t: Vec<f64>,
    /// Ambient dimension, `t.len() + 2`.
    pub n: usize,
}

impl KernelPoint {
    pub fn new(z: Complex64, t: Vec<f64>) -> Result<Self> {
        let n = t.len() + 2;
        if n < 3 {
            return Err(Error::InvalidArgument("ambient dimension must be at least 3".into()));
        }
        if !z.re.is_finite() || !z.im.is_finite() || t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        Ok(Self { z, t, n })
    }

    /// Point of the n = 3 model.
    pub fn n3(z: Complex64, t: f64) -> Self {
        Self { z, t: vec![t], n: 3 }
    }

    pub fn radius(&self) -> f64 {
        (self.z.norm_sqr() + self.t.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            z: self.z * lambda,
            t: self.t.iter().map(|v| v * lambda).collect(),
            n: self.n,
        }
    }

    fn check_regular(&self) -> Result<f64> {
        let r = self.radius();
        if r == 0.0 {
            Err(Error::SingularPoint)
        } else {
            Ok(r)
        }
    }
}

/// A value of a two-valued kernel together with the sheet it was taken on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub branch_sheet: u8,
}

impl KernelValue {
    fn sheet0(value: Complex64) -> Self {
        Self { value, branch_sheet: 0 }
    }

    /// The same section read on `sheet`; switching sheets negates the value.
    pub fn on_sheet(self, sheet: u8) -> Self {
        let sheet = sheet % 2;
        if sheet == self.branch_sheet {
            self
        } else {
            Self {
                value: -self.value,
                branch_sheet: sheet,
            }
        }
    }
}

/// Volume of the unit sphere `S^k ⊂ R^{k+1}`.
pub fn sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_volume(k - 2),
    }
}

/// `κ3 = 1/π`, `κn = 2(n-3)/Vol(S^{n-2})` for `n > 3`.
pub fn kappa(n: usize) -> Result<f64> {
    match n {
        0..=2 => Err(Error::InvalidArgument(format!("kappa needs n >= 3, got {n}"))),
        3 => Ok(1.0 / PI),
        _ => Ok(2.0 * (n as f64 - 3.0) / sphere_volume(n - 2)),
    }
}

/// Leading kernel `H = κn z^{1/2} / R^{n-1}` (homogeneity `3/2 - n`).
pub fn eval_h0(p: &KernelPoint) -> Result<KernelValue> {
    let r = p.check_regular()?;
    let k = kappa(p.n)?;
    Ok(KernelValue::sheet0(p.z.sqrt() * (k / r.powi(p.n as i32 - 1))))
}

/// First mean-curvature correction for n = 3,
/// `h1 = m[(x1²-x2²)/2 ∂1h0 + x1x2 ∂2h0 + c·x1 h0]` with `c` from the ledger.
pub fn eval_h1(p: &KernelPoint, m: f64) -> Result<KernelValue> {
    eval_h1_with_coefficient(p, m, H1_X1_H0_COEFFICIENT)
}

/// `h1` with an explicit coefficient `c` in front of `x1 h0`.
///
/// Expanded: `m κ3 [ z^{3/2}/(4R²) - x1 |z|² z^{1/2}/R⁴ + c x1 z^{1/2}/R² ]`.
pub fn eval_h1_with_coefficient(p: &KernelPoint, m: f64, c: f64) -> Result<KernelValue> {
    if p.n != 3 {
        return Err(Error::InvalidArgument("h1 is defined for n = 3".into()));
    }
    let r = p.check_regular()?;
    let k = kappa(3)?;
    let sz = p.z.sqrt();
    let r2 = r * r;
    let x1 = p.z.re;
    let rho2 = p.z.norm_sqr();
    let v = p.z * sz * (0.25 / r2) - sz * (x1 * rho2 / (r2 * r2)) + sz * (c * x1 / r2);
    Ok(KernelValue::sheet0(v * (m * k)))
}

/// `I0(z) = z^{-1/2}` (principal branch). The tangential integral of `h0`
/// is the conjugate of this value; see the convention ledger.
pub fn eval_i0(z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(z.sqrt().inv())
}

/// `I1(z) = -(m/4) z^{1/2} + m x1 z^{-1/2}` with `x1 = Re z`.
pub fn eval_i1(z: Complex64, m: f64) -> Result<Complex64> {
    eval_i1_with_coefficient(z, m, 1.0)
}

/// `I1` for a correction term whose `x1 h0` coefficient is `c`:
/// `-(m/4) z^{1/2} + c m x1 z^{-1/2}`.
pub fn eval_i1_with_coefficient(z: Complex64, m: f64, c: f64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::SingularPoint);
    }
    let s = z.sqrt();
    Ok(s * (-0.25 * m) + s.inv() * (c * m * z.re))
}

/// Tangential integral of a 3-dimensional kernel along `t ∈ R`, computed on
/// `[-T, T]` with `T = 10⁴|z|` plus the analytic `t^{-2}` tail `2·lead/T`,
/// where `lead` is the coefficient of `t^{-2}` at large `|t|`.
fn tangential_integral<F>(z: Complex64, lead: Complex64, f: F) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let rz = z.norm();
    if rz == 0.0 {
        return Err(Error::SingularPoint);
    }
    let big_t = 1e4 * rz;
    // map t = rz·tan(u) on each half-line piece so the peak is resolved
    let umax = (big_t / rz).atan();
    let half = adaptive_gk(
        |u, out: &mut [Complex64]| {
            let t = rz * u.tan();
            let jac = rz / u.cos().powi(2);
            out[0] = (f(t) + f(-t)) * jac;
        },
        0.0,
        umax,
        1,
        1e-15,
        1e-13,
    )?;
    Ok(half[0] + lead * (2.0 / big_t))
}

/// Quadrature of `∫ h0(z, t) dt` (n = 3) with tail correction.
pub fn integrate_h0_tangential(z: Complex64) -> Result<Complex64> {
    let k = kappa(3)?;
    let lead = z.sqrt() * k;
    tangential_integral(z, lead, |t| {
        eval_h0(&KernelPoint::n3(z, t)).map(|v| v.value).unwrap_or_default()
    })
}

/// Quadrature of `∫ h1(z, t) dt` (n = 3) for the correction with `x1 h0`
/// coefficient `c`, with tail correction.
pub fn integrate_h1_tangential(z: Complex64, m: f64, c: f64) -> Result<Complex64> {
    let k = kappa(3)?;
    let s = z.sqrt();
    let lead = (z * s * 0.25 + s * (c * z.re)) * (m * k);
    tangential_integral(z, lead, |t| {
        eval_h1_with_coefficient(&KernelPoint::n3(z, t), m, c)
            .map(|v| v.value)
            .unwrap_or_default()
    })
}

/// Flat kernel of the operator on a straight line (n = 3): `π⁻¹ |t1 - t2|^{-2}`.
pub fn gamma_flat(t1: f64, t2: f64) -> Result<f64> {
    let d = t1 - t2;
    if d == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(1.0 / (PI * d * d))
}

/// Number of `|z|²` powers in the annulus fit of [`gamma_coefficient`].
const GAMMA_FIT_TERMS: usize = 3;

/// `z^{1/2}`-coefficient of `h0(·, t)` (n = 3), extracted by a least-squares
/// fit of `z^{1/2}(c0 + c1|z|² + c2|z|⁴)` on the annulus `0.01|t| ≤ |z| ≤ 0.05|t|`.
pub fn gamma_coefficient(t: f64) -> Result<Complex64> {
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("annulus fit needs a finite nonzero t, got {t}")));
    }
    let (rings, rays) = (9, 16);
    let (r0, r1) = (0.01 * t.abs(), 0.05 * t.abs());
    let rows = 2 * rings * rays;
    let mut m = nalgebra::DMatrix::<f64>::zeros(rows, 2 * GAMMA_FIT_TERMS);
    let mut rhs = nalgebra::DVector::<f64>::zeros(rows);
    let mut row = 0;
    for a in 0..rings {
        let r = r0 + (r1 - r0) * a as f64 / (rings - 1) as f64;
        for b in 0..rays {
            // stay off the principal cut
            let th = -PI + 2.0 * PI * (b as f64 + 0.5) / rays as f64;
            let z = Complex64::from_polar(r, th);
            let v = eval_h0(&KernelPoint::n3(z, t))?.value;
            let sz = z.sqrt();
            for k in 0..GAMMA_FIT_TERMS {
                let f = sz * r.powi(2 * k as i32);
                // c_k = x + iy contributes f·x + (i f)·y
                m[(row, 2 * k)] = f.re;
                m[(row, 2 * k + 1)] = -f.im;
                m[(row + 1, 2 * k)] = f.im;
                m[(row + 1, 2 * k + 1)] = f.re;
            }
            rhs[row] = v.re;
            rhs[row + 1] = v.im;
            row += 2;
        }
    }
    // scale columns so the powers of r are comparable
    let scales: Vec<f64> = (0..2 * GAMMA_FIT_TERMS).map(|j| m.column(j).amax()).collect();
    for (j, s) in scales.iter().enumerate() {
        m.column_mut(j).scale_mut(1.0 / s);
    }
    let sol = m
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::IllConditioned(format!("annulus fit failed: {e}")))?;
    Ok(Complex64::new(sol[0] / scales[0], sol[1] / scales[1]))
}

/// Free-space Newton kernel of `-Δ` on `R^d`.
pub fn newton_kernel(d: usize, dist: f64) -> f64 {
    match d {
        1 => -0.5 * dist,
        2 => -(dist.ln()) / (2.0 * PI),
        _ => dist.powi(2 - d as i32) / ((d as f64 - 2.0) * sphere_volume(d - 1)),
    }
}

/// Dirichlet Green's function `K` of the half-space `{r > 0} ⊂ R^{n-1}` with
/// coordinates `(r, t)`, by reflection across `r = 0`.
pub fn halfspace_dirichlet_green(r: f64, t: &[f64], rp: f64, tp: &[f64]) -> Result<f64> {
    if t.len() != tp.len() {
        return Err(Error::InvalidArgument("tangential dimensions differ".into()));
    }
    if r < 0.0 || rp <= 0.0 {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let dt2: f64 = t.iter().zip(tp).map(|(a, b)| (a - b) * (a - b)).sum();
    let direct = ((r - rp).powi(2) + dt2).sqrt();
    let image = ((r + rp).powi(2) + dt2).sqrt();
    if direct == 0.0 {
        return Err(Error::SingularPoint);
    }
    let d = t.len() + 1;
    Ok(newton_kernel(d, direct) - newton_kernel(d, image))
}

/// Weight-1/2 Fourier component of the two-sheeted Green's function,
/// `G0 = (r r')^{1/2} K` with `K` the half-space Dirichlet kernel.
pub fn eval_g0_halfspace(r: f64, t: &[f64], rp: f64, tp: &[f64]) -> Result<f64> {
    if r <= 0.0 || rp <= 0.0 {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    Ok((r * rp).sqrt() * halfspace_dirichlet_green(r, t, rp, tp)?)
}

/// Residual of the correction equation `Δ0 h1 + L1 h0` at `p` (n = 3), with
/// `Δ0 = -∇²` and `L1 f = m(∂f/∂x1 - 2 x1 ∂²f/∂t²)`, evaluated with centred
/// differences of step `step`.
pub fn correction_residual(p: &KernelPoint, m: f64, step: f64) -> Result<Complex64> {
    if p.n != 3 {
        return Err(Error::InvalidArgument("correction equation is for n = 3".into()));
    }
    let h0 = |z: Complex64, t: f64| eval_h0(&KernelPoint::n3(z, t)).map(|v| v.value);
    let h1 = |z: Complex64, t: f64| eval_h1(&KernelPoint::n3(z, t), m).map(|v| v.value);
    let (z, t) = (p.z, p.t[0]);
    let dx = Complex64::new(step, 0.0);
    let dy = Complex64::new(0.0, step);
    let h2 = step * step;
    let lap_h1 = (h1(z + dx, t)? + h1(z - dx, t)? + h1(z + dy, t)? + h1(z - dy, t)? + h1(z, t + step)? + h1(z, t - step)?
        - h1(z, t)? * 6.0)
        / h2;
    let d1_h0 = (h0(z + dx, t)? - h0(z - dx, t)?) / (2.0 * step);
    let dtt_h0 = (h0(z, t + step)? - h0(z, t)? * 2.0 + h0(z, t - step)?) / h2;
    let l1_h0 = (d1_h0 - dtt_h0 * (2.0 * z.re)) * m;
    Ok(-lap_h1 + l1_h0)
}

/// 7-point Laplacian of `h0` (n = 3) at `p` with step `step`.
pub fn laplacian_h0(p: &KernelPoint, step: f64) -> Result<Complex64> {
    let h0 = |z: Complex64, t: f64| eval_h0(&KernelPoint::n3(z, t)).map(|v| v.value);
    let (z, t) = (p.z, p.t[0]);
    let dx = Complex64::new(step, 0.0);
    let dy = Complex64::new(0.0, step);
    Ok((h0(z + dx, t)? + h0(z - dx, t)? + h0(z + dy, t)? + h0(z - dy, t)? + h0(z, t + step)? + h0(z, t - step)?
        - h0(z, t)? * 6.0)
        / (step * step))
}
