//! Gauss–Legendre rules and an adaptive Gauss–Kronrod (7/15) integrator for
//! complex vector-valued integrands.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Computes the `n`-point Gauss–Legendre rule by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl GaussLegendre {
    /// Integrates a real function over [a, b] split into `panels` equal panels.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let w = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * w;
            let mid = lo + 0.5 * w;
            let mut s = 0.0;
            for (x, wt) in self.nodes.iter().zip(&self.weights) {
                s += wt * f(mid + 0.5 * w * x);
            }
            total += 0.5 * w * s;
        }
        total
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [Complex64]) -> (Vec<Complex64>, f64)
where
    F: FnMut(f64, &mut [Complex64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![Complex64::new(0.0, 0.0); dim];
    let mut gauss = vec![Complex64::new(0.0, 0.0); dim];
    f(c, buf);
    for d in 0..dim {
        kron[d] += buf[d] * WGK[7];
        gauss[d] += buf[d] * WG[3];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        for &x in &[c - dx, c + dx] {
            f(x, buf);
            for d in 0..dim {
                kron[d] += buf[d] * WGK[j];
                if j % 2 == 1 {
                    gauss[d] += buf[d] * WG[j / 2];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        kron[d] *= h;
        gauss[d] *= h;
        err = err.max((kron[d] - gauss[d]).norm());
    }
    (kron, err)
}

/// Adaptive Gauss–Kronrod integration of a `dim`-component complex integrand
/// over [a, b]. The integrand writes its values into the provided buffer.
///
/// Subdivision stops when the summed error estimate falls below
/// `max(abs_tol, rel_tol · |I|)`.
pub fn adaptive_gk<F>(mut f: F, a: f64, b: f64, dim: usize, abs_tol: f64, rel_tol: f64) -> Result<Vec<Complex64>>
where
    F: FnMut(f64, &mut [Complex64]),
{
    const MAX_INTERVALS: usize = 20_000;
    let mut buf = vec![Complex64::new(0.0, 0.0); dim];
    let (v, e) = gk15(&mut f, a, b, dim, &mut buf);
    let mut intervals: Vec<(f64, f64, Vec<Complex64>, f64)> = vec![(a, b, v, e)];
    loop {
        let mut total = vec![Complex64::new(0.0, 0.0); dim];
        let mut err = 0.0;
        let mut worst = 0;
        for (k, iv) in intervals.iter().enumerate() {
            for d in 0..dim {
                total[d] += iv.2[d];
            }
            err += iv.3;
            if iv.3 > intervals[worst].3 {
                worst = k;
            }
        }
        let scale = total.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err <= abs_tol.max(rel_tol * scale) {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "error estimate {err:.3e} after {MAX_INTERVALS} intervals on [{a}, {b}]"
            )));
        }
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid, dim, &mut buf);
        let (v2, e2) = gk15(&mut f, mid, hi, dim, &mut buf);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Scalar real convenience wrapper around [`adaptive_gk`].
pub fn adaptive_gk_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let v = adaptive_gk(
        |x, out: &mut [Complex64]| out[0] = Complex64::new(f(x), 0.0),
        a,
        b,
        1,
        abs_tol,
        rel_tol,
    )?;
    Ok(v[0].re)
}
