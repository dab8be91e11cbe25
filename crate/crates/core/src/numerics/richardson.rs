//! Richardson extrapolation and log-log order estimation.

use crate::error::{Error, Result};

/// Extrapolates from a coarse/fine pair with known order `p` and refinement
/// ratio `r = h_coarse / h_fine`.
pub fn richardson_extrapolate(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    fine + (fine - coarse) / (ratio.powf(order) - 1.0)
}

/// Observed order from three solutions on geometrically refined grids
/// (coarse, medium, fine). Fails when the differences change sign, which means
/// the sequence is not in its asymptotic range.
pub fn observed_order(coarse: f64, medium: f64, fine: f64, ratio: f64) -> Result<f64> {
    let d1 = coarse - medium;
    let d2 = medium - fine;
    if d2 == 0.0 && d1 == 0.0 {
        return Ok(f64::INFINITY);
    }
    if d1 * d2 <= 0.0 {
        return Err(Error::NonMonotone(format!(
            "successive differences {d1:.3e}, {d2:.3e} change sign"
        )));
    }
    Ok((d1 / d2).ln() / ratio.ln())
}

/// Least-squares line through (ln x, ln y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Half-width of the 95% confidence interval for the slope.
    pub slope_ci95: f64,
}

pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("log-log fit needs at least two matching points".into()));
    }
    if xs.iter().chain(ys).any(|v| *v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (stderr, ci) = if lx.len() > 2 {
        let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let dof = lx.len() - 2;
        let se = (ssr / dof as f64 / sxx).sqrt();
        (se, se * student_t95(dof))
    } else {
        (0.0, 0.0)
    };
    Ok(LogLogFit {
        slope,
        intercept,
        slope_stderr: stderr,
        slope_ci95: ci,
    })
}

fn student_t95(dof: usize) -> f64 {
    const T: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    if dof == 0 {
        f64::INFINITY
    } else if dof <= T.len() {
        T[dof - 1]
    } else {
        1.96 + 2.5 / dof as f64
    }
}
