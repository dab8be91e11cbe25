//! The nonlocal operator `P`: `σ ↦` the `s`-coefficients of the harmonic
//! section with singular part `Re(σ s^{-1})`.
//!
//! On point configurations `P` is computed by solve-and-fit (or supplied by
//! the elliptic oracle). On a straight line in three dimensions, [`line`]
//! provides three independent routes.

pub mod line;

pub use line::{
    apply_line, calibrate_line_model, check_potential_quadrature, line_eigenvalue, p_line_finite_part, p_line_multiplier, p_line_strip, PotentialPoint, PotentialReport,
    FinitePartOptions, FinitePartReport, LineCalibration, LineMethod, LineSamples, StripOptions, StripReport,
};

use crate::asymptotics::extract_ab;
use crate::domain::Config;
use crate::error::{Error, Result};
use crate::solver::{solve_with_singularity, SolveOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

/// Dirichlet data for `Q(σ)` on a plane chart: `(σ, z) ↦ Q(z)`, real-linear in σ.
pub type SingularBoundary<'a> = &'a (dyn Fn(&[Complex64], Complex64) -> f64 + Sync);

/// `Pσ` at every point: the `s`-coefficient of `Q(σ)`, with the prescribed
/// singular part removed at each point before fitting.
pub fn p_via_solve(config: Arc<Config>, sigma: &[Complex64], boundary: Option<SingularBoundary>, opts: &SolveOptions) -> Result<Vec<Complex64>> {
    if sigma.iter().all(|s| s.norm() == 0.0) && boundary.is_none() {
        return Ok(vec![Complex64::new(0.0, 0.0); config.num_points()]);
    }
    let sig = sigma.to_vec();
    let bd = boundary.map(|b| move |z: Complex64| b(&sig, z));
    let bref = bd.as_ref().map(|f| f as &(dyn Fn(Complex64) -> f64 + Sync));
    let sol = solve_with_singularity(config.clone(), sigma, bref, opts)?;
    (0..config.num_points()).map(|i| Ok(extract_ab(&sol.field, i, sigma[i])?.a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SolveFit,
    Oracle,
}

/// `P` as a real `2m × 2m` matrix on `(Re σ1, Im σ1, Re σ2, …)` in the stored
/// frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct POperatorDiscrete {
    /// Row-major `2m × 2m`.
    pub matrix: Vec<Vec<f64>>,
    /// Frames `ρ_j` of the points, for reference.
    pub frames: Vec<Complex64>,
    pub provenance: Provenance,
    pub gauge_tag: u64,
}

impl POperatorDiscrete {
    /// Assembles from the images of `e_j` and `i e_j`.
    pub fn from_columns(columns: &[Vec<Complex64>], frames: Vec<Complex64>, provenance: Provenance, gauge_tag: u64) -> Result<Self> {
        let m = frames.len();
        if columns.len() != 2 * m || columns.iter().any(|c| c.len() != m) {
            return Err(Error::InvalidArgument("need 2m columns of m values".into()));
        }
        let mut matrix = vec![vec![0.0; 2 * m]; 2 * m];
        for (c, col) in columns.iter().enumerate() {
            for (j, v) in col.iter().enumerate() {
                matrix[2 * j][c] = v.re;
                matrix[2 * j + 1][c] = v.im;
            }
        }
        Ok(Self {
            matrix,
            frames,
            provenance,
            gauge_tag,
        })
    }

    pub fn num_points(&self) -> usize {
        self.frames.len()
    }

    pub fn apply(&self, sigma: &[Complex64]) -> Result<Vec<Complex64>> {
        let m = self.num_points();
        if sigma.len() != m {
            return Err(Error::InvalidArgument(format!("{} values for {m} points", sigma.len())));
        }
        let x: Vec<f64> = sigma.iter().flat_map(|s| [s.re, s.im]).collect();
        Ok((0..m)
            .map(|j| {
                let re: f64 = self.matrix[2 * j].iter().zip(&x).map(|(a, b)| a * b).sum();
                let im: f64 = self.matrix[2 * j + 1].iter().zip(&x).map(|(a, b)| a * b).sum();
                Complex64::new(re, im)
            })
            .collect())
    }

    /// Column `c` as complex values per point.
    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.num_points())
            .map(|j| Complex64::new(self.matrix[2 * j][c], self.matrix[2 * j + 1][c]))
            .collect()
    }

    /// Largest entry difference relative to the largest entry of `self`.
    pub fn relative_difference(&self, other: &POperatorDiscrete) -> f64 {
        let scale = self.matrix.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = self
            .matrix
            .iter()
            .flatten()
            .zip(other.matrix.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        diff / scale
    }

    /// CSV: `row,col,value` with a commented frame header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# provenance={:?} gauge_tag={:#018x}", self.provenance, self.gauge_tag)?;
        for (j, f) in self.frames.iter().enumerate() {
            writeln!(w, "# frame {j} = {:e} {:e}", f.re, f.im)?;
        }
        writeln!(w, "row,col,value")?;
        for (r, row) in self.matrix.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                writeln!(w, "{r},{c},{v:e}")?;
            }
        }
        Ok(())
    }
}

/// Unit inputs `e_j` (even `c`) and `i e_j` (odd `c`).
pub fn basis_input(m: usize, c: usize) -> Vec<Complex64> {
    let mut s = vec![Complex64::new(0.0, 0.0); m];
    s[c / 2] = if c % 2 == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
    s
}

/// Column-by-column `p_via_solve` on the basis inputs.
pub fn p_matrix(config: Arc<Config>, boundary: Option<SingularBoundary>, opts: &SolveOptions) -> Result<POperatorDiscrete> {
    let m = config.num_points();
    let columns: Vec<Vec<Complex64>> = (0..2 * m)
        .map(|c| p_via_solve(config.clone(), &basis_input(m, c), boundary, opts))
        .collect::<Result<_>>()?;
    let frames = config.points.iter().map(|p| p.frame).collect();
    POperatorDiscrete::from_columns(&columns, frames, Provenance::SolveFit, config.gauge_tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConfigSpec;

    #[test]
    fn zero_input_gives_zero() {
        let cfg = Arc::new(ConfigSpec::canonical_torus(1.0 / 64.0).validate().unwrap());
        let p = p_via_solve(cfg, &[Complex64::new(0.0, 0.0); 2], None, &SolveOptions::default()).unwrap();
        assert!(p.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn matrix_reproduces_solves() {
        let cfg = Arc::new(ConfigSpec::canonical_torus(1.0 / 64.0).validate().unwrap());
        let opts = SolveOptions::default();
        let pm = p_matrix(cfg.clone(), None, &opts).unwrap();
        assert_eq!(pm.matrix.len(), 4);
        let sigma = [Complex64::new(0.3, -1.2), Complex64::new(-0.7, 0.4)];
        let direct = p_via_solve(cfg, &sigma, None, &opts).unwrap();
        let via = pm.apply(&sigma).unwrap();
        for (a, b) in direct.iter().zip(&via) {
            assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()), "{a} vs {b}");
        }
    }
}
