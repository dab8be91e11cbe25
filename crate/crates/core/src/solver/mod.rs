//! Discrete twisted Laplace solver: harmonic sections of the affine bundle and
//! solutions of the linear bundle with prescribed `σ s^{-1}` singular parts.
//!
//! Unknowns are the smooth remainder `V = Φ - S` on grid nodes, where `S` is a
//! cut-off singular ansatz. The equation `K V = Σ t + g + h² ΔS` uses the exact
//! Laplacian of `S`. The regular coefficients `(a, b)` in `S` are updated by a
//! fixed-point iteration on the annulus fit, which removes the `s` and `s³`
//! content from `V` and leaves a remainder the 5-point stencil resolves.

pub mod ansatz;
pub mod cg;
pub mod field;
pub mod system;

pub use ansatz::{cutoff, PointTerms, SingularAnsatz};
pub use cg::{pcg, pcg_shifted, CgOptions, CgReport, Preconditioner};
pub use field::{read_binary, GridHeader, SectionKind, TwistedField, GRID_MAGIC};
pub use system::{Link, TwistedSystem};

use crate::asymptotics::{default_annulus, fit_with_options, FitOptions};
use crate::domain::{Config, NodeKind};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Dirichlet data on the outer circle of a plane chart, as total field values
/// in the cut gauge.
pub type Boundary<'a> = &'a (dyn Fn(Complex64) -> f64 + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub cg: CgOptions,
    /// Fit and subtract the `s` and `s³` terms as well as `σ s^{-1}`.
    pub subtract_regular: bool,
    /// Cap on fixed-point sweeps for the regular terms.
    pub fixed_point_iterations: usize,
    /// Stop the sweeps when the largest coefficient update falls below this
    /// multiple of the largest coefficient.
    pub fixed_point_tol: f64,
    /// Nuisance terms `s⁵, s⁷, …` in the fixed-point fit, which keep the
    /// annulus remainder from biasing `(a, b)`.
    pub fit_extra_terms: usize,
    pub source: SourceRule,
}

/// How the source `-ΔS` of the subtracted ansatz enters the linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRule {
    /// Exact Laplacian of the ansatz at every node. The cutoff transition
    /// must then be resolved by the grid.
    Continuum,
    /// Exact Laplacian (zero) at nodes whose stencil lies where the cutoff is
    /// identically one; the 5-point Laplacian of the ansatz elsewhere, so the
    /// total field obeys the plain stencil away from the points.
    #[default]
    Hybrid,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cg: CgOptions::default(),
            subtract_regular: true,
            fixed_point_iterations: 12,
            fixed_point_tol: 1e-9,
            fit_extra_terms: 2,
            source: SourceRule::Hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// CG iterations per linear solve.
    pub cg_iterations: Vec<usize>,
    /// Relative ∞-norm residual of the last linear solve.
    pub residual: f64,
    /// Largest relative coefficient update per fixed-point sweep.
    pub fixed_point_updates: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: TwistedField,
    pub report: SolveReport,
}

/// The harmonic section of the affine bundle determined by the configuration's
/// translations (and, on a plane chart, Dirichlet data).
pub fn solve_harmonic_plus(config: Arc<Config>, boundary: Option<Boundary>, opts: &SolveOptions) -> Result<Solution> {
    if config.class_is_zero() && boundary.is_none() {
        return Err(Error::InvalidConfig(
            "the representation class is zero: the only harmonic section is the parallel one".into(),
        ));
    }
    solve_section(config, SectionKind::Affine, None, boundary, opts, None)
}

/// The harmonic section `Q` of the linear bundle with `Q - Re(σ_i s^{-1})`
/// bounded at every point.
pub fn solve_with_singularity(config: Arc<Config>, sigma: &[Complex64], boundary: Option<Boundary>, opts: &SolveOptions) -> Result<Solution> {
    if sigma.len() != config.num_points() {
        return Err(Error::InvalidArgument(format!(
            "{} singular coefficients for {} points",
            sigma.len(),
            config.num_points()
        )));
    }
    if sigma.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
        return Err(Error::InvalidArgument("singular coefficients must be finite".into()));
    }
    solve_section(config, SectionKind::Linear, Some(sigma), boundary, opts, None)
}

/// General entry point. `warm` seeds both the unknowns and the regular
/// coefficients; it may come from a coarser grid of the same geometry.
pub fn solve_section(
    config: Arc<Config>,
    kind: SectionKind,
    sigma: Option<&[Complex64]>,
    boundary: Option<Boundary>,
    opts: &SolveOptions,
    warm: Option<&TwistedField>,
) -> Result<Solution> {
    let m = config.num_points();
    if config.is_torus() && boundary.is_some() {
        return Err(Error::InvalidArgument("Dirichlet data only applies to plane charts".into()));
    }
    let zero = vec![Complex64::new(0.0, 0.0); m];
    let sigma = sigma.unwrap_or(&zero);
    let rc = config.cutoff_radius();
    let mut ansatz = SingularAnsatz::with_sigma(sigma, rc);
    if let Some(w) = warm.and_then(|w| w.ansatz.as_ref()) {
        if w.terms.len() == m {
            for (t, wt) in ansatz.terms.iter_mut().zip(&w.terms) {
                t.a = wt.a;
                t.b = wt.b;
            }
        }
    }
    ansatz.check(&config)?;

    let sys = TwistedSystem::assemble(config.clone());
    let g = &config.grid;
    let affine = kind == SectionKind::Affine;

    // ghost data for V: boundary minus the ansatz (which vanishes there)
    let ghost = match boundary {
        Some(f) => {
            let mut gv = vec![0.0; g.len()];
            for node in 0..g.len() {
                if g.kind[node] == NodeKind::Ghost {
                    gv[node] = f(g.position(node));
                }
            }
            Some(gv)
        }
        None => None,
    };
    let mut base = if affine { sys.translation_rhs() } else { vec![0.0; sys.len()] };
    if let Some(gv) = &ghost {
        sys.add_boundary_rhs(gv, affine, &mut base);
    } else if !g.periodic && affine {
        // zero data still carries the translations of ghost edges
        sys.add_boundary_rhs(&vec![0.0; g.len()], true, &mut base);
    }

    let mut x = match warm {
        Some(w) => initial_from(w, &config)?,
        None => vec![0.0; sys.len()],
    };
    let annuli: Vec<(f64, f64)> = (0..m).map(|i| default_annulus(&config, i)).collect();
    let mut report = SolveReport {
        cg_iterations: vec![],
        residual: 0.0,
        fixed_point_updates: vec![],
    };
    let sweeps = if opts.subtract_regular { opts.fixed_point_iterations.max(1) } else { 1 };
    for sweep in 0..sweeps {
        let mut rhs = base.clone();
        if !ansatz.is_zero() {
            add_source(&sys, &ansatz, opts.source, &mut rhs);
        }
        let rep = pcg(&sys, &rhs, &mut x, &opts.cg)?;
        report.cg_iterations.push(rep.iterations);
        report.residual = rep.residual;
        if !opts.subtract_regular || sweep + 1 == sweeps {
            break;
        }
        let field = assemble_field(&config, kind, &x, &ansatz);
        let mut update: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let mut next = ansatz.terms.clone();
        let fit_opts = FitOptions {
            extra_terms: opts.fit_extra_terms,
            ..Default::default()
        };
        for i in 0..m {
            let fit = fit_with_options(&field, i, sigma[i], annuli[i], &fit_opts)?;
            update = update.max((fit.a - next[i].a).norm()).max((fit.b - next[i].b).norm());
            scale = scale.max(fit.a.norm()).max(fit.b.norm()).max(sigma[i].norm());
            next[i].a = fit.a;
            next[i].b = fit.b;
        }
        let rel = if scale > 0.0 { update / scale } else { 0.0 };
        report.fixed_point_updates.push(rel);
        if rel <= opts.fixed_point_tol {
            break;
        }
        // V changes by the difference of the ansatz so the warm start stays valid
        for (u, &node) in g.nodes.iter().enumerate() {
            let q = g.position(node);
            let old = ansatz.eval(&config, q).0;
            let new = SingularAnsatz {
                terms: next.clone(),
                cutoff_radius: rc,
            }
            .eval(&config, q)
            .0;
            x[u] += old - new;
        }
        ansatz.terms = next;
    }
    let field = assemble_field_with_ghosts(&config, kind, &x, &ansatz, ghost.as_deref());
    Ok(Solution { field, report })
}

fn add_source(sys: &TwistedSystem, ansatz: &SingularAnsatz, rule: SourceRule, rhs: &mut [f64]) {
    let config = &sys.config;
    let g = &config.grid;
    let h = g.h;
    let inner = 0.5 * ansatz.cutoff_radius;
    let nearest = |q: Complex64| {
        config
            .points
            .iter()
            .map(|p| config.displacement(p.position, q).norm())
            .fold(f64::INFINITY, f64::min)
    };
    for (u, &node) in g.nodes.iter().enumerate() {
        let q = g.position(node);
        let r = nearest(q);
        if r >= ansatz.cutoff_radius + h {
            continue;
        }
        if rule == SourceRule::Continuum || r + h <= inner {
            rhs[u] += h * h * ansatz.eval(config, q).1;
            continue;
        }
        // -(K S) at this node with the sign transitions of its edges
        let mut ks = 4.0 * ansatz.eval(config, q).0;
        for l in &sys.links[u] {
            let nb = if l.kind == system::UNKNOWN { g.nodes[l.target as usize] } else { l.target as usize };
            ks -= l.transition.sign * ansatz.eval(config, g.position(nb)).0;
        }
        rhs[u] -= ks;
    }
}

fn assemble_field(config: &Arc<Config>, kind: SectionKind, x: &[f64], ansatz: &SingularAnsatz) -> TwistedField {
    assemble_field_with_ghosts(config, kind, x, ansatz, None)
}

fn assemble_field_with_ghosts(config: &Arc<Config>, kind: SectionKind, x: &[f64], ansatz: &SingularAnsatz, ghost: Option<&[f64]>) -> TwistedField {
    let g = &config.grid;
    let mut smooth = vec![f64::NAN; g.len()];
    for (u, &node) in g.nodes.iter().enumerate() {
        smooth[node] = x[u];
    }
    for node in 0..g.len() {
        if g.kind[node] == NodeKind::Ghost {
            smooth[node] = ghost.map_or(0.0, |gv| gv[node]);
        }
    }
    let a = if ansatz.is_zero() { None } else { Some(ansatz.clone()) };
    TwistedField::from_smooth(config.clone(), kind, smooth, a)
}

/// Unknown values for `config` taken from a field on the same geometry,
/// possibly on another grid (bilinear transfer of the smooth remainder).
fn initial_from(w: &TwistedField, config: &Arc<Config>) -> Result<Vec<f64>> {
    let g = &config.grid;
    if w.config.grid.len() == g.len() && w.config.grid.h == g.h {
        return Ok(g.nodes.iter().map(|&n| w.smooth[n]).collect());
    }
    let smooth_only = TwistedField::from_smooth(w.config.clone(), w.kind, w.smooth.clone(), None);
    g.nodes
        .iter()
        .map(|&n| {
            let q = g.position(n);
            // nodes near the coarse boundary may lack a full cell: start at 0
            Ok(smooth_only.eval(q).unwrap_or(0.0))
        })
        .collect()
}

/// Smallest eigenvalue of `-Δ_h` (the system divided by `h²`) by inverse
/// iteration with a small positive shift, to relative accuracy `rel_tol`.
pub fn smallest_eigenvalue(sys: &TwistedSystem, rel_tol: f64) -> Result<f64> {
    let n = sys.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty system".into()));
    }
    let h2 = sys.config.grid.h.powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut x);
    let shift = 1e-5;
    let cg = CgOptions {
        rel_tol: 1e-8,
        max_iter: 50_000,
        ..Default::default()
    };
    let mut kx = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    let mut y = vec![0.0; n];
    for _ in 0..500 {
        // x/λ is nearly the solution once x approaches the eigenvector
        let guess = if lambda.is_finite() && lambda > 0.0 { 1.0 / (lambda + shift) } else { 0.0 };
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = guess * xi;
        }
        match pcg_shifted(sys, shift, &x, &mut y, &cg) {
            // inexact inner solves only slow the outer iteration down
            Err(Error::NotConverged { residual, .. }) if residual < 1e-5 => {}
            r => {
                r?;
            }
        }
        normalize(&mut y);
        std::mem::swap(&mut x, &mut y);
        sys.apply(&x, &mut kx);
        let rq: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
        let change = (rq - lambda).abs();
        lambda = rq;
        // the Rayleigh quotient converges at twice the rate of the vector
        if change <= 0.1 * rel_tol * rq.abs() || rq.abs() < 1e-13 {
            return Ok(lambda / h2);
        }
    }
    Err(Error::NotConverged {
        iterations: 500,
        residual: lambda,
        history: vec![],
    })
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

#[cfg(test)]
mod tests;
