//! The n = 2 arena: a flat torus or a disc chart, an even set of branch
//! points, a system of cuts and the holonomy data of the flat affine bundle.
//!
//! Sections are stored in the *cut gauge*: one real value per grid node, with
//! every grid edge carrying the affine transition `u ↦ s·u + t` that expresses
//! the far node's value in the near node's chart. Crossing cut `k` gives the
//! reflection `(-1, c_k)`; crossing a torus seam gives a translation.

mod geometry;
mod grid;
mod holonomy;

pub use geometry::{distance_to_segment as segment_distance, frame_sqrt, segment_crossing, Crossing};
pub use grid::{Dir, Grid, NodeKind};
pub use holonomy::{holonomy_of_loop, path_transition, Affine};

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

pub const SCHEMA_VERSION: u32 = 1;

/// Cutoff radius of the canonical torus configuration, fixed across
/// resolutions (8 spacings at h = 1/64).
pub const CANONICAL_CUTOFF: f64 = 0.125;

/// Far-field data on the outer circle of a plane chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarField {
    Zero,
    OracleSupplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain2D {
    Torus { periods: [f64; 2] },
    PlaneChart { radius: f64, far_field: FarField },
}

/// A cut: a simple polyline leaving branch point `start`. It ends either at
/// branch point `end` or, on a plane chart, outside the outer circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutSpec {
    pub start: usize,
    pub end: Option<usize>,
    /// Interior vertices; for a boundary cut the last entry is the far end.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub via: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Representation {
    /// Translation part of the reflection across each cut.
    pub cut_translations: Vec<f64>,
    /// Translations across the two torus seams (x then y); must be zero on a
    /// plane chart.
    #[serde(default)]
    pub period_translations: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub spacing: f64,
    pub cutoff_radius: f64,
}

/// The raw, serializable configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub schema_version: u32,
    pub domain: Domain2D,
    pub points: Vec<[f64; 2]>,
    /// Chosen square roots of the per-point phase references; derived from the
    /// cut directions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<[f64; 2]>>,
    pub cuts: Vec<CutSpec>,
    pub representation: Representation,
    pub grid: GridSpec,
}

pub(crate) fn c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub(crate) fn arr(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl ConfigSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Torus `[0, L]²`-style configuration with straight cuts joining
    /// consecutive pairs `(p0, p1), (p2, p3), …`.
    pub fn torus_pairs(periods: [f64; 2], points: &[Complex64], cut_translations: &[f64], period_translations: [f64; 2], grid: GridSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            domain: Domain2D::Torus { periods },
            points: points.iter().map(|&p| arr(p)).collect(),
            frames: None,
            cuts: (0..points.len() / 2)
                .map(|k| CutSpec {
                    start: 2 * k,
                    end: Some(2 * k + 1),
                    via: vec![],
                })
                .collect(),
            representation: Representation {
                cut_translations: cut_translations.to_vec(),
                period_translations,
            },
            grid,
        }
    }

    /// The two-point smoke configuration on the unit torus: points at
    /// `(0.25, 0.5)` and `(0.75, 0.5)`, one straight cut, `c1 = 1` and a unit
    /// translation across the x-seam (the cut translation alone is a
    /// coboundary).
    pub fn canonical_torus(spacing: f64) -> Self {
        Self::torus_pairs(
            [1.0, 1.0],
            &[Complex64::new(0.25, 0.5), Complex64::new(0.75, 0.5)],
            &[1.0],
            [1.0, 0.0],
            GridSpec {
                spacing,
                cutoff_radius: CANONICAL_CUTOFF.max(8.0 * spacing),
            },
        )
    }

    /// Four points on the unit torus joined in two nearly horizontal cuts,
    /// slightly off any symmetry, with a generic class.
    pub fn four_point_torus(spacing: f64) -> Self {
        let c = Complex64::new;
        Self::torus_pairs(
            [1.0, 1.0],
            &[c(0.22, 0.28), c(0.74, 0.31), c(0.27, 0.71), c(0.76, 0.69)],
            &[1.0, 0.6],
            [1.0, 0.5],
            GridSpec {
                spacing,
                cutoff_radius: CANONICAL_CUTOFF.max(8.0 * spacing),
            },
        )
    }

    /// Four-point torus on which the approximate Newton inverse contracts
    /// (`‖K⁴‖ ≈ 0.05` on the range of the derivative, where `K` is the error
    /// map of one step).
    pub fn newton_reference_torus(spacing: f64) -> Self {
        let c = Complex64::new;
        Self::torus_pairs(
            [1.0, 1.0],
            &[c(0.369, 0.392), c(0.545, 0.316), c(0.718, 0.451), c(0.535, 0.515)],
            &[1.006, 1.475],
            [3.201, 1.567],
            GridSpec {
                spacing,
                cutoff_radius: 0.0625f64.max(8.0 * spacing),
            },
        )
    }

    /// Plane chart with radial cuts from each point straight out past the
    /// outer circle.
    pub fn plane_radial(radius: f64, far_field: FarField, points: &[Complex64], cut_translations: &[f64], grid: GridSpec) -> Self {
        let cuts = points
            .iter()
            .enumerate()
            .map(|(k, &p)| CutSpec {
                start: k,
                end: None,
                via: vec![arr(p / p.norm() * (radius + 4.0 * grid.spacing + 1.0))],
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            domain: Domain2D::PlaneChart { radius, far_field },
            points: points.iter().map(|&p| arr(p)).collect(),
            frames: None,
            cuts,
            representation: Representation {
                cut_translations: cut_translations.to_vec(),
                period_translations: [0.0, 0.0],
            },
            grid,
        }
    }

    pub fn points_c(&self) -> Vec<Complex64> {
        self.points.iter().map(|&p| c(p)).collect()
    }

    pub fn with_points(&self, points: &[Complex64]) -> Self {
        let mut out = self.clone();
        out.points = points.iter().map(|&p| arr(p)).collect();
        out
    }

    pub fn with_spacing(&self, spacing: f64) -> Self {
        let mut out = self.clone();
        out.grid.spacing = spacing;
        out
    }

    pub fn validate(&self) -> Result<Config> {
        Config::new(self.clone())
    }
}

/// Per-point data derived at validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointInfo {
    pub position: Complex64,
    /// Index of the cut having this point as an endpoint.
    pub cut: usize,
    /// Direction in which that cut leaves the point.
    pub cut_angle: f64,
    /// Chosen square root of the phase reference.
    pub frame: Complex64,
    /// Length of the straight initial piece of the cut.
    pub straight_length: f64,
}

/// A validated configuration with its grid and precomputed edge transitions.
#[derive(Debug, Clone)]
pub struct Config {
    pub spec: ConfigSpec,
    pub grid: Grid,
    pub points: Vec<PointInfo>,
    /// Cut polylines, vertex lists in domain coordinates.
    pub cut_paths: Vec<Vec<Complex64>>,
    /// Every grid edge that crosses a cut, keyed by (node, direction), with the
    /// crossings in order from the node outwards.
    pub crossings: HashMap<(usize, Dir), Vec<Crossing>>,
    pub gauge_tag: u64,
}

impl Config {
    pub fn new(spec: ConfigSpec) -> Result<Self> {
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                spec.schema_version
            )));
        }
        let h = spec.grid.spacing;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidConfig("grid spacing must be positive".into()));
        }
        if spec.grid.cutoff_radius < 8.0 * h - 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "cutoff radius {} is below 8 grid spacings ({})",
                spec.grid.cutoff_radius,
                8.0 * h
            )));
        }
        match spec.domain {
            Domain2D::Torus { periods } => {
                if !(periods[0] > 0.0 && periods[1] > 0.0) {
                    return Err(Error::InvalidConfig("torus periods must be positive".into()));
                }
            }
            Domain2D::PlaneChart { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidConfig("plane chart radius must be positive".into()));
                }
                if spec.representation.period_translations != [0.0, 0.0] {
                    return Err(Error::InvalidConfig("period translations require a torus".into()));
                }
            }
        }
        let pts = spec.points_c();
        let m = pts.len();
        if m < 2 || m % 2 == 1 {
            return Err(Error::InvalidConfig(format!("branch point count must be even and at least 2, got {m}")));
        }
        for (i, p) in pts.iter().enumerate() {
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::InvalidConfig(format!("point {i} is not finite")));
            }
            let inside = match spec.domain {
                Domain2D::Torus { periods } => {
                    p.re > 2.0 * h && p.re < periods[0] - 2.0 * h && p.im > 2.0 * h && p.im < periods[1] - 2.0 * h
                }
                Domain2D::PlaneChart { radius, .. } => p.norm() < radius - 2.0 * h,
            };
            if !inside {
                return Err(Error::InvalidConfig(format!("point {i} at {p} is not interior to the domain")));
            }
            for (j, q) in pts.iter().enumerate().skip(i + 1) {
                let d = (p - q).norm();
                if d < 10.0 * h {
                    return Err(Error::InvalidConfig(format!(
                        "points {i} and {j} are {d:.3e} apart, below 10 grid spacings"
                    )));
                }
            }
        }
        if spec.representation.cut_translations.len() != spec.cuts.len() {
            return Err(Error::InvalidConfig(format!(
                "{} cut translations for {} cuts",
                spec.representation.cut_translations.len(),
                spec.cuts.len()
            )));
        }

        let mut owner = vec![None; m];
        let mut cut_paths = Vec::with_capacity(spec.cuts.len());
        for (k, cut) in spec.cuts.iter().enumerate() {
            let mut ends = vec![cut.start];
            if let Some(e) = cut.end {
                ends.push(e);
            }
            for &e in &ends {
                if e >= m {
                    return Err(Error::InvalidConfig(format!("cut {k} refers to missing point {e}")));
                }
                if let Some(other) = owner[e] {
                    return Err(Error::InvalidConfig(format!("cuts {other} and {k} share branch point {e}")));
                }
                owner[e] = Some(k);
            }
            let mut path = vec![pts[cut.start]];
            path.extend(cut.via.iter().map(|&v| c(v)));
            match (cut.end, &spec.domain) {
                (Some(e), _) => path.push(pts[e]),
                (None, Domain2D::PlaneChart { radius, .. }) => {
                    let far = *path.last().unwrap();
                    if path.len() < 2 || far.norm() < radius + 2.0 * h {
                        return Err(Error::InvalidConfig(format!("boundary cut {k} must end outside the outer circle")));
                    }
                }
                (None, Domain2D::Torus { .. }) => {
                    return Err(Error::InvalidConfig(format!("cut {k} on a torus must join two branch points")));
                }
            }
            for w in path.windows(2) {
                if (w[1] - w[0]).norm() == 0.0 {
                    return Err(Error::InvalidConfig(format!("cut {k} has a zero-length segment")));
                }
            }
            if let Domain2D::Torus { periods } = spec.domain {
                // the fundamental square is convex, so vertices one spacing inside
                // keep the whole cut (and every wrapped edge) off the seams
                for v in &path {
                    if !(v.re > h && v.re < periods[0] - h && v.im > h && v.im < periods[1] - h) {
                        return Err(Error::InvalidConfig(format!("cut {k} leaves the fundamental domain at {v}")));
                    }
                }
            }
            cut_paths.push(path);
        }
        for (i, o) in owner.iter().enumerate() {
            if o.is_none() {
                return Err(Error::InvalidConfig(format!("branch point {i} is not the endpoint of any cut")));
            }
        }
        // disjointness of cuts, and cuts against foreign points
        for a in 0..cut_paths.len() {
            for b in a + 1..cut_paths.len() {
                if geometry::polylines_intersect(&cut_paths[a], &cut_paths[b]) {
                    return Err(Error::InvalidConfig(format!("cuts {a} and {b} intersect")));
                }
            }
            for (i, p) in pts.iter().enumerate() {
                if owner[i] == Some(a) {
                    continue;
                }
                let d = geometry::distance_to_polyline(*p, &cut_paths[a]);
                if d < 2.0 * h {
                    return Err(Error::InvalidConfig(format!("cut {a} passes within {d:.3e} of branch point {i}")));
                }
            }
        }

        let mut points = Vec::with_capacity(m);
        for (i, p) in pts.iter().enumerate() {
            let k = owner[i].unwrap();
            let path = &cut_paths[k];
            let (dir, len) = if spec.cuts[k].start == i {
                (path[1] - path[0], (path[1] - path[0]).norm())
            } else {
                let n = path.len();
                (path[n - 2] - path[n - 1], (path[n - 2] - path[n - 1]).norm())
            };
            let cut_angle = dir.arg();
            let frame = match &spec.frames {
                Some(f) => {
                    if f.len() != m {
                        return Err(Error::InvalidConfig(format!("{} frames for {m} points", f.len())));
                    }
                    let root = c(f[i]);
                    if (root.norm() - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidConfig(format!("frame {i} is not a unit complex number")));
                    }
                    let gap = ((root * root).arg() - cut_angle).rem_euclid(2.0 * PI);
                    if gap < 1e-3 || gap > 2.0 * PI - 1e-3 {
                        return Err(Error::InvalidConfig(format!("frame {i} points along its cut")));
                    }
                    root
                }
                None => default_frame(cut_angle),
            };
            points.push(PointInfo {
                position: *p,
                cut: k,
                cut_angle,
                frame,
                straight_length: len,
            });
        }

        let grid = Grid::new(&spec.domain, h)?;
        let crossings = geometry::crossing_table(&grid, &cut_paths);
        let gauge_tag = gauge_tag(&cut_paths, &spec.representation);
        Ok(Self {
            spec,
            grid,
            points,
            cut_paths,
            crossings,
            gauge_tag,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.grid.h
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.spec.grid.cutoff_radius
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.spec.domain, Domain2D::Torus { .. })
    }

    pub fn cut_translation(&self, cut: usize) -> f64 {
        self.spec.representation.cut_translations[cut]
    }

    /// The transition across cut `k` of the affine bundle.
    pub fn cut_transition(&self, k: usize) -> Affine {
        Affine::reflection(self.cut_translation(k))
    }

    /// Value of the reflection's fixed point at point `i`: the constant term
    /// of a section of the affine bundle near that point.
    pub fn fixed_value(&self, i: usize) -> f64 {
        0.5 * self.cut_translation(self.points[i].cut)
    }

    /// True when the class of the representation vanishes, i.e. the affine
    /// bundle has a parallel section.
    pub fn class_is_zero(&self) -> bool {
        let r = &self.spec.representation;
        let c0 = r.cut_translations.first().copied().unwrap_or(0.0);
        let equal = r.cut_translations.iter().all(|&c| c == c0);
        match self.spec.domain {
            // conjugating by a constant shifts every c_k by the same amount
            Domain2D::Torus { .. } => r.period_translations == [0.0, 0.0] && equal,
            Domain2D::PlaneChart { far_field, .. } => {
                far_field == FarField::Zero && r.cut_translations.iter().all(|&c| c == 0.0)
            }
        }
    }

    /// Transition `T` on edge `(node, dir)`: the value at the far node, in the
    /// chart of `node`, is `T(u_far)`. Includes cut and seam crossings; the
    /// homogeneous version uses `Affine::linear_part`.
    pub fn edge_transition(&self, node: usize, dir: Dir) -> Affine {
        let mut t = Affine::IDENTITY;
        if let Some(list) = self.crossings.get(&(node, dir)) {
            for cr in list {
                t = t.compose(&self.cut_transition(cr.cut));
            }
        }
        if let Some(seam) = self.grid.seam_shift(node, dir) {
            let r = &self.spec.representation.period_translations;
            t = t.compose(&Affine::translation(seam.0 * r[0] + seam.1 * r[1]));
        }
        t
    }

    /// Displacement from `from` to `to` on the domain (minimum image on a torus).
    pub fn displacement(&self, from: Complex64, to: Complex64) -> Complex64 {
        let d = to - from;
        match self.spec.domain {
            Domain2D::Torus { periods } => Complex64::new(
                d.re - periods[0] * (d.re / periods[0]).round(),
                d.im - periods[1] * (d.im / periods[1]).round(),
            ),
            Domain2D::PlaneChart { .. } => d,
        }
    }

    /// Local square-root coordinate `s = (q - p_i)^{1/2}` at point `i` in its
    /// stored frame, cut along the point's own cut. `d = q - p_i`.
    pub fn local_sqrt(&self, i: usize, d: Complex64) -> Complex64 {
        let info = &self.points[i];
        frame_sqrt(d, info.cut_angle, info.frame)
    }

    /// Largest radius `ρ` such that the disc of radius `ρ` about point `i`
    /// meets no other point, no other cut, no seam, the outer circle, nor the
    /// bent part of its own cut.
    pub fn clear_radius(&self, i: usize) -> f64 {
        let p = self.points[i].position;
        let mut r = self.points[i].straight_length;
        for (j, q) in self.points.iter().enumerate() {
            if j != i {
                r = r.min(self.displacement(p, q.position).norm());
            }
        }
        for (k, path) in self.cut_paths.iter().enumerate() {
            if k != self.points[i].cut {
                r = r.min(geometry::distance_to_polyline(p, path));
            }
        }
        match self.spec.domain {
            Domain2D::Torus { periods } => {
                r = r.min(p.re).min(periods[0] - p.re).min(p.im).min(periods[1] - p.im);
            }
            Domain2D::PlaneChart { radius, .. } => r = r.min(radius - p.norm()),
        }
        r
    }
}

/// Default frame: the square root of the unit vector opposite to the cut that
/// agrees with the principal branch.
pub fn default_frame(cut_angle: f64) -> Complex64 {
    crate::numerics::sqrt_with_cut(Complex64::from_polar(1.0, cut_angle + PI), cut_angle)
}

fn gauge_tag(paths: &[Vec<Complex64>], rep: &Representation) -> u64 {
    // FNV-1a over the bit patterns; stable across runs and platforms
    let mut hsh: u64 = 0xcbf29ce484222325;
    let mut eat = |x: f64| {
        for b in x.to_bits().to_le_bytes() {
            hsh ^= b as u64;
            hsh = hsh.wrapping_mul(0x100000001b3);
        }
    };
    for p in paths {
        for v in p {
            eat(v.re);
            eat(v.im);
        }
        eat(f64::NAN);
    }
    for &t in &rep.cut_translations {
        eat(t);
    }
    eat(rep.period_translations[0]);
    eat(rep.period_translations[1]);
    hsh
}

#[cfg(test)]
mod tests;
