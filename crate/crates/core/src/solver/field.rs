use super::ansatz::SingularAnsatz;
use crate::domain::{path_transition, Affine, Config, Dir, NodeKind};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

/// Which bundle a field is a section of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    /// The affine bundle: transitions carry translations.
    Affine,
    /// The linear bundle: sign transitions only.
    Linear,
}

impl SectionKind {
    pub fn transition(self, t: Affine) -> Affine {
        match self {
            SectionKind::Affine => t,
            SectionKind::Linear => t.linear_part(),
        }
    }
}

/// Grid sampling of a section in the cut gauge, optionally with an analytic
/// singular part: the field is `S + V` with `S` the ansatz and `V` the nodal
/// values of the smooth remainder.
#[derive(Debug, Clone)]
pub struct TwistedField {
    pub config: Arc<Config>,
    pub kind: SectionKind,
    /// Smooth remainder per grid node (NaN where undefined).
    pub smooth: Vec<f64>,
    pub ansatz: Option<SingularAnsatz>,
    pub gauge_tag: u64,
}

impl TwistedField {
    pub fn from_smooth(config: Arc<Config>, kind: SectionKind, smooth: Vec<f64>, ansatz: Option<SingularAnsatz>) -> Self {
        let gauge_tag = config.gauge_tag;
        Self {
            config,
            kind,
            smooth,
            ansatz,
            gauge_tag,
        }
    }

    /// Total value at a grid node.
    pub fn node_value(&self, node: usize) -> f64 {
        let v = self.smooth[node];
        match &self.ansatz {
            Some(a) => v + a.eval(&self.config, self.config.grid.position(node)).0,
            None => v,
        }
    }

    /// Total values at every grid node.
    pub fn values(&self) -> Vec<f64> {
        (0..self.smooth.len()).map(|n| self.node_value(n)).collect()
    }

    fn same_gauge(&self, other: &TwistedField) -> Result<()> {
        if self.gauge_tag != other.gauge_tag || self.kind != other.kind || self.smooth.len() != other.smooth.len() {
            return Err(Error::InvalidArgument("fields live on different configurations or gauges".into()));
        }
        Ok(())
    }

    /// Largest nodal difference from another field of the same gauge.
    pub fn max_difference(&self, other: &TwistedField) -> Result<f64> {
        self.same_gauge(other)?;
        let a = self.values();
        let b = other.values();
        Ok(a.iter()
            .zip(&b)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    /// Value at an arbitrary point: the ansatz plus the bilinear interpolant of
    /// the smooth remainder, each corner transported into the chart of `q`.
    pub fn eval(&self, q: Complex64) -> Result<f64> {
        let cfg = &self.config;
        let g = &cfg.grid;
        let (i, j, fx, fy) = g.cell(q).ok_or_else(|| Error::InvalidArgument(format!("{q} is outside the grid")))?;
        let base = {
            let d = q - g.origin;
            g.origin + Complex64::new(((d.re / g.h - 0.5).floor() + 0.5) * g.h, ((d.im / g.h - 0.5).floor() + 0.5) * g.h)
        };
        let mut acc = 0.0;
        for (di, dj, w) in [(0, 0, (1.0 - fx) * (1.0 - fy)), (1, 0, fx * (1.0 - fy)), (0, 1, (1.0 - fx) * fy), (1, 1, fx * fy)] {
            if w == 0.0 {
                continue;
            }
            let ii = if g.periodic { (i + di) % g.nx } else { i + di };
            let jj = if g.periodic { (j + dj) % g.ny } else { j + dj };
            let node = g.node(ii, jj);
            if g.kind[node] == NodeKind::Outside {
                return Err(Error::InvalidArgument(format!("{q} is outside the domain")));
            }
            let corner = base + Complex64::new(di as f64 * g.h, dj as f64 * g.h);
            let t = self.kind.transition(path_transition(cfg, &[q, corner])?);
            acc += w * t.apply(self.smooth[node]);
        }
        let s = match &self.ansatz {
            Some(a) => a.eval(cfg, q).0,
            None => 0.0,
        };
        Ok(acc + s)
    }

    /// Discrete Dirichlet energy `Σ_edges (u_a - T(u_b))²`, gauge invariant.
    pub fn energy(&self) -> f64 {
        let cfg = &self.config;
        let g = &cfg.grid;
        let vals = self.values();
        let mut e = 0.0;
        for node in 0..g.len() {
            if g.kind[node] == NodeKind::Outside {
                continue;
            }
            for d in [Dir::E, Dir::N] {
                let Some(b) = g.neighbor(node, d) else { continue };
                let inside = g.kind[node] == NodeKind::Unknown || g.kind[b] == NodeKind::Unknown;
                if !inside || g.kind[b] == NodeKind::Outside {
                    continue;
                }
                let t = self.kind.transition(cfg.edge_transition(node, d));
                let diff = vals[node] - t.apply(vals[b]);
                e += diff * diff;
            }
        }
        e
    }

    /// The same section expressed in the cut gauge of `target`, which must
    /// share the grid, points and translations but may route cuts differently.
    /// Each node value is carried from a common base point along a path in
    /// both gauges.
    pub fn regauge(&self, target: Arc<Config>) -> Result<TwistedField> {
        let src = &self.config;
        if target.grid.len() != src.grid.len() || target.num_points() != src.num_points() {
            return Err(Error::InvalidArgument("regauge needs the same grid and points".into()));
        }
        if self.ansatz.as_ref().is_some_and(|a| !a.is_zero()) {
            return Err(Error::InvalidArgument("regauge acts on fields without a singular ansatz".into()));
        }
        let base = regauge_base(src, &target)?;
        let vals = self.values();
        let mut out = vec![f64::NAN; vals.len()];
        for node in 0..vals.len() {
            if src.grid.kind[node] == NodeKind::Outside {
                continue;
            }
            let q = src.grid.position(node);
            // u_base = T_old(u_q) = T_new(u'_q)  ⇒  u'_q = T_new⁻¹ T_old u_q
            let t_old = self.kind.transition(path_transition(src, &[base, q])?);
            let t_new = self.kind.transition(path_transition(&target, &[base, q])?);
            out[node] = t_new.inverse().compose(&t_old).apply(vals[node]);
        }
        Ok(TwistedField::from_smooth(target, self.kind, out, None))
    }

    /// CSV dump: `x,y,value` for every node carrying a value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value")?;
        let vals = self.values();
        for (node, v) in vals.iter().enumerate() {
            if v.is_finite() {
                let p = self.config.grid.position(node);
                writeln!(w, "{:e},{:e},{:e}", p.re, p.im, v)?;
            }
        }
        Ok(())
    }

    /// Compact binary dump of the nodal values, see [`GridHeader`].
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.config.grid;
        let header = GridHeader {
            nx: g.nx as u32,
            ny: g.ny as u32,
            spacing: g.h,
            origin: [g.origin.re, g.origin.im],
            gauge_tag: self.gauge_tag,
        };
        header.write(&mut w)?;
        for v in self.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Header of the binary grid format: the magic `BRGRID01`, then little-endian
/// `nx: u32, ny: u32, spacing: f64, origin: [f64; 2], gauge_tag: u64`, then
/// `nx·ny` little-endian `f64` node values in row-major order (x fastest).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub nx: u32,
    pub ny: u32,
    pub spacing: f64,
    pub origin: [f64; 2],
    pub gauge_tag: u64,
}

pub const GRID_MAGIC: &[u8; 8] = b"BRGRID01";

impl GridHeader {
    fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&self.nx.to_le_bytes())?;
        w.write_all(&self.ny.to_le_bytes())?;
        w.write_all(&self.spacing.to_le_bytes())?;
        w.write_all(&self.origin[0].to_le_bytes())?;
        w.write_all(&self.origin[1].to_le_bytes())?;
        w.write_all(&self.gauge_tag.to_le_bytes())?;
        Ok(())
    }
}

/// Reads a binary grid dump back into its header and values.
pub fn read_binary<R: Read>(mut r: R) -> Result<(GridHeader, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Io("not a grid dump".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u32_ = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut b4)?;
        Ok(u32::from_le_bytes(b4))
    };
    let nx = u32_(&mut r)?;
    let ny = u32_(&mut r)?;
    let mut f = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut b8)?;
        Ok(b8)
    };
    let spacing = f64::from_le_bytes(f(&mut r)?);
    let ox = f64::from_le_bytes(f(&mut r)?);
    let oy = f64::from_le_bytes(f(&mut r)?);
    let gauge_tag = u64::from_le_bytes(f(&mut r)?);
    let mut values = Vec::with_capacity((nx * ny) as usize);
    for _ in 0..nx as usize * ny as usize {
        values.push(f64::from_le_bytes(f(&mut r)?));
    }
    Ok((
        GridHeader {
            nx,
            ny,
            spacing,
            origin: [ox, oy],
            gauge_tag,
        },
        values,
    ))
}

fn regauge_base(a: &Config, b: &Config) -> Result<Complex64> {
    // a grid node far from every cut of either gauge
    let g = &a.grid;
    let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
    for &node in g.nodes.iter().step_by(7) {
        let q = g.position(node);
        let d = a
            .cut_paths
            .iter()
            .chain(b.cut_paths.iter())
            .flat_map(|p| p.windows(2).map(move |s| crate::domain::segment_distance(q, s[0], s[1])))
            .fold(f64::INFINITY, f64::min);
        if d > best.0 {
            best = (d, q);
        }
    }
    if best.0 <= 0.0 {
        return Err(Error::InvalidArgument("no base point clear of both cut systems".into()));
    }
    Ok(best.1)
}
