use super::Domain2D;
use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    E,
    W,
    N,
    S,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::E, Dir::W, Dir::N, Dir::S];

    pub fn offset(self) -> Complex64 {
        match self {
            Dir::E => Complex64::new(1.0, 0.0),
            Dir::W => Complex64::new(-1.0, 0.0),
            Dir::N => Complex64::new(0.0, 1.0),
            Dir::S => Complex64::new(0.0, -1.0),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::E => Dir::W,
            Dir::W => Dir::E,
            Dir::N => Dir::S,
            Dir::S => Dir::N,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Carries an unknown of the linear system.
    Unknown,
    /// Outside the disc but adjacent to it: holds Dirichlet data.
    Ghost,
    Outside,
}

/// Cell-centred node lattice: node `(i, j)` sits at
/// `origin + ((i + ½)h, (j + ½)h)`, so lattice points `k·h` (relative to the
/// origin) are cell corners and never nodes.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: Complex64,
    pub periodic: bool,
    pub kind: Vec<NodeKind>,
    /// Node index → unknown index (`u32::MAX` when not an unknown).
    pub unknown_of: Vec<u32>,
    /// Unknown index → node index.
    pub nodes: Vec<usize>,
}

impl Grid {
    pub fn new(domain: &Domain2D, h: f64) -> Result<Self> {
        match *domain {
            Domain2D::Torus { periods } => {
                let nx = (periods[0] / h).round() as usize;
                let ny = (periods[1] / h).round() as usize;
                if ((nx as f64) * h - periods[0]).abs() > 1e-9 * periods[0] || ((ny as f64) * h - periods[1]).abs() > 1e-9 * periods[1] {
                    return Err(Error::InvalidConfig(format!(
                        "spacing {h} does not divide the torus periods {periods:?}"
                    )));
                }
                if nx < 4 || ny < 4 {
                    return Err(Error::InvalidConfig("torus grid needs at least 4 nodes per side".into()));
                }
                let n = nx * ny;
                Ok(Self {
                    nx,
                    ny,
                    h,
                    origin: Complex64::new(0.0, 0.0),
                    periodic: true,
                    kind: vec![NodeKind::Unknown; n],
                    unknown_of: (0..n as u32).collect(),
                    nodes: (0..n).collect(),
                })
            }
            Domain2D::PlaneChart { radius, .. } => {
                let half = (radius / h).ceil() as usize + 2;
                let nx = 2 * half;
                let origin = Complex64::new(-(half as f64) * h, -(half as f64) * h);
                let mut g = Self {
                    nx,
                    ny: nx,
                    h,
                    origin,
                    periodic: false,
                    kind: vec![NodeKind::Outside; nx * nx],
                    unknown_of: vec![u32::MAX; nx * nx],
                    nodes: Vec::new(),
                };
                for node in 0..nx * nx {
                    if g.position(node).norm() < radius {
                        g.kind[node] = NodeKind::Unknown;
                        g.unknown_of[node] = g.nodes.len() as u32;
                        g.nodes.push(node);
                    }
                }
                for k in 0..g.nodes.len() {
                    let node = g.nodes[k];
                    for d in Dir::ALL {
                        if let Some(b) = g.neighbor(node, d) {
                            if g.kind[b] == NodeKind::Outside {
                                g.kind[b] = NodeKind::Ghost;
                            }
                        }
                    }
                }
                Ok(g)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_unknowns(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    pub fn position(&self, node: usize) -> Complex64 {
        let (i, j) = self.ij(node);
        self.origin + Complex64::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    pub fn neighbor(&self, node: usize, dir: Dir) -> Option<usize> {
        let (i, j) = self.ij(node);
        let (nx, ny) = (self.nx, self.ny);
        let (ii, jj) = match dir {
            Dir::E if i + 1 < nx => (i + 1, j),
            Dir::E if self.periodic => (0, j),
            Dir::W if i > 0 => (i - 1, j),
            Dir::W if self.periodic => (nx - 1, j),
            Dir::N if j + 1 < ny => (i, j + 1),
            Dir::N if self.periodic => (i, 0),
            Dir::S if j > 0 => (i, j - 1),
            Dir::S if self.periodic => (i, ny - 1),
            _ => return None,
        };
        Some(self.node(ii, jj))
    }

    /// Coefficients `(a, b)` of the seam translations picked up along the
    /// edge, when the edge wraps around the torus.
    pub fn seam_shift(&self, node: usize, dir: Dir) -> Option<(f64, f64)> {
        if !self.periodic {
            return None;
        }
        let (i, j) = self.ij(node);
        match dir {
            Dir::E if i + 1 == self.nx => Some((1.0, 0.0)),
            Dir::W if i == 0 => Some((-1.0, 0.0)),
            Dir::N if j + 1 == self.ny => Some((0.0, 1.0)),
            Dir::S if j == 0 => Some((0.0, -1.0)),
            _ => None,
        }
    }

    /// Lattice index of the node nearest to `q`, clamped to the grid.
    pub fn clamp_index(&self, q: Complex64) -> (usize, usize) {
        let f = |x: f64, n: usize| ((x / self.h - 0.5).round().max(0.0) as usize).min(n - 1);
        let d = q - self.origin;
        (f(d.re, self.nx), f(d.im, self.ny))
    }

    /// Lower-left node `(i, j)` of the cell containing `q` and the bilinear
    /// weights `(fx, fy)` in `[0, 1)`. Indices may wrap on a torus.
    pub fn cell(&self, q: Complex64) -> Option<(usize, usize, f64, f64)> {
        let d = q - self.origin;
        let gx = d.re / self.h - 0.5;
        let gy = d.im / self.h - 0.5;
        let (fi, fj) = (gx.floor(), gy.floor());
        let (fx, fy) = (gx - fi, gy - fj);
        if self.periodic {
            let i = fi.rem_euclid(self.nx as f64) as usize;
            let j = fj.rem_euclid(self.ny as f64) as usize;
            Some((i, j, fx, fy))
        } else if fi < 0.0 || fj < 0.0 || fi as usize + 1 >= self.nx || fj as usize + 1 >= self.ny {
            None
        } else {
            Some((fi as usize, fj as usize, fx, fy))
        }
    }
}
