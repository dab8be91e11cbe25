use crate::domain::{Affine, Config, Dir, NodeKind};
use std::sync::Arc;

pub(crate) const GHOST: u8 = 1;
pub(crate) const UNKNOWN: u8 = 0;

/// One stencil neighbour of an unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    /// Unknown index, or node index for a ghost.
    pub target: u32,
    pub kind: u8,
    pub transition: Affine,
}

/// The 5-point twisted Laplacian `K = 4I - S` on the unknowns of a validated
/// configuration, where `S` couples neighbours with the sign of the edge
/// transition. Right-hand sides collect translations and Dirichlet data.
#[derive(Debug, Clone)]
pub struct TwistedSystem {
    pub config: Arc<Config>,
    pub links: Vec<[Link; 4]>,
    pub twisted: bool,
}

impl TwistedSystem {
    /// Assembles the twisted system (cut crossings flip the coupling sign).
    pub fn assemble(config: Arc<Config>) -> Self {
        Self::build(config, true)
    }

    /// Same stencil with every transition replaced by the identity.
    pub fn assemble_untwisted(config: Arc<Config>) -> Self {
        Self::build(config, false)
    }

    fn build(config: Arc<Config>, twisted: bool) -> Self {
        let g = &config.grid;
        let mut links = Vec::with_capacity(g.num_unknowns());
        for &node in &g.nodes {
            let mut row = [Link {
                target: 0,
                kind: UNKNOWN,
                transition: Affine::IDENTITY,
            }; 4];
            for (slot, d) in Dir::ALL.iter().enumerate() {
                let b = g.neighbor(node, *d).expect("unknowns have four neighbours");
                let transition = if twisted {
                    config.edge_transition(node, *d)
                } else {
                    Affine::IDENTITY
                };
                row[slot] = match g.kind[b] {
                    NodeKind::Unknown => Link {
                        target: g.unknown_of[b],
                        kind: UNKNOWN,
                        transition,
                    },
                    _ => Link {
                        target: b as u32,
                        kind: GHOST,
                        transition,
                    },
                };
            }
            links.push(row);
        }
        Self { config, links, twisted }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// `y = K x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, row) in self.links.iter().enumerate() {
            let mut acc = 4.0 * x[i];
            for l in row {
                if l.kind == UNKNOWN {
                    acc -= l.transition.sign * x[l.target as usize];
                }
            }
            y[i] = acc;
        }
    }

    /// Sum of edge translations per unknown: the right-hand side for a section
    /// of the affine bundle (`K u = Σ t`).
    pub fn translation_rhs(&self) -> Vec<f64> {
        self.links.iter().map(|row| row.iter().map(|l| l.transition.shift).sum()).collect()
    }

    /// Adds the Dirichlet contributions `s·g(node) (+ t)` of ghost neighbours;
    /// `ghost_value` is indexed by node.
    pub fn add_boundary_rhs(&self, ghost_value: &[f64], affine: bool, rhs: &mut [f64]) {
        for (i, row) in self.links.iter().enumerate() {
            for l in row {
                if l.kind == GHOST {
                    let v = ghost_value[l.target as usize];
                    rhs[i] += l.transition.sign * v + if affine { l.transition.shift } else { 0.0 };
                }
            }
        }
    }

    /// Sparse triplets `(row, col, value)` of `K`, merging repeated entries.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut map = std::collections::BTreeMap::new();
        for (i, row) in self.links.iter().enumerate() {
            *map.entry((i, i)).or_insert(0.0) += 4.0;
            for l in row {
                if l.kind == UNKNOWN {
                    *map.entry((i, l.target as usize)).or_insert(0.0) -= l.transition.sign;
                }
            }
        }
        map.into_iter().map(|((i, j), v)| (i, j, v)).collect()
    }

    /// Largest `|K_ij - K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.triplets();
        let map: std::collections::HashMap<(usize, usize), f64> = t.iter().map(|&(i, j, v)| ((i, j), v)).collect();
        t.iter()
            .map(|&(i, j, v)| (v - map.get(&(j, i)).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }
}
