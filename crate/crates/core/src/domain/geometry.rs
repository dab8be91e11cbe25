use super::grid::{Dir, Grid};
use crate::numerics::sqrt_with_cut;
use num_complex::Complex64;
use std::collections::HashMap;

/// Square root of `d` cut along `cut_angle`, with sign fixed by the frame: the
/// root equals `frame` at the unit vector `frame²`.
pub fn frame_sqrt(d: Complex64, cut_angle: f64, frame: Complex64) -> Complex64 {
    let w = sqrt_with_cut(d, cut_angle);
    let reference = sqrt_with_cut(frame * frame, cut_angle);
    if (reference - frame).norm() < 1.0 {
        w
    } else {
        -w
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// One crossing of a grid edge with a cut segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub cut: usize,
    pub segment: usize,
    /// Position along the edge, in `[0, 1]`.
    pub t: f64,
    /// `+1` when the edge passes from the left of the cut to its right.
    pub sign: i8,
}

/// Intersection of the edge `a → b` with the cut segment `c → d`.
///
/// A point exactly on the cut line counts as lying on its left, and the cut
/// parameter is taken in `[0, 1)`, so that every edge has a definite answer and
/// chains of edges are counted consistently.
pub fn segment_crossing(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Option<(f64, i8)> {
    let e = d - c;
    let sa = cross(e, a - c);
    let sb = cross(e, b - c);
    let left_a = sa >= 0.0;
    let left_b = sb >= 0.0;
    if left_a == left_b {
        return None;
    }
    let t = sa / (sa - sb);
    let x = a + (b - a) * t;
    let u = ((x - c).re * e.re + (x - c).im * e.im) / e.norm_sqr();
    if !(0.0..1.0).contains(&u) {
        return None;
    }
    Some((t, if left_a { 1 } else { -1 }))
}

fn segments_touch(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let tiny = 1e-14 * ((b - a).norm() + (d - c).norm());
    distance_to_segment(c, a, b) <= tiny
        || distance_to_segment(d, a, b) <= tiny
        || distance_to_segment(a, c, d) <= tiny
        || distance_to_segment(b, c, d) <= tiny
}

pub(crate) fn polylines_intersect(p: &[Complex64], q: &[Complex64]) -> bool {
    p.windows(2)
        .any(|s| q.windows(2).any(|t| segments_touch(s[0], s[1], t[0], t[1])))
}

pub fn distance_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let e = b - a;
    let l2 = e.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let u = (((p - a).re * e.re + (p - a).im * e.im) / l2).clamp(0.0, 1.0);
    (p - (a + e * u)).norm()
}

pub(crate) fn distance_to_polyline(p: Complex64, path: &[Complex64]) -> f64 {
    path.windows(2)
        .map(|s| distance_to_segment(p, s[0], s[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Crossings of `a → b` with every cut, sorted along the segment.
pub(crate) fn crossings_of_segment(a: Complex64, b: Complex64, paths: &[Vec<Complex64>]) -> Vec<Crossing> {
    let mut out = Vec::new();
    for (k, path) in paths.iter().enumerate() {
        for (si, s) in path.windows(2).enumerate() {
            if let Some((t, sign)) = segment_crossing(a, b, s[0], s[1]) {
                out.push(Crossing { cut: k, segment: si, t, sign });
            }
        }
    }
    out.sort_by(|x, y| x.t.total_cmp(&y.t));
    out
}

/// Every grid edge crossing a cut, stored for both orientations of the edge.
pub(crate) fn crossing_table(grid: &Grid, paths: &[Vec<Complex64>]) -> HashMap<(usize, Dir), Vec<Crossing>> {
    let mut table: HashMap<(usize, Dir), Vec<Crossing>> = HashMap::new();
    let h = grid.h;
    let mut seen = std::collections::HashSet::new();
    for path in paths {
        for s in path.windows(2) {
            let lo = Complex64::new(s[0].re.min(s[1].re), s[0].im.min(s[1].im));
            let hi = Complex64::new(s[0].re.max(s[1].re), s[0].im.max(s[1].im));
            let (i0, j0) = grid.clamp_index(lo - Complex64::new(2.0 * h, 2.0 * h));
            let (i1, j1) = grid.clamp_index(hi + Complex64::new(2.0 * h, 2.0 * h));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let a = grid.node(i, j);
                    for dir in [Dir::E, Dir::N] {
                        if seen.contains(&(a, dir)) {
                            continue;
                        }
                        let pa = grid.position(a);
                        let pb = pa + dir.offset() * h;
                        let list = crossings_of_segment(pa, pb, paths);
                        if list.is_empty() {
                            continue;
                        }
                        seen.insert((a, dir));
                        if let Some(b) = grid.neighbor(a, dir) {
                            let mut back: Vec<Crossing> = list
                                .iter()
                                .map(|c| Crossing {
                                    t: 1.0 - c.t,
                                    sign: -c.sign,
                                    ..*c
                                })
                                .collect();
                            back.reverse();
                            table.insert((b, dir.opposite()), back);
                        }
                        table.insert((a, dir), list);
                    }
                }
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn crossing_detects_and_orients() {
        let (t, s) = segment_crossing(c(0.0, 1.0), c(0.0, -1.0), c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert_eq!(s, 1);
        let (_, s) = segment_crossing(c(0.0, -1.0), c(0.0, 1.0), c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(s, -1);
        assert!(segment_crossing(c(2.0, 1.0), c(2.0, -1.0), c(-1.0, 0.0), c(1.0, 0.0)).is_none());
    }

    #[test]
    fn node_on_cut_is_counted_once() {
        // two consecutive edges through a node lying exactly on the cut
        let (cs, ce) = (c(-1.0, 0.0), c(1.0, 0.0));
        let a = segment_crossing(c(0.0, 1.0), c(0.0, 0.0), cs, ce).is_some();
        let b = segment_crossing(c(0.0, 0.0), c(0.0, -1.0), cs, ce).is_some();
        assert!(a ^ b);
    }

    #[test]
    fn frame_sqrt_follows_frame() {
        let root = Complex64::from_polar(1.0, 1.2);
        let s = frame_sqrt(root * root, 0.1, root);
        assert!((s - root).norm() < 1e-14);
        let s = frame_sqrt(root * root, 0.1, -root);
        assert!((s + root).norm() < 1e-14);
    }

    #[test]
    fn distances() {
        assert!((distance_to_segment(c(0.5, 1.0), c(0.0, 0.0), c(1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((distance_to_segment(c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!(polylines_intersect(&[c(0.0, 0.0), c(1.0, 1.0)], &[c(0.0, 1.0), c(1.0, 0.0)]));
        assert!(polylines_intersect(&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(1.0, 1.0)]));
        assert!(!polylines_intersect(&[c(0.0, 0.0), c(1.0, 0.0)], &[c(0.0, 1.0), c(1.0, 1.0)]));
    }
}
