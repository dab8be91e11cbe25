//! Benchmark fixtures shared by the criterion targets.

use branched_core::domain::ConfigSpec;
use branched_core::Complex64;

/// Points on a ring around the origin, avoiding the branch line.
pub fn ring_points(n: usize, radius: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(radius, 0.1 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}

/// Canonical torus at the given grid spacing.
pub fn torus(spacing: f64) -> ConfigSpec {
    ConfigSpec::canonical_torus(spacing)
}
