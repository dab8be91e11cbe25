use num_complex::Complex64;
use std::f64::consts::PI;

/// Principal square root, cut along the negative real axis.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    z.sqrt()
}

/// Square root whose branch cut is the ray leaving the origin in direction
/// `cut_angle`: `sqrt(r) e^{i(cut_angle + ψ)/2}` up to a global sign, with ψ the
/// angle of `z` measured from the cut, ψ ∈ (0, 2π].
///
/// The sign is fixed so that the root agrees with the principal branch in the
/// direction opposite to the cut. `sqrt_with_cut(z, a)^2 == z` for every `a`.
pub fn sqrt_with_cut(z: Complex64, cut_angle: f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut psi = (z.arg() - cut_angle).rem_euclid(2.0 * PI);
    if psi == 0.0 {
        psi = 2.0 * PI;
    }
    let w = Complex64::from_polar(r.sqrt(), 0.5 * (cut_angle + psi));
    let reference = principal_sqrt(Complex64::from_polar(1.0, cut_angle + PI));
    let ours = Complex64::from_polar(1.0, 0.5 * (cut_angle + PI));
    if (reference - ours).norm() < 1.0 {
        w
    } else {
        -w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squares_back() {
        for k in 0..40 {
            let cut = -3.0 + 0.17 * k as f64;
            for j in 0..25 {
                let z = Complex64::from_polar(0.3 + 0.1 * j as f64, 0.41 * j as f64);
                let s = sqrt_with_cut(z, cut);
                assert!((s * s - z).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn agrees_with_principal_for_negative_axis_cut() {
        let z = Complex64::new(0.3, 0.7);
        assert!((sqrt_with_cut(z, PI) - principal_sqrt(z)).norm() < 1e-14);
        let z = Complex64::new(0.3, -0.7);
        assert!((sqrt_with_cut(z, -PI) - principal_sqrt(z)).norm() < 1e-14);
    }

    #[test]
    fn flips_sign_across_cut() {
        let cut = 0.3;
        let d = Complex64::from_polar(1.0, cut);
        let n = Complex64::new(-d.im, d.re) * 1e-9;
        let above = sqrt_with_cut(d + n, cut);
        let below = sqrt_with_cut(d - n, cut);
        assert!((above + below).norm() < 1e-6);
    }
}
