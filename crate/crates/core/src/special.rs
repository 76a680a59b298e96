//! Special functions used throughout: error functions, the gamma function,
//! Hermite polynomials and Gaussian-kernel derivatives.

use std::f64::consts::PI;

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `erf(a) − erf(b)` without cancellation when both arguments sit in the
/// same tail.
pub fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 && b >= 0.0 {
        erfc(b) - erfc(a)
    } else if a <= 0.0 && b <= 0.0 {
        erfc(-a) - erfc(-b)
    } else {
        erf(a) - erf(b)
    }
}

#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `1/Γ(x)`, which is entire; exact zero at the poles `x = 0, −1, −2, …`.
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Physicists' Hermite polynomials `H_0..=H_n` at `s`, written into `out`.
pub fn hermite_all(s: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 2.0 * s;
    }
    for n in 1..out.len().saturating_sub(1) {
        out[n + 1] = 2.0 * s * out[n] - 2.0 * n as f64 * out[n - 1];
    }
}

pub fn hermite(n: usize, s: f64) -> f64 {
    let mut h = vec![0.0; n + 1];
    hermite_all(s, &mut h);
    h[n]
}

/// Free heat kernel `G0(τ, ξ) = exp(−ξ²/4τ) / (2√(πτ))`.
#[inline]
pub fn free_kernel(tau: f64, xi: f64) -> f64 {
    (-xi * xi / (4.0 * tau)).exp() / (2.0 * (PI * tau).sqrt())
}

/// `∂_ξ^n G0(τ, ξ) = (−1)^n (2√τ)^{−n} H_n(ξ/2√τ) G0(τ, ξ)`.
pub fn free_kernel_derivative(tau: f64, xi: f64, n: usize) -> f64 {
    let scale = 2.0 * tau.sqrt();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * hermite(n, xi / scale) * scale.powi(-(n as i32)) * free_kernel(tau, xi)
}

#[inline]
pub fn sech(x: f64) -> f64 {
    // 1/cosh overflows to 0 gracefully for large |x|
    1.0 / x.cosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // reference values from 30-digit arithmetic
    #[test]
    fn erf_reference_values() {
        let cases = [
            (0.5, 0.520_499_877_813_046_5, 0.479_500_122_186_953_5),
            (1.0, 0.842_700_792_949_714_9, 0.157_299_207_050_285_13),
            (std::f64::consts::SQRT_2, 0.9544997361036416, 0.045_500_263_896_358_396),
            (3.0, 0.999_977_909_503_001_4, 2.209_049_699_858_544e-5),
            (5.0, 0.999_999_999_998_462_6, 1.537_459_794_428_035e-12),
        ];
        for (x, e, ec) in cases {
            assert_relative_eq!(erf(x), e, max_relative = 1e-15);
            assert_relative_eq!(erfc(x), ec, max_relative = 1e-14);
        }
    }

    #[test]
    fn gamma_reference_values() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(gamma(1e-4), 9_999.422_883_231_624, max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.3), -4.326_851_108_825_193, max_relative = 1e-13);
        assert_eq!(recip_gamma(0.0), 0.0);
        assert_eq!(recip_gamma(-2.0), 0.0);
    }

    #[test]
    fn erf_diff_matches_direct_form_away_from_tails() {
        for &(a, b) in &[(0.3, -0.2), (1.0, 0.5), (-0.4, -1.1), (2.0, -2.0)] {
            assert_relative_eq!(erf_diff(a, b), erf(a) - erf(b), max_relative = 1e-14);
        }
        // deep tail: direct subtraction would return 0
        let d = erf_diff(9.0, 8.5);
        assert!(d > 0.0 && d < 1e-30);
    }

    #[test]
    fn hermite_recurrence() {
        let s = 0.7;
        assert_relative_eq!(hermite(2, s), 4.0 * s * s - 2.0, max_relative = 1e-15);
        assert_relative_eq!(hermite(3, s), 8.0 * s.powi(3) - 12.0 * s, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let (tau, xi, h) = (0.3, 0.45, 1e-4);
        for n in 1..4 {
            let fd =
                (free_kernel_derivative(tau, xi + h, n - 1) - free_kernel_derivative(tau, xi - h, n - 1)) / (2.0 * h);
            assert_relative_eq!(free_kernel_derivative(tau, xi, n), fd, max_relative = 1e-6);
        }
    }
}
