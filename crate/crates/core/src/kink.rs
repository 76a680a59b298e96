//! Closed-form heat kernel of the two-soliton (kink) potential
//! `u[2] = 6κ² sech²(κx)`, `κ = m/√2`, its bound states and the subtracted
//! heat trace.
//!
//! The kernel is the free Gaussian plus one Erf-difference term per bound
//! state. [`Variant::ExpCorrected`] carries the `e^{b_m²τ}` growth of each
//! bound mode and solves the heat equation; [`Variant::AsPrinted`] omits it
//! and is kept for comparison only.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{erf, erf_diff, free_kernel, free_kernel_derivative, hermite, sech};
use crate::transmutation::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Bound-state terms without the `e^{b_m²τ}` factor.
    AsPrinted,
    /// Bound-state terms multiplied by `e^{b_m²τ}`.
    #[default]
    ExpCorrected,
}

impl Variant {
    /// The factor multiplying bound-state term `m` at time `τ`.
    fn growth(self, b: f64, tau: f64) -> f64 {
        match self {
            Variant::AsPrinted => 1.0,
            Variant::ExpCorrected => (b * b * tau).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::AsPrinted => "as-printed",
            Variant::ExpCorrected => "exp-corrected",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as-printed" => Ok(Variant::AsPrinted),
            "exp-corrected" => Ok(Variant::ExpCorrected),
            other => {
                Err(Error::Domain(format!("unknown variant `{other}` (expected `as-printed` or `exp-corrected`)")))
            }
        }
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("mass must be positive, got {mass}")))
    }
}

/// A monomial-coefficient polynomial in `S = sech(κx)`, `T = tanh(κx)`.
type SechTanhPoly = BTreeMap<(i32, i32), f64>;

/// `d/dx` using `S′ = −κ S T`, `T′ = κ S²`.
fn differentiate(poly: &SechTanhPoly, kappa: f64) -> SechTanhPoly {
    let mut out = SechTanhPoly::new();
    for (&(a, c), &coef) in poly {
        if a > 0 {
            *out.entry((a, c + 1)).or_insert(0.0) -= kappa * a as f64 * coef;
        }
        if c > 0 {
            *out.entry((a + 2, c - 1)).or_insert(0.0) += kappa * c as f64 * coef;
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

fn eval_poly(poly: &SechTanhPoly, s: f64, t: f64) -> f64 {
    poly.iter().map(|(&(a, c), coef)| coef * s.powi(a) * t.powi(c)).sum()
}

/// One of the two bound states of the kink potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundState {
    /// 1 (odd, `sech·tanh`) or 2 (even, `sech²`).
    pub index: u8,
    pub mass: f64,
    pub kappa: f64,
    /// `b = index·m/√2`; the eigenvalue of `∂ₓ² + u[2]` is `b²`.
    pub wavenumber: f64,
    /// `‖ψ‖²` of the unnormalized profile.
    pub norm_squared: f64,
    /// `ρ = ‖ψ‖⁻²`.
    pub weight: f64,
}

impl BoundState {
    pub fn new(index: u8, mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let kappa = mass / SQRT_2;
        let norm_squared = match index {
            1 => 2.0 / (3.0 * kappa),
            2 => 4.0 / (3.0 * kappa),
            _ => return Err(Error::Domain(format!("bound state index must be 1 or 2, got {index}"))),
        };
        Ok(Self { index, mass, kappa, wavenumber: index as f64 * kappa, norm_squared, weight: 1.0 / norm_squared })
    }

    fn poly(&self) -> SechTanhPoly {
        let mut p = SechTanhPoly::new();
        match self.index {
            1 => p.insert((1, 1), 1.0),
            _ => p.insert((2, 0), 1.0),
        };
        p
    }

    /// The unnormalized profile `ψ(x)`.
    pub fn profile(&self, x: f64) -> f64 {
        let s = sech(self.kappa * x);
        match self.index {
            1 => s * (self.kappa * x).tanh(),
            _ => s * s,
        }
    }

    /// `∂ₓ^k ψ(x)` for `k = 0..=order`.
    pub fn profile_derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        let s = sech(self.kappa * x);
        let t = (self.kappa * x).tanh();
        let mut p = self.poly();
        let mut out = Vec::with_capacity(order + 1);
        for k in 0..=order {
            if k > 0 {
                p = differentiate(&p, self.kappa);
            }
            out.push(eval_poly(&p, s, t));
        }
        out
    }
}

/// `(ψ_index(x), ρ_index, b_index)` for the kink of mass `m`.
pub fn bound_state(index: u8, x: f64, mass: f64) -> Result<(f64, f64, f64)> {
    let s = BoundState::new(index, mass)?;
    Ok((s.profile(x), s.weight, s.wavenumber))
}

/// The closed-form kink kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormKernel {
    pub mass: f64,
    pub variant: Variant,
    states: [BoundState; 2],
}

impl ClosedFormKernel {
    pub fn new(mass: f64, variant: Variant) -> Result<Self> {
        Ok(Self { mass, variant, states: [BoundState::new(1, mass)?, BoundState::new(2, mass)?] })
    }

    pub fn bound_states(&self) -> &[BoundState; 2] {
        &self.states
    }

    fn check_tau(tau: f64) -> Result<()> {
        if tau > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("kernel time must be positive, got {tau}")))
        }
    }

    /// The bound-state part, kernel minus the free Gaussian.
    pub fn bound_part(&self, tau: f64, x: f64, y: f64) -> Result<f64> {
        Self::check_tau(tau)?;
        let root = tau.sqrt();
        let xi = x - y;
        Ok(self
            .states
            .iter()
            .map(|s| {
                let b = s.wavenumber;
                let bracket = erf_diff((xi + 2.0 * b * tau) / (2.0 * root), (xi - 2.0 * b * tau) / (2.0 * root));
                0.5 * s.weight * s.profile(x) * s.profile(y) * self.variant.growth(b, tau) * bracket
            })
            .sum())
    }

    pub fn eval(&self, tau: f64, x: f64, y: f64) -> Result<f64> {
        Ok(free_kernel(tau, x - y) + self.bound_part(tau, x, y)?)
    }

    /// `∂ₓ^j` of the kernel for `j = 0..=order`.
    pub fn x_derivatives(&self, tau: f64, x: f64, y: f64, order: usize) -> Result<Vec<f64>> {
        Self::check_tau(tau)?;
        let root = tau.sqrt();
        let xi = x - y;
        let mut out: Vec<f64> = (0..=order).map(|j| free_kernel_derivative(tau, xi, j)).collect();
        for s in &self.states {
            let b = s.wavenumber;
            let a_plus = (xi + 2.0 * b * tau) / (2.0 * root);
            let a_minus = (xi - 2.0 * b * tau) / (2.0 * root);
            // ∂_ξ^k of the Erf bracket
            let bracket: Vec<f64> = (0..=order)
                .map(|k| {
                    if k == 0 {
                        erf_diff(a_plus, a_minus)
                    } else {
                        let d = |a: f64| {
                            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                            sign * hermite(k - 1, a) * (-a * a).exp()
                        };
                        2.0 / PI.sqrt() * (2.0 * root).powi(-(k as i32)) * (d(a_plus) - d(a_minus))
                    }
                })
                .collect();
            let psi = s.profile_derivatives(x, order);
            let pref = 0.5 * s.weight * s.profile(y) * self.variant.growth(b, tau);
            for (j, o) in out.iter_mut().enumerate() {
                let mut leibniz = 0.0;
                let mut binom = 1.0;
                for i in 0..=j {
                    leibniz += binom * psi[i] * bracket[j - i];
                    binom *= (j - i) as f64 / (i + 1) as f64;
                }
                *o += pref * leibniz;
            }
        }
        Ok(out)
    }
}

impl Kernel for ClosedFormKernel {
    fn eval(&self, tau: f64, x: f64, y: f64) -> Result<f64> {
        ClosedFormKernel::eval(self, tau, x, y)
    }
}

/// `kink_kernel(τ, x, y, m, variant)`.
pub fn kink_kernel(tau: f64, x: f64, y: f64, mass: f64, variant: Variant) -> Result<f64> {
    ClosedFormKernel::new(mass, variant)?.eval(tau, x, y)
}

/// Subtracted heat trace
/// `γ(t) = e^{−Λt} Σ_m [e^{b_m²t}] erf(b_m√t)`, the bracket present only for
/// the exp-corrected variant. It equals `e^{−Λt}∫(G − G0)(t, x, x) dx`:
/// the norms `‖ψ_m‖²` cancel the weights `ρ_m`.
pub fn heat_trace_closed(t: f64, mass: f64, shift: f64, variant: Variant) -> Result<f64> {
    check_mass(mass)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("trace time must be positive, got {t}")));
    }
    let kappa = mass / SQRT_2;
    Ok([kappa, 2.0 * kappa]
        .iter()
        .map(|&b| {
            let rate = match variant {
                Variant::AsPrinted => -shift,
                Variant::ExpCorrected => b * b - shift,
            };
            (rate * t).exp() * erf(b * t.sqrt())
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressing::{DressingChain, PotentialField};
    use crate::quad::Adaptive;
    use approx::assert_relative_eq;

    #[test]
    fn bound_state_examples() {
        let (v1, w1, b1) = bound_state(1, 0.0, 1.0).unwrap();
        assert_eq!(v1, 0.0);
        assert_relative_eq!(b1, 1.0 / SQRT_2, max_relative = 1e-15);
        let (v2, w2, b2) = bound_state(2, 0.0, 1.0).unwrap();
        assert_eq!(v2, 1.0);
        assert_relative_eq!(b2, SQRT_2, max_relative = 1e-15);
        // weights from numerical norms
        let kappa = 1.0 / SQRT_2;
        let q = Adaptive::with_rel_tol(1e-13);
        let n1 = q.integrate(-60.0, 60.0, |x| (sech(kappa * x) * (kappa * x).tanh()).powi(2)).unwrap();
        let n2 = q.integrate(-60.0, 60.0, |x| sech(kappa * x).powi(4)).unwrap();
        assert_relative_eq!(w1, 1.0 / n1.value, max_relative = 1e-12);
        assert_relative_eq!(w2, 1.0 / n2.value, max_relative = 1e-12);
        assert_relative_eq!(w1, 1.060_660_171_779_821_2, max_relative = 1e-15);
        assert_relative_eq!(w2, 0.530_330_085_889_910_6, max_relative = 1e-15);
        assert!(bound_state(1, 0.0, 0.0).is_err());
        assert!(bound_state(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn bound_states_are_eigenfunctions() {
        for &mass in &[0.6, 1.0, 2.3] {
            let field = PotentialField::new(DressingChain::kink(mass).unwrap());
            for index in [1u8, 2] {
                let s = BoundState::new(index, mass).unwrap();
                for &x in &[-4.0, -1.1, 0.0, 0.35, 2.7] {
                    let d = s.profile_derivatives(x, 2);
                    let r = d[2] + field.eval(x).unwrap() * d[0] - s.wavenumber.powi(2) * d[0];
                    assert!(r.abs() < 1e-10, "m={mass} index={index} x={x}: {r:e}");
                }
            }
        }
    }

    #[test]
    fn weighted_projector_is_scale_invariant() {
        let s = BoundState::new(2, 1.0).unwrap();
        let (x, y) = (0.4, -1.2);
        let base = s.weight * s.profile(x) * s.profile(y);
        for c in [2.0, 10.0] {
            let q = Adaptive::with_rel_tol(1e-13);
            let norm = q.integrate(-60.0, 60.0, |z| (c * s.profile(z)).powi(2)).unwrap().value;
            let scaled = (c * s.profile(x)) * (c * s.profile(y)) / norm;
            assert_relative_eq!(scaled, base, max_relative = 1e-12);
        }
    }

    #[test]
    fn kink_kernel_examples() {
        // x = y collapses the bracket to 2·erf(b√τ)
        let k = ClosedFormKernel::new(1.0, Variant::ExpCorrected).unwrap();
        let tau = 0.5;
        let expected = free_kernel(tau, 0.0) + k.states[1].weight * 1f64.exp() * erf(1.0);
        assert_relative_eq!(k.eval(tau, 0.0, 0.0).unwrap(), expected, max_relative = 1e-15);
        assert_relative_eq!(expected, 1.613_768_481_293_277, max_relative = 1e-15);
        let printed = kink_kernel(0.5, 0.0, 0.0, 1.0, Variant::AsPrinted).unwrap();
        assert_relative_eq!(printed, 0.845_851_864_305_950_7, max_relative = 1e-15);
        assert!(kink_kernel(0.0, 0.0, 0.0, 1.0, Variant::ExpCorrected).is_err());
    }

    #[test]
    fn kernel_is_symmetric_and_reduces_to_free() {
        for variant in [Variant::ExpCorrected, Variant::AsPrinted] {
            let k = ClosedFormKernel::new(1.3, variant).unwrap();
            for &(tau, x, y) in &[(0.2, 0.3, -1.1), (1.0, 2.0, 0.5), (0.05, -3.0, 4.0)] {
                let a = k.eval(tau, x, y).unwrap();
                let b = k.eval(tau, y, x).unwrap();
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            }
            assert!(k.bound_part(1e-10, 0.4, 0.4).unwrap().abs() < 1e-4);
            assert!(k.bound_part(1e-8, 0.4, -0.3).unwrap().abs() < 1e-300);
        }
    }

    #[test]
    fn x_derivatives_match_differences() {
        let k = ClosedFormKernel::new(1.0, Variant::ExpCorrected).unwrap();
        let (tau, x, y, h) = (0.3, 0.45, -0.7, 1e-4);
        let d = k.x_derivatives(tau, x, y, 3).unwrap();
        assert_relative_eq!(d[0], k.eval(tau, x, y).unwrap(), max_relative = 1e-14);
        for (j, &dj) in d.iter().enumerate().skip(1) {
            let p = k.x_derivatives(tau, x + h, y, j - 1).unwrap()[j - 1];
            let m = k.x_derivatives(tau, x - h, y, j - 1).unwrap()[j - 1];
            assert_relative_eq!(dj, (p - m) / (2.0 * h), max_relative = 1e-6);
        }
    }

    #[test]
    fn heat_trace_examples() {
        let g = heat_trace_closed(1.0, 1.0, 4.0, Variant::ExpCorrected).unwrap();
        assert_relative_eq!(g, 0.149_792_928_487_309_88, max_relative = 1e-14);
        let p = heat_trace_closed(1.0, 1.0, 4.0, Variant::AsPrinted).unwrap();
        assert_relative_eq!(p, 0.029_986_166_696_982_567, max_relative = 1e-14);
        // γ ≈ (2/√π)(b₁ + b₂)√t
        let t = 1e-8;
        let c = 2.0 * (1.0 / SQRT_2 + SQRT_2) / PI.sqrt();
        let g0 = heat_trace_closed(t, 1.0, 4.0, Variant::ExpCorrected).unwrap();
        assert_relative_eq!(g0 / t.sqrt(), c, max_relative = 1e-6);
        assert!(heat_trace_closed(0.0, 1.0, 4.0, Variant::ExpCorrected).is_err());
    }

    #[test]
    fn trace_equals_integrated_diagonal() {
        for variant in [Variant::ExpCorrected, Variant::AsPrinted] {
            let k = ClosedFormKernel::new(1.0, variant).unwrap();
            for &t in &[0.1, 1.0, 3.0] {
                let est =
                    Adaptive::with_rel_tol(1e-13).integrate(-40.0, 40.0, |x| k.bound_part(t, x, x).unwrap()).unwrap();
                let closed = heat_trace_closed(t, 1.0, 0.0, variant).unwrap();
                assert_relative_eq!(est.value, closed, max_relative = 1e-10);
            }
        }
    }
}
