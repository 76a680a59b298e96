//! The generalized zeta function of the subtracted kink heat trace,
//! `ζ(s) = M^{2s}/Γ(s) ∫₀^∞ γ(t) t^{s−1} dt`, and the one-loop correction
//! `S_q = −ζ′(0)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kink::{heat_trace_closed, ClosedFormKernel, Variant};
use crate::quad::{Adaptive, Estimate};
use crate::special::recip_gamma;

/// Spatial cutoff of the numeric trace, in units of `1/κ`.
pub const TRACE_CUTOFF: f64 = 40.0;
/// Relative accuracy demanded of the numeric trace.
pub const TRACE_TOLERANCE: f64 = 1e-9;
/// Relative tolerance of the Mellin quadratures.
pub const MELLIN_TOLERANCE: f64 = 1e-12;
/// The tail is truncated where `e^{−δ∞ t}` drops below this.
const TAIL_CUTOFF: f64 = 1e-16;

/// How `γ(t)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSource {
    #[default]
    ClosedForm,
    /// Spatial quadrature of the kernel diagonal minus the free diagonal.
    NumericDiagonal,
}

impl TraceSource {
    pub fn name(self) -> &'static str {
        match self {
            TraceSource::ClosedForm => "closed-form",
            TraceSource::NumericDiagonal => "numeric-diagonal",
        }
    }
}

impl fmt::Display for TraceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TraceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" => Ok(TraceSource::ClosedForm),
            "numeric-diagonal" | "numeric" => Ok(TraceSource::NumericDiagonal),
            _ => Err(Error::Domain(format!("unknown trace source {s:?} (expected closed-form or numeric-diagonal)"))),
        }
    }
}

/// The subtracted kink heat trace `γ(t) = e^{−Λt}∫(G − G0)(t, x, x) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatTrace {
    pub mass: f64,
    /// The subtraction shift `Λ`.
    pub shift: f64,
    pub variant: Variant,
    pub source: TraceSource,
    /// Small-`t` coefficient: `γ(t) ≈ c½ √t`.
    pub c_half: f64,
    /// Large-`t` decay rate: `γ(t) ∝ e^{−δ∞ t}`.
    pub decay: f64,
    #[serde(skip)]
    kernel: ClosedFormKernel,
}

impl HeatTrace {
    pub fn new(mass: f64, shift: f64, variant: Variant, source: TraceSource) -> Result<Self> {
        let kernel = ClosedFormKernel::new(mass, variant)?;
        if !shift.is_finite() {
            return Err(Error::Domain(format!("shift must be finite, got {shift}")));
        }
        let bs = kernel.bound_states().map(|s| s.wavenumber);
        let c_half = 2.0 * (bs[0] + bs[1]) / PI.sqrt();
        let decay = match variant {
            Variant::ExpCorrected => shift - bs[1] * bs[1],
            Variant::AsPrinted => shift,
        };
        Ok(Self { mass, shift, variant, source, c_half, decay, kernel })
    }

    pub fn closed_form(mass: f64, shift: f64, variant: Variant) -> Result<Self> {
        Self::new(mass, shift, variant, TraceSource::ClosedForm)
    }

    pub fn numeric(mass: f64, shift: f64, variant: Variant) -> Result<Self> {
        Self::new(mass, shift, variant, TraceSource::NumericDiagonal)
    }

    /// The kink wavenumbers `(b₁, b₂)`.
    pub fn wavenumbers(&self) -> [f64; 2] {
        self.kernel.bound_states().map(|s| s.wavenumber)
    }

    /// `γ(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match self.source {
            TraceSource::ClosedForm => heat_trace_closed(t, self.mass, self.shift, self.variant),
            TraceSource::NumericDiagonal => trace_numeric(&self.kernel, t, self.shift),
        }
    }

    /// `ζ′(0) = ∫₀^∞ γ(t)/t dt` in closed form:
    /// `Σ_m 2·asinh(b_m/√a_m)` with `a_m = δ∞`-type rates of each term.
    pub fn zeta_prime_closed(&self) -> Result<f64> {
        self.require_decay()?;
        Ok(self
            .wavenumbers()
            .iter()
            .map(|&b| {
                let a = match self.variant {
                    Variant::ExpCorrected => self.shift - b * b,
                    Variant::AsPrinted => self.shift,
                };
                2.0 * (b / a.sqrt()).asinh()
            })
            .sum())
    }

    fn require_decay(&self) -> Result<()> {
        if self.decay > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "trace does not decay (rate {}); the shift must exceed the largest growth rate",
                self.decay
            )))
        }
    }

    /// Upper time limit where the tail falls below the truncation threshold.
    fn horizon(&self) -> f64 {
        1.0 + (-TAIL_CUTOFF.ln() + 2.0_f64.ln()) / self.decay
    }
}

/// `e^{−Λt}∫(G − G0)(t, x, x) dx` by adaptive quadrature of the kernel's
/// bound-state part over `|x| ≤ 40/κ`; the free diagonal never enters.
pub fn trace_numeric(kernel: &ClosedFormKernel, t: f64, shift: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("trace time must be positive, got {t}")));
    }
    let kappa = kernel.bound_states()[0].kappa;
    let quad = Adaptive::with_rel_tol(TRACE_TOLERANCE * 1e-2);
    let mut failure = None;
    let est = quad.integrate_with_breaks(0.0, TRACE_CUTOFF / kappa, &[1.0 / kappa, 5.0 / kappa], |x| {
        match kernel.bound_part(t, x, x) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if est.relative_error() > TRACE_TOLERANCE {
        return Err(Error::QuadratureFailure { estimate: est.relative_error(), tolerance: TRACE_TOLERANCE });
    }
    // the diagonal is even in x
    Ok((-shift * t).exp() * 2.0 * est.value)
}

/// `F(s) = ∫₀^∞ γ(t) t^{s−1} dt` for `s > −1/2`.
///
/// Below `t = 1` the substitution `t = v^p`, `p = 1/(s + ½)`, turns the
/// `t^{s−½}` endpoint behaviour into a bounded integrand (`t = v²` at `s = 0`);
/// above, the integral runs in `t` up to the truncation horizon.
pub fn mellin_transform(trace: &HeatTrace, s: f64) -> Result<Estimate> {
    if !(s > -0.5) {
        return Err(Error::Domain(format!("zeta integral diverges for s <= -1/2, got {s}")));
    }
    trace.require_decay()?;
    let p = 1.0 / (s + 0.5);
    let quad = Adaptive::with_rel_tol(MELLIN_TOLERANCE);
    let mut failure = None;
    let mut guard = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let head = quad.integrate(0.0, 1.0, |v| {
        if v == 0.0 {
            return 0.0;
        }
        p * guard(trace.eval(v.powf(p))) * v.powf(-0.5 * p)
    })?;
    let horizon = trace.horizon();
    let breaks: Vec<f64> = [2.0, 5.0, 10.0, 20.0].iter().copied().filter(|&b| b < horizon).collect();
    let tail = quad.integrate_with_breaks(1.0, horizon, &breaks, |t| guard(trace.eval(t)) * t.powf(s - 1.0))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(Estimate { value: head.value + tail.value, error: head.error + tail.error })
}

/// `ζ(s) = M^{2s} F(s) / Γ(s)`.
pub fn zeta_function(trace: &HeatTrace, s: f64, mass_scale: f64) -> Result<f64> {
    check_scale(mass_scale)?;
    let f = mellin_transform(trace, s)?;
    Ok(mass_scale.powf(2.0 * s) * f.value * recip_gamma(s))
}

fn check_scale(mass_scale: f64) -> Result<()> {
    if mass_scale > 0.0 && mass_scale.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("mass scale must be positive, got {mass_scale}")))
    }
}

/// `ζ(0)`, `ζ′(0)` and `S_q = −ζ′(0)` at mass scale `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaResult {
    pub zeta0: f64,
    pub zeta_prime0: f64,
    pub s_q: f64,
    pub mass_scale: f64,
    /// Quadrature error estimate of `ζ′(0)`.
    pub error_estimate: f64,
}

/// `ζ′(0) = ∫₀^∞ γ(t)/t dt`: with `ζ(s) = s·F(s)·M^{2s}(1 + O(s))`, the
/// derivative at zero is `F(0)` and the `2 ln M` term is multiplied by
/// `ζ(0) = 0`.
pub fn quantum_correction(trace: &HeatTrace, mass_scale: f64) -> Result<ZetaResult> {
    check_scale(mass_scale)?;
    let f0 = mellin_transform(trace, 0.0)?;
    let zeta0 = zeta_function(trace, 0.0, mass_scale)?;
    let zeta_prime0 = f0.value + 2.0 * mass_scale.ln() * zeta0;
    Ok(ZetaResult {
        zeta0,
        zeta_prime0,
        s_q: -zeta_prime0,
        mass_scale,
        // rounding floor on top of the quadrature estimate
        error_estimate: f0.error + 16.0 * f64::EPSILON * f0.value.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ZETA_PRIME_EXP: f64 = 2.501_745_117_890_824_8;
    const ZETA_PRIME_PRINTED: f64 = 2.010_105_077_484_762;
    const ZETA_HALF_EXP: f64 = 0.476_522_135_393_806_17;
    const ZETA_HALF_PRINTED: f64 = 0.304_086_723_984_696_4;

    fn kink_trace(variant: Variant) -> HeatTrace {
        HeatTrace::closed_form(1.0, 4.0, variant).unwrap()
    }

    /// Double-exponential quadrature on `(0, ∞)`, independent of the
    /// Gauss–Legendre machinery: `t = exp(π/2·sinh w)`.
    fn exp_sinh<F: Fn(f64) -> f64>(f: F) -> f64 {
        let h = 1.0 / 64.0;
        let mut sum = 0.0;
        for k in -400..=400 {
            let w = k as f64 * h;
            let t = (0.5 * PI * w.sinh()).exp();
            let dt = 0.5 * PI * w.cosh() * t;
            if t == 0.0 || !t.is_finite() || !dt.is_finite() {
                continue;
            }
            sum += f(t) * dt;
        }
        sum * h
    }

    #[test]
    fn closed_form_constants() {
        let exp = kink_trace(Variant::ExpCorrected);
        assert_relative_eq!(exp.zeta_prime_closed().unwrap(), ZETA_PRIME_EXP, max_relative = 1e-14);
        let manual = 2.0 * ((1.0 / 7.0_f64.sqrt()).asinh() + 1.0_f64.asinh());
        assert_relative_eq!(manual, ZETA_PRIME_EXP, max_relative = 1e-14);
        let printed = kink_trace(Variant::AsPrinted);
        let manual = 2.0_f64.ln() + 2.0 * (1.0 / 2.0_f64.sqrt()).asinh();
        assert_relative_eq!(printed.zeta_prime_closed().unwrap(), manual, max_relative = 1e-14);
        assert_relative_eq!(manual, ZETA_PRIME_PRINTED, max_relative = 1e-14);
        assert_relative_eq!(exp.c_half, 2.393_653_682_408_596, max_relative = 1e-14);
        assert_relative_eq!(exp.decay, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn numeric_trace_matches_closed_form() {
        for variant in [Variant::ExpCorrected, Variant::AsPrinted] {
            let kernel = ClosedFormKernel::new(1.0, variant).unwrap();
            for t in [0.01, 0.1, 1.0, 5.0] {
                let closed = heat_trace_closed(t, 1.0, 4.0, variant).unwrap();
                let numeric = trace_numeric(&kernel, t, 4.0).unwrap();
                assert_relative_eq!(numeric, closed, max_relative = 1e-6);
            }
        }
        let kernel = ClosedFormKernel::new(1.0, Variant::ExpCorrected).unwrap();
        assert_relative_eq!(trace_numeric(&kernel, 1.0, 4.0).unwrap(), 0.149_792_928_487_309_88, epsilon = 1e-9);
    }

    #[test]
    fn small_and_large_time_behaviour() {
        let trace = kink_trace(Variant::ExpCorrected);
        for t in [1e-4, 1e-6] {
            let ratio = trace.eval(t).unwrap() / t.sqrt() / trace.c_half;
            assert!((ratio - 1.0).abs() < 1e-2, "t = {t}: ratio {ratio}");
        }
        // fitted decay over [5, 10]
        let fit = (trace.eval(5.0).unwrap() / trace.eval(10.0).unwrap()).ln() / 5.0;
        assert!((fit - trace.decay).abs() < 1e-2 * trace.decay, "fitted decay {fit}");
        // without the shift the largest bound state dominates
        let bare = HeatTrace::closed_form(1.0, 0.0, Variant::ExpCorrected).unwrap();
        let t = 40.0;
        let ratio = bare.eval(t).unwrap() / (2.0 * t).exp();
        assert!((ratio - 1.0).abs() < 1e-6, "ratio {ratio}");
        assert!(t > 0.0 && (1..200).all(|k| trace.eval(k as f64 * 0.05).unwrap() > 0.0));
    }

    #[test]
    fn zeta_prime_by_quadrature() {
        for (variant, exact) in [(Variant::ExpCorrected, ZETA_PRIME_EXP), (Variant::AsPrinted, ZETA_PRIME_PRINTED)] {
            let r = quantum_correction(&kink_trace(variant), 1.0).unwrap();
            assert!((r.zeta_prime0 - exact).abs() < 1e-8, "{variant}: {}", r.zeta_prime0);
            assert_eq!(r.s_q, -r.zeta_prime0);
            assert_eq!(r.zeta0, 0.0);
            assert!(r.error_estimate >= (r.zeta_prime0 - exact).abs());
        }
    }

    #[test]
    fn zeta_half_matches_independent_quadrature() {
        for (variant, pinned) in [(Variant::ExpCorrected, ZETA_HALF_EXP), (Variant::AsPrinted, ZETA_HALF_PRINTED)] {
            let trace = kink_trace(variant);
            let ours = zeta_function(&trace, 0.5, 1.0).unwrap();
            let theirs = exp_sinh(|t| trace.eval(t).unwrap() / t.sqrt()) / PI.sqrt();
            assert!((ours - theirs).abs() < 1e-9, "{ours} vs {theirs}");
            assert!((ours - pinned).abs() < 1e-9, "{ours} vs {pinned}");
        }
    }

    #[test]
    fn mass_scale_dependence() {
        let trace = kink_trace(Variant::ExpCorrected);
        let base = zeta_function(&trace, 0.3, 1.0).unwrap();
        let scaled = zeta_function(&trace, 0.3, 10.0).unwrap();
        assert_relative_eq!(scaled, 100.0_f64.powf(0.3) * base, max_relative = 1e-14);
        let s1 = quantum_correction(&trace, 1.0).unwrap().s_q;
        for m in [0.1, 10.0] {
            assert!((quantum_correction(&trace, m).unwrap().s_q - s1).abs() < 1e-8);
        }
    }

    #[test]
    fn mellin_consistency() {
        let trace = kink_trace(Variant::ExpCorrected);
        let h = 1e-4;
        let d = (zeta_function(&trace, h, 1.0).unwrap() - zeta_function(&trace, -h, 1.0).unwrap()) / (2.0 * h);
        let r = quantum_correction(&trace, 1.0).unwrap();
        assert!((d - r.zeta_prime0).abs() < 1e-6, "{d} vs {}", r.zeta_prime0);
        assert!(zeta_function(&trace, h, 1.0).unwrap().abs() < 1e-3 * r.zeta_prime0);
    }

    #[test]
    fn domain_errors() {
        let trace = kink_trace(Variant::ExpCorrected);
        assert!(matches!(zeta_function(&trace, -0.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(zeta_function(&trace, 0.0, 0.0), Err(Error::Domain(_))));
        let growing = HeatTrace::closed_form(1.0, 1.5, Variant::ExpCorrected).unwrap();
        assert!(matches!(quantum_correction(&growing, 1.0), Err(Error::Domain(_))));
        assert!("numeric".parse::<TraceSource>().is_ok());
        assert!("bogus".parse::<TraceSource>().is_err());
    }
}
