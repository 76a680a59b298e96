//! The causal (triangular) initial kernel `ρ0(x, y)`, its propagation by
//! the free heat equation, and the dressed heat kernel of a chain.
//!
//! `ρ0` is the Cauchy function of the N-th order operator
//! `A_N ⋯ A_1`, `A_k = ∂ₓ − ∂ₓ ln φ_k[k−1]`: for `x > y` it lies in the span
//! of the seeds at `τ = 0`, its first `N − 2` derivatives vanish at `x = y`
//! and the `(N − 1)`-th jumps by one. [`initial_condition`] builds the same
//! function by inverting the first-order factors one at a time.

use std::cell::Cell;
use std::f64::consts::PI;

use crate::dressing::{self, DressingChain, SeedFunction};
use crate::error::{Error, Result};
use crate::kink::ClosedFormKernel;
use crate::quad::{Adaptive, Composite};
use crate::special::{free_kernel, free_kernel_derivative, hermite_all};

/// Gaussian tail beyond the integrand peak, in units of `2√τ`.
/// `e^{−7.5²}` is below `1e−24`.
const GAUSSIAN_TAIL: f64 = 7.5;

/// Relative tolerance on quadrature error estimates.
const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// A heat kernel `ρ(τ, x, y)`.
pub trait Kernel: Sync {
    fn eval(&self, tau: f64, x: f64, y: f64) -> Result<f64>;
}

/// A function `ρ0(z, y) = H(z − y)·K(z, y)` with a smooth factor `K`.
pub trait CausalProfile: Sync {
    /// Exponential growth rate of `K(·, y)` in `|z|`.
    fn growth_rate(&self) -> f64;

    /// `K(·, y)` for a fixed source point.
    fn section(&self, y: f64) -> Result<Box<dyn Fn(f64) -> f64 + '_>>;
}

/// `H(z − y)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitStep;

impl CausalProfile for UnitStep {
    fn growth_rate(&self) -> f64 {
        0.0
    }

    fn section(&self, _y: f64) -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
        Ok(Box::new(|_| 1.0))
    }
}

/// Initial data for [`free_propagate`].
#[derive(Clone, Copy)]
pub enum InitialData<'a> {
    /// `δ(x − y)`, propagated exactly.
    Delta,
    Causal(&'a dyn CausalProfile),
}

/// The causal initial kernel `ρ0(x, y) = H(x − y)·K(x, y)` of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularKernel {
    chain: DressingChain,
}

impl TriangularKernel {
    pub fn new(chain: DressingChain) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Domain("triangular kernel needs at least one seed".into()));
        }
        Ok(Self { chain })
    }

    pub fn chain(&self) -> &DressingChain {
        &self.chain
    }

    /// Coefficients `ĉ_k` with `K(x, y) = Σ ĉ_k φ_k(x, 0) / s_k(y)`,
    /// `s_k(y) = e^{b_k|y|}/2`, fixed by the jump conditions at `x = y`.
    pub fn coefficients(&self, y: f64) -> Result<Vec<f64>> {
        let n = self.chain.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for (j, s) in self.chain.seeds().iter().enumerate() {
                m[i * n + j] = s.scaled(y, i);
            }
        }
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = 1.0;
        dressing::solve(&mut m, &mut rhs, n).ok_or(Error::DegenerateWronskian { x: y, ratio: 0.0 })?;
        Ok(rhs)
    }

    /// The smooth factor `K(x, y)`, valid for all `x` (its continuation to
    /// `x < y` is used by the anti-causal propagation).
    pub fn smooth_factor(&self, x: f64, y: f64) -> Result<f64> {
        let c = self.coefficients(y)?;
        Ok(combine(self.chain.seeds(), &c, x, y))
    }

    /// `ρ0(x, y)`; zero for `x < y`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if x < y {
            return Ok(0.0);
        }
        self.smooth_factor(x, y)
    }

    /// `∂ₓ^k K(x, y)` for `k = 0..=kmax`.
    pub fn smooth_derivatives(&self, x: f64, y: f64, kmax: usize) -> Result<Vec<f64>> {
        let c = self.coefficients(y)?;
        Ok((0..=kmax)
            .map(|k| self.chain.seeds().iter().zip(&c).map(|(s, ck)| ck * scaled_seed_over(s, x, y, k)).sum())
            .collect())
    }
}

/// `∂ₓ^k φ(x, 0) / (e^{b|y|}/2)` without forming either factor.
fn scaled_seed_over(s: &SeedFunction, x: f64, y: f64, k: usize) -> f64 {
    let grow = (s.b * (x - y.abs())).exp();
    let fall = (-s.b * (x + y.abs())).exp();
    let even = k.is_multiple_of(2) == (s.parity == dressing::Parity::Even);
    let shape = if even { grow + fall } else { grow - fall };
    s.b.powi(k as i32) * shape
}

fn combine(seeds: &[SeedFunction], c: &[f64], x: f64, y: f64) -> f64 {
    seeds.iter().zip(c).map(|(s, ck)| ck * scaled_seed_over(s, x, y, 0)).sum()
}

impl CausalProfile for TriangularKernel {
    fn growth_rate(&self) -> f64 {
        self.chain.max_wavenumber()
    }

    fn section(&self, y: f64) -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
        let c = self.coefficients(y)?;
        let seeds = self.chain.seeds();
        Ok(Box::new(move |z| combine(seeds, &c, z, y)))
    }
}

/// `ρ0(x, y)` by inverting the factor chain from the top:
/// `g_{N−1} = φ_N[N−1](x)·H(x−y)/φ_N[N−1](y)`, then
/// `g_{k−1}(x) = φ_k[k−1](x) ∫_y^x g_k(z)/φ_k[k−1](z) dz`, ending at `g_0 = ρ0`.
/// Dressed seeds are taken at `τ = 0`.
pub fn initial_condition(chain: &DressingChain, x: f64, y: f64) -> Result<f64> {
    if chain.is_empty() {
        return Err(Error::Domain("initial condition needs at least one seed".into()));
    }
    if x < y {
        return Ok(0.0);
    }
    let n = chain.len();
    let top_at_y = chain.dressed_seed(n, y, 0.0)?;
    factor_level(chain, 0, x, y, top_at_y)
}

/// `g_level(x)` of the backward recursion (`level = N − 1` is the top).
fn factor_level(chain: &DressingChain, level: usize, x: f64, y: f64, top_at_y: f64) -> Result<f64> {
    let n = chain.len();
    if level == n - 1 {
        return Ok(chain.dressed_seed(n, x, 0.0)? / top_at_y);
    }
    // g_level = φ_k[k−1] ∫ g_k / φ_k[k−1] with k = level + 1
    let k = level + 1;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let integrand = |z: f64| {
        let inner =
            factor_level(chain, k, z, y, top_at_y).and_then(|g| chain.dressed_seed(k, z, 0.0).map(|phi| g / phi));
        match inner {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        }
    };
    let est = Adaptive::with_rel_tol(1e-12).integrate(y, x, integrand)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let tolerance = QUADRATURE_TOLERANCE * est.value.abs();
    if est.error > tolerance && est.error > 1e-300 {
        return Err(Error::QuadratureFailure { estimate: est.error, tolerance });
    }
    Ok(chain.dressed_seed(k, x, 0.0)? * est.value)
}

/// Which half-line of the source the propagation integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// `∫_y^∞ K(z, y) G(x − z) dz`, the propagated `ρ0`.
    Causal,
    /// `−∫_{−∞}^y K(z, y) G(x − z) dz`. Differs from the causal integral by a
    /// free evolution of `Σ c_k φ_k`, which every Wronskian dressing of the
    /// chain annihilates; it avoids cancellation for `x > y`.
    AntiCausal,
}

/// `∂ₓ^n` of `(1/2√(πτ)) ∫ K(z, y)·e^{−(x−z)²/4τ} dz` over one side, `n = 0..=max_order`.
fn propagate(profile: &dyn CausalProfile, side: Side, tau: f64, x: f64, y: f64, max_order: usize) -> Result<Vec<f64>> {
    let section = profile.section(y)?;
    let root = tau.sqrt();
    let width = 2.0 * root;
    // z = x + 2√τ s; e^{g z − s²} peaks at s = ±g√τ
    let s0 = (y - x) / width;
    let peak = profile.growth_rate() * root;
    let (a, b, sign) = match side {
        Side::Causal => (s0, s0.max(peak) + GAUSSIAN_TAIL, 1.0),
        Side::AntiCausal => (s0.min(-peak) - GAUSSIAN_TAIL, s0, -1.0),
    };
    let dim = max_order + 1;
    let mut h = vec![0.0; dim];
    // far from the source the Gaussian falls off at rate ≈ 2|s0| across the
    // cut; panels shrink so each spans an O(1) change of the exponent
    let quad = Composite { max_width: 0.5_f64.min(1.0 / (s0.abs() + peak)), ..Composite::default() };
    let est = quad.integrate_vec(a, b, dim, |s, out| {
        let weight = section(x + width * s) * (-s * s).exp();
        hermite_all(s, &mut h);
        for (o, hk) in out.iter_mut().zip(&h) {
            *o = weight * hk;
        }
    });
    let norm = sign / PI.sqrt();
    let base = est[0].value.abs();
    let mut values = Vec::with_capacity(dim);
    for (n, e) in est.iter().enumerate() {
        let scale = width.powi(-(n as i32));
        let tolerance = QUADRATURE_TOLERANCE * e.value.abs().max(base);
        if e.error > tolerance && e.error > 1e-300 {
            return Err(Error::QuadratureFailure { estimate: e.error, tolerance });
        }
        values.push(norm * scale * e.value);
    }
    Ok(values)
}

/// `∂ₓ^n ρ(τ, x, y)` for `n = 0..=max_order`, where `ρ` solves the free heat
/// equation with initial data `ρ0(·, y)`. Derivatives act on the Gaussian
/// factor only (Hermite weights).
pub fn free_propagate_derivatives(
    initial: InitialData<'_>,
    tau: f64,
    x: f64,
    y: f64,
    max_order: usize,
) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("propagation time must be positive, got {tau}")));
    }
    match initial {
        InitialData::Delta => Ok((0..=max_order).map(|n| free_kernel_derivative(tau, x - y, n)).collect()),
        InitialData::Causal(profile) => propagate(profile, Side::Causal, tau, x, y, max_order),
    }
}

/// `∂ₓ^deriv_order ρ(τ, x, y)` of the freely propagated initial data.
pub fn free_propagate(initial: InitialData<'_>, tau: f64, x: f64, y: f64, deriv_order: usize) -> Result<f64> {
    Ok(free_propagate_derivatives(initial, tau, x, y, deriv_order)?[deriv_order])
}

/// Derivatives `0..=max_order` of the propagated initial kernel, from the side
/// that keeps the integral small. Only meaningful after dressing by the chain.
fn propagated_for_dressing(kernel: &TriangularKernel, tau: f64, x: f64, y: f64, max_order: usize) -> Result<Vec<f64>> {
    let side = if x > y { Side::AntiCausal } else { Side::Causal };
    propagate(kernel, side, tau, x, y, max_order)
}

/// The dressed heat kernel `ρ[N](τ, x, y)`: the Wronskian dressing in `x` of
/// the freely propagated `ρ0`.
pub fn dressed_kernel(chain: &DressingChain, tau: f64, x: f64, y: f64) -> Result<f64> {
    Ok(dressed_kernel_derivatives(chain, tau, x, y, 0)?[0])
}

/// `∂ₓ^j ρ[N](τ, x, y)` for `j = 0..=order`.
pub fn dressed_kernel_derivatives(chain: &DressingChain, tau: f64, x: f64, y: f64, order: usize) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::Domain(format!("kernel time must be positive, got {tau}")));
    }
    if chain.is_empty() {
        return Ok((0..=order).map(|n| free_kernel_derivative(tau, x - y, n)).collect());
    }
    let kernel = TriangularKernel::new(chain.clone())?;
    let derivs = propagated_for_dressing(&kernel, tau, x, y, chain.len() + order)?;
    dressing::dress_derivatives(chain, x, &derivs, order)
}

/// A heat kernel of one of the supported constructions.
#[derive(Debug, Clone, PartialEq)]
pub enum HeatKernel {
    /// `G0(τ, x − y)`.
    Free,
    /// Dressing of the propagated triangular kernel.
    Dressed(DressingChain),
    /// Closed-form two-soliton kernel.
    ClosedForm(ClosedFormKernel),
}

impl HeatKernel {
    /// `∂ₓ^j ρ(τ, x, y)` for `j = 0..=order`.
    pub fn x_derivatives(&self, tau: f64, x: f64, y: f64, order: usize) -> Result<Vec<f64>> {
        match self {
            HeatKernel::Free => dressed_kernel_derivatives(&DressingChain::empty(), tau, x, y, order),
            HeatKernel::Dressed(chain) => dressed_kernel_derivatives(chain, tau, x, y, order),
            HeatKernel::ClosedForm(k) => k.x_derivatives(tau, x, y, order),
        }
    }
}

impl Kernel for HeatKernel {
    fn eval(&self, tau: f64, x: f64, y: f64) -> Result<f64> {
        match self {
            HeatKernel::Free => {
                if !(tau > 0.0) {
                    return Err(Error::Domain(format!("kernel time must be positive, got {tau}")));
                }
                Ok(free_kernel(tau, x - y))
            }
            HeatKernel::Dressed(chain) => dressed_kernel(chain, tau, x, y),
            HeatKernel::ClosedForm(k) => k.eval(tau, x, y),
        }
    }
}
