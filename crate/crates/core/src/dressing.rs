//! Seed solutions of the free heat equation, their Wronskians, and the
//! dressed potential `u[N] = 2 ∂ₓ² ln W` and dressed functions
//! `ρ[N] = W[φ₁,…,φ_N,ρ] / W[φ₁,…,φ_N]`.
//!
//! Seeds grow like `e^{b|x|}`, so determinants are formed from columns
//! rescaled by `e^{b|x|}/2` (and the common `e^{b²τ}`); every ratio of
//! Wronskians is taken between scaled determinants, where those factors
//! cancel exactly.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size below which a scaled Wronskian counts as degenerate.
const DEGENERACY_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// `cosh(bx)`
    Even,
    /// `sinh(bx)`
    Odd,
}

impl Parity {
    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// `φ(x, τ) = cosh(bx)·e^{b²τ}` or `sinh(bx)·e^{b²τ}`, an exact solution of
/// `φ_τ = φ_xx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedFunction {
    pub parity: Parity,
    pub b: f64,
}

impl SeedFunction {
    pub fn cosh(b: f64) -> Self {
        Self { parity: Parity::Even, b }
    }

    pub fn sinh(b: f64) -> Self {
        Self { parity: Parity::Odd, b }
    }

    /// Closed-form `∂ₓ^order φ(x, τ)`.
    pub fn eval(&self, x: f64, tau: f64, order: usize) -> f64 {
        let bx = self.b * x;
        let shape = match self.parity_of_derivative(order) {
            Parity::Even => bx.cosh(),
            Parity::Odd => bx.sinh(),
        };
        self.b.powi(order as i32) * shape * (self.b * self.b * tau).exp()
    }

    fn parity_of_derivative(&self, order: usize) -> Parity {
        if order.is_multiple_of(2) {
            self.parity
        } else {
            self.parity.flipped()
        }
    }

    /// `ln` of the column scale `e^{b|x| + b²τ}/2` used in determinants.
    pub(crate) fn log_scale(&self, x: f64, tau: f64) -> f64 {
        self.b * x.abs() + self.b * self.b * tau - std::f64::consts::LN_2
    }

    /// `∂ₓ^order φ` divided by `e^{b|x| + b²τ}/2`; bounded for all `x`.
    pub(crate) fn scaled(&self, x: f64, order: usize) -> f64 {
        let decay = (-2.0 * self.b * x.abs()).exp();
        let shape = match self.parity_of_derivative(order) {
            Parity::Even => 1.0 + decay,
            Parity::Odd => x.signum() * (1.0 - decay),
        };
        // sinh(0) = 0 exactly, signum(0.0) = 1 gives (1 - 1) = 0 as well
        self.b.powi(order as i32) * shape
    }
}

/// Closed-form `∂ₓ^order φ(x, τ)` of a seed.
pub fn seed_eval(seed: &SeedFunction, x: f64, tau: f64, order: usize) -> f64 {
    seed.eval(x, tau, order)
}

/// A function of `(x, τ)` with closed-form x-derivatives.
pub trait FreeSolution {
    /// Fill `out[k] = ∂ₓ^k ρ(x, τ)` for `k < out.len()`.
    fn derivatives(&self, x: f64, tau: f64, out: &mut [f64]);
}

impl FreeSolution for SeedFunction {
    fn derivatives(&self, x: f64, tau: f64, out: &mut [f64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.eval(x, tau, k);
        }
    }
}

/// A constant function.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl FreeSolution for Constant {
    fn derivatives(&self, _x: f64, _tau: f64, out: &mut [f64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = if k == 0 { self.0 } else { 0.0 };
        }
    }
}

/// The free heat kernel started at time `−tau0`: `G0(τ + τ0, x − center)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSolution {
    pub center: f64,
    pub tau0: f64,
}

impl FreeSolution for GaussianSolution {
    fn derivatives(&self, x: f64, tau: f64, out: &mut [f64]) {
        let t = tau + self.tau0;
        let xi = x - self.center;
        for (k, v) in out.iter_mut().enumerate() {
            *v = crate::special::free_kernel_derivative(t, xi, k);
        }
    }
}

/// An ordered list of seeds defining an N-fold Darboux transformation.
///
/// Wavenumbers strictly increase and parities alternate starting from
/// `cosh`, which keeps every leading Wronskian positive.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DressingChain {
    seeds: Vec<SeedFunction>,
}

impl DressingChain {
    pub fn new(seeds: Vec<SeedFunction>) -> Result<Self> {
        let mut expected = Parity::Even;
        let mut last_b = 0.0;
        for (i, s) in seeds.iter().enumerate() {
            if !(s.b.is_finite() && s.b > 0.0) {
                return Err(Error::InvalidChain(format!("seed {i}: wavenumber {} must be positive", s.b)));
            }
            if s.b <= last_b {
                return Err(Error::InvalidChain(format!(
                    "seed {i}: wavenumbers must strictly increase ({} after {last_b})",
                    s.b
                )));
            }
            if s.parity != expected {
                return Err(Error::InvalidChain(format!(
                    "seed {i}: expected {expected:?} parity, parities alternate starting with cosh"
                )));
            }
            expected = expected.flipped();
            last_b = s.b;
        }
        Ok(Self { seeds })
    }

    /// The undressed problem.
    pub fn empty() -> Self {
        Self { seeds: Vec::new() }
    }

    /// Seeds with the given wavenumbers and alternating parities.
    pub fn from_wavenumbers(bs: &[f64]) -> Result<Self> {
        let mut parity = Parity::Even;
        let seeds = bs
            .iter()
            .map(|&b| {
                let s = SeedFunction { parity, b };
                parity = parity.flipped();
                s
            })
            .collect();
        Self::new(seeds)
    }

    /// The two-fold kink chain `b_k = k·m/√2`, `k = 1, 2`.
    pub fn kink(mass: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Domain(format!("mass scale must be positive, got {mass}")));
        }
        Self::from_wavenumbers(&[mass / SQRT_2, 2.0 * mass / SQRT_2])
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn seeds(&self) -> &[SeedFunction] {
        &self.seeds
    }

    /// The leading `k` seeds.
    pub fn prefix(&self, k: usize) -> DressingChain {
        Self { seeds: self.seeds[..k].to_vec() }
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.seeds.last().map_or(0.0, |s| s.b)
    }

    pub fn min_wavenumber(&self) -> Option<f64> {
        self.seeds.first().map(|s| s.b)
    }

    fn log_scale(&self, x: f64, tau: f64) -> f64 {
        self.seeds.iter().map(|s| s.log_scale(x, tau)).sum()
    }

    /// Scaled determinant with rows of the given derivative orders.
    fn scaled_det(&self, x: f64, orders: &[usize]) -> f64 {
        let n = self.seeds.len();
        debug_assert_eq!(orders.len(), n);
        let mut m = vec![0.0; n * n];
        for (i, &r) in orders.iter().enumerate() {
            for (j, s) in self.seeds.iter().enumerate() {
                m[i * n + j] = s.scaled(x, r);
            }
        }
        determinant(&mut m, n)
    }

    fn check_degenerate(&self, x: f64, det: f64) -> Result<()> {
        let n = self.seeds.len();
        // Hadamard bound of the scaled matrix with rows 0..n
        let mut bound = 1.0;
        for r in 0..n {
            let norm: f64 = self.seeds.iter().map(|s| s.scaled(x, r).powi(2)).sum::<f64>().sqrt();
            bound *= norm;
        }
        let ratio = det.abs() / bound;
        if !(ratio > DEGENERACY_RATIO) {
            return Err(Error::DegenerateWronskian { x, ratio });
        }
        Ok(())
    }

    /// `ln W[φ₁,…,φ_N](x, τ)`; the Wronskian itself overflows once `b·x`
    /// passes a few hundred.
    pub fn ln_wronskian(&self, x: f64, tau: f64) -> Result<f64> {
        if self.is_empty() {
            return Ok(0.0);
        }
        let orders: Vec<usize> = (0..self.len()).collect();
        let det = self.scaled_det(x, &orders);
        self.check_degenerate(x, det)?;
        Ok(self.log_scale(x, tau) + det.ln())
    }

    /// `W[φ₁,…,φ_N](x, τ)`, or with `extra` (derivatives of ρ of orders
    /// `0..=N`) the bordered `W[φ₁,…,φ_N,ρ]`.
    pub fn wronskian(&self, x: f64, tau: f64, extra: Option<&[f64]>) -> Result<f64> {
        let n = self.len();
        let orders: Vec<usize> = (0..n).collect();
        let det = self.scaled_det(x, &orders);
        if n > 0 {
            self.check_degenerate(x, det)?;
        }
        let scale = self.log_scale(x, tau).exp();
        match extra {
            None => Ok(if n == 0 { 1.0 } else { scale * det }),
            Some(rho) => Ok(scale * self.bordered_scaled_det(x, rho)),
        }
    }

    /// Scaled `W[φ, ρ]` with the ρ column left unscaled.
    fn bordered_scaled_det(&self, x: f64, rho: &[f64]) -> f64 {
        let n = self.len();
        assert!(rho.len() > n, "extra function must supply derivatives up to order {n}");
        let m1 = n + 1;
        let mut m = vec![0.0; m1 * m1];
        for i in 0..m1 {
            for (j, s) in self.seeds.iter().enumerate() {
                m[i * m1 + j] = s.scaled(x, i);
            }
            m[i * m1 + n] = rho[i];
        }
        determinant(&mut m, m1)
    }

    /// Scaled bordered determinant with arbitrary row orders.
    fn bordered_rows_det(&self, x: f64, rows: &[usize], rho: &[f64]) -> f64 {
        let m1 = self.len() + 1;
        let mut m = vec![0.0; m1 * m1];
        for (i, &r) in rows.iter().enumerate() {
            for (j, s) in self.seeds.iter().enumerate() {
                m[i * m1 + j] = s.scaled(x, r);
            }
            m[i * m1 + m1 - 1] = rho[r];
        }
        determinant(&mut m, m1)
    }

    /// `W^{(k)}/W` for `k = 0..=kmax`, from row-differentiated determinants.
    pub fn wronskian_derivative_ratios(&self, x: f64, kmax: usize) -> Result<Vec<f64>> {
        let n = self.len();
        let mut ratios = vec![0.0; kmax + 1];
        ratios[0] = 1.0;
        if n == 0 {
            return Ok(ratios);
        }
        let base: Vec<usize> = (0..n).collect();
        let det = self.scaled_det(x, &base);
        self.check_degenerate(x, det)?;
        let mut terms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        terms.insert(base, 1.0);
        for ratio in ratios.iter_mut().skip(1) {
            terms = differentiate_rows(&terms);
            let sum: f64 = terms.iter().map(|(rows, c)| c * self.scaled_det(x, rows)).sum();
            *ratio = sum / det;
        }
        Ok(ratios)
    }

    /// `∂ₓ^k ln W` for `k = 1..=kmax` (index 0 is left at zero).
    pub fn log_wronskian_derivatives(&self, x: f64, kmax: usize) -> Result<Vec<f64>> {
        let w = self.wronskian_derivative_ratios(x, kmax)?;
        // W^{(n)} = Σ_j C(n−1, j) W^{(j)} (ln W)^{(n−j)}
        let mut l = vec![0.0; kmax + 1];
        for n in 1..=kmax {
            let mut acc = w[n];
            for j in 1..n {
                acc -= binomial(n - 1, j) * w[j] * l[n - j];
            }
            l[n] = acc;
        }
        Ok(l)
    }

    /// The k-th dressed seed `φ_k[k−1] = W[φ₁..φ_k] / W[φ₁..φ_{k−1}]`
    /// (1-based `k`).
    pub fn dressed_seed(&self, k: usize, x: f64, tau: f64) -> Result<f64> {
        assert!(k >= 1 && k <= self.len());
        let top = self.prefix(k);
        let below = self.prefix(k - 1);
        let orders_top: Vec<usize> = (0..k).collect();
        let orders_below: Vec<usize> = (0..k - 1).collect();
        let d_top = top.scaled_det(x, &orders_top);
        top.check_degenerate(x, d_top)?;
        let d_below = if k == 1 { 1.0 } else { below.scaled_det(x, &orders_below) };
        let s = &self.seeds[k - 1];
        Ok(s.log_scale(x, tau).exp() * d_top / d_below)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One x-derivative of a sum of determinants indexed by their row orders.
/// Terms with repeated rows vanish; rows are kept sorted, tracking the sign.
fn differentiate_rows(terms: &BTreeMap<Vec<usize>, f64>) -> BTreeMap<Vec<usize>, f64> {
    let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (rows, &c) in terms {
        for i in 0..rows.len() {
            let mut r = rows.clone();
            r[i] += 1;
            if let Some(sign) = sort_with_sign(&mut r) {
                *out.entry(r).or_insert(0.0) += sign * c;
            }
        }
    }
    out.retain(|_, c| *c != 0.0);
    out
}

/// Sort in place, returning the permutation sign, or `None` on duplicates.
fn sort_with_sign(r: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..r.len() {
        let mut j = i;
        while j > 0 && r[j - 1] > r[j] {
            r.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if r.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// Determinant by LU with partial pivoting; `m` is overwritten.
pub(crate) fn determinant(m: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs())).unwrap_or(col);
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    m[row * n + k] -= f * m[col * n + k];
                }
            }
        }
    }
    det
}

/// Solve `m·v = rhs` by Gaussian elimination with partial pivoting.
pub(crate) fn solve(m: &mut [f64], rhs: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))?;
        if m[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            rhs.swap(pivot, col);
        }
        let p = m[col * n + col];
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * rhs[k];
        }
        rhs[row] = acc / m[row * n + row];
    }
    Some(())
}

/// `W[φ₁,…,φ_N](x, τ)`, optionally bordered by the derivatives of ρ.
pub fn wronskian(chain: &DressingChain, x: f64, tau: f64, extra: Option<&[f64]>) -> Result<f64> {
    chain.wronskian(x, tau, extra)
}

/// `u[N](x) = 2 ∂ₓ² ln W[φ₁,…,φ_N]` over the zero seed potential.
pub fn dressed_potential(chain: &DressingChain, x: f64) -> Result<f64> {
    if chain.is_empty() {
        return Ok(0.0);
    }
    Ok(2.0 * chain.log_wronskian_derivatives(x, 2)?[2])
}

/// `ρ[N](x, τ)` given the derivatives `∂ₓ^k ρ`, `k = 0..=N`, at `(x, τ)`.
pub fn dress_values(chain: &DressingChain, x: f64, derivs: &[f64]) -> Result<f64> {
    let n = chain.len();
    if n == 0 {
        return Ok(derivs[0]);
    }
    let orders: Vec<usize> = (0..n).collect();
    let det = chain.scaled_det(x, &orders);
    chain.check_degenerate(x, det)?;
    let scale = derivs[..=n].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let normalized: Vec<f64> = derivs[..=n].iter().map(|v| v / scale).collect();
    Ok(scale * chain.bordered_scaled_det(x, &normalized) / det)
}

/// `∂ₓ^j ρ[N]` for `j = 0..=k`, given `∂ₓ^r ρ` for `r = 0..=N+k`.
pub fn dress_derivatives(chain: &DressingChain, x: f64, derivs: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = chain.len();
    assert!(derivs.len() > n + k, "need derivatives up to order {}", n + k);
    if n == 0 {
        return Ok(derivs[..=k].to_vec());
    }
    let w = chain.wronskian_derivative_ratios(x, k)?;
    let base: Vec<usize> = (0..n).collect();
    let det = chain.scaled_det(x, &base);
    let scale = derivs[..=n + k].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(vec![0.0; k + 1]);
    }
    let normalized: Vec<f64> = derivs.iter().map(|v| v / scale).collect();
    let mut terms: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    terms.insert((0..=n).collect(), 1.0);
    let mut q = Vec::with_capacity(k + 1);
    for j in 0..=k {
        if j > 0 {
            terms = differentiate_rows(&terms);
        }
        let dj: f64 =
            terms.iter().map(|(rows, c)| c * chain.bordered_rows_det(x, rows, &normalized)).sum::<f64>() * scale / det;
        // (D/W)^{(j)} from D^{(j)} = Σ_i C(j,i) (D/W)^{(i)} W^{(j−i)}
        let mut acc = dj;
        for (i, qi) in q.iter().enumerate() {
            acc -= binomial(j, i) * qi * w[j - i];
        }
        q.push(acc);
    }
    Ok(q)
}

/// `ρ[N] = W[φ₁,…,φ_N,ρ] / W[φ₁,…,φ_N]` at `(x, τ)`.
pub fn dress_function(chain: &DressingChain, rho: &dyn FreeSolution, x: f64, tau: f64) -> Result<f64> {
    let mut d = vec![0.0; chain.len() + 1];
    rho.derivatives(x, tau, &mut d);
    dress_values(chain, x, &d)
}

/// A potential `u(x)` entering `−ρ_τ + ρ_xx + u ρ = 0`.
pub trait Potential: Sync {
    fn value(&self, x: f64) -> f64;
}

/// `u ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn value(&self, _x: f64) -> f64 {
        0.0
    }
}

/// The dressed potential `u[N]` of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    chain: DressingChain,
}

impl PotentialField {
    pub fn new(chain: DressingChain) -> Self {
        Self { chain }
    }

    pub fn chain(&self) -> &DressingChain {
        &self.chain
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        dressed_potential(&self.chain, x)
    }

    /// `[u, u′, u″]` at `x`.
    pub fn derivatives(&self, x: f64) -> Result<[f64; 3]> {
        if self.chain.is_empty() {
            return Ok([0.0; 3]);
        }
        let l = self.chain.log_wronskian_derivatives(x, 4)?;
        Ok([2.0 * l[2], 2.0 * l[3], 2.0 * l[4]])
    }
}

impl Potential for PotentialField {
    fn value(&self, x: f64) -> f64 {
        // valid chains never produce a degenerate Wronskian
        self.eval(x).expect("validated chain")
    }
}
