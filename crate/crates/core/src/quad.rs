//! Gauss–Legendre quadrature: fixed composite rules for smooth parametric
//! integrands and a globally adaptive bisection scheme with error estimates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const MAX_ORDER: usize = 64;

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Cached rule of order `n` (1 ≤ n ≤ 64).
    pub fn of_order(n: usize) -> &'static GaussLegendre {
        static RULES: [OnceLock<GaussLegendre>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
        assert!((1..=MAX_ORDER).contains(&n), "Gauss-Legendre order {n} out of range");
        RULES[n].get_or_init(|| GaussLegendre::compute(n))
    }

    /// Apply the rule on `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule with uniform panels of width at most
/// `max_width`. With an over-resolved integrand the result is a smooth
/// function of the endpoints up to rounding, which finite-difference
/// residual checks depend on.
#[derive(Debug, Clone, Copy)]
pub struct Composite {
    pub max_width: f64,
    pub order: usize,
    /// Order of the embedded comparison rule used for the error estimate.
    pub check_order: usize,
}

impl Default for Composite {
    fn default() -> Self {
        Self { max_width: 0.5, order: 20, check_order: 12 }
    }
}

impl Composite {
    pub fn panels(&self, a: f64, b: f64) -> usize {
        (((b - a).abs() / self.max_width).ceil() as usize).max(1)
    }

    /// Integrate a vector-valued integrand: `f(x, out)` fills `out` and the
    /// integral of each component is returned. The estimate per component is
    /// the difference against the lower-order check rule plus a rounding floor.
    pub fn integrate_vec<F>(&self, a: f64, b: f64, dim: usize, mut f: F) -> Vec<Estimate>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let rule = GaussLegendre::of_order(self.order);
        let check = GaussLegendre::of_order(self.check_order);
        let n = self.panels(a, b);
        let width = (b - a) / n as f64;
        let mut hi = vec![0.0; dim];
        let mut lo = vec![0.0; dim];
        let mut mass = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for p in 0..n {
            let pa = a + p as f64 * width;
            let half = 0.5 * width;
            let mid = pa + half;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                f(mid + half * x, &mut buf);
                for k in 0..dim {
                    hi[k] += w * half * buf[k];
                    mass[k] += (w * half * buf[k]).abs();
                }
            }
            for (x, w) in check.nodes.iter().zip(&check.weights) {
                f(mid + half * x, &mut buf);
                for k in 0..dim {
                    lo[k] += w * half * buf[k];
                }
            }
        }
        (0..dim)
            .map(|k| Estimate { value: hi[k], error: (hi[k] - lo[k]).abs() + 64.0 * f64::EPSILON * mass[k] })
            .collect()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> Estimate {
        self.integrate_vec(a, b, 1, |x, out| out[0] = f(x))[0]
    }
}

/// Globally adaptive bisection: the segment with the largest error estimate
/// is split until the total estimate meets the tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub order: usize,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self { rel_tol: 1e-12, abs_tol: 0.0, order: 15, max_intervals: 4000 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Adaptive {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    fn segment<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, f: &mut F) -> Segment {
        let rule = GaussLegendre::of_order(self.order);
        let m = 0.5 * (a + b);
        let whole = rule.integrate(a, b, &mut *f);
        let left = rule.integrate(a, m, &mut *f);
        let right = rule.integrate(m, b, &mut *f);
        let value = left + right;
        let floor = 32.0 * f64::EPSILON * (left.abs() + right.abs());
        Segment { a, b, value, error: (value - whole).abs() + floor }
    }

    /// Integrate `f` over `[a, b]`, pre-split at `breaks` (points strictly
    /// inside the interval, in increasing order).
    ///
    /// Returns [`Error::QuadratureFailure`] when the interval budget is
    /// exhausted before the tolerance is met.
    pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        breaks: &[f64],
        mut f: F,
    ) -> Result<Estimate> {
        if a == b {
            return Ok(Estimate { value: 0.0, error: 0.0 });
        }
        let mut edges = vec![a];
        edges.extend(breaks.iter().copied().filter(|&p| p > a.min(b) && p < a.max(b)));
        edges.push(b);
        let mut heap = BinaryHeap::new();
        for w in edges.windows(2) {
            heap.push(self.segment(w[0], w[1], &mut f));
        }
        loop {
            let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target {
                return Ok(Estimate { value, error });
            }
            if heap.len() >= self.max_intervals {
                return Err(Error::QuadratureFailure { estimate: error, tolerance: target });
            }
            let worst = heap.pop().expect("non-empty heap");
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a.min(worst.b) || m >= worst.a.max(worst.b) {
                // interval exhausted at machine resolution
                return Err(Error::QuadratureFailure { estimate: error, tolerance: target });
            }
            heap.push(self.segment(worst.a, m, &mut f));
            heap.push(self.segment(m, worst.b, &mut f));
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, f: F) -> Result<Estimate> {
        self.integrate_with_breaks(a, b, &[], f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 12, 20, 33] {
            let rule = GaussLegendre::of_order(n);
            let sum: f64 = rule.weights.iter().sum();
            assert_relative_eq!(sum, 2.0, max_relative = 1e-14);
            // x^{2n-2} is the highest even power reproduced
            let p = (2 * n - 2) as i32;
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(p));
            assert_relative_eq!(got, 2.0 / (p as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn composite_gaussian_mass() {
        let est = Composite::default().integrate(-10.0, 10.0, |x| (-x * x).exp());
        assert_relative_eq!(est.value, std::f64::consts::PI.sqrt(), max_relative = 1e-14);
        assert!(est.error < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let est = Adaptive::with_rel_tol(1e-10).integrate(0.0, 1.0, |x| x.powf(-0.5)).unwrap();
        assert_relative_eq!(est.value, 2.0, max_relative = 1e-9);
        assert!(est.error < 1e-9);
    }

    #[test]
    fn adaptive_reports_failure_on_budget_exhaustion() {
        let q = Adaptive { max_intervals: 4, ..Adaptive::with_rel_tol(1e-14) };
        let r = q.integrate(0.0, 1.0, |x| (1.0 / (x + 1e-9)).sin());
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
