//! Independent numerical ground truth: Crank–Nicolson evolution of
//! `ρ_τ = ρ_xx + u ρ`, pointwise heat-equation residuals of kernels, and a
//! finite-difference eigensolver for `−∂ₓ² − u`.

use serde::Serialize;

use crate::dressing::Potential;
use crate::error::{Error, Result};
use crate::transmutation::Kernel;

/// Backward-Euler half steps replacing the first Crank–Nicolson steps
/// (damps the undamped high modes of rough initial data).
const STARTUP_HALF_STEPS: usize = 4;

/// Uniform grid on `[x_min, x_max]` with Dirichlet-zero ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub h: f64,
    pub dt: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, h: f64, dt: f64) -> Result<Self> {
        if !(h > 0.0 && dt > 0.0) {
            return Err(Error::Domain(format!("grid spacing and time step must be positive (h = {h}, dt = {dt})")));
        }
        if !(x_max > x_min) {
            return Err(Error::Domain(format!("empty grid interval [{x_min}, {x_max}]")));
        }
        let cells = (x_max - x_min) / h;
        if (cells - cells.round()).abs() > 1e-6 * cells.max(1.0) {
            return Err(Error::Domain(format!("interval length is not a multiple of h = {h}")));
        }
        Ok(Self { x_min, x_max, h, dt })
    }

    /// `[−30, 30]`, `h = 0.005`, `Δτ = 0.0005`, sized for unit mass.
    pub fn standard() -> Self {
        Self { x_min: -30.0, x_max: 30.0, h: 0.005, dt: 0.0005 }
    }

    pub fn cells(&self) -> usize {
        ((self.x_max - self.x_min) / self.h).round() as usize
    }

    /// Number of nodes including both boundary nodes.
    pub fn len(&self) -> usize {
        self.cells() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Nearest node index to `x`.
    pub fn index_of(&self, x: f64) -> usize {
        (((x - self.x_min) / self.h).round().max(0.0) as usize).min(self.cells())
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { h: self.h / factor as f64, dt: self.dt / factor as f64, ..*self }
    }

    pub fn widened(&self, factor: f64) -> Self {
        let mid = 0.5 * (self.x_min + self.x_max);
        let half = 0.5 * (self.x_max - self.x_min) * factor;
        let cells = (2.0 * half / self.h).round();
        Self { x_min: mid - 0.5 * cells * self.h, x_max: mid + 0.5 * cells * self.h, ..*self }
    }
}

/// Thomas algorithm for a tridiagonal system; `rhs` is overwritten with the
/// solution. `sub[i]` couples row `i` to `i − 1`, `sup[i]` to `i + 1`.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Crank–Nicolson solution of `ρ_τ = ρ_xx + u ρ` at `τ_final`, started from
/// grid values `initial` (boundary entries are forced to zero).
pub fn evolve(potential: &dyn Potential, initial: &[f64], tau_final: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    if !(tau_final > 0.0) {
        return Err(Error::Domain(format!("evolution time must be positive, got {tau_final}")));
    }
    let n = grid.len();
    if initial.len() != n {
        return Err(Error::Domain(format!("initial data has {} values, grid has {n} nodes", initial.len())));
    }
    let m = n - 2;
    let u: Vec<f64> = (1..n - 1).map(|i| potential.value(grid.x(i))).collect();
    let u_max = u.iter().fold(0.0_f64, |a, &b| a.max(b));
    let mut rho: Vec<f64> = initial[1..n - 1].to_vec();
    let start_max = rho.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));

    let steps = (tau_final / grid.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = tau_final / steps as f64;
    let inv_h2 = 1.0 / (grid.h * grid.h);

    // implicit operator I − θ dt A, A = D² + u
    let build = |theta_dt: f64| {
        let off = vec![-theta_dt * inv_h2; m];
        let diag: Vec<f64> = u.iter().map(|&ui| 1.0 + theta_dt * (2.0 * inv_h2 - ui)).collect();
        (off, diag)
    };
    let apply_explicit = |rho: &[f64], theta_dt: f64, out: &mut [f64]| {
        for i in 0..m {
            let left = if i > 0 { rho[i - 1] } else { 0.0 };
            let right = if i + 1 < m { rho[i + 1] } else { 0.0 };
            let lap = (left - 2.0 * rho[i] + right) * inv_h2;
            out[i] = rho[i] + theta_dt * (lap + u[i] * rho[i]);
        }
    };

    let check = |rho: &[f64], t: f64| -> Result<()> {
        let observed = rho.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let bound = start_max * ((u_max + 1.0) * t).exp();
        if !observed.is_finite() || observed > bound {
            return Err(Error::Stability { tau: t, observed, bound });
        }
        Ok(())
    };

    let startup = STARTUP_HALF_STEPS.min(2 * steps);
    let (be_off, be_diag) = build(0.5 * dt);
    for k in 0..startup {
        solve_tridiagonal(&be_off, &be_diag, &be_off, &mut rho);
        check(&rho, (k + 1) as f64 * 0.5 * dt)?;
    }
    let (cn_off, cn_diag) = build(0.5 * dt);
    let mut rhs = vec![0.0; m];
    for k in startup / 2..steps {
        apply_explicit(&rho, 0.5 * dt, &mut rhs);
        solve_tridiagonal(&cn_off, &cn_diag, &cn_off, &mut rhs);
        std::mem::swap(&mut rho, &mut rhs);
        check(&rho, (k + 1) as f64 * dt)?;
    }

    let mut out = vec![0.0; n];
    out[1..n - 1].copy_from_slice(&rho);
    Ok(out)
}

/// Normalized Gaussian of width `sigma` centred at `center`, sampled on the grid.
pub fn regularized_delta(grid: &Grid1D, center: f64, sigma: f64) -> Vec<f64> {
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    grid.xs().iter().map(|&x| norm * (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp()).collect()
}

/// Finite-difference steps for [`kernel_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStencil {
    pub h: f64,
    pub dt: f64,
}

impl Default for ResidualStencil {
    fn default() -> Self {
        Self { h: 1e-3, dt: 1e-4 }
    }
}

/// Smallest sample time accepted by [`kernel_residual`].
pub const MIN_RESIDUAL_TAU: f64 = 0.05;

/// `max |−ρ_τ + ρ_xx + u ρ|` over the samples `(τ, x, y)`, by fourth-order
/// central differences.
pub fn kernel_residual(kernel: &dyn Kernel, potential: &dyn Potential, samples: &[(f64, f64, f64)]) -> Result<f64> {
    kernel_residual_with(kernel, potential, samples, ResidualStencil::default())
}

pub fn kernel_residual_with(
    kernel: &dyn Kernel,
    potential: &dyn Potential,
    samples: &[(f64, f64, f64)],
    stencil: ResidualStencil,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &(tau, x, y) in samples {
        if tau < MIN_RESIDUAL_TAU {
            return Err(Error::Domain(format!("residual samples need tau >= {MIN_RESIDUAL_TAU}, got {tau}")));
        }
        let r = point_residual(kernel, potential, tau, x, y, stencil)?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

fn point_residual(
    kernel: &dyn Kernel,
    potential: &dyn Potential,
    tau: f64,
    x: f64,
    y: f64,
    st: ResidualStencil,
) -> Result<f64> {
    let (h, d) = (st.h, st.dt);
    let f = |t: f64, x: f64| kernel.eval(t, x, y);
    let center = f(tau, x)?;
    let rho_t =
        (-f(tau + 2.0 * d, x)? + 8.0 * f(tau + d, x)? - 8.0 * f(tau - d, x)? + f(tau - 2.0 * d, x)?) / (12.0 * d);
    let rho_xx = (-f(tau, x + 2.0 * h)? + 16.0 * f(tau, x + h)? - 30.0 * center + 16.0 * f(tau, x - h)?
        - f(tau, x - 2.0 * h)?)
        / (12.0 * h * h);
    Ok(-rho_t + rho_xx + potential.value(x) * center)
}

/// Lowest eigenpairs of `−∂ₓ² − u` with Richardson-extrapolated eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSolution {
    /// Extrapolated eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Raw eigenvalues on the grids `h`, `h/2`, `h/4`.
    pub raw: Vec<Vec<f64>>,
    /// Eigenvectors on the finest grid, `h·Σ v² = 1`, interior nodes.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Interior node positions of the finest grid.
    pub x: Vec<f64>,
    pub h: f64,
}

impl EigenSolution {
    /// Largest `|⟨v_i, v_j⟩ − δ_ij|` under the grid inner product.
    pub fn gram_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.eigenvectors.iter().enumerate() {
            for (j, b) in self.eigenvectors.iter().enumerate() {
                let dot: f64 = self.h * a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    fn schrodinger(potential: &dyn Potential, grid: &Grid1D) -> (Self, Vec<f64>) {
        let n = grid.len();
        let xs: Vec<f64> = (1..n - 1).map(|i| grid.x(i)).collect();
        let inv_h2 = 1.0 / (grid.h * grid.h);
        let diag = xs.iter().map(|&x| 2.0 * inv_h2 - potential.value(x)).collect();
        (Self { diag, off: -inv_h2 }, xs)
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm sequence).
    fn count_below(&self, lambda: f64) -> usize {
        let e2 = self.off * self.off;
        let mut q = 1.0;
        let mut count = 0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - lambda } else { d - lambda - e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + lambda.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let spread = 2.0 * self.off.abs();
        let mut lo = self.diag.iter().fold(f64::INFINITY, |a, &d| a.min(d)) - spread;
        let mut hi = self.diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d)) + spread;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for a converged eigenvalue by inverse iteration.
    fn eigenvector(&self, lambda: f64, h: f64) -> Vec<f64> {
        let n = self.diag.len();
        let shift = lambda + 1e-10 * lambda.abs().max(1.0);
        let diag: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        let off = vec![self.off; n];
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 0.37).sin()).collect();
        for _ in 0..4 {
            solve_tridiagonal(&off, &diag, &off, &mut v);
            let norm = (h * v.iter().map(|a| a * a).sum::<f64>()).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        // sign convention: positive mass on the right half
        let right: f64 = v[n / 2..].iter().sum();
        if right < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        v
    }
}

/// Number of eigenvalues of `−∂ₓ² − u` on the grid below zero.
pub fn negative_eigenvalue_count(potential: &dyn Potential, grid: &Grid1D) -> usize {
    Tridiagonal::schrodinger(potential, grid).0.count_below(0.0)
}

/// Lowest `count` eigenvalues of `−∂ₓ² − u`, Richardson-extrapolated from the
/// grids `h`, `h/2`, `h/4`; the two extrapolations must agree to `1e−3`.
pub fn bound_spectrum(potential: &dyn Potential, grid: &Grid1D, count: usize) -> Result<EigenSolution> {
    if count == 0 {
        return Err(Error::Domain("bound_spectrum needs count >= 1".into()));
    }
    let grids = [*grid, grid.refined(2), grid.refined(4)];
    let mut raw = Vec::with_capacity(3);
    let mut finest = None;
    for g in &grids {
        let (t, xs) = Tridiagonal::schrodinger(potential, g);
        if t.diag.len() < count {
            return Err(Error::Domain("grid too coarse for the requested count".into()));
        }
        raw.push((0..count).map(|k| t.eigenvalue(k)).collect::<Vec<_>>());
        finest = Some((t, xs, g.h));
    }
    let extrapolate =
        |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(c, f)| (4.0 * f - c) / 3.0).collect() };
    let first = extrapolate(&raw[0], &raw[1]);
    let second = extrapolate(&raw[1], &raw[2]);
    for (k, (a, b)) in first.iter().zip(&second).enumerate() {
        if (a - b).abs() > 1e-3 * b.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Convergence(format!("eigenvalue {k}: refinements disagree ({a} vs {b})")));
        }
    }
    let (t, xs, h) = finest.expect("three grids");
    let eigenvectors = raw[2].iter().map(|&l| t.eigenvector(l, h)).collect();
    Ok(EigenSolution { eigenvalues: second, raw, eigenvectors, x: xs, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressing::{DressingChain, PotentialField, ZeroPotential};
    use crate::special::free_kernel;
    use crate::transmutation::HeatKernel;
    use approx::assert_relative_eq;

    fn moments(grid: &Grid1D, f: &[f64]) -> (f64, f64, f64) {
        let xs = grid.xs();
        let m0: f64 = grid.h * f.iter().sum::<f64>();
        let m1: f64 = grid.h * xs.iter().zip(f).map(|(x, v)| x * v).sum::<f64>();
        let m2: f64 = grid.h * xs.iter().zip(f).map(|(x, v)| x * x * v).sum::<f64>();
        (m0, m1 / m0, m2 / m0 - (m1 / m0).powi(2))
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(-1.0, 1.0, 0.3, 0.01).is_err());
        assert!(Grid1D::new(1.0, -1.0, 0.1, 0.01).is_err());
        assert!(Grid1D::new(-1.0, 1.0, 0.0, 0.01).is_err());
        let g = Grid1D::new(-1.0, 1.0, 0.25, 0.01).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.index_of(0.0), 4);
    }

    #[test]
    fn gaussian_spreads_by_two_tau() {
        let grid = Grid1D::new(-15.0, 15.0, 0.01, 0.001).unwrap();
        let init: Vec<f64> = regularized_delta(&grid, 0.0, 0.1);
        let out = evolve(&ZeroPotential, &init, 0.5, &grid).unwrap();
        let (m0, mean, var) = moments(&grid, &out);
        assert!((m0 - 1.0).abs() < 1e-6);
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.01).abs() < 1e-4, "variance {var}");
    }

    #[test]
    fn regularized_delta_matches_free_kernel() {
        let grid = Grid1D::standard();
        let init = regularized_delta(&grid, 0.0, 2.0 * grid.h);
        let out = evolve(&ZeroPotential, &init, 1.0, &grid).unwrap();
        let v = out[grid.index_of(0.0)];
        assert!((v - 0.5 / std::f64::consts::PI.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn second_order_convergence_against_free_kernel() {
        // σ² = 0.05 Gaussian evolved to τ = 0.25: exact is G0(τ + σ²/2)
        let err = |grid: Grid1D| {
            let init: Vec<f64> = grid.xs().iter().map(|&x| free_kernel(0.025, x)).collect();
            let out = evolve(&ZeroPotential, &init, 0.25, &grid).unwrap();
            grid.xs().iter().zip(&out).map(|(&x, v)| (v - free_kernel(0.275, x)).abs()).fold(0.0, f64::max)
        };
        let coarse = Grid1D::new(-10.0, 10.0, 0.04, 0.004).unwrap();
        let e1 = err(coarse);
        let e2 = err(coarse.refined(2));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn evolution_preserves_symmetry() {
        let field = PotentialField::new(DressingChain::kink(1.0).unwrap());
        let grid = Grid1D::new(-20.0, 20.0, 0.02, 0.002).unwrap();
        let init = regularized_delta(&grid, 0.0, 0.1);
        let out = evolve(&field, &init, 0.5, &grid).unwrap();
        let n = out.len();
        let asym = (0..n).map(|i| (out[i] - out[n - 1 - i]).abs()).fold(0.0, f64::max);
        assert!(asym < 1e-10, "asymmetry {asym:e}");
    }

    #[test]
    fn stability_error_on_growth() {
        struct Huge;
        impl Potential for Huge {
            fn value(&self, _x: f64) -> f64 {
                -1.0
            }
        }
        // a potential can only lower the bound; fake an inconsistent initial state
        let grid = Grid1D::new(-1.0, 1.0, 0.1, 0.01).unwrap();
        let init = vec![0.0; grid.len()];
        let out = evolve(&Huge, &init, 0.1, &grid);
        // zero data: bound is zero and the solution stays zero
        assert!(out.is_ok());
        assert!(evolve(&Huge, &init, -1.0, &grid).is_err());
    }

    #[test]
    fn free_kernel_residual_is_tiny() {
        let samples = [(0.1, 0.0, 0.0), (0.5, 1.0, -0.5), (1.0, 2.0, 1.0)];
        let r = kernel_residual(&HeatKernel::Free, &ZeroPotential, &samples).unwrap();
        assert!(r < 1e-8, "residual {r:e}");
        assert!(kernel_residual(&HeatKernel::Free, &ZeroPotential, &[(0.01, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let grid = Grid1D::new(-30.0, 30.0, 0.02, 0.001).unwrap();
        let one = PotentialField::new(DressingChain::from_wavenumbers(&[1.0]).unwrap());
        let s1 = bound_spectrum(&one, &grid, 1).unwrap();
        assert_relative_eq!(s1.eigenvalues[0], -1.0, epsilon = 1e-4);

        let kink = PotentialField::new(DressingChain::kink(1.0).unwrap());
        let s2 = bound_spectrum(&kink, &grid, 2).unwrap();
        assert_relative_eq!(s2.eigenvalues[0], -2.0, epsilon = 1e-4);
        assert_relative_eq!(s2.eigenvalues[1], -0.5, epsilon = 1e-4);
        assert_eq!(negative_eigenvalue_count(&kink, &grid), 2);
        assert_eq!(negative_eigenvalue_count(&ZeroPotential, &grid), 0);
        assert!(s2.gram_residual() < 1e-10, "gram {:e}", s2.gram_residual());

        // ground state even and sign-definite, first excited odd
        let v0 = &s2.eigenvectors[0];
        let v1 = &s2.eigenvectors[1];
        let n = v0.len();
        let tiny = 1e-12;
        assert!(v0.iter().all(|&v| v > -tiny));
        for i in 0..n {
            assert!((v0[i] - v0[n - 1 - i]).abs() < 1e-8);
            assert!((v1[i] + v1[n - 1 - i]).abs() < 1e-8);
        }
    }
}
