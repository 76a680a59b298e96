//! Heat kernels for reflectionless (multisoliton) potentials built by
//! Darboux dressing of the free heat equation, and the zeta-regularized
//! one-loop correction of the φ⁴ kink derived from them.
//!
//! The pieces, bottom up:
//!
//! - [`dressing`]: seed solutions, Wronskians, dressed potentials `u[N]`
//!   and dressed functions `ρ[N]`.
//! - [`transmutation`]: the causal initial kernel `ρ0(x, y)`, its free
//!   Gaussian propagation and the dressed heat kernel for any chain.
//! - [`kink`]: the closed-form two-soliton (kink) kernel, its bound states
//!   and the subtracted heat trace.
//! - [`pde`]: Crank–Nicolson and finite-difference eigenvalue oracles.
//! - [`zeta`]: the generalized zeta function and `S_q = −ζ′(0)`.
//! - [`validate`]: the end-to-end check suite run by `darboux-heat validate`.

// `!(x > 0.0)` is used deliberately: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dressing;
pub mod error;
pub mod kink;
pub mod pde;
pub mod quad;
pub mod special;
pub mod transmutation;
pub mod validate;
pub mod zeta;

pub use dressing::{DressingChain, Parity, PotentialField, SeedFunction};
pub use error::{Error, Result};
pub use kink::{BoundState, ClosedFormKernel, Variant};
pub use transmutation::{HeatKernel, Kernel, TriangularKernel};
pub use zeta::{HeatTrace, ZetaResult};
