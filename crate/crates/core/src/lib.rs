//! Numerical laboratory for radial extremal solutions of `-Δu = λ f(u)` in
//! the unit ball of `R^N`.
//!
//! The pieces, bottom up:
//!
//! * [`radial_core`]: log-radius grids (`t = log r`), profiles and radial
//!   calculus.
//! * [`linear_ode`]: the linearized problem `-Δω = (Ψ - (N-1)/r²) ω`,
//!   `ω(1) = 1`, its power-law and window closed forms, and comparison.
//! * [`potentials`]: the potential families `c(t) = r² Ψ(r)`, including the
//!   multi-stage oscillatory construction and the blend.
//! * [`reconstruction`]: `u = ∫_r^1 ω`, `f = (-Δu) ∘ u⁻¹`, and the audit of
//!   the structural conditions on `f`.
//! * [`branch`]: shooting for the minimal branch and the `λ*` estimate.
//! * [`verification`]: eigenvalue, bound, integral and stability checks.

pub mod branch;
pub mod error;
pub mod format;
pub mod linear_ode;
pub(crate) mod ode;
pub mod potentials;
pub mod radial_core;
pub mod reconstruction;
pub mod verification;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
