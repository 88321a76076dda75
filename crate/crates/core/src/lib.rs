//! Spectral Lyapunov–Schmidt solver for time-periodic solutions of the resonant
//! nonlinear Klein–Gordon equation `−ω²∂ₜₜu + (Δ − 1)u = u^p` on the three-sphere.
//!
//! Modules, bottom-up:
//! - [`basis`]: spatial eigenbases (zonal and Hopf plane-wave symmetry classes), quadrature
//!   rules and exact product integrals.
//! - [`field`]: truncated space–time fields, sector projectors and the linear operators.
//! - [`diophantine`]: admissible frequencies and small-divisor margins.
//! - [`ls_solver`]: the range equations (high kernel and non-resonant part).
//! - [`mountain_pass`]: the reduced variational problem on the low kernel.
//! - [`verify`]: independent verification suites.

pub mod basis;
pub mod diophantine;
pub mod field;
mod linalg;
pub mod ls_solver;
pub mod mountain_pass;
pub mod verify;
