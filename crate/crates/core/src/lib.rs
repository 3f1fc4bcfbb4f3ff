//! Numerical core of the Dean–Kawasaki ergodicity laboratory.
//!
//! Simulates the generalized Dean–Kawasaki equation
//!
//! ```text
//! ∂ₜρ = ΔΦ(ρ) − ∂ₓ(σ(ρ) ∘ ξ̇ + ν(ρ))     on (a, b),   Φ(ρ) = ρ_b on the boundary
//! ```
//!
//! in its Itô form with a finite-volume Euler–Maruyama scheme, and provides
//! the measurement tools used to check weighted-L¹ contraction and the decay
//! rates of coupled solutions.
//!
//! The crate is `no_std` (with `alloc`); file formats, configuration and
//! parallel orchestration live in the `dklab` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

mod error;
mod math;

pub mod correction;
pub mod ergodicity;
pub mod expr;
pub mod grid;
pub mod noise;
pub mod nonlinear;
pub mod quadrature;
pub mod solver;
pub mod weight;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use grid::{BoundaryData, DensityState, Grid};
pub use noise::{IncrementBlock, NoiseField, NoiseSpec, PathRng};
pub use nonlinear::{Coefficient, CutoffParams, NonlinearTriple, Regime};
pub use solver::{Dynamics, PairTrajectory, SolverParams, Trajectory};
pub use weight::WeightFunction;
