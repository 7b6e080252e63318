//! Numerical laboratory for the BCS gap equation.
//!
//! The gap function `u(T, x)` solves a nonlinear integral equation on the
//! energy window `[ε, ħω_D]`. This crate discretizes the integral operator
//! with a Nyström rule, finds its positive fixed point, brackets the
//! transition temperature between the two constant-coupling transition
//! temperatures τ₁ and τ₂, and evaluates the thermodynamic potential to
//! exhibit the second-order phase transition: entropy continuous at `T_c`,
//! specific heat jumping by a strictly positive ΔC_V.
//!
//! Module map:
//! * [`model`] — physical parameters, interaction kernels, energy grids,
//!   densities of states.
//! * [`quadrature`] — adaptive Gauss–Kronrod integration and the
//!   semi-infinite Fermi tail integral.
//! * [`simplified`] — the constant-coupling (scalar) gap equation: Δ₁, Δ₂,
//!   τ₁, τ₂ and the closed-form zero-temperature gap.
//! * [`solver`] — the Nyström fixed-point solver for the full kernel,
//!   temperature sweeps and the critical temperature.
//! * [`thermo`] — Ω_N, Φ, Ψ, entropy and specific heat with one-sided
//!   limits at `T_c`.
//! * [`critical`] — the near-`T_c` limit functions v and w, the
//!   consistency functionals F and G, and the specific-heat jump.
//! * [`config`] — run configuration (TOML) and CSV table parsing.
//! * [`report`] — deterministic CSV/JSON artifact writers.
//! * [`verify`] — the self-contained invariant suite run by the CLI and CI.

pub mod config;
pub mod critical;
pub mod error;
pub mod interp;
pub mod model;
pub mod quadrature;
pub mod report;
pub mod roots;
pub mod simplified;
pub mod solver;
pub mod thermo;
pub mod verify;

pub use error::{Error, Result};
