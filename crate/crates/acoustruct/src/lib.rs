//! Structure-preserving simulation of a coupled acoustic-wave / thermoelastic
//! Berger beam system on a 2-D chamber with a flexible bottom wall.
//!
//! The chamber `Ω = [0,1]²` carries a semilinear wave equation with nonlinear
//! interior damping; the flat wall `Γ₀` (the bottom edge) carries a Berger
//! beam coupled to a heat equation, with no mechanical damping of its own.
//! The two components exchange energy through a boundary trace / flux pair
//! whose discrete adjointness is exact, so the semi-discrete system inherits
//! an exact energy balance. Time stepping uses an implicit midpoint rule with
//! discrete-gradient (mean-value) potentials, which turns the energy identity
//! of the continuous model into a machine-checkable per-step residual.
//!
//! On top of the integrator sit an equilibrium enumerator for the stationary
//! set and a diagnostics layer measuring convergence to equilibria, uniform
//! attractor bounds, trajectory-difference functionals, stabilizability fits,
//! box-counting dimensions and parameter semi-continuity trends.
//!
//! All numerical kernels are generic over the scalar type via [`num::Scalar`];
//! the crate-level alias [`Real`] (`f64`) is what the batch runner and CLI
//! instantiate.

pub mod config;
pub mod diagnostics;
pub mod equilibria;
pub mod grid;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod num;
pub mod operators;
pub mod poly;
pub mod runner;

/// Default scalar type used by the runner, the CLI and the test suites.
pub type Real = f64;

pub use grid::{BeamField, BoundaryField, GridSpec, WaveField};
pub use model::{EnergyLedger, ModelParams, NonlinearitySpec};
pub use operators::DiscreteOperators;
