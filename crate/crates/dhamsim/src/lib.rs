//! Simulation toolkit for Hamiltonian evolutions perturbed by convex dissipation.
//!
//! The crate covers four layers:
//!
//! - [`symplectic`]: finite-dimensional symplectic form, Poisson bracket, and
//!   residual-based membership tests for the dissipative Hamiltonian inclusion.
//! - [`dissipation`]: a catalog of convex dissipation functions with closed-form
//!   evaluation, proximal, and subdifferential oracles, plus the 1-homogeneous
//!   length / distance / variation machinery.
//! - [`integrators`] and [`quasistatic`]: split semi-implicit proximal time
//!   stepping with an energy-balance audit, and incremental minimization for
//!   rate-independent (energetic) evolutions.
//! - [`damage1d`]: a dynamical brittle-damage model on a 1D bar built from an
//!   Ambrosio-Tortorelli energy, with quasistatic and dynamic drivers.
//!
//! The [`cli`] module provides the batch interface (JSON configs, CSV/JSON
//! outputs) used by the `dhamsim` binary.

pub mod cli;
pub mod coulomb;
pub mod damage1d;
pub mod dissipation;
pub mod error;
pub mod integrators;
pub mod quasistatic;
pub mod symplectic;

mod vecmath;

pub use error::{Error, Result};
