//! Pseudospectral laboratory for randomized initial data and the defocusing
//! power-type wave equation `-u_tt + Δu = |u|^{ρ-1} u` on a large torus.
//!
//! The crate is organized bottom-up: [`grid`] holds the lattice and
//! transforms, [`partition`] the unit-scale frequency decomposition,
//! [`random`] the coefficient families, [`norms`] every norm and derived
//! exponent, [`propagator`] the linear and nonlinear primitives, [`solver`]
//! the constructive solvers and [`experiments`] the Monte Carlo audits.

pub mod data;
mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod norms;
pub mod partition;
pub mod propagator;
pub mod random;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{SpectralField, TorusGrid, Trajectory, WaveState};
