//! Simulation and measurement toolkit for the vacant set left by Brownian
//! motion on the d-dimensional unit torus (d >= 3).
//!
//! The crate simulates Brownian paths and their Wiener sausages, extracts the
//! extremal geometry of the complement (components, capacities, volumes,
//! inradii, principal Dirichlet eigenvalues, cover times), and provides the
//! exact scaling functions and rate functions that the measurements are
//! compared against.

pub mod animals;
pub mod brownian;
pub mod capacity;
pub mod rng;
pub mod scaling;
pub mod spectra;
pub mod torus;

pub use scaling::{Dim, ExtReal};
