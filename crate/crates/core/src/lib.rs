//! Exact, stochastic and mean-field free energies of the transverse-field
//! Hopfield model, plus disorder-ensemble experiments built on them.
//!
//! * [`disorder`]: random patterns, Hebbian couplings, overlap matrix, norms.
//! * [`quantum`]: the `2^n` Hamiltonian (matrix-free and dense), spectra,
//!   free energies, Gibbs observables, perturbation bounds and SLQ.
//! * [`meanfield`]: the Curie-Weiss functional, its minimizer, fixed points
//!   and the critical curve.
//! * [`experiments`]: seeded ensemble drivers and their CSV records.

pub mod disorder;
pub mod error;
pub mod experiments;
pub mod meanfield;
pub mod numerics;
pub mod quantum;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
