//! The transverse-field Hopfield Hamiltonian on `n` qubits
//!
//! ```text
//! H = -1/2 Σ_ij J_ij σ^z_i σ^z_j - Σ_i h_i σ^z_i - d Σ_i σ^x_i
//! ```
//!
//! Basis state `k` in `0..2^n` assigns spin `s_i(k) = +1` when bit `i` of
//! `k` is clear and `-1` when it is set; site 0 is the least significant bit.
//! The Hamiltonian is real symmetric, so every state vector is real.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::disorder::{hebbian_couplings, CouplingMatrix, PatternMatrix};
use crate::error::{guard, Error, Result};

mod hamiltonian;
mod observables;
mod perturbation;
mod slq;
mod spectrum;
mod symmetry;

pub use hamiltonian::{apply_hamiltonian, dense_hamiltonian, diagonal_energies, HamiltonianOperator};
pub use observables::{gibbs_observables, GibbsObservables};
pub use perturbation::{bogolyubov_bounds, curvature_duhamel, perturbed_free_energy, BogolyubovBounds, Operator};
pub use slq::{slq_free_energy, SlqEstimate};
pub use spectrum::{free_energy, log_partition, spectrum, Spectrum};
pub use symmetry::{reduced_spectrum, ReducedSpectrum};

/// Largest site count any path accepts (matrix-free vectors of length 2^20).
pub const MAX_SITES: usize = 20;
/// Largest site count for an explicit `2^n × 2^n` matrix.
pub const MAX_DENSE_SITES: usize = 14;

/// Longitudinal field specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldMode {
    /// `h_i = h` on every site.
    Uniform(f64),
    /// `h_i = h · xi[pattern][i]`, resolved against the bound patterns.
    /// `pattern` is zero-based.
    PatternAligned { h: f64, pattern: usize },
    /// One value per site.
    Explicit(Vec<f64>),
}

impl Default for FieldMode {
    fn default() -> Self {
        FieldMode::Uniform(0.0)
    }
}

/// One Hamiltonian instance together with its inverse temperature.
#[derive(Debug, Clone)]
pub struct ModelParams {
    couplings: CouplingMatrix,
    field: FieldMode,
    d: f64,
    beta: f64,
    patterns: Option<Arc<PatternMatrix>>,
}

impl ModelParams {
    pub fn new(couplings: CouplingMatrix, field: FieldMode, d: f64, beta: f64) -> Result<Self> {
        let n = couplings.n();
        guard("n", n, MAX_SITES)?;
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("beta must be finite and > 0, got {beta}")));
        }
        if !d.is_finite() {
            return Err(Error::invalid(format!("d must be finite, got {d}")));
        }
        match &field {
            FieldMode::Uniform(h) | FieldMode::PatternAligned { h, .. } if !h.is_finite() => {
                return Err(Error::invalid("field strength must be finite"));
            }
            FieldMode::Explicit(values) => {
                if values.len() != n {
                    return Err(Error::invalid(format!(
                        "explicit field has {} values for {n} sites",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("explicit field values must be finite"));
                }
            }
            _ => {}
        }
        Ok(ModelParams {
            couplings,
            field,
            d,
            beta,
            patterns: None,
        })
    }

    /// Hebbian instance built from `xi`, with the patterns bound for
    /// [`FieldMode::PatternAligned`] and overlap observables.
    pub fn hopfield(xi: &PatternMatrix, field: FieldMode, d: f64, beta: f64) -> Result<Self> {
        Self::new(hebbian_couplings(xi), field, d, beta)?.with_patterns(xi.clone())
    }

    /// Bind a pattern matrix over the same sites.
    pub fn with_patterns(mut self, xi: PatternMatrix) -> Result<Self> {
        if xi.n() != self.n() {
            return Err(Error::invalid(format!(
                "patterns cover {} sites, couplings {}",
                xi.n(),
                self.n()
            )));
        }
        self.patterns = Some(Arc::new(xi));
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("beta must be finite and > 0, got {beta}")));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_d(mut self, d: f64) -> Result<Self> {
        if !d.is_finite() {
            return Err(Error::invalid(format!("d must be finite, got {d}")));
        }
        self.d = d;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.couplings.n()
    }

    pub fn dim(&self) -> usize {
        1usize << self.n()
    }

    pub fn couplings(&self) -> &CouplingMatrix {
        &self.couplings
    }

    pub fn field(&self) -> &FieldMode {
        &self.field
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn patterns(&self) -> Option<&PatternMatrix> {
        self.patterns.as_deref()
    }

    /// Per-site longitudinal fields `h_i`.
    pub fn fields(&self) -> Result<Vec<f64>> {
        let n = self.n();
        match &self.field {
            FieldMode::Uniform(h) => Ok(vec![*h; n]),
            FieldMode::Explicit(values) => Ok(values.clone()),
            FieldMode::PatternAligned { h, pattern } => {
                let xi = self.patterns().ok_or_else(|| {
                    Error::invalid("PatternAligned field needs bound patterns")
                })?;
                if *pattern >= xi.p() {
                    return Err(Error::invalid(format!(
                        "PatternAligned refers to pattern {pattern} but only {} exist",
                        xi.p()
                    )));
                }
                Ok(xi.row(*pattern).iter().map(|x| h * x).collect())
            }
        }
    }
}

/// Spin value `s_i(k)` of site `i` in basis state `k`.
#[inline]
pub fn spin(k: usize, i: usize) -> f64 {
    if (k >> i) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}
