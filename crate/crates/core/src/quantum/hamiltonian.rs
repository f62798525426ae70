use nalgebra::DMatrix;

use super::{spin, ModelParams, MAX_DENSE_SITES, MAX_SITES};
use crate::error::{guard, Error, Result};

/// Diagonal of `H` in the computational basis.
///
/// Entry `k` is `-1/2 Σ_ij J_ij s_i s_j - Σ_i h_i s_i`. The `i = j` terms are
/// kept, so the vector carries the constant `-1/2 Σ_i J_ii`.
pub fn diagonal_energies(params: &ModelParams) -> Result<Vec<f64>> {
    let n = params.n();
    guard("n", n, MAX_SITES)?;
    let h = params.fields()?;
    let j = params.couplings();
    let self_energy: f64 = (0..n).map(|i| j.get(i, i)).sum();
    let upper: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, j.get(a, b)))
        .filter(|&(_, _, v)| v != 0.0)
        .collect();
    let energies = (0..1usize << n)
        .map(|k| {
            let pair: f64 = upper.iter().map(|&(a, b, v)| v * spin(k, a) * spin(k, b)).sum();
            let field: f64 = h.iter().enumerate().map(|(i, hi)| hi * spin(k, i)).sum();
            -0.5 * (self_energy + 2.0 * pair) - field
        })
        .collect();
    Ok(energies)
}

/// Matrix-free `H` with its diagonal cached.
#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    n: usize,
    d: f64,
    diagonal: Vec<f64>,
}

impl HamiltonianOperator {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(HamiltonianOperator {
            n: params.n(),
            d: params.d(),
            diagonal: diagonal_energies(params)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `out = H state`. Both slices must have length `2^n`.
    pub fn apply_into(&self, state: &[f64], out: &mut [f64]) {
        debug_assert_eq!(state.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        if self.d == 0.0 {
            for ((o, &e), &v) in out.iter_mut().zip(&self.diagonal).zip(state) {
                *o = e * v;
            }
            return;
        }
        for (k, o) in out.iter_mut().enumerate() {
            let flips: f64 = (0..self.n).map(|i| state[k ^ (1 << i)]).sum();
            *o = self.diagonal[k] * state[k] - self.d * flips;
        }
    }

    pub fn apply(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.dim() {
            return Err(Error::invalid(format!(
                "state has length {}, expected {}",
                state.len(),
                self.dim()
            )));
        }
        let mut out = vec![0.0; state.len()];
        self.apply_into(state, &mut out);
        Ok(out)
    }
}

/// `H state` without forming the matrix; `O(n 2^n)` time.
pub fn apply_hamiltonian(params: &ModelParams, state: &[f64]) -> Result<Vec<f64>> {
    if state.len() != params.dim() {
        return Err(Error::invalid(format!(
            "state has length {}, expected {}",
            state.len(),
            params.dim()
        )));
    }
    HamiltonianOperator::new(params)?.apply(state)
}

/// Explicit `2^n × 2^n` matrix, for `n <= 14`.
pub fn dense_hamiltonian(params: &ModelParams) -> Result<DMatrix<f64>> {
    let n = params.n();
    guard("n (dense)", n, MAX_DENSE_SITES)?;
    let diagonal = diagonal_energies(params)?;
    let dim = diagonal.len();
    let mut h = DMatrix::zeros(dim, dim);
    for (k, &e) in diagonal.iter().enumerate() {
        h[(k, k)] = e;
        for i in 0..n {
            h[(k, k ^ (1 << i))] = -params.d();
        }
    }
    Ok(h)
}
