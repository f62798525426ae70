//! Stochastic Lanczos quadrature for `log Tr e^{-βH}`.
//!
//! Each probe is a Rademacher vector `z` (entries ±1, so `|z|^2 = 2^n`).
//! Lanczos started from `z / |z|` gives a tridiagonal `T` with eigenpairs
//! `(θ_j, u_j)`, and `z^T e^{-βH} z ≈ 2^n Σ_j u_j(0)^2 e^{-β θ_j}`. The probe
//! average is an unbiased estimate of the trace. Probe `l` draws its signs
//! from seed `derive_seed(seed, l)`, so results are reproducible and probes
//! are independent of each other.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::RngCore;
use serde::Serialize;

use super::{HamiltonianOperator, ModelParams, MAX_SITES};
use crate::error::{guard, Error, Result};
use crate::numerics::logsumexp;
use crate::rng;

/// Result of [`slq_free_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlqEstimate {
    /// Estimated free energy per site.
    pub free_energy: f64,
    /// Probe-sample standard error of `free_energy`.
    pub stderr: f64,
    /// Estimated `log Tr e^{-βH}`.
    pub log_partition: f64,
    pub probes: usize,
    /// Smallest Krylov dimension reached by any probe. Less than the
    /// requested step count only after an invariant-subspace breakdown, in
    /// which case the quadrature for that probe is exact.
    pub min_krylov_steps: usize,
    /// Number of probes whose Lanczos run broke down early.
    pub breakdowns: usize,
}

/// Free energy per site by stochastic Lanczos quadrature.
pub fn slq_free_energy(
    params: &ModelParams,
    beta: f64,
    probes: usize,
    krylov_steps: usize,
    seed: u64,
) -> Result<SlqEstimate> {
    let n = params.n();
    guard("n", n, MAX_SITES)?;
    if probes < 8 {
        return Err(Error::invalid(format!("SLQ needs at least 8 probes, got {probes}")));
    }
    if krylov_steps == 0 {
        return Err(Error::invalid("krylov_steps must be positive"));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(format!("beta must be finite and > 0, got {beta}")));
    }
    let op = HamiltonianOperator::new(params)?;
    let dim = op.dim();
    let log_dim = (dim as f64).ln();

    let mut log_quad = Vec::with_capacity(probes);
    let mut min_steps = usize::MAX;
    let mut breakdowns = 0;
    for probe in 0..probes {
        let z = rademacher(dim, rng::derive_seed(seed, probe as u64));
        let (alpha, beta_off) = lanczos(&op, z, krylov_steps);
        let steps = alpha.len();
        if steps < krylov_steps.min(dim) {
            breakdowns += 1;
        }
        min_steps = min_steps.min(steps);
        let t = DMatrix::from_fn(steps, steps, |r, c| {
            if r == c {
                alpha[r]
            } else if r == c + 1 {
                beta_off[c]
            } else if c == r + 1 {
                beta_off[r]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::try_new(t, f64::EPSILON, 10_000 * steps)
            .ok_or_else(|| Error::numerical("tridiagonal eigensolve did not converge"))?;
        let terms: Vec<f64> = (0..steps)
            .filter_map(|j| {
                let u0 = eig.eigenvectors[(0, j)];
                (u0 != 0.0).then(|| 2.0 * u0.abs().ln() - beta * eig.eigenvalues[j])
            })
            .collect();
        log_quad.push(log_dim + logsumexp(&terms));
    }

    let anchor = log_quad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !anchor.is_finite() {
        return Err(Error::numerical("SLQ produced a non-finite quadrature"));
    }
    let ratios: Vec<f64> = log_quad.iter().map(|l| (l - anchor).exp()).collect();
    let count = probes as f64;
    let mean = ratios.iter().sum::<f64>() / count;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let log_partition = anchor + mean.ln();
    let stderr_log = (var / count).sqrt() / mean;
    let scale = beta * n as f64;

    Ok(SlqEstimate {
        free_energy: -log_partition / scale,
        stderr: stderr_log / scale,
        log_partition,
        probes,
        min_krylov_steps: min_steps,
        breakdowns,
    })
}

fn rademacher(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, 0);
    let mut word = 0u64;
    (0..dim)
        .map(|k| {
            if k % 64 == 0 {
                word = rng.next_u64();
            }
            if (word >> (k % 64)) & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Lanczos with full reorthogonalization. Returns the diagonal and
/// off-diagonal of the tridiagonal matrix; stops early on breakdown.
fn lanczos(op: &HamiltonianOperator, start: Vec<f64>, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let dim = op.dim();
    let steps = steps.min(dim);
    let norm = dot(&start, &start).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![start.into_iter().map(|x| x / norm).collect()];
    let mut alpha = Vec::with_capacity(steps);
    let mut offdiag = Vec::with_capacity(steps);
    let mut w = vec![0.0; dim];
    let mut scale = 0.0f64;

    for j in 0..steps {
        op.apply_into(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        scale = scale.max(a.abs());
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        if j + 1 == steps {
            break;
        }
        let b = dot(&w, &w).sqrt();
        scale = scale.max(b);
        if b <= 1e-12 * scale.max(1.0) {
            break;
        }
        offdiag.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    (alpha, offdiag)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::bernoulli_patterns;
    use crate::quantum::{diagonal_energies, free_energy, spectrum, FieldMode};

    fn instance(n: usize, d: f64) -> ModelParams {
        let xi = bernoulli_patterns(n, 2, 31).unwrap();
        ModelParams::hopfield(&xi, FieldMode::Uniform(0.1), d, 1.0).unwrap()
    }

    #[test]
    fn classical_model_is_exact_within_error_bars() {
        let params = instance(8, 0.0);
        let diag = diagonal_energies(&params).unwrap();
        let exact = -logsumexp(&diag.iter().map(|e| -e).collect::<Vec<_>>()) / 8.0;
        let est = slq_free_energy(&params, 1.0, 16, 40, 3).unwrap();
        assert!((est.free_energy - exact).abs() <= 3.0 * est.stderr + 1e-12, "{est:?} vs {exact}");
    }

    #[test]
    fn agrees_with_dense_spectrum() {
        let params = instance(8, 0.5);
        let exact = free_energy(&spectrum(&params, false).unwrap(), 1.0, 8).unwrap();
        let est = slq_free_energy(&params, 1.0, 32, 40, 11).unwrap();
        assert!((est.free_energy - exact).abs() <= 3.0 * est.stderr, "{est:?} vs {exact}");
        assert!(((est.free_energy - exact) / exact).abs() < 2e-2);
        assert!(est.breakdowns == 0 && est.min_krylov_steps == 40);
    }

    #[test]
    fn deterministic_per_seed() {
        let params = instance(6, 0.7);
        let a = slq_free_energy(&params, 2.0, 8, 20, 5).unwrap();
        let b = slq_free_energy(&params, 2.0, 8, 20, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, slq_free_energy(&params, 2.0, 8, 20, 6).unwrap());
    }

    #[test]
    fn small_space_breaks_down_exactly() {
        // dim 4 < 60 steps: Krylov space is exhausted and the quadrature is exact.
        let params = instance(2, 0.3);
        let exact = free_energy(&spectrum(&params, false).unwrap(), 1.0, 2).unwrap();
        let est = slq_free_energy(&params, 1.0, 8, 60, 1).unwrap();
        assert!(est.min_krylov_steps <= 4);
        assert!((est.free_energy - exact).abs() < 1e-12 + 3.0 * est.stderr);
    }

    #[test]
    fn rejects_too_few_probes() {
        assert!(slq_free_energy(&instance(3, 0.1), 1.0, 4, 10, 0).is_err());
    }
}
