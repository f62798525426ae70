//! Free-energy response to a linear perturbation `H(t) = H0 + t H1`.
//!
//! With `f(t) = -(1/(β n)) log Tr e^{-β H(t)}`:
//!
//! * the curvature `-f''(t)` has the spectral (Duhamel) representation
//!   `(1/(n Z)) Σ_{j,k} |H1°_jk|^2 (e^{-βE_j} - e^{-βE_k}) / (E_k - E_j)`, where
//!   `H1° = H1 - <H1>` is written in the eigenbasis of `H(t)`. Every term is
//!   nonnegative, so `f` is concave in `t`;
//! * concavity gives the two-sided bound
//!   `<H1>_{H(1)} / n <= f(1) - f(0) <= <H1>_{H(0)} / n`.

use nalgebra::DMatrix;

use super::{dense_hamiltonian, free_energy, ModelParams, Spectrum};
use crate::error::{guard, Error, Result};
use crate::numerics::boltzmann_weights;

const BOGOLYUBOV_MAX_SITES: usize = 12;
const DUHAMEL_MAX_SITES: usize = 10;
/// Energy gap below which a pair is treated as degenerate.
const DEGENERACY_GAP: f64 = 1e-9;

/// A real symmetric operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    n: usize,
    matrix: DMatrix<f64>,
}

impl Operator {
    /// Wrap a `2^n × 2^n` matrix; rejects non-symmetric input.
    pub fn new(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let dim = 1usize << n;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::invalid(format!(
                "operator on {n} sites must be {dim}x{dim}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.amax().max(1.0);
        for a in 0..dim {
            for b in a + 1..dim {
                if (matrix[(a, b)] - matrix[(b, a)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!(
                        "operator is not Hermitian at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Operator { n, matrix })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self> {
        Ok(Operator {
            n: params.n(),
            matrix: dense_hamiltonian(params)?,
        })
    }

    /// `c · 1`.
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let dim = 1usize << n;
        Operator {
            n,
            matrix: DMatrix::identity(dim, dim) * c,
        }
    }

    /// `-Σ_i σ^x_i`.
    pub fn transverse(n: usize) -> Self {
        let dim = 1usize << n;
        let mut matrix = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            for i in 0..n {
                matrix[(k, k ^ (1 << i))] = -1.0;
            }
        }
        Operator { n, matrix }
    }

    /// Diagonal operator in the computational basis.
    pub fn diagonal(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != 1usize << n {
            return Err(Error::invalid("diagonal length must be 2^n"));
        }
        Ok(Operator {
            n,
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn combined(&self, other: &Operator, t: f64) -> DMatrix<f64> {
        &self.matrix + &other.matrix * t
    }
}

/// Bogolyubov bounds for the step `H0 -> H0 + H1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogolyubovBounds {
    /// `<H1>_{H0+H1} / n`.
    pub lower: f64,
    /// `<H1>_{H0} / n`.
    pub upper: f64,
    /// `f(β, 1) - f(β, 0)`.
    pub delta_f: f64,
}

impl BogolyubovBounds {
    /// Whether `lower <= delta_f <= upper` holds up to `slack`.
    pub fn holds(&self, slack: f64) -> bool {
        self.lower <= self.delta_f + slack && self.delta_f <= self.upper + slack
    }

    /// Largest amount by which either inequality is broken (0 when both hold).
    pub fn violation(&self) -> f64 {
        (self.lower - self.delta_f).max(self.delta_f - self.upper).max(0.0)
    }
}

fn check_pair(h0: &Operator, h1: &Operator, beta: f64, max_sites: usize) -> Result<()> {
    if h0.n != h1.n {
        return Err(Error::invalid(format!(
            "operators act on {} and {} sites",
            h0.n, h1.n
        )));
    }
    guard("n", h0.n, max_sites)?;
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(format!("beta must be finite and > 0, got {beta}")));
    }
    Ok(())
}

/// `Tr(ρ A)` for the Gibbs state of a spectrum with eigenvectors.
fn thermal_expectation(spectrum: &Spectrum, weights: &[f64], a: &DMatrix<f64>) -> f64 {
    let v = spectrum.eigenvectors().expect("eigenvectors requested");
    let av = a * v;
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(k, &w)| w * v.column(k).dot(&av.column(k)))
        .sum()
}

/// `f_N(β, t)` for `H0 + t H1`.
pub fn perturbed_free_energy(h0: &Operator, h1: &Operator, beta: f64, t: f64) -> Result<f64> {
    check_pair(h0, h1, beta, BOGOLYUBOV_MAX_SITES)?;
    let s = Spectrum::from_matrix(h0.n, h0.combined(h1, t), false)?;
    free_energy(&s, beta, h0.n)
}

/// Both sides of the Bogolyubov inequality and the exact free-energy change.
pub fn bogolyubov_bounds(h0: &Operator, h1: &Operator, beta: f64) -> Result<BogolyubovBounds> {
    check_pair(h0, h1, beta, BOGOLYUBOV_MAX_SITES)?;
    let n = h0.n;
    let s0 = Spectrum::from_matrix(n, h0.matrix.clone(), true)?;
    let s1 = Spectrum::from_matrix(n, h0.combined(h1, 1.0), true)?;
    let w0 = boltzmann_weights(s0.eigenvalues(), beta);
    let w1 = boltzmann_weights(s1.eigenvalues(), beta);
    let nf = n as f64;
    Ok(BogolyubovBounds {
        lower: thermal_expectation(&s1, &w1, &h1.matrix) / nf,
        upper: thermal_expectation(&s0, &w0, &h1.matrix) / nf,
        delta_f: free_energy(&s1, beta, n)? - free_energy(&s0, beta, n)?,
    })
}

/// `-∂²f/∂t²` at `t` from the spectral sum over eigenpairs of `H0 + t H1`.
///
/// Pairs closer than `1e-9` in energy use the degenerate limit `β e^{-β E}`.
pub fn curvature_duhamel(h0: &Operator, h1: &Operator, beta: f64, t: f64) -> Result<f64> {
    check_pair(h0, h1, beta, DUHAMEL_MAX_SITES)?;
    let n = h0.n;
    let s = Spectrum::from_matrix(n, h0.combined(h1, t), true)?;
    let v = s.eigenvectors().expect("eigenvectors requested");
    let energies = s.eigenvalues();
    let e_min = energies[0];
    let dim = energies.len();

    // Matrix elements <e_j | H1 | e_k>, centered on the diagonal.
    let mut m = v.transpose() * (&h1.matrix * v);
    let weights = boltzmann_weights(energies, beta);
    let mean: f64 = (0..dim).map(|k| weights[k] * m[(k, k)]).sum();
    for k in 0..dim {
        m[(k, k)] -= mean;
    }

    // Shifted Boltzmann factors; the common e^{-β E_min} cancels against Z.
    let x: Vec<f64> = energies.iter().map(|e| beta * (e - e_min)).collect();
    let z: f64 = x.iter().map(|xi| (-xi).exp()).sum();
    let mut total = 0.0;
    for k in 0..dim {
        for j in 0..dim {
            let elem = m[(j, k)];
            if elem == 0.0 {
                continue;
            }
            let gap = (energies[k] - energies[j]).abs();
            let kernel = if gap < DEGENERACY_GAP {
                beta * (-x[k]).exp()
            } else {
                // (e^{-a} - e^{-b}) / (E_b - E_a), written around the smaller exponent.
                let lo = x[j].min(x[k]);
                let dx = (x[j] - x[k]).abs();
                beta * (-lo).exp() * (-(-dx).exp_m1()) / dx
            };
            total += elem * elem * kernel;
        }
    }
    let curvature = total / (z * n as f64);
    if curvature < -1e-12 || !curvature.is_finite() {
        return Err(Error::numerical(format!("negative Duhamel curvature {curvature}")));
    }
    Ok(curvature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::bernoulli_patterns;
    use crate::quantum::FieldMode;

    fn random_diagonal(n: usize, seed: u64) -> Vec<f64> {
        (0..1usize << n)
            .map(|k| (crate::rng::splitmix64(seed ^ (k as u64 * 7919)) as f64 / u64::MAX as f64) * 4.0 - 2.0)
            .collect()
    }

    #[test]
    fn scalar_shift_is_exact() {
        let xi = bernoulli_patterns(3, 1, 2).unwrap();
        let h0 = Operator::from_params(&ModelParams::hopfield(&xi, FieldMode::Uniform(0.1), 0.5, 1.0).unwrap()).unwrap();
        let c = 0.75;
        let h1 = Operator::scaled_identity(3, c);
        let b = bogolyubov_bounds(&h0, &h1, 1.7).unwrap();
        for v in [b.lower, b.upper, b.delta_f] {
            assert!((v - c / 3.0).abs() < 1e-12);
        }
        assert!(curvature_duhamel(&h0, &h1, 1.7, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn doubling_a_diagonal_hamiltonian() {
        for seed in 0..50 {
            let n = 1 + (seed as usize % 4);
            let h0 = Operator::diagonal(n, &random_diagonal(n, seed)).unwrap();
            let b = bogolyubov_bounds(&h0, &h0.clone(), 1.0).unwrap();
            assert!(b.holds(1e-10), "{b:?}");
        }
    }

    #[test]
    fn transverse_perturbation_of_hopfield() {
        let xi = bernoulli_patterns(3, 2, 17).unwrap();
        let h0 = Operator::from_params(&ModelParams::hopfield(&xi, FieldMode::Uniform(0.2), 0.0, 1.0).unwrap()).unwrap();
        let h1 = Operator::transverse(3);
        let b = bogolyubov_bounds(&h0, &h1, 2.0).unwrap();
        assert!(b.holds(1e-10), "{b:?}");
        assert!(b.lower < b.upper);
    }

    #[test]
    fn commuting_case_is_classical_variance() {
        let n = 3;
        let d0 = random_diagonal(n, 5);
        let d1 = random_diagonal(n, 6);
        let h0 = Operator::diagonal(n, &d0).unwrap();
        let h1 = Operator::diagonal(n, &d1).unwrap();
        let (beta, t) = (1.3, 0.4);
        let energies: Vec<f64> = d0.iter().zip(&d1).map(|(a, b)| a + t * b).collect();
        let w = boltzmann_weights(&energies, beta);
        let mean: f64 = w.iter().zip(&d1).map(|(w, h)| w * h).sum();
        let var: f64 = w.iter().zip(&d1).map(|(w, h)| w * (h - mean).powi(2)).sum();
        let want = beta * var / n as f64;
        let got = curvature_duhamel(&h0, &h1, beta, t).unwrap();
        assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} vs {want}");
    }

    #[test]
    fn duhamel_matches_finite_difference() {
        let xi = bernoulli_patterns(4, 2, 3).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.1), 0.3, 1.0).unwrap();
        let h0 = Operator::from_params(&params).unwrap();
        let h1 = Operator::transverse(4);
        let (beta, t, step) = (1.5, 0.2, 1e-3);
        let f = |t| perturbed_free_energy(&h0, &h1, beta, t).unwrap();
        let fd = -(f(t + step) - 2.0 * f(t) + f(t - step)) / (step * step);
        let duhamel = curvature_duhamel(&h0, &h1, beta, t).unwrap();
        assert!(((duhamel - fd) / duhamel).abs() < 1e-5, "{duhamel} vs {fd}");
    }

    #[test]
    fn degenerate_levels_use_the_limit() {
        // H0 = 0 leaves every level degenerate at t = 0; the curvature is β Var(H1)/n.
        let n = 2;
        let h0 = Operator::scaled_identity(n, 0.0);
        let h1 = Operator::transverse(n);
        let beta = 0.8;
        let got = curvature_duhamel(&h0, &h1, beta, 0.0).unwrap();
        // Tr (Σσ^x)^2 / 4 = n, mean zero.
        assert!((got - beta * n as f64 / n as f64).abs() < 1e-12, "{got}");
    }

    #[test]
    fn rejects_non_hermitian_and_mismatched_input() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(Operator::new(1, m).is_err());
        assert!(Operator::new(2, DMatrix::zeros(2, 2)).is_err());
        let a = Operator::scaled_identity(1, 1.0);
        let b = Operator::scaled_identity(2, 1.0);
        assert!(bogolyubov_bounds(&a, &b, 1.0).is_err());
    }
}
