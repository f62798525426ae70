use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{dense_hamiltonian, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::logsumexp;

/// Eigenvalues (ascending) and optionally eigenvectors of one Hamiltonian.
#[derive(Debug, Clone)]
pub struct Spectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: Option<DMatrix<f64>>,
}

impl Spectrum {
    /// Diagonalize an explicit real symmetric matrix acting on `n` qubits.
    pub fn from_matrix(n: usize, matrix: DMatrix<f64>, keep_vectors: bool) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() || dim == 0 {
            return Err(Error::invalid("spectrum needs a nonempty square matrix"));
        }
        let trace = matrix.trace();
        let scale = matrix.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);

        let (mut eigenvalues, eigenvectors) = if keep_vectors {
            let eig = SymmetricEigen::try_new(matrix, f64::EPSILON, 10_000 * dim)
                .ok_or_else(|| Error::numerical(format!("eigensolver did not converge (dim {dim})")))?;
            (eig.eigenvalues.as_slice().to_vec(), Some(eig.eigenvectors))
        } else {
            (matrix.symmetric_eigenvalues().as_slice().to_vec(), None)
        };

        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::numerical("eigensolver produced non-finite eigenvalues"));
        }
        let sum: f64 = eigenvalues.iter().sum();
        if (sum - trace).abs() > 1e-9 * scale * dim as f64 {
            return Err(Error::numerical(format!(
                "eigenvalue sum {sum} does not reproduce the trace {trace}"
            )));
        }

        let eigenvectors = match eigenvectors {
            Some(vectors) => {
                let mut order: Vec<usize> = (0..dim).collect();
                order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
                let sorted = DMatrix::from_fn(dim, dim, |r, c| vectors[(r, order[c])]);
                eigenvalues = order.iter().map(|&k| eigenvalues[k]).collect();
                Some(sorted)
            }
            None => {
                eigenvalues.sort_by(f64::total_cmp);
                None
            }
        };

        Ok(Spectrum {
            n,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Build directly from a known eigenvalue list (sorted on entry).
    pub fn from_eigenvalues(n: usize, mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("empty spectrum"));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Spectrum {
            n,
            eigenvalues,
            eigenvectors: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` is the eigenvector of `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> Option<&DMatrix<f64>> {
        self.eigenvectors.as_ref()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Debug dump: `index,eigenvalue` per row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "eigenvalue"])?;
        for (k, e) in self.eigenvalues.iter().enumerate() {
            w.serialize((k, e))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full spectrum of the dense Hamiltonian (`n <= 14`).
pub fn spectrum(params: &ModelParams, keep_vectors: bool) -> Result<Spectrum> {
    Spectrum::from_matrix(params.n(), dense_hamiltonian(params)?, keep_vectors)
}

/// `log Σ_k e^{-β E_k}`, anchored at the ground energy.
pub fn log_partition(spectrum: &Spectrum, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid(format!("beta must be finite and > 0, got {beta}")));
    }
    let scaled: Vec<f64> = spectrum.eigenvalues.iter().map(|e| -beta * e).collect();
    Ok(logsumexp(&scaled))
}

/// Free energy per site `-(1/(β n)) log Σ_k e^{-β E_k}`.
pub fn free_energy(spectrum: &Spectrum, beta: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("site count must be positive"));
    }
    Ok(-log_partition(spectrum, beta)? / (beta * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{bernoulli_patterns, CouplingMatrix, PatternMatrix};
    use crate::numerics::log_2cosh;
    use crate::quantum::{diagonal_energies, FieldMode};

    fn single(h: f64, d: f64) -> ModelParams {
        ModelParams::new(CouplingMatrix::zeros(1).unwrap(), FieldMode::Uniform(h), d, 1.0).unwrap()
    }

    #[test]
    fn two_level_closed_form() {
        for &(h, d) in &[(0.3, 0.4), (1.0, 0.0), (0.0, 1.0), (-2.0, 0.5)] {
            let s = spectrum(&single(h, d), false).unwrap();
            let r = f64::hypot(h, d);
            assert!((s.eigenvalues()[0] + r).abs() < 1e-14);
            assert!((s.eigenvalues()[1] - r).abs() < 1e-14);
            for &beta in &[0.1, 1.0, 7.0] {
                let f = free_energy(&s, beta, 1).unwrap();
                assert!((f + log_2cosh(beta * r) / beta).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn classical_two_site_spectrum() {
        let xi = PatternMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.0), 0.0, 1.0).unwrap();
        let s = spectrum(&params, false).unwrap();
        assert_eq!(s.eigenvalues(), &[-1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn trace_identity() {
        let xi = bernoulli_patterns(6, 2, 5).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.2), 0.8, 1.0).unwrap();
        let s = spectrum(&params, false).unwrap();
        let tr: f64 = diagonal_energies(&params).unwrap().iter().sum();
        let sum: f64 = s.eigenvalues().iter().sum();
        assert!((tr - sum).abs() < 1e-9);
        assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigenpairs_satisfy_residual_and_orthonormality() {
        let xi = bernoulli_patterns(5, 2, 8).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.1), 0.6, 1.0).unwrap();
        let h = dense_hamiltonian(&params).unwrap();
        let s = spectrum(&params, true).unwrap();
        let v = s.eigenvectors().unwrap();
        let e_max = s.eigenvalues().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for k in 0..s.dim() {
            let col = v.column(k);
            let resid = &h * col - col * s.eigenvalues()[k];
            assert!(resid.amax() <= 1e-9 * e_max);
        }
        let gram = v.transpose() * v;
        let err = (gram - DMatrix::identity(32, 32)).amax();
        assert!(err <= 1e-10);
    }

    #[test]
    fn free_spins() {
        let s = Spectrum::from_eigenvalues(3, vec![0.0; 8]).unwrap();
        let f = free_energy(&s, 2.0, 3).unwrap();
        assert!((f + 2f64.ln() / 2.0).abs() < 1e-15);
        assert!(Spectrum::from_eigenvalues(1, vec![]).is_err());
        assert!(free_energy(&s, 0.0, 3).is_err());
    }

    #[test]
    fn survives_very_low_temperature() {
        let s = Spectrum::from_eigenvalues(2, vec![-3.0, -1.0, 0.0, 2.0]).unwrap();
        let f = free_energy(&s, 1.0e4, 2).unwrap();
        assert!(f.is_finite());
        assert!((f + 1.5).abs() < 1e-12);
    }

    #[test]
    fn csv_dump_has_one_row_per_level() {
        let s = Spectrum::from_eigenvalues(1, vec![1.0, -1.0]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,eigenvalue\n0,-1.0\n1,1.0\n");
    }
}
