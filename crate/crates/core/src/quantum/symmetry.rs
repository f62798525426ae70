//! Exact spectrum through site-permutation symmetry.
//!
//! Sites with identical coupling rows and identical fields can be permuted
//! without changing `H`. Grouping them into classes `g` of size `m_g`, the
//! Hamiltonian only depends on the collective spins `S_g`:
//!
//! ```text
//! H = -1/2 Σ_{g,g'} K_{gg'} (2 S^z_g)(2 S^z_g') - Σ_g h_g (2 S^z_g) - d Σ_g (2 S^x_g)
//! ```
//!
//! with `K_{gg'}` the common coupling value between the classes (the
//! diagonal `J_ii` is the in-class value). The Hilbert space splits into
//! blocks labelled by one total spin `S_g` per class; a block has dimension
//! `Π_g (2 S_g + 1)` and appears with multiplicity `Π_g mult(m_g, S_g)`, where
//! `mult(m, S) = C(m, m/2 - S) - C(m, m/2 - S - 1)`. For Hebbian couplings
//! with `p` patterns there are at most `2^p` classes, so the blocks stay
//! small while `2^n` grows.

use nalgebra::DMatrix;

use super::{ModelParams, Spectrum, MAX_DENSE_SITES, MAX_SITES};
use crate::error::{guard, Error, Result};
use crate::numerics::logsumexp;

/// Distinct energy levels with natural-log degeneracies.
#[derive(Debug, Clone)]
pub struct ReducedSpectrum {
    n: usize,
    class_sizes: Vec<usize>,
    /// `(energy, ln degeneracy)` pairs, sorted by energy.
    levels: Vec<(f64, f64)>,
}

impl ReducedSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sizes of the site classes, in order of first appearance.
    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    pub fn levels(&self) -> &[(f64, f64)] {
        &self.levels
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0].0
    }

    /// Σ of degeneracies; equals `2^n`.
    pub fn total_dimension(&self) -> f64 {
        self.levels.iter().map(|&(_, g)| g.exp()).sum()
    }

    pub fn log_partition(&self, beta: f64) -> f64 {
        let terms: Vec<f64> = self.levels.iter().map(|&(e, g)| g - beta * e).collect();
        logsumexp(&terms)
    }

    pub fn free_energy(&self, beta: f64) -> Result<f64> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("beta must be finite and > 0, got {beta}")));
        }
        Ok(-self.log_partition(beta) / (beta * self.n as f64))
    }

    /// Expand degeneracies into a plain eigenvalue list. Only sensible for
    /// small `n`.
    pub fn expand(&self) -> Result<Spectrum> {
        guard("n (expand)", self.n, MAX_DENSE_SITES)?;
        let mut values = Vec::with_capacity(1 << self.n);
        for &(e, g) in &self.levels {
            values.extend(std::iter::repeat_n(e, g.exp().round() as usize));
        }
        Spectrum::from_eigenvalues(self.n, values)
    }
}

struct SiteClass {
    size: usize,
    representative: usize,
    field: f64,
}

fn site_classes(params: &ModelParams, fields: &[f64]) -> Vec<SiteClass> {
    let n = params.n();
    let j = params.couplings();
    let same = |a: usize, b: usize| fields[a] == fields[b] && (0..n).all(|k| j.get(a, k) == j.get(b, k));
    let mut classes: Vec<SiteClass> = Vec::new();
    for (i, &field) in fields.iter().enumerate() {
        match classes.iter_mut().find(|c| same(c.representative, i)) {
            Some(c) => c.size += 1,
            None => classes.push(SiteClass {
                size: 1,
                representative: i,
                field,
            }),
        }
    }
    classes
}

fn ln_binomial(m: usize, k: usize) -> f64 {
    (1..=k).map(|i| ((m - k + i) as f64).ln() - (i as f64).ln()).sum()
}

/// `ln mult(m, S)` with `two_s = 2S`.
fn ln_multiplicity(m: usize, two_s: usize) -> f64 {
    let k = (m - two_s) / 2;
    if k == 0 {
        return 0.0;
    }
    // C(m,k) - C(m,k-1) = C(m,k) (1 - k/(m-k+1)) = C(m,k) (m-2k+1)/(m-k+1).
    ln_binomial(m, k) + ((m - 2 * k + 1) as f64).ln() - ((m - k + 1) as f64).ln()
}

/// Exact spectrum of `params` as (energy, degeneracy) levels.
///
/// Fails with a resource guard when a symmetry block would exceed
/// `2^14` states, which happens when few sites share a class.
pub fn reduced_spectrum(params: &ModelParams) -> Result<ReducedSpectrum> {
    let n = params.n();
    guard("n", n, MAX_SITES)?;
    let fields = params.fields()?;
    let classes = site_classes(params, &fields);
    let couplings = params.couplings();
    let coupling = |a: &SiteClass, b: &SiteClass| couplings.get(a.representative, b.representative);
    let kmat: Vec<Vec<f64>> = classes
        .iter()
        .map(|a| classes.iter().map(|b| coupling(a, b)).collect())
        .collect();

    // Every combination of per-class total spins, as 2S values.
    let choices: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| (0..=c.size / 2).map(|k| c.size - 2 * k).collect())
        .collect();
    let mut combo = vec![0usize; classes.len()];
    let mut levels = Vec::new();
    loop {
        let two_s: Vec<usize> = combo.iter().zip(&choices).map(|(&i, ch)| ch[i]).collect();
        let dim: usize = two_s.iter().map(|s| s + 1).product();
        if dim > 1 << MAX_DENSE_SITES {
            return Err(Error::ResourceGuard {
                what: "symmetry block dimension",
                value: dim,
                limit: 1 << MAX_DENSE_SITES,
            });
        }
        let ln_mult: f64 = classes
            .iter()
            .zip(&two_s)
            .map(|(c, &s)| ln_multiplicity(c.size, s))
            .sum();
        let block = block_matrix(&two_s, &kmat, &classes, params.d());
        let energies = if dim == 1 {
            vec![block[(0, 0)]]
        } else {
            Spectrum::from_matrix(n, block, false)?.eigenvalues().to_vec()
        };
        levels.extend(energies.into_iter().map(|e| (e, ln_mult)));

        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == combo.len() {
                levels.sort_by(|a: &(f64, f64), b| a.0.total_cmp(&b.0));
                return Ok(ReducedSpectrum {
                    n,
                    class_sizes: classes.iter().map(|c| c.size).collect(),
                    levels,
                });
            }
            combo[pos] += 1;
            if combo[pos] < choices[pos].len() {
                break;
            }
            combo[pos] = 0;
            pos += 1;
        }
    }
}

/// Block of `H` for fixed per-class spins. Basis: mixed radix over
/// `M_g = S_g, S_g - 1, ..., -S_g`, class 0 fastest.
fn block_matrix(two_s: &[usize], kmat: &[Vec<f64>], classes: &[SiteClass], d: f64) -> DMatrix<f64> {
    let radix: Vec<usize> = two_s.iter().map(|s| s + 1).collect();
    let dim: usize = radix.iter().product();
    let mut strides = vec![1usize; radix.len()];
    for g in 1..radix.len() {
        strides[g] = strides[g - 1] * radix[g - 1];
    }
    let mut h = DMatrix::zeros(dim, dim);
    let mut digits = vec![0usize; radix.len()];
    for idx in 0..dim {
        let mut rest = idx;
        for g in 0..radix.len() {
            digits[g] = rest % radix[g];
            rest /= radix[g];
        }
        // 2M_g = 2S_g - 2 digit, the eigenvalue of Σ_{i in g} σ^z_i.
        let z: Vec<f64> = digits
            .iter()
            .zip(two_s)
            .map(|(&dg, &s)| s as f64 - 2.0 * dg as f64)
            .collect();
        let mut diag = 0.0;
        for a in 0..z.len() {
            for b in 0..z.len() {
                diag -= 0.5 * kmat[a][b] * z[a] * z[b];
            }
            diag -= classes[a].field * z[a];
        }
        h[(idx, idx)] = diag;
        if d != 0.0 {
            // Σσ^x = S^+ + S^-: <M+1|S^+|M> = sqrt(S(S+1) - M(M+1)).
            for g in 0..radix.len() {
                if digits[g] + 1 < radix[g] {
                    let s = two_s[g] as f64 / 2.0;
                    let m = z[g] / 2.0 - 1.0;
                    let elem = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
                    let other = idx + strides[g];
                    h[(idx, other)] = -d * elem;
                    h[(other, idx)] = -d * elem;
                }
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{bernoulli_patterns, CouplingMatrix};
    use crate::quantum::{free_energy, spectrum, FieldMode};

    #[test]
    fn multiplicities_count_all_states() {
        for m in 1..=12usize {
            let total: f64 = (0..=m / 2)
                .map(|k| m - 2 * k)
                .map(|s| ln_multiplicity(m, s).exp() * (s + 1) as f64)
                .sum();
            assert!((total - 2f64.powi(m as i32)).abs() < 1e-9 * total);
        }
        assert!((ln_multiplicity(4, 0).exp() - 2.0).abs() < 1e-12);
        assert!((ln_multiplicity(4, 2).exp() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_spectrum() {
        for seed in 0..6u64 {
            let n = 4 + seed as usize % 4;
            let p = 1 + seed as usize % 3;
            let xi = bernoulli_patterns(n, p, seed).unwrap();
            for field in [
                FieldMode::Uniform(0.15),
                FieldMode::PatternAligned { h: 0.3, pattern: 0 },
            ] {
                let params = ModelParams::hopfield(&xi, field, 0.45, 1.0).unwrap();
                let reduced = reduced_spectrum(&params).unwrap();
                let dense = spectrum(&params, false).unwrap();
                let expanded = reduced.expand().unwrap();
                assert_eq!(expanded.dim(), dense.dim());
                for (a, b) in expanded.eigenvalues().iter().zip(dense.eigenvalues()) {
                    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
                }
                for beta in [0.3, 1.5, 40.0] {
                    let fr = reduced.free_energy(beta).unwrap();
                    let fd = free_energy(&dense, beta, n).unwrap();
                    assert!((fr - fd).abs() < 1e-11, "{fr} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn generic_couplings_fall_back_to_singletons() {
        let j = DMatrix::from_row_slice(3, 3, &[0.1, 0.2, -0.3, 0.2, 0.0, 0.5, -0.3, 0.5, 0.4]);
        let params = ModelParams::new(
            CouplingMatrix::new(j).unwrap(),
            FieldMode::Explicit(vec![0.1, -0.2, 0.3]),
            0.7,
            1.0,
        )
        .unwrap();
        let reduced = reduced_spectrum(&params).unwrap();
        assert_eq!(reduced.class_sizes(), &[1, 1, 1]);
        let dense = spectrum(&params, false).unwrap();
        assert!((reduced.free_energy(2.0).unwrap() - free_energy(&dense, 2.0, 3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn large_symmetric_instance_is_cheap() {
        let xi = bernoulli_patterns(20, 2, 1).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.1), 0.5, 1.0).unwrap();
        let reduced = reduced_spectrum(&params).unwrap();
        assert!((reduced.total_dimension() / 2f64.powi(20) - 1.0).abs() < 1e-9);
        assert!(reduced.class_sizes().len() <= 4);
    }
}
