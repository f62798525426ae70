//! Quenched patterns, Hebbian couplings and the pattern-overlap matrix.
//!
//! Patterns are stored row-major, one row per pattern. Bernoulli patterns are
//! generated bit by bit: pattern `mu` reads 64-bit words from ChaCha8 stream
//! `mu` of the seed, and site `i` takes bit `i % 64` of word `i / 64`
//! (set bit means `-1`, clear bit means `+1`). The layout is independent of
//! the platform and of the order in which patterns are generated.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Entry distribution of a [`PatternMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Distribution {
    /// Independent ±1 entries with probability 1/2 each.
    BernoulliPm1,
    /// Entries drawn by a caller-supplied [`Sampler`].
    Custom,
}

/// Per-entry sampler for [`Distribution::Custom`].
///
/// The theory needs zero mean, unit variance and a bounded `4+ε` moment;
/// none of this is checked here.
pub type Sampler = dyn Fn(&mut ChaCha8Rng) -> f64 + Sync;

/// `p` patterns over `n` sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMatrix {
    p: usize,
    n: usize,
    entries: Vec<f64>,
    seed: u64,
    distribution: Distribution,
}

impl PatternMatrix {
    /// Build from explicit rows. All rows must have the same nonzero length.
    ///
    /// The distribution tag is `BernoulliPm1` when every entry is ±1 and
    /// `Custom` otherwise; the recorded seed is 0.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map(Vec::len).ok_or_else(|| {
            Error::invalid("from_rows needs at least one pattern; use empty() for p = 0")
        })?;
        if n == 0 {
            return Err(Error::invalid("patterns must cover at least one site"));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "pattern {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("pattern entries must be finite"));
        }
        let distribution = if entries.iter().all(|&x| x == 1.0 || x == -1.0) {
            Distribution::BernoulliPm1
        } else {
            Distribution::Custom
        };
        Ok(PatternMatrix {
            p: rows.len(),
            n,
            entries,
            seed: 0,
            distribution,
        })
    }

    /// The `0 × n` pattern matrix.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        Ok(PatternMatrix {
            p: 0,
            n,
            entries: Vec::new(),
            seed: 0,
            distribution: Distribution::BernoulliPm1,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    /// Entry `xi[mu][i]`.
    #[inline]
    pub fn get(&self, mu: usize, i: usize) -> f64 {
        self.entries[mu * self.n + i]
    }

    /// Pattern `mu` as a slice of length `n`.
    pub fn row(&self, mu: usize) -> &[f64] {
        &self.entries[mu * self.n..(mu + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks_exact(self.n.max(1)).take(self.p)
    }

    /// Column of site `i`: the `p` pattern values it carries.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|mu| self.get(mu, i)).collect()
    }

    /// Write one pattern per row. ±1 matrices are written as integers.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        let integral = self.distribution == Distribution::BernoulliPm1;
        for row in self.rows() {
            if integral {
                w.write_record(row.iter().map(|&x| if x > 0.0 { "1" } else { "-1" }))?;
            } else {
                w.write_record(row.iter().map(|x| x.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv). The seed is not part of the
    /// CSV layout and is set to `seed`.
    pub fn read_csv<R: Read>(reader: R, seed: u64) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|_| {
                        Error::invalid(format!("pattern row {line}: cannot parse {field:?}"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let mut xi = PatternMatrix::from_rows(&rows)?;
        xi.seed = seed;
        Ok(xi)
    }
}

/// Draw `p` i.i.d. patterns over `n` sites.
///
/// `sampler` is required for [`Distribution::Custom`] and ignored otherwise.
pub fn sample_patterns(
    n: usize,
    p: usize,
    seed: u64,
    distribution: Distribution,
    sampler: Option<&Sampler>,
) -> Result<PatternMatrix> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let mut entries = Vec::with_capacity(p * n);
    match distribution {
        Distribution::BernoulliPm1 => {
            for mu in 0..p {
                let mut rng = rng::stream(seed, mu as u64);
                let mut word = 0u64;
                for i in 0..n {
                    if i % 64 == 0 {
                        word = rng.next_u64();
                    }
                    entries.push(if (word >> (i % 64)) & 1 == 1 { -1.0 } else { 1.0 });
                }
            }
        }
        Distribution::Custom => {
            let sampler = sampler
                .ok_or_else(|| Error::invalid("Custom distribution requires a sampler"))?;
            for mu in 0..p {
                let mut rng = rng::stream(seed, mu as u64);
                entries.extend((0..n).map(|_| sampler(&mut rng)));
            }
        }
    }
    Ok(PatternMatrix {
        p,
        n,
        entries,
        seed,
        distribution,
    })
}

/// Shorthand for Bernoulli ±1 patterns.
pub fn bernoulli_patterns(n: usize, p: usize, seed: u64) -> Result<PatternMatrix> {
    sample_patterns(n, p, seed, Distribution::BernoulliPm1, None)
}

/// Symmetric `n × n` interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    j: DMatrix<f64>,
}

impl CouplingMatrix {
    /// Wrap an explicit matrix. It must be square, finite and exactly symmetric.
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        if !j.is_square() || j.nrows() == 0 {
            return Err(Error::invalid(format!(
                "coupling matrix must be square and nonempty, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        if j.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("coupling matrix has non-finite entries"));
        }
        let n = j.nrows();
        for a in 0..n {
            for b in a + 1..n {
                if j[(a, b)] != j[(b, a)] {
                    return Err(Error::invalid(format!(
                        "coupling matrix is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(CouplingMatrix { j })
    }

    /// No interactions.
    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.j.nrows()
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.j[(a, b)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }
}

/// `J[i][k] = (1/n) Σ_mu xi[mu][i] xi[mu][k]`, diagonal included.
///
/// The diagonal is `p/n` for ±1 patterns, which adds the constant
/// `-p/2` to every diagonal energy (`-p/(2n)` per site).
pub fn hebbian_couplings(xi: &PatternMatrix) -> CouplingMatrix {
    let n = xi.n();
    let nf = n as f64;
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut sum = 0.0;
            for mu in 0..xi.p() {
                sum += xi.get(mu, a) * xi.get(mu, b);
            }
            let v = sum / nf;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    CouplingMatrix { j }
}

/// Off-diagonal pattern overlaps `A[mu][nu] = (1 - δ) (xi^mu · xi^nu) / n`.
pub fn overlap_matrix_a(xi: &PatternMatrix) -> Result<DMatrix<f64>> {
    let p = xi.p();
    if p == 0 {
        return Err(Error::invalid("overlap matrix needs at least one pattern"));
    }
    let nf = xi.n() as f64;
    let mut a = DMatrix::zeros(p, p);
    for mu in 0..p {
        for nu in mu + 1..p {
            let dot: f64 = xi.row(mu).iter().zip(xi.row(nu)).map(|(x, y)| x * y).sum();
            let v = dot / nf;
            a[(mu, nu)] = v;
            a[(nu, mu)] = v;
        }
    }
    Ok(a)
}

/// Largest absolute eigenvalue of a real symmetric matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "spectral norm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    for a in 0..n {
        for b in a + 1..n {
            if (m[(a, b)] - m[(b, a)]).abs() > 1e-12 {
                return Err(Error::invalid(format!("matrix is not symmetric at ({a}, {b})")));
            }
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    let eig = m.clone().symmetric_eigenvalues();
    Ok(eig.iter().fold(0.0f64, |acc, e| acc.max(e.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: &[&[f64]]) -> PatternMatrix {
        PatternMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn empty_pattern_set() {
        let xi = bernoulli_patterns(4, 0, 7).unwrap();
        assert_eq!((xi.p(), xi.n()), (0, 4));
        assert_eq!(xi.seed(), 7);
        assert_eq!(xi.rows().count(), 0);
    }

    #[test]
    fn rejects_zero_sites_and_missing_sampler() {
        assert!(bernoulli_patterns(0, 1, 1).is_err());
        assert!(sample_patterns(3, 1, 1, Distribution::Custom, None).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = bernoulli_patterns(8, 2, 42).unwrap();
        let b = bernoulli_patterns(8, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, bernoulli_patterns(8, 2, 43).unwrap());
        assert!(a.rows().flatten().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn pattern_streams_do_not_depend_on_p() {
        let small = bernoulli_patterns(100, 1, 5).unwrap();
        let large = bernoulli_patterns(100, 3, 5).unwrap();
        assert_eq!(small.row(0), large.row(0));
    }

    #[test]
    fn custom_sampler_is_used() {
        let gauss: &Sampler = &|rng: &mut ChaCha8Rng| {
            use rand::Rng;
            rng.random_range(-1.0..1.0)
        };
        let xi = sample_patterns(6, 2, 3, Distribution::Custom, Some(gauss)).unwrap();
        assert_eq!(xi.distribution(), Distribution::Custom);
        assert!(xi.rows().flatten().all(|x| x.abs() < 1.0));
        let again = sample_patterns(6, 2, 3, Distribution::Custom, Some(gauss)).unwrap();
        assert_eq!(xi, again);
    }

    #[test]
    fn hebbian_two_site_examples() {
        let j = hebbian_couplings(&pm(&[&[1.0, 1.0]]));
        assert_eq!(j.matrix().as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        let j = hebbian_couplings(&pm(&[&[1.0, -1.0]]));
        assert_eq!(j.matrix().as_slice(), &[0.5, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn hebbian_diagonal_is_p_over_n() {
        let xi = bernoulli_patterns(7, 3, 11).unwrap();
        let j = hebbian_couplings(&xi);
        for i in 0..7 {
            assert_eq!(j.get(i, i), 3.0 / 7.0);
        }
    }

    #[test]
    fn overlap_matrix_examples() {
        let a = overlap_matrix_a(&pm(&[&[1.0, -1.0, 1.0]])).unwrap();
        assert_eq!(a.as_slice(), &[0.0]);
        let a = overlap_matrix_a(&pm(&[&[1.0, 1.0, -1.0, -1.0], &[1.0, -1.0, 1.0, -1.0]])).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
        assert!(overlap_matrix_a(&PatternMatrix::empty(3).unwrap()).is_err());
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&DMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-14);
        let j = hebbian_couplings(&pm(&[&[1.0, 1.0]]));
        assert!((spectral_norm(j.matrix()).unwrap() - 1.0).abs() < 1e-14);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, 2.0]));
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_norm_rejects_bad_input() {
        assert!(spectral_norm(&DMatrix::zeros(2, 3)).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(spectral_norm(&m).is_err());
    }

    #[test]
    fn coupling_matrix_rejects_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 1.0]);
        assert!(CouplingMatrix::new(m).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let xi = bernoulli_patterns(9, 3, 1).unwrap();
        let mut buf = Vec::new();
        xi.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.split(',').all(|f| f == "1" || f == "-1")));
        let back = PatternMatrix::read_csv(buf.as_slice(), 1).unwrap();
        assert_eq!(back, xi);
    }

    #[test]
    fn read_csv_rejects_ragged_rows() {
        let err = PatternMatrix::read_csv("1,-1\n1\n".as_bytes(), 0);
        assert!(err.is_err());
    }
}
