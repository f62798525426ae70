//! Randomized property suites: Bogolyubov bounds, Duhamel curvature and
//! gauge invariance of the single-pattern model.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::disorder::{bernoulli_patterns, PatternMatrix};
use crate::error::{guard, Error, Result};
use crate::quantum::{
    bogolyubov_bounds, curvature_duhamel, free_energy, perturbed_free_energy, spectrum, FieldMode, ModelParams,
    Operator,
};
use crate::rng;

/// Largest `n` drawn by the Bogolyubov and Duhamel suites.
pub const SUITE_MAX_SITES: usize = 4;
/// Slack on the Bogolyubov inequalities.
pub const BOGOLYUBOV_SLACK: f64 = 1e-10;
/// Finite-difference step for the curvature check.
pub const FD_STEP: f64 = 1e-3;
/// Relative tolerance between Duhamel and finite-difference curvature.
pub const FD_REL_TOL: f64 = 1e-5;
/// Lowest admissible curvature.
pub const CURVATURE_FLOOR: f64 = -1e-12;
/// Tolerance on gauge-related free energies.
pub const GAUGE_TOL: f64 = 1e-12;
/// Largest `n` for the gauge suite (dense path).
pub const GAUGE_MAX_SITES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest violation (Bogolyubov), relative error (Duhamel) or absolute
    /// free-energy difference (gauge) over all trials.
    pub worst: f64,
}

impl SuiteReport {
    fn tally(suite: &str, outcomes: &[(bool, f64)]) -> Self {
        let passed = outcomes.iter().filter(|o| o.0).count();
        SuiteReport {
            suite: suite.to_string(),
            trials: outcomes.len(),
            passed,
            failed: outcomes.len() - passed,
            worst: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Result<Operator> {
    let dim = 1 << n;
    let mut m = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in r..dim {
            let v = scale * rng.random_range(-1.0..1.0);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
    Operator::new(n, m)
}

fn random_hopfield(rng: &mut ChaCha8Rng, n: usize) -> Result<Operator> {
    let p = rng.random_range(0..=2);
    let xi = bernoulli_patterns(n, p, rng.random())?;
    let h = rng.random_range(-1.0..1.0);
    let d = rng.random_range(0.0..1.5);
    Operator::from_params(&ModelParams::hopfield(&xi, FieldMode::Uniform(h), d, 1.0)?)
}

/// A random pair `(H0, H1)` mixing Hopfield, generic, diagonal and
/// transverse operators, with `H1` of norm about `h1_scale`.
fn random_pair(rng: &mut ChaCha8Rng, h1_scale: f64) -> Result<(Operator, Operator)> {
    let n = rng.random_range(1..=SUITE_MAX_SITES);
    let dim = (1usize << n) as f64;
    let h0 = if rng.random_bool(0.5) {
        random_hopfield(rng, n)?
    } else {
        random_symmetric(rng, n, 2.0 / dim.sqrt())?
    };
    let h1 = match rng.random_range(0..4) {
        0 => random_hopfield(rng, n)?,
        1 => {
            let values: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
            Operator::diagonal(n, &values)?
        }
        2 => {
            let c = rng.random_range(-1.0..1.0) / n as f64;
            Operator::new(n, Operator::transverse(n).matrix() * c)?
        }
        _ => random_symmetric(rng, n, 1.0 / dim.sqrt())?,
    };
    let norm = h1.matrix().norm() / dim.sqrt();
    let h1 = if norm > 0.0 {
        Operator::new(n, h1.matrix() * (h1_scale / norm))?
    } else {
        h1
    };
    Ok((h0, h1))
}

/// `lower ≤ Δf ≤ upper` on random operator pairs, β ∈ [0.1, 5].
pub fn bogolyubov_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let outcomes = (0..trials)
        .map(|t| {
            let mut rng = rng::stream(rng::derive_seed(seed, t as u64), 0);
            let scale = rng.random_range(0.1..2.0);
            let (h0, h1) = random_pair(&mut rng, scale)?;
            let beta = rng.random_range(0.1..5.0);
            let b = bogolyubov_bounds(&h0, &h1, beta)?;
            Ok((b.holds(BOGOLYUBOV_SLACK), b.violation()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::tally("bogolyubov", &outcomes))
}

/// Duhamel curvature against a central second difference of the perturbed
/// free energy, β ∈ [0.2, 1.5], t ∈ [-0.5, 0.5].
pub fn duhamel_suite(trials: usize, seed: u64) -> Result<SuiteReport> {
    let outcomes = (0..trials)
        .map(|t| {
            let mut rng = rng::stream(rng::derive_seed(seed, t as u64), 1);
            let (h0, h1) = random_pair(&mut rng, 1.0)?;
            let beta = rng.random_range(0.2..1.5);
            let t0 = rng.random_range(-0.5..0.5);
            let curvature = curvature_duhamel(&h0, &h1, beta, t0)?;
            let f = |s: f64| perturbed_free_energy(&h0, &h1, beta, s);
            let fd = -(f(t0 + FD_STEP)? - 2.0 * f(t0)? + f(t0 - FD_STEP)?) / (FD_STEP * FD_STEP);
            let rel = (curvature - fd).abs() / curvature.abs();
            Ok((curvature >= CURVATURE_FLOOR && rel <= FD_REL_TOL, rel))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::tally("duhamel", &outcomes))
}

/// Single random patterns on `n` sites with an aligned field give the same
/// free energy as the all-(+1) pattern.
pub fn gauge_suite(trials: usize, n: usize, seed: u64) -> Result<SuiteReport> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    guard("n", n, GAUGE_MAX_SITES)?;
    let (beta, d, h) = (1.5, 0.5, 0.2);
    let field = FieldMode::PatternAligned { h, pattern: 0 };
    let f_of = |xi: &PatternMatrix| -> Result<f64> {
        let params = ModelParams::hopfield(xi, field.clone(), d, beta)?;
        free_energy(&spectrum(&params, false)?, beta, n)
    };
    let reference = f_of(&PatternMatrix::from_rows(&[vec![1.0; n]])?)?;
    let outcomes = (0..trials)
        .map(|t| {
            let xi = bernoulli_patterns(n, 1, rng::derive_seed(seed, t as u64))?;
            let diff = (f_of(&xi)? - reference).abs();
            Ok((diff <= GAUGE_TOL, diff))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::tally("gauge", &outcomes))
}
