//! Disorder-ensemble drivers and verification suites.
//!
//! Every ensemble member is keyed by `(seed, n, member)`; members run in
//! parallel on a rayon pool and are merged in member order, so the records
//! do not depend on the thread count.

mod records;
mod verify;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{bernoulli_patterns, hebbian_couplings, overlap_matrix_a, spectral_norm};
use crate::error::{guard, Error, Result};
use crate::meanfield::minimize_f0;
use crate::quantum::{
    free_energy, gibbs_observables, reduced_spectrum, slq_free_energy, spectrum, FieldMode, ModelParams,
    MAX_SITES,
};
use crate::rng::derive_seed;
use crate::stats::{bootstrap_variance_ci, mean, unbiased_variance};

pub use records::{write_csv, EnsembleRow};
pub use verify::{bogolyubov_suite, duhamel_suite, gauge_suite, SuiteReport};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const CI_LEVEL: f64 = 0.95;
pub const MIN_SAMPLES: usize = 50;
/// Largest `n` for ensembles on the dense path.
pub const MAX_ENSEMBLE_DENSE: usize = 12;
/// Largest `n` for ensembles on the SLQ path.
pub const MAX_ENSEMBLE_SLQ: usize = 16;
/// Largest `n` for [`run_retrieval`].
pub const MAX_RETRIEVAL_SITES: usize = 12;
/// Upper bound on the flat trend of `E‖J‖²`.
pub const J_SQ_CEILING: f64 = 25.0;
/// Largest admitted `max/min` ratio of `E‖J‖²` across a grid.
pub const J_FLAT_RATIO: f64 = 1.25;
/// Envelope constant for `E‖A‖² ≤ c·α`.
pub const A_ENVELOPE: f64 = 10.0;

/// How exact free energies of ensemble members are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreeEnergySolver {
    /// Full diagonalization of the `2^n` matrix.
    Dense,
    /// Block diagonalization over site-permutation classes; exact.
    #[default]
    Symmetric,
    /// Stochastic Lanczos quadrature; an estimate.
    Slq { probes: usize, krylov_steps: usize },
}

impl FreeEnergySolver {
    fn max_sites(&self) -> usize {
        match self {
            FreeEnergySolver::Dense => MAX_ENSEMBLE_DENSE,
            FreeEnergySolver::Symmetric => MAX_SITES,
            FreeEnergySolver::Slq { .. } => MAX_ENSEMBLE_SLQ,
        }
    }

    /// Free energy per site of `params` at its own β.
    pub fn free_energy(&self, params: &ModelParams, seed: u64) -> Result<f64> {
        let beta = params.beta();
        match *self {
            FreeEnergySolver::Dense => free_energy(&spectrum(params, false)?, beta, params.n()),
            FreeEnergySolver::Symmetric => reduced_spectrum(params)?.free_energy(beta),
            FreeEnergySolver::Slq { probes, krylov_steps } => {
                Ok(slq_free_energy(params, beta, probes, krylov_steps, seed)?.free_energy)
            }
        }
    }
}

fn check_grid(n_grid: &[usize], limit: usize) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::invalid("n grid is empty"));
    }
    for &n in n_grid {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        guard("n", n, limit)?;
    }
    Ok(())
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
}

/// Seed of ensemble member `member` at size `n`.
pub fn member_seed(seed: u64, n: usize, member: usize) -> u64 {
    derive_seed(seed, ((n as u64) << 32) | member as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfAveragingConfig {
    pub n_grid: Vec<usize>,
    pub p: usize,
    pub beta: f64,
    pub d: f64,
    pub field: FieldMode,
    pub samples: usize,
    pub seed: u64,
    pub solver: FreeEnergySolver,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub samples: usize,
    pub mean_f: f64,
    pub var_f: f64,
    /// Bootstrap percentile interval for `var_f`.
    pub var_ci: (f64, f64),
    pub n_times_var: f64,
    pub seed_base: u64,
}

/// Sample variance of `f_N` over independent pattern draws, per `n`.
pub fn run_self_averaging(cfg: &SelfAveragingConfig) -> Result<Vec<EnsembleSummary>> {
    check_grid(&cfg.n_grid, cfg.solver.max_sites())?;
    if cfg.samples < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "samples must be at least {MIN_SAMPLES}, got {}",
            cfg.samples
        )));
    }
    let pool = pool(cfg.threads)?;
    cfg.n_grid
        .iter()
        .map(|&n| {
            let values: Vec<f64> = pool.install(|| {
                (0..cfg.samples)
                    .into_par_iter()
                    .map(|member| {
                        let seed = member_seed(cfg.seed, n, member);
                        let xi = bernoulli_patterns(n, cfg.p, seed)?;
                        let params = ModelParams::hopfield(&xi, cfg.field.clone(), cfg.d, cfg.beta)?;
                        cfg.solver.free_energy(&params, derive_seed(seed, 1))
                    })
                    .collect::<Result<Vec<f64>>>()
            })?;
            let var_f = unbiased_variance(&values);
            let boot_seed = derive_seed(cfg.seed, (n as u64) << 32 | 0xffff_ffff);
            Ok(EnsembleSummary {
                n,
                p: cfg.p,
                alpha: cfg.p as f64 / n as f64,
                samples: cfg.samples,
                mean_f: mean(&values),
                var_f,
                var_ci: bootstrap_variance_ci(&values, BOOTSTRAP_RESAMPLES, CI_LEVEL, boot_seed),
                n_times_var: n as f64 * var_f,
                seed_base: cfg.seed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub n_grid: Vec<usize>,
    pub beta: f64,
    pub d: f64,
    pub h: f64,
    /// Requested sample count. With one pattern every sample has the same
    /// free energy, so a single draw is evaluated.
    pub samples: usize,
    pub seed: u64,
    pub solver: FreeEnergySolver,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub samples_requested: usize,
    pub samples_used: usize,
    pub gauge_shortcut: bool,
    pub mean_f: f64,
    pub f0_min: f64,
    /// `|mean_f - f0_min|`.
    pub gap: f64,
    /// Per-site energy shift `-p/(2n)` from the diagonal of `J`.
    pub shift: f64,
    /// `|mean_f - shift - f0_min|`.
    pub gap_corrected: f64,
    pub alpha_cuberoot: f64,
}

/// Distance between `E f_N` and `min_m f0(m, h)` for one pattern with an
/// aligned field.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<Vec<ConvergenceRecord>> {
    check_grid(&cfg.n_grid, cfg.solver.max_sites())?;
    if cfg.samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    if !cfg.h.is_finite() {
        return Err(Error::invalid(format!("h must be finite, got {}", cfg.h)));
    }
    // f0(m, h) = f0(-m, -h), so the minimum only depends on |h|.
    let f0_min = minimize_f0(cfg.beta, cfg.d, cfg.h.abs())?.f0_value;
    let p = 1;
    cfg.n_grid
        .iter()
        .map(|&n| {
            let seed = member_seed(cfg.seed, n, 0);
            let xi = bernoulli_patterns(n, p, seed)?;
            let field = FieldMode::PatternAligned { h: cfg.h, pattern: 0 };
            let params = ModelParams::hopfield(&xi, field, cfg.d, cfg.beta)?;
            let mean_f = cfg.solver.free_energy(&params, derive_seed(seed, 1))?;
            let alpha = p as f64 / n as f64;
            let shift = -(p as f64) / (2.0 * n as f64);
            Ok(ConvergenceRecord {
                n,
                p,
                alpha,
                samples_requested: cfg.samples,
                samples_used: 1,
                gauge_shortcut: true,
                mean_f,
                f0_min,
                gap: (mean_f - f0_min).abs(),
                shift,
                gap_corrected: (mean_f - shift - f0_min).abs(),
                alpha_cuberoot: alpha.cbrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub n: usize,
    pub beta: f64,
    pub d: f64,
    pub h: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetrievalRecord {
    pub n: usize,
    pub beta: f64,
    pub d: f64,
    pub h: f64,
    pub seed: u64,
    /// Exact Gibbs `<m^1>`.
    pub overlap: f64,
    /// Mean-field minimizer `m*`.
    pub meanfield_m: f64,
    pub free_energy: f64,
}

/// Exact overlap with the single stored pattern against mean field.
pub fn run_retrieval(cfg: &RetrievalConfig) -> Result<RetrievalRecord> {
    if !(cfg.h.is_finite() && cfg.h > 0.0) {
        return Err(Error::invalid(format!(
            "retrieval needs h > 0 to break the spin-flip symmetry, got {}",
            cfg.h
        )));
    }
    if cfg.n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    guard("n", cfg.n, MAX_RETRIEVAL_SITES)?;
    let xi = bernoulli_patterns(cfg.n, 1, cfg.seed)?;
    let field = FieldMode::PatternAligned { h: cfg.h, pattern: 0 };
    let params = ModelParams::hopfield(&xi, field, cfg.d, cfg.beta)?;
    let spec = spectrum(&params, true)?;
    let obs = gibbs_observables(&params, &spec, None)?;
    let m_star = minimize_f0(cfg.beta, cfg.d, cfg.h)?.m_star;
    Ok(RetrievalRecord {
        n: cfg.n,
        beta: cfg.beta,
        d: cfg.d,
        h: cfg.h,
        seed: cfg.seed,
        overlap: obs.overlaps[0],
        meanfield_m: m_star,
        free_energy: obs.free_energy_per_site,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCheckConfig {
    pub n_grid: Vec<usize>,
    pub alpha: f64,
    pub samples: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRecord {
    pub n: usize,
    pub p: usize,
    /// `p / n` after rounding `p`.
    pub alpha: f64,
    pub samples: usize,
    pub mean_j_sq: f64,
    pub max_j_sq: f64,
    /// `None` without patterns.
    pub mean_a_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub records: Vec<NormRecord>,
    /// `E‖J‖²` stays below [`J_SQ_CEILING`] and varies by less than
    /// [`J_FLAT_RATIO`] across the grid.
    pub j_flat: bool,
    /// `E‖A‖² ≤ A_ENVELOPE · α` at every grid point.
    pub a_within_envelope: bool,
}

/// Sample means of `‖J‖²` and `‖A‖²` with `p = round(α n)`.
pub fn run_norm_checks(cfg: &NormCheckConfig) -> Result<NormReport> {
    check_grid(&cfg.n_grid, usize::MAX)?;
    if !(cfg.alpha.is_finite() && cfg.alpha >= 0.0) {
        return Err(Error::invalid(format!("alpha must be >= 0, got {}", cfg.alpha)));
    }
    if cfg.samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let pool = pool(cfg.threads)?;
    let mut records = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let p = (cfg.alpha * n as f64).round() as usize;
        let norms: Vec<(f64, Option<f64>)> = pool.install(|| {
            (0..cfg.samples)
                .into_par_iter()
                .map(|member| {
                    let xi = bernoulli_patterns(n, p, member_seed(cfg.seed, n, member))?;
                    let j = spectral_norm(hebbian_couplings(&xi).matrix())?;
                    let a = if p == 0 {
                        None
                    } else {
                        Some(spectral_norm(&overlap_matrix_a(&xi)?)?.powi(2))
                    };
                    Ok((j * j, a))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let j_sq: Vec<f64> = norms.iter().map(|x| x.0).collect();
        let a_sq: Vec<f64> = norms.iter().filter_map(|x| x.1).collect();
        records.push(NormRecord {
            n,
            p,
            alpha: p as f64 / n as f64,
            samples: cfg.samples,
            mean_j_sq: mean(&j_sq),
            max_j_sq: j_sq.iter().copied().fold(0.0, f64::max),
            mean_a_sq: (!a_sq.is_empty()).then(|| mean(&a_sq)),
        });
    }
    let j_means: Vec<f64> = records.iter().map(|r| r.mean_j_sq).collect();
    let j_max = j_means.iter().copied().fold(0.0, f64::max);
    let j_min = j_means.iter().copied().fold(f64::INFINITY, f64::min);
    let j_flat = j_max <= J_SQ_CEILING && (j_max == 0.0 || j_max <= J_FLAT_RATIO * j_min);
    let a_within_envelope = records
        .iter()
        .all(|r| r.mean_a_sq.is_none_or(|a| a <= A_ENVELOPE * r.alpha));
    Ok(NormReport {
        records,
        j_flat,
        a_within_envelope,
    })
}
