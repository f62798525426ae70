//! Typed parameters and execution for each subcommand.

use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use qhop::disorder::{bernoulli_patterns, PatternMatrix};
use qhop::experiments::{
    bogolyubov_suite, duhamel_suite, gauge_suite, run_convergence, run_norm_checks, run_retrieval,
    run_self_averaging, ConvergenceConfig, EnsembleRow, FreeEnergySolver, NormCheckConfig, RetrievalConfig,
    SelfAveragingConfig,
};
use qhop::meanfield::{minimize_f0, phase_curve};
use qhop::quantum::{
    free_energy, gibbs_observables, reduced_spectrum, slq_free_energy, spectrum, FieldMode, ModelParams,
};

use crate::config::{CommandKind, RunConfig};
use crate::error::CliError;
use crate::output::{atomic_write, Records};

fn default_beta() -> f64 {
    1.0
}
fn default_d() -> f64 {
    0.5
}
fn default_probes() -> i64 {
    64
}
fn default_krylov() -> i64 {
    60
}
fn one() -> i64 {
    1
}

fn count(key: &str, value: i64, min: i64) -> Result<usize, CliError> {
    if value < min {
        return Err(CliError::config(key, format!("must be >= {min}, got {value}")));
    }
    Ok(value as usize)
}

fn positive(key: &str, value: f64) -> Result<f64, CliError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(CliError::config(key, format!("must be finite and > 0, got {value}")));
    }
    Ok(value)
}

fn finite(key: &str, value: f64) -> Result<f64, CliError> {
    if !value.is_finite() {
        return Err(CliError::config(key, format!("must be finite, got {value}")));
    }
    Ok(value)
}

/// A grid given as `start:stop:step`, a comma list, or a TOML array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Text(String),
    Values(Vec<f64>),
}

impl Grid {
    pub fn values(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let values = match self {
            Grid::Values(v) => v.clone(),
            Grid::Text(text) => parse_grid(text).map_err(|m| CliError::config(key, m))?,
        };
        if values.is_empty() {
            return Err(CliError::config(key, "grid is empty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::config(key, format!("non-finite grid value {v}")));
        }
        Ok(values)
    }

    fn sites(&self, key: &str) -> Result<Vec<usize>, CliError> {
        self.values(key)?
            .into_iter()
            .map(|v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::config(key, format!("site counts must be integers >= 1, got {v}")))
                }
            })
            .collect()
    }
}

/// Parse `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("cannot parse `{}` as a number", s.trim()))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(num).collect(),
        3 => {
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step.is_finite() && step > 0.0) {
                return Err(format!("step must be > 0, got {step}"));
            }
            if stop < start {
                return Err(format!("stop {stop} is below start {start}"));
            }
            let steps = ((stop - start) / step + 1e-9).floor() as usize;
            if steps > 100_000 {
                return Err(format!("grid has {} points", steps + 1));
            }
            // Snap to 12 decimals: 0.1:0.9:0.1 gives 0.3, not 0.30000000000000004.
            Ok((0..=steps)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        _ => Err(format!("expected start:stop:step or a comma list, got `{text}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Uniform,
    Aligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Symmetric,
    Slq,
}

fn field_mode(kind: FieldKind, h: f64, pattern: i64, p: usize) -> Result<FieldMode, CliError> {
    match kind {
        FieldKind::Uniform => Ok(FieldMode::Uniform(h)),
        FieldKind::Aligned => {
            if pattern < 1 || pattern as usize > p {
                return Err(CliError::config(
                    "pattern",
                    format!("must be in 1..={p} for an aligned field, got {pattern}"),
                ));
            }
            Ok(FieldMode::PatternAligned {
                h,
                pattern: pattern as usize - 1,
            })
        }
    }
}

fn solver(kind: SolverKind, probes: i64, krylov_steps: i64) -> Result<FreeEnergySolver, CliError> {
    Ok(match kind {
        SolverKind::Dense => FreeEnergySolver::Dense,
        SolverKind::Symmetric => FreeEnergySolver::Symmetric,
        SolverKind::Slq => FreeEnergySolver::Slq {
            probes: count("probes", probes, 8)?,
            krylov_steps: count("krylov_steps", krylov_steps, 1)?,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactParams {
    pub n: i64,
    #[serde(default = "one")]
    pub p: i64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "uniform")]
    pub field: FieldKind,
    #[serde(default = "one")]
    pub pattern: i64,
    #[serde(default = "dense")]
    pub solver: SolverKind,
    #[serde(default = "default_probes")]
    pub probes: i64,
    #[serde(default = "default_krylov")]
    pub krylov_steps: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patterns_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_file: Option<String>,
}

fn uniform() -> FieldKind {
    FieldKind::Uniform
}
fn dense() -> SolverKind {
    SolverKind::Dense
}
fn symmetric() -> SolverKind {
    SolverKind::Symmetric
}

impl ExactParams {
    fn validate(&self) -> Result<(), CliError> {
        count("n", self.n, 1)?;
        let p = count("p", self.p, 0)?;
        positive("beta", self.beta)?;
        finite("d", self.d)?;
        finite("h", self.h)?;
        field_mode(self.field, self.h, self.pattern, p)?;
        solver(self.solver, self.probes, self.krylov_steps)?;
        if self.spectrum_file.is_some() && self.solver != SolverKind::Dense {
            return Err(CliError::config("spectrum_file", "needs solver = dense"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct ExactRecord {
    n: usize,
    p: usize,
    beta: f64,
    d: f64,
    h: f64,
    field: FieldKind,
    solver: SolverKind,
    seed: u64,
    free_energy: f64,
    /// Standard error; SLQ only.
    stderr: Option<f64>,
    ground_energy: Option<f64>,
    /// Gibbs overlap with the field pattern (pattern 1 under a uniform
    /// field); dense solver with n ≤ 12 only.
    overlap: Option<f64>,
}

/// Largest `n` for which `exact` also computes the overlap.
const OVERLAP_MAX_SITES: usize = 12;

fn load_patterns(path: &str, n: usize, p: usize, seed: u64) -> Result<PatternMatrix, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let xi = PatternMatrix::read_csv(file, seed)?;
    if xi.n() != n {
        return Err(CliError::config("patterns_file", format!("has {} sites, n is {n}", xi.n())));
    }
    if xi.p() != p {
        return Err(CliError::config("patterns_file", format!("has {} patterns, p is {p}", xi.p())));
    }
    Ok(xi)
}

fn run_exact(params: &ExactParams, seed: u64) -> Result<Records, CliError> {
    let (n, p) = (params.n as usize, params.p as usize);
    let xi = match &params.patterns_file {
        Some(path) => load_patterns(path, n, p, seed)?,
        None => bernoulli_patterns(n, p, seed)?,
    };
    let field = field_mode(params.field, params.h, params.pattern, p)?;
    let model = ModelParams::hopfield(&xi, field, params.d, params.beta)?;
    let mut record = ExactRecord {
        n,
        p,
        beta: params.beta,
        d: params.d,
        h: params.h,
        field: params.field,
        solver: params.solver,
        seed,
        free_energy: 0.0,
        stderr: None,
        ground_energy: None,
        overlap: None,
    };
    match solver(params.solver, params.probes, params.krylov_steps)? {
        FreeEnergySolver::Dense => {
            let with_overlap = p > 0 && n <= OVERLAP_MAX_SITES;
            let spec = spectrum(&model, with_overlap)?;
            record.free_energy = free_energy(&spec, params.beta, n)?;
            record.ground_energy = Some(spec.ground_energy());
            if with_overlap {
                let obs = gibbs_observables(&model, &spec, None)?;
                let mu = match params.field {
                    FieldKind::Aligned => params.pattern as usize - 1,
                    FieldKind::Uniform => 0,
                };
                record.overlap = Some(obs.overlaps[mu]);
            }
            if let Some(path) = &params.spectrum_file {
                let mut bytes = Vec::new();
                spec.write_csv(&mut bytes)?;
                atomic_write(Path::new(path), &bytes)?;
            }
        }
        FreeEnergySolver::Symmetric => {
            let red = reduced_spectrum(&model)?;
            record.free_energy = red.free_energy(params.beta)?;
            record.ground_energy = Some(red.ground_energy());
        }
        FreeEnergySolver::Slq { probes, krylov_steps } => {
            let est = slq_free_energy(&model, params.beta, probes, krylov_steps, seed)?;
            record.free_energy = est.free_energy;
            record.stderr = Some(est.stderr);
        }
    }
    Records::new(&[record])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldParams {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub h: f64,
}

impl MeanfieldParams {
    fn validate(&self) -> Result<(), CliError> {
        positive("beta", self.beta)?;
        finite("d", self.d)?;
        let h = finite("h", self.h)?;
        if h < 0.0 {
            return Err(CliError::config("h", format!("must be >= 0, got {h}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct MeanfieldRecord {
    beta: f64,
    d: f64,
    h: f64,
    m_star: f64,
    f0: f64,
    residual: f64,
    branch: qhop::meanfield::Branch,
}

fn run_meanfield(params: &MeanfieldParams) -> Result<Records, CliError> {
    let sol = minimize_f0(params.beta, params.d, params.h)?;
    Records::new(&[MeanfieldRecord {
        beta: params.beta,
        d: params.d,
        h: params.h,
        m_star: sol.m_star,
        f0: sol.f0_value,
        residual: sol.residual,
        branch: sol.branch,
    }])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseParams {
    #[serde(default = "default_d_grid")]
    pub d_grid: Grid,
}

fn default_d_grid() -> Grid {
    Grid::Text("0.1:0.9:0.1".into())
}

impl PhaseParams {
    fn validate(&self) -> Result<(), CliError> {
        for d in self.d_grid.values("d_grid")? {
            if !(0.0..1.0).contains(&d) {
                return Err(CliError::config("d_grid", format!("values must lie in [0, 1), got {d}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct PhaseRecord {
    d: f64,
    beta_c: f64,
    residual: f64,
    asymptote_ratio: Option<f64>,
}

fn run_phase(params: &PhaseParams) -> Result<Records, CliError> {
    let curve = phase_curve(&params.d_grid.values("d_grid")?)?;
    let rows: Vec<PhaseRecord> = curve
        .iter()
        .map(|c| PhaseRecord {
            d: c.d,
            beta_c: c.beta_c,
            residual: c.residual,
            asymptote_ratio: c.asymptote_ratio(),
        })
        .collect();
    Records::new(&rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfavgParams {
    #[serde(default = "default_small_grid")]
    pub n_grid: Grid,
    #[serde(default = "two")]
    pub p: i64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "uniform")]
    pub field: FieldKind,
    #[serde(default = "one")]
    pub pattern: i64,
    #[serde(default = "default_ensemble")]
    pub samples: i64,
    #[serde(default = "symmetric")]
    pub solver: SolverKind,
    #[serde(default = "default_probes")]
    pub probes: i64,
    #[serde(default = "default_krylov")]
    pub krylov_steps: i64,
}

fn default_small_grid() -> Grid {
    Grid::Text("6,8,10,12".into())
}
fn two() -> i64 {
    2
}
fn default_ensemble() -> i64 {
    300
}

impl SelfavgParams {
    fn config(&self, seed: u64, threads: Option<usize>) -> Result<SelfAveragingConfig, CliError> {
        let p = count("p", self.p, 0)?;
        Ok(SelfAveragingConfig {
            n_grid: self.n_grid.sites("n_grid")?,
            p,
            beta: positive("beta", self.beta)?,
            d: finite("d", self.d)?,
            field: field_mode(self.field, finite("h", self.h)?, self.pattern, p)?,
            samples: count("samples", self.samples, qhop::experiments::MIN_SAMPLES as i64)?,
            seed,
            solver: solver(self.solver, self.probes, self.krylov_steps)?,
            threads,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeParams {
    #[serde(default = "default_small_grid")]
    pub n_grid: Grid,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "one")]
    pub samples: i64,
    #[serde(default = "symmetric")]
    pub solver: SolverKind,
    #[serde(default = "default_probes")]
    pub probes: i64,
    #[serde(default = "default_krylov")]
    pub krylov_steps: i64,
}

impl ConvergeParams {
    fn config(&self, seed: u64) -> Result<ConvergenceConfig, CliError> {
        Ok(ConvergenceConfig {
            n_grid: self.n_grid.sites("n_grid")?,
            beta: positive("beta", self.beta)?,
            d: finite("d", self.d)?,
            h: finite("h", self.h)?,
            samples: count("samples", self.samples, 1)?,
            seed,
            solver: solver(self.solver, self.probes, self.krylov_steps)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalParams {
    #[serde(default = "ten")]
    pub n: i64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default)]
    pub h: f64,
}

fn ten() -> i64 {
    10
}

impl RetrievalParams {
    fn config(&self, seed: u64) -> Result<RetrievalConfig, CliError> {
        let h = finite("h", self.h)?;
        if h <= 0.0 {
            return Err(CliError::config(
                "h",
                format!("must be > 0 to select a retrieval state, got {h}"),
            ));
        }
        Ok(RetrievalConfig {
            n: count("n", self.n, 1)?,
            beta: positive("beta", self.beta)?,
            d: finite("d", self.d)?,
            h,
            seed,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsParams {
    #[serde(default = "default_large_grid")]
    pub n_grid: Grid,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "hundred")]
    pub samples: i64,
}

fn default_large_grid() -> Grid {
    Grid::Text("64,128,256".into())
}
fn default_alpha() -> f64 {
    0.25
}
fn hundred() -> i64 {
    100
}

impl NormsParams {
    fn config(&self, seed: u64, threads: Option<usize>) -> Result<NormCheckConfig, CliError> {
        let alpha = finite("alpha", self.alpha)?;
        if alpha < 0.0 {
            return Err(CliError::config("alpha", format!("must be >= 0, got {alpha}")));
        }
        Ok(NormCheckConfig {
            n_grid: self.n_grid.sites("n_grid")?,
            alpha,
            samples: count("samples", self.samples, 1)?,
            seed,
            threads,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    #[serde(default = "thousand")]
    pub trials: i64,
    #[serde(default = "fifty")]
    pub gauge_trials: i64,
    #[serde(default = "eight")]
    pub gauge_n: i64,
}

fn thousand() -> i64 {
    1000
}
fn fifty() -> i64 {
    50
}
fn eight() -> i64 {
    8
}

impl VerifyParams {
    fn validate(&self) -> Result<(), CliError> {
        count("trials", self.trials, 1)?;
        count("gauge_trials", self.gauge_trials, 1)?;
        count("gauge_n", self.gauge_n, 1)?;
        Ok(())
    }
}

fn run_verify(params: &VerifyParams, seed: u64) -> Result<(Records, Value), CliError> {
    let trials = params.trials as usize;
    let reports = vec![
        bogolyubov_suite(trials, seed)?,
        duhamel_suite(trials, seed)?,
        gauge_suite(params.gauge_trials as usize, params.gauge_n as usize, seed)?,
    ];
    let summary = serde_json::json!({
        "passed": reports.iter().map(|r| r.passed).sum::<usize>(),
        "failed": reports.iter().map(|r| r.failed).sum::<usize>(),
    });
    Ok((Records::new(&reports)?, summary))
}

fn typed<T: DeserializeOwned>(params: Map<String, Value>) -> Result<T, CliError> {
    serde_path_to_error::deserialize(Value::Object(params)).map_err(|e| {
        let path = e.path().to_string();
        let key = (path != ".").then_some(path);
        CliError::Config {
            key,
            message: e.into_inner().to_string(),
        }
    })
}

fn untyped<T: Serialize>(params: &T) -> Result<Map<String, Value>, CliError> {
    match serde_json::to_value(params) {
        Ok(Value::Object(map)) => Ok(map),
        _ => Err(CliError::Config {
            key: None,
            message: "parameters did not serialize to a table".into(),
        }),
    }
}

/// Check a merged parameter table for `kind` and fill in defaults.
pub fn normalize(kind: CommandKind, params: Map<String, Value>) -> Result<Map<String, Value>, CliError> {
    match kind {
        CommandKind::Exact => {
            let p: ExactParams = typed(params)?;
            p.validate()?;
            untyped(&p)
        }
        CommandKind::Meanfield => {
            let p: MeanfieldParams = typed(params)?;
            p.validate()?;
            untyped(&p)
        }
        CommandKind::PhaseDiagram => {
            let p: PhaseParams = typed(params)?;
            p.validate()?;
            untyped(&p)
        }
        CommandKind::Selfavg => {
            let p: SelfavgParams = typed(params)?;
            p.config(0, None)?;
            untyped(&p)
        }
        CommandKind::Converge => {
            let p: ConvergeParams = typed(params)?;
            p.config(0)?;
            untyped(&p)
        }
        CommandKind::Retrieval => {
            let p: RetrievalParams = typed(params)?;
            p.config(0)?;
            untyped(&p)
        }
        CommandKind::Norms => {
            let p: NormsParams = typed(params)?;
            p.config(0, None)?;
            untyped(&p)
        }
        CommandKind::Verify => {
            let p: VerifyParams = typed(params)?;
            p.validate()?;
            untyped(&p)
        }
    }
}

/// Records of a finished run plus an optional summary for the manifest.
pub struct Outcome {
    pub records: Records,
    pub summary: Option<Value>,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params.clone();
    let seed = cfg.seed;
    let plain = |records| Outcome {
        records,
        summary: None,
    };
    Ok(match cfg.command {
        CommandKind::Exact => {
            let p: ExactParams = typed(params)?;
            plain(run_exact(&p, seed)?)
        }
        CommandKind::Meanfield => plain(run_meanfield(&typed(params)?)?),
        CommandKind::PhaseDiagram => plain(run_phase(&typed(params)?)?),
        CommandKind::Selfavg => {
            let p: SelfavgParams = typed(params)?;
            let out = run_self_averaging(&p.config(seed, cfg.threads)?)?;
            let rows: Vec<EnsembleRow> = out.iter().map(EnsembleRow::from).collect();
            plain(Records::new(&rows)?)
        }
        CommandKind::Converge => {
            let p: ConvergeParams = typed(params)?;
            plain(Records::new(&run_convergence(&p.config(seed)?)?)?)
        }
        CommandKind::Retrieval => {
            let p: RetrievalParams = typed(params)?;
            plain(Records::new(&[run_retrieval(&p.config(seed)?)?])?)
        }
        CommandKind::Norms => {
            let p: NormsParams = typed(params)?;
            let report = run_norm_checks(&p.config(seed, cfg.threads)?)?;
            Outcome {
                records: Records::new(&report.records)?,
                summary: Some(serde_json::json!({
                    "j_flat": report.j_flat,
                    "a_within_envelope": report.a_within_envelope,
                })),
            }
        }
        CommandKind::Verify => {
            let (records, summary) = run_verify(&typed(params)?, seed)?;
            Outcome {
                records,
                summary: Some(summary),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        let g = parse_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[2], 0.3);
        assert_eq!(g[8], 0.9);
        assert_eq!(parse_grid("6, 8,10").unwrap(), vec![6.0, 8.0, 10.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn site_grid_rejects_fractions() {
        let err = Grid::Text("4,5.5".into()).sites("n_grid").unwrap_err();
        assert!(err.to_string().starts_with("n_grid:"));
    }

    #[test]
    fn type_mismatch_names_key() {
        let mut map = Map::new();
        map.insert("n".into(), Value::String("four".into()));
        let err = normalize(CommandKind::Exact, map).unwrap_err();
        assert!(err.to_string().starts_with("n:"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let mut map = Map::new();
        map.insert("temperature".into(), Value::from(2.0));
        let err = normalize(CommandKind::Meanfield, map).unwrap_err();
        assert!(err.to_string().contains("temperature"), "{err}");
    }

    #[test]
    fn aligned_pattern_must_exist() {
        let mut map = Map::new();
        map.insert("n".into(), Value::from(4));
        map.insert("p".into(), Value::from(1));
        map.insert("field".into(), Value::from("aligned"));
        map.insert("pattern".into(), Value::from(2));
        let err = normalize(CommandKind::Exact, map).unwrap_err();
        assert!(err.to_string().starts_with("pattern:"), "{err}");
    }
}
