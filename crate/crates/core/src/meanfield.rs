//! Curie-Weiss mean-field theory of the single-pattern model.
//!
//! ```text
//! f0(m) = -(1/β) log 2cosh(β r) + m²/2,   r = sqrt((m + h)² + d²)
//! ```
//!
//! Stationary points solve `m = (m + h) tanh(β r) / r`. At `h = 0` a nonzero
//! branch exists iff `β > β_c(d)`, where `d = tanh(β_c d)`; `β_c(0) = 1` and
//! `β_c` grows like `½ log 1/(1-d)` as `d → 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::log_2cosh;

/// Grid spacing used to bracket roots and minima.
const GRID_STEP: f64 = 1e-3;
/// Target for `|f0'|` at a reported root.
const ROOT_TOL: f64 = 1e-12;
/// Largest admissible residual of the self-consistency equation.
const RESIDUAL_MAX: f64 = 1e-10;
const BETA_C_CEILING: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Trivial,
    SymmetricBroken,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldSolution {
    pub m_star: f64,
    pub f0_value: f64,
    pub residual: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub m: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub d: f64,
    pub beta_c: f64,
    pub residual: f64,
}

impl CriticalPoint {
    /// `β_c / (½ log 1/(1-d))`; `None` at `d = 0`.
    pub fn asymptote_ratio(&self) -> Option<f64> {
        (self.d > 0.0).then(|| self.beta_c / (0.5 * (1.0 / (1.0 - self.d)).ln()))
    }
}

/// The mean-field free energy per site.
pub fn f0(m: f64, beta: f64, d: f64, h: f64) -> f64 {
    let r = (m + h).hypot(d);
    -log_2cosh(beta * r) / beta + 0.5 * m * m
}

/// Right-hand side `(m + h) tanh(β r) / r` of the self-consistency equation.
pub fn self_consistency_rhs(m: f64, beta: f64, d: f64, h: f64) -> f64 {
    let u = m + h;
    let r = u.hypot(d);
    if r == 0.0 {
        0.0
    } else {
        u * (beta * r).tanh() / r
    }
}

/// `∂f0/∂m`; its zeros are the fixed points.
pub fn f0_derivative(m: f64, beta: f64, d: f64, h: f64) -> f64 {
    m - self_consistency_rhs(m, beta, d, h)
}

/// `∂²f0/∂m²`.
pub fn f0_second_derivative(m: f64, beta: f64, d: f64, h: f64) -> f64 {
    let u = m + h;
    let r = u.hypot(d);
    let x = beta * r;
    let c = x.cosh();
    let sech2 = 1.0 / (c * c);
    if r == 0.0 {
        return 1.0 - beta;
    }
    let t = x.tanh();
    let slope = t / r + u * u * beta * sech2 / (r * r) - u * u * t / (r * r * r);
    1.0 - slope
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("beta must be finite and > 0, got {beta}")))
    }
}

/// Refine a sign change of `f` on `[lo, hi]` until `|f| <= ROOT_TOL` or the
/// bracket stops shrinking. Returns the best point seen.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    let mut best = if f_lo.abs() <= f(hi).abs() { lo } else { hi };
    let lo_negative = f_lo < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.abs() < f(best).abs() {
            best = mid;
        }
        if fm.abs() <= ROOT_TOL {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

fn grid(lo: f64, hi: f64) -> Vec<f64> {
    let first = (lo / GRID_STEP).ceil() as i64;
    let last = (hi / GRID_STEP).floor() as i64;
    let mut points = Vec::with_capacity((last - first + 3).max(0) as usize);
    if (first as f64) * GRID_STEP > lo {
        points.push(lo);
    }
    points.extend((first..=last).map(|i| i as f64 * GRID_STEP));
    if (last as f64) * GRID_STEP < hi {
        points.push(hi);
    }
    points
}

/// Global minimizer of `f0` over `m ∈ [0, 1 + h]`.
///
/// Requires `h >= 0`; negative fields map onto this case through `m → -m`.
/// When the trivial and broken branches tie within `1e-12`, the larger `m`
/// is reported.
pub fn minimize_f0(beta: f64, d: f64, h: f64) -> Result<MeanFieldSolution> {
    check_beta(beta)?;
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::invalid(format!("minimize_f0 needs h >= 0, got {h}")));
    }
    if !d.is_finite() {
        return Err(Error::invalid(format!("d must be finite, got {d}")));
    }
    let df = |m: f64| f0_derivative(m, beta, d, h);
    let points = grid(0.0, 1.0 + h);
    let slopes: Vec<f64> = points.iter().map(|&m| df(m)).collect();

    let mut candidates = Vec::new();
    if slopes[0] >= 0.0 {
        candidates.push(0.0);
    }
    for w in 0..points.len() - 1 {
        let (a, b) = (slopes[w], slopes[w + 1]);
        if a == 0.0 && w > 0 {
            candidates.push(points[w]);
        } else if a < 0.0 && b > 0.0 {
            candidates.push(bisect(df, points[w], points[w + 1]));
        }
    }
    if slopes[points.len() - 1] <= 0.0 {
        candidates.push(points[points.len() - 1]);
    }

    let mut best: Option<(f64, f64)> = None;
    for m in candidates {
        let value = f0(m, beta, d, h);
        best = match best {
            None => Some((m, value)),
            Some((bm, bv)) => {
                if value < bv - 1e-12 || ((value - bv).abs() <= 1e-12 && m > bm) {
                    Some((m, value))
                } else {
                    Some((bm, bv))
                }
            }
        };
    }
    let (m_star, f0_value) = best.ok_or_else(|| Error::numerical("no minimizer bracketed"))?;
    let residual = df(m_star).abs();
    if residual > RESIDUAL_MAX {
        return Err(Error::numerical(format!(
            "self-consistency residual {residual} at m = {m_star}"
        )));
    }
    Ok(MeanFieldSolution {
        m_star,
        f0_value,
        residual,
        branch: if m_star == 0.0 {
            Branch::Trivial
        } else {
            Branch::SymmetricBroken
        },
    })
}

/// All solutions of the self-consistency equation on `[-(1+|h|), 1+|h|]`,
/// ascending, with stability from the sign of `f0''`.
pub fn fixed_points(beta: f64, d: f64, h: f64) -> Result<Vec<FixedPoint>> {
    check_beta(beta)?;
    if !(d.is_finite() && h.is_finite()) {
        return Err(Error::invalid("d and h must be finite"));
    }
    let df = |m: f64| f0_derivative(m, beta, d, h);
    let bound = 1.0 + h.abs();
    let points = grid(-bound, bound);
    let slopes: Vec<f64> = points.iter().map(|&m| df(m)).collect();

    let mut roots: Vec<f64> = Vec::new();
    for w in 0..points.len() {
        if slopes[w] == 0.0 {
            roots.push(points[w]);
        }
        if w + 1 < points.len() {
            let (a, b) = (slopes[w], slopes[w + 1]);
            if a != 0.0 && b != 0.0 && (a < 0.0) != (b < 0.0) {
                roots.push(bisect(df, points[w], points[w + 1]));
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(roots
        .into_iter()
        .map(|m| FixedPoint {
            m,
            stable: f0_second_derivative(m, beta, d, h) > 0.0,
        })
        .collect())
}

/// Critical inverse temperature `β_c(d)` solving `d = tanh(β d)`.
pub fn critical_beta(d: f64) -> Result<CriticalPoint> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::invalid(format!("critical_beta needs d >= 0, got {d}")));
    }
    if d >= 1.0 {
        return Err(Error::invalid(format!(
            "no critical point for d >= 1 (got {d}); tanh(βd) < 1 <= d"
        )));
    }
    if d == 0.0 {
        return Ok(CriticalPoint {
            d,
            beta_c: 1.0,
            residual: 0.0,
        });
    }
    let g = |beta: f64| (beta * d).tanh() - d;
    let (mut lo, mut hi) = (1.0, BETA_C_CEILING);
    if !(g(lo) < 0.0 && g(hi) > 0.0) {
        return Err(Error::numerical(format!(
            "no sign change of tanh(βd) - d on [1, {BETA_C_CEILING}] for d = {d}"
        )));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta_c = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    Ok(CriticalPoint {
        d,
        beta_c,
        residual: g(beta_c).abs(),
    })
}

/// `critical_beta` over a grid of `d` values, checking that `β_c` does not
/// decrease with `d`.
pub fn phase_curve(d_grid: &[f64]) -> Result<Vec<CriticalPoint>> {
    let curve = d_grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            critical_beta(d).map_err(|e| match e {
                Error::InvalidInput(msg) => Error::InvalidInput(format!("grid point {i}: {msg}")),
                Error::Numerical(msg) => Error::Numerical(format!("grid point {i}: {msg}")),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<&CriticalPoint> = curve.iter().collect();
    sorted.sort_by(|a, b| a.d.total_cmp(&b.d));
    if let Some(w) = sorted.windows(2).find(|w| w[1].beta_c < w[0].beta_c) {
        return Err(Error::numerical(format!(
            "critical curve decreases between d = {} and d = {}",
            w[0].d, w[1].d
        )));
    }
    Ok(curve)
}
