//! Overflow-free exponentials for Boltzmann sums.

/// `log Σ exp(x_i)`, anchored at the largest term.
///
/// Returns `-inf` for an empty slice or when every term is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `log(2 cosh x)` without overflow: `|x| + log(1 + e^{-2|x|})`.
#[inline]
pub fn log_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Normalized Gibbs weights `e^{-β E_k} / Z` for an energy list.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}
