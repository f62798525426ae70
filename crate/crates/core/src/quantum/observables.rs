use serde::Serialize;

use super::{free_energy, spin, ModelParams, Spectrum};
use crate::disorder::PatternMatrix;
use crate::error::{Error, Result};
use crate::numerics::boltzmann_weights;

/// Thermal averages at the inverse temperature of the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsObservables {
    pub free_energy_per_site: f64,
    /// `<m^mu>` for every pattern; empty when no patterns were available.
    pub overlaps: Vec<f64>,
    pub z_magnetizations: Vec<f64>,
    pub x_magnetizations: Vec<f64>,
}

/// Gibbs averages of `m^mu`, `σ^z_i` and `σ^x_i` from a spectrum with
/// eigenvectors.
///
/// Overlaps use `xi` when given, else the patterns bound to `params`; with
/// neither, `overlaps` is empty.
pub fn gibbs_observables(
    params: &ModelParams,
    spectrum: &Spectrum,
    xi: Option<&PatternMatrix>,
) -> Result<GibbsObservables> {
    let vectors = spectrum
        .eigenvectors()
        .ok_or_else(|| Error::invalid("gibbs_observables needs eigenvectors"))?;
    let n = params.n();
    let dim = params.dim();
    if spectrum.dim() != dim {
        return Err(Error::invalid(format!(
            "spectrum has dimension {}, model {dim}",
            spectrum.dim()
        )));
    }
    let beta = params.beta();
    let weights = boltzmann_weights(spectrum.eigenvalues(), beta);

    // Basis occupation P(b) = Σ_k w_k e_k(b)^2 and the σ^x hopping sums.
    let mut occupation = vec![0.0; dim];
    let mut x_mag = vec![0.0; n];
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let e = vectors.column(k);
        for b in 0..dim {
            occupation[b] += w * e[b] * e[b];
        }
        for (i, x) in x_mag.iter_mut().enumerate() {
            let mut s = 0.0;
            for b in 0..dim {
                s += e[b] * e[b ^ (1 << i)];
            }
            *x += w * s;
        }
    }
    let z_mag: Vec<f64> = (0..n)
        .map(|i| occupation.iter().enumerate().map(|(b, &pb)| pb * spin(b, i)).sum())
        .collect();

    let overlaps = match xi.or(params.patterns()) {
        Some(xi) => {
            if xi.n() != n {
                return Err(Error::invalid(format!(
                    "patterns cover {} sites, model {n}",
                    xi.n()
                )));
            }
            xi.rows()
                .map(|row| row.iter().zip(&z_mag).map(|(x, z)| x * z).sum::<f64>() / n as f64)
                .collect()
        }
        None => Vec::new(),
    };

    Ok(GibbsObservables {
        free_energy_per_site: free_energy(spectrum, beta, n)?,
        overlaps,
        z_magnetizations: z_mag,
        x_magnetizations: x_mag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{bernoulli_patterns, CouplingMatrix};
    use crate::quantum::{spectrum, FieldMode};

    #[test]
    fn zero_field_classical_model_is_unmagnetized() {
        let xi = bernoulli_patterns(6, 2, 13).unwrap();
        let params = ModelParams::hopfield(&xi, FieldMode::Uniform(0.0), 0.0, 3.0).unwrap();
        let s = spectrum(&params, true).unwrap();
        let obs = gibbs_observables(&params, &s, None).unwrap();
        assert!(obs.z_magnetizations.iter().all(|m| m.abs() < 1e-10));
        assert!(obs.overlaps.iter().all(|m| m.abs() < 1e-10));
    }

    #[test]
    fn single_spin_tanh() {
        for &(h, beta) in &[(0.4, 1.0), (-1.0, 2.5), (0.05, 10.0)] {
            let params =
                ModelParams::new(CouplingMatrix::zeros(1).unwrap(), FieldMode::Uniform(h), 0.0, beta)
                    .unwrap();
            let s = spectrum(&params, true).unwrap();
            let obs = gibbs_observables(&params, &s, None).unwrap();
            assert!((obs.z_magnetizations[0] - (beta * h).tanh()).abs() < 1e-13);
            assert!(obs.overlaps.is_empty());
        }
    }

    #[test]
    fn single_spin_transverse_magnetization() {
        // <σ^x> = (d / r) tanh(β r) for H = -h σ^z - d σ^x.
        let (h, d, beta) = (0.3, 0.4, 2.0);
        let params =
            ModelParams::new(CouplingMatrix::zeros(1).unwrap(), FieldMode::Uniform(h), d, beta).unwrap();
        let obs = gibbs_observables(&params, &spectrum(&params, true).unwrap(), None).unwrap();
        let r = f64::hypot(h, d);
        assert!((obs.x_magnetizations[0] - d / r * (beta * r).tanh()).abs() < 1e-13);
        assert!((obs.z_magnetizations[0] - h / r * (beta * r).tanh()).abs() < 1e-13);
    }

    #[test]
    fn overlaps_are_linear_in_magnetizations_and_bounded() {
        let xi = bernoulli_patterns(7, 3, 21).unwrap();
        let params =
            ModelParams::hopfield(&xi, FieldMode::PatternAligned { h: 0.3, pattern: 0 }, 0.5, 2.0)
                .unwrap();
        let obs = gibbs_observables(&params, &spectrum(&params, true).unwrap(), None).unwrap();
        assert_eq!(obs.overlaps.len(), 3);
        for (mu, m) in obs.overlaps.iter().enumerate() {
            let lin: f64 =
                (0..7).map(|i| xi.get(mu, i) * obs.z_magnetizations[i]).sum::<f64>() / 7.0;
            assert!((m - lin).abs() < 1e-10);
            assert!(m.abs() <= 1.0);
        }
        assert!(obs.z_magnetizations.iter().chain(&obs.x_magnetizations).all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn requires_eigenvectors() {
        let params =
            ModelParams::new(CouplingMatrix::zeros(2).unwrap(), FieldMode::Uniform(0.0), 1.0, 1.0)
                .unwrap();
        let s = spectrum(&params, false).unwrap();
        assert!(gibbs_observables(&params, &s, None).is_err());
    }
}
