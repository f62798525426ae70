//! CSV output for experiment records.

use std::io::Write;

use serde::Serialize;

use super::EnsembleSummary;
use crate::error::Result;

/// Flat CSV row of an [`EnsembleSummary`].
///
/// Columns: `n,p,alpha,samples,mean_f,var_f,var_lo,var_hi,n_var,seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub samples: usize,
    pub mean_f: f64,
    pub var_f: f64,
    pub var_lo: f64,
    pub var_hi: f64,
    pub n_var: f64,
    pub seed: u64,
}

impl From<&EnsembleSummary> for EnsembleRow {
    fn from(s: &EnsembleSummary) -> Self {
        EnsembleRow {
            n: s.n,
            p: s.p,
            alpha: s.alpha,
            samples: s.samples,
            mean_f: s.mean_f,
            var_f: s.var_f,
            var_lo: s.var_ci.0,
            var_hi: s.var_ci.1,
            n_var: s.n_times_var,
            seed: s.seed_base,
        }
    }
}

/// Write flat records as CSV with a header row taken from the field names.
/// Floats use the shortest representation that round-trips.
pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_header_is_fixed() {
        let s = EnsembleSummary {
            n: 6,
            p: 2,
            alpha: 2.0 / 6.0,
            samples: 50,
            mean_f: -1.25,
            var_f: 0.5,
            var_ci: (0.25, 0.75),
            n_times_var: 3.0,
            seed_base: 7,
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[EnsembleRow::from(&s)]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,p,alpha,samples,mean_f,var_f,var_lo,var_hi,n_var,seed"
        );
        assert_eq!(lines.next().unwrap(), "6,2,0.3333333333333333,50,-1.25,0.5,0.25,0.75,3.0,7");
    }
}
