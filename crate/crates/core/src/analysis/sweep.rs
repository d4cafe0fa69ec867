use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ConvergenceStats;
use crate::error::{Error, Result};
use crate::matrix::sym_eigvals;
use crate::operator::{truncate_h, truncate_hh, Annotations, HHOperatorSpec, HOperatorSpec, TruncationSchedule};
use crate::symplectic::symplectic_eigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Symplectic,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Truncation index (half-dimension for symplectic sweeps).
    pub n: usize,
    /// Order of the truncated matrix.
    pub dim: usize,
    /// Ascending.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub schedule: TruncationSchedule,
    pub per_n: Vec<SweepRow>,
}

impl SweepReport {
    /// One `n,k,value` line per value, `k` counting from 1 in ascending order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        wtr.write_record(["n", "k", "value"]).map_err(csv_err)?;
        for row in &self.per_n {
            for (k, v) in row.values.iter().enumerate() {
                wtr.write_record([row.n.to_string(), (k + 1).to_string(), v.to_string()])
                    .map_err(csv_err)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Everything a sweep run emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub report: SweepReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Annotations>,
}

/// Symplectic eigenvalues of `T₂ₙ` for each `n` in the schedule.
pub fn symplectic_sweep(spec: &HHOperatorSpec, schedule: &TruncationSchedule) -> Result<SweepReport> {
    let per_n = schedule
        .ns()
        .par_iter()
        .map(|&n| {
            let t = truncate_hh(spec, n)?;
            Ok(SweepRow {
                n,
                dim: t.rows(),
                values: symplectic_eigenvalues(&t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        kind: SweepKind::Symplectic,
        schedule: schedule.clone(),
        per_n,
    })
}

/// Ordinary eigenvalues of `Aₙ` for each `n` in the schedule.
pub fn spectral_sweep(spec: &HOperatorSpec, schedule: &TruncationSchedule) -> Result<SweepReport> {
    let per_n = schedule
        .ns()
        .par_iter()
        .map(|&n| {
            Ok(SweepRow {
                n,
                dim: n,
                values: sym_eigvals(&truncate_h(spec, n)?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        kind: SweepKind::Spectral,
        schedule: schedule.clone(),
        per_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    #[test]
    fn doubled_toeplitz_rows() {
        let spec = HHOperatorSpec::Doubled {
            a: HOperatorSpec::toeplitz(vec![2.0, 0.5]).unwrap(),
        };
        let schedule = TruncationSchedule::new(vec![5, 10]).unwrap();
        let report = symplectic_sweep(&spec, &schedule).unwrap();
        assert_eq!(report.per_n.len(), 2);
        for row in &report.per_n {
            assert_eq!(row.dim, 2 * row.n);
            for (k, v) in row.values.iter().enumerate() {
                let exact = 2.0 + ((row.n - k) as f64 * std::f64::consts::PI / (row.n + 1) as f64).cos();
                assert!((v - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_constant_rows() {
        let spec = HHOperatorSpec::explicit(DenseMatrix::from_diag(&[1.5; 6])).unwrap();
        let schedule = TruncationSchedule::new(vec![1, 2, 3]).unwrap();
        let report = symplectic_sweep(&spec, &schedule).unwrap();
        for row in &report.per_n {
            assert!(row.values.iter().all(|v| (v - 1.5).abs() < 1e-14));
        }
    }

    #[test]
    fn spectral_rows_and_csv() {
        let spec = HOperatorSpec::diagonal("n").unwrap();
        let report = spectral_sweep(&spec, &TruncationSchedule::new(vec![2, 3]).unwrap()).unwrap();
        assert_eq!(report.per_n[1].values, vec![1.0, 2.0, 3.0]);
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "n,k,value\n2,1,1\n2,2,2\n3,1,1\n3,2,2\n3,3,3\n"
        );
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<SweepReport>(&json).unwrap(), report);
    }

    #[test]
    fn block_failure_example() {
        let spec = HOperatorSpec::block2x2("1/2").unwrap();
        let report = spectral_sweep(&spec, &TruncationSchedule::new(vec![4, 5]).unwrap()).unwrap();
        assert!(report.per_n[0].values.iter().all(|v| (v.abs() - 1.0).abs() < 1e-12));
        assert!(report.per_n[1].values.iter().any(|v| (v - 0.5).abs() < 1e-12));
    }
}
