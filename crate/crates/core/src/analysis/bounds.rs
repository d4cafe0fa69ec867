use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sym_eigvals, DenseMatrix};
use crate::operator::{truncate_hh, HHOperatorSpec, TruncationSchedule};
use crate::symplectic::{half_dim, symplectic_eigenvalues};

pub const DEFAULT_BOUNDS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsViolation {
    pub n: usize,
    /// 1-based position in ascending order.
    pub k: usize,
    pub d_k: f64,
    /// Distance past the nearer end of `[m, M]`.
    pub excess: f64,
}

/// Symplectic eigenvalues checked against the ordinary spectrum's extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub violations: Vec<BoundsViolation>,
}

pub fn bounds_check(t: &DenseMatrix) -> Result<BoundsReport> {
    bounds_check_with(t, DEFAULT_BOUNDS_TOL)
}

/// Every `d_k` must lie in `[m − tol·M, M + tol·M]`.
pub fn bounds_check_with(t: &DenseMatrix, rel_tol: f64) -> Result<BoundsReport> {
    let n = half_dim(t)?;
    let (m, big_m, violations) = check_one(t, n, rel_tol)?;
    Ok(BoundsReport {
        m,
        big_m,
        violations,
    })
}

/// Checks every truncation against its own extremes; `m` and `M` are those
/// of the largest truncation.
pub fn bounds_check_sweep(
    spec: &HHOperatorSpec,
    schedule: &TruncationSchedule,
    rel_tol: f64,
) -> Result<BoundsReport> {
    let mut report = BoundsReport {
        m: f64::NAN,
        big_m: f64::NAN,
        violations: Vec::new(),
    };
    for &n in schedule.ns() {
        let (m, big_m, mut v) = check_one(&truncate_hh(spec, n)?, n, rel_tol)?;
        report.m = m;
        report.big_m = big_m;
        report.violations.append(&mut v);
    }
    Ok(report)
}

fn check_one(t: &DenseMatrix, n: usize, rel_tol: f64) -> Result<(f64, f64, Vec<BoundsViolation>)> {
    let eig = sym_eigvals(t)?;
    let (m, big_m) = (eig[0], eig[eig.len() - 1]);
    if !(m > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eig: m });
    }
    let slack = rel_tol * big_m;
    let violations = symplectic_eigenvalues(t)?
        .into_iter()
        .enumerate()
        .filter_map(|(k, d)| {
            let excess = (m - d).max(d - big_m);
            (excess > slack).then_some(BoundsViolation {
                n,
                k: k + 1,
                d_k: d,
                excess,
            })
        })
        .collect();
    Ok((m, big_m, violations))
}
