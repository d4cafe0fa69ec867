use serde::{Deserialize, Serialize};

use super::SweepReport;
use crate::error::{Error, Result};

/// The `k`-th largest value tracked across the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    /// 1 is the largest value.
    pub k: usize,
    /// `(n, d_k)` for every schedule point with at least `k` values.
    pub values: Vec<(usize, f64)>,
    /// `|d_k(n_last) − d_k(n_prev)|`; absent when the branch has one point.
    pub last_delta: Option<f64>,
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    pub branch_tol: f64,
    /// Hausdorff distance between consecutive rows.
    pub hausdorff_successive: Vec<f64>,
    pub dk_branches: Vec<Branch>,
}

pub fn convergence_stats(report: &SweepReport, branch_tol: f64) -> Result<ConvergenceStats> {
    let rows = &report.per_n;
    if rows.len() < 2 {
        return Err(Error::Schedule(
            "convergence statistics need at least two schedule points".into(),
        ));
    }
    let hausdorff_successive = rows
        .windows(2)
        .map(|w| hausdorff(&w[0].values, &w[1].values))
        .collect::<Result<Vec<_>>>()?;
    let branches = rows.iter().map(|r| r.values.len()).max().unwrap_or(0);
    let dk_branches = (1..=branches)
        .map(|k| {
            let values: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.values.len() >= k)
                .map(|r| (r.n, r.values[r.values.len() - k]))
                .collect();
            let last_delta = match values.as_slice() {
                [.., (_, a), (_, b)] => Some((b - a).abs()),
                _ => None,
            };
            Branch {
                k,
                stabilized: last_delta.is_some_and(|d| d < branch_tol),
                values,
                last_delta,
            }
        })
        .collect();
    Ok(ConvergenceStats {
        branch_tol,
        hausdorff_successive,
        dk_branches,
    })
}

/// Hausdorff distance between two finite sets of reals.
pub fn hausdorff(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidArgument("hausdorff distance of an empty set".into()));
    }
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (xs, ys) = (sorted(xs), sorted(ys));
    Ok(directed(&xs, &ys).max(directed(&ys, &xs)))
}

fn directed(from: &[f64], to: &[f64]) -> f64 {
    from.iter()
        .map(|&x| {
            let i = to.partition_point(|&y| y < x);
            let above = to.get(i).map_or(f64::INFINITY, |&y| y - x);
            let below = i.checked_sub(1).map_or(f64::INFINITY, |j| x - to[j]);
            above.min(below)
        })
        .fold(0.0, f64::max)
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{SweepKind, SweepRow};
    use crate::operator::TruncationSchedule;
    use proptest::prelude::*;

    fn brute(xs: &[f64], ys: &[f64]) -> f64 {
        let d = |a: &[f64], b: &[f64]| {
            a.iter()
                .map(|x| b.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        d(xs, ys).max(d(ys, xs))
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(hausdorff(&[0.0], &[3.0]).unwrap(), 3.0);
        assert_eq!(hausdorff(&[1.0, 2.0, 3.0], &[1.0, 3.0]).unwrap(), 1.0);
        assert!(hausdorff(&[], &[1.0]).is_err());
    }

    #[test]
    fn grid() {
        let g = uniform_grid(1.0, 3.0, 5);
        assert_eq!(g, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
    }

    fn report(rows: Vec<(usize, Vec<f64>)>) -> SweepReport {
        SweepReport {
            kind: SweepKind::Spectral,
            schedule: TruncationSchedule::new(rows.iter().map(|r| r.0).collect()).unwrap(),
            per_n: rows
                .into_iter()
                .map(|(n, values)| SweepRow { n, dim: n, values })
                .collect(),
        }
    }

    #[test]
    fn constant_rows_stabilize() {
        let r = report(vec![(1, vec![2.0]), (2, vec![2.0, 2.0]), (3, vec![2.0; 3])]);
        let s = convergence_stats(&r, 1e-9).unwrap();
        assert_eq!(s.hausdorff_successive, vec![0.0, 0.0]);
        assert!(s.dk_branches[..2].iter().all(|b| b.stabilized));
        assert_eq!(s.dk_branches[2].last_delta, None);
        assert!(convergence_stats(&report(vec![(1, vec![1.0])]), 1e-9).is_err());
    }

    #[test]
    fn branches_count_from_top() {
        let r = report(vec![(1, vec![5.0]), (2, vec![1.0, 5.5])]);
        let s = convergence_stats(&r, 1e-9).unwrap();
        assert_eq!(s.dk_branches[0].values, vec![(1, 5.0), (2, 5.5)]);
        assert_eq!(s.dk_branches[0].last_delta, Some(0.5));
        assert_eq!(s.dk_branches[1].values, vec![(2, 1.0)]);
    }

    proptest! {
        #[test]
        fn matches_pairwise_oracle(
            xs in proptest::collection::vec(-10.0f64..10.0, 1..20),
            ys in proptest::collection::vec(-10.0f64..10.0, 1..20),
        ) {
            prop_assert_eq!(hausdorff(&xs, &ys).unwrap(), brute(&xs, &ys));
        }
    }
}
