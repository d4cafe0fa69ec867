//! Numerical evidence for the three Gaussian covariance operator conditions
//! on `[[A, 0], [0, B]]` and `[[A, B], [B, A]]`.
//!
//! Both classes reduce to a commuting pair `(P, Q)`: `(A, B)` for class A and
//! `(A + B, A − B)` for class B. The conditions are then
//! 1. `P ≥ Q⁻¹`,
//! 2. `P − I` and `Q − I` Hilbert–Schmidt,
//! 3. `PQ − I` trace class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{inv_spd, sym_eigvals};
use crate::operator::{
    truncate_h, truncate_hh_with, HHOperatorSpec, HOperatorSpec, TruncationSchedule, DEFAULT_CTOL,
};

/// Smallest eigenvalue accepted as nonnegative in condition 1.
pub const POSITIVITY_FLOOR: f64 = -1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "evidence-only")]
    EvidenceOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcoParams {
    /// Truncations for condition 1 and for trace norms of banded products.
    pub schedule: TruncationSchedule,
    pub hs_tail_tol: f64,
    pub trace_tail_tol: f64,
    pub stagnation_window: usize,
    /// Entrywise sums run to `N = 2^sum_horizon_log2`.
    pub sum_horizon_log2: u32,
    /// Estimated decay exponent at or above which a series counts as summable.
    pub pass_exponent: f64,
    /// At or below this the series counts as divergent.
    pub fail_exponent: f64,
    pub ctol: f64,
}

impl Default for GcoParams {
    fn default() -> Self {
        Self {
            schedule: TruncationSchedule::default_sweep(),
            hs_tail_tol: 1e-10,
            trace_tail_tol: 1e-10,
            stagnation_window: 3,
            sum_horizon_log2: 16,
            pass_exponent: 1.2,
            fail_exponent: 1.05,
            ctol: DEFAULT_CTOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cond1Report {
    pub verdict: Verdict,
    /// `(n, λ_min(Pₙ − Qₙ⁻¹))`.
    pub min_eig_series: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cond2Report {
    pub verdict: Verdict,
    /// `(N, Σ_{i,j ≤ N} ((P−I)²_ij + (Q−I)²_ij))`.
    pub hs_partial_sums: Vec<(usize, f64)>,
    pub decay_exponents: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumMethod {
    /// `Σ_{k ≤ N} |p_k q_k − 1|` for diagonal `P`, `Q`.
    Diagonal,
    /// Trace norms of `N×N` sections of `PQ − I`.
    Truncation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cond3Report {
    pub verdict: Verdict,
    pub method: SumMethod,
    pub trace_partial_sums: Vec<(usize, f64)>,
    pub decay_exponents: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcoReport {
    pub cond1: Cond1Report,
    pub cond2: Cond2Report,
    pub cond3: Cond3Report,
    pub overall: bool,
}

impl GcoReport {
    /// Fail if any condition fails, pass if all pass, otherwise evidence-only.
    pub fn verdict(&self) -> Verdict {
        let all = [self.cond1.verdict, self.cond2.verdict, self.cond3.verdict];
        if all.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if self.overall {
            Verdict::Pass
        } else {
            Verdict::EvidenceOnly
        }
    }
}

pub fn gco_check(spec: &HHOperatorSpec, params: &GcoParams) -> Result<GcoReport> {
    let (p, q) = reduce(spec)?;
    let window = params.stagnation_window;
    if window == 0 {
        return Err(Error::InvalidArgument("stagnation window must be positive".into()));
    }
    if params.schedule.len() < window + 1 {
        return Err(Error::Schedule(format!(
            "{} schedule points cannot cover a stagnation window of {window}",
            params.schedule.len()
        )));
    }
    if (params.sum_horizon_log2 as usize) < window + 1 || params.sum_horizon_log2 > 24 {
        return Err(Error::InvalidArgument(format!(
            "sum horizon 2^{} must lie between 2^{} and 2^24",
            params.sum_horizon_log2,
            window + 1
        )));
    }

    let cond1 = cond1(spec, &p, &q, params)?;
    let cond2 = cond2(&p, &q, params)?;
    let cond3 = if p.is_diagonal() && q.is_diagonal() {
        cond3_diagonal(&p, &q, params)?
    } else {
        cond3_truncated(&p, &q, params)?
    };
    let overall = [cond1.verdict, cond2.verdict, cond3.verdict]
        .iter()
        .all(|v| *v == Verdict::Pass);
    Ok(GcoReport {
        cond1,
        cond2,
        cond3,
        overall,
    })
}

fn reduce(spec: &HHOperatorSpec) -> Result<(HOperatorSpec, HOperatorSpec)> {
    match spec {
        HHOperatorSpec::ClassA { a, b, .. } => Ok((a.clone(), b.clone())),
        HHOperatorSpec::ClassB { a, b, .. } => Ok((
            HOperatorSpec::sum(a.clone(), b.clone()),
            HOperatorSpec::sum(a.clone(), HOperatorSpec::scaled(-1.0, b.clone())?),
        )),
        HHOperatorSpec::Doubled { a } => Ok((a.clone(), a.clone())),
        HHOperatorSpec::Explicit { .. } => Err(Error::Spec(
            "GCO conditions need a class_a, class_b or doubled spec".into(),
        )),
    }
}

/// `Qₙ⁻¹ ≤ (Q⁻¹)ₙ` for SPD `Q`, so a negative eigenvalue of `Pₙ − Qₙ⁻¹`
/// refutes `P ≥ Q⁻¹`; nonnegative ones only confirm it when `Q` is diagonal.
fn cond1(spec: &HHOperatorSpec, p: &HOperatorSpec, q: &HOperatorSpec, params: &GcoParams) -> Result<Cond1Report> {
    let mut series = Vec::with_capacity(params.schedule.len());
    for &n in params.schedule.ns() {
        // Validates commutation and positivity of the section.
        truncate_hh_with(spec, n, params.ctol)?;
        let pn = truncate_h(p, n)?;
        let qinv = inv_spd(&truncate_h(q, n)?)?;
        let lam = sym_eigvals(&pn.sub(&qinv)?.symmetrized())?[0];
        series.push((n, lam));
    }
    let verdict = if series.iter().any(|&(_, l)| l < POSITIVITY_FLOOR) {
        Verdict::Fail
    } else if q.is_diagonal() {
        Verdict::Pass
    } else {
        Verdict::EvidenceOnly
    };
    Ok(Cond1Report {
        verdict,
        min_eig_series: series,
    })
}

fn dyadic_points(log2: u32) -> Vec<usize> {
    (0..=log2).map(|j| 1usize << j).collect()
}

/// Partial sums at `points` of `Σ_{i < N} row(i)`, each block between
/// consecutive points summed on its own so increments carry no drift.
fn block_partial_sums(
    points: &[usize],
    row: impl Fn(usize) -> Result<f64>,
) -> Result<(Vec<(usize, f64)>, Vec<f64>)> {
    let mut increments = Vec::with_capacity(points.len() - 1);
    let mut total = (0..points[0]).map(&row).sum::<Result<f64>>()?;
    let mut sums = vec![(points[0], total)];
    for w in points.windows(2) {
        let inc = (w[0]..w[1]).map(&row).sum::<Result<f64>>()?;
        increments.push(inc);
        total += inc;
        sums.push((w[1], total));
    }
    Ok((sums, increments))
}

/// Contribution of index `i` to `Σ_{i,j ≤ N} (X − I)²_ij` when `N` grows past
/// `i`: the new diagonal entry plus both mirrored off-diagonal ones.
fn hs_row(x: &HOperatorSpec, i: usize) -> Result<f64> {
    let d = x.entry(i, i)? - 1.0;
    let mut acc = d * d;
    for j in i.saturating_sub(x.bandwidth())..i {
        let v = x.entry(i, j)?;
        acc += 2.0 * v * v;
    }
    Ok(acc)
}

fn cond2(p: &HOperatorSpec, q: &HOperatorSpec, params: &GcoParams) -> Result<Cond2Report> {
    let points = dyadic_points(params.sum_horizon_log2);
    let (sums, inc) = block_partial_sums(&points, |i| Ok(hs_row(p, i)? + hs_row(q, i)?))?;
    let (verdict, decay_exponents) = series_verdict(&points, &inc, params.hs_tail_tol, params);
    Ok(Cond2Report {
        verdict,
        hs_partial_sums: sums,
        decay_exponents,
    })
}

fn cond3_diagonal(p: &HOperatorSpec, q: &HOperatorSpec, params: &GcoParams) -> Result<Cond3Report> {
    let points = dyadic_points(params.sum_horizon_log2);
    let (sums, inc) = block_partial_sums(&points, |i| Ok((p.entry(i, i)? * q.entry(i, i)? - 1.0).abs()))?;
    let (verdict, decay_exponents) = series_verdict(&points, &inc, params.trace_tail_tol, params);
    Ok(Cond3Report {
        verdict,
        method: SumMethod::Diagonal,
        trace_partial_sums: sums,
        decay_exponents,
    })
}

/// Trace norms of sections of `PQ − I`. Sections of a compression never
/// have larger trace norm, so the sums are nondecreasing, but a tail that
/// looks summable is not a bound on the full operator: pass is reported as
/// evidence-only.
fn cond3_truncated(p: &HOperatorSpec, q: &HOperatorSpec, params: &GcoParams) -> Result<Cond3Report> {
    let product = HOperatorSpec::product(p.clone(), q.clone(), true);
    let mut sums = Vec::with_capacity(params.schedule.len());
    for &n in params.schedule.ns() {
        let x = truncate_h(&product, n)?.shift_diag(-1.0);
        let norm: f64 = sym_eigvals(&x)?.iter().map(|v| v.abs()).sum();
        sums.push((n, norm));
    }
    let points: Vec<usize> = params.schedule.ns().to_vec();
    let inc: Vec<f64> = sums.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let (mut verdict, decay_exponents) = series_verdict(&points, &inc, params.trace_tail_tol, params);
    if verdict == Verdict::Pass {
        verdict = Verdict::EvidenceOnly;
    }
    Ok(Cond3Report {
        verdict,
        method: SumMethod::Truncation,
        trace_partial_sums: sums,
        decay_exponents,
    })
}

/// Tail rule for a series of nonnegative terms observed through increments
/// `inc[j]` of its partial sums between `points[j]` and `points[j+1]`.
///
/// Pass when the last `window` increments are all below `tail_tol`.
/// Otherwise fit the local power law `term(k) ~ k^(-p)` between neighbouring
/// blocks: the increment per unit of `ln N` behaves like `m^(1−p)` at the
/// block's geometric midpoint `m`, so
/// `p = 1 − ln(c_{j+1}/c_j) / ln(m_{j+1}/m_j)`. Every estimate in the window
/// at or above `pass_exponent` passes, every one at or below
/// `fail_exponent` fails, anything else is evidence only.
fn series_verdict(points: &[usize], inc: &[f64], tail_tol: f64, params: &GcoParams) -> (Verdict, Vec<Option<f64>>) {
    let window = params.stagnation_window;
    let exponents: Vec<Option<f64>> = (0..inc.len().saturating_sub(1))
        .map(|j| {
            let rate = |j: usize| inc[j] / (points[j + 1] as f64 / points[j] as f64).ln();
            let mid = |j: usize| ((points[j] * points[j + 1]) as f64).sqrt();
            let (c0, c1) = (rate(j), rate(j + 1));
            if !(c0 > 0.0 && c1 > 0.0) {
                return None;
            }
            let p = 1.0 - (c1 / c0).ln() / (mid(j + 1) / mid(j)).ln();
            p.is_finite().then_some(p)
        })
        .collect();

    if inc.len() >= window && inc[inc.len() - window..].iter().all(|&d| d < tail_tol) {
        return (Verdict::Pass, exponents);
    }
    if exponents.len() < window {
        return (Verdict::EvidenceOnly, exponents);
    }
    let tail = &exponents[exponents.len() - window..];
    let verdict = if tail.iter().all(|p| p.is_some_and(|p| p >= params.pass_exponent)) {
        Verdict::Pass
    } else if tail.iter().all(|p| p.is_some_and(|p| p <= params.fail_exponent)) {
        Verdict::Fail
    } else {
        Verdict::EvidenceOnly
    };
    (verdict, exponents)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(f: &str) -> HOperatorSpec {
        HOperatorSpec::diagonal(f).unwrap()
    }

    fn small_params() -> GcoParams {
        GcoParams {
            schedule: TruncationSchedule::new(vec![5, 10, 25, 50]).unwrap(),
            ..GcoParams::default()
        }
    }

    fn example_class_b() -> HHOperatorSpec {
        HHOperatorSpec::ClassB {
            a: diag("1 + 1/(2*(n+1)^2) + 1/(2*(n+1)^3)"),
            b: diag("1/(2*(n+1)^2) - 1/(2*(n+1)^3)"),
            assume_commuting: false,
        }
    }

    #[test]
    fn diagonal_class_b_passes() {
        let r = gco_check(&example_class_b(), &small_params()).unwrap();
        assert!(r.min_positive());
        assert_eq!(r.cond1.verdict, Verdict::Pass);
        assert_eq!(r.cond2.verdict, Verdict::Pass);
        assert_eq!(r.cond3.verdict, Verdict::Pass);
        assert!(r.overall);
        assert_eq!(r.verdict(), Verdict::Pass);
        for s in [&r.cond2.hs_partial_sums, &r.cond3.trace_partial_sums] {
            assert!(s.windows(2).all(|w| w[1].1 >= w[0].1));
        }
        let p = r.cond3.decay_exponents.last().unwrap().unwrap();
        assert!((p - 2.0).abs() < 0.05, "{p}");
    }

    #[test]
    fn identity_pair_passes_with_zero_sums() {
        let spec = HHOperatorSpec::ClassA {
            a: diag("1"),
            b: diag("1"),
            assume_commuting: false,
        };
        let r = gco_check(&spec, &small_params()).unwrap();
        assert!(r.overall);
        assert!(r.cond2.hs_partial_sums.iter().all(|s| s.1 == 0.0));
        assert!(r.cond3.trace_partial_sums.iter().all(|s| s.1 == 0.0));
    }

    #[test]
    fn harmonic_tail_fails() {
        let spec = HHOperatorSpec::ClassA {
            a: diag("1 + 1/n"),
            b: diag("1"),
            assume_commuting: false,
        };
        let r = gco_check(&spec, &small_params()).unwrap();
        assert_eq!(r.cond1.verdict, Verdict::Pass);
        assert_eq!(r.cond2.verdict, Verdict::Pass);
        assert_eq!(r.cond3.verdict, Verdict::Fail);
        assert!(!r.overall);
        assert_eq!(r.verdict(), Verdict::Fail);
    }

    #[test]
    fn positivity_failure_is_detected() {
        // A − B⁻¹ = 1/2 − 1 < 0 on every index.
        let spec = HHOperatorSpec::ClassA {
            a: diag("1/2"),
            b: diag("1"),
            assume_commuting: false,
        };
        let r = gco_check(&spec, &small_params()).unwrap();
        assert_eq!(r.cond1.verdict, Verdict::Fail);
    }

    #[test]
    fn banded_specs_are_evidence_only() {
        // Tridiagonal Q: truncation and inversion do not commute.
        let spec = HHOperatorSpec::Doubled {
            a: HOperatorSpec::toeplitz(vec![2.0, 0.5]).unwrap(),
        };
        let r = gco_check(&spec, &small_params()).unwrap();
        assert_eq!(r.cond1.verdict, Verdict::EvidenceOnly);
        // Constant Toeplitz entries are not square summable.
        assert_eq!(r.cond2.verdict, Verdict::Fail);
        assert_eq!(r.cond3.method, SumMethod::Truncation);
        assert!(!r.overall);
    }

    #[test]
    fn rejected_inputs() {
        let ex = HHOperatorSpec::explicit(crate::matrix::DenseMatrix::identity(4)).unwrap();
        assert!(matches!(gco_check(&ex, &small_params()), Err(Error::Spec(_))));
        let short = GcoParams {
            schedule: TruncationSchedule::new(vec![5, 10]).unwrap(),
            ..GcoParams::default()
        };
        assert!(matches!(
            gco_check(&example_class_b(), &short),
            Err(Error::Schedule(_))
        ));
    }

    #[test]
    fn exponent_fit_recovers_power_law() {
        let points = dyadic_points(12);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let (_, inc) = block_partial_sums(&points, |i| Ok(((i + 1) as f64).powf(-p))).unwrap();
            let (_, exps) = series_verdict(&points, &inc, 0.0, &GcoParams::default());
            let last = exps.last().unwrap().unwrap();
            assert!((last - p).abs() < 0.01, "{p}: {last}");
        }
    }

    impl GcoReport {
        fn min_positive(&self) -> bool {
            self.cond1.min_eig_series.iter().all(|&(_, l)| l > 0.0)
        }
    }
}
