//! Operators on `H` and `H ⊕ H` described by their matrix entries in a fixed
//! orthonormal basis, and their finite sections.
//!
//! Every model has finite bandwidth, so any entry of a composite (including
//! products) is an exact finite sum and truncations never see boundary
//! effects from the infinite tail.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Formula;
use crate::matrix::{sym_eigvals, DenseMatrix};

/// Relative commutator tolerance for commuting-pair checks.
pub const DEFAULT_CTOL: f64 = 1e-10;
pub const DEFAULT_SCHEDULE_CAP: usize = 2000;
pub const DEFAULT_SWEEP_SCHEDULE: [usize; 7] = [5, 10, 25, 50, 100, 250, 500];

#[derive(Debug, Clone, PartialEq)]
pub enum HOperatorSpec {
    /// `diag(f(1), f(2), …)`.
    Diagonal { entry_formula: Formula },
    /// Entry `(i, j)` is `coeffs[|i − j|]`, zero past the end.
    Toeplitz { coeffs: Vec<f64> },
    /// `⊕_k [[a_k, b_k], [b_k, −a_k]]` with `b_k = √(1 − a_k²)`.
    Block2x2 { a_formula: Formula },
    /// `block ⊕ block ⊕ …`.
    MatrixDirectSum { block: DenseMatrix },
    Scaled { factor: f64, inner: Box<HOperatorSpec> },
    Sum { a: Box<HOperatorSpec>, b: Box<HOperatorSpec> },
    /// `A·B`; symmetric only when the factors commute.
    Product {
        a: Box<HOperatorSpec>,
        b: Box<HOperatorSpec>,
        assume_commuting: bool,
    },
}

impl HOperatorSpec {
    pub fn diagonal(formula: &str) -> Result<Self> {
        Ok(Self::Diagonal {
            entry_formula: Formula::parse(formula)?,
        })
    }

    pub fn toeplitz(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Spec("toeplitz needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Spec("toeplitz coefficients must be finite".into()));
        }
        Ok(Self::Toeplitz { coeffs })
    }

    pub fn block2x2(a_formula: &str) -> Result<Self> {
        Ok(Self::Block2x2 {
            a_formula: Formula::parse(a_formula)?,
        })
    }

    pub fn matrix_direct_sum(block: DenseMatrix) -> Result<Self> {
        block.require_square()?;
        let allowed = 1e-12 * block.norm_inf();
        let asymmetry = block.asymmetry();
        if asymmetry > allowed {
            return Err(Error::NotSymmetric { asymmetry, allowed });
        }
        Ok(Self::MatrixDirectSum {
            block: block.symmetrized(),
        })
    }

    pub fn scaled(factor: f64, inner: HOperatorSpec) -> Result<Self> {
        if !factor.is_finite() {
            return Err(Error::Spec("scale factor must be finite".into()));
        }
        Ok(Self::Scaled {
            factor,
            inner: Box::new(inner),
        })
    }

    pub fn sum(a: HOperatorSpec, b: HOperatorSpec) -> Self {
        Self::Sum {
            a: Box::new(a),
            b: Box::new(b),
        }
    }

    pub fn product(a: HOperatorSpec, b: HOperatorSpec, assume_commuting: bool) -> Self {
        Self::Product {
            a: Box::new(a),
            b: Box::new(b),
            assume_commuting,
        }
    }

    /// Largest `|i − j|` with a possibly nonzero entry.
    pub fn bandwidth(&self) -> usize {
        match self {
            Self::Diagonal { .. } => 0,
            Self::Toeplitz { coeffs } => coeffs.len() - 1,
            Self::Block2x2 { .. } => 1,
            Self::MatrixDirectSum { block } => block.rows() - 1,
            Self::Scaled { inner, .. } => inner.bandwidth(),
            Self::Sum { a, b } => a.bandwidth().max(b.bandwidth()),
            Self::Product { a, b, .. } => a.bandwidth() + b.bandwidth(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.bandwidth() == 0
    }

    /// Matrix entry at zero-based position `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        match self {
            Self::Diagonal { entry_formula } => {
                if i == j {
                    Ok(entry_formula.eval(i as u64 + 1)?)
                } else {
                    Ok(0.0)
                }
            }
            Self::Toeplitz { coeffs } => Ok(coeffs.get(i.abs_diff(j)).copied().unwrap_or(0.0)),
            Self::Block2x2 { a_formula } => {
                if i / 2 != j / 2 {
                    return Ok(0.0);
                }
                let k = (i / 2) as u64 + 1;
                let a = a_formula.eval(k)?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::Spec(format!(
                        "block2x2 needs a_k in (0, 1), got a_{k} = {a}"
                    )));
                }
                Ok(match (i % 2, j % 2) {
                    (0, 0) => a,
                    (1, 1) => -a,
                    _ => (1.0 - a * a).sqrt(),
                })
            }
            Self::MatrixDirectSum { block } => {
                let s = block.rows();
                if i / s != j / s {
                    Ok(0.0)
                } else {
                    Ok(block[(i % s, j % s)])
                }
            }
            Self::Scaled { factor, inner } => Ok(factor * inner.entry(i, j)?),
            Self::Sum { a, b } => Ok(a.entry(i, j)? + b.entry(i, j)?),
            Self::Product { a, b, .. } => {
                let (wa, wb) = (a.bandwidth(), b.bandwidth());
                let lo = i.saturating_sub(wa).max(j.saturating_sub(wb));
                let hi = (i + wa).min(j + wb);
                let mut acc = 0.0;
                for k in lo..=hi {
                    acc += a.entry(i, k)? * b.entry(k, j)?;
                }
                Ok(acc)
            }
        }
    }

    /// Symbol range estimate; only defined for Toeplitz models.
    pub fn symbol_range(&self, samples: usize) -> Result<(f64, f64)> {
        match self {
            Self::Toeplitz { coeffs } => symbol_range(coeffs, samples),
            _ => Err(Error::Spec("symbol range needs a toeplitz spec".into())),
        }
    }

    fn check_products(&self, n: usize, ctol: f64) -> Result<()> {
        match self {
            Self::Diagonal { .. }
            | Self::Toeplitz { .. }
            | Self::Block2x2 { .. }
            | Self::MatrixDirectSum { .. } => Ok(()),
            Self::Scaled { inner, .. } => inner.check_products(n, ctol),
            Self::Sum { a, b } => {
                a.check_products(n, ctol)?;
                b.check_products(n, ctol)
            }
            Self::Product {
                a,
                b,
                assume_commuting,
            } => {
                a.check_products(n, ctol)?;
                b.check_products(n, ctol)?;
                let an = truncate_h(a, n)?;
                let bn = truncate_h(b, n)?;
                check_commuting(&an, &bn, ctol, *assume_commuting).map(|_| ())
            }
        }
    }
}

/// Min and max of `a(t) = a₀ + 2·Σ a_k cos(kt)` over `samples` equally spaced
/// points of `[−π, π]`, an estimate of the essential range of a continuous
/// symbol.
pub fn symbol_range(coeffs: &[f64], samples: usize) -> Result<(f64, f64)> {
    if samples < 64 {
        return Err(Error::InvalidArgument(format!(
            "symbol_range needs at least 64 samples, got {samples}"
        )));
    }
    if coeffs.is_empty() {
        return Err(Error::Spec("toeplitz needs at least one coefficient".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..samples {
        let t = -PI + 2.0 * PI * j as f64 / (samples - 1) as f64;
        let v = coeffs[0]
            + 2.0
                * coeffs[1..]
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * ((k + 1) as f64 * t).cos())
                    .sum::<f64>();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// `‖ab − ba‖_F / (‖a‖_F·‖b‖_F)`, zero when either factor vanishes.
pub fn commutation_defect(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let c = a.matmul(b)?.sub(&b.matmul(a)?)?;
    let scale = a.frobenius() * b.frobenius();
    Ok(if scale > 0.0 { c.frobenius() / scale } else { 0.0 })
}

/// Fails with [`Error::NotCommuting`] above `ctol` unless `assume` is set,
/// in which case the defect is only logged.
pub fn check_commuting(a: &DenseMatrix, b: &DenseMatrix, ctol: f64, assume: bool) -> Result<f64> {
    let defect = commutation_defect(a, b)?;
    if defect > ctol {
        if assume {
            log::warn!("commutator {defect:e} exceeds {ctol:e}; continuing as declared commuting");
        } else {
            return Err(Error::NotCommuting { defect });
        }
    }
    Ok(defect)
}

pub(crate) fn require_spd(m: &DenseMatrix) -> Result<()> {
    if m.cholesky().is_some() {
        return Ok(());
    }
    let min_eig = sym_eigvals(m)?.first().copied().unwrap_or(f64::NAN);
    Err(Error::NotPositiveDefinite { min_eig })
}

/// Leading `n×n` section, exactly symmetric.
pub fn truncate_h(spec: &HOperatorSpec, n: usize) -> Result<DenseMatrix> {
    truncate_h_with(spec, n, DEFAULT_CTOL)
}

pub fn truncate_h_with(spec: &HOperatorSpec, n: usize, ctol: f64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation order must be positive".into()));
    }
    spec.check_products(n, ctol)?;
    let w = spec.bandwidth();
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n.min(i + w + 1) {
            let v = spec.entry(i, j)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub enum HHOperatorSpec {
    /// `[[A, 0], [0, B]]`.
    ClassA {
        a: HOperatorSpec,
        b: HOperatorSpec,
        assume_commuting: bool,
    },
    /// `[[A, B], [B, A]]`.
    ClassB {
        a: HOperatorSpec,
        b: HOperatorSpec,
        assume_commuting: bool,
    },
    /// `[[A, 0], [0, A]]`.
    Doubled { a: HOperatorSpec },
    /// A fixed finite matrix of even order.
    Explicit { t: DenseMatrix },
}

impl HHOperatorSpec {
    pub fn explicit(t: DenseMatrix) -> Result<Self> {
        crate::symplectic::half_dim(&t)?;
        let allowed = 1e-12 * t.norm_inf();
        let asymmetry = t.asymmetry();
        if asymmetry > allowed {
            return Err(Error::NotSymmetric { asymmetry, allowed });
        }
        Ok(Self::Explicit { t: t.symmetrized() })
    }

    /// Half-dimension of an explicit matrix; `None` for infinite models.
    pub fn fixed_half_dim(&self) -> Option<usize> {
        match self {
            Self::Explicit { t } => Some(t.rows() / 2),
            _ => None,
        }
    }
}

/// The `2n×2n` section `P₂ₙ T P₂ₙ` in block order.
pub fn truncate_hh(spec: &HHOperatorSpec, n: usize) -> Result<DenseMatrix> {
    truncate_hh_with(spec, n, DEFAULT_CTOL)
}

pub fn truncate_hh_with(spec: &HHOperatorSpec, n: usize, ctol: f64) -> Result<DenseMatrix> {
    match spec {
        HHOperatorSpec::ClassA {
            a,
            b,
            assume_commuting,
        } => {
            let an = truncate_h_with(a, n, ctol)?;
            let bn = truncate_h_with(b, n, ctol)?;
            check_commuting(&an, &bn, ctol, *assume_commuting)?;
            require_spd(&an)?;
            require_spd(&bn)?;
            Ok(DenseMatrix::block_diag(&an, &bn))
        }
        HHOperatorSpec::ClassB {
            a,
            b,
            assume_commuting,
        } => {
            let an = truncate_h_with(a, n, ctol)?;
            let bn = truncate_h_with(b, n, ctol)?;
            let plus = an.add(&bn)?;
            let minus = an.sub(&bn)?;
            check_commuting(&plus, &minus, ctol, *assume_commuting)?;
            require_spd(&plus)?;
            require_spd(&minus)?;
            DenseMatrix::from_blocks(&an, &bn, &bn, &an)
        }
        HHOperatorSpec::Doubled { a } => {
            let an = truncate_h_with(a, n, ctol)?;
            require_spd(&an)?;
            Ok(DenseMatrix::block_diag(&an, &an))
        }
        HHOperatorSpec::Explicit { t } => {
            let half = t.rows() / 2;
            if n == 0 || n > half {
                return Err(Error::InvalidArgument(format!(
                    "explicit matrix has half-dimension {half}, cannot truncate to {n}"
                )));
            }
            if n == half {
                return Ok(t.clone());
            }
            let idx: Vec<usize> = (0..n).chain(half..half + n).collect();
            Ok(t.select(&idx, &idx))
        }
    }
}

/// Strictly increasing half-dimensions at which an operator is truncated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TruncationSchedule {
    ns: Vec<usize>,
}

impl TruncationSchedule {
    pub fn new(ns: Vec<usize>) -> Result<Self> {
        Self::with_cap(ns, DEFAULT_SCHEDULE_CAP)
    }

    pub fn with_cap(ns: Vec<usize>, cap: usize) -> Result<Self> {
        if ns.is_empty() {
            return Err(Error::Schedule("schedule is empty".into()));
        }
        if ns[0] == 0 {
            return Err(Error::Schedule("schedule entries must be positive".into()));
        }
        if let Some(w) = ns.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Schedule(format!(
                "schedule must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let last = ns[ns.len() - 1];
        if last > cap {
            return Err(Error::Schedule(format!("{last} exceeds the cap of {cap}")));
        }
        Ok(Self { ns })
    }

    /// Parses `"5,10,25"`.
    pub fn parse(s: &str) -> Result<Self> {
        let ns = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Schedule(format!("'{t}' is not a positive integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ns)
    }

    pub fn default_sweep() -> Self {
        Self {
            ns: DEFAULT_SWEEP_SCHEDULE.to_vec(),
        }
    }

    pub fn ns(&self) -> &[usize] {
        &self.ns
    }

    pub fn len(&self) -> usize {
        self.ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ns.is_empty()
    }

    pub fn last(&self) -> usize {
        self.ns[self.ns.len() - 1]
    }
}

impl TryFrom<Vec<usize>> for TruncationSchedule {
    type Error = Error;

    fn try_from(ns: Vec<usize>) -> Result<Self> {
        Self::new(ns)
    }
}

impl From<TruncationSchedule> for Vec<usize> {
    fn from(s: TruncationSchedule) -> Self {
        s.ns
    }
}

/// User-declared facts about the infinite operator that finite sections
/// cannot establish. Carried through to reports untouched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub essential_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub essential_spectrum_connected: Option<bool>,
    /// Number of eigenvalues outside the essential range, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    H(HOperatorSpec),
    HH(HHOperatorSpec),
}

/// A parsed operator spec document.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub spec: OperatorSpec,
    pub annotations: Option<Annotations>,
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text)?;
        let annotations = raw.annotations.clone();
        let spec = match raw.space.as_deref() {
            Some("H") => OperatorSpec::H(h_from_raw(raw, "$")?),
            Some("HH") => OperatorSpec::HH(hh_from_raw(raw)?),
            Some(other) => {
                return Err(Error::Spec(format!(
                    "space must be \"H\" or \"HH\", got \"{other}\""
                )))
            }
            None => return Err(Error::Spec("missing \"space\"".into())),
        };
        Ok(Self { spec, annotations })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let mut raw = match &self.spec {
            OperatorSpec::H(h) => {
                let mut r = h_to_raw(h);
                r.space = Some("H".into());
                r
            }
            OperatorSpec::HH(hh) => hh_to_raw(hh),
        };
        raw.annotations = self.annotations.clone();
        serde_json::to_string_pretty(&raw).expect("spec serializes")
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    space: Option<String>,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry_formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Box<RawSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<Box<RawSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assume_commuting: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotations: Option<Annotations>,
}

impl RawSpec {
    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |set: bool, k: &'static str| {
            if set {
                keys.push(k)
            }
        };
        mark(self.entry_formula.is_some(), "entry_formula");
        mark(self.coeffs.is_some(), "coeffs");
        mark(self.a.is_some(), "a");
        mark(self.b.is_some(), "b");
        mark(self.block.is_some(), "block");
        mark(self.matrix.is_some(), "matrix");
        mark(self.factor.is_some(), "factor");
        mark(self.assume_commuting.is_some(), "assume_commuting");
        keys
    }

    /// Rejects keys the kind does not use.
    fn only(&self, path: &str, allowed: &[&str]) -> Result<()> {
        match self.present().into_iter().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::Spec(format!(
                "{path}: key \"{k}\" is not used by kind \"{}\"",
                self.kind
            ))),
            None => Ok(()),
        }
    }
}

fn missing(path: &str, kind: &str, key: &str) -> Error {
    Error::Spec(format!("{path}: kind \"{kind}\" requires \"{key}\""))
}

fn h_from_raw(raw: RawSpec, path: &str) -> Result<HOperatorSpec> {
    if path != "$" {
        if let Some(space) = raw.space.as_deref().filter(|s| *s != "H") {
            return Err(Error::Spec(format!(
                "{path}: nested operators act on H, got space \"{space}\""
            )));
        }
        if raw.annotations.is_some() {
            return Err(Error::Spec(format!("{path}: annotations belong at top level")));
        }
    }
    let kind = raw.kind.clone();
    let need = |key: &str| missing(path, &kind, key);
    let nested = |r: Option<Box<RawSpec>>, key: &str| -> Result<HOperatorSpec> {
        let r = r.ok_or_else(|| missing(path, &kind, key))?;
        h_from_raw(*r, &format!("{path}.{key}"))
    };
    match kind.as_str() {
        "diagonal" => {
            raw.only(path, &["entry_formula"])?;
            HOperatorSpec::diagonal(&raw.entry_formula.ok_or_else(|| need("entry_formula"))?)
        }
        "toeplitz" => {
            raw.only(path, &["coeffs"])?;
            HOperatorSpec::toeplitz(raw.coeffs.ok_or_else(|| need("coeffs"))?)
        }
        "block2x2" => {
            raw.only(path, &["entry_formula"])?;
            HOperatorSpec::block2x2(&raw.entry_formula.ok_or_else(|| need("entry_formula"))?)
        }
        "matrix_direct_sum" => {
            raw.only(path, &["block"])?;
            let rows = raw.block.ok_or_else(|| need("block"))?;
            HOperatorSpec::matrix_direct_sum(DenseMatrix::from_rows(&rows)?)
        }
        "scaled" => {
            raw.only(path, &["factor", "a"])?;
            let factor = raw.factor.ok_or_else(|| need("factor"))?;
            HOperatorSpec::scaled(factor, nested(raw.a, "a")?)
        }
        "sum" => {
            raw.only(path, &["a", "b"])?;
            Ok(HOperatorSpec::sum(nested(raw.a, "a")?, nested(raw.b, "b")?))
        }
        "product" => {
            raw.only(path, &["a", "b", "assume_commuting"])?;
            let assume = raw.assume_commuting.unwrap_or(false);
            Ok(HOperatorSpec::product(
                nested(raw.a, "a")?,
                nested(raw.b, "b")?,
                assume,
            ))
        }
        "class_a" | "class_b" | "doubled" | "explicit" => Err(Error::Spec(format!(
            "{path}: kind \"{kind}\" acts on HH, not H"
        ))),
        other => Err(Error::Spec(format!("{path}: unknown kind \"{other}\""))),
    }
}

fn hh_from_raw(raw: RawSpec) -> Result<HHOperatorSpec> {
    let path = "$";
    let kind = raw.kind.clone();
    let nested = |r: Option<Box<RawSpec>>, key: &str| -> Result<HOperatorSpec> {
        let r = r.ok_or_else(|| missing(path, &kind, key))?;
        h_from_raw(*r, &format!("$.{key}"))
    };
    match kind.as_str() {
        "class_a" | "class_b" => {
            raw.only(path, &["a", "b", "assume_commuting"])?;
            let assume_commuting = raw.assume_commuting.unwrap_or(false);
            let a = nested(raw.a, "a")?;
            let b = nested(raw.b, "b")?;
            Ok(if kind == "class_a" {
                HHOperatorSpec::ClassA {
                    a,
                    b,
                    assume_commuting,
                }
            } else {
                HHOperatorSpec::ClassB {
                    a,
                    b,
                    assume_commuting,
                }
            })
        }
        "doubled" => {
            raw.only(path, &["a"])?;
            Ok(HHOperatorSpec::Doubled {
                a: nested(raw.a, "a")?,
            })
        }
        "explicit" => {
            raw.only(path, &["matrix"])?;
            let rows = raw.matrix.ok_or_else(|| missing(path, &kind, "matrix"))?;
            HHOperatorSpec::explicit(DenseMatrix::from_rows(&rows)?)
        }
        "diagonal" | "toeplitz" | "block2x2" | "matrix_direct_sum" | "scaled" | "sum"
        | "product" => Err(Error::Spec(format!(
            "$: kind \"{kind}\" acts on H; use space \"H\""
        ))),
        other => Err(Error::Spec(format!("$: unknown kind \"{other}\""))),
    }
}

fn raw_kind(kind: &str) -> RawSpec {
    RawSpec {
        kind: kind.into(),
        ..RawSpec::default()
    }
}

fn h_to_raw(spec: &HOperatorSpec) -> RawSpec {
    match spec {
        HOperatorSpec::Diagonal { entry_formula } => RawSpec {
            entry_formula: Some(entry_formula.source().into()),
            ..raw_kind("diagonal")
        },
        HOperatorSpec::Toeplitz { coeffs } => RawSpec {
            coeffs: Some(coeffs.clone()),
            ..raw_kind("toeplitz")
        },
        HOperatorSpec::Block2x2 { a_formula } => RawSpec {
            entry_formula: Some(a_formula.source().into()),
            ..raw_kind("block2x2")
        },
        HOperatorSpec::MatrixDirectSum { block } => RawSpec {
            block: Some(block.to_rows()),
            ..raw_kind("matrix_direct_sum")
        },
        HOperatorSpec::Scaled { factor, inner } => RawSpec {
            factor: Some(*factor),
            a: Some(Box::new(h_to_raw(inner))),
            ..raw_kind("scaled")
        },
        HOperatorSpec::Sum { a, b } => RawSpec {
            a: Some(Box::new(h_to_raw(a))),
            b: Some(Box::new(h_to_raw(b))),
            ..raw_kind("sum")
        },
        HOperatorSpec::Product {
            a,
            b,
            assume_commuting,
        } => RawSpec {
            a: Some(Box::new(h_to_raw(a))),
            b: Some(Box::new(h_to_raw(b))),
            assume_commuting: Some(*assume_commuting),
            ..raw_kind("product")
        },
    }
}

fn hh_to_raw(spec: &HHOperatorSpec) -> RawSpec {
    let mut raw = match spec {
        HHOperatorSpec::ClassA {
            a,
            b,
            assume_commuting,
        }
        | HHOperatorSpec::ClassB {
            a,
            b,
            assume_commuting,
        } => RawSpec {
            a: Some(Box::new(h_to_raw(a))),
            b: Some(Box::new(h_to_raw(b))),
            assume_commuting: Some(*assume_commuting),
            ..raw_kind(if matches!(spec, HHOperatorSpec::ClassA { .. }) {
                "class_a"
            } else {
                "class_b"
            })
        },
        HHOperatorSpec::Doubled { a } => RawSpec {
            a: Some(Box::new(h_to_raw(a))),
            ..raw_kind("doubled")
        },
        HHOperatorSpec::Explicit { t } => RawSpec {
            matrix: Some(t.to_rows()),
            ..raw_kind("explicit")
        },
    };
    raw.space = Some("HH".into());
    raw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{class_b_rotation, symplectic_conjugate};
    use proptest::prelude::*;

    fn toeplitz(c: &[f64]) -> HOperatorSpec {
        HOperatorSpec::toeplitz(c.to_vec()).unwrap()
    }

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(
            truncate_h(&toeplitz(&[2.0, 0.5]), 3).unwrap(),
            m(&[&[2.0, 0.5, 0.0], &[0.5, 2.0, 0.5], &[0.0, 0.5, 2.0]])
        );
        let diag = HOperatorSpec::diagonal("n").unwrap();
        assert_eq!(truncate_h(&diag, 3).unwrap(), DenseMatrix::from_diag(&[1.0, 2.0, 3.0]));
        let mds = HOperatorSpec::matrix_direct_sum(m(&[&[4.0, 2.0], &[2.0, 2.0]])).unwrap();
        assert_eq!(
            truncate_h(&mds, 3).unwrap(),
            m(&[&[4.0, 2.0, 0.0], &[2.0, 2.0, 0.0], &[0.0, 0.0, 4.0]])
        );
        assert!(matches!(truncate_h(&diag, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn block2x2_blocks_have_eigenvalues_plus_minus_one() {
        let spec = HOperatorSpec::block2x2("1/(n+1)").unwrap();
        let t = truncate_h(&spec, 6).unwrap();
        for k in 0..3 {
            let blk = t.select(&[2 * k, 2 * k + 1], &[2 * k, 2 * k + 1]);
            let ev = sym_eigvals(&blk).unwrap();
            assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        }
        let odd = truncate_h(&spec, 5).unwrap();
        assert_eq!(odd[(4, 4)], 0.25);
        let bad = HOperatorSpec::block2x2("n").unwrap();
        assert!(matches!(truncate_h(&bad, 2), Err(Error::Spec(_))));
    }

    #[test]
    fn composites() {
        let a = toeplitz(&[2.0, 0.5]);
        let b = toeplitz(&[2.0, -0.5]);
        let prod = HOperatorSpec::product(a.clone(), b.clone(), false);
        assert_eq!(prod.bandwidth(), 2);
        // Interior rows follow (2 + cos t)(2 − cos t) = 3.5 − ½cos 2t; the first row misses one term.
        let p = truncate_h(&prod, 6).unwrap();
        assert_eq!(p[(2, 2)], 3.5);
        assert_eq!(p[(2, 4)], -0.25);
        assert_eq!(p[(0, 0)], 3.75);
        let sum = HOperatorSpec::sum(a.clone(), HOperatorSpec::scaled(-1.0, b).unwrap());
        let s = truncate_h(&sum, 4).unwrap();
        assert_eq!(s, truncate_h(&toeplitz(&[0.0, 1.0]), 4).unwrap());

        let z = HOperatorSpec::matrix_direct_sum(m(&[&[1.0, 2.0], &[2.0, 0.0]])).unwrap();
        let d = HOperatorSpec::diagonal("n").unwrap();
        let bad = HOperatorSpec::product(z.clone(), d.clone(), false);
        assert!(matches!(truncate_h(&bad, 4), Err(Error::NotCommuting { .. })));
        let declared = HOperatorSpec::product(z, d, true);
        let t = truncate_h(&declared, 4).unwrap();
        assert_eq!(t.asymmetry(), 0.0);
    }

    #[test]
    fn hh_truncations() {
        let a = toeplitz(&[2.0, 0.5]);
        let t = truncate_hh(&HHOperatorSpec::Doubled { a: a.clone() }, 5).unwrap();
        let d = crate::symplectic::symplectic_eigenvalues(&t).unwrap();
        let table = [1.13397, 1.5, 2.0, 2.5, 2.86603];
        assert!(d.iter().zip(table).all(|(x, y)| (x - y).abs() < 5e-6));

        let class_b = HHOperatorSpec::ClassB {
            a: HOperatorSpec::diagonal("1 + 1/(2*(n+1)^2) + 1/(2*(n+1)^3)").unwrap(),
            b: HOperatorSpec::diagonal("1/(2*(n+1)^2) - 1/(2*(n+1)^3)").unwrap(),
            assume_commuting: false,
        };
        let t = truncate_hh(&class_b, 5).unwrap();
        let d = crate::symplectic::symplectic_eigenvalues(&t).unwrap();
        let table = [1.01613779, 1.0238749924, 1.0387981337, 1.0734353145, 1.1858541226];
        assert!(d.iter().zip(table).all(|(x, y)| (x - y).abs() < 1e-9), "{d:?}");

        let e = DenseMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0]);
        let ex = HHOperatorSpec::explicit(e.clone()).unwrap();
        assert_eq!(truncate_hh(&ex, 2).unwrap(), e);
        assert_eq!(truncate_hh(&ex, 1).unwrap(), DenseMatrix::from_diag(&[1.0, 3.0]));
        assert!(truncate_hh(&ex, 3).is_err());
        assert!(matches!(
            HHOperatorSpec::explicit(DenseMatrix::identity(3)),
            Err(Error::OddDimension(3))
        ));

        let not_spd = HHOperatorSpec::Doubled {
            a: toeplitz(&[1.0, 1.0]),
        };
        assert!(matches!(
            truncate_hh(&not_spd, 4),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn class_b_reduction() {
        let spec = HHOperatorSpec::ClassB {
            a: toeplitz(&[6.0, 3.0, 0.5]),
            b: toeplitz(&[5.0, 3.0, 0.5]),
            assume_commuting: false,
        };
        let n = 7;
        let t = truncate_hh(&spec, n).unwrap();
        let out = symplectic_conjugate(&t, &class_b_rotation(n)).unwrap();
        let plus = truncate_h(&toeplitz(&[11.0, 6.0, 1.0]), n).unwrap();
        let expected = DenseMatrix::block_diag(&plus, &DenseMatrix::identity(n));
        assert!(out.sub(&expected).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn symbol_ranges() {
        let (lo, hi) = symbol_range(&[2.0, 0.5], 1024).unwrap();
        assert!((lo - 1.0).abs() < 1e-4 && (hi - 3.0).abs() < 1e-4);
        assert_eq!(symbol_range(&[1.5], 64).unwrap(), (1.5, 1.5));
        let (lo, hi) = symbol_range(&[11.0, 6.0, 1.0], 1024).unwrap();
        assert!((lo - 1.0).abs() < 1e-3 && (hi - 25.0).abs() < 1e-3);
        assert!(symbol_range(&[1.0], 63).is_err());
        assert!(HOperatorSpec::diagonal("n").unwrap().symbol_range(128).is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(TruncationSchedule::parse("5, 10,25").unwrap().ns(), &[5, 10, 25]);
        assert!(TruncationSchedule::parse("").is_err());
        assert!(TruncationSchedule::parse("5,5").is_err());
        assert!(TruncationSchedule::parse("10,5").is_err());
        assert!(TruncationSchedule::parse("0,5").is_err());
        assert!(TruncationSchedule::parse("5,x").is_err());
        assert!(TruncationSchedule::new(vec![2001]).is_err());
        assert!(TruncationSchedule::with_cap(vec![3000], 4000).is_ok());
        assert_eq!(TruncationSchedule::default_sweep().last(), 500);
        let s: TruncationSchedule = serde_json::from_str("[1,2]").unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), "[1,2]");
        assert!(serde_json::from_str::<TruncationSchedule>("[2,1]").is_err());
    }

    #[test]
    fn json_specs() {
        let text = r#"{"space": "HH", "kind": "class_b",
            "a": {"kind": "diagonal", "entry_formula": "1 + 1/(2*(n+1)^2) + 1/(2*(n+1)^3)"},
            "b": {"kind": "diagonal", "entry_formula": "1/(2*(n+1)^2) - 1/(2*(n+1)^3)"},
            "annotations": {"essential_range": [1, 1], "note": "diagonal"}}"#;
        let file = SpecFile::from_json(text).unwrap();
        assert!(matches!(file.spec, OperatorSpec::HH(HHOperatorSpec::ClassB { .. })));
        assert_eq!(file.annotations.as_ref().unwrap().essential_range, Some([1.0, 1.0]));
        assert_eq!(SpecFile::from_json(&file.to_json()).unwrap(), file);

        let h = SpecFile::from_json(r#"{"space":"H","kind":"toeplitz","coeffs":[2,0.5]}"#).unwrap();
        assert_eq!(h.spec, OperatorSpec::H(toeplitz(&[2.0, 0.5])));
        assert_eq!(SpecFile::from_json(&h.to_json()).unwrap(), h);

        let rejects = [
            r#"{"space":"H","kind":"toeplitz","coeffs":[1],"extra":1}"#,
            r#"{"kind":"toeplitz","coeffs":[1]}"#,
            r#"{"space":"X","kind":"toeplitz","coeffs":[1]}"#,
            r#"{"space":"H","kind":"toeplitz","coeffs":[1],"entry_formula":"n"}"#,
            r#"{"space":"H","kind":"toeplitz"}"#,
            r#"{"space":"H","kind":"doubled","a":{"kind":"diagonal","entry_formula":"n"}}"#,
            r#"{"space":"HH","kind":"doubled","a":{"kind":"class_a"}}"#,
            r#"{"space":"HH","kind":"doubled","a":{"space":"HH","kind":"diagonal","entry_formula":"n"}}"#,
            r#"{"space":"HH","kind":"explicit","matrix":[[1,0,0],[0,1,0],[0,0,1]]}"#,
            r#"{"space":"H","kind":"spiral"}"#,
            r#"{"space":"H","kind":"toeplitz","coeffs":[]}"#,
        ];
        for r in rejects {
            assert!(SpecFile::from_json(r).is_err(), "{r}");
        }
        let bad_formula = SpecFile::from_json(r#"{"space":"H","kind":"diagonal","entry_formula":"n+"}"#);
        assert!(matches!(bad_formula, Err(Error::Parse(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn nesting_and_symmetry(
            coeffs in proptest::collection::vec(-2.0f64..2.0, 1..5),
            n in 1usize..30,
            extra in 1usize..10,
        ) {
            let specs = [
                toeplitz(&coeffs),
                HOperatorSpec::diagonal("1 + 1/n^2").unwrap(),
                HOperatorSpec::block2x2("1/(n+1)").unwrap(),
                HOperatorSpec::sum(toeplitz(&coeffs), HOperatorSpec::block2x2("1/2").unwrap()),
            ];
            for spec in &specs {
                let small = truncate_h(spec, n).unwrap();
                let big = truncate_h(spec, n + extra).unwrap();
                prop_assert_eq!(big.leading(n).unwrap(), small.clone());
                prop_assert_eq!(small.asymmetry(), 0.0);
            }
        }
    }
}
