//! Symplectic form, symplectic eigenvalues and the Williamson normal form.
//!
//! Coordinates on `H ⊕ H` are block ordered (all first-component basis
//! vectors, then all second-component ones), so the symplectic form is
//! `J = [[0, I], [−I, 0]]`. An interleaved basis `(e₁,0), (0,e₁), …` is
//! related to this one by a permutation that maps one `J` onto the other.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sym_eig, sym_eig_with, sym_eigvals, DenseMatrix, JacobiOptions, SymEigResult};
use crate::sample::{rng, uniform_matrix};

/// Relative gap below which eigenvalues of `−K²` count as one cluster.
pub const PAIRING_TOL: f64 = 1e-7;

/// The standard symplectic form of half-dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticConvention {
    pub n: usize,
}

impl SymplecticConvention {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "half-dimension must be positive");
        Self { n }
    }

    pub fn j(&self) -> DenseMatrix {
        let n = self.n;
        let mut j = DenseMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            j[(i, n + i)] = 1.0;
            j[(n + i, i)] = -1.0;
        }
        j
    }

    /// `J·m`, computed by moving rows: `[m₂; −m₁]`.
    pub fn apply_left(&self, m: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = DenseMatrix::zeros(2 * n, m.cols());
        for i in 0..n {
            out.row_mut(i).copy_from_slice(m.row(n + i));
            for (o, x) in out.row_mut(n + i).iter_mut().zip(m.row(i)) {
                *o = -x;
            }
        }
        out
    }
}

/// Half-dimension of a square even-order matrix.
pub fn half_dim(m: &DenseMatrix) -> Result<usize> {
    let order = m.require_square()?;
    if order % 2 != 0 {
        return Err(Error::OddDimension(order));
    }
    Ok(order / 2)
}

/// `‖mᵀJm − J‖_F`.
pub fn symplectic_defect(m: &DenseMatrix) -> Result<f64> {
    let n = half_dim(m)?;
    let conv = SymplecticConvention::new(n);
    let jm = conv.apply_left(m);
    let mtjm = m.transpose().matmul(&jm)?;
    Ok(mtjm.sub(&conv.j())?.frobenius())
}

pub fn is_symplectic(m: &DenseMatrix, tol: f64) -> Result<bool> {
    Ok(symplectic_defect(m)? <= tol)
}

/// Eigendecomposition of `t` plus the checks shared by the symplectic
/// routines: even order, symmetric, strictly positive definite.
fn spd_eig(t: &DenseMatrix) -> Result<(usize, SymEigResult)> {
    let n = half_dim(t)?;
    let eig = sym_eig(t)?;
    if !(eig.min() > 1e-12 * eig.max().abs()) {
        return Err(Error::NotPositiveDefinite { min_eig: eig.min() });
    }
    Ok((n, eig))
}

/// `K = √T·J·√T`, exactly skew-symmetric.
fn skew_form(sqrt_t: &DenseMatrix, n: usize) -> DenseMatrix {
    let conv = SymplecticConvention::new(n);
    sqrt_t
        .matmul(&conv.apply_left(sqrt_t))
        .expect("square factors")
        .skew_part()
}

/// Symplectic eigenvalues of an SPD matrix of order `2n`, ascending.
///
/// The eigenvalues of `−K² = KᵀK` with `K = √T·J·√T` are the squared
/// symplectic eigenvalues, each appearing twice.
pub fn symplectic_eigenvalues(t: &DenseMatrix) -> Result<Vec<f64>> {
    let (n, eig) = spd_eig(t)?;
    let r = eig.reconstruct_with(|l| l.max(0.0).sqrt());
    let k = skew_form(&r, n);
    let squares = sym_eigvals(&k.gram())?;
    pair_up(&squares)
}

fn pair_up(squares: &[f64]) -> Result<Vec<f64>> {
    let top = squares.last().copied().unwrap_or(0.0).abs();
    let floor = 1e-11 * top;
    squares
        .chunks(2)
        .map(|pair| {
            let (a, b) = (pair[0], pair[1]);
            if (b - a).abs() > PAIRING_TOL * b.abs() + floor {
                return Err(Error::Pairing(format!(
                    "eigenvalues {a:e} and {b:e} of -K^2 do not pair up"
                )));
            }
            Ok((0.5 * (a + b)).max(0.0).sqrt())
        })
        .collect()
}

/// `T = Mᵀ·diag(d, d)·M` with `M` symplectic and `d` ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WilliamsonResult {
    pub d: Vec<f64>,
    pub m: DenseMatrix,
    /// `‖Mᵀ·diag(d,d)·M − T‖_F / ‖T‖_F`.
    pub residual: f64,
    /// `‖MᵀJM − J‖_F`.
    pub symplectic_defect: f64,
}

/// Williamson normal form of an SPD matrix of even order.
///
/// With `R = √T` and `K = R·J·R`, an orthogonal `O` bringing `K` to the
/// canonical form `OᵀKO = [[0, Λ], [−Λ, 0]]` gives `M = diag(Λ,Λ)^{-1/2}·Oᵀ·R`.
/// `O` is found from the eigenvectors of `KᵀK`; because that squares the
/// conditioning, the pass is repeated on the already block-reduced form,
/// where Jacobi with a scaled stopping rule recovers the small symplectic
/// eigenvalues to relative accuracy.
pub fn williamson(t: &DenseMatrix) -> Result<WilliamsonResult> {
    let (n, eig) = spd_eig(t)?;
    let r = eig.reconstruct_with(|l| l.max(0.0).sqrt());
    let k = skew_form(&r, n);

    let opts = JacobiOptions {
        relative: true,
        tol: 1e-15,
        ..JacobiOptions::default()
    };
    let mut w = k;
    let mut basis: Option<DenseMatrix> = None;
    let mut last_defect = f64::INFINITY;
    for _pass in 0..4 {
        let step = canonical_basis(&w, n, &opts)?;
        w = step
            .transpose()
            .matmul(&w.matmul(&step)?)?
            .skew_part();
        basis = Some(match basis {
            None => step,
            Some(b) => b.matmul(&step)?,
        });
        let defect = canonical_defect(&w, n);
        if defect < 1e-13 || defect >= 0.5 * last_defect {
            break;
        }
        last_defect = defect;
    }
    let basis = basis.expect("at least one pass");

    let d: Vec<f64> = (0..n).map(|i| w[(i, n + i)]).collect();
    if let Some(bad) = d.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::Degeneracy(format!(
            "non-positive symplectic eigenvalue {bad:e}"
        )));
    }
    // M = diag(d,d)^{-1/2} · Oᵀ · R
    let mut m = basis.transpose().matmul(&r)?;
    for i in 0..2 * n {
        let s = 1.0 / d[i % n].sqrt();
        m.row_mut(i).iter_mut().for_each(|x| *x *= s);
    }

    let mut dd = d.clone();
    dd.extend_from_slice(&d);
    let mut scaled = m.clone();
    for (i, &di) in dd.iter().enumerate() {
        scaled.row_mut(i).iter_mut().for_each(|x| *x *= di);
    }
    let recon = m.transpose().matmul(&scaled)?;
    let residual = recon.sub(t)?.frobenius() / t.frobenius();
    let symplectic_defect = symplectic_defect(&m)?;
    Ok(WilliamsonResult {
        d,
        m,
        residual,
        symplectic_defect,
    })
}

/// Largest `|W − Ω|` entry scaled by `1/√(d_i d_j)`, where `Ω` is the
/// canonical form read off `W`'s own `(i, n+i)` entries.
fn canonical_defect(w: &DenseMatrix, n: usize) -> f64 {
    let d: Vec<f64> = (0..2 * n)
        .map(|i| w[(i % n, n + i % n)].abs().max(f64::MIN_POSITIVE))
        .collect();
    let mut worst = 0.0f64;
    for i in 0..2 * n {
        for j in 0..2 * n {
            let canonical = (j == i + n) || (i == j + n);
            if !canonical {
                worst = worst.max(w[(i, j)].abs() / (d[i] * d[j]).sqrt());
            }
        }
    }
    worst
}

/// Orthogonal `O = [U V]` (columns ordered by ascending `d`) with
/// `OᵀWO ≈ [[0, Λ], [−Λ, 0]]` for a nonsingular skew-symmetric `W`.
///
/// Eigenvectors `u` of `WᵀW` are taken from the largest eigenvalue down,
/// orthogonalized against every vector already chosen, and completed by
/// `v = −W·u/‖W·u‖`. A vector with little left after orthogonalization lies
/// in an eigenspace that is already covered and is skipped.
fn canonical_basis(w: &DenseMatrix, n: usize, opts: &JacobiOptions) -> Result<DenseMatrix> {
    let dim = 2 * n;
    let eig = sym_eig_with(&w.gram(), opts)?;
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n);

    let candidates = (0..dim)
        .rev()
        .map(|k| eig.vectors.column(k))
        .chain((0..dim).map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            e
        }));
    for cand in candidates {
        if pairs.len() == n {
            break;
        }
        let Some(u) = orthonormalize(cand, &chosen, 0.5) else {
            continue;
        };
        let wu = matvec(w, &u);
        let norm = wu.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::Degeneracy("skew form is singular".into()));
        }
        let v: Vec<f64> = wu.iter().map(|x| -x / norm).collect();
        chosen.push(u);
        let Some(v) = orthonormalize(v, &chosen, 0.5) else {
            chosen.pop();
            continue;
        };
        let u = chosen.pop().expect("just pushed");
        let (u, v) = align_pair(u, v);
        chosen.push(u);
        chosen.push(v);
        pairs.push((norm, chosen.len() - 2, chosen.len() - 1));
    }
    if pairs.len() < n {
        return Err(Error::Degeneracy(format!(
            "resolved only {} of {n} symplectic pairs",
            pairs.len()
        )));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut o = DenseMatrix::zeros(dim, dim);
    for (slot, &(_, iu, iv)) in pairs.iter().enumerate() {
        for r in 0..dim {
            o[(r, slot)] = chosen[iu][r];
            o[(r, n + slot)] = chosen[iv][r];
        }
    }
    Ok(o)
}

/// Rotate `(u, v)` within its span so `u` is positive on the coordinate
/// where the pair has most weight. The rotation commutes with the
/// `2×2` canonical block, so it only removes an arbitrary phase.
fn align_pair(u: Vec<f64>, v: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let weight: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * a + b * b).collect();
    let top = weight.iter().copied().fold(0.0, f64::max);
    let k = weight
        .iter()
        .position(|&w| w >= top * (1.0 - 1e-12))
        .unwrap_or(0);
    let theta = v[k].atan2(u[k]);
    let (s, c) = theta.sin_cos();
    let u2 = u.iter().zip(&v).map(|(a, b)| c * a + s * b).collect();
    let v2 = u.iter().zip(&v).map(|(a, b)| -s * a + c * b).collect();
    (u2, v2)
}

fn matvec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Two rounds of modified Gram–Schmidt against `basis`; `None` when less
/// than `keep` of the (unit) input norm survives.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>], keep: f64) -> Option<Vec<f64>> {
    let initial = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..2 {
        for b in basis {
            let d: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < keep * initial {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// `lᵀ·t·l`, re-symmetrized. `l` must be symplectic to within `1e-8`.
pub fn symplectic_conjugate(t: &DenseMatrix, l: &DenseMatrix) -> Result<DenseMatrix> {
    let defect = symplectic_defect(l)?;
    if defect > 1e-8 {
        return Err(Error::NotSymplectic { defect });
    }
    if t.shape() != l.shape() {
        return Err(Error::DimensionMismatch {
            op: "symplectic_conjugate",
            left: t.shape(),
            right: l.shape(),
        });
    }
    Ok(l.transpose().matmul(&t.matmul(l)?)?.symmetrized())
}

/// `L = (1/√2)·[[I, −I], [I, I]]`, orthogonal and symplectic; it takes
/// `[[A, B], [B, A]]` to `[[A+B, 0], [0, A−B]]`.
pub fn class_b_rotation(n: usize) -> DenseMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut l = DenseMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        l[(i, i)] = s;
        l[(i, n + i)] = -s;
        l[(n + i, i)] = s;
        l[(n + i, n + i)] = s;
    }
    l
}

/// Random symplectic matrix of order `2n`:
/// `[[I,0],[C,I]]·[[I,D],[0,I]]·[[G,0],[0,G⁻ᵀ]]` with `C`, `D` symmetric of
/// entry scale `magnitude` and `G = I + P`, `‖P‖_F = 0.8·magnitude`, so
/// `cond(G) ≤ 9`.
///
/// # Panics
/// If `n == 0` or `magnitude` is outside `(0, 1]`.
pub fn random_symplectic(n: usize, seed: u64, magnitude: f64) -> DenseMatrix {
    assert!(n > 0, "half-dimension must be positive");
    assert!(
        magnitude > 0.0 && magnitude <= 1.0,
        "magnitude must lie in (0, 1]"
    );
    let mut r = rng(seed);
    let c = uniform_matrix(&mut r, n, n, magnitude).symmetrized();
    let d = uniform_matrix(&mut r, n, n, magnitude).symmetrized();
    let p = uniform_matrix(&mut r, n, n, 1.0);
    let pnorm = p.frobenius();
    let scale = if pnorm > 0.0 { 0.8 * magnitude / pnorm } else { 0.0 };
    let g = p.scale(scale).shift_diag(1.0);
    let g_inv_t = g.inverse().expect("cond(G) <= 9").transpose();

    let id = DenseMatrix::identity(n);
    let zero = DenseMatrix::zeros(n, n);
    let lower = DenseMatrix::from_blocks(&id, &zero, &c, &id).expect("square blocks");
    let upper = DenseMatrix::from_blocks(&id, &d, &zero, &id).expect("square blocks");
    let scaling = DenseMatrix::block_diag(&g, &g_inv_t);
    // Random factor order so both triangular shapes get exercised.
    let (first, second) = if r.gen::<bool>() {
        (&lower, &upper)
    } else {
        (&upper, &lower)
    };
    first
        .matmul(second)
        .and_then(|x| x.matmul(&scaling))
        .expect("square factors")
}
