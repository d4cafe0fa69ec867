//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Rotations are applied in round-robin (tournament) order: each round is a
//! set of `n/2` disjoint index pairs, so every rotation angle in a round can be
//! computed from the matrix as it stood at the start of the round. The round
//! is then applied as one row pass and one column pass, both of which walk
//! memory contiguously.

use super::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    pub max_sweeps: usize,
    /// Off-diagonal threshold, relative to `‖A‖_F`.
    pub tol: f64,
    /// Use the scaled criterion `|a_pq| ≤ tol·√|a_pp·a_qq|` instead of the
    /// Frobenius-relative one. Preserves relative accuracy of small
    /// eigenvalues of positive definite matrices that are already close to
    /// diagonal.
    pub relative: bool,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            tol: 1e-14,
            relative: false,
        }
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    pub eigenvalues: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymEigResult {
    /// Reassembles `Q·diag(f(λ))·Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        // Split f(λ) = g(λ)² when f ≥ 0 so the product is exactly symmetric.
        let n = self.eigenvalues.len();
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        if vals.iter().all(|&v| v >= 0.0) {
            let mut b = self.vectors.clone();
            for i in 0..n {
                for (x, v) in b.row_mut(i).iter_mut().zip(&vals) {
                    *x *= v.sqrt();
                }
            }
            b.outer_gram()
        } else {
            let mut b = self.vectors.clone();
            for i in 0..n {
                for (x, v) in b.row_mut(i).iter_mut().zip(&vals) {
                    *x *= v;
                }
            }
            b.matmul(&self.vectors.transpose())
                .expect("square factors")
                .symmetrized()
        }
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }
}

fn check_symmetric(s: &DenseMatrix) -> Result<DenseMatrix> {
    s.require_square()?;
    let allowed = 1e-12 * s.norm_inf();
    let asym = s.asymmetry();
    if asym > allowed {
        return Err(Error::NotSymmetric {
            asymmetry: asym,
            allowed,
        });
    }
    Ok(s.symmetrized())
}

/// Eigendecomposition with default options.
pub fn sym_eig(s: &DenseMatrix) -> Result<SymEigResult> {
    sym_eig_with(s, &JacobiOptions::default())
}

pub fn sym_eig_with(s: &DenseMatrix, opts: &JacobiOptions) -> Result<SymEigResult> {
    let a = check_symmetric(s)?;
    let n = a.rows();
    let (vals, vt) = jacobi(a.into_vec(), n, true, opts)?;
    let vt = vt.expect("vectors requested");
    let order = ascending_order(&vals);
    let mut q = DenseMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        for i in 0..n {
            q[(i, k)] = vt[src * n + i];
        }
    }
    Ok(SymEigResult {
        eigenvalues: order.iter().map(|&i| vals[i]).collect(),
        vectors: q,
    })
}

/// Eigenvalues only (ascending); skips eigenvector accumulation.
pub fn sym_eigvals(s: &DenseMatrix) -> Result<Vec<f64>> {
    let a = check_symmetric(s)?;
    let n = a.rows();
    let (mut vals, _) = jacobi(a.into_vec(), n, false, &JacobiOptions::default())?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

fn ascending_order(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    idx
}

/// Circle-method pairing: `m − 1` rounds over `m` (even) players.
fn tournament(n: usize) -> Vec<Vec<(usize, usize)>> {
    let m = n + (n % 2);
    let mut players: Vec<usize> = (0..m).collect();
    let mut rounds = Vec::with_capacity(m.saturating_sub(1));
    for _ in 0..m.saturating_sub(1) {
        let mut round = Vec::with_capacity(m / 2);
        for i in 0..m / 2 {
            let (p, q) = (players[i], players[m - 1 - i]);
            if p < n && q < n {
                round.push((p.min(q), p.max(q)));
            }
        }
        rounds.push(round);
        players[1..].rotate_right(1);
    }
    rounds
}

struct Rotation {
    p: usize,
    q: usize,
    c: f64,
    s: f64,
}

/// Runs Jacobi sweeps on `a` (row-major `n×n`, symmetric). Returns the
/// unsorted diagonal and, optionally, the transposed eigenvector matrix
/// (row `k` is the eigenvector for diagonal entry `k`).
fn jacobi(
    mut a: Vec<f64>,
    n: usize,
    want_vectors: bool,
    opts: &JacobiOptions,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut vt = want_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    });
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 1 || norm == 0.0 {
        return Ok(((0..n).map(|i| a[i * n + i]).collect(), vt));
    }
    let abs_tol = opts.tol * norm;
    let negligible = |a: &[f64], p: usize, q: usize| -> bool {
        let apq = a[p * n + q].abs();
        if opts.relative {
            apq <= opts.tol * (a[p * n + p] * a[q * n + q]).abs().sqrt() || apq < f64::MIN_POSITIVE
        } else {
            apq < abs_tol
        }
    };

    let rounds = tournament(n);
    let mut rots: Vec<Rotation> = Vec::with_capacity(n / 2);
    for _sweep in 0..opts.max_sweeps {
        let converged = (0..n).all(|p| ((p + 1)..n).all(|q| negligible(&a, p, q)));
        if converged {
            return Ok(((0..n).map(|i| a[i * n + i]).collect(), vt));
        }
        for round in &rounds {
            rots.clear();
            for &(p, q) in round {
                if negligible(&a, p, q) {
                    continue;
                }
                let apq = a[p * n + q];
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                rots.push(Rotation { p, q, c, s: t * c });
            }
            if rots.is_empty() {
                continue;
            }
            // Rᵀ·A: combine rows p and q.
            for r in &rots {
                rotate_rows(&mut a, n, r);
                if let Some(v) = vt.as_mut() {
                    rotate_rows(v, n, r);
                }
            }
            // (Rᵀ·A)·R: combine columns p and q of every row.
            for row in a.chunks_mut(n) {
                for r in &rots {
                    let (x, y) = (row[r.p], row[r.q]);
                    row[r.p] = r.c * x - r.s * y;
                    row[r.q] = r.s * x + r.c * y;
                }
            }
            for r in &rots {
                a[r.p * n + r.q] = 0.0;
                a[r.q * n + r.p] = 0.0;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
    }
    let off = (0..n)
        .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
        .map(|(p, q)| a[p * n + q].abs())
        .fold(0.0, f64::max);
    Err(Error::NoConvergence {
        sweeps: opts.max_sweeps,
        off,
    })
}

#[inline]
fn rotate_rows(a: &mut [f64], n: usize, r: &Rotation) {
    let (lo, hi) = a.split_at_mut(r.q * n);
    let row_p = &mut lo[r.p * n..(r.p + 1) * n];
    let row_q = &mut hi[..n];
    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = r.c * xp - r.s * yq;
        *y = r.s * xp + r.c * yq;
    }
}

/// Symmetric PSD square root; eigenvalues in `[−1e-10·‖S‖₂, 0)` are clamped
/// to zero.
pub fn sqrt_psd(s: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(s)?;
    sqrt_from_eig(&eig)
}

pub(crate) fn sqrt_from_eig(eig: &SymEigResult) -> Result<DenseMatrix> {
    let scale = eig.min().abs().max(eig.max().abs());
    if eig.min() < -1e-10 * scale {
        return Err(Error::NotPositiveSemidefinite { min_eig: eig.min() });
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Inverse of a symmetric positive definite matrix via its eigendecomposition.
pub fn inv_spd(s: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(s)?;
    let scale = eig.max().abs().max(eig.min().abs());
    if !(eig.min() > 1e-12 * scale) {
        return Err(Error::NotPositiveDefinite { min_eig: eig.min() });
    }
    Ok(eig.reconstruct_with(|l| 1.0 / l))
}
