//! Seeded random test inputs. Every generator is deterministic per seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::DenseMatrix;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-scale..=scale)).collect();
    DenseMatrix::new(rows, cols, data).expect("finite entries")
}

/// Symmetric matrix with entries uniform in `[-1, 1]`.
pub fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    uniform_matrix(&mut r, n, n, 1.0).symmetrized()
}

/// Orthogonal matrix from modified Gram–Schmidt on a uniform random matrix.
pub fn random_orthogonal(n: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    loop {
        let a = uniform_matrix(&mut r, n, n, 1.0);
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v = a.column(j);
            for _ in 0..2 {
                for c in &cols {
                    let d: f64 = c.iter().zip(&v).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-6 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        if ok {
            let mut q = DenseMatrix::zeros(n, n);
            for (j, c) in cols.iter().enumerate() {
                for (i, &x) in c.iter().enumerate() {
                    q[(i, j)] = x;
                }
            }
            return q;
        }
    }
}

/// `Q·diag(λ)·Qᵀ` with `λ` log-uniform in `[1, cond]`; for `n ≥ 2` the
/// extremes are pinned so the 2-norm condition number is exactly `cond`.
pub fn random_spd(n: usize, seed: u64, cond: f64) -> DenseMatrix {
    assert!(cond >= 1.0, "condition number must be at least 1");
    let mut r = rng(seed ^ 0x5eed_5bd0);
    let mut lambdas: Vec<f64> = (0..n).map(|_| cond.powf(r.gen::<f64>())).collect();
    if n >= 2 {
        lambdas[0] = 1.0;
        lambdas[n - 1] = cond;
    }
    spd_with_spectrum(&lambdas, seed)
}

/// `Q·diag(λ)·Qᵀ` for a random orthogonal `Q`; exactly symmetric.
pub fn spd_with_spectrum(lambdas: &[f64], seed: u64) -> DenseMatrix {
    let n = lambdas.len();
    let mut b = random_orthogonal(n, seed);
    for i in 0..n {
        for (x, l) in b.row_mut(i).iter_mut().zip(lambdas) {
            *x *= l.sqrt();
        }
    }
    b.outer_gram()
}

/// Two commuting SPD matrices, both quadratic polynomials with positive
/// coefficients in one SPD seed matrix with spectrum in `[0.5, 2]`.
pub fn commuting_spd_pair(n: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let mut r = rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let spectrum: Vec<f64> = (0..n).map(|_| r.gen_range(0.5..=2.0)).collect();
    let z = spd_with_spectrum(&spectrum, seed);
    let z2 = z.matmul(&z).expect("square");
    let poly = |r: &mut ChaCha8Rng| {
        let (c0, c1, c2) = (
            r.gen_range(0.1..=1.0),
            r.gen_range(0.0..=1.0),
            r.gen_range(0.0..=0.5),
        );
        z.scale(c1)
            .add(&z2.scale(c2))
            .expect("same shape")
            .shift_diag(c0)
            .symmetrized()
    };
    let a = poly(&mut r);
    let b = poly(&mut r);
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = random_orthogonal(9, 4);
        let defect = q.gram().sub(&DenseMatrix::identity(9)).unwrap().frobenius();
        assert!(defect < 1e-13);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(random_spd(6, 11, 100.0), random_spd(6, 11, 100.0));
        assert_ne!(random_spd(6, 11, 100.0), random_spd(6, 12, 100.0));
    }

    #[test]
    fn commuting_pair_commutes() {
        let (a, b) = commuting_spd_pair(8, 2);
        let c = a.matmul(&b).unwrap().sub(&b.matmul(&a).unwrap()).unwrap();
        assert!(c.frobenius() < 1e-12 * a.frobenius() * b.frobenius());
        assert!(a.is_positive_definite() && b.is_positive_definite());
    }
}
