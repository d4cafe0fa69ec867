use crate::error::{Error, Result};
use crate::matrix::{sqrt_psd, sym_eigvals, DenseMatrix};
use crate::operator::{check_commuting, require_spd, DEFAULT_CTOL};

/// Ascending `σ(√a·√b)`, the symplectic spectrum of `[[a, 0], [0, b]]` for
/// commuting SPD `a`, `b`.
pub fn class_a_closed_form(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    class_a_closed_form_with(a, b, DEFAULT_CTOL)
}

pub fn class_a_closed_form_with(a: &DenseMatrix, b: &DenseMatrix, ctol: f64) -> Result<Vec<f64>> {
    same_square_shape(a, b)?;
    require_spd(a)?;
    require_spd(b)?;
    check_commuting(a, b, ctol, false)?;
    let p = sqrt_psd(a)?.matmul(&sqrt_psd(b)?)?;
    sym_eigvals(&p.symmetrized())
}

/// Ascending `σ(√(a+b)·√(a−b))`, the symplectic spectrum of `[[a, b], [b, a]]`.
pub fn class_b_closed_form(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    class_b_closed_form_with(a, b, DEFAULT_CTOL)
}

pub fn class_b_closed_form_with(a: &DenseMatrix, b: &DenseMatrix, ctol: f64) -> Result<Vec<f64>> {
    same_square_shape(a, b)?;
    class_a_closed_form_with(&a.add(b)?, &a.sub(b)?, ctol)
}

/// Largest distance from an eigenvalue of `xy` to the product set
/// `{λᵢ(x)·μⱼ(y)}`, for commuting symmetric `x`, `y`.
pub fn spectral_inclusion_gap(x: &DenseMatrix, y: &DenseMatrix, ctol: f64) -> Result<f64> {
    same_square_shape(x, y)?;
    check_commuting(x, y, ctol, false)?;
    let lx = sym_eigvals(x)?;
    let ly = sym_eigvals(y)?;
    let products: Vec<f64> = lx.iter().flat_map(|a| ly.iter().map(move |b| a * b)).collect();
    let xy = sym_eigvals(&x.matmul(y)?.symmetrized())?;
    Ok(xy
        .iter()
        .map(|v| products.iter().map(|p| (v - p).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

fn same_square_shape(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    a.require_square()?;
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            op: "closed form",
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::commuting_spd_pair;
    use crate::symplectic::symplectic_eigenvalues;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn small_examples() {
        let i = DenseMatrix::identity(3);
        assert!(close(&class_a_closed_form(&i, &i).unwrap(), &[1.0; 3], 1e-15));
        let a = DenseMatrix::from_diag(&[4.0, 9.0]);
        let b = DenseMatrix::identity(2);
        assert!(close(&class_a_closed_form(&a, &b).unwrap(), &[2.0, 3.0], 1e-15));
        let z = DenseMatrix::zeros(2, 2);
        assert!(close(&class_b_closed_form(&a, &z).unwrap(), &[4.0, 9.0], 1e-14));
    }

    #[test]
    fn squared_pair_disagrees_with_printed_product() {
        // A = Ã², B = B̃² with Ã = [[4,2],[2,2]], B̃ = [[2,1],[1,1]]; Ã·B̃ = [[10,6],[6,4]].
        let a = DenseMatrix::from_rows(&[[20.0, 12.0], [12.0, 8.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[5.0, 3.0], [3.0, 2.0]]).unwrap();
        let closed = class_a_closed_form(&a, &b).unwrap();
        let oracle = symplectic_eigenvalues(&DenseMatrix::block_diag(&a, &b)).unwrap();
        assert!(close(&closed, &oracle, 1e-9), "{closed:?} vs {oracle:?}");
        let root5 = 5f64.sqrt();
        assert!(close(&oracle, &[7.0 - 3.0 * root5, 7.0 + 3.0 * root5], 1e-9));
        let printed = [18.0 - 8.0 * root5, 18.0 + 8.0 * root5];
        assert!(!close(&oracle, &printed, 1e-3));
    }

    #[test]
    fn diagonal_class_b_rows() {
        let k = |i: usize| (i + 1) as f64;
        let a: Vec<f64> = (1..=5).map(|i| 1.0 + 0.5 / k(i).powi(2) + 0.5 / k(i).powi(3)).collect();
        let b: Vec<f64> = (1..=5).map(|i| 0.5 / k(i).powi(2) - 0.5 / k(i).powi(3)).collect();
        let d = class_b_closed_form(&DenseMatrix::from_diag(&a), &DenseMatrix::from_diag(&b)).unwrap();
        let mut exact: Vec<f64> = (1..=5)
            .map(|i| ((1.0 + 1.0 / k(i).powi(2)) * (1.0 + 1.0 / k(i).powi(3))).sqrt())
            .collect();
        exact.reverse();
        assert!(close(&d, &exact, 1e-12));
    }

    #[test]
    fn matches_oracle_on_commuting_pairs() {
        for seed in 0..5 {
            let (a, b) = commuting_spd_pair(6, seed);
            let t = DenseMatrix::block_diag(&a, &b);
            let oracle = symplectic_eigenvalues(&t).unwrap();
            assert!(close(&class_a_closed_form(&a, &b).unwrap(), &oracle, 1e-9));
        }
    }

    #[test]
    fn errors() {
        let a = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let b = DenseMatrix::from_diag(&[1.0, 2.0]);
        assert!(matches!(class_a_closed_form(&a, &b), Err(Error::NotCommuting { .. })));
        let neg = DenseMatrix::from_diag(&[1.0, -1.0]);
        assert!(matches!(
            class_a_closed_form(&neg, &b),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            class_b_closed_form(&b, &DenseMatrix::from_diag(&[2.0, 0.0])),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn inclusion_gap_small() {
        let (x, y) = commuting_spd_pair(5, 9);
        let y = y.shift_diag(-1.5);
        assert!(spectral_inclusion_gap(&x, &y, 1e-10).unwrap() < 1e-10);
    }
}
