//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot threshold below which a column is declared collinear.
const RANK_TOL: f64 = 1e-10;

/// Least squares via QR with a collinearity guard.
///
/// Returns the coefficient vector; errors with the offending column names
/// when the design is rank deficient.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    check_full_rank(x, names)?;
    let qr = x.clone().qr();
    let mut rhs = qr.q().transpose() * y;
    let r = qr.r();
    let k = x.ncols();
    // back-substitution on the upper-triangular factor
    let mut beta = DVector::zeros(k);
    for i in (0..k).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..k {
            acc -= r[(i, j)] * beta[j];
        }
        if r[(i, i)].abs() < 1e-300 {
            return Err(Error::RankDeficient(vec![names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("col{i}"))]));
        }
        beta[i] = acc / r[(i, i)];
    }
    let _ = &mut rhs;
    Ok(beta)
}

/// Gram-Schmidt based rank screen: flags columns whose residual after
/// projecting out the previous columns is (relatively) negligible.
pub fn check_full_rank(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let n = x.nrows();
    let k = x.ncols();
    if n < k {
        return Err(Error::Validation(format!(
            "{n} observations for {k} parameters"
        )));
    }
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut collinear = Vec::new();
    for j in 0..k {
        let mut v = x.column(j).into_owned();
        let original = v.norm();
        for b in &basis {
            let coeff = b.dot(&v);
            v -= b * coeff;
        }
        let residual = v.norm();
        if residual <= RANK_TOL * original.max(1.0) {
            collinear.push(names.get(j).cloned().unwrap_or_else(|| format!("col{j}")));
        } else {
            basis.push(v / residual);
        }
    }
    if collinear.is_empty() {
        Ok(())
    } else {
        Err(Error::RankDeficient(collinear))
    }
}

/// Symmetric inverse through Cholesky, falling back to the Moore-Penrose
/// pseudo-inverse. Returns `(inverse, used_pseudo)`.
pub fn sym_inverse(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok((chol.inverse(), false));
    }
    Ok((pseudo_inverse(a)?, true))
}

/// Moore-Penrose pseudo-inverse via SVD.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    svd.pseudo_inverse(1e-12)
        .map_err(|e| Error::Computation(format!("pseudo-inverse failed: {e}")))
}

/// Upper-tail probability of a chi-square with `dof` degrees of freedom.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    (1.0 - dist.cdf(statistic.max(0.0))).clamp(0.0, 1.0)
}

/// Two-sided standard-normal p-value.
pub fn normal_two_sided_p(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let dist = Normal::new(0.0, 1.0).unwrap();
    (2.0 * (1.0 - dist.cdf(z.abs()))).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn lstsq_recovers_exact_coefficients() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0]);
        let beta = lstsq(&x, &y, &names(2)).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-12);
        assert!((beta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_names_column() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        match lstsq(&x, &y, &["a".into(), "b".into()]) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols, vec!["b".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pseudo_inverse_handles_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = pseudo_inverse(&a).unwrap();
        // A * A+ * A = A
        let back = &a * &p * &a;
        assert!((back - a).norm() < 1e-10);
    }

    #[test]
    fn chi_square_tail_sanity() {
        assert!((chi_square_sf(0.0, 1) - 1.0).abs() < 1e-12);
        assert!(chi_square_sf(3.841, 1) - 0.05 < 1e-3);
        assert!(chi_square_sf(100.0, 1) < 1e-10);
    }
}
