use super::eigen::sym_eig;
use super::matrix::Matrix;
use super::DEFAULT_RANK_TOL;
use crate::error::{Error, Result};

/// Principal square root of a symmetric PSD matrix at the default tolerance.
pub fn sqrt_psd(s: &Matrix) -> Result<Matrix> {
    sqrt_psd_with(s, DEFAULT_RANK_TOL)
}

/// Principal square root `R` (symmetric PSD, `R·R = S`).
///
/// Eigenvalues at or below `tol · ‖S‖₂` are set to zero, which both clamps
/// round-off negatives and keeps the null space of `R` exact. An eigenvalue
/// below `−tol · ‖S‖₂` is an error.
pub fn sqrt_psd_with(s: &Matrix, tol: f64) -> Result<Matrix> {
    let sp = sym_eig(s)?;
    let scale = sp.abs_max();
    if sp.min() < -tol * scale {
        return Err(Error::NotPsd { min_eigenvalue: sp.min() });
    }
    let cut = tol * scale;
    Ok(sp.map(|l| if l > cut { l.sqrt() } else { 0.0 }))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(s: &Matrix) -> Result<f64> {
    Ok(sym_eig(s)?.min())
}

/// Loewner order test `P ≤ Q`, i.e. `λ_min(Q − P) ≥ −tol`.
pub fn psd_leq(p: &Matrix, q: &Matrix, tol: f64) -> Result<bool> {
    Ok(psd_margin(p, q)? >= -tol)
}

/// `λ_min(Q − P)`; nonnegative exactly when `P ≤ Q`.
pub fn psd_margin(p: &Matrix, q: &Matrix) -> Result<f64> {
    if p.shape() != q.shape() || !p.is_square() {
        return Err(Error::Dimension(format!(
            "Loewner comparison of {}×{} and {}×{}",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols()
        )));
    }
    min_eigenvalue(&(q - p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_roots() {
        assert_eq!(sqrt_psd(&Matrix::from_diag(&[4.0, 1.0])).unwrap(), Matrix::from_diag(&[2.0, 1.0]));
        assert_eq!(sqrt_psd(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn random_gram_root() {
        let mut rng = crate::generator::Rng::new(5);
        for _ in 0..10 {
            let a = rng.gaussian_matrix(5, 5);
            let s = &a.transpose() * &a;
            let r = sqrt_psd(&s).unwrap();
            let resid = (&(&r * &r) - &s).frobenius_norm();
            assert!(resid <= 1e-9 * s.frobenius_norm());
            assert!(r.asymmetry() < 1e-14);
            assert!(min_eigenvalue(&r).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn negative_definite_is_rejected() {
        let e = sqrt_psd(&Matrix::from_diag(&[1.0, -0.5])).unwrap_err();
        assert!(matches!(e, Error::NotPsd { min_eigenvalue } if (min_eigenvalue + 0.5).abs() < 1e-15));
        // tiny round-off negatives are clamped
        assert!(sqrt_psd(&Matrix::from_diag(&[1.0, -1e-14])).is_ok());
    }

    #[test]
    fn loewner_examples() {
        let i = Matrix::identity(2);
        let two = i.scale(2.0);
        assert!(psd_leq(&i, &two, 1e-12).unwrap());
        assert!(!psd_leq(&two, &i, 1e-12).unwrap());
        assert!(psd_leq(&Matrix::from_diag(&[2.0, 1.0]), &two, 1e-12).unwrap());
        assert!(psd_leq(&i, &Matrix::identity(3), 1e-12).is_err());
    }
}
