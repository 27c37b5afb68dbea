use super::matrix::{add_scaled, dot, norm, Matrix};
use crate::error::{Error, Result};

/// Orthonormal basis for the column space of `m` by modified Gram–Schmidt
/// with one re-orthogonalization pass.
///
/// Columns are processed in order. A column whose residual after projecting
/// out the accepted directions is at most `tol · max_j ‖m_j‖` is dropped.
/// Returns `(Q, rank)` with `Q` of shape `rows × rank`.
pub fn qr_orthonormalize(m: &Matrix, tol: f64) -> Result<(Matrix, usize)> {
    qr_orthonormalize_scaled(m, tol, 0.0)
}

/// As [`qr_orthonormalize`], with the drop threshold `tol · max(scale, max_j ‖m_j‖)`.
/// Pass `scale = ‖T‖` when `m = T·U` for orthonormal `U`, so that columns that
/// `T` annihilates up to rounding are dropped even when all columns are tiny.
pub fn qr_orthonormalize_scaled(m: &Matrix, tol: f64, scale: f64) -> Result<(Matrix, usize)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Input(format!("orthonormalization tolerance must be positive, got {tol}")));
    }
    if m.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let n = m.rows();
    let cols = m.columns();
    let largest = cols.iter().map(|c| norm(c)).fold(0.0_f64, f64::max);
    let threshold = tol * largest.max(scale);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    if largest == 0.0 {
        return Ok((Matrix::zeros(n, 0), 0));
    }
    for c in cols {
        let mut r = c;
        for _ in 0..2 {
            for q in &basis {
                let coef = dot(q, &r);
                add_scaled(&mut r, -coef, q);
            }
        }
        let rn = norm(&r);
        if rn > threshold {
            r.iter_mut().for_each(|x| *x /= rn);
            basis.push(r);
        }
        if basis.len() == n {
            break;
        }
    }
    let k = basis.len();
    Ok((Matrix::from_columns(n, &basis), k))
}
