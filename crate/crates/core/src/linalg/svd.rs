//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations and
//! the Moore–Penrose pseudo-inverse built on it.
//!
//! The rotations orthogonalize the columns of `M·V`, which is Jacobi on `MᵀM`
//! carried out without ever forming `MᵀM`. Left singular vectors are recovered
//! by normalizing the converged columns.

use super::matrix::{dot, Matrix};
use super::DEFAULT_RANK_TOL;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const ORTHOGONALITY_TOL: f64 = 1e-15;

/// `M = U · diag(σ) · Vᵀ` with σ descending.
///
/// `u` is `m × n`; columns belonging to zero singular values are zero.
/// `v` is `n × n` orthogonal.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `tol · σ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let cut = tol * self.sigma_max();
        self.singular_values.iter().filter(|&&s| s > cut).count()
    }

    /// Smallest singular value counted in the rank at `tol`; 0 for rank zero.
    pub fn sigma_min_nonzero(&self, tol: f64) -> f64 {
        let r = self.rank(tol);
        if r == 0 {
            0.0
        } else {
            self.singular_values[r - 1]
        }
    }

    /// Orthonormal basis of the column space (as columns).
    pub fn range_basis(&self, tol: f64) -> Matrix {
        let r = self.rank(tol);
        self.u.select_columns(&(0..r).collect::<Vec<_>>())
    }

    /// Orthonormal basis of the null space (as columns).
    pub fn null_basis(&self, tol: f64) -> Matrix {
        let r = self.rank(tol);
        let n = self.v.cols();
        self.v.select_columns(&(r..n).collect::<Vec<_>>())
    }

    /// Orthonormal basis of the row space (as columns).
    pub fn row_space_basis(&self, tol: f64) -> Matrix {
        let r = self.rank(tol);
        self.v.select_columns(&(0..r).collect::<Vec<_>>())
    }
}

pub fn svd(m: &Matrix) -> Svd {
    let (rows, cols) = m.shape();
    // Work column-major: w[j] is column j of M·V.
    let mut w: Vec<Vec<f64>> = m.columns();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= ORTHOGONALITY_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, i, j, c, s);
                rotate_pair(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    let mut u = Matrix::zeros(rows, cols);
    let mut vm = Matrix::zeros(cols, cols);
    let mut singular_values = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[j];
        singular_values.push(s);
        if s > 0.0 {
            for i in 0..rows {
                u.set(i, k, w[j][i] / s);
            }
        }
        for i in 0..cols {
            vm.set(i, k, v[j][i]);
        }
    }
    Svd { u, singular_values, v: vm }
}

fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    let (a, b) = (&mut left[i], &mut right[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let xi = *x;
        let yj = *y;
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    svd(m).singular_values
}

/// Numerical rank at relative threshold `tol · σ_max`.
pub fn rank(m: &Matrix, tol: f64) -> usize {
    svd(m).rank(tol)
}

/// Moore–Penrose pseudo-inverse; singular values at or below `tol · σ_max` count as zero.
pub fn pseudo_inverse(m: &Matrix, tol: f64) -> Result<Matrix> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Input(format!("pseudo-inverse tolerance must be positive, got {tol}")));
    }
    Ok(pseudo_inverse_from(&svd(m), m.rows(), tol))
}

pub(crate) fn pseudo_inverse_from(d: &Svd, rows: usize, tol: f64) -> Matrix {
    let cols = d.v.rows();
    let r = d.rank(tol);
    let mut out = Matrix::zeros(cols, rows);
    for k in 0..r {
        let inv = 1.0 / d.singular_values[k];
        for i in 0..cols {
            let vik = d.v.get(i, k) * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..rows {
                out.data[i * rows + j] += vik * d.u.get(j, k);
            }
        }
    }
    out
}

/// Pseudo-inverse at the default relative tolerance.
pub fn pinv(m: &Matrix) -> Matrix {
    pseudo_inverse_from(&svd(m), m.rows(), DEFAULT_RANK_TOL)
}

/// Spectral norms of `MPM − M`, `PMP − P`, `MP − (MP)ᵀ` and `PM − (PM)ᵀ`.
pub fn penrose_residuals(m: &Matrix, p: &Matrix) -> [f64; 4] {
    let mp = m * p;
    let pm = p * m;
    [
        (&(&mp * m) - m).spectral_norm(),
        (&(&pm * p) - p).spectral_norm(),
        (&mp - &mp.transpose()).spectral_norm(),
        (&pm - &pm.transpose()).spectral_norm(),
    ]
}

/// Range and kernel identities of `P = M†` through its projectors, as spectral norms:
/// `(MP)² − MP`, `(PM)² − PM`, `P(I − MP)` (so `N(P) ⊇ R(M)^⊥`) and
/// `M(I − PM)` (so `N(M) ⊇ R(P)^⊥`).
pub fn projector_residuals(m: &Matrix, p: &Matrix) -> [f64; 4] {
    let mp = m * p;
    let pm = p * m;
    let left = &Matrix::identity(m.rows()) - &mp;
    let right = &Matrix::identity(m.cols()) - &pm;
    [
        (&(&mp * &mp) - &mp).spectral_norm(),
        (&(&pm * &pm) - &pm).spectral_norm(),
        (p * &left).spectral_norm(),
        (m * &right).spectral_norm(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Rng;

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(pinv(&Matrix::identity(3)), Matrix::identity(3));
        let p = pseudo_inverse(&Matrix::from_diag(&[2.0, 0.0]), 1e-10).unwrap();
        assert_eq!(p, Matrix::from_diag(&[0.5, 0.0]));
    }

    #[test]
    fn random_rectangular_penrose() {
        let mut rng = Rng::new(7);
        for (r, c) in [(4, 3), (3, 4), (1, 5), (6, 1)] {
            let m = rng.gaussian_matrix(r, c);
            let p = pinv(&m);
            assert_eq!(p.shape(), (c, r));
            for res in penrose_residuals(&m, &p) {
                assert!(res <= 1e-10, "{r}×{c}: {res}");
            }
        }
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let mut rng = Rng::new(3);
        let m = rng.gaussian_matrix(5, 4);
        let d = svd(&m);
        let mut usv = Matrix::zeros(5, 4);
        for k in 0..4 {
            for i in 0..5 {
                for j in 0..4 {
                    usv.data[i * 4 + j] += d.u.get(i, k) * d.singular_values[k] * d.v.get(j, k);
                }
            }
        }
        assert!((&usv - &m).max_abs() < 1e-13);
        let vtv = &d.v.transpose() * &d.v;
        assert!((&vtv - &Matrix::identity(4)).max_abs() < 1e-13);
        assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(rank(&m, 1e-10), 1);
        let d = svd(&m);
        let null = d.null_basis(1e-10);
        assert_eq!(null.cols(), 1);
        assert!(norm_vec(&m.matvec(&null.column(0))) < 1e-14);
        assert_eq!(rank(&Matrix::zeros(3, 2), 1e-10), 0);
        assert_eq!(pinv(&Matrix::zeros(3, 2)), Matrix::zeros(2, 3));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(pseudo_inverse(&Matrix::identity(2), 0.0).is_err());
        assert!(pseudo_inverse(&Matrix::identity(2), f64::NAN).is_err());
    }

    fn norm_vec(v: &[f64]) -> f64 {
        super::super::matrix::norm(v)
    }
}
