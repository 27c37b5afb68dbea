//! Subspaces of ℝⁿ held as orthonormal bases, and the projection calculus on them.

use crate::error::{Error, Result};
use crate::linalg::{qr_orthonormalize, qr_orthonormalize_scaled, Matrix};

/// A subspace of ℝⁿ. `basis` is `n × k` with orthonormal columns; `k = 0`
/// is the zero subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Matrix,
}

impl Subspace {
    /// Column span of `m`, with the rank decided by `tol` relative to the largest column.
    pub fn from_spanning(m: &Matrix, tol: f64) -> Result<Self> {
        if m.rows() == 0 {
            return Err(Error::Input("subspace needs a positive ambient dimension".into()));
        }
        let (q, _) = qr_orthonormalize(m, tol)?;
        Ok(Self { ambient_dim: m.rows(), basis: q })
    }

    /// Wraps a basis the caller has checked to be orthonormal.
    pub(crate) fn from_orthonormal(basis: Matrix) -> Self {
        Self { ambient_dim: basis.rows(), basis }
    }

    pub fn zero(n: usize) -> Self {
        Self { ambient_dim: n, basis: Matrix::zeros(n, 0) }
    }

    pub fn full(n: usize) -> Self {
        Self { ambient_dim: n, basis: Matrix::identity(n) }
    }

    /// Span of the given coordinate axes (0-based).
    pub fn coordinate(n: usize, axes: &[usize]) -> Self {
        let cols: Vec<Vec<f64>> = axes
            .iter()
            .map(|&a| {
                let mut e = vec![0.0; n];
                e[a] = 1.0;
                e
            })
            .collect();
        Self { ambient_dim: n, basis: Matrix::from_columns(n, &cols) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Orthogonal projection `U·Uᵀ`.
    pub fn projection(&self) -> Matrix {
        self.basis.gram_outer()
    }

    /// `π_W(f)` without forming the projection matrix.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        let coords = self.basis.transpose().matvec(f);
        self.basis.matvec(&coords)
    }

    /// Coordinates of `f`'s projection in this subspace's basis.
    pub fn coordinates(&self, f: &[f64]) -> Vec<f64> {
        self.basis.transpose().matvec(f)
    }

    /// `T(W)`, re-orthonormalized; the dimension drops where `T` kills directions
    /// of `W`. Rank is judged against `tol·‖T‖₂`.
    pub fn image(&self, t: &Matrix, tol: f64) -> Result<Self> {
        if t.rows() != self.ambient_dim || t.cols() != self.ambient_dim {
            return Err(Error::Dimension(format!(
                "operator is {}×{}, subspace lives in ℝ^{}",
                t.rows(),
                t.cols(),
                self.ambient_dim
            )));
        }
        if self.is_zero() {
            return Ok(Self::zero(self.ambient_dim));
        }
        let (q, _) = qr_orthonormalize_scaled(&(t * &self.basis), tol, t.spectral_norm())?;
        Ok(Self { ambient_dim: self.ambient_dim, basis: q })
    }

    /// Largest column residual `‖(I − π_W)·v_j‖` over the basis of `other`.
    pub fn containment_defect(&self, other: &Subspace) -> Result<f64> {
        self.check_same_space(other)?;
        let mut worst = 0.0_f64;
        for j in 0..other.dim() {
            let v = other.basis.column(j);
            let p = self.project(&v);
            worst = worst.max(crate::linalg::norm(&crate::linalg::matrix::sub(&v, &p)));
        }
        Ok(worst)
    }

    /// `other ⊆ self`, tested column-wise on `other`'s basis.
    pub fn contains(&self, other: &Subspace, tol: f64) -> Result<bool> {
        Ok(self.containment_defect(other)? <= tol)
    }

    /// Frobenius distance between the two orthogonal projections.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        self.check_same_space(other)?;
        Ok((&self.projection() - &other.projection()).frobenius_norm())
    }

    fn check_same_space(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim != other.ambient_dim {
            return Err(Error::Dimension(format!(
                "subspaces of ℝ^{} and ℝ^{}",
                self.ambient_dim, other.ambient_dim
            )));
        }
        Ok(())
    }
}

pub fn subspace_from_spanning(m: &Matrix, tol: f64) -> Result<Subspace> {
    Subspace::from_spanning(m, tol)
}

pub fn projection_matrix(w: &Subspace) -> Matrix {
    w.projection()
}

pub fn image_subspace(t: &Matrix, w: &Subspace, tol: f64) -> Result<Subspace> {
    w.image(t, tol)
}

/// `V ⊆ W`.
pub fn contains(w: &Subspace, v: &Subspace, tol: f64) -> Result<bool> {
    w.contains(v, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::Rng;
    use proptest::prelude::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn spanning_examples() {
        assert_eq!(Subspace::from_spanning(&Matrix::identity(3), TOL).unwrap().dim(), 3);
        let line = Subspace::from_spanning(&Matrix::column_vector(&[1.0, 1.0]), TOL).unwrap();
        assert_eq!(line.dim(), 1);
        let p = line.projection();
        assert!((&p - &Matrix::from_rows(&[&[0.5, 0.5], &[0.5, 0.5]])).max_abs() < 1e-15);
        let z = Subspace::from_spanning(&Matrix::column_vector(&[0.0, 0.0]), TOL).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.projection(), Matrix::zeros(2, 2));
    }

    #[test]
    fn projection_of_axis() {
        let e1 = Subspace::coordinate(2, &[0]);
        assert_eq!(e1.projection(), Matrix::from_diag(&[1.0, 0.0]));
        assert!((e1.projection().trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn image_examples() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert_eq!(e1.image(&Matrix::identity(2), TOL).unwrap().distance(&e1).unwrap(), 0.0);
        assert!(e2.image(&Matrix::from_diag(&[1.0, 0.0]), TOL).unwrap().is_zero());
        let swap = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(e1.image(&swap, TOL).unwrap().distance(&e2).unwrap() < 1e-15);
        assert!(e1.image(&Matrix::identity(3), TOL).is_err());
        let k = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let null = Subspace::from_spanning(&Matrix::column_vector(&[2.0, -1.0]), TOL).unwrap();
        assert!(null.image(&k, TOL).unwrap().is_zero());
    }

    #[test]
    fn containment_examples() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        let full = Subspace::full(2);
        assert!(full.contains(&e1, TOL).unwrap());
        assert!(!e1.contains(&e2, TOL).unwrap());
        assert!(e1.contains(&e1, TOL).unwrap());
        assert!(e1.contains(&Subspace::zero(2), TOL).unwrap());
        assert!(e1.contains(&Subspace::full(3), TOL).is_err());
    }

    fn random_subspace(rng: &mut Rng, n: usize, k: usize) -> Subspace {
        Subspace::from_spanning(&rng.gaussian_matrix(n, k), TOL).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // π_W·Tᵀ = π_W·Tᵀ·π_{T(W)}
        #[test]
        fn projection_identity_through_image(seed in any::<u64>(), n in 2usize..7, k in 1usize..4, rank_cut in 0usize..3) {
            let mut rng = Rng::new(seed);
            let k = k.min(n);
            let w = random_subspace(&mut rng, n, k);
            let t = if rank_cut == 0 {
                rng.gaussian_matrix(n, n)
            } else {
                let r = n.saturating_sub(rank_cut).max(1);
                &rng.gaussian_matrix(n, r) * &rng.gaussian_matrix(r, n)
            };
            let tw = w.image(&t, TOL).unwrap();
            let lhs = &w.projection() * &t.transpose();
            let rhs = &lhs * &tw.projection();
            prop_assert!((&lhs - &rhs).max_abs() <= 1e-9 * (1.0 + t.max_abs()));

            let p = tw.projection();
            prop_assert!((&(&p * &p) - &p).max_abs() < 1e-12);
            prop_assert!(p.asymmetry() == 0.0);
        }

        #[test]
        fn mutual_containment_means_equal(seed in any::<u64>(), n in 2usize..7, k in 0usize..4) {
            let mut rng = Rng::new(seed);
            let k = k.min(n);
            let w = random_subspace(&mut rng, n, k);
            let v = Subspace::from_spanning(&(&w.basis().clone() * &rng.gaussian_matrix(k, k)), TOL).unwrap();
            let v = if k == 0 { Subspace::zero(n) } else { v };
            prop_assert!(w.contains(&v, 1e-9).unwrap() && v.contains(&w, 1e-9).unwrap());
            prop_assert_eq!(w.dim(), v.dim());
            prop_assert!(w.distance(&v).unwrap() <= 1e-9);
        }
    }
}
