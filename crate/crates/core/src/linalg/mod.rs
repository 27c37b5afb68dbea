//! Dense real linear algebra: matrices, symmetric spectra, SVD,
//! pseudo-inverses and the Loewner (PSD) order.

pub mod eigen;
pub mod matrix;
pub mod psd;
pub mod qr;
pub mod svd;

pub use eigen::{sym_eig, Spectrum};
pub use matrix::{check_finite, dot, norm, Matrix};
pub use psd::{min_eigenvalue, psd_leq, psd_margin, sqrt_psd, sqrt_psd_with};
pub use qr::{qr_orthonormalize, qr_orthonormalize_scaled};
pub use svd::{penrose_residuals, pinv, projector_residuals, pseudo_inverse, rank, singular_values, svd, Svd};

/// Relative threshold (against σ_max or λ_max) below which singular values
/// and eigenvalues are treated as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
