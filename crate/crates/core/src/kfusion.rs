//! K-fusion frames: verification by range inclusion, optimal bounds,
//! atomic decompositions and the inequality checks derived from them.
//!
//! A system with frame operator `S` is a K-fusion frame iff `R(K) ⊆ R(S^{1/2})`.
//! Factoring `K = S^{1/2}·T` with `T = (S^{1/2})†K`, the optimal lower bound is
//! `A = 1/‖T‖²` and the optimal upper bound is `λ_max(S)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{CoefficientBundle, WeightedSubspaceSystem};
use crate::linalg::{self, norm, pinv, sqrt_psd, svd, sym_eig, Matrix, DEFAULT_RANK_TOL};
use crate::report::{default_probes, InequalityCheck, Outcome};

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Input(format!("tolerance must be finite and non-negative, got {tol}")));
    }
    Ok(())
}

/// Solves `U = V·X` in the least-squares sense and accepts the solution when
/// `‖V·X − U‖_F ≤ tol·‖U‖_F`, i.e. when `R(U) ⊆ R(V)` numerically.
pub fn douglas_factor(u: &Matrix, v: &Matrix, tol: f64) -> Result<Matrix> {
    check_tol(tol)?;
    if u.rows() != v.rows() {
        return Err(Error::Dimension(format!(
            "cannot factor a {}-row operator through a {}-row one",
            u.rows(),
            v.rows()
        )));
    }
    let x = &pinv(v) * u;
    let residual = (&(v * &x) - u).frobenius_norm();
    if residual <= tol * u.frobenius_norm() {
        Ok(x)
    } else {
        Err(Error::Range { residual })
    }
}

/// Outcome of K-fusion verification.
///
/// `residual` is `‖S^{1/2}·T − K‖_F`, the range-inclusion defect. When the
/// inclusion fails `lower` is 0 and `defect_direction` is a unit vector in
/// `N(S)` that `Kᵀ` does not kill, so it drives `⟨Sf,f⟩ / ‖Kᵀf‖²` to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KFusionReport {
    pub is_kff: bool,
    #[serde(rename = "lower")]
    pub optimal_lower: f64,
    #[serde(rename = "upper")]
    pub optimal_upper: f64,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor_t: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect_direction: Option<Vec<f64>>,
}

/// K-bounds for an arbitrary PSD "frame operator" `s`; shared with vector frames.
pub fn operator_k_bounds(s: &Matrix, k: &Matrix, tol: f64) -> Result<KFusionReport> {
    check_tol(tol)?;
    if !s.is_square() || k.shape() != s.shape() {
        return Err(Error::Dimension(format!(
            "frame operator is {}×{}, K is {}×{}",
            s.rows(),
            s.cols(),
            k.rows(),
            k.cols()
        )));
    }
    let upper = sym_eig(s)?.max().max(0.0);
    let root = sqrt_psd(s)?;
    let t = &pinv(&root) * k;
    let defect = &(&root * &t) - k;
    let residual = defect.frobenius_norm();
    if residual <= tol * k.frobenius_norm() {
        let sigma = svd(&t).sigma_max();
        let lower = if sigma > 0.0 { 1.0 / (sigma * sigma) } else { f64::INFINITY };
        Ok(KFusionReport {
            is_kff: true,
            optimal_lower: lower,
            optimal_upper: upper,
            residual,
            factor_t: Some(t),
            defect_direction: None,
        })
    } else {
        // `defect = −(I − P_{R(S)})·K`; its top left singular vector lies in N(S).
        let d = svd(&defect);
        let direction = d.u.column(0);
        Ok(KFusionReport {
            is_kff: false,
            optimal_lower: 0.0,
            optimal_upper: upper,
            residual,
            factor_t: None,
            defect_direction: Some(direction),
        })
    }
}

pub fn kfusion_verify(system: &WeightedSubspaceSystem, k: &Matrix, tol: f64) -> Result<KFusionReport> {
    system.check_operator(k, "K")?;
    operator_k_bounds(&system.frame_operator(), k, tol)
}

/// Below this multiple of `‖K‖_F‖f‖`, `‖Kᵀf‖` is rounding noise and counts as zero.
const RATIO_NOISE: f64 = 64.0 * f64::EPSILON;

/// `⟨Sf,f⟩ / ‖Kᵀf‖²`; `+∞` when `Kᵀf` vanishes to rounding.
pub fn k_ratio(s: &Matrix, k: &Matrix, f: &[f64]) -> f64 {
    let sf = s.matvec(f);
    let kt = k.transpose().matvec(f);
    let den = norm(&kt);
    if den <= RATIO_NOISE * k.frobenius_norm() * norm(f) {
        f64::INFINITY
    } else {
        linalg::dot(&sf, f).max(0.0) / (den * den)
    }
}

/// A unit vector attaining the optimal lower bound: with `u` the top left
/// singular vector of `T`, `f = (S^{1/2})†u` gives `⟨Sf,f⟩ = 1` and `‖Kᵀf‖ = ‖T‖`.
pub fn extremal_direction(s: &Matrix, k: &Matrix, tol: f64) -> Result<Option<Vec<f64>>> {
    let report = operator_k_bounds(s, k, tol)?;
    let Some(t) = report.factor_t else { return Ok(None) };
    let d = svd(&t);
    if d.sigma_max() == 0.0 {
        return Ok(None);
    }
    let root = sqrt_psd(s)?;
    let f = pinv(&root).matvec(&d.u.column(0));
    let len = norm(&f);
    Ok(Some(f.into_iter().map(|x| x / len).collect()))
}

/// Precomputed map `Γ = T_𝒲†·K` from vectors to stacked local coordinates.
#[derive(Debug, Clone)]
pub struct AtomicDecomposer {
    system: WeightedSubspaceSystem,
    gamma: Matrix,
}

impl AtomicDecomposer {
    pub fn new(system: &WeightedSubspaceSystem, k: &Matrix, tol: f64) -> Result<Self> {
        let report = kfusion_verify(system, k, tol)?;
        if !report.is_kff {
            return Err(Error::Precondition(format!(
                "system is not a K-fusion frame (range residual {:.3e})",
                report.residual
            )));
        }
        let gamma = &pinv(&system.synthesis_matrix()) * k;
        Ok(Self { system: system.clone(), gamma })
    }

    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }

    /// `C = ‖Γ‖₂`, the bound `Σ‖a_i‖² ≤ C²‖f‖²`.
    pub fn constant(&self) -> f64 {
        self.gamma.spectral_norm()
    }

    pub fn decompose(&self, f: &[f64]) -> Result<CoefficientBundle> {
        self.system.analysis(f)?;
        Ok(self.system.bundle_from_coordinates(&self.gamma.matvec(f)))
    }
}

/// Blocks `a_i ∈ W_i` with `K·f = Σ w_i a_i` and `‖{a_i}‖ ≤ C‖f‖`.
#[derive(Debug, Clone, Serialize)]
pub struct AtomicDecomposition {
    pub gamma: Matrix,
    pub bundle: CoefficientBundle,
    pub constant_c: f64,
}

pub fn atomic_decompose(
    system: &WeightedSubspaceSystem,
    k: &Matrix,
    f: &[f64],
    tol: f64,
) -> Result<AtomicDecomposition> {
    let dec = AtomicDecomposer::new(system, k, tol)?;
    let bundle = dec.decompose(f)?;
    let constant_c = dec.constant();
    Ok(AtomicDecomposition { gamma: dec.gamma, bundle, constant_c })
}

/// The three norm inequalities implied by optimal K-bounds `A, B`.
#[derive(Debug, Clone, Serialize)]
pub struct NormChainReport {
    pub lower: f64,
    pub upper: f64,
    /// `‖K†‖₂`.
    pub pinv_norm: f64,
    /// `A·KKᵀ ≤ S ≤ B·I`.
    pub operator_chain: InequalityCheck,
    /// `A‖K†‖⁻²‖f‖ ≤ ‖Sf‖ ≤ B‖f‖` for `f ∈ R(K)`.
    pub range_norms: InequalityCheck,
    /// `B⁻¹‖f‖ ≤ ‖S⁻¹f‖ ≤ A⁻¹‖K†‖²‖f‖` for `f ∈ S(R(K))`, invertible `S` only.
    pub inverse_norms: Option<InequalityCheck>,
    /// The same chain with `S†` when `S` is singular.
    pub inverse_norms_pseudo: Option<InequalityCheck>,
    pub passed: bool,
}

pub fn norm_chain_check(system: &WeightedSubspaceSystem, k: &Matrix, tol: f64) -> Result<NormChainReport> {
    let probes = default_probes(system.ambient_dim(), 32);
    norm_chain_check_with(system, k, &probes, tol)
}

/// As [`norm_chain_check`], with `f = K·g` for each probe `g` plus a basis of `R(K)`.
pub fn norm_chain_check_with(
    system: &WeightedSubspaceSystem,
    k: &Matrix,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<NormChainReport> {
    let report = kfusion_verify(system, k, tol)?;
    if !report.is_kff {
        return Err(Error::Precondition("system is not a K-fusion frame".into()));
    }
    let (a, b) = (report.optimal_lower, report.optimal_upper);
    let n = system.ambient_dim();
    let s = system.frame_operator();
    let k_pinv = pinv(k);
    let kp = k_pinv.spectral_norm();

    let mut chain = InequalityCheck::new();
    if a.is_finite() {
        let akk = k.gram_outer().scale(a);
        let m = linalg::psd_margin(&akk, &s)?;
        chain.record(0.0, m, b, tol);
    }
    let m = linalg::psd_margin(&s, &Matrix::identity(n).scale(b))?;
    chain.record(0.0, m, b, tol);

    let kd = svd(k);
    let mut range_vectors: Vec<Vec<f64>> = kd.range_basis(DEFAULT_RANK_TOL).columns();
    range_vectors.extend(probes.iter().map(|g| k.matvec(g)));
    range_vectors.retain(|f| norm(f) > 0.0);

    let mut range_norms = InequalityCheck::new();
    for f in &range_vectors {
        let nf = norm(f);
        let sf = norm(&s.matvec(f));
        range_norms.record(a / (kp * kp) * nf, sf, b * nf, tol);
        range_norms.record(sf, b * nf, b * nf, tol);
    }

    let spec = sym_eig(&s)?;
    let invertible = spec.min() > tol.max(DEFAULT_RANK_TOL) * spec.max();
    let cut = DEFAULT_RANK_TOL * spec.max();
    let s_inv = spec.map(|l| if l > cut { 1.0 / l } else { 0.0 });
    let mut inverse = InequalityCheck::new();
    for h in &range_vectors {
        let f = s.matvec(h);
        let nf = norm(&f);
        if nf == 0.0 {
            continue;
        }
        let x = norm(&s_inv.matvec(&f));
        let upper_rhs = kp * kp / a * nf;
        inverse.record(nf / b, x, upper_rhs, tol);
        inverse.record(x, upper_rhs, upper_rhs, tol);
    }
    let (inverse_norms, inverse_norms_pseudo) = if invertible { (Some(inverse), None) } else { (None, Some(inverse)) };

    let passed = chain.passed && range_norms.passed && inverse_norms.is_none_or(|c| c.passed);
    Ok(NormChainReport {
        lower: a,
        upper: b,
        pinv_norm: kp,
        operator_chain: chain,
        range_norms,
        inverse_norms,
        inverse_norms_pseudo,
        passed,
    })
}

/// The blocks `a_i = w_i π_{W_i} f` reconstruct `Sf` with `Σ‖a_i‖² ≤ C²‖f‖²`, `C = √B`.
#[derive(Debug, Clone, Serialize)]
pub struct CanonicalDecompositionReport {
    pub constant_c: f64,
    /// Worst `‖Σ w_i a_i − Sf‖ / (‖S‖‖f‖)`.
    pub worst_reconstruction: f64,
    pub norm_bound: InequalityCheck,
    pub passed: bool,
}

pub fn canonical_decomposition_check(system: &WeightedSubspaceSystem, tol: f64) -> Result<CanonicalDecompositionReport> {
    let n = system.ambient_dim();
    let mut probes = default_probes(n, 100);
    let spec = sym_eig(&system.frame_operator())?;
    probes.extend((0..n).map(|j| spec.eigenvector(j)));
    canonical_decomposition_check_with(system, &probes, tol)
}

pub fn canonical_decomposition_check_with(
    system: &WeightedSubspaceSystem,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<CanonicalDecompositionReport> {
    check_tol(tol)?;
    let s = system.frame_operator();
    let b = sym_eig(&s)?.max().max(0.0);
    let c = b.sqrt();
    let mut worst = 0.0_f64;
    let mut bound = InequalityCheck::new();
    for f in probes {
        let a = system.analysis(f)?;
        let recon = system.synthesis(&a)?;
        let nf = norm(f);
        if nf == 0.0 {
            continue;
        }
        let err = norm(&linalg::matrix::sub(&recon, &s.matvec(f)));
        worst = worst.max(if b > 0.0 { err / (b * nf) } else { err / nf });
        bound.record(a.norm(), c * nf, c * nf, tol);
    }
    Ok(CanonicalDecompositionReport { constant_c: c, worst_reconstruction: worst, norm_bound: bound, passed: worst <= tol && bound.passed })
}

/// `R(T) ⊆ R(K)` and a K-fusion frame make the system a T-fusion frame.
#[derive(Debug, Clone, Serialize)]
pub struct SubrangeReport {
    pub k_verified: bool,
    /// `‖(I − KK†)T‖_F / ‖T‖_F`.
    pub inclusion_residual: f64,
    pub inclusion_holds: bool,
    pub t_verified: bool,
    pub outcome: Outcome,
}

pub fn subrange_check(
    system: &WeightedSubspaceSystem,
    k: &Matrix,
    t: &Matrix,
    tol: f64,
) -> Result<SubrangeReport> {
    system.check_operator(t, "T")?;
    let k_report = kfusion_verify(system, k, tol)?;
    let t_report = kfusion_verify(system, t, tol)?;
    let proj = k * &pinv(k);
    let tn = t.frobenius_norm();
    let defect = (&(&proj * t) - t).frobenius_norm();
    let inclusion_residual = if tn > 0.0 { defect / tn } else { 0.0 };
    let inclusion_holds = inclusion_residual <= tol.max(1e-9);
    Ok(SubrangeReport {
        k_verified: k_report.is_kff,
        inclusion_residual,
        inclusion_holds,
        t_verified: t_report.is_kff,
        outcome: Outcome::from_assertion(k_report.is_kff && inclusion_holds, t_report.is_kff),
    })
}
