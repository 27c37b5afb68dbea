//! New K-fusion frames from old: operator images, basis images and
//! perturbations, each with a checker for the statement it realizes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{Member, WeightedSubspaceSystem};
use crate::kfusion::{kfusion_verify, KFusionReport};
use crate::linalg::{pinv, svd, sym_eig, Matrix};
use crate::report::{all_hold, Hypothesis, Outcome};
use crate::subspaces::Subspace;

/// Relative singular value threshold for surjectivity and invertibility.
pub const RANK_DECISION_TOL: f64 = 1e-8;

/// Relative tolerance on weights when two systems must carry the same weights.
const WEIGHT_MATCH_TOL: f64 = 1e-12;

/// `{(T·W_i, w_i)}`; local frames are dropped.
pub fn transform_system(system: &WeightedSubspaceSystem, t: &Matrix, tol: f64) -> Result<WeightedSubspaceSystem> {
    system.check_operator(t, "T")?;
    let members = system
        .members()
        .iter()
        .map(|m| Ok(Member::new(m.subspace.image(t, tol)?, m.weight)))
        .collect::<Result<Vec<_>>>()?;
    WeightedSubspaceSystem::new(system.ambient_dim(), members)
}

fn full_rank(t: &Matrix) -> (bool, f64) {
    let d = svd(t);
    let smax = d.sigma_max();
    let smin = d.singular_values.last().copied().unwrap_or(0.0);
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    (smax > 0.0 && smin > RANK_DECISION_TOL * smax, ratio)
}

fn commutation(t: &Matrix, k: &Matrix, tol: f64) -> Hypothesis {
    let scale = t.spectral_norm() * k.spectral_norm();
    let defect = (&(t * k) - &(k * t)).spectral_norm();
    let margin = if scale > 0.0 { defect / scale } else { 0.0 };
    Hypothesis::new("tk_equals_kt", margin <= tol, margin)
}

/// Largest containment defect of `P·W_i` in `W_i` over the members.
fn invariance(system: &WeightedSubspaceSystem, p: &Matrix, name: &str, tol: f64) -> Result<Hypothesis> {
    let mut worst = 0.0_f64;
    for m in system.members() {
        let image = m.subspace.image(p, tol)?;
        worst = worst.max(m.subspace.containment_defect(&image)?);
    }
    Ok(Hypothesis::new(name, worst <= tol.max(1e-9), worst))
}

fn base_verified(report: &KFusionReport) -> Hypothesis {
    Hypothesis::new("base_is_k_fusion_frame", report.is_kff, report.residual)
}

/// Image of a K-fusion frame under a surjective `T` commuting with `K`.
#[derive(Debug, Clone, Serialize)]
pub struct CommutingImageReport {
    pub system: WeightedSubspaceSystem,
    pub hypotheses: Vec<Hypothesis>,
    /// `(A·‖Tᵀ‖⁻²·‖(T†)ᵀ‖⁻², B·‖T†‖²·‖T‖²)`.
    pub predicted_lower: Option<f64>,
    pub predicted_upper: Option<f64>,
    pub transformed: KFusionReport,
    pub outcome: Outcome,
}

pub fn commuting_image_construct(
    system: &WeightedSubspaceSystem,
    k: &Matrix,
    t: &Matrix,
    tol: f64,
) -> Result<CommutingImageReport> {
    system.check_operator(k, "K")?;
    system.check_operator(t, "T")?;
    let base = kfusion_verify(system, k, tol)?;
    let t_pinv = pinv(t);
    let (surjective, ratio) = full_rank(t);
    let hypotheses = vec![
        base_verified(&base),
        commutation(t, k, tol),
        invariance(system, &(&t_pinv * t), "pseudo_inverse_invariance", tol)?,
        Hypothesis::new("t_surjective", surjective, ratio),
    ];
    let image = transform_system(system, t, tol)?;
    let transformed = kfusion_verify(&image, k, tol)?;
    let holds = all_hold(&hypotheses);
    let (mut predicted_lower, mut predicted_upper) = (None, None);
    let mut conclusion = transformed.is_kff;
    if holds {
        let tn = t.spectral_norm();
        let tpn = t_pinv.spectral_norm();
        let a = base.optimal_lower / (tn * tn * tpn * tpn);
        let b = base.optimal_upper * tpn * tpn * tn * tn;
        let lower_ok = a.is_infinite() || transformed.optimal_lower >= a * (1.0 - tol);
        let upper_ok = transformed.optimal_upper <= b * (1.0 + tol);
        conclusion &= lower_ok && upper_ok;
        predicted_lower = Some(a);
        predicted_upper = Some(b);
    }
    Ok(CommutingImageReport {
        system: image,
        hypotheses,
        predicted_lower,
        predicted_upper,
        transformed,
        outcome: Outcome::from_assertion(holds, conclusion),
    })
}

/// "The image under `T` stays a K-fusion frame ⟹ `T` is surjective", for full-rank `K`.
#[derive(Debug, Clone, Serialize)]
pub struct SurjectivityReport {
    pub base_verified: bool,
    pub transformed_verified: bool,
    pub t_rank: usize,
    pub surjective: bool,
    pub outcome: Outcome,
}

pub fn surjectivity_check(
    system: &WeightedSubspaceSystem,
    k: &Matrix,
    t: &Matrix,
    tol: f64,
) -> Result<SurjectivityReport> {
    system.check_operator(k, "K")?;
    system.check_operator(t, "T")?;
    if !full_rank(k).0 {
        return Err(Error::Precondition("K must have full rank".into()));
    }
    let base = kfusion_verify(system, k, tol)?;
    let image = transform_system(system, t, tol)?;
    let transformed = kfusion_verify(&image, k, tol)?;
    let t_rank = svd(t).rank(RANK_DECISION_TOL);
    let surjective = t_rank == system.ambient_dim();
    Ok(SurjectivityReport {
        base_verified: base.is_kff,
        transformed_verified: transformed.is_kff,
        t_rank,
        surjective,
        outcome: Outcome::from_assertion(base.is_kff && transformed.is_kff, surjective),
    })
}

/// "Both `T·𝒲` and `Tᵀ·𝒲` are K-fusion frames ⟹ `T` invertible", for
/// invertible `K` commuting with `T`.
#[derive(Debug, Clone, Serialize)]
pub struct InvertibilityReport {
    pub hypotheses: Vec<Hypothesis>,
    pub image_verified: bool,
    pub adjoint_image_verified: bool,
    pub invertible: bool,
    pub outcome: Outcome,
}

pub fn invertibility_check(
    system: &WeightedSubspaceSystem,
    k: &Matrix,
    t: &Matrix,
    tol: f64,
) -> Result<InvertibilityReport> {
    system.check_operator(k, "K")?;
    system.check_operator(t, "T")?;
    let base = kfusion_verify(system, k, tol)?;
    let (k_invertible, k_ratio) = full_rank(k);
    let mut hypotheses = vec![
        base_verified(&base),
        Hypothesis::new("k_invertible", k_invertible, k_ratio),
        commutation(t, k, tol),
    ];
    let image_verified = kfusion_verify(&transform_system(system, t, tol)?, k, tol)?.is_kff;
    let adjoint_image_verified = kfusion_verify(&transform_system(system, &t.transpose(), tol)?, k, tol)?.is_kff;
    hypotheses.push(Hypothesis::new("image_is_k_fusion_frame", image_verified, 0.0));
    hypotheses.push(Hypothesis::new("adjoint_image_is_k_fusion_frame", adjoint_image_verified, 0.0));
    let invertible = full_rank(t).0;
    let holds = all_hold(&hypotheses);
    Ok(InvertibilityReport {
        hypotheses,
        image_verified,
        adjoint_image_verified,
        invertible,
        outcome: Outcome::from_assertion(holds, invertible),
    })
}

/// `{(span(K·e_i), 1)}`; columns of `K` that vanish (relative to `tol·‖K‖`) give zero subspaces.
pub fn basis_image_system(k: &Matrix, tol: f64) -> Result<(WeightedSubspaceSystem, KFusionReport)> {
    if !k.is_square() || k.rows() == 0 {
        return Err(Error::Dimension(format!("K must be square and non-empty, got {}×{}", k.rows(), k.cols())));
    }
    let n = k.rows();
    let subspaces = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            Subspace::from_spanning(&Matrix::column_vector(&e), tol)?.image(k, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let system = WeightedSubspaceSystem::unweighted(n, subspaces)?;
    let report = kfusion_verify(&system, k, tol)?;
    Ok((system, report))
}

/// `{(K·W_i, w_i)}` built from a fusion frame whose subspaces are invariant under `K†K`.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorImageReport {
    pub system: WeightedSubspaceSystem,
    pub hypotheses: Vec<Hypothesis>,
    pub transformed: KFusionReport,
    pub outcome: Outcome,
}

pub fn operator_image_construct(system: &WeightedSubspaceSystem, k: &Matrix, tol: f64) -> Result<OperatorImageReport> {
    system.check_operator(k, "K")?;
    let bounds = system.bounds(tol)?;
    if !bounds.verdict.is_frame() {
        return Err(Error::Precondition("the input system is not a fusion frame".into()));
    }
    let hypotheses = vec![invariance(system, &(&pinv(k) * k), "pseudo_inverse_invariance", tol)?];
    let image = transform_system(system, k, tol)?;
    let transformed = kfusion_verify(&image, k, tol)?;
    let outcome = Outcome::from_assertion(all_hold(&hypotheses), transformed.is_kff);
    Ok(OperatorImageReport { system: image, hypotheses, transformed, outcome })
}

/// Perturbation parameters `λ₁, λ₂, μ ≥ 0` in
/// `(Σ w_i²‖(π_{W_i} − π_{V_i})f‖²)^{1/2} ≤ λ₁(Σ w_i²‖π_{W_i}f‖²)^{1/2}
///  + λ₂(Σ w_i²‖π_{V_i}f‖²)^{1/2} + μ‖Kᵀf‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: f64,
}

impl PerturbationParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("mu", self.mu)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// `max(λ₁ + μ/√A, λ₂) < 1`.
    pub fn admissible(&self, lower: f64) -> bool {
        self.lambda1 + self.mu / lower.sqrt() < 1.0 && self.lambda2 < 1.0
    }
}

/// Bounds `(A', B')` for the perturbed system, given K-bounds `(A, B)` of the original:
/// `A' = A(1 − (λ₁+λ₂+μ/√A)/(1+λ₂))²`, `B' = B(1 + (λ₁+λ₂+μ/√A)/(1−λ₂))²`.
pub fn perturbation_predict(lower: f64, upper: f64, p: &PerturbationParams) -> Result<(f64, f64)> {
    p.validate()?;
    // A may exceed B for K-fusion frames: the two bounds control ‖Kᵀf‖ and ‖f‖.
    if !(lower > 0.0 && lower.is_finite() && upper > 0.0 && upper.is_finite()) {
        return Err(Error::Input(format!("need 0 < A, B < ∞, got A = {lower}, B = {upper}")));
    }
    if !p.admissible(lower) {
        return Err(Error::Inadmissible(format!(
            "max(λ₁ + μ/√A, λ₂) = {} ≥ 1",
            (p.lambda1 + p.mu / lower.sqrt()).max(p.lambda2)
        )));
    }
    let s = p.lambda1 + p.lambda2 + p.mu / lower.sqrt();
    let a = lower * (1.0 - s / (1.0 + p.lambda2)).powi(2);
    let b = upper * (1.0 + s / (1.0 - p.lambda2)).powi(2);
    Ok((a, b))
}

fn check_same_shape(w: &WeightedSubspaceSystem, v: &WeightedSubspaceSystem) -> Result<()> {
    if w.ambient_dim() != v.ambient_dim() || w.len() != v.len() {
        return Err(Error::Dimension(format!(
            "systems differ in shape: {} members in ℝ^{} vs {} members in ℝ^{}",
            w.len(),
            w.ambient_dim(),
            v.len(),
            v.ambient_dim()
        )));
    }
    for (i, (a, b)) in w.members().iter().zip(v.members()).enumerate() {
        if (a.weight - b.weight).abs() > WEIGHT_MATCH_TOL * a.weight.max(b.weight) {
            return Err(Error::Input(format!("member {i} has weight {} vs {}", a.weight, b.weight)));
        }
    }
    Ok(())
}

/// `D = Σ w_i² (π_{W_i} − π_{V_i})²`, so that the left side of the hypothesis,
/// in energy form, is `⟨Df, f⟩^{1/2}`.
fn difference_energy(w: &WeightedSubspaceSystem, v: &WeightedSubspaceSystem) -> Matrix {
    let n = w.ambient_dim();
    let mut d = Matrix::zeros(n, n);
    for (a, b) in w.members().iter().zip(v.members()) {
        let diff = &a.subspace.projection() - &b.subspace.projection();
        d = &d + &(&diff * &diff).scale(a.weight * a.weight);
    }
    d.symmetrized()
}

/// Smallest `λ₁` with `λ₂ = μ = 0`: `λ₁ = λ_max(S^{-1/2} D S^{-1/2})^{1/2}`.
/// Requires `S_W` invertible.
pub fn perturbation_estimate(
    w: &WeightedSubspaceSystem,
    v: &WeightedSubspaceSystem,
    tol: f64,
) -> Result<PerturbationParams> {
    check_same_shape(w, v)?;
    let spec = sym_eig(&w.frame_operator())?;
    if !(spec.min() > tol * spec.max() && spec.max() > 0.0) {
        return Err(Error::Precondition("frame operator of the original system is singular".into()));
    }
    let inv_root = spec.map(|l| 1.0 / l.sqrt());
    let m = (&(&inv_root * &difference_energy(w, v)) * &inv_root).symmetrized();
    let top = sym_eig(&m)?.max().max(0.0);
    Ok(PerturbationParams { lambda1: top.sqrt(), lambda2: 0.0, mu: 0.0 })
}

/// Slack of the perturbation hypothesis at `f` (energy form); negative means violated.
pub fn perturbation_hypothesis_slack(
    w: &WeightedSubspaceSystem,
    v: &WeightedSubspaceSystem,
    k: &Matrix,
    p: &PerturbationParams,
    f: &[f64],
) -> Result<f64> {
    check_same_shape(w, v)?;
    let energy = |s: &Matrix| crate::linalg::dot(&s.matvec(f), f).max(0.0).sqrt();
    let lhs = energy(&difference_energy(w, v));
    let rhs = p.lambda1 * energy(&w.frame_operator())
        + p.lambda2 * energy(&v.frame_operator())
        + p.mu * crate::linalg::norm(&k.transpose().matvec(f));
    Ok(rhs - lhs)
}
