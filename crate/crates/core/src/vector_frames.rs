//! Vector frames and K-frames, and the passage from a fusion system with
//! local frames to the flattened vector frame `{w_i f_ij}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{BoundsReport, WeightedSubspaceSystem};
use crate::kfusion::{operator_k_bounds, KFusionReport};
use crate::linalg::{check_finite, norm, pinv, sym_eig, Matrix};
use crate::report::Outcome;

/// Finite list of vectors in ℝⁿ, stored as the columns of an `n × J` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFrame {
    vectors: Matrix,
}

impl VectorFrame {
    pub fn new(ambient_dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if ambient_dim == 0 || vectors.is_empty() {
            return Err(Error::Input("a vector frame needs a positive dimension and at least one vector".into()));
        }
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::Dimension(format!("vector {j} has length {}, expected {ambient_dim}", v.len())));
            }
            check_finite(v, "frame vector")?;
        }
        Ok(Self { vectors: Matrix::from_columns(ambient_dim, vectors) })
    }

    /// Columns of `m` as the frame vectors.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::Input("a vector frame needs a positive dimension and at least one vector".into()));
        }
        Ok(Self { vectors: m })
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn len(&self) -> usize {
        self.vectors.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Synthesis matrix: the vectors as columns.
    pub fn synthesis_matrix(&self) -> &Matrix {
        &self.vectors
    }

    /// `S = Σ f_i f_iᵀ`.
    pub fn frame_operator(&self) -> Matrix {
        self.vectors.gram_outer()
    }
}

pub fn vector_frame_bounds(frame: &VectorFrame, tol: f64) -> Result<BoundsReport> {
    BoundsReport::from_operator(&frame.frame_operator(), tol)
}

/// K-frame verdict with its atomic-system evidence.
///
/// When verified, `gamma = T†K` gives coefficients `a = Γf` with `Kf = Σ a_i f_i`.
/// When refuted, `obstruction` is an `f` with `Kf ∉ span{f_i}`, so no
/// coefficients reproduce it whatever the constant.
#[derive(Debug, Clone, Serialize)]
pub struct KFrameReport {
    pub bounds: KFusionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Matrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<Vec<f64>>,
}

impl KFrameReport {
    /// `‖Γ‖₂`, the uniform constant of the atomic system.
    pub fn constant(&self) -> Option<f64> {
        self.gamma.as_ref().map(Matrix::spectral_norm)
    }

    pub fn coefficients(&self, f: &[f64]) -> Option<Vec<f64>> {
        self.gamma.as_ref().map(|g| g.matvec(f))
    }
}

pub fn kframe_verify(frame: &VectorFrame, k: &Matrix, tol: f64) -> Result<KFrameReport> {
    let n = frame.ambient_dim();
    if k.shape() != (n, n) {
        return Err(Error::Dimension(format!("K is {}×{}, frame lives in ℝ^{n}", k.rows(), k.cols())));
    }
    let bounds = operator_k_bounds(&frame.frame_operator(), k, tol)?;
    if bounds.is_kff {
        let gamma = &pinv(frame.synthesis_matrix()) * k;
        Ok(KFrameReport { bounds, gamma: Some(gamma), obstruction: None })
    } else {
        // g ⊥ span{f_i} with Kᵀg ≠ 0; then ⟨K·Kᵀg, g⟩ = ‖Kᵀg‖² > 0 puts K(Kᵀg) outside the span.
        let obstruction = bounds.defect_direction.as_ref().map(|g| k.transpose().matvec(g));
        Ok(KFrameReport { bounds, gamma: None, obstruction })
    }
}

/// Distance from `K·f` to `span{f_i}`, relative to `‖K·f‖`.
pub fn unreachable_fraction(frame: &VectorFrame, k: &Matrix, f: &[f64]) -> f64 {
    let kf = k.matvec(f);
    let nk = norm(&kf);
    if nk == 0.0 {
        return 0.0;
    }
    let t = frame.synthesis_matrix();
    let proj = t.matvec(&pinv(t).matvec(&kf));
    norm(&crate::linalg::matrix::sub(&kf, &proj)) / nk
}

/// Local frame bounds of one member, computed in the coordinates of its subspace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalBounds {
    pub lower: f64,
    pub upper: f64,
    pub spans: bool,
}

/// Comparison of a fusion system with local frames against the flattened frame `{w_i f_ij}`.
#[derive(Debug, Clone, Serialize)]
pub struct LocalToGlobalReport {
    /// One entry per member; `None` for zero subspaces.
    pub local_bounds: Vec<Option<LocalBounds>>,
    /// `min A_i` over nonzero members (0 if some local frame fails to span).
    pub c: f64,
    /// `max B_i` over nonzero members.
    pub d: f64,
    pub fusion: BoundsReport,
    pub global: BoundsReport,
    /// Global verdict agrees with the fusion verdict.
    pub equivalence_holds: bool,
    /// Global bounds inside `[A·C, B·D]` up to tolerance.
    pub interval_holds: bool,
    /// The fusion verdict clears the frame threshold by the local condition
    /// ratio `D/C`, so the global verdict is decided at this tolerance.
    pub verdict_resolvable: bool,
    pub outcome: Outcome,
}

/// Membership tolerance for local frame vectors, relative to the largest vector.
fn check_local_frame(i: usize, basis: &Matrix, frame: &Matrix, tol: f64) -> Result<()> {
    let scale = frame.columns().iter().map(|v| norm(v)).fold(0.0, f64::max);
    for (j, v) in frame.columns().iter().enumerate() {
        let coords = basis.transpose().matvec(v);
        let off = norm(&crate::linalg::matrix::sub(v, &basis.matvec(&coords)));
        if off > tol.max(1e-12) * scale {
            return Err(Error::Input(format!(
                "member {i}: local frame vector {j} lies outside its subspace (defect {off:.3e})"
            )));
        }
    }
    Ok(())
}

pub fn local_to_global(system: &WeightedSubspaceSystem, tol: f64) -> Result<LocalToGlobalReport> {
    let n = system.ambient_dim();
    let mut local_bounds = Vec::with_capacity(system.len());
    let mut global_vectors: Vec<Vec<f64>> = Vec::new();
    let mut all_span = true;
    let (mut c, mut d) = (f64::INFINITY, 0.0_f64);
    for (i, m) in system.members().iter().enumerate() {
        let frame = m
            .local_frame
            .as_ref()
            .ok_or_else(|| Error::Input(format!("member {i} has no local frame")))?;
        let basis = m.subspace.basis();
        check_local_frame(i, basis, frame, tol)?;
        global_vectors.extend(frame.columns().into_iter().map(|v| v.into_iter().map(|x| m.weight * x).collect()));
        if m.subspace.is_zero() {
            local_bounds.push(None);
            continue;
        }
        let coords = &basis.transpose() * frame;
        let spec = sym_eig(&coords.gram_outer())?;
        let upper = spec.max().max(0.0);
        let lower = spec.min().clamp(0.0, upper);
        let spans = lower > tol * upper;
        all_span &= spans;
        c = c.min(lower);
        d = d.max(upper);
        local_bounds.push(Some(LocalBounds { lower, upper, spans }));
    }
    if !all_span || c.is_infinite() {
        c = 0.0;
    }

    let fusion = system.bounds(tol)?;
    let global = if global_vectors.is_empty() {
        BoundsReport::from_operator(&Matrix::zeros(n, n), tol)?
    } else {
        vector_frame_bounds(&VectorFrame::new(n, &global_vectors)?, tol)?
    };
    let equivalence_holds = fusion.verdict.is_frame() == global.verdict.is_frame();
    let scale = (fusion.upper * d).max(f64::MIN_POSITIVE);
    let interval_holds =
        global.lower >= fusion.lower * c - tol * scale && global.upper <= fusion.upper * d + tol * scale;
    let spread = if c > 0.0 { d / c } else { f64::INFINITY };
    let verdict_resolvable =
        fusion.lower > tol * fusion.upper * spread || fusion.lower <= tol * fusion.upper / spread;
    let outcome = Outcome::from_assertion(all_span && verdict_resolvable, equivalence_holds && interval_holds);
    Ok(LocalToGlobalReport {
        local_bounds,
        c,
        d,
        fusion,
        global,
        equivalence_holds,
        interval_holds,
        verdict_resolvable,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::Member;
    use crate::generator::{generate, Flavor, GenSpec, Rng};
    use crate::kfusion::kfusion_verify;
    use crate::subspaces::Subspace;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn bounds_examples() {
        let onb = VectorFrame::new(3, &[e(3, 0), e(3, 1), e(3, 2)]).unwrap();
        let b = vector_frame_bounds(&onb, TOL).unwrap();
        assert_eq!((b.lower, b.upper, b.verdict), (1.0, 1.0, crate::fusion::Verdict::Parseval));
        let f = VectorFrame::new(2, &[e(2, 0), e(2, 0), e(2, 1)]).unwrap();
        let b = vector_frame_bounds(&f, TOL).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-14 && (b.upper - 2.0).abs() < 1e-14);
        let b = vector_frame_bounds(&VectorFrame::new(2, &[e(2, 0)]).unwrap(), TOL).unwrap();
        assert_eq!((b.lower, b.verdict), (0.0, crate::fusion::Verdict::BesselOnly));
        assert!(VectorFrame::new(2, &[]).is_err());
        assert!(VectorFrame::new(2, &[vec![1.0]]).is_err());
    }

    #[test]
    fn kframe_examples() {
        let f = VectorFrame::new(2, &[e(2, 0)]).unwrap();
        let r = kframe_verify(&f, &Matrix::from_diag(&[1.0, 0.0]), TOL).unwrap();
        assert!(r.bounds.is_kff && (r.bounds.optimal_lower - 1.0).abs() < 1e-12 && (r.bounds.optimal_upper - 1.0).abs() < 1e-12);
        let r = kframe_verify(&f, &Matrix::identity(2), TOL).unwrap();
        assert!(!r.bounds.is_kff);
        let g = r.obstruction.unwrap();
        assert!(unreachable_fraction(&f, &Matrix::identity(2), &g) > 0.99);
        assert!(kframe_verify(&f, &Matrix::identity(3), TOL).is_err());
    }

    fn member(n: usize, axes: &[usize], frame: &[Vec<f64>]) -> Member {
        Member::new(Subspace::coordinate(n, axes), 1.0).with_local_frame(Matrix::from_columns(n, frame))
    }

    #[test]
    fn local_to_global_examples() {
        let sys = WeightedSubspaceSystem::new(3, vec![member(3, &[0, 1], &[e(3, 0), e(3, 1)]), member(3, &[2], &[e(3, 2)])]).unwrap();
        let r = local_to_global(&sys, TOL).unwrap();
        assert_eq!((r.c, r.d), (1.0, 1.0));
        assert_eq!((r.global.lower, r.global.upper), (1.0, 1.0));
        assert_eq!(r.outcome, Outcome::Confirmed);

        let sys = WeightedSubspaceSystem::new(1, vec![member(1, &[0], &[e(1, 0), e(1, 0)])]).unwrap();
        let r = local_to_global(&sys, TOL).unwrap();
        assert_eq!(r.local_bounds[0], Some(LocalBounds { lower: 2.0, upper: 2.0, spans: true }));
        assert_eq!((r.global.lower, r.global.upper), (2.0, 2.0));
        assert!(r.interval_holds);

        let outside = WeightedSubspaceSystem::new(2, vec![member(2, &[0], &[vec![1.0, 1.0]])]).unwrap();
        assert!(matches!(local_to_global(&outside, TOL), Err(Error::Input(_))));
        let bare = WeightedSubspaceSystem::unweighted(2, vec![Subspace::full(2)]).unwrap();
        assert!(matches!(local_to_global(&bare, TOL), Err(Error::Input(_))));

        let not_spanning = WeightedSubspaceSystem::new(2, vec![member(2, &[0, 1], &[e(2, 0)])]).unwrap();
        let r = local_to_global(&not_spanning, TOL).unwrap();
        assert_eq!(r.c, 0.0);
        assert_eq!(r.outcome, Outcome::Vacuous);

        let tiny = vec![2e-5, 0.0];
        let uneven = WeightedSubspaceSystem::new(2, vec![member(2, &[0], &[tiny]), member(2, &[1], &[e(2, 1)])]).unwrap();
        let r = local_to_global(&uneven, TOL).unwrap();
        assert!(r.fusion.verdict.is_frame() && !r.global.verdict.is_frame());
        assert!(!r.verdict_resolvable);
        assert_eq!(r.outcome, Outcome::Vacuous);
    }

    /// Attaches a random spanning local frame (or a Parseval one) to every member.
    fn with_local_frames(sys: &WeightedSubspaceSystem, rng: &mut Rng, parseval: bool) -> WeightedSubspaceSystem {
        let n = sys.ambient_dim();
        let members = sys
            .members()
            .iter()
            .map(|m| {
                let k = m.subspace.dim();
                let frame = if parseval {
                    m.subspace.basis().clone()
                } else {
                    let extra = rng.range_inclusive(0, 2);
                    m.subspace.basis() * &rng.gaussian_matrix(k, k + extra)
                };
                let frame = if k == 0 { Matrix::zeros(n, 1) } else { frame };
                Member::new(m.subspace.clone(), m.weight).with_local_frame(frame)
            })
            .collect();
        WeightedSubspaceSystem::new(n, members).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn identity_kframe_is_ordinary_frame(seed in any::<u64>(), n in 1usize..6, j in 1usize..8) {
            let frame = VectorFrame::from_matrix(Rng::new(seed).gaussian_matrix(n, j)).unwrap();
            let b = vector_frame_bounds(&frame, TOL).unwrap();
            let r = kframe_verify(&frame, &Matrix::identity(n), TOL).unwrap();
            prop_assert_eq!(r.bounds.is_kff, b.verdict.is_frame());
            if r.bounds.is_kff {
                prop_assert!((r.bounds.optimal_lower - b.lower).abs() <= 1e-10 * b.upper);
            }
            prop_assert!((r.bounds.optimal_upper - b.upper).abs() <= 1e-12 * b.upper.max(1.0));
        }

        #[test]
        fn atomic_system_both_directions(seed in any::<u64>(), n in 2usize..6, j in 1usize..6, low in any::<bool>()) {
            let mut rng = Rng::new(seed);
            let frame = VectorFrame::from_matrix(rng.gaussian_matrix(n, j)).unwrap();
            let k = if low { &frame.frame_operator() * &rng.gaussian_matrix(n, n) } else { rng.gaussian_matrix(n, n) };
            let r = kframe_verify(&frame, &k, TOL).unwrap();
            if let Some(c) = r.constant() {
                for _ in 0..20 {
                    let f = rng.gaussian_vector(n);
                    let a = r.coefficients(&f).unwrap();
                    let recon = frame.synthesis_matrix().matvec(&a);
                    let kf = k.matvec(&f);
                    prop_assert!(norm(&crate::linalg::matrix::sub(&recon, &kf)) <= 1e-8 * (1.0 + norm(&kf)));
                    prop_assert!(norm(&a) <= c * norm(&f) * (1.0 + 1e-9));
                }
            } else {
                let g = r.obstruction.unwrap();
                prop_assert!(unreachable_fraction(&frame, &k, &g) > 1e-6);
            }
        }

        #[test]
        fn local_to_global_random(seed in any::<u64>(), n in 1usize..6) {
            let sys = generate(&GenSpec::new(seed, Flavor::Arbitrary).with_shape(n, 3, (0, n))).unwrap().system;
            let mut rng = Rng::new(seed ^ 5);
            let sys = with_local_frames(&sys, &mut rng, false);
            let r = local_to_global(&sys, TOL).unwrap();
            prop_assert!(r.outcome.is_consistent(), "{:?}", r);
        }

        #[test]
        fn parseval_local_frames_carry_k_frames(seed in any::<u64>(), n in 2usize..6) {
            let inst = generate(&GenSpec::new(seed, Flavor::GuaranteedKFusionFrame).with_shape(n, 3, (1, n))).unwrap();
            let k = inst.operator.unwrap();
            let sys = with_local_frames(&inst.system, &mut Rng::new(seed), true);
            prop_assert!(kfusion_verify(&sys, &k, TOL).unwrap().is_kff);
            let flat: Vec<Vec<f64>> = sys.members().iter().flat_map(|m| {
                m.local_frame.as_ref().unwrap().columns().into_iter().map(move |v| v.into_iter().map(|x| m.weight * x).collect::<Vec<_>>())
            }).collect();
            let r = kframe_verify(&VectorFrame::new(n, &flat).unwrap(), &k, TOL).unwrap();
            prop_assert!(r.bounds.is_kff);
        }
    }
}
