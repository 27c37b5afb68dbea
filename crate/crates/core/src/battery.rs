//! The `check-all` property suite: every check runs a fixed number of seeded
//! trials and reports how many confirmed, were vacuous, or failed.
//!
//! Trial `t` of check `c` draws from `Rng::derive(seed, c·2³² + t)`, so a
//! failure is reproducible from the seed alone. Checks run on worker threads;
//! the report keeps declaration order.

use std::thread;

use serde::Serialize;

use crate::constructions::{
    basis_image_system, perturbation_estimate, perturbation_hypothesis_slack, perturbation_predict,
    operator_image_construct, surjectivity_check, commuting_image_construct, invertibility_check,
};
use crate::error::Result;
use crate::fusion::{Member, WeightedSubspaceSystem};
use crate::generator::{generate, Flavor, GenSpec, Rng};
use crate::kfusion::{
    douglas_factor, extremal_direction, k_ratio, kfusion_verify, norm_chain_check, canonical_decomposition_check,
    AtomicDecomposer,
};
use crate::linalg::{self, norm, penrose_residuals, pinv, projector_residuals, psd_leq, singular_values, Matrix};
use crate::report::Outcome;
use crate::subspaces::Subspace;
use crate::vector_frames::{kframe_verify, local_to_global, unreachable_fraction, VectorFrame};

/// Seed used by `check-all` when none is given.
pub const DEFAULT_SEED: u64 = 1;

/// Tolerance the checks run at.
pub const CHECK_TOL: f64 = 1e-9;

// ---------------------------------------------------------------- instances

/// `rows × cols` Gaussian matrix of rank `min(rank, rows, cols)`.
pub fn random_matrix_of_rank(rng: &mut Rng, rows: usize, cols: usize, rank: usize) -> Matrix {
    let r = rank.min(rows).min(cols);
    if r == 0 {
        return Matrix::zeros(rows, cols);
    }
    &rng.gaussian_matrix(rows, r) * &rng.gaussian_matrix(r, cols)
}

/// Random shape up to `max_dim × max_dim`; rank-deficient about half the time.
pub fn random_matrix(rng: &mut Rng, max_dim: usize) -> Matrix {
    let rows = rng.range_inclusive(1, max_dim);
    let cols = rng.range_inclusive(1, max_dim);
    let full = rows.min(cols);
    let rank = if rng.uniform() < 0.5 { full } else { rng.range_inclusive(0, full) };
    random_matrix_of_rank(rng, rows, cols, rank)
}

fn spec(rng: &mut Rng, flavor: Flavor, n: usize, m: usize) -> GenSpec {
    GenSpec::new(rng.next_u64(), flavor).with_shape(n, m, (1, n.min(3)))
}

/// A system and `K` with `R(K) ⊆ R(S)` by construction.
pub fn kff_instance(rng: &mut Rng, n: usize, m: usize) -> (WeightedSubspaceSystem, Matrix) {
    let inst = generate(&spec(rng, Flavor::GuaranteedKFusionFrame, n, m)).expect("valid spec");
    (inst.system, inst.operator.expect("K-flavor carries K"))
}

/// A spanning system (invertible `S`) with a Gaussian `K`.
pub fn frame_with_random_k(rng: &mut Rng, n: usize, m: usize) -> (WeightedSubspaceSystem, Matrix) {
    let sys = spanning_system(rng, n, m);
    (sys, rng.gaussian_matrix(n, n))
}

pub fn spanning_system(rng: &mut Rng, n: usize, m: usize) -> WeightedSubspaceSystem {
    let m = m.max(n.div_ceil(n.min(3)));
    generate(&spec(rng, Flavor::GuaranteedFusionFrame, n, m)).expect("valid spec").system
}

/// Subspace dimensions summing below `n` with a full-rank Gaussian `K`, so
/// verification must fail.
pub fn refuted_instance(rng: &mut Rng, n: usize) -> (WeightedSubspaceSystem, Matrix) {
    let n = n.max(2);
    let total = rng.range_inclusive(1, n - 1);
    let mut members = Vec::new();
    let mut left = total;
    while left > 0 {
        let d = rng.range_inclusive(1, left);
        left -= d;
        let w = rng.uniform_in(0.5, 2.0);
        members.push(Member::new(Subspace::from_spanning(&rng.gaussian_matrix(n, d), 1e-10).expect("finite"), w));
    }
    let sys = WeightedSubspaceSystem::new(n, members).expect("valid members");
    (sys, rng.gaussian_matrix(n, n))
}

/// Commuting `(K, T)` with `T` invertible and well conditioned.
pub fn commuting_pair(rng: &mut Rng, n: usize) -> (Matrix, Matrix) {
    let spread = |rng: &mut Rng| {
        let x = rng.uniform_in(0.5, 2.0);
        if rng.uniform() < 0.5 { -x } else { x }
    };
    match rng.range_inclusive(0, 2) {
        0 => (Matrix::identity(n), rng.orthogonal(n)),
        1 => {
            let q = rng.orthogonal(n);
            let lam: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let d: Vec<f64> = (0..n).map(|_| spread(rng)).collect();
            let k = &(&q * &Matrix::from_diag(&lam)) * &q.transpose();
            let t = &(&q * &Matrix::from_diag(&d)) * &q.transpose();
            (k.symmetrized(), t)
        }
        _ => {
            let k = rng.gaussian_matrix(n, n);
            let c = 0.3 / k.spectral_norm();
            let t = &(&Matrix::identity(n) + &k.scale(c)) + &(&k * &k).scale(c * c * rng.uniform_in(-1.0, 1.0));
            (k, t)
        }
    }
}

/// Commuting `(K, T)` where `K` is invertible and `T` may be singular.
pub fn commuting_sweep_pair(rng: &mut Rng, n: usize) -> (Matrix, Matrix) {
    match rng.range_inclusive(0, 2) {
        0 => {
            let q = rng.orthogonal(n);
            let lam: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.5, 2.0)).collect();
            let d: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.3 { 0.0 } else { rng.normal() }).collect();
            let k = &(&q * &Matrix::from_diag(&lam)) * &q.transpose();
            let t = &(&q * &Matrix::from_diag(&d)) * &q.transpose();
            (k.symmetrized(), t)
        }
        1 => {
            let k = rng.gaussian_matrix(n, n);
            let a = rng.normal();
            let b = rng.normal();
            let t = &Matrix::identity(n).scale(a) + &k.scale(b);
            (k, t)
        }
        _ => (Matrix::identity(n), sweep_operator(rng, n)),
    }
}

/// An operator `T` for contrapositive sweeps: invertible, orthogonal or rank-deficient.
pub fn sweep_operator(rng: &mut Rng, n: usize) -> Matrix {
    match rng.range_inclusive(0, 3) {
        0 => rng.gaussian_matrix(n, n),
        1 => rng.orthogonal(n),
        2 => {
            let r = rng.range_inclusive(0, n - 1);
            random_matrix_of_rank(rng, n, n, r)
        }
        _ => {
            let d: Vec<f64> = (0..n).map(|_| if rng.uniform() < 0.4 { 0.0 } else { rng.normal() }).collect();
            Matrix::from_diag(&d)
        }
    }
}

/// A system for the sweeps: spanning, or arbitrary (possibly not spanning).
pub fn sweep_system(rng: &mut Rng, n: usize, m: usize) -> WeightedSubspaceSystem {
    if rng.uniform() < 0.5 {
        spanning_system(rng, n, m)
    } else {
        generate(&spec(rng, Flavor::Arbitrary, n, m)).expect("valid spec").system
    }
}

/// Each subspace tilted by Gaussian noise of size `eps` (same dimension, same weight).
pub fn perturb_system(rng: &mut Rng, system: &WeightedSubspaceSystem, eps: f64) -> WeightedSubspaceSystem {
    let n = system.ambient_dim();
    let members = system
        .members()
        .iter()
        .map(|m| {
            let k = m.subspace.dim();
            let sub = if k == 0 {
                Subspace::zero(n)
            } else {
                let jiggle = m.subspace.basis() + &rng.gaussian_matrix(n, k).scale(eps);
                Subspace::from_spanning(&jiggle, 1e-10).expect("finite")
            };
            Member::new(sub, m.weight)
        })
        .collect();
    WeightedSubspaceSystem::new(n, members).expect("same shape")
}

/// Condition floor `σ_min/σ_max` for generated local frames.
const LOCAL_FRAME_CONDITION: f64 = 0.1;

/// Gives every member a random spanning local frame of `dim + extra` vectors,
/// redrawn until `σ_min/σ_max ≥ 0.1` and scaled so that `σ_max ∈ [0.5, 2]`.
pub fn attach_local_frames(rng: &mut Rng, system: &WeightedSubspaceSystem) -> WeightedSubspaceSystem {
    let n = system.ambient_dim();
    let members = system
        .members()
        .iter()
        .map(|m| {
            let k = m.subspace.dim();
            let frame = if k == 0 {
                Matrix::zeros(n, 1)
            } else {
                let extra = rng.range_inclusive(0, 2);
                let coords = loop {
                    let g = rng.gaussian_matrix(k, k + extra);
                    let sv = singular_values(&g);
                    if sv[k - 1] >= LOCAL_FRAME_CONDITION * sv[0] {
                        break g.scale(rng.uniform_in(0.5, 2.0) / sv[0]);
                    }
                };
                m.subspace.basis() * &coords
            };
            Member::new(m.subspace.clone(), m.weight).with_local_frame(frame)
        })
        .collect();
    WeightedSubspaceSystem::new(n, members).expect("same shape")
}

// ------------------------------------------------------------------- checks

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trial {
    Confirmed,
    Vacuous,
    Failed,
}

impl From<Outcome> for Trial {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Confirmed => Trial::Confirmed,
            Outcome::Vacuous => Trial::Vacuous,
            Outcome::Violated => Trial::Failed,
        }
    }
}

fn pass(ok: bool) -> Trial {
    if ok {
        Trial::Confirmed
    } else {
        Trial::Failed
    }
}

type TrialFn = fn(&mut Rng) -> Result<Trial>;

struct CheckDef {
    name: &'static str,
    trials: usize,
    run: TrialFn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub trials: usize,
    pub confirmed: usize,
    pub vacuous: usize,
    pub failures: usize,
    /// Trial indices that failed or errored, with the error if any.
    pub failed_trials: Vec<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub failures: usize,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn dims(rng: &mut Rng) -> (usize, usize) {
    (rng.range_inclusive(2, 8), rng.range_inclusive(2, 6))
}

fn pseudo_inverse_trial(rng: &mut Rng) -> Result<Trial> {
    let m = random_matrix(rng, 12);
    let p = pinv(&m);
    let scale = m.spectral_norm();
    let worst = penrose_residuals(&m, &p)
        .into_iter()
        .chain(projector_residuals(&m, &p))
        .fold(0.0_f64, f64::max);
    Ok(pass(worst <= 1e-10 * scale))
}

fn douglas_trial(rng: &mut Rng) -> Result<Trial> {
    let n = rng.range_inclusive(2, 8);
    let r = rng.range_inclusive(1, n - 1);
    let v = random_matrix_of_rank(rng, n, n, r);
    let u = &v * &rng.gaussian_matrix(n, n);
    let Ok(t) = douglas_factor(&u, &v, CHECK_TOL) else { return Ok(Trial::Failed) };
    let tn = t.spectral_norm();
    let majorized = psd_leq(&u.gram_outer(), &v.gram_outer().scale(tn * tn), 1e-8 * (tn * tn) * v.gram_outer().spectral_norm())?;
    let outside = rng.gaussian_matrix(n, n);
    let rejected = douglas_factor(&outside, &v, CHECK_TOL).is_err();
    Ok(pass(majorized && rejected))
}

fn lower_bound_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let (sys, k) = kff_instance(rng, n, m);
    let r = kfusion_verify(&sys, &k, CHECK_TOL)?;
    if !r.is_kff {
        return Ok(Trial::Failed);
    }
    let s = sys.frame_operator();
    let a = r.optimal_lower;
    let sampled_ok = (0..500).all(|_| k_ratio(&s, &k, &rng.unit_vector(n)) >= a - 1e-8 * a.max(1.0));
    let attained = match extremal_direction(&s, &k, CHECK_TOL)? {
        Some(f) => (k_ratio(&s, &k, &f) - a).abs() <= 1e-6 * a,
        None => a.is_infinite(),
    };
    Ok(pass(sampled_ok && attained))
}

fn norm_chain_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let (sys, k) = if rng.uniform() < 0.5 { kff_instance(rng, n, m) } else { frame_with_random_k(rng, n, m) };
    Ok(pass(norm_chain_check(&sys, &k, 1e-8)?.passed))
}

fn atomic_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    if rng.uniform() < 0.7 {
        let (sys, k) = kff_instance(rng, n, m);
        let dec = AtomicDecomposer::new(&sys, &k, CHECK_TOL)?;
        let c = dec.constant();
        for _ in 0..20 {
            let f = rng.gaussian_vector(n);
            let bundle = dec.decompose(&f)?;
            let kf = k.matvec(&f);
            let recon = sys.synthesis(&bundle)?;
            let err = norm(&linalg::matrix::sub(&recon, &kf));
            if err > 1e-9 * norm(&kf).max(f64::MIN_POSITIVE) || bundle.norm() > c * norm(&f) * (1.0 + 1e-9) {
                return Ok(Trial::Failed);
            }
        }
        Ok(Trial::Confirmed)
    } else {
        let (sys, k) = refuted_instance(rng, n);
        let r = kfusion_verify(&sys, &k, CHECK_TOL)?;
        let Some(g) = r.defect_direction.filter(|_| !r.is_kff) else { return Ok(Trial::Failed) };
        let s = sys.frame_operator();
        let f = k.transpose().matvec(&g);
        let synthesis = VectorFrame::from_matrix(sys.synthesis_matrix());
        let unreachable = match synthesis {
            Ok(frame) => unreachable_fraction(&frame, &k, &f) > 1e-6,
            Err(_) => true,
        };
        Ok(pass(k_ratio(&s, &k, &g) <= 1e-12 && unreachable))
    }
}

fn canonical_decomposition_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let sys = sweep_system(rng, n, m);
    Ok(pass(canonical_decomposition_check(&sys, 1e-10)?.passed))
}

fn commuting_image_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let sys = spanning_system(rng, n, m);
    let (k, t) = commuting_pair(rng, n);
    let r = commuting_image_construct(&sys, &k, &t, 1e-8)?;
    Ok(r.outcome.into())
}

fn surjectivity_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let sys = sweep_system(rng, n, m);
    let k = if rng.uniform() < 0.5 { Matrix::identity(n) } else { rng.gaussian_matrix(n, n) };
    let t = sweep_operator(rng, n);
    let r = surjectivity_check(&sys, &k, &t, CHECK_TOL)?;
    Ok(r.outcome.into())
}

fn invertibility_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let sys = sweep_system(rng, n, m);
    let (k, t) = commuting_sweep_pair(rng, n);
    let r = invertibility_check(&sys, &k, &t, CHECK_TOL)?;
    Ok(r.outcome.into())
}

fn perturbation_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let w = spanning_system(rng, n, m);
    let eps = 10f64.powf(rng.uniform_in(-3.0, -0.5));
    let v = perturb_system(rng, &w, eps);
    let k = if rng.uniform() < 0.5 { Matrix::identity(n) } else { rng.gaussian_matrix(n, n) };
    let p = perturbation_estimate(&w, &v, CHECK_TOL)?;
    for _ in 0..20 {
        let f = rng.gaussian_vector(n);
        if perturbation_hypothesis_slack(&w, &v, &k, &p, &f)? < -1e-9 * norm(&f) {
            return Ok(Trial::Failed);
        }
    }
    let base = kfusion_verify(&w, &k, CHECK_TOL)?;
    if !p.admissible(base.optimal_lower) {
        return Ok(Trial::Vacuous);
    }
    let (a, b) = perturbation_predict(base.optimal_lower, base.optimal_upper, &p)?;
    let actual = kfusion_verify(&v, &k, CHECK_TOL)?;
    Ok(pass(actual.is_kff && actual.optimal_lower >= a * (1.0 - 1e-9) && actual.optimal_upper <= b * (1.0 + 1e-9)))
}

fn local_to_global_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let sys = sweep_system(rng, n, m);
    let sys = attach_local_frames(rng, &sys);
    Ok(local_to_global(&sys, CHECK_TOL)?.outcome.into())
}

fn operator_image_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let m = m.max(n.div_ceil(n.min(3)));
    let inst = generate(&GenSpec::new(rng.next_u64(), Flavor::OperatorImageCompatible).with_shape(n, m, (1, n.min(3))))?;
    let r = operator_image_construct(&inst.system, inst.operator.as_ref().expect("K-flavor carries K"), CHECK_TOL)?;
    let rank = rng.range_inclusive(0, n);
    let k = random_matrix_of_rank(rng, n, n, rank);
    let (_, basis_images) = basis_image_system(&k, CHECK_TOL)?;
    Ok(pass(r.outcome == Outcome::Confirmed && basis_images.is_kff))
}

fn k_frame_trial(rng: &mut Rng) -> Result<Trial> {
    let n = rng.range_inclusive(2, 8);
    let j = rng.range_inclusive(1, 10);
    let frame = VectorFrame::from_matrix(rng.gaussian_matrix(n, j))?;
    let k = if rng.uniform() < 0.5 { &frame.frame_operator() * &rng.gaussian_matrix(n, n) } else { rng.gaussian_matrix(n, n) };
    let r = kframe_verify(&frame, &k, CHECK_TOL)?;
    match (r.constant(), &r.obstruction) {
        (Some(c), _) => {
            let f = rng.gaussian_vector(n);
            let a = r.coefficients(&f).expect("verified");
            let err = norm(&linalg::matrix::sub(&frame.synthesis_matrix().matvec(&a), &k.matvec(&f)));
            Ok(pass(err <= 1e-8 * (1.0 + norm(&k.matvec(&f))) && norm(&a) <= c * norm(&f) * (1.0 + 1e-9)))
        }
        (None, Some(g)) => Ok(pass(unreachable_fraction(&frame, &k, g) > 1e-6)),
        (None, None) => Ok(Trial::Failed),
    }
}

fn json_trial(rng: &mut Rng) -> Result<Trial> {
    let (n, m) = dims(rng);
    let base = sweep_system(rng, n, m);
    let sys = attach_local_frames(rng, &base);
    let text = serde_json::to_string(&sys).expect("serializable");
    let back: WeightedSubspaceSystem = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(_) => return Ok(Trial::Failed),
    };
    Ok(pass(back == sys))
}

const CHECKS: &[CheckDef] = &[
    CheckDef { name: "pseudo_inverse_identities", trials: 200, run: pseudo_inverse_trial },
    CheckDef { name: "douglas_factorization", trials: 100, run: douglas_trial },
    CheckDef { name: "optimal_lower_bound", trials: 50, run: lower_bound_trial },
    CheckDef { name: "norm_inequality_chain", trials: 50, run: norm_chain_trial },
    CheckDef { name: "atomic_decomposition", trials: 50, run: atomic_trial },
    CheckDef { name: "canonical_decomposition", trials: 50, run: canonical_decomposition_trial },
    CheckDef { name: "commuting_image_bounds", trials: 50, run: commuting_image_trial },
    CheckDef { name: "image_forces_surjectivity", trials: 100, run: surjectivity_trial },
    CheckDef { name: "images_force_invertibility", trials: 100, run: invertibility_trial },
    CheckDef { name: "perturbation_stability", trials: 50, run: perturbation_trial },
    CheckDef { name: "local_to_global", trials: 50, run: local_to_global_trial },
    CheckDef { name: "operator_image_systems", trials: 50, run: operator_image_trial },
    CheckDef { name: "vector_k_frames", trials: 50, run: k_frame_trial },
    CheckDef { name: "json_round_trip", trials: 30, run: json_trial },
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

fn run_check(index: usize, def: &CheckDef, seed: u64) -> CheckResult {
    let mut result = CheckResult {
        name: def.name.to_string(),
        trials: def.trials,
        confirmed: 0,
        vacuous: 0,
        failures: 0,
        failed_trials: Vec::new(),
    };
    for t in 0..def.trials {
        let mut rng = Rng::derive(seed, ((index as u64) << 32) | t as u64);
        match (def.run)(&mut rng) {
            Ok(Trial::Confirmed) => result.confirmed += 1,
            Ok(Trial::Vacuous) => result.vacuous += 1,
            Ok(Trial::Failed) => {
                result.failures += 1;
                result.failed_trials.push(format!("trial {t}"));
            }
            Err(e) => {
                result.failures += 1;
                result.failed_trials.push(format!("trial {t}: {e}"));
            }
        }
    }
    result
}

pub fn run_all(seed: u64) -> BatteryReport {
    let checks: Vec<CheckResult> = thread::scope(|scope| {
        let handles: Vec<_> = CHECKS
            .iter()
            .enumerate()
            .map(|(i, def)| scope.spawn(move || run_check(i, def, seed)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("check thread panicked")).collect()
    });
    let failures = checks.iter().map(|c| c.failures).sum();
    BatteryReport { seed, checks, failures }
}
