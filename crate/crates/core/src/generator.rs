//! Seeded, reproducible random instances.
//!
//! # Random stream
//!
//! The stream is fully specified so instances can be reproduced bit-for-bit
//! in any language:
//!
//! * Seeding: `state = splitmix64(seed)`, replaced by `0x9E3779B97F4A7C15`
//!   if it comes out zero. `splitmix64(x)`: `z = x + 0x9E3779B97F4A7C15`;
//!   `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`;
//!   `z = (z ^ (z >> 27)) * 0x94D049BB133111EB`; return `z ^ (z >> 31)`
//!   (all arithmetic wrapping mod 2⁶⁴).
//! * Step (xorshift64*): `x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
//!   state = x`; output `x * 0x2545F4914F6CDD1D` (wrapping).
//! * Uniform in [0, 1): `(output >> 11) · 2⁻⁵³`.
//! * Integer in `lo..=hi`: `lo + output mod (hi − lo + 1)`.
//! * Standard normal: Marsaglia polar method. Draw `u = 2U − 1`,
//!   `v = 2U − 1` until `0 < s = u² + v² < 1`; return `u·m` and cache
//!   `v·m` for the next call, with `m = sqrt(−2 ln s / s)`.
//! * Matrices are filled in row-major order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{Member, WeightedSubspaceSystem};
use crate::linalg::{qr_orthonormalize, sqrt_psd, svd, Matrix, DEFAULT_RANK_TOL};
use crate::subspaces::Subspace;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rng {
    state: u64,
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self { state: if s == 0 { GOLDEN } else { s }, spare_normal: None }
    }

    /// Independent stream number `stream` derived from `seed`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        Self::new(seed ^ splitmix64(stream.wrapping_mul(GOLDEN).wrapping_add(1)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn range_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * m);
                return u * m;
            }
        }
    }

    pub fn gaussian_vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_raw(rows, cols, (0..rows * cols).map(|_| self.normal()).collect())
    }

    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v = self.gaussian_vector(n);
            let nv = crate::linalg::norm(&v);
            if nv > 1e-12 {
                return v.into_iter().map(|x| x / nv).collect();
            }
        }
    }

    /// Orthogonal `n × n` matrix from the Gram–Schmidt factor of a Gaussian matrix.
    pub fn orthogonal(&mut self, n: usize) -> Matrix {
        loop {
            let (q, r) = qr_orthonormalize(&self.gaussian_matrix(n, n), 1e-8).expect("finite");
            if r == n {
                return q;
            }
        }
    }

    /// Gaussian `n × n` matrix of rank exactly `r` (as a product of `n×r` and `r×n` factors).
    pub fn low_rank_matrix(&mut self, n: usize, r: usize) -> Matrix {
        if r == 0 {
            return Matrix::zeros(n, n);
        }
        &self.gaussian_matrix(n, r) * &self.gaussian_matrix(r, n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.range_inclusive(0, i);
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Random subspaces of random dimension; no spanning guarantee.
    Arbitrary,
    /// The subspaces together span ℝⁿ.
    GuaranteedFusionFrame,
    /// Arbitrary subspaces plus `K = S^{1/2}·X`, so `R(K) ⊆ R(S)`.
    GuaranteedKFusionFrame,
    /// A spanning system of subspaces that split along `R(Kᵀ) ⊕ N(K)`, with `K`.
    OperatorImageCompatible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    #[serde(default = "default_ambient_dim")]
    pub ambient_dim: usize,
    #[serde(default = "default_member_count")]
    pub member_count: usize,
    #[serde(default = "default_dim_range")]
    pub dim_range: (usize, usize),
    #[serde(default = "default_weight_range")]
    pub weight_range: (f64, f64),
    #[serde(default = "default_flavor")]
    pub flavor: Flavor,
}

fn default_ambient_dim() -> usize {
    4
}
fn default_member_count() -> usize {
    4
}
fn default_dim_range() -> (usize, usize) {
    (1, 2)
}
fn default_weight_range() -> (f64, f64) {
    (0.5, 2.0)
}
fn default_flavor() -> Flavor {
    Flavor::Arbitrary
}

impl GenSpec {
    pub fn new(seed: u64, flavor: Flavor) -> Self {
        Self {
            seed,
            ambient_dim: default_ambient_dim(),
            member_count: default_member_count(),
            dim_range: default_dim_range(),
            weight_range: default_weight_range(),
            flavor,
        }
    }

    pub fn with_shape(mut self, ambient_dim: usize, member_count: usize, dim_range: (usize, usize)) -> Self {
        self.ambient_dim = ambient_dim;
        self.member_count = member_count;
        self.dim_range = dim_range;
        self
    }

    pub fn with_weights(mut self, lo: f64, hi: f64) -> Self {
        self.weight_range = (lo, hi);
        self
    }

    fn spans(&self) -> bool {
        matches!(self.flavor, Flavor::GuaranteedFusionFrame | Flavor::OperatorImageCompatible)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.ambient_dim;
        if n == 0 || n > 64 {
            return Err(Error::Input(format!("ambient_dim must be in 1..=64, got {n}")));
        }
        if self.member_count == 0 {
            return Err(Error::Input("member_count must be positive".into()));
        }
        let (lo, hi) = self.dim_range;
        if lo > hi || hi > n {
            return Err(Error::Input(format!("dim_range ({lo}, {hi}) must satisfy min ≤ max ≤ ambient_dim = {n}")));
        }
        let (wl, wh) = self.weight_range;
        if !(wl > 0.0 && wl <= wh && wh.is_finite()) {
            return Err(Error::Input(format!("weight_range ({wl}, {wh}) must satisfy 0 < min ≤ max < ∞")));
        }
        if self.spans() && self.member_count * hi < n {
            return Err(Error::Input(format!(
                "{} members of dimension at most {hi} cannot span ℝ^{n}",
                self.member_count
            )));
        }
        Ok(())
    }
}

/// A generated system, with the operator `K` for the K-flavors.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub system: WeightedSubspaceSystem,
    pub operator: Option<Matrix>,
}

pub fn generate(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let n = spec.ambient_dim;
    match spec.flavor {
        Flavor::Arbitrary => Ok(Instance { system: arbitrary(spec, &mut rng)?, operator: None }),
        Flavor::GuaranteedFusionFrame => {
            let q = rng.orthogonal(n);
            let system = spanning(spec, &mut rng, &[q])?;
            Ok(Instance { system, operator: None })
        }
        Flavor::GuaranteedKFusionFrame => {
            let system = arbitrary(spec, &mut rng)?;
            let root = sqrt_psd(&system.frame_operator())?;
            let x = rng.gaussian_matrix(n, n);
            Ok(Instance { system, operator: Some(&root * &x) })
        }
        Flavor::OperatorImageCompatible => {
            let r = rng.range_inclusive(1, n);
            let k = rng.low_rank_matrix(n, r);
            let d = svd(&k);
            let rows = rotate_within(&mut rng, &d.row_space_basis(DEFAULT_RANK_TOL));
            let null = rotate_within(&mut rng, &d.null_basis(DEFAULT_RANK_TOL));
            let blocks: Vec<Matrix> = [rows, null].into_iter().filter(|b| b.cols() > 0).collect();
            let system = spanning(spec, &mut rng, &blocks)?;
            Ok(Instance { system, operator: Some(k) })
        }
    }
}

fn rotate_within(rng: &mut Rng, basis: &Matrix) -> Matrix {
    if basis.cols() == 0 {
        return basis.clone();
    }
    basis * &rng.orthogonal(basis.cols())
}

fn draw_weight(spec: &GenSpec, rng: &mut Rng) -> f64 {
    let (lo, hi) = spec.weight_range;
    rng.uniform_in(lo, hi)
}

fn arbitrary(spec: &GenSpec, rng: &mut Rng) -> Result<WeightedSubspaceSystem> {
    let n = spec.ambient_dim;
    let mut members = Vec::with_capacity(spec.member_count);
    for _ in 0..spec.member_count {
        let k = rng.range_inclusive(spec.dim_range.0, spec.dim_range.1);
        let subspace = if k == 0 {
            Subspace::zero(n)
        } else {
            Subspace::from_spanning(&rng.gaussian_matrix(n, k), DEFAULT_RANK_TOL)?
        };
        members.push(Member::new(subspace, draw_weight(spec, rng)));
    }
    WeightedSubspaceSystem::new(n, members)
}

/// Members whose subspaces jointly contain every column of the coverage
/// blocks. Extra directions are random vectors inside a single block, so
/// each subspace is a direct sum of its pieces in the individual blocks.
fn spanning(spec: &GenSpec, rng: &mut Rng, blocks: &[Matrix]) -> Result<WeightedSubspaceSystem> {
    let n = spec.ambient_dim;
    let m = spec.member_count;
    let (lo, hi) = spec.dim_range;
    let mut dims: Vec<usize> = (0..m).map(|_| rng.range_inclusive(lo, hi)).collect();
    let mut i = 0;
    while dims.iter().sum::<usize>() < n {
        if dims[i] < hi {
            dims[i] += 1;
        }
        i = (i + 1) % m;
    }

    // (block index, column index) for every coverage direction, shuffled.
    let mut coverage: Vec<(usize, usize)> =
        blocks.iter().enumerate().flat_map(|(b, mat)| (0..mat.cols()).map(move |c| (b, c))).collect();
    rng.shuffle(&mut coverage);

    let mut assigned: Vec<Vec<Vec<f64>>> = vec![Vec::new(); m];
    let mut target = 0;
    for (b, c) in coverage {
        while assigned[target].len() >= dims[target] {
            target = (target + 1) % m;
        }
        assigned[target].push(blocks[b].column(c));
        target = (target + 1) % m;
    }

    let mut members = Vec::with_capacity(m);
    for (i, mut vectors) in assigned.into_iter().enumerate() {
        while vectors.len() < dims[i] {
            let pick = rng.range_inclusive(0, n - 1);
            let mut acc = 0;
            let block = blocks
                .iter()
                .find(|b| {
                    acc += b.cols();
                    pick < acc
                })
                .expect("blocks cover ℝⁿ");
            let coeffs = rng.gaussian_vector(block.cols());
            vectors.push(block.matvec(&coeffs));
        }
        let subspace = if vectors.is_empty() {
            Subspace::zero(n)
        } else {
            Subspace::from_spanning(&Matrix::from_columns(n, &vectors), DEFAULT_RANK_TOL)?
        };
        members.push(Member::new(subspace, draw_weight(spec, rng)));
    }
    WeightedSubspaceSystem::new(n, members)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_pinned() {
        // Reference values for seed 0; any change here breaks quoted seeds.
        let mut rng = Rng::new(0);
        let first: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        let mut again = Rng::new(0);
        assert_eq!(first, (0..3).map(|_| again.next_u64()).collect::<Vec<_>>());
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn uniform_and_normal_moments() {
        let mut rng = Rng::new(42);
        let n = 20_000;
        let u: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        assert!(u.iter().all(|&x| (0.0..1.0).contains(&x)));
        let mean = u.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
        let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let zm = z.iter().sum::<f64>() / n as f64;
        let zv = z.iter().map(|x| (x - zm) * (x - zm)).sum::<f64>() / n as f64;
        assert!(zm.abs() < 0.03 && (zv - 1.0).abs() < 0.05);
    }

    #[test]
    fn same_seed_same_instance() {
        for flavor in [
            Flavor::Arbitrary,
            Flavor::GuaranteedFusionFrame,
            Flavor::GuaranteedKFusionFrame,
            Flavor::OperatorImageCompatible,
        ] {
            let spec = GenSpec::new(99, flavor).with_shape(5, 3, (1, 3));
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(a, b);
            let other = generate(&GenSpec { seed: 100, ..spec.clone() }).unwrap();
            assert_ne!(a, other);
        }
    }

    #[test]
    fn invariants_hold() {
        for seed in 0..50 {
            for flavor in [Flavor::Arbitrary, Flavor::GuaranteedFusionFrame, Flavor::OperatorImageCompatible] {
                let spec = GenSpec::new(seed, flavor).with_shape(6, 4, (0, 3)).with_weights(0.3, 2.5);
                let inst = generate(&spec).unwrap();
                for m in inst.system.members() {
                    assert!((0.3..=2.5).contains(&m.weight));
                    let u = m.subspace.basis();
                    let utu = &u.transpose() * u;
                    assert!((&utu - &Matrix::identity(u.cols())).max_abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn spanning_flavor_is_a_frame() {
        for seed in 0..100 {
            let spec = GenSpec::new(seed, Flavor::GuaranteedFusionFrame).with_shape(7, 3, (1, 3));
            let b = generate(&spec).unwrap().system.bounds(1e-9).unwrap();
            assert!(b.verdict.is_frame(), "seed {seed}: {b:?}");
        }
    }

    #[test]
    fn invalid_specs() {
        let base = GenSpec::new(1, Flavor::GuaranteedFusionFrame);
        assert!(generate(&base.clone().with_shape(0, 1, (0, 0))).is_err());
        assert!(generate(&base.clone().with_shape(4, 0, (1, 2))).is_err());
        assert!(generate(&base.clone().with_shape(4, 2, (3, 2))).is_err());
        assert!(generate(&base.clone().with_shape(4, 2, (1, 5))).is_err());
        assert!(generate(&base.clone().with_shape(8, 2, (1, 3))).is_err());
        assert!(generate(&base.clone().with_weights(0.0, 1.0)).is_err());
        assert!(generate(&base.with_weights(2.0, 1.0)).is_err());
    }
}
