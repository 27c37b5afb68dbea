//! Weighted subspace systems {(W_i, w_i)} and their synthesis, analysis and
//! frame operators.
//!
//! The representation space ⊕W_i is carried as a list of ambient vectors,
//! block i lying in W_i. Its norm is the ℓ² norm of the block norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, check_finite, sym_eig, Matrix};
use crate::subspaces::Subspace;

/// Relative tolerance for a bundle block to count as lying in its subspace.
const BLOCK_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub subspace: Subspace,
    pub weight: f64,
    /// Optional local frame for the subspace, one vector per column.
    pub local_frame: Option<Matrix>,
}

impl Member {
    pub fn new(subspace: Subspace, weight: f64) -> Self {
        Self { subspace, weight, local_frame: None }
    }

    pub fn with_local_frame(mut self, frame: Matrix) -> Self {
        self.local_frame = Some(frame);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSubspaceSystem {
    ambient_dim: usize,
    members: Vec<Member>,
}

impl WeightedSubspaceSystem {
    pub fn new(ambient_dim: usize, members: Vec<Member>) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::Input("ambient dimension must be positive".into()));
        }
        if members.is_empty() {
            return Err(Error::Input("a system needs at least one member".into()));
        }
        for (i, m) in members.iter().enumerate() {
            if !(m.weight > 0.0 && m.weight.is_finite()) {
                return Err(Error::Input(format!("member {i}: weight must be positive and finite, got {}", m.weight)));
            }
            if m.subspace.ambient_dim() != ambient_dim {
                return Err(Error::Dimension(format!(
                    "member {i}: subspace of ℝ^{} in a system over ℝ^{ambient_dim}",
                    m.subspace.ambient_dim()
                )));
            }
            if let Some(f) = &m.local_frame {
                if f.rows() != ambient_dim {
                    return Err(Error::Dimension(format!(
                        "member {i}: local frame vectors have length {}, expected {ambient_dim}",
                        f.rows()
                    )));
                }
            }
        }
        Ok(Self { ambient_dim, members })
    }

    /// Members with unit weights.
    pub fn unweighted(ambient_dim: usize, subspaces: Vec<Subspace>) -> Result<Self> {
        Self::new(ambient_dim, subspaces.into_iter().map(|s| Member::new(s, 1.0)).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.weight).collect()
    }

    /// Total dimension of the representation space, Σ dim W_i.
    pub fn representation_dim(&self) -> usize {
        self.members.iter().map(|m| m.subspace.dim()).sum()
    }

    /// A copy with one more member appended.
    pub fn with_member(&self, member: Member) -> Result<Self> {
        let mut members = self.members.clone();
        members.push(member);
        Self::new(self.ambient_dim, members)
    }

    /// A copy with every weight multiplied by `c`.
    pub fn scale_weights(&self, c: f64) -> Result<Self> {
        let members = self
            .members
            .iter()
            .map(|m| Member { weight: m.weight * c, ..m.clone() })
            .collect();
        Self::new(self.ambient_dim, members)
    }

    /// The same subspaces and weights with local frames dropped.
    pub fn without_local_frames(&self) -> Self {
        Self {
            ambient_dim: self.ambient_dim,
            members: self.members.iter().map(|m| Member::new(m.subspace.clone(), m.weight)).collect(),
        }
    }

    fn check_vector(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.ambient_dim {
            return Err(Error::Dimension(format!(
                "vector has length {}, system lives in ℝ^{}",
                f.len(),
                self.ambient_dim
            )));
        }
        check_finite(f, "vector")
    }

    pub(crate) fn check_operator(&self, k: &Matrix, name: &str) -> Result<()> {
        let n = self.ambient_dim;
        if k.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "operator {name} is {}×{}, expected {n}×{n}",
                k.rows(),
                k.cols()
            )));
        }
        Ok(())
    }

    /// Analysis operator: `f ↦ {w_i π_{W_i} f}`.
    pub fn analysis(&self, f: &[f64]) -> Result<CoefficientBundle> {
        self.check_vector(f)?;
        let blocks = self
            .members
            .iter()
            .map(|m| m.subspace.project(f).into_iter().map(|x| m.weight * x).collect())
            .collect();
        Ok(CoefficientBundle { blocks })
    }

    /// Synthesis operator: `{a_i} ↦ Σ w_i a_i`.
    pub fn synthesis(&self, a: &CoefficientBundle) -> Result<Vec<f64>> {
        self.check_bundle(a)?;
        let mut out = vec![0.0; self.ambient_dim];
        for (m, block) in self.members.iter().zip(&a.blocks) {
            linalg::matrix::add_scaled(&mut out, m.weight, block);
        }
        Ok(out)
    }

    /// Checks block count, block lengths and that each block lies in its subspace.
    pub fn check_bundle(&self, a: &CoefficientBundle) -> Result<()> {
        if a.blocks.len() != self.members.len() {
            return Err(Error::Dimension(format!(
                "bundle has {} blocks, system has {} members",
                a.blocks.len(),
                self.members.len()
            )));
        }
        for (i, (m, block)) in self.members.iter().zip(&a.blocks).enumerate() {
            if block.len() != self.ambient_dim {
                return Err(Error::Dimension(format!("block {i} has length {}", block.len())));
            }
            check_finite(block, "bundle block")?;
            let off = linalg::norm(&linalg::matrix::sub(block, &m.subspace.project(block)));
            if off > BLOCK_MEMBERSHIP_TOL * linalg::norm(block) {
                return Err(Error::Input(format!("block {i} does not lie in its subspace (defect {off:.3e})")));
            }
        }
        Ok(())
    }

    /// Frame operator `S = Σ w_i² π_{W_i}`.
    pub fn frame_operator(&self) -> Matrix {
        let n = self.ambient_dim;
        let mut s = Matrix::zeros(n, n);
        for m in &self.members {
            if m.subspace.is_zero() {
                continue;
            }
            s = &s + &m.subspace.projection().scale(m.weight * m.weight);
        }
        s
    }

    /// Synthesis operator as an `n × Σ dim W_i` matrix `[w_1 U_1 | … | w_m U_m]`,
    /// acting on stacked basis coordinates.
    pub fn synthesis_matrix(&self) -> Matrix {
        let scaled: Vec<Matrix> = self.members.iter().map(|m| m.subspace.basis().scale(m.weight)).collect();
        let refs: Vec<&Matrix> = scaled.iter().collect();
        Matrix::hstack(self.ambient_dim, &refs)
    }

    /// Turns stacked basis coordinates into ambient blocks `a_i = U_i c_i`.
    pub fn bundle_from_coordinates(&self, coords: &[f64]) -> CoefficientBundle {
        assert_eq!(coords.len(), self.representation_dim());
        let mut offset = 0;
        let blocks = self
            .members
            .iter()
            .map(|m| {
                let k = m.subspace.dim();
                let block = if k == 0 {
                    vec![0.0; self.ambient_dim]
                } else {
                    m.subspace.basis().matvec(&coords[offset..offset + k])
                };
                offset += k;
                block
            })
            .collect();
        CoefficientBundle { blocks }
    }

    /// Optimal fusion frame bounds: extremal eigenvalues of the frame operator.
    pub fn bounds(&self, tol: f64) -> Result<BoundsReport> {
        fusion_bounds(self, tol)
    }
}

/// An element {a_i} of the representation space ⊕W_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBundle {
    pub blocks: Vec<Vec<f64>>,
}

impl CoefficientBundle {
    pub fn zeros(blocks: usize, n: usize) -> Self {
        Self { blocks: vec![vec![0.0; n]; blocks] }
    }

    pub fn norm_squared(&self) -> f64 {
        self.blocks.iter().map(|b| linalg::dot(b, b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn inner(&self, other: &CoefficientBundle) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| linalg::dot(a, b)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Lower bound positive, not tight.
    Frame,
    /// Upper bound only; every finite system is at least this.
    BesselOnly,
    /// Both bounds equal 1.
    Parseval,
    /// Both bounds equal, not 1.
    Tight,
}

impl Verdict {
    pub fn is_frame(self) -> bool {
        !matches!(self, Verdict::BesselOnly)
    }

    /// Frame iff `lower > tol·upper`; Parseval and tight refine it.
    pub fn classify(lower: f64, upper: f64, tol: f64) -> Self {
        if !(lower > tol * upper) {
            Verdict::BesselOnly
        } else if (lower - 1.0).abs() <= tol && (upper - 1.0).abs() <= tol {
            Verdict::Parseval
        } else if upper - lower <= tol * upper {
            Verdict::Tight
        } else {
            Verdict::Frame
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub verdict: Verdict,
    pub lower: f64,
    pub upper: f64,
}

impl BoundsReport {
    /// Classifies the extremal eigenvalues of a frame operator.
    pub fn from_operator(s: &Matrix, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
        }
        let sp = sym_eig(s)?;
        let upper = sp.max().max(0.0);
        let lower = sp.min().clamp(0.0, upper);
        Ok(Self { verdict: Verdict::classify(lower, upper, tol), lower, upper })
    }
}

pub fn analysis(system: &WeightedSubspaceSystem, f: &[f64]) -> Result<CoefficientBundle> {
    system.analysis(f)
}

pub fn synthesis(system: &WeightedSubspaceSystem, a: &CoefficientBundle) -> Result<Vec<f64>> {
    system.synthesis(a)
}

pub fn frame_operator(system: &WeightedSubspaceSystem) -> Matrix {
    system.frame_operator()
}

pub fn fusion_bounds(system: &WeightedSubspaceSystem, tol: f64) -> Result<BoundsReport> {
    BoundsReport::from_operator(&system.frame_operator(), tol)
}
