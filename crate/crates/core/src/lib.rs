//! Fusion frames and K-fusion frames on ℝⁿ: verification, optimal bounds,
//! atomic decompositions, constructions and a seeded instance generator.

pub mod battery;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod fusion;
pub mod generator;
pub mod io;
pub mod kfusion;
pub mod linalg;
pub mod report;
pub mod subspaces;
pub mod vector_frames;

pub use error::{Error, Result};
pub use fusion::{fusion_bounds, BoundsReport, CoefficientBundle, Member, Verdict, WeightedSubspaceSystem};
pub use kfusion::{atomic_decompose, douglas_factor, kfusion_verify, KFusionReport};
pub use linalg::Matrix;
pub use subspaces::Subspace;
