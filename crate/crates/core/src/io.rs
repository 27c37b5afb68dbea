//! JSON formats.
//!
//! * Matrix: `{"rows": r, "cols": c, "data": [row-major entries]}`.
//! * Subspace: `{"ambient_dim": n, "basis": Matrix}`.
//! * System: `{"ambient_dim": n, "members": [{"basis": Matrix, "weight": w,
//!   "local_frame": [[f64; n], ...]?}]}`. Bases may be any spanning set; they are
//!   re-orthonormalized on load.
//! * Vector: a JSON array of numbers.
//! * Generated bundle: `{"spec": GenSpec, "system": System, "operator": Matrix|null}`.
//!
//! Loaders for a system, operator or vector also accept a bundle object and
//! pick out the matching key.

use std::fs;
use std::path::Path;

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::fusion::{Member, WeightedSubspaceSystem};
use crate::generator::GenSpec;
use crate::linalg::{Matrix, DEFAULT_RANK_TOL};
use crate::subspaces::Subspace;

const ORTHONORMAL_TOL: f64 = 1e-13;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixDoc { rows: self.rows(), cols: self.cols(), data: self.data().to_vec() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(d)?;
        if doc.rows == 0 {
            return Err(D::Error::custom("matrix must have at least one row"));
        }
        Matrix::new(doc.rows, doc.cols, doc.data).map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspaceDoc {
    ambient_dim: usize,
    basis: Matrix,
}

impl Serialize for Subspace {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SubspaceDoc { ambient_dim: self.ambient_dim(), basis: self.basis().clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = SubspaceDoc::deserialize(d)?;
        subspace_from_basis(doc.ambient_dim, &doc.basis, "basis").map_err(D::Error::custom)
    }
}

fn subspace_from_basis(n: usize, basis: &Matrix, path: &str) -> Result<Subspace, String> {
    if basis.rows() != n {
        return Err(format!("{path}: basis has {} rows, ambient_dim is {n}", basis.rows()));
    }
    if basis.cols() == 0 {
        return Ok(Subspace::zero(n));
    }
    // Keep bases that are already orthonormal bit-for-bit so files round-trip.
    let gram = &basis.transpose() * basis;
    if (&gram - &Matrix::identity(basis.cols())).max_abs() <= ORTHONORMAL_TOL {
        return Ok(Subspace::from_orthonormal(basis.clone()));
    }
    Subspace::from_spanning(basis, DEFAULT_RANK_TOL).map_err(|e| format!("{path}: {e}"))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberDoc {
    basis: Matrix,
    weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    local_frame: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    ambient_dim: usize,
    members: Vec<MemberDoc>,
}

impl Serialize for WeightedSubspaceSystem {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let members = self
            .members()
            .iter()
            .map(|m| MemberDoc {
                basis: m.subspace.basis().clone(),
                weight: m.weight,
                local_frame: m.local_frame.as_ref().map(Matrix::columns),
            })
            .collect();
        SystemDoc { ambient_dim: self.ambient_dim(), members }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightedSubspaceSystem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = SystemDoc::deserialize(d)?;
        system_from_doc(doc).map_err(D::Error::custom)
    }
}

fn system_from_doc(doc: SystemDoc) -> Result<WeightedSubspaceSystem, String> {
    let n = doc.ambient_dim;
    if n == 0 {
        return Err("ambient_dim must be positive".into());
    }
    let mut members = Vec::with_capacity(doc.members.len());
    for (i, m) in doc.members.into_iter().enumerate() {
        let subspace = subspace_from_basis(n, &m.basis, &format!("members[{i}].basis"))?;
        let mut member = Member::new(subspace, m.weight);
        if let Some(vectors) = m.local_frame {
            if let Some(j) = vectors.iter().position(|v| v.len() != n) {
                return Err(format!("members[{i}].local_frame[{j}] has length {}, ambient_dim is {n}", vectors[j].len()));
            }
            member = member.with_local_frame(Matrix::from_columns(n, &vectors));
        }
        members.push(member);
    }
    WeightedSubspaceSystem::new(n, members).map_err(|e| e.to_string())
}

/// Output of `gen`: the spec that produced it, the system and `K` if any.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedDocument {
    pub spec: GenSpec,
    pub system: WeightedSubspaceSystem,
    pub operator: Option<Matrix>,
}

/// A file that could not be read or parsed; the message names the file and,
/// where serde can tell, the line and column or the offending field.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

/// Parses `text` as `T`; failing that, as an object holding `T` under `key`.
pub fn parse_with_bundle_key<T: DeserializeOwned>(text: &str, key: &str) -> Result<T, String> {
    match serde_json::from_str::<T>(text) {
        Ok(v) => Ok(v),
        Err(direct) => {
            let Ok(Value::Object(mut map)) = serde_json::from_str::<Value>(text) else {
                return Err(direct.to_string());
            };
            match map.remove(key) {
                Some(Value::Null) => Err(format!("bundle has no {key}")),
                Some(inner) => serde_json::from_value(inner).map_err(|e| format!("{key}: {e}")),
                None => Err(direct.to_string()),
            }
        }
    }
}

fn load<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T, LoadError> {
    let shown = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Read { path: shown.clone(), source })?;
    parse_with_bundle_key(&text, key).map_err(|message| LoadError::Parse { path: shown, message })
}

pub fn load_system(path: &Path) -> Result<WeightedSubspaceSystem, LoadError> {
    load(path, "system")
}

pub fn load_operator(path: &Path) -> Result<Matrix, LoadError> {
    load(path, "operator")
}

pub fn load_vector(path: &Path) -> Result<Vec<f64>, LoadError> {
    load(path, "vector")
}

pub fn load_spec(path: &Path) -> Result<GenSpec, LoadError> {
    load(path, "spec")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, Flavor};

    #[test]
    fn matrix_round_trip() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.5]]);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"rows":2,"cols":2,"data":[1.0,2.0,3.0,4.5]}"#);
        assert_eq!(serde_json::from_str::<Matrix>(&text).unwrap(), m);
    }

    #[test]
    fn matrix_rejects_bad_shapes() {
        assert!(serde_json::from_str::<Matrix>(r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).is_err());
        assert!(serde_json::from_str::<Matrix>(r#"{"rows":0,"cols":0,"data":[]}"#).is_err());
        assert!(serde_json::from_str::<Matrix>(r#"{"rows":1,"cols":1,"data":[1],"x":1}"#).is_err());
        assert!(serde_json::from_str::<Matrix>(r#"{"rows":1,"cols":1,"data":[null]}"#).is_err());
        assert!(serde_json::from_str::<Matrix>(r#"{"rows":2,"cols":0,"data":[]}"#).is_ok());
    }

    #[test]
    fn system_round_trip_is_exact() {
        for flavor in [Flavor::Arbitrary, Flavor::OperatorImageCompatible] {
            let inst = generate(&GenSpec::new(5, flavor).with_shape(4, 3, (1, 2))).unwrap();
            let text = serde_json::to_string(&inst.system).unwrap();
            let back: WeightedSubspaceSystem = serde_json::from_str(&text).unwrap();
            assert_eq!(serde_json::to_string(&back).unwrap(), text);
            assert!((&back.frame_operator() - &inst.system.frame_operator()).max_abs() < 1e-15);
        }
    }

    #[test]
    fn system_errors_name_the_field() {
        let bad = r#"{"ambient_dim":2,"members":[{"basis":{"rows":3,"cols":1,"data":[1,0,0]},"weight":1}]}"#;
        let err = serde_json::from_str::<WeightedSubspaceSystem>(bad).unwrap_err().to_string();
        assert!(err.contains("members[0].basis"), "{err}");
        let neg = r#"{"ambient_dim":1,"members":[{"basis":{"rows":1,"cols":1,"data":[1]},"weight":-1}]}"#;
        assert!(serde_json::from_str::<WeightedSubspaceSystem>(neg).is_err());
        let truncated = r#"{"ambient_dim":1,"members":[{"basis""#;
        let err = parse_with_bundle_key::<WeightedSubspaceSystem>(truncated, "system").unwrap_err();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn local_frames_are_vector_lists() {
        let text = r#"{"ambient_dim":2,"members":[{"basis":{"rows":2,"cols":1,"data":[1,0]},"weight":1,"local_frame":[[1,0],[2,0]]}]}"#;
        let sys: WeightedSubspaceSystem = serde_json::from_str(text).unwrap();
        assert_eq!(sys.members()[0].local_frame.as_ref().unwrap(), &Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 0.0]]));
        let back = serde_json::to_string(&sys).unwrap();
        assert!(back.contains(r#""local_frame":[[1.0,0.0],[2.0,0.0]]"#), "{back}");
        let bad = r#"{"ambient_dim":2,"members":[{"basis":{"rows":2,"cols":1,"data":[1,0]},"weight":1,"local_frame":[[1]]}]}"#;
        let err = serde_json::from_str::<WeightedSubspaceSystem>(bad).unwrap_err().to_string();
        assert!(err.contains("members[0].local_frame[0]"), "{err}");
    }

    #[test]
    fn spanning_sets_are_orthonormalized() {
        let text = r#"{"ambient_dim":2,"members":[{"basis":{"rows":2,"cols":2,"data":[1,2,1,2]},"weight":1}]}"#;
        let sys: WeightedSubspaceSystem = serde_json::from_str(text).unwrap();
        assert_eq!(sys.members()[0].subspace.dim(), 1);
    }

    #[test]
    fn bundle_keys() {
        let inst = generate(&GenSpec::new(3, Flavor::GuaranteedKFusionFrame)).unwrap();
        let doc = GeneratedDocument { spec: GenSpec::new(3, Flavor::GuaranteedKFusionFrame), system: inst.system.clone(), operator: inst.operator.clone() };
        let text = serde_json::to_string(&doc).unwrap();
        let sys: WeightedSubspaceSystem = parse_with_bundle_key(&text, "system").unwrap();
        assert_eq!(sys, inst.system);
        let k: Matrix = parse_with_bundle_key(&text, "operator").unwrap();
        assert_eq!(Some(k), inst.operator);
        let v: Vec<f64> = parse_with_bundle_key(r#"{"vector":[1,2]}"#, "vector").unwrap();
        assert_eq!(v, vec![1.0, 2.0]);
        let none = r#"{"spec":{"seed":1},"system":null,"operator":null}"#;
        assert!(parse_with_bundle_key::<Matrix>(none, "operator").unwrap_err().contains("no operator"));
    }
}
