//! JSON formats: model files (group, action, parameters), complex
//! operators and states as nested `[re, im]` pairs with basis metadata,
//! Hamiltonians, and finite inference models.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dynamics::{DynamicsError, Hamiltonian};
use crate::focusing::{FocusError, FocusedParameter};
use crate::group::{FiniteGroup, GroupAction, GroupError};
use crate::inference::{exact_from_f64, FiniteModel, InferenceError, Probability};
use crate::scalar::{CMatrix, CVector, Exact};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Focus(#[from] FocusError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    order: usize,
    table: Vec<Vec<usize>>,
    points: usize,
    /// `action[φ][g] = φg`.
    action: Vec<Vec<usize>>,
    #[serde(default)]
    parameters: Vec<FocusedParameter>,
}

/// A validated group, right action and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub action: GroupAction,
    pub parameters: Vec<FocusedParameter>,
}

impl Model {
    pub fn group(&self) -> &FiniteGroup {
        self.action.group()
    }

    /// `{"order", "table", "points", "action", "parameters"}`.
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.table.len() != file.order {
            return Err(IoError::Invalid(format!(
                "order is {} but the table has {} rows",
                file.order,
                file.table.len()
            )));
        }
        if file.action.len() != file.points {
            return Err(IoError::Invalid(format!(
                "points is {} but the action has {} rows",
                file.points,
                file.action.len()
            )));
        }
        let group = FiniteGroup::from_table(file.table)?;
        let action = GroupAction::new(group, file.action)?;
        for p in &file.parameters {
            if p.points() != file.points {
                return Err(FocusError::DomainMismatch {
                    label: p.label().to_string(),
                    expected: file.points,
                    found: p.points(),
                }
                .into());
            }
        }
        Ok(Model {
            action,
            parameters: file.parameters,
        })
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            order: self.group().order(),
            table: self.group().table(),
            points: self.action.points(),
            action: self.action.rows(),
            parameters: self.parameters.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }
}

/// How the coordinates of a serialized vector or matrix are to be read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisInfo {
    /// `"orthonormal"`, `"points"`, `"indicators"` or a free label.
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl BasisInfo {
    pub fn orthonormal(dim: usize) -> Self {
        BasisInfo {
            kind: "orthonormal".into(),
            dim,
            labels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub basis: BasisInfo,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub basis: BasisInfo,
    pub amplitudes: Vec<[f64; 2]>,
}

fn pair(z: &Complex<f64>) -> [f64; 2] {
    [z.re, z.im]
}

pub fn operator_to_json(m: &CMatrix<f64>, basis: BasisInfo) -> OperatorJson {
    OperatorJson {
        basis,
        matrix: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect()).collect(),
    }
}

pub fn operator_from_json(op: &OperatorJson) -> Result<CMatrix<f64>, IoError> {
    let n = op.matrix.len();
    if n != op.basis.dim {
        return Err(IoError::Invalid(format!("basis has dim {} but matrix has {n} rows", op.basis.dim)));
    }
    if let Some(i) = op.matrix.iter().position(|r| r.len() != n) {
        return Err(IoError::Invalid(format!("row {i} does not have {n} entries")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = op.matrix[i][j];
        Complex::new(re, im)
    }))
}

pub fn state_to_json(v: &CVector<f64>, basis: BasisInfo) -> StateJson {
    StateJson {
        basis,
        amplitudes: v.iter().map(pair).collect(),
    }
}

pub fn state_from_json(s: &StateJson) -> Result<CVector<f64>, IoError> {
    if s.amplitudes.len() != s.basis.dim {
        return Err(IoError::Invalid(format!(
            "basis has dim {} but {} amplitudes were given",
            s.basis.dim,
            s.amplitudes.len()
        )));
    }
    Ok(CVector::from_iterator(s.amplitudes.len(), s.amplitudes.iter().map(|&[re, im]| Complex::new(re, im))))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HamiltonianFile {
    #[serde(default = "unit_hbar")]
    hbar: f64,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn unit_hbar() -> f64 {
    1.0
}

/// `{"matrix": [[[re, im], ..], ..], "hbar": 1.0}`; `hbar` is optional.
pub fn hamiltonian_from_json(text: &str) -> Result<Hamiltonian<f64>, IoError> {
    let file: HamiltonianFile = serde_json::from_str(text)?;
    let op = OperatorJson {
        basis: BasisInfo::orthonormal(file.matrix.len()),
        matrix: file.matrix,
    };
    Ok(Hamiltonian::with_hbar(operator_from_json(&op)?, file.hbar)?)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupJson {
    order: usize,
    table: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionsJson {
    theta: Vec<Vec<usize>>,
    y: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct InferenceFile {
    theta: usize,
    y: usize,
    /// `likelihood[θ][y]`: numbers, or strings such as `"1/5"`.
    likelihood: Vec<Vec<Value>>,
    group: GroupJson,
    actions: ActionsJson,
}

fn parse_exact(v: &Value) -> Result<Exact, IoError> {
    match v {
        Value::String(s) => s
            .trim()
            .parse::<Exact>()
            .map_err(|_| IoError::Invalid(format!("not a rational: {s:?}"))),
        Value::Number(n) => n
            .as_f64()
            .and_then(exact_from_f64)
            .ok_or_else(|| IoError::Invalid(format!("not representable as a rational: {n}"))),
        other => Err(IoError::Invalid(format!("expected a probability, found {other}"))),
    }
}

/// `{"theta", "y", "likelihood", "group": {"order", "table"},
/// "actions": {"theta", "y"}}`, with probabilities read as rationals.
pub fn inference_model_from_json(text: &str) -> Result<FiniteModel<Exact>, IoError> {
    inference_model_with(text, parse_exact)
}

/// As [`inference_model_from_json`] with `f64` probabilities.
pub fn inference_model_from_json_f64(text: &str) -> Result<FiniteModel<f64>, IoError> {
    inference_model_with(text, |v| parse_exact(v).map(f64::from_exact).or_else(|e| v.as_f64().ok_or(e)))
}

fn inference_model_with<P: Probability>(text: &str, parse: impl Fn(&Value) -> Result<P, IoError>) -> Result<FiniteModel<P>, IoError> {
    let file: InferenceFile = serde_json::from_str(text)?;
    if file.group.table.len() != file.group.order {
        return Err(IoError::Invalid("group order does not match its table".into()));
    }
    if file.actions.theta.len() != file.theta || file.actions.y.len() != file.y {
        return Err(IoError::Invalid("action rows do not match theta/y sizes".into()));
    }
    let group = FiniteGroup::from_table(file.group.table)?;
    let theta_action = GroupAction::new(group.clone(), file.actions.theta)?;
    let y_action = GroupAction::new(group, file.actions.y)?;
    let likelihood = file
        .likelihood
        .iter()
        .map(|row| row.iter().map(&parse).collect::<Result<Vec<P>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FiniteModel::new(likelihood, theta_action, y_action)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::cube_rotation_group;
    use crate::inference::{brute_force_best_equivariant, LossFunction};
    use crate::scalar::max_abs_diff;

    const C2_ON_THREE: &str = r#"{
        "order": 2, "table": [[0, 1], [1, 0]],
        "points": 3, "action": [[0, 2], [1, 1], [2, 0]],
        "parameters": [{"name": "theta", "values": [-1, 0, 1], "map": [0, 1, 2]}]
    }"#;

    #[test]
    fn model_file_round_trip() {
        let m = Model::from_json(C2_ON_THREE).unwrap();
        assert_eq!(m.group().order(), 2);
        assert_eq!(m.action.act(0, 1), 2);
        assert_eq!(m.parameters[0].values(), &[-1.0, 0.0, 1.0]);
        let again = Model::from_json(&m.to_json()).unwrap();
        assert_eq!(again, m);

        let cube = cube_rotation_group();
        let model = Model {
            action: cube.action.clone(),
            parameters: (0..3).map(|a| cube.sign_parameter(a)).collect(),
        };
        assert_eq!(Model::from_json(&model.to_json()).unwrap(), model);
    }

    #[test]
    fn model_file_errors_carry_witnesses() {
        let bad_table = C2_ON_THREE.replace("[[0, 1], [1, 0]]", "[[0, 1], [1, 1]]");
        let err = Model::from_json(&bad_table).unwrap_err();
        assert!(matches!(err, IoError::Group(GroupError::NotAGroup(_))), "{err}");

        let bad_action = C2_ON_THREE.replace("[[0, 2], [1, 1], [2, 0]]", "[[0, 2], [1, 1], [2, 1]]");
        assert!(matches!(Model::from_json(&bad_action), Err(IoError::Group(GroupError::NotAnAction(_)))));

        let short = C2_ON_THREE.replace("[-1, 0, 1], \"map\": [0, 1, 2]", "[-1, 1], \"map\": [0, 1]");
        assert!(matches!(Model::from_json(&short), Err(IoError::Focus(FocusError::DomainMismatch { .. }))));
        let unattained = C2_ON_THREE.replace("\"map\": [0, 1, 2]", "\"map\": [0, 1, 1]");
        let err = Model::from_json(&unattained).unwrap_err();
        assert!(err.to_string().contains("never attained"), "{err}");

        assert!(matches!(Model::from_json("{"), Err(IoError::Json(_))));
    }

    #[test]
    fn operator_and_state_round_trip() {
        let m = crate::spin::spin_operator::<f64>(&[0.0, 1.0, 0.0]);
        let json = serde_json::to_string(&operator_to_json(&m, BasisInfo::orthonormal(2))).unwrap();
        assert!(json.contains("[0.0,-1.0]"));
        let back = operator_from_json(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(max_abs_diff(&back, &m), 0.0);

        let v = CVector::from_vec(vec![Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)]);
        let s = state_to_json(&v, BasisInfo::orthonormal(2));
        assert_eq!(state_from_json(&s).unwrap(), v);
        let short = StateJson { basis: BasisInfo::orthonormal(3), ..s };
        assert!(state_from_json(&short).is_err());
    }

    #[test]
    fn hamiltonian_file() {
        let h = hamiltonian_from_json(r#"{"matrix": [[[1, 0], [0, -1]], [[0, 1], [2, 0]]]}"#).unwrap();
        // [[1, −i], [i, 2]]: trace 3, determinant 1
        let s5 = 5f64.sqrt();
        assert!((h.spectrum()[0] - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((h.spectrum()[1] - (3.0 + s5) / 2.0).abs() < 1e-12);
        assert!(matches!(
            hamiltonian_from_json(r#"{"matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}"#),
            Err(IoError::Dynamics(DynamicsError::NotHermitian { .. }))
        ));
    }

    #[test]
    fn inference_model_file() {
        let text = r#"{
            "theta": 3, "y": 3,
            "likelihood": [["3/5", 0.3, 0.1], [0.1, "3/5", 0.3], [0.3, 0.1, 0.6]],
            "group": {"order": 3, "table": [[0, 1, 2], [1, 2, 0], [2, 0, 1]]},
            "actions": {"theta": [[0, 1, 2], [1, 2, 0], [2, 0, 1]], "y": [[0, 1, 2], [1, 2, 0], [2, 0, 1]]}
        }"#;
        let m = inference_model_from_json(text).unwrap();
        assert_eq!(*m.likelihood(0, 0), Exact::new(3, 5));
        assert_eq!(*m.likelihood(1, 0), Exact::new(3, 10));
        let best = brute_force_best_equivariant(&m, &LossFunction::zero_one(3)).unwrap();
        assert_eq!(best.pitman_risk, Exact::new(2, 5));
        assert!(inference_model_from_json_f64(text).is_ok());

        let broken = text.replace("[0.3, 0.1, 0.6]", "[0.1, 0.3, 0.6]");
        assert!(matches!(
            inference_model_from_json(&broken),
            Err(IoError::Inference(InferenceError::Incompatible { .. }))
        ));
    }
}
