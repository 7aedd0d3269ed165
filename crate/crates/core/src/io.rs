//! JSON file formats. Complex numbers are `[re, im]` pairs and matrices are
//! row-major lists of rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{Ensemble, EnsembleError, Label, ProductState};
use crate::linalg::{CMat, CVec, HermitianOp, LinalgError, C64};
use crate::locc::{LeafLabel, LocalMeasurement, LoccError, LoccProtocol, Mode, Party};
use crate::oud::UnambiguousPovm;
use crate::pi::{OmegaLabel, PiError, PiPovm};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("file: {0}")]
    File(#[from] std::io::Error),
    #[error("malformed {what}: {detail}")]
    Shape { what: &'static str, detail: String },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Pi(#[from] PiError),
    #[error(transparent)]
    Locc(#[from] LoccError),
}

pub type ComplexJson = [f64; 2];
pub type VectorJson = Vec<ComplexJson>;
pub type MatrixJson = Vec<Vec<ComplexJson>>;

fn shape(what: &'static str, detail: impl Into<String>) -> IoError {
    IoError::Shape {
        what,
        detail: detail.into(),
    }
}

pub fn vector_to_json(v: &CVec) -> VectorJson {
    v.entries().iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &VectorJson) -> CVec {
    CVec::new(v.iter().map(|&[re, im]| C64::new(re, im)).collect())
}

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMat, IoError> {
    let n = m.len();
    if n == 0 || m.iter().any(|row| row.len() != n) {
        return Err(shape("matrix", "expected a non-empty square matrix"));
    }
    Ok(CMat::from_rows(
        m.iter()
            .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect(),
    ))
}

pub fn hermitian_from_json(m: &MatrixJson) -> Result<HermitianOp, IoError> {
    Ok(HermitianOp::new(matrix_from_json(m)?)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub a: VectorJson,
    pub b: VectorJson,
}

/// `{ "labels": [...], "priors": [...], "states": [{ "a": .., "b": .. }] }`.
/// `labels` defaults to `["0", "1", "+", "-"]` and fixes the order of the
/// other two lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub priors: Vec<f64>,
    pub states: Vec<StateJson>,
}

impl EnsembleFile {
    pub fn from_ensemble(e: &Ensemble) -> Self {
        EnsembleFile {
            labels: Some(Label::ALL.iter().map(|l| l.to_string()).collect()),
            priors: e.priors().to_vec(),
            states: e
                .states()
                .iter()
                .map(|s| StateJson {
                    a: vector_to_json(&s.a),
                    b: vector_to_json(&s.b),
                })
                .collect(),
        }
    }

    pub fn to_ensemble(&self) -> Result<Ensemble, IoError> {
        if self.priors.len() != 4 || self.states.len() != 4 {
            return Err(shape("ensemble", "expected 4 priors and 4 states"));
        }
        let order: Vec<Label> = match &self.labels {
            None => Label::ALL.to_vec(),
            Some(names) => names
                .iter()
                .map(|n| n.parse())
                .collect::<Result<_, EnsembleError>>()?,
        };
        let mut seen = order.clone();
        seen.sort();
        seen.dedup();
        if order.len() != 4 || seen.len() != 4 {
            return Err(EnsembleError::BadLabelSet.into());
        }
        let mut priors = [0.0; 4];
        let mut states: [Option<ProductState>; 4] = Default::default();
        for ((label, &p), s) in order.iter().zip(&self.priors).zip(&self.states) {
            if s.a.len() != 2 || s.b.len() != 2 {
                return Err(shape("state", format!("label {label}: factors must have 2 entries")));
            }
            priors[label.index()] = p;
            states[label.index()] = Some(ProductState::new(vector_from_json(&s.a), vector_from_json(&s.b)));
        }
        Ok(Ensemble::new(priors, states.map(|s| s.unwrap()))?)
    }
}

pub fn parse_ensemble(text: &str) -> Result<Ensemble, IoError> {
    serde_json::from_str::<EnsembleFile>(text)?.to_ensemble()
}

pub fn read_ensemble(path: &std::path::Path) -> Result<Ensemble, IoError> {
    parse_ensemble(&std::fs::read_to_string(path)?)
}

/// `{ "s": [..4] }` with the compiled effects keyed by label for audit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PovmJson {
    pub s: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effects: Option<BTreeMap<String, MatrixJson>>,
}

impl PovmJson {
    pub fn from_povm(p: &UnambiguousPovm) -> Self {
        let mut effects: BTreeMap<String, MatrixJson> = Label::ALL
            .iter()
            .map(|&l| (l.to_string(), matrix_to_json(p.effect(l).matrix())))
            .collect();
        effects.insert("?".to_string(), matrix_to_json(p.inconclusive().matrix()));
        PovmJson {
            s: p.weights(),
            effects: Some(effects),
        }
    }
}

/// Map from `"w0,w1"` to the effect.
pub type PiPovmJson = BTreeMap<String, MatrixJson>;

pub fn pi_povm_to_json(p: &PiPovm) -> PiPovmJson {
    p.iter()
        .map(|(o, m)| (o.to_string(), matrix_to_json(m.matrix())))
        .collect()
}

pub fn pi_povm_from_json(j: &PiPovmJson) -> Result<PiPovm, IoError> {
    let pairs = j
        .iter()
        .map(|(k, m)| Ok((k.parse::<OmegaLabel>()?, hermitian_from_json(m)?)))
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(PiPovm::from_pairs(pairs)?)
}

/// `{ "first_party", "mode", "round1": [..], "round2": { "i": [..] }, "labels": { "i,j": label } }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolJson {
    pub first_party: Party,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    pub round1: Vec<MatrixJson>,
    pub round2: BTreeMap<String, Vec<MatrixJson>>,
    pub labels: BTreeMap<String, String>,
}

fn default_mode() -> Mode {
    Mode::Plain
}

impl ProtocolJson {
    pub fn from_protocol(p: &LoccProtocol) -> Self {
        let effects = |m: &LocalMeasurement| -> Vec<MatrixJson> {
            m.effects().iter().map(|e| matrix_to_json(e.matrix())).collect()
        };
        ProtocolJson {
            first_party: p.first_party(),
            mode: p.mode(),
            round1: effects(p.round1()),
            round2: p
                .round2()
                .iter()
                .enumerate()
                .map(|(i, m)| (i.to_string(), effects(m)))
                .collect(),
            labels: p
                .labels()
                .iter()
                .map(|(&(i, j), l)| (format!("{i},{j}"), l.to_string()))
                .collect(),
        }
    }

    pub fn to_protocol(&self) -> Result<LoccProtocol, IoError> {
        let local = |party: Party, list: &[MatrixJson]| -> Result<LocalMeasurement, IoError> {
            let effects = list
                .iter()
                .map(hermitian_from_json)
                .collect::<Result<Vec<_>, _>>()?;
            Ok(LocalMeasurement::new(party, effects)?)
        };
        let round1 = local(self.first_party, &self.round1)?;
        let mut round2 = Vec::with_capacity(round1.len());
        for i in 0..round1.len() {
            let list = self
                .round2
                .get(&i.to_string())
                .ok_or(LoccError::MissingRound2(i))?;
            round2.push(local(self.first_party.other(), list)?);
        }
        if self.round2.len() > round1.len() {
            return Err(LoccError::ExtraRound2(round1.len()).into());
        }
        let mut labels = BTreeMap::new();
        for (k, v) in &self.labels {
            let (i, j) = k
                .split_once(',')
                .and_then(|(i, j)| Some((i.trim().parse().ok()?, j.trim().parse().ok()?)))
                .ok_or_else(|| shape("leaf key", k.clone()))?;
            labels.insert((i, j), LeafLabel::parse(v, self.mode)?);
        }
        Ok(LoccProtocol::new(self.mode, round1, round2, labels)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{make_lock_example, make_unlock_example, reciprocal_basis, ExampleParams};
    use crate::locc::{builtin_fmem_protocol, builtin_loccud2_protocol};
    use crate::oud::compile_povm;
    use crate::pi::solve_oud_pi;

    fn params(g: f64) -> ExampleParams {
        ExampleParams::new(g).unwrap()
    }

    #[test]
    fn ensemble_round_trip() {
        let e = make_unlock_example(params(3.0));
        let text = serde_json::to_string(&EnsembleFile::from_ensemble(&e)).unwrap();
        assert_eq!(parse_ensemble(&text).unwrap(), e);
    }

    #[test]
    fn ensemble_labels_reorder() {
        let text = r#"{
            "labels": ["+", "-", "0", "1"],
            "priors": [0.25, 0.25, 0.25, 0.25],
            "states": [
                {"a": [[1,0],[0,0]], "b": [[1,0],[0,0]]},
                {"a": [[1,0],[0,0]], "b": [[0,0],[1,0]]},
                {"a": [[0,0],[1,0]], "b": [[1,0],[0,0]]},
                {"a": [[0,0],[1,0]], "b": [[0,0],[1,0]]}
            ]
        }"#;
        let e = parse_ensemble(text).unwrap();
        let want = CVec::ket1().kron(&CVec::ket0());
        assert!((e.ket(Label::Zero).inner(&want).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ensemble_rejects_bad_input() {
        assert!(parse_ensemble("{").is_err());
        let dup = r#"{"labels": ["0","0","+","-"], "priors": [0.25,0.25,0.25,0.25],
            "states": [{"a":[[1,0],[0,0]],"b":[[1,0],[0,0]]},{"a":[[1,0],[0,0]],"b":[[0,0],[1,0]]},
                       {"a":[[0,0],[1,0]],"b":[[1,0],[0,0]]},{"a":[[0,0],[1,0]],"b":[[0,0],[1,0]]}]}"#;
        assert!(matches!(parse_ensemble(dup), Err(IoError::Ensemble(EnsembleError::BadLabelSet))));
        let short = r#"{"priors": [1.0], "states": []}"#;
        assert!(matches!(parse_ensemble(short), Err(IoError::Shape { .. })));
    }

    #[test]
    fn povm_json_has_weights_and_effects() {
        let e = make_lock_example(params(2.0));
        let p = compile_povm([0.5, 0.5, 0.0, 0.0], &reciprocal_basis(&e).unwrap()).unwrap();
        let j = serde_json::to_value(PovmJson::from_povm(&p)).unwrap();
        assert_eq!(j["s"][0], 0.5);
        assert_eq!(j["effects"]["?"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn pi_povm_round_trip() {
        let e = make_lock_example(params(2.0));
        let p = solve_oud_pi(&e).unwrap().povm;
        let j = pi_povm_to_json(&p);
        assert_eq!(j.len(), 9);
        assert!(j.contains_key("0,+") && j.contains_key("?,?"));
        let back = pi_povm_from_json(&j).unwrap();
        for (a, b) in p.effects().iter().zip(back.effects()) {
            assert!(a.distance(b) < 1e-15);
        }
    }

    #[test]
    fn protocol_round_trip() {
        for p in [builtin_loccud2_protocol(), builtin_fmem_protocol(params(2.0))] {
            let text = serde_json::to_string(&ProtocolJson::from_protocol(&p)).unwrap();
            let back = serde_json::from_str::<ProtocolJson>(&text).unwrap().to_protocol().unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn protocol_requires_every_branch() {
        let mut j = ProtocolJson::from_protocol(&builtin_loccud2_protocol());
        j.round2.remove("1");
        assert!(matches!(j.to_protocol(), Err(IoError::Locc(LoccError::MissingRound2(1)))));
    }
}
