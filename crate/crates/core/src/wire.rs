//! JSON encodings of states, effects and bipartite states.
//!
//! ```json
//! { "model": {"kind":"quantum","d":2}, "coeffs": [[0.5,0.0],[0.5,0.0],[0.5,0.0],[0.5,0.0]] }
//! { "model": {"kind":"classical","n":2}, "coeffs": [0.3, 0.7] }
//! ```
//!
//! Quantum elements carry the matrix row-major as `[re, im]` pairs; classical
//! ones carry the real coordinates. Decoding re-validates the element.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{GptError, Result};
use crate::linalg::CMat;
use crate::model::SystemModel;
use crate::state::{BipartiteState, Effect, Joint, Repr, State};

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Coeffs {
    Real(Vec<f64>),
    Complex(Vec<[f64; 2]>),
}

#[derive(Debug, Serialize, Deserialize)]
struct ElementWire {
    model: SystemModel,
    coeffs: Coeffs,
}

fn encode(model: SystemModel, repr: &Repr) -> ElementWire {
    let coeffs = match repr {
        Repr::Operator(m) => {
            let n = m.nrows();
            let mut pairs = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    pairs.push([m[(i, j)].re, m[(i, j)].im]);
                }
            }
            Coeffs::Complex(pairs)
        }
        Repr::Vector(v) => Coeffs::Real(v.iter().copied().collect()),
    };
    ElementWire { model, coeffs }
}

fn decode_matrix(model: SystemModel, pairs: &[[f64; 2]]) -> Result<CMat> {
    let d = model.level_count();
    if pairs.len() != d * d {
        return Err(GptError::DimensionMismatch {
            model,
            expected: d * d,
            got: pairs.len(),
        });
    }
    Ok(DMatrix::from_row_iterator(
        d,
        d,
        pairs.iter().map(|[re, im]| Complex64::new(*re, *im)),
    ))
}

impl TryFrom<ElementWire> for State {
    type Error = GptError;

    fn try_from(w: ElementWire) -> Result<State> {
        match (w.model, w.coeffs) {
            (SystemModel::Quantum { .. }, Coeffs::Complex(pairs)) => {
                State::from_density(w.model, decode_matrix(w.model, &pairs)?)
            }
            (SystemModel::Classical { .. }, Coeffs::Real(v)) => {
                State::from_probabilities(w.model, v)
            }
            (model, _) => Err(GptError::Parse(format!(
                "coefficient encoding does not match {model}"
            ))),
        }
    }
}

impl TryFrom<ElementWire> for Effect {
    type Error = GptError;

    fn try_from(w: ElementWire) -> Result<Effect> {
        match (w.model, w.coeffs) {
            (SystemModel::Quantum { .. }, Coeffs::Complex(pairs)) => {
                Effect::from_operator(w.model, decode_matrix(w.model, &pairs)?)
            }
            (SystemModel::Classical { .. }, Coeffs::Real(v)) => Effect::from_covector(w.model, v),
            (model, _) => Err(GptError::Parse(format!(
                "coefficient encoding does not match {model}"
            ))),
        }
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        encode(self.model(), self.repr()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ElementWire::deserialize(deserializer)?;
        State::try_from(wire).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Effect {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        encode(self.model(), self.repr()).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Effect {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ElementWire::deserialize(deserializer)?;
        Effect::try_from(wire).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BipartiteWire {
    model_a: SystemModel,
    model_b: SystemModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    product: Option<[usize; 2]>,
}

impl Serialize for BipartiteState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let (amplitudes, product) = match self.joint() {
            Joint::Amplitudes(v) => (Some(v.iter().map(|z| [z.re, z.im]).collect()), None),
            Joint::Product(i, j) => (None, Some([*i, *j])),
        };
        BipartiteWire {
            model_a: self.model(crate::state::Side::A),
            model_b: self.model(crate::state::Side::B),
            amplitudes,
            product,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BipartiteState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let w = BipartiteWire::deserialize(deserializer)?;
        let built = match (w.amplitudes, w.product) {
            (Some(amps), None) => BipartiteState::from_amplitudes(
                w.model_a,
                w.model_b,
                amps.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            ),
            (None, Some([i, j])) => State::basis(w.model_a, i).and_then(|a| {
                State::basis(w.model_b, j).and_then(|b| BipartiteState::product(&a, &b))
            }),
            _ => Err(GptError::Parse(
                "bipartite state needs exactly one of `amplitudes` or `product`".into(),
            )),
        };
        built.map_err(serde::de::Error::custom)
    }
}
