use thiserror::Error;

use crate::model::SystemModel;

/// Errors raised by state construction, transition probabilities, rules,
/// steering and the signaling experiments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GptError {
    #[error("expected {expected} coefficients for {model}, got {got}")]
    DimensionMismatch {
        model: SystemModel,
        expected: usize,
        got: usize,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("element is not normalized: u(v) = {0}")]
    NotNormalized(f64),
    #[error("element lies outside the cone (smallest eigenvalue or coordinate {0})")]
    OutsideCone(f64),
    #[error("operator is not Hermitian (max asymmetry {0})")]
    NotHermitian(f64),
    #[error("effect out of range: {0}")]
    InvalidEffect(String),
    #[error("effects do not sum to the order unit (max deviation {0})")]
    IncompleteMeasurement(f64),
    #[error("pairing {0} lies outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("model mismatch: {left} vs {right}")]
    ModelMismatch {
        left: SystemModel,
        right: SystemModel,
    },
    #[error("state is not pure")]
    NotPure,
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("invalid bipartite state: {0}")]
    InvalidBipartite(String),
    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded: {0}")]
    UnboundedModel(String),
    #[error("probability {0} outside [0, 1]")]
    DomainError(f64),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("target ensemble average differs from the marginal by {0}")]
    MarginalMismatch(f64),
    #[error("target has {required} members but the purifier has dimension {available}; re-purify with dimension >= {required}")]
    RankDeficit { required: usize, available: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("protocols disagree on the average state by {0}")]
    SignalingResidual(f64),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GptError>;
