//! Simulation toolkit for generalized probabilistic theories.
//!
//! States, effects and measurements live in a [`SystemModel`]: finite
//! dimensional quantum theory or a classical simplex. On top of that the crate
//! provides transition probabilities, probability rules that reshape them,
//! steering through a shared purification, and the signaling experiment that
//! compares two steering protocols under a given rule.
//!
//! ```
//! use gpt_steering::{run_scenario, ProbabilityRule, Scenario};
//!
//! let rule = ProbabilityRule::power(1.5).unwrap();
//! let report = run_scenario(&Scenario::qubit(rule, 1.0, 0.0, 0.5)).unwrap();
//! assert!((report.gap - (0.5 - 0.5f64.powf(1.5))).abs() < 1e-12);
//! ```

pub mod error;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod rules;
pub mod signaling;
pub mod state;
pub mod steering;
pub mod transition;
pub mod wire;

pub use error::{GptError, Result};
pub use model::{hermitian_basis, SystemModel, EIGEN_TOL, LINEAR_TOL};
pub use rules::{
    check_constraints, eval_rule, predict_average, predict_ensemble, predict_pure,
    ConstraintReport, Curvature, ProbabilityRule, RuleSpec,
};
pub use signaling::{
    affinity_certificate, analytic_gap, max_gap_search, protocol_probability, reproduce_paper,
    run_scenario, simulate_detection, sweep, Protocol, Protocol2Mode, Scenario, SignalingReport,
};
pub use state::{
    evaluate, marginal, mix, BipartiteState, Effect, Ensemble, Measurement, Side, State,
};
pub use steering::{
    purify, steer, synthesize_steering_measurement, verify_no_signaling_marginal,
    SteeringMeasurement,
};
pub use transition::{
    distinguishing_measurement, mixed_tau, state_with_tau, tau, tau_lp, DistinguishingPair, LpTau,
};
