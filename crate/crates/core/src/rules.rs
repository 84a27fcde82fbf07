//! Probability rules `Phi: [0, 1] -> [0, 1]` mapping transition probability
//! to predicted outcome probability, their constraint audit, and the three
//! prediction maps (pure state, known ensemble, average state only).

use serde::{Deserialize, Serialize};

use crate::error::{GptError, Result};
use crate::state::{Ensemble, State};
use crate::transition::{mixed_tau, tau};

/// Inputs outside `[0, 1]` by more than this are rejected.
const DOMAIN_TOL: f64 = 1e-12;
/// Default grid and curvature threshold for [`check_constraints`].
pub const DEFAULT_AUDIT_GRID: usize = 4097;
pub const DEFAULT_AUDIT_TOL: f64 = 1e-8;
const RANGE_GRID: usize = 10_001;

/// Rule definition as it appears in rule files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleSpec {
    Identity,
    Power { alpha: f64 },
    PiecewiseQuadratic,
    Tabulated { samples: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleSpec", into = "RuleSpec")]
pub struct ProbabilityRule {
    spec: RuleSpec,
    /// Tabulated knots sorted by `p`, values clamped into `[0, 1]`.
    knots: Vec<(f64, f64)>,
    clamped_samples: usize,
}

impl TryFrom<RuleSpec> for ProbabilityRule {
    type Error = GptError;

    fn try_from(spec: RuleSpec) -> Result<Self> {
        ProbabilityRule::new(spec)
    }
}

impl From<ProbabilityRule> for RuleSpec {
    fn from(rule: ProbabilityRule) -> Self {
        rule.spec
    }
}

impl ProbabilityRule {
    pub fn new(spec: RuleSpec) -> Result<Self> {
        let mut knots = Vec::new();
        let mut clamped_samples = 0;
        match &spec {
            RuleSpec::Identity | RuleSpec::PiecewiseQuadratic => {}
            RuleSpec::Power { alpha } => {
                if !alpha.is_finite() || *alpha <= 0.0 {
                    return Err(GptError::InvalidRule(format!(
                        "power exponent must be finite and positive, got {alpha}"
                    )));
                }
            }
            RuleSpec::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(GptError::InvalidRule(
                        "a tabulated rule needs at least two samples".into(),
                    ));
                }
                for &[p, v] in samples {
                    if !p.is_finite() || !v.is_finite() || !(0.0..=1.0).contains(&p) {
                        return Err(GptError::InvalidRule(format!(
                            "sample ({p}, {v}) outside the unit square"
                        )));
                    }
                    if !(0.0..=1.0).contains(&v) {
                        clamped_samples += 1;
                    }
                    knots.push((p, v.clamp(0.0, 1.0)));
                }
                knots.sort_by(|a, b| a.0.total_cmp(&b.0));
                if knots.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Err(GptError::InvalidRule(
                        "tabulated samples repeat an abscissa".into(),
                    ));
                }
            }
        }
        let rule = ProbabilityRule {
            spec,
            knots,
            clamped_samples,
        };
        for k in 0..RANGE_GRID {
            let v = rule.raw(k as f64 / (RANGE_GRID - 1) as f64);
            if !(0.0..=1.0).contains(&v) {
                return Err(GptError::InvalidRule(format!("output {v} outside [0, 1]")));
            }
        }
        Ok(rule)
    }

    pub fn identity() -> Self {
        ProbabilityRule::new(RuleSpec::Identity).expect("identity is valid")
    }

    pub fn power(alpha: f64) -> Result<Self> {
        ProbabilityRule::new(RuleSpec::Power { alpha })
    }

    /// `2p^2` on `[0, 1/2]`, `1 - 2(1-p)^2` on `[1/2, 1]`.
    pub fn piecewise_quadratic() -> Self {
        ProbabilityRule::new(RuleSpec::PiecewiseQuadratic).expect("piecewise quadratic is valid")
    }

    pub fn tabulated(samples: Vec<[f64; 2]>) -> Result<Self> {
        ProbabilityRule::new(RuleSpec::Tabulated { samples })
    }

    pub fn spec(&self) -> &RuleSpec {
        &self.spec
    }

    /// Number of tabulated sample values clamped into `[0, 1]`.
    pub fn clamped_samples(&self) -> usize {
        self.clamped_samples
    }

    /// Short human-readable label, e.g. `power(1.5)`.
    pub fn label(&self) -> String {
        match &self.spec {
            RuleSpec::Identity => "identity".into(),
            RuleSpec::Power { alpha } => format!("power({alpha})"),
            RuleSpec::PiecewiseQuadratic => "piecewise-quadratic".into(),
            RuleSpec::Tabulated { samples } => format!("tabulated({} samples)", samples.len()),
        }
    }

    fn raw(&self, p: f64) -> f64 {
        match &self.spec {
            RuleSpec::Identity => p,
            RuleSpec::Power { alpha } => p.powf(*alpha),
            RuleSpec::PiecewiseQuadratic => {
                if p <= 0.5 {
                    2.0 * p * p
                } else {
                    let q = 1.0 - p;
                    1.0 - 2.0 * q * q
                }
            }
            RuleSpec::Tabulated { .. } => {
                let knots = &self.knots;
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if p <= first.0 {
                    return first.1;
                }
                if p >= last.0 {
                    return last.1;
                }
                let i = knots.partition_point(|k| k.0 <= p);
                let (x0, y0) = knots[i - 1];
                let (x1, y1) = knots[i];
                y0 + (y1 - y0) * (p - x0) / (x1 - x0)
            }
        }
    }

    /// `Phi(p)`.
    pub fn eval(&self, p: f64) -> Result<f64> {
        if !p.is_finite() || !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&p) {
            return Err(GptError::DomainError(p));
        }
        Ok(self.raw(p.clamp(0.0, 1.0)))
    }
}

pub fn eval_rule(rule: &ProbabilityRule, p: f64) -> Result<f64> {
    rule.eval(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Convex,
    Concave,
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureInterval {
    pub start: f64,
    pub end: f64,
    pub shape: Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub phi_at_0: f64,
    pub phi_at_1: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneViolation {
    pub p_lo: f64,
    pub p_hi: f64,
    pub drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityCheck {
    pub violations: usize,
    pub worst: Option<MonotoneViolation>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub residual: f64,
    /// Where the residual was attained.
    pub at_p: f64,
    pub pass: bool,
}

/// Grid audit of the boundary, monotonicity, normalization and midpoint
/// constraints, plus a curvature classification of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub rule: RuleSpec,
    pub grid_n: usize,
    pub tol: f64,
    pub boundary: BoundaryCheck,
    pub monotonicity: MonotonicityCheck,
    /// `max_p |Phi(p) + Phi(1 - p) - 1|`.
    pub normalization: ResidualCheck,
    /// `|Phi(1/2) - 1/2|`.
    pub midpoint: ResidualCheck,
    pub curvature: Vec<CurvatureInterval>,
    pub clamped_samples: usize,
    pub pass: bool,
}

impl ConstraintReport {
    pub fn shape_at(&self, p: f64) -> Option<Curvature> {
        self.curvature
            .iter()
            .find(|c| c.start <= p && p <= c.end)
            .map(|c| c.shape)
    }
}

/// Audit `rule` on the uniform grid `k / (grid_n - 1)`.
///
/// `tol` is the pass threshold for every residual and the second-difference
/// threshold separating curved from affine stretches.
pub fn check_constraints(rule: &ProbabilityRule, grid_n: usize, tol: f64) -> ConstraintReport {
    let n = grid_n.max(3);
    let step = 1.0 / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&p| rule.raw(p)).collect();

    let boundary = BoundaryCheck {
        phi_at_0: values[0],
        phi_at_1: values[n - 1],
        pass: values[0].abs() <= tol && (values[n - 1] - 1.0).abs() <= tol,
    };

    let mut violations = 0;
    let mut worst: Option<MonotoneViolation> = None;
    for k in 0..n - 1 {
        let drop = values[k] - values[k + 1];
        if drop > tol {
            violations += 1;
            if worst.is_none_or(|w| drop > w.drop) {
                worst = Some(MonotoneViolation {
                    p_lo: grid[k],
                    p_hi: grid[k + 1],
                    drop,
                });
            }
        }
    }
    let monotonicity = MonotonicityCheck {
        violations,
        worst,
        pass: violations == 0,
    };

    let mut normalization = ResidualCheck {
        residual: 0.0,
        at_p: 0.0,
        pass: true,
    };
    for k in 0..n {
        // grid[n-1-k] is exactly the grid's mirror of grid[k]
        let r = (values[k] + values[n - 1 - k] - 1.0).abs();
        if r > normalization.residual {
            normalization.residual = r;
            normalization.at_p = grid[k];
        }
    }
    normalization.pass = normalization.residual <= tol;

    let mid = (rule.raw(0.5) - 0.5).abs();
    let midpoint = ResidualCheck {
        residual: mid,
        at_p: 0.5,
        pass: mid <= tol,
    };

    let mut curvature: Vec<CurvatureInterval> = Vec::new();
    for k in 1..n - 1 {
        let second = values[k - 1] - 2.0 * values[k] + values[k + 1];
        let shape = if second > tol {
            Curvature::Convex
        } else if second < -tol {
            Curvature::Concave
        } else {
            Curvature::Affine
        };
        let start = if k == 1 { 0.0 } else { grid[k] - 0.5 * step };
        let end = if k == n - 2 { 1.0 } else { grid[k] + 0.5 * step };
        match curvature.last_mut() {
            Some(last) if last.shape == shape => last.end = end,
            _ => curvature.push(CurvatureInterval { start, end, shape }),
        }
    }

    let pass = boundary.pass && monotonicity.pass && normalization.pass && midpoint.pass;
    ConstraintReport {
        rule: rule.spec().clone(),
        grid_n: n,
        tol,
        boundary,
        monotonicity,
        normalization,
        midpoint,
        curvature,
        clamped_samples: rule.clamped_samples(),
        pass,
    }
}

/// `P(phi | psi) = Phi(tau(psi, phi))` for pure `psi`.
pub fn predict_pure(rule: &ProbabilityRule, psi: &State, phi: &State) -> Result<f64> {
    rule.eval(tau(psi, phi)?)
}

/// Prediction with the decomposition known: `sum_i lambda_i Phi(tau(psi_i, phi))`.
///
/// Mixed members (from coarse-grained steering) contribute through
/// `tau(omega_i, phi) = e_phi(omega_i)`.
pub fn predict_ensemble(rule: &ProbabilityRule, ensemble: &Ensemble, phi: &State) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(GptError::EmptyEnsemble);
    }
    ensemble
        .members()
        .iter()
        .map(|(w, s)| Ok(w * rule.eval(mixed_tau(s, phi)?)?))
        .sum()
}

/// Prediction from the average state alone: `Phi(tau(omega, phi))`.
pub fn predict_average(rule: &ProbabilityRule, omega: &State, phi: &State) -> Result<f64> {
    rule.eval(mixed_tau(omega, phi)?)
}
