//! Two-protocol steering experiments and the signaling gap.
//!
//! Alice and Bob share a purification of `omega = lambda psi_1 + (1 - lambda) psi_2`
//! where `tau(psi_i, phi) = p_i`. Protocol 1 steers Bob to the ensemble
//! `{(lambda, psi_1), (1 - lambda, psi_2)}`; protocol 2 leaves Bob with the same
//! average state but no finer decomposition (or, in `steered-uniform` mode, a
//! decomposition whose members all share `tau = p_bar`). Bob's predicted
//! probabilities of accepting `phi` differ by
//! `lambda Phi(p_1) + (1 - lambda) Phi(p_2) - Phi(p_bar)`, which vanishes for
//! every scenario only when `Phi` is affine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GptError, Result};
use crate::model::SystemModel;
use crate::rules::{predict_average, predict_ensemble, ProbabilityRule, RuleSpec};
use crate::state::{marginal, BipartiteState, Ensemble, Measurement, Side, State};
use crate::steering::{purify, steer, synthesize_steering_measurement, verify_no_signaling_marginal};
use crate::transition::{mixed_tau, state_with_tau};

/// Protocols must agree on Bob's average state to this precision.
pub const MARGINAL_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_SEARCH_GRID: usize = 101;
pub const DEFAULT_REFINE_STEPS: usize = 40;
/// Agreement required between computed values and the published three-decimal figures.
pub const QUOTED_VALUE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol2Mode {
    /// Alice does nothing; Bob predicts from the average state alone.
    #[default]
    TrivialAverage,
    /// Alice steers to a two-member decomposition whose members all have
    /// `tau = p_bar` (qubit only).
    SteeredUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub rule: ProbabilityRule,
    /// Bob tests for this pure state.
    pub phi: State,
    pub p1: f64,
    pub p2: f64,
    pub lambda: f64,
    pub mode: Protocol2Mode,
    pub seed: u64,
}

impl Scenario {
    /// Scenario on a qubit with `phi = |0>`, trivial-average protocol 2 and seed 0.
    pub fn qubit(rule: ProbabilityRule, p1: f64, p2: f64, lambda: f64) -> Scenario {
        Scenario {
            rule,
            phi: State::basis(SystemModel::qubit(), 0).expect("qubit basis state"),
            p1,
            p2,
            lambda,
            mode: Protocol2Mode::default(),
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: Protocol2Mode) -> Scenario {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Scenario {
        self.seed = seed;
        self
    }

    pub fn p_bar(&self) -> f64 {
        self.lambda * self.p1 + (1.0 - self.lambda) * self.p2
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("p1", self.p1), ("p2", self.p2), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GptError::InvalidScenario(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !self.phi.model().is_quantum() {
            return Err(GptError::UnsupportedModel(
                "signaling scenarios need steering, which classical models lack".into(),
            ));
        }
        if !self.phi.is_pure() {
            return Err(GptError::NotPure);
        }
        Ok(())
    }
}

/// What Alice does in one protocol.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Measure on `A`; Bob knows which ensemble he was steered into.
    Measure(Measurement),
    /// No measurement; Bob only knows the average state.
    Trivial,
}

/// Bob's expected probability of accepting `phi` under `protocol`.
pub fn protocol_probability(
    rule: &ProbabilityRule,
    joint: &BipartiteState,
    protocol: &Protocol,
    phi: &State,
) -> Result<f64> {
    match protocol {
        Protocol::Measure(m) => predict_ensemble(rule, &steer(joint, m)?, phi),
        Protocol::Trivial => predict_average(rule, &marginal(joint, Side::B)?, phi),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub weights: Vec<f64>,
    /// `tau(member, phi)` per member.
    pub taus: Vec<f64>,
    pub pure: Vec<bool>,
    pub states: Vec<State>,
}

impl EnsembleSummary {
    fn new(ensemble: &Ensemble, phi: &State) -> Result<Self> {
        let mut out = EnsembleSummary {
            weights: Vec::new(),
            taus: Vec::new(),
            pure: Vec::new(),
            states: Vec::new(),
        };
        for (w, s) in ensemble.members() {
            out.weights.push(*w);
            out.taus.push(mixed_tau(s, phi)?);
            out.pure.push(s.is_pure());
            out.states.push(s.clone());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalingReport {
    pub rule: RuleSpec,
    pub p1: f64,
    pub p2: f64,
    pub lambda: f64,
    pub p_bar: f64,
    pub mode: Protocol2Mode,
    pub seed: u64,
    #[serde(rename = "P1")]
    pub prob_protocol1: f64,
    #[serde(rename = "P2")]
    pub prob_protocol2: f64,
    /// Signed `P1 - P2`.
    pub gap: f64,
    pub protocol1: EnsembleSummary,
    pub protocol2: EnsembleSummary,
    pub marginal_residual: f64,
}

/// Qubit decomposition of `omega` into at most two pure states that all have
/// `tau(., phi) = tau(omega, phi)`: Bloch vectors `r +- t w` with
/// `w` orthogonal to both `r` and the Bloch vector of `phi`.
pub fn uniform_tau_decomposition(omega: &State, phi: &State) -> Result<Ensemble> {
    let r = omega.bloch()?;
    let n = phi.bloch()?;
    let cross = [
        n[1] * r[2] - n[2] * r[1],
        n[2] * r[0] - n[0] * r[2],
        n[0] * r[1] - n[1] * r[0],
    ];
    let len = norm3(cross);
    let w = if len > 1e-9 {
        cross.map(|x| x / len)
    } else {
        let axis = (0..3).min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap_or(0);
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let along = n[axis];
        let t = [e[0] - along * n[0], e[1] - along * n[1], e[2] - along * n[2]];
        let tl = norm3(t);
        t.map(|x| x / tl)
    };
    let r_len2 = r.iter().map(|x| x * x).sum::<f64>();
    let t = (1.0 - r_len2).max(0.0).sqrt();
    if t < 1e-12 {
        return Ensemble::new(vec![(1.0, omega.clone())]);
    }
    let member = |sign: f64| {
        let s = [r[0] + sign * t * w[0], r[1] + sign * t * w[1], r[2] + sign * t * w[2]];
        let l = norm3(s);
        State::from_bloch(s.map(|x| x / l))
    };
    Ensemble::new(vec![(0.5, member(1.0)?), (0.5, member(-1.0)?)])
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Build both protocols for `scenario`, run them through purification and
/// steering, and report Bob's predictions.
pub fn run_scenario(scenario: &Scenario) -> Result<SignalingReport> {
    scenario.validate()?;
    let phi = &scenario.phi;
    let psi1 = state_with_tau(phi, scenario.p1, scenario.seed.wrapping_mul(2))?;
    let psi2 = state_with_tau(phi, scenario.p2, scenario.seed.wrapping_mul(2).wrapping_add(1))?;
    let target = Ensemble::new(vec![(scenario.lambda, psi1), (1.0 - scenario.lambda, psi2)])?;
    let omega = crate::state::mix(&target)?;
    let joint = purify(&omega, None)?;

    let alice1 = synthesize_steering_measurement(&joint, &target)?.measurement;
    let ens1 = steer(&joint, &alice1)?;
    let prob1 = predict_ensemble(&scenario.rule, &ens1, phi)?;

    let (alice2, ens2, prob2) = match scenario.mode {
        Protocol2Mode::TrivialAverage => {
            let alice = Measurement::trivial(joint.model(Side::A));
            let ens = steer(&joint, &alice)?;
            let prob = predict_average(&scenario.rule, &ens.members()[0].1, phi)?;
            (alice, ens, prob)
        }
        Protocol2Mode::SteeredUniform => {
            let uniform = uniform_tau_decomposition(&crate::state::marginal(&joint, Side::B)?, phi)?;
            let alice = synthesize_steering_measurement(&joint, &uniform)?.measurement;
            let ens = steer(&joint, &alice)?;
            let prob = predict_ensemble(&scenario.rule, &ens, phi)?;
            (alice, ens, prob)
        }
    };

    let residual = verify_no_signaling_marginal(&joint, &alice1, &alice2)?;
    if residual > MARGINAL_RESIDUAL_TOL {
        return Err(GptError::SignalingResidual(residual));
    }
    Ok(SignalingReport {
        rule: scenario.rule.spec().clone(),
        p1: scenario.p1,
        p2: scenario.p2,
        lambda: scenario.lambda,
        p_bar: scenario.p_bar(),
        mode: scenario.mode,
        seed: scenario.seed,
        prob_protocol1: prob1,
        prob_protocol2: prob2,
        gap: prob1 - prob2,
        protocol1: EnsembleSummary::new(&ens1, phi)?,
        protocol2: EnsembleSummary::new(&ens2, phi)?,
        marginal_residual: residual,
    })
}

/// Closed-form gap `lambda Phi(p1) + (1 - lambda) Phi(p2) - Phi(p_bar)`.
pub fn analytic_gap(rule: &ProbabilityRule, p1: f64, p2: f64, lambda: f64) -> Result<f64> {
    let chord = lambda * rule.eval(p1)? + (1.0 - lambda) * rule.eval(p2)?;
    Ok(chord - rule.eval(lambda * p1 + (1.0 - lambda) * p2)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub p1: f64,
    pub p2: f64,
    pub lambda: f64,
    #[serde(rename = "P1")]
    pub prob_protocol1: f64,
    #[serde(rename = "P2")]
    pub prob_protocol2: f64,
    pub gap: f64,
}

impl SweepRow {
    fn at(rule: &ProbabilityRule, p1: f64, p2: f64, lambda: f64) -> SweepRow {
        let prob1 = lambda * rule.raw_eval(p1) + (1.0 - lambda) * rule.raw_eval(p2);
        let prob2 = rule.raw_eval(lambda * p1 + (1.0 - lambda) * p2);
        SweepRow {
            p1,
            p2,
            lambda,
            prob_protocol1: prob1,
            prob_protocol2: prob2,
            gap: prob1 - prob2,
        }
    }
}

impl ProbabilityRule {
    /// `eval` for arguments already known to lie in `[0, 1]`.
    fn raw_eval(&self, p: f64) -> f64 {
        self.eval(p.clamp(0.0, 1.0)).expect("clamped argument")
    }
}

fn grid_points(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

/// Closed-form gap over the `grid^3` lattice, rows in lexicographic
/// `(p1, p2, lambda)` order. With `best_lambda_only`, one row per `(p1, p2)`
/// keeping the lambda of largest `|gap|`.
pub fn sweep(rule: &ProbabilityRule, grid: usize, best_lambda_only: bool) -> Result<Vec<SweepRow>> {
    if grid < 3 {
        return Err(GptError::InvalidScenario(format!("grid must be >= 3, got {grid}")));
    }
    let pts = grid_points(grid);
    let rows: Vec<Vec<SweepRow>> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let (p1, p2) = (pts[idx / grid], pts[idx % grid]);
            let cells = pts.iter().map(|&l| SweepRow::at(rule, p1, p2, l));
            if best_lambda_only {
                let mut best: Option<SweepRow> = None;
                for row in cells {
                    if best.is_none_or(|b| row.gap.abs() > b.gap.abs() + TIE_TOL) {
                        best = Some(row);
                    }
                }
                best.into_iter().collect()
            } else {
                cells.collect()
            }
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// Values closer than this count as ties; the earlier lattice point wins.
const TIE_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub grid: usize,
    pub refine_steps: usize,
    /// Best `|gap|` on the lattice before refinement.
    pub grid_best: SweepRow,
    /// Witness after coordinate refinement, closed form.
    pub refined: SweepRow,
    /// The refined witness replayed through purification and steering.
    pub report: SignalingReport,
}

/// Maximize `|gap|` over `[0, 1]^3`: lattice scan, then coordinate ascent
/// with a step starting at the lattice spacing and halving whenever no
/// coordinate move improves. The witness is replayed with `seed`.
pub fn max_gap_search(
    rule: &ProbabilityRule,
    grid: usize,
    refine: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    let rows = sweep(rule, grid, true)?;
    let mut best = rows[0];
    for row in &rows[1..] {
        if row.gap.abs() > best.gap.abs() + TIE_TOL {
            best = *row;
        }
    }
    let grid_best = best;
    let mut x = [best.p1, best.p2, best.lambda];
    let mut value = best.gap.abs();
    let mut step = 1.0 / (grid - 1) as f64;
    for _ in 0..refine {
        let mut improved = false;
        for coord in 0..3 {
            for sign in [1.0, -1.0] {
                let mut cand = x;
                cand[coord] = (cand[coord] + sign * step).clamp(0.0, 1.0);
                let v = analytic_gap(rule, cand[0], cand[1], cand[2])?.abs();
                if v > value + TIE_TOL {
                    x = cand;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let refined = SweepRow::at(rule, x[0], x[1], x[2]);
    let report = run_scenario(&Scenario::qubit(rule.clone(), x[0], x[1], x[2]).with_seed(seed))?;
    Ok(SearchOutcome {
        grid,
        refine_steps: refine,
        grid_best,
        refined,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffinityCertificate {
    pub pass: bool,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_abs_gap: f64,
    /// Scenario with the largest `|gap|`.
    pub worst: SignalingReport,
}

/// Run `samples` random scenarios through the full steering pipeline; pass
/// iff every `|gap| <= tol`.
pub fn affinity_certificate(
    rule: &ProbabilityRule,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<AffinityCertificate> {
    if samples == 0 {
        return Err(GptError::InvalidScenario("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenarios: Vec<Scenario> = (0..samples)
        .map(|_| {
            let p1 = rng.random::<f64>();
            let p2 = rng.random::<f64>();
            let lambda = rng.random::<f64>();
            Scenario::qubit(rule.clone(), p1, p2, lambda).with_seed(rng.random())
        })
        .collect();
    let gaps: Vec<f64> = scenarios
        .par_iter()
        .map(|s| run_scenario(s).map(|r| r.gap))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0;
    for (i, g) in gaps.iter().enumerate() {
        if g.abs() > gaps[worst].abs() {
            worst = i;
        }
    }
    let max_abs_gap = gaps[worst].abs();
    Ok(AffinityCertificate {
        pass: max_abs_gap <= tol,
        samples,
        tol,
        seed,
        max_abs_gap,
        worst: run_scenario(&scenarios[worst])?,
    })
}

/// Outcome counts from simulated repetitions of both protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionStats {
    pub runs: u64,
    pub seed: u64,
    pub hits_protocol1: u64,
    pub hits_protocol2: u64,
    /// `(hits1 - hits2) / runs`.
    pub estimated_gap: f64,
    pub analytic_gap: f64,
    /// `sqrt(P1 (1 - P1) / N + P2 (1 - P2) / N)`.
    pub sigma: f64,
    pub z_score: f64,
}

impl DetectionStats {
    pub fn within_sigmas(&self, k: f64) -> bool {
        (self.estimated_gap - self.analytic_gap).abs() <= k * self.sigma
    }
}

/// Simulate `runs` repetitions of each protocol, Bob accepting `phi` with
/// probability `P1` or `P2`.
pub fn simulate_detection(report: &SignalingReport, runs: u64, seed: u64) -> Result<DetectionStats> {
    if runs == 0 {
        return Err(GptError::InvalidScenario("need at least one run".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |p: f64, rng: &mut ChaCha8Rng| -> Result<u64> {
        Binomial::new(runs, p.clamp(0.0, 1.0))
            .map(|b| b.sample(rng))
            .map_err(|e| GptError::InvalidScenario(e.to_string()))
    };
    let hits1 = draw(report.prob_protocol1, &mut rng)?;
    let hits2 = draw(report.prob_protocol2, &mut rng)?;
    let n = runs as f64;
    let (a, b) = (report.prob_protocol1, report.prob_protocol2);
    let sigma = (a * (1.0 - a) / n + b * (1.0 - b) / n).sqrt();
    let estimated_gap = (hits1 as f64 - hits2 as f64) / n;
    Ok(DetectionStats {
        runs,
        seed,
        hits_protocol1: hits1,
        hits_protocol2: hits2,
        estimated_gap,
        analytic_gap: report.gap,
        sigma,
        z_score: if sigma > 0.0 { estimated_gap / sigma } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperRow {
    pub name: &'static str,
    /// Value as printed, to three decimals.
    pub quoted: f64,
    /// Closed-form value of the quoted expression.
    pub exact: f64,
    pub computed: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaperTable {
    pub rows: Vec<PaperRow>,
    pub pass: bool,
}

/// Recompute the worked qubit examples through the full pipeline.
///
/// A row passes when `|computed - exact| <= tol` and the computed value
/// agrees with the quoted figure within `1e-3`. `tol_override` replaces every
/// row's default tolerance.
pub fn reproduce_paper(tol_override: Option<f64>) -> Result<PaperTable> {
    let power = ProbabilityRule::power(1.5)?;
    let pq = ProbabilityRule::piecewise_quadratic();
    let ex1 = run_scenario(
        &Scenario::qubit(power, 1.0, 0.0, 0.5).with_mode(Protocol2Mode::SteeredUniform),
    )?;
    let sym = run_scenario(&Scenario::qubit(pq.clone(), 0.3, 0.7, 0.5))?;
    let asym = run_scenario(&Scenario::qubit(pq, 0.2, 0.4, 0.5))?;
    let half_pow = 0.5f64.powf(1.5);
    let spec: [(&'static str, f64, f64, f64, f64); 5] = [
        ("ex1.P1", 0.5, 0.5, ex1.prob_protocol1, 1e-3),
        ("ex1.P2", 0.354, half_pow, ex1.prob_protocol2, 1e-3),
        ("ex1.gap", 0.146, 0.5 - half_pow, ex1.gap, 1e-3),
        ("ex2.sym.gap", 0.0, 0.0, sym.gap, 1e-12),
        ("ex2.asym.gap", 0.02, 0.02, asym.gap, 1e-6),
    ];
    let rows: Vec<PaperRow> = spec
        .into_iter()
        .map(|(name, quoted, exact, computed, tol)| {
            let tol = tol_override.unwrap_or(tol);
            PaperRow {
                name,
                quoted,
                exact,
                computed,
                tol,
                pass: (computed - exact).abs() <= tol
                    && (computed - quoted).abs() <= QUOTED_VALUE_TOL,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(PaperTable { rows, pass })
}
