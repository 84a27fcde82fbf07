//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its PASS/FAIL line even when output capture is on.

use std::time::{Duration, Instant};

use gpt_steering::signaling::uniform_tau_decomposition;
use gpt_steering::steering::{computational_basis, hadamard_basis};
use gpt_steering::transition::great_circle_generators;
use gpt_steering::{
    affinity_certificate, distinguishing_measurement, mix, protocol_probability, purify,
    run_scenario, simulate_detection, steer, synthesize_steering_measurement, tau, tau_lp,
    verify_no_signaling_marginal, BipartiteState, Ensemble, Measurement, ProbabilityRule,
    Protocol, Scenario, Side, State, SystemModel,
};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

// criterion 1
const EX1_P2_TOL: f64 = 1e-6;
const EX1_GAP_TOL: f64 = 1e-6;
const EX1_TIME: Duration = Duration::from_secs(1);
// criterion 2
const EX2_ZERO_TOL: f64 = 1e-12;
const EX2_GAP_TOL: f64 = 1e-9;
const EX2_TIME: Duration = Duration::from_secs(1);
// criterion 3
const AFFINE_SAMPLES: usize = 10_000;
const AFFINE_TOL: f64 = 1e-10;
const AFFINE_TIME: Duration = Duration::from_secs(10);
// criterion 4
const SIGN_RULES: u32 = 100;
const SIGN_SCENARIOS_PER_RULE: usize = 10;
const SIGN_TIME: Duration = Duration::from_secs(30);
// criterion 5
const INVARIANT_PAIRS: usize = 1_000;
const INVARIANT_TOL: f64 = 1e-12;
// criterion 6
const ROUNDTRIP_CASES: usize = 100;
const ROUNDTRIP_TOL: f64 = 1e-9;
const MARGINAL_TOL: f64 = 1e-10;
// criterion 7
const LP_PAIRS: usize = 100;
const LP_GRID: usize = 720;
const LP_TOL: f64 = 5e-3;
const LP_CLASSICAL_TOL: f64 = 1e-12;
// criterion 8
const DETECT_RUNS: u64 = 10_000;
const DETECT_SIGMAS: f64 = 3.0;
const DETECT_TARGET: f64 = 0.146447;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Independent power-rule oracle.
fn power(alpha: f64) -> impl Fn(f64) -> f64 {
    move |p: f64| p.powf(alpha)
}

/// Independent piecewise-quadratic oracle.
fn pq(p: f64) -> f64 {
    if p <= 0.5 {
        2.0 * p * p
    } else {
        1.0 - 2.0 * (1.0 - p) * (1.0 - p)
    }
}

fn random_ket(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    let raw: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.into_iter().map(|z| z / norm).collect()
}

/// `|<a|b>|^2` straight from the kets.
fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

fn qubit() -> SystemModel {
    SystemModel::qubit()
}

fn c1_example_one() -> Outcome {
    let start = Instant::now();
    let rule = ProbabilityRule::power(1.5).unwrap();
    let bell = BipartiteState::maximally_entangled(2).unwrap();
    let phi = State::basis(qubit(), 0).unwrap();
    let z = Protocol::Measure(computational_basis(qubit()).unwrap());
    let x = Protocol::Measure(hadamard_basis());
    let p1 = protocol_probability(&rule, &bell, &z, &phi).unwrap();
    let p2 = protocol_probability(&rule, &bell, &x, &phi).unwrap();
    let elapsed = start.elapsed();
    let phi_oracle = power(1.5);
    let want_p1 = 0.5 * phi_oracle(1.0) + 0.5 * phi_oracle(0.0);
    let want_p2 = phi_oracle(overlap(
        &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        &[Complex64::new(0.5f64.sqrt(), 0.0), Complex64::new(0.5f64.sqrt(), 0.0)],
    ));
    let gap = p1 - p2;
    let pass = p1 == 0.5
        && want_p1 == 0.5
        && (p2 - want_p2).abs() <= EX1_P2_TOL
        && (p2 - 0.353553).abs() <= EX1_P2_TOL
        && (gap - 0.146447).abs() <= EX1_GAP_TOL
        && elapsed < EX1_TIME;
    outcome(
        pass,
        format!("P1 = {p1}, P2 = {p2:.9}, gap = {gap:.9}, {elapsed:?}"),
    )
}

fn c2_example_two() -> Outcome {
    let start = Instant::now();
    let rule = ProbabilityRule::piecewise_quadratic();
    let cases = [
        (0.3, 0.7, 0.5, EX2_ZERO_TOL),
        (1.0, 0.0, 0.5, EX2_ZERO_TOL),
        (0.2, 0.4, 0.5, EX2_GAP_TOL),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (p1, p2, l, tol) in cases {
        let report = run_scenario(&Scenario::qubit(rule.clone(), p1, p2, l)).unwrap();
        let oracle = l * pq(p1) + (1.0 - l) * pq(p2) - pq(l * p1 + (1.0 - l) * p2);
        pass &= (report.gap - oracle).abs() <= tol;
        detail.push(format!("gap({p1},{p2},{l}) = {:.3e}", report.gap));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < EX2_TIME;
    outcome(pass, format!("{}, {elapsed:?}", detail.join(", ")))
}

fn c3_affinity() -> Outcome {
    let start = Instant::now();
    let cert = affinity_certificate(&ProbabilityRule::identity(), AFFINE_SAMPLES, AFFINE_TOL, SEED).unwrap();
    let elapsed = start.elapsed();
    outcome(
        cert.pass && cert.samples == AFFINE_SAMPLES && elapsed < AFFINE_TIME,
        format!(
            "{} scenarios, max |gap| = {:.3e}, seed {}, {elapsed:?}",
            cert.samples, cert.max_abs_gap, cert.seed
        ),
    )
}

fn scenario_strategy() -> impl Strategy<Value = (f64, f64, f64, u64)> {
    (0.0..=1.0f64, 0.0..=1.0f64, 0.1..0.9f64, any::<u64>())
        .prop_filter("p1 != p2 and lambda inside (0.1, 0.9)", |(p1, p2, l, _)| {
            p1 != p2 && *l > 0.1
        })
}

fn sign_law(alpha_range: std::ops::Range<f64>, want_positive: bool) -> Result<(), String> {
    let config = Config {
        cases: SIGN_RULES,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config, rng);
    let strategy = (alpha_range, prop::collection::vec(scenario_strategy(), SIGN_SCENARIOS_PER_RULE));
    runner
        .run(&strategy, |(alpha, scenarios)| {
            let rule = ProbabilityRule::power(alpha).unwrap();
            for (p1, p2, l, seed) in scenarios {
                let report = run_scenario(&Scenario::qubit(rule.clone(), p1, p2, l).with_seed(seed)).unwrap();
                if want_positive {
                    prop_assert!(report.gap > 0.0, "alpha {alpha}: gap {} at ({p1},{p2},{l})", report.gap);
                } else {
                    prop_assert!(report.gap < 0.0, "alpha {alpha}: gap {} at ({p1},{p2},{l})", report.gap);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn c4_sign_law() -> Outcome {
    let start = Instant::now();
    let convex = sign_law(1.1..3.0, true);
    let concave = sign_law(0.3..0.9, false);
    let elapsed = start.elapsed();
    let pass = convex.is_ok() && concave.is_ok() && elapsed < SIGN_TIME;
    let mut detail = format!(
        "{SIGN_RULES} convex + {SIGN_RULES} concave rules x {SIGN_SCENARIOS_PER_RULE} scenarios, {elapsed:?}"
    );
    for err in [convex.err(), concave.err()].into_iter().flatten() {
        detail.push_str(&format!("; {err}"));
    }
    outcome(pass, detail)
}

fn c5_transition_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..INVARIANT_PAIRS {
        let psi = State::from_ket(qubit(), &random_ket(&mut rng, 2)).unwrap();
        let phi = State::from_ket(qubit(), &random_ket(&mut rng, 2)).unwrap();
        let perp = distinguishing_measurement(&phi).unwrap().phi_perp;
        worst = worst
            .max((tau(&phi, &phi).unwrap() - 1.0).abs())
            .max((tau(&psi, &phi).unwrap() + tau(&psi, &perp).unwrap() - 1.0).abs());
    }
    outcome(worst <= INVARIANT_TOL, format!("{INVARIANT_PAIRS} pairs, worst residual {worst:.3e}"))
}

fn c6_steering_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_member: f64 = 0.0;
    let mut worst_marginal: f64 = 0.0;
    for _ in 0..ROUNDTRIP_CASES {
        let k = rng.random_range(2..=3);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let members: Vec<(f64, State)> = raw
            .iter()
            .map(|w| (w / total, State::from_ket(qubit(), &random_ket(&mut rng, 2)).unwrap()))
            .collect();
        let target = Ensemble::new(members).unwrap();
        let omega = mix(&target).unwrap();
        let joint = purify(&omega, Some(k)).unwrap();
        let alice = synthesize_steering_measurement(&joint, &target).unwrap().measurement;
        let got = steer(&joint, &alice).unwrap();
        if got.len() != target.len() {
            return outcome(false, format!("steered into {} members, wanted {}", got.len(), target.len()));
        }
        for ((wa, sa), (wb, sb)) in target.members().iter().zip(got.members()) {
            let state_err = sa
                .density()
                .unwrap()
                .iter()
                .zip(sb.density().unwrap().iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            worst_member = worst_member.max((wa - wb).abs()).max(state_err);
        }
        let phi = State::from_ket(qubit(), &random_ket(&mut rng, 2)).unwrap();
        let uniform = uniform_tau_decomposition(&omega, &phi).unwrap();
        let protocols = [
            alice,
            Measurement::trivial(joint.model(Side::A)),
            computational_basis(joint.model(Side::A)).unwrap(),
            synthesize_steering_measurement(&joint, &uniform).unwrap().measurement,
        ];
        for (i, a) in protocols.iter().enumerate() {
            for b in &protocols[i + 1..] {
                worst_marginal = worst_marginal.max(verify_no_signaling_marginal(&joint, a, b).unwrap());
            }
        }
    }
    outcome(
        worst_member <= ROUNDTRIP_TOL && worst_marginal <= MARGINAL_TOL,
        format!(
            "{ROUNDTRIP_CASES} decompositions, worst member error {worst_member:.3e}, worst marginal residual {worst_marginal:.3e}"
        ),
    )
}

fn c7_lp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..LP_PAIRS {
        let a = random_ket(&mut rng, 2);
        let b = random_ket(&mut rng, 2);
        let psi = State::from_ket(qubit(), &a).unwrap();
        let phi = State::from_ket(qubit(), &b).unwrap();
        let gens = great_circle_generators(&psi, &phi, LP_GRID).unwrap();
        let lp = tau_lp(&psi, &phi, Some(&gens)).unwrap();
        worst = worst.max((lp.value - overlap(&a, &b)).abs());
    }
    let mut worst_classical: f64 = 0.0;
    for n in 2..=5 {
        let model = SystemModel::classical(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let psi = State::basis(model, i).unwrap();
                let phi = State::basis(model, j).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                worst_classical = worst_classical.max((tau_lp(&psi, &phi, None).unwrap().value - want).abs());
            }
        }
    }
    outcome(
        worst <= LP_TOL && worst_classical <= LP_CLASSICAL_TOL,
        format!(
            "{LP_PAIRS} qubit pairs on a {LP_GRID}-point grid, worst error {worst:.3e}; classical worst {worst_classical:.3e}"
        ),
    )
}

fn c8_detectability() -> Outcome {
    let rule = ProbabilityRule::power(1.5).unwrap();
    let report = run_scenario(&Scenario::qubit(rule, 1.0, 0.0, 0.5)).unwrap();
    let stats = simulate_detection(&report, DETECT_RUNS, SEED).unwrap();
    let deviation = (stats.estimated_gap - DETECT_TARGET).abs();
    outcome(
        deviation <= DETECT_SIGMAS * stats.sigma,
        format!(
            "N = {}, estimated gap {:.5}, sigma {:.5}, |dev| = {:.2} sigma, seed {}",
            stats.runs,
            stats.estimated_gap,
            stats.sigma,
            deviation / stats.sigma,
            stats.seed
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 example-1 reproduction", c1_example_one),
        ("2 example-2 reproduction", c2_example_two),
        ("3 affinity certificate", c3_affinity),
        ("4 convexity sign law", c4_sign_law),
        ("5 transition invariants", c5_transition_invariants),
        ("6 steering roundtrip", c6_steering_roundtrip),
        ("7 lp vs closed form", c7_lp_oracle),
        ("8 statistical detectability", c8_detectability),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("acceptance criterion {name}: {tag} ({})", result.detail);
        if !result.pass {
            failures += 1;
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
