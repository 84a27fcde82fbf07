use gpt_steering::signaling::{analytic_gap, sweep, uniform_tau_decomposition};
use gpt_steering::transition::great_circle_generators;
use gpt_steering::{
    check_constraints, distinguishing_measurement, evaluate, marginal, max_gap_search, mix,
    mixed_tau, predict_average, predict_ensemble, purify, state_with_tau, steer,
    synthesize_steering_measurement, tau, tau_lp, BipartiteState, Effect, Ensemble,
    ProbabilityRule, RuleSpec, Side, State, SystemModel,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn ket_strategy(d: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d)
        .prop_filter("non-zero", |v| v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
            v.into_iter().map(|(a, b)| Complex64::new(a / n, b / n)).collect()
        })
}

fn pure(d: usize) -> impl Strategy<Value = State> {
    ket_strategy(d).prop_map(move |k| State::from_ket(SystemModel::quantum(d).unwrap(), &k).unwrap())
}

/// Ensemble of `k` pure states with weights bounded away from zero.
fn ensemble(d: usize, k: usize) -> impl Strategy<Value = Ensemble> {
    (prop::collection::vec(0.05..1.0f64, k), prop::collection::vec(pure(d), k)).prop_map(|(w, s)| {
        let total: f64 = w.iter().sum();
        Ensemble::new(w.into_iter().map(|x| x / total).zip(s).collect()).unwrap()
    })
}

/// Random effect `0 <= E <= I` built as `U diag(t) U^dagger` from a random ket basis.
fn effect(d: usize) -> impl Strategy<Value = Effect> {
    (prop::collection::vec(0.0..=1.0f64, d), prop::collection::vec(ket_strategy(d), d)).prop_map(
        move |(t, kets)| {
            let mut basis: Vec<nalgebra::DVector<Complex64>> = Vec::new();
            for k in kets {
                let mut v = nalgebra::DVector::from_vec(k);
                for b in &basis {
                    let p = b.dotc(&v);
                    v -= b * p;
                }
                if v.norm() > 1e-6 {
                    let n = v.norm();
                    basis.push(v / Complex64::new(n, 0.0));
                }
            }
            let mut op = DMatrix::<Complex64>::zeros(d, d);
            for (b, ti) in basis.iter().zip(&t) {
                op += b * b.adjoint() * Complex64::new(*ti, 0.0);
            }
            Effect::from_operator(SystemModel::quantum(d).unwrap(), op).unwrap()
        },
    )
}

/// `|<a|b>|^2` from the kets.
fn overlap(a: &State, b: &State) -> f64 {
    a.ket().unwrap().dotc(&b.ket().unwrap()).norm_sqr()
}

fn pq(p: f64) -> f64 {
    if p <= 0.5 {
        2.0 * p * p
    } else {
        1.0 - 2.0 * (1.0 - p) * (1.0 - p)
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn evaluation_is_affine_in_the_state(e in effect(3), ens in ensemble(3, 3)) {
        let mixed = mix(&ens).unwrap();
        let direct = evaluate(&e, &mixed).unwrap();
        let averaged: f64 = ens.members().iter().map(|(w, s)| w * evaluate(&e, s).unwrap()).sum();
        prop_assert!((direct - averaged).abs() < 1e-12);
    }

    #[test]
    fn evaluation_is_additive_in_the_effect(e in effect(2), s in pure(2)) {
        let complement = e.complement();
        let total = evaluate(&e, &s).unwrap() + evaluate(&complement, &s).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((evaluate(&Effect::unit(s.model()), &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transition_invariants_beyond_qubits(d in 2usize..=5, seed in any::<u64>()) {
        let model = SystemModel::quantum(d).unwrap();
        let phi = state_with_tau(&State::basis(model, 0).unwrap(), 0.37, seed).unwrap();
        let psi = state_with_tau(&State::basis(model, d - 1).unwrap(), 0.81, seed ^ 1).unwrap();
        let pair = distinguishing_measurement(&phi).unwrap();
        prop_assert!((tau(&phi, &phi).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((tau(&psi, &phi).unwrap() - overlap(&psi, &phi)).abs() < 1e-12);
        let pair_sum = tau(&psi, &phi).unwrap() + tau(&psi, &pair.phi_perp).unwrap();
        if d == 2 {
            prop_assert!((pair_sum - 1.0).abs() < 1e-12);
        } else {
            // the pair only spans a two-level slice of the space
            prop_assert!(pair_sum <= 1.0 + 1e-12);
        }
        prop_assert!((tau(&psi, &phi).unwrap() - tau(&phi, &psi).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn state_with_tau_round_trip(d in 2usize..=4, p in 0.0..=1.0f64, seed in any::<u64>(), phi in pure(4)) {
        let phi = if d == 4 { phi } else { State::basis(SystemModel::quantum(d).unwrap(), 0).unwrap() };
        let psi = state_with_tau(&phi, p, seed).unwrap();
        prop_assert!(psi.is_pure());
        prop_assert!((overlap(&psi, &phi) - p).abs() < 1e-12);
        prop_assert_eq!(psi.clone(), state_with_tau(&phi, p, seed).unwrap());
    }

    #[test]
    fn born_rule_cannot_tell_ensembles_from_averages(ens in ensemble(2, 3), phi in pure(2)) {
        let rule = ProbabilityRule::identity();
        let a = predict_ensemble(&rule, &ens, &phi).unwrap();
        let b = predict_average(&rule, &mix(&ens).unwrap(), &phi).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn jensen_sign_within_a_convexity_regime(p1 in 0.0..=0.5f64, p2 in 0.0..=0.5f64, l in 0.0..=1.0f64) {
        let rule = ProbabilityRule::piecewise_quadratic();
        let low = analytic_gap(&rule, p1, p2, l).unwrap();
        let high = analytic_gap(&rule, 1.0 - p1, 1.0 - p2, l).unwrap();
        let oracle = l * pq(p1) + (1.0 - l) * pq(p2) - pq(l * p1 + (1.0 - l) * p2);
        prop_assert!(low >= -1e-15);
        prop_assert!(high <= 1e-15);
        prop_assert!((low - oracle).abs() < 1e-14);
        prop_assert!((low + high).abs() < 1e-14);
    }

    #[test]
    fn steering_preserves_the_marginal(ens in ensemble(3, 3)) {
        let omega = mix(&ens).unwrap();
        let joint = purify(&omega, Some(3)).unwrap();
        let rho_b = marginal(&joint, Side::B).unwrap();
        prop_assert!(rho_b.distance(&omega).unwrap() < 1e-12);
        let alice = synthesize_steering_measurement(&joint, &ens).unwrap().measurement;
        let got = steer(&joint, &alice).unwrap();
        prop_assert!(mix(&got).unwrap().distance(&omega).unwrap() < 1e-10);
        for ((wa, sa), (wb, sb)) in ens.members().iter().zip(got.members()) {
            prop_assert!((wa - wb).abs() < 1e-9);
            prop_assert!(sa.distance(sb).unwrap() < 1e-9);
        }
    }

    #[test]
    fn uniform_decomposition_members_share_tau(ens in ensemble(2, 2), phi in pure(2)) {
        let omega = mix(&ens).unwrap();
        let uniform = uniform_tau_decomposition(&omega, &phi).unwrap();
        prop_assert!(mix(&uniform).unwrap().distance(&omega).unwrap() < 1e-12);
        let want = mixed_tau(&omega, &phi).unwrap();
        for (_, s) in uniform.members() {
            prop_assert!(s.is_pure());
            prop_assert!((mixed_tau(s, &phi).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact(s in pure(3), e in effect(2), amps in ket_strategy(6), w in 0.0..=1.0f64) {
        let rho = s.density().unwrap() * Complex64::new(w, 0.0)
            + DMatrix::<Complex64>::identity(3, 3) * Complex64::new((1.0 - w) / 3.0, 0.0);
        let mixed = State::from_density(s.model(), rho).unwrap();
        for state in [s, mixed] {
            let back: State = serde_json::from_str(&serde_json::to_string(&state).unwrap()).unwrap();
            prop_assert_eq!(back.density().unwrap(), state.density().unwrap());
        }
        let back: Effect = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        prop_assert_eq!(back.operator().unwrap(), e.operator().unwrap());
        let joint = BipartiteState::from_amplitudes(
            SystemModel::quantum(2).unwrap(),
            SystemModel::quantum(3).unwrap(),
            amps,
        ).unwrap();
        let back: BipartiteState = serde_json::from_str(&serde_json::to_string(&joint).unwrap()).unwrap();
        prop_assert_eq!(back, joint);
        let probs = State::from_probabilities(SystemModel::classical(3).unwrap(), vec![w / 3.0, 2.0 * w / 3.0, 1.0 - w]).unwrap();
        let back: State = serde_json::from_str(&serde_json::to_string(&probs).unwrap()).unwrap();
        prop_assert_eq!(back, probs);
    }

    #[test]
    fn rule_json_round_trip(alpha in 0.01..10.0f64) {
        let rule = ProbabilityRule::power(alpha).unwrap();
        let text = serde_json::to_string(&rule).unwrap();
        let back: ProbabilityRule = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, rule);
    }
}

#[test]
fn lp_error_shrinks_with_the_grid() {
    let q = SystemModel::qubit();
    let phi = State::basis(q, 0).unwrap();
    let psi = State::from_bloch([0.6, 0.0, 0.8]).unwrap();
    let closed = tau(&psi, &phi).unwrap();
    let err = |n: usize| {
        let gens = great_circle_generators(&psi, &phi, n).unwrap();
        (tau_lp(&psi, &phi, Some(&gens)).unwrap().value - closed).abs()
    };
    let errors: Vec<f64> = [90, 180, 360, 720].into_iter().map(err).collect();
    for pair in errors.windows(2) {
        assert!(pair[1] < pair[0], "{errors:?}");
    }
    // the relaxed effect polytope admits a tilt of order of the spacing at phi
    let ratio = errors[2] / errors[3];
    assert!((ratio - 2.0).abs() < 0.2, "{errors:?}");
    assert!(errors[3] < 5e-3);
}

#[test]
fn constraint_audit_of_known_rules() {
    assert!(check_constraints(&ProbabilityRule::identity(), 1001, 1e-8).pass);
    assert!(check_constraints(&ProbabilityRule::piecewise_quadratic(), 1001, 1e-8).pass);
    let linear_table = ProbabilityRule::tabulated(vec![[0.0, 0.0], [0.25, 0.25], [1.0, 1.0]]).unwrap();
    assert!(check_constraints(&linear_table, 1001, 1e-8).pass);
    let report = check_constraints(&ProbabilityRule::power(1.5).unwrap(), 1001, 1e-8);
    assert!(!report.pass);
    assert!(report.boundary.pass && report.monotonicity.pass);
    assert!(!report.normalization.pass && !report.midpoint.pass);
}

#[test]
fn rule_files_reject_unknown_fields() {
    assert!(serde_json::from_str::<RuleSpec>(r#"{"family":"power","beta":2}"#).is_err());
    assert!(serde_json::from_str::<ProbabilityRule>(r#"{"family":"power","alpha":-1}"#).is_err());
    let spec: RuleSpec = serde_json::from_str(r#"{"family":"piecewise-quadratic"}"#).unwrap();
    assert_eq!(spec, RuleSpec::PiecewiseQuadratic);
}

/// Brute-force maximum of `|gap|` on an `n^3` lattice.
fn brute_force(phi: impl Fn(f64) -> f64, n: usize) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (p1, p2, l) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64, k as f64 / (n - 1) as f64);
                best = best.max((l * phi(p1) + (1.0 - l) * phi(p2) - phi(l * p1 + (1.0 - l) * p2)).abs());
            }
        }
    }
    best
}

#[test]
fn gap_search_matches_oracles() {
    let identity = max_gap_search(&ProbabilityRule::identity(), 51, 40, 0).unwrap();
    assert!(identity.refined.gap.abs() <= 1e-12);
    assert!(identity.report.gap.abs() <= 1e-12);

    let power = max_gap_search(&ProbabilityRule::power(1.5).unwrap(), 101, 40, 0).unwrap();
    let brute = brute_force(|p| p.powf(1.5), 201);
    assert!(power.refined.gap.abs() >= 0.146);
    assert!(power.refined.gap.abs() >= brute - 1e-9);
    assert!((power.refined.gap.abs() - 4.0 / 27.0).abs() < 1e-9);

    let quad = max_gap_search(&ProbabilityRule::piecewise_quadratic(), 101, 40, 0).unwrap();
    let brute = brute_force(pq, 201);
    let w = quad.refined;
    assert!(w.gap.abs() >= brute - 1e-9);
    assert!((w.gap.abs() - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-9);
    let (lo, hi) = (w.p1.min(w.p2), w.p1.max(w.p2));
    assert!(lo < 0.5 && hi > 0.5, "witness straddles the inflection: {w:?}");
    assert!((quad.report.gap - w.gap).abs() < 1e-12);
}

#[test]
fn sweep_rows_follow_the_closed_form() {
    let rule = ProbabilityRule::piecewise_quadratic();
    for row in sweep(&rule, 11, false).unwrap() {
        let want = row.lambda * pq(row.p1) + (1.0 - row.lambda) * pq(row.p2)
            - pq(row.lambda * row.p1 + (1.0 - row.lambda) * row.p2);
        assert!((row.gap - want).abs() < 1e-15);
    }
}
