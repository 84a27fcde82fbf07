//! Purification and remote steering of quantum states.
//!
//! A measurement `{a_i}` on side `A` of a pure joint state leaves side `B` in
//! the subnormalized conditional states `Tr_A[(a_i (x) 1) Psi]`. Given any
//! pure-state decomposition of the `B` marginal, [`synthesize_steering_measurement`]
//! builds the rank-1 projective measurement on `A` that produces it.

use crate::error::{GptError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::model::{SystemModel, EIGEN_TOL};
use crate::state::{
    marginal, mix, BipartiteState, Effect, Ensemble, Measurement, Repr, Side, State,
    NEGLIGIBLE_WEIGHT,
};

/// Eigenvalues of the marginal above this count towards its support.
const SUPPORT_TOL: f64 = 1e-12;
/// Allowed gap between the target's average and the actual marginal.
const MARGINAL_MATCH_TOL: f64 = 1e-9;

/// A measurement on `A` together with the ensemble it steers `B` into.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMeasurement {
    pub measurement: Measurement,
    pub target: Ensemble,
    pub joint: BipartiteState,
}

fn require_quantum(model: SystemModel, what: &str) -> Result<usize> {
    match model {
        SystemModel::Quantum { d } => Ok(d),
        SystemModel::Classical { .. } => Err(GptError::UnsupportedModel(format!(
            "{what}: classical theory has no purification"
        ))),
    }
}

/// Purify `omega` into a pure joint state whose `B` marginal is `omega`.
///
/// The purifying system `A` has dimension `max(rank(omega), 2)` unless a
/// larger `purifier_dim` is requested:
/// `Psi = sum_k sqrt(p_k) |k>_A |v_k>_B` over the eigenpairs of `omega` in
/// descending order.
pub fn purify(omega: &State, purifier_dim: Option<usize>) -> Result<BipartiteState> {
    let db = require_quantum(omega.model(), "purify")?;
    let rho = omega.density().expect("quantum state");
    let (values, vectors) = linalg::eigh(rho);
    let support: Vec<(f64, &CVec)> = values
        .iter()
        .zip(&vectors)
        .filter(|(p, _)| **p > SUPPORT_TOL)
        .map(|(p, v)| (*p, v))
        .collect();
    let rank = support.len();
    let minimal = rank.max(2);
    let da = match purifier_dim {
        Some(d) if d < rank => {
            return Err(GptError::RankDeficit {
                required: rank,
                available: d,
            })
        }
        Some(d) => d.max(2),
        None => minimal,
    };
    let total: f64 = support.iter().map(|(p, _)| p).sum();
    let mut amps = vec![c(0.0); da * db];
    for (k, (p, v)) in support.iter().enumerate() {
        let w = (p / total).sqrt();
        for j in 0..db {
            amps[k * db + j] = v[j] * c(w);
        }
    }
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= c(norm));
    BipartiteState::from_amplitudes(SystemModel::quantum(da)?, omega.model(), amps)
}

/// Conditional ensemble on `B` after measuring `alice` on `A`.
///
/// Outcomes with probability below `1e-14` are dropped; the remaining weights
/// are renormalized. Members are mixed when an effect is not rank-1.
pub fn steer(joint: &BipartiteState, alice: &Measurement) -> Result<Ensemble> {
    joint.model(Side::A).ensure_same(&alice.model())?;
    require_quantum(joint.model(Side::B), "steer")?;
    let m = joint
        .amplitude_matrix()
        .ok_or_else(|| GptError::UnsupportedModel("steering needs an entangled quantum state".into()))?;
    let m_conj = m.conjugate();
    let m_t = m.transpose();
    let mut outcomes: Vec<(f64, CMat)> = Vec::with_capacity(alice.len());
    for effect in alice.effects() {
        let e = effect.operator().expect("quantum effect");
        let sigma = &m_t * e.transpose() * &m_conj;
        let weight = sigma.trace().re;
        if weight >= NEGLIGIBLE_WEIGHT {
            outcomes.push((weight, sigma));
        }
    }
    let total: f64 = outcomes.iter().map(|(w, _)| w).sum();
    let members = outcomes
        .into_iter()
        .map(|(w, sigma)| {
            State::from_unnormalized(joint.model(Side::B), Repr::Operator(sigma)).map(|s| (w / total, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::with_members(members)
}

/// Build the `A`-side measurement that steers `B` into `target`.
///
/// With the Schmidt form `Psi = sum_k sqrt(p_k) |alpha_k> |v_k>`, outcome `i`
/// uses the `A` vector `m_i = sum_k conj(c_ik) |alpha_k>` where
/// `c_ik = sqrt(lambda_i) <v_k|psi_i> / sqrt(p_k)`. The `m_i` resolve the
/// projector onto the `A` support; they are lifted to an orthonormal set by
/// adding components from the orthogonal complement, which needs
/// `dim A >= |target|`. Any leftover `u - sum a_i` is appended as a final
/// effect that annihilates the support.
pub fn synthesize_steering_measurement(
    joint: &BipartiteState,
    target: &Ensemble,
) -> Result<SteeringMeasurement> {
    let da = require_quantum(joint.model(Side::A), "synthesize")?;
    require_quantum(joint.model(Side::B), "synthesize")?;
    joint.model(Side::B).ensure_same(&target.model())?;
    if !target.is_pure_decomposition() {
        return Err(GptError::InvalidEnsemble("target members must be pure".into()));
    }
    let rho_b = marginal(joint, Side::B)?;
    let average = mix(target)?;
    let mismatch = linalg::max_abs_diff(
        rho_b.density().expect("quantum"),
        average.density().expect("quantum"),
    );
    if mismatch > MARGINAL_MATCH_TOL {
        return Err(GptError::MarginalMismatch(mismatch));
    }
    let count = target.len();
    if count > da {
        return Err(GptError::RankDeficit {
            required: count,
            available: da,
        });
    }

    // Schmidt vectors on A from the eigenvectors of the B marginal
    let m = joint.amplitude_matrix().expect("quantum joint state");
    let (values, vectors) = linalg::eigh(rho_b.density().expect("quantum"));
    let mut schmidt: Vec<(f64, CVec, CVec)> = Vec::new();
    for (p, v) in values.iter().zip(&vectors) {
        if *p > SUPPORT_TOL {
            let alpha = &m * v.conjugate() / c(p.sqrt());
            schmidt.push((*p, v.clone(), alpha));
        }
    }

    let mut lifted: Vec<CVec> = Vec::with_capacity(count);
    for (lambda, psi) in target.members() {
        let ket = psi.ket()?;
        let mut mi = CVec::zeros(da);
        for (p, v, alpha) in &schmidt {
            let cik = c(lambda.sqrt()) * v.dotc(&ket) / c(p.sqrt());
            mi += alpha * cik.conj();
        }
        lifted.push(mi);
    }

    // Gram matrix G is a projector of rank |support|; I - G = X^dagger X
    // supplies the complement components.
    let gram = CMat::from_fn(count, count, |i, j| lifted[i].dotc(&lifted[j]));
    let defect = CMat::identity(count, count) - gram;
    let (defect_vals, defect_vecs) = linalg::eigh(&defect);
    let mut alphas: Vec<CVec> = Vec::with_capacity(schmidt.len());
    for (_, _, a) in &schmidt {
        if let Some(w) = linalg::orthonormalize_against(a, &alphas, 0.5) {
            alphas.push(w);
        }
    }
    let outside = linalg::complement_basis(&alphas, da);
    let mut q = 0;
    for (val, x) in defect_vals.iter().zip(&defect_vecs) {
        if *val <= 0.5 {
            continue;
        }
        let beta = outside.get(q).ok_or(GptError::RankDeficit {
            required: count,
            available: da,
        })?;
        for (i, mi) in lifted.iter_mut().enumerate() {
            *mi += beta * x[i].conj();
        }
        q += 1;
    }
    // the lift is orthonormal up to rounding amplified by 1 / sqrt(p_k); restore it
    let mut ortho: Vec<CVec> = Vec::with_capacity(count);
    for v in &lifted {
        let w = linalg::orthonormalize_against(v, &ortho, 0.5).ok_or(GptError::RankDeficit {
            required: count,
            available: da,
        })?;
        ortho.push(w);
    }

    let mut effects = ortho
        .iter()
        .map(|w| Effect::from_operator(joint.model(Side::A), linalg::outer(w)))
        .collect::<Result<Vec<_>>>()?;
    let covered = effects
        .iter()
        .fold(CMat::zeros(da, da), |acc, e| acc + e.operator().expect("quantum"));
    let rest = CMat::identity(da, da) - covered;
    if rest.iter().any(|z| z.norm() > EIGEN_TOL) {
        effects.push(Effect::from_operator(joint.model(Side::A), rest)?);
    }
    let measurement = Measurement::new(effects)?;
    Ok(SteeringMeasurement {
        measurement,
        target: target.clone(),
        joint: joint.clone(),
    })
}

/// Max-abs difference between the `B` average states produced by two
/// measurements on `A`.
pub fn verify_no_signaling_marginal(
    joint: &BipartiteState,
    first: &Measurement,
    second: &Measurement,
) -> Result<f64> {
    let a = mix(&steer(joint, first)?)?;
    let b = mix(&steer(joint, second)?)?;
    a.distance(&b)
}

/// Projective measurement in the computational basis.
pub fn computational_basis(model: SystemModel) -> Result<Measurement> {
    let d = require_quantum(model, "basis measurement")?;
    let kets: Vec<CVec> = (0..d)
        .map(|i| {
            let mut v = CVec::zeros(d);
            v[i] = c(1.0);
            v
        })
        .collect();
    Measurement::from_basis(model, &kets)
}

/// Qubit measurement in the `{|+>, |->}` basis.
pub fn hadamard_basis() -> Measurement {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let kets = [
        CVec::from_vec(vec![c(h), c(h)]),
        CVec::from_vec(vec![c(h), c(-h)]),
    ];
    Measurement::from_basis(SystemModel::qubit(), &kets).expect("orthonormal basis")
}
