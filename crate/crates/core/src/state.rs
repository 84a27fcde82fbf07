//! States, effects, measurements, ensembles and bipartite pure states.
//!
//! Quantum elements are stored as Hermitian matrices; [`State::coeffs`] and
//! [`Effect::coeffs`] give the real coefficient view in the orthonormal
//! Hermitian basis, where the state/effect pairing is the dot product.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{GptError, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::model::{self, SystemModel, EIGEN_TOL, LINEAR_TOL};

/// Negative eigenvalues above this magnitude (but within [`EIGEN_TOL`]) are
/// clipped; smaller ones are rounding noise and left untouched.
const CLIP_FLOOR: f64 = 1e-12;

/// Outcomes with smaller probability are dropped from steered ensembles.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Repr {
    /// Hermitian matrix (density operator or effect operator).
    Operator(CMat),
    /// Real vector (probability vector or classical covector).
    Vector(DVector<f64>),
}

/// A normalized element of the state cone.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    model: SystemModel,
    repr: Repr,
    pure: bool,
}

impl State {
    /// Build a state from its coefficient vector, checking normalization and
    /// cone membership.
    pub fn from_coeffs(model: SystemModel, coeffs: &[f64]) -> Result<State> {
        model.check_len(coeffs.len())?;
        match model {
            SystemModel::Quantum { d } => {
                let u: f64 = model
                    .order_unit()
                    .iter()
                    .zip(coeffs)
                    .map(|(a, b)| a * b)
                    .sum();
                if (u - 1.0).abs() > LINEAR_TOL {
                    return Err(GptError::NotNormalized(u));
                }
                State::from_density(model, model::coeffs_to_hermitian(d, coeffs))
            }
            SystemModel::Classical { .. } => State::from_probabilities(model, coeffs.to_vec()),
        }
    }

    /// Build a quantum state from a density matrix.
    pub fn from_density(model: SystemModel, rho: CMat) -> Result<State> {
        let d = match model {
            SystemModel::Quantum { d } => d,
            SystemModel::Classical { .. } => {
                return Err(GptError::UnsupportedModel(
                    "density matrices require a quantum model".into(),
                ))
            }
        };
        if rho.nrows() != d || rho.ncols() != d {
            return Err(GptError::DimensionMismatch {
                model,
                expected: d * d,
                got: rho.nrows() * rho.ncols(),
            });
        }
        let defect = linalg::hermitian_defect(&rho);
        if defect > LINEAR_TOL {
            return Err(GptError::NotHermitian(defect));
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > LINEAR_TOL {
            return Err(GptError::NotNormalized(trace));
        }
        State::settle_density(model, rho)
    }

    /// Build a classical state from a probability vector.
    pub fn from_probabilities(model: SystemModel, probs: Vec<f64>) -> Result<State> {
        if model.is_quantum() {
            return Err(GptError::UnsupportedModel(
                "probability vectors require a classical model".into(),
            ));
        }
        model.check_len(probs.len())?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > LINEAR_TOL {
            return Err(GptError::NotNormalized(total));
        }
        State::settle_probabilities(model, probs)
    }

    /// Pure quantum state `|v><v|` from a (not necessarily normalized) ket.
    pub fn from_ket(model: SystemModel, ket: &[Complex64]) -> Result<State> {
        let d = match model {
            SystemModel::Quantum { d } => d,
            SystemModel::Classical { .. } => {
                return Err(GptError::UnsupportedModel("kets require a quantum model".into()))
            }
        };
        if ket.len() != d {
            return Err(GptError::DimensionMismatch {
                model,
                expected: d,
                got: ket.len(),
            });
        }
        let v = CVec::from_column_slice(ket);
        let norm = v.norm();
        if norm <= 1e-300 || !norm.is_finite() {
            return Err(GptError::NotNormalized(norm));
        }
        let v = v / c(norm);
        Ok(State {
            model,
            repr: Repr::Operator(linalg::outer(&v)),
            pure: true,
        })
    }

    /// Computational basis state `|i>` or the `i`-th deterministic point.
    pub fn basis(model: SystemModel, i: usize) -> Result<State> {
        let n = model.level_count();
        if i >= n {
            return Err(GptError::InvalidModel(format!(
                "basis index {i} out of range for {model}"
            )));
        }
        match model {
            SystemModel::Quantum { d } => {
                let mut rho = CMat::zeros(d, d);
                rho[(i, i)] = c(1.0);
                Ok(State {
                    model,
                    repr: Repr::Operator(rho),
                    pure: true,
                })
            }
            SystemModel::Classical { n } => {
                let mut p = DVector::zeros(n);
                p[i] = 1.0;
                Ok(State {
                    model,
                    repr: Repr::Vector(p),
                    pure: true,
                })
            }
        }
    }

    pub fn maximally_mixed(model: SystemModel) -> State {
        let n = model.level_count();
        let w = 1.0 / n as f64;
        let repr = match model {
            SystemModel::Quantum { d } => Repr::Operator(CMat::from_diagonal_element(d, d, c(w))),
            SystemModel::Classical { n } => Repr::Vector(DVector::from_element(n, w)),
        };
        State {
            model,
            repr,
            pure: false,
        }
    }

    /// Qubit state with Bloch vector `r`, `|r| <= 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<State> {
        let [x, y, z] = r;
        let rho = CMat::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + z)),
                Complex64::new(0.5 * x, -0.5 * y),
                Complex64::new(0.5 * x, 0.5 * y),
                c(0.5 * (1.0 - z)),
            ],
        );
        State::from_density(SystemModel::qubit(), rho)
    }

    /// Normalize an unnormalized positive operator or vector produced by an
    /// internal computation (mixing, partial trace, steering).
    pub(crate) fn from_unnormalized(model: SystemModel, repr: Repr) -> Result<State> {
        match repr {
            Repr::Operator(m) => {
                let trace = m.trace().re;
                if trace <= 0.0 || !trace.is_finite() {
                    return Err(GptError::NotNormalized(trace));
                }
                let m = (&m + m.adjoint()) * c(0.5 / trace);
                State::settle_density(model, m)
            }
            Repr::Vector(v) => {
                let total: f64 = v.iter().sum();
                if total <= 0.0 || !total.is_finite() {
                    return Err(GptError::NotNormalized(total));
                }
                State::settle_probabilities(model, (v / total).data.into())
            }
        }
    }

    fn settle_density(model: SystemModel, rho: CMat) -> Result<State> {
        let (values, vectors) = linalg::eigh(&rho);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -EIGEN_TOL {
            return Err(GptError::OutsideCone(min));
        }
        let rho = if min < -CLIP_FLOOR {
            let clipped = values
                .iter()
                .zip(&vectors)
                .fold(CMat::zeros(rho.nrows(), rho.ncols()), |acc, (l, v)| {
                    acc + linalg::outer(v) * c(l.max(0.0))
                });
            let t = clipped.trace().re;
            clipped / c(t)
        } else {
            rho
        };
        let purity = rho.iter().map(|z| z.norm_sqr()).sum::<f64>();
        Ok(State {
            model,
            pure: (purity - 1.0).abs() <= EIGEN_TOL,
            repr: Repr::Operator(rho),
        })
    }

    fn settle_probabilities(model: SystemModel, mut probs: Vec<f64>) -> Result<State> {
        let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -EIGEN_TOL || probs.iter().any(|p| !p.is_finite()) {
            return Err(GptError::OutsideCone(min));
        }
        if min < 0.0 {
            probs.iter_mut().for_each(|p| *p = p.max(0.0));
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
        }
        let pure = probs.iter().any(|p| (p - 1.0).abs() <= EIGEN_TOL);
        Ok(State {
            model,
            repr: Repr::Vector(DVector::from_vec(probs)),
            pure,
        })
    }

    pub fn model(&self) -> SystemModel {
        self.model
    }

    pub fn is_pure(&self) -> bool {
        self.pure
    }

    pub(crate) fn repr(&self) -> &Repr {
        &self.repr
    }

    /// Coefficients in the ambient real space.
    pub fn coeffs(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Operator(m) => model::hermitian_to_coeffs(m),
            Repr::Vector(v) => v.iter().copied().collect(),
        }
    }

    pub fn density(&self) -> Option<&CMat> {
        match &self.repr {
            Repr::Operator(m) => Some(m),
            Repr::Vector(_) => None,
        }
    }

    pub fn probabilities(&self) -> Option<&DVector<f64>> {
        match &self.repr {
            Repr::Vector(v) => Some(v),
            Repr::Operator(_) => None,
        }
    }

    /// `Tr(rho^2)` for quantum states, `sum p_i^2` for classical ones.
    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Operator(m) => m.iter().map(|z| z.norm_sqr()).sum(),
            Repr::Vector(v) => v.iter().map(|p| p * p).sum(),
        }
    }

    /// Unit vector of a pure quantum state, phase-fixed (first non-negligible
    /// component real positive).
    pub fn ket(&self) -> Result<CVec> {
        if !self.pure {
            return Err(GptError::NotPure);
        }
        match &self.repr {
            Repr::Operator(m) => {
                let (_, vectors) = linalg::eigh(m);
                Ok(vectors.into_iter().next().expect("nonempty spectrum"))
            }
            Repr::Vector(_) => Err(GptError::UnsupportedModel(
                "classical states have no ket".into(),
            )),
        }
    }

    /// Index of the deterministic point of a pure classical state.
    pub fn vertex(&self) -> Result<usize> {
        if !self.pure {
            return Err(GptError::NotPure);
        }
        match &self.repr {
            Repr::Vector(v) => Ok(v.argmax().0),
            Repr::Operator(_) => Err(GptError::UnsupportedModel(
                "quantum states have no vertex index".into(),
            )),
        }
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Result<[f64; 3]> {
        match (&self.model, &self.repr) {
            (SystemModel::Quantum { d: 2 }, Repr::Operator(m)) => Ok([
                2.0 * m[(1, 0)].re,
                2.0 * m[(1, 0)].im,
                (m[(0, 0)] - m[(1, 1)]).re,
            ]),
            _ => Err(GptError::UnsupportedModel("Bloch vectors need a qubit".into())),
        }
    }

    /// Max-abs distance between the coefficient vectors of two states.
    pub fn distance(&self, other: &State) -> Result<f64> {
        self.model.ensure_same(&other.model)?;
        Ok(self
            .coeffs()
            .iter()
            .zip(other.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// A positive functional bounded by the order unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    model: SystemModel,
    repr: Repr,
}

impl Effect {
    /// Quantum effect from a Hermitian operator with `0 <= E <= I`.
    pub fn from_operator(model: SystemModel, op: CMat) -> Result<Effect> {
        let d = match model {
            SystemModel::Quantum { d } => d,
            SystemModel::Classical { .. } => {
                return Err(GptError::UnsupportedModel(
                    "effect operators require a quantum model".into(),
                ))
            }
        };
        if op.nrows() != d || op.ncols() != d {
            return Err(GptError::DimensionMismatch {
                model,
                expected: d * d,
                got: op.nrows() * op.ncols(),
            });
        }
        let defect = linalg::hermitian_defect(&op);
        if defect > LINEAR_TOL {
            return Err(GptError::NotHermitian(defect));
        }
        let (values, _) = linalg::eigh(&op);
        let hi = values[0];
        let lo = values[values.len() - 1];
        if lo < -EIGEN_TOL || hi > 1.0 + EIGEN_TOL {
            return Err(GptError::InvalidEffect(format!(
                "spectrum [{lo}, {hi}] not inside [0, 1]"
            )));
        }
        Ok(Effect {
            model,
            repr: Repr::Operator(op),
        })
    }

    /// Classical effect from its values on the deterministic points.
    pub fn from_covector(model: SystemModel, values: Vec<f64>) -> Result<Effect> {
        if model.is_quantum() {
            return Err(GptError::UnsupportedModel(
                "covectors require a classical model; use from_coeffs".into(),
            ));
        }
        model.check_len(values.len())?;
        if let Some(bad) = values
            .iter()
            .find(|v| !(-EIGEN_TOL..=1.0 + EIGEN_TOL).contains(*v))
        {
            return Err(GptError::InvalidEffect(format!(
                "value {bad} on a vertex not inside [0, 1]"
            )));
        }
        Ok(Effect {
            model,
            repr: Repr::Vector(DVector::from_vec(values)),
        })
    }

    /// Effect from its covector in the coefficient view.
    pub fn from_coeffs(model: SystemModel, coeffs: &[f64]) -> Result<Effect> {
        model.check_len(coeffs.len())?;
        match model {
            SystemModel::Quantum { d } => {
                Effect::from_operator(model, model::coeffs_to_hermitian(d, coeffs))
            }
            SystemModel::Classical { .. } => Effect::from_covector(model, coeffs.to_vec()),
        }
    }

    /// The order unit `u`.
    pub fn unit(model: SystemModel) -> Effect {
        let repr = match model {
            SystemModel::Quantum { d } => Repr::Operator(CMat::identity(d, d)),
            SystemModel::Classical { n } => Repr::Vector(DVector::from_element(n, 1.0)),
        };
        Effect { model, repr }
    }

    /// The effect that accepts the pure state `phi` with certainty:
    /// the rank-1 projector, or the vertex indicator.
    pub fn projector(phi: &State) -> Result<Effect> {
        if !phi.is_pure() {
            return Err(GptError::NotPure);
        }
        let repr = match phi.repr() {
            Repr::Operator(m) => Repr::Operator(m.clone()),
            Repr::Vector(_) => {
                let mut v = DVector::zeros(phi.model().level_count());
                v[phi.vertex()?] = 1.0;
                Repr::Vector(v)
            }
        };
        Ok(Effect {
            model: phi.model(),
            repr,
        })
    }

    /// `u - e`.
    pub fn complement(&self) -> Effect {
        let repr = match &self.repr {
            Repr::Operator(m) => Repr::Operator(CMat::identity(m.nrows(), m.ncols()) - m),
            Repr::Vector(v) => Repr::Vector(v.map(|x| 1.0 - x)),
        };
        Effect {
            model: self.model,
            repr,
        }
    }

    pub fn model(&self) -> SystemModel {
        self.model
    }

    pub fn operator(&self) -> Option<&CMat> {
        match &self.repr {
            Repr::Operator(m) => Some(m),
            Repr::Vector(_) => None,
        }
    }

    pub(crate) fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn coeffs(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Operator(m) => model::hermitian_to_coeffs(m),
            Repr::Vector(v) => v.iter().copied().collect(),
        }
    }

    /// The pairing `e(omega)`; values within `1e-9` of `[0, 1]` are clamped.
    pub fn evaluate(&self, state: &State) -> Result<f64> {
        self.model.ensure_same(&state.model)?;
        let raw = match (&self.repr, &state.repr) {
            (Repr::Operator(e), Repr::Operator(rho)) => model::trace_product(e, rho).re,
            (Repr::Vector(e), Repr::Vector(p)) => e.dot(p),
            _ => unreachable!("representation follows the model kind"),
        };
        if !(-EIGEN_TOL..=1.0 + EIGEN_TOL).contains(&raw) {
            return Err(GptError::ProbabilityOutOfRange(raw));
        }
        Ok(raw.clamp(0.0, 1.0))
    }

    fn max_abs_diff(&self, other: &Repr) -> f64 {
        match (&self.repr, other) {
            (Repr::Operator(a), Repr::Operator(b)) => linalg::max_abs_diff(a, b),
            (Repr::Vector(a), Repr::Vector(b)) => (a - b).amax(),
            _ => f64::INFINITY,
        }
    }
}

/// `e(omega)` as a free function.
pub fn evaluate(effect: &Effect, state: &State) -> Result<f64> {
    effect.evaluate(state)
}

/// Effects summing to the order unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    model: SystemModel,
    effects: Vec<Effect>,
}

impl Measurement {
    pub fn new(effects: Vec<Effect>) -> Result<Measurement> {
        let first = effects
            .first()
            .ok_or_else(|| GptError::InvalidEffect("a measurement needs at least one effect".into()))?;
        let model = first.model;
        for e in &effects {
            model.ensure_same(&e.model)?;
        }
        let m = Measurement { model, effects };
        let residual = m.completeness_residual();
        if residual > LINEAR_TOL {
            return Err(GptError::IncompleteMeasurement(residual));
        }
        Ok(m)
    }

    /// The one-outcome measurement `{u}`.
    pub fn trivial(model: SystemModel) -> Measurement {
        Measurement {
            model,
            effects: vec![Effect::unit(model)],
        }
    }

    /// Projective measurement onto an orthonormal basis of kets.
    pub fn from_basis(model: SystemModel, kets: &[CVec]) -> Result<Measurement> {
        let effects = kets
            .iter()
            .map(|k| {
                let k = k / c(k.norm());
                Effect::from_operator(model, linalg::outer(&k))
            })
            .collect::<Result<Vec<_>>>()?;
        Measurement::new(effects)
    }

    /// Max-abs deviation of `sum_i e_i` from `u`, coordinate-wise.
    pub fn completeness_residual(&self) -> f64 {
        let total = match &self.effects[0].repr {
            Repr::Operator(m) => {
                let sum = self.effects.iter().fold(CMat::zeros(m.nrows(), m.ncols()), |acc, e| {
                    acc + e.operator().expect("quantum effect")
                });
                Repr::Operator(sum)
            }
            Repr::Vector(v) => {
                let sum = self.effects.iter().fold(DVector::zeros(v.len()), |acc, e| match &e.repr {
                    Repr::Vector(x) => acc + x,
                    Repr::Operator(_) => acc,
                });
                Repr::Vector(sum)
            }
        };
        Effect::unit(self.model).max_abs_diff(&total)
    }

    pub fn model(&self) -> SystemModel {
        self.model
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// A weighted collection of states.
///
/// Ensembles built with [`Ensemble::new`] are pure-state decompositions.
/// Ensembles returned by steering may carry mixed members when the remote
/// measurement is not fine-grained; see [`Ensemble::is_pure_decomposition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<(f64, State)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, State)>) -> Result<Ensemble> {
        if members.iter().any(|(_, s)| !s.is_pure()) {
            return Err(GptError::InvalidEnsemble("member state is not pure".into()));
        }
        Ensemble::with_members(members)
    }

    pub(crate) fn with_members(members: Vec<(f64, State)>) -> Result<Ensemble> {
        let first = members.first().ok_or(GptError::EmptyEnsemble)?;
        let model = first.1.model();
        let mut total = 0.0;
        for (w, s) in &members {
            model.ensure_same(&s.model())?;
            if !w.is_finite() || *w < 0.0 {
                return Err(GptError::InvalidEnsemble(format!("negative weight {w}")));
            }
            total += w;
        }
        if (total - 1.0).abs() > LINEAR_TOL {
            return Err(GptError::InvalidEnsemble(format!(
                "weights sum to {total}"
            )));
        }
        Ok(Ensemble { members })
    }

    pub fn members(&self) -> &[(f64, State)] {
        &self.members
    }

    pub fn model(&self) -> SystemModel {
        self.members[0].1.model()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_pure_decomposition(&self) -> bool {
        self.members.iter().all(|(_, s)| s.is_pure())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.members.iter().map(|(w, _)| *w).collect()
    }
}

/// The average state `sum_i lambda_i psi_i`.
pub fn mix(ensemble: &Ensemble) -> Result<State> {
    let (_, first) = ensemble.members.first().ok_or(GptError::EmptyEnsemble)?;
    if ensemble.members.len() == 1 {
        return Ok(first.clone());
    }
    let repr = match first.repr() {
        Repr::Operator(m) => Repr::Operator(ensemble.members.iter().fold(
            CMat::zeros(m.nrows(), m.ncols()),
            |acc, (w, s)| acc + s.density().expect("quantum member") * c(*w),
        )),
        Repr::Vector(v) => Repr::Vector(ensemble.members.iter().fold(
            DVector::zeros(v.len()),
            |acc, (w, s)| acc + s.probabilities().expect("classical member") * *w,
        )),
    };
    State::from_unnormalized(first.model(), repr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Joint {
    /// Amplitudes indexed `i_a * d_b + i_b`.
    Amplitudes(CVec),
    /// Product of two deterministic points.
    Product(usize, usize),
}

/// A pure joint state of two systems.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    a: SystemModel,
    b: SystemModel,
    joint: Joint,
}

impl BipartiteState {
    /// Quantum joint state from amplitudes, `A` as the slow index.
    pub fn from_amplitudes(
        a: SystemModel,
        b: SystemModel,
        amplitudes: Vec<Complex64>,
    ) -> Result<BipartiteState> {
        let (da, db) = match (a, b) {
            (SystemModel::Quantum { d: da }, SystemModel::Quantum { d: db }) => (da, db),
            _ => {
                return Err(GptError::InvalidBipartite(
                    "amplitude vectors need two quantum models".into(),
                ))
            }
        };
        if amplitudes.len() != da * db {
            return Err(GptError::InvalidBipartite(format!(
                "expected {} amplitudes, got {}",
                da * db,
                amplitudes.len()
            )));
        }
        let v = CVec::from_vec(amplitudes);
        let norm_sqr = v.norm_squared();
        if (norm_sqr - 1.0).abs() > LINEAR_TOL {
            return Err(GptError::NotNormalized(norm_sqr));
        }
        Ok(BipartiteState {
            a,
            b,
            joint: Joint::Amplitudes(v),
        })
    }

    /// Product of two pure states.
    pub fn product(psi_a: &State, psi_b: &State) -> Result<BipartiteState> {
        match (psi_a.model(), psi_b.model()) {
            (SystemModel::Quantum { .. }, SystemModel::Quantum { .. }) => {
                let v = linalg::kron(&psi_a.ket()?, &psi_b.ket()?);
                Ok(BipartiteState {
                    a: psi_a.model(),
                    b: psi_b.model(),
                    joint: Joint::Amplitudes(v),
                })
            }
            (SystemModel::Classical { .. }, SystemModel::Classical { .. }) => Ok(BipartiteState {
                a: psi_a.model(),
                b: psi_b.model(),
                joint: Joint::Product(psi_a.vertex()?, psi_b.vertex()?),
            }),
            (left, right) => Err(GptError::ModelMismatch { left, right }),
        }
    }

    /// `sum_i |ii> / sqrt(d)`.
    pub fn maximally_entangled(d: usize) -> Result<BipartiteState> {
        let model = SystemModel::quantum(d)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
        let w = 1.0 / (d as f64).sqrt();
        for i in 0..d {
            amps[i * d + i] = c(w);
        }
        BipartiteState::from_amplitudes(model, model, amps)
    }

    pub fn model(&self, side: Side) -> SystemModel {
        match side {
            Side::A => self.a,
            Side::B => self.b,
        }
    }

    pub fn amplitudes(&self) -> Option<&CVec> {
        match &self.joint {
            Joint::Amplitudes(v) => Some(v),
            Joint::Product(..) => None,
        }
    }

    pub(crate) fn joint(&self) -> &Joint {
        &self.joint
    }

    /// Amplitudes reshaped as a `d_A x d_B` matrix.
    pub fn amplitude_matrix(&self) -> Option<CMat> {
        let v = self.amplitudes()?;
        let (da, db) = (self.a.level_count(), self.b.level_count());
        Some(CMat::from_fn(da, db, |i, j| v[i * db + j]))
    }
}

/// Reduced state on one side.
pub fn marginal(joint: &BipartiteState, side: Side) -> Result<State> {
    match &joint.joint {
        Joint::Amplitudes(_) => {
            let m = joint.amplitude_matrix().expect("amplitudes");
            let reduced = match side {
                Side::A => &m * m.adjoint(),
                Side::B => m.transpose() * m.conjugate(),
            };
            State::from_unnormalized(joint.model(side), Repr::Operator(reduced))
        }
        Joint::Product(i, j) => {
            let idx = match side {
                Side::A => *i,
                Side::B => *j,
            };
            State::basis(joint.model(side), idx)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> SystemModel {
        SystemModel::qubit()
    }

    fn plus() -> State {
        State::from_ket(qubit(), &[c(1.0), c(1.0)]).unwrap()
    }

    fn minus() -> State {
        State::from_ket(qubit(), &[c(1.0), c(-1.0)]).unwrap()
    }

    #[test]
    fn maximally_mixed_from_coeffs_is_valid_and_mixed() {
        let s = State::from_coeffs(qubit(), &[std::f64::consts::FRAC_1_SQRT_2, 0.0, 0.0, 0.0])
            .unwrap();
        assert!(!s.is_pure());
        let rho = s.density().unwrap();
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(rho[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn negative_eigenvalue_is_outside_cone() {
        let rho = CMat::from_diagonal(&CVec::from_vec(vec![c(1.2), c(-0.2)]));
        assert!(matches!(
            State::from_density(qubit(), rho),
            Err(GptError::OutsideCone(_))
        ));
    }

    #[test]
    fn wrong_trace_is_not_normalized() {
        assert!(matches!(
            State::from_coeffs(qubit(), &[1.0, 0.0, 0.0, 0.0]),
            Err(GptError::NotNormalized(_))
        ));
        let classical = SystemModel::classical(2).unwrap();
        assert!(matches!(
            State::from_coeffs(classical, &[0.5, 0.6]),
            Err(GptError::NotNormalized(_))
        ));
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(matches!(
            State::from_coeffs(qubit(), &[1.0, 0.0]),
            Err(GptError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn classical_probability_vector() {
        let model = SystemModel::classical(2).unwrap();
        let s = State::from_coeffs(model, &[0.3, 0.7]).unwrap();
        assert!(!s.is_pure());
        let v = State::from_coeffs(model, &[0.0, 1.0]).unwrap();
        assert!(v.is_pure());
        assert_eq!(v.vertex().unwrap(), 1);
        assert!(matches!(
            State::from_coeffs(model, &[1.1, -0.1]),
            Err(GptError::OutsideCone(_))
        ));
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clipped() {
        let eps = 1e-10;
        let rho = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0 + eps), c(-eps)]));
        let s = State::from_density(qubit(), rho).unwrap();
        let r = s.density().unwrap();
        assert!(r[(1, 1)].re >= 0.0);
        assert!((r.trace().re - 1.0).abs() < 1e-15);
        assert!(s.is_pure());
    }

    #[test]
    fn evaluate_examples() {
        let zero = State::basis(qubit(), 0).unwrap();
        let one = State::basis(qubit(), 1).unwrap();
        let e0 = Effect::projector(&zero).unwrap();
        assert!((e0.evaluate(&plus()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(e0.evaluate(&one).unwrap(), 0.0);
        let u = Effect::unit(qubit());
        for s in [zero, one, plus(), State::maximally_mixed(qubit())] {
            assert!((u.evaluate(&s).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn evaluate_rejects_model_mismatch() {
        let e = Effect::unit(SystemModel::classical(2).unwrap());
        assert!(matches!(
            e.evaluate(&plus()),
            Err(GptError::ModelMismatch { .. })
        ));
    }

    #[test]
    fn effect_bounds_are_enforced() {
        let big = CMat::from_diagonal_element(2, 2, c(1.5));
        assert!(Effect::from_operator(qubit(), big).is_err());
        assert!(Effect::from_covector(SystemModel::classical(2).unwrap(), vec![0.5, -0.5]).is_err());
    }

    #[test]
    fn measurement_completeness() {
        let zero = State::basis(qubit(), 0).unwrap();
        let e = Effect::projector(&zero).unwrap();
        assert!(Measurement::new(vec![e.clone(), e.complement()]).is_ok());
        assert!(matches!(
            Measurement::new(vec![e.clone(), e]),
            Err(GptError::IncompleteMeasurement(_))
        ));
    }

    #[test]
    fn mix_examples() {
        let zero = State::basis(qubit(), 0).unwrap();
        let one = State::basis(qubit(), 1).unwrap();
        let mixed = State::maximally_mixed(qubit());
        let z = mix(&Ensemble::new(vec![(0.5, zero), (0.5, one)]).unwrap()).unwrap();
        let x = mix(&Ensemble::new(vec![(0.5, plus()), (0.5, minus())]).unwrap()).unwrap();
        assert!(z.distance(&mixed).unwrap() < 1e-15);
        assert!(x.distance(&mixed).unwrap() < 1e-15);
        let single = mix(&Ensemble::new(vec![(1.0, plus())]).unwrap()).unwrap();
        assert_eq!(single, plus());
    }

    #[test]
    fn ensemble_invariants() {
        assert!(matches!(Ensemble::new(vec![]), Err(GptError::EmptyEnsemble)));
        assert!(Ensemble::new(vec![(0.5, plus()), (0.6, minus())]).is_err());
        assert!(Ensemble::new(vec![(1.0, State::maximally_mixed(qubit()))]).is_err());
    }

    #[test]
    fn bell_marginals_are_maximally_mixed() {
        let bell = BipartiteState::maximally_entangled(2).unwrap();
        let mixed = State::maximally_mixed(qubit());
        for side in [Side::A, Side::B] {
            let m = marginal(&bell, side).unwrap();
            assert!(m.distance(&mixed).unwrap() < 1e-15);
            assert!(!m.is_pure());
        }
    }

    #[test]
    fn product_marginals() {
        let psi = plus();
        let chi = State::from_ket(
            SystemModel::quantum(3).unwrap(),
            &[c(1.0), Complex64::new(0.0, 1.0), c(0.5)],
        )
        .unwrap();
        let joint = BipartiteState::product(&psi, &chi).unwrap();
        assert!(marginal(&joint, Side::A).unwrap().distance(&psi).unwrap() < 1e-15);
        assert!(marginal(&joint, Side::B).unwrap().distance(&chi).unwrap() < 1e-15);
        let cl = SystemModel::classical(3).unwrap();
        let joint = BipartiteState::product(
            &State::basis(cl, 2).unwrap(),
            &State::basis(cl, 0).unwrap(),
        )
        .unwrap();
        assert_eq!(marginal(&joint, Side::A).unwrap().vertex().unwrap(), 2);
    }

    #[test]
    fn unnormalized_amplitudes_are_rejected() {
        let q = qubit();
        assert!(BipartiteState::from_amplitudes(q, q, vec![c(1.0), c(1.0), c(0.0), c(0.0)]).is_err());
    }

    #[test]
    fn bloch_and_ket_agree() {
        let s = State::from_bloch([1.0, 0.0, 0.0]).unwrap();
        assert!(s.is_pure());
        assert!(s.distance(&plus()).unwrap() < 1e-15);
        let k = plus().ket().unwrap();
        assert!((k[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(plus().bloch().unwrap().map(|x| (x * 1e12).round()), [1e12, 0.0, 0.0]);
    }
}
