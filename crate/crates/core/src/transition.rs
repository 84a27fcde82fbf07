//! Geometric transition probability between pure states.
//!
//! `tau(psi, phi)` is the acceptance probability `e_phi(psi)` of the sharpest
//! test for `phi`: the least `e(psi)` over effects with `e(phi) = 1`, attained
//! by the projector onto `phi`; [`tau_lp`] solves the optimization
//! directly over a finitely generated effect polytope for cross-checking.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{GptError, Result};
use crate::linalg::{self, c, CVec};
use crate::lp::{self, LpDiagnostics, LpFailure, StandardFormLp};
use crate::model::SystemModel;
use crate::state::{Effect, Measurement, State};

/// A pure state, an orthogonal partner, and the two-outcome measurement that
/// tells them apart.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishingPair {
    pub phi: State,
    pub phi_perp: State,
    pub e_phi: Effect,
    pub e_perp: Effect,
}

impl DistinguishingPair {
    pub fn measurement(&self) -> Measurement {
        Measurement::new(vec![self.e_phi.clone(), self.e_perp.clone()])
            .expect("projector and complement sum to the unit")
    }
}

fn ensure_pure_pair(psi: &State, phi: &State) -> Result<()> {
    psi.model().ensure_same(&phi.model())?;
    if !psi.is_pure() || !phi.is_pure() {
        return Err(GptError::NotPure);
    }
    Ok(())
}

/// Closed-form transition probability: `|<phi|psi>|^2` for quantum models,
/// the Kronecker match of deterministic points for classical ones.
pub fn tau(psi: &State, phi: &State) -> Result<f64> {
    ensure_pure_pair(psi, phi)?;
    match psi.model() {
        SystemModel::Quantum { .. } => Effect::projector(phi)?.evaluate(psi),
        SystemModel::Classical { .. } => Ok(if psi.vertex()? == phi.vertex()? {
            1.0
        } else {
            0.0
        }),
    }
}

/// `tau(omega, phi) := e_phi(omega)` for an arbitrary state `omega`.
pub fn mixed_tau(omega: &State, phi: &State) -> Result<f64> {
    omega.model().ensure_same(&phi.model())?;
    Effect::projector(phi)?.evaluate(omega)
}

pub fn distinguishing_measurement(phi: &State) -> Result<DistinguishingPair> {
    if !phi.is_pure() {
        return Err(GptError::NotPure);
    }
    let model = phi.model();
    let phi_perp = match model {
        SystemModel::Quantum { d } => {
            let ket = phi.ket()?;
            // standard basis vector with the largest component off phi
            let (best, _) = (0..d)
                .map(|j| (j, 1.0 - ket[j].norm_sqr()))
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 + 1e-12 { x } else { acc });
            let mut e = CVec::zeros(d);
            e[best] = c(1.0);
            let v = linalg::orthonormalize_against(&e, &[ket], 1e-6)
                .expect("some basis vector leaves the span of phi");
            State::from_ket(model, v.as_slice())?
        }
        SystemModel::Classical { n } => State::basis(model, (phi.vertex()? + 1) % n)?,
    };
    let e_phi = Effect::projector(phi)?;
    let e_perp = e_phi.complement();
    Ok(DistinguishingPair {
        phi: phi.clone(),
        phi_perp,
        e_phi,
        e_perp,
    })
}

/// A pure state `psi` with `tau(psi, phi) = p`.
///
/// For quantum models `psi = sqrt(p) phi + sqrt(1 - p) chi` with `chi` a
/// seeded random unit vector orthogonal to `phi`; on a qubit this is a Bloch
/// rotation by `theta` with `cos^2(theta/2) = p` about a seeded axis. The
/// endpoints return `phi` and its distinguishing partner exactly.
pub fn state_with_tau(phi: &State, p: f64, seed: u64) -> Result<State> {
    if !phi.is_pure() {
        return Err(GptError::NotPure);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GptError::DomainError(p));
    }
    if p == 1.0 {
        return Ok(phi.clone());
    }
    if p == 0.0 {
        return Ok(distinguishing_measurement(phi)?.phi_perp);
    }
    let d = match phi.model() {
        SystemModel::Quantum { d } => d,
        SystemModel::Classical { .. } => {
            return Err(GptError::UnsupportedModel(
                "classical pure states only reach tau in {0, 1}".into(),
            ))
        }
    };
    let ket = phi.ket()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chi = loop {
        let raw = CVec::from_fn(d, |_, _| {
            num_complex::Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        if let Some(v) = linalg::orthonormalize_against(&raw, std::slice::from_ref(&ket), 1e-3) {
            break v;
        }
    };
    let psi = ket * c(p.sqrt()) + chi * c((1.0 - p).sqrt());
    State::from_ket(phi.model(), psi.as_slice())
}

/// Result of the linear-programming route to `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpTau {
    pub value: f64,
    pub generators: usize,
    pub diagnostics: LpDiagnostics,
}

/// `tau` by linear programming: the least value `e(psi)` over effects with
/// `e(phi) = 1`, where effects are cut out by `0 <= e(g) <= 1` on the
/// generator states `g`.
///
/// Classical models default to their vertices. Quantum models need an
/// explicit finite generator set (e.g. [`great_circle_generators`]); the
/// result then approximates the closed form from below as the set refines.
pub fn tau_lp(psi: &State, phi: &State, generators: Option<&[State]>) -> Result<LpTau> {
    ensure_pure_pair(psi, phi)?;
    let model = psi.model();
    let owned;
    let gens: &[State] = match (generators, model) {
        (Some(g), _) => g,
        (None, SystemModel::Classical { n }) => {
            owned = (0..n)
                .map(|i| State::basis(model, i))
                .collect::<Result<Vec<_>>>()?;
            &owned
        }
        (None, SystemModel::Quantum { .. }) => {
            return Err(GptError::UnsupportedModel(
                "quantum effect sets are not polytopes; supply a generator set".into(),
            ))
        }
    };
    if gens.is_empty() {
        return Err(GptError::UnboundedModel("empty generator set".into()));
    }
    for g in gens {
        model.ensure_same(&g.model())?;
    }

    // Effects only matter on span(generators); work in an orthonormal basis of it.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for g in gens {
        if let Some(v) = orthonormal_remainder(&g.coeffs(), &basis, 1e-10) {
            basis.push(v);
        }
    }
    let reduce = |x: &[f64]| -> Vec<f64> { basis.iter().map(|b| dot(b, x)).collect() };
    for (name, s) in [("psi", psi), ("phi", phi)] {
        let x = s.coeffs();
        let r = reduce(&x);
        let back: Vec<f64> = (0..x.len())
            .map(|i| basis.iter().zip(&r).map(|(b, ri)| b[i] * ri).sum())
            .collect();
        let off = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if off > 1e-9 {
            return Err(GptError::UnboundedModel(format!(
                "{name} lies outside the span of the generators (distance {off:e})"
            )));
        }
    }
    let psi_r = reduce(&psi.coeffs());
    let phi_r = reduce(&phi.coeffs());
    let g_r: Vec<Vec<f64>> = gens.iter().map(|g| reduce(&g.coeffs())).collect();

    // Primal: min y.psi  st  0 <= y.g_k <= 1,  y.phi = 1,  y free.
    // Dual:   max w - sum_k zu_k  st  sum_k (zl_k - zu_k) g_k + w phi = psi,
    //         zl, zu >= 0, w = w+ - w-; solved as a minimization of the negation.
    let k = g_r.len();
    let r = basis.len();
    let cols = 2 * k + 2;
    let mut a = vec![vec![0.0; cols]; r];
    for (j, g) in g_r.iter().enumerate() {
        for i in 0..r {
            a[i][j] = g[i];
            a[i][k + j] = -g[i];
        }
    }
    for i in 0..r {
        a[i][2 * k] = phi_r[i];
        a[i][2 * k + 1] = -phi_r[i];
    }
    let mut cost = vec![0.0; cols];
    cost[k..2 * k].iter_mut().for_each(|x| *x = 1.0);
    cost[2 * k] = -1.0;
    cost[2 * k + 1] = 1.0;
    let lp = StandardFormLp {
        a,
        b: psi_r,
        c: cost,
    };
    match lp::solve(&lp) {
        Ok(sol) => Ok(LpTau {
            value: -sol.objective,
            generators: k,
            diagnostics: sol.diagnostics,
        }),
        Err(LpFailure::Unbounded) => Err(GptError::Infeasible),
        Err(LpFailure::Infeasible) => Err(GptError::UnboundedModel(
            "no finite optimum over the generator polytope".into(),
        )),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormal_remainder(x: &[f64], basis: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let mut w = x.to_vec();
    for _ in 0..2 {
        for b in basis {
            let p = dot(b, &w);
            w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= p * bi);
        }
    }
    let norm = dot(&w, &w).sqrt();
    (norm > tol).then(|| w.into_iter().map(|v| v / norm).collect())
}

/// `count` pure qubit states evenly spaced on the Bloch great circle through
/// `phi` and `psi`, starting at `phi` itself.
pub fn great_circle_generators(psi: &State, phi: &State, count: usize) -> Result<Vec<State>> {
    ensure_pure_pair(psi, phi)?;
    if count < 3 {
        return Err(GptError::InvalidModel("a great-circle grid needs >= 3 points".into()));
    }
    let n = phi.bloch()?;
    let s = psi.bloch()?;
    let along = s[0] * n[0] + s[1] * n[1] + s[2] * n[2];
    let mut t = [s[0] - along * n[0], s[1] - along * n[1], s[2] - along * n[2]];
    let mut norm = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    if norm < 1e-9 {
        // psi = +-phi: any circle through phi works; pick the one orthogonal to the
        // coordinate axis least aligned with phi
        let axis = (0..3)
            .min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs()))
            .unwrap_or(0);
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let along = n[axis];
        t = [e[0] - along * n[0], e[1] - along * n[1], e[2] - along * n[2]];
        norm = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    }
    let t = t.map(|x| x / norm);
    let mut out = Vec::with_capacity(count);
    out.push(phi.clone());
    for k in 1..count {
        let angle = std::f64::consts::TAU * k as f64 / count as f64;
        let (sin, cos) = angle.sin_cos();
        let r = [
            cos * n[0] + sin * t[0],
            cos * n[1] + sin * t[1],
            cos * n[2] + sin * t[2],
        ];
        let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        out.push(State::from_bloch(r.map(|x| x / len))?);
    }
    Ok(out)
}
