//! System models: the ambient ordered vector space, its cone and order unit.
//!
//! Quantum systems of Hilbert dimension `d` are represented on the real span of
//! `d x d` Hermitian matrices, expanded in an orthonormal basis (identity
//! normalized, then generalized Gell-Mann elements) under the trace inner
//! product. Classical systems of `n` outcomes live on `R^n` with the
//! probability simplex as the normalized slice of the positive orthant.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GptError, Result};

/// Tolerance for linear identities (normalization, completeness, bilinearity).
pub const LINEAR_TOL: f64 = 1e-12;
/// Tolerance for eigenvalue-based checks (positivity, purity).
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub enum SystemModel {
    /// Complex Hilbert space of dimension `d`.
    Quantum { d: usize },
    /// Classical probability theory with `n` outcomes.
    Classical { n: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ModelRepr {
    Quantum { d: usize },
    Classical { n: usize },
}

impl TryFrom<ModelRepr> for SystemModel {
    type Error = GptError;

    fn try_from(repr: ModelRepr) -> Result<Self> {
        match repr {
            ModelRepr::Quantum { d } => SystemModel::quantum(d),
            ModelRepr::Classical { n } => SystemModel::classical(n),
        }
    }
}

impl From<SystemModel> for ModelRepr {
    fn from(model: SystemModel) -> Self {
        match model {
            SystemModel::Quantum { d } => ModelRepr::Quantum { d },
            SystemModel::Classical { n } => ModelRepr::Classical { n },
        }
    }
}

impl fmt::Display for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemModel::Quantum { d } => write!(f, "quantum(d={d})"),
            SystemModel::Classical { n } => write!(f, "classical(n={n})"),
        }
    }
}

impl SystemModel {
    pub fn quantum(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(GptError::InvalidModel(format!(
                "quantum dimension must be >= 2, got {d}"
            )));
        }
        Ok(SystemModel::Quantum { d })
    }

    pub fn classical(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GptError::InvalidModel(format!(
                "classical outcome count must be >= 2, got {n}"
            )));
        }
        Ok(SystemModel::Classical { n })
    }

    pub fn qubit() -> Self {
        SystemModel::Quantum { d: 2 }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, SystemModel::Quantum { .. })
    }

    /// Hilbert dimension for quantum models, outcome count for classical ones.
    pub fn level_count(&self) -> usize {
        match *self {
            SystemModel::Quantum { d } => d,
            SystemModel::Classical { n } => n,
        }
    }

    /// Real dimension of the ambient space `V`.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            SystemModel::Quantum { d } => d * d,
            SystemModel::Classical { n } => n,
        }
    }

    /// The order unit `u` as a covector in the coefficient view.
    pub fn order_unit(&self) -> Vec<f64> {
        let mut u = vec![0.0; self.ambient_dim()];
        match *self {
            SystemModel::Quantum { d } => u[0] = (d as f64).sqrt(),
            SystemModel::Classical { .. } => u.iter_mut().for_each(|x| *x = 1.0),
        }
        u
    }

    pub(crate) fn ensure_same(&self, other: &SystemModel) -> Result<()> {
        if self != other {
            return Err(GptError::ModelMismatch {
                left: *self,
                right: *other,
            });
        }
        Ok(())
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        let expected = self.ambient_dim();
        if len != expected {
            return Err(GptError::DimensionMismatch {
                model: *self,
                expected,
                got: len,
            });
        }
        Ok(())
    }
}

/// Orthonormal Hermitian basis of `d x d` matrices under `Tr(A B)`.
///
/// Order: `I/sqrt(d)`, symmetric off-diagonal pairs, antisymmetric pairs, then
/// the `d - 1` traceless diagonal elements. For `d = 2` this is
/// `(I, X, Y, Z) / sqrt(2)`.
pub fn hermitian_basis(d: usize) -> Vec<DMatrix<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut basis = Vec::with_capacity(d * d);
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    basis.push(DMatrix::from_diagonal_element(
        d,
        d,
        Complex64::new(inv_sqrt_d, 0.0),
    ));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = DMatrix::from_element(d, d, zero);
            m[(j, k)] = Complex64::new(h, 0.0);
            m[(k, j)] = Complex64::new(h, 0.0);
            basis.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = DMatrix::from_element(d, d, zero);
            m[(j, k)] = Complex64::new(0.0, -h);
            m[(k, j)] = Complex64::new(0.0, h);
            basis.push(m);
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = DMatrix::from_element(d, d, zero);
        for i in 0..l {
            m[(i, i)] = Complex64::new(norm, 0.0);
        }
        m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        basis.push(m);
    }
    basis
}

/// Real coefficients `Tr(M B_i)` of a Hermitian matrix in [`hermitian_basis`].
pub(crate) fn hermitian_to_coeffs(m: &DMatrix<Complex64>) -> Vec<f64> {
    let d = m.nrows();
    hermitian_basis(d)
        .iter()
        .map(|b| trace_product(m, b).re)
        .collect()
}

pub(crate) fn coeffs_to_hermitian(d: usize, coeffs: &[f64]) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    for (c, b) in coeffs.iter().zip(hermitian_basis(d)) {
        m += b * Complex64::new(*c, 0.0);
    }
    m
}

/// `Tr(A B)` without forming the product.
pub(crate) fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}
