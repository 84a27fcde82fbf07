//! Small complex linear-algebra helpers shared by states and steering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigenvalues closer than this are treated as one degenerate cluster.
const CLUSTER_TOL: f64 = 1e-9;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Rotate `v` so its first component with modulus above `1e-12` is real
/// and positive.
pub fn fix_phase(v: &mut CVec) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Hermitian eigendecomposition with eigenvalues in descending order.
///
/// Within a degenerate cluster the eigenvectors are replaced by the
/// Gram-Schmidt orthonormalization of the cluster projector applied to
/// `e_0, e_1, ...`, and every vector is phase-fixed with [`fix_phase`], so
/// the output does not depend on the underlying solver's choice of basis.
pub fn eigh(m: &CMat) -> (Vec<f64>, Vec<CVec>) {
    let n = m.nrows();
    let sym = (m + m.adjoint()) * c(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let raw: Vec<CVec> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();

    let mut vectors = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[start] - values[end]).abs() <= CLUSTER_TOL {
            end += 1;
        }
        if end - start == 1 {
            let mut v = raw[start].clone();
            fix_phase(&mut v);
            vectors.push(v);
        } else {
            let projector = raw[start..end]
                .iter()
                .fold(CMat::zeros(n, n), |acc, v| acc + outer(v));
            let mut cluster: Vec<CVec> = Vec::with_capacity(end - start);
            for j in 0..n {
                if cluster.len() == end - start {
                    break;
                }
                let candidate = projector.column(j).into_owned();
                if let Some(v) = orthonormalize_against(&candidate, &cluster, 1e-6) {
                    cluster.push(v);
                }
            }
            for mut v in cluster {
                fix_phase(&mut v);
                vectors.push(v);
            }
        }
        start = end;
    }
    (values, vectors)
}

/// Subtract the projections onto the orthonormal set `basis` and normalize.
/// Returns `None` when the remainder has norm at most `tol`.
pub fn orthonormalize_against(v: &CVec, basis: &[CVec], tol: f64) -> Option<CVec> {
    let mut w = v.clone();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
    }
    let norm = w.norm();
    (norm > tol).then(|| w / c(norm))
}

/// Orthonormal basis of the complement of span(`basis`) in `C^dim`, built
/// from the standard basis vectors in index order.
pub fn complement_basis(basis: &[CVec], dim: usize) -> Vec<CVec> {
    let mut all: Vec<CVec> = basis.to_vec();
    let mut extra = Vec::new();
    for j in 0..dim {
        if all.len() == dim {
            break;
        }
        let mut e = CVec::from_element(dim, ZERO);
        e[j] = c(1.0);
        if let Some(v) = orthonormalize_against(&e, &all, 1e-6) {
            all.push(v.clone());
            extra.push(v);
        }
    }
    extra
}

/// Kronecker product of two column vectors, `a` as the slow index.
pub fn kron(a: &CVec, b: &CVec) -> CVec {
    let mut out = CVec::from_element(a.len() * b.len(), ZERO);
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}
