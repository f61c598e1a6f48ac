//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::{CMat, C64};

pub const I: C64 = C64::new(0.0, 1.0);

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Hermitian part (M + M†)/2.
pub fn herm_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * cr(0.5)
}

/// Skew-Hermitian part (M − M†)/2.
pub fn skew_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * cr(0.5)
}

/// Re Tr(A B†).
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvectors as columns.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], identity(1));
    }
    let h = herm_part(m);
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// f(H) for Hermitian H via its eigen-decomposition.
pub fn herm_apply(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let n = m.nrows();
    if n == 1 {
        return CMat::from_element(1, 1, cr(f(m[(0, 0)].re)));
    }
    let (vals, vecs) = herm_eig(m);
    let d = DVector::from_iterator(n, vals.iter().map(|&v| cr(f(v))));
    let scaled = CMat::from_fn(n, n, |r, c| vecs[(r, c)] * d[c]);
    scaled * vecs.adjoint()
}

pub fn herm_exp(m: &CMat) -> CMat {
    herm_apply(m, f64::exp)
}

/// Logarithm of a positive-definite Hermitian matrix. Non-positive
/// eigenvalues give NaN entries, which callers treat as divergence.
pub fn herm_log(m: &CMat) -> CMat {
    herm_apply(m, |v| if v > 0.0 { v.ln() } else { f64::NAN })
}

pub fn herm_sqrt(m: &CMat) -> CMat {
    herm_apply(m, |v| v.max(0.0).sqrt())
}

pub fn herm_inv_sqrt(m: &CMat) -> CMat {
    herm_apply(m, |v| 1.0 / v.sqrt())
}

/// Matrix exponential of a general complex matrix.
pub fn expm(m: &CMat) -> CMat {
    if m.nrows() == 1 {
        return CMat::from_element(1, 1, m[(0, 0)].exp());
    }
    m.clone().exp()
}

/// Principal logarithm of a unitary matrix (skew-Hermitian result).
pub fn unitary_log(u: &CMat) -> CMat {
    let n = u.nrows();
    if n == 1 {
        let z = u[(0, 0)];
        return CMat::from_element(1, 1, C64::new(0.0, z.arg()));
    }
    let (q, t) = nalgebra::linalg::Schur::new(u.clone()).unpack();
    let d = CMat::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(0.0, t[(r, r)].arg())
        } else {
            C64::new(0.0, 0.0)
        }
    });
    skew_part(&(&q * d * q.adjoint()))
}

/// Polar decomposition V = W·P with W unitary and P = (V†V)^{1/2}.
/// Returns (W, ½·log(V†V)).
pub fn polar_log(v: &CMat) -> (CMat, CMat) {
    let n = v.nrows();
    if n == 1 {
        let z = v[(0, 0)];
        let r = z.norm();
        return (CMat::from_element(1, 1, z / r), CMat::from_element(1, 1, cr(r.ln())));
    }
    let vtv = v.adjoint() * v;
    let (vals, vecs) = herm_eig(&vtv);
    let inv_sqrt = DVector::from_iterator(n, vals.iter().map(|&x| cr(1.0 / x.sqrt())));
    let half_log = DVector::from_iterator(n, vals.iter().map(|&x| cr(0.5 * x.ln())));
    let a = CMat::from_fn(n, n, |r, c| vecs[(r, c)] * inv_sqrt[c]);
    let b = CMat::from_fn(n, n, |r, c| vecs[(r, c)] * half_log[c]);
    let w = v * (a * vecs.adjoint());
    (w, b * vecs.adjoint())
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 1 {
        let z = m[(0, 0)];
        if z.norm() == 0.0 {
            return None;
        }
        return Some(CMat::from_element(1, 1, z.inv()));
    }
    m.clone().try_inverse()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// ‖B†B − I‖_F.
pub fn unitarity_defect(m: &CMat) -> f64 {
    fro_norm(&(m.adjoint() * m - identity(m.nrows())))
}

/// ‖B + B†‖_F.
pub fn skew_defect(m: &CMat) -> f64 {
    fro_norm(&(m + m.adjoint()))
}

/// Orthonormalise the columns of `m` (modified Gram–Schmidt), dropping
/// columns whose residual norm falls below `tol`.
pub fn orthonormal_columns(m: &CMat, tol: f64) -> CMat {
    let mut cols: Vec<DVector<C64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let p = q.dotc(&v);
                v -= q * p;
            }
        }
        let n = v.norm();
        if n > tol {
            cols.push(v / cr(n));
        }
    }
    if cols.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    DMatrix::from_columns(&cols)
}

/// Orthogonal projector onto the column span of an orthonormal basis.
pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}
