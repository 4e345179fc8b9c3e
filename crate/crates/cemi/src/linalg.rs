//! Dense complex linear algebra helpers shared by the state and optimizer
//! layers: Hermitian eigendecomposition with sorted spectra, the exponential
//! map onto the unitary group, its inverse, and isometry completion.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Max absolute entry, the norm used by every tolerance check in the crate.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn unitarity_defect(u: &CMat) -> f64 {
    max_abs(&(u.adjoint() * u - identity(u.ncols())))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
/// Returns `(values, vectors)` with eigenvectors as the columns of `vectors`.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, ascending.
pub fn eigh_values(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// exp(iH) for Hermitian H, computed through the eigendecomposition.
pub fn exp_i_hermitian(h: &CMat) -> CMat {
    let n = h.nrows();
    let (vals, vecs) = eigh(h);
    let mut phased = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let phase = C64::from_polar(1.0, l);
        for i in 0..n {
            phased[(i, j)] *= phase;
        }
    }
    phased * vecs.adjoint()
}

/// Completes a D x k isometry to a D x D unitary whose first k columns
/// equal the input. Remaining columns come from Gram-Schmidt on the
/// standard basis, so the result is deterministic.
pub fn complete_to_unitary(iso: &CMat) -> Result<CMat> {
    let (d, k) = (iso.nrows(), iso.ncols());
    if k > d {
        return Err(Error::ShapeMismatch {
            rows: d,
            cols: k,
            expected: d,
        });
    }
    let defect = max_abs(&(iso.adjoint() * iso - identity(k)));
    if defect > 1e-8 {
        return Err(Error::BadArgument(format!(
            "columns are not orthonormal: max |V^dag V - I| = {defect:.3e}"
        )));
    }
    let mut cols: Vec<CVec> = (0..k).map(|j| iso.column(j).clone_owned()).collect();
    let mut e = 0;
    while cols.len() < d {
        let mut v = CVec::zeros(d);
        v[e] = C64::new(1.0, 0.0);
        // Two orthogonalization passes keep the completion orthonormal to
        // machine precision even when the candidate is nearly in the span.
        for _ in 0..2 {
            for q in &cols {
                let overlap = q.dotc(&v);
                v -= q * overlap;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v / C64::new(norm, 0.0));
        }
        e += 1;
        if e > d {
            return Err(Error::BadArgument(
                "failed to complete isometry to a unitary".into(),
            ));
        }
    }
    let mut u = CMat::zeros(d, d);
    for (j, c) in cols.iter().enumerate() {
        u.set_column(j, c);
    }
    Ok(u)
}

/// Hermitian logarithm of a unitary: returns H with U = exp(iH) and
/// eigenphases in (-pi, pi].
///
/// U is normal, so its real and imaginary Hermitian parts commute; a common
/// eigenbasis is found by diagonalizing C = (U + U^dag)/2 and then
/// re-diagonalizing S = (U - U^dag)/2i inside each near-degenerate cluster
/// of C. This avoids a complex Schur decomposition.
pub fn unitary_log(u: &CMat) -> Result<CMat> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::ShapeMismatch {
            rows: u.nrows(),
            cols: u.ncols(),
            expected: n,
        });
    }
    let defect = unitarity_defect(u);
    if defect > 1e-8 {
        return Err(Error::BadArgument(format!(
            "matrix is not unitary: max |U^dag U - I| = {defect:.3e}"
        )));
    }
    let half = C64::new(0.5, 0.0);
    let half_i = C64::new(0.0, -0.5); // 1/(2i)
    let c = (u + u.adjoint()) * half;
    let s = (u - u.adjoint()) * half_i;
    let (cvals, mut vecs) = eigh(&c);

    // Rotate each cluster of C-eigenvectors into an eigenbasis of S.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cvals[end] - cvals[end - 1] < 1e-8 {
            end += 1;
        }
        let width = end - start;
        if width > 1 {
            let w = vecs.columns(start, width).clone_owned();
            let projected = w.adjoint() * &s * &w;
            let (_, q) = eigh(&projected);
            let rotated = w * q;
            for j in 0..width {
                vecs.set_column(start + j, &rotated.column(j));
            }
        }
        start = end;
    }

    let mut h = CMat::zeros(n, n);
    for j in 0..n {
        let v = vecs.column(j);
        let uv = u * v;
        let eig = v.dotc(&uv); // unit-modulus eigenvalue of U
        let theta = C64::new(eig.arg(), 0.0);
        let vj = v.clone_owned();
        h += &vj * vj.adjoint() * theta;
    }
    // Symmetrize away accumulated drift.
    Ok((&h + h.adjoint()) * half)
}

/// Permutation matrix P that reorders tensor factors: `perm[new] = old`
/// gives the old position of each factor in the new ordering, and
/// `(P v)[new composite index] = v[old composite index]` under row-major
/// (leftmost factor most significant) indexing.
pub fn factor_permutation_matrix(dims: &[usize], perm: &[usize]) -> CMat {
    assert_eq!(dims.len(), perm.len());
    let total: usize = dims.iter().product();
    let old_strides = row_major_strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut m = CMat::zeros(total, total);
    let mut digits = vec![0usize; perm.len()];
    for new_idx in 0..total {
        let mut old_idx = 0;
        for (k, &d) in digits.iter().enumerate() {
            old_idx += d * old_strides[perm[k]];
        }
        m[(new_idx, old_idx)] = C64::new(1.0, 0.0);
        increment_digits(&mut digits, &new_dims);
    }
    m
}

/// Row-major strides: stride[k] = product of dims to the right of k.
pub fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

/// Advances a mixed-radix digit vector by one (most significant digit first).
pub fn increment_digits(digits: &mut [usize], dims: &[usize]) {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < dims[k] {
            return;
        }
        digits[k] = 0;
    }
}
