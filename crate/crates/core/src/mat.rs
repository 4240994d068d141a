//! Small dense-matrix helpers shared by every module.
//!
//! Matrices are `faer::Mat<c64>` throughout; state vectors travel as `&[c64]`
//! slices (column-major storage makes matrix columns contiguous).

use crate::{c64, CMat};

/// D×D identity.
pub fn identity(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    })
}

/// Largest entry modulus; 0 for an empty matrix.
pub fn max_abs(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for &z in m.col_as_slice(j) {
            best = best.max(z.abs());
        }
    }
    best
}

/// max_{ij} |A_ij − B_ij|; panics on shape mismatch.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let (ca, cb) = (a.col_as_slice(j), b.col_as_slice(j));
        for i in 0..ca.len() {
            best = best.max((ca[i] - cb[i]).abs());
        }
    }
    best
}

/// max_{ij} |M_ij − conj(M_ji)|.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max((m[(i, j)] - m[(j, i)].conj()).abs());
        }
    }
    best
}

/// ‖M†M − I‖_max: 0 for exactly orthonormal columns.
pub fn orthonormality_deviation(m: &CMat) -> f64 {
    let gram = m.adjoint() * m;
    let mut best = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            best = best.max((gram[(i, j)] - c64::new(target, 0.0)).abs());
        }
    }
    best
}

/// ⟨a|b⟩ = Σ conj(a_i)·b_i.
pub fn inner(a: &[c64], b: &[c64]) -> c64 {
    assert_eq!(a.len(), b.len());
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..a.len() {
        acc += a[i].conj() * b[i];
    }
    acc
}

/// Euclidean norm.
pub fn norm(a: &[c64]) -> f64 {
    a.iter().map(|z| z.abs() * z.abs()).sum::<f64>().sqrt()
}

/// Scale to unit norm in place; returns the original norm.
pub fn normalize(a: &mut [c64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        let inv = 1.0 / n;
        for z in a.iter_mut() {
            *z = *z * inv;
        }
    }
    n
}

/// y = M·v.
pub fn matvec(m: &CMat, v: &[c64]) -> Vec<c64> {
    assert_eq!(m.ncols(), v.len());
    let mut y = vec![c64::new(0.0, 0.0); m.nrows()];
    for j in 0..m.ncols() {
        let col = m.col_as_slice(j);
        let vj = v[j];
        for i in 0..y.len() {
            y[i] += col[i] * vj;
        }
    }
    y
}

/// y = M†·v, computed column-wise so access stays contiguous.
pub fn adjoint_matvec(m: &CMat, v: &[c64]) -> Vec<c64> {
    assert_eq!(m.nrows(), v.len());
    (0..m.ncols()).map(|j| inner(m.col_as_slice(j), v)).collect()
}

/// D×1 column matrix from a slice.
pub fn col_from_slice(v: &[c64]) -> CMat {
    CMat::from_fn(v.len(), 1, |i, _| v[i])
}

/// First column of a matrix as an owned vector.
pub fn col_to_vec(m: &CMat, j: usize) -> Vec<c64> {
    m.col_as_slice(j).to_vec()
}
