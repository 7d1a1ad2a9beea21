//! Small shared dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

/// vᵀ M v without allocating.
pub(crate) fn quad_form(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    debug_assert_eq!(m.nrows(), n);
    let mut acc = 0.0;
    for i in 0..n {
        if v[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..n {
            row += m[(i, j)] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn sym_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a symmetric matrix, unordered.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect()
}
