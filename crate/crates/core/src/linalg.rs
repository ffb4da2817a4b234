//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Cholesky, DMatrix, Dyn};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Copy of `m` with its lower triangle mirrored onto the upper one.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky of `m + jitter*I`, escalating the jitter by ×10 until the
/// factorization succeeds or the jitter exceeds `cap`.
///
/// Returns the regularized matrix, its factor and the jitter that was used.
pub(crate) fn cholesky_with_jitter(
    m: &DMatrix<f64>,
    jitter: f64,
    cap: f64,
) -> Option<(DMatrix<f64>, Cholesky<f64, Dyn>, f64)> {
    let n = m.nrows();
    let mut current = jitter.max(0.0);
    loop {
        let mut reg = m.clone();
        for i in 0..n {
            reg[(i, i)] += current;
        }
        if let Some(ch) = Cholesky::new(reg.clone()) {
            if ch.l_dirty().diagonal().iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Some((reg, ch, current));
            }
        }
        if current >= cap {
            return None;
        }
        current = if current == 0.0 {
            cap.min(1e-12_f64.max(cap * 1e-10))
        } else {
            (current * 10.0).min(cap)
        };
    }
}

/// Symmetric eigendecomposition based square root; negative eigenvalues are clamped to zero.
pub(crate) fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Median of a list of finite values; `None` when empty.
pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}
