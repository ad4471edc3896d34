//! Small dense helpers shared by the geometric modules.
//!
//! Complex vectors are realified with interleaved coordinates
//! `(Re z_1, Im z_1, Re z_2, Im z_2, ...)`, so multiplication by `i` acts as
//! the block `[[0, -1], [1, 0]]` on each pair.

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex, Complex64};

use crate::scalar::Scalar;

pub type CMat<T> = DMatrix<Complex<T>>;

pub fn conj_transpose<T: Scalar>(m: &CMat<T>) -> CMat<T> {
    m.transpose().map(|z| z.conj())
}

pub fn realify_vec(v: &DVector<Complex64>) -> DVector<f64> {
    DVector::from_fn(2 * v.len(), |k, _| {
        let z = v[k / 2];
        if k % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

pub fn complexify_vec(x: &DVector<f64>) -> DVector<Complex64> {
    DVector::from_fn(x.len() / 2, |k, _| Complex64::new(x[2 * k], x[2 * k + 1]))
}

/// Real `2m x 2m` matrix of a complex-linear map on `C^m`.
pub fn realify_mat(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    DMatrix::from_fn(2 * m.nrows(), 2 * m.ncols(), |r, c| {
        let z = m[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// Standard symplectic block `⊕ [[0, 1], [-1, 0]]` of size `2m`.
pub fn j_std(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * m, 2 * m, |r, c| {
        if r / 2 != c / 2 {
            0.0
        } else if r % 2 == 0 && c % 2 == 1 {
            1.0
        } else if r % 2 == 1 && c % 2 == 0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Gauss-Jordan inverse over any scalar field. Pivots on the entry of largest
/// magnitude, which is exact for rationals and stable enough for the small
/// well-conditioned Gram matrices it is used on.
pub fn invert<T: Scalar>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a = m.clone();
    let mut inv = DMatrix::<T>::identity(n, n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[(i, col)]
                .abs_f64()
                .partial_cmp(&a[(j, col)].abs_f64())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[(pivot, col)] == T::zero() {
            return None;
        }
        a.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        let p = a[(col, col)].clone();
        for k in 0..n {
            a[(col, k)] = a[(col, k)].clone() / p.clone();
            inv[(col, k)] = inv[(col, k)].clone() / p.clone();
        }
        for row in 0..n {
            if row == col || a[(row, col)] == T::zero() {
                continue;
            }
            let f = a[(row, col)].clone();
            for k in 0..n {
                let da = f.clone() * a[(col, k)].clone();
                let di = f.clone() * inv[(col, k)].clone();
                a[(row, k)] -= da;
                inv[(row, k)] -= di;
            }
        }
    }
    Some(inv)
}

/// Modified Gram-Schmidt on complex columns, run twice for orthogonality at
/// machine precision. Columns whose residual norm falls below `drop_tol` are
/// skipped. Returns the accepted orthonormal columns in order.
pub fn orthonormalize_columns(cols: &[DVector<Complex64>], drop_tol: f64) -> Vec<DVector<Complex64>> {
    let mut out: Vec<DVector<Complex64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut w = c.clone();
        for _ in 0..2 {
            for q in &out {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let norm = w.norm();
        if norm > drop_tol {
            out.push(w / Complex64::new(norm, 0.0));
        }
    }
    out
}

/// Largest absolute entry, or 0 for an empty matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Exact};

    #[test]
    fn realified_i_is_rotation_block() {
        let i = DMatrix::from_element(1, 1, Complex64::new(0.0, 1.0));
        let r = realify_mat(&i);
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        assert_eq!(j_std(1), -r);
    }

    #[test]
    fn exact_inverse_of_cartan_block() {
        let g = DMatrix::<Exact>::from_fn(3, 3, |i, j| {
            if i == j {
                ratio(2, 1)
            } else if i.abs_diff(j) == 1 {
                ratio(-1, 1)
            } else {
                ratio(0, 1)
            }
        });
        let inv = invert(&g).unwrap();
        assert_eq!(&g * &inv, DMatrix::<Exact>::identity(3, 3));
        assert_eq!(inv[(0, 0)], ratio(3, 4));
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let m = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(invert(&m).is_none());
    }
}
