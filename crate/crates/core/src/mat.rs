//! Small dense-matrix helpers used by the moment kernels and recursions.

use ndarray::{Array2, ArrayView1, ArrayView2};

/// Outer product `a bᵀ`.
pub(crate) fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let (n, m) = (a.len(), b.len());
    Array2::from_shape_fn((n, m), |(i, j)| a[i] * b[j])
}

/// `Tr{A B}` without forming the product.
pub(crate) fn trace_product(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `M · D_v`, i.e. column `j` scaled by `v[j]`.
pub(crate) fn scale_cols(m: &Array2<f64>, v: ArrayView1<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        for (x, &s) in row.iter_mut().zip(v.iter()) {
            *x *= s;
        }
    }
    out
}

/// `(M + Mᵀ) / 2`.
pub(crate) fn symmetrize(m: &Array2<f64>) -> Array2<f64> {
    let n = m.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite
/// matrix, or `None` when the matrix is not positive definite.
pub(crate) fn cholesky_lower(m: ArrayView2<f64>) -> Option<Array2<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return None;
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[(i, j)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// `L g` for a lower-triangular factor, writing into `out`.
pub(crate) fn lower_triangular_apply(l: &Array2<f64>, g: &[f64], out: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += l[(i, j)] * g[j];
        }
        out[i] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn trace_product_matches_explicit_trace() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[5.0, 6.0], [7.0, 8.0]];
        let explicit = a.dot(&b).diag().sum();
        assert_abs_diff_eq!(trace_product(a.view(), b.view()), explicit, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let l = cholesky_lower(m.view()).expect("positive definite");
        let rec = l.dot(&l.t());
        for (x, y) in rec.iter().zip(m.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky_lower(m.view()).is_none());
    }
}
