//! Dense least-squares helpers.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution of `A x = b`.
#[derive(Clone, Debug)]
pub struct LeastNorm {
    pub x: DVector<f64>,
    /// `‖A x − b‖∞`
    pub residual: f64,
    pub rank: usize,
}

/// Singular values below `rcond · σ_max` are treated as zero.
pub fn least_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> LeastNorm {
    if a.ncols() == 0 || a.nrows() == 0 {
        let residual = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        return LeastNorm { x: DVector::zeros(a.ncols()), residual, rank: 0 };
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |s, v| s.max(*v));
    let eps = rcond * smax.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|s| **s > eps).count();
    let x = svd.solve(b, eps).expect("both factors were computed");
    let residual = (a * &x - b).iter().fold(0.0f64, |s, v| s.max(v.abs()));
    LeastNorm { x, residual, rank }
}

/// Numerical rank of a matrix.
pub fn rank(a: &DMatrix<f64>, rcond: f64) -> usize {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0;
    }
    let s = a.clone().singular_values();
    let smax = s.iter().fold(0.0f64, |m, v| m.max(*v));
    s.iter().filter(|v| **v > rcond * smax).count()
}

/// Orthonormal basis of the null space, as columns.
pub fn null_space(a: &DMatrix<f64>, rcond: f64) -> DMatrix<f64> {
    let c = a.ncols();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad with zero rows so that the thin factorization yields all of V
    let rows = a.nrows().max(c);
    let mut padded = DMatrix::zeros(rows, c);
    padded.view_mut((0, 0), (a.nrows(), c)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |s, v| s.max(*v));
    let eps = rcond * smax.max(f64::MIN_POSITIVE);
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= eps || smax == 0.0)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(c, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}
