//! Dense solvers for the tiny d x d systems that appear after the basis has
//! been projected out (d is the number of parametric regressors, typically
//! single digits). Cholesky doubles as the positive-definiteness check.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix,
/// or None when a pivot is not strictly positive.
pub fn cholesky(a: ArrayView2<f64>) -> Option<Array2<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return None;
    }
    let mut l = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solves A x = b given the Cholesky factor L of A.
pub fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let d = l.nrows();
    let mut y = b.to_owned();
    for i in 0..d {
        for k in 0..i {
            let t = l[[i, k]] * y[k];
            y[i] -= t;
        }
        y[i] /= l[[i, i]];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            let t = l[[k, i]] * y[k];
            y[i] -= t;
        }
        y[i] /= l[[i, i]];
    }
    y
}

/// Inverse of a symmetric positive definite matrix from its Cholesky factor.
pub fn cholesky_inverse(l: &Array2<f64>) -> Array2<f64> {
    let d = l.nrows();
    let mut inv = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut e = Array1::<f64>::zeros(d);
        e[j] = 1.0;
        let col = cholesky_solve(l, e.view());
        inv.column_mut(j).assign(&col);
    }
    // Symmetrize to scrub round-off drift between the triangles.
    for i in 0..d {
        for j in 0..i {
            let avg = 0.5 * (inv[[i, j]] + inv[[j, i]]);
            inv[[i, j]] = avg;
            inv[[j, i]] = avg;
        }
    }
    inv
}

/// Solves a general square system by LU with partial pivoting, or None when
/// a pivot underflows (singular to working precision). Needed where the
/// coefficient matrix is symmetric but not necessarily positive definite.
pub fn solve_lu(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Option<Array1<f64>> {
    let d = a.nrows();
    if a.ncols() != d || b.len() != d {
        return None;
    }
    let mut m = a.to_owned();
    let mut x = b.to_owned();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for j in 0..d {
        let mut piv = j;
        for i in j + 1..d {
            if m[[i, j]].abs() > m[[piv, j]].abs() {
                piv = i;
            }
        }
        if m[[piv, j]].abs() < 1e-13 * scale {
            return None;
        }
        if piv != j {
            for c in 0..d {
                m.swap([j, c], [piv, c]);
            }
            x.swap(j, piv);
        }
        for i in j + 1..d {
            let f = m[[i, j]] / m[[j, j]];
            for c in j..d {
                m[[i, c]] -= f * m[[j, c]];
            }
            x[i] -= f * x[j];
        }
    }
    for i in (0..d).rev() {
        let mut s = x[i];
        for c in i + 1..d {
            s -= m[[i, c]] * x[c];
        }
        x[i] = s / m[[i, i]];
    }
    Some(x)
}
