//! Shared helpers for the acceptance suite: a small deterministic generator
//! and dense reference constructions that deliberately avoid the library's
//! numerical paths, so agreement between the two is evidence rather than
//! tautology.

#![allow(dead_code)]

use manyterms::normal;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// SplitMix64, enough randomness for test fixtures.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on (0,1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on (-1,1).
    pub fn uniform_pm1(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn normal(&mut self) -> f64 {
        normal::inv_cdf(self.uniform())
    }

    pub fn normal_matrix(&mut self, n: usize, k: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, k), |_| self.normal())
    }

    pub fn normal_vector(&mut self, n: usize) -> Array1<f64> {
        Array1::from_shape_fn(n, |_| self.normal())
    }
}

/// Orthonormal basis of the column span by modified Gram-Schmidt with one
/// reorthogonalization pass. Columns whose residual collapses (dependent)
/// must not be fed to this helper; tests use full-rank fixtures.
pub fn mgs_q(p: ArrayView2<f64>) -> Array2<f64> {
    let n = p.nrows();
    let k = p.ncols();
    let mut q = Array2::<f64>::zeros((n, k));
    for j in 0..k {
        let mut col: Array1<f64> = p.column(j).to_owned();
        for _pass in 0..2 {
            for c in 0..j {
                let qc = q.column(c);
                let coef = qc.dot(&col);
                for i in 0..n {
                    col[i] -= coef * qc[i];
                }
            }
        }
        let nrm = col.dot(&col).sqrt();
        assert!(nrm > 1e-12, "test fixture must be numerically full rank");
        for i in 0..n {
            q[[i, j]] = col[i] / nrm;
        }
    }
    q
}

/// Dense annihilator I - QQ' built from the Gram-Schmidt basis.
pub fn dense_annihilator(p: ArrayView2<f64>) -> Array2<f64> {
    let n = p.nrows();
    let q = mgs_q(p);
    let mut m = Array2::<f64>::eye(n);
    let qqt = q.dot(&q.t());
    m -= &qqt;
    m
}

/// Gaussian elimination with partial pivoting; panics on a singular system
/// (test fixtures are chosen nonsingular).
pub fn solve_gauss(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let d = a.nrows();
    assert_eq!(a.ncols(), d);
    assert_eq!(b.len(), d);
    let mut m = a.clone();
    let mut x = b.clone();
    for j in 0..d {
        let mut piv = j;
        for i in j + 1..d {
            if m[[i, j]].abs() > m[[piv, j]].abs() {
                piv = i;
            }
        }
        assert!(m[[piv, j]].abs() > 1e-12, "singular test system");
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
    x
}

/// Ordinary least squares through the normal equations, for use on
/// well-conditioned fixtures only.
pub fn ols(design: ArrayView2<f64>, y: ArrayView1<f64>) -> Array1<f64> {
    let xtx = design.t().dot(&design);
    let xty = design.t().dot(&y);
    solve_gauss(&xtx, &xty)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sd_sample(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Three Monte Carlo standard errors of the mean of `v`.
pub fn three_se(v: &[f64]) -> f64 {
    3.0 * sd_sample(v) / (v.len() as f64).sqrt()
}

pub fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
