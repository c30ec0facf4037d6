//! Two estimators that share the pairwise structure of the series PLM score:
//! the JIVE2 instrumental-variables estimator, whose double sums run over the
//! fitted-value projector Q = I - M, and the leave-one-out integrated squared
//! density estimator, whose double sums run over a kernel that concentrates
//! as the bandwidth shrinks.

use crate::projection::{self, ProjectionWorkspace, RankMode};
use crate::smallalg;
use crate::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// One instrumental-variables sample: y on endogenous X with instruments Z.
#[derive(Debug, Clone)]
pub struct IvSample {
    pub y: Array1<f64>,
    pub x: Array2<f64>,
    pub z: Array2<f64>,
}

/// JIVE2 point estimate and its normalized denominator matrix.
#[derive(Debug, Clone)]
pub struct Jive2Fit {
    pub beta_hat: Array1<f64>,
    /// (1/n) sum_{i != j} Q_ij x_i x_j', the sample analog of Gamma.
    pub gamma_hat: Array2<f64>,
    pub n: usize,
    pub k: usize,
}

/// JIVE2: beta_hat solves
///   (sum_{i != j} Q_ij x_i x_j') b = sum_{i != j} Q_ij x_i y_j
/// with Q = Z(Z'Z)^{-1}Z'. Both double sums are evaluated matrix-free as
/// X'QA - sum_i Q_ii x_i a_i through the projection workspace on Z; leaving
/// the i = j terms out is what removes the many-instrument bias.
pub fn jive2_fit(s: &IvSample) -> Result<Jive2Fit> {
    let n = s.y.len();
    let d = s.x.ncols();
    if s.x.nrows() != n || s.z.nrows() != n {
        return Err(Error::Dimension(
            "y, X, and Z must have the same number of rows".into(),
        ));
    }
    if d == 0 {
        return Err(Error::Dimension("X has no columns".into()));
    }
    let w = projection::factorize(s.z.view(), None, RankMode::Strict)?;
    let k = w.k();

    // QX = X - MX and Qy = y - My.
    let qx = &s.x - &w.apply_annihilator(s.x.view())?;
    let qy = &s.y - &w.apply_annihilator_vec(s.y.view())?;
    let mut a = s.x.t().dot(&qx);
    let mut b = s.x.t().dot(&qy);

    let lev = w.leverage_complements_with_floor(0.0);
    for i in 0..n {
        let q_ii = 1.0 - lev.m_diag[i];
        for r in 0..d {
            for c in 0..d {
                a[[r, c]] -= q_ii * s.x[[i, r]] * s.x[[i, c]];
            }
            b[r] -= q_ii * s.x[[i, r]] * s.y[i];
        }
    }

    let beta_hat = smallalg::solve_lu(a.view(), b.view()).ok_or(Error::SingularDesign)?;
    Ok(Jive2Fit {
        beta_hat,
        gamma_hat: a / n as f64,
        n,
        k,
    })
}

/// The JIVE2-form off-diagonal bilinear sum sum_{i != j} Q_ij a_i b_j with
/// Q = I - M, computed from the same workspace that serves the PLM side.
/// On shared data this equals minus the M-form sum exactly, because
/// Q_ij = -M_ij for i != j.
pub fn jive2_offdiag_cross(
    w: &ProjectionWorkspace,
    a: ArrayView1<f64>,
    b: ArrayView1<f64>,
) -> Result<f64> {
    let n = w.n();
    if a.len() != n || b.len() != n {
        return Err(Error::Dimension(format!(
            "jive2_offdiag_cross expects two length-{n} vectors"
        )));
    }
    let mb = w.apply_annihilator_vec(b)?;
    let full = a.dot(&b) - a.dot(&mb);
    let lev = w.leverage_complements_with_floor(0.0);
    let mut diag = 0.0;
    for i in 0..n {
        diag += (1.0 - lev.m_diag[i]) * a[i] * b[i];
    }
    Ok(full - diag)
}

/// Product-kernel families with closed-form squared-kernel integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    GaussianProduct,
    EpanechnikovProduct,
}

/// A p-dimensional product kernel at bandwidth h, used as
/// K_h(u) = h^{-p} prod_l K(u_l / h).
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub p: usize,
    pub h: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, p: usize, h: f64) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("kernel dimension must be positive".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(format!(
                "bandwidth must be positive, got {h}"
            )));
        }
        Ok(Self { family, p, h })
    }

    fn base(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::GaussianProduct => crate::normal::pdf(u),
            KernelFamily::EpanechnikovProduct => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// K_h at a p-dimensional difference vector.
    pub fn eval(&self, diff: &[f64]) -> f64 {
        debug_assert_eq!(diff.len(), self.p);
        let mut prod = 1.0 / self.h.powi(self.p as i32);
        for &d in diff {
            prod *= self.base(d / self.h);
        }
        prod
    }

    /// R_K = int K(u)^2 du for the unscaled p-dimensional product kernel:
    /// (2 sqrt(pi))^{-p} for the gaussian, (3/5)^p for the epanechnikov.
    pub fn r_k(&self) -> f64 {
        match self.family {
            KernelFamily::GaussianProduct => {
                (2.0 * std::f64::consts::PI.sqrt()).powi(-(self.p as i32))
            }
            KernelFamily::EpanechnikovProduct => 0.6f64.powi(self.p as i32),
        }
    }
}

/// Leave-one-out estimate of the integrated squared density
/// beta_hat = (1/(n(n-1))) sum_{i != j} K_h(x_i - x_j).
pub fn isd_estimate(x: ArrayView2<f64>, k: &KernelSpec) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Dimension("need at least two observations".into()));
    }
    if x.ncols() != k.p {
        return Err(Error::Dimension(format!(
            "kernel dimension {} does not match {} data columns",
            k.p,
            x.ncols()
        )));
    }
    let mut diff = vec![0.0; k.p];
    let mut acc = 0.0;
    for i in 1..n {
        for j in 0..i {
            for l in 0..k.p {
                diff[l] = x[[i, l]] - x[[j, l]];
            }
            acc += k.eval(&diff);
        }
    }
    // Each unordered pair contributes twice to the i != j double sum, and the
    // kernel is symmetric, so doubling the lower triangle is exact.
    Ok(2.0 * acc / (n as f64 * (n as f64 - 1.0)))
}

/// Estimated variance contribution of the degenerate term:
/// Delta_hat / (n^2 h^p) with Delta_hat = beta_hat * R_K.
pub fn isd_small_bandwidth_variance(beta_hat: f64, k: &KernelSpec, n: usize) -> f64 {
    let delta_hat = beta_hat * k.r_k();
    delta_hat / ((n as f64).powi(2) * k.h.powi(k.p as i32))
}

/// Population data for the ISD decomposition: the smoothed density
/// f_h(x) = E[K_h(x - X)] and the smoothed functional beta_h = E[f_h(X)].
/// Only designs with closed forms are shipped.
#[derive(Debug, Clone, Copy)]
pub enum IsdOracle {
    /// X ~ N(0, I_p) with the gaussian product kernel: f_h is the
    /// N(0, (1+h^2) I_p) density and beta_h = (2 pi (2+h^2))^{-p/2}.
    GaussianUnit,
}

impl IsdOracle {
    pub fn gaussian_unit() -> Self {
        IsdOracle::GaussianUnit
    }

    /// beta_0 = int f_0^2 for the oracle's population density.
    pub fn beta0(&self, p: usize) -> f64 {
        match self {
            IsdOracle::GaussianUnit => (2.0 * std::f64::consts::PI.sqrt()).powi(-(p as i32)),
        }
    }

    /// beta_h = int f_h f_0, the target the estimator is unbiased for.
    pub fn beta_h(&self, k: &KernelSpec) -> Result<f64> {
        match (self, k.family) {
            (IsdOracle::GaussianUnit, KernelFamily::GaussianProduct) => {
                let per_axis = 2.0 * std::f64::consts::PI * (2.0 + k.h * k.h);
                Ok(per_axis.powf(-(k.p as f64) / 2.0))
            }
            _ => Err(Error::OracleUnavailable(
                "smoothed functional has no closed form for this kernel family".into(),
            )),
        }
    }

    /// f_h at one observation (length-p point).
    pub fn f_h(&self, point: &[f64], k: &KernelSpec) -> Result<f64> {
        match (self, k.family) {
            (IsdOracle::GaussianUnit, KernelFamily::GaussianProduct) => {
                let s2 = 1.0 + k.h * k.h;
                let mut dens = 1.0;
                for &xl in point {
                    dens *= crate::normal::pdf(xl / s2.sqrt()) / s2.sqrt();
                }
                Ok(dens)
            }
            _ => Err(Error::OracleUnavailable(
                "smoothed density has no closed form for this kernel family".into(),
            )),
        }
    }
}

/// Realized decomposition of sqrt(n)(beta_hat - beta_0) into
///   B_n   = sqrt(n)(beta_h - beta_0),
///   Psi_n = (2/sqrt(n)) sum_i (f_h(x_i) - beta_h),
///   U_n   = (2/(sqrt(n)(n-1))) sum_{j<i}
///             (K_h(x_i - x_j) - f_h(x_i) - f_h(x_j) + beta_h).
/// The three parts sum to sqrt(n)(beta_hat - beta_0) exactly.
pub fn isd_decompose(
    x: ArrayView2<f64>,
    k: &KernelSpec,
    oracle: &IsdOracle,
) -> Result<(f64, f64, f64)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Dimension("need at least two observations".into()));
    }
    if x.ncols() != k.p {
        return Err(Error::Dimension(format!(
            "kernel dimension {} does not match {} data columns",
            k.p,
            x.ncols()
        )));
    }
    let beta0 = oracle.beta0(k.p);
    let beta_h = oracle.beta_h(k)?;
    let nf = n as f64;
    let sqrt_n = nf.sqrt();

    let mut f_vals = vec![0.0; n];
    let mut point = vec![0.0; k.p];
    for i in 0..n {
        for l in 0..k.p {
            point[l] = x[[i, l]];
        }
        f_vals[i] = oracle.f_h(&point, k)?;
    }

    let b_n = sqrt_n * (beta_h - beta0);
    let psi_n = 2.0 / sqrt_n * f_vals.iter().map(|f| f - beta_h).sum::<f64>();

    let mut diff = vec![0.0; k.p];
    let mut acc = 0.0;
    for i in 1..n {
        for j in 0..i {
            for l in 0..k.p {
                diff[l] = x[[i, l]] - x[[j, l]];
            }
            acc += k.eval(&diff) - f_vals[i] - f_vals[j] + beta_h;
        }
    }
    let u_n = 2.0 / (sqrt_n * (nf - 1.0)) * acc;
    Ok((b_n, psi_n, u_n))
}
