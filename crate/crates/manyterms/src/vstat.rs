//! Exact realization of the score decomposition S_n = B_n + Psi_n + U_n for
//! the partially linear model with oracle knowledge of the data generating
//! process, plus a brute-force Hoeffding decomposition for kernels over a
//! small finite support.
//!
//! With x = h + v and y = x'beta0 + g + eps, the score is
//! S_n = X'M(g + eps)/sqrt(n) and splits exactly into
//!   B_n      = H'(Mg)/sqrt(n)                      (pure bias),
//!   Psi_n    = diag_term + R_n                      (linear part),
//!   diag     = sum_i M_ii v_i eps_i / sqrt(n),
//!   R_n      = (V'(Mg) + H'(M eps))/sqrt(n),
//!   U_n      = sum_{i != j} M_ij v_i eps_j / sqrt(n) (degenerate part).

use crate::projection::ProjectionWorkspace;
use crate::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1};

/// Oracle components of a simulated sample: the regression functions and the
/// error terms that an estimator never observes.
#[derive(Debug, Clone)]
pub struct OracleData {
    /// g(z_i), length n.
    pub g: Array1<f64>,
    /// h(z_i) = E[x_i | z_i], n x d.
    pub h: Array2<f64>,
    /// v_i = x_i - h_i, n x d.
    pub v: Array2<f64>,
    /// eps_i, length n.
    pub eps: Array1<f64>,
}

impl OracleData {
    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn d(&self) -> usize {
        self.h.ncols()
    }

    /// x = h + v, reconstructed exactly from the stored components.
    pub fn x(&self) -> Array2<f64> {
        &self.h + &self.v
    }

    /// y = x'beta0 + g + eps for the given coefficient.
    pub fn y(&self, beta0: ArrayView1<f64>) -> Array1<f64> {
        self.x().dot(&beta0) + &self.g + &self.eps
    }
}

/// Realized decomposition components, one entry per regressor coordinate.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub s_n: Array1<f64>,
    pub b_n: Array1<f64>,
    pub psi_n: Array1<f64>,
    pub r_n: Array1<f64>,
    pub u_n: Array1<f64>,
    pub diag_term: Array1<f64>,
}

/// Computes every component of the decomposition for one sample, all through
/// the matrix-free annihilator. S_n is evaluated directly from the realized
/// data (not as the sum of the parts), so the identity S = B + Psi + U is a
/// genuine cross-check.
pub fn decompose_plm(
    w: &ProjectionWorkspace,
    oracle: &OracleData,
    beta0: ArrayView1<f64>,
) -> Result<DecompositionReport> {
    let n = w.n();
    let d = oracle.d();
    if oracle.n() != n || oracle.v.nrows() != n || oracle.eps.len() != n {
        return Err(Error::Dimension(format!(
            "oracle data must have {n} rows to match the workspace"
        )));
    }
    if oracle.v.ncols() != d || beta0.len() != d {
        return Err(Error::Dimension(
            "h, v, and beta0 must agree on the regressor dimension".into(),
        ));
    }
    let sqrt_n = (n as f64).sqrt();
    let mg = w.apply_annihilator_vec(oracle.g.view())?;
    let meps = w.apply_annihilator_vec(oracle.eps.view())?;

    let b_n = oracle.h.t().dot(&mg) / sqrt_n;
    let r_n = (oracle.v.t().dot(&mg) + oracle.h.t().dot(&meps)) / sqrt_n;

    let lev = w.leverage_complements_with_floor(0.0);
    let mut diag_term = Array1::<f64>::zeros(d);
    for kk in 0..d {
        let mut acc = 0.0;
        for i in 0..n {
            acc += lev.m_diag[i] * oracle.v[[i, kk]] * oracle.eps[i];
        }
        diag_term[kk] = acc / sqrt_n;
    }

    let mut u_n = Array1::<f64>::zeros(d);
    for kk in 0..d {
        u_n[kk] = w.offdiag_cross(oracle.v.column(kk), oracle.eps.view())? / sqrt_n;
    }

    let psi_n = &diag_term + &r_n;

    // Direct evaluation of the score from the realized sample.
    let x = oracle.x();
    let y = oracle.y(beta0);
    let score_in = &y - &x.dot(&beta0);
    let m_score = w.apply_annihilator_vec(score_in.view())?;
    let s_n = x.t().dot(&m_score) / sqrt_n;

    Ok(DecompositionReport {
        s_n,
        b_n,
        psi_n,
        r_n,
        u_n,
        diag_term,
    })
}

/// Oracle asymptotic variance under homoskedastic eps and spherical
/// conditional variance of v: Sigma_n = sigma_eps^2 (1/n) sum_i M_ii
/// cond_var_v_i I_d. With cond_var_v identically sigma_v^2 this collapses to
/// sigma_eps^2 sigma_v^2 (1 - K/n) I_d.
pub fn oracle_sigma_n_hom(
    w: &ProjectionWorkspace,
    sigma_eps2: f64,
    cond_var_v: ArrayView1<f64>,
    d: usize,
) -> Result<Array2<f64>> {
    let n = w.n();
    if cond_var_v.len() != n {
        return Err(Error::Dimension(format!(
            "conditional variances must have length {n}"
        )));
    }
    if d == 0 {
        return Err(Error::Dimension(
            "regressor dimension must be positive".into(),
        ));
    }
    let lev = w.leverage_complements_with_floor(0.0);
    let mut acc = 0.0;
    for i in 0..n {
        acc += lev.m_diag[i] * cond_var_v[i];
    }
    Ok(Array2::eye(d) * (sigma_eps2 * acc / n as f64))
}

/// Maximum enumerable support size for the discrete decomposition.
pub const MAX_SUPPORT: usize = 100;

/// A finite distribution for the brute-force Hoeffding decomposition.
#[derive(Debug, Clone)]
pub struct DiscreteDist {
    pub states: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(states: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if states.len() != probs.len() || states.is_empty() {
            return Err(Error::Config(
                "states and probabilities must be equal-length and nonempty".into(),
            ));
        }
        if states.len() > MAX_SUPPORT {
            return Err(Error::SupportTooLarge(states.len(), MAX_SUPPORT));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::Config("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { states, probs })
    }
}

/// Exact Hoeffding decomposition of the V-statistic
/// S = sum_{i,j} u_ij(W_i, W_j) (all ordered pairs, diagonal included)
/// for i.i.d. W with the given finite distribution. The kernel may depend on
/// the pair indices. Expectations are computed by exact enumeration over the
/// support, so B + Psi + U equals S up to floating-point rounding only.
///
/// Definitions, with u~_ij = u_ij + u_ji - E[u_ij + u_ji]:
///   B   = sum_i E[u_ii] + sum_{j<i} E[u_ij + u_ji],
///   Psi = sum_i (u_ii - E[u_ii]) + sum_{j<i} (E[u~_ij|W_i] + E[u~_ij|W_j]),
///   U   = sum_{j<i} (u~_ij - E[u~_ij|W_i] - E[u~_ij|W_j]).
pub fn hoeffding_decompose_discrete<F>(
    kernel: F,
    dist: &DiscreteDist,
    sample: &[f64],
) -> Result<(f64, f64, f64)>
where
    F: Fn(usize, usize, f64, f64) -> f64,
{
    let n = sample.len();
    if n == 0 {
        return Err(Error::Dimension("empty sample".into()));
    }
    let m = dist.states.len();
    let states = &dist.states;
    let probs = &dist.probs;

    let mut b = 0.0;
    let mut psi = 0.0;
    let mut u = 0.0;

    // Diagonal terms.
    for i in 0..n {
        let mut e_uii = 0.0;
        for s in 0..m {
            e_uii += probs[s] * kernel(i, i, states[s], states[s]);
        }
        b += e_uii;
        psi += kernel(i, i, sample[i], sample[i]) - e_uii;
    }

    // Unordered pairs j < i, symmetrized.
    for i in 1..n {
        for j in 0..i {
            let mut e_pair = 0.0;
            for s in 0..m {
                for t in 0..m {
                    e_pair += probs[s]
                        * probs[t]
                        * (kernel(i, j, states[s], states[t]) + kernel(j, i, states[t], states[s]));
                }
            }
            // E[u_ij + u_ji | W_i = w] with W_j integrated out.
            let cond_given = |w: f64, other_is_j: bool| -> f64 {
                let mut acc = 0.0;
                for t in 0..m {
                    let wt = states[t];
                    acc += probs[t]
                        * if other_is_j {
                            kernel(i, j, w, wt) + kernel(j, i, wt, w)
                        } else {
                            kernel(i, j, wt, w) + kernel(j, i, w, wt)
                        };
                }
                acc
            };
            let cond_i = cond_given(sample[i], true) - e_pair;
            let cond_j = cond_given(sample[j], false) - e_pair;
            let u_tilde =
                kernel(i, j, sample[i], sample[j]) + kernel(j, i, sample[j], sample[i]) - e_pair;
            b += e_pair;
            psi += cond_i + cond_j;
            u += u_tilde - cond_i - cond_j;
        }
    }
    Ok((b, psi, u))
}
