//! The partially linear model estimator under many approximating terms:
//! beta_hat from the residual-on-residual regression, Gamma_hat, the
//! homoskedastic variance estimates with and without the degrees-of-freedom
//! correction, and the two confidence intervals they induce.
//!
//! The fit goes through the annihilator (regress My on MX) rather than one
//! joint least-squares solve in d + K unknowns; the two are algebraically
//! identical, and the annihilator route reuses a single factorization across
//! a whole ladder of K values.

use crate::projection::ProjectionWorkspace;
use crate::{normal, smallalg, Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// A fitted partially linear model.
#[derive(Debug, Clone)]
pub struct PlmFit {
    pub beta_hat: Array1<f64>,
    /// Gamma_hat = (MX)'(MX)/n.
    pub gamma_hat: Array2<f64>,
    /// Residuals M(y - X beta_hat).
    pub resid: Array1<f64>,
    /// Corrected variance estimate: RSS/(n - d - K).
    pub s2: f64,
    /// Uncorrected variance estimate: sigma2_hat = (n - d - K) s2 / n,
    /// stored exactly in that form.
    pub sigma2_hat: f64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub min_leverage_complement: f64,
}

/// One confidence interval coordinate. `corrected` distinguishes CI1 (built
/// from s) from CI0 (built from sigma_hat).
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub corrected: bool,
}

/// Fits beta by regressing the annihilated outcome on the annihilated
/// regressors. Requires n > d + K; the corrected variance has no meaning
/// otherwise and the asymptotics need K/n bounded below one.
pub fn fit_plm(y: ArrayView1<f64>, x: ArrayView2<f64>, w: &ProjectionWorkspace) -> Result<PlmFit> {
    let n = w.n();
    let k = w.k();
    let d = x.ncols();
    if y.len() != n || x.nrows() != n {
        return Err(Error::Dimension(format!(
            "y and X must have {n} rows (got {} and {})",
            y.len(),
            x.nrows()
        )));
    }
    if d == 0 {
        return Err(Error::Dimension("X has no columns".into()));
    }
    if n <= d + k {
        return Err(Error::Dimension(format!(
            "n must exceed d + K (n={n}, d={d}, K={k})"
        )));
    }
    let mx = w.apply_annihilator(x)?;
    let my = w.apply_annihilator_vec(y)?;
    let gram = mx.t().dot(&mx);
    let gamma_hat = &gram / n as f64;
    // A regressor column absorbed by the basis leaves ||MX_k|| near zero;
    // Cholesky alone would happily factor the resulting microscopic Gram
    // matrix, so singularity is judged relative to the raw column scale.
    for kk in 0..d {
        let raw: f64 = x.column(kk).iter().map(|v| v * v).sum();
        if gram[[kk, kk]] <= 1e-20 * raw {
            return Err(Error::SingularGamma);
        }
    }
    let l = smallalg::cholesky(gram.view()).ok_or(Error::SingularGamma)?;
    let rhs = mx.t().dot(&my);
    let beta_hat = smallalg::cholesky_solve(&l, rhs.view());
    let resid = &my - &mx.dot(&beta_hat);
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let dof = (n - d - k) as f64;
    let s2 = rss / dof;
    let sigma2_hat = dof * s2 / n as f64;
    let min_leverage_complement = w.leverage_complements().min;
    Ok(PlmFit {
        beta_hat,
        gamma_hat,
        resid,
        s2,
        sigma2_hat,
        n,
        d,
        k,
        min_leverage_complement,
    })
}

/// The theoretical target for Gamma_hat when v is homoskedastic with
/// E[vv'] = sigma_v^2 I_d: the matrix (1 - K/n) sigma_v^2 I_d. Used by
/// diagnostics and tests only.
pub fn gamma_population_limit(sigma_v2: f64, d: usize, k: usize, n: usize) -> Array2<f64> {
    let scale = (1.0 - k as f64 / n as f64) * sigma_v2;
    Array2::eye(d) * scale
}

/// The two homoskedastic variance matrices for beta_hat.
#[derive(Debug, Clone)]
pub struct OmegaHom {
    /// s^2 Gamma_hat^{-1} (degrees-of-freedom corrected).
    pub corrected: Array2<f64>,
    /// sigma2_hat Gamma_hat^{-1} (uncorrected).
    pub uncorrected: Array2<f64>,
}

/// Omega_hat = s^2 Gamma_hat^{-1}, plus the uncorrected variant that CI0
/// uses. The two differ by the exact factor n/(n - d - K).
pub fn omega_hom(fit: &PlmFit) -> Result<OmegaHom> {
    let l = smallalg::cholesky(fit.gamma_hat.view()).ok_or(Error::SingularGamma)?;
    let ginv = smallalg::cholesky_inverse(&l);
    Ok(OmegaHom {
        corrected: &ginv * fit.s2,
        uncorrected: &ginv * fit.sigma2_hat,
    })
}

/// Per-coordinate confidence intervals beta_k -+ q * se_k / sqrt(n), with
/// se_k = sigma_hat * (Gamma_hat^{-1})_kk^{1/2} when `corrected` is false
/// (CI0) and s * (Gamma_hat^{-1})_kk^{1/2} when true (CI1).
pub fn confidence_interval(
    fit: &PlmFit,
    level: f64,
    corrected: bool,
) -> Result<Vec<ConfidenceInterval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level must lie in (0,1), got {level}"
        )));
    }
    let q = normal::inv_cdf(0.5 + level / 2.0);
    let omega = omega_hom(fit)?;
    let var = if corrected {
        &omega.corrected
    } else {
        &omega.uncorrected
    };
    let nf = fit.n as f64;
    let out = (0..fit.d)
        .map(|kk| {
            let half = q * (var[[kk, kk]] / nf).sqrt();
            ConfidenceInterval {
                lower: fit.beta_hat[kk] - half,
                upper: fit.beta_hat[kk] + half,
                level,
                corrected,
            }
        })
        .collect();
    Ok(out)
}
