//! Monte Carlo study of the series PLM estimator: data generation for the
//! six model designs, a replication engine over the nested K-ladder, summary
//! metrics, and density grids for plotting the error distributions.
//!
//! Determinism contract: every replication seeds its own generator from
//! (master_seed, replication index) through a SplitMix64 step, all variates
//! come from inverse-CDF transforms of 53-bit uniforms, and aggregation is an
//! ordered reduction by replication index. Output is therefore bit-identical
//! across thread counts.

use crate::basis::{self, BasisSpec};
use crate::normal;
use crate::plm;
use crate::projection;
use crate::vstat::{self, OracleData};
use crate::{Error, Result};
use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

/// E[exp(t^2)] for t ~ Uniform(0,1), i.e. the integral of exp(t^2) on [0,1].
const EXP_SQ_M1: f64 = 1.462_651_745_907_181_6;
/// E[exp(2 t^2)] for t ~ Uniform(0,1).
const EXP_SQ_M2: f64 = 2.364_453_892_805_209_3;

/// The scale constant for the heteroskedastic design with d_z = 5: solves
/// E[varsigma (1 + ||z||^2)^2] = 1 under z ~ Uniform(-1,1)^5.
pub fn varsigma() -> f64 {
    varsigma_general(5)
}

/// Same constant for general d_z: with Q = sum_l z_l^2, E[z^2] = 1/3 and
/// E[z^4] = 1/5 give E[(1+Q)^2] = 1 + 2d/3 + 4d/45 + d^2/9, and varsigma is
/// its reciprocal. d = 5 yields 9/68, d = 1 yields 15/28, d = 0 yields 1.
pub fn varsigma_general(d_z: usize) -> f64 {
    let d = d_z as f64;
    1.0 / (1.0 + 2.0 * d / 3.0 + 4.0 * d / 45.0 + d * d / 9.0)
}

/// Which error family a mixture encodes; `Custom` marks caller-supplied
/// component lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureLabel {
    Gaussian,
    Asymmetric,
    Bimodal,
    Custom,
}

impl MixtureLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            MixtureLabel::Gaussian => "gaussian",
            MixtureLabel::Asymmetric => "asymmetric",
            MixtureLabel::Bimodal => "bimodal",
            MixtureLabel::Custom => "custom",
        }
    }
}

/// A mixture of normals with mean 0 and variance 1, stored as
/// (weight, mean, variance) components.
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    components: Vec<(f64, f64, f64)>,
    label: MixtureLabel,
}

impl MixtureSpec {
    /// The single-component standard normal.
    pub fn gaussian() -> Self {
        Self {
            components: vec![(1.0, 0.0, 1.0)],
            label: MixtureLabel::Gaussian,
        }
    }

    /// Default asymmetric design: components (0.3, -1, 0.5) and
    /// (0.7, 3/7, s^2) with s^2 = 59/98 chosen so the raw mixture already has
    /// mean 0 and variance 1.
    pub fn asymmetric_default() -> Self {
        let m2 = 3.0 / 7.0;
        let s2 = (1.0 - 0.3 * (1.0 + 0.5) - 0.7 * m2 * m2) / 0.7;
        standardize_mixture(&[(0.3, -1.0, 0.5), (0.7, m2, s2)], MixtureLabel::Asymmetric)
            .expect("default asymmetric mixture is well formed")
    }

    /// Default bimodal design: equal-weight components at -0.9 and 0.9 with
    /// variance 0.19, so 0.81 + 0.19 = 1 gives unit total variance.
    pub fn bimodal_default() -> Self {
        standardize_mixture(
            &[(0.5, -0.9, 0.19), (0.5, 0.9, 0.19)],
            MixtureLabel::Bimodal,
        )
        .expect("default bimodal mixture is well formed")
    }

    /// The default mixture for a label; `Custom` has no default.
    pub fn from_label(label: MixtureLabel) -> Result<Self> {
        match label {
            MixtureLabel::Gaussian => Ok(Self::gaussian()),
            MixtureLabel::Asymmetric => Ok(Self::asymmetric_default()),
            MixtureLabel::Bimodal => Ok(Self::bimodal_default()),
            MixtureLabel::Custom => Err(Error::Config(
                "custom mixtures need explicit components".into(),
            )),
        }
    }

    pub fn components(&self) -> &[(f64, f64, f64)] {
        &self.components
    }

    pub fn label(&self) -> MixtureLabel {
        self.label
    }

    /// First moment implied by the components.
    pub fn mean(&self) -> f64 {
        self.components.iter().map(|(w, m, _)| w * m).sum()
    }

    /// Second central moment implied by the components.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let second: f64 = self
            .components
            .iter()
            .map(|(w, m, s2)| w * (m * m + s2))
            .sum();
        second - mu * mu
    }

    /// Lebesgue density at x.
    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|(w, m, s2)| {
                let s = s2.sqrt();
                w * normal::pdf((x - m) / s) / s
            })
            .sum()
    }

    /// One draw from two independent Uniform(0,1) variates: the first picks
    /// the component, the second is the normal score. Always consuming
    /// exactly two uniforms keeps downstream draws aligned across mixtures
    /// with different component counts.
    pub fn draw_standard(&self, u_select: f64, u_score: f64) -> f64 {
        let mut cum = 0.0;
        let mut chosen = self.components.len() - 1;
        for (j, (w, _, _)) in self.components.iter().enumerate() {
            cum += w;
            if u_select <= cum {
                chosen = j;
                break;
            }
        }
        let (_, m, s2) = self.components[chosen];
        m + s2.sqrt() * normal::inv_cdf(u_score)
    }
}

/// Affinely standardizes a raw component list to mean 0, variance 1.
pub fn standardize_mixture(raw: &[(f64, f64, f64)], label: MixtureLabel) -> Result<MixtureSpec> {
    if raw.is_empty() {
        return Err(Error::Config("mixture needs at least one component".into()));
    }
    let wsum: f64 = raw.iter().map(|(w, _, _)| w).sum();
    if raw.iter().any(|(w, _, _)| *w <= 0.0) || (wsum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(
            "mixture weights must be positive and sum to 1".into(),
        ));
    }
    if let Some((_, _, s2)) = raw.iter().find(|(_, _, s2)| *s2 <= 0.0) {
        return Err(Error::NonpositiveVariance(format!(
            "component variance {s2} is not positive"
        )));
    }
    let mu: f64 = raw.iter().map(|(w, m, _)| w * m).sum();
    let second: f64 = raw.iter().map(|(w, m, s2)| w * (m * m + s2)).sum();
    let var = second - mu * mu;
    if var <= 0.0 {
        return Err(Error::NonpositiveVariance(format!(
            "mixture variance {var} is not positive"
        )));
    }
    let sd = var.sqrt();
    let components = raw
        .iter()
        .map(|(w, m, s2)| (*w, (m - mu) / sd, s2 / var))
        .collect();
    Ok(MixtureSpec { components, label })
}

/// Exact mean and standard deviation of exp(||z||^2) under
/// z ~ Uniform(-1,1)^{d_z}: coordinates are independent, so the moments are
/// powers of the one-dimensional integrals.
pub fn g_moments(d_z: usize) -> (f64, f64) {
    let mean = EXP_SQ_M1.powi(d_z as i32);
    let second = EXP_SQ_M2.powi(d_z as i32);
    (mean, (second - mean * mean).sqrt())
}

/// Full description of one simulated design.
#[derive(Debug, Clone)]
pub struct DgpSpec {
    pub model_id: u8,
    pub n: usize,
    pub d_z: usize,
    pub beta0: f64,
    pub eps_dist: MixtureSpec,
    pub v_dist: MixtureSpec,
    pub hetero_v: bool,
    pub varsigma: f64,
    /// Center and scale g = h = exp(||z||^2) to mean 0, variance 1. The raw
    /// function has standard deviation around 5.4 at d_z = 5, which drowns
    /// the unit-variance regression errors and with it every
    /// signal-to-noise-calibrated target; the standardized form keeps the
    /// same shape at a comparable scale. Disable to get the raw function.
    pub standardize_g: bool,
}

impl DgpSpec {
    /// The six study designs: error family (gaussian / asymmetric / bimodal
    /// for both eps and v) crossed with homoskedastic / heteroskedastic v.
    /// n = 500 and beta0 = 1 in the study; n stays a parameter.
    pub fn model(model_id: u8, n: usize) -> Result<Self> {
        let label = match model_id {
            1 | 2 => MixtureLabel::Gaussian,
            3 | 4 => MixtureLabel::Asymmetric,
            5 | 6 => MixtureLabel::Bimodal,
            _ => {
                return Err(Error::Config(format!(
                    "model must be between 1 and 6, got {model_id}"
                )))
            }
        };
        let d_z = 5;
        Ok(Self {
            model_id,
            n,
            d_z,
            beta0: 1.0,
            eps_dist: MixtureSpec::from_label(label)?,
            v_dist: MixtureSpec::from_label(label)?,
            hetero_v: model_id % 2 == 0,
            varsigma: varsigma_general(d_z),
            standardize_g: true,
        })
    }

    /// Conditional standard deviation of v given ||z||^2.
    fn sigma_v(&self, z_norm2: f64) -> f64 {
        if self.hetero_v {
            self.varsigma.sqrt() * (1.0 + z_norm2)
        } else {
            1.0
        }
    }
}

/// One simulated data set plus the oracle components behind it.
#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub y: Array1<f64>,
    pub x: Array2<f64>,
    pub z: Array2<f64>,
    pub oracle: OracleData,
}

/// Derives the seed for replication `r` from the master seed via one
/// SplitMix64 output step, so any subset of replications can be generated
/// independently and in any order.
pub fn rep_seed(master_seed: u64, r: u64) -> u64 {
    let mut z = master_seed.wrapping_add(r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A Uniform(0,1) variate from the top 53 bits, offset half a step so the
/// endpoints are excluded (safe input to the normal inverse CDF).
fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Draws one sample: z block first, then the v block, then the eps block,
/// each mixture draw consuming exactly two uniforms. The draw order is part
/// of the reproducibility contract.
pub fn draw_sample(dgp: &DgpSpec, seed: u64) -> Result<SimulatedSample> {
    let n = dgp.n;
    let d_z = dgp.d_z;
    if n == 0 || d_z == 0 {
        return Err(Error::Dimension(
            "sample size and d_z must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut z = Array2::<f64>::zeros((n, d_z));
    for i in 0..n {
        for l in 0..d_z {
            z[[i, l]] = 2.0 * unit_uniform(&mut rng) - 1.0;
        }
    }

    let norm2: Vec<f64> = (0..n).map(|i| z.row(i).dot(&z.row(i))).collect();

    let (g_mean, g_sd) = g_moments(d_z);
    let mut g = Array1::<f64>::zeros(n);
    for i in 0..n {
        let raw = norm2[i].exp();
        g[i] = if dgp.standardize_g {
            (raw - g_mean) / g_sd
        } else {
            raw
        };
    }

    let mut v = Array2::<f64>::zeros((n, 1));
    for i in 0..n {
        let u1 = unit_uniform(&mut rng);
        let u2 = unit_uniform(&mut rng);
        v[[i, 0]] = dgp.sigma_v(norm2[i]) * dgp.v_dist.draw_standard(u1, u2);
    }

    let mut eps = Array1::<f64>::zeros(n);
    for i in 0..n {
        let u1 = unit_uniform(&mut rng);
        let u2 = unit_uniform(&mut rng);
        eps[i] = dgp.eps_dist.draw_standard(u1, u2);
    }

    let mut h = Array2::<f64>::zeros((n, 1));
    h.column_mut(0).assign(&g);
    let x = &h + &v;
    let y = Array1::from_shape_fn(n, |i| x[[i, 0]] * dgp.beta0 + g[i] + eps[i]);

    Ok(SimulatedSample {
        y,
        x,
        z,
        oracle: OracleData { g, h, v, eps },
    })
}

/// The K-ladder breakpoints for a covariate dimension, up to a maximum
/// degree.
pub fn ladder_ks(d_z: usize, max_degree: usize) -> Vec<usize> {
    basis::ladder(d_z, max_degree)
        .iter()
        .map(|s| s.k())
        .collect()
}

/// Configuration of one Monte Carlo run.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub dgp: DgpSpec,
    /// Number of replications S.
    pub reps: usize,
    /// Strictly increasing prefix sizes of the term ladder to fit at.
    pub ks: Vec<usize>,
    /// Highest polynomial degree the term ladder is built to.
    pub max_degree: usize,
    pub level: f64,
    pub master_seed: u64,
}

impl McConfig {
    /// The study configuration: full 14-point ladder, 95% intervals.
    pub fn study(dgp: DgpSpec, reps: usize, master_seed: u64) -> Self {
        let ks = ladder_ks(dgp.d_z, 10);
        Self {
            dgp,
            reps,
            ks,
            max_degree: 10,
            level: 0.95,
            master_seed,
        }
    }
}

/// Per-replication, per-K fit record.
#[derive(Debug, Clone, Copy)]
pub struct RepRecord {
    pub rep: usize,
    pub k: usize,
    pub beta_hat: f64,
    /// Gamma_hat[0,0], the leading diagonal of the normalized Gram matrix.
    pub gamma_kk: f64,
    pub s2: f64,
    pub sigma2_hat: f64,
    pub ci0_hit: bool,
    pub ci1_hit: bool,
}

/// All surviving records of a run, ordered by (rep, K), plus the skip log.
#[derive(Debug, Clone)]
pub struct McRun {
    pub records: Vec<RepRecord>,
    pub reps: usize,
    pub skipped: usize,
    pub skip_log: Vec<String>,
}

fn one_replication(cfg: &McConfig, spec_kmax: &BasisSpec, r: usize) -> Result<Vec<RepRecord>> {
    let sample = draw_sample(&cfg.dgp, rep_seed(cfg.master_seed, r as u64))?;
    let bm = basis::build_basis(sample.z.view(), spec_kmax)?;
    let workspaces = projection::factorize_prefixes(bm.values.view(), &cfg.ks, None)?;
    let beta0 = cfg.dgp.beta0;
    let mut out = Vec::with_capacity(workspaces.len());
    for w in &workspaces {
        let fit = plm::fit_plm(sample.y.view(), sample.x.view(), w)?;
        let ci0 = plm::confidence_interval(&fit, cfg.level, false)?;
        let ci1 = plm::confidence_interval(&fit, cfg.level, true)?;
        out.push(RepRecord {
            rep: r,
            k: w.k(),
            beta_hat: fit.beta_hat[0],
            gamma_kk: fit.gamma_hat[[0, 0]],
            s2: fit.s2,
            sigma2_hat: fit.sigma2_hat,
            ci0_hit: ci0[0].lower <= beta0 && beta0 <= ci0[0].upper,
            ci1_hit: ci1[0].lower <= beta0 && beta0 <= ci1[0].upper,
        });
    }
    Ok(out)
}

/// Runs the replication engine: one sample per replication, reused across
/// every K in the ladder. Replications run in parallel; failed ones are
/// skipped and logged, and the run aborts when more than 1% fail.
pub fn mc_replications(cfg: &McConfig) -> Result<McRun> {
    if cfg.reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    if cfg.ks.is_empty() {
        return Err(Error::Config("no ladder points requested".into()));
    }
    let kmax = *cfg.ks.last().unwrap();
    let full = basis::ladder(cfg.dgp.d_z, cfg.max_degree)
        .pop()
        .expect("ladder is never empty");
    if full.k() < kmax {
        return Err(Error::Config(format!(
            "ladder at max_degree {} has only {} terms, K = {kmax} requested",
            cfg.max_degree,
            full.k()
        )));
    }
    let spec_kmax = full.prefix(kmax)?;

    let results: Vec<(usize, Result<Vec<RepRecord>>)> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| (r, one_replication(cfg, &spec_kmax, r)))
        .collect();

    let mut records = Vec::with_capacity(cfg.reps * cfg.ks.len());
    let mut skipped = 0usize;
    let mut skip_log = Vec::new();
    for (r, res) in results {
        match res {
            Ok(mut recs) => records.append(&mut recs),
            Err(e) => {
                skipped += 1;
                skip_log.push(format!("replication {r} skipped: {e}"));
            }
        }
    }
    if skipped as f64 > 0.01 * cfg.reps as f64 {
        return Err(Error::Config(format!(
            "{skipped} of {} replications failed; first: {}",
            cfg.reps,
            skip_log.first().map(String::as_str).unwrap_or("unknown")
        )));
    }
    Ok(McRun {
        records,
        reps: cfg.reps,
        skipped,
        skip_log,
    })
}

/// One row of the summary table, one per ladder K.
#[derive(Debug, Clone)]
pub struct McSummaryRow {
    pub k: usize,
    pub k_over_n: f64,
    pub bias: f64,
    pub sd: f64,
    pub rmse: f64,
    pub bias_over_sd: f64,
    pub cov_ci0: f64,
    pub cov_ci1: f64,
    pub avg_sigma_hat: f64,
    pub avg_s: f64,
}

/// Aggregates a run into per-K summary rows. The spread is the population
/// standard deviation over replications, so rmse^2 = bias^2 + sd^2 holds as
/// an identity; with a single replication sd = 0 and bias/sd is not finite.
pub fn summarize(run: &McRun, cfg: &McConfig) -> Vec<McSummaryRow> {
    let nf = cfg.dgp.n as f64;
    cfg.ks
        .iter()
        .map(|&k| {
            let recs: Vec<&RepRecord> = run.records.iter().filter(|rec| rec.k == k).collect();
            let count = recs.len().max(1) as f64;
            let mean_beta = recs.iter().map(|rec| rec.beta_hat).sum::<f64>() / count;
            let bias = mean_beta - cfg.dgp.beta0;
            let var = recs
                .iter()
                .map(|rec| {
                    let d = rec.beta_hat - mean_beta;
                    d * d
                })
                .sum::<f64>()
                / count;
            let sd = var.sqrt();
            let rmse = (bias * bias + var).sqrt();
            McSummaryRow {
                k,
                k_over_n: k as f64 / nf,
                bias,
                sd,
                rmse,
                bias_over_sd: bias / sd,
                cov_ci0: recs.iter().filter(|rec| rec.ci0_hit).count() as f64 / count,
                cov_ci1: recs.iter().filter(|rec| rec.ci1_hit).count() as f64 / count,
                avg_sigma_hat: recs.iter().map(|rec| rec.sigma2_hat.sqrt()).sum::<f64>() / count,
                avg_s: recs.iter().map(|rec| rec.s2.sqrt()).sum::<f64>() / count,
            }
        })
        .collect()
}

/// Replication engine plus aggregation.
pub fn run_mc(cfg: &McConfig) -> Result<Vec<McSummaryRow>> {
    let run = mc_replications(cfg)?;
    Ok(summarize(&run, cfg))
}

/// Renders summary rows as CSV with the fixed header. Floats use six
/// decimals; K is integral.
pub fn mc_summary_csv(rows: &[McSummaryRow]) -> String {
    let mut out =
        String::from("K,K_over_n,bias,sd,rmse,bias_over_sd,cov_ci0,cov_ci1,avg_sigma_hat,avg_s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.k,
            r.k_over_n,
            r.bias,
            r.sd,
            r.rmse,
            r.bias_over_sd,
            r.cov_ci0,
            r.cov_ci1,
            r.avg_sigma_hat,
            r.avg_s
        ));
    }
    out
}

/// Configuration for the decomposition diagnostic runs.
#[derive(Debug, Clone)]
pub struct DecompConfig {
    pub dgp: DgpSpec,
    pub reps: usize,
    /// Single ladder prefix size to decompose at.
    pub k: usize,
    pub max_degree: usize,
    pub master_seed: u64,
}

/// Realized decomposition components for one replication (d = 1 design).
#[derive(Debug, Clone, Copy)]
pub struct DecompositionRow {
    pub rep: usize,
    pub s_n: f64,
    pub b_n: f64,
    pub psi_n: f64,
    pub r_n: f64,
    pub u_n: f64,
    pub diag_term: f64,
}

/// Draws fresh samples and decomposes the score at one K, in replication
/// order.
pub fn run_decomposition(cfg: &DecompConfig) -> Result<Vec<DecompositionRow>> {
    if cfg.reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let full = basis::ladder(cfg.dgp.d_z, cfg.max_degree)
        .pop()
        .expect("ladder is never empty");
    if full.k() < cfg.k {
        return Err(Error::Config(format!(
            "ladder at max_degree {} has only {} terms, K = {} requested",
            cfg.max_degree,
            full.k(),
            cfg.k
        )));
    }
    let spec = full.prefix(cfg.k)?;
    let beta0 = Array1::from_elem(1, cfg.dgp.beta0);

    (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let sample = draw_sample(&cfg.dgp, rep_seed(cfg.master_seed, r as u64))?;
            let bm = basis::build_basis(sample.z.view(), &spec)?;
            let w = projection::factorize_prefixes(bm.values.view(), &[cfg.k], None)?
                .pop()
                .expect("one workspace per requested prefix");
            let rep = vstat::decompose_plm(&w, &sample.oracle, beta0.view())?;
            Ok(DecompositionRow {
                rep: r,
                s_n: rep.s_n[0],
                b_n: rep.b_n[0],
                psi_n: rep.psi_n[0],
                r_n: rep.r_n[0],
                u_n: rep.u_n[0],
                diag_term: rep.diag_term[0],
            })
        })
        .collect()
}

/// Pointwise density values of a mixture on a regular grid.
pub fn density_grid(m: &MixtureSpec, from: f64, to: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Config(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if to < from {
        return Err(Error::Config("grid end precedes grid start".into()));
    }
    let count = ((to - from) / step).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let x = from + i as f64 * step;
            (x, m.density(x))
        })
        .collect())
}
