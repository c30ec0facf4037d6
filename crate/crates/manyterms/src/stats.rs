//! Small sample-statistics helpers used by diagnostics and tests: moments,
//! correlation, and an Anderson-Darling normality check for Monte Carlo
//! output streams.

use crate::normal;

/// Arithmetic mean. Returns NaN on an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by the count, not count minus one).
pub fn variance_population(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (divides by count minus one).
pub fn variance_sample(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson_corr(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "correlation needs equal lengths");
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// The 1% critical value for the composite-normality Anderson-Darling
/// statistic with estimated mean and variance (Stephens' table).
pub const AD_NORMALITY_CRIT_1PCT: f64 = 1.035;

/// Anderson-Darling statistic A^2* for composite normality (mean and
/// variance estimated from the sample), including Stephens' small-sample
/// correction factor (1 + 0.75/n + 2.25/n^2). Compare against
/// [`AD_NORMALITY_CRIT_1PCT`]; larger values reject normality.
pub fn anderson_darling_normality(xs: &[f64]) -> f64 {
    let n = xs.len();
    assert!(n >= 8, "Anderson-Darling needs a non-trivial sample");
    let m = mean(xs);
    let sd = variance_sample(xs).sqrt();
    let mut z: Vec<f64> = xs
        .iter()
        .map(|x| normal::cdf((x - m) / sd).clamp(1e-300, 1.0 - 1e-16))
        .collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let w = (2 * i + 1) as f64;
        acc += w * (z[i].ln() + (1.0 - z[n - 1 - i]).ln());
    }
    let a2 = -nf - acc / nf;
    a2 * (1.0 + 0.75 / nf + 2.25 / (nf * nf))
}
