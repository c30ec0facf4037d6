//! `fit`: estimate the partially linear model from a CSV file.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use ndarray::{Array1, Array2};

use manyterms::basis::{build_basis, ladder};
use manyterms::plm::{confidence_interval, fit_plm, omega_hom};
use manyterms::projection::{factorize, RankMode};
use manyterms::simulation::ladder_ks;

use crate::emit::emit;
use crate::error::CliError;

/// Highest polynomial degree the term ladder is built to.
const MAX_DEGREE: usize = 10;

#[derive(Args)]
pub struct FitArgs {
    /// Input CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Outcome column.
    #[arg(long)]
    pub y: String,
    /// Regressor columns, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    /// Covariate columns entering the series part, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub z: Vec<String>,
    /// Number of leading ladder terms to project on.
    #[arg(long = "K", conflicts_with = "ladder_step")]
    pub k: Option<usize>,
    /// 1-based position in the ladder's K sequence, as an alternative to --K.
    #[arg(long)]
    pub ladder_step: Option<usize>,
    /// Confidence level for the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fail when the basis is rank deficient (the default).
    #[arg(long, conflicts_with = "permissive")]
    pub strict: bool,
    /// Drop linearly dependent basis columns instead of failing.
    #[arg(long)]
    pub permissive: bool,
}

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    let mut seen = HashSet::new();
    for name in std::iter::once(&args.y).chain(&args.x).chain(&args.z) {
        if !seen.insert(name.as_str()) {
            return Err(CliError::Parse(format!(
                "column `{name}` is requested more than once; --y, --x, and --z must be disjoint"
            )));
        }
    }

    let data = read_columns(&args.input, &args.y, &args.x, &args.z)?;
    let n = data.y.len();
    let d = args.x.len();
    let d_z = args.z.len();

    let specs = ladder(d_z, MAX_DEGREE);
    let full = specs.last().expect("ladder is never empty");
    let k = resolve_k(args, d_z, full.k())?;
    if n <= d + k {
        return Err(CliError::Parse(format!(
            "need n > d + K to fit, got n = {n}, d = {d}, K = {k}"
        )));
    }

    let spec = full.prefix(k)?;
    let bm = build_basis(data.z.view(), &spec)?;
    let mode = if args.permissive {
        RankMode::Permissive
    } else {
        RankMode::Strict
    };
    let w = factorize(bm.values.view(), None, mode)?;
    if !w.dropped().is_empty() {
        eprintln!(
            "note: dropped {} dependent basis column(s) at positions {:?}",
            w.dropped().len(),
            w.dropped()
        );
    }

    let fit = fit_plm(data.y.view(), data.x.view(), &w)?;
    let omega = omega_hom(&fit)?;
    let ci0 = confidence_interval(&fit, args.level, false)?;
    let ci1 = confidence_interval(&fit, args.level, true)?;

    let mut report = String::new();
    writeln!(report, "n={n}").unwrap();
    writeln!(report, "d={d}").unwrap();
    writeln!(report, "K={}", fit.k).unwrap();
    writeln!(report, "level={}", args.level).unwrap();
    for (j, name) in args.x.iter().enumerate() {
        let se0 = (omega.uncorrected[[j, j]] / n as f64).sqrt();
        let se1 = (omega.corrected[[j, j]] / n as f64).sqrt();
        writeln!(report, "beta_hat_{name}={}", fit.beta_hat[j]).unwrap();
        writeln!(report, "se0_{name}={se0}").unwrap();
        writeln!(report, "se1_{name}={se1}").unwrap();
        writeln!(report, "ci0_{name}=[{},{}]", ci0[j].lower, ci0[j].upper).unwrap();
        writeln!(report, "ci1_{name}=[{},{}]", ci1[j].lower, ci1[j].upper).unwrap();
    }
    writeln!(report, "s2={}", fit.s2).unwrap();
    writeln!(report, "sigma2_hat={}", fit.sigma2_hat).unwrap();
    writeln!(report, "min_m_ii={}", fit.min_leverage_complement).unwrap();
    emit(&report, args.out.as_deref())
}

/// Turns --K or --ladder-step into a term count; exactly one must be given.
fn resolve_k(args: &FitArgs, d_z: usize, k_max: usize) -> Result<usize, CliError> {
    let k = match (args.k, args.ladder_step) {
        (Some(k), None) => k,
        (None, Some(step)) => {
            let ks = ladder_ks(d_z, MAX_DEGREE);
            if step == 0 || step > ks.len() {
                return Err(CliError::Parse(format!(
                    "--ladder-step must be between 1 and {}, got {step}",
                    ks.len()
                )));
            }
            ks[step - 1]
        }
        (None, None) => {
            return Err(CliError::Parse(
                "one of --K or --ladder-step is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("the flags are declared mutually exclusive"),
    };
    if k == 0 || k > k_max {
        return Err(CliError::Parse(format!(
            "K must be between 1 and {k_max}, got {k}"
        )));
    }
    Ok(k)
}

struct Columns {
    y: Array1<f64>,
    x: Array2<f64>,
    z: Array2<f64>,
}

/// Reads the named columns from a headered CSV file, reporting the first
/// offending row and column on failure.
fn read_columns(path: &Path, y: &str, x: &[String], z: &[String]) -> Result<Columns, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Parse(format!("cannot read header of {}: {e}", path.display())))?
        .clone();
    let find = |name: &str| -> Result<usize, CliError> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Parse(format!("column `{name}` not found in {}", path.display()))
        })
    };
    let y_idx = find(y)?;
    let x_idx: Vec<usize> = x.iter().map(|c| find(c)).collect::<Result<_, _>>()?;
    let z_idx: Vec<usize> = z.iter().map(|c| find(c)).collect::<Result<_, _>>()?;

    let mut ys = Vec::new();
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (row, record) in reader.records().enumerate() {
        // Rows are reported 1-based counting the header line.
        let line = row + 2;
        let record = record.map_err(|e| CliError::Parse(format!("row {line}: {e}")))?;
        let cell = |idx: usize, name: &str| -> Result<f64, CliError> {
            let raw = record
                .get(idx)
                .ok_or_else(|| CliError::Parse(format!("row {line}: missing column `{name}`")))?;
            raw.parse::<f64>().map_err(|_| {
                CliError::Parse(format!(
                    "row {line}, column `{name}`: cannot parse `{raw}` as a number"
                ))
            })
        };
        ys.push(cell(y_idx, y)?);
        for (i, name) in x.iter().enumerate() {
            xs.push(cell(x_idx[i], name)?);
        }
        for (i, name) in z.iter().enumerate() {
            zs.push(cell(z_idx[i], name)?);
        }
    }
    let n = ys.len();
    if n == 0 {
        return Err(CliError::Parse(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    let x_arr = Array2::from_shape_vec((n, x.len()), xs).expect("row-major by construction");
    let z_arr = Array2::from_shape_vec((n, z.len()), zs).expect("row-major by construction");
    Ok(Columns {
        y: Array1::from_vec(ys),
        x: x_arr,
        z: z_arr,
    })
}
