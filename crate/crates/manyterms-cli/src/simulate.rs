//! `simulate`: run the Monte Carlo study described by a config file.
//!
//! The config is plain text, one `key=value` per line, `#` comments allowed.
//! Required keys: `model` (1 through 6), `n`, `S`. Optional keys: `seed`
//! (default 0), `level` (default 0.95), `ladder` (comma-separated K values
//! overriding the full ladder), `max_degree` (default 10), `eps_mixture` and
//! `v_mixture` (components `weight:mean:variance` joined by commas,
//! standardized before use), `raw_g` (skip standardizing the nonparametric
//! part), and `threads`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;

use manyterms::simulation::{
    ladder_ks, mc_summary_csv, run_mc, standardize_mixture, DgpSpec, McConfig, MixtureLabel,
    MixtureSpec,
};

use crate::emit::emit;
use crate::error::CliError;

#[derive(Args)]
pub struct SimulateArgs {
    /// Plain-text key=value config file.
    pub config: PathBuf,
    /// Worker threads for the replication loop (default: one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the summary CSV here and the run metadata to `<out>.meta.txt`.
    /// Without it the CSV goes to stdout and the metadata to stderr.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct SimConfig {
    model: u8,
    n: usize,
    reps: usize,
    seed: u64,
    level: f64,
    ks: Option<Vec<usize>>,
    max_degree: usize,
    eps_mixture: Option<Vec<(f64, f64, f64)>>,
    v_mixture: Option<Vec<(f64, f64, f64)>>,
    raw_g: bool,
    threads: Option<usize>,
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Parse(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut sim = parse_config(&text)?;
    if let Some(seed) = args.seed {
        sim.seed = seed;
    }

    let mut dgp = DgpSpec::model(sim.model, sim.n)?;
    if let Some(raw) = &sim.eps_mixture {
        dgp.eps_dist = standardize_mixture(raw, MixtureLabel::Custom)?;
    }
    if let Some(raw) = &sim.v_mixture {
        dgp.v_dist = standardize_mixture(raw, MixtureLabel::Custom)?;
    }
    if sim.raw_g {
        dgp.standardize_g = false;
    }

    let d_z = dgp.d_z;
    let mut cfg = McConfig::study(dgp, sim.reps, sim.seed);
    cfg.level = sim.level;
    cfg.max_degree = sim.max_degree;
    cfg.ks = sim
        .ks
        .clone()
        .unwrap_or_else(|| ladder_ks(d_z, sim.max_degree));

    let threads = args.threads.or(sim.threads);
    let start = Instant::now();
    let rows = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Internal(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_mc(&cfg))?
        }
        None => run_mc(&cfg)?,
    };
    let wall = start.elapsed().as_secs_f64();

    let csv = mc_summary_csv(&rows);
    let meta = metadata(&cfg, threads, wall);
    match &args.out {
        Some(path) => {
            emit(&csv, Some(path))?;
            let mut meta_path = path.as_os_str().to_owned();
            meta_path.push(".meta.txt");
            emit(&meta, Some(Path::new(&meta_path)))
        }
        None => {
            emit(&csv, None)?;
            eprint!("{meta}");
            Ok(())
        }
    }
}

fn parse_config(text: &str) -> Result<SimConfig, CliError> {
    let mut model = None;
    let mut n = None;
    let mut reps = None;
    let mut seed = 0u64;
    let mut level = 0.95f64;
    let mut ks = None;
    let mut max_degree = 10usize;
    let mut eps_mixture = None;
    let mut v_mixture = None;
    let mut raw_g = false;
    let mut threads = None;

    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Parse(format!(
                "config line {}: expected key=value, got `{line}`",
                idx + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "model" => model = Some(parse_num(key, value)?),
            "n" => n = Some(parse_num(key, value)?),
            "S" => reps = Some(parse_num(key, value)?),
            "seed" => seed = parse_num(key, value)?,
            "level" => level = parse_num(key, value)?,
            "ladder" => ks = Some(parse_k_list(key, value)?),
            "max_degree" => max_degree = parse_num(key, value)?,
            "eps_mixture" => eps_mixture = Some(parse_mixture(key, value)?),
            "v_mixture" => v_mixture = Some(parse_mixture(key, value)?),
            "raw_g" => raw_g = parse_bool(key, value)?,
            "threads" => threads = Some(parse_num(key, value)?),
            _ => {
                return Err(CliError::Parse(format!("config: unknown key `{key}`")));
            }
        }
    }

    fn require<T>(opt: Option<T>, key: &str) -> Result<T, CliError> {
        opt.ok_or_else(|| CliError::Parse(format!("config: missing required key `{key}`")))
    }
    Ok(SimConfig {
        model: require(model, "model")?,
        n: require(n, "n")?,
        reps: require(reps, "S")?,
        seed,
        level,
        ks,
        max_degree,
        eps_mixture,
        v_mixture,
        raw_g,
        threads,
    })
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Parse(format!("config: cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(CliError::Parse(format!(
            "config: key `{key}` expects true or false, got `{value}`"
        ))),
    }
}

fn parse_k_list(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    value.split(',').map(|p| parse_num(key, p.trim())).collect()
}

/// Parses `weight:mean:variance` components joined by commas.
fn parse_mixture(key: &str, value: &str) -> Result<Vec<(f64, f64, f64)>, CliError> {
    let mut comps = Vec::new();
    for part in value.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(CliError::Parse(format!(
                "config: key `{key}` expects weight:mean:variance components, got `{part}`"
            )));
        }
        comps.push((
            parse_num(key, fields[0].trim())?,
            parse_num(key, fields[1].trim())?,
            parse_num(key, fields[2].trim())?,
        ));
    }
    Ok(comps)
}

fn render_mixture(m: &MixtureSpec) -> String {
    let comps = m
        .components()
        .iter()
        .map(|(w, mu, s2)| format!("{w}:{mu}:{s2}"))
        .collect::<Vec<_>>()
        .join(",");
    format!("{} {comps}", m.label().as_str())
}

/// Everything needed to reproduce and audit the run, one key per line.
fn metadata(cfg: &McConfig, threads: Option<usize>, wall: f64) -> String {
    let ks = cfg
        .ks
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mut s = String::new();
    writeln!(s, "command=simulate").unwrap();
    writeln!(s, "model={}", cfg.dgp.model_id).unwrap();
    writeln!(s, "n={}", cfg.dgp.n).unwrap();
    writeln!(s, "S={}", cfg.reps).unwrap();
    writeln!(s, "seed={}", cfg.master_seed).unwrap();
    writeln!(s, "level={}", cfg.level).unwrap();
    writeln!(s, "ladder={ks}").unwrap();
    writeln!(s, "max_degree={}", cfg.max_degree).unwrap();
    writeln!(s, "eps_mixture={}", render_mixture(&cfg.dgp.eps_dist)).unwrap();
    writeln!(s, "v_mixture={}", render_mixture(&cfg.dgp.v_dist)).unwrap();
    writeln!(s, "hetero_v={}", cfg.dgp.hetero_v).unwrap();
    writeln!(s, "standardize_g={}", cfg.dgp.standardize_g).unwrap();
    writeln!(s, "generator=chacha8+inverse-cdf").unwrap();
    match threads {
        Some(t) => writeln!(s, "threads={t}").unwrap(),
        None => writeln!(s, "threads=auto").unwrap(),
    }
    writeln!(s, "wall_seconds={wall:.3}").unwrap();
    s
}
