//! `decompose`: per-replication score decompositions at a fixed K.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use manyterms::simulation::{run_decomposition, DecompConfig, DgpSpec};

use crate::emit::emit;
use crate::error::CliError;

#[derive(Args)]
pub struct DecomposeArgs {
    /// Study design id, 1 through 6.
    #[arg(long, default_value_t = 1)]
    pub model: u8,
    /// Sample size per replication.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Number of replications.
    #[arg(long = "S", default_value_t = 200)]
    pub reps: usize,
    /// Ladder prefix size to decompose at.
    #[arg(long = "K")]
    pub k: usize,
    /// Highest polynomial degree the ladder is built to.
    #[arg(long, default_value_t = 10)]
    pub max_degree: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &DecomposeArgs) -> Result<(), CliError> {
    let dgp = DgpSpec::model(args.model, args.n)?;
    let cfg = DecompConfig {
        dgp,
        reps: args.reps,
        k: args.k,
        max_degree: args.max_degree,
        master_seed: args.seed,
    };
    let rows = run_decomposition(&cfg)?;

    // Full-precision floats so the identity S_n = B_n + Psi_n + U_n survives
    // the round trip through text.
    let mut text = String::from("S_n,B_n,Psi_n,R_n,U_n,diag_term\n");
    for row in &rows {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            row.s_n, row.b_n, row.psi_n, row.r_n, row.u_n, row.diag_term
        )
        .unwrap();
    }
    emit(&text, args.out.as_deref())
}
