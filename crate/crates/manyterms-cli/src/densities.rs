//! `densities`: tabulate one of the error designs' densities on a grid.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use manyterms::simulation::{density_grid, MixtureLabel, MixtureSpec};

use crate::emit::emit;
use crate::error::CliError;

#[derive(Args)]
pub struct DensitiesArgs {
    /// Which design: gaussian, asymmetric, or bimodal.
    #[arg(long, default_value = "gaussian")]
    pub label: String,
    /// Left end of the grid.
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    pub from: f64,
    /// Right end of the grid.
    #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
    pub to: f64,
    /// Grid spacing.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub step: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &DensitiesArgs) -> Result<(), CliError> {
    let label = match args.label.as_str() {
        "gaussian" => MixtureLabel::Gaussian,
        "asymmetric" => MixtureLabel::Asymmetric,
        "bimodal" => MixtureLabel::Bimodal,
        other => {
            return Err(CliError::Parse(format!(
                "unknown density label `{other}`; expected gaussian, asymmetric, or bimodal"
            )))
        }
    };
    let spec = MixtureSpec::from_label(label)?;
    let grid = density_grid(&spec, args.from, args.to, args.step)?;

    let mut text = String::from("x,f\n");
    for (x, f) in &grid {
        writeln!(text, "{x:.6},{f:.6}").unwrap();
    }
    emit(&text, args.out.as_deref())
}
