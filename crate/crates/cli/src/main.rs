use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod cache;
mod commands;

/// Spectral presheaf toolkit: builds context posets from a scenario file
/// and runs measure, reconstruction and contextuality checks on them.
#[derive(Debug, Parser)]
#[command(name = "specsheaf", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Scenario file (JSON, `//` comments allowed).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Override a tolerance, e.g. `tol_order=1e-8`. Repeatable.
    #[arg(long = "tol-override", value_name = "NAME=VALUE", global = true)]
    pub tol_override: Vec<String>,

    /// Directory for cached posets.
    #[arg(long, env = "SPECSHEAF_CACHE_DIR", global = true)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the context poset and report its order structure.
    Build,
    /// Evaluate a state-induced measure on a subobject.
    Measure {
        #[arg(long)]
        state: String,
        /// `top`, `bottom`, `dasein:<projection>`, `pseudo:<vector state>` or `file:<path>`.
        #[arg(long)]
        subobject: String,
        /// Also write the measure tabulated over the scenario's subobjects.
        #[arg(long, value_name = "PATH")]
        emit_table: Option<PathBuf>,
    },
    /// Daseinise a projection into a clopen subobject.
    Daseinise {
        /// Scenario projection name or `frame:<k>`.
        #[arg(long)]
        projection: String,
    },
    /// Reconstruct a density state from a measure on the default frame.
    Reconstruct {
        #[arg(long, conflicts_with = "table", required_unless_present = "table")]
        state: Option<String>,
        #[arg(long)]
        table: Option<String>,
        /// Compare the result with the inducing state (requires `--state`).
        #[arg(long, requires = "state")]
        round_trip: bool,
    },
    /// Search for a global section of the spectral presheaf.
    Ks {
        /// Node budget; defaults to the scenario cap.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Expectation value of an operator via the measure formula.
    Expect {
        #[arg(long)]
        operator: String,
        #[arg(long)]
        state: String,
    },
    /// Check the measure axioms on sampled subobject pairs.
    CheckAxioms {
        #[arg(long, conflicts_with = "table", required_unless_present = "table")]
        state: Option<String>,
        #[arg(long)]
        table: Option<String>,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.global, &cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}
