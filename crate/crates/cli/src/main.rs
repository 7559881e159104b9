use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sa_procure_cli::{
    cmd_adapt, cmd_catalog_list, cmd_oracle, cmd_run, cmd_sweep, error_json, usage_error_json, Spec,
    DEFAULT_REPLICATIONS,
};

/// Simulated-annealing selection of cloud instance configurations.
///
/// SPEC is an experiment TOML file or `preset:<name>`.
#[derive(Debug, Parser)]
#[command(name = "sa-procure", version)]
struct Cli {
    /// Seed of the run, or master seed of replications. Defaults to the experiment's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV and JSON output.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Number of independent replications.
    #[arg(long, global = true)]
    replications: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one job stream and write its trace.
    Run { spec: Spec },
    /// Replicate the stream at several fixed temperatures.
    Sweep {
        spec: Spec,
        /// Comma-separated fixed temperatures.
        #[arg(long, value_delimiter = ',', default_value = "10,25,50")]
        temperatures: Vec<f64>,
    },
    /// Run a stream with workload change events and summarize each phase.
    Adapt { spec: Spec },
    /// Compare the fixed-temperature chain with its Gibbs distribution.
    Oracle {
        spec: Spec,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
    },
    /// List the families of a catalog file or `preset:<catalog>`.
    CatalogList { catalog: Option<String> },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", usage_error_json(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    let out = &cli.out_dir;
    let result = match &cli.command {
        Command::Run { spec } => cmd_run(spec, cli.seed, out),
        Command::Sweep { spec, temperatures } => cmd_sweep(
            spec,
            temperatures,
            cli.replications.unwrap_or(DEFAULT_REPLICATIONS),
            cli.seed,
            out,
        ),
        Command::Adapt { spec } => cmd_adapt(spec, cli.seed, cli.replications, out),
        Command::Oracle { spec, tau, steps } => cmd_oracle(spec, *tau, *steps, cli.seed, out),
        Command::CatalogList { catalog } => cmd_catalog_list(catalog.as_deref()),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote       {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
