use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use safeflight::cli::{
    compare_command, parse_controller, parse_override, run_command, RunManifest, EXIT_ERROR,
};

#[derive(Parser)]
#[command(name = "safeflight", about = "Quadrotor safety-critical control workbench")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario with one controller.
    Run {
        /// Scenario configuration file (TOML).
        #[arg(long)]
        scenario: PathBuf,
        /// Controller: ea, clf-cbf-qp or mpcbf.
        #[arg(long)]
        controller: String,
        /// Output directory for trace.csv / metrics.json.
        #[arg(long)]
        out: PathBuf,
        /// Scenario seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Dotted-key config overrides, e.g. --set mpcbf.n_c=5.
        #[arg(long = "set", value_parser = parse_override)]
        overrides: Vec<(String, String)>,
        /// Also write the per-tick predictive-controller debug CSV.
        #[arg(long)]
        debug_mpcbf: bool,
    },
    /// Run several controllers on the identical scenario and tabulate.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated controller list.
        #[arg(long, value_delimiter = ',')]
        controllers: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "set", value_parser = parse_override)]
        overrides: Vec<(String, String)>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Run {
            scenario,
            controller,
            out,
            seed,
            overrides,
            debug_mpcbf,
        } => {
            let controller = match parse_controller(&controller) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_ERROR as u8);
                }
            };
            let manifest = RunManifest {
                scenario,
                controller,
                out_dir: out,
                seed,
                overrides,
                debug_mpcbf,
            };
            match run_command(&manifest) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("{e}");
                    EXIT_ERROR
                }
            }
        }
        Command::Compare {
            scenario,
            controllers,
            out,
            seed,
            overrides,
        } => {
            let parsed: Result<Vec<_>, _> =
                controllers.iter().map(|s| parse_controller(s)).collect();
            match parsed {
                Ok(list) => match compare_command(&scenario, &list, &out, seed, &overrides) {
                    Ok((table, _)) => {
                        print!("{table}");
                        0
                    }
                    Err(e) => {
                        eprintln!("{e}");
                        EXIT_ERROR
                    }
                },
                Err(e) => {
                    eprintln!("{e}");
                    EXIT_ERROR
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
