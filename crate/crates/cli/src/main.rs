use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use consensus_cli::commands::{self, CommandOutput, Overrides};
use consensus_cli::{CliError, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "ccons", version, about = "Coupled leader-following regulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SimulationFlags {
    /// Directory for CSV and report files.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Integration step, overriding the scenario.
    #[arg(long)]
    step: Option<f64>,
    /// Time horizon, overriding the scenario.
    #[arg(long)]
    t_final: Option<f64>,
    /// Crossing-time threshold; repeat for several. Overrides the scenario.
    #[arg(long = "threshold")]
    thresholds: Vec<f64>,
}

impl SimulationFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            step: self.step,
            t_final: self.t_final,
            thresholds: self.thresholds.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Report stability margins, disc separation and the k/Z split of the coupling.
    Analyze { scenario: PathBuf },
    /// Compute the feedback gain and write the scenario back with it made explicit.
    Synthesize {
        scenario: PathBuf,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Simulate a scenario to CSV with a JSON report alongside.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: SimulationFlags,
    },
    /// Run a built-in reference pair: fig4, fig5, fig6 or fig7.
    Reproduce {
        case: String,
        #[command(flatten)]
        flags: SimulationFlags,
    },
    /// Print a reference scenario file: `uncoupled` or `coupled`.
    Example { case: String },
}

fn dispatch(command: Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Analyze { scenario } => commands::analyze(&scenario),
        Command::Synthesize { scenario, output_dir } => commands::synthesize(&scenario, &output_dir),
        Command::Run { scenario, flags } => commands::run(&scenario, &flags.output_dir, &flags.overrides()),
        Command::Reproduce { case, flags } => commands::reproduce(&case, &flags.output_dir, &flags.overrides()),
        Command::Example { case } => commands::example(&case).map(|text| CommandOutput {
            exit_code: 0,
            report: serde_json::from_str(&text).expect("example is valid JSON"),
            message: None,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.report).expect("reports always serialize"));
            if let Some(message) = out.message {
                eprintln!("{message}");
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
