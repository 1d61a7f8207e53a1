use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wban_core::cli::{run, Command, RunOptions};
use wban_core::config::{parse_config, RunConfig};
use wban_core::{SweepKind, Traffic};

#[derive(Parser)]
#[command(
    name = "wbansim",
    version,
    about = "WBAN link and RF exposure simulator"
)]
struct Cli {
    /// TOML configuration file; omitted keys take the reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Disable transmit power reduction.
    #[arg(long, global = true)]
    no_protocol: bool,
    /// Exit with status 3 if any cell exceeds the FCC SAR limit.
    #[arg(long, global = true)]
    fail_on_violation: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep one node over every grid cell and write heatmaps, CDFs and a report.
    Scenario {
        #[arg(value_enum)]
        kind: Option<Kind>,
    },
    /// Evaluate the `[scene]` placement once.
    Single {
        #[arg(long)]
        emergency: bool,
    },
    /// Power-control demonstration on the Tx (1,1) / relay (5,6) / Rx (15,15) layout.
    ProtocolDemo,
}

#[derive(Clone, Copy, ValueEnum)]
#[allow(clippy::enum_variant_names)] // names are the CLI spellings
enum Kind {
    RelaySweep,
    TxSweep,
    RxSweep,
}

impl From<Kind> for SweepKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::RelaySweep => SweepKind::RelaySweep,
            Kind::TxSweep => SweepKind::TxSweep,
            Kind::RxSweep => SweepKind::RxSweep,
        }
    }
}

fn load(path: Option<&PathBuf>) -> Result<RunConfig, String> {
    let Some(path) = path else {
        return parse_config("").map_err(|e| e.to_string());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(cli.config.as_ref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let command = match cli.command {
        Cmd::Scenario { kind } => Command::Scenario(kind.map(Into::into)),
        Cmd::Single { emergency } => Command::Single(emergency.then_some(Traffic::Emergency)),
        Cmd::ProtocolDemo => Command::ProtocolDemo,
    };
    let opts = RunOptions {
        out_dir: cli.out,
        no_protocol: cli.no_protocol,
        fail_on_violation: cli.fail_on_violation,
    };
    match run(&config, command, &opts) {
        Ok(artifacts) => {
            for w in &artifacts.warnings {
                eprintln!("{w}");
            }
            print!("{}", artifacts.summary.render());
            for f in &artifacts.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
