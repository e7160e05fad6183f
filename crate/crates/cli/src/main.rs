use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use legbench_cli::config;
use legbench_cli::{cmd_run, cmd_sweep, cmd_validate, CmdError, InjectFault, EXIT_CONFIG_ERROR};
use legbench_core::analysis::SweepKind;

#[derive(Parser)]
#[command(
    name = "legbench",
    about = "Deterministic tracking-controller benchmark for a three-joint robot leg",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKindArg {
    Deviation,
    Uncertainty,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured controllers once and write run + metrics CSVs
    Run {
        /// Configuration file (key = value lines; empty file for defaults)
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory for CSVs
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a benchmark sweep and write its long-format CSV
    Sweep {
        /// Which quantity to sweep
        #[arg(long, value_enum)]
        kind: SweepKindArg,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check model and path numerics, print the report
    Validate {
        #[arg(short, long)]
        config: PathBuf,
        /// Corrupt a named quantity to prove the failure path (testing hook)
        #[arg(long, hide = true, value_parser = ["jacobian"])]
        inject_fault: Option<String>,
    },
}

fn configure_threads() {
    if let Ok(v) = std::env::var("LEGBENCH_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32, CmdError> {
    match cli.command {
        Command::Run { config, out } => {
            let manifest = config::load(&config)?;
            cmd_run(&manifest, &out)
        }
        Command::Sweep { kind, config, out } => {
            let manifest = config::load(&config)?;
            let kind = match kind {
                SweepKindArg::Deviation => SweepKind::Deviation,
                SweepKindArg::Uncertainty => SweepKind::Uncertainty,
            };
            cmd_sweep(&manifest, kind, &out)
        }
        Command::Validate {
            config,
            inject_fault,
        } => {
            let manifest = config::load(&config)?;
            let inject = inject_fault.as_deref().map(|_| InjectFault::Jacobian);
            let (report, code) = cmd_validate(&manifest, inject);
            print!("{report}");
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG_ERROR as u8)
        }
    }
}
