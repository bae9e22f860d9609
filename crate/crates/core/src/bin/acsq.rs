use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Affine coherent state quantization experiments.
#[derive(Parser)]
#[command(name = "acsq", version)]
struct Args {
    /// Experiment configuration (TOML, `schema = 1`).
    #[arg(long)]
    config: PathBuf,
    /// One of check-identity, quantize, trace, compare-parametrizations,
    /// commutators, boundedness. Defaults to the configuration's `command`.
    #[arg(long)]
    command: Option<String>,
    /// Directory for `<name>.result.json` and `<name>.table.csv`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Reserved: every computation is deterministic.
    #[arg(long)]
    seedless: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { acsq::cli::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let (code, text) = acsq::cli::run(&args.config, args.command.as_deref(), &args.out);
    if code == acsq::cli::EXIT_CONFIG {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    ExitCode::from(code as u8)
}
