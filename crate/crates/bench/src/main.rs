use std::process::ExitCode;

use clap::Parser;
use whd_bench::cli::{run, Cli};

fn main() -> anyhow::Result<ExitCode> {
    let ok = run(Cli::parse(), &mut std::io::stdout().lock())?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
