mod args;
mod commands;
mod common;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use error::CliError;
use output::Outputs;

fn run(cli: &Cli) -> Result<(), CliError> {
    let o = cli.command.output();
    let mut out = Outputs::new(&o.out, o.format);
    match &cli.command {
        Command::Gen(a) => commands::gen(a, &mut out)?,
        Command::Score(a) => commands::score(a, &mut out)?,
        Command::Exact(a) => commands::exact(a, &mut out)?,
        Command::Sample(a) => commands::sample(a, &mut out)?,
        Command::Features(a) => commands::features(a, &mut out)?,
        Command::Convergence(a) => commands::convergence(a, &mut out)?,
        Command::StructureEval(a) => commands::structure_eval(a, &mut out)?,
        Command::Predict(a) => commands::predict(a, &mut out)?,
        Command::Priors(a) => commands::priors(a, &mut out)?,
    }
    out.json(
        "manifest.json",
        &json!({
            "command": cli.command.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "seed": o.seed,
            "config": &cli.command,
        }),
    )?;
    out.commit()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            eprintln!("{}", text.lines().next().unwrap_or("usage error"));
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
