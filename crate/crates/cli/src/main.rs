mod args;
mod commands;
mod error;
mod examples;
mod output;

use std::process::ExitCode;
use std::time::SystemTime;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, ExamplesAction};
use error::CliError;
use output::Outcome;

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Examples { action: ExamplesAction::List { filter } } => Ok(examples::list(filter.as_deref())),
        Command::Examples { action: ExamplesAction::Run { name } } => examples::run(name, c),
        Command::Sum(i) => commands::sum(&i.input, c),
        Command::Prod(i) => commands::prod(&i.input, c),
        Command::Prodint { input, tag } => commands::prodint(&input.input, *tag, c),
        Command::Stieltjes { input, mode, p, eps, rule } => commands::stieltjes(&input.input, *mode, *p, *eps, *rule, c),
        Command::Transport { surface, path } => commands::transport(surface.as_deref(), path, c),
        Command::Gode { input, form } => commands::gode(&input.input, *form, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", CliError::usage(e.to_string().trim()).to_line());
            return ExitCode::from(1);
        }
    };
    let timestamp = (!cli.common.no_timestamp).then(|| humantime::format_rfc3339_seconds(SystemTime::now()).to_string());
    let result = dispatch(&cli).and_then(|out| {
        let bytes = output::render(&out, cli.common.format, timestamp)?;
        output::emit(&bytes, cli.common.out.as_deref())?;
        Ok(out.negative)
    });
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(1)
        }
    }
}
