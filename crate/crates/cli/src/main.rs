// `!(x > a)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod table;

use std::io::IsTerminal;
use std::process::ExitCode;

use clap::Parser;

use args::{proposition_from_config, Cli, Command, Settings};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal()
}

fn paint(text: &str, code: &str) -> String {
    if color_enabled() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn run(cli: Cli) -> anyhow::Result<(commands::Report, Settings)> {
    let name = cli.command.name();
    Ok(match &cli.command {
        Command::Weights(o) => {
            let s = Settings::resolve(name, o, None)?;
            (commands::weights(&s)?, s)
        }
        Command::Expect(o) => {
            let s = Settings::resolve(name, o, None)?;
            (commands::expect(&s)?, s)
        }
        Command::Expand { proposition, options } => {
            if let Some(from_file) = proposition_from_config(options)? {
                if from_file != *proposition {
                    anyhow::bail!("config file names proposition {from_file:?}, command line {proposition:?}");
                }
            }
            let s = Settings::resolve(name, options, None)?;
            (commands::expand(*proposition, &s)?, s)
        }
        Command::Mc(o) => {
            let s = Settings::resolve(name, o, None)?;
            (commands::mc(&s)?, s)
        }
        Command::Verify { tol_scale, options } => {
            let s = Settings::resolve(name, options, *tol_scale)?;
            (commands::verify(&s)?, s)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let (report, settings) = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: {e:#}", paint("error", "31"));
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = report.table.write(settings.format, settings.out.as_deref()) {
        eprintln!("{}: {e:#}", paint("error", "31"));
        return ExitCode::from(EXIT_USAGE);
    }
    if report.failures.is_empty() {
        if name == "verify" {
            eprintln!("{} all {} checks passed", paint("PASS", "32"), report.table.rows.len());
        }
        ExitCode::SUCCESS
    } else {
        for f in &report.failures {
            eprintln!("{} {name}: {f}", paint("FAIL", "31"));
        }
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}
