//! `accessmfs` command-line driver. Exit codes: 0 success, 1 a cell, run or
//! check failed, 2 bad usage or unreadable input. Errors go to stderr as one
//! JSON object with `kind` and `message`.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let failure = Failure::usage("usage", message.trim_end());
            eprintln!("{}", serde_json::json!({ "kind": failure.kind, "message": failure.message }));
            return ExitCode::from(failure.code);
        }
    };
    init_logging(cli.verbose);
    let outcome = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Ablation(a) => commands::ablation(a),
        Command::Synth(a) => commands::synth(a),
        Command::Validate(a) => commands::validate(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", serde_json::json!({ "kind": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
