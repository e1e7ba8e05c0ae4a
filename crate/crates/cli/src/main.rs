mod args;
mod commands;
mod config;
mod render;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use commands::Failure;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let (argv, config_file) = match config::merge(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };

    if let Some(n) = cli.common.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }

    let done = match &cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Chsh(a) => commands::chsh(a),
        Command::GhzExhaust(a) => commands::ghz_exhaust(a),
        Command::Sample(a) => commands::sample(a),
        Command::EmitCurve(a) => commands::emit_curve(a),
    };
    let mut done = match done {
        Ok(d) => d,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };

    if let Some(obj) = done.envelope.config.as_object_mut() {
        obj.insert("threads".into(), serde_json::json!(cli.common.threads));
        if let Some(p) = &config_file {
            obj.insert("config_file".into(), serde_json::json!(p.display().to_string()));
        }
    }
    let default_format = match cli.command {
        Command::EmitCurve(_) => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.common.format.unwrap_or(default_format);
    let text = match render::render(format, &done.envelope, done.csv.take()) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = render::emit(&text, cli.common.output.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_RUNTIME);
    }
    if done.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
