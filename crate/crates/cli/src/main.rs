use std::io;
use std::process::ExitCode;

use clap::Parser;
use conalloc_cli::args::Cli;
use conalloc_cli::commands::dispatch;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    match dispatch(&cli, &mut out, &mut err) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("conalloc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
