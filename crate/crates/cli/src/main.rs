mod args;
mod commands;
mod config;
mod error;
mod report;

use std::ffi::OsString;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};
use crate::report::Header;

fn dispatch(cmd: &Command) -> CliResult<report::Report> {
    match cmd {
        Command::SieveBuild(a) => commands::sieve_build(a),
        Command::Lindex(a) => commands::lindex(a),
        Command::FormsDump(a) => commands::forms_dump(a),
        Command::Singular(a) => commands::singular(a),
        Command::Gallagher(a) => commands::gallagher(a),
        Command::CutoffCheck(a) => commands::cutoff_check(a),
        Command::Majorant(a) => commands::majorant(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Lfc(a) => commands::lfc(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::LambdaD(a) => commands::lambda_d_cmd(a),
        Command::Apsearch(a) => commands::apsearch(a),
    }
}

fn run(cli: Cli, argv: &[OsString]) -> CliResult<()> {
    let cmd = &cli.command;
    let common = cmd.common();
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--workers {n}: {e}")))?;
    }
    let header = Header {
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        args: argv.iter().skip(2).map(|a| a.to_string_lossy().into_owned()).collect(),
        seed: common.seed,
        workers: rayon::current_num_threads(),
    };
    let start = Instant::now();
    let report = dispatch(cmd)?;
    let report_path = match cmd {
        Command::Apsearch(a) => common.report.as_ref().or(a.out.as_ref()),
        _ => common.report.as_ref(),
    };
    if let Some(path) = report_path {
        report::write(path, &header, &report)?;
    }
    if common.json {
        print!("{}", report::to_json(&header, &report)?);
    } else {
        print!("{}", report::to_table(&report));
    }
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("narrowlab: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("narrowlab: {e}");
            e.exit_code()
        }
    }
}
