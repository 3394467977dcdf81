// SPDX-License-Identifier: Apache-2.0

//! The `andor` experiment driver.

pub mod args;
pub mod checks;
pub mod commands;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use args::{ChecksArgs, Cli, Command, Format, SuiteSpec};
use checks::{run_check, CheckResult, CRITERIA};
use output::{csv_text, json_text, CliError, EXIT_CHECKS_FAILED, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

#[derive(Serialize)]
struct SuiteReport<'a> {
    suite: &'a str,
    seed: u64,
    pass: bool,
    results: &'a [CheckResult],
}

fn checks_cmd(a: &ChecksArgs, format: Format, log: &mut (dyn Write + Send)) -> Result<(String, i32), CliError> {
    let file = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<SuiteSpec>(&text)
                .map_err(|e| CliError::Usage(format!("bad suite file {}: {e}", path.display())))?
        }
        None => SuiteSpec::default(),
    };
    a.suite.or(file.suite).ok_or_else(|| CliError::Usage("missing --suite".into()))?;
    let seed = a.seed.or(file.seed).ok_or_else(|| CliError::Usage("missing --seed".into()))?;
    let only = if a.only.is_empty() { &file.only } else { &a.only };
    let ids: Vec<&str> = if only.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        for id in only {
            if !CRITERIA.iter().any(|(c, _)| c == id) {
                return Err(CliError::Usage(format!("unknown criterion {id:?}")));
            }
        }
        only.iter().map(String::as_str).collect()
    };
    let mut results = Vec::new();
    for id in ids {
        let r = run_check(id, seed)?;
        let _ = writeln!(log, "{}", r.line());
        results.push(r);
    }
    let pass = results.iter().all(|r| r.pass);
    let text = match format {
        Format::Json => json_text(&SuiteReport { suite: "acceptance", seed, pass, results: &results })?,
        Format::Csv => csv_text(
            &["id", "title", "pass", "detail"],
            results.iter().map(|r| vec![r.id.to_string(), r.title.to_string(), r.pass.to_string(), r.detail.clone()]),
        )?,
    };
    Ok((text, if pass { EXIT_OK } else { EXIT_CHECKS_FAILED }))
}

fn execute(cli: &Cli, log: &mut (dyn Write + Send)) -> Result<(String, i32), CliError> {
    let f = cli.format;
    let ok = |s: String| (s, EXIT_OK);
    match &cli.command {
        Command::Sample(a) => commands::sample(a, f).map(ok),
        Command::Trim(a) => commands::trim_cmd(a, f).map(ok),
        Command::Dist(a) => commands::dist(a, f).map(ok),
        Command::Scaling(a) => commands::scaling(a, f).map(ok),
        Command::Checks(a) => checks_cmd(a, f, log),
        Command::Complexity(a) => commands::complexity(a, f).map(ok),
    }
}

/// Runs the driver on `args` and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    let result = pool.install(|| execute(&cli, stderr));
    let (text, code) = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_RUNTIME;
    }
    code
}

/// Runs the driver in-process, capturing `(exit code, stdout, stderr)`.
pub fn run_captured<T: AsRef<str>>(args: &[T]) -> (i32, Vec<u8>, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(args.iter().map(|a| a.as_ref().to_string()), &mut out, &mut err);
    (code, out, err)
}
