use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fedosov_cli::report::render;
use fedosov_cli::{run, CliError, JobConfig};

/// Exact Fedosov quantization on the torus: run a named computation and
/// write a JSON report.
#[derive(Parser, Debug)]
#[command(name = "fedosov", version)]
struct Args {
    /// Job file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's command: one of solve-r, star, curvature,
    /// trace-density, omega-tilde, moment-residual, bianchi, transport,
    /// holonomy, heisenberg, action, suite.
    #[arg(long)]
    command: Option<String>,
    /// Overrides the truncation order.
    #[arg(long)]
    order: Option<i32>,
    /// Report path; the config's `output`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for inputs the config leaves out.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print errors as JSON objects on stderr.
    #[arg(long)]
    json_errors: bool,
}

fn report_error(e: &CliError, json_errors: bool) {
    if json_errors {
        eprintln!("{}", e.to_json());
    } else {
        eprintln!("error ({}): {e}", e.kind());
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let json_errors = std::env::args().any(|a| a == "--json-errors");
            report_error(&CliError::Config(e.to_string().trim_end().to_string()), json_errors);
            return ExitCode::from(2);
        }
    };
    let mut cfg = match JobConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            report_error(&e, args.json_errors);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(c) = args.command {
        cfg.command = Some(c);
    }
    if let Some(n) = args.order {
        cfg.order = n;
    }
    if let Some(p) = &args.out {
        cfg.output = Some(p.display().to_string());
    }
    let outcome = match run(&cfg, args.seed) {
        Ok(o) => o,
        Err(e) => {
            report_error(&e, args.json_errors);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = render(&outcome.report);
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let e = CliError::Io(format!("{path}: {e}"));
                report_error(&e, args.json_errors);
                return ExitCode::from(e.exit_code() as u8);
            }
        }
        None => print!("{text}"),
    }
    if let Some(e) = outcome.error() {
        report_error(&e, args.json_errors);
    }
    ExitCode::from(outcome.exit_code() as u8)
}
