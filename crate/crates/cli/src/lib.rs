//! Driver for exact Fedosov computations: reads a JSON job, runs one named
//! computation or the whole battery, and renders a deterministic report.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use serde_json::{json, Map, Value};

pub use config::{Job, JobConfig};
pub use error::CliError;

use commands::{run_command, COMMANDS};
use report::fmt_fn;

/// A rendered report, the checks that failed, and the error that stopped a
/// suite early, if any.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    pub failed: Vec<String>,
    pub halted: Option<CliError>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failed.is_empty() && self.halted.is_none()
    }

    /// 0 on success, the halting error's code, or 4 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match &self.halted {
            Some(e) => e.exit_code(),
            None if self.failed.is_empty() => 0,
            None => CliError::Assertion(String::new()).exit_code(),
        }
    }

    /// The machine-readable error object for a nonzero exit.
    pub fn error(&self) -> Option<CliError> {
        match &self.halted {
            Some(e) => Some(e.clone()),
            None if self.failed.is_empty() => None,
            None => Some(CliError::Assertion(format!("failed checks: {}", self.failed.join(", ")))),
        }
    }
}

fn echo_inputs(cfg: &JobConfig, job: &Job) -> Value {
    let mut generated = Map::new();
    let tensor = |t: &fedosov_core::geometry::S3Field| -> Value {
        let m: Map<String, Value> =
            t.entries().iter().map(|(k, f)| (format!("{},{},{}", k[0], k[1], k[2]), json!(fmt_fn(f)))).collect();
        Value::Object(m)
    };
    for name in &job.generated {
        let v = match *name {
            "A" => tensor(&job.a),
            "B" => tensor(&job.b),
            "C" => tensor(&job.c),
            "H" => json!(fmt_fn(&job.h)),
            "F" => json!(fmt_fn(&job.f)),
            _ => json!(fmt_fn(&job.g)),
        };
        generated.insert(name.to_string(), v);
    }
    json!({
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "seed": job.seed,
        "generated": generated,
        "trace_order": job.trace_order,
        "disk_order": job.disk_order,
    })
}

/// Runs the config's command (`suite` included).
pub fn run(cfg: &JobConfig, seed: u64) -> Result<Outcome, CliError> {
    let command = cfg.command.clone().ok_or_else(|| CliError::Config("no command given".to_string()))?;
    if command == "suite" {
        return run_suite(cfg, seed);
    }
    let job = Job::resolve(cfg, seed)?;
    let rep = run_command(&command, &job)?;
    let mut out = rep.to_json();
    out["command"] = json!(command);
    out["inputs"] = echo_inputs(cfg, &job);
    Ok(Outcome { report: out, failed: rep.failed().into_iter().map(String::from).collect(), halted: None })
}

/// Every command in order. Cap violations (typically an order too low for
/// a later step) mark that section skipped; any other error stops the run.
pub fn run_suite(cfg: &JobConfig, seed: u64) -> Result<Outcome, CliError> {
    let job = Job::resolve(cfg, seed)?;
    let mut sections = Map::new();
    let mut sequence = Vec::new();
    let mut failed = Vec::new();
    let mut halted = None;
    for name in COMMANDS {
        sequence.push(json!(name));
        match run_command(name, &job) {
            Ok(rep) => {
                failed.extend(rep.failed().into_iter().map(|c| format!("{name}/{c}")));
                sections.insert(name.to_string(), rep.to_json());
            }
            Err(CliError::Cap(msg)) => {
                sections.insert(name.to_string(), json!({ "verdict": format!("skipped: {msg}") }));
            }
            Err(e) => {
                sections.insert(name.to_string(), e.to_json());
                halted = Some(e);
                break;
            }
        }
    }
    let verdict = match (&halted, failed.is_empty()) {
        (Some(_), _) => "error",
        (None, true) => "pass",
        (None, false) => "fail",
    };
    let report = json!({
        "command": "suite",
        "inputs": echo_inputs(cfg, &job),
        "sequence": sequence,
        "sections": sections,
        "failed": failed,
        "verdict": verdict,
    });
    Ok(Outcome { report, failed, halted })
}
