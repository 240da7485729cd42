//! Command-line runner for the soliton-lab experiments.
//!
//! Each subcommand reads its parameters from flags and, optionally, a JSON
//! config with the same keys (flags win). The JSON summary goes to stdout;
//! with `--out DIR` it is also written to `DIR/summary.json` next to the CSV
//! data files. Exit codes: 0 pass, 1 tolerance or runtime failure, 2 invalid
//! input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod params;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Arg, ArgAction, ArgMatches, Command};
use serde_json::Value;

use crate::experiments::{find, Experiment, EXPERIMENTS};
use crate::params::{CliError, Params, Result};
use crate::report::{error_json, pretty, summary_json};

/// Result of one experiment run: exit code and JSON summary text.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub summary: String,
    pub error: Option<String>,
}

impl Outcome {
    fn failed(experiment: &str, e: &CliError) -> Self {
        let msg = e.to_string();
        Outcome { code: e.exit_code(), summary: pretty(&error_json(experiment, &msg, e.exit_code())), error: Some(msg) }
    }
}

pub fn command() -> Command {
    let mut cmd = Command::new("soliton-lab")
        .about("Numerical experiments for translating Monge-Ampère solitons")
        .arg(Arg::new("config").long("config").global(true).value_name("PATH").help("JSON file with parameter values"))
        .arg(
            Arg::new("out").long("out").global(true).value_name("DIR").help("Directory for summary.json and CSV files"),
        )
        .arg(
            Arg::new("timing")
                .long("timing")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("Include wall-clock time in the summary"),
        )
        .subcommand(
            Command::new("batch").about("Run several config files concurrently").arg(
                Arg::new("configs")
                    .required(true)
                    .num_args(1..)
                    .value_name("CONFIG")
                    .help("Config files naming their experiment"),
            ),
        );
    for exp in EXPERIMENTS {
        let mut sub = Command::new(exp.name).about(exp.about);
        for o in exp.options {
            let help = match o.default {
                Some(d) => format!("{} [default: {d}]", o.help),
                None => o.help.to_string(),
            };
            sub = sub.arg(Arg::new(o.key).long(o.key).value_name("VALUE").allow_hyphen_values(true).help(help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

fn read_config(path: &Path) -> Result<BTreeMap<String, Value>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("malformed config {}: {e}", path.display())))
}

fn take_string(config: &mut BTreeMap<String, Value>, key: &str) -> Result<Option<String>> {
    match config.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(CliError::Invalid(format!("config key `{key}` must be a string, got {other}"))),
    }
}

/// A fully resolved run request.
struct Job {
    experiment: &'static Experiment,
    config: BTreeMap<String, Value>,
    flags: BTreeMap<String, String>,
    out: Option<PathBuf>,
    timing: bool,
}

fn job_from_config(path: &Path, name: Option<&str>, out: Option<&String>, timing: bool) -> Result<Job> {
    let mut config = read_config(path)?;
    let named = take_string(&mut config, "experiment")?;
    let config_out = take_string(&mut config, "out")?;
    let name = match (name, named.as_deref()) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Invalid(format!("config names experiment `{b}` but `{a}` was requested")))
        }
        (Some(a), _) => a.to_string(),
        (None, Some(b)) => b.to_string(),
        (None, None) => return Err(CliError::Invalid(format!("config {} has no `experiment` key", path.display()))),
    };
    let experiment = find(&name).ok_or_else(|| CliError::Invalid(format!("unknown experiment `{name}`")))?;
    Ok(Job { experiment, config, flags: BTreeMap::new(), out: out.cloned().or(config_out).map(PathBuf::from), timing })
}

fn write_outputs(dir: &Path, summary: &str, report: &report::Report) -> Result<()> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for table in &report.tables {
        fs::write(dir.join(table.file), table.to_csv()).map_err(io)?;
    }
    fs::write(dir.join("summary.json"), summary).map_err(io)
}

fn execute(job: &Job) -> Outcome {
    let name = job.experiment.name;
    let fail = |e: CliError| Outcome::failed(name, &e);
    let params = match Params::merge(job.experiment.options, &job.config, &job.flags) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let start = Instant::now();
    let report = match (job.experiment.run)(&params) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let seconds = job.timing.then(|| start.elapsed().as_secs_f64());
    let summary = pretty(&summary_json(name, &params.echo(), &report, seconds));
    if let Some(dir) = &job.out {
        if let Err(e) = write_outputs(dir, &summary, &report) {
            return fail(e);
        }
    }
    Outcome { code: if report.pass() { 0 } else { 1 }, summary, error: None }
}

fn flags_of(exp: &Experiment, m: &ArgMatches) -> BTreeMap<String, String> {
    exp.options.iter().filter_map(|o| m.get_one::<String>(o.key).map(|v| (o.key.to_string(), v.clone()))).collect()
}

fn invalid(e: CliError) -> Vec<Outcome> {
    vec![Outcome::failed("", &e)]
}

/// Runs the parsed command line and returns one outcome per experiment.
pub fn dispatch(m: &ArgMatches) -> Vec<Outcome> {
    let timing = m.get_flag("timing");
    let out = m.get_one::<String>("out");
    let config = m.get_one::<String>("config").map(PathBuf::from);
    match m.subcommand() {
        Some(("batch", sub)) => {
            if out.is_some() || config.is_some() {
                return invalid(CliError::Invalid(
                    "batch takes `out` from each config file, not --out or --config".into(),
                ));
            }
            let jobs: Vec<Result<Job>> = sub
                .get_many::<String>("configs")
                .into_iter()
                .flatten()
                .map(|path| job_from_config(Path::new(path), None, None, timing))
                .collect();
            std::thread::scope(|s| {
                let handles: Vec<_> = jobs
                    .iter()
                    .map(|job| {
                        s.spawn(move || match job {
                            Ok(job) => execute(job),
                            Err(e) => Outcome::failed("", e),
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
            })
        }
        Some((name, sub)) => {
            let exp = find(name).expect("subcommands are generated from the experiment table");
            let job = match &config {
                Some(path) => job_from_config(path, Some(name), out, timing),
                None => Ok(Job {
                    experiment: exp,
                    config: BTreeMap::new(),
                    flags: BTreeMap::new(),
                    out: out.map(PathBuf::from),
                    timing,
                }),
            };
            match job {
                Ok(mut job) => {
                    job.flags = flags_of(exp, sub);
                    vec![execute(&job)]
                }
                Err(e) => invalid(e),
            }
        }
        None => match &config {
            Some(path) => match job_from_config(path, None, out, timing) {
                Ok(job) => vec![execute(&job)],
                Err(e) => invalid(e),
            },
            None => invalid(CliError::Invalid("no experiment given; pass a subcommand or --config".into())),
        },
    }
}

/// Parses `args` (including the program name), runs, prints summaries to
/// stdout and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcomes = dispatch(&matches);
    for o in &outcomes {
        print!("{}", o.summary);
        if let Some(msg) = &o.error {
            eprintln!("error: {msg}");
        }
    }
    outcomes.iter().map(|o| o.code).max().unwrap_or(0)
}
