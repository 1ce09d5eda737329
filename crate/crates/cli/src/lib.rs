//! Command-line front end for `ellgraph-core`.
//!
//! Exit codes: 0 success, 1 computation error, 2 invalid configuration or
//! input, 3 a verification check found a violation.

pub mod args;
mod commands;
mod load;

use args::{Cli, Command, Format, OutputArgs};
use clap::Parser;
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum Failure {
    /// Invalid flags, config or input files.
    Config(String),
    /// A computation failed on admissible input.
    Compute(String),
    /// A verification check found a violated inequality.
    Violation(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Compute(_) => 1,
            Failure::Config(_) => 2,
            Failure::Violation(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Compute(m) | Failure::Violation(m) => m,
        }
    }
}

impl From<ellgraph_core::Error> for Failure {
    fn from(e: ellgraph_core::Error) -> Self {
        if e.is_input_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Compute(e.to_string())
        }
    }
}

pub type Outcome = std::result::Result<(), Failure>;

/// Paths in a config file resolve against the file's directory.
pub(crate) struct Ctx {
    pub base: PathBuf,
}

impl Ctx {
    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(cli, PathBuf::from(".")) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

fn run_cli(cli: Cli, base: PathBuf) -> Outcome {
    if let Some(n) = cli.threads {
        // a pool installed earlier in the process is fine to keep
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Ctx { base };
    match cli.command {
        Command::Run { config } => run_config(&ctx.path(&config), cli.threads),
        Command::Spectrum(a) => commands::spectrum(&ctx, &a),
        Command::GroundState(a) => commands::ground_state(&ctx, &a),
        Command::Cheeger(a) => commands::cheeger(&ctx, &a),
        Command::HeatKernel(a) => commands::heat_kernel(&ctx, &a),
        Command::Ivp(a) => commands::ivp(&ctx, &a),
        Command::Htransform(a) => commands::htransform(&ctx, &a),
        Command::Verify(a) => commands::verify(&ctx, &a),
        Command::Eigh(a) => commands::eigh(&ctx, &a),
    }
}

/// Translates a TOML table into command-line flags and parses them with
/// the same definitions, so defaults and validation are shared.
pub fn config_to_argv(text: &str) -> std::result::Result<Vec<String>, Failure> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Failure::Config(format!("config: {e}")))?;
    let command = match table.get("command") {
        Some(toml::Value::String(s)) => s.clone(),
        _ => return Err(Failure::Config("config: missing string field `command`".into())),
    };
    if command == "run" {
        return Err(Failure::Config("config: `command = \"run\"` is not allowed".into()));
    }
    let mut argv = vec!["ellgraph".to_string(), command];
    for (key, value) in &table {
        if key == "command" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => argv.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => argv.extend([flag, s.clone()]),
            toml::Value::Integer(i) => argv.extend([flag, i.to_string()]),
            toml::Value::Float(x) => argv.extend([flag, x.to_string()]),
            toml::Value::Array(items) => {
                let parts: std::result::Result<Vec<String>, Failure> = items
                    .iter()
                    .map(|v| match v {
                        toml::Value::Integer(i) => Ok(i.to_string()),
                        toml::Value::Float(x) => Ok(x.to_string()),
                        toml::Value::String(s) => Ok(s.clone()),
                        _ => Err(Failure::Config(format!("config field `{key}`: unsupported array element"))),
                    })
                    .collect();
                argv.extend([flag, parts?.join(",")]);
            }
            _ => return Err(Failure::Config(format!("config field `{key}`: unsupported value type"))),
        }
    }
    Ok(argv)
}

fn run_config(path: &Path, threads: Option<usize>) -> Outcome {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let argv = config_to_argv(&text)?;
    let mut cli = Cli::try_parse_from(&argv).map_err(|e| {
        let msg = e.render().to_string();
        Failure::Config(format!("{}: {}", path.display(), msg.trim_start_matches("error: ").trim_end()))
    })?;
    cli.threads = cli.threads.or(threads);
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_cli(cli, base)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'a str,
    #[serde(flatten)]
    report: &'a T,
}

/// Table form of a report for CSV output.
pub(crate) struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub(crate) fn emit<T: Serialize>(ctx: &Ctx, out: &OutputArgs, command: &str, report: &T, table: Option<Table>) -> Outcome {
    let text = match out.format {
        Format::Json => {
            let env = Envelope { schema_version: SCHEMA_VERSION, command, report };
            let mut s = serde_json::to_string_pretty(&env).map_err(|e| Failure::Compute(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let Some(t) = table else {
                return Err(Failure::Config(format!("`{command}` produces a nested report; use --format json")));
            };
            let mut s = format!("# schema_version={SCHEMA_VERSION} command={command}\n{}\n", t.header.join(","));
            for r in t.rows {
                s.push_str(&r.join(","));
                s.push('\n');
            }
            s
        }
    };
    match &out.output {
        Some(p) => std::fs::write(ctx.path(p), text).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Compute(e.to_string())),
    }
}
