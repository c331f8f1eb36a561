//! The `pan` command line: `run`, `search` and `compile`.

use std::fs;
use std::io::Write;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::checkpoint::{Checkpoint, StepError};
use crate::cps::{compile, emit, CompiledSpace};
use crate::error::FrontendError;
use crate::lang::{parse_source, pretty, Span};
use crate::preprocess::preprocess;
use crate::runtime::{Num, Provider, Session, Value};
use crate::search::{run_search, Registry, SearchConfig, SearchError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROGRAM: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pan", version, about = "Run, search and compile PanScript programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a program, stepping every branchpoint exactly once.
    Run {
        file: String,
        #[arg(long)]
        entry: String,
        /// JSON array of arguments, or an object keyed by parameter name.
        #[arg(long)]
        args: Option<String>,
        /// Provider script (JSON).
        #[arg(long)]
        provider: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search over the program's branchpoints and print the best result.
    Search {
        file: String,
        #[arg(long)]
        entry: String,
        #[arg(long)]
        algo: String,
        /// JSON object of algorithm parameters.
        #[arg(long)]
        params: Option<String>,
        /// Print every result instead of only the best.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        args: Option<String>,
        #[arg(long)]
        provider: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for step calls (sets `max_parallelism`).
        #[arg(long)]
        parallelism: Option<usize>,
        /// Write the search tree as JSON.
        #[arg(long)]
        trace: Option<String>,
        /// Write the search tree as Graphviz DOT.
        #[arg(long = "trace-dot")]
        trace_dot: Option<String>,
    },
    /// Print an intermediate form of a program.
    Compile {
        file: String,
        #[arg(long, value_enum)]
        emit: Emit,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Ast,
    Normalized,
    Cps,
}

/// A failure with its exit code; the message goes to stderr.
struct Failure {
    code: i32,
    message: String,
}

type CliResult<T> = Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn program(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_PROGRAM, message: message.into() }
}

/// Runs the CLI on `args` (including the program name), writing results to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ =
                if e.use_stderr() { err.write_all(rendered.as_bytes()) } else { out.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "pan: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Run { file, entry, args, provider, seed } => {
            let (space, args) = load(&file, &entry, args.as_deref())?;
            let session = Session::new(load_provider(provider.as_deref(), seed)?);
            let (value, score) = run_once(space, &entry, args, session)?;
            print_line(out, &json!({"value": value.to_json(), "score": score.map(Num::to_json)}))
        }
        Command::Search { file, entry, algo, params, all, args, provider, seed, parallelism, trace, trace_dot } => {
            let (space, args) = load(&file, &entry, args.as_deref())?;
            let session = Session::new(load_provider(provider.as_deref(), seed)?);
            let mut config = SearchConfig::new(&algo, parse_json(params.as_deref().unwrap_or("{}"), "--params")?);
            if !params.as_deref().unwrap_or("{}").trim_start().starts_with('{') {
                return Err(usage("--params must be a JSON object"));
            }
            if let Some(p) = parallelism {
                config.params.insert("max_parallelism".into(), json!(p));
            }
            let result = run_search(space, &entry, args, &config, session, &Registry::with_builtins());
            let trace_of = |r: &Result<_, SearchError>| match r {
                Ok(crate::search::SearchResult { trace, .. }) => Some(trace.clone()),
                Err(SearchError::NoSurvivingBranch(t)) => Some((**t).clone()),
                Err(_) => None,
            };
            if let Some(t) = trace_of(&result) {
                if let Some(path) = &trace {
                    write_file(path, &(serde_json::to_string_pretty(&t.to_json()).expect("trace serializes") + "\n"))?;
                }
                if let Some(path) = &trace_dot {
                    write_file(path, &t.to_dot())?;
                }
            }
            let result = result.map_err(|e| match e {
                SearchError::UnknownAlgo(_) | SearchError::BadParam(_) | SearchError::DuplicateAlgo(_) => {
                    usage(e.to_string())
                }
                SearchError::Step(StepError::BadEntry(m)) => usage(m),
                other => program(other.to_string()),
            })?;
            if all {
                print_line(out, &serde_json::Value::Array(result.all.iter().map(|i| i.to_json()).collect()))
            } else {
                print_line(out, &result.best.to_json())
            }
        }
        Command::Compile { file, emit: kind } => {
            let text = read(&file)?;
            let parsed = parse_source(&file, &text).map_err(|e| usage(render_frontend(&file, &text, &e)))?;
            let rendered = match kind {
                Emit::Ast => pretty::program(&parsed),
                Emit::Normalized | Emit::Cps => {
                    let entry = parsed.functions.iter().any(|f| f.name == "main").then_some("main");
                    let norm = preprocess(&parsed, entry);
                    if kind == Emit::Normalized {
                        pretty::functions(&norm.functions)
                    } else {
                        let space = compile(&norm).map_err(|e| usage(render_frontend(&file, &text, &e.into())))?;
                        emit(&space)
                    }
                }
            };
            out.write_all(rendered.as_bytes()).map_err(|e| program(e.to_string()))
        }
    }
}

/// Steps every branchpoint once until the program finishes.
fn run_once(
    space: Arc<CompiledSpace>,
    entry: &str,
    args: Vec<Value>,
    session: Arc<Session>,
) -> CliResult<(Value, Option<Num>)> {
    let step_err = |e: StepError| match e {
        StepError::BadEntry(m) => usage(m),
        other => program(other.to_string()),
    };
    let mut cp = Checkpoint::start(space, entry, args, session).map_err(step_err)?;
    while cp.is_running() {
        cp = cp.step(None).map_err(step_err)?;
        if cp.is_exhaustion() {
            return Err(program("NoSurvivingBranch: choose over an empty list"));
        }
    }
    match cp.return_value() {
        Ok(v) => Ok((v, cp.score())),
        Err(_) if cp.error().is_some() => Err(program(cp.error().expect("checked").to_string())),
        Err(_) => {
            let why = cp.killed_value().map_or(String::new(), |v| format!(" with {}", v.display()));
            Err(program(format!("NoSurvivingBranch: the branch was killed{why}")))
        }
    }
}

fn load(file: &str, entry: &str, args: Option<&str>) -> CliResult<(Arc<CompiledSpace>, Vec<Value>)> {
    let text = read(file)?;
    let space =
        crate::cps::compile_source(file, &text, Some(entry)).map_err(|e| usage(render_frontend(file, &text, &e)))?;
    let f = space.function(entry).ok_or_else(|| usage(format!("{file}: no function named `{entry}`")))?;
    let args = match args.map(|a| parse_json(a, "--args")).transpose()? {
        None => Vec::new(),
        Some(serde_json::Value::Array(items)) => items.iter().map(Value::from_json).collect(),
        Some(serde_json::Value::Object(map)) => {
            for key in map.keys() {
                if !f.params.contains(key) {
                    return Err(usage(format!("`{entry}` has no parameter `{key}`")));
                }
            }
            f.params
                .iter()
                .map(|p| {
                    map.get(p)
                        .map(Value::from_json)
                        .ok_or_else(|| usage(format!("missing argument `{p}` for `{entry}`")))
                })
                .collect::<CliResult<_>>()?
        }
        Some(_) => return Err(usage("--args must be a JSON array or object")),
    };
    Ok((Arc::new(space), args))
}

fn load_provider(path: Option<&str>, seed: u64) -> CliResult<Provider> {
    match path {
        None => Ok(Provider::new(seed)),
        Some(path) => {
            let text = read(path)?;
            let j = parse_json(&text, path)?;
            Provider::from_json(&j, seed).map_err(|e| usage(format!("{path}: {e}")))
        }
    }
}

fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{path}: {e}")))
}

fn write_file(path: &str, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| usage(format!("{path}: {e}")))
}

fn parse_json(text: &str, what: &str) -> CliResult<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| usage(format!("{what}: invalid JSON: {e}")))
}

fn print_line(out: &mut dyn Write, v: &serde_json::Value) -> CliResult<()> {
    writeln!(out, "{v}").map_err(|e| program(e.to_string()))
}

fn at(path: &str, text: &str, span: Span, message: &str) -> String {
    let (line, col) = span.line_col(text);
    format!("{path}:{line}:{col}: error: {message}")
}

/// Renders frontend errors as `path:line:col: error: message` lines.
pub fn render_frontend(path: &str, text: &str, e: &FrontendError) -> String {
    match e {
        FrontendError::Lex(e) => at(path, text, e.span, &e.message),
        FrontendError::Parse(e) => at(path, text, e.span, &e.message),
        FrontendError::Compile(e) => at(path, text, e.span, &e.message),
        FrontendError::Invalid(ds) => ds.iter().map(|d| d.render(path, text)).collect::<Vec<_>>().join("\n"),
    }
}
