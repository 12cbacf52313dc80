//! The `zoea` command line: compile, run, test, show, list.
//!
//! Commands write to the given streams and return the process exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};

use crate::parser::{normalize_spec, parse_programs, NormalizedSpec, SpecClass};
use crate::registry::{resolve_root, source_digest, Registry, RegistryEntry, RegistryError};
use crate::synthesis::problem::Problem;
use crate::synthesis::{synthesize_with_registry, SynthesisConfig, SynthesisOutcome};
use crate::values::{matches_with_wildcards, parse_value, TypeClass, Value};
use crate::vm::{execute, to_text, CompiledProgram, ExecutionEnv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SYNTHESIS: i32 = 3;
pub const EXIT_NOT_FOUND: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Canonical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub registry: PathBuf,
    pub budget_ms: u64,
    pub max_depth: usize,
    pub max_recursion: usize,
    pub trace: bool,
    pub format: OutputFormat,
    pub workers: usize,
    /// Timestamp stored as `created`; the current time when `None`.
    pub created: Option<u64>,
    /// Pruned derivations kept per program, for inspection.
    pub harvest: usize,
}

impl CliConfig {
    pub fn new(registry: impl Into<PathBuf>) -> CliConfig {
        let defaults = SynthesisConfig::default();
        CliConfig {
            registry: registry.into(),
            budget_ms: defaults.budget.as_millis() as u64,
            max_depth: defaults.max_depth,
            max_recursion: defaults.max_recursion,
            trace: false,
            format: OutputFormat::Human,
            workers: defaults.workers,
            created: None,
            harvest: 0,
        }
    }

    pub fn synthesis(&self) -> SynthesisConfig {
        SynthesisConfig {
            budget: Duration::from_millis(self.budget_ms),
            max_depth: self.max_depth,
            max_recursion: self.max_recursion,
            workers: self.workers,
            trace: self.trace,
            harvest: self.harvest,
            ..SynthesisConfig::default()
        }
    }

    fn created(&self) -> u64 {
        self.created
            .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "zoea", about = "Compile input/output test cases into programs")]
struct Args {
    /// Registry directory.
    #[arg(long, global = true, env = "ZOEA_REGISTRY")]
    registry: Option<PathBuf>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    budget_ms: Option<u64>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=6))]
    max_depth: Option<u64>,
    #[arg(long, global = true)]
    max_recursion: Option<usize>,
    /// Worker threads; 1 runs single-threaded.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print blackboard cycles while compiling.
    #[arg(long, global = true)]
    trace: bool,
    #[arg(long, global = true, value_enum, default_value = "human")]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile every program in a file, in file order, into the registry.
    Compile { file: PathBuf },
    /// Run a compiled program.
    Run {
        name: String,
        #[arg(long, conflicts_with = "no_input", required_unless_present = "no_input")]
        input: Option<String>,
        #[arg(long)]
        no_input: bool,
    },
    /// Check every case in a file against the compiled programs.
    Test { file: PathBuf },
    /// Print a compiled program.
    Show { name: String },
    /// List compiled programs.
    List,
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_PARSE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let mut cfg = CliConfig::new(resolve_root(args.registry.as_deref()));
    if let Some(b) = args.budget_ms {
        cfg.budget_ms = b;
    }
    if let Some(d) = args.max_depth {
        cfg.max_depth = d as usize;
    }
    if let Some(r) = args.max_recursion {
        cfg.max_recursion = r;
    }
    if let Some(w) = args.workers {
        cfg.workers = w.max(1);
    }
    cfg.trace = args.trace;
    cfg.format = args.format;
    cfg.created = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok());
    match args.command {
        Command::Compile { file } => cmd_compile(&file, &cfg, out, err),
        Command::Run { name, input, no_input } => {
            let input = if no_input {
                None
            } else {
                match parse_value(input.as_deref().unwrap_or_default()) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        let _ = writeln!(err, "bad input value: {e}");
                        return EXIT_PARSE;
                    }
                }
            };
            cmd_run(&name, input, &cfg, out, err)
        }
        Command::Test { file } => cmd_test(&file, &cfg, out, err),
        Command::Show { name } => cmd_show(&name, &cfg, out, err),
        Command::List => cmd_list(&cfg, out, err),
    }
}

/// Reads and validates every program of a file. Nothing is compiled if any fails.
fn read_specs(path: &Path, err: &mut dyn Write) -> Result<Vec<NormalizedSpec>, i32> {
    let source = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "cannot read {}: {e}", path.display());
        EXIT_NOT_FOUND
    })?;
    let programs = parse_programs(&source).map_err(|e| {
        let _ = writeln!(err, "{}: {e}", path.display());
        EXIT_PARSE
    })?;
    programs
        .iter()
        .map(|p| {
            normalize_spec(p).map_err(|e| {
                let _ = writeln!(err, "{}: {e}", path.display());
                EXIT_PARSE
            })
        })
        .collect()
}

fn registry_error_code(e: &RegistryError) -> i32 {
    match e {
        RegistryError::MissingUses(_) => EXIT_SYNTHESIS,
        _ => EXIT_NOT_FOUND,
    }
}

/// Type class shared by all values, or `Any`.
fn common_class<'a>(values: impl Iterator<Item = &'a Value>) -> TypeClass {
    let mut class = None;
    for v in values {
        let c = v.type_class();
        match class {
            None => class = Some(c),
            Some(prev) if prev != c => return TypeClass::Any,
            Some(_) => {}
        }
    }
    class.unwrap_or(TypeClass::Any)
}

fn signature(spec: &NormalizedSpec) -> (TypeClass, TypeClass) {
    match spec.class {
        SpecClass::NullProgram => (TypeClass::Any, TypeClass::Any),
        SpecClass::LiteralOutput => (TypeClass::Any, common_class(spec.cases.iter().flat_map(|c| &c.outputs))),
        SpecClass::Sequence => (TypeClass::Number, TypeClass::List),
        SpecClass::General => {
            let pairs = spec.pairs();
            (common_class(pairs.iter().map(|p| p.0)), common_class(pairs.iter().map(|p| p.1)))
        }
    }
}

/// Synthesizes one spec against `registry`; prints the trace when asked.
pub fn compile_spec(
    spec: &NormalizedSpec,
    cfg: &CliConfig,
    registry: &Arc<Registry>,
    err: &mut dyn Write,
) -> Result<SynthesisOutcome, RegistryError> {
    let outcome = synthesize_with_registry(spec, &cfg.synthesis(), registry.clone())?;
    if cfg.trace {
        for line in &outcome.trace {
            let _ = writeln!(err, "{line}");
        }
    }
    Ok(outcome)
}

pub fn cmd_compile(path: &Path, cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    compile_file(path, cfg, out, err).0
}

/// Compiles a file in program order, storing each winner. Returns the exit
/// code with the outcome and compile time of every program that reached
/// synthesis.
pub fn compile_file(
    path: &Path,
    cfg: &CliConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> (i32, Vec<(SynthesisOutcome, Duration)>) {
    let specs = match read_specs(path, err) {
        Ok(s) => s,
        Err(code) => return (code, Vec::new()),
    };
    let registry = Arc::new(Registry::open(&cfg.registry));
    let mut status = EXIT_OK;
    let mut outcomes = Vec::new();
    for spec in &specs {
        let started = Instant::now();
        let outcome = match compile_spec(spec, cfg, &registry, err) {
            Ok(o) => o,
            Err(e) => {
                let _ = writeln!(out, "{}: failed ({e})", spec.name);
                status = status.max(registry_error_code(&e));
                continue;
            }
        };
        let took = started.elapsed();
        let elapsed = took.as_millis();
        outcomes.push((outcome, took));
        let outcome = &outcomes.last().unwrap().0;
        let Some(winner) = outcome.winner.clone() else {
            let detail = outcome.diagnostics.first().cloned().unwrap_or_default();
            let _ = writeln!(out, "{}: failed in {elapsed} ms: {detail}", spec.name);
            for d in outcome.diagnostics.iter().skip(1) {
                let _ = writeln!(out, "  {d}");
            }
            status = status.max(EXIT_SYNTHESIS);
            continue;
        };
        let (input, output) = signature(spec);
        let entry = RegistryEntry {
            name: spec.name.clone(),
            compiled: winner.clone(),
            data: spec.data.clone(),
            input,
            output,
            source_digest: source_digest(&spec.canonical_key()),
            created: cfg.created(),
            report: Some(outcome.report()),
        };
        if let Err(e) = registry.store(&entry) {
            let _ = writeln!(out, "{}: failed ({e})", spec.name);
            status = status.max(EXIT_NOT_FOUND);
            continue;
        }
        let _ = writeln!(out, "{}: compiled, size {} in {elapsed} ms", spec.name, winner.size());
    }
    (status, outcomes)
}

fn render(v: &Value, format: OutputFormat) -> String {
    match (format, v) {
        (OutputFormat::Human, Value::Text(_)) => to_text(v),
        _ => v.render(),
    }
}

pub fn cmd_run(name: &str, input: Option<Value>, cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let registry = Registry::open(&cfg.registry);
    let entry = match registry.load(name) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_NOT_FOUND;
        }
    };
    let env = ExecutionEnv { data: entry.data.as_ref(), resolver: Some(&registry), ..Default::default() };
    match execute(&entry.compiled, &input.unwrap_or(Value::Null), &env) {
        Ok(v) => {
            let _ = writeln!(out, "{}", render(&v, cfg.format));
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "{name}: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Runs every case of every program in the file. Programs not in the
/// registry are compiled for the check without being stored.
pub fn cmd_test(path: &Path, cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let specs = match read_specs(path, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let registry = Arc::new(Registry::open(&cfg.registry));
    let mut status = EXIT_OK;
    for spec in &specs {
        let program: CompiledProgram = match registry.load(&spec.name) {
            Ok(entry) => entry.compiled,
            Err(RegistryError::NotFound(_)) => match compile_spec(spec, cfg, &registry, err) {
                Ok(outcome) => match outcome.winner {
                    Some(w) => w,
                    None => {
                        let _ = writeln!(out, "{}: not compiled", spec.name);
                        status = status.max(EXIT_SYNTHESIS);
                        continue;
                    }
                },
                Err(e) => {
                    let _ = writeln!(out, "{}: {e}", spec.name);
                    status = status.max(registry_error_code(&e));
                    continue;
                }
            },
            Err(e) => {
                let _ = writeln!(out, "{}: {e}", spec.name);
                status = status.max(EXIT_NOT_FOUND);
                continue;
            }
        };
        let problem = Problem::new(spec.clone());
        if problem.cases() == 0 {
            let _ = writeln!(out, "{}: no cases", spec.name);
            continue;
        }
        let env = ExecutionEnv { data: spec.data.as_ref(), resolver: Some(&*registry), ..Default::default() };
        for c in 0..problem.cases() {
            let (verdict, detail) = match execute(&program, &problem.inputs[c], &env) {
                Ok(v) if matches_with_wildcards(&problem.outputs[c], &v) => ("pass", String::new()),
                Ok(v) => ("FAIL", format!(" expected {} got {}", problem.outputs[c].render(), v.render())),
                Err(e) => ("FAIL", format!(" {e}")),
            };
            if verdict != "pass" {
                status = status.max(EXIT_RUNTIME);
            }
            let _ = writeln!(out, "{} {} {verdict}{detail}", spec.name, problem.labels[c]);
        }
    }
    status
}

pub fn cmd_show(name: &str, cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let registry = Registry::open(&cfg.registry);
    let entry = match registry.load(name) {
        Ok(e) => e,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_NOT_FOUND;
        }
    };
    let _ = writeln!(out, "program: {}", entry.name);
    let _ = writeln!(out, "signature: {} -> {}", entry.input.name(), entry.output.name());
    let _ = writeln!(out, "size: {}", entry.compiled.size());
    if let Some(d) = &entry.data {
        let _ = writeln!(out, "data: {}", d.render());
    }
    let _ = writeln!(out, "code:");
    for line in entry.compiled.canonical_form().lines() {
        let _ = writeln!(out, "  {line}");
    }
    if let Some(report) = &entry.report {
        let _ = writeln!(out, "compile report:");
        for line in report.lines() {
            let _ = writeln!(out, "  {line}");
        }
    }
    EXIT_OK
}

pub fn cmd_list(cfg: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match Registry::open(&cfg.registry).list() {
        Ok(names) => {
            for n in names {
                let _ = writeln!(out, "{n}");
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_NOT_FOUND
        }
    }
}
