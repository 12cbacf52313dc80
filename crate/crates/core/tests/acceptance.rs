//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path as FsPath;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::listings::{expected, located, VIOLATIONS};
use common::{corpus_files, laws, listing, permute_whitespace, specs, v};
use zoea::cli::{cmd_run, cmd_test, compile_file, CliConfig, EXIT_OK};
use zoea::parser::{normalize_spec, parse_programs};
use zoea::registry::Registry;
use zoea::synthesis::problem::Problem;
use zoea::synthesis::rank::{score, Candidate};
use zoea::synthesis::space::{forward_enumerate, reverse_derive, EvalEnv, Limits, Seed, SeedKind};
use zoea::synthesis::{synthesize, SynthesisConfig, SynthesisOutcome};
use zoea::values::{Path, PathStep, Value};
use zoea::vm::{apply_builtin, catalog, execute, DagBuilder, ExecutionEnv, Op};

const TIER_1: [u32; 10] = [2, 3, 4, 5, 6, 9, 11, 12, 13, 14];
const TIER_2: [u32; 3] = [7, 8, 10];
const HARVEST: usize = 1000;

struct FileRun {
    listing: u32,
    compile: i32,
    test: i32,
    test_log: String,
    outcomes: Vec<(SynthesisOutcome, Duration)>,
}

struct CorpusRun {
    files: Vec<FileRun>,
    reports: String,
    registry: BTreeMap<String, Vec<u8>>,
    dir: tempfile::TempDir,
}

impl CorpusRun {
    fn config(&self) -> CliConfig {
        config(self.dir.path(), 4)
    }

    fn listing(&self, n: u32) -> &FileRun {
        self.files.iter().find(|f| f.listing == n).unwrap()
    }
}

fn config(dir: &FsPath, workers: usize) -> CliConfig {
    let mut cfg = CliConfig::new(dir);
    cfg.workers = workers;
    cfg.created = Some(0);
    cfg.harvest = HARVEST;
    cfg
}

fn read_tree(root: &FsPath, dir: &FsPath, out: &mut BTreeMap<String, Vec<u8>>) {
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            read_tree(root, &path, out);
        } else {
            out.insert(path.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&path).unwrap());
        }
    }
}

/// Compiles and tests every corpus file into a fresh registry.
fn run_corpus(workers: usize) -> CorpusRun {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), workers);
    let mut files = Vec::new();
    let mut reports = String::new();
    for path in corpus_files() {
        let listing: u32 = path.file_name().unwrap().to_string_lossy()[..2].parse().unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let (compile, outcomes) = compile_file(&path, &cfg, &mut out, &mut err);
        let mut log = Vec::new();
        let test = cmd_test(&path, &cfg, &mut log, &mut err);
        for (o, _) in &outcomes {
            reports.push_str(&o.report());
        }
        files.push(FileRun { listing, compile, test, test_log: String::from_utf8(log).unwrap(), outcomes });
    }
    let mut registry = BTreeMap::new();
    read_tree(dir.path(), dir.path(), &mut registry);
    CorpusRun { files, reports, registry, dir }
}

static FIRST_RUN: OnceLock<CorpusRun> = OnceLock::new();

fn first_run() -> &'static CorpusRun {
    FIRST_RUN.get_or_init(|| run_corpus(4))
}

fn tier(listings: &[u32], limit: Duration) -> Result<Vec<String>, String> {
    let run = first_run();
    let mut notes = Vec::new();
    for &n in listings {
        let f = run.listing(n);
        if f.compile != EXIT_OK || f.test != EXIT_OK {
            return Err(format!("listing {n}: compile exit {}, test exit {}\n{}", f.compile, f.test, f.test_log));
        }
        for (o, took) in &f.outcomes {
            if *took > limit {
                return Err(format!("{} took {:.1} s", o.name, took.as_secs_f64()));
            }
            notes.push(format!("{} {:.1}s", o.name, took.as_secs_f64()));
        }
    }
    Ok(notes)
}

fn criterion_1() -> Verdict {
    let notes = tier(&TIER_1, Duration::from_secs(60))?;
    let run = first_run();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_run("factorial", Some(Value::int(5)), &run.config(), &mut out, &mut err);
    let printed = String::from_utf8(out).unwrap();
    if code != EXIT_OK || v(printed.trim()) != v("[5, 120]") {
        return Err(format!("factorial 5 gave exit {code}: {printed}{}", String::from_utf8_lossy(&err)));
    }
    Ok(format!("{}; factorial 5 -> {}", notes.join(", "), printed.trim()))
}

fn criterion_2() -> Verdict {
    Ok(tier(&TIER_2, Duration::from_secs(300))?.join(", "))
}

fn criterion_5() -> Verdict {
    let run = first_run();
    let registry = Registry::open(run.dir.path());
    let pairs: Vec<_> = TIER_1
        .iter()
        .flat_map(|&n| run.listing(n).outcomes.iter().flat_map(|(o, _)| o.pruned_pairs.iter()))
        .take(1000)
        .collect();
    if pairs.len() < 1000 {
        return Err(format!("only {} pruned pairs harvested", pairs.len()));
    }
    let mut violations = 0;
    let mut first = None;
    for p in &pairs {
        let env = ExecutionEnv { data: p.data.as_ref(), resolver: Some(&registry), ..Default::default() };
        for input in &p.inputs {
            let a = execute(&p.retained, input, &env).ok();
            let b = execute(&p.pruned, input, &env).ok();
            if a != b {
                violations += 1;
                first.get_or_insert_with(|| format!("{} vs {} on {}", p.retained.summary(), p.pruned.summary(), input.render()));
            }
        }
    }
    match first {
        None => Ok(format!("{} pairs, 0 violations", pairs.len())),
        Some(f) => Err(format!("{violations} violations, first: {f}")),
    }
}

fn fail<T: std::fmt::Debug>(name: &str, e: TestError<T>) -> String {
    format!("{name}: {e}")
}

fn laws_hold() -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    runner.run(&laws::candidates(), laws::complete_first).map_err(|e| fail("completeness dominance", e))?;
    runner.run(&laws::lookup_inputs(), laws::lookup_demoted).map_err(|e| fail("lookup demotion", e))?;
    runner
        .run(&(laws::candidates(), proptest::num::u64::ANY), |(cs, seed)| laws::order_free(cs, seed))
        .map_err(|e| fail("permutation invariance", e))?;
    runner
        .run(&(laws::candidate(), laws::candidate()), |(a, b)| laws::tie_break(a, b))
        .map_err(|e| fail("tie-break", e))?;
    Ok(())
}

/// `[substring, number(substring), number(substring)]` for the extraction listing.
fn string_ops_rival() -> zoea::vm::CompiledProgram {
    let mut b = DagBuilder::new();
    let x = b.input(Path::root());
    let cut = |b: &mut DagBuilder, s: i64, e: i64| {
        let (s, e) = (b.literal(Value::int(s)), b.literal(Value::int(e)));
        b.apply("substring", vec![x, s, e])
    };
    let date = cut(&mut b, 3, 13);
    let int = cut(&mut b, 16, 19);
    let dec = cut(&mut b, 22, 26);
    let int = b.apply("parse_number", vec![int]);
    let dec = b.apply("parse_number", vec![dec]);
    let out = b.apply("make_list_3", vec![date, int, dec]);
    b.finish(out)
}

fn criterion_6() -> Verdict {
    laws_hold()?;
    let problem = Problem::new(normalize_spec(&expected(10)[0]).unwrap());
    let outcome = &first_run().listing(10).outcomes[0].0;
    let winner = outcome.ranked.first().ok_or("no candidates for listing 10")?;
    if !winner.program.canonical_form().contains("regex_extract_all") {
        return Err(format!("listing 10 winner is not a regex program: {}", winner.program.summary()));
    }
    let rival = string_ops_rival();
    let got = execute(&rival, &problem.inputs[0], &ExecutionEnv::default()).map_err(|e| e.to_string())?;
    if got != problem.outputs[0] {
        return Err(format!("string-ops rival computes {}", got.render()));
    }
    let rival_score = score(&Candidate { program: rival.clone(), coverage: vec![true], source: "string ops".into() }, &problem);
    if rival_score <= winner.score || rival_score.size <= winner.score.size {
        return Err(format!("rival {} ranks with {rival_score:?}", rival.summary()));
    }
    let beaten = outcome
        .ranked
        .iter()
        .skip(1)
        .filter(|c| c.score.complete && !c.program.canonical_form().contains("regex"))
        .all(|c| c.score > winner.score);
    if !beaten {
        return Err("a found string-ops candidate outranks the regex winner".into());
    }
    Ok(format!(
        "4 laws x 256 cases; regex winner size {} beats string-ops size {}",
        winner.score.size, rival_score.size
    ))
}

fn criterion_7() -> Verdict {
    let a = first_run();
    for (label, other) in [("second parallel run", run_corpus(4)), ("single-threaded run", run_corpus(1))] {
        if other.reports != a.reports {
            let line = a.reports.lines().zip(other.reports.lines()).find(|(x, y)| x != y);
            return Err(format!("{label}: reports differ at {line:?}"));
        }
        if other.registry != a.registry {
            let diff = a.registry.keys().chain(other.registry.keys()).find(|k| a.registry.get(*k) != other.registry.get(*k));
            return Err(format!("{label}: registry differs at {diff:?}"));
        }
    }
    Ok(format!("3 runs, {} report bytes and {} registry files identical", a.reports.len(), a.registry.len()))
}

fn criterion_8() -> Verdict {
    for n in 2..=14 {
        let parsed = parse_programs(&listing(n)).map_err(|e| format!("listing {n}: {e}"))?;
        if parsed != expected(n) {
            return Err(format!("listing {n} parsed to {parsed:?}"));
        }
    }
    let source = listing(14);
    let reference = parse_programs(&source).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let variant = permute_whitespace(&source, &mut rng);
        if parse_programs(&variant).ok().as_ref() != Some(&reference) {
            return Err(format!("whitespace variant differs:\n{variant}"));
        }
    }
    for (source, line, at) in VIOLATIONS {
        let (l, offset, message) = located(source);
        if l != line || source.get(offset..offset + at.len()) != Some(at) {
            return Err(format!("{source:?}: error at line {l}, offset {offset}: {message}"));
        }
    }
    Ok("13 listings, 20 whitespace variants, 2 located violations".into())
}

fn criterion_9() -> Verdict {
    let spec = &specs("program: clash\ncase: 1 input: [1, 2] output: 3\ncase: 2 input: [1, 2] output: 4\n")[0];
    let started = Instant::now();
    let outcome = synthesize(spec, &SynthesisConfig::default(), None, vec![]);
    let took = started.elapsed();
    let message = outcome.diagnostics.join("; ");
    if outcome.is_solved() || !message.contains("inconsistent cases") {
        return Err(format!("outcome: {message}"));
    }
    if took >= Duration::from_secs(1) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{message} in {:.1} ms", took.as_secs_f64() * 1000.0))
}

const SUBSET: [&str; 10] = ["sort", "reverse", "length", "sum", "head", "last", "neg", "abs", "add", "concat"];

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Verdict);

fn small_value(rng: &mut ChaCha8Rng, depth: usize) -> Value {
    let number = |rng: &mut ChaCha8Rng| Value::int(rng.gen_range(-4..6));
    match (depth, rng.gen_range(0..3)) {
        (0, _) | (_, 0) => number(rng),
        (1, _) | (_, 1) => Value::List((0..rng.gen_range(0..4)).map(|_| number(rng)).collect()),
        _ => Value::List((0..rng.gen_range(0..3)).map(|_| small_value(rng, 1)).collect()),
    }
}

/// Every value reachable in at most three applications, by exhaustive
/// application over the whole previous level. Returns the distinct values
/// and the number of successful derivations (seeds included).
fn naive_closure(seeds: &[Value], ops: &[Op]) -> (HashSet<Value>, usize) {
    let mut seen: HashSet<Value> = HashSet::new();
    let mut level: Vec<Value> = Vec::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            level.push(s.clone());
        }
    }
    let mut derivations = seeds.len();
    let mut record = |r: Result<Value, _>, seen: &mut HashSet<Value>, next: &mut Vec<Value>| {
        if let Ok(v) = r {
            derivations += 1;
            if seen.insert(v.clone()) {
                next.push(v);
            }
        }
    };
    for _ in 0..3 {
        let mut next = Vec::new();
        for &op in ops {
            for a in &level {
                if op.arity() == 1 {
                    record(apply_builtin(op, std::slice::from_ref(a)), &mut seen, &mut next);
                } else {
                    for b in &level {
                        record(apply_builtin(op, &[a.clone(), b.clone()]), &mut seen, &mut next);
                    }
                }
            }
        }
        level.extend(next);
    }
    (seen, derivations)
}

fn random_spaces() -> Vec<Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..50)
        .map(|_| {
            let n = rng.gen_range(1..=4);
            (0..n).map(|_| small_value(&mut rng, 2)).collect()
        })
        .collect()
}

fn seed_inputs(seeds: &[Value]) -> Vec<Seed> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, v)| Seed { kind: SeedKind::Input(Path(vec![PathStep::Index(i)])), values: vec![v.clone()], specificity: 0 })
        .collect()
}

fn subset() -> Vec<zoea::vm::InstructionDescriptor> {
    catalog().into_iter().filter(|d| SUBSET.contains(&d.name.as_str())).collect()
}

fn limits() -> Limits {
    Limits { max_depth: 3, max_entries: 50_000_000, max_applications: 500_000_000 }
}

fn criterion_3() -> Verdict {
    let ops: Vec<Op> = SUBSET.iter().map(|n| Op::from_name(n).unwrap()).collect();
    let spaces = random_spaces();
    let mut enumerate_time = std::time::Duration::ZERO;
    let mut total = 0;
    for (k, seeds) in spaces.iter().enumerate() {
        let started = Instant::now();
        let space = forward_enumerate(seed_inputs(seeds), subset(), &limits(), &EvalEnv::default());
        enumerate_time += started.elapsed();
        if space.truncated {
            return Err(format!("set {k}: space truncated"));
        }
        let got: HashSet<Value> = space.entries().iter().map(|e| e.values[0].clone().expect("single case")).collect();
        let (expected, derivations) = naive_closure(seeds, &ops);
        if got != expected {
            let missing: Vec<String> = expected.difference(&got).take(3).map(Value::render).collect();
            let extra: Vec<String> = got.difference(&expected).take(3).map(Value::render).collect();
            return Err(format!("set {k}: missing {missing:?}, extra {extra:?}"));
        }
        if space.len() > derivations {
            return Err(format!("set {k}: {} entries for {derivations} derivations", space.len()));
        }
        total += space.len();
    }
    if enumerate_time.as_secs_f64() >= 10.0 {
        return Err(format!("enumeration took {:.1} s", enumerate_time.as_secs_f64()));
    }
    Ok(format!("50 spaces, {total} distinct values, enumeration {:.2} s", enumerate_time.as_secs_f64()))
}

/// Every non-seed value is asked for one derivation; values of the smaller
/// spaces are also asked for alternatives, which runs the inverse scans.
fn criterion_4() -> Verdict {
    let mut checked = 0;
    let mut replayed = 0;
    for (k, seeds) in random_spaces().iter().enumerate() {
        let space = forward_enumerate(seed_inputs(seeds), subset(), &limits(), &EvalEnv::default());
        let input = Value::List(seeds.clone());
        let env = ExecutionEnv::default();
        let wanted = if space.len() <= 1000 { 4 } else { 1 };
        for e in space.entries().iter().filter(|e| e.depth > 0) {
            let target = e.values[0].clone().unwrap();
            let programs = reverse_derive(std::slice::from_ref(&target), &space, wanted);
            if programs.is_empty() {
                return Err(format!("set {k}: no derivation of {}", target.render()));
            }
            for p in programs {
                match execute(&p, &input, &env) {
                    Ok(v) if v == target => replayed += 1,
                    other => return Err(format!("set {k}: {} replays to {other:?}, not {}", p.summary(), target.render())),
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} values, {replayed} derivations replayed"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "golden corpus tier 1", criterion_1),
        (2, "golden corpus tier 2", criterion_2),
        (3, "oracle equivalence", criterion_3),
        (4, "reverse-search completeness", criterion_4),
        (5, "pruning soundness", criterion_5),
        (6, "ranking laws", criterion_6),
        (7, "determinism", criterion_7),
        (8, "parser conformance", criterion_8),
        (9, "contradiction handling", criterion_9),
    ];
    let mut failed = 0;
    for (n, title, f) in criteria {
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {n} ({title}): PASS [{secs:.1} s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({title}): FAIL [{secs:.1} s] {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
