//! Turning test cases into programs.
//!
//! [`synthesize`] builds a [`Blackboard`] over the cases and lets the
//! knowledge sources in [`sources`] work on it until a stop rule fires, then
//! ranks every verified candidate.

pub mod align;
pub mod induce;
pub mod patterns;
pub mod problem;
pub mod rank;
pub mod seeds;
pub mod sources;
pub mod space;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::blackboard::{init_blackboard, BoardOptions, Blackboard, Delta, Level, Payload, StopReason};
use crate::parser::{NormalizedSpec, SpecClass};
use crate::registry::{Registry, RegistryError};
use crate::values::Value;
use crate::vm::{CompiledProgram, InstructionDescriptor, ProgramResolver};

use problem::{verify, Problem};
use rank::{rank_candidates, Candidate, RankScore};

/// Programs kept from a solved sub-problem.
const SUB_ALTERNATIVES: usize = 2;
const RANKED_KEPT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisConfig {
    pub budget: Duration,
    pub max_depth: usize,
    pub max_recursion: usize,
    pub max_entries: usize,
    pub max_applications: usize,
    /// 1 runs everything on the calling thread.
    pub workers: usize,
    pub trace: bool,
    /// Pruned derivations to keep for inspection.
    pub harvest: usize,
    pub stop_at_first_complete: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            budget: Duration::from_secs(60),
            max_depth: 4,
            max_recursion: 3,
            max_entries: 200_000,
            max_applications: 3_000_000,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            trace: false,
            harvest: 0,
            stop_at_first_complete: false,
        }
    }
}

/// A derivation dropped because an earlier one produced the same values,
/// with the one that was kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedPair {
    pub retained: CompiledProgram,
    pub pruned: CompiledProgram,
    pub inputs: Vec<Value>,
    pub data: Option<Value>,
}

/// Result of a sub-instance, shared through the cache.
#[derive(Debug, Clone, Default)]
pub struct SubResult {
    pub programs: Vec<CompiledProgram>,
    pub trace: Vec<String>,
    pub pruned: Vec<PrunedPair>,
}

/// State shared by every instance of one synthesis run.
pub struct Context {
    pub config: SynthesisConfig,
    pub resolver: Option<Arc<dyn ProgramResolver>>,
    pub uses: Vec<InstructionDescriptor>,
    pub deadline: Instant,
    cache: Mutex<HashMap<String, Arc<SubResult>>>,
    pool: Option<rayon::ThreadPool>,
}

impl Context {
    pub fn new(
        config: SynthesisConfig,
        resolver: Option<Arc<dyn ProgramResolver>>,
        uses: Vec<InstructionDescriptor>,
    ) -> Context {
        let pool = (config.workers > 1)
            .then(|| rayon::ThreadPoolBuilder::new().num_threads(config.workers).build().ok())
            .flatten();
        Context {
            deadline: Instant::now() + config.budget,
            config,
            resolver,
            uses,
            cache: Mutex::new(HashMap::new()),
            pool,
        }
    }

    pub fn parallel(&self) -> bool {
        self.pool.is_some()
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    pub fn resolver(&self) -> Option<&dyn ProgramResolver> {
        self.resolver.as_deref()
    }
}

/// Solves `problem` in a fresh instance one level below `parent` and returns
/// its best complete programs. Results are shared across the run by problem
/// key; a repeated request replays the recorded trace.
pub fn solve_sub(parent: &Blackboard, problem: Problem, purpose: &str, options: SubOptions, delta: &mut Delta) -> Vec<CompiledProgram> {
    let depth = parent.options.depth + 1;
    let ctx = &parent.ctx;
    if depth > ctx.config.max_recursion || Instant::now() >= ctx.deadline {
        return Vec::new();
    }
    let key = format!("{}|{}|{}", problem.key(), options.enumerate_only, options.full_catalog);
    let cached = ctx.cache.lock().unwrap().get(&key).cloned();
    let result = match cached {
        Some(r) => r,
        None => {
            let board_options = BoardOptions {
                depth,
                purpose: purpose.to_string(),
                enumerate_only: options.enumerate_only,
                full_catalog: options.full_catalog,
            };
            let mut board = init_blackboard(ctx.clone(), problem, board_options, parent.shared_sources());
            board.run_cycles();
            let (ranked, _) = ranked_candidates(&board);
            let programs = ranked
                .into_iter()
                .filter(|(c, _)| c.is_complete())
                .take(SUB_ALTERNATIVES)
                .map(|(c, _)| c.program)
                .collect();
            let mut pruned = std::mem::take(&mut board.pruned);
            pruned.extend(harvest_pruned(&board));
            let r = Arc::new(SubResult { programs, trace: std::mem::take(&mut board.trace), pruned });
            ctx.cache.lock().unwrap().entry(key).or_insert(r).clone()
        }
    };
    if ctx.config.trace {
        let indent = "  ".repeat(depth);
        delta.trace.push(format!("{indent}sub {purpose}: {} programs", result.programs.len()));
        delta.trace.extend(result.trace.iter().cloned());
    }
    delta.pruned.extend(result.pruned.iter().cloned());
    result.programs.clone()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubOptions {
    pub enumerate_only: bool,
    pub full_catalog: bool,
}

/// Pruned derivations recorded by the instance's value space.
fn harvest_pruned(board: &Blackboard) -> Vec<PrunedPair> {
    let room = board.ctx.config.harvest.saturating_sub(board.pruned.len());
    board
        .space
        .pruned()
        .iter()
        .take(room)
        .map(|p| PrunedPair {
            retained: board.space.program(p.retained),
            pruned: board.space.program_for_witness(&p.witness),
            inputs: board.problem.inputs.clone(),
            data: board.problem.data().cloned(),
        })
        .collect()
}

/// Every program solution of `board`, ranked. Waypoints count only if some
/// candidate honours them; the flag reports whether they did.
pub fn ranked_candidates(board: &Blackboard) -> (Vec<(Candidate, RankScore)>, bool) {
    let solutions: Vec<(&CompiledProgram, &Vec<bool>, &Vec<bool>, &String)> = board
        .level(Level::ProgramSolutions)
        .filter_map(|e| match &e.payload {
            Payload::ProgramSolution { program, coverage, plain, source, .. } => Some((program, coverage, plain, source)),
            _ => None,
        })
        .collect();
    let honoured = solutions.iter().any(|(_, c, _, _)| !c.is_empty() && c.iter().all(|&x| x));
    let candidates = solutions
        .into_iter()
        .map(|(program, coverage, plain, source)| Candidate {
            program: program.clone(),
            coverage: if honoured || !board.problem.has_waypoints() { coverage.clone() } else { plain.clone() },
            source: source.clone(),
        })
        .collect();
    (rank_candidates(candidates, &board.problem), honoured)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeStatus {
    Solved,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub program: CompiledProgram,
    pub score: RankScore,
    pub coverage: Vec<bool>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseCheck {
    pub label: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutcome {
    pub name: String,
    pub status: OutcomeStatus,
    pub winner: Option<CompiledProgram>,
    pub ranked: Vec<RankedCandidate>,
    pub verification: Vec<CaseCheck>,
    pub diagnostics: Vec<String>,
    pub trace: Vec<String>,
    pub pruned_pairs: Vec<PrunedPair>,
    pub stop: Option<StopReason>,
}

impl SynthesisOutcome {
    fn failed(name: &str, diagnostic: String) -> SynthesisOutcome {
        SynthesisOutcome {
            name: name.to_string(),
            status: OutcomeStatus::Failed,
            winner: None,
            ranked: Vec::new(),
            verification: Vec::new(),
            diagnostics: vec![diagnostic],
            trace: Vec::new(),
            pruned_pairs: Vec::new(),
            stop: None,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.status == OutcomeStatus::Solved
    }

    /// Deterministic text: winner, candidate table and per-case results. No timings.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let status = match self.status {
            OutcomeStatus::Solved => "solved",
            OutcomeStatus::Failed => "failed",
        };
        let _ = writeln!(out, "program: {}", self.name);
        let _ = writeln!(out, "status: {status}");
        if let Some(w) = &self.winner {
            let _ = writeln!(out, "winner: {}", w.summary());
            let _ = writeln!(out, "size: {}", w.size());
            out.push_str("code:\n");
            for line in w.canonical_form().lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        if !self.verification.is_empty() {
            out.push_str("cases:\n");
            for c in &self.verification {
                let _ = writeln!(out, "  {} {}", if c.passed { "pass" } else { "FAIL" }, c.label);
            }
        }
        if !self.ranked.is_empty() {
            out.push_str("candidates:\n");
            for (i, c) in self.ranked.iter().enumerate() {
                let covered = c.coverage.iter().filter(|&&x| x).count();
                let _ = writeln!(
                    out,
                    "  {:>2}. {}/{} specificity={} composite={} size={}{} [{}] {}",
                    i + 1,
                    covered,
                    c.coverage.len(),
                    c.score.specificity,
                    c.score.composite_penalty,
                    c.score.size,
                    if c.score.lookup { " lookup" } else { "" },
                    c.source,
                    c.program.summary()
                );
            }
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "note: {d}");
        }
        out
    }
}

/// Compiles `spec` with `registry` providing the used programs.
pub fn synthesize_with_registry(
    spec: &NormalizedSpec,
    config: &SynthesisConfig,
    registry: Arc<Registry>,
) -> Result<SynthesisOutcome, RegistryError> {
    let uses = registry.resolve_uses(spec)?;
    Ok(synthesize(spec, config, Some(registry), uses))
}

/// Finds the best program for `spec`. `uses` are the descriptors of
/// programs callable through `resolver`.
pub fn synthesize(
    spec: &NormalizedSpec,
    config: &SynthesisConfig,
    resolver: Option<Arc<dyn ProgramResolver>>,
    uses: Vec<InstructionDescriptor>,
) -> SynthesisOutcome {
    let problem = Problem::new(spec.clone());
    let conflicts = problem.contradictions();
    if let Some(&(a, b)) = conflicts.first() {
        return SynthesisOutcome::failed(
            &spec.name,
            format!(
                "inconsistent cases: {} and {} have the same input but different outputs",
                problem.labels[a], problem.labels[b]
            ),
        );
    }
    if spec.class == SpecClass::NullProgram {
        return SynthesisOutcome {
            name: spec.name.clone(),
            status: OutcomeStatus::Solved,
            winner: Some(CompiledProgram::Null),
            ranked: Vec::new(),
            verification: Vec::new(),
            diagnostics: Vec::new(),
            trace: Vec::new(),
            pruned_pairs: Vec::new(),
            stop: None,
        };
    }
    let ctx = Arc::new(Context::new(config.clone(), resolver, uses));
    let mut board = init_blackboard(ctx.clone(), problem, BoardOptions::top(), Arc::new(sources::all()));
    let stop = board.run_cycles();
    let (ranked, honoured) = ranked_candidates(&board);
    let mut diagnostics = Vec::new();
    let winner = ranked.first().filter(|(c, _)| c.is_complete()).map(|(c, _)| c.program.clone());
    let verification: Vec<CaseCheck> = match &winner {
        Some(w) => verify(w, &board.problem, ctx.resolver(), false)
            .into_iter()
            .zip(&board.problem.labels)
            .map(|(passed, label)| CaseCheck { label: label.clone(), passed })
            .collect(),
        None => Vec::new(),
    };
    let solved = winner.is_some() && verification.iter().all(|c| c.passed);
    if board.problem.has_waypoints() && !honoured {
        diagnostics.push("no candidate reproduces the derive values; they were ignored".to_string());
    }
    if !solved {
        let levels: Vec<String> =
            Level::ALL.iter().map(|&l| format!("{}={}", l.name(), board.count(l))).collect();
        diagnostics.push(format!("no complete program found (stopped: {})", stop.name()));
        diagnostics.push(format!("levels: {}", levels.join(", ")));
        if let Some((best, _)) = ranked.first() {
            diagnostics.push(format!(
                "nearest: {} covers {}/{} cases",
                best.program.summary(),
                best.covered(),
                best.coverage.len()
            ));
        }
    }
    let mut pruned_pairs = std::mem::take(&mut board.pruned);
    pruned_pairs.extend(harvest_pruned(&board));
    SynthesisOutcome {
        name: spec.name.clone(),
        status: if solved { OutcomeStatus::Solved } else { OutcomeStatus::Failed },
        winner: if solved { winner } else { None },
        ranked: ranked
            .into_iter()
            .take(RANKED_KEPT)
            .map(|(c, score)| RankedCandidate { program: c.program, score, coverage: c.coverage, source: c.source })
            .collect(),
        verification,
        diagnostics,
        trace: std::mem::take(&mut board.trace),
        pruned_pairs,
        stop: Some(stop),
    }
}
