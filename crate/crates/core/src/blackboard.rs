//! The shared workspace that knowledge sources read and extend in cycles.
//!
//! Each cycle the scheduler picks one knowledge source, turns its pending
//! agenda items into tasks, runs the tasks against the current state, and
//! applies their merged [`Delta`] in one step. Tasks never see each other's
//! additions, so the outcome does not depend on how many workers ran them.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::parser::SpecClass;
use crate::synthesis::induce::Skeleton;
use crate::synthesis::problem::Problem;
use crate::synthesis::rank::RankScore;
use crate::synthesis::seeds::select_instructions;
use crate::synthesis::space::{LayerResult, Limits, Seed, SpaceId, ValueSpace};
use crate::synthesis::{Context, PrunedPair};
use crate::values::{enumerate_elements, Path, Value};
use crate::vm::{catalog, CompiledProgram, InstructionDescriptor};

/// Cycles a source with pending work may be passed over before it preempts.
const AGING: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    TestCases,
    Elements,
    DerivedValues,
    CodeFragments,
    TargetValues,
    CaseSolutions,
    CaseSetSolutions,
    ProgramSolutions,
    SolutionCode,
}

impl Level {
    pub const ALL: [Level; 9] = [
        Level::TestCases,
        Level::Elements,
        Level::DerivedValues,
        Level::CodeFragments,
        Level::TargetValues,
        Level::CaseSolutions,
        Level::CaseSetSolutions,
        Level::ProgramSolutions,
        Level::SolutionCode,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Level::TestCases => "test cases",
            Level::Elements => "elements",
            Level::DerivedValues => "derived values",
            Level::CodeFragments => "code fragments",
            Level::TargetValues => "target values",
            Level::CaseSolutions => "case solutions",
            Level::CaseSetSolutions => "case set solutions",
            Level::ProgramSolutions => "program solutions",
            Level::SolutionCode => "solution code",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Open,
    Consumed,
    Retired,
}

pub type EntryId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Case { index: usize, input: Value, output: Value },
    /// An input element, or a data element when `case` is `None`.
    Element { case: Option<usize>, path: Path, value: Value },
    /// One completed enumeration layer: new or cheapened space entries.
    Derived { depth: usize, ids: Vec<SpaceId>, total: usize, finished: bool, fallback: bool },
    /// A hypothesis with candidate programs for each of its parts. Without a
    /// skeleton the single part already holds whole programs.
    Fragment { label: String, skeleton: Option<Skeleton>, parts: Vec<Vec<CompiledProgram>> },
    Target { case: usize, path: Path, value: Value },
    CaseSolution { case: usize, program: CompiledProgram },
    CaseSetSolution { program: CompiledProgram, coverage: Vec<bool> },
    /// A verified program. `coverage` honours derive waypoints, `plain` ignores them.
    ProgramSolution { program: CompiledProgram, coverage: Vec<bool>, plain: Vec<bool>, source: String, score: RankScore },
    Solution { program: CompiledProgram },
}

impl Payload {
    pub fn level(&self) -> Level {
        match self {
            Payload::Case { .. } => Level::TestCases,
            Payload::Element { .. } => Level::Elements,
            Payload::Derived { .. } => Level::DerivedValues,
            Payload::Fragment { .. } => Level::CodeFragments,
            Payload::Target { .. } => Level::TargetValues,
            Payload::CaseSolution { .. } => Level::CaseSolutions,
            Payload::CaseSetSolution { .. } => Level::CaseSetSolutions,
            Payload::ProgramSolution { .. } => Level::ProgramSolutions,
            Payload::Solution { .. } => Level::SolutionCode,
        }
    }

    /// Canonical text; equal keys mean the same entry.
    pub fn key(&self) -> String {
        let programs = |ps: &[CompiledProgram]| ps.iter().map(CompiledProgram::canonical_form).collect::<Vec<_>>().join(";");
        match self {
            Payload::Case { index, .. } => format!("case {index}"),
            Payload::Element { case, path, .. } => match case {
                Some(c) => format!("element {c} {path}"),
                None => format!("element data {path}"),
            },
            Payload::Derived { depth, finished, fallback, .. } => format!("derived {depth} {finished} {fallback}"),
            Payload::Fragment { label, parts, .. } => {
                format!("fragment {label} {}", parts.iter().map(|p| programs(p)).collect::<Vec<_>>().join("|"))
            }
            Payload::Target { case, path, .. } => format!("target {case} {path}"),
            Payload::CaseSolution { case, program } => format!("case solution {case} {}", program.canonical_form()),
            Payload::CaseSetSolution { program, .. } => format!("case set {}", program.canonical_form()),
            Payload::ProgramSolution { score, .. } => format!("program {}", score.canonical),
            Payload::Solution { program } => format!("solution {}", program.canonical_form()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub id: EntryId,
    pub level: Level,
    pub payload: Payload,
    /// Supporting entries at other levels.
    pub links: Vec<EntryId>,
    pub status: Status,
    pub cycle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewEntry {
    pub payload: Payload,
    pub links: Vec<EntryId>,
}

/// Enumeration work carried by a delta and applied to the value space.
#[derive(Debug)]
pub enum LayerWork {
    Seeds(Vec<Seed>),
    Layer { depth: usize, result: LayerResult },
    /// Enumeration will not continue (or its fallback has run).
    Finish { fallback: bool },
}

/// The changes proposed by one task, or by a whole cycle once consolidated.
#[derive(Debug, Default)]
pub struct Delta {
    pub source: String,
    pub cycle: usize,
    pub added: Vec<NewEntry>,
    pub retired: Vec<EntryId>,
    pub layer: Vec<LayerWork>,
    pub pruned: Vec<PrunedPair>,
    /// Trace lines of sub-instances run by the task.
    pub trace: Vec<String>,
}

impl Delta {
    pub fn new(source: &str) -> Delta {
        Delta { source: source.to_string(), ..Default::default() }
    }

    pub fn add(&mut self, payload: Payload, links: Vec<EntryId>) {
        self.added.push(NewEntry { payload, links });
    }
}

/// Merges the deltas of one cycle. Additions are deduplicated by payload key
/// (links of duplicates are united) and sorted by it; retirements are sorted
/// and deduplicated.
pub fn consolidate_deltas(deltas: Vec<Delta>) -> Delta {
    let mut out = Delta::default();
    let mut keyed: Vec<(String, NewEntry)> = Vec::new();
    for d in deltas {
        if out.source.is_empty() {
            out.source = d.source;
            out.cycle = d.cycle;
        }
        for e in d.added {
            keyed.push((e.payload.key(), e));
        }
        out.retired.extend(d.retired);
        out.layer.extend(d.layer);
        out.pruned.extend(d.pruned);
        out.trace.extend(d.trace);
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| {
        if a.0 != b.0 {
            return false;
        }
        b.1.links.append(&mut a.1.links);
        true
    });
    out.added = keyed
        .into_iter()
        .map(|(_, mut e)| {
            e.links.sort_unstable();
            e.links.dedup();
            e
        })
        .collect();
    out.retired.sort();
    out.retired.dedup();
    out
}

pub type Task = Box<dyn Fn(&Blackboard) -> Delta + Send + Sync>;

/// An expert procedure. Entries posted at a trigger level (and accepted by
/// `wants`) queue on its agenda; when selected it turns them into tasks.
pub trait KnowledgeSource: Send + Sync {
    fn name(&self) -> &'static str;
    fn triggers(&self) -> &'static [Level];
    fn wants(&self, _bb: &Blackboard, _entry: &Entry) -> bool {
        true
    }
    /// Whether pending items may be processed now.
    fn ready(&self, _bb: &Blackboard) -> bool {
        true
    }
    fn tasks(&self, bb: &Blackboard, items: &[EntryId]) -> Vec<Task>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardOptions {
    /// 0 for the top-level instance.
    pub depth: usize,
    pub purpose: String,
    /// Only enumeration runs; used for the full-catalog fallback.
    pub enumerate_only: bool,
    pub full_catalog: bool,
}

impl BoardOptions {
    pub fn top() -> BoardOptions {
        BoardOptions { depth: 0, purpose: String::new(), enumerate_only: false, full_catalog: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// A complete candidate that enumeration cannot beat any more.
    Solved,
    FirstComplete,
    Quiescent,
    Deadline,
    EntryCap,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Solved => "solved",
            StopReason::FirstComplete => "first complete",
            StopReason::Quiescent => "quiescent",
            StopReason::Deadline => "deadline",
            StopReason::EntryCap => "entry cap",
        }
    }
}

pub struct Blackboard {
    pub ctx: Arc<Context>,
    pub problem: Problem,
    pub options: BoardOptions,
    pub instructions: Vec<InstructionDescriptor>,
    /// The instruction subset is smaller than the full set.
    pub fallback: bool,
    pub limits: Limits,
    pub space: ValueSpace,
    pub enumeration_done: bool,
    pub cycle: usize,
    pub trace: Vec<String>,
    pub pruned: Vec<PrunedPair>,
    pub stop: Option<StopReason>,
    entries: Vec<Entry>,
    keys: HashMap<String, EntryId>,
    by_level: Vec<Vec<EntryId>>,
    sources: Arc<Vec<Box<dyn KnowledgeSource>>>,
    agenda: Vec<Vec<EntryId>>,
    waiting: Vec<usize>,
}

/// Sets up an instance: cases, input and data elements, and output targets.
/// Wildcard subtrees impose no targets.
pub fn init_blackboard(
    ctx: Arc<Context>,
    problem: Problem,
    options: BoardOptions,
    sources: Arc<Vec<Box<dyn KnowledgeSource>>>,
) -> Blackboard {
    let (instructions, fallback) = if options.full_catalog {
        let mut all = catalog();
        all.extend(ctx.uses.iter().cloned());
        (all, false)
    } else {
        select_instructions(&problem, &catalog(), &ctx.uses)
    };
    let limits = Limits {
        max_depth: ctx.config.max_depth,
        max_entries: ctx.config.max_entries,
        max_applications: ctx.config.max_applications,
    };
    let mut space = ValueSpace::new(problem.cases(), instructions.clone(), &limits);
    space.set_harvest(ctx.config.harvest);
    let n = sources.len();
    let mut bb = Blackboard {
        ctx,
        problem,
        options,
        instructions,
        fallback,
        limits,
        space,
        enumeration_done: false,
        cycle: 0,
        trace: Vec::new(),
        pruned: Vec::new(),
        stop: None,
        entries: Vec::new(),
        keys: HashMap::new(),
        by_level: vec![Vec::new(); Level::ALL.len()],
        sources,
        agenda: vec![Vec::new(); n],
        waiting: vec![0; n],
    };
    let mut cases = Vec::new();
    let mut rest = Vec::new();
    for c in 0..bb.problem.cases() {
        let input = bb.problem.inputs[c].clone();
        let output = bb.problem.outputs[c].clone();
        for (path, value) in enumerate_elements(&input) {
            rest.push(NewEntry { payload: Payload::Element { case: Some(c), path, value }, links: vec![c] });
        }
        for (path, value) in enumerate_elements(&output) {
            if !value.has_unspecified() {
                rest.push(NewEntry { payload: Payload::Target { case: c, path, value }, links: vec![c] });
            }
        }
        cases.push(NewEntry { payload: Payload::Case { index: c, input, output }, links: vec![] });
    }
    if let Some(data) = bb.problem.data().cloned() {
        for (path, value) in enumerate_elements(&data) {
            rest.push(NewEntry { payload: Payload::Element { case: None, path, value }, links: vec![] });
        }
    }
    // Case entries go first so that their ids equal the case indexes.
    for e in cases.into_iter().chain(rest) {
        bb.insert(e);
    }
    bb
}

impl Blackboard {
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn entry(&self, id: EntryId) -> &Entry {
        &self.entries[id]
    }

    pub fn level(&self, level: Level) -> impl Iterator<Item = &Entry> {
        self.by_level[level as usize].iter().map(move |&id| &self.entries[id])
    }

    pub fn count(&self, level: Level) -> usize {
        self.by_level[level as usize].len()
    }

    pub fn sources(&self) -> &[Box<dyn KnowledgeSource>] {
        &self.sources
    }

    pub fn shared_sources(&self) -> Arc<Vec<Box<dyn KnowledgeSource>>> {
        self.sources.clone()
    }

    pub fn class(&self) -> SpecClass {
        self.problem.class()
    }

    fn insert(&mut self, e: NewEntry) -> Option<EntryId> {
        let key = e.payload.key();
        if self.keys.contains_key(&key) {
            return None;
        }
        debug_assert!(e.links.iter().all(|&l| l < self.entries.len()));
        let id = self.entries.len();
        let level = e.payload.level();
        self.entries.push(Entry { id, level, payload: e.payload, links: e.links, status: Status::Open, cycle: self.cycle });
        self.keys.insert(key, id);
        self.by_level[level as usize].push(id);
        for (i, ks) in self.sources.iter().enumerate() {
            if ks.triggers().contains(&level) && ks.wants(self, &self.entries[id]) {
                self.agenda[i].push(id);
            }
        }
        Some(id)
    }

    /// The best complete program solution, by rank score.
    pub fn best_complete(&self) -> Option<&RankScore> {
        self.level(Level::ProgramSolutions)
            .filter_map(|e| match &e.payload {
                Payload::ProgramSolution { score, .. } if score.complete => Some(score),
                _ => None,
            })
            .min()
    }

    fn check_stop(&self) -> Option<StopReason> {
        if Instant::now() >= self.ctx.deadline {
            return Some(StopReason::Deadline);
        }
        if self.entries.len() > self.limits.max_entries {
            return Some(StopReason::EntryCap);
        }
        if self.ctx.config.stop_at_first_complete && self.count(Level::SolutionCode) > 0 {
            return Some(StopReason::FirstComplete);
        }
        let best = self.best_complete()?;
        let general = best.specificity == 0 && best.composite_penalty == 0 && !best.lookup;
        if general && (best.size as usize) <= self.space.depth_reached() + 1 {
            return Some(StopReason::Solved);
        }
        None
    }

    /// Runs cycles until a stop rule fires.
    pub fn run_cycles(&mut self) -> StopReason {
        loop {
            if let Some(reason) = self.check_stop() {
                self.stop = Some(reason);
                return reason;
            }
            let pending: Vec<usize> = (0..self.sources.len())
                .filter(|&i| !self.agenda[i].is_empty() && self.sources[i].ready(self))
                .collect();
            let Some(&first) = pending.first() else {
                self.stop = Some(StopReason::Quiescent);
                return StopReason::Quiescent;
            };
            let chosen = pending
                .iter()
                .copied()
                .filter(|&i| self.waiting[i] >= AGING)
                .max_by(|&a, &b| self.waiting[a].cmp(&self.waiting[b]).then(b.cmp(&a)))
                .unwrap_or(first);
            for &i in &pending {
                self.waiting[i] = if i == chosen { 0 } else { self.waiting[i] + 1 };
            }
            let items = std::mem::take(&mut self.agenda[chosen]);
            let sources = self.sources.clone();
            let ks = &sources[chosen];
            let tasks = ks.tasks(self, &items);
            let task_count = tasks.len();
            let deltas: Vec<Delta> = if self.ctx.parallel() && task_count > 1 {
                let this: &Blackboard = self;
                self.ctx.install(|| tasks.par_iter().map(|t| t(this)).collect())
            } else {
                tasks.iter().map(|t| t(self)).collect()
            };
            let mut delta = consolidate_deltas(deltas);
            delta.source = ks.name().to_string();
            delta.cycle = self.cycle;
            for id in items {
                if self.entries[id].status == Status::Open {
                    self.entries[id].status = Status::Consumed;
                }
            }
            let sub_trace = std::mem::take(&mut delta.trace);
            let (added, retired) = self.apply(delta);
            if self.ctx.config.trace {
                let indent = "  ".repeat(self.options.depth);
                self.trace.push(format!(
                    "{indent}cycle {} {} tasks={task_count} added={added} retired={retired}",
                    self.cycle,
                    ks.name()
                ));
                self.trace.extend(sub_trace);
            }
            self.cycle += 1;
        }
    }

    /// Applies a consolidated delta; returns the numbers of added and retired entries.
    fn apply(&mut self, delta: Delta) -> (usize, usize) {
        let mut added = 0;
        let mut layer_depth = None;
        let mut results = Vec::new();
        let mut finish = None;
        for work in delta.layer {
            match work {
                LayerWork::Seeds(seeds) => {
                    for s in seeds {
                        self.space.add_seed(s);
                    }
                    layer_depth = Some(0);
                }
                LayerWork::Layer { depth, result } => {
                    layer_depth = Some(depth);
                    if result.exhausted {
                        self.space.truncated = true;
                    }
                    results.push(result);
                }
                LayerWork::Finish { fallback } => finish = Some(fallback),
            }
        }
        if let Some(depth) = layer_depth {
            let ids = if depth == 0 {
                (0..self.space.len()).collect()
            } else {
                let (mut new, touched) = self.space.merge_layer(depth, results);
                self.space.settle_costs();
                new.extend(touched);
                new
            };
            if Instant::now() >= self.ctx.deadline {
                self.space.truncated = true;
            }
            let finished = depth >= self.limits.max_depth
                || self.space.truncated
                || (depth > 0 && self.space.at_depth(depth).is_empty());
            let payload = Payload::Derived { depth, ids, total: self.space.len(), finished, fallback: false };
            if self.insert(NewEntry { payload, links: vec![] }).is_some() {
                added += 1;
            }
            if finished {
                self.enumeration_done = true;
            }
        }
        if let Some(fallback) = finish {
            self.enumeration_done = true;
            let payload =
                Payload::Derived { depth: self.space.depth_reached(), ids: vec![], total: self.space.len(), finished: true, fallback };
            if self.insert(NewEntry { payload, links: vec![] }).is_some() {
                added += 1;
            }
        }
        for e in delta.added {
            if self.insert(e).is_some() {
                added += 1;
            }
        }
        let mut retired = 0;
        for id in delta.retired {
            if id < self.entries.len() && self.entries[id].status != Status::Retired {
                self.entries[id].status = Status::Retired;
                retired += 1;
            }
        }
        let room = self.ctx.config.harvest.saturating_sub(self.pruned.len());
        self.pruned.extend(delta.pruned.into_iter().take(room));
        (added, retired)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(v: i64) -> NewEntry {
        NewEntry { payload: Payload::Solution { program: CompiledProgram::literal(Value::int(v)) }, links: vec![] }
    }

    #[test]
    fn consolidation_merges_duplicates_in_any_order() {
        let d = |vals: &[i64]| {
            let mut d = Delta::new("t");
            d.added = vals.iter().map(|&v| entry(v)).collect();
            d
        };
        let a = consolidate_deltas(vec![d(&[1, 2]), d(&[2, 3])]);
        let b = consolidate_deltas(vec![d(&[2, 3]), d(&[1, 2])]);
        assert_eq!(a.added.len(), 3);
        assert_eq!(a.added, b.added);
        assert!(consolidate_deltas(vec![]).added.is_empty());
    }

    #[test]
    fn levels_are_ordered() {
        assert_eq!(Level::ALL.len(), 9);
        assert!(Level::ALL.windows(2).all(|w| w[0] < w[1]));
    }
}
