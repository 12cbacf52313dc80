//! The distinct-value space.
//!
//! Every entry is an observation vector: the value an expression takes on each
//! case input (`None` where it fails). Two expressions with equal vectors are
//! indistinguishable on the cases, so only the first one found is kept as the
//! entry's witness and later ones are recorded as alternatives.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::values::{Path, TypeClass, Value};
use crate::vm::{
    apply_builtin, apply_instruction, CompiledProgram, DagBuilder, ExecutionEnv, InstructionDescriptor,
    InstructionKind, Node, NodeId, Op, ProgramResolver,
};

pub type SpaceId = usize;
pub type Observation = Arc<[Option<Value>]>;

/// How many extra witnesses an entry remembers.
const MAX_ALTERNATIVES: usize = 4;
/// First-argument chunk size when splitting a layer into tasks.
const CHUNK: usize = 48;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SeedKind {
    Input(Path),
    Data(Path),
    Literal(Value),
}

/// A starting value of the search, one value per case.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub kind: SeedKind,
    pub values: Vec<Value>,
    /// Case-specificity charged when a program uses this seed.
    pub specificity: u32,
}

impl Seed {
    pub fn literal(v: Value, cases: usize, specificity: u32) -> Seed {
        Seed { values: vec![v.clone(); cases], kind: SeedKind::Literal(v), specificity }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Witness {
    Seed(SeedKind, u32),
    Apply { instr: usize, args: Vec<SpaceId> },
}

impl Witness {
    fn apply_key(&self) -> (usize, &[SpaceId]) {
        match self {
            Witness::Apply { instr, args } => (*instr, args),
            Witness::Seed(..) => (usize::MAX, &[]),
        }
    }
}

/// Cost of the cheapest known derivation: specificity first, then size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost {
    pub specificity: u32,
    pub size: u32,
}

#[derive(Debug, Clone)]
pub struct SpaceEntry {
    pub values: Observation,
    pub depth: usize,
    /// The first witness is the one found at `depth`.
    pub witnesses: Vec<Witness>,
    /// How many applications produced this vector, pruned ones included.
    pub origin_count: usize,
    pub class: Option<TypeClass>,
    pub best: Cost,
    best_witness: usize,
}

impl SpaceEntry {
    pub fn is_total(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn best_witness(&self) -> &Witness {
        &self.witnesses[self.best_witness]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_depth: usize,
    pub max_entries: usize,
    /// Instruction applications allowed per layer.
    pub max_applications: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_depth: 4, max_entries: 200_000, max_applications: 3_000_000 }
    }
}

/// What a layer task needs to evaluate instructions.
#[derive(Clone, Copy, Default)]
pub struct EvalEnv<'a> {
    pub data: Option<&'a Value>,
    pub resolver: Option<&'a dyn ProgramResolver>,
    pub deadline: Option<Instant>,
}

/// An application whose result was already in the space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub witness: Witness,
    pub retained: SpaceId,
}

/// One unit of layer work: one instruction, one slice of first arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTask {
    pub depth: usize,
    pub instr: usize,
    pub first: std::ops::Range<usize>,
    pub budget: usize,
}

#[derive(Debug, Default)]
pub struct LayerResult {
    pub found: Vec<(Observation, Witness)>,
    pub pruned: Vec<Pruned>,
    pub applications: usize,
    pub exhausted: bool,
}

#[derive(Debug, Clone)]
pub struct ValueSpace {
    cases: usize,
    instructions: Vec<InstructionDescriptor>,
    entries: Vec<SpaceEntry>,
    index: FxHashMap<Observation, SpaceId>,
    by_depth: Vec<Vec<SpaceId>>,
    pub truncated: bool,
    max_entries: usize,
    harvest_limit: usize,
    pruned: Vec<Pruned>,
}

fn common_class(values: &[Option<Value>]) -> Option<TypeClass> {
    let mut class = None;
    for v in values.iter().flatten() {
        let c = v.type_class();
        match class {
            None => class = Some(c),
            Some(k) if k == c => {}
            Some(_) => return None,
        }
    }
    class
}

/// Unary applications whose result is known to exist already.
fn redundant(op: Op, inner: Option<Op>) -> bool {
    let Some(inner) = inner else { return false };
    match op {
        Op::Sort => matches!(inner, Op::Sort | Op::Reverse | Op::Unique),
        Op::Reverse => inner == Op::Reverse,
        Op::Unique | Op::Upper | Op::Lower | Op::Titlecase | Op::Trim | Op::Abs | Op::Round | Op::Flatten => {
            inner == op || (matches!(op, Op::Upper | Op::Lower | Op::Titlecase) && matches!(inner, Op::Upper | Op::Lower | Op::Titlecase))
        }
        Op::Neg | Op::Not => inner == op,
        Op::Length | Op::Sum | Op::Product | Op::Min | Op::Max | Op::Mean | Op::Median => {
            matches!(inner, Op::Sort | Op::Reverse)
        }
        _ => false,
    }
}

/// Whether forward enumeration applies this instruction. Higher-order
/// instructions need fragments and library-parameter instructions need
/// literals the space does not hold; dedicated knowledge sources build both.
pub fn enumerable(d: &InstructionDescriptor) -> bool {
    match d.op() {
        Some(op) => op.fragment_slots() == 0 && !op.takes_library_parameter() && op != Op::MakeRecord,
        None => d.fragment_slots == 0 && d.arity == 1,
    }
}

impl ValueSpace {
    pub fn new(cases: usize, instructions: Vec<InstructionDescriptor>, limits: &Limits) -> ValueSpace {
        ValueSpace {
            cases,
            instructions,
            entries: Vec::new(),
            index: FxHashMap::default(),
            by_depth: vec![Vec::new()],
            truncated: false,
            max_entries: limits.max_entries,
            harvest_limit: 0,
            pruned: Vec::new(),
        }
    }

    /// Keep up to `limit` pruned applications for later inspection.
    pub fn set_harvest(&mut self, limit: usize) {
        self.harvest_limit = limit;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cases(&self) -> usize {
        self.cases
    }

    pub fn entry(&self, id: SpaceId) -> &SpaceEntry {
        &self.entries[id]
    }

    pub fn entries(&self) -> &[SpaceEntry] {
        &self.entries
    }

    pub fn instructions(&self) -> &[InstructionDescriptor] {
        &self.instructions
    }

    pub fn lookup(&self, values: &[Option<Value>]) -> Option<SpaceId> {
        self.index.get(values).copied()
    }

    /// Looks up a vector of total values.
    pub fn find(&self, values: &[Value]) -> Option<SpaceId> {
        let key: Vec<Option<Value>> = values.iter().cloned().map(Some).collect();
        self.lookup(&key)
    }

    pub fn depth_reached(&self) -> usize {
        self.by_depth.len() - 1
    }

    pub fn at_depth(&self, d: usize) -> &[SpaceId] {
        self.by_depth.get(d).map_or(&[], |v| v.as_slice())
    }

    pub fn pruned(&self) -> &[Pruned] {
        &self.pruned
    }

    /// Canonical text of an observation vector.
    pub fn key_text(values: &[Option<Value>]) -> String {
        values.iter().map(|v| v.as_ref().map_or_else(|| "!".to_string(), Value::render)).collect::<Vec<_>>().join(" | ")
    }

    pub fn add_seed(&mut self, seed: Seed) -> Option<SpaceId> {
        if seed.values.len() != self.cases || seed.values.iter().any(Value::has_unspecified) {
            return None;
        }
        let values: Observation = seed.values.into_iter().map(Some).collect();
        let witness = Witness::Seed(seed.kind, seed.specificity);
        let cost = Cost { specificity: seed.specificity, size: 0 };
        if let Some(&id) = self.index.get(&values) {
            let e = &mut self.entries[id];
            e.origin_count += 1;
            if e.witnesses.len() <= MAX_ALTERNATIVES {
                e.witnesses.push(witness);
                if cost < e.best {
                    e.best = cost;
                    e.best_witness = e.witnesses.len() - 1;
                }
            }
            return Some(id);
        }
        Some(self.insert(values, 0, witness, cost))
    }

    fn insert(&mut self, values: Observation, depth: usize, witness: Witness, best: Cost) -> SpaceId {
        let id = self.entries.len();
        let class = common_class(&values);
        self.index.insert(values.clone(), id);
        while self.by_depth.len() <= depth {
            self.by_depth.push(Vec::new());
        }
        self.by_depth[depth].push(id);
        self.entries.push(SpaceEntry {
            values,
            depth,
            witnesses: vec![witness],
            origin_count: 1,
            class,
            best,
            best_witness: 0,
        });
        id
    }

    fn witness_cost(&self, w: &Witness) -> Cost {
        match w {
            Witness::Seed(_, s) => Cost { specificity: *s, size: 0 },
            Witness::Apply { instr, args } => {
                let mut c = Cost { specificity: 0, size: self.instructions[*instr].cost };
                for a in args {
                    let b = self.entries[*a].best;
                    c.specificity += b.specificity;
                    c.size += b.size;
                }
                c
            }
        }
    }

    /// Splits layer `depth` into tasks. Arguments come from entries of smaller
    /// depth and at least one argument has depth `depth - 1`.
    pub fn plan_layer(&self, depth: usize, limits: &Limits) -> Vec<LayerTask> {
        if depth == 0 || self.at_depth(depth - 1).is_empty() {
            return Vec::new();
        }
        let pool_len = self.by_depth.iter().take(depth).map(Vec::len).sum::<usize>();
        let mut tasks = Vec::new();
        for (instr, d) in self.instructions.iter().enumerate() {
            if !enumerable(d) {
                continue;
            }
            let first_len = if d.arity == 1 { self.at_depth(depth - 1).len() } else { pool_len };
            let mut start = 0;
            while start < first_len {
                let end = (start + CHUNK).min(first_len);
                tasks.push(LayerTask { depth, instr, first: start..end, budget: 0 });
                start = end;
            }
        }
        let share = (limits.max_applications / tasks.len().max(1)).max(1);
        for t in &mut tasks {
            t.budget = share;
        }
        tasks
    }

    fn pool(&self, class: TypeClass, max_depth: usize) -> Vec<SpaceId> {
        let mut ids: Vec<SpaceId> = self
            .by_depth
            .iter()
            .take(max_depth + 1)
            .flatten()
            .copied()
            .filter(|&id| class == TypeClass::Any || self.entries[id].class == Some(class))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Evaluates one task against this space. Pure: the space is not changed.
    pub fn run_layer_task(&self, task: &LayerTask, env: &EvalEnv) -> LayerResult {
        let desc = &self.instructions[task.instr];
        let depth = task.depth;
        let mut out = LayerResult::default();
        let pools: Vec<Vec<SpaceId>> = desc.signature.iter().map(|c| self.pool(*c, depth - 1)).collect();
        let first: Vec<SpaceId> = if desc.arity == 1 {
            self.at_depth(depth - 1)
                .iter()
                .copied()
                .filter(|&id| desc.signature[0] == TypeClass::Any || self.entries[id].class == Some(desc.signature[0]))
                .collect()
        } else {
            pools[0].clone()
        };
        // Task ranges index the unfiltered first-argument list; map them onto
        // the filtered one by id.
        let all_first: Vec<SpaceId> = if desc.arity == 1 {
            self.at_depth(depth - 1).to_vec()
        } else {
            let mut v: Vec<SpaceId> = self.by_depth.iter().take(depth).flatten().copied().collect();
            v.sort_unstable();
            v
        };
        let range_ids: Vec<SpaceId> = all_first[task.first.clone()].to_vec();
        let first: Vec<SpaceId> = first.into_iter().filter(|id| range_ids.binary_search(id).is_ok()).collect();

        let mut args = vec![0usize; desc.arity];
        let mut check = 0usize;
        'outer: for &a0 in &first {
            args[0] = a0;
            let rest: Vec<&[SpaceId]> = pools.iter().skip(1).map(Vec::as_slice).collect();
            let mut idx = vec![0usize; rest.len()];
            if rest.iter().any(|p| p.is_empty()) {
                continue;
            }
            loop {
                for (k, p) in rest.iter().enumerate() {
                    args[k + 1] = p[idx[k]];
                }
                let fresh = args.iter().any(|&a| self.entries[a].depth == depth - 1);
                if fresh && !self.skip(desc, &args) {
                    out.applications += 1;
                    if out.applications > task.budget {
                        out.exhausted = true;
                        break 'outer;
                    }
                    check += 1;
                    if check.is_multiple_of(4096) && env.deadline.is_some_and(|d| Instant::now() >= d) {
                        out.exhausted = true;
                        break 'outer;
                    }
                    self.apply_and_record(task.instr, &args, env, &mut out);
                }
                // Advance the odometer over the remaining argument pools.
                let mut k = rest.len();
                loop {
                    if k == 0 {
                        continue 'outer;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < rest[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        out
    }

    fn skip(&self, desc: &InstructionDescriptor, args: &[SpaceId]) -> bool {
        let Some(op) = desc.op() else { return false };
        if args.len() == 1 {
            let inner = match self.entries[args[0]].witnesses[0] {
                Witness::Apply { instr, .. } => self.instructions[instr].op(),
                Witness::Seed(..) => None,
            };
            return redundant(op, inner);
        }
        // Commutative operations: one operand order is enough.
        matches!(op, Op::Add | Op::Mul | Op::Eq | Op::And | Op::Or) && args[0] > args[1]
    }

    fn apply_and_record(&self, instr: usize, args: &[SpaceId], env: &EvalEnv, out: &mut LayerResult) {
        let desc = &self.instructions[instr];
        let mut values: Vec<Option<Value>> = Vec::with_capacity(self.cases);
        let mut any = false;
        let mut operands: Vec<Value> = Vec::with_capacity(args.len());
        for c in 0..self.cases {
            operands.clear();
            let mut missing = false;
            for &a in args {
                match &self.entries[a].values[c] {
                    Some(v) => operands.push(v.clone()),
                    None => {
                        missing = true;
                        break;
                    }
                }
            }
            let r = if missing {
                None
            } else {
                match &desc.kind {
                    InstructionKind::Builtin(op) => apply_builtin(*op, &operands).ok(),
                    InstructionKind::Call(name) => {
                        let exec = ExecutionEnv { data: env.data, resolver: env.resolver, ..Default::default() };
                        apply_instruction(name, &operands, &[], &exec).ok()
                    }
                }
            };
            any |= r.is_some();
            values.push(r);
        }
        if !any {
            return;
        }
        let witness = Witness::Apply { instr, args: args.to_vec() };
        match self.index.get(values.as_slice()) {
            Some(&retained) => {
                if out.pruned.len() < 64
                    || self.harvest_limit > 0
                    || self.witness_cost(&witness) < self.entries[retained].best
                {
                    out.pruned.push(Pruned { witness, retained });
                }
            }
            None => out.found.push((values.into(), witness)),
        }
    }

    /// Merges the results of one layer. Returns the ids of new entries and the
    /// ids of existing entries that gained a cheaper derivation.
    pub fn merge_layer(&mut self, depth: usize, results: Vec<LayerResult>) -> (Vec<SpaceId>, Vec<SpaceId>) {
        let mut groups: FxHashMap<Observation, Vec<Witness>> = FxHashMap::default();
        let mut pruned = Vec::new();
        for r in results {
            for (values, w) in r.found {
                groups.entry(values).or_default().push(w);
            }
            pruned.extend(r.pruned);
        }
        // Cheapest first, so that a full space drops the costliest values.
        let mut fresh: Vec<(Cost, String, Observation, Vec<Witness>)> = groups
            .into_iter()
            .map(|(v, mut ws)| {
                ws.sort_by(|a, b| a.apply_key().cmp(&b.apply_key()));
                (self.witness_cost(&ws[0]), Self::key_text(&v), v, ws)
            })
            .collect();
        fresh.sort_by(|a, b| a.0.size.cmp(&b.0.size).then(a.0.specificity.cmp(&b.0.specificity)).then(a.1.cmp(&b.1)));

        let mut added = Vec::new();
        for (_, _, values, mut ws) in fresh {
            if self.entries.len() >= self.max_entries {
                self.truncated = true;
                break;
            }
            let first = ws.remove(0);
            let cost = self.witness_cost(&first);
            let id = self.insert(values, depth, first, cost);
            for w in ws {
                self.record_alternative(id, w.clone());
                self.harvest(Pruned { witness: w, retained: id });
            }
            added.push(id);
        }
        if self.by_depth.len() <= depth {
            self.by_depth.push(Vec::new());
        }

        pruned.sort_by(|a, b| (a.retained, a.witness.apply_key()).cmp(&(b.retained, b.witness.apply_key())));
        let mut touched = Vec::new();
        for p in pruned {
            if self.record_alternative(p.retained, p.witness.clone()) {
                touched.push(p.retained);
            }
            self.harvest(p);
        }
        touched.dedup();
        (added, touched)
    }

    fn harvest(&mut self, p: Pruned) {
        if self.pruned.len() < self.harvest_limit {
            self.pruned.push(p);
        }
    }

    /// Adds a witness to an entry; true if it lowered the entry's cost.
    fn record_alternative(&mut self, id: SpaceId, w: Witness) -> bool {
        if let Witness::Apply { args, .. } = &w {
            if args.contains(&id) {
                return false;
            }
        }
        let cost = self.witness_cost(&w);
        let e = &mut self.entries[id];
        e.origin_count += 1;
        if e.witnesses.contains(&w) {
            return false;
        }
        if cost < e.best {
            e.witnesses.push(w);
            e.best = cost;
            e.best_witness = e.witnesses.len() - 1;
            if e.witnesses.len() > MAX_ALTERNATIVES + 1 {
                // Drop the oldest alternative that is neither primary nor best.
                let drop = (1..e.witnesses.len()).find(|&i| i != e.best_witness).unwrap();
                e.witnesses.remove(drop);
                if e.best_witness > drop {
                    e.best_witness -= 1;
                }
            }
            return true;
        }
        if e.witnesses.len() <= MAX_ALTERNATIVES {
            e.witnesses.push(w);
        }
        false
    }

    /// Recomputes cheapest derivations until nothing changes.
    pub fn settle_costs(&mut self) {
        for _ in 0..16 {
            let mut changed = false;
            for id in 0..self.entries.len() {
                let mut best = self.entries[id].best;
                let mut best_w = self.entries[id].best_witness;
                for (i, w) in self.entries[id].witnesses.iter().enumerate() {
                    let c = self.witness_cost(w);
                    if c < best {
                        best = c;
                        best_w = i;
                    }
                }
                if best < self.entries[id].best {
                    self.entries[id].best = best;
                    self.entries[id].best_witness = best_w;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Adds the node for `id` using cheapest derivations.
    pub fn build(&self, id: SpaceId, b: &mut DagBuilder, memo: &mut HashMap<SpaceId, NodeId>) -> NodeId {
        self.build_guarded(id, b, memo, &mut Vec::new())
    }

    fn build_guarded(
        &self,
        id: SpaceId,
        b: &mut DagBuilder,
        memo: &mut HashMap<SpaceId, NodeId>,
        stack: &mut Vec<SpaceId>,
    ) -> NodeId {
        if let Some(&n) = memo.get(&id) {
            return n;
        }
        let e = &self.entries[id];
        // A cycle through cheaper alternatives cannot happen with settled costs,
        // but fall back to the discovery witness if it ever does.
        let w = if stack.contains(&id) { &e.witnesses[0] } else { e.best_witness() };
        stack.push(id);
        let n = self.build_witness(w, b, memo, stack);
        stack.pop();
        memo.insert(id, n);
        n
    }

    fn build_witness(
        &self,
        w: &Witness,
        b: &mut DagBuilder,
        memo: &mut HashMap<SpaceId, NodeId>,
        stack: &mut Vec<SpaceId>,
    ) -> NodeId {
        match w {
            Witness::Seed(SeedKind::Input(p), _) => b.add(Node::Input(p.clone())),
            Witness::Seed(SeedKind::Data(p), _) => b.add(Node::Data(p.clone())),
            Witness::Seed(SeedKind::Literal(v), _) => b.add(Node::Literal(v.clone())),
            Witness::Apply { instr, args } => {
                let ids: Vec<NodeId> = args.iter().map(|a| self.build_guarded(*a, b, memo, stack)).collect();
                match &self.instructions[*instr].kind {
                    InstructionKind::Builtin(op) => b.apply(op.name(), ids),
                    InstructionKind::Call(name) => b.add(Node::Call { program: name.clone(), arg: ids[0] }),
                }
            }
        }
    }

    /// Direct program computing entry `id` by its cheapest derivation.
    pub fn program(&self, id: SpaceId) -> CompiledProgram {
        let mut b = DagBuilder::new();
        let out = self.build(id, &mut b, &mut HashMap::new());
        b.finish(out)
    }

    /// Direct program for one specific witness.
    pub fn program_for_witness(&self, w: &Witness) -> CompiledProgram {
        let mut b = DagBuilder::new();
        let out = self.build_witness(w, &mut b, &mut HashMap::new(), &mut Vec::new());
        b.finish(out)
    }

    /// Runs all layers up to `limits.max_depth`.
    pub fn enumerate(&mut self, limits: &Limits, env: &EvalEnv, parallel: bool) {
        for depth in self.depth_reached() + 1..=limits.max_depth {
            if self.at_depth(depth - 1).is_empty() || self.truncated {
                break;
            }
            if env.deadline.is_some_and(|d| Instant::now() >= d) {
                self.truncated = true;
                break;
            }
            let tasks = self.plan_layer(depth, limits);
            let results: Vec<LayerResult> = if parallel {
                tasks.par_iter().map(|t| self.run_layer_task(t, env)).collect()
            } else {
                tasks.iter().map(|t| self.run_layer_task(t, env)).collect()
            };
            if results.iter().any(|r| r.exhausted) {
                self.truncated = true;
            }
            self.merge_layer(depth, results);
        }
    }
}

/// Builds the value space of `seeds` under `instructions`, breadth-first by depth.
pub fn forward_enumerate(
    seeds: Vec<Seed>,
    instructions: Vec<InstructionDescriptor>,
    limits: &Limits,
    env: &EvalEnv,
) -> ValueSpace {
    let cases = seeds.first().map_or(1, |s| s.values.len());
    let mut space = ValueSpace::new(cases, instructions, limits);
    for s in seeds {
        space.add_seed(s);
    }
    space.enumerate(limits, env, true);
    space
}

/// Derivations of `target`, smallest first, at most `k`.
///
/// Candidates come from the entry's own witnesses, from inverse enumerators
/// for a few arithmetic and list instructions, and from a rescan of unary
/// instructions over shallower entries.
pub fn reverse_derive(target: &[Value], space: &ValueSpace, k: usize) -> Vec<CompiledProgram> {
    let key: Vec<Option<Value>> = target.iter().cloned().map(Some).collect();
    let target_depth = space.lookup(&key).map_or(usize::MAX, |id| space.entry(id).depth);
    let mut found: Vec<CompiledProgram> = Vec::new();
    let push = |p: CompiledProgram, found: &mut Vec<CompiledProgram>| {
        if !found.contains(&p) {
            found.push(p);
        }
    };

    if let Some(id) = space.lookup(&key) {
        push(space.program(id), &mut found);
        for w in &space.entry(id).witnesses {
            push(space.program_for_witness(w), &mut found);
        }
        if found.len() >= k {
            found.sort_by_cached_key(|p| (p.size(), p.canonical_form()));
            found.truncate(k);
            return found;
        }
    }

    let instr_of = |op: Op| space.instructions().iter().position(|d| d.op() == Some(op));
    let lookup_vec = |vals: Vec<Value>| space.find(&vals);
    let shallow: Vec<SpaceId> =
        (0..space.len()).filter(|&i| space.entry(i).depth < target_depth && space.entry(i).is_total()).collect();

    let numeric_target = target.iter().all(|v| v.as_number().is_some());
    for &x in &shallow {
        let xs: Vec<&Value> = space.entry(x).values.iter().map(|v| v.as_ref().unwrap()).collect();
        if numeric_target && xs.iter().all(|v| v.as_number().is_some()) {
            let inverse = |op: Op| -> Option<Vec<Value>> {
                let mut out = Vec::with_capacity(target.len());
                for (t, x) in target.iter().zip(&xs) {
                    let y = match op {
                        Op::Add => apply_builtin(Op::Sub, &[t.clone(), (*x).clone()]),
                        Op::Sub => apply_builtin(Op::Sub, &[(*x).clone(), t.clone()]),
                        Op::Mul => apply_builtin(Op::Div, &[t.clone(), (*x).clone()]),
                        _ => return None,
                    };
                    out.push(y.ok()?);
                }
                Some(out)
            };
            for op in [Op::Add, Op::Sub, Op::Mul] {
                let (Some(instr), Some(ys)) = (instr_of(op), inverse(op)) else { continue };
                if let Some(y) = lookup_vec(ys) {
                    if space.entry(y).depth < target_depth || target_depth == usize::MAX {
                        push(space.program_for_witness(&Witness::Apply { instr, args: vec![x, y] }), &mut found);
                    }
                }
            }
        }
        // concat_text: x must be a prefix of the target in every case.
        if let Some(instr) = instr_of(Op::ConcatText) {
            let suffixes: Option<Vec<Value>> = target
                .iter()
                .zip(&xs)
                .map(|(t, x)| match (t, x) {
                    (Value::Text(t), Value::Text(x)) if t.starts_with(x.as_str()) => {
                        Some(Value::text(&t[x.len()..]))
                    }
                    _ => None,
                })
                .collect();
            if let Some(y) = suffixes.and_then(lookup_vec) {
                push(space.program_for_witness(&Witness::Apply { instr, args: vec![x, y] }), &mut found);
            }
        }
    }

    // Two-element lists: both components must be present.
    if let Some(instr) = instr_of(Op::MakeList2) {
        let parts: Option<(Vec<Value>, Vec<Value>)> = target
            .iter()
            .map(|t| match t.as_list() {
                Some([a, b]) => Some((a.clone(), b.clone())),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(|v| v.into_iter().unzip());
        if let Some((a, b)) = parts {
            if let (Some(a), Some(b)) = (lookup_vec(a), lookup_vec(b)) {
                push(space.program_for_witness(&Witness::Apply { instr, args: vec![a, b] }), &mut found);
            }
        }
    }

    // Fallback: unary instructions over shallower entries.
    for (instr, d) in space.instructions().iter().enumerate() {
        if d.arity != 1 || !enumerable(d) {
            continue;
        }
        let Some(op) = d.op() else { continue };
        for &x in &shallow {
            let ok = space.entry(x).values.iter().zip(target).all(|(v, t)| {
                v.as_ref().and_then(|v| apply_builtin(op, std::slice::from_ref(v)).ok()).as_ref() == Some(t)
            });
            if ok {
                push(space.program_for_witness(&Witness::Apply { instr, args: vec![x] }), &mut found);
            }
        }
    }

    found.sort_by_cached_key(|p| (p.size(), p.canonical_form()));
    found.truncate(k);
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::parse_value;
    use crate::vm::{catalog, execute};

    fn v(s: &str) -> Value {
        parse_value(s).unwrap()
    }

    fn subset(names: &[&str]) -> Vec<InstructionDescriptor> {
        catalog().into_iter().filter(|d| names.contains(&d.name.as_str())).collect()
    }

    #[test]
    fn sort_reverse_length_layer() {
        let seeds = vec![Seed { kind: SeedKind::Input(Path::root()), values: vec![v("[2,1]")], specificity: 0 }];
        let limits = Limits { max_depth: 2, ..Default::default() };
        let space = forward_enumerate(seeds, subset(&["sort", "reverse", "length"]), &limits, &EvalEnv::default());
        let depth1: Vec<String> =
            space.at_depth(1).iter().map(|&i| ValueSpace::key_text(&space.entry(i).values)).collect();
        assert_eq!(depth1, vec!["2", "[1,2]"]);
        // reverse([1,2]) is the input again; length of anything new is 2.
        assert!(space.at_depth(2).is_empty());
    }

    #[test]
    fn empty_instruction_set_keeps_seeds() {
        let seeds = vec![Seed::literal(Value::int(3), 1, 0), Seed::literal(v("[1]"), 1, 0)];
        let space = forward_enumerate(seeds, Vec::new(), &Limits::default(), &EvalEnv::default());
        assert_eq!(space.len(), 2);
    }

    #[test]
    fn reverse_derivations_replay() {
        let seeds = vec![
            Seed { kind: SeedKind::Input(Path::root()), values: vec![v("[abc, xyz]")], specificity: 0 },
            Seed { kind: SeedKind::Input(Path(vec![crate::values::PathStep::Index(0)])), values: vec![v("abc")], specificity: 0 },
            Seed { kind: SeedKind::Input(Path(vec![crate::values::PathStep::Index(1)])), values: vec![v("xyz")], specificity: 0 },
            Seed::literal(Value::text(""), 1, 0),
        ];
        let limits = Limits { max_depth: 2, ..Default::default() };
        let space = forward_enumerate(seeds, subset(&["join", "concat_text", "upper"]), &limits, &EvalEnv::default());
        let ders = reverse_derive(&[v("abcxyz")], &space, 8);
        let texts: Vec<String> = ders.iter().map(CompiledProgram::summary).collect();
        assert!(texts.iter().any(|t| t == "concat_text($[0], $[1])"), "{texts:?}");
        assert!(texts.iter().any(|t| t == "join($, \"\")"), "{texts:?}");
        for p in &ders {
            assert_eq!(execute(p, &v("[abc, xyz]"), &ExecutionEnv::default()).unwrap(), v("abcxyz"));
        }
    }
}
