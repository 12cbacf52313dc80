//! The knowledge sources, in scheduling priority order.

use crate::blackboard::{Blackboard, Delta, Entry, EntryId, KnowledgeSource, LayerWork, Level, Payload, Task};
use crate::parser::SpecClass;
use crate::values::{matches_with_wildcards, Value};
use crate::vm::CompiledProgram;

use super::align::{align_elements, induce_template, SlotPlan};
use super::induce::{
    compose, decompose, higher_order, induce_conditional, induce_sequence, residual, split_on_derives, Hypothesis,
    Partial, Skeleton,
};
use super::patterns::infer_regex;
use super::problem::verify;
use super::rank::{score, Candidate};
use super::seeds::seed_values;
use super::space::{reverse_derive, EvalEnv};
use super::{solve_sub, SubOptions};

/// Compositions tried per fragment.
const MAX_COMBINATIONS: usize = 16;
/// Partial solutions kept per enumeration layer.
const MAX_PARTIAL_MASKS: usize = 24;
const MAX_TOTAL_MATCHES: usize = 8;
const REVERSE_ALTERNATIVES: usize = 4;

pub fn all() -> Vec<Box<dyn KnowledgeSource>> {
    vec![
        Box::new(Trivial),
        Box::new(Derive),
        Box::new(Sequence),
        Box::new(Assemble),
        Box::new(Promote),
        Box::new(Match),
        Box::new(Regex),
        Box::new(Template),
        Box::new(Decompose),
        Box::new(HigherOrder),
        Box::new(Enumerate),
        Box::new(Grow),
        Box::new(Conditional),
    ]
}

fn first_case(entry: &Entry) -> bool {
    matches!(entry.payload, Payload::Case { index: 0, .. })
}

/// Structural sources work on general problems of full instances.
fn structural(bb: &Blackboard, entry: &Entry) -> bool {
    first_case(entry) && bb.class() == SpecClass::General && !bb.options.enumerate_only
}

fn has_general_solution(bb: &Blackboard) -> bool {
    bb.best_complete().is_some_and(|s| !s.lookup)
}

/// Verifies `program` and posts it if it reproduces at least one case.
fn post_program(bb: &Blackboard, delta: &mut Delta, program: CompiledProgram, source: &str) {
    let resolver = bb.ctx.resolver();
    let plain = verify(&program, &bb.problem, resolver, false);
    if !plain.iter().any(|&x| x) {
        return;
    }
    let coverage =
        if bb.problem.has_waypoints() { verify(&program, &bb.problem, resolver, true) } else { plain.clone() };
    let candidate = Candidate { program, coverage, source: source.to_string() };
    let s = score(&candidate, &bb.problem);
    let links = (0..plain.len()).filter(|&c| plain[c]).collect();
    delta.add(
        Payload::ProgramSolution {
            program: candidate.program,
            coverage: candidate.coverage,
            plain,
            source: candidate.source,
            score: s,
        },
        links,
    );
}

/// A task solving the open parts of `h` and posting the result as a fragment.
fn fragment_task(label: &'static str, h: Hypothesis) -> Task {
    Box::new(move |bb: &Blackboard| {
        let mut delta = Delta::new(label);
        let mut parts = Vec::new();
        for p in &h.parts {
            let programs = match p {
                SlotPlan::Solved(program) => vec![program.clone()],
                SlotPlan::Open(problem) => solve_sub(bb, problem.clone(), &problem.spec.name, SubOptions::default(), &mut delta),
            };
            if programs.is_empty() {
                return delta;
            }
            parts.push(programs);
        }
        let links = (0..bb.problem.cases()).collect();
        delta.add(Payload::Fragment { label: label.to_string(), skeleton: Some(h.skeleton.clone()), parts }, links);
        delta
    })
}

/// Null, literal, identity and constant programs.
pub struct Trivial;

impl KnowledgeSource for Trivial {
    fn name(&self) -> &'static str {
        "trivial"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, _bb: &Blackboard, entry: &Entry) -> bool {
        first_case(entry)
    }
    fn tasks(&self, _bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        vec![Box::new(|bb: &Blackboard| {
            let mut delta = Delta::new("trivial");
            let p = &bb.problem;
            match bb.class() {
                SpecClass::NullProgram => post_program(bb, &mut delta, CompiledProgram::Null, "trivial"),
                SpecClass::LiteralOutput => {
                    post_program(bb, &mut delta, CompiledProgram::literal(p.outputs[0].clone()), "trivial")
                }
                SpecClass::General => {
                    if p.inputs.iter().zip(&p.outputs).all(|(i, o)| matches_with_wildcards(o, i)) {
                        post_program(bb, &mut delta, CompiledProgram::identity(), "trivial");
                    }
                    let first = &p.outputs[0];
                    if p.cases() >= 2 && !first.has_unspecified() && p.outputs.iter().all(|o| o == first) {
                        post_program(bb, &mut delta, CompiledProgram::literal(first.clone()), "trivial");
                    }
                }
                SpecClass::Sequence => {}
            }
            delta
        })]
    }
}

/// Splits a problem at its derive values into a chain of sub-problems.
pub struct Derive;

impl KnowledgeSource for Derive {
    fn name(&self) -> &'static str {
        "derive"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        structural(bb, entry) && bb.problem.has_waypoints()
    }
    fn tasks(&self, bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        split_on_derives(&bb.problem).map(|h| fragment_task("derive", h)).into_iter().collect()
    }
}

/// Closed-form and recurrence hypotheses for sequences.
pub struct Sequence;

impl KnowledgeSource for Sequence {
    fn name(&self) -> &'static str {
        "sequence"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        first_case(entry) && bb.class() == SpecClass::Sequence
    }
    fn tasks(&self, bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        induce_sequence(&bb.problem).into_iter().map(|h| fragment_task("sequence", h)).collect()
    }
}

/// Composes fragments into whole programs and verifies them.
pub struct Assemble;

impl KnowledgeSource for Assemble {
    fn name(&self) -> &'static str {
        "assemble"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::CodeFragments]
    }
    fn tasks(&self, _bb: &Blackboard, items: &[EntryId]) -> Vec<Task> {
        items
            .iter()
            .map(|&id| -> Task {
                Box::new(move |bb: &Blackboard| {
                    let mut delta = Delta::new("assemble");
                    let Payload::Fragment { label, skeleton, parts } = &bb.entry(id).payload else { return delta };
                    for combo in product(parts, MAX_COMBINATIONS) {
                        let program = match skeleton {
                            Some(s) => compose(s, &combo),
                            None => combo.into_iter().next(),
                        };
                        if let Some(program) = program {
                            post_program(bb, &mut delta, program, label);
                        }
                    }
                    delta
                })
            })
            .collect()
    }
}

/// Cartesian product of the alternatives, first alternatives first.
fn product(parts: &[Vec<CompiledProgram>], limit: usize) -> Vec<Vec<CompiledProgram>> {
    let mut out: Vec<Vec<CompiledProgram>> = vec![Vec::new()];
    for alternatives in parts {
        let mut next = Vec::new();
        for prefix in &out {
            for a in alternatives {
                let mut p = prefix.clone();
                p.push(a.clone());
                next.push(p);
            }
        }
        next.truncate(limit);
        out = next;
    }
    out
}

/// Marks complete program solutions as solution code.
pub struct Promote;

impl KnowledgeSource for Promote {
    fn name(&self) -> &'static str {
        "solution"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::ProgramSolutions]
    }
    fn wants(&self, _bb: &Blackboard, entry: &Entry) -> bool {
        matches!(&entry.payload, Payload::ProgramSolution { score, .. } if score.complete)
    }
    fn tasks(&self, _bb: &Blackboard, items: &[EntryId]) -> Vec<Task> {
        let items = items.to_vec();
        vec![Box::new(move |bb: &Blackboard| {
            let mut delta = Delta::new("solution");
            for &id in &items {
                if let Payload::ProgramSolution { program, .. } = &bb.entry(id).payload {
                    delta.add(Payload::Solution { program: program.clone() }, vec![id]);
                }
            }
            delta
        })]
    }
}

/// Compares newly derived values with the expected outputs.
pub struct Match;

impl KnowledgeSource for Match {
    fn name(&self) -> &'static str {
        "match"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::DerivedValues]
    }
    fn wants(&self, _bb: &Blackboard, entry: &Entry) -> bool {
        matches!(&entry.payload, Payload::Derived { ids, .. } if !ids.is_empty())
    }
    fn tasks(&self, _bb: &Blackboard, items: &[EntryId]) -> Vec<Task> {
        items
            .iter()
            .map(|&item| -> Task {
                Box::new(move |bb: &Blackboard| {
                    let mut delta = Delta::new("match");
                    let Payload::Derived { ids, .. } = &bb.entry(item).payload else { return delta };
                    let outputs = &bb.problem.outputs;
                    let exact = !outputs.iter().any(Value::has_unspecified);
                    let mut totals = 0;
                    let mut masks: Vec<Vec<bool>> = Vec::new();
                    for &id in ids {
                        let values = &bb.space.entry(id).values;
                        let mask: Vec<bool> = outputs
                            .iter()
                            .zip(values.iter())
                            .map(|(o, v)| v.as_ref().is_some_and(|v| matches_with_wildcards(o, v)))
                            .collect();
                        if mask.iter().all(|&m| m) {
                            if totals >= MAX_TOTAL_MATCHES {
                                continue;
                            }
                            totals += 1;
                            post_program(bb, &mut delta, bb.space.program(id), "enumerate");
                            if exact {
                                for p in reverse_derive(outputs, &bb.space, REVERSE_ALTERNATIVES) {
                                    post_program(bb, &mut delta, p, "enumerate");
                                }
                            }
                        } else if outputs.len() >= 2
                            && mask.iter().any(|&m| m)
                            && masks.len() < MAX_PARTIAL_MASKS
                            && !masks.contains(&mask)
                        {
                            let program = bb.space.program(id);
                            let links: Vec<EntryId> = (0..mask.len()).filter(|&c| mask[c]).collect();
                            if links.len() == 1 {
                                delta.add(Payload::CaseSolution { case: links[0], program }, links);
                            } else {
                                delta.add(Payload::CaseSetSolution { program, coverage: mask.clone() }, links);
                            }
                            masks.push(mask);
                        }
                    }
                    delta
                })
            })
            .collect()
    }
}

/// Extraction with library patterns.
pub struct Regex;

impl KnowledgeSource for Regex {
    fn name(&self) -> &'static str {
        "regex"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        structural(bb, entry)
    }
    fn tasks(&self, _bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        vec![Box::new(|bb: &Blackboard| {
            let mut delta = Delta::new("regex");
            let programs = infer_regex(&bb.problem);
            if !programs.is_empty() {
                let links = (0..bb.problem.cases()).collect();
                delta.add(Payload::Fragment { label: "regex".to_string(), skeleton: None, parts: vec![programs] }, links);
            }
            delta
        })]
    }
}

/// Text outputs as a template over computed slots.
pub struct Template;

impl KnowledgeSource for Template {
    fn name(&self) -> &'static str {
        "template"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        structural(bb, entry) && bb.problem.outputs.iter().all(|o| o.as_text().is_some())
    }
    fn tasks(&self, bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        let report = align_elements(&bb.problem);
        match induce_template(&report, &bb.problem) {
            Some(plan) if !plan.slots.is_empty() => {
                vec![fragment_task("template", Hypothesis { skeleton: Skeleton::Template(plan.template), parts: plan.slots })]
            }
            _ => Vec::new(),
        }
    }
}

/// One sub-problem per element of list or record outputs.
pub struct Decompose;

impl KnowledgeSource for Decompose {
    fn name(&self) -> &'static str {
        "decompose"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        structural(bb, entry)
    }
    fn tasks(&self, bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        decompose(&bb.problem).map(|h| fragment_task("decompose", h)).into_iter().collect()
    }
}

/// Map and filter over list inputs.
pub struct HigherOrder;

impl KnowledgeSource for HigherOrder {
    fn name(&self) -> &'static str {
        "higher order"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        structural(bb, entry)
    }
    fn tasks(&self, bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        higher_order(&bb.problem).into_iter().map(|h| fragment_task("higher order", h)).collect()
    }
}

/// Forward enumeration, one layer per cycle.
pub struct Enumerate;

impl KnowledgeSource for Enumerate {
    fn name(&self) -> &'static str {
        "enumerate"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases, Level::DerivedValues]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        bb.class() == SpecClass::General
            && match &entry.payload {
                Payload::Case { index, .. } => *index == 0,
                Payload::Derived { fallback, .. } => !fallback,
                _ => false,
            }
    }
    fn tasks(&self, bb: &Blackboard, items: &[EntryId]) -> Vec<Task> {
        let mut tasks: Vec<Task> = Vec::new();
        for &id in items {
            match &bb.entry(id).payload {
                Payload::Case { .. } => tasks.push(Box::new(|bb: &Blackboard| {
                    let mut delta = Delta::new("enumerate");
                    delta.layer.push(LayerWork::Seeds(seed_values(&bb.problem)));
                    delta
                })),
                Payload::Derived { depth, finished: false, .. } => {
                    let plan = bb.space.plan_layer(depth + 1, &bb.limits);
                    if plan.is_empty() {
                        tasks.push(Box::new(|_: &Blackboard| {
                            let mut delta = Delta::new("enumerate");
                            delta.layer.push(LayerWork::Finish { fallback: false });
                            delta
                        }));
                    }
                    for t in plan {
                        tasks.push(Box::new(move |bb: &Blackboard| {
                            let env = EvalEnv {
                                data: bb.problem.data(),
                                resolver: bb.ctx.resolver(),
                                deadline: Some(bb.ctx.deadline),
                            };
                            let mut delta = Delta::new("enumerate");
                            let result = bb.space.run_layer_task(&t, &env);
                            delta.layer.push(LayerWork::Layer { depth: t.depth, result });
                            delta
                        }));
                    }
                }
                Payload::Derived { finished: true, .. }
                    if bb.fallback && !bb.options.enumerate_only && !has_general_solution(bb) =>
                {
                    tasks.push(Box::new(|bb: &Blackboard| {
                        let mut delta = Delta::new("enumerate");
                        let options = SubOptions { enumerate_only: true, full_catalog: true };
                        for p in solve_sub(bb, bb.problem.clone(), "full catalog", options, &mut delta) {
                            post_program(bb, &mut delta, p, "enumerate");
                        }
                        delta.layer.push(LayerWork::Finish { fallback: true });
                        delta
                    }));
                }
                _ => {}
            }
        }
        tasks
    }
}

/// Grows a numeric input towards the output by a computed difference.
pub struct Grow;

impl KnowledgeSource for Grow {
    fn name(&self) -> &'static str {
        "grow"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::TestCases]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        structural(bb, entry)
    }
    fn ready(&self, bb: &Blackboard) -> bool {
        bb.enumeration_done && !has_general_solution(bb)
    }
    fn tasks(&self, bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        residual(&bb.problem).map(|h| fragment_task("grow", h)).into_iter().collect()
    }
}

/// Joins partial solutions under guards.
pub struct Conditional;

impl KnowledgeSource for Conditional {
    fn name(&self) -> &'static str {
        "conditional"
    }
    fn triggers(&self) -> &'static [Level] {
        &[Level::CaseSolutions, Level::CaseSetSolutions, Level::ProgramSolutions]
    }
    fn wants(&self, bb: &Blackboard, entry: &Entry) -> bool {
        let fits = bb.class() == SpecClass::General && !bb.options.enumerate_only && bb.problem.cases() >= 2;
        fits && match &entry.payload {
            Payload::ProgramSolution { score, source, .. } => !score.complete && source != "conditional",
            _ => true,
        }
    }
    fn ready(&self, bb: &Blackboard) -> bool {
        bb.enumeration_done && !has_general_solution(bb)
    }
    fn tasks(&self, bb: &Blackboard, _items: &[EntryId]) -> Vec<Task> {
        let cases = bb.problem.cases();
        let mut partials: Vec<(usize, EntryId, Partial)> = Vec::new();
        for level in [Level::ProgramSolutions, Level::CaseSetSolutions, Level::CaseSolutions] {
            for e in bb.level(level) {
                let (program, coverage) = match &e.payload {
                    Payload::ProgramSolution { program, plain, score, source, .. }
                        if !score.complete && source != "conditional" =>
                    {
                        (program, plain.clone())
                    }
                    Payload::CaseSetSolution { program, coverage } => (program, coverage.clone()),
                    Payload::CaseSolution { case, program } => (program, (0..cases).map(|c| c == *case).collect()),
                    _ => continue,
                };
                partials.push((program.size(), e.id, Partial { program: program.clone(), coverage }));
            }
        }
        partials.sort_by_key(|(size, id, _)| (*size, *id));
        let partials: Vec<Partial> = partials.into_iter().map(|(_, _, p)| p).collect();
        induce_conditional(&bb.problem, &partials).into_iter().map(|h| fragment_task("conditional", h)).collect()
    }
}
