//! Hypotheses that split a problem into smaller problems, and the
//! compositions that put the sub-solutions back together.

use crate::values::{enumerate_elements, resolve_path, Path, Value};
use crate::vm::{CompiledProgram, DagBuilder, NodeId, SequenceForm, SequenceProgram};

use super::align::{compose_template, list_of, SlotPlan};
use super::problem::{as_int, Problem};

const MAX_DECOMPOSE: usize = 6;
const MAX_COVER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum Skeleton {
    Template(String),
    /// `make_list` over the part outputs.
    List,
    Record(Vec<String>),
    /// `map($, part0)`.
    Map,
    /// `filter($, part0)`.
    Filter,
    /// `map(filter($, part0), part1)`.
    FilterMap,
    /// `add($, part0)`.
    Residual,
    /// Parts applied one after another.
    Chain,
    Sequence { form: SequenceForm, base: Vec<(i64, Value)> },
    /// Guards for all blocks but the last, then one body per block.
    Conditional { blocks: usize },
}

impl Skeleton {
    pub fn label(&self) -> &'static str {
        match self {
            Skeleton::Template(_) => "template",
            Skeleton::List => "list",
            Skeleton::Record(_) => "record",
            Skeleton::Map => "map",
            Skeleton::Filter => "filter",
            Skeleton::FilterMap => "filter+map",
            Skeleton::Residual => "residual",
            Skeleton::Chain => "derive chain",
            Skeleton::Sequence { form: SequenceForm::ClosedForm, .. } => "closed form",
            Skeleton::Sequence { form: SequenceForm::Recurrence, .. } => "recurrence",
            Skeleton::Conditional { .. } => "conditional",
        }
    }
}

/// A way of solving a problem through parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub skeleton: Skeleton,
    pub parts: Vec<SlotPlan>,
}

impl Hypothesis {
    pub fn open_parts(&self) -> impl Iterator<Item = (usize, &Problem)> {
        self.parts.iter().enumerate().filter_map(|(i, p)| match p {
            SlotPlan::Open(problem) => Some((i, problem)),
            SlotPlan::Solved(_) => None,
        })
    }
}

fn sub_problem(parent: &Problem, tag: &str, pairs: Vec<(Value, Value)>) -> Problem {
    Problem::from_pairs(format!("{}/{}", parent.spec.name, tag), parent.data().cloned(), pairs)
}

/// Input/output pairs with duplicate inputs merged; `None` if two disagree.
fn consistent_pairs(pairs: Vec<(Value, Value)>) -> Option<Vec<(Value, Value)>> {
    let mut out: Vec<(Value, Value)> = Vec::new();
    for (i, o) in pairs {
        match out.iter().find(|(x, _)| *x == i) {
            Some((_, prev)) if *prev != o => return None,
            Some(_) => {}
            None => out.push((i, o)),
        }
    }
    Some(out)
}

/// One sub-problem per element of fixed-length list outputs or per key of records.
pub fn decompose(problem: &Problem) -> Option<Hypothesis> {
    let first = problem.outputs.first()?;
    match first {
        Value::List(items) if (2..=MAX_DECOMPOSE).contains(&items.len()) => {
            let k = items.len();
            if !problem.outputs.iter().all(|o| o.as_list().is_some_and(|l| l.len() == k)) {
                return None;
            }
            let parts = (0..k)
                .map(|j| {
                    let pairs =
                        problem.inputs.iter().zip(&problem.outputs).map(|(i, o)| (i.clone(), o.as_list().unwrap()[j].clone()));
                    SlotPlan::Open(sub_problem(problem, &format!("element{j}"), pairs.collect()))
                })
                .collect();
            Some(Hypothesis { skeleton: Skeleton::List, parts })
        }
        Value::Record(entries) if !entries.is_empty() && entries.len() <= MAX_DECOMPOSE => {
            let keys: Vec<String> = entries.iter().map(|(k, _)| k.clone()).collect();
            let same_keys = problem.outputs.iter().all(|o| match o {
                Value::Record(e) => e.len() == keys.len() && keys.iter().all(|k| o.record_get(k).is_some()),
                _ => false,
            });
            if !same_keys {
                return None;
            }
            let parts = keys
                .iter()
                .map(|key| {
                    let pairs = problem
                        .inputs
                        .iter()
                        .zip(&problem.outputs)
                        .map(|(i, o)| (i.clone(), o.record_get(key).unwrap().clone()));
                    SlotPlan::Open(sub_problem(problem, key, pairs.collect()))
                })
                .collect();
            Some(Hypothesis { skeleton: Skeleton::Record(keys), parts })
        }
        _ => None,
    }
}

/// Map, filter and filter-then-map hypotheses over list inputs and outputs.
pub fn higher_order(problem: &Problem) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    let Some(ins) = problem.inputs.iter().map(Value::as_list).collect::<Option<Vec<_>>>() else { return out };
    let Some(outs) = problem.outputs.iter().map(Value::as_list).collect::<Option<Vec<_>>>() else { return out };
    if ins.iter().all(|l| l.is_empty()) {
        return out;
    }

    let same_lengths = ins.iter().zip(&outs).all(|(i, o)| i.len() == o.len());
    let identity = problem.inputs == problem.outputs;
    if same_lengths && !identity {
        let pairs = ins.iter().zip(&outs).flat_map(|(i, o)| i.iter().cloned().zip(o.iter().cloned())).collect();
        if let Some(pairs) = consistent_pairs(pairs) {
            out.push(Hypothesis { skeleton: Skeleton::Map, parts: vec![SlotPlan::Open(sub_problem(problem, "map", pairs))] });
        }
    }

    if let Some(kept) = subsequence_masks(&ins, &outs, |e| Some(e.clone())) {
        if let Some(pred) = predicate_problem(problem, &ins, &kept) {
            out.push(Hypothesis { skeleton: Skeleton::Filter, parts: vec![SlotPlan::Open(pred)] });
        }
    }

    if let Some(first) = ins.iter().find_map(|l| l.first()) {
        for (path, _) in enumerate_elements(first).into_iter().skip(1) {
            let project = |e: &Value| resolve_path(e, &path).ok().cloned();
            let Some(kept) = subsequence_masks(&ins, &outs, project) else { continue };
            if kept.iter().flatten().all(|&k| k) && same_lengths {
                continue;
            }
            if let Some(pred) = predicate_problem(problem, &ins, &kept) {
                let mut b = DagBuilder::new();
                let e = b.input(path.clone());
                let projection = b.finish(e);
                out.push(Hypothesis {
                    skeleton: Skeleton::FilterMap,
                    parts: vec![SlotPlan::Open(pred), SlotPlan::Solved(projection)],
                });
                break;
            }
        }
    }
    out
}

/// Which input elements, projected, form each output as a subsequence (greedy).
fn subsequence_masks(
    ins: &[&[Value]],
    outs: &[&[Value]],
    project: impl Fn(&Value) -> Option<Value>,
) -> Option<Vec<Vec<bool>>> {
    let mut masks = Vec::new();
    for (i, o) in ins.iter().zip(outs) {
        let mut mask = vec![false; i.len()];
        let mut next = 0;
        for (k, e) in i.iter().enumerate() {
            if next < o.len() && project(e).as_ref() == Some(&o[next]) {
                mask[k] = true;
                next += 1;
            }
        }
        if next != o.len() {
            return None;
        }
        masks.push(mask);
    }
    Some(masks)
}

/// Element → kept problem, when some elements are dropped and the labels agree.
fn predicate_problem(problem: &Problem, ins: &[&[Value]], kept: &[Vec<bool>]) -> Option<Problem> {
    let flags: Vec<bool> = kept.iter().flatten().copied().collect();
    if flags.iter().all(|&k| k) || !flags.iter().any(|&k| k) {
        return None;
    }
    let pairs = ins
        .iter()
        .zip(kept)
        .flat_map(|(i, m)| i.iter().cloned().zip(m.iter().map(|&k| Value::Bool(k))))
        .collect();
    Some(sub_problem(problem, "predicate", consistent_pairs(pairs)?))
}

/// `add($, part)` for numeric cases, where the part produces the difference.
pub fn residual(problem: &Problem) -> Option<Hypothesis> {
    if problem.cases() == 0 {
        return None;
    }
    let mut pairs = Vec::new();
    for (i, o) in problem.inputs.iter().zip(&problem.outputs) {
        let (a, b) = (i.as_number()?, o.as_number()?);
        let d = Value::Number(crate::values::Number::cleaned(b.as_f64() - a.as_f64())?);
        if d == Value::int(0) {
            return None;
        }
        pairs.push((i.clone(), d));
    }
    Some(Hypothesis { skeleton: Skeleton::Residual, parts: vec![SlotPlan::Open(sub_problem(problem, "residual", pairs))] })
}

/// Closed form over the index, then a one-step recurrence seeded by the first output.
pub fn induce_sequence(problem: &Problem) -> Vec<Hypothesis> {
    let mut terms = Vec::new();
    for o in &problem.outputs {
        match o.as_list() {
            Some([n, v]) => terms.push((as_int(n), v.clone())),
            _ => return Vec::new(),
        }
    }
    let Some(idx) = terms.iter().map(|(n, _)| *n).collect::<Option<Vec<i64>>>() else { return Vec::new() };
    if idx.len() < 2 || idx.windows(2).any(|w| w[1] != w[0] + 1) {
        return Vec::new();
    }
    let closed: Vec<(Value, Value)> = terms.iter().map(|(n, v)| (Value::int(n.unwrap()), v.clone())).collect();
    let steps: Vec<(Value, Value)> = terms
        .windows(2)
        .map(|w| (Value::List(vec![Value::int(w[1].0.unwrap()), w[0].1.clone()]), w[1].1.clone()))
        .collect();
    vec![
        Hypothesis {
            skeleton: Skeleton::Sequence { form: SequenceForm::ClosedForm, base: Vec::new() },
            parts: vec![SlotPlan::Open(sub_problem(problem, "closed", closed))],
        },
        Hypothesis {
            skeleton: Skeleton::Sequence { form: SequenceForm::Recurrence, base: vec![(idx[0], terms[0].1.clone())] },
            parts: vec![SlotPlan::Open(sub_problem(problem, "step", steps))],
        },
    ]
}

/// One sub-problem per adjacent pair of input, derive values and output.
/// Segments whose values do not change are solved by the identity.
pub fn split_on_derives(problem: &Problem) -> Option<Hypothesis> {
    let n = problem.waypoints.first()?.len();
    if n == 0 || problem.waypoints.iter().any(|w| w.len() != n) {
        return None;
    }
    let stages: Vec<Vec<Value>> = (0..problem.cases())
        .map(|c| {
            let mut s = vec![problem.inputs[c].clone()];
            s.extend(problem.waypoints[c].iter().cloned());
            s.push(problem.outputs[c].clone());
            s
        })
        .collect();
    let parts = (0..=n)
        .map(|k| {
            let pairs: Vec<(Value, Value)> = stages.iter().map(|s| (s[k].clone(), s[k + 1].clone())).collect();
            if pairs.iter().all(|(a, b)| a == b) {
                SlotPlan::Solved(CompiledProgram::identity())
            } else {
                SlotPlan::Open(sub_problem(problem, &format!("segment{}", k + 1), pairs))
            }
        })
        .collect();
    Some(Hypothesis { skeleton: Skeleton::Chain, parts })
}

/// Case masks of partial solutions, best program first.
#[derive(Debug, Clone, PartialEq)]
pub struct Partial {
    pub program: CompiledProgram,
    pub coverage: Vec<bool>,
}

/// Conditionals over the fewest partial solutions that together cover every
/// case. Each case goes to the first block covering it; the last block is
/// the default, and each earlier block needs a guard true on its own cases
/// and false on the cases of later blocks.
pub fn induce_conditional(problem: &Problem, partials: &[Partial]) -> Vec<Hypothesis> {
    let cases = problem.cases();
    if cases < 2 {
        return Vec::new();
    }
    let mut distinct: Vec<&Partial> = Vec::new();
    for p in partials {
        if p.coverage.iter().any(|&c| c) && !p.coverage.iter().all(|&c| c) && !distinct.iter().any(|d| d.coverage == p.coverage) {
            distinct.push(p);
        }
    }
    distinct.truncate(12);
    for size in 2..=MAX_COVER.min(distinct.len()) {
        let mut found = Vec::new();
        for combo in index_combinations(distinct.len(), size) {
            let covers = (0..cases).all(|c| combo.iter().any(|&i| distinct[i].coverage[c]));
            if !covers {
                continue;
            }
            let block_of: Vec<usize> =
                (0..cases).map(|c| combo.iter().position(|&i| distinct[i].coverage[c]).unwrap()).collect();
            if (0..size).any(|b| !block_of.contains(&b)) {
                continue;
            }
            let mut parts = Vec::new();
            for b in 0..size - 1 {
                let pairs: Vec<(Value, Value)> = (0..cases)
                    .filter(|&c| block_of[c] >= b)
                    .map(|c| (problem.inputs[c].clone(), Value::Bool(block_of[c] == b)))
                    .collect();
                let Some(pairs) = consistent_pairs(pairs) else { break };
                parts.push(SlotPlan::Open(sub_problem(problem, &format!("guard{}", b + 1), pairs)));
            }
            if parts.len() != size - 1 {
                continue;
            }
            parts.extend(combo.iter().map(|&i| SlotPlan::Solved(distinct[i].program.clone())));
            found.push(Hypothesis { skeleton: Skeleton::Conditional { blocks: size }, parts });
            if found.len() >= 3 {
                break;
            }
        }
        if !found.is_empty() {
            return found;
        }
    }
    Vec::new()
}

fn index_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Puts part programs together. `None` when a part cannot be composed
/// (a non-graph program where a graph is needed).
pub fn compose(skeleton: &Skeleton, parts: &[CompiledProgram]) -> Option<CompiledProgram> {
    let dags = || parts.iter().map(CompiledProgram::as_dag).collect::<Option<Vec<_>>>();
    Some(match skeleton {
        Skeleton::Template(t) => {
            dags()?;
            compose_template(t, parts)
        }
        Skeleton::List | Skeleton::Record(_) => {
            let dags = dags()?;
            let mut b = DagBuilder::new();
            let input = b.input(Path::root());
            let nodes: Vec<NodeId> = dags.iter().map(|d| b.inline(d, input)).collect();
            let list = list_of(&mut b, &nodes);
            let out = match skeleton {
                Skeleton::Record(keys) => {
                    let k = b.literal(Value::List(keys.iter().map(|k| Value::text(k.clone())).collect()));
                    b.apply("make_record", vec![k, list])
                }
                _ => list,
            };
            b.finish(out)
        }
        Skeleton::Map | Skeleton::Filter => {
            if *skeleton == Skeleton::Map && parts[0] == CompiledProgram::identity() {
                return None;
            }
            let mut b = DagBuilder::new();
            let input = b.input(Path::root());
            let op = if *skeleton == Skeleton::Map { "map" } else { "filter" };
            let out = b.apply_with(op, vec![input], vec![parts[0].clone()]);
            b.finish(out)
        }
        Skeleton::FilterMap => {
            let mut b = DagBuilder::new();
            let input = b.input(Path::root());
            let kept = b.apply_with("filter", vec![input], vec![parts[0].clone()]);
            let out = b.apply_with("map", vec![kept], vec![parts[1].clone()]);
            b.finish(out)
        }
        Skeleton::Residual => {
            let dag = parts[0].as_dag()?;
            let mut b = DagBuilder::new();
            let input = b.input(Path::root());
            let d = b.inline(dag, input);
            let out = b.apply("add", vec![input, d]);
            b.finish(out)
        }
        Skeleton::Chain => {
            let dags = dags()?;
            let mut b = DagBuilder::new();
            let mut cur = b.input(Path::root());
            for d in dags {
                cur = b.inline(d, cur);
            }
            b.finish(cur)
        }
        Skeleton::Sequence { form, base } => CompiledProgram::Sequence(SequenceProgram {
            form: *form,
            base: base.clone(),
            step: Box::new(parts[0].clone()),
        })
        .canonicalize(),
        Skeleton::Conditional { blocks } => {
            let guards = &parts[..blocks - 1];
            let bodies = &parts[blocks - 1..];
            CompiledProgram::Conditional {
                branches: guards.iter().cloned().zip(bodies.iter().cloned()).collect(),
                default: Some(Box::new(bodies[blocks - 1].clone())),
            }
            .canonicalize()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::parse_value;
    use crate::vm::{execute, ExecutionEnv};

    fn v(s: &str) -> Value {
        parse_value(s).unwrap()
    }

    fn open(h: &Hypothesis, i: usize) -> &Problem {
        match &h.parts[i] {
            SlotPlan::Open(p) => p,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn records_split_per_key() {
        let p = Problem::from_pairs("r", None, vec![(v("'a b'"), v("{name: 'b', date: 'a'}"))]);
        let h = decompose(&p).unwrap();
        assert_eq!(h.skeleton, Skeleton::Record(vec!["name".into(), "date".into()]));
        assert_eq!(open(&h, 1).outputs, vec![v("'a'")]);
    }

    #[test]
    fn select_females_gives_filter_then_projection() {
        let p = Problem::from_pairs(
            "s",
            None,
            vec![(v("[[fred, male], [wilma, female], [barney, male], [betty, female]]"), v("[wilma, betty]"))],
        );
        let hs = higher_order(&p);
        let fm = hs.iter().find(|h| h.skeleton == Skeleton::FilterMap).expect("filter+map");
        let pred = open(fm, 0);
        assert_eq!(pred.outputs, vec![v("false"), v("true"), v("false"), v("true")]);
    }

    #[test]
    fn factorial_step_cases() {
        let p = Problem::new(crate::parser::NormalizedSpec {
            name: "factorial".into(),
            uses: vec![],
            data: None,
            class: crate::parser::SpecClass::Sequence,
            cases: vec![crate::parser::NormalizedCase {
                id: None,
                input: None,
                derives: vec![],
                outputs: vec![v("[0,1]"), v("[1,1]"), v("[2,2]"), v("[3,6]")],
            }],
        });
        let hs = induce_sequence(&p);
        let rec = &hs[1];
        let step = open(rec, 0);
        assert_eq!(step.inputs, vec![v("[1,1]"), v("[2,1]"), v("[3,2]")]);
        assert_eq!(step.outputs, vec![v("1"), v("2"), v("6")]);
        let mut b = DagBuilder::new();
        let a = b.input(Path::root().child(crate::values::PathStep::Index(0)));
        let c = b.input(Path::root().child(crate::values::PathStep::Index(1)));
        let m = b.apply("mul", vec![a, c]);
        let program = compose(&rec.skeleton, &[b.finish(m)]).unwrap();
        assert_eq!(execute(&program, &v("5"), &ExecutionEnv::default()).unwrap(), v("[5,120]"));
    }

    #[test]
    fn derive_chain_segments() {
        let mut spec = crate::parser::NormalizedSpec::from_pairs("ini", None, vec![(v("'how now'"), v("'How Now'"))]);
        spec.cases[0].derives = vec![v("[how, now]"), v("['How', 'Now']")];
        let h = split_on_derives(&Problem::new(spec)).unwrap();
        assert_eq!(h.parts.len(), 3);
        assert_eq!(open(&h, 1).inputs, vec![v("[how, now]")]);
    }

    #[test]
    fn two_blocks_need_one_guard() {
        let p = Problem::from_pairs("c", None, vec![(v("[]"), v("empty")), (v("[1]"), v("1"))]);
        let partials = vec![
            Partial { program: CompiledProgram::literal(v("empty")), coverage: vec![true, false] },
            Partial { program: CompiledProgram::literal(v("1")), coverage: vec![false, true] },
        ];
        let hs = induce_conditional(&p, &partials);
        assert_eq!(hs.len(), 1);
        let guard = open(&hs[0], 0);
        assert_eq!(guard.outputs, vec![v("true"), v("false")]);
    }
}
