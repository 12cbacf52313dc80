//! Candidate ordering.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::values::{enumerate_elements, PathStep, Value};
use crate::vm::{CompiledProgram, Dag, Node};

use super::problem::Problem;

/// A verified program together with the cases it reproduces.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub program: CompiledProgram,
    pub coverage: Vec<bool>,
    /// Knowledge source that proposed it.
    pub source: String,
}

impl Candidate {
    pub fn is_complete(&self) -> bool {
        !self.coverage.is_empty() && self.coverage.iter().all(|&c| c)
    }

    pub fn covered(&self) -> usize {
        self.coverage.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankScore {
    pub complete: bool,
    /// Uses one whole-output literal per case or more.
    pub lookup: bool,
    pub specificity: u32,
    pub composite_penalty: u32,
    pub size: u32,
    pub canonical: String,
}

impl Ord for RankScore {
    /// Better scores sort first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .complete
            .cmp(&self.complete)
            .then(self.lookup.cmp(&other.lookup))
            .then(self.specificity.cmp(&other.specificity))
            .then(self.composite_penalty.cmp(&other.composite_penalty))
            .then(self.size.cmp(&other.size))
            .then_with(|| self.canonical.cmp(&other.canonical))
    }
}

impl PartialOrd for RankScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Operand positions that hold a parameter (index, separator, pattern, key...)
/// rather than case data. Literals there are not charged.
pub fn is_parameter_position(op: &str, position: usize) -> bool {
    match op {
        "nth" | "split" | "join" | "index_of" | "regex_extract_all" | "regex_matches" | "get" | "put" => {
            position == 1
        }
        "slice" | "substring" | "replace" | "reformat_date" => position == 1 || position == 2,
        "template_fill" | "make_record" | "range" => position == 0,
        _ => false,
    }
}

pub fn score(candidate: &Candidate, problem: &Problem) -> RankScore {
    let (whole_output, other) = literal_charges(&candidate.program, problem);
    RankScore {
        complete: candidate.is_complete(),
        lookup: problem.cases() > 0 && whole_output >= problem.cases() as u32,
        specificity: whole_output + other + positional_charge(&candidate.program, problem),
        composite_penalty: candidate.program.branch_count() as u32 - 1,
        size: candidate.program.size() as u32,
        canonical: candidate.program.canonical_form(),
    }
}

/// Sorts best first. Equal programs keep their first occurrence.
pub fn rank_candidates(candidates: Vec<Candidate>, problem: &Problem) -> Vec<(Candidate, RankScore)> {
    let mut scored: Vec<(Candidate, RankScore)> = candidates
        .into_iter()
        .map(|c| {
            let s = score(&c, problem);
            (c, s)
        })
        .collect();
    scored.sort_by(|a, b| a.1.cmp(&b.1));
    scored.dedup_by(|a, b| a.1.canonical == b.1.canonical);
    scored
}

/// Counts distinct literals in data positions: those equal to a whole case
/// output, and (for single-case problems) numbers not taken from the input.
fn literal_charges(program: &CompiledProgram, problem: &Problem) -> (u32, u32) {
    let mut literals = Vec::new();
    collect_data_literals(program, &mut literals);
    let input_numbers: Vec<Value> = problem
        .inputs
        .iter()
        .flat_map(enumerate_elements)
        .map(|(_, v)| v)
        .filter(|v| v.as_number().is_some())
        .collect();
    let mut whole = 0;
    let mut other = 0;
    for v in literals {
        if problem.outputs.contains(&v) {
            whole += 1;
        } else if problem.cases() == 1
            && v.as_number().is_some()
            && v != Value::int(0)
            && v != Value::int(1)
            && !input_numbers.contains(&v)
        {
            other += 1;
        }
    }
    (whole, other)
}

fn collect_data_literals(program: &CompiledProgram, out: &mut Vec<Value>) {
    match program {
        CompiledProgram::Null => {}
        CompiledProgram::Direct(dag) => {
            let mut data_use = vec![false; dag.nodes.len()];
            if dag.output < data_use.len() {
                data_use[dag.output] = true;
            }
            for node in &dag.nodes {
                match node {
                    Node::Apply { op, args, fragments } => {
                        for (i, &a) in args.iter().enumerate() {
                            if !is_parameter_position(op, i) {
                                data_use[a] = true;
                            }
                        }
                        for f in fragments {
                            collect_data_literals(f, out);
                        }
                    }
                    Node::Call { arg, .. } => data_use[*arg] = true,
                    Node::Project(src, _) => data_use[*src] = true,
                    _ => {}
                }
            }
            for (i, node) in dag.nodes.iter().enumerate() {
                if let Node::Literal(v) = node {
                    if data_use[i] && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        CompiledProgram::Conditional { branches, default } => {
            for (g, b) in branches {
                collect_data_literals(g, out);
                collect_data_literals(b, out);
            }
            if let Some(d) = default {
                collect_data_literals(d, out);
            }
        }
        CompiledProgram::Sequence(seq) => collect_data_literals(&seq.step, out),
    }
}

/// One charge per distinct list position read directly from a long input list.
fn positional_charge(program: &CompiledProgram, problem: &Problem) -> u32 {
    let long_list = problem.inputs.iter().any(|i| i.as_list().is_some_and(|l| l.len() >= 3));
    if !long_list {
        return 0;
    }
    let mut indexes = BTreeSet::new();
    let mut visit = |dag: &Dag| {
        for node in &dag.nodes {
            if let Node::Input(p) = node {
                if let Some(PathStep::Index(i)) = p.0.first() {
                    indexes.insert(*i);
                }
            }
        }
    };
    match program {
        CompiledProgram::Direct(dag) => visit(dag),
        CompiledProgram::Conditional { branches, default } => {
            for (g, b) in branches {
                for p in [g, b] {
                    if let Some(d) = p.as_dag() {
                        visit(d);
                    }
                }
            }
            if let Some(d) = default.as_deref().and_then(CompiledProgram::as_dag) {
                visit(d);
            }
        }
        _ => {}
    }
    indexes.len() as u32
}
