//! Output alignment against the inputs, and text templates built from it.

use crate::values::{enumerate_elements, parse_number_token, resolve_path, Path, PathStep, Value};
use crate::vm::{apply_builtin, escape_template, to_text, CompiledProgram, DagBuilder, NodeId, Op};

use super::patterns::DATE_FORMATS;
use super::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
pub enum ElementClass {
    /// Equal to the input element at each of these paths, in every case.
    Copied(Vec<Path>),
    /// The same value in every case.
    Literal,
    Computed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementAlignment {
    pub path: Path,
    pub class: ElementClass,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Literal(String),
    /// Per-case slot values, with a program when the slot is a known field transform.
    Slot { values: Vec<Value>, program: Option<CompiledProgram> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentReport {
    pub elements: Vec<ElementAlignment>,
    /// Present when every output is text and the cases segment alike.
    pub segments: Option<Vec<Segment>>,
}

impl AlignmentReport {
    pub fn slot_count(&self) -> usize {
        self.segments.iter().flatten().filter(|s| matches!(s, Segment::Slot { .. })).count()
    }
}

/// Classifies every output element present in all cases, in pre-order.
///
/// Reads of a fixed position in an input list of three or more elements are
/// not counted as copies: one case cannot tell "second element" from "smallest".
pub fn align_elements(problem: &Problem) -> AlignmentReport {
    let mut elements = Vec::new();
    if problem.cases() == 0 {
        return AlignmentReport { elements, segments: None };
    }
    let long_root = problem.inputs.iter().any(|i| i.as_list().is_some_and(|l| l.len() >= 3));
    let input_paths: Vec<Path> = enumerate_elements(&problem.inputs[0])
        .into_iter()
        .map(|(p, _)| p)
        .filter(|p| !(long_root && matches!(p.0.first(), Some(PathStep::Index(_)))))
        .filter(|p| problem.inputs.iter().all(|i| resolve_path(i, p).is_ok()))
        .collect();
    for (path, _) in enumerate_elements(&problem.outputs[0]) {
        let Some(values) = problem.outputs.iter().map(|o| resolve_path(o, &path).ok()).collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        let sources: Vec<Path> = input_paths
            .iter()
            .filter(|ip| (0..problem.cases()).all(|c| resolve_path(&problem.inputs[c], ip).ok() == Some(values[c])))
            .cloned()
            .collect();
        let class = if !sources.is_empty() {
            ElementClass::Copied(sources)
        } else if problem.cases() >= 2 && values.iter().all(|v| *v == values[0]) {
            ElementClass::Literal
        } else {
            ElementClass::Computed
        };
        elements.push(ElementAlignment { path, class });
    }
    AlignmentReport { elements, segments: segment_text(problem) }
}

/// A field of the input, possibly transformed, equal to `targets[c]` in every case.
pub fn align_field(problem: &Problem, targets: &[Value]) -> Option<CompiledProgram> {
    let texts: Vec<&str> = targets.iter().map(Value::as_text).collect::<Option<_>>()?;
    let transforms = transforms();
    for field in fields(problem) {
        for t in &transforms {
            let hit = (0..problem.cases()).all(|c| {
                field.values[c].as_ref().and_then(|v| apply_transform(t, v)).as_deref() == Some(texts[c])
            });
            if hit {
                let mut b = DagBuilder::new();
                let src = (field.build)(&mut b);
                let out = build_transform(t, &mut b, src);
                return Some(b.finish(out));
            }
        }
    }
    None
}

#[derive(Debug, Clone)]
enum Transform {
    Identity,
    Unary(Op),
    Date(&'static str, &'static str),
}

fn transforms() -> Vec<Transform> {
    let mut out = vec![
        Transform::Identity,
        Transform::Unary(Op::Lower),
        Transform::Unary(Op::Upper),
        Transform::Unary(Op::Titlecase),
    ];
    for from in DATE_FORMATS {
        for to in DATE_FORMATS {
            if from != to {
                out.push(Transform::Date(from, to));
            }
        }
    }
    out
}

fn apply_transform(t: &Transform, v: &Value) -> Option<String> {
    let r = match t {
        Transform::Identity => Ok(v.clone()),
        Transform::Unary(op) => apply_builtin(*op, std::slice::from_ref(v)),
        Transform::Date(from, to) => apply_builtin(Op::ReformatDate, &[v.clone(), Value::text(*from), Value::text(*to)]),
    };
    r.ok()?.as_text().map(str::to_string)
}

fn build_transform(t: &Transform, b: &mut DagBuilder, src: NodeId) -> NodeId {
    match t {
        Transform::Identity => src,
        Transform::Unary(op) => b.apply(op.name(), vec![src]),
        Transform::Date(from, to) => {
            let f = b.literal(Value::text(*from));
            let t = b.literal(Value::text(*to));
            b.apply("reformat_date", vec![src, f, t])
        }
    }
}

struct Field {
    values: Vec<Option<Value>>,
    build: Box<dyn Fn(&mut DagBuilder) -> NodeId>,
}

/// The whole input, then split fields of text inputs, then text elements of list inputs.
fn fields(problem: &Problem) -> Vec<Field> {
    let mut out = vec![Field {
        values: problem.inputs.iter().cloned().map(Some).collect(),
        build: Box::new(|b| b.input(Path::root())),
    }];
    let inputs = problem.inputs.clone();
    if inputs.iter().all(|i| i.as_text().is_some()) {
        let mut seps: Vec<char> = Vec::new();
        for i in &inputs {
            for ch in i.as_text().unwrap().chars() {
                if !ch.is_alphanumeric() && !seps.contains(&ch) {
                    seps.push(ch);
                }
            }
        }
        for sep in seps {
            let parts: Vec<Vec<&str>> = inputs.iter().map(|i| i.as_text().unwrap().split(sep).collect()).collect();
            let width = parts.iter().map(Vec::len).max().unwrap_or(0);
            for j in 0..width {
                let sep_text = sep.to_string();
                out.push(Field {
                    values: parts.iter().map(|p| p.get(j).map(|s| Value::text(*s))).collect(),
                    build: Box::new(move |b| {
                        let i = b.input(Path::root());
                        let s = b.literal(Value::text(sep_text.clone()));
                        let parts = b.apply("split", vec![i, s]);
                        let k = b.literal(Value::int(j as i64));
                        b.apply("nth", vec![parts, k])
                    }),
                });
            }
        }
    } else if let Some(first) = inputs.first().and_then(Value::as_list) {
        for j in 0..first.len() {
            out.push(Field {
                values: inputs.iter().map(|i| i.as_list().and_then(|l| l.get(j)).cloned()).collect(),
                build: Box::new(move |b| b.input(Path::root().child(PathStep::Index(j)))),
            });
        }
    }
    out
}

/// Splits text into alternating runs of non-space and space characters.
fn tokens(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut last_space = None;
    for ch in s.chars() {
        let space = ch.is_whitespace();
        if last_space == Some(space) {
            out.last_mut().unwrap().push(ch);
        } else {
            out.push(ch.to_string());
            last_space = Some(space);
        }
    }
    out
}

fn numeric_token(t: &str) -> Option<Value> {
    let v = Value::Number(parse_number_token(t)?);
    (to_text(&v) == t).then_some(v)
}

fn segment_text(problem: &Problem) -> Option<Vec<Segment>> {
    let texts: Vec<&str> = problem.outputs.iter().map(Value::as_text).collect::<Option<_>>()?;
    if let Some(p) = align_field(problem, &problem.outputs) {
        return Some(vec![Segment::Slot { values: problem.outputs.clone(), program: Some(p) }]);
    }
    let toks: Vec<Vec<String>> = texts.iter().map(|t| tokens(t)).collect();
    let n = toks[0].len();
    if toks.iter().any(|t| t.len() != n) {
        return None;
    }
    let single = problem.cases() == 1;
    let mut segments: Vec<Segment> = Vec::new();
    for k in 0..n {
        let column: Vec<&str> = toks.iter().map(|t| t[k].as_str()).collect();
        let constant = column.iter().all(|t| *t == column[0]);
        let space = column[0].chars().all(char::is_whitespace);
        let text_values: Vec<Value> = column.iter().map(|t| Value::text(*t)).collect();
        let segment = if space || (constant && !single) {
            if !constant {
                return None;
            }
            Segment::Literal(column[0].to_string())
        } else if let Some(values) = column.iter().map(|t| numeric_token(t)).collect::<Option<Vec<_>>>() {
            Segment::Slot { values, program: None }
        } else if let Some(p) = align_field(problem, &text_values) {
            Segment::Slot { values: text_values, program: Some(p) }
        } else if constant {
            Segment::Literal(column[0].to_string())
        } else {
            Segment::Slot { values: text_values, program: None }
        };
        match (segments.last_mut(), segment) {
            (Some(Segment::Literal(prev)), Segment::Literal(s)) => prev.push_str(&s),
            (_, s) => segments.push(s),
        }
    }
    Some(segments)
}

/// A slot to fill: either already solved or a sub-problem over the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum SlotPlan {
    Solved(CompiledProgram),
    Open(Problem),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplatePlan {
    /// Template text with `{}` per slot and literal braces escaped.
    pub template: String,
    pub slots: Vec<SlotPlan>,
}

/// Turns a text segmentation into a template and its slots.
pub fn induce_template(report: &AlignmentReport, problem: &Problem) -> Option<TemplatePlan> {
    let segments = report.segments.as_ref()?;
    let mut template = String::new();
    let mut slots = Vec::new();
    for (k, s) in segments.iter().enumerate() {
        match s {
            Segment::Literal(text) => template.push_str(&escape_template(text)),
            Segment::Slot { values, program } => {
                template.push_str("{}");
                slots.push(match program {
                    Some(p) => SlotPlan::Solved(p.clone()),
                    None => SlotPlan::Open(Problem::from_pairs(
                        format!("{}/slot{}", problem.spec.name, k),
                        problem.data().cloned(),
                        problem.inputs.iter().cloned().zip(values.iter().cloned()).collect(),
                    )),
                });
            }
        }
    }
    Some(TemplatePlan { template, slots })
}

/// Fills `template` with the outputs of `slots`. A template that is a single
/// slot is the slot program itself; one without slots is a literal.
pub fn compose_template(template: &str, slots: &[CompiledProgram]) -> CompiledProgram {
    if template == "{}" && slots.len() == 1 {
        return slots[0].clone();
    }
    if slots.is_empty() {
        return CompiledProgram::literal(Value::text(template.replace("{{", "{").replace("}}", "}")));
    }
    let mut b = DagBuilder::new();
    let input = b.input(Path::root());
    let nodes: Vec<NodeId> = slots.iter().map(|s| b.inline(s.as_dag().expect("direct slot"), input)).collect();
    let list = list_of(&mut b, &nodes);
    let tpl = b.literal(Value::text(template));
    let out = b.apply("template_fill", vec![tpl, list]);
    b.finish(out)
}

/// A list node holding `nodes` in order.
pub fn list_of(b: &mut DagBuilder, nodes: &[NodeId]) -> NodeId {
    match nodes {
        [] => b.literal(Value::List(Vec::new())),
        [x] => {
            let empty = b.literal(Value::List(Vec::new()));
            b.apply("append", vec![empty, *x])
        }
        [x, y] => b.apply("make_list_2", vec![*x, *y]),
        [x, y, z] => b.apply("make_list_3", vec![*x, *y, *z]),
        _ => {
            let head = list_of(b, &nodes[..3]);
            let tail = list_of(b, &nodes[3..]);
            b.apply("concat", vec![head, tail])
        }
    }
}
