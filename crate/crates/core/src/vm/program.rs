use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::values::{parse_value, Path, Value};

pub type NodeId = usize;

/// A node of a dataflow graph. Operands always refer to earlier nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Input(Path),
    Data(Path),
    Literal(Value),
    /// Element of another node's value. Used when chaining sub-programs.
    Project(NodeId, Path),
    Apply { op: String, args: Vec<NodeId>, fragments: Vec<CompiledProgram> },
    Call { program: String, arg: NodeId },
}

impl Node {
    fn operands(&self) -> Vec<NodeId> {
        match self {
            Node::Project(src, _) => vec![*src],
            Node::Apply { args, .. } => args.clone(),
            Node::Call { arg, .. } => vec![*arg],
            _ => Vec::new(),
        }
    }
}

/// An acyclic dataflow graph with one output node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    pub nodes: Vec<Node>,
    pub output: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SequenceForm {
    /// `step` maps an index straight to its value.
    ClosedForm,
    /// `step` maps `[index, previous value]` to the value at `index`.
    Recurrence,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceProgram {
    pub form: SequenceForm,
    pub base: Vec<(i64, Value)>,
    pub step: Box<CompiledProgram>,
}

/// An executable artifact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CompiledProgram {
    Null,
    Direct(Dag),
    Conditional { branches: Vec<(CompiledProgram, CompiledProgram)>, default: Option<Box<CompiledProgram>> },
    Sequence(SequenceProgram),
}

/// Builds a [`Dag`], sharing structurally identical nodes.
#[derive(Debug, Default, Clone)]
pub struct DagBuilder {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
}

impl DagBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        debug_assert!(node.operands().iter().all(|&o| o < self.nodes.len()));
        let id = self.nodes.len();
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        id
    }

    pub fn input(&mut self, path: Path) -> NodeId {
        self.add(Node::Input(path))
    }

    pub fn literal(&mut self, v: Value) -> NodeId {
        self.add(Node::Literal(v))
    }

    pub fn apply(&mut self, op: &str, args: Vec<NodeId>) -> NodeId {
        self.add(Node::Apply { op: op.to_string(), args, fragments: Vec::new() })
    }

    pub fn apply_with(&mut self, op: &str, args: Vec<NodeId>, fragments: Vec<CompiledProgram>) -> NodeId {
        self.add(Node::Apply { op: op.to_string(), args, fragments })
    }

    /// Copies `dag` into this builder, substituting `input` for its root input.
    /// Input paths become projections of `input`.
    pub fn inline(&mut self, dag: &Dag, input: NodeId) -> NodeId {
        let mut map = Vec::with_capacity(dag.nodes.len());
        for node in &dag.nodes {
            let id = match node {
                Node::Input(p) if p.is_root() => input,
                Node::Input(p) => match self.nodes[input].clone() {
                    Node::Input(base) => {
                        let mut steps = base.0.clone();
                        steps.extend(p.0.iter().cloned());
                        self.add(Node::Input(Path(steps)))
                    }
                    _ => self.add(Node::Project(input, p.clone())),
                },
                Node::Project(src, p) => self.add(Node::Project(map[*src], p.clone())),
                Node::Apply { op, args, fragments } => self.add(Node::Apply {
                    op: op.clone(),
                    args: args.iter().map(|a| map[*a]).collect(),
                    fragments: fragments.clone(),
                }),
                Node::Call { program, arg } => self.add(Node::Call { program: program.clone(), arg: map[*arg] }),
                other => self.add(other.clone()),
            };
            map.push(id);
        }
        map[dag.output]
    }

    pub fn finish(self, output: NodeId) -> CompiledProgram {
        CompiledProgram::Direct(Dag { nodes: self.nodes, output }).canonicalize()
    }
}

impl CompiledProgram {
    /// Direct program returning the whole input.
    pub fn identity() -> CompiledProgram {
        let mut b = DagBuilder::new();
        let i = b.input(Path::root());
        b.finish(i)
    }

    pub fn literal(v: Value) -> CompiledProgram {
        let mut b = DagBuilder::new();
        let l = b.literal(v);
        b.finish(l)
    }

    pub fn as_dag(&self) -> Option<&Dag> {
        match self {
            CompiledProgram::Direct(d) => Some(d),
            _ => None,
        }
    }

    /// Total instruction cost: applications and calls count 1, references and literals 0.
    pub fn size(&self) -> usize {
        match self {
            CompiledProgram::Null => 0,
            CompiledProgram::Direct(dag) => reachable(dag)
                .into_iter()
                .map(|i| match &dag.nodes[i] {
                    Node::Apply { fragments, .. } => 1 + fragments.iter().map(CompiledProgram::size).sum::<usize>(),
                    Node::Call { .. } => 1,
                    _ => 0,
                })
                .sum(),
            CompiledProgram::Conditional { branches, default } => {
                branches.iter().map(|(g, b)| g.size() + b.size()).sum::<usize>()
                    + default.as_ref().map_or(0, |d| d.size())
            }
            CompiledProgram::Sequence(seq) => seq.step.size(),
        }
    }

    /// Number of alternative bodies; 1 for anything but a conditional.
    pub fn branch_count(&self) -> usize {
        match self {
            CompiledProgram::Conditional { branches, default } => branches.len() + usize::from(default.is_some()),
            _ => 1,
        }
    }

    /// Names of every program reached through `Call` nodes, including inside fragments.
    pub fn call_targets(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit_nodes(&mut |n| {
            if let Node::Call { program, .. } = n {
                if !out.contains(program) {
                    out.push(program.clone());
                }
            }
        });
        out
    }

    /// Visits every node, including nodes of fragments and nested programs.
    pub fn visit_nodes(&self, f: &mut dyn FnMut(&Node)) {
        match self {
            CompiledProgram::Null => {}
            CompiledProgram::Direct(dag) => {
                for node in &dag.nodes {
                    f(node);
                    if let Node::Apply { fragments, .. } = node {
                        for frag in fragments {
                            frag.visit_nodes(f);
                        }
                    }
                }
            }
            CompiledProgram::Conditional { branches, default } => {
                for (g, b) in branches {
                    g.visit_nodes(f);
                    b.visit_nodes(f);
                }
                if let Some(d) = default {
                    d.visit_nodes(f);
                }
            }
            CompiledProgram::Sequence(seq) => seq.step.visit_nodes(f),
        }
    }

    /// Reorders nodes deterministically and drops unreachable ones.
    ///
    /// Nodes are numbered in topological order; among ready nodes the one with
    /// the smallest (kind, name, renumbered operands, payload) key comes first.
    pub fn canonicalize(&self) -> CompiledProgram {
        match self {
            CompiledProgram::Null => CompiledProgram::Null,
            CompiledProgram::Direct(dag) => CompiledProgram::Direct(canonical_dag(dag)),
            CompiledProgram::Conditional { branches, default } => CompiledProgram::Conditional {
                branches: branches.iter().map(|(g, b)| (g.canonicalize(), b.canonicalize())).collect(),
                default: default.as_ref().map(|d| Box::new(d.canonicalize())),
            },
            CompiledProgram::Sequence(seq) => CompiledProgram::Sequence(SequenceProgram {
                form: seq.form,
                base: seq.base.clone(),
                step: Box::new(seq.step.canonicalize()),
            }),
        }
    }

    /// Deterministic structured text, stable across runs; the on-disk program format.
    pub fn canonical_form(&self) -> String {
        let mut out = String::new();
        write_program(&self.canonicalize(), 0, &mut out);
        out
    }

    /// Compact one-line expression, for reports.
    pub fn summary(&self) -> String {
        match self {
            CompiledProgram::Null => "null".into(),
            CompiledProgram::Direct(dag) => expr(dag, dag.output),
            CompiledProgram::Conditional { branches, default } => {
                let mut parts: Vec<String> =
                    branches.iter().map(|(g, b)| format!("if {} then {}", g.summary(), b.summary())).collect();
                if let Some(d) = default {
                    parts.push(format!("else {}", d.summary()));
                }
                parts.join("; ")
            }
            CompiledProgram::Sequence(seq) => {
                let base: Vec<String> = seq.base.iter().map(|(i, v)| format!("f({i})={}", v.render())).collect();
                match seq.form {
                    SequenceForm::ClosedForm => format!("f(n) = {}", seq.step.summary()),
                    SequenceForm::Recurrence => {
                        format!("{}; f(n) = {} over $=[n, f(n-1)]", base.join(", "), seq.step.summary())
                    }
                }
            }
        }
    }
}

fn expr(dag: &Dag, id: NodeId) -> String {
    match &dag.nodes[id] {
        Node::Input(p) if p.is_root() => "$".into(),
        Node::Input(p) => format!("${p}"),
        Node::Data(p) if p.is_root() => "@data".into(),
        Node::Data(p) => format!("@data{p}"),
        Node::Literal(v) => v.render(),
        Node::Project(src, p) => format!("{}{p}", expr(dag, *src)),
        Node::Apply { op, args, fragments } => {
            let mut parts: Vec<String> = args.iter().map(|a| expr(dag, *a)).collect();
            parts.extend(fragments.iter().map(|f| format!("\\$ -> {}", f.summary())));
            format!("{op}({})", parts.join(", "))
        }
        Node::Call { program, arg } => format!("{program}({})", expr(dag, *arg)),
    }
}

fn reachable(dag: &Dag) -> Vec<NodeId> {
    let mut seen = vec![false; dag.nodes.len()];
    let mut stack = vec![dag.output];
    while let Some(i) = stack.pop() {
        if i >= seen.len() || seen[i] {
            continue;
        }
        seen[i] = true;
        stack.extend(dag.nodes[i].operands());
    }
    (0..dag.nodes.len()).filter(|&i| seen[i]).collect()
}

/// Sort key of a node: kind, label, renumbered operands, extra text.
type NodeKey = (u8, String, Vec<NodeId>, String);

fn node_key(node: &Node, renumber: &[Option<NodeId>]) -> NodeKey {
    let ids = |v: &[NodeId]| v.iter().map(|o| renumber[*o].unwrap()).collect::<Vec<_>>();
    match node {
        Node::Input(p) => (0, String::new(), vec![], p.to_string()),
        Node::Data(p) => (1, String::new(), vec![], p.to_string()),
        Node::Literal(v) => (2, String::new(), vec![], v.render()),
        Node::Project(src, p) => (3, String::new(), ids(&[*src]), p.to_string()),
        Node::Apply { op, args, fragments } => {
            (4, op.clone(), ids(args), fragments.iter().map(|f| f.canonical_form()).collect::<Vec<_>>().join("\n"))
        }
        Node::Call { program, arg } => (5, program.clone(), ids(&[*arg]), String::new()),
    }
}

fn canonical_dag(dag: &Dag) -> Dag {
    let live = reachable(dag);
    let mut renumber: Vec<Option<NodeId>> = vec![None; dag.nodes.len()];
    let mut builder = DagBuilder::new();
    let mut pending: Vec<NodeId> = live;
    while !pending.is_empty() {
        let mut best: Option<(usize, NodeKey)> = None;
        for (pos, &i) in pending.iter().enumerate() {
            if dag.nodes[i].operands().iter().all(|o| renumber[*o].is_some()) {
                let key = node_key(&dag.nodes[i], &renumber);
                if best.as_ref().is_none_or(|(_, k)| key < *k) {
                    best = Some((pos, key));
                }
            }
        }
        let (pos, _) = best.expect("dag must be acyclic");
        let i = pending.remove(pos);
        let remapped = match &dag.nodes[i] {
            Node::Project(src, p) => Node::Project(renumber[*src].unwrap(), p.clone()),
            Node::Apply { op, args, fragments } => Node::Apply {
                op: op.clone(),
                args: args.iter().map(|a| renumber[*a].unwrap()).collect(),
                fragments: fragments.iter().map(CompiledProgram::canonicalize).collect(),
            },
            Node::Call { program, arg } => Node::Call { program: program.clone(), arg: renumber[*arg].unwrap() },
            other => other.clone(),
        };
        renumber[i] = Some(builder.add(remapped));
    }
    Dag { output: renumber[dag.output].unwrap_or(0), nodes: builder.nodes }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_program(p: &CompiledProgram, level: usize, out: &mut String) {
    indent(level, out);
    match p {
        CompiledProgram::Null => out.push_str("null\n"),
        CompiledProgram::Direct(dag) => {
            out.push_str("direct\n");
            for (i, node) in dag.nodes.iter().enumerate() {
                indent(level + 1, out);
                let _ = match node {
                    Node::Input(path) => writeln!(out, "n{i} input {path}"),
                    Node::Data(path) => writeln!(out, "n{i} data {path}"),
                    Node::Literal(v) => writeln!(out, "n{i} literal {}", v.render()),
                    Node::Project(src, path) => writeln!(out, "n{i} project n{src} {path}"),
                    Node::Call { program, arg } => {
                        writeln!(out, "n{i} call n{arg} {}", Value::text(program.clone()).render())
                    }
                    Node::Apply { op, args, fragments } => {
                        let mut line = format!("n{i} apply {op}");
                        for a in args {
                            let _ = write!(line, " n{a}");
                        }
                        out.push_str(&line);
                        out.push('\n');
                        for frag in fragments {
                            indent(level + 2, out);
                            out.push_str("fragment\n");
                            write_program(frag, level + 3, out);
                        }
                        Ok(())
                    }
                };
            }
            indent(level + 1, out);
            let _ = writeln!(out, "output n{}", dag.output);
            indent(level, out);
            out.push_str("end\n");
        }
        CompiledProgram::Conditional { branches, default } => {
            out.push_str("conditional\n");
            for (g, b) in branches {
                indent(level + 1, out);
                out.push_str("when\n");
                write_program(g, level + 2, out);
                indent(level + 1, out);
                out.push_str("then\n");
                write_program(b, level + 2, out);
            }
            if let Some(d) = default {
                indent(level + 1, out);
                out.push_str("otherwise\n");
                write_program(d, level + 2, out);
            }
            indent(level, out);
            out.push_str("end\n");
        }
        CompiledProgram::Sequence(seq) => {
            let form = match seq.form {
                SequenceForm::ClosedForm => "closed",
                SequenceForm::Recurrence => "recurrence",
            };
            let _ = writeln!(out, "sequence {form}");
            for (i, v) in &seq.base {
                indent(level + 1, out);
                let _ = writeln!(out, "base {i} {}", v.render());
            }
            indent(level + 1, out);
            out.push_str("step\n");
            write_program(&seq.step, level + 2, out);
            indent(level, out);
            out.push_str("end\n");
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("program text line {line}: {message}")]
pub struct ProgramFormatError {
    pub line: usize,
    pub message: String,
}

/// Parses text produced by [`CompiledProgram::canonical_form`].
pub fn parse_program(text: &str) -> Result<CompiledProgram, ProgramFormatError> {
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
    let mut pos = 0;
    let p = read_program(&lines, &mut pos)?;
    if pos != lines.len() {
        return Err(ProgramFormatError { line: lines[pos].0, message: "trailing content".into() });
    }
    Ok(p)
}

fn read_program(lines: &[(usize, &str)], pos: &mut usize) -> Result<CompiledProgram, ProgramFormatError> {
    let err = |line: usize, m: &str| ProgramFormatError { line, message: m.to_string() };
    let &(ln, head) = lines.get(*pos).ok_or_else(|| err(lines.last().map_or(0, |l| l.0), "unexpected end"))?;
    *pos += 1;
    let mut words = head.splitn(2, ' ');
    match (words.next().unwrap_or(""), words.next()) {
        ("null", None) => Ok(CompiledProgram::Null),
        ("direct", None) => {
            let mut nodes = Vec::new();
            loop {
                let &(ln, line) = lines.get(*pos).ok_or_else(|| err(ln, "unterminated direct block"))?;
                *pos += 1;
                if let Some(rest) = line.strip_prefix("output n") {
                    let output: usize = rest.parse().map_err(|_| err(ln, "bad output reference"))?;
                    let &(eln, end) = lines.get(*pos).ok_or_else(|| err(ln, "missing end"))?;
                    if end != "end" {
                        return Err(err(eln, "expected end"));
                    }
                    *pos += 1;
                    if output >= nodes.len() {
                        return Err(err(ln, "output refers to a missing node"));
                    }
                    return Ok(CompiledProgram::Direct(Dag { nodes, output }));
                }
                let node = read_node(ln, line, nodes.len(), lines, pos)?;
                nodes.push(node);
            }
        }
        ("conditional", None) => {
            let mut branches = Vec::new();
            let mut default = None;
            loop {
                let &(ln, line) = lines.get(*pos).ok_or_else(|| err(ln, "unterminated conditional"))?;
                *pos += 1;
                match line {
                    "when" => {
                        let g = read_program(lines, pos)?;
                        match lines.get(*pos) {
                            Some(&(_, "then")) => *pos += 1,
                            _ => return Err(err(ln, "expected then")),
                        }
                        let b = read_program(lines, pos)?;
                        branches.push((g, b));
                    }
                    "otherwise" => default = Some(Box::new(read_program(lines, pos)?)),
                    "end" => return Ok(CompiledProgram::Conditional { branches, default }),
                    _ => return Err(err(ln, "unexpected line in conditional")),
                }
            }
        }
        ("sequence", Some(form)) => {
            let form = match form {
                "closed" => SequenceForm::ClosedForm,
                "recurrence" => SequenceForm::Recurrence,
                _ => return Err(err(ln, "unknown sequence form")),
            };
            let mut base = Vec::new();
            loop {
                let &(bln, line) = lines.get(*pos).ok_or_else(|| err(ln, "unterminated sequence"))?;
                *pos += 1;
                if line == "step" {
                    break;
                }
                let rest = line.strip_prefix("base ").ok_or_else(|| err(bln, "expected base or step"))?;
                let (idx, value) = rest.split_once(' ').ok_or_else(|| err(bln, "malformed base"))?;
                let idx: i64 = idx.parse().map_err(|_| err(bln, "bad base index"))?;
                let value = parse_value(value).map_err(|e| err(bln, &e.to_string()))?;
                base.push((idx, value));
            }
            let step = read_program(lines, pos)?;
            match lines.get(*pos) {
                Some(&(_, "end")) => *pos += 1,
                _ => return Err(err(ln, "expected end of sequence")),
            }
            Ok(CompiledProgram::Sequence(SequenceProgram { form, base, step: Box::new(step) }))
        }
        _ => Err(err(ln, "expected a program")),
    }
}

fn read_node(
    ln: usize,
    line: &str,
    expected: usize,
    lines: &[(usize, &str)],
    pos: &mut usize,
) -> Result<Node, ProgramFormatError> {
    let err = |m: &str| ProgramFormatError { line: ln, message: m.to_string() };
    let (id, rest) = line.split_once(' ').ok_or_else(|| err("malformed node"))?;
    if id != format!("n{expected}") {
        return Err(err("node ids must be consecutive"));
    }
    let (kind, rest) = rest.split_once(' ').unwrap_or((rest, ""));
    let node_ref = |s: &str| -> Result<NodeId, ProgramFormatError> {
        let n: usize = s.strip_prefix('n').and_then(|n| n.parse().ok()).ok_or_else(|| err("bad node reference"))?;
        if n >= expected {
            return Err(err("forward node reference"));
        }
        Ok(n)
    };
    let path = |s: &str| -> Result<Path, ProgramFormatError> {
        parse_value(s).ok().as_ref().and_then(Path::from_value).ok_or_else(|| err("bad path"))
    };
    Ok(match kind {
        "input" => Node::Input(path(rest)?),
        "data" => Node::Data(path(rest)?),
        "literal" => Node::Literal(parse_value(rest).map_err(|e| err(&e.to_string()))?),
        "project" => {
            let (src, p) = rest.split_once(' ').ok_or_else(|| err("malformed project"))?;
            Node::Project(node_ref(src)?, path(p)?)
        }
        "call" => {
            let (arg, name) = rest.split_once(' ').ok_or_else(|| err("malformed call"))?;
            let name = match parse_value(name) {
                Ok(Value::Text(s)) => s,
                _ => return Err(err("bad call target")),
            };
            Node::Call { program: name, arg: node_ref(arg)? }
        }
        "apply" => {
            let mut parts = rest.split(' ');
            let op = parts.next().filter(|s| !s.is_empty()).ok_or_else(|| err("missing instruction"))?.to_string();
            let args = parts.map(node_ref).collect::<Result<Vec<_>, _>>()?;
            let mut fragments = Vec::new();
            while lines.get(*pos).map(|l| l.1) == Some("fragment") {
                *pos += 1;
                fragments.push(read_program(lines, pos)?);
            }
            Node::Apply { op, args, fragments }
        }
        _ => return Err(err("unknown node kind")),
    })
}
