use std::cell::Cell;
use std::sync::Arc;

use thiserror::Error;

use super::instructions::{apply_builtin, Op, StepError};
use super::program::{CompiledProgram, Dag, Node, NodeId, SequenceForm, SequenceProgram};
use crate::values::{resolve_path, Number, PathError, Value};

pub const DEFAULT_FUEL: u64 = 1_000_000;
const MAX_CALL_DEPTH: usize = 64;

/// A stored program together with its reference data.
#[derive(Debug, Clone, PartialEq)]
pub struct Callable {
    pub name: String,
    pub program: CompiledProgram,
    pub data: Option<Value>,
}

/// Looks up programs named by `Call` nodes.
pub trait ProgramResolver: Send + Sync {
    fn resolve(&self, name: &str) -> Option<Arc<Callable>>;
}

/// Resolver over an in-memory list, mostly for tests and synthesis.
#[derive(Debug, Default, Clone)]
pub struct StaticResolver(pub Vec<Arc<Callable>>);

impl ProgramResolver for StaticResolver {
    fn resolve(&self, name: &str) -> Option<Arc<Callable>> {
        self.0.iter().find(|c| c.name == name).cloned()
    }
}

#[derive(Clone, Copy)]
pub struct ExecutionEnv<'a> {
    pub data: Option<&'a Value>,
    pub resolver: Option<&'a dyn ProgramResolver>,
    pub fuel: u64,
}

impl Default for ExecutionEnv<'_> {
    fn default() -> Self {
        ExecutionEnv { data: None, resolver: None, fuel: DEFAULT_FUEL }
    }
}

impl<'a> ExecutionEnv<'a> {
    pub fn with_data(data: Option<&'a Value>) -> Self {
        ExecutionEnv { data, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("node n{node}: {error}")]
    Step { node: NodeId, error: StepError },
    #[error("node n{node}: {error}")]
    Path { node: NodeId, error: PathError },
    #[error("unmatched input")]
    UnmatchedInput,
    #[error("budget exhausted")]
    Budget,
    #[error("unknown instruction {0:?}")]
    UnknownInstruction(String),
    #[error("program {0:?} not found")]
    UnknownProgram(String),
    #[error("program refers to data but none is defined")]
    MissingData,
    #[error("input contains an unspecified value")]
    UnspecifiedInput,
    #[error("guard did not yield a boolean")]
    GuardNotBoolean,
    #[error("call nesting deeper than {MAX_CALL_DEPTH}")]
    CallDepth,
    #[error("{0}")]
    Step0(StepError),
}

impl ExecError {
    /// The instruction-level failure, if this is one.
    pub fn step_error(&self) -> Option<&StepError> {
        match self {
            ExecError::Step { error, .. } | ExecError::Step0(error) => Some(error),
            _ => None,
        }
    }
}

struct Machine<'a> {
    resolver: Option<&'a dyn ProgramResolver>,
    fuel: Cell<u64>,
    depth: Cell<usize>,
}

impl Machine<'_> {
    fn burn(&self) -> Result<(), ExecError> {
        let left = self.fuel.get();
        if left == 0 {
            return Err(ExecError::Budget);
        }
        self.fuel.set(left - 1);
        Ok(())
    }

    fn run(&self, p: &CompiledProgram, input: &Value, data: Option<&Value>) -> Result<Value, ExecError> {
        match p {
            CompiledProgram::Null => Ok(Value::Null),
            CompiledProgram::Direct(dag) => self.run_dag(dag, input, data),
            CompiledProgram::Conditional { branches, default } => {
                for (guard, body) in branches {
                    match self.run(guard, input, data)? {
                        Value::Bool(true) => return self.run(body, input, data),
                        Value::Bool(false) => {}
                        _ => return Err(ExecError::GuardNotBoolean),
                    }
                }
                match default {
                    Some(d) => self.run(d, input, data),
                    None => Err(ExecError::UnmatchedInput),
                }
            }
            CompiledProgram::Sequence(seq) => self.run_sequence(seq, input, data),
        }
    }

    fn run_sequence(&self, seq: &SequenceProgram, input: &Value, data: Option<&Value>) -> Result<Value, ExecError> {
        let n = match input {
            Value::Number(Number::Int(n)) => *n,
            Value::Null => {
                // No index: list the known terms.
                let terms = seq.base.iter().map(|(i, v)| Value::List(vec![Value::int(*i), v.clone()])).collect();
                return Ok(Value::List(terms));
            }
            _ => return Err(ExecError::UnmatchedInput),
        };
        let pair = |v: Value| Value::List(vec![Value::int(n), v]);
        if let Some((_, v)) = seq.base.iter().find(|(i, _)| *i == n) {
            return Ok(pair(v.clone()));
        }
        match seq.form {
            SequenceForm::ClosedForm => Ok(pair(self.run(&seq.step, &Value::int(n), data)?)),
            SequenceForm::Recurrence => {
                let (start, mut acc) = seq
                    .base
                    .iter()
                    .filter(|(i, _)| *i < n)
                    .max_by_key(|(i, _)| *i)
                    .map(|(i, v)| (*i, v.clone()))
                    .ok_or(ExecError::UnmatchedInput)?;
                for k in start + 1..=n {
                    self.burn()?;
                    acc = self.run(&seq.step, &Value::List(vec![Value::int(k), acc]), data)?;
                }
                Ok(pair(acc))
            }
        }
    }

    fn run_dag(&self, dag: &Dag, input: &Value, data: Option<&Value>) -> Result<Value, ExecError> {
        let mut slots: Vec<Option<Value>> = vec![None; dag.nodes.len()];
        // Nodes are stored in topological order, so one forward pass suffices;
        // nodes the output does not need are skipped.
        let needed = needed_nodes(dag);
        for (id, node) in dag.nodes.iter().enumerate() {
            if !needed[id] {
                continue;
            }
            self.burn()?;
            let get = |i: NodeId| slots[i].as_ref().expect("operand evaluated earlier");
            let value = match node {
                Node::Input(path) => {
                    let v = resolve_path(input, path).map_err(|error| ExecError::Path { node: id, error })?;
                    if v.has_unspecified() {
                        return Err(ExecError::UnspecifiedInput);
                    }
                    v.clone()
                }
                Node::Data(path) => {
                    let d = data.ok_or(ExecError::MissingData)?;
                    resolve_path(d, path).map_err(|error| ExecError::Path { node: id, error })?.clone()
                }
                Node::Literal(v) => v.clone(),
                Node::Project(src, path) => {
                    resolve_path(get(*src), path).map_err(|error| ExecError::Path { node: id, error })?.clone()
                }
                Node::Apply { op, args, fragments } => {
                    let args: Vec<Value> = args.iter().map(|a| get(*a).clone()).collect();
                    self.apply(op, &args, fragments, data).map_err(|e| match e {
                        ExecError::Step0(error) => ExecError::Step { node: id, error },
                        other => other,
                    })?
                }
                Node::Call { program, arg } => self.call(program, get(*arg))?,
            };
            slots[id] = Some(value);
        }
        Ok(slots[dag.output].take().expect("output evaluated"))
    }

    fn call(&self, name: &str, arg: &Value) -> Result<Value, ExecError> {
        let callee = self
            .resolver
            .and_then(|r| r.resolve(name))
            .ok_or_else(|| ExecError::UnknownProgram(name.to_string()))?;
        if self.depth.get() >= MAX_CALL_DEPTH {
            return Err(ExecError::CallDepth);
        }
        self.depth.set(self.depth.get() + 1);
        let out = self.run(&callee.program, arg, callee.data.as_ref());
        self.depth.set(self.depth.get() - 1);
        out
    }

    fn apply(
        &self,
        name: &str,
        args: &[Value],
        fragments: &[CompiledProgram],
        data: Option<&Value>,
    ) -> Result<Value, ExecError> {
        let Some(op) = Op::from_name(name) else {
            if fragments.is_empty() && args.len() == 1 {
                if let Some(r) = self.resolver {
                    if r.resolve(name).is_some() {
                        return self.call(name, &args[0]);
                    }
                }
            }
            return Err(ExecError::UnknownInstruction(name.to_string()));
        };
        if args.len() != op.arity() || fragments.len() != op.fragment_slots() {
            return Err(ExecError::Step0(StepError::Arity(name.to_string())));
        }
        if args.iter().any(Value::has_unspecified) {
            return Err(ExecError::Step0(StepError::Unspecified));
        }
        let items = || match &args[0] {
            Value::List(items) => Ok(items),
            other => Err(ExecError::Step0(StepError::TypeMismatch {
                instruction: op.name(),
                detail: format!("got ({})", other.type_class().name()),
            })),
        };
        match op {
            Op::Map => {
                let mut out = Vec::new();
                for item in items()? {
                    out.push(self.run(&fragments[0], item, data)?);
                }
                Ok(Value::List(out))
            }
            Op::Filter => {
                let mut out = Vec::new();
                for item in items()? {
                    match self.run(&fragments[0], item, data)? {
                        Value::Bool(true) => out.push(item.clone()),
                        Value::Bool(false) => {}
                        other => {
                            return Err(ExecError::Step0(StepError::TypeMismatch {
                                instruction: "filter",
                                detail: format!("predicate gave {}", other.type_class().name()),
                            }))
                        }
                    }
                }
                Ok(Value::List(out))
            }
            Op::Reduce => {
                let list = items()?;
                let mut it = list.iter();
                let mut acc = it.next().ok_or(ExecError::Step0(StepError::EmptyList("reduce")))?.clone();
                for item in it {
                    acc = self.run(&fragments[0], &Value::List(vec![acc, item.clone()]), data)?;
                }
                Ok(acc)
            }
            _ => apply_builtin(op, args).map_err(ExecError::Step0),
        }
    }
}

fn needed_nodes(dag: &Dag) -> Vec<bool> {
    let mut needed = vec![false; dag.nodes.len()];
    needed[dag.output] = true;
    for id in (0..dag.nodes.len()).rev() {
        if !needed[id] {
            continue;
        }
        match &dag.nodes[id] {
            Node::Project(src, _) => needed[*src] = true,
            Node::Apply { args, .. } => args.iter().for_each(|a| needed[*a] = true),
            Node::Call { arg, .. } => needed[*arg] = true,
            _ => {}
        }
    }
    needed
}

/// Runs `p` on `input`. Fuel is charged per evaluated node and per recurrence step.
pub fn execute(p: &CompiledProgram, input: &Value, env: &ExecutionEnv) -> Result<Value, ExecError> {
    if input.has_unspecified() {
        return Err(ExecError::UnspecifiedInput);
    }
    let m = Machine { resolver: env.resolver, fuel: Cell::new(env.fuel), depth: Cell::new(0) };
    m.run(p, input, env.data)
}

/// Applies one instruction. Higher-order instructions run their fragment once per element.
/// A name that is not a builtin is looked up as a stored program.
pub fn apply_instruction(
    name: &str,
    args: &[Value],
    fragments: &[CompiledProgram],
    env: &ExecutionEnv,
) -> Result<Value, ExecError> {
    let m = Machine { resolver: env.resolver, fuel: Cell::new(env.fuel), depth: Cell::new(0) };
    m.apply(name, args, fragments, env.data)
}
