use crate::parser::{NormalizedSpec, SpecClass};
use crate::values::{matches_with_wildcards, Number, Value};
use crate::vm::{execute, CompiledProgram, Dag, ExecutionEnv, ProgramResolver};

/// A spec flattened into parallel per-case vectors.
///
/// Sequence specs become one case per output `[n, f(n)]`, with `n` as the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub spec: NormalizedSpec,
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
    /// Derive values per case, in order.
    pub waypoints: Vec<Vec<Value>>,
    pub labels: Vec<String>,
}

impl Problem {
    pub fn new(spec: NormalizedSpec) -> Problem {
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut waypoints = Vec::new();
        let mut labels = Vec::new();
        match spec.class {
            SpecClass::NullProgram => {}
            SpecClass::Sequence => {
                for (i, o) in spec.cases[0].outputs.iter().enumerate() {
                    let index = match o.as_list() {
                        Some([n, _]) => n.clone(),
                        _ => Value::Null,
                    };
                    inputs.push(index);
                    outputs.push(o.clone());
                    waypoints.push(Vec::new());
                    labels.push(format!("output {}", i + 1));
                }
            }
            SpecClass::LiteralOutput | SpecClass::General => {
                for (i, c) in spec.cases.iter().enumerate() {
                    inputs.push(c.input.clone().unwrap_or(Value::Null));
                    outputs.push(c.outputs.first().cloned().unwrap_or(Value::Null));
                    waypoints.push(c.derives.clone());
                    labels.push(c.id.clone().unwrap_or_else(|| (i + 1).to_string()));
                }
            }
        }
        Problem { spec, inputs, outputs, waypoints, labels }
    }

    /// A General problem built from pairs, sharing `data` with its parent.
    pub fn from_pairs(name: impl Into<String>, data: Option<Value>, pairs: Vec<(Value, Value)>) -> Problem {
        Problem::new(NormalizedSpec::from_pairs(name, data, pairs))
    }

    pub fn cases(&self) -> usize {
        self.inputs.len()
    }

    pub fn data(&self) -> Option<&Value> {
        self.spec.data.as_ref()
    }

    pub fn class(&self) -> SpecClass {
        self.spec.class
    }

    pub fn has_waypoints(&self) -> bool {
        self.waypoints.iter().any(|w| !w.is_empty())
    }

    /// Pairs of cases with equal inputs and incompatible outputs.
    pub fn contradictions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if self.class() != SpecClass::General {
            return out;
        }
        for i in 0..self.cases() {
            for j in i + 1..self.cases() {
                if self.inputs[i] == self.inputs[j] && !compatible(&self.outputs[i], &self.outputs[j]) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Stable identity of the problem, used to share sub-problem results.
    pub fn key(&self) -> String {
        self.spec.canonical_key()
    }
}

/// Whether some value could match both expectations.
fn compatible(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Unspecified, _) | (_, Value::Unspecified) => true,
        (Value::List(x), Value::List(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| compatible(p, q)),
        (Value::Record(x), Value::Record(_)) => {
            x.len() == b_len(b) && x.iter().all(|(k, v)| b.record_get(k).is_some_and(|w| compatible(v, w)))
        }
        _ => a == b,
    }
}

fn b_len(v: &Value) -> usize {
    match v {
        Value::Record(e) => e.len(),
        _ => 0,
    }
}

/// Runs `program` on every case. `honor_waypoints` also requires each derive
/// value to appear, in order, among the values of the program's nodes.
pub fn verify(
    program: &CompiledProgram,
    problem: &Problem,
    resolver: Option<&dyn ProgramResolver>,
    honor_waypoints: bool,
) -> Vec<bool> {
    let env = ExecutionEnv { data: problem.data(), resolver, ..Default::default() };
    (0..problem.cases())
        .map(|c| {
            let ok = execute(program, &problem.inputs[c], &env)
                .is_ok_and(|out| matches_with_wildcards(&problem.outputs[c], &out));
            ok && (!honor_waypoints
                || problem.waypoints[c].is_empty()
                || reaches_waypoints(program, &problem.inputs[c], &problem.waypoints[c], &env))
        })
        .collect()
}

fn reaches_waypoints(program: &CompiledProgram, input: &Value, waypoints: &[Value], env: &ExecutionEnv) -> bool {
    let Some(dag) = program.as_dag() else { return false };
    let values: Vec<Option<Value>> = (0..dag.nodes.len())
        .map(|k| {
            let sub = CompiledProgram::Direct(Dag { nodes: dag.nodes.clone(), output: k });
            execute(&sub, input, env).ok()
        })
        .collect();
    let mut from = 0;
    for w in waypoints {
        match (from..values.len()).find(|&k| values[k].as_ref().is_some_and(|v| matches_with_wildcards(w, v))) {
            Some(k) => from = k + 1,
            None => return false,
        }
    }
    true
}

/// Integer value of a number, if it has one.
pub fn as_int(v: &Value) -> Option<i64> {
    match v {
        Value::Number(Number::Int(i)) => Some(*i),
        _ => None,
    }
}
