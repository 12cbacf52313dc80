use std::collections::HashMap;
use std::sync::Mutex;

use once_cell::sync::Lazy;
use regex::Regex;
use thiserror::Error;

use crate::values::{parse_number_token, Number, TypeClass, Value};

/// Failure of a single instruction application.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("{instruction}: type mismatch ({detail})")]
    TypeMismatch { instruction: &'static str, detail: String },
    #[error("{0}: division by zero")]
    DivisionByZero(&'static str),
    #[error("{0}: index out of range")]
    IndexOutOfRange(&'static str),
    #[error("{0}: empty list")]
    EmptyList(&'static str),
    #[error("{0}: numeric overflow")]
    Overflow(&'static str),
    #[error("{instruction}: malformed literal parameter ({detail})")]
    BadParameter { instruction: &'static str, detail: String },
    #[error("{instruction}: {detail}")]
    Invalid { instruction: &'static str, detail: String },
    #[error("unspecified value used as an operand")]
    Unspecified,
    #[error("{0}: wrong number of operands")]
    Arity(String),
}

macro_rules! ops {
    ($( $variant:ident => $name:literal, [$($arg:ident),*] -> $res:ident, $frag:literal; )*) => {
        /// Built-in instructions of the virtual machine.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Op { $($variant),* }

        impl Op {
            pub const ALL: &'static [Op] = &[$(Op::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Op::$variant => $name),* }
            }

            pub fn from_name(name: &str) -> Option<Op> {
                match name { $($name => Some(Op::$variant),)* _ => None }
            }

            pub fn signature(self) -> &'static [TypeClass] {
                match self { $(Op::$variant => &[$(TypeClass::$arg),*]),* }
            }

            pub fn result(self) -> TypeClass {
                match self { $(Op::$variant => TypeClass::$res),* }
            }

            pub fn fragment_slots(self) -> usize {
                match self { $(Op::$variant => $frag),* }
            }
        }
    };
}

ops! {
    Add => "add", [Number, Number] -> Number, 0;
    Sub => "sub", [Number, Number] -> Number, 0;
    Mul => "mul", [Number, Number] -> Number, 0;
    Div => "div", [Number, Number] -> Number, 0;
    Mod => "mod", [Number, Number] -> Number, 0;
    Neg => "neg", [Number] -> Number, 0;
    Abs => "abs", [Number] -> Number, 0;
    Round => "round", [Number] -> Number, 0;
    Eq => "eq", [Any, Any] -> Boolean, 0;
    Lt => "lt", [Any, Any] -> Boolean, 0;
    Gt => "gt", [Any, Any] -> Boolean, 0;
    Lte => "lte", [Any, Any] -> Boolean, 0;
    Gte => "gte", [Any, Any] -> Boolean, 0;
    Not => "not", [Boolean] -> Boolean, 0;
    And => "and", [Boolean, Boolean] -> Boolean, 0;
    Or => "or", [Boolean, Boolean] -> Boolean, 0;
    Length => "length", [List] -> Number, 0;
    Sort => "sort", [List] -> List, 0;
    Reverse => "reverse", [List] -> List, 0;
    Head => "head", [List] -> Any, 0;
    Last => "last", [List] -> Any, 0;
    Nth => "nth", [List, Number] -> Any, 0;
    Slice => "slice", [List, Number, Number] -> List, 0;
    Concat => "concat", [List, List] -> List, 0;
    Append => "append", [List, Any] -> List, 0;
    Unique => "unique", [List] -> List, 0;
    Flatten => "flatten", [List] -> List, 0;
    Zip => "zip", [List, List] -> List, 0;
    Range => "range", [Number] -> List, 0;
    Sum => "sum", [List] -> Number, 0;
    Product => "product", [List] -> Number, 0;
    Min => "min", [List] -> Number, 0;
    Max => "max", [List] -> Number, 0;
    Mean => "mean", [List] -> Number, 0;
    Median => "median", [List] -> Number, 0;
    MakeList2 => "make_list_2", [Any, Any] -> List, 0;
    MakeList3 => "make_list_3", [Any, Any, Any] -> List, 0;
    Contains => "contains", [List, Any] -> Boolean, 0;
    Map => "map", [List] -> List, 1;
    Filter => "filter", [List] -> List, 1;
    Reduce => "reduce", [List] -> Any, 1;
    Split => "split", [Text, Text] -> List, 0;
    Join => "join", [List, Text] -> Text, 0;
    Upper => "upper", [Text] -> Text, 0;
    Lower => "lower", [Text] -> Text, 0;
    Titlecase => "titlecase", [Text] -> Text, 0;
    Trim => "trim", [Text] -> Text, 0;
    Substring => "substring", [Text, Number, Number] -> Text, 0;
    IndexOf => "index_of", [Text, Text] -> Number, 0;
    Replace => "replace", [Text, Text, Text] -> Text, 0;
    TextLength => "text_length", [Text] -> Number, 0;
    ToText => "to_text", [Any] -> Text, 0;
    ParseNumber => "parse_number", [Text] -> Number, 0;
    TryParseNumber => "try_parse_number", [Text] -> Any, 0;
    ConcatText => "concat_text", [Text, Text] -> Text, 0;
    TemplateFill => "template_fill", [Text, List] -> Text, 0;
    RegexExtractAll => "regex_extract_all", [Text, Text] -> List, 0;
    RegexMatches => "regex_matches", [Text, Text] -> Boolean, 0;
    ReformatDate => "reformat_date", [Text, Text, Text] -> Text, 0;
    Get => "get", [Record, Text] -> Any, 0;
    Put => "put", [Record, Text, Any] -> Record, 0;
    Keys => "keys", [Record] -> List, 0;
    Values => "values", [Record] -> List, 0;
    MakeRecord => "make_record", [List, List] -> Record, 0;
    ContainsCi => "contains_ci", [List, Any] -> Boolean, 0;
}

impl Op {
    pub fn arity(self) -> usize {
        self.signature().len()
    }

    /// Instructions whose second operand is a pattern or format parameter drawn from a library.
    pub fn takes_library_parameter(self) -> bool {
        matches!(self, Op::RegexExtractAll | Op::RegexMatches | Op::ReformatDate | Op::TemplateFill)
    }
}

/// What executing an instruction means.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InstructionKind {
    Builtin(Op),
    /// A previously compiled program used as an instruction.
    Call(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstructionDescriptor {
    pub name: String,
    pub arity: usize,
    pub fragment_slots: usize,
    pub signature: Vec<TypeClass>,
    pub result: TypeClass,
    pub cost: u32,
    pub kind: InstructionKind,
}

impl InstructionDescriptor {
    pub fn builtin(op: Op) -> Self {
        InstructionDescriptor {
            name: op.name().to_string(),
            arity: op.arity(),
            fragment_slots: op.fragment_slots(),
            signature: op.signature().to_vec(),
            result: op.result(),
            cost: 1,
            kind: InstructionKind::Builtin(op),
        }
    }

    pub fn call(name: &str, input: TypeClass, output: TypeClass) -> Self {
        InstructionDescriptor {
            name: name.to_string(),
            arity: 1,
            fragment_slots: 0,
            signature: vec![input],
            result: output,
            cost: 1,
            kind: InstructionKind::Call(name.to_string()),
        }
    }

    pub fn op(&self) -> Option<Op> {
        match self.kind {
            InstructionKind::Builtin(op) => Some(op),
            InstructionKind::Call(_) => None,
        }
    }
}

/// The baseline instruction catalog.
pub fn catalog() -> Vec<InstructionDescriptor> {
    Op::ALL.iter().map(|&op| InstructionDescriptor::builtin(op)).collect()
}

fn mismatch(op: Op, args: &[Value]) -> StepError {
    let classes: Vec<&str> = args.iter().map(|a| a.type_class().name()).collect();
    StepError::TypeMismatch { instruction: op.name(), detail: format!("got ({})", classes.join(", ")) }
}

fn num(op: Op, v: &Value) -> Result<Number, StepError> {
    v.as_number().ok_or_else(|| mismatch(op, std::slice::from_ref(v)))
}

fn int(op: Op, v: &Value) -> Result<i64, StepError> {
    match v {
        Value::Number(Number::Int(i)) => Ok(*i),
        _ => Err(StepError::TypeMismatch { instruction: op.name(), detail: "expected an integer".into() }),
    }
}

fn text(op: Op, v: &Value) -> Result<&str, StepError> {
    v.as_text().ok_or_else(|| mismatch(op, std::slice::from_ref(v)))
}

fn list(op: Op, v: &Value) -> Result<&[Value], StepError> {
    v.as_list().ok_or_else(|| mismatch(op, std::slice::from_ref(v)))
}

fn boolean(op: Op, v: &Value) -> Result<bool, StepError> {
    v.as_bool().ok_or_else(|| mismatch(op, std::slice::from_ref(v)))
}

fn dec(op: Op, x: f64) -> Result<Value, StepError> {
    Number::cleaned(x).map(Value::Number).ok_or(StepError::Overflow(op.name()))
}

fn arith(op: Op, a: Number, b: Number) -> Result<Value, StepError> {
    if let (Number::Int(x), Number::Int(y)) = (a, b) {
        let r = match op {
            Op::Add => x.checked_add(y),
            Op::Sub => x.checked_sub(y),
            Op::Mul => x.checked_mul(y),
            _ => unreachable!(),
        };
        return r.map(Value::int).ok_or(StepError::Overflow(op.name()));
    }
    let (x, y) = (a.as_f64(), b.as_f64());
    dec(
        op,
        match op {
            Op::Add => x + y,
            Op::Sub => x - y,
            Op::Mul => x * y,
            _ => unreachable!(),
        },
    )
}

/// Ordering of two comparable scalars: numbers with numbers, texts with texts.
pub(crate) fn compare(op: Op, a: &Value, b: &Value) -> Result<std::cmp::Ordering, StepError> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => Ok(x.cmp_num(*y)),
        (Value::Text(x), Value::Text(y)) => Ok(x.cmp(y)),
        _ => Err(mismatch(op, &[a.clone(), b.clone()])),
    }
}

fn numbers(op: Op, items: &[Value]) -> Result<Vec<Number>, StepError> {
    items.iter().map(|v| num(op, v)).collect()
}

/// Python-style index normalization; negative counts from the end.
fn norm_index(i: i64, len: usize) -> Option<usize> {
    let len = len as i64;
    let j = if i < 0 { len + i } else { i };
    (0..len).contains(&j).then_some(j as usize)
}

fn clamp_bound(i: i64, len: usize) -> usize {
    let len = len as i64;
    let j = if i < 0 { len + i } else { i };
    j.clamp(0, len) as usize
}

/// Text rendering used by joins and templates: texts verbatim, others canonically.
pub fn to_text(v: &Value) -> String {
    match v {
        Value::Text(s) => s.clone(),
        other => other.render(),
    }
}

fn titlecase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut at_word_start = true;
    for c in s.chars() {
        if c.is_whitespace() {
            at_word_start = true;
            out.push(c);
        } else if at_word_start {
            out.extend(c.to_uppercase());
            at_word_start = false;
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

static REGEX_CACHE: Lazy<Mutex<HashMap<String, Option<Regex>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Compiles (and caches) a regex pattern.
pub fn compiled_regex(pattern: &str) -> Option<Regex> {
    let mut cache = REGEX_CACHE.lock().unwrap();
    if let Some(r) = cache.get(pattern) {
        return r.clone();
    }
    let r = Regex::new(pattern).ok();
    cache.insert(pattern.to_string(), r.clone());
    r
}

fn template_fill(op: Op, template: &str, args: &[Value]) -> Result<String, StepError> {
    let mut out = String::new();
    let mut chars = template.chars().peekable();
    let mut next = 0;
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                out.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                out.push('}');
            }
            '{' if chars.peek() == Some(&'}') => {
                chars.next();
                let arg = args.get(next).ok_or(StepError::IndexOutOfRange(op.name()))?;
                out.push_str(&to_text(arg));
                next += 1;
            }
            c => out.push(c),
        }
    }
    if next != args.len() {
        return Err(StepError::Invalid { instruction: op.name(), detail: "argument count differs from slots".into() });
    }
    Ok(out)
}

/// Escapes literal braces so that `template_fill` reproduces `s` verbatim.
pub fn escape_template(s: &str) -> String {
    s.replace('{', "{{").replace('}', "}}")
}

/// Applies a first-order built-in. Higher-order instructions are handled by the interpreter.
pub fn apply_builtin(op: Op, args: &[Value]) -> Result<Value, StepError> {
    if args.len() != op.arity() {
        return Err(StepError::Arity(op.name().to_string()));
    }
    if args.iter().any(|a| matches!(a, Value::Unspecified)) {
        return Err(StepError::Unspecified);
    }
    let a = |i: usize| &args[i];
    Ok(match op {
        Op::Add | Op::Sub | Op::Mul => arith(op, num(op, a(0))?, num(op, a(1))?)?,
        Op::Div => {
            let (x, y) = (num(op, a(0))?, num(op, a(1))?);
            if y.as_f64() == 0.0 {
                return Err(StepError::DivisionByZero(op.name()));
            }
            dec(op, x.as_f64() / y.as_f64())?
        }
        Op::Mod => match (num(op, a(0))?, num(op, a(1))?) {
            (_, y) if y.as_f64() == 0.0 => return Err(StepError::DivisionByZero(op.name())),
            (Number::Int(x), Number::Int(y)) => Value::int(x.checked_rem_euclid(y).ok_or(StepError::Overflow(op.name()))?),
            (x, y) => dec(op, x.as_f64().rem_euclid(y.as_f64()))?,
        },
        Op::Neg => match num(op, a(0))? {
            Number::Int(x) => Value::int(x.checked_neg().ok_or(StepError::Overflow(op.name()))?),
            Number::Dec(x) => dec(op, -x)?,
        },
        Op::Abs => match num(op, a(0))? {
            Number::Int(x) => Value::int(x.checked_abs().ok_or(StepError::Overflow(op.name()))?),
            Number::Dec(x) => dec(op, x.abs())?,
        },
        Op::Round => match num(op, a(0))? {
            Number::Int(x) => Value::int(x),
            Number::Dec(x) => dec(op, x.round())?,
        },
        Op::Eq => Value::Bool(a(0) == a(1)),
        Op::Lt => Value::Bool(compare(op, a(0), a(1))?.is_lt()),
        Op::Gt => Value::Bool(compare(op, a(0), a(1))?.is_gt()),
        Op::Lte => Value::Bool(compare(op, a(0), a(1))?.is_le()),
        Op::Gte => Value::Bool(compare(op, a(0), a(1))?.is_ge()),
        Op::Not => Value::Bool(!boolean(op, a(0))?),
        Op::And => Value::Bool(boolean(op, a(0))? && boolean(op, a(1))?),
        Op::Or => Value::Bool(boolean(op, a(0))? || boolean(op, a(1))?),
        Op::Length => Value::int(list(op, a(0))?.len() as i64),
        Op::Sort => {
            let items = list(op, a(0))?;
            let mut sorted = items.to_vec();
            let homogeneous = items.iter().all(|v| matches!(v, Value::Number(_)))
                || items.iter().all(|v| matches!(v, Value::Text(_)));
            if !homogeneous {
                return Err(StepError::TypeMismatch { instruction: op.name(), detail: "mixed element types".into() });
            }
            sorted.sort_by(|x, y| compare(op, x, y).unwrap());
            Value::List(sorted)
        }
        Op::Reverse => {
            let mut items = list(op, a(0))?.to_vec();
            items.reverse();
            Value::List(items)
        }
        Op::Head => list(op, a(0))?.first().cloned().ok_or(StepError::EmptyList(op.name()))?,
        Op::Last => list(op, a(0))?.last().cloned().ok_or(StepError::EmptyList(op.name()))?,
        Op::Nth => {
            let items = list(op, a(0))?;
            let i = norm_index(int(op, a(1))?, items.len()).ok_or(StepError::IndexOutOfRange(op.name()))?;
            items[i].clone()
        }
        Op::Slice => {
            let items = list(op, a(0))?;
            let (s, e) = (clamp_bound(int(op, a(1))?, items.len()), clamp_bound(int(op, a(2))?, items.len()));
            Value::List(if s < e { items[s..e].to_vec() } else { Vec::new() })
        }
        Op::Concat => {
            let mut items = list(op, a(0))?.to_vec();
            items.extend_from_slice(list(op, a(1))?);
            Value::List(items)
        }
        Op::Append => {
            let mut items = list(op, a(0))?.to_vec();
            items.push(a(1).clone());
            Value::List(items)
        }
        Op::Unique => {
            let mut out: Vec<Value> = Vec::new();
            for v in list(op, a(0))? {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Value::List(out)
        }
        Op::Flatten => {
            let mut out = Vec::new();
            for v in list(op, a(0))? {
                match v {
                    Value::List(inner) => out.extend(inner.iter().cloned()),
                    other => out.push(other.clone()),
                }
            }
            Value::List(out)
        }
        Op::Zip => {
            let (x, y) = (list(op, a(0))?, list(op, a(1))?);
            Value::List(x.iter().zip(y).map(|(p, q)| Value::List(vec![p.clone(), q.clone()])).collect())
        }
        Op::Range => {
            let n = int(op, a(0))?;
            if !(0..=10_000).contains(&n) {
                return Err(StepError::Invalid { instruction: op.name(), detail: format!("range bound {n}") });
            }
            Value::List((0..n).map(Value::int).collect())
        }
        Op::Sum | Op::Product => {
            let ns = numbers(op, list(op, a(0))?)?;
            let mut acc = Value::int(if op == Op::Sum { 0 } else { 1 });
            let step = if op == Op::Sum { Op::Add } else { Op::Mul };
            for n in ns {
                acc = arith(step, acc.as_number().unwrap(), n).map_err(|_| StepError::Overflow(op.name()))?;
            }
            acc
        }
        Op::Min | Op::Max => {
            let ns = numbers(op, list(op, a(0))?)?;
            let pick = ns.into_iter().reduce(|x, y| {
                let ord = x.cmp_num(y);
                if (op == Op::Min && ord.is_gt()) || (op == Op::Max && ord.is_lt()) {
                    y
                } else {
                    x
                }
            });
            Value::Number(pick.ok_or(StepError::EmptyList(op.name()))?)
        }
        Op::Mean => {
            let ns = numbers(op, list(op, a(0))?)?;
            if ns.is_empty() {
                return Err(StepError::EmptyList(op.name()));
            }
            dec(op, ns.iter().map(|n| n.as_f64()).sum::<f64>() / ns.len() as f64)?
        }
        Op::Median => {
            let mut ns = numbers(op, list(op, a(0))?)?;
            if ns.is_empty() {
                return Err(StepError::EmptyList(op.name()));
            }
            ns.sort_by(|x, y| x.cmp_num(*y));
            let mid = ns.len() / 2;
            if ns.len() % 2 == 1 {
                Value::Number(ns[mid])
            } else {
                dec(op, (ns[mid - 1].as_f64() + ns[mid].as_f64()) / 2.0)?
            }
        }
        Op::MakeList2 => Value::List(vec![a(0).clone(), a(1).clone()]),
        Op::MakeList3 => Value::List(vec![a(0).clone(), a(1).clone(), a(2).clone()]),
        Op::Contains => Value::Bool(list(op, a(0))?.contains(a(1))),
        Op::ContainsCi => {
            let items = list(op, a(0))?;
            let needle = a(1);
            Value::Bool(items.iter().any(|v| match (v, needle) {
                (Value::Text(x), Value::Text(y)) => x.to_lowercase() == y.to_lowercase(),
                (x, y) => x == y,
            }))
        }
        Op::Map | Op::Filter | Op::Reduce => {
            return Err(StepError::Invalid { instruction: op.name(), detail: "requires a fragment".into() })
        }
        Op::Split => {
            let (s, sep) = (text(op, a(0))?, text(op, a(1))?);
            if sep.is_empty() {
                return Err(StepError::BadParameter { instruction: op.name(), detail: "empty separator".into() });
            }
            Value::List(s.split(sep).map(Value::text).collect())
        }
        Op::Join => {
            let (items, sep) = (list(op, a(0))?, text(op, a(1))?);
            Value::text(items.iter().map(to_text).collect::<Vec<_>>().join(sep))
        }
        Op::Upper => Value::text(text(op, a(0))?.to_uppercase()),
        Op::Lower => Value::text(text(op, a(0))?.to_lowercase()),
        Op::Titlecase => Value::text(titlecase(text(op, a(0))?)),
        Op::Trim => Value::text(text(op, a(0))?.trim()),
        Op::Substring => {
            let chars: Vec<char> = text(op, a(0))?.chars().collect();
            let (s, e) = (clamp_bound(int(op, a(1))?, chars.len()), clamp_bound(int(op, a(2))?, chars.len()));
            Value::text(if s < e { chars[s..e].iter().collect::<String>() } else { String::new() })
        }
        Op::IndexOf => {
            let (s, sub) = (text(op, a(0))?, text(op, a(1))?);
            Value::int(s.find(sub).map(|b| s[..b].chars().count() as i64).unwrap_or(-1))
        }
        Op::Replace => {
            let (s, from, to) = (text(op, a(0))?, text(op, a(1))?, text(op, a(2))?);
            if from.is_empty() {
                return Err(StepError::BadParameter { instruction: op.name(), detail: "empty pattern".into() });
            }
            Value::text(s.replace(from, to))
        }
        Op::TextLength => Value::int(text(op, a(0))?.chars().count() as i64),
        Op::ToText => Value::text(to_text(a(0))),
        Op::ParseNumber => {
            let s = text(op, a(0))?;
            Value::Number(parse_number_token(s.trim()).ok_or_else(|| StepError::Invalid {
                instruction: op.name(),
                detail: format!("{s:?} is not a number"),
            })?)
        }
        Op::TryParseNumber => match a(0) {
            Value::Text(s) => parse_number_token(s.trim()).map(Value::Number).unwrap_or_else(|| a(0).clone()),
            other => other.clone(),
        },
        Op::ConcatText => Value::text(format!("{}{}", text(op, a(0))?, text(op, a(1))?)),
        Op::TemplateFill => Value::text(template_fill(op, text(op, a(0))?, list(op, a(1))?)?),
        Op::RegexExtractAll | Op::RegexMatches => {
            let (s, pattern) = (text(op, a(0))?, text(op, a(1))?);
            let re = compiled_regex(pattern)
                .ok_or_else(|| StepError::BadParameter { instruction: op.name(), detail: pattern.to_string() })?;
            if op == Op::RegexMatches {
                Value::Bool(re.is_match(s))
            } else {
                Value::List(re.find_iter(s).map(|m| Value::text(m.as_str())).collect())
            }
        }
        Op::ReformatDate => {
            let (s, from, to) = (text(op, a(0))?, text(op, a(1))?, text(op, a(2))?);
            let date = super::dates::parse_date(s, from).map_err(|detail| match detail {
                super::dates::DateError::Format(d) => StepError::BadParameter { instruction: op.name(), detail: d },
                super::dates::DateError::Value(d) => StepError::Invalid { instruction: op.name(), detail: d },
            })?;
            Value::text(super::dates::format_date(date, to).map_err(|d| StepError::BadParameter {
                instruction: op.name(),
                detail: format!("{d:?}"),
            })?)
        }
        Op::Get => {
            let key = text(op, a(1))?;
            match a(0) {
                Value::Record(_) => a(0).record_get(key).cloned().ok_or_else(|| StepError::Invalid {
                    instruction: op.name(),
                    detail: format!("no key {key:?}"),
                })?,
                _ => return Err(mismatch(op, args)),
            }
        }
        Op::Put => {
            let key = text(op, a(1))?;
            match a(0) {
                Value::Record(entries) => {
                    let mut entries = entries.clone();
                    match entries.iter_mut().find(|(k, _)| k == key) {
                        Some(slot) => slot.1 = a(2).clone(),
                        None => entries.push((key.to_string(), a(2).clone())),
                    }
                    Value::Record(entries)
                }
                _ => return Err(mismatch(op, args)),
            }
        }
        Op::Keys | Op::Values => match a(0) {
            Value::Record(entries) => Value::List(
                entries
                    .iter()
                    .map(|(k, v)| if op == Op::Keys { Value::text(k.clone()) } else { v.clone() })
                    .collect(),
            ),
            _ => return Err(mismatch(op, args)),
        },
        Op::MakeRecord => {
            let (keys, vals) = (list(op, a(0))?, list(op, a(1))?);
            if keys.len() != vals.len() {
                return Err(StepError::Invalid { instruction: op.name(), detail: "keys and values differ in length".into() });
            }
            let mut entries: Vec<(String, Value)> = Vec::with_capacity(keys.len());
            for (k, v) in keys.iter().zip(vals) {
                let k = text(op, k)?;
                if entries.iter().any(|(e, _)| e == k) {
                    return Err(StepError::Invalid { instruction: op.name(), detail: format!("duplicate key {k:?}") });
                }
                entries.push((k.to_string(), v.clone()));
            }
            Value::Record(entries)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::parse_value;

    fn run(op: Op, args: &[&str]) -> Result<Value, StepError> {
        let vals: Vec<Value> = args.iter().map(|a| parse_value(a).unwrap()).collect();
        apply_builtin(op, &vals)
    }

    fn v(s: &str) -> Value {
        parse_value(s).unwrap()
    }

    #[test]
    fn catalog_is_well_formed() {
        let cat = catalog();
        let mut names: Vec<&str> = cat.iter().map(|d| d.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), cat.len());
        for d in &cat {
            assert_eq!(d.signature.len(), d.arity);
            assert!(d.cost > 0);
        }
        let median = cat.iter().find(|d| d.name == "median").unwrap();
        assert_eq!((median.signature.as_slice(), median.result), (&[TypeClass::List][..], TypeClass::Number));
        assert!(cat.iter().any(|d| d.name == "regex_extract_all"));
        assert!(cat.iter().any(|d| d.name == "reformat_date"));
        assert_eq!(cat.iter().filter(|d| d.fragment_slots == 1).count(), 3);
    }

    #[test]
    fn list_and_statistics() {
        assert_eq!(run(Op::Sort, &["[3,5,6]"]).unwrap(), v("[3,5,6]"));
        assert_eq!(run(Op::Median, &["[2,4,5,8]"]).unwrap(), v("4.5"));
        assert_eq!(run(Op::Median, &["[1,2,4,6,9]"]).unwrap(), v("4"));
        assert_eq!(run(Op::Reverse, &["[]"]).unwrap(), v("[]"));
        assert_eq!(run(Op::Nth, &["[1,2,3]", "-1"]).unwrap(), v("3"));
        assert_eq!(run(Op::Nth, &["[1,2,3]", "3"]), Err(StepError::IndexOutOfRange("nth")));
        assert_eq!(run(Op::Head, &["[]"]), Err(StepError::EmptyList("head")));
        assert_eq!(run(Op::Slice, &["[1,2,3,4]", "1", "-1"]).unwrap(), v("[2,3]"));
        assert_eq!(run(Op::Unique, &["[1,2,1,3,2]"]).unwrap(), v("[1,2,3]"));
        assert_eq!(run(Op::Product, &["[1,2,3,4]"]).unwrap(), v("24"));
        assert_eq!(run(Op::Sum, &["[]"]).unwrap(), v("0"));
        assert_eq!(run(Op::Mean, &["[1,2]"]).unwrap(), v("1.5"));
        assert!(run(Op::Sort, &["[1,a]"]).is_err());
    }

    #[test]
    fn arithmetic() {
        assert_eq!(run(Op::Div, &["7", "2"]).unwrap(), v("3.5"));
        assert_eq!(run(Op::Div, &["1", "0"]), Err(StepError::DivisionByZero("div")));
        assert_eq!(run(Op::Mul, &["1000", "0.175"]).unwrap(), v("175"));
        assert_eq!(run(Op::Mul, &["9223372036854775807", "2"]), Err(StepError::Overflow("mul")));
        assert_eq!(run(Op::Mod, &["-7", "3"]).unwrap(), v("2"));
    }

    #[test]
    fn strings() {
        assert_eq!(run(Op::Titlecase, &["'how now brown cow'"]).unwrap(), v("'How Now Brown Cow'"));
        assert_eq!(run(Op::Split, &["'a b'", "' '"]).unwrap(), v("[a, b]"));
        assert_eq!(run(Op::Join, &["[abc, xyz]", "''"]).unwrap(), v("abcxyz"));
        assert_eq!(run(Op::TextLength, &["'how now brown cow'"]).unwrap(), v("17"));
        assert_eq!(
            run(Op::TemplateFill, &["'{} words and {} characters'", "[4, 17]"]).unwrap(),
            v("'4 words and 17 characters'")
        );
        assert!(run(Op::TemplateFill, &["'{}'", "[1,2]"]).is_err());
        assert_eq!(run(Op::IndexOf, &["'héllo'", "'l'"]).unwrap(), v("2"));
        assert_eq!(run(Op::Substring, &["'héllo'", "1", "3"]).unwrap(), v("'él'"));
        assert_eq!(run(Op::TryParseNumber, &["'22.7'"]).unwrap(), v("22.7"));
        assert_eq!(run(Op::TryParseNumber, &["'21-07-1969'"]).unwrap(), v("'21-07-1969'"));
        assert!(run(Op::ParseNumber, &["abc"]).is_err());
    }

    #[test]
    fn regex_and_dates() {
        assert_eq!(
            run(Op::RegexExtractAll, &["'xyz21-07-1969abc123pqr22.7'", r"'\\d{2}-\\d{2}-\\d{4}'"]).unwrap(),
            v("['21-07-1969']")
        );
        assert!(matches!(run(Op::RegexExtractAll, &["'x'", "'('"]), Err(StepError::BadParameter { .. })));
        assert_eq!(
            run(Op::ReformatDate, &["'07/24/79'", "'MM/DD/YY'", "'DD-MM-YYYY'"]).unwrap(),
            v("'24-07-1979'")
        );
        assert!(run(Op::ReformatDate, &["'24/24/79'", "'MM/DD/YY'", "'DD-MM-YYYY'"]).is_err());
    }

    #[test]
    fn records_and_membership() {
        assert_eq!(run(Op::MakeRecord, &["[a, b]", "[1, 2]"]).unwrap(), v("{a: 1, b: 2}"));
        assert_eq!(run(Op::Get, &["{a: 1}", "a"]).unwrap(), v("1"));
        assert_eq!(run(Op::Put, &["{a: 1}", "b", "2"]).unwrap(), v("{a: 1, b: 2}"));
        assert_eq!(run(Op::ContainsCi, &["[monday, tuesday]", "'MONDAY'"]).unwrap(), v("true"));
        assert_eq!(run(Op::ContainsCi, &["[monday, tuesday]", "''"]).unwrap(), v("false"));
        assert_eq!(run(Op::Eq, &["4", "4.0"]).unwrap(), v("true"));
        assert_eq!(run(Op::Add, &["_", "1"]), Err(StepError::Unspecified));
    }
}
