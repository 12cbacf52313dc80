//! The universal data value model.
//!
//! Values are a superset of JSON: bare (unquoted) strings are allowed where
//! they contain no spaces or structural characters, single or double quotes
//! may delimit strings, and a bare `_` denotes an unspecified element that
//! matches anything when a test case is checked.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// A number that keeps exact integers apart from decimals.
///
/// Decimals with an integral value that fits in 53 bits are normalized to
/// integers on construction, so `4` and `4.0` are the same value.
#[derive(Debug, Clone, Copy)]
pub enum Number {
    Int(i64),
    Dec(f64),
}

const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

impl Number {
    /// Builds a decimal, normalizing integral values. Returns `None` for NaN or infinities.
    pub fn from_f64(x: f64) -> Option<Number> {
        if !x.is_finite() {
            return None;
        }
        if x.fract() == 0.0 && x.abs() <= EXACT_LIMIT {
            return Some(Number::Int(x as i64));
        }
        Some(Number::Dec(x))
    }

    /// Like [`Number::from_f64`] but rounds away floating point noise past 12 significant digits.
    pub fn cleaned(x: f64) -> Option<Number> {
        if !x.is_finite() {
            return None;
        }
        let rounded: f64 = format!("{:.11e}", x).parse().ok()?;
        Number::from_f64(rounded)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Dec(d) => d,
        }
    }

    pub fn as_i64(self) -> Option<i64> {
        match self {
            Number::Int(i) => Some(i),
            Number::Dec(_) => None,
        }
    }

    pub fn cmp_num(self, other: Number) -> Ordering {
        match (self, other) {
            (Number::Int(a), Number::Int(b)) => a.cmp(&b),
            (a, b) => a.as_f64().partial_cmp(&b.as_f64()).unwrap_or(Ordering::Equal),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Int(a), Number::Int(b)) => a == b,
            (Number::Dec(a), Number::Dec(b)) => a.to_bits() == b.to_bits(),
            (Number::Int(a), Number::Dec(b)) | (Number::Dec(b), Number::Int(a)) => *a as f64 == *b,
        }
    }
}

impl Eq for Number {}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match *self {
            Number::Int(i) => {
                0u8.hash(state);
                i.hash(state);
            }
            Number::Dec(d) => {
                1u8.hash(state);
                d.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Dec(d) => write!(f, "{d}"),
        }
    }
}

impl From<i64> for Number {
    fn from(i: i64) -> Self {
        Number::Int(i)
    }
}

/// The type classes used by instruction signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeClass {
    Number,
    Text,
    List,
    Record,
    Boolean,
    Any,
}

impl TypeClass {
    pub fn name(self) -> &'static str {
        match self {
            TypeClass::Number => "number",
            TypeClass::Text => "text",
            TypeClass::List => "list",
            TypeClass::Record => "record",
            TypeClass::Boolean => "boolean",
            TypeClass::Any => "any",
        }
    }

    pub fn from_name(name: &str) -> Option<TypeClass> {
        Some(match name {
            "number" => TypeClass::Number,
            "text" => TypeClass::Text,
            "list" => TypeClass::List,
            "record" => TypeClass::Record,
            "boolean" => TypeClass::Boolean,
            "any" => TypeClass::Any,
            _ => return None,
        })
    }

    /// True when a value of class `actual` may flow into an operand declared as `self`.
    pub fn accepts(self, actual: TypeClass) -> bool {
        self == TypeClass::Any || self == actual
    }
}

/// A data value. Records keep their source key order but compare order-insensitively.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Number(Number),
    Text(String),
    List(Vec<Value>),
    Record(Vec<(String, Value)>),
    Unspecified,
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Number(Number::Int(i))
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    /// A decimal value; `None` when not finite.
    pub fn dec(x: f64) -> Option<Value> {
        Number::from_f64(x).map(Value::Number)
    }

    pub fn type_class(&self) -> TypeClass {
        match self {
            Value::Number(_) => TypeClass::Number,
            Value::Text(_) => TypeClass::Text,
            Value::List(_) => TypeClass::List,
            Value::Record(_) => TypeClass::Record,
            Value::Bool(_) => TypeClass::Boolean,
            Value::Null | Value::Unspecified => TypeClass::Any,
        }
    }

    pub fn as_number(&self) -> Option<Number> {
        match self {
            Value::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn record_get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Record(entries) => entries.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    /// True if an `Unspecified` node occurs anywhere in the value.
    pub fn has_unspecified(&self) -> bool {
        match self {
            Value::Unspecified => true,
            Value::List(items) => items.iter().any(Value::has_unspecified),
            Value::Record(entries) => entries.iter().any(|(_, v)| v.has_unspecified()),
            _ => false,
        }
    }

    /// Number of nodes in the value hierarchy.
    pub fn node_count(&self) -> usize {
        match self {
            Value::List(items) => 1 + items.iter().map(Value::node_count).sum::<usize>(),
            Value::Record(entries) => 1 + entries.iter().map(|(_, v)| v.node_count()).sum::<usize>(),
            _ => 1,
        }
    }

    /// Nesting depth: scalars are 0.
    pub fn depth(&self) -> usize {
        match self {
            Value::List(items) => 1 + items.iter().map(Value::depth).max().unwrap_or(0),
            Value::Record(entries) => 1 + entries.iter().map(|(_, v)| v.depth()).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Canonical text form. See [`render_value`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        write_value(self, &mut out);
        out
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) | (Value::Unspecified, Value::Unspecified) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Number(a), Value::Number(b)) => a == b,
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::List(a), Value::List(b)) => a == b,
            (Value::Record(a), Value::Record(b)) => {
                a.len() == b.len()
                    && a.iter().all(|(k, v)| b.iter().any(|(k2, v2)| k == k2 && v == v2))
            }
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Null => 0u8.hash(state),
            Value::Bool(b) => {
                1u8.hash(state);
                b.hash(state);
            }
            Value::Number(n) => {
                2u8.hash(state);
                n.hash(state);
            }
            Value::Text(s) => {
                3u8.hash(state);
                s.hash(state);
            }
            Value::List(items) => {
                4u8.hash(state);
                items.len().hash(state);
                for item in items {
                    item.hash(state);
                }
            }
            Value::Record(entries) => {
                // order-independent combination
                5u8.hash(state);
                let mut acc = 0u64;
                for (k, v) in entries {
                    let mut h = DefaultHasher::new();
                    k.hash(&mut h);
                    v.hash(&mut h);
                    acc = acc.wrapping_add(h.finish());
                }
                acc.hash(state);
            }
            Value::Unspecified => 6u8.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// One step of a [`Path`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathStep {
    Index(usize),
    Key(String),
}

/// Address of an element inside a value. The empty path is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(pub Vec<PathStep>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, step: PathStep) -> Path {
        let mut steps = self.0.clone();
        steps.push(step);
        Path(steps)
    }

    /// Path as a value: a list of numbers (indexes) and texts (keys).
    pub fn to_value(&self) -> Value {
        Value::List(
            self.0
                .iter()
                .map(|s| match s {
                    PathStep::Index(i) => Value::int(*i as i64),
                    PathStep::Key(k) => Value::text(k.clone()),
                })
                .collect(),
        )
    }

    pub fn from_value(v: &Value) -> Option<Path> {
        let items = v.as_list()?;
        let mut steps = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Value::Number(Number::Int(i)) if *i >= 0 => steps.push(PathStep::Index(*i as usize)),
                Value::Text(k) => steps.push(PathStep::Key(k.clone())),
                _ => return None,
            }
        }
        Some(Path(steps))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_value().render())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("index {index} out of range for list of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("key {0:?} not present")]
    MissingKey(String),
    #[error("cannot apply step {step} to a {found} value")]
    KindMismatch { step: String, found: &'static str },
}

/// Descends into `v` along `p`.
pub fn resolve_path<'a>(v: &'a Value, p: &Path) -> Result<&'a Value, PathError> {
    let mut cur = v;
    for step in &p.0 {
        cur = match (step, cur) {
            (PathStep::Index(i), Value::List(items)) => items
                .get(*i)
                .ok_or(PathError::IndexOutOfRange { index: *i, len: items.len() })?,
            (PathStep::Key(k), Value::Record(_)) => {
                cur.record_get(k).ok_or_else(|| PathError::MissingKey(k.clone()))?
            }
            (step, other) => {
                return Err(PathError::KindMismatch {
                    step: match step {
                        PathStep::Index(i) => i.to_string(),
                        PathStep::Key(k) => format!("{k:?}"),
                    },
                    found: other.type_class().name(),
                })
            }
        };
    }
    Ok(cur)
}

/// Pre-order list of every element of `v` with its path; the root comes first.
pub fn enumerate_elements(v: &Value) -> Vec<(Path, Value)> {
    fn walk(v: &Value, path: Path, out: &mut Vec<(Path, Value)>) {
        out.push((path.clone(), v.clone()));
        match v {
            Value::List(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(item, path.child(PathStep::Index(i)), out);
                }
            }
            Value::Record(entries) => {
                for (k, item) in entries {
                    walk(item, path.child(PathStep::Key(k.clone())), out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(v, Path::root(), &mut out);
    out
}

/// Structural equality where every `Unspecified` node in `expected` matches any subtree.
pub fn matches_with_wildcards(expected: &Value, actual: &Value) -> bool {
    match (expected, actual) {
        (Value::Unspecified, _) => true,
        (Value::List(a), Value::List(b)) => {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| matches_with_wildcards(x, y))
        }
        (Value::Record(a), Value::Record(_)) => {
            let b_len = match actual {
                Value::Record(b) => b.len(),
                _ => unreachable!(),
            };
            a.len() == b_len
                && a.iter().all(|(k, x)| actual.record_get(k).is_some_and(|y| matches_with_wildcards(x, y)))
        }
        _ => expected == actual,
    }
}

/// Canonical text: deterministic, all text quoted, record keys in insertion order.
pub fn render_value(v: &Value) -> String {
    v.render()
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::Text(s) => write_quoted(s, out),
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Record(entries) => {
            out.push('{');
            for (i, (k, item)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_quoted(k, out);
                out.push(':');
                write_value(item, out);
            }
            out.push('}');
        }
        Value::Unspecified => out.push('_'),
    }
}

fn write_quoted(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("value parse error at offset {offset}: {message}")]
pub struct ValueParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses a value from source text. Leading and trailing whitespace is ignored.
pub fn parse_value(text: &str) -> Result<Value, ValueParseError> {
    let mut p = ValueParser { src: text, pos: 0 };
    p.skip_ws();
    if p.pos >= text.len() {
        return Err(p.error("empty value"));
    }
    let v = p.value()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("trailing characters after value"));
    }
    Ok(v)
}

/// True if `c` may appear in an unquoted token.
pub(crate) fn is_bare_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '[' | ']' | '{' | '}' | ',' | ':' | '"' | '\'')
}

/// Classifies a bare (unquoted) token.
pub(crate) fn classify_bare(token: &str) -> Value {
    match token {
        "_" => Value::Unspecified,
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "null" => Value::Null,
        _ => parse_number_token(token).map(Value::Number).unwrap_or_else(|| Value::text(token)),
    }
}

/// Parses a JSON-style number literal. Rejects `inf`, `nan` and other non-numeric spellings.
pub fn parse_number_token(token: &str) -> Option<Number> {
    let bytes = token.as_bytes();
    let mut i = 0;
    if bytes.first() == Some(&b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == digits_start {
        return None;
    }
    let mut integral = true;
    if i < bytes.len() && bytes[i] == b'.' {
        integral = false;
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == frac_start {
            return None;
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        integral = false;
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != bytes.len() {
        return None;
    }
    if integral {
        if let Ok(n) = token.parse::<i64>() {
            return Some(Number::Int(n));
        }
    }
    token.parse::<f64>().ok().and_then(Number::from_f64)
}

struct ValueParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> ValueParser<'a> {
    fn error(&self, message: impl Into<String>) -> ValueParseError {
        ValueParseError { offset: self.pos, message: message.into() }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ValueParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    fn value(&mut self) -> Result<Value, ValueParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('[') => self.list(),
            Some('{') => self.record(),
            Some(q @ ('"' | '\'')) => {
                self.bump();
                self.quoted(q).map(Value::Text)
            }
            Some(c) if is_bare_char(c) => Ok(classify_bare(self.bare())),
            Some(c) => Err(self.error(format!("unexpected character '{c}'"))),
        }
    }

    fn bare(&mut self) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_bare_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn list(&mut self) -> Result<Value, ValueParseError> {
        self.bump();
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.bump();
            return Ok(Value::List(items));
        }
        loop {
            items.push(self.value()?);
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some(']') => return Ok(Value::List(items)),
                Some(c) => {
                    self.pos -= c.len_utf8();
                    return Err(self.error(format!("expected ',' or ']', found '{c}'")));
                }
                None => return Err(self.error("unterminated list")),
            }
        }
    }

    fn record(&mut self) -> Result<Value, ValueParseError> {
        self.bump();
        let mut entries: Vec<(String, Value)> = Vec::new();
        self.skip_ws();
        if self.peek() == Some('}') {
            self.bump();
            return Ok(Value::Record(entries));
        }
        loop {
            self.skip_ws();
            let key_offset = self.pos;
            let key = match self.peek() {
                Some(q @ ('"' | '\'')) => {
                    self.bump();
                    self.quoted(q)?
                }
                Some(c) if is_bare_char(c) => self.bare().to_string(),
                Some(c) => return Err(self.error(format!("expected record key, found '{c}'"))),
                None => return Err(self.error("unterminated record")),
            };
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(ValueParseError { offset: key_offset, message: format!("duplicate key {key:?}") });
            }
            self.expect(':')?;
            let v = self.value()?;
            entries.push((key, v));
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some('}') => return Ok(Value::Record(entries)),
                Some(c) => {
                    self.pos -= c.len_utf8();
                    return Err(self.error(format!("expected ',' or '}}', found '{c}'")));
                }
                None => return Err(self.error("unterminated record")),
            }
        }
    }

    fn quoted(&mut self, quote: char) -> Result<String, ValueParseError> {
        let start = self.pos - 1;
        let mut s = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(ValueParseError { offset: start, message: "unterminated quoted string".into() })
                }
                Some(c) if c == quote => return Ok(s),
                Some('\\') => {
                    let esc = self.bump().ok_or_else(|| self.error("unterminated escape"))?;
                    match esc {
                        'n' => s.push('\n'),
                        'r' => s.push('\r'),
                        't' => s.push('\t'),
                        'b' => s.push('\u{8}'),
                        'f' => s.push('\u{c}'),
                        '/' => s.push('/'),
                        '\\' => s.push('\\'),
                        '"' => s.push('"'),
                        '\'' => s.push('\''),
                        'u' => {
                            let hex = self.src.get(self.pos..self.pos + 4).ok_or_else(|| self.error("short \\u escape"))?;
                            let code = u32::from_str_radix(hex, 16).map_err(|_| self.error("bad \\u escape"))?;
                            self.pos += 4;
                            s.push(char::from_u32(code).ok_or_else(|| self.error("invalid code point"))?);
                        }
                        other => return Err(self.error(format!("unknown escape '\\{other}'"))),
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(items: Vec<Value>) -> Value {
        Value::List(items)
    }

    #[test]
    fn parses_listing_values() {
        assert_eq!(parse_value("[3,5,6]").unwrap(), list(vec![Value::int(3), Value::int(5), Value::int(6)]));
        assert_eq!(parse_value("_").unwrap(), Value::Unspecified);
        assert_eq!(parse_value("\"_\"").unwrap(), Value::text("_"));
        assert_eq!(parse_value("banana").unwrap(), Value::text("banana"));
        let rec = parse_value(r#"{ "name": "John Smith", "date": "24-07-1979" }"#).unwrap();
        assert_eq!(rec.record_get("name"), Some(&Value::text("John Smith")));
        assert_eq!(rec.record_get("date"), Some(&Value::text("24-07-1979")));
        assert_eq!(parse_value("'abcxyz'").unwrap(), Value::text("abcxyz"));
        assert_eq!(parse_value("[fred, male]").unwrap(), list(vec![Value::text("fred"), Value::text("male")]));
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = parse_value("[1,2").unwrap_err();
        assert_eq!(e.offset, 4);
        let e = parse_value("'abc").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(parse_value("[1] x").is_err());
        assert!(parse_value("{a:1,a:2}").unwrap_err().message.contains("duplicate"));
        assert!(parse_value("   ").is_err());
    }

    #[test]
    fn numbers_normalize() {
        assert_eq!(parse_value("4.0").unwrap(), Value::int(4));
        assert_eq!(parse_value("4.5").unwrap().render(), "4.5");
        assert_eq!(Value::int(4), Value::dec(4.0).unwrap());
        assert_eq!(parse_value("nan").unwrap(), Value::text("nan"));
        assert_eq!(parse_value("-12").unwrap(), Value::int(-12));
        assert_eq!(Number::cleaned(1000.0 * 0.175).unwrap(), Number::Int(175));
    }

    #[test]
    fn renders_canonically() {
        assert_eq!(list(vec![Value::int(1), Value::int(2)]).render(), "[1,2]");
        assert_eq!(Value::text("a b").render(), "\"a b\"");
        assert_eq!(Value::dec(4.5).unwrap().render(), "4.5");
        assert_eq!(Value::text("123").render(), "\"123\"");
        assert_ne!(Value::text("123").render(), Value::int(123).render());
    }

    #[test]
    fn resolves_paths() {
        let v = parse_value("[7,3,11,15,6]").unwrap();
        assert_eq!(resolve_path(&v, &Path(vec![PathStep::Index(2)])).unwrap(), &Value::int(11));
        assert_eq!(resolve_path(&v, &Path::root()).unwrap(), &v);
        let r = parse_value("{name: 'John Smith'}").unwrap();
        assert_eq!(resolve_path(&r, &Path(vec![PathStep::Key("name".into())])).unwrap(), &Value::text("John Smith"));
        assert!(matches!(
            resolve_path(&v, &Path(vec![PathStep::Index(9)])),
            Err(PathError::IndexOutOfRange { .. })
        ));
        assert!(matches!(resolve_path(&r, &Path(vec![PathStep::Key("x".into())])), Err(PathError::MissingKey(_))));
        assert!(matches!(resolve_path(&v, &Path(vec![PathStep::Key("x".into())])), Err(PathError::KindMismatch { .. })));
    }

    #[test]
    fn enumerates_in_preorder() {
        let v = parse_value("[2,1]").unwrap();
        let els = enumerate_elements(&v);
        assert_eq!(els.len(), 3);
        assert_eq!(els[0], (Path::root(), v.clone()));
        assert_eq!(els[1], (Path(vec![PathStep::Index(0)]), Value::int(2)));
        assert_eq!(els[2], (Path(vec![PathStep::Index(1)]), Value::int(1)));
        assert_eq!(enumerate_elements(&Value::int(5)), vec![(Path::root(), Value::int(5))]);

        let r = parse_value("{a:[1]}").unwrap();
        let paths: Vec<Path> = enumerate_elements(&r).into_iter().map(|(p, _)| p).collect();
        let a = PathStep::Key("a".into());
        assert_eq!(paths, vec![Path::root(), Path(vec![a.clone()]), Path(vec![a, PathStep::Index(0)])]);
    }

    #[test]
    fn wildcard_matching() {
        let any = parse_value("[1,[2,3]]").unwrap();
        assert!(matches_with_wildcards(&Value::Unspecified, &any));
        assert!(matches_with_wildcards(&parse_value("[1,_,3]").unwrap(), &parse_value("[1,99,3]").unwrap()));
        assert!(!matches_with_wildcards(&parse_value("[1,_]").unwrap(), &parse_value("[1,2,3]").unwrap()));
        assert!(matches_with_wildcards(&parse_value("{a:_, b:2}").unwrap(), &parse_value("{b:2, a:[1]}").unwrap()));
        assert!(matches_with_wildcards(&Value::int(4), &Value::dec(4.0).unwrap()));
    }

    #[test]
    fn records_compare_order_insensitively() {
        let a = parse_value("{a:1,b:2}").unwrap();
        let b = parse_value("{b:2,a:1}").unwrap();
        assert_eq!(a, b);
        let hash = |v: &Value| {
            let mut h = DefaultHasher::new();
            v.hash(&mut h);
            h.finish()
        };
        assert_eq!(hash(&a), hash(&b));
        assert_eq!(a.render(), "{\"a\":1,\"b\":2}");
    }
}
