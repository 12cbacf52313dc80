//! Source files: tags and values separated by colons, layout-insensitive.
//!
//! A file holds one or more programs. Within a program `use` and `data`
//! come first, followed either by `case` blocks or by bare steps forming a
//! single implicit case.

use std::fmt;

use thiserror::Error;

use crate::values::{parse_value, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Program,
    Use,
    Data,
    Case,
    Step,
    Input,
    Derive,
    Output,
}

impl Tag {
    const ALL: [Tag; 8] =
        [Tag::Program, Tag::Use, Tag::Data, Tag::Case, Tag::Step, Tag::Input, Tag::Derive, Tag::Output];

    pub fn keyword(self) -> &'static str {
        match self {
            Tag::Program => "program",
            Tag::Use => "use",
            Tag::Data => "data",
            Tag::Case => "case",
            Tag::Step => "step",
            Tag::Input => "input",
            Tag::Derive => "derive",
            Tag::Output => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Tag(Tag),
    Colon,
    /// Raw value text, quotes and brackets included.
    Value(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
    pub line: usize,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Tag(t) => f.write_str(t.keyword()),
            TokenKind::Colon => f.write_str(":"),
            TokenKind::Value(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, offset {offset}: {message}")]
    Lex { line: usize, offset: usize, message: String },
    #[error("{}line {line}, offset {offset}: {message}", program.as_ref().map(|p| format!("program {p:?}, ")).unwrap_or_default())]
    Syntax { program: Option<String>, line: usize, offset: usize, message: String },
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Splits source text into tags, colons and raw value texts.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut pos = 0;
    let lex_err = |offset: usize, message: &str| ParseError::Lex {
        line: line_of(source, offset),
        offset,
        message: message.to_string(),
    };
    while pos < source.len() {
        let c = source[pos..].chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        let start = pos;
        if c == ':' {
            tokens.push(Token { kind: TokenKind::Colon, offset: start, line: line_of(source, start) });
            pos += 1;
            continue;
        }
        if let Some(tag) = tag_at(source, pos) {
            tokens.push(Token { kind: TokenKind::Tag(tag), offset: start, line: line_of(source, start) });
            pos += tag.keyword().len();
            continue;
        }
        let end = match c {
            '[' | '{' => scan_balanced(source, pos).ok_or_else(|| lex_err(start, "unbalanced brackets"))?,
            '"' | '\'' => scan_quoted(source, pos).ok_or_else(|| lex_err(start, "unterminated quoted string"))?,
            _ => {
                let mut end = pos;
                while end < source.len() {
                    let ch = source[end..].chars().next().unwrap();
                    if ch.is_whitespace() {
                        break;
                    }
                    end += ch.len_utf8();
                }
                end
            }
        };
        tokens.push(Token {
            kind: TokenKind::Value(source[start..end].to_string()),
            offset: start,
            line: line_of(source, start),
        });
        pos = end;
    }
    Ok(tokens)
}

/// A keyword counts as a tag only when it is a whole word followed by a colon.
fn tag_at(source: &str, pos: usize) -> Option<Tag> {
    let rest = &source[pos..];
    for tag in Tag::ALL {
        let kw = tag.keyword();
        if let Some(after) = rest.strip_prefix(kw) {
            let trimmed = after.trim_start();
            let boundary = after.chars().next().is_none_or(|c| c.is_whitespace() || c == ':');
            if boundary && trimmed.starts_with(':') {
                return Some(tag);
            }
        }
    }
    None
}

fn scan_quoted(source: &str, pos: usize) -> Option<usize> {
    let quote = source[pos..].chars().next()?;
    let mut i = pos + 1;
    let mut escaped = false;
    for ch in source[pos + 1..].chars() {
        i += ch.len_utf8();
        if escaped {
            escaped = false;
        } else if ch == '\\' {
            escaped = true;
        } else if ch == quote {
            return Some(i);
        }
    }
    None
}

fn scan_balanced(source: &str, pos: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = pos;
    while i < source.len() {
        let ch = source[i..].chars().next()?;
        match ch {
            '"' | '\'' => {
                i = scan_quoted(source, i)?;
                continue;
            }
            '[' | '{' => depth += 1,
            ']' | '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
        i += ch.len_utf8();
    }
    None
}

/// A program or case identifier: a text or a number.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Identifier(pub Value);

impl Identifier {
    pub fn as_name(&self) -> String {
        match &self.0 {
            Value::Text(s) => s.clone(),
            other => other.render(),
        }
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Input,
    Derive,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepSpec {
    pub id: Option<Identifier>,
    pub kind: StepKind,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseSpec {
    pub id: Option<Identifier>,
    pub steps: Vec<StepSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramSpec {
    pub name: Identifier,
    pub uses: Vec<String>,
    pub data: Option<Value>,
    pub cases: Vec<CaseSpec>,
}

struct SpecParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    eof_offset: usize,
    eof_line: usize,
    program: Option<String>,
}

impl<'a> SpecParser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn err_at(&self, tok: Option<&Token>, message: impl Into<String>) -> ParseError {
        let (line, offset) = tok.map(|t| (t.line, t.offset)).unwrap_or((self.eof_line, self.eof_offset));
        ParseError::Syntax { program: self.program.clone(), line, offset, message: message.into() }
    }

    fn tag(&mut self) -> Option<Tag> {
        match self.peek() {
            Some(Token { kind: TokenKind::Tag(t), .. }) => Some(*t),
            _ => None,
        }
    }

    /// Consumes `":" Value` after a tag and returns the parsed value.
    fn colon_value(&mut self, tag: Tag) -> Result<Value, ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Colon, .. }) => self.pos += 1,
            other => return Err(self.err_at(other, format!("expected ':' after '{}'", tag.keyword()))),
        }
        match self.peek() {
            Some(tok @ Token { kind: TokenKind::Value(text), .. }) => {
                self.pos += 1;
                parse_value(text).map_err(|e| {
                    ParseError::Syntax {
                        program: self.program.clone(),
                        line: tok.line,
                        offset: tok.offset + e.offset,
                        message: e.message,
                    }
                })
            }
            other => Err(self.err_at(other, format!("missing value after '{}:'", tag.keyword()))),
        }
    }

    fn identifier(&mut self, tag: Tag) -> Result<Identifier, ParseError> {
        let tok = self.peek().and_then(|_| self.tokens.get(self.pos + 1));
        let v = self.colon_value(tag)?;
        match v {
            Value::Text(_) | Value::Number(_) => Ok(Identifier(v)),
            _ => Err(self.err_at(tok, format!("'{}' needs a text or number identifier", tag.keyword()))),
        }
    }

    fn step(&mut self) -> Result<StepSpec, ParseError> {
        let mut id = None;
        if self.tag() == Some(Tag::Step) {
            self.pos += 1;
            id = Some(self.identifier(Tag::Step)?);
        }
        let tok = self.peek();
        let kind = match self.tag() {
            Some(Tag::Input) => StepKind::Input,
            Some(Tag::Derive) => StepKind::Derive,
            Some(Tag::Output) => StepKind::Output,
            _ => return Err(self.err_at(tok, "expected 'input', 'derive' or 'output'")),
        };
        let tag = match kind {
            StepKind::Input => Tag::Input,
            StepKind::Derive => Tag::Derive,
            StepKind::Output => Tag::Output,
        };
        self.pos += 1;
        let value = self.colon_value(tag)?;
        Ok(StepSpec { id, kind, value })
    }

    fn at_step(&self) -> bool {
        matches!(
            self.peek().map(|t| &t.kind),
            Some(TokenKind::Tag(Tag::Step | Tag::Input | Tag::Derive | Tag::Output))
        )
    }

    fn program(&mut self) -> Result<ProgramSpec, ParseError> {
        let start = self.peek();
        if self.tag() != Some(Tag::Program) {
            return Err(self.err_at(start, "expected 'program:'"));
        }
        self.pos += 1;
        let name = self.identifier(Tag::Program)?;
        self.program = Some(name.as_name());
        if name.as_name().is_empty() {
            return Err(self.err_at(start, "program name must not be empty"));
        }

        let mut uses = Vec::new();
        if self.tag() == Some(Tag::Use) {
            self.pos += 1;
            let tok = self.peek();
            match self.colon_value(Tag::Use)? {
                Value::List(items) => {
                    for item in items {
                        match item {
                            Value::Text(_) | Value::Number(_) => uses.push(Identifier(item).as_name()),
                            _ => return Err(self.err_at(tok, "'use' list must hold program names")),
                        }
                    }
                }
                v @ (Value::Text(_) | Value::Number(_)) => uses.push(Identifier(v).as_name()),
                _ => return Err(self.err_at(tok, "'use' needs a program name or list of names")),
            }
        }

        let mut data = None;
        if self.tag() == Some(Tag::Data) {
            self.pos += 1;
            let tok = self.peek();
            let v = self.colon_value(Tag::Data)?;
            if v.has_unspecified() {
                return Err(self.err_at(tok, "'data' may not contain '_'"));
            }
            data = Some(v);
        }

        let mut cases = Vec::new();
        if self.at_step() {
            let mut steps = Vec::new();
            while self.at_step() {
                steps.push(self.step()?);
            }
            cases.push(CaseSpec { id: None, steps });
            if self.tag() == Some(Tag::Case) {
                return Err(self.err_at(self.peek(), "'case' cannot follow steps outside a case"));
            }
        } else {
            while self.tag() == Some(Tag::Case) {
                let tok = self.peek();
                self.pos += 1;
                let id = self.identifier(Tag::Case)?;
                if cases.iter().any(|c: &CaseSpec| c.id.as_ref() == Some(&id)) {
                    return Err(self.err_at(tok, format!("duplicate case id {id}")));
                }
                let mut steps = Vec::new();
                while self.at_step() {
                    steps.push(self.step()?);
                }
                if steps.is_empty() {
                    return Err(self.err_at(self.peek(), format!("case {id} has no steps")));
                }
                cases.push(CaseSpec { id: Some(id), steps });
            }
        }

        match self.peek() {
            None | Some(Token { kind: TokenKind::Tag(Tag::Program), .. }) => {}
            Some(tok @ Token { kind: TokenKind::Tag(Tag::Use | Tag::Data), .. }) => {
                return Err(self.err_at(Some(tok), format!("'{}' must come before cases and steps", tok.kind)))
            }
            Some(tok) => return Err(self.err_at(Some(tok), format!("unexpected '{}'", tok.kind))),
        }
        Ok(ProgramSpec { name, uses, data, cases })
    }
}

/// Parses every program in a source file, in file order.
pub fn parse_programs(source: &str) -> Result<Vec<ProgramSpec>, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = SpecParser {
        tokens: &tokens,
        pos: 0,
        eof_offset: source.len(),
        eof_line: line_of(source, source.len()),
        program: None,
    };
    let mut programs = Vec::new();
    while p.pos < tokens.len() {
        p.program = None;
        programs.push(p.program()?);
    }
    Ok(programs)
}

/// How a specification is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecClass {
    NullProgram,
    LiteralOutput,
    Sequence,
    General,
}

/// One case with its steps partitioned by kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedCase {
    pub id: Option<String>,
    pub input: Option<Value>,
    pub derives: Vec<Value>,
    pub outputs: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedSpec {
    pub name: String,
    pub uses: Vec<String>,
    pub data: Option<Value>,
    pub class: SpecClass,
    pub cases: Vec<NormalizedCase>,
}

impl NormalizedSpec {
    /// Builds a General spec directly from input/output pairs.
    pub fn from_pairs(name: impl Into<String>, data: Option<Value>, pairs: Vec<(Value, Value)>) -> NormalizedSpec {
        NormalizedSpec {
            name: name.into(),
            uses: Vec::new(),
            data,
            class: SpecClass::General,
            cases: pairs
                .into_iter()
                .enumerate()
                .map(|(i, (input, output))| NormalizedCase {
                    id: Some((i + 1).to_string()),
                    input: Some(input),
                    derives: Vec::new(),
                    outputs: vec![output],
                })
                .collect(),
        }
    }

    /// Input/output pairs of a General spec.
    pub fn pairs(&self) -> Vec<(&Value, &Value)> {
        self.cases
            .iter()
            .filter_map(|c| Some((c.input.as_ref()?, c.outputs.first()?)))
            .collect()
    }

    /// Stable text describing the spec; identical for specs equal up to case order.
    pub fn canonical_key(&self) -> String {
        let mut cases: Vec<String> = self
            .cases
            .iter()
            .map(|c| {
                let mut s = String::new();
                if let Some(i) = &c.input {
                    s.push_str(&format!("i{};", i.render()));
                }
                for d in &c.derives {
                    s.push_str(&format!("d{};", d.render()));
                }
                for o in &c.outputs {
                    s.push_str(&format!("o{};", o.render()));
                }
                s
            })
            .collect();
        if self.class != SpecClass::Sequence {
            cases.sort();
        }
        format!(
            "{:?}|{}|{}|{}",
            self.class,
            self.uses.join(","),
            self.data.as_ref().map(Value::render).unwrap_or_default(),
            cases.join("|")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("program name must not be empty")]
    EmptyName,
    #[error("program {program}: case {case} has more than one input")]
    MultipleInputs { program: String, case: String },
    #[error("program {program}: case {case} has several outputs and an input")]
    OutputsWithInput { program: String, case: String },
    #[error("program {program}: case {case} has a derive step after its output")]
    DeriveAfterOutput { program: String, case: String },
    #[error("program {program}: case {case} has a derive step before its input")]
    DeriveBeforeInput { program: String, case: String },
    #[error("program {program}: case {case} needs exactly one input and one output")]
    IncompleteCase { program: String, case: String },
    #[error("program {program}: case {case} uses '_' inside a derive step")]
    WildcardDerive { program: String, case: String },
}

/// Classifies a parsed program and partitions the steps of each case.
pub fn normalize_spec(spec: &ProgramSpec) -> Result<NormalizedSpec, ValidationError> {
    let name = spec.name.as_name();
    if name.is_empty() {
        return Err(ValidationError::EmptyName);
    }
    let mut cases = Vec::with_capacity(spec.cases.len());
    for (idx, case) in spec.cases.iter().enumerate() {
        let label = case.id.as_ref().map(|i| i.as_name()).unwrap_or_else(|| (idx + 1).to_string());
        let mut input = None;
        let mut derives = Vec::new();
        let mut outputs = Vec::new();
        for step in &case.steps {
            match step.kind {
                StepKind::Input => {
                    if input.is_some() {
                        return Err(ValidationError::MultipleInputs { program: name, case: label });
                    }
                    if !derives.is_empty() {
                        return Err(ValidationError::DeriveBeforeInput { program: name, case: label });
                    }
                    input = Some(step.value.clone());
                }
                StepKind::Derive => {
                    if !outputs.is_empty() {
                        return Err(ValidationError::DeriveAfterOutput { program: name, case: label });
                    }
                    if step.value.has_unspecified() {
                        return Err(ValidationError::WildcardDerive { program: name, case: label });
                    }
                    derives.push(step.value.clone());
                }
                StepKind::Output => outputs.push(step.value.clone()),
            }
        }
        if outputs.len() >= 2 && input.is_some() {
            return Err(ValidationError::OutputsWithInput { program: name, case: label });
        }
        cases.push(NormalizedCase { id: case.id.as_ref().map(|i| i.as_name()), input, derives, outputs });
    }

    let class = match cases.as_slice() {
        [] => SpecClass::NullProgram,
        [c] if c.input.is_none() && c.derives.is_empty() && c.outputs.len() == 1 => SpecClass::LiteralOutput,
        [c] if c.input.is_none() && c.derives.is_empty() && c.outputs.len() >= 2 => SpecClass::Sequence,
        _ => SpecClass::General,
    };
    if class == SpecClass::General {
        for (idx, c) in cases.iter().enumerate() {
            if c.input.is_none() || c.outputs.len() != 1 {
                let label = c.id.clone().unwrap_or_else(|| (idx + 1).to_string());
                return Err(ValidationError::IncompleteCase { program: name, case: label });
            }
        }
    }
    Ok(NormalizedSpec { name, uses: spec.uses.clone(), data: spec.data.clone(), class, cases })
}
