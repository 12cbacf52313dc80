//! The structures the corpus listings parse to.

use zoea::parser::{parse_programs, CaseSpec, Identifier, ParseError, ProgramSpec, StepKind, StepSpec};
use zoea::values::Value;

use super::v;

fn name(s: &str) -> Identifier {
    Identifier(Value::text(s))
}

pub fn step(kind: StepKind, value: &str) -> StepSpec {
    StepSpec { id: None, kind, value: v(value) }
}

fn input(value: &str) -> StepSpec {
    step(StepKind::Input, value)
}

fn output(value: &str) -> StepSpec {
    step(StepKind::Output, value)
}

fn case(id: Option<i64>, steps: Vec<StepSpec>) -> CaseSpec {
    CaseSpec { id: id.map(|i| Identifier(Value::int(i))), steps }
}

fn program(n: &str, cases: Vec<CaseSpec>) -> ProgramSpec {
    ProgramSpec { name: name(n), uses: vec![], data: None, cases }
}

fn single(n: &str, steps: Vec<StepSpec>) -> Vec<ProgramSpec> {
    vec![program(n, vec![case(None, steps)])]
}

pub fn expected(n: u32) -> Vec<ProgramSpec> {
    match n {
        2 => vec![program("do_nothing", vec![])],
        3 => single("say_hello", vec![output("'hello world'")]),
        4 => single("concatenate", vec![input("['abc', 'xyz']"), output("'abcxyz'")]),
        5 => vec![program(
            "median",
            vec![
                case(Some(1), vec![input("[3,5,6]"), output("5")]),
                case(Some(2), vec![input("[1,2,4,6,9]"), output("4")]),
                case(Some(3), vec![input("[2,4,5,8]"), output("4.5")]),
            ],
        )],
        6 => vec![program(
            "min_and_max",
            vec![
                case(Some(1), vec![input("[7,3,11,15,6]"), output("[3,15]")]),
                case(Some(2), vec![input("[2,1]"), output("[1,2]")]),
            ],
        )],
        7 => single("count_words_and_chars", vec![input("'how now brown cow'"), output("'4 words and 17 characters'")]),
        8 => single(
            "parse_record",
            vec![input("'001 SMITH JOHN 07/24/79 UK'"), output("{name: 'John Smith', date: '24-07-1979'}")],
        ),
        9 => single(
            "select_females",
            vec![input("[[fred, male], [wilma, female], [barney, male], [betty, female]]"), output("[wilma, betty]")],
        ),
        10 => single("extract_data", vec![input("'xyz21-07-1969abc123pqr22.7'"), output("['21-07-1969', 123, 22.7]")]),
        11 => single(
            "ini_caps",
            vec![
                input("'how now brown cow'"),
                step(StepKind::Derive, "[how, now, brown, cow]"),
                step(StepKind::Derive, "['How', 'Now', 'Brown', 'Cow']"),
                output("'How Now Brown Cow'"),
            ],
        ),
        12 => single("factorial", vec![output("[0,1]"), output("[1,1]"), output("[2,2]"), output("[3,6]")]),
        13 => {
            let tax = program(
                "sales_tax",
                vec![case(Some(1), vec![input("1000"), output("175")]), case(Some(2), vec![input("2000"), output("350")])],
            );
            let mut price = program("price_including_tax", vec![case(None, vec![input("1000"), output("1175")])]);
            price.uses = vec!["sales_tax".to_string()];
            vec![tax, price]
        }
        14 => {
            let mut week = program(
                "is_week_day",
                vec![
                    case(Some(1), vec![input("thursday"), output("true")]),
                    case(Some(2), vec![input("'MONDAY'"), output("true")]),
                    case(Some(3), vec![input("banana"), output("false")]),
                    case(Some(4), vec![input("''"), output("false")]),
                ],
            );
            week.data = Some(v("[monday, tuesday, wednesday, thursday, friday, saturday, sunday]"));
            vec![week]
        }
        _ => panic!("no listing {n}"),
    }
}

/// Line, offset and message of a parse failure.
pub fn located(source: &str) -> (usize, usize, String) {
    match parse_programs(source).unwrap_err() {
        ParseError::Syntax { line, offset, message, .. } | ParseError::Lex { line, offset, message } => {
            (line, offset, message)
        }
    }
}

/// Grammar violations and the text each error must point at.
pub const VIOLATIONS: [(&str, usize, &str); 2] = [
    ("program: p\n  input: 1 output: 2\n  case: 1 input: 2 output: 3", 3, "case"),
    ("program: p\ncase: a input: 1 output: 1\ncase: a input: 2 output: 2", 3, "case"),
];
