//! Shipped regular expressions and date formats.

use crate::values::{Path, Value};
use crate::vm::{compiled_regex, execute, to_text, CompiledProgram, DagBuilder, ExecutionEnv};

use super::problem::Problem;

/// Named patterns, most specific first. Alternations keep this order, so a
/// full date is tried before the numbers inside it.
pub const PATTERNS: &[(&str, &str)] = &[
    ("iso_date", r"\d{4}-\d{2}-\d{2}"),
    ("date_dd_mm_yyyy", r"\d{2}-\d{2}-\d{4}"),
    ("date_dd_mm_yyyy_slash", r"\d{2}/\d{2}/\d{4}"),
    ("date_mm_dd_yy", r"\d{2}/\d{2}/\d{2}"),
    ("time", r"\d{1,2}:\d{2}(?::\d{2})?"),
    ("email", r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}"),
    ("url", r"https?://\S+"),
    ("decimal", r"-?\d+\.\d+"),
    ("integer", r"-?\d+"),
    ("capitalized_word", r"[A-Z][a-z]+"),
    ("upper_word", r"[A-Z]{2,}"),
    ("lower_word", r"[a-z]+"),
    ("word", r"[A-Za-z]+"),
    ("alphanumeric", r"[A-Za-z0-9]+"),
    ("whitespace_run", r"\s+"),
    ("quoted", r#""[^"]*""#),
];

/// Date layouts understood by `reformat_date`, tried in this order.
pub const DATE_FORMATS: &[&str] =
    &["DD-MM-YYYY", "MM/DD/YY", "DD/MM/YYYY", "MM/DD/YYYY", "YYYY-MM-DD", "DD/MM/YY", "DD.MM.YYYY"];

const MAX_ALTERNATION: usize = 3;

pub fn pattern(name: &str) -> Option<&'static str> {
    PATTERNS.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

/// Library patterns matching the whole of `text`.
pub fn patterns_matching(text: &str) -> Vec<usize> {
    (0..PATTERNS.len())
        .filter(|&i| {
            compiled_regex(&format!("^(?:{})$", PATTERNS[i].1)).is_some_and(|re| re.is_match(text))
        })
        .collect()
}

/// Programs that extract the expected list from the text input with an
/// alternation of library patterns, parsing numbers where the outputs hold
/// numbers. Fewest patterns first.
pub fn infer_regex(problem: &Problem) -> Vec<CompiledProgram> {
    if problem.cases() == 0 || !problem.inputs.iter().all(|i| i.as_text().is_some()) {
        return Vec::new();
    }
    let Some(lists) = problem.outputs.iter().map(Value::as_list).collect::<Option<Vec<_>>>() else {
        return Vec::new();
    };
    let elements: Vec<&Value> = lists.iter().flat_map(|l| l.iter()).collect();
    if elements.is_empty() {
        return Vec::new();
    }
    let numbers = elements.iter().filter(|e| e.as_number().is_some()).count();
    let texts = elements.iter().filter(|e| e.as_text().is_some()).count();
    if numbers + texts != elements.len() {
        return Vec::new();
    }
    let wrap = if numbers == elements.len() {
        Some("parse_number")
    } else if numbers > 0 {
        Some("try_parse_number")
    } else {
        None
    };
    let mut candidates: Vec<usize> = Vec::new();
    for e in &elements {
        let found = patterns_matching(&to_text(e));
        if found.is_empty() {
            return Vec::new();
        }
        candidates.extend(found);
    }
    candidates.sort();
    candidates.dedup();

    let env = ExecutionEnv::default();
    let mut out = Vec::new();
    for size in 1..=MAX_ALTERNATION.min(candidates.len()) {
        for combo in combinations(&candidates, size) {
            let regex = combo.iter().map(|&i| PATTERNS[i].1).collect::<Vec<_>>().join("|");
            let program = extraction_program(&regex, wrap);
            let all = (0..problem.cases())
                .all(|c| execute(&program, &problem.inputs[c], &env).is_ok_and(|v| v == problem.outputs[c]));
            if all {
                out.push(program);
            }
        }
        if !out.is_empty() {
            break;
        }
    }
    out
}

/// `regex_extract_all($, regex)`, optionally mapped through a parser.
pub fn extraction_program(regex: &str, parse: Option<&str>) -> CompiledProgram {
    let mut b = DagBuilder::new();
    let input = b.input(Path::root());
    let pattern = b.literal(Value::text(regex));
    let found = b.apply("regex_extract_all", vec![input, pattern]);
    let out = match parse {
        Some(op) => {
            let mut f = DagBuilder::new();
            let e = f.input(Path::root());
            let parsed = f.apply(op, vec![e]);
            b.apply_with("map", vec![found], vec![f.finish(parsed)])
        }
        None => found,
    };
    b.finish(out)
}

/// Index combinations of `items` of length `k`, in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::parse_value;

    fn v(s: &str) -> Value {
        parse_value(s).unwrap()
    }

    #[test]
    fn every_pattern_compiles() {
        for (name, p) in PATTERNS {
            assert!(compiled_regex(p).is_some(), "{name}");
        }
    }

    #[test]
    fn mixed_extraction_uses_an_ordered_alternation() {
        let p = Problem::from_pairs(
            "extract",
            None,
            vec![(v("'xyz21-07-1969abc123pqr22.7'"), v("['21-07-1969', 123, 22.7]"))],
        );
        let found = infer_regex(&p);
        assert!(!found.is_empty());
        let summary = found[0].summary();
        assert!(summary.contains("try_parse_number"), "{summary}");
        let out = execute(&found[0], &v("'on 01-02-2003 paid 5 and 1.5'"), &ExecutionEnv::default()).unwrap();
        assert_eq!(out, v("['01-02-2003', 5, 1.5]"));
    }

    #[test]
    fn integers_are_parsed() {
        let p = Problem::from_pairs("ints", None, vec![(v("'a1b22'"), v("[1, 22]"))]);
        let found = infer_regex(&p);
        assert_eq!(found[0], extraction_program(pattern("integer").unwrap(), Some("parse_number")));
    }

    #[test]
    fn absent_elements_give_nothing() {
        let p = Problem::from_pairs("none", None, vec![(v("'abc'"), v("['q']"))]);
        assert!(infer_regex(&p).is_empty());
    }
}
