//! Starting values for enumeration and the instruction subset to enumerate with.

use std::collections::BTreeSet;

use crate::values::{enumerate_elements, resolve_path, Number, Path, PathStep, TypeClass, Value};
use crate::vm::InstructionDescriptor;

use super::problem::Problem;
use super::space::{enumerable, Seed, SeedKind};

const MAX_INPUT_SEEDS: usize = 48;
const MAX_DATA_SEEDS: usize = 64;
const MAX_MINED: usize = 12;
const MAX_SHARED_TEXT: usize = 8;

/// Seeds in a fixed order: input elements, data elements, constants,
/// separators, shared text, mined numbers. Duplicate observations are left
/// for the space to discard.
pub fn seed_values(problem: &Problem) -> Vec<Seed> {
    let cases = problem.cases();
    let mut seeds = Vec::new();
    if cases == 0 {
        return seeds;
    }
    let long_root = problem.inputs.iter().any(|i| i.as_list().is_some_and(|l| l.len() >= 3));
    for path in common_paths(&problem.inputs).into_iter().take(MAX_INPUT_SEEDS) {
        let values = problem.inputs.iter().map(|i| resolve_path(i, &path).unwrap().clone()).collect();
        let positional = long_root && matches!(path.0.first(), Some(PathStep::Index(_)));
        seeds.push(Seed { kind: SeedKind::Input(path), values, specificity: u32::from(positional) });
    }
    if let Some(data) = problem.data() {
        for (path, v) in enumerate_elements(data).into_iter().take(MAX_DATA_SEEDS) {
            seeds.push(Seed { kind: SeedKind::Data(path), values: vec![v; cases], specificity: 0 });
        }
    }
    for c in [Value::int(0), Value::int(1), Value::text(""), Value::List(Vec::new())] {
        seeds.push(Seed::literal(c, cases, 0));
    }
    let texts: Vec<Value> = problem.inputs.iter().chain(&problem.outputs).cloned().collect();
    for sep in separators(&texts) {
        seeds.push(Seed::literal(Value::text(sep.to_string()), cases, 0));
    }
    for t in shared_text(&problem.inputs).into_iter().take(MAX_SHARED_TEXT) {
        seeds.push(Seed::literal(t, cases, 0));
    }
    for (v, spec) in mined_numbers(problem) {
        seeds.push(Seed::literal(v, cases, spec));
    }
    seeds
}

/// Paths present in every input, shortest first.
fn common_paths(inputs: &[Value]) -> Vec<Path> {
    let mut paths: Vec<Path> = enumerate_elements(&inputs[0])
        .into_iter()
        .map(|(p, _)| p)
        .filter(|p| inputs[1..].iter().all(|i| resolve_path(i, p).is_ok()))
        .collect();
    paths.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.cmp(b)));
    paths
}

/// Non-alphanumeric characters of text inputs, in order of first appearance.
fn separators(inputs: &[Value]) -> Vec<char> {
    let mut out = Vec::new();
    for input in inputs {
        for (_, v) in enumerate_elements(input) {
            if let Some(t) = v.as_text() {
                for ch in t.chars() {
                    if !ch.is_alphanumeric() && !out.contains(&ch) {
                        out.push(ch);
                    }
                }
            }
        }
    }
    out
}

/// Text elements found in the inputs of at least two cases.
fn shared_text(inputs: &[Value]) -> Vec<Value> {
    let per_case: Vec<BTreeSet<String>> = inputs
        .iter()
        .map(|i| enumerate_elements(i).into_iter().filter_map(|(_, v)| v.as_text().map(str::to_string)).collect())
        .collect();
    let mut all: Vec<&String> = per_case.iter().flatten().collect();
    all.sort();
    all.dedup();
    all.into_iter()
        .filter(|t| !t.is_empty() && per_case.iter().filter(|s| s.contains(*t)).count() >= 2)
        .map(|t| Value::text(t.clone()))
        .collect()
}

/// Ratios and differences between numeric output and input elements.
/// A constant seen in two or more cases costs nothing; one fitted to a
/// single case is charged as specific.
fn mined_numbers(problem: &Problem) -> Vec<(Value, u32)> {
    let numeric_paths = |vals: &[Value]| -> Vec<Path> {
        common_paths(vals)
            .into_iter()
            .filter(|p| vals.iter().all(|v| resolve_path(v, p).is_ok_and(|x| x.as_number().is_some())))
            .collect()
    };
    let in_paths = numeric_paths(&problem.inputs);
    let out_paths = numeric_paths(&problem.outputs);
    let num = |v: &Value, p: &Path| resolve_path(v, p).unwrap().as_number().unwrap().as_f64();
    let mut out: Vec<(Value, u32)> = Vec::new();
    for op in &out_paths {
        for ip in &in_paths {
            let pairs: Vec<(f64, f64)> = (0..problem.cases())
                .map(|c| (num(&problem.inputs[c], ip), num(&problem.outputs[c], op)))
                .collect();
            let ratios: Option<Vec<Number>> =
                pairs.iter().map(|&(i, o)| if i == 0.0 { None } else { Number::cleaned(o / i) }).collect();
            let diffs: Option<Vec<Number>> = pairs.iter().map(|&(i, o)| Number::cleaned(o - i)).collect();
            for found in [ratios, diffs].into_iter().flatten() {
                let first = found[0];
                if found.iter().any(|n| *n != first) {
                    continue;
                }
                let v = Value::Number(first);
                if v == Value::int(0) || v == Value::int(1) || out.iter().any(|(w, _)| *w == v) {
                    continue;
                }
                out.push((v, u32::from(problem.cases() < 2)));
                if out.len() >= MAX_MINED {
                    return out;
                }
            }
        }
    }
    out
}

/// Type classes of every element of the inputs, data and outputs.
fn present_classes(problem: &Problem) -> BTreeSet<TypeClass> {
    problem
        .inputs
        .iter()
        .chain(&problem.outputs)
        .chain(problem.data())
        .flat_map(enumerate_elements)
        .map(|(_, v)| v.type_class())
        .collect()
}

/// Instructions whose operand and result classes stay inside the classes
/// reachable from the case values. Reachability grows through enumerable
/// instructions with concrete operand classes only, so `Any` operands do
/// not pull in every class. Used programs are always kept. The flag reports
/// whether the subset is smaller than the full set.
pub fn select_instructions(
    problem: &Problem,
    catalog: &[InstructionDescriptor],
    uses: &[InstructionDescriptor],
) -> (Vec<InstructionDescriptor>, bool) {
    let mut all: Vec<InstructionDescriptor> = catalog.to_vec();
    all.extend(uses.iter().cloned());
    let mut reach = present_classes(problem);
    if reach.contains(&TypeClass::Any) {
        return (all, false);
    }
    loop {
        let before = reach.len();
        for d in all.iter().filter(|d| enumerable(d)) {
            if d.result != TypeClass::Any
                && d.signature.iter().all(|c| *c != TypeClass::Any && reach.contains(c))
            {
                reach.insert(d.result);
            }
        }
        if reach.len() == before {
            break;
        }
    }
    let ok = |c: &TypeClass| *c == TypeClass::Any || reach.contains(c);
    let subset: Vec<InstructionDescriptor> = all
        .iter()
        .filter(|d| matches!(d.kind, crate::vm::InstructionKind::Call(_)) || (d.signature.iter().all(ok) && ok(&d.result)))
        .cloned()
        .collect();
    let fallback = subset.len() != all.len();
    (subset, fallback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::parse_value;
    use crate::vm::catalog;

    fn v(s: &str) -> Value {
        parse_value(s).unwrap()
    }

    #[test]
    fn sales_tax_mines_the_shared_ratio() {
        let p = Problem::from_pairs("sales_tax", None, vec![(v("1000"), v("175")), (v("100"), v("17.5"))]);
        let seeds = seed_values(&p);
        let ratio = seeds.iter().find(|s| s.kind == SeedKind::Literal(v("0.175"))).expect("ratio seed");
        assert_eq!(ratio.specificity, 0);
        assert!(seeds.iter().any(|s| s.kind == SeedKind::Input(Path::root())));
    }

    #[test]
    fn single_case_constants_are_specific() {
        let p = Problem::from_pairs("p", None, vec![(v("1000"), v("1175"))]);
        let seeds = seed_values(&p);
        let diff = seeds.iter().find(|s| s.kind == SeedKind::Literal(v("175"))).unwrap();
        assert_eq!(diff.specificity, 1);
    }

    #[test]
    fn text_inputs_give_elements_and_separators() {
        let p = Problem::from_pairs("c", None, vec![(v("[\"abc\",\"xyz\"]"), v("\"abcxyz\""))]);
        let kinds: Vec<SeedKind> = seed_values(&p).into_iter().map(|s| s.kind).collect();
        assert!(kinds.contains(&SeedKind::Input(Path::root().child(PathStep::Index(1)))));
        assert!(kinds.contains(&SeedKind::Literal(v("\"\""))));
    }

    #[test]
    fn numeric_lists_exclude_text_and_record_instructions() {
        let p = Problem::from_pairs("median", None, vec![(v("[1,2,3]"), v("2"))]);
        let (subset, fallback) = select_instructions(&p, &catalog(), &[]);
        assert!(fallback);
        let names: Vec<&str> = subset.iter().map(|d| d.name.as_str()).collect();
        assert!(names.contains(&"median") && names.contains(&"sort"));
        for excluded in ["split", "upper", "get", "keys", "concat_text", "eq"] {
            assert!(!names.contains(&excluded), "{excluded}");
        }
    }

    #[test]
    fn unconstrained_specs_get_the_whole_catalog() {
        let p = Problem::from_pairs("n", None, vec![(Value::Null, Value::Null)]);
        let (subset, fallback) = select_instructions(&p, &catalog(), &[]);
        assert_eq!(subset.len(), catalog().len());
        assert!(!fallback);
    }
}
