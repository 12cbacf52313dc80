//! Ranking laws over generated candidates, shared by the property suite and
//! the acceptance run.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use zoea::synthesis::problem::Problem;
use zoea::synthesis::rank::{rank_candidates, score, Candidate};
use zoea::values::{Path, PathStep, Value};
use zoea::vm::{CompiledProgram, DagBuilder};

use super::specs;

/// Median-style problem with list inputs.
pub fn list_problem() -> Problem {
    Problem::new(specs("program: m case: 1 input: [3,5,6] output: 5 case: 2 input: [1,2,4,6,9] output: 4 case: 3 input: [2,4,5,8] output: 4.5")[0].clone())
}

fn expr(depth: u32) -> BoxedStrategy<(String, Vec<String>)> {
    // Prefix form: (op, leaves); built into a program by `build`.
    let leaf = prop_oneof![
        (0usize..3).prop_map(|i| (format!("${i}"), vec![])),
        (0i64..7).prop_map(|k| (format!("#{k}"), vec![])),
        prop::sample::select(vec!["median", "min", "max", "sum", "length"]).prop_map(|f| (format!("@{f}"), vec![])),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    prop_oneof![
        leaf,
        (prop::sample::select(vec!["add", "sub", "mul"]), expr(depth - 1), expr(depth - 1))
            .prop_map(|(op, a, b)| (op.to_string(), vec![encode(&a), encode(&b)])),
    ]
    .boxed()
}

fn encode(e: &(String, Vec<String>)) -> String {
    if e.1.is_empty() {
        e.0.clone()
    } else {
        format!("({} {} {})", e.0, e.1[0], e.1[1])
    }
}

fn build(text: &str) -> CompiledProgram {
    let mut b = DagBuilder::new();
    let tokens: Vec<String> = text.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(String::from).collect();
    let mut pos = 0;
    let out = node(&mut b, &tokens, &mut pos);
    b.finish(out)
}

fn node(b: &mut DagBuilder, t: &[String], pos: &mut usize) -> usize {
    let tok = t[*pos].clone();
    *pos += 1;
    if tok == "(" {
        let op = t[*pos].clone();
        *pos += 1;
        let x = node(b, t, pos);
        let y = node(b, t, pos);
        *pos += 1;
        b.apply(&op, vec![x, y])
    } else if let Some(i) = tok.strip_prefix('$') {
        b.input(Path(vec![PathStep::Index(i.parse().unwrap())]))
    } else if let Some(k) = tok.strip_prefix('#') {
        b.literal(Value::int(k.parse().unwrap()))
    } else {
        let x = b.input(Path::root());
        b.apply(tok.trim_start_matches('@'), vec![x])
    }
}

pub fn candidate() -> impl Strategy<Value = Candidate> {
    (expr(2), prop::collection::vec(any::<bool>(), 3))
        .prop_map(|(e, coverage)| Candidate { program: build(&encode(&e)), coverage, source: "test".into() })
}

pub fn complete_first(cs: Vec<Candidate>) -> Result<(), TestCaseError> {
    let ranked = rank_candidates(cs, &list_problem());
    let first_incomplete = ranked.iter().position(|(c, _)| !c.is_complete()).unwrap_or(ranked.len());
    prop_assert!(ranked[first_incomplete..].iter().all(|(c, _)| !c.is_complete()));
    Ok(())
}

pub fn order_free(cs: Vec<Candidate>, seed: u64) -> Result<(), TestCaseError> {
    let problem = list_problem();
    let mut shuffled = cs.clone();
    shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let a: Vec<String> = rank_candidates(cs, &problem).into_iter().map(|(_, s)| s.canonical).collect();
    let b: Vec<String> = rank_candidates(shuffled, &problem).into_iter().map(|(_, s)| s.canonical).collect();
    prop_assert_eq!(a, b);
    Ok(())
}

pub fn tie_break(a: Candidate, b: Candidate) -> Result<(), TestCaseError> {
    let problem = list_problem();
    let (sa, sb) = (score(&a, &problem), score(&b, &problem));
    prop_assert_eq!(sa.cmp(&sb), sb.cmp(&sa).reverse());
    if sa.cmp(&sb) == std::cmp::Ordering::Equal {
        prop_assert_eq!(&sa.canonical, &sb.canonical);
    }
    let same_rank = (sa.complete, sa.lookup, sa.specificity, sa.composite_penalty, sa.size)
        == (sb.complete, sb.lookup, sb.specificity, sb.composite_penalty, sb.size);
    if same_rank {
        prop_assert_eq!(sa.cmp(&sb), sa.canonical.cmp(&sb.canonical));
    }
    prop_assert_eq!(score(&a, &problem), sa);
    Ok(())
}

/// `xs` are distinct positive inputs; outputs are `2x + 1`.
pub fn lookup_demoted(xs: Vec<i64>) -> Result<(), TestCaseError> {
    let pairs: Vec<(Value, Value)> = xs.iter().map(|&x| (Value::int(x), Value::int(2 * x + 1))).collect();
    let problem = Problem::from_pairs("p", None, pairs.clone());
    let mut b = DagBuilder::new();
    let x = b.input(Path::root());
    let two = b.literal(Value::int(2));
    let one = b.literal(Value::int(1));
    let m = b.apply("mul", vec![x, two]);
    let out = b.apply("add", vec![m, one]);
    let general = b.finish(out);
    let branches = pairs
        .iter()
        .map(|(i, o)| {
            let mut b = DagBuilder::new();
            let x = b.input(Path::root());
            let k = b.literal(i.clone());
            let g = b.apply("eq", vec![x, k]);
            (b.finish(g), CompiledProgram::literal(o.clone()))
        })
        .collect();
    let table = CompiledProgram::Conditional { branches, default: None };
    let all = vec![true; pairs.len()];
    let ranked = rank_candidates(
        vec![
            Candidate { program: table, coverage: all.clone(), source: "t".into() },
            Candidate { program: general.clone(), coverage: all, source: "g".into() },
        ],
        &problem,
    );
    prop_assert!(ranked[1].1.lookup && !ranked[0].1.lookup);
    prop_assert_eq!(&ranked[0].0.program, &general);
    Ok(())
}

pub fn candidates() -> impl Strategy<Value = Vec<Candidate>> {
    prop::collection::vec(candidate(), 1..12)
}

pub fn lookup_inputs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::btree_set(1i64..1000, 1..5).prop_map(|s| s.into_iter().collect())
}
