//! Distinct-value enumeration and reverse derivation.

use zoea::synthesis::space::{forward_enumerate, reverse_derive, EvalEnv, Limits, Seed, SeedKind};
use zoea::values::{parse_value, Path, Value};
use zoea::vm::catalog;

fn main() {
    let inputs: Vec<Value> = ["[3,1,2]", "[5,4]"].iter().map(|s| parse_value(s).unwrap()).collect();
    let seeds = vec![Seed { kind: SeedKind::Input(Path::root()), values: inputs, specificity: 0 }];
    let keep = ["sort", "reverse", "length", "sum", "head", "last", "neg", "abs", "add", "concat"];
    let instructions = catalog().into_iter().filter(|d| keep.contains(&d.name.as_str())).collect();
    let limits = Limits { max_depth: 2, ..Limits::default() };
    let space = forward_enumerate(seeds, instructions, &limits, &EvalEnv::default());

    for d in 0..=space.depth_reached() {
        println!("depth {d}: {} distinct values", space.at_depth(d).len());
    }
    let alternatives: usize = space.entries().iter().map(|e| e.witnesses.len()).sum();
    println!("duplicate derivations kept as alternatives: {alternatives}");

    // Which expressions give 6 on the first input and 9 on the second?
    let target = [Value::int(6), Value::int(9)];
    for p in reverse_derive(&target, &space, 5) {
        println!("{}", p.summary());
    }
}
