//! Building a dataflow program by hand and running it.

use zoea::values::{parse_value, Path};
use zoea::vm::{execute, parse_program, DagBuilder, ExecutionEnv};

fn main() {
    // add($, mul($, 0.175))
    let mut b = DagBuilder::new();
    let input = b.input(Path::root());
    let rate = b.literal(parse_value("0.175").unwrap());
    let tax = b.apply("mul", vec![input, rate]);
    let total = b.apply("add", vec![input, tax]);
    let program = b.finish(total);

    println!("{}", program.summary());
    println!("size {}", program.size());
    let env = ExecutionEnv::default();
    for x in ["1000", "80"] {
        let out = execute(&program, &parse_value(x).unwrap(), &env).unwrap();
        println!("{x} -> {}", out.render());
    }

    // The stored text form parses back to the same program.
    let text = program.canonical_form();
    print!("{text}");
    assert_eq!(parse_program(&text).unwrap(), program);
}
