//! A sequence given only by its first terms keeps going.

use zoea::parser::{normalize_spec, parse_programs};
use zoea::synthesis::{synthesize, SynthesisConfig};
use zoea::values::Value;
use zoea::vm::{execute, ExecutionEnv};

fn main() {
    let source = "program: factorial output: [0,1] output: [1,1] output: [2,2] output: [3,6]";
    let spec = normalize_spec(&parse_programs(source).unwrap()[0]).unwrap();
    let outcome = synthesize(&spec, &SynthesisConfig::default(), None, Vec::new());
    let program = outcome.winner.expect("factorial compiles");
    println!("{}", program.summary());
    for n in 0..=10 {
        let term = execute(&program, &Value::int(n), &ExecutionEnv::default()).unwrap();
        println!("{}", term.render());
    }
}
