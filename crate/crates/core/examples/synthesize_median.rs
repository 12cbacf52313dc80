//! Compiling three test cases into a program.

use zoea::parser::{normalize_spec, parse_programs};
use zoea::synthesis::{synthesize, SynthesisConfig};

fn main() {
    let source = "program: median
case: 1 input: [3,5,6] output: 5
case: 2 input: [1,2,4,6,9] output: 4
case: 3 input: [2,4,5,8] output: 4.5";
    let spec = normalize_spec(&parse_programs(source).unwrap()[0]).unwrap();
    let outcome = synthesize(&spec, &SynthesisConfig::default(), None, Vec::new());
    print!("{}", outcome.report());
}
