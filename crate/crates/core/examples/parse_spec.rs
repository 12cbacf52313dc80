//! Reading a program file and classifying each program.

use zoea::parser::{normalize_spec, parse_programs};

const SOURCE: &str = "
program: do_nothing

program: median
case: 1 input: [3,5,6] output: 5
case: 2 input: [1,2,4,6,9] output: 4

program: factorial
  output: [0,1]
  output: [1,1]
  output: [2,2]
";

fn main() {
    for p in parse_programs(SOURCE).unwrap() {
        let spec = normalize_spec(&p).unwrap();
        println!("{:<12} {:?}, {} case(s)", spec.name, spec.class, spec.cases.len());
    }

    // Errors carry a line and offset.
    let err = parse_programs("program: p\n  case: 1 input: 1\n  case: 1 input: 2").unwrap_err();
    println!("error: {err}");
}
