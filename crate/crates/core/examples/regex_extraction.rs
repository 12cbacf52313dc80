//! Extraction with the shipped pattern library.

use zoea::synthesis::patterns::{infer_regex, patterns_matching, PATTERNS};
use zoea::synthesis::problem::Problem;
use zoea::values::parse_value;
use zoea::vm::{execute, ExecutionEnv};

fn main() {
    for text in ["21-07-1969", "123", "22.7", "How"] {
        let names: Vec<&str> = patterns_matching(text).into_iter().map(|i| PATTERNS[i].0).collect();
        println!("{text:<12} {}", names.join(" "));
    }

    let problem = Problem::from_pairs(
        "extract_data",
        None,
        vec![(parse_value("'xyz21-07-1969abc123pqr22.7'").unwrap(), parse_value("['21-07-1969', 123, 22.7]").unwrap())],
    );
    let programs = infer_regex(&problem);
    let best = &programs[0];
    println!("{}", best.summary());
    let out = execute(best, &parse_value("'paid 40 on 01-02-2003, then 2.5'").unwrap(), &ExecutionEnv::default());
    println!("{}", out.unwrap().render());
}
