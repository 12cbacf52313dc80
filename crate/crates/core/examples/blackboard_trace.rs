//! Watching the knowledge sources take turns.

use zoea::parser::{normalize_spec, parse_programs};
use zoea::synthesis::{synthesize, SynthesisConfig};

fn main() {
    let source = "program: min_and_max
  case: 1 input: [7,3,11,15,6] output: [3,15]
  case: 2 input: [2,1] output: [1,2]";
    let spec = normalize_spec(&parse_programs(source).unwrap()[0]).unwrap();
    let config = SynthesisConfig { trace: true, ..SynthesisConfig::default() };
    let outcome = synthesize(&spec, &config, None, Vec::new());
    for line in &outcome.trace {
        println!("{line}");
    }
    println!("stopped: {}", outcome.stop.map_or("-", |s| s.name()));
    println!("winner:  {}", outcome.winner.map(|w| w.summary()).unwrap_or_default());
}
