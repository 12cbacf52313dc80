//! Compiles and checks every listing in the corpus directory.
//!
//! `cargo run --release --example golden_corpus [registry-dir]`

use std::path::PathBuf;

use zoea::cli::{cmd_compile, cmd_test, CliConfig};

fn main() {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let registry = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("zoea-corpus-{}", std::process::id())));
    let cfg = CliConfig::new(&registry);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&corpus)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "zoea"))
        .collect();
    files.sort();

    let (mut out, mut err) = (std::io::stdout(), std::io::stderr());
    let mut failures = 0;
    for f in &files {
        if cmd_compile(f, &cfg, &mut out, &mut err) != 0 || cmd_test(f, &cfg, &mut out, &mut err) != 0 {
            failures += 1;
        }
    }
    println!("{} files, {failures} failing, registry at {}", files.len(), registry.display());
}
