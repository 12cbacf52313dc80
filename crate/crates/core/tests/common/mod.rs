#![allow(dead_code)]

pub mod laws;
pub mod listings;

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use zoea::parser::{normalize_spec, parse_programs, NormalizedSpec};
use zoea::values::{parse_value, Value};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Corpus files in listing order.
pub fn corpus_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "zoea"))
        .collect();
    files.sort();
    files
}

pub fn listing_path(n: u32) -> PathBuf {
    let prefix = format!("{n:02}_");
    corpus_files()
        .into_iter()
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with(&prefix))
        .unwrap_or_else(|| panic!("no corpus file for listing {n}"))
}

pub fn listing(n: u32) -> String {
    std::fs::read_to_string(listing_path(n)).unwrap()
}

pub fn specs(source: &str) -> Vec<NormalizedSpec> {
    parse_programs(source).unwrap().iter().map(|p| normalize_spec(p).unwrap()).collect()
}

pub fn v(text: &str) -> Value {
    parse_value(text).unwrap()
}

/// `source` with the whitespace between tokens replaced at random, and
/// some added after colons and commas.
pub fn permute_whitespace(source: &str, rng: &mut ChaCha8Rng) -> String {
    const GAPS: [&str; 5] = [" ", "\n", "\t", "  \n    ", "\r\n"];
    let mut out = String::new();
    let mut quote: Option<char> = None;
    let mut chars = source.chars().peekable();
    while let Some(c) = chars.next() {
        match quote {
            Some(q) => {
                out.push(c);
                if c == q {
                    quote = None;
                }
            }
            None if c == '\'' || c == '"' => {
                quote = Some(c);
                out.push(c);
            }
            None if c.is_whitespace() => {
                while chars.peek().is_some_and(|n| n.is_whitespace()) {
                    chars.next();
                }
                out.push_str(GAPS[rng.gen_range(0..GAPS.len())]);
            }
            None => {
                out.push(c);
                if (c == ':' || c == ',') && rng.gen_bool(0.5) {
                    out.push_str(GAPS[rng.gen_range(0..GAPS.len())]);
                }
            }
        }
    }
    out
}
