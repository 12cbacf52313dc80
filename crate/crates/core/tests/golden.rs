//! Corpus programs compiled end to end, then run on inputs that are not
//! among their cases.

mod common;

use common::{listing_path, v};
use zoea::cli::{compile_file, CliConfig, EXIT_OK};
use zoea::registry::Registry;
use zoea::values::Value;
use zoea::vm::{execute, ExecutionEnv};

fn check(n: u32, held_out: &[(&str, &str, &str)]) {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = CliConfig::new(dir.path());
    cfg.created = Some(0);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let (code, _) = compile_file(&listing_path(n), &cfg, &mut out, &mut err);
    let log = String::from_utf8_lossy(&out);
    assert_eq!(code, EXIT_OK, "listing {n}: {log}");
    let reg = Registry::open(dir.path());
    for (name, input, expected) in held_out {
        let entry = reg.load(name).unwrap();
        let env = ExecutionEnv { data: entry.data.as_ref(), resolver: Some(&reg), ..Default::default() };
        let input = if input.is_empty() { Value::Null } else { v(input) };
        let got = execute(&entry.compiled, &input, &env).unwrap_or_else(|e| panic!("{name} {input:?}: {e}"));
        assert_eq!(got, v(expected), "{name} on {}\n{}", input.render(), entry.compiled.canonical_form());
    }
}

#[test]
fn trivial_programs() {
    check(2, &[("do_nothing", "", "null"), ("do_nothing", "42", "null")]);
    check(3, &[("say_hello", "", "'hello world'"), ("say_hello", "[1]", "'hello world'")]);
}

#[test]
fn list_statistics() {
    check(4, &[("concatenate", "[foo, bar]", "foobar"), ("concatenate", "['', z]", "z")]);
    check(5, &[("median", "[10, 1, 7]", "7"), ("median", "[4, 1, 3, 2]", "2.5"), ("median", "[9]", "9")]);
    check(6, &[("min_and_max", "[5, -2, 9]", "[-2, 9]"), ("min_and_max", "[4]", "[4, 4]")]);
}

#[test]
fn selection_and_membership() {
    check(9, &[("select_females", "[[ann, female], [bob, male], [cy, female]]", "[ann, cy]")]);
    check(14, &[("is_week_day", "Friday", "true"), ("is_week_day", "sun", "false"), ("is_week_day", "SUNDAY", "true")]);
}

#[test]
fn composition_through_the_registry() {
    check(13, &[("sales_tax", "400", "70"), ("price_including_tax", "400", "470")]);
}

#[test]
fn sequences_extend() {
    check(12, &[("factorial", "5", "[5, 120]"), ("factorial", "7", "[7, 5040]")]);
}

#[test]
fn string_programs() {
    check(11, &[("ini_caps", "'the quick fox'", "'The Quick Fox'")]);
    check(7, &[("count_words_and_chars", "'a bc'", "'2 words and 4 characters'")]);
}

#[test]
fn record_and_regex_programs() {
    check(8, &[("parse_record", "'002 JONES MARY 12/01/85 FR'", "{name: 'Mary Jones', date: '01-12-1985'}")]);
    check(10, &[("extract_data", "'ab01-02-2003cd45ef6.5'", "['01-02-2003', 45, 6.5]")]);
}
