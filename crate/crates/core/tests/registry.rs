mod common;

use std::sync::Arc;

use common::{specs, v};
use zoea::registry::{decode_name, encode_name, Registry, RegistryEntry, RegistryError};
use zoea::values::{Path, TypeClass};
use zoea::vm::{execute, CompiledProgram, DagBuilder, ExecutionEnv, Node};

fn entry(name: &str, compiled: CompiledProgram) -> RegistryEntry {
    RegistryEntry {
        name: name.to_string(),
        compiled,
        data: None,
        input: TypeClass::Number,
        output: TypeClass::Number,
        source_digest: "abc".to_string(),
        created: 7,
        report: None,
    }
}

fn times(k: &str) -> CompiledProgram {
    let mut b = DagBuilder::new();
    let x = b.input(Path::root());
    let c = b.literal(v(k));
    let out = b.apply("mul", vec![x, c]);
    b.finish(out)
}

fn plus_call(target: &str) -> CompiledProgram {
    let mut b = DagBuilder::new();
    let x = b.input(Path::root());
    let t = b.add(Node::Call { program: target.to_string(), arg: x });
    let out = b.apply("add", vec![x, t]);
    b.finish(out)
}

#[test]
fn store_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path());
    let mut e = entry("week day?", times("2"));
    e.data = Some(v("[monday, tuesday]"));
    e.report = Some("status: solved\n".to_string());
    reg.store(&e).unwrap();
    assert_eq!(reg.load("week day?").unwrap(), e);
    assert!(dir.path().join(encode_name("week day?")).join("data").is_file());
    assert_eq!(reg.list().unwrap(), vec!["week day?".to_string()]);

    // Replacing drops optional files that are no longer present.
    reg.store(&entry("week day?", times("3"))).unwrap();
    let again = reg.load("week day?").unwrap();
    assert!(again.data.is_none() && again.report.is_none());
}

#[test]
fn names_are_percent_encoded() {
    for name in ["plain_name-1", "a/b", "with space", "ünï", "..", "%41"] {
        let dir = encode_name(name);
        assert!(!dir.contains('/') && dir != ".." && dir != ".", "{dir}");
        assert_eq!(decode_name(&dir).as_deref(), Some(name));
    }
}

#[test]
fn compositions_resolve_through_the_registry() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Arc::new(Registry::open(dir.path()));
    match reg.store(&entry("price", plus_call("tax"))) {
        Err(RegistryError::DanglingComposition { missing, .. }) => assert_eq!(missing, vec!["tax".to_string()]),
        other => panic!("{other:?}"),
    }
    reg.store(&entry("tax", times("0.175"))).unwrap();
    reg.store(&entry("price", plus_call("tax"))).unwrap();
    let price = reg.load("price").unwrap();
    assert_eq!(price.compiled.call_targets(), vec!["tax".to_string()]);
    let env = ExecutionEnv { resolver: Some(&*reg), ..Default::default() };
    assert_eq!(execute(&price.compiled, &v("1000"), &env).unwrap(), v("1175"));

    // Recompiling a used program changes what dependents compute.
    reg.store(&entry("tax", times("0.2"))).unwrap();
    let fresh = Registry::open(dir.path());
    let env = ExecutionEnv { resolver: Some(&fresh), ..Default::default() };
    assert_eq!(execute(&price.compiled, &v("1000"), &env).unwrap(), v("1200"));
}

#[test]
fn uses_must_be_compiled() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path());
    let spec = &specs("program: p use: [tax, other] input: 1 output: 2")[0];
    match reg.resolve_uses(spec) {
        Err(RegistryError::MissingUses(names)) => assert_eq!(names, vec!["tax".to_string(), "other".to_string()]),
        other => panic!("{other:?}"),
    }
    reg.store(&entry("tax", times("2"))).unwrap();
    reg.store(&entry("other", times("3"))).unwrap();
    let uses = reg.resolve_uses(spec).unwrap();
    assert_eq!(uses.len(), 2);
    assert_eq!(uses[0].name, "tax");
}

#[test]
fn corrupt_entries_are_load_errors() {
    let dir = tempfile::tempdir().unwrap();
    let reg = Registry::open(dir.path());
    reg.store(&entry("p", times("2"))).unwrap();
    std::fs::write(dir.path().join("p").join("program.zvm"), "direct\n  n0 nonsense\n").unwrap();
    assert!(matches!(reg.load("p"), Err(RegistryError::Corrupt { .. })));
    assert!(matches!(reg.load("absent"), Err(RegistryError::NotFound(_))));
}
