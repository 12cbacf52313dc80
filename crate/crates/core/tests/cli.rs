mod common;

use std::path::Path;

use common::listing_path;
use zoea::cli::{main_with_args, EXIT_NOT_FOUND, EXIT_OK, EXIT_PARSE, EXIT_RUNTIME, EXIT_SYNTHESIS};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn zoea(registry: &Path, args: &[&str]) -> Run {
    let mut full = vec!["zoea".to_string(), "--registry".to_string(), registry.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with_args(full, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn compile(registry: &Path, n: u32) -> Run {
    let path = listing_path(n);
    let run = zoea(registry, &["compile", path.to_str().unwrap()]);
    assert_eq!(run.code, EXIT_OK, "listing {n}: {}{}", run.out, run.err);
    run
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn syntax_errors_write_nothing() {
    let reg = tempfile::tempdir().unwrap();
    let src = tempfile::tempdir().unwrap();
    let file = write(src.path(), "bad.zoea", "program: ok input: 1 output: 1\nprogram: broken\n  output: [1, 2");
    let run = zoea(reg.path(), &["compile", &file]);
    assert_eq!(run.code, EXIT_PARSE);
    assert!(run.err.contains("line 3"), "{}", run.err);
    assert_eq!(std::fs::read_dir(reg.path()).map(|d| d.count()).unwrap_or(0), 0);
}

#[test]
fn contradictions_fail_synthesis() {
    let reg = tempfile::tempdir().unwrap();
    let src = tempfile::tempdir().unwrap();
    let file = write(src.path(), "c.zoea", "program: c\ncase: 1 input: 2 output: 3\ncase: 2 input: 2 output: 4\n");
    let run = zoea(reg.path(), &["compile", &file]);
    assert_eq!(run.code, EXIT_SYNTHESIS);
    assert!(format!("{}{}", run.out, run.err).contains("inconsistent cases"), "{}{}", run.out, run.err);
    assert_eq!(zoea(reg.path(), &["run", "c", "--input", "2"]).code, EXIT_NOT_FOUND);
}

#[test]
fn missing_files_and_programs() {
    let reg = tempfile::tempdir().unwrap();
    assert_eq!(zoea(reg.path(), &["compile", "/nonexistent/x.zoea"]).code, EXIT_NOT_FOUND);
    assert_eq!(zoea(reg.path(), &["run", "nothing", "--input", "1"]).code, EXIT_NOT_FOUND);
    assert_eq!(zoea(reg.path(), &["show", "nothing"]).code, EXIT_NOT_FOUND);
    assert_eq!(zoea(reg.path(), &["run", "nothing", "--input", "[1,"]).code, EXIT_PARSE);
}

#[test]
fn run_show_list_and_test() {
    let reg = tempfile::tempdir().unwrap();
    compile(reg.path(), 2);
    compile(reg.path(), 5);
    let run = compile(reg.path(), 13);
    assert!(run.out.contains("sales_tax: compiled") && run.out.contains("price_including_tax: compiled"), "{}", run.out);

    let run = zoea(reg.path(), &["run", "median", "--input", "[3,5,6]"]);
    assert_eq!((run.code, run.out.as_str()), (EXIT_OK, "5\n"));
    let run = zoea(reg.path(), &["run", "do_nothing", "--no-input"]);
    assert_eq!((run.code, run.out.as_str()), (EXIT_OK, "null\n"));
    let run = zoea(reg.path(), &["run", "price_including_tax", "--input", "2000"]);
    assert_eq!(run.out, "2350\n");
    let run = zoea(reg.path(), &["run", "median", "--input", "'text'"]);
    assert_eq!(run.code, EXIT_RUNTIME, "{}", run.out);

    let run = zoea(reg.path(), &["show", "sales_tax"]);
    assert_eq!(run.code, EXIT_OK);
    assert!(run.out.contains("mul") && run.out.contains("0.175"), "{}", run.out);
    assert!(run.out.contains("signature: number -> number"), "{}", run.out);
    let run = zoea(reg.path(), &["show", "price_including_tax"]);
    assert!(run.out.contains("call n0 \"sales_tax\""), "{}", run.out);

    let run = zoea(reg.path(), &["list"]);
    assert_eq!(run.out, "do_nothing\nmedian\nprice_including_tax\nsales_tax\n");

    let path = listing_path(5);
    let run = zoea(reg.path(), &["test", path.to_str().unwrap()]);
    assert_eq!(run.code, EXIT_OK, "{}", run.out);
    assert_eq!(run.out.matches(" pass").count(), 3);

    std::fs::write(reg.path().join("median").join("program.zvm"), "garbage").unwrap();
    assert_eq!(zoea(reg.path(), &["test", path.to_str().unwrap()]).code, EXIT_NOT_FOUND);
    assert_eq!(zoea(reg.path(), &["run", "median", "--input", "[1]"]).code, EXIT_NOT_FOUND);
}

#[test]
fn test_reports_failing_cases() {
    let reg = tempfile::tempdir().unwrap();
    let src = tempfile::tempdir().unwrap();
    let first = write(src.path(), "a.zoea", "program: twice\ncase: 1 input: 2 output: 4\ncase: 2 input: 5 output: 10\n");
    assert_eq!(zoea(reg.path(), &["compile", &first]).code, EXIT_OK);
    let other = write(src.path(), "b.zoea", "program: twice\ncase: 1 input: 2 output: 4\ncase: 2 input: 3 output: 7\n");
    let run = zoea(reg.path(), &["test", &other]);
    assert_eq!(run.code, EXIT_RUNTIME);
    assert!(run.out.contains("twice 1 pass") && run.out.contains("twice 2 FAIL"), "{}", run.out);
}
