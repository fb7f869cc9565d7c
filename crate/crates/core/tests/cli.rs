use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn sp(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sp"))
        .args(args)
        .env("SP_THREADS", threads)
        .output()
        .expect("sp runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn align_prints_the_golden_grid_first() {
    let store = fixture("kittens.sp");
    let new = fixture("kittens.new");
    let out = sp(&["align", "--store", path(&store), "--new", path(&new), "--top", "1"], "1");
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    let golden = std::fs::read_to_string(fixture("kittens.golden")).unwrap();
    assert!(stdout.contains(&golden), "grid differs:\n{stdout}");
    assert!(stdout.lines().nth(2).unwrap().starts_with("rank 1  CD 41.068"));
}

#[test]
fn encode_then_decode() {
    let dir = tempfile::tempdir().unwrap();
    let code = dir.path().join("s.code");
    let store = fixture("kittens.sp");
    let new = fixture("kittens.new");
    let enc = sp(&["encode", "--store", path(&store), "--new", path(&new), "--out", path(&code)], "1");
    assert_eq!(enc.status.code(), Some(0), "{}", text(&enc.stderr));
    let dec = sp(&["decode", "--store", path(&store), "--code", path(&code), "--surface", "[a-z]"], "1");
    assert_eq!(dec.status.code(), Some(0), "{}", text(&dec.stderr));
    assert_eq!(text(&dec.stdout), "t w o k i t t e n s p l a y\n");
}

#[test]
fn encode_without_compression_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s.sp");
    let new = dir.path().join("n.new");
    std::fs::write(&store, "OLD 1 X : a b #X\n").unwrap();
    std::fs::write(&new, "NEW q r s\n").unwrap();
    let out = sp(
        &["encode", "--store", path(&store), "--new", path(&new), "--out", path(&dir.path().join("c"))],
        "1",
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_store_exits_2() {
    let new = fixture("kittens.new");
    let out = sp(&["align", "--store", "missing.sp", "--new", path(&new)], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("missing.sp"));
}

#[test]
fn malformed_store_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("bad.sp");
    std::fs::write(&store, "OLD 1 X : a #X\nOLD many Y : b #Y\n").unwrap();
    let out = sp(&["costs", "--store", path(&store)], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 2"), "{}", text(&out.stderr));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(sp(&["align", "--store"], "1").status.code(), Some(1));
    assert_eq!(sp(&["align", "--format", "xml"], "1").status.code(), Some(1));
    let store = fixture("kittens.sp");
    let new = fixture("kittens_noisy.new");
    let bad = sp(&["correct", "--store", path(&store), "--new", path(&new), "--surface", "[a-"], "1");
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(sp(&["costs", "--store", path(&store)], "lots").status.code(), Some(1));
}

#[test]
fn correct_repairs_the_noisy_sentence() {
    let store = fixture("kittens.sp");
    let new = fixture("kittens_noisy.new");
    let out = sp(&["correct", "--store", path(&store), "--new", path(&new), "--surface", "[a-z]"], "1");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout), "t w o k i t t e n s p l a y\n");
}

#[test]
fn costs_table_is_sorted_tsv() {
    let store = fixture("kittens.sp");
    let out = sp(&["costs", "--store", path(&store)], "1");
    let stdout = text(&out.stdout);
    let names: Vec<&str> = stdout.lines().map(|l| l.split('\t').next().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(stdout.lines().all(|l| l.split('\t').count() == 3));
}

#[test]
fn learn_writes_a_store_and_ranks_grammars() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.new");
    let out_store = dir.path().join("learned.sp");
    let grammar = dir.path().join("best.sp");
    std::fs::write(&corpus, "NEW a b c d\nNEW a b c d\n").unwrap();
    let out = sp(
        &[
            "learn",
            "--corpus",
            path(&corpus),
            "--out",
            path(&out_store),
            "--grammar-out",
            path(&grammar),
        ],
        "1",
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let tsv = text(&out.stdout);
    let first: Vec<&str> = tsv.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[0], "1");
    assert_eq!(first[4], "L1");
    let learned = sp_core::parse_store(&std::fs::read_to_string(&out_store).unwrap()).unwrap();
    assert_eq!(learned.get("L1").unwrap().frequency(), 2);
    assert!(std::fs::read_to_string(&grammar).unwrap().contains("L1 : a b c d #L1"));
}

fn json_items(store: &Path, new: &Path) -> serde_json::Value {
    let out = sp(
        &["align", "--store", path(store), "--new", path(new), "--format", "json", "--top", "20"],
        "1",
    );
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn json_output_validates_against_the_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/align.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let pairs = [
        ("kittens.sp", "kittens.new"),
        ("kittens.sp", "kittens_noisy.new"),
        ("hierarchy.sp", "hierarchy.new"),
        ("diagnosis.sp", "diagnosis.new"),
    ];
    for (store, new) in pairs {
        let doc = json_items(&fixture(store), &fixture(new));
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{new}: {errors:?}");
    }
}

#[test]
fn json_documents_rebuild_their_alignments() {
    let doc = json_items(&fixture("kittens.sp"), &fixture("kittens_noisy.new"));
    for a in doc[0]["alignments"].as_array().unwrap() {
        let parsed = sp_core::render::parse_json(&a.to_string()).unwrap();
        let alignment = parsed.alignment().unwrap();
        assert_eq!(alignment.key(), parsed.key);
        assert!(alignment.validate().is_ok());
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let store = fixture("kittens.sp");
    let new = fixture("kittens_noisy.new");
    let args = ["align", "--store", path(&store), "--new", path(&new), "--top", "20", "--format", "json"];
    let one = sp(&args, "1");
    let four = sp(&args, "4");
    let auto = sp(&args, "0");
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, auto.stdout);
}
