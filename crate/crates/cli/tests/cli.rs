use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rxfuzz_core::engine::{inject_fault, Engine, FaultId};
use rxfuzz_core::fuzz::BUNDLED_SEEDS;
use rxfuzz_core::oracle::{run_mt_with, MtOptions, RelationId};
use rxfuzz_core::parse_str;
use rxfuzz_core::report::{read_jsonl, write_jsonl, BugKind, BugReport};

fn rxfuzz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rxfuzz")).args(args).output().expect("run rxfuzz")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fuzz_reference_engine_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("sample.txt");
    let out = dir.path().join("bugs.jsonl");
    let csv = dir.path().join("cov.csv");
    fs::write(&seeds, BUNDLED_SEEDS).unwrap();
    let o = rxfuzz(&[
        "fuzz", "--engine", "builtin", "--seeds", p(&seeds), "--mode", "retest", "--iters", "1000", "--seed", "7",
        "--out", p(&out), "--cov-out", p(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (reports, errors) = read_jsonl(&out).unwrap();
    assert!(errors.is_empty());
    assert!(reports.iter().all(|r| !r.kind.is_bug()), "{reports:?}");
    let csv = fs::read_to_string(&csv).unwrap();
    assert!(csv.starts_with("iteration,elapsed_ms,edges\n0,"));
    assert!(csv.lines().last().unwrap().starts_with("1000,"));
}

#[test]
fn fuzz_finds_injected_fault() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bugs.jsonl");
    let o = rxfuzz(&[
        "fuzz", "--engine", "builtin", "--fault", "ALT_FIRST_ONLY", "--iters", "10000", "--seed", "7", "--stop-after",
        "1", "--out", p(&out),
    ]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let (reports, _) = read_jsonl(&out).unwrap();
    assert!(reports.iter().any(|r| r.kind == BugKind::MtViolation));
    let line = fs::read_to_string(&out).unwrap();
    assert!(line.contains("\"kind\":\"mt_violation\""));
}

#[test]
fn fuzz_is_reproducible_with_logical_clock() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(format!("{tag}.jsonl"));
        let csv = dir.path().join(format!("{tag}.csv"));
        let o = rxfuzz(&[
            "fuzz", "--fault", "STAR_DROP_LAST", "--iters", "300", "--seed", "5", "--logical-clock", "--out",
            p(&out), "--cov-out", p(&csv),
        ]);
        assert_eq!(code(&o), 1);
        (fs::read(out).unwrap(), fs::read(csv).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn fuzz_usage_errors() {
    let o = rxfuzz(&["fuzz", "--mode", "bogus"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&rxfuzz(&["fuzz", "--no-such-flag"])), 2);
    assert_eq!(code(&rxfuzz(&["fuzz", "--engine", "cmd:/bin/true", "--fault", "ALT_FIRST_ONLY"])), 2);
    assert_eq!(code(&rxfuzz(&["fuzz", "--engine", "nonsense"])), 2);
    assert_eq!(code(&rxfuzz(&["fuzz", "--seeds", "/definitely/not/here"])), 2);
    assert_eq!(code(&rxfuzz(&["bogus-subcommand"])), 2);
}

#[test]
fn fuzz_unspawnable_engine() {
    let o = rxfuzz(&["fuzz", "--engine", "cmd:/definitely/not/a/program", "--iters", "5"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn mt_check_correct_engine() {
    let o = rxfuzz(&["mt-check", "--engine", "builtin", "--pattern", "a|b", "--inputs", "a,b,c"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 16);
    assert!(out.contains("ALT_COMM: ok"));
    assert!(out.contains("STAR_EXPAND: skipped"));
}

#[test]
fn mt_check_errors_and_violations() {
    assert_eq!(code(&rxfuzz(&["mt-check", "--pattern", "(", "--inputs", "a"])), 2);
    assert_eq!(code(&rxfuzz(&["mt-check", "--pattern", "a", "--relations", "NOPE"])), 2);
    let o = rxfuzz(&["mt-check", "--fault", "ALT_FIRST_ONLY", "--pattern", "(?:b|a)+", "--inputs", "a"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("ALT_COMM: VIOLATION"));
}

#[test]
fn mt_check_inputs_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("inputs.txt");
    fs::write(&f, "a\nb\n").unwrap();
    let o = rxfuzz(&["mt-check", "--pattern", "(?:b|a)+", "--inputs", p(&f), "--relations", "ALT_COMM,ALT_IDEM"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn gen_strings() {
    let o = rxfuzz(&["gen-strings", "--pattern", "a|b"]);
    assert_eq!(code(&o), 0);
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert!(lines.contains(&"a".to_string()) && lines.contains(&"b".to_string()));

    let o = rxfuzz(&["gen-strings", "--pattern", "(?!)"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).is_empty());

    assert_eq!(code(&rxfuzz(&["gen-strings", "--pattern", "^a"])), 2);

    let o = rxfuzz(&["gen-strings", "--pattern", "[a-c]", "--negatives"]);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "+a"));
    assert!(out.lines().any(|l| l == "-d"));
}

fn recorded_finding(dir: &Path) -> std::path::PathBuf {
    let mut e = inject_fault(FaultId::AltFirstOnly);
    let run = run_mt_with(
        &mut e,
        &parse_str("(?:x|(?:b|a))+z?").unwrap(),
        &[b"a".to_vec()],
        &[RelationId::AltComm],
        &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0),
        MtOptions { all_sites: true },
    )
    .unwrap();
    let report = BugReport::from_finding(&run.finding.unwrap(), &e.label());
    let path = dir.join("bugs.jsonl");
    write_jsonl(&[report], &path).unwrap();
    path
}

#[test]
fn minimize_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let path = recorded_finding(dir.path());
    let o = rxfuzz(&["minimize", "--fault", "ALT_FIRST_ONLY", "--report", p(&path), "--index", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: BugReport = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(m.pattern, "(?:b|a)+");
    assert!(m.minimized);

    assert_eq!(code(&rxfuzz(&["minimize", "--report", p(&path)])), 3);
    assert_eq!(code(&rxfuzz(&["minimize", "--fault", "ALT_FIRST_ONLY", "--report", p(&path), "--index", "999"])), 2);
    assert_eq!(code(&rxfuzz(&["minimize", "--report", "/definitely/not/here.jsonl"])), 2);
}
