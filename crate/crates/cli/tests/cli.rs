use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sumprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumprod")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_set(dir: &Path, name: &str, p: u64, xs: &[u64]) -> String {
    let path = dir.join(name);
    let body: String = xs.iter().map(|x| format!("{x}\n")).collect();
    fs::write(&path, format!("# p={p}\n{body}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_set_subgroup_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    let o = sumprod(&["gen-set", "--p", "7", "--kind", "subgroup", "--size", "3", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&path).unwrap(), "# p=7\n1\n2\n4\n");
}

#[test]
fn gen_set_is_seeded() {
    let run = |seed: &str| {
        stdout(&sumprod(&["gen-set", "--p", "1009", "--kind", "random", "--size", "30", "--seed", seed]))
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
    let o = sumprod(&["gen-set", "--p", "1009", "--kind", "random", "--size", "30"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compute_small_values() {
    let dir = tempfile::tempdir().unwrap();
    let hole = sumprod(&["compute", "hole", "--p", "7", "--g", "3", "--a", "1", "--n", "6"]);
    assert_eq!(stdout(&hole).trim(), "2");
    let a = write_set(dir.path(), "a.txt", 101, &[0, 1, 2]);
    let energy = sumprod(&["compute", "energy", &a, &a]);
    assert_eq!(stdout(&energy).trim(), "19");
}

#[test]
fn incidences_match_bilinear_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_set(dir.path(), "a.txt", 101, &[1, 5, 9, 30]);
    let b = write_set(dir.path(), "b.txt", 101, &[2, 3, 7]);
    let c = write_set(dir.path(), "c.txt", 101, &[4, 11, 50, 77, 100]);
    let inc = stdout(&sumprod(&["compute", "incidences", &a, &b, &c]));
    let bil = stdout(&sumprod(&["compute", "bilinear", &a, &b, &c]));
    assert_eq!(inc, bil);
    assert!(inc.trim().parse::<u64>().unwrap() >= 60);
}

#[test]
fn klein_verify_passes() {
    let o = sumprod(&["klein-verify", "--p", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("PASS"));
}

const KK: &str = "\
[field]
p = 101
[generator]
kinds = random
[sizes]
values = 10
[trials]
count = 100
[seed]
value = 7
[checkers]
list = katz_koester
";

#[test]
fn verify_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("kk.ini");
    fs::write(&cfg, KK).unwrap();
    let run = |out: &str| {
        let target = dir.path().join(out);
        let o = sumprod(&["verify", cfg.to_str().unwrap(), "--out", target.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read_to_string(target.join("katz_koester.csv")).unwrap(),
            fs::read_to_string(target.join("summary.jsonl")).unwrap(),
        )
    };
    let (csv, summary) = run("first");
    let main_rows = csv.lines().filter(|l| l.starts_with("katz_koester,katz_koester,")).count();
    assert_eq!(main_rows, 100);
    assert!(!summary.is_empty());
    assert_eq!(run("second"), (csv, summary));
}

#[test]
fn verify_rejects_unknown_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    fs::write(&cfg, KK.replace("count = 100", "trails = 100")).unwrap();
    let o = sumprod(&["verify", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trails"));
}

#[test]
fn expsum_double_rows() {
    let o = sumprod(&["expsum", "double", "--p", "1009", "--a", "1..=3", "--x", "20", "--y", "20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,g,a,N,X,Y,lhs,rhs_formula_value,ratio"));
    assert_eq!(lines.count(), 3);
}
