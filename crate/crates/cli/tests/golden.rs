use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mobius-ac0"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn golden(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check(args: &[&str], file: &str) {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden(file), "{args:?}");
}

#[test]
fn sieve_tables() {
    check(&["sieve", "--n", "4"], "sieve_mobius.v1.csv");
    check(&["sieve", "--n", "4", "--kind", "liouville"], "sieve_liouville.v1.csv");
    check(&["sieve", "--n", "4", "--json"], "sieve_mobius.v1.json");
}

#[test]
fn spectra_and_sums() {
    check(&["walsh-decay", "--n", "4"], "walsh_decay.v1.csv");
    check(&["expsum-scan", "--n", "4", "--tmax", "4"], "expsum_scan.v1.csv");
}

#[test]
fn reduction_and_circuits() {
    check(&["katai", "--n", "4", "--parity", "1", "--set", "1"], "katai_parity1.v1.csv");
    check(&["circuit", "--n", "4"], "circuit_true.v1.csv");
    check(&["circuit", "--n", "4", "--family", "comparator"], "circuit_comparator.v1.csv");
    check(&["lmn", "--n", "4", "--count", "2", "--seed", "1"], "lmn.v1.csv");
    check(&["pipeline", "--n", "4", "--k", "1"], "pipeline.v1.csv");
}

#[test]
fn sieve_dump_is_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("mu.bin");
    let out = run(&["sieve", "--n", "4", "--dump", dump.to_str().unwrap()]);
    assert!(out.status.success());
    let bytes: Vec<i8> = std::fs::read(&dump).unwrap().into_iter().map(|b| b as i8).collect();
    assert_eq!(bytes, [0, 1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0, -1, 1, 1]);
}

#[test]
fn walsh_decay_shape_and_mertens_column() {
    let out = run(&["walsh-decay", "--n", "6,9"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7 + 10);
    // μ on 1..63 and 1..511 sums to −1 and −4
    for (row, mertens) in [(&rows[0], 1u64), (&rows[7], 4)] {
        assert_eq!(row[1], "0");
        assert_eq!(row[2].parse::<u64>().unwrap(), mertens);
    }
    for row in &rows {
        let v = row[2].parse::<f64>().unwrap() / row[3].parse::<f64>().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn output_flag_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let path = dir.path().join(format!("lmn{threads}.csv"));
        let out = run(&["lmn", "--n", "10", "--count", "5", "--seed", "4", "--threads", threads, "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        outputs.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].lines().count(), 1 + 5 * 10);
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn netlists_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "xnor.net", "# digits 1 and 2 agree\na = INPUT 1\nb = INPUT 2\nna = NOT a\nnb = NOT b\np = AND a b\nq = AND na nb\no = OR p q\nOUTPUT o\n");
    let out = run(&["circuit", "--n", "4", "--netlist", good.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // agree at x ∈ {0,3,4,7,8,11,12,15}: μ sums to 0−1+0−1+0−1+0+1 = −2; the rest sum to 1
    assert_eq!(text.lines().nth(1).unwrap(), "xnor,4,2,3,-3,16");

    let bad = write(dir.path(), "bad.net", "a = INPUT 1\nb = AND a c\nOUTPUT b\n");
    let out = run(&["circuit", "--n", "4", "--netlist", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("undefined id `c`"), "{err}");

    let wide = write(dir.path(), "wide.net", "a = INPUT 7\nOUTPUT a\n");
    let out = run(&["lmn", "--n", "4", "--netlist", wide.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors() {
    assert!(!run(&["sieve", "--n", "4", "--kind", "zeta"]).status.success());
    assert!(!run(&["pipeline", "--n", "21"]).status.success());
    assert!(!run(&["katai", "--n", "4", "--parity", "1", "--set", "2"]).status.success());
}
