use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn estraus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_estraus"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "stderr: {text}");
    text
}

#[test]
fn count_lists_triples() {
    let out = estraus(&["count", "--n", "3", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "n,ordered,unordered\n3,12,3\n\nn1,n2,n3,orderings\n1,4,12,6\n1,6,6,3\n2,2,3,3\n"
    );
    let naive = estraus(&["count", "--n", "3", "--list", "--method", "naive"]);
    assert_eq!(naive.stdout, out.stdout);
}

#[test]
fn verify_small_range() {
    let out = estraus(&["verify", "--range", "2..1000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "none\n");
}

#[test]
fn classify_prime() {
    let out = estraus(&["classify", "--p", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).ends_with("5,12,6,6,2,2\n"));
    let out = estraus(&["classify", "--p", "9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn domain_errors_exit_1() {
    for args in [
        vec!["count", "--n", "1"],
        vec!["count"],
        vec!["verify", "--range", "10..2"],
        vec!["bounds", "--expr", "loglog(N)", "--grid", "2,20"],
        vec!["bounds", "--bound", "nosuch", "--grid", "100"],
        vec!["bounds", "--expr", "N*c", "--grid", "100"],
        vec!["sum", "--max-N", "100", "--grid", "10,200"],
        vec!["report", "--bound", "jia"],
        vec!["count", "--n", "5", "--method", "other"],
    ] {
        let out = estraus(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(stderr_line(&out).starts_with("error: domain: "), "{args:?}");
    }
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no").join("such");
    let missing = missing.to_str().unwrap();
    for args in [
        vec!["count", "--n", "5", "--out", missing],
        vec!["sum", "--max-N", "100", "--checkpoint", missing],
        vec!["report", "--bound", "jia", "--sums", missing],
    ] {
        let out = estraus(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr_line(&out).starts_with("error: io: "));
    }
}

#[test]
fn corrupt_checkpoint_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.txt");
    fs::write(
        &path,
        "ESTRAUS-CKPT v1\nmethod divisor\nrange 2 6\np,f_ordered,typeI_ordered,typeII_ordered\n2,3,0,0\n3,12,0,0\n5,12,6,6\nrange 4 6\np,f_ordered,typeI_ordered,typeII_ordered\n5,12,6,6\n",
    )
    .unwrap();
    let out = estraus(&[
        "sum",
        "--max-N",
        "100",
        "--checkpoint",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).starts_with("error: invariant: "));
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let runs = |tag: &str, workers: &str| {
        let series = d(&format!("series{tag}.csv"));
        let per_prime = d(&format!("primes{tag}.csv"));
        let report = d(&format!("report{tag}.csv"));
        let sum = estraus(&[
            "sum",
            "--max-N",
            "20000",
            "--grid",
            "log:1..4",
            "--workers",
            workers,
            "--out",
            &series,
            "--per-prime",
            &per_prime,
        ]);
        assert_eq!(sum.status.code(), Some(0));
        let rep = estraus(&[
            "report", "--bound", "paper-G", "--sums", &series, "--grid", "log:2..4", "--out",
            &report,
        ]);
        assert_eq!(rep.status.code(), Some(0));
        (
            read(series.as_ref()),
            read(per_prime.as_ref()),
            read(report.as_ref()),
        )
    };
    let a = runs("a", "1");
    let b = runs("b", "1");
    let c = runs("c", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let series = String::from_utf8(a.0).unwrap();
    assert!(series.starts_with("N,S,S_I,S_II\n10,63,11,5\n"));
    assert!(!series.contains('\r'));

    // Same report when the sweep runs inline.
    let inline = estraus(&[
        "report", "--bound", "paper-G", "--max-N", "20000", "--grid", "log:2..4",
    ]);
    assert_eq!(inline.stdout, a.2);
}

#[test]
fn bounds_grid_output() {
    let out = estraus(&["bounds", "--expr", "N + 1", "--grid", "10,100"]);
    assert_eq!(stdout(&out), "N,G_of_N\n10,11\n100,101\n");
    let out = estraus(&[
        "bounds",
        "--bound",
        "tao-typeI",
        "--const",
        "c=2",
        "--grid",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(0));
}
