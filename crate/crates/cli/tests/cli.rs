use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgldpc"))
        .args(args)
        .env_remove("DGLDPC_CACHE_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn spec(name: &str) -> String {
    specs().join(name).to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["--threads", "0", "code", "info", "rep-2"]).status.code(), Some(2));
    assert_eq!(run(&["code", "info", "no-such-code"]).status.code(), Some(1));
    assert_eq!(
        run(&["--no-cache", "code", "exit", "rep-3", "--role", "cn", "--q", "0.5"])
            .status
            .code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[[vn]]\ncode = \"rep-2\"\nfraction = 0.5\n\n[[cn]]\ncode = \"spc-sys-6\"\nfraction = 1.0\n",
    )
    .unwrap();
    let o = run(&["ensemble", "rate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn version_lists_catalog() {
    let out = ok(&["--version"]);
    assert!(out.starts_with("dgldpc "));
    assert!(out.contains("bch-31-21") && out.contains("cache schema: v1"));
}

#[test]
fn code_info_report() {
    let out = ok(&["code", "info", "spc-cyc-6"]);
    assert!(out.contains("d_min     2\n"));
    assert!(out.contains("A2_by_u   5 4 3 2 1\n"));
    let out = ok(&["code", "info", "hamming-7-4"]);
    assert!(out.contains("A2        0\n") && out.contains("C_i       0.000000\n"));
}

#[test]
fn exit_csv_shape() {
    let cn = ok(&["--no-cache", "code", "exit", "spc-sys-4", "--role", "cn", "--grid", "3"]);
    assert_eq!(
        cn,
        "p,q,IE\n0.000000,,1.000000000000\n0.500000,,0.125000000000\n1.000000,,0.000000000000\n"
    );
    let vn = ok(&[
        "--no-cache",
        "code",
        "exit",
        "rep-3",
        "--role",
        "vn",
        "--grid",
        "3",
        "--q",
        "0.5",
    ]);
    assert_eq!(vn.lines().nth(2), Some("0.500000,0.500000,0.875000000000"));
    let full = ok(&["--no-cache", "code", "exit", "rep-2", "--role", "vn", "--grid", "4"]);
    assert_eq!(full.lines().count(), 1 + 16);
}

#[test]
fn ensemble_reports() {
    assert_eq!(
        ok(&["ensemble", "rate", &spec("ldpc-3-6.toml")]),
        "design_rate 0.500000\n"
    );
    let b = ok(&["--no-cache", "ensemble", "bound", &spec("gldpc.toml")]);
    assert!(b.contains("q_bound   0.291902"), "{b}");
    let t = ok(&[
        "--no-cache",
        "ensemble",
        "threshold",
        &spec("ldpc-3-6.toml"),
        "--tol",
        "1e-5",
    ]);
    assert!(t.starts_with("q_star      0.429"), "{t}");
}

#[test]
fn exitchart_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("chart.csv");
    ok(&[
        "--no-cache",
        "ensemble",
        "exitchart",
        &spec("ldpc-3-6.toml"),
        "--q",
        "0.4",
        "--grid",
        "11",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("IA,IEV,IECinv\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn cold_and_warm_cache_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = [
        "--cache-dir",
        cache,
        "code",
        "exit",
        "spc-cyc-10",
        "--role",
        "vn",
        "--grid",
        "6",
    ];
    let cold = ok(&args);
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, 1);
    let warm = ok(&args);
    assert_eq!(cold, warm);
    assert_eq!(
        cold,
        ok(&[
            "--no-cache",
            "code",
            "exit",
            "spc-cyc-10",
            "--role",
            "vn",
            "--grid",
            "6"
        ])
    );
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = |threads: &str| {
        let hist = dir.path().join(format!("hist-{threads}.csv"));
        let best = ok(&[
            "--no-cache",
            "--threads",
            threads,
            "ensemble",
            "optimize",
            &spec("search-small.toml"),
            "--history",
            hist.to_str().unwrap(),
        ]);
        (best, std::fs::read_to_string(hist).unwrap())
    };
    let (one, four) = (out("1"), out("4"));
    assert_eq!(one, four);
    assert!(one.1.starts_with("generation,best,mean,feasible,rejected\n"));
    assert_eq!(one.1.lines().count(), 1 + 9);
}

#[test]
fn fig2_csv() {
    let out = ok(&["reproduce", "fig2", "--points", "3", "--x-max", "2"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "x,mu,Pinv");
    assert_eq!(lines.len(), 1 + 7 * 3);
    // mu = 0 is the pure repetition mix: P^-1(x) = x / 0.3
    assert_eq!(lines[2], "1.000000,0.00,3.333333333");
    for bad in ["--x-max=-1", "--x-max=0"] {
        assert_eq!(run(&["reproduce", "fig2", bad]).status.code(), Some(1));
    }
}
