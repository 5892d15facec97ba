use std::fs;
use std::process::{Command, Output};

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn metrics_subcommands() {
    let o = simulate(&[
        "metrics",
        "blocklen",
        "--lambda",
        "128",
        "--error-floor",
        "0.3",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), r#"{"block_length":249}"#);

    let o = simulate(&[
        "metrics",
        "doa",
        "--key-bits",
        "64",
        "--message-bits",
        "128",
    ]);
    assert_eq!(stdout(&o).trim(), r#"{"doa":0.5}"#);

    let o = simulate(&[
        "metrics",
        "dosa",
        "--key-capacity",
        "1",
        "--channel-capacity",
        "4",
    ]);
    assert_eq!(stdout(&o).trim(), r#"{"dosa":0.25}"#);

    let o = simulate(&["metrics", "minentropy", "--error-floor", "0.5"]);
    assert_eq!(stdout(&o).trim(), r#"{"min_entropy_bound":1.0}"#);

    let o = simulate(&["metrics", "dosa", "--snr-db", "30"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["dosa_highsnr_approx"].as_f64().unwrap() - 0.716028).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    // config errors
    assert_eq!(
        simulate(&["metrics", "minentropy", "--error-floor", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(simulate(&["metrics", "dosa"]).status.code(), Some(2));
    assert_eq!(simulate(&["preset", "table9"]).status.code(), Some(2));
    assert_eq!(
        simulate(&["preset", "table2", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"experiment": "keyless", "grid": {"error_floor": [1.2]}}"#,
    )
    .unwrap();
    let o = simulate(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error_floor"));

    // runtime failures
    let missing = dir.path().join("missing.json");
    assert_eq!(
        simulate(&["run", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    let unwritable = dir.path().join("no/such/dir/out.csv");
    let o = simulate(&[
        "preset",
        "dosa-bullets",
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_writes_report_and_keeps_stdout_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"experiment": "keyless", "grid": {"error_floor": [0.4], "q": [10], "trial_count": [2]}}"#,
    )
    .unwrap();
    let out = dir.path().join("out.jsonl");
    let o = Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "4",
            "--out",
            out.to_str().unwrap(),
        ])
        .env("RUST_LOG", "info")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty(), "progress goes to stderr");
    let rows = wiretap_core::harness::load_report_jsonl(&out).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].master_seed, 4);
    assert_eq!(rows[0].block_length, Some(174));
}

#[test]
fn thread_override_keeps_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_simulate"))
            .args(["preset", "table2", "--trials", "3", "--format", "csv"])
            .env("WIRETAP_THREADS", threads)
            .env("RUST_LOG", "off")
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(stdout(&one).lines().count(), 5);
}
