use std::fs;

use rand::RngCore;
use wiretap_core::harness::{
    self, emit_report, load_config, load_report_jsonl, run_experiment, run_experiment_with,
    trial_seed, ExperimentConfig, ReportFormat,
};
use wiretap_core::Exec;

fn keyless(trials: usize, q: usize) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"experiment": "keyless", "master_seed": 99,
            "grid": {{"error_floor": [0.5], "q": [{q}], "trial_count": [{trials}]}}}}"#
    ))
    .unwrap()
}

fn csv_bytes(cfg: &ExperimentConfig, exec: Exec) -> Vec<u8> {
    let rows = run_experiment_with(cfg, exec).unwrap();
    let mut buf = Vec::new();
    harness::write_report(&rows, &mut buf, ReportFormat::Csv).unwrap();
    buf
}

#[test]
fn load_config_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    fs::write(
        &path,
        r#"{"experiment": "nbkg", "master_seed": 5, "grid": {"snr_db": [20, 25], "trial_count": [3]}}"#,
    )
    .unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.master_seed, 5);
    assert_eq!(cfg.grid_points().len(), 2);

    let err = load_config(dir.path().join("missing.json")).unwrap_err();
    assert!(err.to_string().contains("missing.json"));
    assert!(!err.is_config_error());
}

#[test]
fn single_trial_runs_are_byte_identical() {
    for cfg in [keyless(1, 20), harness::preset("dosa-bullets").unwrap()] {
        assert_eq!(
            csv_bytes(&cfg, Exec::Parallel),
            csv_bytes(&cfg, Exec::Parallel)
        );
    }
    let nbkg =
        ExperimentConfig::from_json(r#"{"experiment": "nbkg", "grid": {"snr_db": [15]}}"#).unwrap();
    assert_eq!(
        csv_bytes(&nbkg, Exec::Parallel),
        csv_bytes(&nbkg, Exec::Parallel)
    );
}

#[test]
fn executor_does_not_change_results() {
    let cfg = keyless(16, 10);
    assert_eq!(
        csv_bytes(&cfg, Exec::Sequential),
        csv_bytes(&cfg, Exec::Parallel)
    );
    let nbkg = ExperimentConfig::from_json(
        r#"{"experiment": "nbkg", "grid": {"snr_db": [15, 25], "trial_count": [40]}}"#,
    )
    .unwrap();
    assert_eq!(
        csv_bytes(&nbkg, Exec::Sequential),
        csv_bytes(&nbkg, Exec::Parallel)
    );
}

#[test]
fn seed_changes_results_and_provenance() {
    let a = keyless(2, 10);
    let mut b = a.clone();
    b.master_seed += 1;
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    assert_ne!(ra[0].eve_ber_with_shaping, rb[0].eve_ber_with_shaping);
    assert_eq!(ra[0].master_seed, 99);
    assert_eq!(rb[0].master_seed, 100);
    assert_ne!(ra[0].config_hash, rb[0].config_hash);
}

#[test]
fn jsonl_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.jsonl");
    let rows = run_experiment(&harness::preset("table2").unwrap()).unwrap();
    emit_report(&rows, &path, ReportFormat::JsonLines).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.ends_with('\n') && !text.ends_with("\n\n"));
    assert_eq!(load_report_jsonl(&path).unwrap(), rows);
}

#[test]
fn csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let rows = run_experiment(&harness::preset("dosa-bullets").unwrap()).unwrap();
    emit_report(&rows, &path, ReportFormat::Csv).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], harness::report::COLUMNS.join(","));
    let width = harness::report::COLUMNS.len();
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), width, "{l}");
    }
    // integer columns print as integers, rates with six significant digits
    assert!(lines[1].contains(",398,"), "{}", lines[1]);
    assert!(lines[1].contains(",0.321608,"), "{}", lines[1]);
}

// Pairwise bit correlation between streams for neighbouring (point, trial)
// indices, over 1e5 pairs of 64-bit draws.
#[test]
fn trial_streams_are_uncorrelated() {
    let pairs = [
        ((0, 0), (0, 1)),
        ((0, 0), (1, 0)),
        ((3, 7), (7, 3)),
        ((0, 1), (1, 0)),
    ];
    for ((g1, t1), (g2, t2)) in pairs {
        let mut a = trial_seed(1, g1, t1).rng();
        let mut b = trial_seed(1, g2, t2).rng();
        let n = 100_000;
        let mut agree = 0i64;
        for _ in 0..n {
            agree += 64 - (a.next_u64() ^ b.next_u64()).count_ones() as i64;
        }
        let total = n as f64 * 64.0;
        let corr = 2.0 * agree as f64 / total - 1.0;
        assert!(corr.abs() < 0.01, "({g1},{t1}) vs ({g2},{t2}): {corr}");
    }
}

#[test]
fn standard_error_shrinks_with_trials() {
    let small = run_experiment(&keyless(100, 4)).unwrap();
    let large = run_experiment(&keyless(400, 4)).unwrap();
    for (s, l) in [
        (
            small[0].eve_ber_with_shaping_se,
            large[0].eve_ber_with_shaping_se,
        ),
        (
            small[0].eve_ber_without_shaping_se,
            large[0].eve_ber_without_shaping_se,
        ),
    ] {
        let ratio = s.unwrap() / l.unwrap();
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn trials_override_in_preset() {
    let mut cfg = harness::preset("nbkg-sweep").unwrap();
    cfg.grid.trial_count = vec![3];
    cfg.nbkg.dosa_samples = 0;
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows
        .iter()
        .all(|r| r.trial_count == 3 && r.dosa_estimate.is_none()));
}

#[test]
fn shipped_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!cfg.grid_points().is_empty());
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
}
