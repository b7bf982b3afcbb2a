use std::fs;

use gfarfe::harness::{
    determinism_digest, median, metrics_csv, read_metrics, run_sweep, suite_mean, ExperimentConfig,
    CSV_HEADER,
};
use gfarfe::Error;
use tempfile::tempdir;

fn config(rewards: &str, k_grid: &str, seeds: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{
            "env": {{"generator": "chain", "length": 5, "horizon": 6, "slip": 0.1}},
            "explorers": ["gfarfe", "unweighted"],
            "k_grid": {k_grid},
            "rewards": {rewards},
            "seeds": {seeds}
        }}"#
    ))
    .unwrap()
}

const GOALS: &str = r#"[{"kind": "goal-suite", "stages": [5]}]"#;
const RANDOM: &str = r#"[{"kind": "random", "count": 3, "seed": 9}]"#;

#[test]
fn empty_suite_writes_header_only() {
    let dir = tempdir().unwrap();
    let out = run_sweep(&config("[]", "[4, 8]", "[0]"), dir.path()).unwrap();
    assert!(out.rows.is_empty());
    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(text.trim_end(), CSV_HEADER.join(","));
}

#[test]
fn reruns_are_bitwise_identical_up_to_wallclock() {
    let cfg = config(GOALS, "[8, 16, 32]", "[0, 1, 2]");
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let first = run_sweep(&cfg, a.path()).unwrap();
    let second = run_sweep(&cfg, b.path()).unwrap();
    assert_eq!(first.summary.digest, second.summary.digest);
    assert_eq!(
        determinism_digest(&read_metrics(&a.path().join("metrics.csv")).unwrap()).unwrap(),
        first.summary.digest
    );
    for ((_, _, pa), (_, _, pb)) in first.artifacts.iter().zip(&second.artifacts) {
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
    }
    let strip = |rows: &[gfarfe::harness::MetricRow]| {
        rows.iter()
            .map(|r| gfarfe::harness::MetricRow {
                wallclock: 0.0,
                ..r.clone()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(
        metrics_csv(&strip(&first.rows)).unwrap(),
        metrics_csv(&strip(&second.rows)).unwrap()
    );
}

#[test]
fn artifacts_ignore_the_reward_suite() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let first = run_sweep(&config(GOALS, "[8, 32]", "[3, 4]"), a.path()).unwrap();
    let second = run_sweep(&config(RANDOM, "[8, 32]", "[3, 4]"), b.path()).unwrap();
    assert_eq!(first.artifacts.len(), 4);
    for ((la, sa, pa), (lb, sb, pb)) in first.artifacts.iter().zip(&second.artifacts) {
        assert_eq!((la, sa), (lb, sb));
        assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
    }
    assert_ne!(first.summary.digest, second.summary.digest);
}

#[test]
fn checkpoint_rows_match_fresh_runs() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let long = run_sweep(&config(GOALS, "[64, 256, 512]", "[5]"), a.path()).unwrap();
    let fresh = run_sweep(&config(GOALS, "[256]", "[5]"), b.path()).unwrap();
    let at_256: Vec<_> = long.rows.iter().filter(|r| r.k == 256).collect();
    assert_eq!(at_256.len(), fresh.rows.len());
    for (x, y) in at_256.iter().zip(&fresh.rows) {
        assert_eq!(
            (&x.explorer, &x.reward_id, x.seed),
            (&y.explorer, &y.reward_id, y.seed)
        );
        assert_eq!(
            (x.subopt, x.dim, x.sigma_sum),
            (y.subopt, y.dim, y.sigma_sum)
        );
    }
}

#[test]
fn suboptimality_is_never_negative() {
    let dir = tempdir().unwrap();
    let rewards = r#"[{"kind": "goal-suite"}, {"kind": "random", "count": 4, "seed": 1},
                      {"kind": "random", "count": 2, "seed": 2, "mode": "total-bounded"}]"#;
    let out = run_sweep(&config(rewards, "[4, 16, 64]", "[0, 1]"), dir.path()).unwrap();
    assert!(!out.rows.is_empty());
    assert!(out.rows.iter().all(|r| r.subopt >= -1e-9));
}

#[test]
fn median_subopt_is_nonincreasing_in_k() {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "env": {"generator": "chain", "length": 6, "horizon": 10, "slip": 0.1},
            "k_grid": [16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
            "rewards": [{"kind": "goal-suite"}],
            "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
        }"#,
    )
    .unwrap();
    let dir = tempdir().unwrap();
    let rows = suite_mean(&run_sweep(&cfg, dir.path()).unwrap().rows);
    let medians: Vec<f64> = cfg
        .k_grid
        .iter()
        .map(|&k| {
            median(
                &mut rows
                    .iter()
                    .filter(|r| r.k == k)
                    .map(|r| r.subopt)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    // Three-point moving average before the monotonicity check.
    let smoothed: Vec<f64> = medians
        .windows(3)
        .map(|w| w.iter().sum::<f64>() / 3.0)
        .collect();
    assert!(
        smoothed.windows(2).all(|w| w[1] <= w[0] + 1e-9),
        "{medians:?}"
    );
}

#[test]
fn invalid_config_is_a_field_level_error() {
    let err = ExperimentConfig::from_json(
        r#"{"env": {"generator": "chain", "length": 3, "horizon": 4}, "k_grid": [8, 4], "seeds": [0]}"#,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("k_grid"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let err = run_sweep(&config(GOALS, "[4]", "[0]"), &blocker.join("out")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
