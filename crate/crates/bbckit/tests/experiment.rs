//! Library-level experiment runs: matrix shape, row contents, summary
//! consistency, and failure isolation.

use bbckit::config::{ExperimentConfig, RunMode};
use bbckit::experiment::{
    run_experiment, rows_csv, strip_column, summary_csv, Row, RowOutcome,
};
use std::path::PathBuf;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR")))
}

fn small_matrix() -> ExperimentConfig {
    ExperimentConfig {
        suts: vec![fixture("toggle.dot"), fixture("counter.dot")],
        specs: vec![fixture("no_err.dot"), fixture("anything.dot")],
        modes: vec![RunMode::Bbc, RunMode::LearnThenCheck],
        seeds: 3,
        ..ExperimentConfig::default()
    }
}

#[test]
fn matrix_has_one_row_per_cell_in_sorted_order() {
    let rows = run_experiment(&small_matrix());
    // 2 machines x 2 properties x 2 modes x 3 seeds.
    assert_eq!(rows.len(), 24);
    let keys: Vec<_> = rows
        .iter()
        .map(|r| (r.sut.clone(), r.property.clone(), r.mode, r.seed))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(keys, sorted);

    for r in &rows {
        assert!(r.error.is_none(), "{}: {:?}", r.sut, r.error);
        let expect_bug = r.property == "no_err";
        let found_bug = r.outcome == RowOutcome::Bug;
        assert_eq!(found_bug, expect_bug, "{} / {} / {:?}", r.sut, r.property, r.mode);
        if expect_bug {
            assert!(r.bug_step.is_some());
        }
        assert!(r.total_queries() > 0);
    }
}

#[test]
fn summary_lines_recompute_from_the_rows() {
    let rows = run_experiment(&small_matrix());
    let summary = summary_csv(&rows);

    let cell = |sut: &str, prop: &str, mode: RunMode| -> Vec<u64> {
        rows.iter()
            .filter(|r| r.sut == sut && r.property == prop && r.mode == mode)
            .map(Row::total_queries)
            .collect()
    };
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;

    let bbc = cell("toggle", "no_err", RunMode::Bbc);
    let baseline = cell("toggle", "no_err", RunMode::LearnThenCheck);
    let line = summary
        .lines()
        .find(|l| l.starts_with("toggle,no_err,bbc,"))
        .unwrap();
    let fields: Vec<&str> = line.split(',').collect();
    assert_eq!(fields[3], "3");
    assert_eq!(fields[4], "3");
    assert_eq!(fields[8], format!("{:.3}", mean(&bbc)));
    assert_eq!(
        fields[11],
        format!("{:.1}", 100.0 * mean(&bbc) / mean(&baseline))
    );
    // No unmonitored cell ran, so that percentage stays empty.
    assert_eq!(fields[12], "");
}

#[test]
fn reruns_reproduce_the_rows_exactly_except_for_wall_time() {
    let cfg = small_matrix();
    let a = rows_csv(&run_experiment(&cfg));
    let b = rows_csv(&run_experiment(&cfg));
    assert_ne!(a, b, "wall times should differ between runs");
    assert_eq!(
        strip_column(&a, "wall_time_ns"),
        strip_column(&b, "wall_time_ns")
    );
}

#[test]
fn failures_become_rows_instead_of_aborting_the_matrix() {
    let cfg = ExperimentConfig {
        suts: vec![fixture("toggle.dot"), fixture("does_not_exist.dot")],
        specs: vec![fixture("no_err.dot"), fixture("bad.dot")],
        modes: vec![RunMode::Bbc],
        seeds: 2,
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg);
    assert_eq!(rows.len(), 8);
    for r in &rows {
        let broken = r.sut == "does_not_exist" || r.property == "bad";
        assert_eq!(r.outcome == RowOutcome::Error, broken);
        assert_eq!(r.error.is_some(), broken);
    }
    // Healthy cells still ran to a verdict.
    assert!(rows
        .iter()
        .any(|r| r.sut == "toggle" && r.property == "no_err" && r.outcome == RowOutcome::Bug));
}
