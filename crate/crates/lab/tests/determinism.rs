use std::path::Path;

use hartree_blowup::commands::{emit_report, global};
use hartree_blowup::config::Config;
use hartree_blowup::experiments::{experiment_global, ExperimentReport};
use hartree_blowup::io::read_json;

fn small() -> Config {
    Config { box_extent: 40.0, cells: 2048, t_end: 0.25, dt: 1e-3, cadence: 25, ..Config::global_default() }
}

#[test]
fn reports_are_byte_identical_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Config { noise: 1e-3, ..small() };
    let run = |sub: &str, seed: u64| {
        let out = dir.path().join(sub);
        std::fs::create_dir(&out).unwrap();
        assert!(global(&cfg, &out, seed).unwrap());
        std::fs::read_to_string(out.join("report.json")).unwrap()
    };
    let (a, b, c) = (run("a", 5), run("b", 5), run("c", 6));
    assert!(a == b, "same seed, different reports");
    assert!(a != c);
    let report: ExperimentReport = read_json(&dir.path().join("a/report.json")).unwrap();
    assert_eq!(report.seed, 5);
    assert!(report.criteria.iter().all(|c| c.passed()));
    let again = dir.path().join("again.json");
    emit_report(&report, &again).unwrap();
    assert!(std::fs::read_to_string(again).unwrap() == a, "re-emitted report differs");
}

#[test]
fn supercritical_amplitude_is_report_only() {
    let cfg = Config { amplitude: 1.2, ..small() };
    let o = experiment_global(&cfg, 0).unwrap();
    assert!(!o.report.criteria.is_empty());
    assert!(o.report.criteria.iter().all(|c| c.status == hartree_blowup::experiments::Status::Report));
    assert!(o.report.passed());
}

#[test]
fn report_into_missing_directory_fails() {
    let report = experiment_global(&small(), 0).unwrap().report;
    let e = emit_report(&report, Path::new("/nonexistent/dir/report.json")).unwrap_err();
    assert!(e.to_string().contains("/nonexistent/dir"));
}
