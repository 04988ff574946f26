use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use darkwatch_core::fixtures::fixture_root;

fn darkwatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darkwatch")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/fixtures.toml")
}

fn staged(run: &Path, stage: &str) -> Output {
    darkwatch(&["--config", config().to_str().unwrap(), "--run-dir", run.to_str().unwrap(), stage])
}

#[test]
fn config_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().to_str().unwrap();

    let o = darkwatch(&["--run-dir", run, "crawl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));

    let o = darkwatch(&["--config", "/nonexistent/darkwatch.toml", "--run-dir", run, "crawl"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[cluster]\nk = 0\n").unwrap();
    let o = darkwatch(&["--config", bad.to_str().unwrap(), "--run-dir", run, "cluster"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cluster.k"));

    let o = darkwatch(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(darkwatch(&["--help"]).status.code(), Some(0));
}

#[test]
fn bundled_forum_fixtures_need_no_config() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().to_str().unwrap();
    let o = darkwatch(&["--run-dir", run, "stats", "--fixtures", "searches"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for line in ["HackHound [Internet of Things]: 4", "Hackers Tribe [Hack Internet of Things]: 5", "School-of-HackNet [Hack devices]: 1", "HackerWeb [Hack Internet of Things]: 1"] {
        assert!(out.contains(line), "missing {line:?} in {out}");
    }
    let csv = std::fs::read_to_string(dir.path().join("query_hits.csv")).unwrap();
    assert!(csv.starts_with("forum,searched,hit_posts\n"));

    let o = darkwatch(&["--run-dir", run, "stats", "--fixtures", "shares"]);
    assert!(stdout(&o).contains("HackerWeb: 33/1000 (3.3%)"), "{}", stdout(&o));
    assert!(dir.path().join("class_mentions.json").exists());
    assert!(!dir.path().join(".lock").exists());
}

#[test]
fn scan_against_recorded_responses() {
    let dir = tempfile::tempdir().unwrap();
    let scan = fixture_root().join("scan");
    let o = darkwatch(&[
        "--run-dir",
        dir.path().to_str().unwrap(),
        "scan",
        "--query",
        "sensor",
        "--fixture",
        scan.to_str().unwrap(),
        "--pages",
        "2",
        "--port",
        "8080",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("Results found: 582"));
    let csv = std::fs::read_to_string(dir.path().join("scan_sensor.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("IP,Data"));
    assert!(lines.count() > 0);
    let result: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("scan_sensor.json")).unwrap()).unwrap();
    assert_eq!(result["records"].as_array().unwrap().len(), 13);
}

#[test]
fn stages_report_missing_prerequisites() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path();

    let o = staged(run, "report");
    assert_eq!(o.status.code(), Some(1));

    let o = staged(run, "correlate");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("darkwatch stats"));

    assert!(staged(run, "crawl").status.success());
    let o = staged(run, "filter");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("darkwatch train"));
}

#[test]
fn full_pipeline_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path();
    for stage in ["crawl", "metasearch", "backlinks", "train", "filter", "cluster", "stats", "scan", "correlate", "report"] {
        let o = staged(run, stage);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    let filter: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("filter.json")).unwrap()).unwrap();
    let dropped = filter["round1_dropped"].as_array().unwrap();
    assert_eq!(dropped.len(), 3);
    assert!(dropped.iter().all(|d| d["url"].as_str().unwrap().contains(".example/")));

    let risk = std::fs::read_to_string(run.join("risk.csv")).unwrap();
    assert!(risk.starts_with("class,mention_share,exposure_share,risk\n"));
    assert_eq!(risk.lines().nth(1).unwrap().split(',').next(), Some("iot-exploit"));

    let reports: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports["not_computed"], serde_json::json!([]));
    assert!(reports["cluster_report"]["clusters"].as_array().unwrap().len() <= 4);
}

#[test]
fn a_held_run_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".lock"), "").unwrap();
    let o = darkwatch(&["--run-dir", dir.path().to_str().unwrap(), "stats", "--fixtures", "searches"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("locked"));
}
