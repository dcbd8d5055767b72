mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use serde_json::json;

use common::*;
use waste_radar::cli::{cmd_fetch, Invocation};
use waste_radar::config::RunConfig;
use waste_radar::ingest::{FixtureTransport, Transport};
use waste_radar::snapshot::{save_snapshot, snapshot_file_name, RepoRef};

const REGENERATE_ENV: &str = "WASTE_RADAR_REGENERATE";

fn corpus() -> PathBuf {
    fixtures_dir().join("corpus")
}

fn http() -> PathBuf {
    fixtures_dir().join("http")
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waste-radar"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("WASTE_RADAR_TOKEN")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every file under `dir`, keyed by relative path.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

/// Rewrites the committed corpus, recorded HTTP fixtures and golden
/// outputs. Runs only with `WASTE_RADAR_REGENERATE=1`.
#[test]
fn regenerate_fixtures() {
    if std::env::var_os(REGENERATE_ENV).is_none() {
        return;
    }
    let snaps = corpus().join("snapshots");
    std::fs::create_dir_all(&snaps).unwrap();
    for (repo, seed, forks, pulls, issues) in [
        ("acme/widgets", 11, 400, 150, 600),
        ("acme/gadgets", 12, 120, 60, 250),
        ("acme/empty", 13, 0, 0, 0),
    ] {
        let s = corpus_snapshot(repo, seed, forks, pulls, issues);
        save_snapshot(&s, &snaps.join(snapshot_file_name(&s.repo))).unwrap();
    }

    let dir = http();
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    record_repo(&dir, &"acme/replay".parse().unwrap(), 200, 120, 70, 150, 60);
    record_repo(&dir, &"acme/nofork".parse().unwrap(), 0, 3, 1, 5, 2);
    record(
        &dir,
        "/repos/acme/missing",
        404,
        json!({}),
        json!({ "message": "Not Found" }),
    );

    let golden = corpus().join("golden");
    let _ = std::fs::remove_dir_all(&golden);
    let out = bin(&[
        "analyze",
        "--config",
        p(&corpus().join("config.json")),
        "--snapshot-dir",
        p(&snaps),
        "--out",
        p(&golden),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::write(golden.join("summary.txt"), &out.stdout).unwrap();
}

fn analyze_corpus(out: &Path) -> Output {
    bin(&[
        "analyze",
        "--config",
        p(&corpus().join("config.json")),
        "--snapshot-dir",
        p(&corpus().join("snapshots")),
        "--out",
        p(out),
    ])
}

#[test]
fn analyze_matches_golden() {
    let tmp = tempfile::tempdir().unwrap();
    let out = analyze_corpus(tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let golden = corpus().join("golden");
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("bundles.json")).unwrap(),
        std::fs::read_to_string(golden.join("bundles.json")).unwrap()
    );
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        std::fs::read_to_string(golden.join("summary.txt")).unwrap()
    );
}

#[test]
fn report_renders_every_format() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(analyze_corpus(tmp.path()).status.success());
    let out = bin(&[
        "report",
        "--config",
        p(&corpus().join("config.json")),
        "--out",
        p(tmp.path()),
        "--format",
        "table,csv,json,svg",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files = tree(tmp.path());
    for f in ["summary.txt", "summary.csv", "summary.json", "bundles.json"] {
        assert!(files.contains_key(Path::new(f)), "{f}");
    }
    for repo in ["acme__widgets", "acme__gadgets", "acme__empty"] {
        let d = Path::new(repo);
        for f in [
            "forks.csv",
            "pdi.csv",
            "prr.csv",
            "bi.csv",
            "ffr_bins.csv",
            "flow.csv",
            "flow.svg",
        ] {
            assert!(files.contains_key(&d.join(f)), "{repo}/{f}");
        }
        for bin in ["0-5", "5-30", "30-90", "90-180"] {
            assert!(
                files.contains_key(&d.join(format!("ffr_{bin}.svg"))),
                "{repo} {bin}"
            );
        }
    }
    let flow = String::from_utf8(files[Path::new("acme__widgets/flow.csv")].clone()).unwrap();
    // header + 60 sprints x 2 kinds
    assert_eq!(flow.lines().count(), 121);
}

#[test]
fn unsupported_format_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["report", "--out", p(tmp.path()), "--format", "table,pdf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pdf"));
    assert!(tree(tmp.path()).is_empty());
}

#[test]
fn empty_bundle_list_prints_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let snaps = tmp.path().join("snaps");
    std::fs::create_dir_all(&snaps).unwrap();
    let out = bin(&["analyze", "--snapshot-dir", p(&snaps), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    let out = bin(&["report", "--out", p(tmp.path()), "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 1);
    assert!(table.starts_with("Repository"));
}

#[test]
fn missing_snapshot_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&[
        "analyze",
        "--snapshot-dir",
        p(&corpus().join("snapshots")),
        "--repo",
        "acme/widgets",
        "--repo",
        "acme/absent",
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("acme/absent"));
    let doc = std::fs::read_to_string(tmp.path().join("bundles.json")).unwrap();
    assert!(doc.contains("\"widgets\""));
}

#[test]
fn invalid_snapshot_names_repo_and_field() {
    let tmp = tempfile::tempdir().unwrap();
    let snaps = tmp.path().join("snaps");
    std::fs::create_dir_all(&snaps).unwrap();
    let text = std::fs::read_to_string(corpus().join("snapshots/acme__gadgets.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["issues"][3]["closed_at"] = json!("2000-01-01T00:00:00Z");
    std::fs::write(snaps.join("acme__gadgets.json"), v.to_string()).unwrap();
    let out = bin(&["analyze", "--snapshot-dir", p(&snaps), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("acme/gadgets") && err.contains("issues[3].closed_at"),
        "{err}"
    );
}

#[test]
fn fetch_replays_and_reports_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let snaps = tmp.path().join("snaps");
    let out = bin(&[
        "fetch",
        "--fixture-dir",
        p(&http()),
        "--snapshot-dir",
        p(&snaps),
        "--repo",
        "acme/replay",
        "--repo",
        "acme/missing",
        "--repo",
        "acme/nofork",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("acme/missing"));
    let files = tree(&snaps);
    assert_eq!(
        files.keys().cloned().collect::<Vec<_>>(),
        vec![
            PathBuf::from("acme__nofork.json"),
            PathBuf::from("acme__replay.json")
        ]
    );
}

#[test]
fn fetch_skips_existing_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let repos: Vec<RepoRef> = vec!["acme/replay".parse().unwrap(), "acme/nofork".parse().unwrap()];
    let inv = Invocation {
        config: RunConfig {
            repos,
            snapshot_dir: tmp.path().to_path_buf(),
            ..Default::default()
        },
        fixture_dir: Some(http()),
        ..Default::default()
    };
    let run = |inv: &Invocation| {
        let t = Arc::new(FixtureTransport::new(http()));
        let dyn_t: Arc<dyn Transport> = t.clone();
        (cmd_fetch(inv, dyn_t).unwrap(), t.calls())
    };
    let (first, calls) = run(&inv);
    assert_eq!(first.snapshots.len(), 2);
    assert_eq!(first.fetched.len(), 2);
    assert!(calls > 0);
    let before = tree(tmp.path());

    let (second, calls) = run(&inv);
    assert_eq!(calls, 0);
    assert_eq!(second.skipped.len(), 2);
    assert_eq!(tree(tmp.path()), before);

    let refresh = Invocation {
        refresh: true,
        ..inv.clone()
    };
    let (third, calls) = run(&refresh);
    assert!(calls > 0);
    assert_eq!(third.fetched.len(), 2);
}

#[test]
fn select_filters_candidates() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.json");
    let mut ok = repo_json("acme/old");
    ok["forks_count"] = json!(3);
    ok["stargazers_count"] = json!(70000);
    let mut archived = ok.clone();
    archived["full_name"] = json!("acme/archived");
    archived["archived"] = json!(true);
    let mut small = ok.clone();
    small["full_name"] = json!("acme/small");
    small["stargazers_count"] = json!(10);
    std::fs::write(&path, json!([small, archived, ok]).to_string()).unwrap();
    let out = bin(&["select", "--candidates", p(&path)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "acme/old\n");
}
