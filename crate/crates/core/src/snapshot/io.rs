use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    timestamp, ForkRecord, IssueRecord, PullRecord, RepoFlags, RepoMeta, RepoRef, RepoSnapshot,
    SnapshotError, Timestamp,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    format_version: u32,
    repo: RepoRef,
    meta: MetaSection,
    forks: Vec<ForkRecord>,
    pulls: Vec<PullRecord>,
    issues: Vec<IssueRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaSection {
    #[serde(with = "timestamp")]
    created_at: Timestamp,
    #[serde(with = "timestamp")]
    parent_pushed_at: Timestamp,
    #[serde(with = "timestamp")]
    fetched_at: Timestamp,
    flags: RepoFlags,
    stargazers: u64,
    fork_count: u64,
}

/// `owner__name.json`, the file name used for a repository's snapshot.
pub fn snapshot_file_name(repo: &RepoRef) -> String {
    format!("{}__{}.json", repo.owner, repo.name)
}

/// Serializes `snapshot` to pretty JSON. Identical snapshots give identical
/// bytes.
pub fn to_json(snapshot: &RepoSnapshot) -> String {
    let mut forks = snapshot.forks.clone();
    let mut pulls = snapshot.pulls.clone();
    let mut issues = snapshot.issues.clone();
    forks.sort_by(|a, b| a.full_name.cmp(&b.full_name));
    pulls.sort_by_key(|p| p.number);
    issues.sort_by_key(|i| i.number);
    let file = SnapshotFile {
        format_version: FORMAT_VERSION,
        repo: snapshot.repo.clone(),
        meta: MetaSection {
            created_at: snapshot.created_at,
            parent_pushed_at: snapshot.parent_pushed_at,
            fetched_at: snapshot.fetched_at,
            flags: snapshot.flags,
            stargazers: snapshot.stargazers,
            fork_count: snapshot.fork_count,
        },
        forks,
        pulls,
        issues,
    };
    let mut out = serde_json::to_string_pretty(&file).expect("snapshot serialization is infallible");
    out.push('\n');
    out
}

pub fn from_json(text: &str, path: &Path) -> Result<RepoSnapshot, SnapshotError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: SnapshotFile = serde_path_to_error::deserialize(de).map_err(|e| SnapshotError::Parse {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(SnapshotError::UnsupportedVersion(file.format_version));
    }
    RepoSnapshot::new(
        RepoMeta {
            repo: file.repo,
            parent_pushed_at: file.meta.parent_pushed_at,
            fetched_at: file.meta.fetched_at,
            created_at: file.meta.created_at,
            flags: file.meta.flags,
            stargazers: file.meta.stargazers,
            fork_count: file.meta.fork_count,
        },
        file.forks,
        file.pulls,
        file.issues,
    )
}

/// Writes `snapshot` to `path`, replacing any existing file.
pub fn save_snapshot(snapshot: &RepoSnapshot, path: &Path) -> Result<(), SnapshotError> {
    let io_err = |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, to_json(snapshot)).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn load_snapshot(path: &Path) -> Result<RepoSnapshot, SnapshotError> {
    let text = fs::read_to_string(path).map_err(|source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{IssueKind, Priority};
    use chrono::{TimeZone, Utc};

    fn t(day: u32) -> Timestamp {
        Utc.with_ymd_and_hms(2023, 3, day, 12, 0, 0).unwrap()
    }

    fn three_fork_snapshot() -> RepoSnapshot {
        let fork = |n: &str, c, p| ForkRecord {
            full_name: format!("{n}/widget"),
            owner: n.into(),
            created_at: t(c),
            pushed_at: t(p),
            description: None,
        };
        RepoSnapshot::new(
            RepoMeta {
                repo: RepoRef::new("acme", "widget").unwrap(),
                parent_pushed_at: t(28),
                fetched_at: t(28),
                created_at: t(1),
                flags: RepoFlags {
                    has_issues: true,
                    ..Default::default()
                },
                stargazers: 3,
                fork_count: 3,
            },
            vec![fork("c", 2, 1), fork("a", 3, 9), fork("b", 4, 27)],
            vec![PullRecord {
                number: 7,
                author: "a".into(),
                head_repo_full_name: Some("a/widget".into()),
                created_at: t(5),
                closed_at: Some(t(6)),
                merged_at: Some(t(6)),
            }],
            vec![IssueRecord {
                number: 2,
                created_at: t(2),
                closed_at: None,
                labels: vec!["bug".into()],
                priority: Priority::Unspecified,
                kind: IssueKind::Bug,
            }],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_three_forks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = three_fork_snapshot();
        save_snapshot(&s, &path).unwrap();
        assert_eq!(load_snapshot(&path).unwrap(), s);
        let first = fs::read(&path).unwrap();
        save_snapshot(&s, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn empty_lists_are_valid() {
        let mut s = three_fork_snapshot();
        s.forks.clear();
        s.pulls.clear();
        s.issues.clear();
        let back = from_json(&to_json(&s), Path::new("x")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn parse_error_names_field() {
        let s = three_fork_snapshot();
        let text = to_json(&s).replace("\"stargazers\": 3", "\"stargazers\": \"many\"");
        match from_json(&text, Path::new("x.json")) {
            Err(SnapshotError::Parse { field, .. }) => assert_eq!(field, "meta.stargazers"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn merged_without_closed_is_validation_error() {
        let s = three_fork_snapshot();
        let text = to_json(&s).replace("\"closed_at\": \"2023-03-06T12:00:00Z\"", "\"closed_at\": null");
        match from_json(&text, Path::new("x.json")) {
            Err(SnapshotError::Validation { field, .. }) => {
                assert_eq!(field, "pulls[0].closed_at")
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn top_level_layout() {
        let v: serde_json::Value = serde_json::from_str(&to_json(&three_fork_snapshot())).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for k in ["format_version", "repo", "meta", "forks", "pulls", "issues"] {
            assert!(keys.contains(&k), "missing {k}");
        }
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["forks"][0]["full_name"], "a/widget");
    }

    #[test]
    fn unsupported_version() {
        let text = to_json(&three_fork_snapshot()).replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            from_json(&text, Path::new("x")),
            Err(SnapshotError::UnsupportedVersion(2))
        ));
    }
}
