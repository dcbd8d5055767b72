//! Repository metadata model and the snapshot file format.
//!
//! A [`RepoSnapshot`] is an immutable capture of one repository's forks,
//! closed pull requests and issues. Lists are kept sorted by identifier so
//! serialized snapshots are byte-stable.

mod io;
mod labels;
pub mod timestamp;

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use io::{from_json, load_snapshot, save_snapshot, snapshot_file_name, to_json, FORMAT_VERSION};
pub use labels::{classify_issue, IssueKind, KindRule, LabelMapping, Priority, PriorityRule};

pub type Timestamp = DateTime<Utc>;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed snapshot at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("unsupported snapshot format_version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SnapshotError {
    SnapshotError::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RepoRef {
    pub owner: String,
    pub name: String,
}

impl RepoRef {
    pub fn new(owner: impl Into<String>, name: impl Into<String>) -> Result<Self, SnapshotError> {
        let r = RepoRef {
            owner: owner.into(),
            name: name.into(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), SnapshotError> {
        for (field, v) in [("repo.owner", &self.owner), ("repo.name", &self.name)] {
            if v.is_empty() {
                return Err(invalid(field, "must not be empty"));
            }
            if v.contains('/') {
                return Err(invalid(field, "must not contain '/'"));
            }
        }
        Ok(())
    }

    pub fn full_name(&self) -> String {
        format!("{}/{}", self.owner, self.name)
    }
}

impl fmt::Display for RepoRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.owner, self.name)
    }
}

impl FromStr for RepoRef {
    type Err = SnapshotError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('/') {
            Some((owner, name)) => RepoRef::new(owner, name),
            None => Err(invalid("repo", format!("expected owner/name, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoFlags {
    pub archived: bool,
    pub is_template: bool,
    pub is_fork: bool,
    pub has_issues: bool,
    pub has_downloads: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForkRecord {
    pub full_name: String,
    pub owner: String,
    #[serde(with = "timestamp")]
    pub created_at: Timestamp,
    #[serde(with = "timestamp")]
    pub pushed_at: Timestamp,
    /// Fork description, only used by the optional description-based
    /// comparison rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PullRecord {
    pub number: u64,
    pub author: String,
    /// Absent when the head fork has been deleted.
    pub head_repo_full_name: Option<String>,
    #[serde(with = "timestamp")]
    pub created_at: Timestamp,
    #[serde(with = "timestamp::option")]
    pub closed_at: Option<Timestamp>,
    #[serde(with = "timestamp::option")]
    pub merged_at: Option<Timestamp>,
}

impl PullRecord {
    pub fn is_closed(&self) -> bool {
        self.closed_at.is_some()
    }

    pub fn is_merged(&self) -> bool {
        self.merged_at.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub number: u64,
    #[serde(with = "timestamp")]
    pub created_at: Timestamp,
    #[serde(with = "timestamp::option")]
    pub closed_at: Option<Timestamp>,
    pub labels: Vec<String>,
    pub priority: Priority,
    pub kind: IssueKind,
}

impl IssueRecord {
    /// Builds an issue whose priority and kind come from `mapping`.
    pub fn classified(
        number: u64,
        created_at: Timestamp,
        closed_at: Option<Timestamp>,
        labels: Vec<String>,
        mapping: &LabelMapping,
    ) -> Self {
        let (priority, kind) = classify_issue(&labels, mapping);
        IssueRecord {
            number,
            created_at,
            closed_at,
            labels,
            priority,
            kind,
        }
    }

    /// Whether the issue is still open at instant `t`.
    pub fn is_open_at(&self, t: Timestamp) -> bool {
        self.created_at <= t && self.closed_at.is_none_or(|c| c > t)
    }
}

/// Immutable capture of one repository. Construct with [`RepoSnapshot::new`],
/// which validates every invariant and sorts the record lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoSnapshot {
    pub repo: RepoRef,
    pub parent_pushed_at: Timestamp,
    pub fetched_at: Timestamp,
    pub created_at: Timestamp,
    pub flags: RepoFlags,
    pub stargazers: u64,
    pub fork_count: u64,
    pub forks: Vec<ForkRecord>,
    pub pulls: Vec<PullRecord>,
    pub issues: Vec<IssueRecord>,
}

/// Repository-level fields of a snapshot, everything except the record lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoMeta {
    pub repo: RepoRef,
    pub parent_pushed_at: Timestamp,
    pub fetched_at: Timestamp,
    pub created_at: Timestamp,
    pub flags: RepoFlags,
    pub stargazers: u64,
    pub fork_count: u64,
}

impl RepoSnapshot {
    pub fn new(
        meta: RepoMeta,
        mut forks: Vec<ForkRecord>,
        mut pulls: Vec<PullRecord>,
        mut issues: Vec<IssueRecord>,
    ) -> Result<Self, SnapshotError> {
        forks.sort_by(|a, b| a.full_name.cmp(&b.full_name));
        pulls.sort_by_key(|p| p.number);
        issues.sort_by_key(|i| i.number);
        let s = RepoSnapshot {
            repo: meta.repo,
            parent_pushed_at: meta.parent_pushed_at,
            fetched_at: meta.fetched_at,
            created_at: meta.created_at,
            flags: meta.flags,
            stargazers: meta.stargazers,
            fork_count: meta.fork_count,
            forks,
            pulls,
            issues,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn meta(&self) -> RepoMeta {
        RepoMeta {
            repo: self.repo.clone(),
            parent_pushed_at: self.parent_pushed_at,
            fetched_at: self.fetched_at,
            created_at: self.created_at,
            flags: self.flags,
            stargazers: self.stargazers,
            fork_count: self.fork_count,
        }
    }

    /// Checks every snapshot invariant. Lists must already be sorted.
    pub fn validate(&self) -> Result<(), SnapshotError> {
        self.repo.validate()?;
        if self.fetched_at < self.created_at {
            return Err(invalid("meta.fetched_at", "precedes meta.created_at"));
        }

        let mut seen = HashSet::new();
        for (i, f) in self.forks.iter().enumerate() {
            let field = |name: &str| format!("forks[{i}].{name}");
            match f.full_name.split_once('/') {
                Some((o, n)) if !o.is_empty() && !n.is_empty() && !n.contains('/') => {}
                _ => return Err(invalid(field("full_name"), "expected owner/name")),
            }
            if f.owner.is_empty() {
                return Err(invalid(field("owner"), "must not be empty"));
            }
            if !seen.insert(f.full_name.as_str()) {
                return Err(invalid(
                    field("full_name"),
                    format!("duplicate fork {}", f.full_name),
                ));
            }
        }

        let mut seen = HashSet::new();
        for (i, p) in self.pulls.iter().enumerate() {
            let field = |name: &str| format!("pulls[{i}].{name}");
            if p.number == 0 {
                return Err(invalid(field("number"), "must be positive"));
            }
            if !seen.insert(p.number) {
                return Err(invalid(field("number"), format!("duplicate pull #{}", p.number)));
            }
            if let Some(merged) = p.merged_at {
                match p.closed_at {
                    None => {
                        return Err(invalid(
                            field("closed_at"),
                            format!("pull #{} has merged_at but no closed_at", p.number),
                        ))
                    }
                    Some(closed) if merged > closed => {
                        return Err(invalid(
                            field("merged_at"),
                            format!("pull #{} merged after it was closed", p.number),
                        ))
                    }
                    Some(_) => {}
                }
            }
        }

        let mut seen = HashSet::new();
        for (i, issue) in self.issues.iter().enumerate() {
            let field = |name: &str| format!("issues[{i}].{name}");
            if issue.number == 0 {
                return Err(invalid(field("number"), "must be positive"));
            }
            if !seen.insert(issue.number) {
                return Err(invalid(
                    field("number"),
                    format!("duplicate issue #{}", issue.number),
                ));
            }
            if let Some(closed) = issue.closed_at {
                if closed < issue.created_at {
                    return Err(invalid(
                        field("closed_at"),
                        format!("issue #{} closed before it was created", issue.number),
                    ));
                }
            }
        }

        let sorted = self.forks.windows(2).all(|w| w[0].full_name < w[1].full_name)
            && self.pulls.windows(2).all(|w| w[0].number < w[1].number)
            && self.issues.windows(2).all(|w| w[0].number < w[1].number);
        if !sorted {
            return Err(invalid(
                "forks/pulls/issues",
                "lists must be sorted by identifier",
            ));
        }
        Ok(())
    }

    /// Re-derives issue priority and kind from labels with `mapping`.
    pub fn reclassified(&self, mapping: &LabelMapping) -> RepoSnapshot {
        let mut s = self.clone();
        for issue in &mut s.issues {
            let (p, k) = classify_issue(&issue.labels, mapping);
            issue.priority = p;
            issue.kind = k;
        }
        s
    }
}
