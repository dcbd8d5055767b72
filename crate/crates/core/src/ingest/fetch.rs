use std::collections::HashSet;

use chrono::Utc;
use serde::Deserialize;
use serde_json::Value;

use super::client::GithubClient;
use super::IngestError;
use crate::snapshot::{
    timestamp, ForkRecord, IssueRecord, LabelMapping, PullRecord, RepoFlags, RepoMeta, RepoRef, RepoSnapshot,
    Timestamp,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FetchLimits {
    pub max_forks: Option<usize>,
    pub max_pulls: Option<usize>,
    pub max_issues: Option<usize>,
}

#[derive(Deserialize)]
struct Account {
    login: String,
}

#[derive(Deserialize)]
struct RepoObject {
    #[serde(default)]
    full_name: Option<String>,
    #[serde(with = "timestamp")]
    created_at: Timestamp,
    #[serde(with = "timestamp")]
    pushed_at: Timestamp,
    #[serde(default)]
    archived: bool,
    #[serde(default)]
    is_template: bool,
    #[serde(default)]
    fork: bool,
    #[serde(default)]
    has_issues: bool,
    #[serde(default)]
    has_downloads: bool,
    #[serde(default)]
    stargazers_count: u64,
    #[serde(default)]
    forks_count: u64,
}

#[derive(Deserialize)]
struct ForkObject {
    full_name: String,
    owner: Option<Account>,
    #[serde(default, with = "timestamp::option")]
    created_at: Option<Timestamp>,
    #[serde(default, with = "timestamp::option")]
    pushed_at: Option<Timestamp>,
    #[serde(default)]
    description: Option<String>,
}

#[derive(Deserialize)]
struct HeadRef {
    repo: Option<HeadRepo>,
}

#[derive(Deserialize)]
struct HeadRepo {
    full_name: String,
}

#[derive(Deserialize)]
struct PullObject {
    number: u64,
    user: Option<Account>,
    head: Option<HeadRef>,
    #[serde(with = "timestamp")]
    created_at: Timestamp,
    #[serde(default, with = "timestamp::option")]
    closed_at: Option<Timestamp>,
    #[serde(default, with = "timestamp::option")]
    merged_at: Option<Timestamp>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Label {
    Object { name: String },
    Name(String),
}

#[derive(Deserialize)]
struct IssueObject {
    number: u64,
    #[serde(with = "timestamp")]
    created_at: Timestamp,
    #[serde(default, with = "timestamp::option")]
    closed_at: Option<Timestamp>,
    #[serde(default)]
    labels: Vec<Label>,
}

fn decode<T: serde::de::DeserializeOwned>(path: &str, v: Value) -> Result<T, IngestError> {
    serde_json::from_value(v).map_err(|e| IngestError::Decode {
        path: path.to_string(),
        message: e.to_string(),
    })
}

/// GitHub lists pull requests among issues; those items carry a
/// `pull_request` key.
pub fn is_pull_request_item(item: &Value) -> bool {
    item.get("pull_request").is_some_and(|v| !v.is_null())
}

/// Captures `repo` into a snapshot: the repository object, its direct forks,
/// closed pull requests and all issues (pull requests removed).
pub fn fetch_repo_snapshot(
    client: &GithubClient,
    repo: &RepoRef,
    limits: FetchLimits,
    mapping: &LabelMapping,
) -> Result<RepoSnapshot, IngestError> {
    let base = format!("/repos/{}/{}", repo.owner, repo.name);
    let repo_obj: RepoObject = match client.get_json(&base) {
        Ok(v) => decode(&base, v)?,
        Err(IngestError::NotFound(_)) => return Err(IngestError::UnknownRepo(repo.clone())),
        Err(e) => return Err(e),
    };
    if let Some(name) = &repo_obj.full_name {
        if !name.eq_ignore_ascii_case(&repo.full_name()) {
            log::info!("{repo} resolves to {name}");
        }
    }

    let forks_path = format!("{base}/forks?sort=oldest");
    let mut forks = Vec::new();
    let mut seen = HashSet::new();
    for item in client.paginate(&forks_path, limits.max_forks)? {
        let f: ForkObject = decode(&forks_path, item)?;
        let (Some(created_at), Some(pushed_at)) = (f.created_at, f.pushed_at) else {
            log::warn!(
                "{repo}: skipping fork {} without created_at/pushed_at",
                f.full_name
            );
            continue;
        };
        if !seen.insert(f.full_name.clone()) {
            continue;
        }
        let owner = match f.owner {
            Some(a) => a.login,
            None => f.full_name.split('/').next().unwrap_or_default().to_string(),
        };
        forks.push(ForkRecord {
            full_name: f.full_name,
            owner,
            created_at,
            pushed_at,
            description: f.description.filter(|d| !d.is_empty()),
        });
    }

    let pulls_path = format!("{base}/pulls?state=closed&sort=created&direction=desc");
    let mut pulls = Vec::new();
    let mut seen = HashSet::new();
    for item in client.paginate(&pulls_path, limits.max_pulls)? {
        let p: PullObject = decode(&pulls_path, item)?;
        if !seen.insert(p.number) {
            continue;
        }
        // A merge implies a close no earlier than the merge.
        let closed_at = match (p.closed_at, p.merged_at) {
            (Some(c), Some(m)) => Some(c.max(m)),
            (c, m) => c.or(m),
        };
        pulls.push(PullRecord {
            number: p.number,
            author: p.user.map_or_else(|| "ghost".to_string(), |u| u.login),
            head_repo_full_name: p.head.and_then(|h| h.repo).map(|r| r.full_name),
            created_at: p.created_at,
            closed_at,
            merged_at: p.merged_at,
        });
    }
    newest_first(&mut pulls, |p| (p.created_at, p.number));
    if let Some(n) = limits.max_pulls {
        pulls.truncate(n);
    }

    let issues_path = format!("{base}/issues?state=all&sort=created&direction=desc");
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    // Pull requests are filtered out page by page, so keep paging until
    // enough real issues are collected.
    let raw = match limits.max_issues {
        None => client.paginate(&issues_path, None)?,
        Some(wanted) => {
            let mut raw = Vec::new();
            let mut real = 0;
            let mut page = 1;
            loop {
                let p = client.page(&issues_path, page)?;
                real += p.items.iter().filter(|i| !is_pull_request_item(i)).count();
                let done = p.items.is_empty() || real >= wanted;
                raw.extend(p.items);
                match p.next {
                    Some(n) if !done => page = n,
                    _ => break,
                }
            }
            raw
        }
    };
    for item in raw {
        if is_pull_request_item(&item) {
            continue;
        }
        let i: IssueObject = decode(&issues_path, item)?;
        if !seen.insert(i.number) {
            continue;
        }
        let labels = i
            .labels
            .into_iter()
            .map(|l| match l {
                Label::Object { name } | Label::Name(name) => name,
            })
            .collect();
        issues.push(IssueRecord::classified(
            i.number,
            i.created_at,
            i.closed_at,
            labels,
            mapping,
        ));
    }
    newest_first(&mut issues, |i| (i.created_at, i.number));
    if let Some(n) = limits.max_issues {
        issues.truncate(n);
    }

    let meta = RepoMeta {
        repo: repo.clone(),
        parent_pushed_at: repo_obj.pushed_at,
        fetched_at: Utc::now().max(repo_obj.created_at),
        created_at: repo_obj.created_at,
        flags: RepoFlags {
            archived: repo_obj.archived,
            is_template: repo_obj.is_template,
            is_fork: repo_obj.fork,
            has_issues: repo_obj.has_issues,
            has_downloads: repo_obj.has_downloads,
        },
        stargazers: repo_obj.stargazers_count,
        fork_count: repo_obj.forks_count,
    };
    Ok(RepoSnapshot::new(meta, forks, pulls, issues)?)
}

fn newest_first<T, K: Ord>(items: &mut [T], key: impl Fn(&T) -> K) {
    items.sort_by_key(|x| std::cmp::Reverse(key(x)));
}
