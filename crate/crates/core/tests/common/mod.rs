//! Fixture builders and brute-force reference implementations shared by the
//! integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use waste_radar::ingest::fixture_file_name;
use waste_radar::snapshot::{
    ForkRecord, IssueKind, IssueRecord, Priority, PullRecord, RepoFlags, RepoMeta, RepoRef, RepoSnapshot,
    Timestamp,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ts(y: i32, m: u32, d: u32) -> Timestamp {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).unwrap()
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn meta(repo: &str, parent_pushed_at: Timestamp, fetched_at: Timestamp) -> RepoMeta {
    RepoMeta {
        repo: repo.parse().unwrap(),
        parent_pushed_at,
        fetched_at,
        created_at: ts(2011, 7, 29),
        flags: RepoFlags {
            has_issues: true,
            has_downloads: true,
            ..RepoFlags::default()
        },
        stargazers: 60_000,
        fork_count: 0,
    }
}

pub fn fork(name: &str, created_at: Timestamp, pushed_at: Timestamp) -> ForkRecord {
    ForkRecord {
        full_name: name.to_string(),
        owner: name.split('/').next().unwrap().to_string(),
        created_at,
        pushed_at,
        description: None,
    }
}

pub fn issue(
    number: u64,
    priority: Priority,
    kind: IssueKind,
    created_at: Timestamp,
    closed_at: Option<Timestamp>,
) -> IssueRecord {
    IssueRecord {
        number,
        created_at,
        closed_at,
        labels: vec![],
        priority,
        kind,
    }
}

// ---------------------------------------------------------------------------
// Oracles

/// Ordered-pair inversion counts `(high_low, high_medium, medium_low)` and
/// the number of closed issues, by enumerating every pair.
pub fn bi_brute(issues: &[IssueRecord]) -> ([u64; 3], u64) {
    let mut counts = [0u64; 3];
    for a in issues {
        for b in issues {
            let Some(b_closed) = b.closed_at else { continue };
            let still_open = match a.closed_at {
                None => true,
                Some(c) => c > b_closed,
            };
            if a.created_at < b.created_at && still_open {
                let slot = match (a.priority, b.priority) {
                    (Priority::High, Priority::Low) => Some(0),
                    (Priority::High, Priority::Medium) => Some(1),
                    (Priority::Medium, Priority::Low) => Some(2),
                    _ => None,
                };
                if let Some(s) = slot {
                    counts[s] += 1;
                }
            }
        }
    }
    let closed = issues.iter().filter(|i| i.closed_at.is_some()).count() as u64;
    (counts, closed)
}

fn direct_sse(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// Best threshold split of `values` by exhaustive search with direct
/// sum-of-squares evaluation. Returns the sorted values and the size of
/// the lower part; near-ties (relative `tie`) keep the lower threshold.
pub fn best_split(values: &[f64], tie: f64) -> (Vec<f64>, usize) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut best: Option<(usize, f64)> = None;
    for k in 1..n {
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let sse = direct_sse(&sorted[..k]) + direct_sse(&sorted[k..]);
        match best {
            Some((_, b)) if sse >= b - tie * b.abs() => {}
            _ => best = Some((k, sse)),
        }
    }
    (sorted, best.map_or(n, |(k, _)| k))
}

/// Within-cluster sum of squares of a labelled partition.
pub fn partition_sse(values: &[f64], labels: &[u8]) -> f64 {
    let part = |l| {
        values
            .iter()
            .zip(labels)
            .filter(|(_, &x)| x == l)
            .map(|(v, _)| *v)
            .collect::<Vec<_>>()
    };
    direct_sse(&part(0)) + direct_sse(&part(1))
}

/// Per-window `(inflow, spillover, outflow)` for one kind, straight from
/// the definitions.
pub fn flow_brute(
    issues: &[IssueRecord],
    kind: IssueKind,
    anchor: Timestamp,
    sprint_days: u32,
    sprints: u32,
) -> Vec<(u64, u64, u64)> {
    let len = Duration::days(sprint_days as i64);
    (0..sprints)
        .map(|idx| {
            let start = anchor - len * (sprints - idx) as i32;
            let end = start + len;
            let prev = start - len;
            let of_kind = issues.iter().filter(|i| i.kind == kind);
            let inflow = of_kind
                .clone()
                .filter(|i| i.created_at >= start && i.created_at < end)
                .count();
            let spill = of_kind
                .clone()
                .filter(|i| i.created_at >= prev && i.created_at < start)
                .filter(|i| i.closed_at.is_none_or(|c| c >= start))
                .count();
            let out = of_kind
                .filter(|i| i.closed_at.is_some_and(|c| c >= start && c < end))
                .count();
            (inflow as u64, spill as u64, out as u64)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random fixtures

pub const PRIORITIES: [Priority; 4] = [
    Priority::High,
    Priority::Medium,
    Priority::Low,
    Priority::Unspecified,
];
pub const KINDS: [IssueKind; 3] = [IssueKind::Bug, IssueKind::Feature, IssueKind::Other];

/// Issues with coarse (hour-granular) timestamps so that equal creation and
/// closure instants occur often.
pub fn random_issues(rng: &mut impl Rng, n: usize) -> Vec<IssueRecord> {
    let base = ts(2023, 1, 1);
    let span_hours = rng.random_range(24..24 * 400);
    (0..n)
        .map(|i| {
            let created = base + Duration::hours(rng.random_range(0..span_hours));
            let closed = if rng.random_bool(0.7) {
                Some(created + Duration::hours(rng.random_range(0..24 * 200)))
            } else {
                None
            };
            issue(
                i as u64 + 1,
                PRIORITIES[rng.random_range(0..4)],
                KINDS[rng.random_range(0..3)],
                created,
                closed,
            )
        })
        .collect()
}

const PRIORITY_LABELS: [&str; 4] = [
    "priority: high",
    "priority: medium",
    "priority: low",
    "needs triage",
];
const KIND_LABELS: [&str; 3] = ["bug", "enhancement", "question"];

/// A mid-sized repository with labelled issues, random fork activity and
/// pull requests, some of them from forks.
pub fn corpus_snapshot(
    repo: &str,
    seed: u64,
    n_forks: usize,
    n_pulls: usize,
    n_issues: usize,
) -> RepoSnapshot {
    let mut rng = rng(seed);
    let parent = ts(2024, 4, 28) + Duration::hours(rng.random_range(0..48));
    let forks: Vec<ForkRecord> = (0..n_forks)
        .map(|i| {
            let created = ts(2015, 1, 1) + Duration::hours(rng.random_range(0..24 * 3_300));
            let pushed = if rng.random_bool(0.6) {
                created - Duration::hours(rng.random_range(1..24 * 30))
            } else {
                let latest = (parent - created).num_hours().max(2);
                created + Duration::hours(rng.random_range(1..latest))
            };
            fork(
                &format!("user{i}/{}", repo.split('/').nth(1).unwrap()),
                created,
                pushed,
            )
        })
        .collect();
    let pulls = (0..n_pulls)
        .map(|i| {
            let created = ts(2022, 1, 1) + Duration::hours(rng.random_range(0..24 * 800));
            let closed =
                (rng.random_bool(0.9)).then(|| created + Duration::hours(rng.random_range(1..24 * 60)));
            let from_fork = !forks.is_empty() && rng.random_bool(0.3);
            let author = if from_fork {
                forks[rng.random_range(0..forks.len())].owner.clone()
            } else {
                format!("dev{i}")
            };
            let head = match rng.random_range(0..10) {
                0 => None,
                _ if from_fork => Some(format!("{author}/{}", repo.split('/').nth(1).unwrap())),
                _ => Some(format!("{author}/scratch")),
            };
            PullRecord {
                number: i as u64 + 1,
                author,
                head_repo_full_name: head,
                created_at: created,
                closed_at: closed,
                merged_at: closed.filter(|_| rng.random_bool(0.6)),
            }
        })
        .collect();
    let mapping = waste_radar::snapshot::LabelMapping::default();
    let issues = (0..n_issues)
        .map(|i| {
            let created = ts(2021, 11, 1) + Duration::minutes(rng.random_range(0..60 * 24 * 900));
            let closed = rng
                .random_bool(0.75)
                .then(|| created + Duration::minutes(rng.random_range(0..60 * 24 * 240)))
                .filter(|c| *c < ts(2024, 5, 1));
            let mut labels = vec![KIND_LABELS[rng.random_range(0..3)].to_string()];
            if rng.random_bool(0.8) {
                labels.push(PRIORITY_LABELS[rng.random_range(0..4)].to_string());
            }
            IssueRecord::classified(i as u64 + 1, created, closed, labels, &mapping)
        })
        .collect();
    RepoSnapshot::new(meta(repo, parent, ts(2024, 5, 2)), forks, pulls, issues).unwrap()
}

// ---------------------------------------------------------------------------
// Large synthetic repository

pub struct R0Shape {
    pub contributing: u64,
    pub independent: u64,
    pub backup: u64,
    pub potentially_stale: u64,
    pub stale: u64,
    pub merged: u64,
    pub unmerged: u64,
}

/// Fork, pull request and issue counts of the largest studied repository.
/// The active forks are the contributing plus independent ones.
pub const R0: R0Shape = R0Shape {
    contributing: 23,
    independent: 1_605,
    backup: 140_671,
    potentially_stale: 2_440,
    stale: 3_157,
    merged: 8_712,
    unmerged: 6_302,
};

/// Synthetic snapshot with the given shape. Inactive forks fall in two
/// well separated push-gap groups so that two-cluster k-means recovers the
/// intended potentially stale / stale split. No backlog inversions occur.
pub fn shaped_snapshot(repo: &str, s: &R0Shape, seed: u64) -> RepoSnapshot {
    let mut rng = rng(seed);
    let parent = ts(2024, 4, 30);
    let mut forks = Vec::new();
    let mut push = |prefix: &str, n: u64, gap: &mut dyn FnMut(&mut ChaCha8Rng) -> Duration, backup: bool| {
        for i in 0..n {
            let pushed = parent - gap(&mut rng);
            let created = if backup {
                pushed + Duration::seconds(rng.random_range(1..86_400 * 30))
            } else {
                pushed - Duration::days(rng.random_range(1..2_000))
            };
            forks.push(fork(&format!("{prefix}{i}/fork"), created, pushed));
        }
    };
    let mut active_gap = |r: &mut ChaCha8Rng| Duration::seconds(r.random_range(-86_400..86_400 * 89));
    push("con", s.contributing, &mut active_gap, false);
    push("ind", s.independent, &mut active_gap, false);
    push(
        "bak",
        s.backup,
        &mut |r| Duration::days(r.random_range(0..4_000)),
        true,
    );
    push(
        "pst",
        s.potentially_stale,
        &mut |r| Duration::days(r.random_range(100..400)),
        false,
    );
    push(
        "stl",
        s.stale,
        &mut |r| Duration::days(r.random_range(2_000..2_400)),
        false,
    );

    let mut pulls = Vec::new();
    for i in 0..(s.merged + s.unmerged) {
        let created = ts(2015, 1, 1) + Duration::hours(i as i64);
        let closed = created + Duration::hours(rng.random_range(1..500));
        let head = if i < s.contributing {
            format!("con{i}/fork")
        } else {
            format!("outside{i}/elsewhere")
        };
        pulls.push(PullRecord {
            number: i + 1,
            author: format!("author{i}"),
            head_repo_full_name: Some(head),
            created_at: created,
            closed_at: Some(closed),
            merged_at: (i < s.merged).then_some(closed),
        });
    }

    // Issues are closed in creation order, so no inversion can occur.
    let issues = (0..200u64)
        .map(|i| {
            let created = ts(2023, 1, 1) + Duration::days(i as i64);
            issue(
                i + 1,
                PRIORITIES[(i % 3) as usize],
                KINDS[(i % 2) as usize],
                created,
                Some(created + Duration::hours(1)),
            )
        })
        .collect();

    RepoSnapshot::new(meta(repo, parent, ts(2024, 5, 2)), forks, pulls, issues).unwrap()
}

// ---------------------------------------------------------------------------
// Recorded HTTP fixtures

/// Writes `body` as the recorded response for `path_and_query`.
pub fn record(dir: &Path, path_and_query: &str, status: u16, headers: Value, body: Value) {
    let file = dir.join(fixture_file_name(path_and_query));
    let doc = json!({ "status": status, "headers": headers, "body": body });
    std::fs::write(file, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

/// Writes a sequence of responses replayed in order for one request.
pub fn record_sequence(dir: &Path, path_and_query: &str, responses: Vec<(u16, Value, Value)>) {
    let file = dir.join(fixture_file_name(path_and_query));
    let docs: Vec<Value> = responses
        .into_iter()
        .map(|(s, h, b)| json!({ "status": s, "headers": h, "body": b }))
        .collect();
    std::fs::write(file, serde_json::to_string_pretty(&docs).unwrap()).unwrap();
}

pub fn repo_json(full_name: &str) -> Value {
    json!({
        "full_name": full_name,
        "created_at": "2011-07-29T21:19:00Z",
        "pushed_at": "2024-04-30T12:00:00Z",
        "archived": false,
        "is_template": false,
        "fork": false,
        "has_issues": true,
        "has_downloads": true,
        "stargazers_count": 60000,
        "forks_count": 0
    })
}

pub fn fork_json(i: usize) -> Value {
    json!({
        "full_name": format!("user{i}/repo"),
        "owner": { "login": format!("user{i}") },
        "created_at": "2020-01-01T00:00:00Z",
        "pushed_at": format!("2024-0{}-01T00:00:00Z", 1 + i % 4),
        "description": null
    })
}

pub fn pull_json(number: usize, merged: bool) -> Value {
    let created = ts(2023, 1, 1) + Duration::hours(number as i64);
    let closed = created + Duration::hours(3);
    let f = |t: Timestamp| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    json!({
        "number": number,
        "user": { "login": format!("dev{number}") },
        "head": { "repo": { "full_name": format!("dev{number}/repo") } },
        "created_at": f(created),
        "closed_at": f(closed),
        "merged_at": if merged { json!(f(closed)) } else { Value::Null }
    })
}

pub fn issue_json(number: usize, is_pull: bool, labels: &[&str]) -> Value {
    let created = ts(2023, 6, 1) + Duration::hours(number as i64);
    let mut v = json!({
        "number": number,
        "created_at": created.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "closed_at": null,
        "labels": labels.iter().map(|l| json!({ "name": l })).collect::<Vec<_>>()
    });
    if is_pull {
        v["pull_request"] = json!({ "url": "https://api.github.com/x" });
    }
    v
}

/// `Link` header for page `page` of `last`.
pub fn link(path: &str, page: u32, last: u32) -> Value {
    let url = |p: u32| {
        let sep = if path.contains('?') { '&' } else { '?' };
        format!("<https://api.github.com{path}{sep}per_page=100&page={p}>")
    };
    let mut parts = Vec::new();
    if page < last {
        parts.push(format!("{}; rel=\"next\"", url(page + 1)));
        parts.push(format!("{}; rel=\"last\"", url(last)));
    }
    if page > 1 {
        parts.push(format!("{}; rel=\"prev\"", url(page - 1)));
        parts.push(format!("{}; rel=\"first\"", url(1)));
    }
    if parts.is_empty() {
        json!({})
    } else {
        json!({ "link": parts.join(", ") })
    }
}

/// Records a listing of `items` split into pages of 100.
pub fn record_listing(dir: &Path, path: &str, items: &[Value]) {
    let pages: Vec<&[Value]> = if items.is_empty() {
        vec![&[]]
    } else {
        items.chunks(100).collect()
    };
    let last = pages.len() as u32;
    let sep = if path.contains('?') { '&' } else { '?' };
    for (i, chunk) in pages.iter().enumerate() {
        let page = i as u32 + 1;
        record(
            dir,
            &format!("{path}{sep}per_page=100&page={page}"),
            200,
            link(path, page, last),
            Value::Array(chunk.to_vec()),
        );
    }
}

/// A complete recorded repository: `forks` forks, closed pulls (`merged`
/// of them merged) and issues interleaved with pull request items.
pub fn record_repo(
    dir: &Path,
    repo: &RepoRef,
    forks: usize,
    pulls: usize,
    merged: usize,
    issues: usize,
    pr_items: usize,
) {
    let base = format!("/repos/{}/{}", repo.owner, repo.name);
    record(dir, &base, 200, json!({}), repo_json(&repo.full_name()));
    let f: Vec<Value> = (0..forks).map(fork_json).collect();
    record_listing(dir, &format!("{base}/forks?sort=oldest"), &f);
    // Newest first, like the API.
    let p: Vec<Value> = (1..=pulls).rev().map(|n| pull_json(n, n <= merged)).collect();
    record_listing(
        dir,
        &format!("{base}/pulls?state=closed&sort=created&direction=desc"),
        &p,
    );
    // Pull request items spread evenly among the issues, newest first.
    let total = issues + pr_items;
    let items: Vec<Value> = (0..total)
        .map(|j| {
            let is_pull = j * pr_items / total != (j + 1) * pr_items / total;
            issue_json(total - j, is_pull, &["bug", "high"])
        })
        .collect();
    record_listing(
        dir,
        &format!("{base}/issues?state=all&sort=created&direction=desc"),
        &items,
    );
}
