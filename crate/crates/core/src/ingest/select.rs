use chrono::{Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::snapshot::{timestamp, RepoRef, Timestamp};

/// Repository metadata as returned by GitHub search or repository
/// endpoints. Fields are optional so incomplete records can be reported
/// rather than rejected wholesale.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RepoCandidate {
    pub full_name: String,
    #[serde(default)]
    pub stargazers_count: Option<u64>,
    #[serde(default, with = "timestamp::option")]
    pub pushed_at: Option<Timestamp>,
    #[serde(default, with = "timestamp::option")]
    pub created_at: Option<Timestamp>,
    #[serde(default)]
    pub has_issues: Option<bool>,
    #[serde(default)]
    pub has_downloads: Option<bool>,
    #[serde(default)]
    pub forks_count: Option<u64>,
    #[serde(default)]
    pub archived: Option<bool>,
    #[serde(default)]
    pub is_template: Option<bool>,
    #[serde(default)]
    pub fork: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionCriteria {
    /// Inclusive lower bound on stargazers.
    pub min_stars: u64,
    pub require_pushed_in_year: Option<i32>,
    pub require_has_issues: bool,
    pub require_has_downloads: bool,
    /// Inclusive lower bound on forks; at least 1.
    pub min_forks: u64,
    #[serde(with = "timestamp::option")]
    pub created_before: Option<Timestamp>,
    pub exclude_archived: bool,
    pub exclude_template: bool,
    pub exclude_fork: bool,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        SelectionCriteria::study()
    }
}

impl SelectionCriteria {
    /// Default preset for popular, maintained repositories: over
    /// 50,000 stars, pushed in 2024, has issues and downloads, forked at
    /// least once, created before 2024, not archived, a template, or a fork.
    pub fn study() -> Self {
        SelectionCriteria {
            min_stars: 50_000,
            require_pushed_in_year: Some(2024),
            require_has_issues: true,
            require_has_downloads: true,
            min_forks: 1,
            created_before: Some(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()),
            exclude_archived: true,
            exclude_template: true,
            exclude_fork: true,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.min_forks == 0 {
            return Err("min_forks must be positive".into());
        }
        Ok(())
    }
}

/// Manual population shaping: owner allow list and owner/repository deny
/// lists. Matching is case-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionLists {
    /// When non-empty, only these owners are considered.
    pub allow_owners: Vec<String>,
    pub deny_owners: Vec<String>,
    /// `owner/name` entries.
    pub deny_repos: Vec<String>,
}

impl SelectionLists {
    fn admits(&self, repo: &RepoRef) -> bool {
        let eq = |a: &String, b: &str| a.eq_ignore_ascii_case(b);
        let full = repo.full_name();
        (self.allow_owners.is_empty() || self.allow_owners.iter().any(|o| eq(o, &repo.owner)))
            && !self.deny_owners.iter().any(|o| eq(o, &repo.owner))
            && !self.deny_repos.iter().any(|r| eq(r, &full))
    }
}

enum Verdict {
    Pass(u64),
    Fail,
    Missing(&'static str),
}

fn judge(c: &RepoCandidate, k: &SelectionCriteria) -> Verdict {
    macro_rules! need {
        ($field:ident) => {
            match c.$field {
                Some(v) => v,
                None => return Verdict::Missing(stringify!($field)),
            }
        };
    }
    let stars = need!(stargazers_count);
    let mut ok = stars >= k.min_stars;
    if let Some(year) = k.require_pushed_in_year {
        ok &= need!(pushed_at).year() == year;
    }
    if k.require_has_issues {
        ok &= need!(has_issues);
    }
    if k.require_has_downloads {
        ok &= need!(has_downloads);
    }
    ok &= need!(forks_count) >= k.min_forks;
    if let Some(before) = k.created_before {
        ok &= need!(created_at) < before;
    }
    if k.exclude_archived {
        ok &= !need!(archived);
    }
    if k.exclude_template {
        ok &= !need!(is_template);
    }
    if k.exclude_fork {
        ok &= !need!(fork);
    }
    if ok {
        Verdict::Pass(stars)
    } else {
        Verdict::Fail
    }
}

/// Candidates passing every inclusion rule and no exclusion rule, by
/// stargazers descending (ties by name). Candidates missing a field a rule
/// needs are skipped with a warning.
pub fn select_repositories(
    candidates: &[RepoCandidate],
    criteria: &SelectionCriteria,
    lists: &SelectionLists,
) -> Vec<RepoRef> {
    let mut passed: Vec<(u64, RepoRef)> = Vec::new();
    for c in candidates {
        let repo = match c.full_name.parse::<RepoRef>() {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping candidate {:?}: {e}", c.full_name);
                continue;
            }
        };
        if !lists.admits(&repo) {
            continue;
        }
        match judge(c, criteria) {
            Verdict::Pass(stars) => passed.push((stars, repo)),
            Verdict::Fail => {}
            Verdict::Missing(field) => {
                log::warn!("skipping candidate {repo}: missing `{field}`");
            }
        }
    }
    passed.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    passed.into_iter().map(|(_, r)| r).collect()
}
