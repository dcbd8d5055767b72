//! Fork classification (backup / active / potentially stale / stale) and the
//! contributing-vs-independent split behind the Project Diversification
//! Index.

pub mod kmeans;

use std::collections::{BTreeMap, HashSet};

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::numeric::Quotient;
use crate::par::{self, Execution};
use crate::snapshot::{ForkRecord, RepoSnapshot, Timestamp};

pub use kmeans::{kmeans_two, kmeans_two_with, KMeansError, KMeansResult};

pub const DEFAULT_ACTIVE_WINDOW_DAYS: u32 = 90;
pub const KMEANS_TOLERANCE_DAYS: f64 = 1e-6;
pub const KMEANS_MAX_ITER: u32 = 100;

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForkClass {
    Active,
    Backup,
    PotentiallyStale,
    Stale,
}

impl ForkClass {
    pub const ALL: [ForkClass; 4] = [
        ForkClass::Active,
        ForkClass::Backup,
        ForkClass::PotentiallyStale,
        ForkClass::Stale,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ForkClass::Active => "active",
            ForkClass::Backup => "backup",
            ForkClass::PotentiallyStale => "potentially_stale",
            ForkClass::Stale => "stale",
        }
    }
}

/// The fork was never pushed after it was created.
pub fn is_backup(fork: &ForkRecord) -> bool {
    fork.pushed_at < fork.created_at
}

/// The fork's last push is less than 90 days behind the parent's.
pub fn is_active(fork: &ForkRecord, parent_pushed_at: Timestamp) -> bool {
    is_active_within(fork, parent_pushed_at, DEFAULT_ACTIVE_WINDOW_DAYS)
}

pub fn is_active_within(fork: &ForkRecord, parent_pushed_at: Timestamp, window_days: u32) -> bool {
    parent_pushed_at - fork.pushed_at < Duration::days(window_days as i64)
}

/// Push gap `parent_pushed_at - fork.pushed_at` in fractional days.
pub fn gap_days(fork: &ForkRecord, parent_pushed_at: Timestamp) -> f64 {
    let gap = parent_pushed_at - fork.pushed_at;
    match gap.num_microseconds() {
        Some(us) => us as f64 / (SECONDS_PER_DAY * 1e6),
        None => gap.num_seconds() as f64 / SECONDS_PER_DAY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkDistribution {
    pub counts: BTreeMap<ForkClass, u64>,
    /// Per-class share of `total` in percent; absent when there are no forks.
    pub percentages: Option<BTreeMap<ForkClass, f64>>,
    pub total: u64,
}

impl ForkDistribution {
    pub fn from_counts(active: u64, backup: u64, potentially_stale: u64, stale: u64) -> Self {
        let counts: BTreeMap<ForkClass, u64> = [
            (ForkClass::Active, active),
            (ForkClass::Backup, backup),
            (ForkClass::PotentiallyStale, potentially_stale),
            (ForkClass::Stale, stale),
        ]
        .into_iter()
        .collect();
        let total = active + backup + potentially_stale + stale;
        let percentages = (total > 0).then(|| {
            counts
                .iter()
                .map(|(&c, &n)| (c, n as f64 * 100.0 / total as f64))
                .collect()
        });
        ForkDistribution {
            counts,
            percentages,
            total,
        }
    }

    pub fn count(&self, class: ForkClass) -> u64 {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    /// Share of `class` as an exact fraction of the total (multiply by 100
    /// for percent).
    pub fn share(&self, class: ForkClass) -> Quotient {
        Quotient::new(self.count(class), self.total)
    }

    /// Potentially stale plus stale forks as a fraction of the total.
    pub fn stale_share(&self) -> Quotient {
        Quotient::new(
            self.count(ForkClass::PotentiallyStale) + self.count(ForkClass::Stale),
            self.total,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkVerdict {
    pub full_name: String,
    pub class: ForkClass,
    pub gap_days: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkClassification {
    pub distribution: ForkDistribution,
    /// One verdict per fork, in snapshot order.
    pub forks: Vec<ForkVerdict>,
    /// Clustering of the inactive remainder, when it had at least two forks.
    pub clustering: Option<KMeansSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansSummary {
    pub centroids: [f64; 2],
    pub iterations: u32,
    pub converged: bool,
}

impl ForkClassification {
    pub fn class_map(&self) -> BTreeMap<&str, ForkClass> {
        self.forks
            .iter()
            .map(|v| (v.full_name.as_str(), v.class))
            .collect()
    }

    pub fn with_class(&self, class: ForkClass) -> impl Iterator<Item = &ForkVerdict> {
        self.forks.iter().filter(move |v| v.class == class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForkOptions {
    pub active_window_days: u32,
    pub kmeans_tol: f64,
    pub kmeans_max_iter: u32,
    pub execution: Execution,
}

impl Default for ForkOptions {
    fn default() -> Self {
        ForkOptions {
            active_window_days: DEFAULT_ACTIVE_WINDOW_DAYS,
            kmeans_tol: KMEANS_TOLERANCE_DAYS,
            kmeans_max_iter: KMEANS_MAX_ITER,
            execution: Execution::default(),
        }
    }
}

pub fn classify_forks(snapshot: &RepoSnapshot) -> ForkClassification {
    classify_forks_with(snapshot, &ForkOptions::default())
}

/// Partitions every fork: backups first, then active forks, then a
/// two-cluster split of the remaining push gaps (smaller centroid is
/// potentially stale).
pub fn classify_forks_with(snapshot: &RepoSnapshot, opts: &ForkOptions) -> ForkClassification {
    let parent = snapshot.parent_pushed_at;
    let first_pass: Vec<(Option<ForkClass>, f64)> = par::map(opts.execution, &snapshot.forks, |f| {
        let class = if is_backup(f) {
            Some(ForkClass::Backup)
        } else if is_active_within(f, parent, opts.active_window_days) {
            Some(ForkClass::Active)
        } else {
            None
        };
        (class, gap_days(f, parent))
    });

    let remainder: Vec<usize> = first_pass
        .iter()
        .enumerate()
        .filter_map(|(i, (c, _))| c.is_none().then_some(i))
        .collect();

    let mut classes: Vec<ForkClass> = first_pass
        .iter()
        .map(|(c, _)| c.unwrap_or(ForkClass::PotentiallyStale))
        .collect();

    let mut clustering = None;
    if remainder.len() >= 2 {
        let gaps: Vec<f64> = remainder.iter().map(|&i| first_pass[i].1).collect();
        let km = kmeans_two_with(&gaps, opts.kmeans_tol, opts.kmeans_max_iter, opts.execution)
            .expect("remainder gaps are non-empty and finite");
        for (&i, &cluster) in remainder.iter().zip(&km.assignments) {
            classes[i] = if cluster == 0 {
                ForkClass::PotentiallyStale
            } else {
                ForkClass::Stale
            };
        }
        clustering = Some(KMeansSummary {
            centroids: km.centroids,
            iterations: km.iterations,
            converged: km.converged,
        });
    }

    let mut counts = [0u64; 4];
    for c in &classes {
        counts[*c as usize] += 1;
    }
    let forks = snapshot
        .forks
        .iter()
        .zip(classes)
        .zip(first_pass)
        .map(|((f, class), (_, gap))| ForkVerdict {
            full_name: f.full_name.clone(),
            class,
            gap_days: gap,
        })
        .collect();

    ForkClassification {
        distribution: ForkDistribution::from_counts(counts[0], counts[1], counts[2], counts[3]),
        forks,
        clustering,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversificationReport {
    pub contributing: u64,
    pub independent: u64,
    /// `contributing / independent`; absent when there are no independent
    /// forks.
    pub pdi: Option<f64>,
}

impl DiversificationReport {
    pub fn from_counts(contributing: u64, independent: u64) -> Self {
        let pdi = Quotient::new(contributing, independent).value();
        DiversificationReport {
            contributing,
            independent,
            pdi,
        }
    }

    pub fn pdi_exact(&self) -> Quotient {
        Quotient::new(self.contributing, self.independent)
    }
}

/// Whether any pull request in `snapshot` links back to `fork`: its head
/// repository is the fork, or (head repository deleted) its author owns
/// the fork.
fn contributes(fork: &ForkRecord, heads: &HashSet<String>, orphan_authors: &HashSet<String>) -> bool {
    heads.contains(&fork.full_name.to_lowercase()) || orphan_authors.contains(&fork.owner.to_lowercase())
}

fn pull_links(snapshot: &RepoSnapshot) -> (HashSet<String>, HashSet<String>) {
    let mut heads = HashSet::new();
    let mut orphan_authors = HashSet::new();
    for p in &snapshot.pulls {
        match &p.head_repo_full_name {
            Some(h) => {
                heads.insert(h.to_lowercase());
            }
            None => {
                orphan_authors.insert(p.author.to_lowercase());
            }
        }
    }
    (heads, orphan_authors)
}

/// Splits `active_forks` into contributing and independently developed
/// forks.
pub fn split_contribution(snapshot: &RepoSnapshot, active_forks: &[&ForkRecord]) -> DiversificationReport {
    split_contribution_with(snapshot, active_forks, Execution::default())
}

pub fn split_contribution_with(
    snapshot: &RepoSnapshot,
    active_forks: &[&ForkRecord],
    exec: Execution,
) -> DiversificationReport {
    let (heads, orphan_authors) = pull_links(snapshot);
    let contributing = par::fold(
        exec,
        active_forks,
        || 0u64,
        |n, f| n + contributes(f, &heads, &orphan_authors) as u64,
        |a, b| a + b,
    );
    DiversificationReport::from_counts(contributing, active_forks.len() as u64 - contributing)
}

/// Active forks of `snapshot` according to `classification`.
pub fn active_forks<'a>(
    snapshot: &'a RepoSnapshot,
    classification: &ForkClassification,
) -> Vec<&'a ForkRecord> {
    snapshot
        .forks
        .iter()
        .zip(&classification.forks)
        .filter(|(_, v)| v.class == ForkClass::Active)
        .map(|(f, _)| f)
        .collect()
}

/// Older description-based rule for independently developed forks: the
/// description mentions "fork of" and the fork saw at least a year of
/// development after creation. Kept for comparison output only.
pub fn is_independent_by_description(fork: &ForkRecord) -> bool {
    let mentions = fork
        .description
        .as_deref()
        .is_some_and(|d| d.to_lowercase().contains("fork of"));
    mentions && fork.pushed_at - fork.created_at >= Duration::days(365)
}

pub fn count_independent_by_description(snapshot: &RepoSnapshot) -> u64 {
    snapshot
        .forks
        .iter()
        .filter(|f| is_independent_by_description(f))
        .count() as u64
}
