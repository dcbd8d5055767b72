//! Feature fulfillment: closure-age bins and sprint inflow/outflow.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::numeric::Quotient;
use crate::par::{self, Execution};
use crate::snapshot::{IssueKind, IssueRecord, Timestamp};

pub const DEFAULT_SPRINT_DAYS: u32 = 14;
pub const DEFAULT_SPRINT_COUNT: u32 = 60;

/// Closure-age bins, left-inclusive and right-exclusive, in whole days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FfrBin {
    #[serde(rename = "[0,5)")]
    Days0To5,
    #[serde(rename = "[5,30)")]
    Days5To30,
    #[serde(rename = "[30,90)")]
    Days30To90,
    #[serde(rename = "[90,180)")]
    Days90To180,
}

impl FfrBin {
    pub const ALL: [FfrBin; 4] = [
        FfrBin::Days0To5,
        FfrBin::Days5To30,
        FfrBin::Days30To90,
        FfrBin::Days90To180,
    ];

    pub fn bounds(self) -> (u32, u32) {
        match self {
            FfrBin::Days0To5 => (0, 5),
            FfrBin::Days5To30 => (5, 30),
            FfrBin::Days30To90 => (30, 90),
            FfrBin::Days90To180 => (90, 180),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FfrBin::Days0To5 => "[0,5)",
            FfrBin::Days5To30 => "[5,30)",
            FfrBin::Days30To90 => "[30,90)",
            FfrBin::Days90To180 => "[90,180)",
        }
    }

    /// File-name friendly label, e.g. `0-5`.
    pub fn slug(self) -> String {
        let (lo, hi) = self.bounds();
        format!("{lo}-{hi}")
    }

    pub fn for_age(age_days: u64) -> Option<FfrBin> {
        FfrBin::ALL.into_iter().find(|b| {
            let (lo, hi) = b.bounds();
            age_days >= lo as u64 && age_days < hi as u64
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfrPoint {
    pub age_days: u32,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfrBinSeries {
    pub bin: FfrBin,
    pub kind: IssueKind,
    /// Number of issues behind the series.
    pub total: u64,
    /// Ascending by age; empty when no issue fell in the bin.
    pub points: Vec<FfrPoint>,
}

/// Closure age in whole days, floored.
fn closure_age_days(issue: &IssueRecord) -> Option<u64> {
    let closed = issue.closed_at?;
    Some((closed - issue.created_at).num_seconds().max(0) as u64 / 86_400)
}

/// Bins closed bugs and features by closure age. Always returns all eight
/// (bin, kind) series, bins in ascending order with bugs before features.
pub fn ffr_bins(issues: &[IssueRecord]) -> Vec<FfrBinSeries> {
    let mut counts: BTreeMap<(FfrBin, IssueKind), BTreeMap<u32, u64>> = BTreeMap::new();
    for issue in issues {
        if !matches!(issue.kind, IssueKind::Bug | IssueKind::Feature) {
            continue;
        }
        let Some(age) = closure_age_days(issue) else {
            continue;
        };
        if let Some(bin) = FfrBin::for_age(age) {
            *counts
                .entry((bin, issue.kind))
                .or_default()
                .entry(age as u32)
                .or_default() += 1;
        }
    }

    let mut out = Vec::with_capacity(8);
    for bin in FfrBin::ALL {
        for kind in [IssueKind::Bug, IssueKind::Feature] {
            let per_day = counts.remove(&(bin, kind)).unwrap_or_default();
            let total: u64 = per_day.values().sum();
            let points = per_day
                .into_iter()
                .map(|(age_days, n)| FfrPoint {
                    age_days,
                    normalized: n as f64 / total as f64,
                })
                .collect();
            out.push(FfrBinSeries {
                bin,
                kind,
                total,
                points,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindFlow {
    pub inflow: u64,
    pub spillover: u64,
    pub outflow: u64,
    /// `outflow / (inflow + spillover)`; absent on a zero denominator.
    pub ratio: Option<f64>,
}

impl KindFlow {
    pub fn from_counts(inflow: u64, spillover: u64, outflow: u64) -> Self {
        KindFlow {
            inflow,
            spillover,
            outflow,
            ratio: Quotient::new(outflow, inflow + spillover).value(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintFlow {
    /// 0 is the oldest sprint, `sprints - 1` the one ending at the anchor.
    pub sprint_index: u32,
    #[serde(with = "crate::snapshot::timestamp")]
    pub window_start: Timestamp,
    #[serde(with = "crate::snapshot::timestamp")]
    pub window_end: Timestamp,
    pub bug: KindFlow,
    pub feature: KindFlow,
}

impl SprintFlow {
    pub fn kind(&self, kind: IssueKind) -> Option<&KindFlow> {
        match kind {
            IssueKind::Bug => Some(&self.bug),
            IssueKind::Feature => Some(&self.feature),
            IssueKind::Other => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub anchor: Timestamp,
    pub sprint_days: u32,
    pub sprints: u32,
    pub execution: Execution,
}

impl FlowOptions {
    pub fn new(anchor: Timestamp) -> Self {
        FlowOptions {
            anchor,
            sprint_days: DEFAULT_SPRINT_DAYS,
            sprints: DEFAULT_SPRINT_COUNT,
            execution: Execution::default(),
        }
    }
}

/// Snapshot fetch time truncated to midnight UTC.
pub fn default_anchor(fetched_at: Timestamp) -> Timestamp {
    fetched_at.date_naive().and_time(NaiveTime::MIN).and_utc()
}

pub fn inflow_outflow(
    issues: &[IssueRecord],
    anchor: Timestamp,
    sprint_days: u32,
    sprints: u32,
) -> Vec<SprintFlow> {
    inflow_outflow_with(
        issues,
        &FlowOptions {
            anchor,
            sprint_days,
            sprints,
            execution: Execution::default(),
        },
    )
}

/// Per-sprint inflow, spillover and outflow of bugs and features over
/// `sprints` contiguous windows ending at the anchor.
///
/// Spillover counts issues created in the preceding window that are still
/// open at the window start.
pub fn inflow_outflow_with(issues: &[IssueRecord], opts: &FlowOptions) -> Vec<SprintFlow> {
    assert!(
        opts.sprint_days >= 1 && opts.sprints >= 1,
        "sprint_days and sprints must be positive"
    );
    let tracked: Vec<&IssueRecord> = issues
        .iter()
        .filter(|i| matches!(i.kind, IssueKind::Bug | IssueKind::Feature))
        .collect();
    let length = Duration::days(opts.sprint_days as i64);
    let sprints = opts.sprints as usize;

    par::map_range(opts.execution, sprints, |idx| {
        let back = (sprints - idx) as i32;
        let start = opts.anchor - length * back;
        let end = start + length;
        let prev_start = start - length;
        let in_window = |t: Timestamp| t >= start && t < end;

        let mut acc = [[0u64; 3]; 2];
        for issue in &tracked {
            let k = (issue.kind == IssueKind::Feature) as usize;
            if in_window(issue.created_at) {
                acc[k][0] += 1;
            }
            if issue.created_at >= prev_start
                && issue.created_at < start
                && issue.closed_at.is_none_or(|c| c >= start)
            {
                acc[k][1] += 1;
            }
            if issue.closed_at.is_some_and(in_window) {
                acc[k][2] += 1;
            }
        }
        SprintFlow {
            sprint_index: idx as u32,
            window_start: start,
            window_end: end,
            bug: KindFlow::from_counts(acc[0][0], acc[0][1], acc[0][2]),
            feature: KindFlow::from_counts(acc[1][0], acc[1][1], acc[1][2]),
        }
    })
}
