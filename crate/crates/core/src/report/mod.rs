//! Per-repository measure bundles and their rendering as text tables, CSV,
//! JSON and SVG.

mod render;
pub mod svg;

use std::path::PathBuf;

use chrono::{Duration, NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::backlog::{
    backlog_inversion_with, default_anchor, ffr_bins, inflow_outflow_with, pr_rejection_rate,
    BacklogInversionReport, FfrBinSeries, FlowOptions, PrRejectionReport, SprintFlow,
};
use crate::config::{RunConfig, WarningThresholds};
use crate::forks::{
    active_forks, classify_forks_with, count_independent_by_description, split_contribution_with,
    DiversificationReport, ForkDistribution, ForkOptions, ForkVerdict, KMeansSummary,
};
use crate::numeric::Quotient;
use crate::par::Execution;
use crate::snapshot::{timestamp, LabelMapping, RepoRef, RepoSnapshot, Timestamp};

pub use render::{
    render_summary_csv, render_table, write_reports, BundleDocument, ReportError, BUNDLES_FILE,
    BUNDLE_FORMAT_VERSION,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Reclassify issues with this mapping instead of the labels' stored
    /// classification.
    pub label_mapping: Option<LabelMapping>,
    /// Exclusive end of the most recent sprint; defaults to the snapshot's
    /// fetch day at midnight UTC.
    pub anchor: Option<Timestamp>,
    pub sprint_days: u32,
    pub sprint_count: u32,
    pub active_window_days: u32,
    pub description_rule: bool,
    pub execution: Execution,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions::from_config(&RunConfig::default())
    }
}

impl AnalysisOptions {
    pub fn from_config(cfg: &RunConfig) -> Self {
        AnalysisOptions {
            label_mapping: Some(cfg.label_mapping.clone()),
            anchor: cfg.anchor_date.map(anchor_for_date),
            sprint_days: cfg.sprint_days,
            sprint_count: cfg.sprint_count,
            active_window_days: cfg.active_window_days,
            description_rule: cfg.description_rule,
            execution: Execution::default(),
        }
    }
}

/// Sprint anchor for an inclusive last day: the following midnight UTC.
pub fn anchor_for_date(date: NaiveDate) -> Timestamp {
    date.and_time(NaiveTime::MIN).and_utc() + Duration::days(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepoBundle {
    pub repo: RepoRef,
    #[serde(with = "timestamp")]
    pub anchor: Timestamp,
    pub sprint_days: u32,
    pub forks: ForkDistribution,
    pub clustering: Option<KMeansSummary>,
    pub fork_verdicts: Vec<ForkVerdict>,
    pub diversification: DiversificationReport,
    /// Independently developed forks by the description rule, when asked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_rule_independent: Option<u64>,
    pub pr_rejection: PrRejectionReport,
    pub backlog_inversion: BacklogInversionReport,
    pub ffr_bins: Vec<FfrBinSeries>,
    pub sprint_flow: Vec<SprintFlow>,
}

pub fn analyze_snapshot(snapshot: &RepoSnapshot, opts: &AnalysisOptions) -> RepoBundle {
    let reclassified;
    let snapshot = match &opts.label_mapping {
        Some(m) => {
            reclassified = snapshot.reclassified(m);
            &reclassified
        }
        None => snapshot,
    };
    let exec = opts.execution;
    let fork_opts = ForkOptions {
        active_window_days: opts.active_window_days,
        execution: exec,
        ..ForkOptions::default()
    };
    let classification = classify_forks_with(snapshot, &fork_opts);
    let diversification = split_contribution_with(snapshot, &active_forks(snapshot, &classification), exec);
    let anchor = opts.anchor.unwrap_or_else(|| default_anchor(snapshot.fetched_at));
    let flow = FlowOptions {
        anchor,
        sprint_days: opts.sprint_days,
        sprints: opts.sprint_count,
        execution: exec,
    };

    RepoBundle {
        repo: snapshot.repo.clone(),
        anchor,
        sprint_days: opts.sprint_days,
        forks: classification.distribution,
        clustering: classification.clustering,
        fork_verdicts: classification.forks,
        diversification,
        description_rule_independent: opts
            .description_rule
            .then(|| count_independent_by_description(snapshot)),
        pr_rejection: pr_rejection_rate(&snapshot.pulls),
        backlog_inversion: backlog_inversion_with(&snapshot.issues, exec),
        ffr_bins: ffr_bins(&snapshot.issues),
        sprint_flow: inflow_outflow_with(&snapshot.issues, &flow),
    }
}

/// One row of the waste summary table, kept as exact count ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WasteRow {
    pub repo: String,
    /// Potentially stale plus stale forks over all forks.
    pub stale_share: Quotient,
    pub pdi: Quotient,
    pub unmerged_merged: Quotient,
    pub bi: Quotient,
}

impl WasteRow {
    pub fn from_bundle(b: &RepoBundle) -> Self {
        WasteRow {
            repo: b.repo.full_name(),
            stale_share: b.forks.stale_share(),
            pdi: b.diversification.pdi_exact(),
            unmerged_merged: b.pr_rejection.ratio_exact(),
            bi: b.backlog_inversion.bi_exact(),
        }
    }

    pub fn stale_plus_potentially_stale_pct(&self) -> Option<f64> {
        self.stale_share.value().map(|v| v * 100.0)
    }

    pub fn pdi(&self) -> Option<f64> {
        self.pdi.value()
    }

    pub fn unmerged_merged_ratio(&self) -> Option<f64> {
        self.unmerged_merged.value()
    }

    pub fn bi_index(&self) -> f64 {
        self.bi.value().unwrap_or(0.0)
    }

    /// The four columns at four decimals; `n/a` where undefined.
    pub fn cells(&self) -> [String; 4] {
        let na = || "n/a".to_string();
        [
            self.stale_share.fixed4_scaled(100).unwrap_or_else(na),
            self.pdi.fixed4().unwrap_or_else(na),
            self.unmerged_merged.fixed4().unwrap_or_else(na),
            self.bi.fixed4().unwrap_or_else(na),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WasteSummary {
    pub rows: Vec<WasteRow>,
}

impl WasteSummary {
    pub fn from_bundles(bundles: &[RepoBundle]) -> Self {
        WasteSummary {
            rows: bundles.iter().map(WasteRow::from_bundle).collect(),
        }
    }

    /// Human-readable notes for every configured threshold a row exceeds.
    pub fn threshold_warnings(&self, t: &WarningThresholds) -> Vec<String> {
        let mut out = Vec::new();
        for row in &self.rows {
            let checks = [
                (
                    "stale+potentially stale %",
                    row.stale_plus_potentially_stale_pct(),
                    t.stale_pct,
                ),
                ("PDI", row.pdi(), t.pdi),
                (
                    "unmerged/merged",
                    row.unmerged_merged_ratio(),
                    t.unmerged_merged_ratio,
                ),
                ("BI index", Some(row.bi_index()), t.bi_index),
            ];
            for (name, value, limit) in checks {
                if let (Some(v), Some(l)) = (value, limit) {
                    if v > l {
                        out.push(format!("{}: {name} {v:.4} exceeds {l}", row.repo));
                    }
                }
            }
        }
        out
    }
}

/// Directory holding one repository's detail files.
pub fn repo_dir_name(repo: &RepoRef) -> PathBuf {
    PathBuf::from(format!("{}__{}", repo.owner, repo.name))
}
