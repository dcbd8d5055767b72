//! Backlog measures: pull request rejection rate, backlog inversion, and
//! the feature fulfillment artifacts (closure-age bins and sprint
//! inflow/outflow).

mod flow;
mod inversion;

use serde::{Deserialize, Serialize};

use crate::numeric::Quotient;
use crate::snapshot::PullRecord;

pub use flow::{
    default_anchor, ffr_bins, inflow_outflow, inflow_outflow_with, FfrBin, FfrBinSeries, FfrPoint,
    FlowOptions, KindFlow, SprintFlow, DEFAULT_SPRINT_COUNT, DEFAULT_SPRINT_DAYS,
};
pub use inversion::{backlog_inversion, backlog_inversion_with, BacklogInversionReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrRejectionReport {
    pub merged: u64,
    pub unmerged: u64,
    /// `unmerged / merged`; absent when nothing was merged.
    pub ratio: Option<f64>,
}

impl PrRejectionReport {
    pub fn from_counts(merged: u64, unmerged: u64) -> Self {
        PrRejectionReport {
            merged,
            unmerged,
            ratio: Quotient::new(unmerged, merged).value(),
        }
    }

    pub fn ratio_exact(&self) -> Quotient {
        Quotient::new(self.unmerged, self.merged)
    }
}

/// Unmerged-to-merged ratio over closed pull requests. Open pull requests
/// are ignored.
pub fn pr_rejection_rate(pulls: &[PullRecord]) -> PrRejectionReport {
    let (merged, unmerged) = pulls.iter().filter(|p| p.is_closed()).fold((0, 0), |(m, u), p| {
        if p.is_merged() {
            (m + 1, u)
        } else {
            (m, u + 1)
        }
    });
    PrRejectionReport::from_counts(merged, unmerged)
}
