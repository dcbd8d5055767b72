//! Backlog inversion counting.
//!
//! An inversion is an ordered pair (I1, I2) where I1 has the higher
//! priority, was created before I2, and was still open when I2 was closed.
//! Pairs are counted per priority combination with an offline sweep over
//! creation time and a Fenwick tree over I2 closure times, O(n log n).

use serde::{Deserialize, Serialize};

use crate::numeric::Quotient;
use crate::par::{self, Execution};
use crate::snapshot::{IssueRecord, Priority, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacklogInversionReport {
    pub high_low: u64,
    pub high_medium: u64,
    pub medium_low: u64,
    pub total_closed_issues: u64,
    /// `(high_low + high_medium + medium_low) / (3 * total_closed_issues)`,
    /// reported as 0 when no issue is closed.
    pub bi_index: f64,
    /// Set when `total_closed_issues == 0`.
    #[serde(default)]
    pub degenerate: bool,
}

impl BacklogInversionReport {
    pub fn from_counts(high_low: u64, high_medium: u64, medium_low: u64, total_closed_issues: u64) -> Self {
        let exact = Quotient::new(high_low + high_medium + medium_low, 3 * total_closed_issues);
        BacklogInversionReport {
            high_low,
            high_medium,
            medium_low,
            total_closed_issues,
            bi_index: exact.value().unwrap_or(0.0),
            degenerate: total_closed_issues == 0,
        }
    }

    pub fn events(&self) -> u64 {
        self.high_low + self.high_medium + self.medium_low
    }

    /// Exact index; a zero denominator renders as 0/1.
    pub fn bi_exact(&self) -> Quotient {
        if self.total_closed_issues == 0 {
            Quotient::new(0, 1)
        } else {
            Quotient::new(self.events(), 3 * self.total_closed_issues)
        }
    }
}

pub fn backlog_inversion(issues: &[IssueRecord]) -> BacklogInversionReport {
    backlog_inversion_with(issues, Execution::default())
}

pub fn backlog_inversion_with(issues: &[IssueRecord], exec: Execution) -> BacklogInversionReport {
    const PAIRS: [(Priority, Priority); 3] = [
        (Priority::High, Priority::Low),
        (Priority::High, Priority::Medium),
        (Priority::Medium, Priority::Low),
    ];
    let counts = par::map(exec, &PAIRS, |&(higher, lower)| {
        count_pairs(issues, higher, lower)
    });
    let total_closed = issues.iter().filter(|i| i.closed_at.is_some()).count() as u64;
    if total_closed == 0 {
        log::warn!("backlog inversion: no closed issues, index reported as 0");
    }
    BacklogInversionReport::from_counts(counts[0], counts[1], counts[2], total_closed)
}

struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![0; n + 1] }
    }

    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over positions `0..=i`.
    fn prefix(&self, i: usize) -> u64 {
        let mut i = i + 1;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

fn count_pairs(issues: &[IssueRecord], higher: Priority, lower: Priority) -> u64 {
    let mut first: Vec<(Timestamp, Option<Timestamp>)> = issues
        .iter()
        .filter(|i| i.priority == higher)
        .map(|i| (i.created_at, i.closed_at))
        .collect();
    let mut second: Vec<(Timestamp, Timestamp)> = issues
        .iter()
        .filter(|i| i.priority == lower)
        .filter_map(|i| i.closed_at.map(|c| (i.created_at, c)))
        .collect();
    if first.is_empty() || second.is_empty() {
        return 0;
    }
    first.sort_unstable_by_key(|&(created, _)| created);
    second.sort_unstable_by_key(|&(created, _)| created);

    let mut keys: Vec<Timestamp> = second.iter().map(|&(_, closed)| closed).collect();
    keys.sort_unstable();
    keys.dedup();

    // Position of an I1 closure time: number of keys strictly below it, so
    // an I1 is still open at key j iff its position exceeds j.
    let slot = |closed: Option<Timestamp>| match closed {
        Some(c) => keys.partition_point(|&k| k < c),
        None => keys.len(),
    };

    let mut tree = Fenwick::new(keys.len() + 1);
    let mut inserted = 0u64;
    let mut next = 0;
    let mut total = 0u64;
    for &(created, closed) in &second {
        while next < first.len() && first[next].0 < created {
            tree.add(slot(first[next].1));
            inserted += 1;
            next += 1;
        }
        let j = keys.binary_search(&closed).expect("closure time is a key");
        total += inserted - tree.prefix(j);
    }
    total
}
