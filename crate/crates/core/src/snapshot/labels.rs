use serde::{Deserialize, Serialize};

use super::SnapshotError;

/// Issue priority derived from labels. `Unspecified` never takes part in
/// priority comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Priority {
    High,
    Medium,
    Low,
    Unspecified,
}

impl Priority {
    /// Rank for comparisons, larger is more urgent.
    pub fn rank(self) -> Option<u8> {
        match self {
            Priority::High => Some(3),
            Priority::Medium => Some(2),
            Priority::Low => Some(1),
            Priority::Unspecified => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Bug,
    Feature,
    Other,
}

impl IssueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueKind::Bug => "bug",
            IssueKind::Feature => "feature",
            IssueKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityRule {
    pub pattern: String,
    pub priority: Priority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindRule {
    pub pattern: String,
    pub kind: IssueKind,
}

/// Ordered label rules. Patterns are case-insensitive substrings and the
/// first rule matching any label wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub priority_rules: Vec<PriorityRule>,
    pub kind_rules: Vec<KindRule>,
}

impl Default for LabelMapping {
    fn default() -> Self {
        let p = |pattern: &str, priority| PriorityRule {
            pattern: pattern.to_string(),
            priority,
        };
        let k = |pattern: &str, kind| KindRule {
            pattern: pattern.to_string(),
            kind,
        };
        LabelMapping {
            priority_rules: vec![
                p("p0", Priority::High),
                p("priority: critical", Priority::High),
                p("priority: high", Priority::High),
                p("p1", Priority::Medium),
                p("priority: medium", Priority::Medium),
                p("p2", Priority::Low),
                p("p3", Priority::Low),
                p("priority: low", Priority::Low),
            ],
            kind_rules: vec![
                k("bug", IssueKind::Bug),
                k("feature", IssueKind::Feature),
                k("enhancement", IssueKind::Feature),
                k("feature request", IssueKind::Feature),
            ],
        }
    }
}

impl LabelMapping {
    pub fn validate(&self) -> Result<(), SnapshotError> {
        let empty_priority = self
            .priority_rules
            .iter()
            .position(|r| r.pattern.trim().is_empty())
            .map(|i| format!("priority_rules[{i}].pattern"));
        let empty_kind = self
            .kind_rules
            .iter()
            .position(|r| r.pattern.trim().is_empty())
            .map(|i| format!("kind_rules[{i}].pattern"));
        match empty_priority.or(empty_kind) {
            Some(field) => Err(SnapshotError::Validation {
                field,
                reason: "label pattern must not be empty".into(),
            }),
            None => Ok(()),
        }
    }

    pub fn classify(&self, labels: &[String]) -> (Priority, IssueKind) {
        classify_issue(labels, self)
    }
}

/// Derives an issue's priority and kind from its labels.
pub fn classify_issue(labels: &[String], mapping: &LabelMapping) -> (Priority, IssueKind) {
    let lowered: Vec<String> = labels.iter().map(|l| l.to_lowercase()).collect();
    let matches = |pattern: &str| {
        let pattern = pattern.to_lowercase();
        lowered.iter().any(|l| l.contains(&pattern))
    };
    let priority = mapping
        .priority_rules
        .iter()
        .find(|r| matches(&r.pattern))
        .map_or(Priority::Unspecified, |r| r.priority);
    let kind = mapping
        .kind_rules
        .iter()
        .find(|r| matches(&r.pattern))
        .map_or(IssueKind::Other, |r| r.kind);
    (priority, kind)
}
