//! Run configuration: a JSON document mirroring [`RunConfig`], overridable
//! from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::backlog::{DEFAULT_SPRINT_COUNT, DEFAULT_SPRINT_DAYS};
use crate::forks::DEFAULT_ACTIVE_WINDOW_DAYS;
use crate::ingest::{SelectionCriteria, SelectionLists, DEFAULT_API_BASE};
use crate::snapshot::{LabelMapping, RepoRef};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid config at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unsupported output format {0:?} (expected table, csv, json or svg)")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
    Svg,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            _ => Err(ConfigError::Format(s.to_string())),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Table => "table",
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        })
    }
}

/// Parses a comma-separated format list such as `table,csv`. Duplicates
/// are dropped; order is normalized.
pub fn parse_formats(s: &str) -> Result<Vec<OutputFormat>, ConfigError> {
    let mut out = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(OutputFormat::from_str)
        .collect::<Result<Vec<_>, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchLimitsConfig {
    pub max_forks: Option<usize>,
    pub max_pulls: Option<usize>,
    pub max_issues: Option<usize>,
}

/// Optional per-measure warning levels. None are set by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarningThresholds {
    pub stale_pct: Option<f64>,
    pub pdi: Option<f64>,
    pub unmerged_merged_ratio: Option<f64>,
    pub bi_index: Option<f64>,
}

fn ser_repos<S: Serializer>(repos: &[RepoRef], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(repos.iter().map(|r| r.to_string()))
}

fn de_repos<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<RepoRef>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(serialize_with = "ser_repos", deserialize_with = "de_repos")]
    pub repos: Vec<RepoRef>,
    pub snapshot_dir: PathBuf,
    pub output_dir: PathBuf,
    pub label_mapping: LabelMapping,
    /// Last day of the most recent sprint.
    pub anchor_date: Option<NaiveDate>,
    pub sprint_days: u32,
    pub sprint_count: u32,
    pub active_window_days: u32,
    pub output_formats: Vec<OutputFormat>,
    /// Repositories analyzed concurrently.
    pub workers: usize,
    /// Concurrent page fetches per listing.
    pub fetch_concurrency: usize,
    pub limits: FetchLimitsConfig,
    pub api_base_url: String,
    /// Used when `WASTE_RADAR_TOKEN` is unset.
    pub token: Option<String>,
    pub fail_fast: bool,
    /// Also count independently developed forks with the description-based
    /// rule, for comparison.
    pub description_rule: bool,
    pub thresholds: WarningThresholds,
    pub selection: SelectionCriteria,
    pub selection_lists: SelectionLists,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            repos: Vec::new(),
            snapshot_dir: PathBuf::from("snapshots"),
            output_dir: PathBuf::from("report"),
            label_mapping: LabelMapping::default(),
            anchor_date: None,
            sprint_days: DEFAULT_SPRINT_DAYS,
            sprint_count: DEFAULT_SPRINT_COUNT,
            active_window_days: DEFAULT_ACTIVE_WINDOW_DAYS,
            output_formats: vec![OutputFormat::Table],
            workers: 4,
            fetch_concurrency: 4,
            limits: FetchLimitsConfig::default(),
            api_base_url: DEFAULT_API_BASE.to_string(),
            token: None,
            fail_fast: false,
            description_rule: false,
            thresholds: WarningThresholds::default(),
            selection: SelectionCriteria::study(),
            selection_lists: SelectionLists::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("sprint_days", self.sprint_days),
            ("sprint_count", self.sprint_count),
            ("active_window_days", self.active_window_days),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v < 1) {
            return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
        }
        self.label_mapping
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.selection.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }
}
