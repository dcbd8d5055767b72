//! Command-line front end: `fetch`, `analyze`, `report` and `select`.
//!
//! Exit codes: 0 on success, 1 when some repositories failed, 2 on usage or
//! configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context as _;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_formats, ConfigError, OutputFormat, RunConfig};
use crate::ingest::{
    fetch_repo_snapshot, select_repositories, AuthContext, ClientOptions, FetchLimits, FixtureTransport,
    GithubClient, RateLimitPolicy, RecordingTransport, RepoCandidate, Secret, Transport, UreqTransport,
};
use crate::par::{self, Execution};
use crate::report::{
    analyze_snapshot, render_table, write_reports, AnalysisOptions, BundleDocument, RepoBundle, WasteSummary,
    BUNDLES_FILE,
};
use crate::snapshot::{load_snapshot, save_snapshot, snapshot_file_name, RepoRef};

#[derive(Debug, Parser)]
#[command(
    name = "waste-radar",
    version,
    about = "Software development waste measures for GitHub repositories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capture repository snapshots from the GitHub API or recorded fixtures.
    Fetch,
    /// Compute measure bundles from snapshots into `<out>/bundles.json`.
    Analyze,
    /// Render `<out>/bundles.json` in the requested formats.
    Report {
        /// Bundle document to render; defaults to `<out>/bundles.json`.
        #[arg(long)]
        bundles: Option<PathBuf>,
    },
    /// Filter candidate repositories with the configured selection criteria.
    Select {
        /// JSON array of GitHub repository objects.
        #[arg(long)]
        candidates: PathBuf,
    },
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repository as owner/name; repeatable. Replaces the configured list.
    #[arg(long = "repo", global = true)]
    pub repos: Vec<String>,
    /// Directory holding one `owner__name.json` snapshot per repository
    #[arg(long, global = true)]
    pub snapshot_dir: Option<PathBuf>,
    /// Output directory for bundles and reports.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Re-fetch snapshots that already exist.
    #[arg(long, global = true)]
    pub refresh: bool,
    /// Replay recorded HTTP responses from this directory instead of the
    /// network.
    #[arg(long, global = true)]
    pub fixture_dir: Option<PathBuf>,
    /// Record live HTTP responses into this directory.
    #[arg(long, global = true, conflicts_with = "fixture_dir")]
    pub record_dir: Option<PathBuf>,
    /// Comma-separated subset of table,csv,json,svg.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Last day of the most recent sprint (YYYY-MM-DD).
    #[arg(long, global = true)]
    pub anchor_date: Option<String>,
    /// Fail instead of waiting when rate limited.
    #[arg(long, global = true)]
    pub fail_fast: bool,
    /// Repositories analyzed concurrently.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Run every analysis on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// Also report independently developed forks by the description rule.
    #[arg(long, global = true)]
    pub description_rule: bool,
    /// Fetch at most this many forks
    #[arg(long, global = true)]
    pub max_forks: Option<usize>,
    /// Fetch at most this many closed pull requests, newest first
    #[arg(long, global = true)]
    pub max_pulls: Option<usize>,
    /// Fetch at most this many issues, newest first
    #[arg(long, global = true)]
    pub max_issues: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Failed(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Config(_) => ExitCode::from(2),
            CliError::Failed(_) => ExitCode::from(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    PartialFailure,
}

impl From<Outcome> for ExitCode {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::PartialFailure => ExitCode::from(1),
        }
    }
}

/// Settings beyond [`RunConfig`] that only the command line carries.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: RunConfig,
    pub refresh: bool,
    pub fixture_dir: Option<PathBuf>,
    pub record_dir: Option<PathBuf>,
    pub sequential: bool,
}

impl Invocation {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

/// Loads the config file (if any) and applies command-line overrides.
pub fn resolve(args: &CommonArgs) -> Result<Invocation, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if !args.repos.is_empty() {
        cfg.repos = args
            .repos
            .iter()
            .map(|r| r.parse().map_err(|e| CliError::Usage(format!("--repo {r}: {e}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(d) = &args.snapshot_dir {
        cfg.snapshot_dir = d.clone();
    }
    if let Some(d) = &args.out {
        cfg.output_dir = d.clone();
    }
    if let Some(f) = &args.format {
        cfg.output_formats = parse_formats(f)?;
    }
    if let Some(d) = &args.anchor_date {
        let date = NaiveDate::parse_from_str(d, "%Y-%m-%d")
            .map_err(|e| CliError::Usage(format!("--anchor-date {d}: {e}")))?;
        cfg.anchor_date = Some(date);
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        cfg.workers = w;
    }
    cfg.fail_fast |= args.fail_fast;
    cfg.description_rule |= args.description_rule;
    cfg.limits.max_forks = args.max_forks.or(cfg.limits.max_forks);
    cfg.limits.max_pulls = args.max_pulls.or(cfg.limits.max_pulls);
    cfg.limits.max_issues = args.max_issues.or(cfg.limits.max_issues);
    cfg.validate()?;
    Ok(Invocation {
        config: cfg,
        refresh: args.refresh,
        fixture_dir: args.fixture_dir.clone(),
        record_dir: args.record_dir.clone(),
        sequential: args.sequential,
    })
}

#[derive(Debug, Default)]
pub struct FetchOutcome {
    /// Snapshot path per repository that has one, in configured order.
    pub snapshots: Vec<PathBuf>,
    pub fetched: Vec<RepoRef>,
    pub skipped: Vec<RepoRef>,
    pub failed: Vec<(RepoRef, String)>,
}

pub fn snapshot_path(cfg: &RunConfig, repo: &RepoRef) -> PathBuf {
    cfg.snapshot_dir.join(snapshot_file_name(repo))
}

/// Builds the transport for an invocation: fixture replay, live with
/// recording, or live.
pub fn transport_for(inv: &Invocation) -> Arc<dyn Transport> {
    let live = || UreqTransport::new(Duration::from_secs(60));
    match (&inv.fixture_dir, &inv.record_dir) {
        (Some(dir), _) => Arc::new(FixtureTransport::new(dir)),
        (None, Some(dir)) => Arc::new(RecordingTransport::new(live(), dir)),
        (None, None) => Arc::new(live()),
    }
}

/// Fetches a snapshot per configured repository. Existing snapshots are
/// kept unless `refresh`; a failing repository is recorded and the rest
/// continue.
pub fn cmd_fetch(inv: &Invocation, transport: Arc<dyn Transport>) -> Result<FetchOutcome, CliError> {
    let cfg = &inv.config;
    if cfg.repos.is_empty() {
        return Err(CliError::Usage(
            "no repositories configured (use --repo or a config file)".into(),
        ));
    }
    let auth = AuthContext::from_env(cfg.token.clone().map(Secret::new), &cfg.api_base_url)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if auth.token.is_none() && inv.fixture_dir.is_none() {
        log::warn!("no API token; unauthenticated requests are heavily rate limited");
    }
    let opts = ClientOptions {
        rate_limit: if cfg.fail_fast {
            RateLimitPolicy::FailFast
        } else {
            RateLimitPolicy::Wait
        },
        concurrency: cfg.fetch_concurrency.max(1),
        ..ClientOptions::default()
    };
    let client = GithubClient::new(transport, auth, opts);
    let limits = FetchLimits {
        max_forks: cfg.limits.max_forks,
        max_pulls: cfg.limits.max_pulls,
        max_issues: cfg.limits.max_issues,
    };

    let mut out = FetchOutcome::default();
    for repo in &cfg.repos {
        let path = snapshot_path(cfg, repo);
        if path.exists() && !inv.refresh {
            log::info!("{repo}: using existing {}", path.display());
            out.skipped.push(repo.clone());
            out.snapshots.push(path);
            continue;
        }
        log::info!("{repo}: fetching");
        let result = fetch_repo_snapshot(&client, repo, limits, &cfg.label_mapping)
            .map_err(anyhow::Error::from)
            .and_then(|s| {
                save_snapshot(&s, &path)?;
                log::info!(
                    "{repo}: {} forks, {} pulls, {} issues -> {}",
                    s.forks.len(),
                    s.pulls.len(),
                    s.issues.len(),
                    path.display()
                );
                Ok(())
            });
        match result {
            Ok(()) => {
                out.fetched.push(repo.clone());
                out.snapshots.push(path);
            }
            Err(e) => {
                log::error!("{repo}: {e:#}");
                out.failed.push((repo.clone(), format!("{e:#}")));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Default)]
pub struct AnalyzeOutcome {
    pub bundles: Vec<RepoBundle>,
    pub failed: Vec<(RepoRef, String)>,
}

/// Repositories to analyze: the configured list, or every snapshot in the
/// snapshot directory when none is configured.
fn analysis_targets(cfg: &RunConfig) -> Result<Vec<RepoRef>, CliError> {
    if !cfg.repos.is_empty() {
        return Ok(cfg.repos.clone());
    }
    let dir = &cfg.snapshot_dir;
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("reading snapshot directory {}", dir.display()))?;
    let mut repos = Vec::new();
    for entry in entries {
        let name = entry.context("listing snapshots")?.file_name();
        let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
            continue;
        };
        if let Some((owner, repo)) = stem.split_once("__") {
            if let Ok(r) = RepoRef::new(owner, repo) {
                repos.push(r);
            }
        }
    }
    repos.sort();
    Ok(repos)
}

fn analyze_one(cfg: &RunConfig, opts: &AnalysisOptions, repo: &RepoRef) -> anyhow::Result<RepoBundle> {
    let path = snapshot_path(cfg, repo);
    if !path.exists() {
        anyhow::bail!("{repo}: no snapshot at {} (run `fetch` first)", path.display());
    }
    let snapshot = load_snapshot(&path).with_context(|| format!("{repo}: loading snapshot"))?;
    if snapshot.repo.full_name().to_lowercase() != repo.full_name().to_lowercase() {
        anyhow::bail!("{repo}: {} holds a snapshot of {}", path.display(), snapshot.repo);
    }
    Ok(analyze_snapshot(&snapshot, opts))
}

/// Analyzes every target repository, up to `workers` at a time. Bundles
/// keep the target order.
pub fn cmd_analyze(inv: &Invocation) -> Result<AnalyzeOutcome, CliError> {
    let cfg = &inv.config;
    let exec = inv.execution();
    let repos = analysis_targets(cfg)?;
    let mut opts = AnalysisOptions::from_config(cfg);
    opts.execution = exec;
    let results = par::with_workers(exec, cfg.workers, || {
        par::map(exec, &repos, |r| analyze_one(cfg, &opts, r))
    });
    let mut out = AnalyzeOutcome::default();
    for (repo, r) in repos.iter().zip(results) {
        match r {
            Ok(b) => out.bundles.push(b),
            Err(e) => {
                log::error!("{e:#}");
                out.failed.push((repo.clone(), format!("{e:#}")));
            }
        }
    }
    Ok(out)
}

pub fn cmd_report(
    bundles: &[RepoBundle],
    formats: &[OutputFormat],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    write_reports(bundles, formats, out_dir)
        .context("writing reports")
        .map_err(CliError::Failed)
}

fn warn_thresholds(cfg: &RunConfig, bundles: &[RepoBundle]) {
    for w in WasteSummary::from_bundles(bundles).threshold_warnings(&cfg.thresholds) {
        log::warn!("{w}");
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let inv = resolve(&cli.common)?;
    let cfg = &inv.config;
    match &cli.command {
        Command::Fetch => {
            let out = cmd_fetch(&inv, transport_for(&inv))?;
            for p in &out.snapshots {
                println!("{}", p.display());
            }
            Ok(if out.failed.is_empty() {
                Outcome::Success
            } else {
                Outcome::PartialFailure
            })
        }
        Command::Analyze => {
            let out = cmd_analyze(&inv)?;
            let path = cfg.output_dir.join(BUNDLES_FILE);
            BundleDocument::new(out.bundles.clone())
                .save(&path)
                .context("writing bundles")?;
            log::info!("wrote {}", path.display());
            print!("{}", render_table(&WasteSummary::from_bundles(&out.bundles)));
            warn_thresholds(cfg, &out.bundles);
            Ok(if out.failed.is_empty() {
                Outcome::Success
            } else {
                Outcome::PartialFailure
            })
        }
        Command::Report { bundles } => {
            let path = bundles
                .clone()
                .unwrap_or_else(|| cfg.output_dir.join(BUNDLES_FILE));
            let doc = BundleDocument::load(&path).context("reading bundles")?;
            let written = cmd_report(&doc.bundles, &cfg.output_formats, &cfg.output_dir)?;
            if cfg.output_formats.contains(&OutputFormat::Table) {
                print!("{}", render_table(&WasteSummary::from_bundles(&doc.bundles)));
            }
            for p in written {
                log::info!("wrote {}", p.display());
            }
            warn_thresholds(cfg, &doc.bundles);
            Ok(Outcome::Success)
        }
        Command::Select { candidates } => {
            let text = std::fs::read_to_string(candidates)
                .with_context(|| format!("reading {}", candidates.display()))?;
            let list: Vec<RepoCandidate> = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", candidates.display())))?;
            for r in select_repositories(&list, &cfg.selection, &cfg.selection_lists) {
                println!("{r}");
            }
            Ok(Outcome::Success)
        }
    }
}
