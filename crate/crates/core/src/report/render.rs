use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{repo_dir_name, svg, RepoBundle, WasteSummary};
use crate::backlog::FfrBin;
use crate::config::OutputFormat;
use crate::snapshot::{timestamp, IssueKind};

pub const BUNDLES_FILE: &str = "bundles.json";
pub const BUNDLE_FORMAT_VERSION: u32 = 1;

const HEADERS: [&str; 5] = [
    "Repository",
    "Stale+Potentially Stale %",
    "PDI",
    "Unmerged/Merged",
    "BI Index",
];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid bundle document at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("unsupported bundle format version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The `analyze` output handed to `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleDocument {
    pub format_version: u32,
    pub bundles: Vec<RepoBundle>,
}

impl BundleDocument {
    pub fn new(bundles: Vec<RepoBundle>) -> Self {
        BundleDocument {
            format_version: BUNDLE_FORMAT_VERSION,
            bundles,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundles serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self, ReportError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: BundleDocument = serde_path_to_error::deserialize(de).map_err(|e| ReportError::Parse {
            path: path.to_path_buf(),
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if doc.format_version != BUNDLE_FORMAT_VERSION {
            return Err(ReportError::UnsupportedVersion(doc.format_version));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        BundleDocument::from_json(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReportError> {
        write_file(path, self.to_json())
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), ReportError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

/// Aligned text table of the waste measures. An empty summary yields the
/// header line alone.
pub fn render_table(summary: &WasteSummary) -> String {
    let rows: Vec<[String; 5]> = summary
        .rows
        .iter()
        .map(|r| {
            let [a, b, c, d] = r.cells();
            [r.repo.clone(), a, b, c, d]
        })
        .collect();
    let mut widths = HEADERS.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: [&str; 5]| {
        let mut l = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells[1..].iter().zip(&widths[1..]) {
            let _ = write!(l, "  {cell:>w$}");
        }
        out.push_str(l.trim_end());
        out.push('\n');
    };
    line(HEADERS);
    for r in &rows {
        line([&r[0], &r[1], &r[2], &r[3], &r[4]]);
    }
    out
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_summary_csv(summary: &WasteSummary) -> Result<String, ReportError> {
    let rows = summary
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.repo.clone()];
            v.extend(r.cells());
            v
        })
        .collect();
    csv_string(
        &[
            "repo",
            "stale_plus_potentially_stale_pct",
            "pdi",
            "unmerged_merged_ratio",
            "bi_index",
        ],
        rows,
    )
}

fn kind_name(k: IssueKind) -> &'static str {
    k.as_str()
}

fn repo_csvs(b: &RepoBundle) -> Result<Vec<(&'static str, String)>, ReportError> {
    let forks = csv_string(
        &["full_name", "class", "gap_days"],
        b.fork_verdicts
            .iter()
            .map(|v| {
                vec![
                    v.full_name.clone(),
                    v.class.as_str().into(),
                    v.gap_days.to_string(),
                ]
            })
            .collect(),
    )?;
    let d = &b.diversification;
    let pdi = csv_string(
        &["contributing", "independent", "pdi"],
        vec![vec![
            d.contributing.to_string(),
            d.independent.to_string(),
            opt(d.pdi),
        ]],
    )?;
    let p = &b.pr_rejection;
    let prr = csv_string(
        &["merged", "unmerged", "ratio"],
        vec![vec![p.merged.to_string(), p.unmerged.to_string(), opt(p.ratio)]],
    )?;
    let bi = &b.backlog_inversion;
    let bi = csv_string(
        &[
            "high_low",
            "high_medium",
            "medium_low",
            "total_closed_issues",
            "bi_index",
            "degenerate",
        ],
        vec![vec![
            bi.high_low.to_string(),
            bi.high_medium.to_string(),
            bi.medium_low.to_string(),
            bi.total_closed_issues.to_string(),
            bi.bi_index.to_string(),
            bi.degenerate.to_string(),
        ]],
    )?;
    let ffr = csv_string(
        &["bin", "kind", "age_days", "normalized"],
        b.ffr_bins
            .iter()
            .flat_map(|s| {
                s.points.iter().map(move |p| {
                    vec![
                        s.bin.label().to_string(),
                        kind_name(s.kind).to_string(),
                        p.age_days.to_string(),
                        p.normalized.to_string(),
                    ]
                })
            })
            .collect(),
    )?;
    let flow = csv_string(
        &[
            "sprint_index",
            "window_start",
            "window_end",
            "kind",
            "inflow",
            "spillover",
            "outflow",
            "ratio",
        ],
        b.sprint_flow
            .iter()
            .flat_map(|s| {
                [(IssueKind::Bug, &s.bug), (IssueKind::Feature, &s.feature)].map(|(k, f)| {
                    vec![
                        s.sprint_index.to_string(),
                        timestamp::format(&s.window_start),
                        timestamp::format(&s.window_end),
                        kind_name(k).to_string(),
                        f.inflow.to_string(),
                        f.spillover.to_string(),
                        f.outflow.to_string(),
                        opt(f.ratio),
                    ]
                })
            })
            .collect(),
    )?;
    Ok(vec![
        ("forks.csv", forks),
        ("pdi.csv", pdi),
        ("prr.csv", prr),
        ("bi.csv", bi),
        ("ffr_bins.csv", ffr),
        ("flow.csv", flow),
    ])
}

fn repo_svgs(b: &RepoBundle) -> Vec<(String, String)> {
    let repo = b.repo.full_name();
    let mut out = Vec::new();
    for bin in FfrBin::ALL {
        let find = |k| b.ffr_bins.iter().find(|s| s.bin == bin && s.kind == k);
        out.push((
            format!("ffr_{}.svg", bin.slug()),
            svg::ffr_chart(&repo, bin, find(IssueKind::Bug), find(IssueKind::Feature)),
        ));
    }
    out.push(("flow.svg".to_string(), svg::flow_chart(&repo, &b.sprint_flow)));
    out
}

/// Writes every requested format under `out_dir` and returns the written
/// paths in write order.
///
/// Layout: `summary.txt`, `summary.csv`, `bundles.json`, `summary.json`
/// at the top level, per-repository CSV and SVG files in `owner__name/`.
pub fn write_reports(
    bundles: &[RepoBundle],
    formats: &[OutputFormat],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let summary = WasteSummary::from_bundles(bundles);
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    let mut written = Vec::new();
    let mut put = |rel: PathBuf, contents: String| -> Result<(), ReportError> {
        let path = out_dir.join(rel);
        write_file(&path, contents)?;
        written.push(path);
        Ok(())
    };
    for format in formats {
        match format {
            OutputFormat::Table => put("summary.txt".into(), render_table(&summary))?,
            OutputFormat::Csv => {
                put("summary.csv".into(), render_summary_csv(&summary)?)?;
                for b in bundles {
                    for (name, body) in repo_csvs(b)? {
                        put(repo_dir_name(&b.repo).join(name), body)?;
                    }
                }
            }
            OutputFormat::Json => {
                put(
                    BUNDLES_FILE.into(),
                    BundleDocument::new(bundles.to_vec()).to_json(),
                )?;
                let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
                s.push('\n');
                put("summary.json".into(), s)?;
            }
            OutputFormat::Svg => {
                for b in bundles {
                    for (name, body) in repo_svgs(b) {
                        put(repo_dir_name(&b.repo).join(name), body)?;
                    }
                }
            }
        }
    }
    Ok(written)
}
