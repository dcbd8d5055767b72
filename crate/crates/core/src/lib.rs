//! Software development waste measures computed from GitHub repository
//! metadata.
//!
//! The pipeline is: [`ingest`] captures a repository into an immutable
//! [`snapshot::RepoSnapshot`], the analysis modules ([`forks`] and
//! [`backlog`]) turn snapshots into measure reports, and [`report`]
//! renders those reports as tables, CSV, JSON and SVG charts.
//!
//! All analyses are pure functions of a snapshot, so they run offline and
//! produce byte-identical output for identical input.

pub mod backlog;
pub mod cli;
pub mod config;
pub mod forks;
pub mod ingest;
pub mod numeric;
pub mod par;
pub mod report;
pub mod snapshot;

pub use par::Execution;
