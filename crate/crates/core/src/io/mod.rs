//! File formats: response data, stored draws, summaries and run configs.

mod config;
mod csv;
mod draws;
mod summary;

pub use config::{RunConfig, CONFIG_VERSION};
pub use csv::{ingest_long_csv, write_long_csv, HEADER, HEADER_SUBPOP};
pub use draws::{read_draws, write_draws, MANIFEST};
pub use summary::{
    build_summary, render_tables, write_summary, CutpointSummary, PeriodSubtypes, SubtypeSummary, Summary, SummaryDims,
};
