//! File formats, run configuration and report emission.

pub mod config;
pub mod grid_file;
pub mod render;
pub mod tables;

pub use config::{load_contract, parse_range, RunConfig, SplitSpec};
pub use grid_file::{
    decode_grid, encode_features, encode_labels, encode_scores, read_features, read_grid, read_labels, read_scores,
    write_features, write_labels, write_scores, Dtype, GridData, GridFileHeader, HEADER_LEN, MAGIC,
};
pub use render::{
    group_reports, pct, rank_maps, read_report, render_eval, render_report, render_tables, to_json, write_text,
    EvalReport, Format, ReportTable,
};
pub use tables::{read_events, read_stations, write_events, write_stations};
