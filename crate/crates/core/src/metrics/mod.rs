//! Performance indicators computed from tap timestamps: drop rates, RTT,
//! inter-arrival spacing, jitter and the bridge overhead, plus their CSV
//! and JSON-lines export.

mod export;
mod stats;
mod taps;

pub use export::{
    write_ecdf_csv, write_summary_csv, write_table_csv, write_trace_jsonl, SummaryRow, SUMMARY_COLUMNS,
};
pub use stats::{
    compute_drop_rates, compute_is_ecdf, compute_jitter, compute_rtt_stats, ecdf, estimate_bridge_latency,
    inter_arrival, DropRates, Jitter, RttStats, RunKey,
};
pub use taps::{TapPoint, TapRecord, TapSeries};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no messages were published")]
    NothingPublished,
    #[error("need at least 2 arrivals, got {0}")]
    TooFewSamples(usize),
    #[error("runs do not match: {0}")]
    MismatchedRuns(String),
    #[error("inconsistent counts: {0}")]
    Inconsistent(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl PartialEq for MetricsError {
    fn eq(&self, other: &Self) -> bool {
        use MetricsError::*;
        match (self, other) {
            (NothingPublished, NothingPublished) => true,
            (TooFewSamples(a), TooFewSamples(b)) => a == b,
            (MismatchedRuns(a), MismatchedRuns(b)) => a == b,
            (Inconsistent(a), Inconsistent(b)) => a == b,
            _ => false,
        }
    }
}
