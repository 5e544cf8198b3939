use std::io::Write;

use serde::Serialize;

use super::{MetricsError, TapRecord};
use crate::Nanos;

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub config_hash: String,
    pub seed: u64,
    pub repetition: u32,
    pub topology: String,
    pub host_qdisc: String,
    pub bridge_qdisc: String,
    pub cycle_us: f64,
    pub offset_us: f64,
    pub delta_us: f64,
    pub n_vars: usize,
    pub published: u64,
    pub returned: u64,
    #[serde(rename = "d_P")]
    pub d_p: f64,
    #[serde(rename = "d_L")]
    pub d_l: f64,
    #[serde(rename = "d_b_to_L")]
    pub d_b_to_l: f64,
    #[serde(rename = "d_b_to_P")]
    pub d_b_to_p: f64,
    pub d_sigma: f64,
    pub rtt_mean_us: Option<f64>,
    pub rtt_median_us: Option<f64>,
    pub rtt_max_us: Option<f64>,
    pub jitter_us: Option<f64>,
    pub jitter_max_us: Option<f64>,
    pub jitter_std_us: Option<f64>,
    pub jitter_p2p_us: Option<f64>,
    #[serde(rename = "l_B_us")]
    pub l_b_us: Option<f64>,
}

pub const SUMMARY_COLUMNS: [&str; 25] = [
    "config_hash",
    "seed",
    "repetition",
    "topology",
    "host_qdisc",
    "bridge_qdisc",
    "cycle_us",
    "offset_us",
    "delta_us",
    "n_vars",
    "published",
    "returned",
    "d_P",
    "d_L",
    "d_b_to_L",
    "d_b_to_P",
    "d_sigma",
    "rtt_mean_us",
    "rtt_median_us",
    "rtt_max_us",
    "jitter_us",
    "jitter_max_us",
    "jitter_std_us",
    "jitter_p2p_us",
    "l_B_us",
];

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<(), MetricsError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an inter-arrival ECDF as deviation from the cycle time.
pub fn write_ecdf_csv<W: Write>(out: W, ecdf: &[(Nanos, f64)], cycle: Nanos) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["deviation_ns", "fraction"])?;
    for &(spacing, frac) in ecdf {
        w.write_record([(spacing - cycle).to_string(), frac.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes any serializable rows with the given header.
pub fn write_table_csv<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_jsonl<W: Write>(mut out: W, records: &[TapRecord]) -> Result<(), MetricsError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
