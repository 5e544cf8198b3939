use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use super::{io_err, CliError, ExperimentConfig};
use crate::metrics::{
    compute_drop_rates, compute_jitter, compute_rtt_stats, ecdf, inter_arrival, write_ecdf_csv,
    write_summary_csv, write_trace_jsonl, MetricsError, SummaryRow, TapRecord,
};
use crate::sim::{RunOutput, World};
use crate::Nanos;

/// All repetitions of one configuration.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Label used in file names when several results are written together.
    pub label: String,
    pub rows: Vec<SummaryRow>,
    /// Inter-arrival spacings at the loopback and publisher ingress, pooled
    /// over repetitions.
    pub is_l: Vec<Nanos>,
    pub is_p: Vec<Nanos>,
    pub rtt: Vec<Nanos>,
    pub trace: Vec<TapRecord>,
}

pub fn summarize(cfg: &ExperimentConfig, rep: u32, out: &RunOutput) -> Result<SummaryRow, MetricsError> {
    let drops = compute_drop_rates(&out.fates)?;
    let rtt = compute_rtt_stats(&out.rtt);
    let jitter = compute_jitter(&out.l_ingress, cfg.app_config().cycle).ok();
    Ok(SummaryRow {
        config_hash: cfg.hash(),
        seed: cfg.seed.wrapping_add(rep as u64),
        repetition: rep,
        topology: cfg.topology.name().into(),
        host_qdisc: cfg.host_qdisc.name().into(),
        bridge_qdisc: match cfg.topology {
            crate::sim::Topology::P2p => String::new(),
            crate::sim::Topology::Bridged => cfg.bridge_qdisc.name().into(),
        },
        cycle_us: cfg.cycle_us,
        offset_us: cfg.offset_us,
        delta_us: cfg.delta_us,
        n_vars: cfg.n_vars,
        published: out.fates.published,
        returned: out.fates.returned,
        d_p: drops.d_p,
        d_l: drops.d_l,
        d_b_to_l: drops.d_b_to_l,
        d_b_to_p: drops.d_b_to_p,
        d_sigma: drops.d_sigma,
        rtt_mean_us: rtt.map(|r| r.mean_us),
        rtt_median_us: rtt.map(|r| r.median_us),
        rtt_max_us: rtt.map(|r| r.max_us),
        jitter_us: jitter.map(|j| j.mean_us),
        jitter_max_us: jitter.map(|j| j.max_us),
        jitter_std_us: jitter.map(|j| j.std_us),
        jitter_p2p_us: jitter.map(|j| j.p2p_us),
        l_b_us: None,
    })
}

/// Runs every repetition, in parallel. Results keep repetition order.
pub fn run_experiment(cfg: &ExperimentConfig, trace: bool) -> Result<ExperimentResult, CliError> {
    cfg.validate()?;
    let reps: Vec<(SummaryRow, RunOutput)> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| -> Result<_, CliError> {
            let mut w = cfg.world_config(rep)?;
            w.trace = trace;
            let out = World::new(w)?.run()?;
            Ok((summarize(cfg, rep, &out)?, out))
        })
        .collect::<Result<_, _>>()?;
    let mut result = ExperimentResult {
        config: cfg.clone(),
        label: cfg.host_qdisc.name().into(),
        rows: Vec::with_capacity(reps.len()),
        is_l: Vec::new(),
        is_p: Vec::new(),
        rtt: Vec::new(),
        trace: Vec::new(),
    };
    for (row, out) in reps {
        result.rows.push(row);
        result.is_l.extend(inter_arrival(&out.l_ingress));
        result.is_p.extend(inter_arrival(&out.p_ingress));
        result.rtt.extend(out.rtt);
        result.trace.extend(out.trace);
    }
    Ok(result)
}

/// Means over repetitions of the table columns.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanStats {
    pub d_p: f64,
    pub d_l: f64,
    pub d_b_to_l: f64,
    pub d_b_to_p: f64,
    pub d_sigma: f64,
    pub rtt_us: Option<f64>,
    pub rtt_median_us: Option<f64>,
    pub jitter_us: Option<f64>,
}

fn mean_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn mean_stats(rows: &[SummaryRow]) -> MeanStats {
    let m = |f: fn(&SummaryRow) -> f64| mean_of(rows.iter().map(|r| Some(f(r)))).unwrap_or(0.0);
    MeanStats {
        d_p: m(|r| r.d_p),
        d_l: m(|r| r.d_l),
        d_b_to_l: m(|r| r.d_b_to_l),
        d_b_to_p: m(|r| r.d_b_to_p),
        d_sigma: m(|r| r.d_sigma),
        rtt_us: mean_of(rows.iter().map(|r| r.rtt_mean_us)),
        rtt_median_us: mean_of(rows.iter().map(|r| r.rtt_median_us)),
        jitter_us: mean_of(rows.iter().map(|r| r.jitter_us)),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Writes `summary.csv`, one ECDF file per ingress tap and per result, and
/// optionally `trace.jsonl`. A single result gets unlabelled ECDF names.
pub fn write_outputs(dir: &Path, results: &[ExperimentResult], trace: bool) -> Result<(), CliError> {
    let rows: Vec<SummaryRow> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    write_summary_csv(create(&dir.join("summary.csv"))?, &rows)?;
    for r in results {
        let cycle = r.config.app_config().cycle;
        let suffix = if results.len() == 1 {
            String::new()
        } else {
            format!("_{}", r.label)
        };
        for (point, is) in [("L_ingress", &r.is_l), ("P_ingress", &r.is_p)] {
            let path = dir.join(format!("ecdf_{point}{suffix}.csv"));
            write_ecdf_csv(create(&path)?, &ecdf(is.clone()), cycle)?;
        }
    }
    if trace {
        let records: Vec<TapRecord> = results.iter().flat_map(|r| r.trace.iter().cloned()).collect();
        write_trace_jsonl(create(&dir.join("trace.jsonl"))?, &records)?;
    }
    Ok(())
}
