use std::path::Path;

use clap::ValueEnum;
use rayon::prelude::*;

use super::run::{mean_stats, run_experiment, ExperimentResult, MeanStats};
use super::{io_err, CliError, ExperimentConfig, QdiscKind};
use crate::metrics::{compute_rtt_stats, estimate_bridge_latency, MetricsError, RunKey};
use crate::sim::Topology;
use crate::uadp::frame_sizes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepName {
    Cycle,
    Offset,
    Delta,
    Idleslope,
    Framesize,
    Ws,
    Compare,
    Bridge,
    Be,
}

impl SweepName {
    pub fn name(self) -> &'static str {
        match self {
            SweepName::Cycle => "cycle",
            SweepName::Offset => "offset",
            SweepName::Delta => "delta",
            SweepName::Idleslope => "idleslope",
            SweepName::Framesize => "framesize",
            SweepName::Ws => "ws",
            SweepName::Compare => "compare",
            SweepName::Bridge => "bridge",
            SweepName::Be => "be",
        }
    }
}

/// One configuration of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    /// Value of the swept parameter as printed in the table.
    pub value: String,
    pub label: String,
    pub config: ExperimentConfig,
}

const BRIDGE_SETUPS: [(&str, QdiscKind, QdiscKind); 6] = [
    ("E+FQ_C", QdiscKind::Etf, QdiscKind::Fq),
    ("E+MQP", QdiscKind::Etf, QdiscKind::Mqprio),
    ("E+CBS", QdiscKind::Etf, QdiscKind::Cbs),
    ("FQ_C", QdiscKind::Fq, QdiscKind::Fq),
    ("MQP", QdiscKind::Mqprio, QdiscKind::Mqprio),
    ("CBS", QdiscKind::Cbs, QdiscKind::Cbs),
];
const BE_RATES: [u32; 6] = [0, 200, 400, 600, 800, 1000];

fn p2p(base: &ExperimentConfig, q: QdiscKind) -> ExperimentConfig {
    ExperimentConfig {
        topology: Topology::P2p,
        host_qdisc: q,
        txtime_mode: None,
        be_transit: false,
        ..base.clone()
    }
}

fn bridged(base: &ExperimentConfig, host: QdiscKind, bridge: QdiscKind) -> ExperimentConfig {
    ExperimentConfig {
        topology: Topology::Bridged,
        bridge_qdisc: bridge,
        ..p2p(base, host)
    }
}

/// The configurations a sweep runs, in table order. Parameters not swept
/// are taken from `base`.
pub fn sweep_points(name: SweepName, base: &ExperimentConfig) -> Vec<SweepPoint> {
    let point = |value: String, config: ExperimentConfig| SweepPoint {
        label: format!("{}_{}", name.name(), value),
        value,
        config,
    };
    let etf = p2p(base, QdiscKind::Etf);
    match name {
        // Offset and delta keep their ratio to the cycle of the optimum.
        SweepName::Cycle => [100.0, 125.0, 150.0, 200.0, 250.0]
            .into_iter()
            .map(|c| {
                let cfg = ExperimentConfig {
                    cycle_us: c,
                    offset_us: 0.6 * c,
                    delta_us: 0.8 * c,
                    ..etf.clone()
                };
                point(c.to_string(), cfg)
            })
            .collect(),
        SweepName::Offset => (0..6)
            .map(|i| {
                let o = 50.0 * i as f64;
                point(o.to_string(), ExperimentConfig { offset_us: o, ..etf.clone() })
            })
            .collect(),
        SweepName::Delta => (0..6)
            .map(|i| {
                let d = 125.0 + 25.0 * i as f64;
                point(d.to_string(), ExperimentConfig { delta_us: d, ..etf.clone() })
            })
            .collect(),
        SweepName::Idleslope => [80.0, 90.0, 100.0, 110.0, 120.0]
            .into_iter()
            .map(|pct| {
                let cfg = ExperimentConfig {
                    idleslope_pct: pct,
                    ..p2p(base, QdiscKind::Cbs)
                };
                point(pct.to_string(), cfg)
            })
            .collect(),
        SweepName::Framesize => [3, 12, 30, 65, 136, 163]
            .into_iter()
            .map(|n| point(n.to_string(), ExperimentConfig { n_vars: n, ..etf.clone() }))
            .collect(),
        SweepName::Ws => (1..=6)
            .map(|i| {
                let ws = 12.5 * i as f64;
                let cfg = ExperimentConfig {
                    ws_us: ws,
                    ..p2p(base, QdiscKind::Taprio)
                };
                point(ws.to_string(), cfg)
            })
            .collect(),
        SweepName::Compare => QdiscKind::ALL
            .into_iter()
            .map(|q| point(q.name().into(), p2p(base, q)))
            .collect(),
        SweepName::Bridge => BRIDGE_SETUPS
            .into_iter()
            .map(|(label, h, b)| point(label.into(), bridged(base, h, b)))
            .collect(),
        SweepName::Be => BE_RATES
            .into_iter()
            .flat_map(|rate| {
                BRIDGE_SETUPS.into_iter().map(move |(label, h, b)| SweepPoint {
                    value: rate.to_string(),
                    label: format!("be_{rate}_{label}"),
                    config: ExperimentConfig {
                        be_rate_mbps: rate,
                        ..bridged(base, h, b)
                    },
                })
            })
            .collect(),
    }
}

/// Rows of a sweep with the columns of the corresponding table.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub name: SweepName,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub results: Vec<ExperimentResult>,
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn run_key(cfg: &ExperimentConfig) -> RunKey {
    let app = cfg.app_config();
    RunKey {
        cycle: app.cycle,
        offset: app.offset,
        delta: app.delta,
        n_vars: cfg.n_vars,
        host_qdisc: cfg.host_qdisc.name().into(),
    }
}

/// Bridge overhead of `bridged` against the point-to-point run with the
/// same host configuration.
fn bridge_latency(bridged: &ExperimentResult, p2p: &ExperimentResult) -> Result<Option<f64>, MetricsError> {
    let (Some(b), Some(p)) = (compute_rtt_stats(&bridged.rtt), compute_rtt_stats(&p2p.rtt)) else {
        return Ok(None);
    };
    estimate_bridge_latency((&run_key(&bridged.config), &b), (&run_key(&p2p.config), &p)).map(Some)
}

fn run_all(points: &[SweepPoint], trace: bool) -> Result<Vec<ExperimentResult>, CliError> {
    for p in points {
        p.config.validate()?;
    }
    points
        .par_iter()
        .map(|p| {
            let mut r = run_experiment(&p.config, trace)?;
            r.label = p.label.clone();
            Ok(r)
        })
        .collect()
}

pub fn run_sweep(name: SweepName, base: &ExperimentConfig, trace: bool) -> Result<SweepTable, CliError> {
    let points = sweep_points(name, base);
    let mut results = run_all(&points, trace)?;
    let means: Vec<MeanStats> = results.iter().map(|r| mean_stats(&r.rows)).collect();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let basic = |m: &MeanStats| vec![num(m.d_p), num(m.d_l), num(m.d_sigma), opt(m.rtt_us), opt(m.jitter_us)];
    let (header, rows) = match name {
        SweepName::Cycle | SweepName::Offset | SweepName::Delta | SweepName::Idleslope | SweepName::Ws | SweepName::Compare => {
            let first = match name {
                SweepName::Cycle => "cycle_us",
                SweepName::Offset => "offset_us",
                SweepName::Delta => "delta_us",
                SweepName::Idleslope => "idleslope_pct",
                SweepName::Ws => "ws_us",
                _ => "qdisc",
            };
            let header = s(&[first, "d_P", "d_L", "d_sigma", "rtt_us", "jitter_us"]);
            let rows = points
                .iter()
                .zip(&means)
                .map(|(p, m)| [vec![p.value.clone()], basic(m)].concat())
                .collect();
            (header, rows)
        }
        SweepName::Framesize => {
            let header = s(&["n_vars", "uadp_B", "link_B", "physical_B", "d_P", "d_L", "d_sigma", "rtt_us", "jitter_us"]);
            let mut rows = vec![];
            for (p, m) in points.iter().zip(&means) {
                let z = frame_sizes(p.config.n_vars).map_err(|e| super::ConfigError::Invalid(e.to_string()))?;
                let sizes = vec![
                    p.value.clone(),
                    z.uadp_bytes.to_string(),
                    z.link_bytes.to_string(),
                    z.physical_bytes.to_string(),
                ];
                rows.push([sizes, basic(m)].concat());
            }
            (header, rows)
        }
        SweepName::Bridge => {
            let mut counterparts: Vec<SweepPoint> = vec![];
            for p in &points {
                if !counterparts.iter().any(|c| c.config.host_qdisc == p.config.host_qdisc) {
                    counterparts.push(SweepPoint {
                        value: p.config.host_qdisc.name().into(),
                        label: format!("bridge_p2p_{}", p.config.host_qdisc.name()),
                        config: p2p(&p.config, p.config.host_qdisc),
                    });
                }
            }
            let p2p_results = run_all(&counterparts, trace)?;
            let header = s(&[
                "setup", "d_P", "d_b_to_L", "d_L", "d_b_to_P", "d_sigma", "rtt_us", "rtt_median_us", "l_B_us", "jitter_us",
            ]);
            let mut rows = vec![];
            for ((p, m), r) in points.iter().zip(&means).zip(results.iter_mut()) {
                let twin = p2p_results
                    .iter()
                    .find(|c| c.config.host_qdisc == p.config.host_qdisc)
                    .expect("counterpart for every host qdisc");
                let l_b = bridge_latency(r, twin)?;
                for row in &mut r.rows {
                    row.l_b_us = l_b;
                }
                rows.push(vec![
                    p.value.clone(),
                    num(m.d_p),
                    num(m.d_b_to_l),
                    num(m.d_l),
                    num(m.d_b_to_p),
                    num(m.d_sigma),
                    opt(m.rtt_us),
                    opt(m.rtt_median_us),
                    opt(l_b),
                    opt(m.jitter_us),
                ]);
            }
            results.extend(p2p_results);
            (header, rows)
        }
        SweepName::Be => {
            let mut header = vec!["be_rate_mbps".to_string()];
            header.extend(BRIDGE_SETUPS.iter().map(|(l, _, _)| format!("d_P {l}")));
            let rows = means
                .chunks(BRIDGE_SETUPS.len())
                .zip(BE_RATES)
                .map(|(ms, rate)| {
                    let mut row = vec![rate.to_string()];
                    row.extend(ms.iter().map(|m| num(m.d_p)));
                    row
                })
                .collect();
            (header, rows)
        }
    };
    Ok(SweepTable {
        name,
        header,
        rows,
        results,
    })
}

impl SweepTable {
    pub fn file_name(&self) -> String {
        format!("table_{}.csv", self.name.name())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(self.file_name());
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header).map_err(MetricsError::from)?;
        for r in &self.rows {
            w.write_record(r).map_err(MetricsError::from)?;
        }
        w.flush().map_err(io_err(&path))?;
        Ok(())
    }

    /// Aligned plain-text rendering for the terminal.
    pub fn render(&self) -> String {
        let short = |c: &str| match c.parse::<f64>() {
            Ok(x) if c.contains('.') => format!("{x:.4}"),
            _ => c.to_string(),
        };
        let cells: Vec<Vec<String>> = std::iter::once(self.header.clone())
            .chain(self.rows.iter().map(|r| r.iter().map(|c| short(c)).collect()))
            .collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| cells.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        cells
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::build_taprio_schedule;
    use crate::cli::us;

    #[test]
    fn point_counts() {
        let base = ExperimentConfig::default();
        for (name, n) in [
            (SweepName::Cycle, 5),
            (SweepName::Offset, 6),
            (SweepName::Delta, 6),
            (SweepName::Idleslope, 5),
            (SweepName::Framesize, 6),
            (SweepName::Ws, 6),
            (SweepName::Compare, 5),
            (SweepName::Bridge, 6),
            (SweepName::Be, 36),
        ] {
            let pts = sweep_points(name, &base);
            assert_eq!(pts.len(), n, "{name:?}");
            for p in &pts {
                p.config.validate().unwrap_or_else(|e| panic!("{name:?} {}: {e}", p.value));
            }
        }
    }

    #[test]
    fn ws_schedules_fill_the_cycle() {
        for p in sweep_points(SweepName::Ws, &ExperimentConfig::default()) {
            let c = &p.config;
            let s = build_taprio_schedule(0, us(c.cycle_us), us(c.offset_us), us(c.ws_us), us(c.guard_us)).unwrap();
            assert_eq!(s.cycle_time(), 250_000);
        }
    }

    #[test]
    fn framesize_link_bytes() {
        let base = ExperimentConfig::default();
        let link: Vec<usize> = sweep_points(SweepName::Framesize, &base)
            .iter()
            .map(|p| frame_sizes(p.config.n_vars).unwrap().link_bytes)
            .collect();
        assert_eq!(link, [81, 162, 324, 639, 1278, 1521]);
    }

    #[test]
    fn quiet_offset_table() {
        let base = ExperimentConfig {
            packets: 200,
            repetitions: 1,
            clock_error: false,
            ..Default::default()
        };
        let t = run_sweep(SweepName::Offset, &base, false).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.header, ["offset_us", "d_P", "d_L", "d_sigma", "rtt_us", "jitter_us"]);
        let rtt: Vec<f64> = t.rows.iter().map(|r| r[4].parse().unwrap()).collect();
        // Without wake-up latency, frames launched at o = 0 or o = c reach the
        // loopback host just after its subscriber has read, costing a cycle.
        let expect = [500.0, 500.0, 500.0, 500.0, 500.0, 750.0];
        for (r, e) in rtt.iter().zip(expect) {
            assert!((r - e).abs() < 2.0, "{rtt:?}");
        }
    }
}
