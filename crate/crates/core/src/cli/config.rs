//! Experiment configuration, read from a flat text file:
//!
//! ```text
//! # comment
//! host_qdisc = etf
//! offset_us = 150
//! ```
//!
//! Unknown keys are an error. Times are in microseconds unless the key says
//! otherwise.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::schedule::build_taprio_schedule;
use super::ConfigError;
use crate::app::AppConfig;
use crate::sim::{BeConfig, BridgeLatency, ClockModel, Link, NoisePreset, QdiscSpec, SchedLatencyModel, Topology, WorldConfig, BE_PHYSICAL_BYTES};
use crate::tc::{cbs_params_from_reservation, CbsMode, EtfParams};
use crate::uadp::frame_sizes;
use crate::{Nanos, NS_PER_SEC};

/// Slack between the taprio txtime delay and the ETF delta.
const TAPRIO_DELAY_MARGIN: Nanos = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdiscKind {
    Fq,
    Mqprio,
    Cbs,
    Etf,
    Taprio,
}

impl QdiscKind {
    pub const ALL: [QdiscKind; 5] = [QdiscKind::Etf, QdiscKind::Fq, QdiscKind::Mqprio, QdiscKind::Cbs, QdiscKind::Taprio];

    pub fn name(self) -> &'static str {
        match self {
            QdiscKind::Fq => "fq",
            QdiscKind::Mqprio => "mqprio",
            QdiscKind::Cbs => "cbs",
            QdiscKind::Etf => "etf",
            QdiscKind::Taprio => "taprio",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.name() == s)
    }

    /// Whether the qdisc schedules by per-frame txtime.
    pub fn uses_txtime(self) -> bool {
        matches!(self, QdiscKind::Etf | QdiscKind::Taprio)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub host_qdisc: QdiscKind,
    pub bridge_qdisc: QdiscKind,
    pub cycle_us: f64,
    pub offset_us: f64,
    pub delta_us: f64,
    pub n_vars: usize,
    /// Defaults to whether the host qdisc uses txtime.
    pub txtime_mode: Option<bool>,
    /// CBS reservation in percent of the OPC UA flow's physical bandwidth.
    pub idleslope_pct: f64,
    pub cbs_mode: CbsMode,
    pub ws_us: f64,
    pub guard_us: f64,
    pub be_rate_mbps: u32,
    pub be_transit: bool,
    pub packets: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub noise: NoisePreset,
    pub wake_lo_us: Option<f64>,
    pub wake_hi_us: Option<f64>,
    pub tail_prob: Option<f64>,
    pub tail_max_us: Option<f64>,
    /// Residual PTP and phc2sys error on the hosts.
    pub clock_error: bool,
    pub bridge_latency_fixed_us: f64,
    pub bridge_latency_spread_us: f64,
    pub base_time_ns: Nanos,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: Topology::P2p,
            host_qdisc: QdiscKind::Etf,
            bridge_qdisc: QdiscKind::Mqprio,
            cycle_us: 250.0,
            offset_us: 150.0,
            delta_us: 200.0,
            n_vars: 3,
            txtime_mode: None,
            idleslope_pct: 100.0,
            cbs_mode: CbsMode::Linux,
            ws_us: 62.5,
            guard_us: 15.0,
            be_rate_mbps: 0,
            be_transit: false,
            packets: 700_000,
            repetitions: 5,
            seed: 1,
            noise: NoisePreset::None,
            wake_lo_us: None,
            wake_hi_us: None,
            tail_prob: None,
            tail_max_us: None,
            clock_error: true,
            bridge_latency_fixed_us: 30.0,
            bridge_latency_spread_us: 8.0,
            base_time_ns: NS_PER_SEC,
        }
    }
}

pub fn us(x: f64) -> Nanos {
    (x * 1_000.0).round() as Nanos
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: i + 1,
                text: raw.into(),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        };
        match key {
            "topology" => {
                self.topology = match value {
                    "p2p" => Topology::P2p,
                    "bridged" => Topology::Bridged,
                    _ => return Err(bad()),
                }
            }
            "host_qdisc" => self.host_qdisc = QdiscKind::parse(value).ok_or_else(bad)?,
            "bridge_qdisc" => self.bridge_qdisc = QdiscKind::parse(value).ok_or_else(bad)?,
            "cycle_us" => self.cycle_us = parse_num(key, value)?,
            "offset_us" => self.offset_us = parse_num(key, value)?,
            "delta_us" => self.delta_us = parse_num(key, value)?,
            "n_vars" => self.n_vars = parse_num(key, value)?,
            "txtime_mode" => self.txtime_mode = Some(parse_bool(key, value)?),
            "idleslope_pct" => self.idleslope_pct = parse_num(key, value)?,
            "cbs_mode" => {
                self.cbs_mode = match value {
                    "linux" => CbsMode::Linux,
                    "standard" => CbsMode::Standard,
                    _ => return Err(bad()),
                }
            }
            "ws_us" => self.ws_us = parse_num(key, value)?,
            "guard_us" => self.guard_us = parse_num(key, value)?,
            "be_rate_mbps" => self.be_rate_mbps = parse_num(key, value)?,
            "be_transit" => self.be_transit = parse_bool(key, value)?,
            "packets" => self.packets = parse_num(key, value)?,
            "repetitions" => self.repetitions = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "noise" => self.noise = NoisePreset::parse(value).ok_or_else(bad)?,
            "wake_lo_us" => self.wake_lo_us = Some(parse_num(key, value)?),
            "wake_hi_us" => self.wake_hi_us = Some(parse_num(key, value)?),
            "tail_prob" => self.tail_prob = Some(parse_num(key, value)?),
            "tail_max_us" => self.tail_max_us = Some(parse_num(key, value)?),
            "clock_error" => self.clock_error = parse_bool(key, value)?,
            "bridge_latency_fixed_us" => self.bridge_latency_fixed_us = parse_num(key, value)?,
            "bridge_latency_spread_us" => self.bridge_latency_spread_us = parse_num(key, value)?,
            "base_time_ns" => self.base_time_ns = parse_num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn txtime_mode(&self) -> bool {
        self.txtime_mode.unwrap_or(self.host_qdisc.uses_txtime())
    }

    /// Every setting, one sorted `key = value` line each, with the noise
    /// model and txtime mode resolved. Parsing it gives an equivalent config.
    pub fn canonical(&self) -> String {
        let noise = self.noise_model();
        let mut kv: Vec<(&str, String)> = vec![
            ("topology", self.topology.name().into()),
            ("host_qdisc", self.host_qdisc.name().into()),
            ("bridge_qdisc", self.bridge_qdisc.name().into()),
            ("cycle_us", self.cycle_us.to_string()),
            ("offset_us", self.offset_us.to_string()),
            ("delta_us", self.delta_us.to_string()),
            ("n_vars", self.n_vars.to_string()),
            ("txtime_mode", self.txtime_mode().to_string()),
            ("idleslope_pct", self.idleslope_pct.to_string()),
            (
                "cbs_mode",
                match self.cbs_mode {
                    CbsMode::Linux => "linux",
                    CbsMode::Standard => "standard",
                }
                .into(),
            ),
            ("ws_us", self.ws_us.to_string()),
            ("guard_us", self.guard_us.to_string()),
            ("be_rate_mbps", self.be_rate_mbps.to_string()),
            ("be_transit", self.be_transit.to_string()),
            ("packets", self.packets.to_string()),
            ("repetitions", self.repetitions.to_string()),
            ("seed", self.seed.to_string()),
            ("noise", self.noise.name().into()),
            ("wake_lo_us", (noise.base_lo as f64 / 1e3).to_string()),
            ("wake_hi_us", (noise.base_hi as f64 / 1e3).to_string()),
            ("tail_prob", noise.tail_prob.to_string()),
            ("tail_max_us", (noise.tail_max as f64 / 1e3).to_string()),
            ("clock_error", self.clock_error.to_string()),
            ("bridge_latency_fixed_us", self.bridge_latency_fixed_us.to_string()),
            ("bridge_latency_spread_us", self.bridge_latency_spread_us.to_string()),
            ("base_time_ns", self.base_time_ns.to_string()),
        ];
        kv.sort();
        let mut out = String::new();
        for (k, v) in kv {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        }
        out
    }

    /// Short digest of everything but the seed and repetition count, so
    /// that rows of the same experiment share it.
    pub fn hash(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !l.starts_with("seed ") && !l.starts_with("repetitions "))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn noise_model(&self) -> SchedLatencyModel {
        let mut m = SchedLatencyModel::preset(self.noise);
        if let Some(x) = self.wake_lo_us {
            m.base_lo = us(x);
        }
        if let Some(x) = self.wake_hi_us {
            m.base_hi = us(x);
        }
        if let Some(x) = self.tail_prob {
            m.tail_prob = x;
        }
        if let Some(x) = self.tail_max_us {
            m.tail_max = us(x);
        }
        m
    }

    pub fn app_config(&self) -> AppConfig {
        AppConfig {
            cycle: us(self.cycle_us),
            offset: us(self.offset_us),
            delta: us(self.delta_us),
            n_vars: self.n_vars,
            txtime_mode: self.txtime_mode(),
            base_time: self.base_time_ns,
        }
    }
}

impl ExperimentConfig {
    /// Checks every constraint and builds the world of repetition 0. Returns
    /// advisory warnings.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.host_qdisc.uses_txtime() && !self.txtime_mode() {
            return invalid(format!("{} requires txtime_mode", self.host_qdisc.name()));
        }
        if !matches!(self.bridge_qdisc, QdiscKind::Fq | QdiscKind::Mqprio | QdiscKind::Cbs) {
            return invalid(format!("bridge_qdisc {} not supported, use fq, mqprio or cbs", self.bridge_qdisc.name()));
        }
        if self.be_transit && self.topology != Topology::Bridged {
            return invalid("be_transit requires topology = bridged".into());
        }
        if self.packets == 0 || self.repetitions == 0 {
            return invalid("packets and repetitions must be positive".into());
        }
        if self.bridge_latency_fixed_us < 0.0 || self.bridge_latency_spread_us < 0.0 {
            return invalid("bridge latency must not be negative".into());
        }
        let warnings = self.app_config().validate().map_err(ConfigError::Invalid)?;
        self.world_config(0)?;
        Ok(warnings)
    }

    fn qdisc_spec(&self, kind: QdiscKind) -> Result<QdiscSpec, ConfigError> {
        let tc = |e: crate::tc::TcError| ConfigError::Invalid(e.to_string());
        let app = self.app_config();
        let etf = || EtfParams::new(app.delta, true, false).map_err(tc);
        Ok(match kind {
            QdiscKind::Fq => QdiscSpec::FqCodel,
            QdiscKind::Mqprio => QdiscSpec::Mqprio,
            QdiscKind::Cbs => {
                let sizes = frame_sizes(self.n_vars).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let flow_bits = sizes.physical_bytes as f64 * 8.0;
                let reserved = self.idleslope_pct / 100.0 * flow_bits * NS_PER_SEC as f64 / app.cycle as f64;
                let p = cbs_params_from_reservation(
                    Link::default().rate,
                    reserved,
                    flow_bits as u64,
                    BE_PHYSICAL_BYTES as u64 * 8,
                    self.cbs_mode,
                )
                .map_err(tc)?;
                QdiscSpec::Cbs(p)
            }
            QdiscKind::Etf => QdiscSpec::Etf(etf()?),
            QdiscKind::Taprio => {
                let schedule = build_taprio_schedule(
                    self.base_time_ns,
                    app.cycle,
                    app.offset,
                    us(self.ws_us),
                    us(self.guard_us),
                )
                .map_err(tc)?
                .with_txtime_assist(app.delta + TAPRIO_DELAY_MARGIN, app.delta)
                .map_err(tc)?;
                QdiscSpec::Taprio {
                    schedule,
                    etf: etf()?,
                }
            }
        })
    }

    /// The simulation of repetition `rep`, seeded with `seed + rep`.
    pub fn world_config(&self, rep: u32) -> Result<WorldConfig, ConfigError> {
        let mut w = WorldConfig::new(self.qdisc_spec(self.host_qdisc)?, self.app_config(), self.packets);
        w.topology = self.topology;
        w.bridge_qdisc = self.qdisc_spec(self.bridge_qdisc)?;
        w.noise = self.noise_model();
        w.noise.validate().map_err(ConfigError::Invalid)?;
        w.clock = if self.clock_error {
            ClockModel::default()
        } else {
            ClockModel::ideal()
        };
        w.bridge_latency = BridgeLatency {
            fixed: us(self.bridge_latency_fixed_us),
            spread: us(self.bridge_latency_spread_us),
        };
        w.be = BeConfig {
            rate_mbps: self.be_rate_mbps,
            transit: self.be_transit,
        };
        w.seed = self.seed.wrapping_add(rep as u64);
        w.run_id = format!("{}-{}", self.hash(), rep);
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides_defaults() {
        let cfg = ExperimentConfig::parse("# optimum\nhost_qdisc = taprio\n\noffset_us = 100 # trailing\nnoise = e3\n").unwrap();
        assert_eq!(cfg.host_qdisc, QdiscKind::Taprio);
        assert_eq!(cfg.offset_us, 100.0);
        assert_eq!(cfg.noise, NoisePreset::E3);
        assert_eq!(cfg.packets, 700_000);
        assert_eq!(cfg.repetitions, 5);
        assert_eq!(cfg.guard_us, 15.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(ExperimentConfig::parse("cycle_us 250"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(ExperimentConfig::parse("cycle_us = fast"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(ExperimentConfig::parse("host_qdisc = pfifo"), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn canonical_roundtrip() {
        let cfg = ExperimentConfig::parse("host_qdisc = cbs\nidleslope_pct = 110\nws_us = 37.5").unwrap();
        let again = ExperimentConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(again.canonical(), cfg.canonical());
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn hash_ignores_seed_only() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { seed: 99, ..a.clone() };
        let c = ExperimentConfig { offset_us: 100.0, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 12);
    }

    #[test]
    fn etf_without_txtime_rejected() {
        let cfg = ExperimentConfig::parse("host_qdisc = etf\ntxtime_mode = false").unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
        let cfg = ExperimentConfig::parse("host_qdisc = mqprio").unwrap();
        assert!(!cfg.txtime_mode());
        assert!(cfg.validate().unwrap().is_empty());
    }

    #[test]
    fn invalid_combinations() {
        for text in [
            "bridge_qdisc = etf",
            "be_transit = true",
            "packets = 0",
            "offset_us = 300",
            "host_qdisc = taprio\noffset_us = 10",
            "host_qdisc = taprio\nws_us = 100",
            "host_qdisc = cbs\nidleslope_pct = 0",
            "n_vars = 164",
            "wake_lo_us = 50\nwake_hi_us = 10",
        ] {
            let cfg = ExperimentConfig::parse(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
    }

    #[test]
    fn delta_budget_is_advisory() {
        let cfg = ExperimentConfig::parse("delta_us = 250").unwrap();
        assert_eq!(cfg.validate().unwrap().len(), 1);
    }

    #[test]
    fn cbs_reservation_in_physical_bits() {
        let cfg = ExperimentConfig::parse("host_qdisc = cbs\nidleslope_pct = 110").unwrap();
        let QdiscSpec::Cbs(p) = cfg.qdisc_spec(QdiscKind::Cbs).unwrap() else {
            panic!("not cbs");
        };
        // 1.1 * 808 bits per 250 µs
        assert!((p.idle_slope - 3.5552e6).abs() < 1e-3, "{}", p.idle_slope);
    }

    #[test]
    fn repetition_seeds() {
        let cfg = ExperimentConfig {
            seed: 7,
            ..Default::default()
        };
        assert_eq!(cfg.world_config(0).unwrap().seed, 7);
        assert_eq!(cfg.world_config(3).unwrap().seed, 10);
    }
}
