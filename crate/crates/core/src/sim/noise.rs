use rand::Rng;

use crate::{Nanos, NS_PER_US};

/// Thread wake-up latency: uniform in `[base_lo, base_hi]`, except with
/// probability `tail_prob` uniform in `[base_hi, tail_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedLatencyModel {
    pub base_lo: Nanos,
    pub base_hi: Nanos,
    pub tail_prob: f64,
    pub tail_max: Nanos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoisePreset {
    None,
    E3,
    D,
}

impl NoisePreset {
    pub fn name(self) -> &'static str {
        match self {
            NoisePreset::None => "none",
            NoisePreset::E3 => "e3",
            NoisePreset::D => "d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(NoisePreset::None),
            "e3" => Some(NoisePreset::E3),
            "d" => Some(NoisePreset::D),
            _ => None,
        }
    }
}

impl SchedLatencyModel {
    pub const fn none() -> Self {
        Self {
            base_lo: 0,
            base_hi: 0,
            tail_prob: 0.0,
            tail_max: 0,
        }
    }

    pub fn preset(p: NoisePreset) -> Self {
        match p {
            NoisePreset::None => Self::none(),
            NoisePreset::E3 => Self {
                base_lo: 5 * NS_PER_US,
                base_hi: 40 * NS_PER_US,
                tail_prob: 0.001,
                tail_max: 130 * NS_PER_US,
            },
            NoisePreset::D => Self {
                base_lo: 5 * NS_PER_US,
                base_hi: 20 * NS_PER_US,
                tail_prob: 0.0005,
                tail_max: 60 * NS_PER_US,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.base_lo < 0 || self.base_lo > self.base_hi || self.base_hi > self.tail_max {
            return Err(format!(
                "need 0 <= base_lo <= base_hi <= tail_max, got {} {} {}",
                self.base_lo, self.base_hi, self.tail_max
            ));
        }
        if !(0.0..=1.0).contains(&self.tail_prob) {
            return Err(format!("tail_prob {} outside [0, 1]", self.tail_prob));
        }
        Ok(())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Nanos {
        // Both draws are always taken so the stream advances identically
        // whatever the parameters.
        let tail = rng.gen::<f64>() < self.tail_prob;
        let u = rng.gen::<f64>();
        let (lo, hi) = if tail {
            (self.base_hi, self.tail_max)
        } else {
            (self.base_lo, self.base_hi)
        };
        lo + (u * (hi - lo) as f64) as Nanos
    }
}
