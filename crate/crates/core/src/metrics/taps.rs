use serde::Serialize;

use crate::Nanos;

/// Hardware timestamping points along the path of the published messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TapPoint {
    #[serde(rename = "P_egress")]
    PEgress,
    #[serde(rename = "P_ingress")]
    PIngress,
    #[serde(rename = "B_ingress_from_P")]
    BIngressFromP,
    #[serde(rename = "B_ingress_from_L")]
    BIngressFromL,
    #[serde(rename = "L_ingress")]
    LIngress,
    #[serde(rename = "L_egress")]
    LEgress,
}

impl TapPoint {
    pub const ALL: [TapPoint; 6] = [
        TapPoint::PEgress,
        TapPoint::PIngress,
        TapPoint::BIngressFromP,
        TapPoint::BIngressFromL,
        TapPoint::LIngress,
        TapPoint::LEgress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TapPoint::PEgress => "P_egress",
            TapPoint::PIngress => "P_ingress",
            TapPoint::BIngressFromP => "B_ingress_from_P",
            TapPoint::BIngressFromL => "B_ingress_from_L",
            TapPoint::LIngress => "L_ingress",
            TapPoint::LEgress => "L_egress",
        }
    }
}

/// Timestamps recorded at one point, keyed by probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapSeries {
    pub point: TapPoint,
    pub samples: Vec<(u64, Nanos)>,
}

impl TapSeries {
    pub fn new(point: TapPoint) -> Self {
        Self {
            point,
            samples: Vec::new(),
        }
    }

    pub fn from_times(point: TapPoint, times: impl IntoIterator<Item = Nanos>) -> Self {
        Self {
            point,
            samples: times.into_iter().enumerate().map(|(i, t)| (i as u64, t)).collect(),
        }
    }

    pub fn push(&mut self, probe: u64, time: Nanos) {
        self.samples.push((probe, time));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = Nanos> + '_ {
        self.samples.iter().map(|&(_, t)| t)
    }
}

/// One line of the optional event trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TapRecord {
    pub run_id: String,
    pub seq: u64,
    pub point: TapPoint,
    pub time_ns: Nanos,
}
