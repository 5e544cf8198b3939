use crate::app::Role;
use crate::tc::Transmittable;
use crate::uadp::MacAddr;
use crate::Nanos;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameKind {
    /// Encoded UADP message published by `origin`. The probe identifies the
    /// publisher message it carries or mirrors; it travels out of band.
    Opc {
        origin: Role,
        probe: Option<u64>,
        uadp: Vec<u8>,
    },
    BestEffort,
}

/// A frame as it moves through qdiscs, NICs, links and the bridge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimFrame {
    pub src: MacAddr,
    pub dst: MacAddr,
    pub pcp: u8,
    pub physical_bytes: u32,
    pub txtime: Option<Nanos>,
    pub kind: FrameKind,
}

impl SimFrame {
    pub fn probe(&self) -> Option<u64> {
        match &self.kind {
            FrameKind::Opc { probe, .. } => *probe,
            FrameKind::BestEffort => None,
        }
    }

    pub fn origin(&self) -> Option<Role> {
        match &self.kind {
            FrameKind::Opc { origin, .. } => Some(*origin),
            FrameKind::BestEffort => None,
        }
    }
}

impl Transmittable for SimFrame {
    fn physical_bytes(&self) -> u32 {
        self.physical_bytes
    }

    fn txtime(&self) -> Option<Nanos> {
        self.txtime
    }

    fn flow_key(&self) -> u64 {
        let mut key = [0u8; 8];
        key[..6].copy_from_slice(&self.src.0);
        key[6] = self.pcp;
        key[7] = matches!(self.kind, FrameKind::BestEffort) as u8;
        u64::from_le_bytes(key)
    }
}
