use crate::tc::serialization_ns;
use crate::Nanos;

/// Full-duplex point-to-point Ethernet link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    /// Bits per second.
    pub rate: u64,
    pub propagation: Nanos,
}

impl Default for Link {
    fn default() -> Self {
        Self {
            rate: 1_000_000_000,
            propagation: 500,
        }
    }
}

impl Link {
    pub fn serialization(&self, physical_bytes: u32) -> Nanos {
        serialization_ns(physical_bytes, self.rate)
    }

    /// When the start-of-frame delimiter of a frame that started at
    /// `wire_start` reaches the peer.
    pub fn sfd_at_peer(&self, wire_start: Nanos) -> Nanos {
        wire_start + self.propagation
    }

    /// When the last bit reaches the peer.
    pub fn arrival(&self, wire_start: Nanos, physical_bytes: u32) -> Nanos {
        wire_start + self.serialization(physical_bytes) + self.propagation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_experiment_frame() {
        let l = Link::default();
        assert_eq!(l.serialization(101), 808);
        assert_eq!(l.arrival(0, 101), 808 + 500);
    }
}
