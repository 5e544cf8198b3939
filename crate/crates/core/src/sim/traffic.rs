use crate::Nanos;

/// Physical size of a full-sized best-effort frame.
pub const BE_PHYSICAL_BYTES: u32 = 1538;

/// Open-loop constant-rate best-effort source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeTrafficGen {
    pub rate_mbps: u32,
    pub physical_bytes: u32,
    pub start: Nanos,
}

impl BeTrafficGen {
    pub fn new(rate_mbps: u32, start: Nanos) -> Self {
        Self {
            rate_mbps,
            physical_bytes: BE_PHYSICAL_BYTES,
            start,
        }
    }

    pub fn is_active(&self) -> bool {
        self.rate_mbps > 0
    }

    /// Send time of the `k`-th frame. Spacing is computed from the start so
    /// rounding never accumulates.
    pub fn send_time(&self, k: u64) -> Option<Nanos> {
        if !self.is_active() {
            return None;
        }
        let bits = u128::from(self.physical_bytes) * 8;
        let ns = u128::from(k) * bits * 1_000 / u128::from(self.rate_mbps);
        Some(self.start + ns as Nanos)
    }
}
