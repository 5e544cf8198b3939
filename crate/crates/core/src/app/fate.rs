/// Where a probe was lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossPoint {
    /// At the publisher host: its qdisc or NIC, or its subscriber.
    Publisher,
    /// At the loopback host.
    Loopback,
    /// In the bridge, towards the loopback host.
    BridgeToLoopback,
    /// In the bridge, towards the publisher host.
    BridgeToPublisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Pending,
    Returned,
    Lost(LossPoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FateCounts {
    pub published: u64,
    pub returned: u64,
    pub d_p: u64,
    pub d_l: u64,
    pub d_b_to_l: u64,
    pub d_b_to_p: u64,
}

impl FateCounts {
    pub fn lost(&self) -> u64 {
        self.d_p + self.d_l + self.d_b_to_l + self.d_b_to_p
    }
}

/// Outcome of every message the publisher sent, indexed by probe.
///
/// A return overrides an earlier loss: a stale republication of the same
/// probe may still make it back. Otherwise the first recorded loss wins.
#[derive(Debug, Clone, Default)]
pub struct FateTable {
    fates: Vec<Fate>,
}

impl FateTable {
    pub fn publish(&mut self) -> u64 {
        self.fates.push(Fate::Pending);
        self.fates.len() as u64 - 1
    }

    pub fn published(&self) -> u64 {
        self.fates.len() as u64
    }

    pub fn record_loss(&mut self, probe: u64, at: LossPoint) {
        if let Some(f) = self.fates.get_mut(probe as usize) {
            if *f == Fate::Pending {
                *f = Fate::Lost(at);
            }
        }
    }

    /// Marks `probe` returned; true only the first time.
    pub fn record_return(&mut self, probe: u64) -> bool {
        match self.fates.get_mut(probe as usize) {
            Some(f) if *f != Fate::Returned => {
                *f = Fate::Returned;
                true
            }
            _ => false,
        }
    }

    pub fn is_returned(&self, probe: u64) -> bool {
        self.fates.get(probe as usize) == Some(&Fate::Returned)
    }

    /// Tallies fates. Probes still pending never came back to the
    /// publisher and count against it.
    pub fn counts(&self) -> FateCounts {
        let mut c = FateCounts {
            published: self.published(),
            ..FateCounts::default()
        };
        for f in &self.fates {
            match f {
                Fate::Returned => c.returned += 1,
                Fate::Pending | Fate::Lost(LossPoint::Publisher) => c.d_p += 1,
                Fate::Lost(LossPoint::Loopback) => c.d_l += 1,
                Fate::Lost(LossPoint::BridgeToLoopback) => c.d_b_to_l += 1,
                Fate::Lost(LossPoint::BridgeToPublisher) => c.d_b_to_p += 1,
            }
        }
        c
    }

    pub fn pending(&self) -> u64 {
        self.fates.iter().filter(|f| **f == Fate::Pending).count() as u64
    }
}
