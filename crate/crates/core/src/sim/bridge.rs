use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Link, Port, QdiscSpec};
use crate::uadp::MacAddr;
use crate::{Nanos, NS_PER_US};

/// Time from full reception to the egress enqueue: `fixed` plus a uniform
/// draw from `[0, spread]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BridgeLatency {
    pub fixed: Nanos,
    pub spread: Nanos,
}

impl Default for BridgeLatency {
    fn default() -> Self {
        Self {
            fixed: 30 * NS_PER_US,
            spread: 8 * NS_PER_US,
        }
    }
}

/// Store-and-forward learning bridge.
#[derive(Debug)]
pub struct Bridge {
    pub ports: Vec<Port>,
    table: HashMap<MacAddr, usize>,
    latency: BridgeLatency,
    rng: ChaCha8Rng,
}

impl Bridge {
    pub fn new(
        n_ports: usize,
        egress: &QdiscSpec,
        link: Link,
        latency: BridgeLatency,
        rng: ChaCha8Rng,
        now: Nanos,
    ) -> Self {
        Self {
            ports: (0..n_ports).map(|_| Port::new(egress, link, now)).collect(),
            table: HashMap::new(),
            latency,
            rng,
        }
    }

    /// Learns the source of a fully received frame and returns when it is
    /// handed to the egress port.
    pub fn on_receive(&mut self, in_port: usize, src: MacAddr, now: Nanos) -> Nanos {
        self.table.insert(src, in_port);
        let jitter = if self.latency.spread > 0 {
            self.rng.gen_range(0..=self.latency.spread)
        } else {
            0
        };
        now + self.latency.fixed + jitter
    }

    /// Ports a frame for `dst` leaves through. Unknown and group addresses
    /// flood every other port.
    pub fn egress_ports(&self, in_port: usize, dst: MacAddr) -> Vec<usize> {
        match self.table.get(&dst) {
            Some(&p) if !dst.is_multicast() => {
                if p == in_port {
                    vec![]
                } else {
                    vec![p]
                }
            }
            _ => (0..self.ports.len()).filter(|&p| p != in_port).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn bridge(latency: BridgeLatency) -> Bridge {
        Bridge::new(
            3,
            &QdiscSpec::Mqprio,
            Link::default(),
            latency,
            ChaCha8Rng::seed_from_u64(0),
            0,
        )
    }

    #[test]
    fn fixed_latency_passthrough() {
        let mut b = bridge(BridgeLatency {
            fixed: 12_000,
            spread: 0,
        });
        assert_eq!(b.on_receive(0, MacAddr([2, 0, 0, 0, 0, 1]), 1_000), 13_000);
    }

    #[test]
    fn spread_is_bounded() {
        let mut b = bridge(BridgeLatency::default());
        for _ in 0..1_000 {
            let t = b.on_receive(0, MacAddr::default(), 0);
            assert!((30_000..=38_000).contains(&t));
        }
    }

    #[test]
    fn learn_then_forward() {
        let mut b = bridge(BridgeLatency::default());
        let a = MacAddr([2, 0, 0, 0, 0, 1]);
        let c = MacAddr([2, 0, 0, 0, 0, 2]);
        assert_eq!(b.egress_ports(0, c), vec![1, 2]);
        b.on_receive(1, c, 0);
        assert_eq!(b.egress_ports(0, c), vec![1]);
        b.on_receive(0, a, 0);
        assert_eq!(b.egress_ports(1, a), vec![0]);
        assert!(b.egress_ports(0, a).is_empty());
        let group = MacAddr([1, 0, 0x5e, 0, 0, 1]);
        assert_eq!(b.egress_ports(2, group), vec![0, 1]);
    }
}
