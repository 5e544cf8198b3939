use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Nanos, NS_PER_US};

/// Steps retained for reads that lag the newest one.
const HISTORY: usize = 64;

/// Residual synchronization error of the hardware (PTP) and system
/// (phc2sys) clocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockModel {
    pub hw_bound: Nanos,
    pub sys_bound: Nanos,
    /// Interval between random-walk steps.
    pub step: Nanos,
}

impl Default for ClockModel {
    fn default() -> Self {
        Self {
            hw_bound: 50,
            sys_bound: 2_700,
            step: 1_000 * NS_PER_US,
        }
    }
}

impl ClockModel {
    pub fn ideal() -> Self {
        Self {
            hw_bound: 0,
            sys_bound: 0,
            ..Self::default()
        }
    }
}

/// Bounded random walk of an offset, advanced in fixed steps so that its
/// value at a time does not depend on when it is read.
#[derive(Debug, Clone)]
struct Walk {
    bound: f64,
    step: Nanos,
    rng: ChaCha8Rng,
    first_step: i64,
    values: VecDeque<f64>,
}

impl Walk {
    fn new(bound: Nanos, step: Nanos, mut rng: ChaCha8Rng) -> Self {
        let bound = bound as f64;
        let start = if bound > 0.0 {
            rng.gen_range(-bound..=bound)
        } else {
            0.0
        };
        Self {
            bound,
            step,
            rng,
            first_step: 0,
            values: VecDeque::from([start]),
        }
    }

    fn at(&mut self, t: Nanos) -> Nanos {
        if self.bound == 0.0 {
            return 0;
        }
        let k = t.div_euclid(self.step).max(0);
        while self.first_step + self.values.len() as i64 <= k {
            let last = *self.values.back().expect("never empty");
            let inc = self.rng.gen_range(-1.0..=1.0) * self.bound / 8.0;
            let mut next = last + inc;
            if next > self.bound {
                next = 2.0 * self.bound - next;
            } else if next < -self.bound {
                next = -2.0 * self.bound - next;
            }
            self.values.push_back(next);
            if self.values.len() > HISTORY {
                self.values.pop_front();
                self.first_step += 1;
            }
        }
        let idx = (k - self.first_step).max(0) as usize;
        self.values[idx].round() as Nanos
    }
}

/// Offsets of one host from true time.
#[derive(Debug, Clone)]
pub struct HostClock {
    hw: Walk,
    sys: Walk,
}

impl HostClock {
    /// `hw_rng` and `sys_rng` must be independent streams.
    pub fn new(model: &ClockModel, grandmaster: bool, hw_rng: ChaCha8Rng, sys_rng: ChaCha8Rng) -> Self {
        let hw_bound = if grandmaster { 0 } else { model.hw_bound };
        Self {
            hw: Walk::new(hw_bound, model.step, hw_rng),
            sys: Walk::new(model.sys_bound, model.step, sys_rng),
        }
    }

    pub fn hw_offset(&mut self, true_time: Nanos) -> Nanos {
        self.hw.at(true_time)
    }

    pub fn sys_offset(&mut self, true_time: Nanos) -> Nanos {
        self.sys.at(true_time)
    }

    /// Hardware clock reading.
    pub fn hw_read(&mut self, true_time: Nanos) -> Nanos {
        true_time + self.hw_offset(true_time)
    }

    /// System clock reading.
    pub fn sys_read(&mut self, true_time: Nanos) -> Nanos {
        true_time + self.sys_offset(true_time)
    }

    /// True time at which the system clock shows `local`.
    pub fn sys_to_true(&mut self, local: Nanos) -> Nanos {
        local - self.sys_offset(local)
    }

    /// True time at which the hardware clock shows `local`.
    pub fn hw_to_true(&mut self, local: Nanos) -> Nanos {
        local - self.hw_offset(local)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn rng(stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        r.set_stream(stream);
        r
    }

    #[test]
    fn ideal_is_identity() {
        let mut c = HostClock::new(&ClockModel::ideal(), false, rng(0), rng(1));
        for t in [0, 17, 1_000_000_000, 5_123_456_789] {
            assert_eq!(c.hw_read(t), t);
            assert_eq!(c.sys_read(t), t);
        }
    }

    #[test]
    fn grandmaster_hw_is_exact() {
        let mut c = HostClock::new(&ClockModel::default(), true, rng(0), rng(1));
        for t in (0..100).map(|i| i * 7_777_777) {
            assert_eq!(c.hw_read(t), t);
        }
    }

    #[test]
    fn read_pattern_does_not_matter() {
        let m = ClockModel::default();
        let mut a = HostClock::new(&m, false, rng(0), rng(1));
        let mut b = HostClock::new(&m, false, rng(0), rng(1));
        let late = a.sys_offset(50_000_000);
        for t in (0..=50).map(|i| i * 1_000_000) {
            b.sys_offset(t);
        }
        assert_eq!(b.sys_offset(50_000_000), late);
        assert_eq!(a.sys_offset(49_500_000), b.sys_offset(49_500_000));
    }

    proptest! {
        #[test]
        fn offsets_bounded(seed in any::<u64>(), times in proptest::collection::vec(0i64..10_000_000_000, 1..50)) {
            let m = ClockModel::default();
            let mut r0 = ChaCha8Rng::seed_from_u64(seed);
            r0.set_stream(0);
            let mut r1 = ChaCha8Rng::seed_from_u64(seed);
            r1.set_stream(1);
            let mut c = HostClock::new(&m, false, r0, r1);
            let mut times = times;
            times.sort_unstable();
            for t in times {
                prop_assert!(c.hw_offset(t).abs() <= m.hw_bound);
                prop_assert!(c.sys_offset(t).abs() <= m.sys_bound);
            }
        }
    }
}
