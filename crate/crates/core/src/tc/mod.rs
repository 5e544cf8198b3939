//! Queueing discipline models: strict priority (mqprio), credit-based
//! shaper, time-aware gate schedule (taprio), earliest-txtime-first and the
//! fq_codel baseline.
//!
//! Every discipline is generic over [`Transmittable`] so the models can be
//! driven by the simulator or directly by tests.

mod cbs;
mod etf;
mod fifo;
mod fq;
mod prio;
mod taprio;

pub use cbs::{cbs_params_from_reservation, CbsMode, CbsParams, CbsState};
pub use etf::{Etf, EtfParams};
pub use fifo::Fifo;
pub use fq::{FqCodel, FqCodelParams};
pub use prio::{prio_classify, strict_priority_pick, PriorityMap, NUM_HW_QUEUES};
pub use taprio::{GateEntry, GateSchedule};

use crate::Nanos;
use thiserror::Error;

/// What a qdisc needs to know about a queued frame.
pub trait Transmittable {
    /// Frame size on the wire including preamble and inter-frame gap.
    fn physical_bytes(&self) -> u32;
    /// Requested transmission time, if the socket supplied one.
    fn txtime(&self) -> Option<Nanos>;
    /// Key used for flow hashing.
    fn flow_key(&self) -> u64;
}

/// Default queue limit of the FIFO, CBS and ETF children.
pub const DEFAULT_QUEUE_LIMIT: usize = 1000;

/// Time on the wire for `physical_bytes` at `link_rate` bits per second,
/// rounded up to whole nanoseconds.
pub fn serialization_ns(physical_bytes: u32, link_rate: u64) -> Nanos {
    let bits = u128::from(physical_bytes) * 8 * 1_000_000_000;
    bits.div_ceil(u128::from(link_rate)) as Nanos
}

/// Why a qdisc or NIC discarded a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    /// ETF: the frame's txtime had already passed.
    EtfLate,
    /// ETF: the frame carried no txtime.
    MissingTxtime,
    /// Queue limit reached.
    QueueFull,
    /// CoDel head drop.
    Codel,
    /// The NIC received the frame after its launch time.
    NicLate,
    /// taprio could not place the frame in any window of its class.
    NoWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TcError {
    #[error("time went backwards: {now} < {last}")]
    TimeReversed { now: Nanos, last: Nanos },
    #[error("traffic class {0} is never open in the gate schedule")]
    NoWindow(u8),
    #[error("no window of traffic class {tc} fits {duration} ns")]
    NoFit { tc: u8, duration: Nanos },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::Transmittable;
    use crate::Nanos;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct TestFrame {
        pub id: u64,
        pub bytes: u32,
        pub txtime: Option<Nanos>,
        pub flow: u64,
    }

    impl TestFrame {
        pub fn new(id: u64, bytes: u32) -> Self {
            Self {
                id,
                bytes,
                txtime: None,
                flow: 0,
            }
        }

        pub fn at(id: u64, txtime: Nanos) -> Self {
            Self {
                id,
                bytes: 101,
                txtime: Some(txtime),
                flow: 0,
            }
        }
    }

    impl Transmittable for TestFrame {
        fn physical_bytes(&self) -> u32 {
            self.bytes
        }
        fn txtime(&self) -> Option<Nanos> {
            self.txtime
        }
        fn flow_key(&self) -> u64 {
            self.flow
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_at_gigabit() {
        assert_eq!(serialization_ns(101, 1_000_000_000), 808);
        assert_eq!(serialization_ns(1542, 1_000_000_000), 12_336);
        assert_eq!(serialization_ns(1, 3), 2_666_666_667);
    }
}
