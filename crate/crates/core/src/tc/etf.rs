use std::collections::BTreeMap;

use super::{DropReason, TcError, Transmittable, DEFAULT_QUEUE_LIMIT};
use crate::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EtfParams {
    /// How long before its txtime a frame is handed to the NIC.
    pub delta: Nanos,
    /// Launch-time offload: the NIC holds the frame until its txtime.
    pub offload: bool,
    /// Accept frames without a txtime, treating them as due immediately.
    pub skip_sock_check: bool,
}

impl EtfParams {
    pub fn new(delta: Nanos, offload: bool, skip_sock_check: bool) -> Result<Self, TcError> {
        if delta <= 0 {
            return Err(TcError::InvalidParams(format!("etf delta {delta} must be positive")));
        }
        Ok(Self {
            delta,
            offload,
            skip_sock_check,
        })
    }
}

/// Earliest-txtime-first queue.
#[derive(Debug, Clone)]
pub struct Etf<P> {
    pub params: EtfParams,
    queue: BTreeMap<(Nanos, u64), P>,
    seq: u64,
    limit: usize,
}

impl<P: Transmittable> Etf<P> {
    pub fn new(params: EtfParams) -> Self {
        Self::with_limit(params, DEFAULT_QUEUE_LIMIT)
    }

    pub fn with_limit(params: EtfParams, limit: usize) -> Self {
        Self {
            params,
            queue: BTreeMap::new(),
            seq: 0,
            limit,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    /// Inserts `p` in txtime order, or rejects it as late, untimed or
    /// over the limit.
    pub fn enqueue(&mut self, now: Nanos, p: P) -> Result<(), (P, DropReason)> {
        let txtime = match p.txtime() {
            Some(t) => t,
            None if self.params.skip_sock_check => now,
            None => return Err((p, DropReason::MissingTxtime)),
        };
        if now > txtime {
            return Err((p, DropReason::EtfLate));
        }
        if self.queue.len() >= self.limit {
            return Err((p, DropReason::QueueFull));
        }
        self.queue.insert((txtime, self.seq), p);
        self.seq += 1;
        Ok(())
    }

    /// Drops every queued frame whose txtime has passed, then releases the
    /// head together with its txtime if `now` is within `delta` of it.
    pub fn dequeue(&mut self, now: Nanos, dropped: &mut Vec<(P, DropReason)>) -> Option<(P, Nanos)> {
        while let Some(entry) = self.queue.first_entry() {
            let txtime = entry.key().0;
            if now > txtime {
                dropped.push((entry.remove(), DropReason::EtfLate));
            } else if now >= txtime - self.params.delta {
                return Some((entry.remove(), txtime));
            } else {
                return None;
            }
        }
        None
    }

    /// When the head becomes releasable.
    pub fn next_release(&self) -> Option<Nanos> {
        self.queue
            .keys()
            .next()
            .map(|&(txtime, _)| txtime - self.params.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tc::test_util::TestFrame;
    use proptest::prelude::*;

    const DELTA: Nanos = 200_000;

    fn etf() -> Etf<TestFrame> {
        Etf::new(EtfParams::new(DELTA, true, false).unwrap())
    }

    #[test]
    fn released_at_txtime_minus_delta() {
        let mut q = etf();
        let t = 1_000_000;
        q.enqueue(0, TestFrame::at(1, t)).unwrap();
        let mut drops = vec![];
        assert!(q.dequeue(t - DELTA - 1, &mut drops).is_none());
        let (f, tx) = q.dequeue(t - DELTA, &mut drops).unwrap();
        assert_eq!((f.id, tx), (1, t));
        assert!(drops.is_empty());
    }

    #[test]
    fn late_enqueue_dropped() {
        let mut q = etf();
        let t = 1_000_000;
        let (f, why) = q.enqueue(t + 1, TestFrame::at(1, t)).unwrap_err();
        assert_eq!((f.id, why), (1, DropReason::EtfLate));
        assert!(q.enqueue(t, TestFrame::at(2, t)).is_ok());
    }

    #[test]
    fn sorted_by_txtime() {
        let mut q = etf();
        q.enqueue(0, TestFrame::at(1, 1_100_000)).unwrap();
        q.enqueue(0, TestFrame::at(2, 1_000_000)).unwrap();
        let mut drops = vec![];
        assert_eq!(q.dequeue(1_000_000, &mut drops).unwrap().0.id, 2);
        assert_eq!(q.dequeue(1_000_000, &mut drops).unwrap().0.id, 1);
        assert!(drops.is_empty());
    }

    #[test]
    fn overdue_head_dropped_on_dequeue() {
        let mut q = etf();
        q.enqueue(0, TestFrame::at(1, 1_000)).unwrap();
        q.enqueue(0, TestFrame::at(2, 500_000)).unwrap();
        let mut drops = vec![];
        let (f, _) = q.dequeue(300_000, &mut drops).unwrap();
        assert_eq!(f.id, 2);
        assert_eq!(drops.len(), 1);
        assert_eq!(drops[0].1, DropReason::EtfLate);
    }

    #[test]
    fn missing_txtime() {
        let mut q = etf();
        let f = TestFrame::new(1, 101);
        assert_eq!(q.enqueue(5, f).unwrap_err().1, DropReason::MissingTxtime);
        let mut lax = Etf::new(EtfParams::new(DELTA, true, true).unwrap());
        lax.enqueue(5, f).unwrap();
        let mut drops = vec![];
        assert_eq!(lax.dequeue(5, &mut drops).map(|(_, t)| t), Some(5));
    }

    #[test]
    fn delta_must_be_positive() {
        assert!(EtfParams::new(0, true, false).is_err());
    }

    proptest! {
        #[test]
        fn release_window_holds(
            frames in proptest::collection::vec((0i64..1_000_000, 0i64..1_000_000), 1..100),
            polls in proptest::collection::vec(0i64..50_000, 1..200),
        ) {
            let mut q = etf();
            let mut now = 0;
            let mut drops = vec![];
            let mut frames = frames.into_iter().enumerate();
            for step in polls {
                now += step;
                if let Some((i, (lead, jitter))) = frames.next() {
                    let f = TestFrame::at(i as u64, now + lead - jitter / 4);
                    if let Err((f, why)) = q.enqueue(now, f) {
                        prop_assert_eq!(why, DropReason::EtfLate);
                        prop_assert!(now > f.txtime.unwrap());
                    }
                }
                while let Some((f, tx)) = q.dequeue(now, &mut drops) {
                    prop_assert_eq!(Some(tx), f.txtime);
                    prop_assert!(tx - DELTA <= now && now <= tx);
                }
                for (f, _) in drops.drain(..) {
                    prop_assert!(now > f.txtime.unwrap());
                }
            }
        }
    }
}
