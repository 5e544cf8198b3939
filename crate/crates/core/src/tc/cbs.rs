use std::collections::VecDeque;

use super::{serialization_ns, TcError, Transmittable, DEFAULT_QUEUE_LIMIT};
use crate::Nanos;

/// Credit within this many bits of zero counts as zero, absorbing float error
/// when a wake-up is scheduled exactly at the recovery instant.
const CREDIT_EPS: f64 = 1e-6;

/// Which credit rule applies while the queue is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CbsMode {
    /// Credit is set back to zero whenever the queue runs empty, whatever
    /// its sign. This is the behavior observed on Linux.
    #[default]
    Linux,
    /// IEEE 802.1Qav: positive credit is discarded, negative credit recovers
    /// at idle slope up to zero.
    Standard,
}

/// Shaper parameters. Rates in bits per second, credits in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbsParams {
    pub link_rate: u64,
    pub idle_slope: f64,
    pub send_slope: f64,
    pub hi_credit: f64,
    pub lo_credit: f64,
    pub mode: CbsMode,
}

impl CbsParams {
    pub fn reset_on_empty(&self) -> bool {
        self.mode == CbsMode::Linux
    }
}

/// Derives the slopes and credit bounds for a reservation of
/// `reserved_bps` on a link of `link_rate` bits per second.
pub fn cbs_params_from_reservation(
    link_rate: u64,
    reserved_bps: f64,
    max_frame_bits: u64,
    max_interference_bits: u64,
    mode: CbsMode,
) -> Result<CbsParams, TcError> {
    let rate = link_rate as f64;
    if !(reserved_bps > 0.0 && reserved_bps <= rate) {
        return Err(TcError::InvalidParams(format!(
            "reservation {reserved_bps} b/s outside (0, {link_rate}]"
        )));
    }
    let idle_slope = reserved_bps;
    let send_slope = reserved_bps - rate;
    let hi_credit = (max_interference_bits as f64 * idle_slope / rate).ceil();
    let lo_credit = (max_frame_bits as f64 * send_slope / rate).floor() + 0.0;
    Ok(CbsParams {
        link_rate,
        idle_slope,
        send_slope,
        hi_credit,
        lo_credit,
        mode,
    })
}

/// Credit and queue of one shaped traffic class.
#[derive(Debug, Clone)]
pub struct CbsState<P> {
    pub credit: f64,
    pub last_update: Nanos,
    queue: VecDeque<P>,
    tx_end: Option<Nanos>,
    limit: usize,
}

impl<P: Transmittable> CbsState<P> {
    pub fn new(now: Nanos) -> Self {
        Self::with_limit(now, DEFAULT_QUEUE_LIMIT)
    }

    pub fn with_limit(now: Nanos, limit: usize) -> Self {
        Self {
            credit: 0.0,
            last_update: now,
            queue: VecDeque::new(),
            tx_end: None,
            limit,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_transmitting(&self, now: Nanos) -> bool {
        self.tx_end.is_some_and(|e| e > now)
    }

    /// Brings the credit forward to `now`.
    pub fn advance(&mut self, params: &CbsParams, now: Nanos) -> Result<(), TcError> {
        if now < self.last_update {
            return Err(TcError::TimeReversed {
                now,
                last: self.last_update,
            });
        }
        let mut t = self.last_update;
        if let Some(end) = self.tx_end {
            let seg_end = end.min(now);
            self.credit += params.send_slope * (seg_end - t) as f64 / 1e9;
            self.credit = self.credit.max(params.lo_credit);
            t = seg_end;
            if end <= now {
                self.tx_end = None;
            }
        }
        if self.tx_end.is_none() {
            let gained = params.idle_slope * (now - t) as f64 / 1e9;
            if !self.queue.is_empty() {
                self.credit = (self.credit + gained).min(params.hi_credit);
            } else if params.reset_on_empty() || self.credit > 0.0 {
                self.credit = 0.0;
            } else {
                self.credit = (self.credit + gained).min(0.0);
            }
        }
        self.last_update = now;
        Ok(())
    }

    /// Queues `p`; hands it back when the queue is full.
    pub fn enqueue(&mut self, params: &CbsParams, now: Nanos, p: P) -> Result<Option<P>, TcError> {
        self.advance(params, now)?;
        if self.queue.len() >= self.limit {
            return Ok(Some(p));
        }
        self.queue.push_back(p);
        Ok(None)
    }

    pub fn peek(&self) -> Option<&P> {
        self.queue.front()
    }

    /// Whether the head may start transmitting at `now`. Call after [`advance`](Self::advance).
    pub fn can_send(&self, now: Nanos) -> bool {
        !self.queue.is_empty() && !self.is_transmitting(now) && self.credit > -CREDIT_EPS
    }

    /// Releases the head when credit is non-negative and no frame of this
    /// class is on the wire. Credit then drains at send slope for the
    /// frame's serialization time.
    pub fn try_dequeue(&mut self, params: &CbsParams, now: Nanos) -> Result<Option<P>, TcError> {
        self.advance(params, now)?;
        if !self.can_send(now) {
            return Ok(None);
        }
        let p = self.queue.pop_front().expect("checked non-empty");
        self.tx_end = Some(now + serialization_ns(p.physical_bytes(), params.link_rate));
        Ok(Some(p))
    }

    /// Earliest time the head could be released, ignoring other traffic.
    pub fn next_eligible(&self, params: &CbsParams, now: Nanos) -> Option<Nanos> {
        if self.queue.is_empty() {
            return None;
        }
        if let Some(end) = self.tx_end.filter(|&e| e > now) {
            return Some(end);
        }
        if self.credit > -CREDIT_EPS {
            return Some(now);
        }
        let wait = (-self.credit / params.idle_slope * 1e9).ceil() as Nanos;
        Some(now + wait.max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tc::test_util::TestFrame;
    use proptest::prelude::*;

    const GIG: u64 = 1_000_000_000;

    fn params(idle: f64, mode: CbsMode) -> CbsParams {
        cbs_params_from_reservation(GIG, idle, 808, 12_336, mode).unwrap()
    }

    #[test]
    fn reservation_example() {
        let p = params(3.2312e6, CbsMode::Linux);
        assert_eq!(p.idle_slope, 3.2312e6);
        assert_eq!(p.send_slope, 3.2312e6 - 1e9);
        assert_eq!(p.hi_credit, 40.0);
        assert_eq!(p.lo_credit, -806.0);
    }

    #[test]
    fn full_reservation_boundary() {
        let p = cbs_params_from_reservation(GIG, 1e9, 808, 12_336, CbsMode::Linux).unwrap();
        assert_eq!(p.send_slope, 0.0);
        assert_eq!(p.lo_credit, 0.0);
        assert!(cbs_params_from_reservation(GIG, 1.1e9, 808, 12_336, CbsMode::Linux).is_err());
        assert!(cbs_params_from_reservation(GIG, 0.0, 808, 12_336, CbsMode::Linux).is_err());
    }

    #[test]
    fn reservation_at_110_percent() {
        let flow = 808.0 / 250e-6;
        let p = params(1.1 * flow, CbsMode::Linux);
        assert!((p.idle_slope - 3.5552e6).abs() < 1e-6);
    }

    #[test]
    fn negative_credit_recovers_to_zero_when_empty() {
        let p = CbsParams {
            idle_slope: 1e6,
            lo_credit: -1000.0,
            ..params(1e6, CbsMode::Standard)
        };
        let mut s = CbsState::<TestFrame>::new(0);
        s.credit = -500.0;
        s.advance(&p, 1_000_000).unwrap();
        assert_eq!(s.credit, 0.0);
    }

    #[test]
    fn positive_credit_reset_when_empty() {
        for mode in [CbsMode::Linux, CbsMode::Standard] {
            let p = params(3.2312e6, mode);
            let mut s = CbsState::<TestFrame>::new(0);
            s.credit = 30.0;
            s.advance(&p, 1).unwrap();
            assert_eq!(s.credit, 0.0);
        }
    }

    #[test]
    fn linux_mode_resets_negative_credit() {
        let p = params(3.2312e6, CbsMode::Linux);
        let mut s = CbsState::<TestFrame>::new(0);
        s.credit = -500.0;
        s.advance(&p, 10).unwrap();
        assert_eq!(s.credit, 0.0);
    }

    #[test]
    fn ramp_while_waiting() {
        let p = params(3.2312e6, CbsMode::Linux);
        let mut s = CbsState::new(0);
        s.queue.push_back(TestFrame::new(0, 101));
        s.advance(&p, 10_000).unwrap();
        assert!((s.credit - 32.312).abs() < 1e-9);
        s.advance(&p, 20_000).unwrap();
        assert_eq!(s.credit, 40.0);
    }

    #[test]
    fn dequeue_drains_credit() {
        let p = params(3.2312e6, CbsMode::Standard);
        let mut s = CbsState::new(0);
        assert_eq!(s.enqueue(&p, 0, TestFrame::new(1, 101)).unwrap(), None);
        s.enqueue(&p, 0, TestFrame::new(2, 101)).unwrap();
        assert_eq!(s.try_dequeue(&p, 0).unwrap().unwrap().id, 1);
        assert_eq!(s.try_dequeue(&p, 100).unwrap(), None);
        s.advance(&p, 808).unwrap();
        let expected = p.send_slope * 808e-9;
        assert!((s.credit - expected).abs() < 1e-9);
        assert_eq!(s.try_dequeue(&p, 808).unwrap(), None);
        let at = s.next_eligible(&p, 808).unwrap();
        assert!(s.try_dequeue(&p, at - 1).unwrap().is_none());
        assert_eq!(s.try_dequeue(&p, at).unwrap().unwrap().id, 2);
    }

    #[test]
    fn empty_queue_yields_nothing() {
        let p = params(3.2312e6, CbsMode::Linux);
        let mut s = CbsState::<TestFrame>::new(0);
        assert_eq!(s.try_dequeue(&p, 5).unwrap(), None);
        assert_eq!(s.next_eligible(&p, 5), None);
    }

    #[test]
    fn time_reversal_is_an_error() {
        let p = params(3.2312e6, CbsMode::Linux);
        let mut s = CbsState::<TestFrame>::new(100);
        assert!(matches!(s.advance(&p, 99), Err(TcError::TimeReversed { .. })));
    }

    #[test]
    fn queue_limit() {
        let p = params(3.2312e6, CbsMode::Linux);
        let mut s = CbsState::with_limit(0, 1);
        s.enqueue(&p, 0, TestFrame::new(1, 101)).unwrap();
        let back = s.enqueue(&p, 0, TestFrame::new(2, 101)).unwrap();
        assert_eq!(back.map(|f| f.id), Some(2));
    }

    proptest! {
        #[test]
        fn credit_stays_in_bounds(
            idle in 1e5f64..1e9,
            standard in any::<bool>(),
            ops in proptest::collection::vec((0u8..3, 0i64..50_000, 64u32..1543), 1..200),
        ) {
            let mode = if standard { CbsMode::Standard } else { CbsMode::Linux };
            let p = cbs_params_from_reservation(GIG, idle, 1542 * 8, 12_336, mode).unwrap();
            let mut s = CbsState::new(0);
            let mut now = 0;
            for (i, (op, dt, bytes)) in ops.into_iter().enumerate() {
                now += dt;
                match op {
                    0 => { s.enqueue(&p, now, TestFrame::new(i as u64, bytes)).unwrap(); }
                    1 => { s.try_dequeue(&p, now).unwrap(); }
                    _ => { s.advance(&p, now).unwrap(); }
                }
                prop_assert!(s.credit >= p.lo_credit - 1e-9, "{} < {}", s.credit, p.lo_credit);
                prop_assert!(s.credit <= p.hi_credit + 1e-9, "{} > {}", s.credit, p.hi_credit);
            }
        }
    }
}
