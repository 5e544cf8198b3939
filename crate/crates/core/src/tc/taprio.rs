use super::TcError;
use crate::Nanos;

/// `sched-entry S <mask> <duration>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateEntry {
    /// Bit i set means traffic class i may transmit.
    pub gate_mask: u8,
    pub duration: Nanos,
}

/// Cyclic gate control list starting at `base_time`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSchedule {
    pub base_time: Nanos,
    pub entries: Vec<GateEntry>,
    pub txtime_assist: bool,
    pub txtime_delay: Nanos,
    pub etf_assist: bool,
    cycle_time: Nanos,
}

impl GateSchedule {
    pub fn new(base_time: Nanos, entries: Vec<GateEntry>) -> Result<Self, TcError> {
        if entries.is_empty() {
            return Err(TcError::InvalidParams("empty gate schedule".into()));
        }
        if let Some(e) = entries.iter().find(|e| e.duration <= 0) {
            return Err(TcError::InvalidParams(format!(
                "entry duration {} must be positive",
                e.duration
            )));
        }
        let cycle_time = entries.iter().map(|e| e.duration).sum();
        Ok(Self {
            base_time,
            entries,
            txtime_assist: false,
            txtime_delay: 0,
            etf_assist: false,
            cycle_time,
        })
    }

    /// Enables txtime-assisted mode. The delay must exceed the child ETF delta.
    pub fn with_txtime_assist(mut self, txtime_delay: Nanos, etf_delta: Nanos) -> Result<Self, TcError> {
        if txtime_delay <= etf_delta {
            return Err(TcError::InvalidParams(format!(
                "txtime delay {txtime_delay} must exceed etf delta {etf_delta}"
            )));
        }
        self.txtime_assist = true;
        self.etf_assist = true;
        self.txtime_delay = txtime_delay;
        Ok(self)
    }

    pub fn cycle_time(&self) -> Nanos {
        self.cycle_time
    }

    /// Start of the cycle containing `t` and the index and start of the
    /// entry containing it. Requires `t >= base_time`.
    fn locate(&self, t: Nanos) -> (usize, Nanos) {
        let since = t - self.base_time;
        let cycle_start = t - since.rem_euclid(self.cycle_time);
        let mut start = cycle_start;
        for (i, e) in self.entries.iter().enumerate() {
            if t < start + e.duration {
                return (i, start);
            }
            start += e.duration;
        }
        unreachable!("offset within cycle is below the cycle time")
    }

    /// Gate mask in force at `t`. Before `base_time` every gate is open.
    pub fn gate_state(&self, t: Nanos) -> u8 {
        if t < self.base_time {
            return 0xff;
        }
        self.entries[self.locate(t).0].gate_mask
    }

    pub fn is_open(&self, tc: u8, t: Nanos) -> bool {
        self.gate_state(t) & (1 << tc) != 0
    }

    fn never_open(&self, tc: u8) -> bool {
        self.entries.iter().all(|e| e.gate_mask & (1 << tc) == 0)
    }

    /// Earliest `t' >= t` at which the gate of `tc` is open.
    pub fn next_gate_open(&self, tc: u8, t: Nanos) -> Result<Nanos, TcError> {
        if self.never_open(tc) {
            return Err(TcError::NoWindow(tc));
        }
        if t < self.base_time {
            return Ok(t);
        }
        let (mut i, mut start) = self.locate(t);
        if self.entries[i].gate_mask & (1 << tc) != 0 {
            return Ok(t);
        }
        loop {
            start += self.entries[i].duration;
            i = (i + 1) % self.entries.len();
            if self.entries[i].gate_mask & (1 << tc) != 0 {
                return Ok(start);
            }
        }
    }

    /// End of the open run of `tc` containing `t`, or `None` if the gate
    /// never closes. Returns `t` when the gate is closed at `t`.
    pub fn gate_close(&self, tc: u8, t: Nanos) -> Option<Nanos> {
        let bit = 1u8 << tc;
        let (mut i, mut start) = if t < self.base_time {
            if self.entries[0].gate_mask & bit == 0 {
                return Some(self.base_time);
            }
            (0, self.base_time)
        } else {
            let (i, start) = self.locate(t);
            if self.entries[i].gate_mask & bit == 0 {
                return Some(t);
            }
            (i, start)
        };
        for _ in 0..self.entries.len() {
            start += self.entries[i].duration;
            i = (i + 1) % self.entries.len();
            if self.entries[i].gate_mask & bit == 0 {
                return Some(start);
            }
        }
        None
    }

    /// Earliest `t' >= t` such that the gate of `tc` stays open over
    /// `[t', t' + duration)`.
    pub fn next_fit(&self, tc: u8, t: Nanos, duration: Nanos) -> Result<Nanos, TcError> {
        let mut t = t;
        for _ in 0..=2 * self.entries.len() + 1 {
            let open = self.next_gate_open(tc, t)?;
            match self.gate_close(tc, open) {
                None => return Ok(open),
                Some(close) if close - open >= duration => return Ok(open),
                Some(close) => t = close,
            }
        }
        Err(TcError::NoFit { tc, duration })
    }

    /// Launch time assigned in txtime-assisted mode. A requested time is
    /// kept when it is not in the past, its class gate is open then and the
    /// frame fits before the gate closes. Otherwise the frame moves to the
    /// next window that fits, no earlier than `now + txtime_delay`.
    pub fn assist_txtime(
        &self,
        tc: u8,
        requested: Option<Nanos>,
        now: Nanos,
        duration: Nanos,
    ) -> Result<Nanos, TcError> {
        if let Some(t) = requested {
            let fits = match self.gate_close(tc, t) {
                None => self.is_open(tc, t),
                Some(close) => self.is_open(tc, t) && close - t >= duration,
            };
            if t >= now && fits {
                return Ok(t);
            }
        }
        self.next_fit(tc, now + self.txtime_delay, duration)
    }
}
