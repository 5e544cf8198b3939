//! The cyclic PubSub application: a publisher host that increments and
//! sends its variables every cycle, and a loopback host that mirrors what it
//! receives back to the origin.
//!
//! Each host runs three threads per cycle `c`: the subscriber at 0.0c, the
//! user thread at 0.3c and the publisher at 0.6c.

mod fate;

pub use fate::{FateCounts, FateTable, LossPoint};

use crate::uadp::{decode_network_message, frame_sizes, NetworkMessage, UadpError};
use crate::{Nanos, NS_PER_SEC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Publisher,
    Loopback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Thread {
    Subscriber,
    User,
    Publisher,
}

impl Thread {
    pub const ALL: [Thread; 3] = [Thread::Subscriber, Thread::User, Thread::Publisher];

    /// Offset of the thread's nominal wake-up within the cycle.
    pub fn phase(self, cycle: Nanos) -> Nanos {
        match self {
            Thread::Subscriber => 0,
            Thread::User => cycle * 3 / 10,
            Thread::Publisher => cycle * 6 / 10,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AppConfig {
    pub cycle: Nanos,
    pub offset: Nanos,
    pub delta: Nanos,
    pub n_vars: usize,
    pub txtime_mode: bool,
    pub base_time: Nanos,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            cycle: 250_000,
            offset: 150_000,
            delta: 200_000,
            n_vars: 3,
            txtime_mode: true,
            base_time: NS_PER_SEC,
        }
    }
}

impl AppConfig {
    /// Hard constraints. Returns advisory warnings that do not prevent a run.
    pub fn validate(&self) -> Result<Vec<String>, String> {
        if self.cycle <= 0 {
            return Err(format!("cycle {} must be positive", self.cycle));
        }
        if !(0..=self.cycle).contains(&self.offset) {
            return Err(format!("offset {} outside [0, {}]", self.offset, self.cycle));
        }
        if self.delta <= 0 {
            return Err(format!("delta {} must be positive", self.delta));
        }
        if self.base_time < 0 {
            return Err("base_time must not be negative".into());
        }
        frame_sizes(self.n_vars).map_err(|e| e.to_string())?;
        let mut warnings = vec![];
        let budget = self.cycle * 4 / 10 + self.offset;
        if self.txtime_mode && self.delta >= budget {
            warnings.push(format!(
                "delta {} ns is not below 0.4c + o = {} ns; frames published late in the cycle can miss their txtime",
                self.delta, budget
            ));
        }
        Ok(warnings)
    }

    /// Start of cycle `k`.
    pub fn cycle_start(&self, k: u64) -> Nanos {
        self.base_time + k as Nanos * self.cycle
    }

    /// Transmission time requested for a message published in cycle `k`.
    pub fn txtime(&self, k: u64) -> Option<Nanos> {
        self.txtime_mode
            .then(|| self.cycle_start(k + 1) + self.offset)
    }
}

/// A message waiting in the subscriber's socket buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Received {
    /// When the frame was fully received.
    pub arrival: Nanos,
    /// Hardware receive timestamp.
    pub hw_rx: Nanos,
    /// Probe carried alongside the message, if any.
    pub probe: Option<u64>,
    pub message: NetworkMessage,
}

impl Received {
    pub fn from_bytes(arrival: Nanos, hw_rx: Nanos, probe: Option<u64>, bytes: &[u8]) -> Result<Self, UadpError> {
        Ok(Self {
            arrival,
            hw_rx,
            probe,
            message: decode_network_message(bytes)?,
        })
    }

    fn sequence(&self) -> u16 {
        self.message
            .group_header
            .map(|g| g.sequence_number)
            .unwrap_or(0)
    }
}

/// Message handed to the network by a publisher wake-up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Publication {
    pub message: NetworkMessage,
    pub probe: Option<u64>,
    pub txtime: Option<Nanos>,
}

/// Something the fate accounting must hear about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppEvent {
    /// The probe was lost at this host.
    Lost(u64),
    /// The publisher's subscriber read a mirror of the probe.
    Returned { probe: u64, hw_rx: Nanos },
}

#[derive(Debug, Clone)]
struct Slot {
    probe: Option<u64>,
    values: Vec<i64>,
}

/// State of one host's application.
#[derive(Debug, Clone)]
pub struct HostApp {
    pub role: Role,
    cfg: AppConfig,
    publisher_id: u64,
    writer_id: u16,
    limit: Option<u64>,
    inbox: Vec<Received>,
    expected: Option<u64>,
    last_seq: Option<(u16, u64)>,
    missed_reads: u64,
    slot: Option<Slot>,
    values: Vec<i64>,
    addr_probe: Option<u64>,
    addr_published: bool,
    next_seq: u64,
    published: u64,
}

impl HostApp {
    /// `limit` caps how many messages the publisher sends.
    pub fn new(role: Role, cfg: AppConfig, publisher_id: u64, limit: Option<u64>) -> Self {
        Self {
            role,
            cfg,
            publisher_id,
            writer_id: publisher_id as u16,
            limit,
            inbox: Vec::new(),
            expected: None,
            last_seq: None,
            missed_reads: 0,
            slot: None,
            values: vec![0; cfg.n_vars],
            addr_probe: None,
            addr_published: false,
            next_seq: 0,
            published: 0,
        }
    }

    pub fn missed_reads(&self) -> u64 {
        self.missed_reads
    }

    pub fn published(&self) -> u64 {
        self.published
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn receive(&mut self, r: Received) {
        self.inbox.push(r);
    }

    fn unwrap_seq(&mut self, seq: u16) -> u64 {
        let ext = match self.last_seq {
            None => u64::from(seq),
            Some((last16, last_ext)) => {
                let diff = seq.wrapping_sub(last16) as i16;
                last_ext.wrapping_add_signed(i64::from(diff))
            }
        };
        self.last_seq = Some((seq, ext));
        ext
    }

    /// Reads every message that arrived strictly before `now`. The newest
    /// unseen sequence number is delivered; older unseen ones are
    /// superseded and lost here; already seen ones are ignored.
    pub fn on_subscriber_wake(&mut self, now: Nanos, events: &mut Vec<AppEvent>) {
        let mut ready = vec![];
        let mut i = 0;
        while i < self.inbox.len() {
            if self.inbox[i].arrival < now {
                ready.push(self.inbox.remove(i));
            } else {
                i += 1;
            }
        }
        let mut fresh: Vec<(u64, Received)> = vec![];
        for r in ready {
            let ext = self.unwrap_seq(r.sequence());
            if self.expected.is_none_or(|e| ext >= e) {
                fresh.push((ext, r));
            }
        }
        let Some(best) = fresh.iter().map(|(e, _)| *e).max() else {
            self.missed_reads += 1;
            return;
        };
        self.expected = Some(best + 1);
        let mut delivered = None;
        for (ext, r) in fresh {
            if ext == best && delivered.is_none() {
                delivered = Some(r);
            } else if let Some(p) = r.probe {
                events.push(AppEvent::Lost(p));
            }
        }
        let r = delivered.expect("best sequence is present");
        match self.role {
            Role::Publisher => {
                if let Some(probe) = r.probe {
                    events.push(AppEvent::Returned {
                        probe,
                        hw_rx: r.hw_rx,
                    });
                }
            }
            Role::Loopback => {
                if let Some(old) = self.slot.take().and_then(|s| s.probe) {
                    events.push(AppEvent::Lost(old));
                }
                let values = r.message.payload.iter().map(|f| f.value).collect();
                self.slot = Some(Slot {
                    probe: r.probe,
                    values,
                });
            }
        }
    }

    /// Publisher host: increments its variables. Loopback host: stores the
    /// last subscribed values for publication.
    pub fn on_user_wake(&mut self, events: &mut Vec<AppEvent>) {
        match self.role {
            Role::Publisher => {
                for v in &mut self.values {
                    *v = v.wrapping_add(1);
                }
            }
            Role::Loopback => {
                if let Some(slot) = self.slot.take() {
                    if let Some(old) = self.addr_probe {
                        if !self.addr_published {
                            events.push(AppEvent::Lost(old));
                        }
                    }
                    self.values = slot.values;
                    self.addr_probe = slot.probe;
                    self.addr_published = false;
                }
            }
        }
    }

    /// Builds the message for cycle `k`, or nothing once the publisher has
    /// reached its limit. `probe_for` assigns the probe of a fresh
    /// publisher message.
    pub fn on_publisher_wake(&mut self, k: u64, now: Nanos, probe_for: impl FnOnce() -> u64) -> Option<Publication> {
        if self.limit.is_some_and(|l| self.published >= l) {
            return None;
        }
        let probe = match self.role {
            Role::Publisher => Some(probe_for()),
            Role::Loopback => {
                self.addr_published = true;
                self.addr_probe
            }
        };
        let message = NetworkMessage::experiment(
            self.publisher_id,
            self.writer_id,
            self.next_seq as u16,
            now.max(0) as u64,
            &self.values,
        );
        self.next_seq += 1;
        self.published += 1;
        Some(Publication {
            message,
            probe,
            txtime: self.cfg.txtime(k),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uadp::encode_network_message;

    fn cfg() -> AppConfig {
        AppConfig::default()
    }

    fn rx(app_seq: u16, arrival: Nanos, probe: u64, values: &[i64]) -> Received {
        let msg = NetworkMessage::experiment(1, 1, app_seq, 0, values);
        let bytes = encode_network_message(&msg).unwrap();
        Received::from_bytes(arrival, arrival, Some(probe), &bytes).unwrap()
    }

    #[test]
    fn txtime_rule() {
        let c = cfg();
        assert_eq!(c.txtime(0), Some(1_000_000_000 + 250_000 + 150_000));
        let imm = AppConfig {
            txtime_mode: false,
            ..c
        };
        assert_eq!(imm.txtime(0), None);
    }

    #[test]
    fn validation() {
        assert!(cfg().validate().unwrap().is_empty());
        let wide = AppConfig { offset: 250_000, ..cfg() };
        assert!(wide.validate().is_ok());
        assert!(AppConfig { offset: 250_001, ..cfg() }.validate().is_err());
        assert!(AppConfig { n_vars: 0, ..cfg() }.validate().is_err());
        assert!(AppConfig { delta: 0, ..cfg() }.validate().is_err());
        let w = AppConfig { offset: 0, ..cfg() }.validate().unwrap();
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn read_is_strictly_before_wake() {
        let mut app = HostApp::new(Role::Loopback, cfg(), 2, None);
        let mut ev = vec![];
        app.receive(rx(0, 999, 0, &[5, 6, 7]));
        app.receive(rx(1, 1_001, 1, &[6, 7, 8]));
        app.on_subscriber_wake(1_000, &mut ev);
        assert!(ev.is_empty(), "{ev:?}");
        app.on_user_wake(&mut ev);
        assert_eq!(app.values(), &[5, 6, 7]);
        app.on_subscriber_wake(1_001, &mut ev);
        assert_eq!(app.missed_reads(), 1);
        app.on_subscriber_wake(1_002, &mut ev);
        app.on_user_wake(&mut ev);
        assert_eq!(app.values(), &[6, 7, 8]);
        // Probe 0 was never republished before being replaced.
        assert_eq!(ev, [AppEvent::Lost(0)]);
    }

    #[test]
    fn superseded_frames_are_lost() {
        let mut app = HostApp::new(Role::Loopback, cfg(), 2, None);
        let mut ev = vec![];
        app.receive(rx(0, 10, 0, &[1]));
        app.receive(rx(1, 20, 1, &[2]));
        app.on_subscriber_wake(30, &mut ev);
        assert_eq!(ev, vec![AppEvent::Lost(0)]);
        ev.clear();
        // An old sequence after a newer one is ignored.
        app.receive(rx(0, 40, 0, &[1]));
        app.on_subscriber_wake(50, &mut ev);
        assert!(ev.is_empty());
        assert_eq!(app.missed_reads(), 1);
    }

    #[test]
    fn loopback_mirrors_probe_and_republishes_stale() {
        let mut app = HostApp::new(Role::Loopback, cfg(), 2, None);
        let mut ev = vec![];
        let none = app.on_publisher_wake(0, 0, || unreachable!()).unwrap();
        assert_eq!(none.probe, None);
        app.receive(rx(0, 10, 42, &[9]));
        app.on_subscriber_wake(20, &mut ev);
        app.on_user_wake(&mut ev);
        let p = app.on_publisher_wake(1, 30, || unreachable!()).unwrap();
        assert_eq!(p.probe, Some(42));
        assert_eq!(p.message.payload[0].value, 9);
        let again = app.on_publisher_wake(2, 40, || unreachable!()).unwrap();
        assert_eq!(again.probe, Some(42));
        assert_ne!(
            again.message.group_header.unwrap().sequence_number,
            p.message.group_header.unwrap().sequence_number
        );
        assert!(ev.is_empty());
    }

    #[test]
    fn loopback_overwrite_before_publish_is_a_loss() {
        let mut app = HostApp::new(Role::Loopback, cfg(), 2, None);
        let mut ev = vec![];
        app.receive(rx(0, 10, 1, &[1]));
        app.on_subscriber_wake(20, &mut ev);
        app.on_user_wake(&mut ev);
        app.receive(rx(1, 30, 2, &[2]));
        app.on_subscriber_wake(40, &mut ev);
        app.on_user_wake(&mut ev);
        assert_eq!(ev, vec![AppEvent::Lost(1)]);
    }

    #[test]
    fn publisher_increments_and_stops_at_limit() {
        let mut app = HostApp::new(Role::Publisher, cfg(), 1, Some(2));
        let mut ev = vec![];
        let mut next = 0;
        for k in 0..3 {
            app.on_user_wake(&mut ev);
            let p = app.on_publisher_wake(k, 0, || {
                next += 1;
                next - 1
            });
            if k < 2 {
                let p = p.unwrap();
                assert_eq!(p.probe, Some(k));
                assert_eq!(p.message.payload[0].value, k as i64 + 1);
            } else {
                assert!(p.is_none());
            }
        }
    }

    #[test]
    fn publisher_reports_returns() {
        let mut app = HostApp::new(Role::Publisher, cfg(), 1, None);
        let mut ev = vec![];
        app.receive(rx(7, 100, 3, &[1]));
        app.on_subscriber_wake(200, &mut ev);
        assert_eq!(ev, vec![AppEvent::Returned { probe: 3, hw_rx: 100 }]);
    }

    #[test]
    fn sequence_wraps() {
        let mut app = HostApp::new(Role::Loopback, cfg(), 2, None);
        let mut ev = vec![];
        app.receive(rx(u16::MAX, 10, 1, &[1]));
        app.on_subscriber_wake(20, &mut ev);
        app.receive(rx(0, 30, 2, &[2]));
        app.on_subscriber_wake(40, &mut ev);
        assert_eq!(ev, vec![AppEvent::Lost(1)]);
        assert_eq!(app.missed_reads(), 0);
    }
}
