use std::collections::VecDeque;

use super::{Link, SimError, SimFrame};
use crate::tc::{
    strict_priority_pick, CbsParams, CbsState, DropReason, Etf, EtfParams, Fifo, FqCodel, FqCodelParams,
    GateSchedule, PriorityMap, Transmittable, NUM_HW_QUEUES,
};
use crate::Nanos;

/// Egress queueing configuration of a port.
#[derive(Debug, Clone, PartialEq)]
pub enum QdiscSpec {
    /// fq_codel as the root qdisc.
    FqCodel,
    /// mqprio with a FIFO per hardware queue.
    Mqprio,
    /// mqprio with CBS shaping the OPC UA class.
    Cbs(CbsParams),
    /// mqprio with ETF under the OPC UA class.
    Etf(EtfParams),
    /// taprio in txtime-assisted mode with ETF under the OPC UA class.
    Taprio { schedule: GateSchedule, etf: EtfParams },
}

impl QdiscSpec {
    pub fn name(&self) -> &'static str {
        match self {
            QdiscSpec::FqCodel => "fq",
            QdiscSpec::Mqprio => "mqprio",
            QdiscSpec::Cbs(_) => "cbs",
            QdiscSpec::Etf(_) => "etf",
            QdiscSpec::Taprio { .. } => "taprio",
        }
    }
}

#[derive(Debug)]
enum Child {
    Fifo(Fifo<SimFrame>),
    Cbs(CbsParams, CbsState<SimFrame>),
    Etf(Etf<SimFrame>),
}

#[derive(Debug)]
enum Root {
    Fq(FqCodel<SimFrame>),
    Prio {
        map: PriorityMap,
        schedule: Option<GateSchedule>,
        queue_tc: [u8; NUM_HW_QUEUES],
        children: [Child; NUM_HW_QUEUES],
    },
}

/// A frame put on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub frame: SimFrame,
    pub start: Nanos,
    pub end: Nanos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Service {
    Started(Transmission),
    /// Nothing can be sent now; call again at `wake` if given.
    Idle { wake: Option<Nanos> },
}

/// Qdisc, NIC launch-time holds and transmitter of one egress port.
#[derive(Debug)]
pub struct Port {
    root: Root,
    link: Link,
    busy_until: Nanos,
    holds: [VecDeque<(SimFrame, Nanos)>; NUM_HW_QUEUES],
    scheduled_wake: Option<Nanos>,
}

impl Port {
    pub fn new(spec: &QdiscSpec, link: Link, now: Nanos) -> Self {
        let fifo = || Child::Fifo(Fifo::default());
        let map = PriorityMap::experiment();
        let prio = |first: Child, schedule: Option<GateSchedule>| {
            let mut queue_tc = [0u8; NUM_HW_QUEUES];
            for tc in 0..map.num_tc {
                queue_tc[map.queue_of_tc(tc)] = tc;
            }
            Root::Prio {
                map: map.clone(),
                schedule,
                queue_tc,
                children: [first, fifo(), fifo(), fifo()],
            }
        };
        let root = match spec {
            QdiscSpec::FqCodel => Root::Fq(FqCodel::new(FqCodelParams::default())),
            QdiscSpec::Mqprio => prio(fifo(), None),
            QdiscSpec::Cbs(p) => prio(Child::Cbs(*p, CbsState::new(now)), None),
            QdiscSpec::Etf(p) => prio(Child::Etf(Etf::new(*p)), None),
            QdiscSpec::Taprio { schedule, etf } => {
                prio(Child::Etf(Etf::new(*etf)), Some(schedule.clone()))
            }
        };
        Self {
            root,
            link,
            busy_until: now,
            holds: Default::default(),
            scheduled_wake: None,
        }
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    pub fn busy_until(&self) -> Nanos {
        self.busy_until
    }

    /// Records that a wake-up at `t` will be scheduled; false if an earlier
    /// pending one already covers it.
    pub fn claim_wake(&mut self, now: Nanos, t: Nanos) -> bool {
        match self.scheduled_wake {
            Some(w) if w >= now && w <= t => false,
            _ => {
                self.scheduled_wake = Some(t);
                true
            }
        }
    }

    pub fn wake_fired(&mut self, t: Nanos) {
        if self.scheduled_wake == Some(t) {
            self.scheduled_wake = None;
        }
    }

    pub fn enqueue(
        &mut self,
        now: Nanos,
        mut frame: SimFrame,
        drops: &mut Vec<(SimFrame, DropReason)>,
    ) -> Result<(), SimError> {
        let duration = self.link.serialization(frame.physical_bytes);
        match &mut self.root {
            Root::Fq(fq) => fq.enqueue(now, frame, drops),
            Root::Prio {
                map,
                schedule,
                children,
                ..
            } => {
                let tc = map.classify(frame.pcp);
                let q = map.queue_of_tc(tc);
                match &mut children[q] {
                    Child::Fifo(f) => {
                        if let Err(d) = f.enqueue(frame) {
                            drops.push(d);
                        }
                    }
                    Child::Cbs(p, s) => {
                        if let Some(back) = s.enqueue(p, now, frame)? {
                            drops.push((back, DropReason::QueueFull));
                        }
                    }
                    Child::Etf(etf) => {
                        if let Some(sched) = schedule.as_ref().filter(|s| s.txtime_assist) {
                            match sched.assist_txtime(tc, frame.txtime, now, duration) {
                                Ok(t) => frame.txtime = Some(t),
                                Err(_) => {
                                    drops.push((frame, DropReason::NoWindow));
                                    return Ok(());
                                }
                            }
                        }
                        if let Err(d) = etf.enqueue(now, frame) {
                            drops.push(d);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Moves ETF releases into the NIC and, if the link is idle, starts the
    /// highest-priority eligible frame. `hw_offset` is the NIC clock offset
    /// used to convert launch times to true time.
    pub fn service(
        &mut self,
        now: Nanos,
        hw_offset: Nanos,
        drops: &mut Vec<(SimFrame, DropReason)>,
    ) -> Result<Service, SimError> {
        let link = self.link;
        let Root::Prio {
            schedule,
            queue_tc,
            children,
            ..
        } = &mut self.root
        else {
            let Root::Fq(fq) = &mut self.root else {
                unreachable!()
            };
            if self.busy_until > now {
                return Ok(Service::Idle { wake: None });
            }
            return Ok(match fq.dequeue(now, drops) {
                Some(frame) => {
                    let end = now + link.serialization(frame.physical_bytes);
                    self.busy_until = end;
                    Service::Started(Transmission {
                        frame,
                        start: now,
                        end,
                    })
                }
                None => Service::Idle { wake: None },
            });
        };

        for (q, child) in children.iter_mut().enumerate() {
            if let Child::Etf(etf) = child {
                while let Some((frame, txtime)) = etf.dequeue(now, drops) {
                    let launch = if etf.params.offload {
                        txtime - hw_offset
                    } else {
                        now
                    };
                    if now > launch {
                        drops.push((frame, DropReason::NicLate));
                    } else {
                        self.holds[q].push_back((frame, launch));
                    }
                }
            }
        }

        let etf_release = children
            .iter()
            .filter_map(|c| match c {
                Child::Etf(e) => e.next_release(),
                _ => None,
            })
            .min();
        if self.busy_until > now {
            return Ok(Service::Idle {
                wake: etf_release.filter(|&t| t < self.busy_until),
            });
        }

        let mut eligible = [false; NUM_HW_QUEUES];
        let mut wake: Option<Nanos> = etf_release;
        let note = |t: Nanos, wake: &mut Option<Nanos>| {
            *wake = Some(wake.map_or(t, |w| w.min(t)));
        };
        for q in 0..NUM_HW_QUEUES {
            if let Some(&(_, launch)) = self.holds[q].front() {
                if launch <= now {
                    eligible[q] = true;
                    continue;
                }
                note(launch, &mut wake);
            }
            match &mut children[q] {
                Child::Fifo(f) if !f.is_empty() => match schedule {
                    Some(s) => {
                        let tc = queue_tc[q];
                        if s.is_open(tc, now) {
                            eligible[q] = true;
                        } else if let Ok(t) = s.next_gate_open(tc, now) {
                            // A class whose gate never opens keeps its frames queued.
                            note(t, &mut wake);
                        }
                    }
                    None => eligible[q] = true,
                },
                Child::Cbs(p, s) => {
                    s.advance(p, now)?;
                    if s.can_send(now) {
                        eligible[q] = true;
                    } else if let Some(t) = s.next_eligible(p, now) {
                        note(t, &mut wake);
                    }
                }
                _ => {}
            }
        }

        let Some(q) = strict_priority_pick(eligible) else {
            return Ok(Service::Idle { wake });
        };
        let frame = if self.holds[q].front().is_some_and(|&(_, l)| l <= now) {
            self.holds[q].pop_front().expect("front checked").0
        } else {
            match &mut children[q] {
                Child::Fifo(f) => f.dequeue().expect("eligible fifo is non-empty"),
                Child::Cbs(p, s) => s.try_dequeue(p, now)?.expect("eligible cbs can send"),
                Child::Etf(_) => unreachable!("etf frames leave through the holds"),
            }
        };
        let end = now + link.serialization(frame.physical_bytes());
        self.busy_until = end;
        Ok(Service::Started(Transmission {
            frame,
            start: now,
            end,
        }))
    }
}
