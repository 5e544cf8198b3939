use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    BeTrafficGen, Bridge, BridgeLatency, ClockModel, Engine, FrameKind, HostClock, Link, Port, QdiscSpec,
    SchedLatencyModel, Service, SimError, SimFrame, Transmission,
};
use crate::app::{AppConfig, AppEvent, FateCounts, FateTable, HostApp, LossPoint, Received, Role, Thread};
use crate::metrics::{TapPoint, TapRecord, TapSeries};
use crate::tc::DropReason;
use crate::uadp::{build_frame, Endpoint, MacAddr};
use crate::Nanos;

const P: usize = 0;
const L: usize = 1;
const OPC_VLAN: u16 = 1;
const OPC_PCP: u8 = 3;
const MACS: [MacAddr; 3] = [
    MacAddr([0x02, 0, 0, 0, 0, 0x01]),
    MacAddr([0x02, 0, 0, 0, 0, 0x02]),
    MacAddr([0x02, 0, 0, 0, 0, 0x03]),
];
/// Bridge port index facing each host, and the transit source.
const BRIDGE_TO_P: usize = 0;
const BRIDGE_TO_L: usize = 1;
const BRIDGE_TRANSIT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    P2p,
    Bridged,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::P2p => "p2p",
            Topology::Bridged => "bridged",
        }
    }
}

/// Best-effort cross traffic towards the loopback host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BeConfig {
    pub rate_mbps: u32,
    /// Inject at a third bridge port instead of sharing the publisher's
    /// interface.
    pub transit: bool,
}

#[derive(Debug, Clone)]
pub struct WorldConfig {
    pub topology: Topology,
    pub host_qdisc: QdiscSpec,
    pub bridge_qdisc: QdiscSpec,
    pub app: AppConfig,
    /// Messages the publisher sends.
    pub packets: u64,
    /// Cycles the run continues after the last publication.
    pub drain_cycles: u64,
    pub link: Link,
    pub noise: SchedLatencyModel,
    pub clock: ClockModel,
    pub bridge_latency: BridgeLatency,
    pub be: BeConfig,
    pub seed: u64,
    pub trace: bool,
    pub run_id: String,
}

impl WorldConfig {
    pub fn new(host_qdisc: QdiscSpec, app: AppConfig, packets: u64) -> Self {
        Self {
            topology: Topology::P2p,
            host_qdisc,
            bridge_qdisc: QdiscSpec::FqCodel,
            app,
            packets,
            drain_cycles: 8,
            link: Link::default(),
            noise: SchedLatencyModel::none(),
            clock: ClockModel::ideal(),
            bridge_latency: BridgeLatency::default(),
            be: BeConfig::default(),
            seed: 0,
            trace: false,
            run_id: String::new(),
        }
    }
}

/// Everything measured during one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub fates: FateCounts,
    /// Round-trip times of returned probes, in order of return.
    pub rtt: Vec<Nanos>,
    pub l_ingress: TapSeries,
    pub p_ingress: TapSeries,
    pub tap_counts: BTreeMap<TapPoint, u64>,
    pub qdisc_drops: BTreeMap<DropReason, u64>,
    pub missed_reads: [u64; 2],
    pub events: u64,
    pub trace: Vec<TapRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PortId {
    Host(usize),
    Bridge(usize),
}

#[derive(Debug)]
enum Event {
    Wake { host: usize, thread: Thread, cycle: u64 },
    PortWake(PortId),
    TxComplete(PortId),
    Arrival { at: PortId, frame: SimFrame, sfd: Nanos },
    Forward { in_port: usize, frame: SimFrame },
    BeTick(u64),
}

struct Host {
    app: HostApp,
    clock: HostClock,
    port: Port,
    wake_rng: [ChaCha8Rng; 3],
    dst: Endpoint,
}

/// One simulated experiment.
pub struct World {
    cfg: WorldConfig,
    engine: Engine<Event>,
    hosts: [Host; 2],
    bridge: Option<Bridge>,
    fates: FateTable,
    p_egress: Vec<Nanos>,
    rtt: Vec<Nanos>,
    l_ingress: TapSeries,
    p_ingress: TapSeries,
    tap_counts: BTreeMap<TapPoint, u64>,
    qdisc_drops: BTreeMap<DropReason, u64>,
    trace: Vec<TapRecord>,
    be: BeTrafficGen,
    be_end: Nanos,
    total_cycles: u64,
    drops: Vec<(SimFrame, DropReason)>,
    app_events: Vec<AppEvent>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

impl World {
    pub fn new(cfg: WorldConfig) -> Result<Self, SimError> {
        cfg.app.validate().map_err(SimError::Config)?;
        cfg.noise.validate().map_err(SimError::Config)?;
        if cfg.be.transit && cfg.topology == Topology::P2p {
            return Err(SimError::Config("transit cross traffic needs the bridged topology".into()));
        }
        let start = 0;
        let host = |h: usize, role: Role, dst: usize| -> Result<Host, SimError> {
            let limit = (role == Role::Publisher).then_some(cfg.packets);
            let gm = h == P && cfg.topology == Topology::P2p;
            let dst = Endpoint::new(MACS[dst], Some(OPC_VLAN), Some(OPC_PCP)).map_err(SimError::Config)?;
            Ok(Host {
                app: HostApp::new(role, cfg.app, h as u64 + 1, limit),
                clock: HostClock::new(
                    &cfg.clock,
                    gm,
                    stream(cfg.seed, 100 + 2 * h as u64),
                    stream(cfg.seed, 101 + 2 * h as u64),
                ),
                port: Port::new(&cfg.host_qdisc, cfg.link, start),
                wake_rng: [0, 1, 2].map(|t| stream(cfg.seed, 1 + 3 * h as u64 + t)),
                dst,
            })
        };
        let hosts = [host(P, Role::Publisher, L)?, host(L, Role::Loopback, P)?];
        let bridge = (cfg.topology == Topology::Bridged).then(|| {
            let n = if cfg.be.transit { 3 } else { 2 };
            Bridge::new(
                n,
                &cfg.bridge_qdisc,
                cfg.link,
                cfg.bridge_latency,
                stream(cfg.seed, 200),
                start,
            )
        });
        let total_cycles = cfg.packets + cfg.drain_cycles;
        let be = BeTrafficGen::new(cfg.be.rate_mbps, cfg.app.base_time);
        let be_end = cfg.app.cycle_start(cfg.packets);
        let mut w = Self {
            engine: Engine::new(start),
            hosts,
            bridge,
            fates: FateTable::default(),
            p_egress: Vec::with_capacity(cfg.packets as usize),
            rtt: Vec::with_capacity(cfg.packets as usize),
            l_ingress: TapSeries::new(TapPoint::LIngress),
            p_ingress: TapSeries::new(TapPoint::PIngress),
            tap_counts: BTreeMap::new(),
            qdisc_drops: BTreeMap::new(),
            trace: Vec::new(),
            be,
            be_end,
            total_cycles,
            drops: Vec::new(),
            app_events: Vec::new(),
            cfg,
        };
        if w.total_cycles > 0 {
            for h in [P, L] {
                for thread in Thread::ALL {
                    w.schedule_wake(h, thread, 0)?;
                }
            }
        }
        if let Some(t) = w.be.send_time(0).filter(|&t| t < w.be_end) {
            w.engine.schedule(t, Event::BeTick(0))?;
        }
        Ok(w)
    }

    /// Runs to completion and returns the measurements.
    pub fn run(mut self) -> Result<RunOutput, SimError> {
        let t_end = self.cfg.app.cycle_start(self.total_cycles + 2);
        while let Some((t, ev)) = self.engine.pop_until(t_end) {
            self.handle(t, ev)?;
        }
        Ok(RunOutput {
            fates: self.fates.counts(),
            rtt: self.rtt,
            l_ingress: self.l_ingress,
            p_ingress: self.p_ingress,
            tap_counts: self.tap_counts,
            qdisc_drops: self.qdisc_drops,
            missed_reads: [
                self.hosts[P].app.missed_reads(),
                self.hosts[L].app.missed_reads(),
            ],
            events: self.engine.executed(),
            trace: self.trace,
        })
    }

    fn schedule_wake(&mut self, h: usize, thread: Thread, cycle: u64) -> Result<(), SimError> {
        let app = &self.cfg.app;
        let local = app.cycle_start(cycle) + thread.phase(app.cycle);
        let host = &mut self.hosts[h];
        let delay = self.cfg.noise.sample(&mut host.wake_rng[thread.index()]);
        let t = (host.clock.sys_to_true(local) + delay).max(self.engine.now());
        self.engine.schedule(t, Event::Wake { host: h, thread, cycle })
    }

    fn handle(&mut self, now: Nanos, ev: Event) -> Result<(), SimError> {
        match ev {
            Event::Wake { host, thread, cycle } => {
                if cycle + 1 < self.total_cycles {
                    self.schedule_wake(host, thread, cycle + 1)?;
                }
                self.on_wake(now, host, thread, cycle)
            }
            Event::PortWake(id) => {
                self.port_mut(id).wake_fired(now);
                self.kick(now, id)
            }
            Event::TxComplete(id) => self.kick(now, id),
            Event::Arrival { at, frame, sfd } => self.on_arrival(now, at, frame, sfd),
            Event::Forward { in_port, frame } => self.on_forward(now, in_port, frame),
            Event::BeTick(k) => self.on_be_tick(now, k),
        }
    }

    fn on_wake(&mut self, now: Nanos, h: usize, thread: Thread, cycle: u64) -> Result<(), SimError> {
        let mut events = std::mem::take(&mut self.app_events);
        match thread {
            Thread::Subscriber => self.hosts[h].app.on_subscriber_wake(now, &mut events),
            Thread::User => self.hosts[h].app.on_user_wake(&mut events),
            Thread::Publisher => {
                let fates = &mut self.fates;
                let host = &mut self.hosts[h];
                let stamp = host.clock.sys_read(now);
                if let Some(publication) = host.app.on_publisher_wake(cycle, stamp, || fates.publish()) {
                    let frame = build_frame(&publication.message, MACS[h], &host.dst)?;
                    let role = host.app.role;
                    let sim_frame = SimFrame {
                        src: frame.src,
                        dst: frame.dst,
                        pcp: frame.pcp,
                        physical_bytes: frame.sizes.physical_bytes as u32,
                        txtime: publication.txtime,
                        kind: FrameKind::Opc {
                            origin: role,
                            probe: publication.probe,
                            uadp: frame.payload,
                        },
                    };
                    self.enqueue(now, PortId::Host(h), sim_frame)?;
                }
            }
        }
        let at = if h == P { LossPoint::Publisher } else { LossPoint::Loopback };
        for e in events.drain(..) {
            match e {
                AppEvent::Lost(probe) => self.fates.record_loss(probe, at),
                AppEvent::Returned { probe, hw_rx } => {
                    if self.fates.record_return(probe) {
                        let sent = self.p_egress[probe as usize];
                        self.rtt.push(hw_rx - sent);
                    }
                }
            }
        }
        self.app_events = events;
        Ok(())
    }

    fn port_mut(&mut self, id: PortId) -> &mut Port {
        match id {
            PortId::Host(h) => &mut self.hosts[h].port,
            PortId::Bridge(b) => &mut self.bridge.as_mut().expect("bridged topology").ports[b],
        }
    }

    fn peer(&self, id: PortId) -> Option<PortId> {
        match (self.cfg.topology, id) {
            (Topology::P2p, PortId::Host(h)) => Some(PortId::Host(1 - h)),
            (Topology::Bridged, PortId::Host(P)) => Some(PortId::Bridge(BRIDGE_TO_P)),
            (Topology::Bridged, PortId::Host(_)) => Some(PortId::Bridge(BRIDGE_TO_L)),
            (_, PortId::Bridge(BRIDGE_TO_P)) => Some(PortId::Host(P)),
            (_, PortId::Bridge(BRIDGE_TO_L)) => Some(PortId::Host(L)),
            (_, PortId::Bridge(_)) => None,
        }
    }

    fn hw_offset(&mut self, id: PortId, t: Nanos) -> Nanos {
        match id {
            PortId::Host(h) => self.hosts[h].clock.hw_offset(t),
            // The bridge is the grandmaster.
            PortId::Bridge(_) => 0,
        }
    }

    fn tap(&mut self, point: TapPoint, probe: Option<u64>, time: Nanos) {
        *self.tap_counts.entry(point).or_default() += 1;
        if let (true, Some(seq)) = (self.cfg.trace, probe) {
            self.trace.push(TapRecord {
                run_id: self.cfg.run_id.clone(),
                seq,
                point,
                time_ns: time,
            });
        }
    }

    fn enqueue(&mut self, now: Nanos, id: PortId, frame: SimFrame) -> Result<(), SimError> {
        let mut drops = std::mem::take(&mut self.drops);
        self.port_mut(id).enqueue(now, frame, &mut drops)?;
        self.settle_drops(id, &mut drops);
        self.drops = drops;
        self.kick(now, id)
    }

    fn settle_drops(&mut self, id: PortId, drops: &mut Vec<(SimFrame, DropReason)>) {
        for (frame, reason) in drops.drain(..) {
            *self.qdisc_drops.entry(reason).or_default() += 1;
            let (Some(probe), Some(origin)) = (frame.probe(), frame.origin()) else {
                continue;
            };
            let at = match (id, origin) {
                (PortId::Host(P), _) => LossPoint::Publisher,
                (PortId::Host(_), _) => LossPoint::Loopback,
                (PortId::Bridge(BRIDGE_TO_L), Role::Publisher) => LossPoint::BridgeToLoopback,
                (PortId::Bridge(BRIDGE_TO_P), Role::Loopback) => LossPoint::BridgeToPublisher,
                _ => continue,
            };
            self.fates.record_loss(probe, at);
        }
    }

    fn kick(&mut self, now: Nanos, id: PortId) -> Result<(), SimError> {
        let offset = self.hw_offset(id, now);
        let mut drops = std::mem::take(&mut self.drops);
        let service = self.port_mut(id).service(now, offset, &mut drops)?;
        self.settle_drops(id, &mut drops);
        self.drops = drops;
        match service {
            Service::Started(tx) => {
                self.engine.schedule(tx.end, Event::TxComplete(id))?;
                self.on_tx_start(id, tx)?;
            }
            Service::Idle { wake: Some(w) } => {
                let w = w.max(now + 1);
                if self.port_mut(id).claim_wake(now, w) {
                    self.engine.schedule(w, Event::PortWake(id))?;
                }
            }
            Service::Idle { wake: None } => {}
        }
        Ok(())
    }

    fn on_tx_start(&mut self, id: PortId, tx: Transmission) -> Result<(), SimError> {
        if let (PortId::Host(h), Some(origin)) = (id, tx.frame.origin()) {
            let stamp = self.hosts[h].clock.hw_read(tx.start);
            let probe = tx.frame.probe();
            match (h, origin) {
                (P, Role::Publisher) => {
                    let probe = probe.expect("publisher frames carry a probe");
                    self.p_egress.resize((probe + 1).max(self.p_egress.len() as u64) as usize, 0);
                    self.p_egress[probe as usize] = stamp;
                    self.tap(TapPoint::PEgress, Some(probe), stamp);
                }
                (L, Role::Loopback) => self.tap(TapPoint::LEgress, probe, stamp),
                _ => {}
            }
        }
        if let Some(peer) = self.peer(id) {
            let link = self.cfg.link;
            let sfd = link.sfd_at_peer(tx.start);
            self.engine.schedule(
                tx.end + link.propagation,
                Event::Arrival {
                    at: peer,
                    frame: tx.frame,
                    sfd,
                },
            )?;
        }
        Ok(())
    }

    fn on_arrival(&mut self, now: Nanos, at: PortId, frame: SimFrame, sfd: Nanos) -> Result<(), SimError> {
        match at {
            PortId::Host(h) => {
                let FrameKind::Opc { origin, probe, uadp } = &frame.kind else {
                    return Ok(());
                };
                let own = if h == P { Role::Publisher } else { Role::Loopback };
                if *origin == own {
                    return Ok(());
                }
                let stamp = self.hosts[h].clock.hw_read(sfd);
                let point = if h == P { TapPoint::PIngress } else { TapPoint::LIngress };
                self.tap(point, *probe, stamp);
                if let Some(p) = probe {
                    if h == P {
                        self.p_ingress.push(*p, stamp);
                    } else {
                        self.l_ingress.push(*p, stamp);
                    }
                }
                let rx = Received::from_bytes(now, stamp, *probe, uadp)?;
                self.hosts[h].app.receive(rx);
                Ok(())
            }
            PortId::Bridge(b) => {
                let point = match (b, frame.origin()) {
                    (BRIDGE_TO_P, Some(_)) => Some(TapPoint::BIngressFromP),
                    (BRIDGE_TO_L, Some(_)) => Some(TapPoint::BIngressFromL),
                    _ => None,
                };
                if let Some(point) = point {
                    self.tap(point, frame.probe(), sfd);
                }
                let bridge = self.bridge.as_mut().expect("bridged topology");
                let t = bridge.on_receive(b, frame.src, now);
                self.engine.schedule(t, Event::Forward { in_port: b, frame })
            }
        }
    }

    fn on_forward(&mut self, now: Nanos, in_port: usize, frame: SimFrame) -> Result<(), SimError> {
        let outs = self
            .bridge
            .as_ref()
            .expect("bridged topology")
            .egress_ports(in_port, frame.dst);
        let Some((&last, rest)) = outs.split_last() else {
            return Ok(());
        };
        for &p in rest {
            self.enqueue(now, PortId::Bridge(p), frame.clone())?;
        }
        self.enqueue(now, PortId::Bridge(last), frame)
    }

    fn on_be_tick(&mut self, now: Nanos, k: u64) -> Result<(), SimError> {
        if let Some(t) = self.be.send_time(k + 1).filter(|&t| t < self.be_end) {
            self.engine.schedule(t, Event::BeTick(k + 1))?;
        }
        let transit = self.cfg.be.transit;
        let frame = SimFrame {
            src: if transit { MACS[2] } else { MACS[P] },
            dst: MACS[L],
            pcp: 0,
            physical_bytes: self.be.physical_bytes,
            txtime: None,
            kind: FrameKind::BestEffort,
        };
        if transit {
            let link = self.cfg.link;
            self.engine.schedule(
                link.arrival(now, frame.physical_bytes),
                Event::Arrival {
                    at: PortId::Bridge(BRIDGE_TRANSIT),
                    frame,
                    sfd: link.sfd_at_peer(now),
                },
            )
        } else {
            self.enqueue(now, PortId::Host(P), frame)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tc::EtfParams;

    fn app(offset_us: Nanos) -> AppConfig {
        AppConfig {
            offset: offset_us * 1_000,
            ..AppConfig::default()
        }
    }

    fn run(cfg: WorldConfig) -> RunOutput {
        World::new(cfg).unwrap().run().unwrap()
    }

    fn etf() -> QdiscSpec {
        QdiscSpec::Etf(EtfParams::new(200_000, true, false).unwrap())
    }

    #[test]
    fn quiet_etf_returns_everything() {
        let out = run(WorldConfig::new(etf(), app(150), 200));
        assert_eq!(out.fates.published, 200);
        assert_eq!(out.fates.returned, 200, "{:?}", out.fates);
        assert_eq!(out.rtt.len(), 200);
    }

    #[test]
    fn quiet_rtt_is_two_cycles() {
        let out = run(WorldConfig::new(etf(), app(150), 100));
        // Two cycles plus the propagation delay of the return leg.
        assert!(out.rtt.iter().all(|&r| r == 500_500), "{:?}", &out.rtt[..4]);
        let mut cfg = WorldConfig::new(QdiscSpec::Mqprio, app(0), 100);
        cfg.app.txtime_mode = false;
        let out = run(cfg);
        assert!(out.rtt.iter().all(|&r| (250_000..252_000).contains(&r)), "{:?}", &out.rtt[..4]);
    }

    #[test]
    fn conservation_with_noise() {
        let mut cfg = WorldConfig::new(etf(), app(0), 2_000);
        cfg.noise = SchedLatencyModel::preset(super::super::NoisePreset::D);
        cfg.clock = ClockModel::default();
        let out = run(cfg);
        let f = out.fates;
        assert_eq!(f.published, 2_000);
        assert_eq!(f.returned + f.lost(), f.published, "{f:?}");
    }

    #[test]
    fn bridged_transit_runs() {
        let mut cfg = WorldConfig::new(etf(), app(150), 500);
        cfg.topology = Topology::Bridged;
        cfg.bridge_qdisc = QdiscSpec::Mqprio;
        cfg.be = BeConfig {
            rate_mbps: 500,
            transit: true,
        };
        let out = run(cfg);
        assert_eq!(out.fates.returned + out.fates.lost(), 500);
        assert!(out.tap_counts[&TapPoint::BIngressFromP] >= 500);
    }

    #[test]
    fn same_seed_same_output() {
        let mk = || {
            let mut cfg = WorldConfig::new(QdiscSpec::FqCodel, app(100), 300);
            cfg.noise = SchedLatencyModel::preset(super::super::NoisePreset::E3);
            cfg.clock = ClockModel::default();
            cfg.seed = 9;
            cfg.be.rate_mbps = 300;
            run(cfg)
        };
        let (a, b) = (mk(), mk());
        assert_eq!(a.rtt, b.rtt);
        assert_eq!(a.fates, b.fates);
        assert_eq!(a.events, b.events);
    }

    #[test]
    fn transit_needs_bridge() {
        let mut cfg = WorldConfig::new(etf(), app(150), 10);
        cfg.be.transit = true;
        assert!(matches!(World::new(cfg), Err(SimError::Config(_))));
    }
}
