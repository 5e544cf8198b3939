//! Discrete-event simulation of the hosts, NICs, links and bridge that
//! carry the cyclic traffic.

mod bridge;
mod clock;
mod engine;
mod link;
mod noise;
mod packet;
mod port;
mod traffic;
mod world;

pub use bridge::{Bridge, BridgeLatency};
pub use clock::{ClockModel, HostClock};
pub use engine::Engine;
pub use link::Link;
pub use noise::{NoisePreset, SchedLatencyModel};
pub use packet::{FrameKind, SimFrame};
pub use port::{Port, QdiscSpec, Service, Transmission};
pub use traffic::{BeTrafficGen, BE_PHYSICAL_BYTES};
pub use world::{BeConfig, RunOutput, Topology, World, WorldConfig};

use crate::tc::TcError;
use crate::uadp::UadpError;
use crate::Nanos;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event at {time} scheduled in the past (now {now})")]
    EventInPast { time: Nanos, now: Nanos },
    #[error("cannot run until {t_end}, already at {now}")]
    EndBeforeNow { t_end: Nanos, now: Nanos },
    #[error(transparent)]
    Tc(#[from] TcError),
    #[error(transparent)]
    Uadp(#[from] UadpError),
    #[error("invalid configuration: {0}")]
    Config(String),
}
