//! Deterministic discrete-event model of cyclic OPC UA PubSub traffic over
//! Linux time-sensitive queueing disciplines.
//!
//! The crate is split along the layers of the experiment:
//!
//! * [`uadp`] encodes and decodes UADP network messages and their Ethernet framing.
//! * [`tc`] holds pure models of the queueing disciplines (mqprio, CBS, TAPRIO, ETF, fq_codel).
//! * [`sim`] is the event engine plus hosts, NICs, links, the bridge and noise sources.
//! * [`app`] models the three-thread publisher/loopback application.
//! * [`metrics`] turns tap timestamps into drop rates, RTT, jitter and ECDFs.
//! * [`cli`] is the experiment harness behind the `tsnlab` binary.

pub mod app;
pub mod cli;
pub mod metrics;
pub mod sim;
pub mod tc;
pub mod uadp;

/// Simulation time and durations, in nanoseconds.
pub type Nanos = i64;

pub const NS_PER_US: Nanos = 1_000;
pub const NS_PER_SEC: Nanos = 1_000_000_000;
