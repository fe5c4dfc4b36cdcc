//! Discrete-event simulator for multi-radio multi-channel wireless mesh
//! networks, with an RTT-driven routing and channel assignment protocol
//! compared against a hop-count baseline.

use std::fmt;

pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
pub mod event;
pub mod mac;
pub mod metrics;
pub mod routing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
