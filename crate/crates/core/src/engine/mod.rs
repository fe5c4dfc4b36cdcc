//! Scenario execution: topology, the event-driven simulator, and the
//! two-phase comparison run.

pub mod sim;
pub mod topology;

use std::io::Write;

use thiserror::Error;

use crate::metrics::CorReport;
use crate::NodeId;

pub use sim::{BaselineMac, LinkEstimates, Protocol, RunOutput, SimParams, Simulator, TraceSink};
pub use topology::{
    build_chain, build_detour, build_random, ChannelPlan, Interferer, NodeSpec, Position, RadioModel, Topology,
    TopologyError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no route from {src} to {dst}: they are not connected")]
    NoRoute { src: NodeId, dst: NodeId },
    #[error("flow source and destination are both {0}")]
    SelfFlow(NodeId),
}

/// Runs one protocol over a topology.
pub fn run_protocol(
    topo: &Topology,
    params: &SimParams,
    protocol: Protocol,
    seeds: Option<&LinkEstimates>,
    trace: TraceSink<'_>,
) -> Result<RunOutput, EngineError> {
    check_flows(topo, params)?;
    Ok(Simulator::new(topo, params, protocol, seeds, trace)?.run())
}

fn check_flows(topo: &Topology, params: &SimParams) -> Result<(), EngineError> {
    for &(s, d) in &params.flows {
        for id in [s, d] {
            topo.index_of(id).ok_or(EngineError::UnknownNode(id))?;
        }
        if s == d {
            return Err(EngineError::SelfFlow(s));
        }
        if topo.hop_distance(&params.model, s, d).is_none() {
            return Err(EngineError::NoRoute { src: s, dst: d });
        }
    }
    Ok(())
}

/// Outcome of the two-phase comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CorciarOutcome {
    pub baseline: RunOutput,
    pub corciar: RunOutput,
    /// Baseline throughput over the protocol's throughput.
    pub cor: Option<CorReport>,
}

/// Phase 1 runs the hop-count baseline, which also measures per-hop RTT on
/// every link and channel. Phase 2 replays the same scenario and seed with
/// RTT-driven routing and channel selection, starting from the Phase 1
/// estimates. The result compares the two throughputs. Both runs hash their
/// event traces; `trace` additionally receives them, each preceded by a
/// `# phase <protocol>` line.
pub fn corciar_run(
    topo: &Topology,
    params: &SimParams,
    mut trace: Option<&mut dyn Write>,
) -> Result<CorciarOutcome, EngineError> {
    let first = trace.as_mut().map(|w| &mut **w as &mut dyn Write);
    let baseline = run_traced(topo, params, Protocol::AodvHop, None, first)?;
    let corciar = run_traced(topo, params, Protocol::Corciar, Some(&baseline.link_estimates), trace)?;
    let cor = CorReport::new(baseline.summary.throughput_kbps, corciar.summary.throughput_kbps);
    Ok(CorciarOutcome { baseline, corciar, cor })
}

/// [`run_protocol`] with the trace hashed and optionally written out.
pub fn run_traced(
    topo: &Topology,
    params: &SimParams,
    protocol: Protocol,
    seeds: Option<&LinkEstimates>,
    trace: Option<&mut dyn Write>,
) -> Result<RunOutput, EngineError> {
    match trace {
        Some(w) => {
            // a failing trace sink is reported by the caller when it flushes
            let _ = writeln!(w, "# phase {}", protocol.label());
            run_protocol(topo, params, protocol, seeds, TraceSink::Write(w))
        }
        None => run_protocol(topo, params, protocol, seeds, TraceSink::Hash),
    }
}
