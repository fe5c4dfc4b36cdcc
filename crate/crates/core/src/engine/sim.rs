//! The packet-level simulation loop.
//!
//! Radios contend with a DCF-style backoff and carrier sense across
//! partially overlapping channels. A unicast transmission is modelled as one
//! atomic RTS/CTS/DATA/ACK exchange whose outcome is decided when it ends:
//! the data is lost if any other emission overlapping it in time reached the
//! receiver with an interference factor above the threshold, and the MAC ACK
//! is lost under the same test at the sender.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::channel::{ChannelId, InterferenceProfile, PclObservation, PclTable};
use crate::event::{EventQueue, SimEvent, SimTime};
use crate::mac::{
    airtime, exchange_duration, handle_rts, transmission_delay, weighted_hop_cost, BackoffOutcome, BackoffStep,
    CompleteTimestamps, EnqueueOutcome, Frame, FrameKind, MacRadioState, RtsDecision, RtsMode, TrafficClass,
    CONTROL_PAYLOAD_BYTES, CTS_BYTES, DIFS_S, MAC_ACK_BYTES, RTS_BYTES, SIFS_S,
};
use crate::metrics::{summarize, FlowStats, RunSummary};
use crate::routing::{
    cumulative_rtt, flood_once, LinkGraph, NeighborTable, Route, RouteEntry, RouteMetric, RoutingTable, RttEstimator,
    HELLO_LOSS_LIMIT, ROUTE_LIFETIME_S,
};
use crate::NodeId;

use super::topology::{RadioModel, Topology};

pub const RTO_MIN_S: f64 = 0.1;
pub const RTO_MAX_S: f64 = 10.0;
pub const RTO_INITIAL_S: f64 = 1.0;
pub const TRANSPORT_RETRY_LIMIT: u32 = 7;
/// Control-plane latency charged per hop for each direction of a discovery.
pub const DISCOVERY_HOP_LATENCY_S: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    AodvHop,
    Corciar,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::AodvHop => "aodv_hop",
            Protocol::Corciar => "corciar",
        }
    }
}

/// RTS handling of the baseline. The protocol under test always uses the
/// channel-aware admission rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMac {
    /// Plain RTS/CTS: the receiver answers whenever its radio is idle.
    Standard,
    Modified,
}

/// Smoothed per-hop RTT keyed by (node, neighbor, channel), ms.
pub type LinkEstimates = BTreeMap<(NodeId, NodeId, ChannelId), f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub model: RadioModel,
    pub profile: InterferenceProfile,
    pub rts_mode: RtsMode,
    pub traffic_class: TrafficClass,
    pub baseline_mac: BaselineMac,
    pub sim_time_s: f64,
    pub packet_size_bytes: u32,
    pub alpha: f64,
    pub delta: f64,
    pub window: usize,
    pub flows: Vec<(NodeId, NodeId)>,
    pub seed: u64,
    pub hello_interval_s: f64,
    pub beacon_interval_s: f64,
    pub flow_start_s: f64,
    /// Relative improvement needed before a route or channel is replaced.
    pub hysteresis: f64,
    /// Link cost assumed for channels without RTT samples, ms.
    pub unmeasured_link_ms: f64,
    /// A (neighbor, channel) pair without an RTT sample for this long is
    /// probed at the next hello.
    pub probe_interval_s: f64,
    /// When set, the RTT-metric protocol re-evaluates each flow's route at
    /// this period after discovery. Unset, a route is chosen once from the
    /// available estimates and replaced only after a break.
    pub reroute_interval_s: Option<f64>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            model: RadioModel::default(),
            profile: InterferenceProfile::default(),
            rts_mode: RtsMode::Symmetric,
            traffic_class: TrafficClass::Qos,
            baseline_mac: BaselineMac::Standard,
            sim_time_s: 100.0,
            packet_size_bytes: 1000,
            alpha: 0.5,
            delta: 0.125,
            window: 4,
            flows: Vec::new(),
            seed: 1,
            hello_interval_s: 1.0,
            beacon_interval_s: 0.1,
            flow_start_s: 1.5,
            hysteresis: 0.2,
            unmeasured_link_ms: 30.0,
            probe_interval_s: 5.0,
            reroute_interval_s: None,
        }
    }
}

/// Where dispatched events go.
pub enum TraceSink<'a> {
    Off,
    /// Hash the trace without writing it.
    Hash,
    Write(&'a mut dyn Write),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub protocol: Protocol,
    pub summary: RunSummary,
    pub flows: Vec<FlowStats>,
    /// Path of each flow at the end of the run.
    pub final_routes: Vec<Option<Vec<NodeId>>>,
    /// Every path installed per flow, with the install time in seconds.
    pub route_history: Vec<Vec<(f64, Vec<NodeId>)>>,
    /// Exchanges or broadcast receptions lost to interference.
    pub corruptions: u64,
    /// Corruptions where at least one overlapping emission was on another
    /// channel.
    pub cross_channel_corruptions: u64,
    pub rts_defers: u64,
    pub events: u64,
    pub trace_hash: Option<String>,
    pub link_estimates: LinkEstimates,
    pub route_tables: Vec<(NodeId, RouteEntry)>,
    /// Completed DATA exchanges per channel.
    pub data_exchanges: BTreeMap<ChannelId, u64>,
}

#[derive(Debug, Clone, Copy)]
enum Action {
    HelloTick(usize),
    BeaconTick(usize),
    MacAttempt(usize, usize),
    ExchangeEnd(u64),
    BroadcastEnd(u64),
    JammerOn(usize),
    JammerOff(usize),
    Discover(usize),
    FlowSendWindow(usize),
    RtoExpiry(usize, u64, u32),
    Reroute(usize),
    SimEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Emitter {
    Node(usize),
    Jammer(usize),
}

#[derive(Debug, Clone)]
struct Emission {
    id: u64,
    emitter: Emitter,
    channel: ChannelId,
    start: SimTime,
    end: SimTime,
}

#[derive(Debug, Clone)]
struct Exchange {
    sender: usize,
    s_radio: usize,
    receiver: usize,
    channel: ChannelId,
    start: SimTime,
    emissions: [u64; 2],
}

#[derive(Debug, Clone)]
struct Broadcast {
    node: usize,
    radio: usize,
    start: SimTime,
    emission: u64,
}

struct RadioRt {
    mac: MacRadioState,
    attempt_pending: bool,
    /// Sender side of an exchange or broadcast; its end event reschedules.
    sending: bool,
    busy_until: SimTime,
}

struct NodeRt {
    id: NodeId,
    radios: Vec<RadioRt>,
    neighbors: NeighborTable,
    routes: RoutingTable,
    pcl: PclTable,
    potential: f64,
    seeds: BTreeMap<(NodeId, ChannelId), f64>,
    /// Time of the latest RTT sample per (neighbor, channel).
    last_sample: BTreeMap<(NodeId, ChannelId), f64>,
}

#[derive(Debug, Clone)]
struct Inflight {
    first_sent: SimTime,
    transmissions: u32,
}

struct FlowRt {
    src: usize,
    dst: usize,
    stats: FlowStats,
    unacked: BTreeMap<u64, Inflight>,
    next_seq: u64,
    rto: SimTime,
    estimator: RttEstimator,
    route_ready: bool,
    discovery_pending: bool,
    delivered: BTreeSet<u64>,
    history: Vec<(f64, Vec<NodeId>)>,
}

pub struct Simulator<'t> {
    params: SimParams,
    protocol: Protocol,
    modified_rts: bool,
    q: EventQueue<Action>,
    rng: ChaCha8Rng,
    jam_rng: ChaCha8Rng,
    nodes: Vec<NodeRt>,
    index: BTreeMap<NodeId, usize>,
    gateway: usize,
    node_dist: Vec<Vec<f64>>,
    jam_dist: Vec<Vec<f64>>,
    jam_channels: Vec<(ChannelId, f64, f64)>,
    in_range: Vec<Vec<usize>>,
    emissions: Vec<Emission>,
    exchanges: BTreeMap<u64, Exchange>,
    broadcasts: BTreeMap<u64, Broadcast>,
    flows: Vec<FlowRt>,
    next_id: u64,
    corruptions: u64,
    cross_channel_corruptions: u64,
    rts_defers: u64,
    data_exchanges: BTreeMap<ChannelId, u64>,
    trace: TraceSink<'t>,
    hasher: Option<Sha256>,
}

fn secs(t: f64) -> SimTime {
    SimTime::from_secs(t.max(0.0))
}

impl<'t> Simulator<'t> {
    pub fn new(
        topo: &Topology,
        params: &SimParams,
        protocol: Protocol,
        seeds: Option<&LinkEstimates>,
        trace: TraceSink<'t>,
    ) -> Result<Self, super::EngineError> {
        let index: BTreeMap<NodeId, usize> = topo.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let gateway = *index.get(&topo.gateway).ok_or(super::EngineError::UnknownNode(topo.gateway))?;
        let timeout = params.hello_interval_s * HELLO_LOSS_LIMIT as f64;
        let mut nodes: Vec<NodeRt> = topo
            .nodes
            .iter()
            .map(|n| NodeRt {
                id: n.id,
                radios: n
                    .radios
                    .iter()
                    .map(|&c| RadioRt {
                        mac: MacRadioState::new(c),
                        attempt_pending: false,
                        sending: false,
                        busy_until: SimTime::ZERO,
                    })
                    .collect(),
                neighbors: NeighborTable::new(timeout, params.delta),
                routes: RoutingTable::new(),
                pcl: PclTable::new(),
                potential: f64::INFINITY,
                seeds: BTreeMap::new(),
                last_sample: BTreeMap::new(),
            })
            .collect();
        if let Some(seeds) = seeds {
            for (&(node, nb, ch), &avg) in seeds {
                if let Some(&i) = index.get(&node) {
                    nodes[i].seeds.insert((nb, ch), avg);
                }
            }
        }
        let n = topo.nodes.len();
        let node_dist: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| topo.nodes[i].pos.distance(&topo.nodes[j].pos)).collect()).collect();
        let jam_dist =
            topo.interferers.iter().map(|j| topo.nodes.iter().map(|n| j.pos.distance(&n.pos)).collect()).collect();
        let jam_channels = topo
            .interferers
            .iter()
            .map(|j| (j.channel, j.mean_burst_ms / 1e3, j.duty.clamp(1e-6, 1.0 - 1e-6)))
            .collect();
        let in_range =
            (0..n).map(|i| (0..n).filter(|&j| j != i && node_dist[i][j] <= params.model.tx_range).collect()).collect();
        let mut flows = Vec::new();
        for (k, &(s, d)) in params.flows.iter().enumerate() {
            let src = *index.get(&s).ok_or(super::EngineError::UnknownNode(s))?;
            let dst = *index.get(&d).ok_or(super::EngineError::UnknownNode(d))?;
            flows.push(FlowRt {
                src,
                dst,
                stats: FlowStats::new(k as u32),
                unacked: BTreeMap::new(),
                next_seq: 0,
                rto: secs(RTO_INITIAL_S),
                estimator: RttEstimator::new(params.delta),
                route_ready: false,
                discovery_pending: false,
                delivered: BTreeSet::new(),
                history: Vec::new(),
            });
        }
        let modified_rts = match protocol {
            Protocol::Corciar => true,
            Protocol::AodvHop => params.baseline_mac == BaselineMac::Modified,
        };
        let hasher = match trace {
            TraceSink::Off => None,
            _ => Some(Sha256::new()),
        };
        Ok(Simulator {
            params: params.clone(),
            protocol,
            modified_rts,
            q: EventQueue::new(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            jam_rng: ChaCha8Rng::seed_from_u64(params.seed ^ 0x6a61_6d6d_6572),
            nodes,
            index,
            gateway,
            node_dist,
            jam_dist,
            jam_channels,
            in_range,
            emissions: Vec::new(),
            exchanges: BTreeMap::new(),
            broadcasts: BTreeMap::new(),
            flows,
            next_id: 0,
            corruptions: 0,
            cross_channel_corruptions: 0,
            rts_defers: 0,
            data_exchanges: BTreeMap::new(),
            trace,
            hasher,
        })
    }

    fn fresh_id(&mut self) -> u64 {
        self.next_id += 1;
        self.next_id
    }

    fn now(&self) -> SimTime {
        self.q.now()
    }

    fn now_s(&self) -> f64 {
        self.q.now().secs()
    }

    fn at(&mut self, t: SimTime, a: Action) {
        self.q.schedule(t, a).expect("engine never schedules into the past");
    }

    pub fn run(mut self) -> RunOutput {
        let end = secs(self.params.sim_time_s);
        // start-up offsets come from their own generator so that both
        // protocols see the same hello and beacon phases
        let mut setup = ChaCha8Rng::seed_from_u64(self.params.seed ^ 0x73_6574_7570);
        for i in 0..self.nodes.len() {
            let h = setup.gen_range(0.0..self.params.hello_interval_s);
            let b = setup.gen_range(0.0..self.params.beacon_interval_s);
            self.at(secs(h), Action::HelloTick(i));
            self.at(secs(b), Action::BeaconTick(i));
        }
        for k in 0..self.jam_channels.len() {
            let off = setup.gen_range(0.0..0.1);
            self.at(secs(off), Action::JammerOn(k));
        }
        for f in 0..self.flows.len() {
            let t = self.params.flow_start_s + 0.01 * f as f64;
            self.flows[f].discovery_pending = true;
            self.at(secs(t), Action::Discover(f));
        }
        self.at(end, Action::SimEnd);

        let mut events = 0u64;
        while let Some(ev) = self.q.pop_until(end) {
            events += 1;
            self.record(&ev);
            if let Action::SimEnd = ev.action {
                break;
            }
            self.dispatch(ev.action);
        }
        self.finish(events)
    }

    fn record(&mut self, ev: &SimEvent<Action>) {
        if self.hasher.is_none() {
            return;
        }
        let line = format!("{} {}\n", ev.time, self.describe(ev.action));
        self.emit_line(line);
    }

    /// Traces an outcome of the event being dispatched, on its own line.
    fn note(&mut self, text: impl FnOnce() -> String) {
        if self.hasher.is_none() {
            return;
        }
        let line = format!("{} {}\n", self.now(), text());
        self.emit_line(line);
    }

    fn emit_line(&mut self, line: String) {
        if let Some(h) = self.hasher.as_mut() {
            h.update(line.as_bytes());
        }
        if let TraceSink::Write(w) = &mut self.trace {
            // trace output is best effort; a failing sink must not perturb the run
            let _ = w.write_all(line.as_bytes());
        }
    }

    fn describe(&self, a: Action) -> String {
        let id = |i: usize| self.nodes[i].id;
        match a {
            Action::HelloTick(n) => format!("{} HelloTick", id(n)),
            Action::BeaconTick(n) => format!("{} BeaconTick", id(n)),
            Action::MacAttempt(n, r) => {
                format!("{} TimerFire mac radio={} ch={}", id(n), r, self.nodes[n].radios[r].mac.channel)
            }
            Action::ExchangeEnd(x) => match self.exchanges.get(&x) {
                Some(e) => format!("{} FrameArrival exchange from={} ch={}", id(e.receiver), id(e.sender), e.channel),
                None => format!("- FrameArrival exchange {x}"),
            },
            Action::BroadcastEnd(b) => match self.broadcasts.get(&b) {
                Some(e) => format!("{} FrameArrival broadcast radio={}", id(e.node), e.radio),
                None => format!("- FrameArrival broadcast {b}"),
            },
            Action::JammerOn(k) => format!("- TimerFire interferer={k} on"),
            Action::JammerOff(k) => format!("- TimerFire interferer={k} off"),
            Action::Discover(f) => format!("{} TimerFire discover flow={f}", id(self.flows[f].src)),
            Action::FlowSendWindow(f) => format!("{} FlowSendWindow flow={f}", id(self.flows[f].src)),
            Action::RtoExpiry(f, s, k) => {
                format!("{} RtoExpiry flow={f} seq={s} tx={k}", id(self.flows[f].src))
            }
            Action::Reroute(f) => format!("{} TimerFire reroute flow={f}", id(self.flows[f].src)),
            Action::SimEnd => "- SimEnd".to_string(),
        }
    }

    fn dispatch(&mut self, a: Action) {
        match a {
            Action::HelloTick(n) => self.hello_tick(n),
            Action::BeaconTick(n) => {
                let pcl = &mut self.nodes[n].pcl;
                pcl.update(PclObservation::BeaconRollover);
                pcl.clear_neighbor_usage();
                let next = self.now() + secs(self.params.beacon_interval_s);
                self.at(next, Action::BeaconTick(n));
            }
            Action::MacAttempt(n, r) => self.mac_attempt(n, r),
            Action::ExchangeEnd(x) => self.exchange_end(x),
            Action::BroadcastEnd(b) => self.broadcast_end(b),
            Action::JammerOn(k) => self.jammer_on(k),
            Action::JammerOff(k) => {
                let (_, mean_on, duty) = self.jam_channels[k];
                let mean_off = mean_on * (1.0 - duty) / duty;
                let off = exp_sample(&mut self.jam_rng, mean_off);
                let t = self.now() + secs(off);
                self.at(t, Action::JammerOn(k));
            }
            Action::Discover(f) => self.discover(f),
            Action::FlowSendWindow(f) => {
                self.flows[f].route_ready = true;
                self.send_window(f);
            }
            Action::RtoExpiry(f, seq, k) => self.rto_expiry(f, seq, k),
            Action::Reroute(f) => self.reroute(f),
            Action::SimEnd => {}
        }
    }

    // ---- PHY -------------------------------------------------------------

    fn emitter_distance(&self, e: Emitter, node: usize) -> f64 {
        match e {
            Emitter::Node(i) => self.node_dist[i][node],
            Emitter::Jammer(k) => self.jam_dist[k][node],
        }
    }

    fn interferes(&self, e: &Emission, node: usize, ch: ChannelId) -> bool {
        self.emitter_distance(e.emitter, node) <= self.params.model.interference_range
            && self.params.profile.factor(e.channel, ch) > self.params.model.collision_threshold
    }

    /// End of the latest emission sensed at `node` on `ch` right now.
    fn carrier_busy(&self, node: usize, ch: ChannelId) -> Option<SimTime> {
        let now = self.now();
        self.emissions
            .iter()
            .filter(|e| e.start <= now && now < e.end && self.interferes(e, node, ch))
            .map(|e| e.end)
            .max()
    }

    /// Whether a reception at `node` on `ch` over `[start, end)` overlaps an
    /// interfering emission other than `own`; `Some(true)` when one of those
    /// emissions is on another channel.
    fn corruption(&self, node: usize, ch: ChannelId, start: SimTime, end: SimTime, own: &[u64]) -> Option<bool> {
        self.emissions
            .iter()
            .filter(|e| !own.contains(&e.id) && e.start < end && start < e.end && self.interferes(e, node, ch))
            .fold(None, |acc, e| Some(acc.unwrap_or(false) || e.channel != ch))
    }

    fn count_corruption(&mut self, cross_channel: bool) {
        self.corruptions += 1;
        if cross_channel {
            self.cross_channel_corruptions += 1;
        }
    }

    fn emit(&mut self, emitter: Emitter, channel: ChannelId, start: SimTime, end: SimTime) -> u64 {
        let id = self.fresh_id();
        self.emissions.push(Emission { id, emitter, channel, start, end });
        id
    }

    fn prune_emissions(&mut self) {
        let now = self.now();
        let oldest = self
            .exchanges
            .values()
            .map(|x| x.start)
            .chain(self.broadcasts.values().map(|b| b.start))
            .min()
            .unwrap_or(now)
            .min(now);
        self.emissions.retain(|e| e.end > oldest);
    }

    fn jammer_on(&mut self, k: usize) {
        let (ch, mean_on, _) = self.jam_channels[k];
        let on = exp_sample(&mut self.jam_rng, mean_on);
        let now = self.now();
        let end = now + secs(on);
        self.emit(Emitter::Jammer(k), ch, now, end);
        self.at(end, Action::JammerOff(k));
    }

    // ---- MAC -------------------------------------------------------------

    fn slots(&self, k: u32) -> SimTime {
        secs(DIFS_S + k as f64 * self.nodes[0].radios.first().map_or(20e-6, |r| r.mac.backoff.slot_time))
    }

    fn schedule_attempt(&mut self, n: usize, r: usize, after: SimTime, k: u32) {
        let t = after + self.slots(k);
        self.nodes[n].radios[r].attempt_pending = true;
        self.at(t, Action::MacAttempt(n, r));
    }

    /// Makes sure a radio with queued frames has an attempt scheduled.
    fn kick(&mut self, n: usize, r: usize) {
        let radio = &self.nodes[n].radios[r];
        if radio.attempt_pending || radio.sending || radio.mac.is_empty() {
            return;
        }
        let cw = radio.mac.backoff.cw;
        let k = self.rng.gen_range(0..=cw);
        let after = self.now().max(radio.busy_until);
        self.schedule_attempt(n, r, after, k);
    }

    fn backoff(&mut self, n: usize, r: usize, outcome: BackoffOutcome) -> BackoffStep {
        let radio = &mut self.nodes[n].radios[r];
        radio.mac.backoff.next(outcome, &mut self.rng)
    }

    fn mac_attempt(&mut self, n: usize, r: usize) {
        let now = self.now();
        self.nodes[n].radios[r].attempt_pending = false;
        if self.nodes[n].radios[r].mac.is_empty() || self.nodes[n].radios[r].sending {
            return;
        }
        let ch = self.nodes[n].radios[r].mac.channel;
        let busy_until = self.nodes[n].radios[r].busy_until;
        let sensed = if busy_until > now { Some(busy_until) } else { self.carrier_busy(n, ch) };
        if let Some(until) = sensed {
            if let BackoffStep::Wait(k) = self.backoff(n, r, BackoffOutcome::Busy) {
                self.schedule_attempt(n, r, until.max(busy_until), k);
            }
            return;
        }
        let now_s = now.secs();
        self.nodes[n].radios[r].mac.advance_to_head(now_s).expect("queue is nonempty");
        let head = self.nodes[n].radios[r].mac.head().expect("queue is nonempty").clone();
        let rate = self.params.model.data_rate_bps;

        let Some(next_hop) = head.next_hop else {
            self.nodes[n].radios[r].mac.release_to_medium(now_s).expect("monotone");
            let end = now + secs(airtime(head.frame.size_bytes, rate));
            let emission = self.emit(Emitter::Node(n), ch, now, end);
            let radio = &mut self.nodes[n].radios[r];
            radio.sending = true;
            radio.busy_until = end;
            self.broadcasts.insert(emission, Broadcast { node: n, radio: r, start: now, emission });
            self.at(end, Action::BroadcastEnd(emission));
            return;
        };

        let j = self.index[&next_hop];
        let Some(rr) = self.nodes[j].radios.iter().position(|x| x.mac.channel == ch) else {
            // no common channel: the route is stale
            let dropped = self.nodes[n].radios[r].mac.pop_head(now_s).expect("head");
            self.count_loss(&dropped.frame, dropped.delivered, Loss::NoRoute);
            self.kick(n, r);
            return;
        };
        let receiver_busy = self.nodes[j].radios[rr].busy_until > now || self.nodes[j].radios[rr].sending;
        let vetoed = !receiver_busy && self.modified_rts && {
            let local: Vec<ChannelId> = self.nodes[j]
                .radios
                .iter()
                .enumerate()
                .filter(|(i, x)| *i != rr && (x.busy_until > now || x.sending))
                .map(|(_, x)| x.mac.channel)
                .collect();
            handle_rts(self.params.traffic_class, ch, &local, self.params.rts_mode) == RtsDecision::Defer
        };
        if receiver_busy || vetoed {
            if vetoed {
                self.rts_defers += 1;
            }
            let handshake = secs(airtime(RTS_BYTES, rate) + SIFS_S + airtime(CTS_BYTES, rate));
            match self.backoff(n, r, BackoffOutcome::Deferred) {
                BackoffStep::Wait(k) => self.schedule_attempt(n, r, now + handshake, k),
                BackoffStep::Discard => self.discard_head(n, r),
            }
            return;
        }

        let handshake = airtime(RTS_BYTES, rate) + SIFS_S + airtime(CTS_BYTES, rate) + SIFS_S;
        self.nodes[n].radios[r].mac.release_to_medium(now_s + handshake).expect("monotone");
        let end = now + secs(exchange_duration(head.frame.size_bytes, rate));
        let e1 = self.emit(Emitter::Node(n), ch, now, end);
        let e2 = self.emit(Emitter::Node(j), ch, now, end);
        let id = self.fresh_id();
        self.exchanges
            .insert(id, Exchange { sender: n, s_radio: r, receiver: j, channel: ch, start: now, emissions: [e1, e2] });
        {
            let s = &mut self.nodes[n].radios[r];
            s.sending = true;
            s.busy_until = end;
        }
        self.nodes[j].radios[rr].busy_until = end;
        if head.frame.kind == FrameKind::Data {
            self.nodes[n].pcl.update(PclObservation::SelfSelected(ch));
            for k in 0..self.in_range[n].len() {
                let m = self.in_range[n][k];
                if m != j {
                    self.nodes[m].pcl.update(PclObservation::NeighborTook(ch));
                }
            }
        }
        self.at(end, Action::ExchangeEnd(id));
    }

    /// Per-hop RTT sample in ms for a frame whose exchange finished (or was
    /// abandoned) at `ack_time`. Airtime is normalised to the data packet
    /// size so probes and data frames measure the same quantity, and the
    /// queue/contention terms are weighted by alpha.
    fn link_sample_ms(&self, ts: &CompleteTimestamps) -> f64 {
        let rate = self.params.model.data_rate_bps;
        let q = 2.0 * weighted_hop_cost(ts, self.params.alpha);
        (q + transmission_delay(self.params.packet_size_bytes, rate) + SIFS_S + airtime(MAC_ACK_BYTES, rate)) * 1e3
    }

    fn record_link_sample(&mut self, n: usize, nb: NodeId, ch: ChannelId, sample: f64) {
        let now_s = self.now_s();
        let delta = self.params.delta;
        if let Some(rec) = self.nodes[n].neighbors.get_mut(nb) {
            rec.estimator_mut(ch, delta, now_s).update(sample);
            self.nodes[n].last_sample.insert((nb, ch), now_s);
        }
    }

    fn exchange_end(&mut self, id: u64) {
        let now = self.now();
        let now_s = now.secs();
        let Some(x) = self.exchanges.get(&id).cloned() else { return };
        let data_hit = self.corruption(x.receiver, x.channel, x.start, now, &x.emissions);
        let ack_hit = self.corruption(x.sender, x.channel, x.start, now, &x.emissions);
        let (data_ok, ack_ok) = (data_hit.is_none(), ack_hit.is_none());
        self.exchanges.remove(&id);
        if !(data_ok && ack_ok) {
            self.count_corruption(data_hit.unwrap_or(false) || ack_hit.unwrap_or(false));
        }
        let (n, r) = (x.sender, x.s_radio);
        self.nodes[n].radios[r].sending = false;
        let head = self.nodes[n].radios[r].mac.head().expect("exchange holds the head").clone();
        let nb = head.next_hop.expect("unicast");
        let mut arrival = None;
        if data_ok && !head.delivered {
            arrival = Some(head.frame.clone());
        }
        if data_ok && ack_ok {
            if let Some(ts) = head.ts.completed() {
                let s = self.link_sample_ms(&ts);
                self.record_link_sample(n, nb, x.channel, s);
            }
            if head.frame.kind == FrameKind::Data {
                *self.data_exchanges.entry(x.channel).or_insert(0) += 1;
            }
            self.nodes[n].radios[r].mac.pop_head(now_s);
            let step = self.backoff(n, r, BackoffOutcome::Success);
            if let BackoffStep::Wait(k) = step {
                if !self.nodes[n].radios[r].mac.is_empty() {
                    self.schedule_attempt(n, r, now, k);
                }
            }
        } else {
            if let Some(h) = self.nodes[n].radios[r].mac.head_mut() {
                h.failures += 1;
                h.delivered |= data_ok;
            }
            match self.backoff(n, r, BackoffOutcome::Collision) {
                BackoffStep::Wait(k) => self.schedule_attempt(n, r, now, k),
                BackoffStep::Discard => self.discard_head(n, r),
            }
        }
        self.prune_emissions();
        if let Some(frame) = arrival {
            let from = self.nodes[n].id;
            self.receive(x.receiver, frame, from, x.channel);
        }
    }

    /// Drops the head frame after the retry limit and charges the link a
    /// sample ending now.
    fn discard_head(&mut self, n: usize, r: usize) {
        let now_s = self.now_s();
        let ch = self.nodes[n].radios[r].mac.channel;
        let Some(head) = self.nodes[n].radios[r].mac.pop_head(now_s) else { return };
        if let (Some(nb), Some(t_h)) = (head.next_hop, head.ts.t_h) {
            if let Some(ts) = crate::mac::QueueTimestamps::complete(head.ts.t_i, t_h, now_s.max(t_h)) {
                let s = self.link_sample_ms(&ts);
                self.record_link_sample(n, nb, ch, s);
            }
        }
        self.count_loss(&head.frame, head.delivered, Loss::Retry);
        self.kick(n, r);
    }

    fn broadcast_end(&mut self, id: u64) {
        let now = self.now();
        let Some(b) = self.broadcasts.remove(&id) else { return };
        let ch = self.nodes[b.node].radios[b.radio].mac.channel;
        let frame = self.nodes[b.node].radios[b.radio].mac.head().expect("broadcast head").frame.clone();
        let from = self.nodes[b.node].id;
        let mut receivers = Vec::new();
        for k in 0..self.in_range[b.node].len() {
            let m = self.in_range[b.node][k];
            let Some(rr) = self.nodes[m].radios.iter().position(|x| x.mac.channel == ch) else { continue };
            if let Some(cross) = self.corruption(m, ch, b.start, now, &[b.emission]) {
                self.count_corruption(cross);
                continue;
            }
            receivers.push((m, rr));
        }
        {
            let radio = &mut self.nodes[b.node].radios[b.radio];
            radio.sending = false;
            radio.mac.pop_head(now.secs());
        }
        if let BackoffStep::Wait(k) = self.backoff(b.node, b.radio, BackoffOutcome::Success) {
            if !self.nodes[b.node].radios[b.radio].mac.is_empty() {
                self.schedule_attempt(b.node, b.radio, now, k);
            }
        }
        self.prune_emissions();
        for (m, _) in receivers {
            self.receive(m, frame.clone(), from, ch);
        }
    }

    // ---- network layer ---------------------------------------------------

    fn receive(&mut self, j: usize, frame: Frame, from: NodeId, ch: ChannelId) {
        match frame.kind {
            FrameKind::Hello => self.on_hello(j, from, ch, frame.advertised_cum_rtt_ms),
            FrameKind::Data if j == self.flows[frame.flow_id as usize].dst => self.at_gateway(j, frame),
            FrameKind::Ack if j == self.flows[frame.flow_id as usize].src => self.on_ack(frame),
            FrameKind::Data | FrameKind::Ack => self.forward(j, frame),
            _ => {}
        }
    }

    fn on_hello(&mut self, j: usize, from: NodeId, ch: ChannelId, advertised: f64) {
        let now_s = self.now_s();
        let node = &mut self.nodes[j];
        let known = node.neighbors.get(from).is_some_and(|r| r.channels.contains_key(&ch));
        node.neighbors.process_hello(from, ch, advertised, now_s);
        if !known {
            if let Some(&avg) = node.seeds.get(&(from, ch)) {
                let delta = node.neighbors.delta;
                if let Some(link) = node.neighbors.get_mut(from).and_then(|r| r.channels.get_mut(&ch)) {
                    link.estimator = RttEstimator::with_initial(avg, delta);
                }
            }
        }
    }

    fn enqueue(&mut self, n: usize, r: usize, frame: Frame, next_hop: Option<NodeId>) -> bool {
        let uid = self.fresh_id();
        let now_s = self.now_s();
        match self.nodes[n].radios[r].mac.enqueue(frame, next_hop, uid, now_s) {
            EnqueueOutcome::Accepted => {
                self.kick(n, r);
                true
            }
            EnqueueOutcome::DroppedQueueFull => false,
        }
    }

    fn count_loss(&mut self, frame: &Frame, delivered: bool, loss: Loss) {
        if frame.kind != FrameKind::Data || delivered {
            return;
        }
        let s = &mut self.flows[frame.flow_id as usize].stats;
        match loss {
            Loss::Queue => s.drops_queue += 1,
            Loss::Retry => s.drops_retry += 1,
            Loss::NoRoute => s.drops_no_route += 1,
        }
    }

    /// Hands a DATA or transport ACK frame to the next hop toward its
    /// destination.
    fn forward(&mut self, n: usize, frame: Frame) {
        let now_s = self.now_s();
        let dst_id = self.nodes[self.flow_endpoint(&frame)].id;
        let Some(entry) = self.nodes[n].routes.lookup(dst_id, now_s).cloned() else {
            self.count_loss(&frame, false, Loss::NoRoute);
            // the route error travels back to the source, which rediscovers
            self.start_discovery(frame.flow_id as usize);
            return;
        };
        let mut ch = entry.channel;
        if self.protocol == Protocol::Corciar {
            let w = self.index[&entry.next_hop];
            if let Some(c) = self.select_channel(n, w, Some(ch)) {
                ch = c;
                if let Some(e) = self.nodes[n].routes.lookup_mut(dst_id, now_s) {
                    e.channel = c;
                }
            }
        }
        self.nodes[n].routes.refresh(dst_id, now_s, ROUTE_LIFETIME_S);
        let Some(r) = self.nodes[n].radios.iter().position(|x| x.mac.channel == ch) else {
            self.count_loss(&frame, false, Loss::NoRoute);
            return;
        };
        if !self.enqueue(n, r, frame.clone(), Some(entry.next_hop)) {
            self.count_loss(&frame, false, Loss::Queue);
        }
    }

    fn flow_endpoint(&self, frame: &Frame) -> usize {
        let f = &self.flows[frame.flow_id as usize];
        if frame.kind == FrameKind::Ack {
            f.src
        } else {
            f.dst
        }
    }

    fn shared_channels(&self, v: usize, w: usize) -> Vec<ChannelId> {
        let mut out: Vec<ChannelId> = self.nodes[v]
            .radios
            .iter()
            .map(|r| r.mac.channel)
            .filter(|c| self.nodes[w].radios.iter().any(|x| x.mac.channel == *c))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Channel for the hop `v -> w`. The baseline always takes the lowest
    /// common channel. Otherwise the channel with the lowest smoothed RTT
    /// wins, but an established channel is only abandoned when another one
    /// is better by the hysteresis margin; unmeasured choices fall back to the
    /// preferable channel list.
    fn select_channel(&self, v: usize, w: usize, current: Option<ChannelId>) -> Option<ChannelId> {
        let shared = self.shared_channels(v, w);
        if self.protocol == Protocol::AodvHop {
            return shared.first().copied();
        }
        let node = &self.nodes[v];
        let rec = node.neighbors.get(self.nodes[w].id);
        let est = |c: ChannelId| rec.and_then(|r| r.channels.get(&c)).and_then(|l| l.estimator.average());
        let best = shared
            .iter()
            .filter_map(|&c| est(c).map(|a| (c, a)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| node.pcl.preference(b.0).cmp(&node.pcl.preference(a.0))));
        match current.filter(|c| shared.contains(c)) {
            Some(cur) => match (est(cur), best) {
                (Some(cur_avg), Some((c, avg))) if avg < cur_avg * (1.0 - self.params.hysteresis) => Some(c),
                _ => Some(cur),
            },
            None => best.map(|b| b.0).or_else(|| node.pcl.select_among(shared.iter().copied())),
        }
    }

    fn at_gateway(&mut self, j: usize, frame: Frame) {
        let now = self.now();
        let f = frame.flow_id as usize;
        let size = self.params.packet_size_bytes as u64;
        let flow = &mut self.flows[f];
        flow.stats.packets_received_at_gateway += 1;
        let new = flow.delivered.insert(frame.seq);
        if new {
            flow.stats.bytes_received += size;
            flow.stats.e2e_delays.push((now.secs() - frame.sent_at) * 1e3);
        }
        let gw = self.nodes[j].id;
        self.note(|| format!("{gw} Deliver flow={f} seq={} bytes={size} new={}", frame.seq, new as u8));
        let src = self.nodes[self.flows[f].src].id;
        let mut ack = Frame::control(FrameKind::Ack, gw, src, frame.channel);
        ack.flow_id = frame.flow_id;
        ack.seq = frame.seq;
        ack.sent_at = now.secs();
        ack.size_bytes = CONTROL_PAYLOAD_BYTES;
        self.forward(j, ack);
    }

    // ---- transport -------------------------------------------------------

    fn on_ack(&mut self, frame: Frame) {
        let now = self.now();
        let f = frame.flow_id as usize;
        let flow = &mut self.flows[f];
        if let Some(inf) = flow.unacked.remove(&frame.seq) {
            let mut sample = None;
            if inf.transmissions == 1 {
                let ms = (now - inf.first_sent).millis();
                flow.estimator.update(ms);
                flow.stats.rtt_samples.push(ms);
                let avg = flow.estimator.average().expect("just updated");
                flow.rto = secs((2.0 * avg / 1e3).clamp(RTO_MIN_S, RTO_MAX_S));
                sample = Some(ms);
            }
            let src = self.nodes[flow.src].id;
            let k = inf.transmissions;
            self.note(|| {
                let s = sample.map_or("-".to_string(), |ms| format!("{ms:?}"));
                format!("{src} AckRecv flow={f} seq={} tx={k} rtt_ms={s}", frame.seq)
            });
            self.send_window(f);
        }
    }

    fn send_window(&mut self, f: usize) {
        while self.flows[f].route_ready && self.flows[f].unacked.len() < self.params.window {
            let seq = self.flows[f].next_seq;
            self.flows[f].next_seq += 1;
            let now = self.now();
            self.flows[f].unacked.insert(seq, Inflight { first_sent: now, transmissions: 0 });
            self.transmit(f, seq);
        }
    }

    /// Sends one copy of `seq` and arms its retransmission timer.
    fn transmit(&mut self, f: usize, seq: u64) {
        let now = self.now();
        let src = self.flows[f].src;
        let dst_id = self.nodes[self.flows[f].dst].id;
        let has_route = self.nodes[src].routes.lookup(dst_id, now.secs()).is_some();
        let rto = self.flows[f].rto;
        let Some(inf) = self.flows[f].unacked.get_mut(&seq) else { return };
        if !has_route {
            // hold the sequence until a route exists again
            let k = inf.transmissions;
            self.flows[f].route_ready = false;
            self.start_discovery(f);
            self.at(now + rto, Action::RtoExpiry(f, seq, k));
            return;
        }
        inf.transmissions += 1;
        if inf.transmissions == 1 {
            inf.first_sent = now;
        }
        let k = inf.transmissions;
        let flow = &mut self.flows[f];
        flow.stats.packets_sent += 1;
        if k > 1 {
            flow.stats.retransmissions += 1;
        }
        let src_id = self.nodes[src].id;
        self.note(|| format!("{src_id} Send flow={f} seq={seq} tx={k}"));
        let mut frame = Frame::control(FrameKind::Data, self.nodes[src].id, dst_id, ChannelId::new(1).expect("valid"));
        frame.size_bytes = self.params.packet_size_bytes;
        frame.flow_id = f as u32;
        frame.seq = seq;
        frame.sent_at = now.secs();
        self.forward(src, frame);
        self.at(now + rto, Action::RtoExpiry(f, seq, k));
    }

    fn rto_expiry(&mut self, f: usize, seq: u64, k: u32) {
        let Some(inf) = self.flows[f].unacked.get(&seq) else { return };
        if inf.transmissions != k {
            return;
        }
        if k > TRANSPORT_RETRY_LIMIT {
            self.flows[f].unacked.remove(&seq);
            self.flows[f].stats.abandoned += 1;
            self.send_window(f);
            return;
        }
        let flow = &mut self.flows[f];
        flow.rto = SimTime((flow.rto.0 * 2).min(secs(RTO_MAX_S).0));
        self.transmit(f, seq);
    }

    // ---- routing ---------------------------------------------------------

    fn hello_tick(&mut self, n: usize) {
        let now_s = self.now_s();
        let gone = self.nodes[n].neighbors.expire(now_s);
        for g in gone {
            self.nodes[n].routes.invalidate_via(g);
        }
        let gw = self.nodes[self.gateway].id;
        let id = self.nodes[n].id;
        let unmeasured = self.params.unmeasured_link_ms;
        let potential =
            cumulative_rtt(id, gw, self.nodes[n].neighbors.active(now_s), unmeasured).unwrap_or(f64::INFINITY);
        self.nodes[n].potential = potential;
        for r in 0..self.nodes[n].radios.len() {
            let ch = self.nodes[n].radios[r].mac.channel;
            let mut hello = Frame::control(FrameKind::Hello, id, id, ch);
            hello.advertised_cum_rtt_ms = potential;
            hello.sent_at = now_s;
            self.enqueue(n, r, hello, None);
        }
        // one probe per neighbor and common channel keeps every channel's
        // RTT estimate current
        let mut probes = Vec::new();
        for rec in self.nodes[n].neighbors.active(now_s) {
            let Some(&w) = self.index.get(&rec.neighbor) else { continue };
            for ch in self.shared_channels(n, w) {
                let fresh = self.nodes[n]
                    .last_sample
                    .get(&(rec.neighbor, ch))
                    .is_some_and(|&t| now_s - t < self.params.probe_interval_s);
                if rec.channels.contains_key(&ch) && !fresh {
                    probes.push((rec.neighbor, ch));
                }
            }
        }
        for (nb, ch) in probes {
            let r = self.nodes[n].radios.iter().position(|x| x.mac.channel == ch).expect("shared");
            let probe = Frame::control(FrameKind::Probe, id, nb, ch);
            self.enqueue(n, r, probe, Some(nb));
        }
        let next = self.now() + secs(self.params.hello_interval_s);
        self.at(next, Action::HelloTick(n));
    }

    fn metric(&self) -> RouteMetric {
        match self.protocol {
            Protocol::AodvHop => RouteMetric::HopCount,
            Protocol::Corciar => RouteMetric::AvgRtt,
        }
    }

    /// Link graph as the RREQ flood would see it: bidirectional neighbor
    /// relations with at least one common channel, costed by the best
    /// smoothed RTT.
    fn link_graph(&self) -> LinkGraph {
        let now_s = self.now_s();
        let mut g = LinkGraph::new();
        for (v, node) in self.nodes.iter().enumerate() {
            g.add_node(node.id);
            for rec in node.neighbors.active(now_s) {
                let Some(&w) = self.index.get(&rec.neighbor) else { continue };
                let back = self.nodes[w]
                    .neighbors
                    .get(node.id)
                    .is_some_and(|r| r.is_active(now_s, self.nodes[w].neighbors.hello_timeout));
                let shared = self.shared_channels(v, w);
                if !back || shared.is_empty() {
                    continue;
                }
                let cost = shared
                    .iter()
                    .map(|c| {
                        rec.channels
                            .get(c)
                            .and_then(|l| l.estimator.average())
                            .unwrap_or(self.params.unmeasured_link_ms)
                    })
                    .fold(f64::INFINITY, f64::min);
                g.add_directed(node.id, rec.neighbor, cost);
            }
        }
        g
    }

    fn start_discovery(&mut self, f: usize) {
        if !self.flows[f].discovery_pending {
            self.flows[f].discovery_pending = true;
            let now = self.now();
            self.at(now, Action::Discover(f));
        }
    }

    fn discover(&mut self, f: usize) {
        self.flows[f].discovery_pending = false;
        let src = self.nodes[self.flows[f].src].id;
        let dst = self.nodes[self.flows[f].dst].id;
        let graph = self.link_graph();
        match flood_once(&graph, src, dst, self.metric()) {
            None => {
                self.flows[f].discovery_pending = true;
                let t = self.now() + secs(crate::routing::DISCOVERY_TIMEOUT_S);
                self.at(t, Action::Discover(f));
            }
            Some(route) => {
                let first = self.flows[f].history.is_empty();
                self.install(f, &route, &graph);
                let latency = secs(2.0 * DISCOVERY_HOP_LATENCY_S * route.hops() as f64);
                let now = self.now();
                self.at(now + latency, Action::FlowSendWindow(f));
                if let (true, Protocol::Corciar, Some(iv)) = (first, self.protocol, self.params.reroute_interval_s) {
                    self.at(now + secs(iv), Action::Reroute(f));
                }
            }
        }
    }

    fn install(&mut self, f: usize, route: &Route, graph: &LinkGraph) {
        let now_s = self.now_s();
        let src = self.nodes[self.flows[f].src].id;
        let dst = self.nodes[self.flows[f].dst].id;
        let idx: Vec<usize> = route.path.iter().map(|id| self.index[id]).collect();
        let hops = idx.len() - 1;
        let step_cost: Vec<f64> =
            route.path.windows(2).map(|p| graph.cost(p[0], p[1]).unwrap_or(self.params.unmeasured_link_ms)).collect();
        for i in 0..hops {
            let (v, w) = (idx[i], idx[i + 1]);
            let ahead: f64 = step_cost[i..].iter().sum();
            let behind: f64 = step_cost[..i + 1].iter().sum();
            for (from, to, dest, hop_count, cost) in [(v, w, dst, hops - i, ahead), (w, v, src, i + 1, behind)] {
                let existing = self.nodes[from]
                    .routes
                    .lookup(dest, now_s)
                    .filter(|e| e.next_hop == self.nodes[to].id)
                    .map(|e| (e.channel, e.seq_no));
                let Some(channel) = self.select_channel(from, to, existing.map(|e| e.0)) else { continue };
                let seq_no = existing.map_or(1, |e| e.1 + 1);
                let next_hop = self.nodes[to].id;
                self.nodes[from].routes.install(RouteEntry {
                    destination: dest,
                    next_hop,
                    channel,
                    hop_count: hop_count as u32,
                    rtt_cost: cost,
                    seq_no,
                    expires_at: now_s + ROUTE_LIFETIME_S,
                });
            }
        }
        self.flows[f].history.push((now_s, route.path.clone()));
    }

    /// Path currently followed from the flow source, if the tables lead to
    /// the destination without a loop.
    fn current_path(&self, f: usize) -> Option<Vec<NodeId>> {
        let now_s = self.now_s();
        let dst = self.nodes[self.flows[f].dst].id;
        let mut v = self.flows[f].src;
        let mut path = vec![self.nodes[v].id];
        while v != self.flows[f].dst {
            let e = self.nodes[v].routes.lookup(dst, now_s)?;
            if path.contains(&e.next_hop) {
                return None;
            }
            path.push(e.next_hop);
            v = self.index[&e.next_hop];
        }
        Some(path)
    }

    /// Periodic re-evaluation of the route under the RTT metric.
    fn reroute(&mut self, f: usize) {
        let now = self.now();
        let iv = self.params.reroute_interval_s.expect("scheduled only when periodic");
        self.at(now + secs(iv), Action::Reroute(f));
        if self.flows[f].discovery_pending {
            return;
        }
        let src = self.nodes[self.flows[f].src].id;
        let dst = self.nodes[self.flows[f].dst].id;
        let graph = self.link_graph();
        let Some(best) = flood_once(&graph, src, dst, RouteMetric::AvgRtt) else { return };
        let current = self.current_path(f);
        let current_cost = current
            .as_ref()
            .map_or(f64::INFINITY, |p| p.windows(2).map(|w| graph.cost(w[0], w[1]).unwrap_or(f64::INFINITY)).sum());
        if current.as_ref() != Some(&best.path) && best.cost < current_cost * (1.0 - self.params.hysteresis) {
            self.install(f, &best, &graph);
        }
    }

    fn finish(self, events: u64) -> RunOutput {
        let mut flows: Vec<FlowStats> = self.flows.iter().map(|f| f.stats.clone()).collect();
        for node in &self.nodes {
            for radio in &node.radios {
                for qf in radio.mac.iter() {
                    if qf.frame.kind == FrameKind::Data && !qf.delivered {
                        flows[qf.frame.flow_id as usize].in_flight_at_end += 1;
                    }
                }
            }
        }
        let summary = summarize(&flows, self.params.sim_time_s, self.protocol.label());
        let final_routes = (0..self.flows.len()).map(|f| self.current_path(f)).collect();
        let route_history = self.flows.iter().map(|f| f.history.clone()).collect();
        let mut link_estimates = LinkEstimates::new();
        let mut route_tables = Vec::new();
        for node in &self.nodes {
            for w in self.nodes.iter().map(|x| x.id) {
                if let Some(rec) = node.neighbors.get(w) {
                    for (&ch, link) in &rec.channels {
                        if let Some(avg) = link.estimator.average() {
                            link_estimates.insert((node.id, w, ch), avg);
                        }
                    }
                }
            }
            for e in node.routes.iter() {
                route_tables.push((node.id, e.clone()));
            }
        }
        RunOutput {
            protocol: self.protocol,
            summary,
            flows,
            final_routes,
            route_history,
            corruptions: self.corruptions,
            cross_channel_corruptions: self.cross_channel_corruptions,
            rts_defers: self.rts_defers,
            events,
            trace_hash: self.hasher.map(|h| format!("{:x}", h.finalize())),
            link_estimates,
            route_tables,
            data_exchanges: self.data_exchanges,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Loss {
    Queue,
    Retry,
    NoRoute,
}

fn exp_sample(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    -mean * u.ln()
}
