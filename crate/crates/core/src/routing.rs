//! Route discovery and maintenance.
//!
//! Two route metrics are supported: plain hop count (the AODV baseline) and
//! smoothed per-hop round-trip time. Per-hop RTT estimates feed a
//! distance-vector "potential" toward the gateway, carried in HELLO frames,
//! and the cost of the RREQ flood when discovering with the RTT metric.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::channel::ChannelId;
use crate::event::{EventQueue, SimTime};
use crate::NodeId;

/// Default EWMA gain.
pub const DEFAULT_DELTA: f64 = 0.125;
pub const HELLO_INTERVAL_S: f64 = 1.0;
pub const HELLO_LOSS_LIMIT: u32 = 3;
pub const ROUTE_LIFETIME_S: f64 = 10.0;
pub const DISCOVERY_TIMEOUT_S: f64 = 1.0;
pub const DISCOVERY_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("no route from {src} to {dst}")]
    NoRoute { src: NodeId, dst: NodeId },
    #[error("ACK at {ack} precedes send at {send}")]
    NegativeRtt { send: f64, ack: f64 },
    #[error("empty candidate set at {0}")]
    NoCandidates(NodeId),
}

/// Round-trip sample in milliseconds from send and ACK instants in seconds.
pub fn rtt_sample(send_time: f64, ack_time: f64) -> Result<f64, RoutingError> {
    if ack_time < send_time {
        return Err(RoutingError::NegativeRtt { send: send_time, ack: ack_time });
    }
    Ok((ack_time - send_time) * 1e3)
}

/// Exponentially weighted average of RTT samples. The first sample seeds the
/// average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RttEstimator {
    average: Option<f64>,
    delta: f64,
    samples: u64,
}

impl RttEstimator {
    pub fn new(delta: f64) -> Self {
        assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0,1), got {delta}");
        RttEstimator { average: None, delta, samples: 0 }
    }

    pub fn with_initial(average_ms: f64, delta: f64) -> Self {
        RttEstimator { average: Some(average_ms), ..Self::new(delta) }
    }

    pub fn average(&self) -> Option<f64> {
        self.average
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn update(&mut self, sample_ms: f64) {
        debug_assert!(sample_ms >= 0.0);
        self.samples += 1;
        self.average = Some(match self.average {
            None => sample_ms,
            Some(avg) => {
                let difference = sample_ms - avg;
                avg + self.delta * difference
            }
        });
    }
}

pub fn update_average_rtt(mut est: RttEstimator, sample_ms: f64) -> RttEstimator {
    est.update(sample_ms);
    est
}

/// What a node knows about one channel toward a neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelLink {
    pub last_heard: f64,
    pub estimator: RttEstimator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborRecord {
    pub neighbor: NodeId,
    pub last_hello_at: f64,
    /// The neighbor's advertised cumulative RTT to the gateway, ms.
    pub advertised_cum_rtt: f64,
    pub channels: BTreeMap<ChannelId, ChannelLink>,
}

impl NeighborRecord {
    pub fn new(neighbor: NodeId, now: f64) -> Self {
        NeighborRecord { neighbor, last_hello_at: now, advertised_cum_rtt: f64::INFINITY, channels: BTreeMap::new() }
    }

    pub fn is_active(&self, now: f64, timeout: f64) -> bool {
        now - self.last_hello_at <= timeout
    }

    /// Best smoothed RTT over the channels toward this neighbor; `unmeasured`
    /// stands in for channels without samples.
    pub fn link_rtt(&self, unmeasured: f64) -> f64 {
        self.channels.values().map(|l| l.estimator.average().unwrap_or(unmeasured)).fold(f64::INFINITY, f64::min)
    }

    pub fn estimator_mut(&mut self, ch: ChannelId, delta: f64, now: f64) -> &mut RttEstimator {
        &mut self
            .channels
            .entry(ch)
            .or_insert(ChannelLink { last_heard: now, estimator: RttEstimator::new(delta) })
            .estimator
    }
}

/// Neighbor records of one node.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    records: BTreeMap<NodeId, NeighborRecord>,
    pub hello_timeout: f64,
    pub delta: f64,
}

impl NeighborTable {
    pub fn new(hello_timeout: f64, delta: f64) -> Self {
        NeighborTable { records: BTreeMap::new(), hello_timeout, delta }
    }

    /// Refreshes (or creates) the record for `from`. Returns true when the
    /// neighbor was not known before.
    pub fn process_hello(&mut self, from: NodeId, channel: ChannelId, advertised_cum_rtt: f64, now: f64) -> bool {
        let delta = self.delta;
        let mut created = false;
        let rec = self.records.entry(from).or_insert_with(|| {
            created = true;
            NeighborRecord::new(from, now)
        });
        rec.last_hello_at = now;
        rec.advertised_cum_rtt = advertised_cum_rtt;
        rec.channels
            .entry(channel)
            .and_modify(|l| l.last_heard = now)
            .or_insert(ChannelLink { last_heard: now, estimator: RttEstimator::new(delta) });
        created
    }

    /// Drops neighbors silent for longer than the timeout and returns them.
    pub fn expire(&mut self, now: f64) -> Vec<NodeId> {
        let timeout = self.hello_timeout;
        let gone: Vec<NodeId> =
            self.records.values().filter(|r| !r.is_active(now, timeout)).map(|r| r.neighbor).collect();
        for id in &gone {
            self.records.remove(id);
        }
        gone
    }

    pub fn get(&self, id: NodeId) -> Option<&NeighborRecord> {
        self.records.get(&id)
    }

    pub fn get_mut(&mut self, id: NodeId) -> Option<&mut NeighborRecord> {
        self.records.get_mut(&id)
    }

    pub fn active(&self, now: f64) -> impl Iterator<Item = &NeighborRecord> {
        let timeout = self.hello_timeout;
        self.records.values().filter(move |r| r.is_active(now, timeout))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Cumulative RTT from `node` to the gateway: 0 at the gateway, otherwise the
/// minimum over neighbors of link RTT plus the neighbor's advertised value.
/// `None` when no neighbor advertises a finite value.
pub fn cumulative_rtt<'a, I>(node: NodeId, gateway: NodeId, neighbors: I, unmeasured_link_ms: f64) -> Option<f64>
where
    I: IntoIterator<Item = &'a NeighborRecord>,
{
    if node == gateway {
        return Some(0.0);
    }
    let best = neighbors
        .into_iter()
        .filter(|r| r.advertised_cum_rtt.is_finite())
        .map(|r| r.link_rtt(unmeasured_link_ms) + r.advertised_cum_rtt)
        .fold(f64::INFINITY, f64::min);
    best.is_finite().then_some(best)
}

/// Delay-to-gateway potential of every node, ms.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub gateway: NodeId,
    pub values: BTreeMap<NodeId, f64>,
}

impl PotentialField {
    pub fn new(gateway: NodeId) -> Self {
        let mut values = BTreeMap::new();
        values.insert(gateway, 0.0);
        PotentialField { gateway, values }
    }

    pub fn get(&self, v: NodeId) -> Option<f64> {
        self.values.get(&v).copied()
    }

    /// `V(v) - V(w)`: positive when `w` is downhill of `v`.
    pub fn force(&self, v: NodeId, w: NodeId) -> Option<f64> {
        Some(self.get(v)? - self.get(w)?)
    }

    /// The candidate with the lowest potential, lowest id on ties. Candidates
    /// without a finite potential are skipped.
    pub fn next_hop_select(&self, v: NodeId, candidates: &[NodeId]) -> Result<NodeId, RoutingError> {
        candidates
            .iter()
            .filter_map(|&w| self.get(w).filter(|p| p.is_finite()).map(|p| (p, w)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, w)| w)
            .ok_or(RoutingError::NoCandidates(v))
    }
}

/// Symmetric weighted connectivity graph. Weights are link RTTs in ms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkGraph {
    adj: BTreeMap<NodeId, BTreeMap<NodeId, f64>>,
}

impl LinkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, v: NodeId) {
        self.adj.entry(v).or_default();
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId, cost_ms: f64) {
        self.adj.entry(a).or_default().insert(b, cost_ms);
        self.adj.entry(b).or_default().insert(a, cost_ms);
    }

    /// One-directional link; used when the two ends measured different RTTs.
    pub fn add_directed(&mut self, a: NodeId, b: NodeId, cost_ms: f64) {
        self.adj.entry(a).or_default().insert(b, cost_ms);
        self.adj.entry(b).or_default();
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.keys().copied()
    }

    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.adj.get(&v).into_iter().flat_map(|m| m.iter().map(|(&w, &c)| (w, c)))
    }

    pub fn cost(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.adj.get(&a)?.get(&b).copied()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteMetric {
    HopCount,
    AvgRtt,
}

/// A discovered path and its cost under the metric used to find it.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub path: Vec<NodeId>,
    pub cost: f64,
}

impl Route {
    pub fn hops(&self) -> usize {
        self.path.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy)]
struct Rreq {
    at: NodeId,
    from: Option<NodeId>,
    cost: f64,
}

/// One RREQ flood from `src`. Every node rebroadcasts only the first copy it
/// receives for this request; a copy takes `cost` time units to cross a link
/// (one unit per hop under `HopCount`), so the first copy at the destination
/// travelled the cheapest path. The RREP retraces the reverse pointers.
pub fn flood_once(graph: &LinkGraph, src: NodeId, dst: NodeId, metric: RouteMetric) -> Option<Route> {
    let mut queue: EventQueue<Rreq> = EventQueue::new();
    let mut reverse: BTreeMap<NodeId, Option<NodeId>> = BTreeMap::new();
    let mut cost_at: BTreeMap<NodeId, f64> = BTreeMap::new();
    queue.schedule(SimTime::ZERO, Rreq { at: src, from: None, cost: 0.0 }).ok()?;
    while let Some(ev) = queue.pop() {
        let Rreq { at, from, cost } = ev.action;
        if reverse.contains_key(&at) {
            continue; // duplicate
        }
        reverse.insert(at, from);
        cost_at.insert(at, cost);
        if at == dst {
            let mut path = vec![dst];
            let mut cur = dst;
            while let Some(Some(prev)) = reverse.get(&cur) {
                path.push(*prev);
                cur = *prev;
            }
            path.reverse();
            return Some(Route { path, cost });
        }
        for (w, link) in graph.neighbors(at) {
            if reverse.contains_key(&w) {
                continue;
            }
            let step = match metric {
                RouteMetric::HopCount => 1.0,
                RouteMetric::AvgRtt => link,
            };
            // flood latency in ns of simulated "metric time"
            let at_time = SimTime(ev.time.0 + (step * 1e6).round().max(1.0) as u64);
            queue.schedule(at_time, Rreq { at: w, from: Some(at), cost: cost + step }).expect("flood time increases");
        }
    }
    None
}

/// AODV route discovery with up to [`DISCOVERY_ATTEMPTS`] RREQ floods.
pub fn aodv_discover(graph: &LinkGraph, src: NodeId, dst: NodeId, metric: RouteMetric) -> Result<Route, RoutingError> {
    for _ in 0..DISCOVERY_ATTEMPTS {
        if let Some(route) = flood_once(graph, src, dst, metric) {
            return Ok(route);
        }
    }
    Err(RoutingError::NoRoute { src, dst })
}

/// Runs hello rounds until the advertised cumulative RTTs stop changing.
/// Each round every node recomputes its value from its neighbors' previous
/// advertisements, as one HELLO interval would.
pub fn converge_potentials(graph: &LinkGraph, gateway: NodeId, delta: f64) -> PotentialField {
    let nodes: Vec<NodeId> = graph.nodes().collect();
    let any_channel = ChannelId::new(1).expect("valid");
    let mut tables: BTreeMap<NodeId, NeighborTable> = BTreeMap::new();
    for &v in &nodes {
        let mut t = NeighborTable::new(f64::INFINITY, delta);
        for (w, cost) in graph.neighbors(v) {
            t.process_hello(w, any_channel, f64::INFINITY, 0.0);
            t.get_mut(w).expect("just inserted").estimator_mut(any_channel, delta, 0.0).update(cost);
        }
        tables.insert(v, t);
    }
    let mut advertised: BTreeMap<NodeId, f64> =
        nodes.iter().map(|&v| (v, if v == gateway { 0.0 } else { f64::INFINITY })).collect();
    for _round in 0..=nodes.len() {
        // deliver last round's hellos
        for &v in &nodes {
            for (w, _) in graph.neighbors(v) {
                let adv = advertised[&w];
                tables.get_mut(&v).expect("node").process_hello(w, any_channel, adv, 0.0);
            }
        }
        let next: BTreeMap<NodeId, f64> = nodes
            .iter()
            .map(|&v| {
                let value = cumulative_rtt(v, gateway, tables[&v].active(0.0), f64::INFINITY).unwrap_or(f64::INFINITY);
                (v, value)
            })
            .collect();
        if next == advertised {
            break;
        }
        advertised = next;
    }
    PotentialField { gateway, values: advertised.into_iter().filter(|(_, v)| v.is_finite()).collect() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub destination: NodeId,
    pub next_hop: NodeId,
    /// Channel used on the hop to `next_hop`.
    pub channel: ChannelId,
    pub hop_count: u32,
    pub rtt_cost: f64,
    pub seq_no: u64,
    pub expires_at: f64,
}

/// At most one entry per destination.
#[derive(Debug, Clone, Default)]
pub struct RoutingTable {
    entries: BTreeMap<NodeId, RouteEntry>,
}

impl RoutingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn install(&mut self, entry: RouteEntry) {
        self.entries.insert(entry.destination, entry);
    }

    /// The entry for `dest`, unless it has expired.
    pub fn lookup(&self, dest: NodeId, now: f64) -> Option<&RouteEntry> {
        self.entries.get(&dest).filter(|e| now < e.expires_at)
    }

    pub fn lookup_mut(&mut self, dest: NodeId, now: f64) -> Option<&mut RouteEntry> {
        self.entries.get_mut(&dest).filter(|e| now < e.expires_at)
    }

    pub fn refresh(&mut self, dest: NodeId, now: f64, lifetime: f64) {
        if let Some(e) = self.lookup_mut(dest, now) {
            e.expires_at = e.expires_at.max(now + lifetime);
        }
    }

    /// Removes every entry forwarding through `neighbor`.
    pub fn invalidate_via(&mut self, neighbor: NodeId) -> usize {
        let before = self.entries.len();
        self.entries.retain(|_, e| e.next_hop != neighbor);
        before - self.entries.len()
    }

    pub fn purge_expired(&mut self, now: f64) {
        self.entries.retain(|_, e| now < e.expires_at);
    }

    pub fn iter(&self) -> impl Iterator<Item = &RouteEntry> {
        self.entries.values()
    }
}

/// Breadth-first hop distances from `src`; used to check hop-count routes.
pub fn bfs_hops(graph: &LinkGraph, src: NodeId) -> BTreeMap<NodeId, usize> {
    let mut dist = BTreeMap::new();
    let mut frontier = vec![src];
    dist.insert(src, 0);
    let mut seen: BTreeSet<NodeId> = [src].into();
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for v in frontier {
            for (w, _) in graph.neighbors(v) {
                if seen.insert(w) {
                    dist.insert(w, d);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    /// Textbook Dijkstra over an adjacency matrix, independent of the flood
    /// and distance-vector code.
    fn dijkstra(graph: &LinkGraph, src: NodeId) -> BTreeMap<NodeId, f64> {
        let nodes: Vec<NodeId> = graph.nodes().collect();
        let mut dist: BTreeMap<NodeId, f64> = nodes.iter().map(|&v| (v, f64::INFINITY)).collect();
        let mut done = BTreeSet::new();
        dist.insert(src, 0.0);
        loop {
            let next = nodes.iter().filter(|v| !done.contains(*v)).min_by(|a, b| dist[a].total_cmp(&dist[b])).copied();
            let Some(u) = next else { break };
            if !dist[&u].is_finite() {
                break;
            }
            done.insert(u);
            for &v in &nodes {
                if let Some(c) = graph.cost(u, v) {
                    let alt = dist[&u] + c;
                    if alt < dist[&v] {
                        dist.insert(v, alt);
                    }
                }
            }
        }
        dist
    }

    #[test]
    fn rtt_sample_examples() {
        assert!((rtt_sample(10.000, 10.058).unwrap() - 58.0).abs() < 1e-9);
        assert_eq!(rtt_sample(4.0, 4.0).unwrap(), 0.0);
        assert!(rtt_sample(5.0, 4.0).is_err());
    }

    #[test]
    fn ewma_examples() {
        let e = update_average_rtt(RttEstimator::with_initial(100.0, 0.125), 100.0);
        assert_eq!(e.average(), Some(100.0));
        let e = update_average_rtt(RttEstimator::with_initial(100.0, 0.5), 180.0);
        assert_eq!(e.average(), Some(140.0));
        let e = update_average_rtt(RttEstimator::new(0.125), 42.0);
        assert_eq!(e.average(), Some(42.0));
    }

    #[test]
    #[should_panic]
    fn delta_must_be_open_interval() {
        RttEstimator::new(1.0);
    }

    #[test]
    fn constant_stream_converges_monotonically() {
        let (s, a0, d) = (50.0, 400.0, 0.125);
        let mut e = RttEstimator::with_initial(a0, d);
        let mut prev = a0;
        for k in 1..=60 {
            e.update(s);
            let avg = e.average().unwrap();
            let closed = s + (1.0f64 - d).powi(k) * (a0 - s);
            assert!((avg - closed).abs() <= 1e-9 * closed.abs());
            assert!(avg <= prev && avg >= s);
            prev = avg;
        }
    }

    #[test]
    fn hello_tracking() {
        let ch = ChannelId::new(1).unwrap();
        let mut t = NeighborTable::new(3.0, 0.125);
        assert!(t.process_hello(n(2), ch, 10.0, 0.0));
        assert!(!t.process_hello(n(2), ch, 42.0, 1.0));
        assert_eq!(t.get(n(2)).unwrap().advertised_cum_rtt, 42.0);
        assert!(t.expire(3.5).is_empty());
        assert_eq!(t.expire(4.5), vec![n(2)]);
        assert!(t.is_empty());
    }

    #[test]
    fn cumulative_rtt_examples() {
        let ch = ChannelId::new(1).unwrap();
        assert_eq!(cumulative_rtt(n(0), n(0), [], 1.0), Some(0.0));
        // chain far -> a -> b -> gateway with hops 10, 20, 30
        let mut rec = NeighborRecord::new(n(1), 0.0);
        rec.advertised_cum_rtt = 50.0;
        rec.estimator_mut(ch, 0.125, 0.0).update(10.0);
        assert_eq!(cumulative_rtt(n(9), n(0), [&rec], 1.0), Some(60.0));
        let mut silent = NeighborRecord::new(n(2), 0.0);
        silent.estimator_mut(ch, 0.125, 0.0).update(1.0);
        assert_eq!(cumulative_rtt(n(9), n(0), [&silent], 1.0), None);
    }

    #[test]
    fn diamond_potential() {
        // 0 gateway; 3 reaches it via 1 (40+30=70) or 2 (30+25=55)
        let mut g = LinkGraph::new();
        g.add_link(n(3), n(1), 40.0);
        g.add_link(n(1), n(0), 30.0);
        g.add_link(n(3), n(2), 30.0);
        g.add_link(n(2), n(0), 25.0);
        let field = converge_potentials(&g, n(0), 0.125);
        assert_eq!(field.get(n(3)), Some(55.0));
        assert_eq!(dijkstra(&g, n(0))[&n(3)], 55.0);
    }

    #[test]
    fn force_and_select() {
        let mut f = PotentialField::new(n(0));
        f.values.insert(n(1), 60.0);
        f.values.insert(n(2), 25.0);
        f.values.insert(n(3), 80.0);
        f.values.insert(n(4), 30.0);
        f.values.insert(n(7), 30.0);
        assert_eq!(f.force(n(1), n(2)), Some(35.0));
        assert_eq!(f.force(n(1), n(1)), Some(0.0));
        assert_eq!(f.force(n(1), n(3)), Some(-20.0));
        assert_eq!(f.next_hop_select(n(1), &[n(3), n(2)]).unwrap(), n(2));
        assert_eq!(f.next_hop_select(n(1), &[n(3)]).unwrap(), n(3));
        assert_eq!(f.next_hop_select(n(1), &[n(7), n(4)]).unwrap(), n(4));
        assert!(f.next_hop_select(n(1), &[]).is_err());
    }

    /// The eight-node mesh with the direct 5-4 link and the 5-7-6-4 detour.
    fn mesh(cost_54: f64, detour: [f64; 3]) -> LinkGraph {
        let mut g = LinkGraph::new();
        g.add_link(n(5), n(4), cost_54);
        g.add_link(n(5), n(7), detour[0]);
        g.add_link(n(7), n(6), detour[1]);
        g.add_link(n(6), n(4), detour[2]);
        g.add_link(n(5), n(8), 40.0);
        g.add_link(n(8), n(7), 40.0);
        g.add_link(n(4), n(1), 10.0);
        g.add_link(n(1), n(2), 10.0);
        g.add_link(n(2), n(3), 10.0);
        g
    }

    #[test]
    fn discover_hop_count_and_rtt() {
        let g = mesh(120.0, [30.0, 30.0, 30.0]);
        let r = aodv_discover(&g, n(5), n(4), RouteMetric::HopCount).unwrap();
        assert_eq!(r.path, vec![n(5), n(4)]);
        let r = aodv_discover(&g, n(5), n(4), RouteMetric::AvgRtt).unwrap();
        assert_eq!(r.path, vec![n(5), n(7), n(6), n(4)]);
        assert!((r.cost - 90.0).abs() < 1e-9);
    }

    #[test]
    fn isolated_source_has_no_route() {
        let mut g = mesh(1.0, [1.0; 3]);
        g.add_node(n(42));
        assert_eq!(
            aodv_discover(&g, n(42), n(4), RouteMetric::HopCount),
            Err(RoutingError::NoRoute { src: n(42), dst: n(4) })
        );
    }

    #[test]
    fn routing_table_expiry() {
        let ch = ChannelId::new(6).unwrap();
        let mut t = RoutingTable::new();
        t.install(RouteEntry {
            destination: n(4),
            next_hop: n(7),
            channel: ch,
            hop_count: 3,
            rtt_cost: 90.0,
            seq_no: 1,
            expires_at: 10.0,
        });
        assert!(t.lookup(n(4), 9.9).is_some());
        assert!(t.lookup(n(4), 10.0).is_none());
        t.refresh(n(4), 5.0, 10.0);
        assert!(t.lookup(n(4), 14.0).is_some());
        assert_eq!(t.invalidate_via(n(7)), 1);
        assert!(t.lookup(n(4), 0.0).is_none());
    }

    fn random_graph() -> impl Strategy<Value = LinkGraph> {
        (2usize..=12).prop_flat_map(|size| {
            let pairs = size * (size - 1) / 2;
            (
                Just(size),
                proptest::collection::vec(any::<bool>(), pairs),
                proptest::collection::vec(1.0f64..200.0, pairs),
            )
                .prop_map(|(size, present, costs)| {
                    let mut g = LinkGraph::new();
                    for v in 0..size as u32 {
                        g.add_node(n(v));
                    }
                    // spanning path keeps it connected
                    for v in 1..size as u32 {
                        g.add_link(n(v - 1), n(v), 100.0);
                    }
                    let mut k = 0;
                    for a in 0..size as u32 {
                        for b in a + 1..size as u32 {
                            if present[k] {
                                g.add_link(n(a), n(b), costs[k]);
                            }
                            k += 1;
                        }
                    }
                    g
                })
        })
    }

    proptest! {
        #[test]
        fn ewma_stays_in_envelope(init in 0.0f64..1000.0, samples in proptest::collection::vec(0.0f64..1000.0, 1..50), delta in 0.01f64..0.99) {
            let mut e = RttEstimator::with_initial(init, delta);
            let lo = samples.iter().copied().fold(init, f64::min);
            let hi = samples.iter().copied().fold(init, f64::max);
            for s in samples {
                e.update(s);
                let a = e.average().unwrap();
                prop_assert!(a >= lo - 1e-9 && a <= hi + 1e-9);
            }
        }

        #[test]
        fn hop_count_route_is_bfs_shortest(g in random_graph(), dst_pick in any::<u32>()) {
            let size = g.len() as u32;
            let dst = n(dst_pick % size);
            let src = n((dst_pick / 7 + 1) % size);
            prop_assume!(src != dst);
            let r = aodv_discover(&g, src, dst, RouteMetric::HopCount).unwrap();
            prop_assert_eq!(r.hops(), bfs_hops(&g, src)[&dst]);
        }

        #[test]
        fn rtt_route_matches_dijkstra(g in random_graph()) {
            let size = g.len() as u32;
            let r = aodv_discover(&g, n(size - 1), n(0), RouteMetric::AvgRtt).unwrap();
            let d = dijkstra(&g, n(0))[&n(size - 1)];
            prop_assert!((r.cost - d).abs() < 1e-6 * d.max(1.0));
        }

        #[test]
        fn next_hop_select_is_argmin(values in proptest::collection::vec(0.0f64..100.0, 1..10)) {
            let mut f = PotentialField::new(n(100));
            let cands: Vec<NodeId> = (0..values.len() as u32).map(n).collect();
            for (i, v) in values.iter().enumerate() {
                f.values.insert(n(i as u32), *v);
            }
            let w = f.next_hop_select(n(100), &cands).unwrap();
            for &u in &cands {
                prop_assert!(f.get(u).unwrap() >= f.get(w).unwrap());
            }
        }
    }
}
