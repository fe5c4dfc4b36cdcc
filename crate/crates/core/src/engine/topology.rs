//! Node placement, radio/channel assignment and the disc propagation model.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{ChannelId, PclObservation, PclTable};
use crate::NodeId;

pub const AREA_WIDTH_M: f64 = 1500.0;
pub const AREA_HEIGHT_M: f64 = 800.0;
pub const CHAIN_SPACING_M: f64 = 150.0;
pub const RANDOM_PLACEMENT_RETRIES: u32 = 100;

/// Disc propagation: a frame is decodable within `tx_range` and can corrupt
/// other receptions within `interference_range`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    pub tx_range: f64,
    pub interference_range: f64,
    pub data_rate_bps: f64,
    /// Interference factors above this corrupt a reception.
    pub collision_threshold: f64,
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel { tx_range: 250.0, interference_range: 550.0, data_rate_bps: 1e6, collision_threshold: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub pos: Position,
    /// Channel of each radio, in radio order.
    pub radios: Vec<ChannelId>,
}

/// A non-network transmitter that occupies a channel in random bursts.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferer {
    pub pos: Position,
    pub channel: ChannelId,
    /// Long-run fraction of time on the air, in (0,1).
    pub duty: f64,
    pub mean_burst_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub gateway: NodeId,
    pub interferers: Vec<Interferer>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("topology needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("chain of {0} nodes does not fit in the {AREA_WIDTH_M} m area")]
    ChainTooLong(usize),
    #[error("no connected placement of {nodes} nodes after {retries} draws (density too low)")]
    Disconnected { nodes: usize, retries: u32 },
    #[error("channel plan: {0}")]
    Plan(String),
}

/// How radios get their channels.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelPlan {
    /// Every node carries the same radios.
    Uniform(Vec<ChannelId>),
    /// Per-node radio lists, repeating cyclically over node order.
    Explicit(Vec<Vec<ChannelId>>),
    /// Greedy preferable-channel-list assignment over a BFS tree.
    Pcl,
    /// Channels built into a preset topology.
    Preset,
}

impl Topology {
    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Node pairs within transmission range, regardless of channel.
    pub fn in_range(&self, model: &RadioModel) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = self.nodes.iter().map(|n| (n.id, BTreeSet::new())).collect();
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                if a.pos.distance(&b.pos) <= model.tx_range {
                    adj.get_mut(&a.id).expect("node").insert(b.id);
                    adj.get_mut(&b.id).expect("node").insert(a.id);
                }
            }
        }
        adj
    }

    /// Links usable for traffic: in range and sharing at least one channel.
    pub fn links(&self, model: &RadioModel) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
        let mut adj = self.in_range(model);
        for (&a, nbrs) in adj.iter_mut() {
            let ra = &self.node(a).expect("node").radios;
            nbrs.retain(|&b| {
                let rb = &self.node(b).expect("node").radios;
                ra.iter().any(|c| rb.contains(c))
            });
        }
        adj
    }

    pub fn is_connected(&self, model: &RadioModel) -> bool {
        connected(&self.links(model))
    }

    pub fn hop_distance(&self, model: &RadioModel, from: NodeId, to: NodeId) -> Option<usize> {
        let adj = self.links(model);
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([(from, 0usize)]);
        while let Some((v, d)) = queue.pop_front() {
            if v == to {
                return Some(d);
            }
            for &w in &adj[&v] {
                if seen.insert(w) {
                    queue.push_back((w, d + 1));
                }
            }
        }
        None
    }

    pub fn apply_plan(
        &mut self,
        plan: &ChannelPlan,
        radios_per_node: usize,
        model: &RadioModel,
    ) -> Result<(), TopologyError> {
        match plan {
            ChannelPlan::Preset => {
                if self.nodes.iter().any(|n| n.radios.is_empty()) {
                    return Err(TopologyError::Plan("this topology has no preset channels".into()));
                }
            }
            ChannelPlan::Uniform(chs) => {
                for n in &mut self.nodes {
                    n.radios = chs.clone();
                }
            }
            ChannelPlan::Explicit(per_node) => {
                if per_node.is_empty() {
                    return Err(TopologyError::Plan("explicit plan is empty".into()));
                }
                for (i, n) in self.nodes.iter_mut().enumerate() {
                    n.radios = per_node[i % per_node.len()].clone();
                }
            }
            ChannelPlan::Pcl => pcl_assign(self, radios_per_node, model)?,
        }
        Ok(())
    }
}

fn connected(adj: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> bool {
    let Some(&start) = adj.keys().next() else { return true };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &w in &adj[&v] {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len() == adj.len()
}

/// Nodes on a line at 150 m spacing; the last node is the gateway.
pub fn build_chain(n: usize) -> Result<Topology, TopologyError> {
    if n < 2 {
        return Err(TopologyError::TooFewNodes(n));
    }
    if (n - 1) as f64 * CHAIN_SPACING_M > AREA_WIDTH_M {
        return Err(TopologyError::ChainTooLong(n));
    }
    let nodes = (0..n)
        .map(|i| NodeSpec {
            id: NodeId(i as u32),
            pos: Position::new(i as f64 * CHAIN_SPACING_M, 0.0),
            radios: Vec::new(),
        })
        .collect();
    Ok(Topology { nodes, gateway: NodeId(n as u32 - 1), interferers: Vec::new() })
}

/// Uniform placement in the 1500 m x 800 m area, redrawn until the range
/// graph is connected. Node 0 is the gateway.
///
/// Sparse node counts almost never yield a connected uniform draw, so after
/// the whole-area retries are spent nodes are placed one at a time, each
/// drawn uniformly until it lands within range of an earlier node.
pub fn build_random(n: usize, seed: u64, model: &RadioModel) -> Result<Topology, TopologyError> {
    if n < 2 {
        return Err(TopologyError::TooFewNodes(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw =
        |rng: &mut ChaCha8Rng| Position::new(rng.gen_range(0.0..AREA_WIDTH_M), rng.gen_range(0.0..AREA_HEIGHT_M));
    let spec = |i: usize, pos| NodeSpec { id: NodeId(i as u32), pos, radios: Vec::new() };
    for _ in 0..RANDOM_PLACEMENT_RETRIES {
        let nodes: Vec<NodeSpec> = (0..n).map(|i| spec(i, draw(&mut rng))).collect();
        let topo = Topology { nodes, gateway: NodeId(0), interferers: Vec::new() };
        if connected(&topo.in_range(model)) {
            return Ok(topo);
        }
    }
    let mut nodes = vec![spec(0, draw(&mut rng))];
    for i in 1..n {
        let mut placed = None;
        for _ in 0..100_000 {
            let pos = draw(&mut rng);
            if nodes.iter().any(|s| s.pos.distance(&pos) <= model.tx_range) {
                placed = Some(pos);
                break;
            }
        }
        let pos = placed.ok_or(TopologyError::Disconnected { nodes: n, retries: RANDOM_PLACEMENT_RETRIES })?;
        nodes.push(spec(i, pos));
    }
    Ok(Topology { nodes, gateway: NodeId(0), interferers: Vec::new() })
}

/// The eight-node mesh used for the rerouting demonstration. Node 5 reaches
/// the gateway 4 directly on channel 1, or via 7 and 6 on channels 6, 1 and
/// 11. An interferer south of the direct link jams channel 1 near 5 and 4
/// but is out of interference range of 7 and 6.
pub fn build_detour() -> Topology {
    let ch = |c: i64| ChannelId::new(c).expect("valid channel");
    let node = |id: u32, x: f64, y: f64, radios: &[i64]| NodeSpec {
        id: NodeId(id),
        pos: Position::new(x, y),
        radios: radios.iter().map(|&c| ch(c)).collect(),
    };
    let nodes = vec![
        node(1, 430.0, 0.0, &[11, 6]),
        node(2, 430.0, 230.0, &[6, 11]),
        node(3, 650.0, 115.0, &[6]),
        node(4, 200.0, 0.0, &[1, 11]),
        node(5, 0.0, 0.0, &[1, 6]),
        node(6, 200.0, 230.0, &[1, 11]),
        node(7, 0.0, 230.0, &[6, 1]),
        node(8, -200.0, 115.0, &[6]),
    ];
    let interferers =
        vec![Interferer { pos: Position::new(100.0, -500.0), channel: ch(1), duty: 0.5, mean_burst_ms: 20.0 }];
    Topology { nodes, gateway: NodeId(4), interferers }
}

/// Assigns channels edge by edge along a BFS tree rooted at the gateway. For
/// each tree edge the parent consults its PCL: channels held by nodes within
/// range of either end are marked as taken by neighbors, and the parent's own
/// most recent choice is its selected channel. When an end has no free radio
/// the choice is restricted to that end's existing channels.
fn pcl_assign(topo: &mut Topology, radios_per_node: usize, model: &RadioModel) -> Result<(), TopologyError> {
    if radios_per_node == 0 {
        return Err(TopologyError::Plan("pcl plan needs at least one radio per node".into()));
    }
    let range = topo.in_range(model);
    let mut radios: BTreeMap<NodeId, Vec<ChannelId>> = topo.nodes.iter().map(|n| (n.id, Vec::new())).collect();
    let mut seen = BTreeSet::from([topo.gateway]);
    let mut queue = VecDeque::from([topo.gateway]);
    while let Some(parent) = queue.pop_front() {
        for &child in &range[&parent] {
            if !seen.insert(child) {
                continue;
            }
            queue.push_back(child);
            let mut pcl = PclTable::new();
            if let Some(&last) = radios[&parent].last() {
                pcl.update(PclObservation::SelfSelected(last));
            }
            for end in [parent, child] {
                for nb in &range[&end] {
                    if *nb == parent || *nb == child {
                        continue;
                    }
                    for &c in &radios[nb] {
                        pcl.update(PclObservation::NeighborTook(c));
                    }
                }
            }
            let p_full = radios[&parent].len() >= radios_per_node;
            let c_full = radios[&child].len() >= radios_per_node;
            let candidates: Vec<ChannelId> = match (p_full, c_full) {
                (false, false) => ChannelId::all().collect(),
                (true, false) => radios[&parent].clone(),
                (false, true) => radios[&child].clone(),
                (true, true) => radios[&parent].iter().filter(|c| radios[&child].contains(c)).copied().collect(),
            };
            let chosen = pcl
                .select_among(candidates)
                .ok_or_else(|| TopologyError::Plan(format!("no common channel for {parent}-{child}")))?;
            for end in [parent, child] {
                let list = radios.get_mut(&end).expect("node");
                if !list.contains(&chosen) {
                    list.push(chosen);
                }
            }
        }
    }
    for n in &mut topo.nodes {
        n.radios = radios.remove(&n.id).unwrap_or_default();
        if n.radios.is_empty() {
            // unreachable from the gateway; give it something to listen on
            n.radios.push(ChannelId::new(1).expect("valid"));
        }
    }
    Ok(())
}
