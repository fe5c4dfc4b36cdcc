//! Scenario configuration files.
//!
//! One `key = value` per line; `#` starts a comment. Every key is optional
//! and unknown keys are rejected. `interferer` may repeat.
//!
//! ```text
//! name = chain6
//! topology = chain(6)          # chain(n) | random(n) | random(n, seed) | detour
//! radios_per_node = 3
//! channel_plan = 1,4,8         # pcl | preset | c,c,.. | c,c / c,c / ..
//! flows = auto                 # auto | auto(k) | 0->5, 2->5
//! interferer = 100, -500, 1, 0.5, 20   # x m, y m, channel, duty, burst ms
//! ```

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::ChannelId;
use crate::engine::{
    build_chain, build_detour, build_random, BaselineMac, ChannelPlan, EngineError, Interferer, Position, Protocol,
    RadioModel, SimParams, Topology,
};
use crate::mac::{RtsMode, TrafficClass};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologySpec {
    Chain(usize),
    /// Node count and an optional placement seed; without one the run seed
    /// places the nodes.
    Random(usize, Option<u64>),
    Detour,
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Chain(n) => write!(f, "chain({n})"),
            TopologySpec::Random(n, None) => write!(f, "random({n})"),
            TopologySpec::Random(n, Some(s)) => write!(f, "random({n}, {s})"),
            TopologySpec::Detour => f.write_str("detour"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolChoice {
    AodvHop,
    Corciar,
    Both,
}

impl ProtocolChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolChoice::AodvHop => "aodv_hop",
            ProtocolChoice::Corciar => "corciar",
            ProtocolChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowSpec {
    /// `k` flows toward the gateway from seeded sources; chains and the
    /// preset mesh use their fixed source instead.
    Auto(usize),
    List(Vec<(NodeId, NodeId)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub topology: TopologySpec,
    pub radios_per_node: usize,
    pub channel_plan: ChannelPlan,
    pub rts_mode: RtsMode,
    pub traffic_class: TrafficClass,
    pub protocol: ProtocolChoice,
    pub baseline_mac: BaselineMac,
    pub sim_time_s: f64,
    pub packet_size_bytes: u32,
    pub data_rate_bps: f64,
    pub alpha: f64,
    pub delta: f64,
    pub theta: f64,
    pub window: usize,
    /// Period of route re-evaluation for the RTT-metric protocol, s; `None`
    /// chooses each route once.
    pub reroute_interval_s: Option<f64>,
    pub flows: FlowSpec,
    pub interferers: Vec<Interferer>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = SimParams::default();
        ScenarioConfig {
            name: "scenario".into(),
            topology: TopologySpec::Chain(6),
            radios_per_node: 3,
            channel_plan: ChannelPlan::Pcl,
            rts_mode: p.rts_mode,
            traffic_class: p.traffic_class,
            protocol: ProtocolChoice::Both,
            baseline_mac: p.baseline_mac,
            sim_time_s: p.sim_time_s,
            packet_size_bytes: p.packet_size_bytes,
            data_rate_bps: p.model.data_rate_bps,
            alpha: p.alpha,
            delta: p.delta,
            theta: p.model.collision_threshold,
            window: p.window,
            reroute_interval_s: p.reroute_interval_s,
            flows: FlowSpec::Auto(3),
            interferers: Vec::new(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

/// All problems found in one file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

const KEYS: &[&str] = &[
    "name",
    "topology",
    "radios_per_node",
    "channel_plan",
    "rts_mode",
    "traffic_class",
    "protocol",
    "baseline_mac",
    "sim_time_s",
    "packet_size_bytes",
    "data_rate_bps",
    "alpha",
    "delta",
    "theta",
    "window",
    "reroute_interval_s",
    "flows",
    "interferer",
    "seed",
];

fn parse_num<T: std::str::FromStr>(v: &str, what: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{what}: cannot parse {v:?}"))
}

fn parse_channel(v: &str) -> Result<ChannelId, String> {
    let n: i64 = parse_num(v.trim(), "channel")?;
    ChannelId::new(n).map_err(|e| e.to_string())
}

fn parse_channel_list(v: &str) -> Result<Vec<ChannelId>, String> {
    v.split(',').map(parse_channel).collect()
}

/// `name(a)` or `name(a, b)` → the argument strings.
fn call_args<'a>(v: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = v.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

fn parse_topology(v: &str) -> Result<TopologySpec, String> {
    if v == "detour" {
        return Ok(TopologySpec::Detour);
    }
    if let Some(args) = call_args(v, "chain") {
        let [n] = args[..] else { return Err("chain takes one argument".into()) };
        let n: usize = parse_num(n, "chain length")?;
        if !(2..=11).contains(&n) {
            return Err(format!("chain length must be in [2,11] nodes, got {n}"));
        }
        return Ok(TopologySpec::Chain(n));
    }
    if let Some(args) = call_args(v, "random") {
        let (n, seed) = match args[..] {
            [n] => (n, None),
            [n, s] => (n, Some(parse_num(s, "placement seed")?)),
            _ => return Err("random takes one or two arguments".into()),
        };
        let n: usize = parse_num(n, "node count")?;
        if n < 2 {
            return Err(format!("random topology needs at least 2 nodes, got {n}"));
        }
        return Ok(TopologySpec::Random(n, seed));
    }
    Err(format!("unknown topology {v:?} (expected chain(n), random(n[, seed]) or detour)"))
}

fn parse_plan(v: &str) -> Result<ChannelPlan, String> {
    match v {
        "pcl" => Ok(ChannelPlan::Pcl),
        "preset" => Ok(ChannelPlan::Preset),
        _ if v.contains('/') => {
            Ok(ChannelPlan::Explicit(v.split('/').map(|s| parse_channel_list(s.trim())).collect::<Result<_, _>>()?))
        }
        _ => Ok(ChannelPlan::Uniform(parse_channel_list(v)?)),
    }
}

fn parse_flows(v: &str) -> Result<FlowSpec, String> {
    if v == "auto" {
        return Ok(FlowSpec::Auto(3));
    }
    if let Some(args) = call_args(v, "auto") {
        let [k] = args[..] else { return Err("auto takes one argument".into()) };
        let k: usize = parse_num(k, "flow count")?;
        if k == 0 {
            return Err("flow count must be at least 1".into());
        }
        return Ok(FlowSpec::Auto(k));
    }
    let mut out = Vec::new();
    for pair in v.split(',') {
        let Some((s, d)) = pair.split_once("->") else {
            return Err(format!("flow {pair:?} is not src->dst"));
        };
        let s: u32 = parse_num(s.trim(), "flow source")?;
        let d: u32 = parse_num(d.trim(), "flow destination")?;
        if s == d {
            return Err(format!("flow {s}->{d} has the same source and destination"));
        }
        out.push((NodeId(s), NodeId(d)));
    }
    Ok(FlowSpec::List(out))
}

fn parse_interferer(v: &str) -> Result<Interferer, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let [x, y, c, duty, burst] = parts[..] else {
        return Err("interferer is x_m, y_m, channel, duty, burst_ms".into());
    };
    let duty: f64 = parse_num(duty, "interferer duty")?;
    if !(duty > 0.0 && duty < 1.0) {
        return Err(format!("interferer duty must be in (0,1), got {duty}"));
    }
    let burst: f64 = parse_num(burst, "interferer burst_ms")?;
    if burst.is_nan() || burst <= 0.0 {
        return Err(format!("interferer burst_ms must be positive, got {burst}"));
    }
    Ok(Interferer {
        pos: Position::new(parse_num(x, "interferer x_m")?, parse_num(y, "interferer y_m")?),
        channel: parse_channel(c)?,
        duty,
        mean_burst_ms: burst,
    })
}

fn in_unit(v: f64, key: &str) -> Result<f64, String> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{key} must be in [0,1]"))
    }
}

fn apply(cfg: &mut ScenarioConfig, key: &str, v: &str) -> Result<(), String> {
    match key {
        "name" => {
            if v.is_empty() || v.contains(',') {
                return Err("name must be nonempty and contain no commas".into());
            }
            cfg.name = v.to_string();
        }
        "topology" => cfg.topology = parse_topology(v)?,
        "radios_per_node" => {
            let n: usize = parse_num(v, "radios_per_node")?;
            if !(1..=11).contains(&n) {
                return Err(format!("radios_per_node must be in [1,11], got {n}"));
            }
            cfg.radios_per_node = n;
        }
        "channel_plan" => cfg.channel_plan = parse_plan(v)?,
        "rts_mode" => {
            cfg.rts_mode = match v {
                "literal" => RtsMode::Literal,
                "symmetric" => RtsMode::Symmetric,
                _ => return Err("rts_mode must be literal or symmetric".into()),
            }
        }
        "traffic_class" => {
            cfg.traffic_class = match v {
                "qos" => TrafficClass::Qos,
                "delay_tolerant" => TrafficClass::DelayTolerant,
                _ => return Err("traffic_class must be qos or delay_tolerant".into()),
            }
        }
        "protocol" => {
            cfg.protocol = match v {
                "aodv_hop" => ProtocolChoice::AodvHop,
                "corciar" => ProtocolChoice::Corciar,
                "both" => ProtocolChoice::Both,
                _ => return Err("protocol must be aodv_hop, corciar or both".into()),
            }
        }
        "baseline_mac" => {
            cfg.baseline_mac = match v {
                "standard" => BaselineMac::Standard,
                "modified" => BaselineMac::Modified,
                _ => return Err("baseline_mac must be standard or modified".into()),
            }
        }
        "sim_time_s" => {
            let t: f64 = parse_num(v, "sim_time_s")?;
            if !(t >= 0.0 && t.is_finite()) {
                return Err("sim_time_s must be a nonnegative number of seconds".into());
            }
            cfg.sim_time_s = t;
        }
        "packet_size_bytes" => {
            let b: u32 = parse_num(v, "packet_size_bytes")?;
            if !(1..=65_535).contains(&b) {
                return Err("packet_size_bytes must be in [1,65535]".into());
            }
            cfg.packet_size_bytes = b;
        }
        "data_rate_bps" => {
            let r: f64 = parse_num(v, "data_rate_bps")?;
            if !(r > 0.0 && r.is_finite()) {
                return Err("data_rate_bps must be positive".into());
            }
            cfg.data_rate_bps = r;
        }
        "alpha" => cfg.alpha = in_unit(parse_num(v, "alpha")?, "alpha")?,
        "theta" => cfg.theta = in_unit(parse_num(v, "theta")?, "theta")?,
        "delta" => {
            let d: f64 = parse_num(v, "delta")?;
            if !(d > 0.0 && d < 1.0) {
                return Err("delta must be in (0,1)".into());
            }
            cfg.delta = d;
        }
        "window" => {
            let w: usize = parse_num(v, "window")?;
            if w == 0 {
                return Err("window must be at least 1 packet".into());
            }
            cfg.window = w;
        }
        "reroute_interval_s" => {
            cfg.reroute_interval_s = if v == "off" {
                None
            } else {
                let t: f64 = parse_num(v, "reroute_interval_s")?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err("reroute_interval_s must be off or a positive number of seconds".into());
                }
                Some(t)
            };
        }
        "flows" => cfg.flows = parse_flows(v)?,
        "interferer" => cfg.interferers.push(parse_interferer(v)?),
        "seed" => cfg.seed = parse_num(v, "seed")?,
        _ => unreachable!("key checked against KEYS"),
    }
    Ok(())
}

/// Parses a configuration file. Either every line is valid, or every bad
/// line is reported.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let mut cfg = ScenarioConfig::default();
    let mut errors = Vec::new();
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError { line, message: format!("expected key = value, got {content:?}") });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            errors.push(ConfigError { line, message: format!("unknown key {key:?}") });
            continue;
        };
        if known != "interferer" && seen.iter().any(|(k, _)| *k == known) {
            errors.push(ConfigError { line, message: format!("duplicate key {key:?}") });
            continue;
        }
        seen.push((known, line));
        if let Err(message) = apply(&mut cfg, known, value) {
            errors.push(ConfigError { line, message });
        }
    }
    // the plan is checked against the other fields only once each parsed
    if errors.is_empty() {
        if let Err(message) = check_plan(&cfg) {
            let line = ["channel_plan", "radios_per_node", "topology"]
                .iter()
                .find_map(|k| seen.iter().find(|(s, _)| s == k).map(|&(_, l)| l))
                .unwrap_or(1);
            errors.push(ConfigError { line, message });
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn check_plan(cfg: &ScenarioConfig) -> Result<(), String> {
    let r = cfg.radios_per_node;
    let check = |list: &[ChannelId]| {
        let mut sorted = list.to_vec();
        sorted.sort();
        sorted.dedup();
        if list.len() != r {
            Err(format!("channel_plan lists {} channels per node but radios_per_node is {r}", list.len()))
        } else if sorted.len() != list.len() {
            Err("channel_plan repeats a channel on one node".to_string())
        } else {
            Ok(())
        }
    };
    match &cfg.channel_plan {
        ChannelPlan::Uniform(list) => check(list),
        ChannelPlan::Explicit(lists) => lists.iter().try_for_each(|l| check(l)),
        ChannelPlan::Preset if cfg.topology != TopologySpec::Detour => {
            Err("channel_plan = preset is only available with topology = detour".into())
        }
        _ => Ok(()),
    }
}

fn join(list: &[ChannelId]) -> String {
    list.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes a configuration back out; [`parse_config`] reads it unchanged.
pub fn serialize(cfg: &ScenarioConfig) -> String {
    let plan = match &cfg.channel_plan {
        ChannelPlan::Pcl => "pcl".to_string(),
        ChannelPlan::Preset => "preset".to_string(),
        ChannelPlan::Uniform(l) => join(l),
        ChannelPlan::Explicit(ls) => ls.iter().map(|l| join(l)).collect::<Vec<_>>().join(" / "),
    };
    let flows = match &cfg.flows {
        FlowSpec::Auto(k) => format!("auto({k})"),
        FlowSpec::List(l) => l.iter().map(|(s, d)| format!("{s}->{d}")).collect::<Vec<_>>().join(", "),
    };
    let mut out = String::new();
    let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    line("name", cfg.name.clone());
    line("topology", cfg.topology.to_string());
    line("radios_per_node", cfg.radios_per_node.to_string());
    line("channel_plan", plan);
    line("rts_mode", cfg.rts_mode.as_str().to_string());
    line("traffic_class", cfg.traffic_class.as_str().to_string());
    line("protocol", cfg.protocol.as_str().to_string());
    line(
        "baseline_mac",
        match cfg.baseline_mac {
            BaselineMac::Standard => "standard",
            BaselineMac::Modified => "modified",
        }
        .to_string(),
    );
    line("sim_time_s", format!("{:?}", cfg.sim_time_s));
    line("packet_size_bytes", cfg.packet_size_bytes.to_string());
    line("data_rate_bps", format!("{:?}", cfg.data_rate_bps));
    line("alpha", format!("{:?}", cfg.alpha));
    line("delta", format!("{:?}", cfg.delta));
    line("theta", format!("{:?}", cfg.theta));
    line("window", cfg.window.to_string());
    line("reroute_interval_s", cfg.reroute_interval_s.map_or("off".to_string(), |t| format!("{t:?}")));
    line("flows", flows);
    for j in &cfg.interferers {
        line("interferer", format!("{:?}, {:?}, {}, {:?}, {:?}", j.pos.x, j.pos.y, j.channel, j.duty, j.mean_burst_ms));
    }
    line("seed", cfg.seed.to_string());
    out
}

/// A configuration resolved into a concrete topology and engine parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub params: SimParams,
}

impl ScenarioConfig {
    pub fn protocols(&self) -> Vec<Protocol> {
        match self.protocol {
            ProtocolChoice::AodvHop => vec![Protocol::AodvHop],
            ProtocolChoice::Corciar => vec![Protocol::Corciar],
            ProtocolChoice::Both => vec![Protocol::AodvHop, Protocol::Corciar],
        }
    }

    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        let model =
            RadioModel { data_rate_bps: self.data_rate_bps, collision_threshold: self.theta, ..RadioModel::default() };
        let mut topology = match self.topology {
            TopologySpec::Chain(n) => build_chain(n).map_err(EngineError::from)?,
            TopologySpec::Random(n, s) => build_random(n, s.unwrap_or(self.seed), &model).map_err(EngineError::from)?,
            TopologySpec::Detour => build_detour(),
        };
        if self.topology != TopologySpec::Detour || self.channel_plan != ChannelPlan::Preset {
            topology.apply_plan(&self.channel_plan, self.radios_per_node, &model).map_err(EngineError::from)?;
        }
        topology.interferers.extend(self.interferers.iter().cloned());
        let flows = self.resolve_flows(&topology)?;
        let params = SimParams {
            model,
            rts_mode: self.rts_mode,
            traffic_class: self.traffic_class,
            baseline_mac: self.baseline_mac,
            sim_time_s: self.sim_time_s,
            packet_size_bytes: self.packet_size_bytes,
            alpha: self.alpha,
            delta: self.delta,
            window: self.window,
            reroute_interval_s: self.reroute_interval_s,
            flows,
            seed: self.seed,
            ..SimParams::default()
        };
        Ok(Scenario { topology, params })
    }

    fn resolve_flows(&self, topo: &Topology) -> Result<Vec<(NodeId, NodeId)>, ScenarioError> {
        match &self.flows {
            FlowSpec::List(list) => {
                for &(s, d) in list {
                    for id in [s, d] {
                        if topo.index_of(id).is_none() {
                            return Err(ScenarioError::Invalid(format!("flow endpoint {id} is not a node")));
                        }
                    }
                }
                Ok(list.clone())
            }
            FlowSpec::Auto(k) => Ok(match self.topology {
                TopologySpec::Chain(_) => vec![(topo.nodes[0].id, topo.gateway)],
                TopologySpec::Detour => vec![(NodeId(5), NodeId(4))],
                TopologySpec::Random(..) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x666c_6f77);
                    let mut sources: Vec<NodeId> =
                        topo.nodes.iter().map(|n| n.id).filter(|&id| id != topo.gateway).collect();
                    sources.shuffle(&mut rng);
                    sources.into_iter().take(*k).map(|s| (s, topo.gateway)).collect()
                }
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        assert_eq!(c.sim_time_s, 100.0);
        assert_eq!(c.packet_size_bytes, 1000);
        assert_eq!(c.data_rate_bps, 1e6);
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.delta, 0.125);
        assert_eq!(c.theta, 0.1);
        assert_eq!(c.window, 4);
        assert_eq!(c.rts_mode, RtsMode::Symmetric);
    }

    #[test]
    fn alpha_out_of_range() {
        let e = parse_config("alpha = 1.5").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].line, 1);
        assert!(e.0[0].message.contains("alpha must be in [0,1]"));
    }

    #[test]
    fn every_bad_line_is_reported() {
        let text = "# header\nalpha = 2\nbogus = 1\nwindow = 0\ntopology = ring(3)\nseed = 4\n";
        let e = parse_config(text).unwrap_err();
        let lines: Vec<usize> = e.0.iter().map(|x| x.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
        assert!(e.to_string().contains("unknown key \"bogus\""));
    }

    #[test]
    fn chain_topology_builds() {
        let c = parse_config("topology = chain(6)\nchannel_plan = 1,4,8").unwrap();
        let s = c.build().unwrap();
        assert_eq!(s.topology.nodes.len(), 6);
        assert_eq!(s.topology.nodes[5].pos, Position::new(750.0, 0.0));
        assert_eq!(s.params.flows, vec![(NodeId(0), NodeId(5))]);
    }

    #[test]
    fn plan_width_must_match_radios() {
        let e = parse_config("radios_per_node = 2\nchannel_plan = 1,4,8").unwrap_err();
        assert!(e.0[0].message.contains("radios_per_node is 2"));
        assert!(parse_config("radios_per_node = 2\nchannel_plan = 1,6 / 6,11").is_ok());
        assert!(parse_config("radios_per_node = 2\nchannel_plan = 1,1").is_err());
        assert!(parse_config("channel_plan = preset").is_err());
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("  seed=9   # trailing\n\n#alpha = 7\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.alpha, 0.5);
    }

    #[test]
    fn duplicate_keys_are_errors_except_interferer() {
        assert!(parse_config("seed = 1\nseed = 2").is_err());
        let c = parse_config("interferer = 0,0,1,0.5,20\ninterferer = 10,0,6,0.2,5").unwrap();
        assert_eq!(c.interferers.len(), 2);
    }

    #[test]
    fn round_trip() {
        let text = "name = x\ntopology = random(30, 4)\nradios_per_node = 2\nchannel_plan = 1,6 / 6,11 / 11,1\n\
                    rts_mode = literal\ntraffic_class = delay_tolerant\nprotocol = corciar\nbaseline_mac = modified\n\
                    sim_time_s = 12.5\nalpha = 0.3\ndelta = 0.25\ntheta = 0.05\nwindow = 2\nreroute_interval_s = 2.5\nflows = 3->0, 7->0\n\
                    interferer = 1.5, -2, 3, 0.25, 7.5\nseed = 11\n";
        let c = parse_config(text).unwrap();
        assert_eq!(parse_config(&serialize(&c)).unwrap(), c);
        let d = ScenarioConfig::default();
        assert_eq!(parse_config(&serialize(&d)).unwrap(), d);
    }

    #[test]
    fn auto_flows_on_random_are_seeded() {
        let c = parse_config("topology = random(20)\nchannel_plan = 1,4,8\nflows = auto(3)\nseed = 5").unwrap();
        let a = c.build().unwrap();
        let b = c.build().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.params.flows.len(), 3);
        assert!(a.params.flows.iter().all(|&(s, d)| d == NodeId(0) && s != d));
    }

    #[test]
    fn unknown_flow_endpoint() {
        let c = parse_config("topology = chain(3)\nchannel_plan = 1,4,8\nflows = 0->7").unwrap();
        assert!(matches!(c.build(), Err(ScenarioError::Invalid(_))));
    }
}
