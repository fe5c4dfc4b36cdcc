//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use meshsim::channel::{classify, interference_factor, ChannelId, SeparationClass};
use meshsim::cli::{execute, render_csv, rows_of, Executed};
use meshsim::config::{FlowSpec, ScenarioConfig, TopologySpec};
use meshsim::engine::{ChannelPlan, Protocol, RunOutput};
use meshsim::mac::{handle_rts, transmission_delay, weighted_hop_cost, QueueTimestamps, RtsMode, TrafficClass};
use meshsim::metrics::{cor, median};
use meshsim::routing::{converge_potentials, LinkGraph, RttEstimator};
use meshsim::NodeId;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn ch(c: u8) -> ChannelId {
    ChannelId::new(c as i64).unwrap()
}

// Throughput pairs (baseline, protocol, ratio) as published, minus the row
// whose first column is 0.8329.
const COR_TABLE: [(f64, f64, f64); 18] = [
    (483.133, 483.133, 1.0),
    (240.936, 240.936, 1.0),
    (154.658, 177.829, 0.869701),
    (101.137, 150.523, 0.671904),
    (84.6593, 147.935, 0.572274),
    (75.6836, 140.5726, 0.538395),
    (57.1282, 140.5449, 0.406477),
    (56.5467, 139.8836, 0.404241),
    (47.2099, 138.7724, 0.340197),
    (47.5675, 135.6574, 0.350644),
    (48.9261, 133.5736, 0.366286),
    (48.2715, 129.3132, 0.373291),
    (48.1595, 128.3545, 0.375207),
    (47.8169, 122.8472, 0.389239),
    (45.1668, 120.2656, 0.375559),
    (48.5566, 118.7433, 0.408921),
    (46.7605, 117.8355, 0.396829),
    (49.2422, 115.1323, 0.427701),
];

fn c1_cor_table() -> Verdict {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for &(after, before, expected) in &COR_TABLE {
        let got = cor(after, before).expect("nonzero denominator");
        worst = worst.max((got - expected).abs());
        if after == before && got != 1.0 {
            ok = false;
        }
    }
    let elapsed = t.elapsed();
    ok &= worst <= 1e-4 && elapsed < Duration::from_secs(1);
    verdict(ok, format!("{} rows, max |error| {worst:.2e}, row 0.8329/130.2198 excluded, {elapsed:?}", COR_TABLE.len()))
}

fn load_golden(name: &str) -> Vec<Vec<String>> {
    let path = format!("{}/tests/golden/{name}.csv", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    text.lines().skip(1).map(|l| l.split(',').skip(1).map(String::from).collect()).collect()
}

fn c2_rts_tables() -> Verdict {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    let mut cases = 0;
    for (class, cname, min_sep) in [(TrafficClass::Qos, "qos", 5u8), (TrafficClass::DelayTolerant, "delay_tolerant", 4)]
    {
        let golden = load_golden(&format!("rts_{cname}_literal"));
        for a in 1..=11u8 {
            for b in 1..=11u8 {
                let literal = handle_rts(class, ch(a), &[ch(b)], RtsMode::Literal).to_string();
                if literal != golden[a as usize - 1][b as usize - 1] {
                    mismatches.push(format!("{cname} literal ({a},{b})"));
                }
                let sep = a.abs_diff(b);
                let expected = if sep >= min_sep { "SendCts" } else { "Defer" };
                if handle_rts(class, ch(a), &[ch(b)], RtsMode::Symmetric).to_string() != expected {
                    mismatches.push(format!("{cname} symmetric ({a},{b})"));
                }
                cases += 2;
            }
        }
    }
    let elapsed = t.elapsed();
    let ok = mismatches.is_empty() && elapsed < Duration::from_secs(1);
    verdict(ok, format!("{cases} cases, mismatches {mismatches:?}, {elapsed:?}"))
}

fn c3_channel_model() -> Verdict {
    let mut bad = Vec::new();
    for a in 1..=11u8 {
        for b in 1..=11u8 {
            let d = a.abs_diff(b);
            let class = match d {
                0 => SeparationClass::SelfSame,
                1..=3 => SeparationClass::AdjacentSevere,
                4 => SeparationClass::PartialAcceptable,
                _ => SeparationClass::Orthogonal,
            };
            if classify(ch(a), ch(b)) != class {
                bad.push((a, b));
            }
        }
    }
    for (a, b) in [(1, 6), (6, 11), (1, 11)] {
        if classify(ch(a), ch(b)) != SeparationClass::Orthogonal || interference_factor(ch(a), ch(b)) != 0.0 {
            bad.push((a, b));
        }
    }
    verdict(bad.is_empty(), format!("121 pairs against |a-b| oracle, disagreements {bad:?}"))
}

fn c4_ewma() -> Verdict {
    const DELTA: f64 = 0.125;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_conv: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut starts: Vec<f64> = (0..=10).map(|k| k as f64 * 1000.0).collect();
    starts.extend((0..200).map(|_| rng.gen_range(0.0..=10_000.0)));
    for &avg0 in &starts {
        for s in [0.0, 5.0, 47.5, 250.0, 5000.0, 10_000.0] {
            let mut est = RttEstimator::with_initial(avg0, DELTA);
            for n in 1..=60 {
                est.update(s);
                let closed = s + (1.0 - DELTA).powi(n) * (avg0 - s);
                let got = est.average().unwrap();
                let scale = closed.abs().max(got.abs()).max(f64::MIN_POSITIVE);
                worst_rel = worst_rel.max((got - closed).abs() / scale);
            }
            worst_conv = worst_conv.max((est.average().unwrap() - s).abs());
        }
    }
    let ok = worst_conv <= 1e-6 && worst_rel <= 1e-9;
    verdict(
        ok,
        format!(
            "max |avg_60 - s| = {worst_conv:.3e} ms (bound 1e-6), max closed-form relative error {worst_rel:.2e} (bound 1e-9)"
        ),
    )
}

fn c5_delay_decomposition() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    for _ in 0..10_000 {
        let mut t = [rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)];
        t.sort_by(f64::total_cmp);
        let ts = QueueTimestamps::complete(t[0], t[1], t[2]).expect("ordered triple");
        let (q, c) = (ts.queue_delay(), ts.contention_delay());
        let span = t[2] - t[0];
        let ok = q >= 0.0
            && c >= 0.0
            && (q + c - span).abs() <= 4.0 * f64::EPSILON * t[2].max(1.0)
            && weighted_hop_cost(&ts, 0.0) == q
            && weighted_hop_cost(&ts, 1.0) == c;
        if !ok {
            failures += 1;
        }
    }
    let tx = transmission_delay(1000, 1e6);
    verdict(failures == 0 && tx == 0.008, format!("10000 triples, {failures} failures, tx(1000 B, 1 Mbps) = {tx} s"))
}

fn dijkstra(adj: &BTreeMap<u32, Vec<(u32, f64)>>, src: u32) -> BTreeMap<u32, f64> {
    let mut dist: BTreeMap<u32, f64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, src)));
    let mut best: BTreeMap<u32, f64> = BTreeMap::from([(src, 0.0)]);
    while let Some(Reverse((_, v))) = heap.pop() {
        if dist.contains_key(&v) {
            continue;
        }
        let dv = best[&v];
        dist.insert(v, dv);
        for &(w, c) in &adj[&v] {
            let nd = dv + c;
            if best.get(&w).is_none_or(|&old| nd < old) {
                best.insert(w, nd);
                heap.push(Reverse((nd.to_bits(), w)));
            }
        }
    }
    dist
}

fn c6_routing_oracle() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    let mut loops = 0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=12u32);
        let mut adj: BTreeMap<u32, Vec<(u32, f64)>> = (0..n).map(|v| (v, Vec::new())).collect();
        let add = |a: u32, b: u32, c: f64, adj: &mut BTreeMap<u32, Vec<(u32, f64)>>| {
            if a != b && !adj[&a].iter().any(|&(w, _)| w == b) {
                adj.get_mut(&a).unwrap().push((b, c));
                adj.get_mut(&b).unwrap().push((a, c));
            }
        };
        // random spanning tree, then extra edges
        for v in 1..n {
            let u = rng.gen_range(0..v);
            let c = rng.gen_range(0.5..200.0);
            add(u, v, c, &mut adj);
        }
        for _ in 0..rng.gen_range(0..=n * 2) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let c = rng.gen_range(0.5..200.0);
            add(a, b, c, &mut adj);
        }
        let mut g = LinkGraph::new();
        for v in 0..n {
            g.add_node(NodeId(v));
        }
        for (&a, list) in &adj {
            for &(b, c) in list {
                g.add_directed(NodeId(a), NodeId(b), c);
            }
        }
        let gw = rng.gen_range(0..n);
        let field = converge_potentials(&g, NodeId(gw), 0.125);
        let oracle = dijkstra(&adj, gw);
        for v in 0..n {
            let got = field.get(NodeId(v));
            let want = oracle[&v];
            if got.is_none_or(|x| (x - want).abs() > 1e-9 * want.max(1.0)) {
                mismatches += 1;
            }
            // follow next hops: potential must strictly fall until the gateway
            let mut cur = v;
            let mut steps = 0;
            while cur != gw {
                let cands: Vec<NodeId> = adj[&cur].iter().map(|&(w, _)| NodeId(w)).collect();
                let next = field.next_hop_select(NodeId(cur), &cands).map(|w| w.0);
                match next {
                    Ok(w) if field.get(NodeId(w)) < field.get(NodeId(cur)) && steps < n => {
                        cur = w;
                        steps += 1;
                    }
                    _ => {
                        loops += 1;
                        break;
                    }
                }
            }
        }
    }
    let elapsed = t.elapsed();
    let ok = mismatches == 0 && loops == 0 && elapsed < Duration::from_secs(30);
    verdict(ok, format!("200 graphs, {mismatches} potential mismatches, {loops} non-downhill walks, {elapsed:?}"))
}

/// Every run of the trend and scenario criteria, for the conservation check.
#[derive(Default)]
struct Ledger {
    runs: usize,
    violations: Vec<String>,
}

impl Ledger {
    fn record(&mut self, label: &str, ex: &Executed) {
        for r in &ex.runs {
            self.runs += 1;
            for f in &r.flows {
                if !f.is_conserved() {
                    self.violations.push(format!("{label} {} flow {}", r.protocol.label(), f.flow_id));
                }
            }
        }
    }
}

fn run_all(cfgs: &[ScenarioConfig]) -> Vec<Executed> {
    cfgs.par_iter().map(|c| execute(c, None).unwrap_or_else(|e| panic!("{}: {e}", c.name))).collect()
}

fn by_protocol(ex: &Executed, p: Protocol) -> &RunOutput {
    ex.runs.iter().find(|r| r.protocol == p).expect("both protocols run")
}

fn c7_detour(ledger: &mut Ledger) -> Verdict {
    let cfgs: Vec<ScenarioConfig> = (1..=10)
        .map(|seed| ScenarioConfig {
            name: "detour".into(),
            topology: TopologySpec::Detour,
            radios_per_node: 2,
            channel_plan: ChannelPlan::Preset,
            seed,
            ..ScenarioConfig::default()
        })
        .collect();
    let results = run_all(&cfgs);
    let mut good = 0;
    let mut notes = Vec::new();
    for (cfg, ex) in cfgs.iter().zip(&results) {
        ledger.record("detour", ex);
        let b = by_protocol(ex, Protocol::AodvHop);
        let c = by_protocol(ex, Protocol::Corciar);
        let path =
            |r: &RunOutput| r.final_routes[0].clone().unwrap_or_default().iter().map(|n| n.0).collect::<Vec<_>>();
        let ok = path(b) == [5, 4] && path(c) == [5, 7, 6, 4] && c.summary.throughput_kbps > b.summary.throughput_kbps;
        if ok {
            good += 1;
        } else {
            notes.push(format!(
                "seed {}: {:?} {:.1} kbps vs {:?} {:.1} kbps",
                cfg.seed,
                path(b),
                b.summary.throughput_kbps,
                path(c),
                c.summary.throughput_kbps
            ));
        }
    }
    verdict(good >= 8, format!("{good}/10 seeds route [5,4] then [5,7,6,4] with higher throughput {notes:?}"))
}

const SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

fn overlapping_plan() -> ChannelPlan {
    ChannelPlan::Uniform(vec![ch(1), ch(4), ch(8)])
}

/// Medians per axis value of (baseline thr, protocol thr, baseline rtt, protocol rtt).
fn sweep_medians(cfgs: &[Vec<ScenarioConfig>], ledger: &mut Ledger, label: &str) -> Vec<[f64; 4]> {
    let flat: Vec<ScenarioConfig> = cfgs.iter().flatten().cloned().collect();
    let results = run_all(&flat);
    let mut out = Vec::new();
    let mut it = results.iter();
    for group in cfgs {
        let mut cols: [Vec<f64>; 4] = Default::default();
        for _ in group {
            let ex = it.next().unwrap();
            ledger.record(label, ex);
            let b = by_protocol(ex, Protocol::AodvHop);
            let c = by_protocol(ex, Protocol::Corciar);
            cols[0].push(b.summary.throughput_kbps);
            cols[1].push(c.summary.throughput_kbps);
            cols[2].extend(b.summary.mean_rtt_ms);
            cols[3].extend(c.summary.mean_rtt_ms);
        }
        out.push(cols.map(|v| median(&v).unwrap_or(f64::NAN)));
    }
    out
}

fn c8_chain_trend(ledger: &mut Ledger) -> Verdict {
    let t = Instant::now();
    let hops = [2usize, 3, 4, 5, 6, 8];
    let cfgs: Vec<Vec<ScenarioConfig>> = hops
        .iter()
        .map(|&h| {
            SEEDS
                .map(|seed| ScenarioConfig {
                    name: format!("chain-{h}"),
                    topology: TopologySpec::Chain(h + 1),
                    radios_per_node: 3,
                    channel_plan: overlapping_plan(),
                    flows: FlowSpec::Auto(1),
                    seed,
                    ..ScenarioConfig::default()
                })
                .collect()
        })
        .collect();
    let m = sweep_medians(&cfgs, ledger, "chain");
    let mut failures = Vec::new();
    for i in 1..m.len() {
        let (h0, h1) = (hops[i - 1], hops[i]);
        if m[i][2] < m[i - 1][2] {
            failures.push(format!("baseline rtt falls {h0}->{h1}"));
        }
        if m[i][3] < m[i - 1][3] {
            failures.push(format!("protocol rtt falls {h0}->{h1}"));
        }
        if m[i][0] > m[i - 1][0] {
            failures.push(format!("baseline throughput rises {h0}->{h1}"));
        }
        if m[i][1] > m[i - 1][1] {
            failures.push(format!("protocol throughput rises {h0}->{h1}"));
        }
    }
    for (i, &h) in hops.iter().enumerate() {
        if h >= 3 && m[i][3] > m[i][2] {
            failures.push(format!("protocol rtt above baseline at {h} hops"));
        }
        if h >= 4 && m[i][1] < m[i][0] {
            failures.push(format!("protocol throughput below baseline at {h} hops"));
        }
    }
    let table: Vec<String> = hops
        .iter()
        .zip(&m)
        .map(|(h, r)| format!("{h}h thr {:.0}/{:.0} rtt {:.0}/{:.0}", r[0], r[1], r[2], r[3]))
        .collect();
    verdict(failures.is_empty(), format!("{} | failures {failures:?} | {:?}", table.join(", "), t.elapsed()))
}

fn c9_random_trend(ledger: &mut Ledger) -> Verdict {
    let t = Instant::now();
    let nodes = [20usize, 40, 60];
    let cfgs: Vec<Vec<ScenarioConfig>> = nodes
        .iter()
        .map(|&n| {
            SEEDS
                .map(|seed| ScenarioConfig {
                    name: format!("random-{n}"),
                    topology: TopologySpec::Random(n, None),
                    radios_per_node: 3,
                    channel_plan: overlapping_plan(),
                    flows: FlowSpec::Auto(3),
                    seed,
                    ..ScenarioConfig::default()
                })
                .collect()
        })
        .collect();
    let m = sweep_medians(&cfgs, ledger, "random");
    let mut failures = Vec::new();
    for (n, r) in nodes.iter().zip(&m) {
        if r[3] > r[2] {
            failures.push(format!("protocol rtt above baseline at {n} nodes"));
        }
        if r[1] < r[0] {
            failures.push(format!("protocol throughput below baseline at {n} nodes"));
        }
    }
    let table: Vec<String> = nodes
        .iter()
        .zip(&m)
        .map(|(n, r)| format!("{n}n thr {:.0}/{:.0} rtt {:.0}/{:.0}", r[0], r[1], r[2], r[3]))
        .collect();
    verdict(failures.is_empty(), format!("{} | failures {failures:?} | {:?}", table.join(", "), t.elapsed()))
}

fn c10_determinism(ledger: &mut Ledger) -> Verdict {
    let mut problems = Vec::new();
    let cases = [
        ScenarioConfig { name: "det-chain".into(), seed: 3, ..ScenarioConfig::default() },
        ScenarioConfig {
            name: "det-random".into(),
            topology: TopologySpec::Random(30, None),
            channel_plan: overlapping_plan(),
            seed: 7,
            ..ScenarioConfig::default()
        },
        ScenarioConfig {
            name: "det-detour".into(),
            topology: TopologySpec::Detour,
            radios_per_node: 2,
            channel_plan: ChannelPlan::Preset,
            seed: 2,
            ..ScenarioConfig::default()
        },
    ];
    for cfg in &cases {
        let a = execute(cfg, None).unwrap();
        let b = execute(cfg, None).unwrap();
        ledger.record(&cfg.name, &a);
        if render_csv(&rows_of(cfg, &a)) != render_csv(&rows_of(cfg, &b)) {
            problems.push(format!("{} csv differs", cfg.name));
        }
        for (x, y) in a.runs.iter().zip(&b.runs) {
            if x.trace_hash.is_none() || x.trace_hash != y.trace_hash {
                problems.push(format!("{} {} trace hash differs", cfg.name, x.protocol.label()));
            }
        }
    }

    let mut orthogonal = Vec::new();
    for radios in [1usize, 3] {
        let plan = ChannelPlan::Uniform([1, 6, 11][..radios].iter().map(|&c| ch(c)).collect());
        for seed in 1..=3 {
            for topology in [TopologySpec::Chain(7), TopologySpec::Random(20, None), TopologySpec::Random(40, None)] {
                orthogonal.push(ScenarioConfig {
                    name: format!("orth-{topology}-r{radios}"),
                    topology,
                    radios_per_node: radios,
                    channel_plan: plan.clone(),
                    seed,
                    ..ScenarioConfig::default()
                });
            }
        }
    }
    let results = run_all(&orthogonal);
    let mut cross = 0;
    let mut co_channel = 0;
    for (cfg, ex) in orthogonal.iter().zip(&results) {
        ledger.record(&cfg.name, ex);
        for r in &ex.runs {
            cross += r.cross_channel_corruptions;
            co_channel += r.corruptions - r.cross_channel_corruptions;
        }
    }
    if cross > 0 {
        problems.push(format!("{cross} interference corruptions under orthogonal plans"));
    }
    if !ledger.violations.is_empty() {
        problems.push(format!("conservation violated: {:?}", ledger.violations));
    }
    verdict(
        problems.is_empty(),
        format!(
            "3 scenarios replayed, {} orthogonal-plan runs ({co_channel} co-channel collisions, {cross} cross-channel), conservation over {} runs, problems {problems:?}",
            orthogonal.len(),
            ledger.runs
        ),
    )
}

fn main() {
    // `cargo test -- <filter>` passes arguments; the suite always runs whole
    let mut ledger = Ledger::default();
    let criteria: Vec<(&str, Verdict)> = vec![
        ("1 restitution table", c1_cor_table()),
        ("2 rts/cts decision tables", c2_rts_tables()),
        ("3 channel model", c3_channel_model()),
        ("4 rtt smoothing", c4_ewma()),
        ("5 delay decomposition", c5_delay_decomposition()),
        ("6 routing oracle", c6_routing_oracle()),
        ("7 interference reroute scenario", c7_detour(&mut ledger)),
        ("8 chain trends", c8_chain_trend(&mut ledger)),
        ("9 random topology trends", c9_random_trend(&mut ledger)),
        ("10 determinism and conservation", c10_determinism(&mut ledger)),
    ];
    let mut failed = 0;
    for (name, v) in &criteria {
        println!("criterion {name}: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
