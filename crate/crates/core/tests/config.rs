use proptest::prelude::*;

use meshsim::channel::ChannelId;
use meshsim::config::{parse_config, serialize, FlowSpec, ProtocolChoice, ScenarioConfig, TopologySpec};
use meshsim::engine::{BaselineMac, ChannelPlan, Interferer, Position};
use meshsim::mac::{RtsMode, TrafficClass};
use meshsim::NodeId;

fn channels(width: usize) -> impl Strategy<Value = Vec<ChannelId>> {
    prop::sample::subsequence((1..=11i64).collect::<Vec<_>>(), width)
        .prop_shuffle()
        .prop_map(|v| v.into_iter().map(|c| ChannelId::new(c).unwrap()).collect())
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    let topology = prop_oneof![
        (2usize..12).prop_map(TopologySpec::Chain),
        (2usize..80, prop::option::of(0u64..1000)).prop_map(|(n, s)| TopologySpec::Random(n, s)),
    ];
    let plan = (1usize..4).prop_flat_map(|w| {
        (
            Just(w),
            prop_oneof![
                Just(ChannelPlan::Pcl),
                channels(w).prop_map(ChannelPlan::Uniform),
                // a one-node explicit plan is written, and behaves, as a uniform one
                prop::collection::vec(channels(w), 2..5).prop_map(ChannelPlan::Explicit),
            ],
        )
    });
    let flows = prop_oneof![
        (1usize..6).prop_map(FlowSpec::Auto),
        prop::collection::vec((0u32..3, 1u32..3), 1..4)
            .prop_map(|l| FlowSpec::List(l.into_iter().map(|(s, k)| (NodeId(s), NodeId((s + k) % 3))).collect())),
    ];
    let interferer = (-900.0f64..900.0, -900.0f64..900.0, 1i64..=11, 0.0f64..=1.0, 0.5f64..100.0).prop_map(
        |(x, y, c, duty, burst)| Interferer {
            pos: Position::new(x, y),
            channel: ChannelId::new(c).unwrap(),
            duty,
            mean_burst_ms: burst,
        },
    );
    (
        (topology, plan, flows, prop::collection::vec(interferer, 0..3)),
        (
            prop::sample::select(vec![RtsMode::Literal, RtsMode::Symmetric]),
            prop::sample::select(vec![TrafficClass::Qos, TrafficClass::DelayTolerant]),
            prop::sample::select(vec![ProtocolChoice::AodvHop, ProtocolChoice::Corciar, ProtocolChoice::Both]),
            prop::sample::select(vec![BaselineMac::Standard, BaselineMac::Modified]),
        ),
        (0.0f64..500.0, 1u32..3000, 1e5f64..1e7, 0.0f64..=1.0, 0.01f64..0.99, 0.0f64..=1.0, 1usize..16),
        (prop::option::of(0.1f64..30.0), any::<u64>(), "[a-z][a-z0-9_-]{0,12}"),
    )
        .prop_map(
            |(
                (topology, (radios, plan), flows, interferers),
                (rts_mode, traffic_class, protocol, baseline_mac),
                (sim_time_s, packet_size_bytes, data_rate_bps, alpha, delta, theta, window),
                (reroute_interval_s, seed, name),
            )| ScenarioConfig {
                name,
                topology,
                radios_per_node: radios,
                channel_plan: plan,
                rts_mode,
                traffic_class,
                protocol,
                baseline_mac,
                sim_time_s,
                packet_size_bytes,
                data_rate_bps,
                alpha,
                delta,
                theta,
                window,
                reroute_interval_s,
                flows,
                interferers,
                seed,
            },
        )
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(cfg in config()) {
        let text = serialize(&cfg);
        let back = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn parser_never_panics(text in "[ -~\n]{0,200}") {
        let _ = parse_config(&text);
    }
}

#[test]
fn empty_file_gives_defaults() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg, ScenarioConfig::default());
    assert_eq!(cfg.sim_time_s, 100.0);
    assert_eq!(cfg.packet_size_bytes, 1000);
    assert_eq!(cfg.data_rate_bps, 1e6);
    assert_eq!((cfg.alpha, cfg.delta, cfg.theta), (0.5, 0.125, 0.1));
    assert_eq!(cfg.window, 4);
    assert_eq!(cfg.reroute_interval_s, None);
}

#[test]
fn chain_topology_spacing() {
    let cfg = parse_config("topology = chain(6)\n").unwrap();
    let topo = cfg.build().unwrap().topology;
    assert_eq!(topo.nodes.len(), 6);
    for w in topo.nodes.windows(2) {
        assert_eq!(w[0].pos.distance(&w[1].pos), 150.0);
    }
}

#[test]
fn reroute_interval_grammar() {
    assert_eq!(parse_config("reroute_interval_s = off").unwrap().reroute_interval_s, None);
    assert_eq!(parse_config("reroute_interval_s = 2").unwrap().reroute_interval_s, Some(2.0));
    let err = parse_config("reroute_interval_s = -1").unwrap_err();
    assert_eq!(err.0[0].line, 1);
}
