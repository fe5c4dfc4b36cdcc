//! Run evaluation: throughput, delivery ratio, delay and RTT statistics, and
//! the coefficient-of-restitution (COR) comparison of two runs.

use std::fmt;

/// Per-flow counters. Packet counts are per transmitted copy, so a
/// retransmission counts as a new packet sent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowStats {
    pub flow_id: u32,
    pub packets_sent: u64,
    /// Copies that reached the gateway, duplicates included.
    pub packets_received_at_gateway: u64,
    /// Payload bytes of distinct sequence numbers delivered.
    pub bytes_received: u64,
    pub e2e_delays: Vec<f64>,
    pub rtt_samples: Vec<f64>,
    pub drops_queue: u64,
    pub drops_retry: u64,
    /// Copies dropped because a relay had no valid route.
    pub drops_no_route: u64,
    pub in_flight_at_end: u64,
    /// Sequence numbers given up on after the transport retry limit.
    pub abandoned: u64,
    pub retransmissions: u64,
}

impl FlowStats {
    pub fn new(flow_id: u32) -> Self {
        FlowStats { flow_id, ..Default::default() }
    }

    /// `sent == received + drops + in flight`.
    pub fn is_conserved(&self) -> bool {
        self.packets_sent
            == self.packets_received_at_gateway
                + self.drops_queue
                + self.drops_retry
                + self.drops_no_route
                + self.in_flight_at_end
    }
}

/// Packets received at the gateway over packets sent; absent when nothing was
/// sent.
pub fn delivery_ratio(stats: &FlowStats) -> Option<f64> {
    (stats.packets_sent > 0).then(|| stats.packets_received_at_gateway as f64 / stats.packets_sent as f64)
}

pub fn throughput_kbps(bytes_received: u64, duration_s: f64) -> f64 {
    debug_assert!(duration_s > 0.0);
    bytes_received as f64 * 8.0 / duration_s / 1000.0
}

/// Ratio of the weaker run's throughput (`after`) to the stronger one's
/// (`before`). Absent when `before` is zero.
pub fn cor(after_kbps: f64, before_kbps: f64) -> Option<f64> {
    (before_kbps > 0.0).then(|| after_kbps / before_kbps)
}

/// Kinetic-energy ratio implied by a COR value.
pub fn energy_ratio(cor: f64) -> f64 {
    cor * cor
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollisionClass {
    PerfectlyElastic,
    PartiallyElastic,
    Inelastic,
}

impl CollisionClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CollisionClass::PerfectlyElastic => "PerfectlyElastic",
            CollisionClass::PartiallyElastic => "PartiallyElastic",
            CollisionClass::Inelastic => "Inelastic",
        }
    }
}

impl fmt::Display for CollisionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Values above 1 are clamped to 1 and below 0 to 0 before classification.
pub fn classify_collision(cor: f64) -> CollisionClass {
    let c = cor.clamp(0.0, 1.0);
    if c >= 1.0 {
        CollisionClass::PerfectlyElastic
    } else if c <= 0.0 {
        CollisionClass::Inelastic
    } else {
        CollisionClass::PartiallyElastic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorReport {
    pub before: f64,
    pub after: f64,
    /// Unclamped ratio.
    pub cor: f64,
    pub energy_ratio: f64,
    pub collision_class: CollisionClass,
}

impl CorReport {
    pub fn new(after_kbps: f64, before_kbps: f64) -> Option<Self> {
        let c = cor(after_kbps, before_kbps)?;
        Some(CorReport {
            before: before_kbps,
            after: after_kbps,
            cor: c,
            energy_ratio: energy_ratio(c),
            collision_class: classify_collision(c),
        })
    }

    /// True when the ratio exceeded 1 and was clamped for classification.
    pub fn clamped(&self) -> bool {
        self.cor > 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub protocol_label: String,
    pub throughput_kbps: f64,
    pub delivery_ratio: Option<f64>,
    pub mean_e2e_delay_ms: Option<f64>,
    pub mean_rtt_ms: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

pub fn summarize(stats: &[FlowStats], duration_s: f64, protocol_label: &str) -> RunSummary {
    let sent: u64 = stats.iter().map(|s| s.packets_sent).sum();
    let received: u64 = stats.iter().map(|s| s.packets_received_at_gateway).sum();
    let bytes: u64 = stats.iter().map(|s| s.bytes_received).sum();
    RunSummary {
        protocol_label: protocol_label.to_string(),
        throughput_kbps: if duration_s > 0.0 { throughput_kbps(bytes, duration_s) } else { 0.0 },
        delivery_ratio: (sent > 0).then(|| received as f64 / sent as f64),
        mean_e2e_delay_ms: mean(stats.iter().flat_map(|s| s.e2e_delays.iter().copied())),
        mean_rtt_ms: mean(stats.iter().flat_map(|s| s.rtt_samples.iter().copied())),
    }
}

/// Median of a sample; the mean of the two middle values for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}
