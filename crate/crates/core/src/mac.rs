//! Per-radio MAC: the instrumented FIFO, binary exponential backoff, the
//! interference-aware RTS/CTS admission rules and the hop-delay quantities
//! derived from queue timestamps.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::channel::{separation, ChannelId, PclTable, ORTHOGONAL_SEPARATION};
use crate::NodeId;

/// Queue capacity of every radio, in frames.
pub const QUEUE_CAPACITY: usize = 50;

pub const RTS_BYTES: u32 = 20;
pub const CTS_BYTES: u32 = 14;
pub const MAC_ACK_BYTES: u32 = 14;
pub const CONTROL_PAYLOAD_BYTES: u32 = 40;

pub const CW_MIN: u32 = 31;
pub const CW_MAX: u32 = 1023;
pub const SLOT_TIME_S: f64 = 20e-6;
pub const RETRY_LIMIT: u32 = 7;
pub const SIFS_S: f64 = 10e-6;
pub const DIFS_S: f64 = 50e-6;
/// PLCP preamble and header at the 1 Mbps long-preamble rate.
pub const PHY_OVERHEAD_S: f64 = 192e-6;

/// Which reading of the RTS acceptance test to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RtsMode {
    /// The equality tests exactly as written: `c1 = c + k` for `c` in 1..=6
    /// and `c1 = (c + k) mod 11` for `c` in 7..=11.
    Literal,
    /// Separation tests: `|c1 - c| >= 5` (plus exactly 4 for delay-tolerant).
    Symmetric,
}

impl RtsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RtsMode::Literal => "literal",
            RtsMode::Symmetric => "symmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrafficClass {
    Qos,
    DelayTolerant,
}

impl TrafficClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficClass::Qos => "qos",
            TrafficClass::DelayTolerant => "delay_tolerant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RtsDecision {
    SendCts,
    Defer,
}

impl fmt::Display for RtsDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RtsDecision::SendCts => "SendCts",
            RtsDecision::Defer => "Defer",
        })
    }
}

fn literal_partner(c: u8, offset: u8) -> u8 {
    if c <= 6 {
        c + offset
    } else {
        (c + offset) % 11
    }
}

fn qos_accepts(c1: ChannelId, c: ChannelId, mode: RtsMode) -> bool {
    if c1 == c {
        return false;
    }
    match mode {
        RtsMode::Literal => c1.get() == literal_partner(c.get(), 5),
        RtsMode::Symmetric => separation(c1, c) >= ORTHOGONAL_SEPARATION,
    }
}

fn delay_tolerant_accepts(c1: ChannelId, c: ChannelId, mode: RtsMode) -> bool {
    if c1 == c {
        return false;
    }
    match mode {
        RtsMode::Literal => qos_accepts(c1, c, mode) || c1.get() == literal_partner(c.get(), 4),
        RtsMode::Symmetric => separation(c1, c) >= ORTHOGONAL_SEPARATION - 1,
    }
}

/// Receiver-side RTS check for loss-intolerant traffic. `c1` is the channel
/// the RTS arrived on; `local` holds the channels of the receiver's radios
/// that are already busy. CTS is sent only when every local channel passes.
pub fn handle_rts_qos(c1: ChannelId, local: &[ChannelId], mode: RtsMode) -> RtsDecision {
    if local.iter().all(|&c| qos_accepts(c1, c, mode)) {
        RtsDecision::SendCts
    } else {
        RtsDecision::Defer
    }
}

/// Receiver-side RTS check for delay-tolerant traffic: the qos rule, also
/// admitting a separation of exactly 4.
pub fn handle_rts_delay_tolerant(c1: ChannelId, local: &[ChannelId], mode: RtsMode) -> RtsDecision {
    if local.iter().all(|&c| delay_tolerant_accepts(c1, c, mode)) {
        RtsDecision::SendCts
    } else {
        RtsDecision::Defer
    }
}

pub fn handle_rts(class: TrafficClass, c1: ChannelId, local: &[ChannelId], mode: RtsMode) -> RtsDecision {
    match class {
        TrafficClass::Qos => handle_rts_qos(c1, local, mode),
        TrafficClass::DelayTolerant => handle_rts_delay_tolerant(c1, local, mode),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Rts,
    Cts,
    Data,
    Ack,
    Hello,
    Probe,
    Rreq,
    Rrep,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Rts => "RTS",
            FrameKind::Cts => "CTS",
            FrameKind::Data => "DATA",
            FrameKind::Ack => "ACK",
            FrameKind::Hello => "HELLO",
            FrameKind::Probe => "PROBE",
            FrameKind::Rreq => "RREQ",
            FrameKind::Rrep => "RREP",
        }
    }
}

/// A network-layer frame. `src` and `dst` are the end-to-end addresses; the
/// hop-level receiver lives in [`QueuedFrame::next_hop`].
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub channel: ChannelId,
    pub size_bytes: u32,
    pub flow_id: u32,
    pub seq: u64,
    /// Source transmission time of this copy, carried for end-to-end delay.
    pub sent_at: f64,
    /// Cumulative-RTT advertisement carried by HELLO frames, in ms.
    pub advertised_cum_rtt_ms: f64,
}

impl Frame {
    pub fn control(kind: FrameKind, src: NodeId, dst: NodeId, channel: ChannelId) -> Self {
        let size_bytes = match kind {
            FrameKind::Rts => RTS_BYTES,
            FrameKind::Cts => CTS_BYTES,
            _ => CONTROL_PAYLOAD_BYTES,
        };
        Frame { kind, src, dst, channel, size_bytes, flow_id: 0, seq: 0, sent_at: 0.0, advertised_cum_rtt_ms: 0.0 }
    }
}

/// Arrival, head-of-queue and hand-to-medium instants of a frame, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueTimestamps {
    pub t_i: f64,
    pub t_h: Option<f64>,
    pub t_next: Option<f64>,
}

impl QueueTimestamps {
    pub fn arrived(t_i: f64) -> Self {
        QueueTimestamps { t_i, t_h: None, t_next: None }
    }

    /// A fully stamped triple; `None` when ordering is violated.
    pub fn complete(t_i: f64, t_h: f64, t_next: f64) -> Option<CompleteTimestamps> {
        (t_i <= t_h && t_h <= t_next).then_some(CompleteTimestamps { t_i, t_h, t_next })
    }

    pub fn completed(&self) -> Option<CompleteTimestamps> {
        Self::complete(self.t_i, self.t_h?, self.t_next?)
    }
}

/// Timestamps with all three instants set and `t_i <= t_h <= t_next`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteTimestamps {
    t_i: f64,
    t_h: f64,
    t_next: f64,
}

impl CompleteTimestamps {
    pub fn t_i(&self) -> f64 {
        self.t_i
    }
    pub fn t_h(&self) -> f64 {
        self.t_h
    }
    pub fn t_next(&self) -> f64 {
        self.t_next
    }
    pub fn queue_delay(&self) -> f64 {
        self.t_h - self.t_i
    }
    pub fn contention_delay(&self) -> f64 {
        self.t_next - self.t_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopDelay {
    pub queue: f64,
    pub contention: f64,
    pub transmission: f64,
    pub total: f64,
}

pub fn transmission_delay(size_bytes: u32, rate_bps: f64) -> f64 {
    size_bytes as f64 * 8.0 / rate_bps
}

/// Queue + contention + transmission delay of one hop, in seconds.
pub fn hop_delay(ts: &CompleteTimestamps, size_bytes: u32, rate_bps: f64) -> HopDelay {
    let queue = ts.queue_delay();
    let contention = ts.contention_delay();
    let transmission = transmission_delay(size_bytes, rate_bps);
    HopDelay { queue, contention, transmission, total: queue + contention + transmission }
}

/// `(1 - alpha) * queue_delay + alpha * contention_delay`, in seconds.
pub fn weighted_hop_cost(ts: &CompleteTimestamps, alpha: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    (1.0 - alpha) * ts.queue_delay() + alpha * ts.contention_delay()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackoffOutcome {
    /// Carrier sensed busy.
    Busy,
    /// The receiver vetoed the RTS or never answered it.
    Deferred,
    /// The exchange was corrupted.
    Collision,
    Success,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackoffStep {
    Wait(u32),
    /// Retry limit exceeded: drop the head frame and tell routing.
    Discard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackoffState {
    pub cw: u32,
    pub retries: u32,
    pub slot_time: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
}

impl Default for BackoffState {
    fn default() -> Self {
        BackoffState {
            cw: CW_MIN,
            retries: 0,
            slot_time: SLOT_TIME_S,
            cw_min: CW_MIN,
            cw_max: CW_MAX,
            retry_limit: RETRY_LIMIT,
        }
    }
}

impl BackoffState {
    /// Advances the backoff state machine and returns how many slots to wait.
    ///
    /// A busy medium only freezes the sender: it draws a wait from the current
    /// window without growing it or counting a retry.
    pub fn next<R: Rng + ?Sized>(&mut self, outcome: BackoffOutcome, rng: &mut R) -> BackoffStep {
        match outcome {
            BackoffOutcome::Busy => BackoffStep::Wait(rng.gen_range(0..=self.cw)),
            BackoffOutcome::Deferred | BackoffOutcome::Collision => {
                let wait = rng.gen_range(0..=self.cw);
                self.cw = (2 * self.cw + 1).min(self.cw_max);
                self.retries += 1;
                if self.retries > self.retry_limit {
                    self.reset();
                    BackoffStep::Discard
                } else {
                    BackoffStep::Wait(wait)
                }
            }
            BackoffOutcome::Success => {
                self.reset();
                BackoffStep::Wait(rng.gen_range(0..=self.cw))
            }
        }
    }

    pub fn reset(&mut self) {
        self.cw = self.cw_min;
        self.retries = 0;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MacFault {
    #[error("timestamp moved backwards: {0} after {1}")]
    NonMonotone(String, String),
    #[error("no frame at head of queue")]
    EmptyQueue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    DroppedQueueFull,
}

/// A frame waiting in a radio queue.
#[derive(Debug, Clone, PartialEq)]
pub struct QueuedFrame {
    pub frame: Frame,
    pub ts: QueueTimestamps,
    /// Hop-level receiver; `None` for broadcasts.
    pub next_hop: Option<NodeId>,
    /// Unique id of this copy.
    pub uid: u64,
    /// Set once the receiver holds the frame even though our ACK was lost.
    pub delivered: bool,
    /// Number of failed exchanges so far.
    pub failures: u32,
}

/// State of one radio interface.
#[derive(Debug, Clone)]
pub struct MacRadioState {
    pub channel: ChannelId,
    queue: VecDeque<QueuedFrame>,
    pub backoff: BackoffState,
    pub pcl: PclTable,
    pub drops_queue_full: u64,
}

impl MacRadioState {
    pub fn new(channel: ChannelId) -> Self {
        MacRadioState {
            channel,
            queue: VecDeque::with_capacity(QUEUE_CAPACITY),
            backoff: BackoffState::default(),
            pcl: PclTable::new(),
            drops_queue_full: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn head(&self) -> Option<&QueuedFrame> {
        self.queue.front()
    }

    pub fn head_mut(&mut self) -> Option<&mut QueuedFrame> {
        self.queue.front_mut()
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueuedFrame> {
        self.queue.iter()
    }

    /// Appends a frame, stamping `t_i = now`. A frame arriving at an empty
    /// queue is at the head immediately.
    pub fn enqueue(&mut self, mut frame: Frame, next_hop: Option<NodeId>, uid: u64, now: f64) -> EnqueueOutcome {
        if self.queue.len() >= QUEUE_CAPACITY {
            self.drops_queue_full += 1;
            return EnqueueOutcome::DroppedQueueFull;
        }
        frame.channel = self.channel;
        let mut ts = QueueTimestamps::arrived(now);
        if self.queue.is_empty() {
            ts.t_h = Some(now);
        }
        self.queue.push_back(QueuedFrame { frame, ts, next_hop, uid, delivered: false, failures: 0 });
        EnqueueOutcome::Accepted
    }

    /// Stamps `t_h` on the head frame if it is not stamped yet.
    pub fn advance_to_head(&mut self, now: f64) -> Result<QueueTimestamps, MacFault> {
        let head = self.queue.front_mut().ok_or(MacFault::EmptyQueue)?;
        if head.ts.t_h.is_none() {
            if now < head.ts.t_i {
                return Err(MacFault::NonMonotone(format!("t_h={now}"), format!("t_i={}", head.ts.t_i)));
            }
            head.ts.t_h = Some(now);
        }
        Ok(head.ts)
    }

    /// Stamps `t_next` on the head frame: the instant it goes on the air.
    pub fn release_to_medium(&mut self, now: f64) -> Result<QueueTimestamps, MacFault> {
        let head = self.queue.front_mut().ok_or(MacFault::EmptyQueue)?;
        let t_h = head.ts.t_h.unwrap_or(head.ts.t_i);
        if now < t_h {
            return Err(MacFault::NonMonotone(format!("t_next={now}"), format!("t_h={t_h}")));
        }
        head.ts.t_h = Some(t_h);
        head.ts.t_next = Some(now);
        Ok(head.ts)
    }

    /// Removes the head frame; the next frame (if any) reaches the head now.
    pub fn pop_head(&mut self, now: f64) -> Option<QueuedFrame> {
        let head = self.queue.pop_front();
        if let Some(next) = self.queue.front_mut() {
            if next.ts.t_h.is_none() {
                next.ts.t_h = Some(now.max(next.ts.t_i));
            }
        }
        head
    }
}

/// Airtime of a frame including PHY overhead.
pub fn airtime(size_bytes: u32, rate_bps: f64) -> f64 {
    PHY_OVERHEAD_S + transmission_delay(size_bytes, rate_bps)
}

/// Duration of a full RTS/CTS/DATA/ACK exchange.
pub fn exchange_duration(data_bytes: u32, rate_bps: f64) -> f64 {
    airtime(RTS_BYTES, rate_bps)
        + SIFS_S
        + airtime(CTS_BYTES, rate_bps)
        + SIFS_S
        + airtime(data_bytes, rate_bps)
        + SIFS_S
        + airtime(MAC_ACK_BYTES, rate_bps)
}
