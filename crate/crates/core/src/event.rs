//! Deterministic event queue. Events dispatch in `(time, ordinal)` order, the
//! ordinal being the insertion counter, so equal-time events keep the order
//! they were scheduled in.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

/// Simulation time in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(s: f64) -> Self {
        debug_assert!(s >= 0.0, "negative time {s}");
        SimTime((s * 1e9).round() as u64)
    }

    pub fn from_millis(ms: f64) -> Self {
        Self::from_secs(ms / 1e3)
    }

    pub fn secs(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn millis(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.0 / 1_000_000_000, self.0 % 1_000_000_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event scheduled at {at} before current time {now}")]
pub struct PastEvent {
    pub at: SimTime,
    pub now: SimTime,
}

#[derive(Debug, Clone)]
pub struct SimEvent<A> {
    pub time: SimTime,
    pub ordinal: u64,
    pub action: A,
}

impl<A> PartialEq for SimEvent<A> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.ordinal == other.ordinal
    }
}

impl<A> Eq for SimEvent<A> {}

impl<A> Ord for SimEvent<A> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        (other.time, other.ordinal).cmp(&(self.time, self.ordinal))
    }
}

impl<A> PartialOrd for SimEvent<A> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug)]
pub struct EventQueue<A> {
    heap: BinaryHeap<SimEvent<A>>,
    now: SimTime,
    next_ordinal: u64,
}

impl<A> Default for EventQueue<A> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), now: SimTime::ZERO, next_ordinal: 0 }
    }
}

impl<A> EventQueue<A> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, time: SimTime, action: A) -> Result<u64, PastEvent> {
        if time < self.now {
            return Err(PastEvent { at: time, now: self.now });
        }
        let ordinal = self.next_ordinal;
        self.next_ordinal += 1;
        self.heap.push(SimEvent { time, ordinal, action });
        Ok(ordinal)
    }

    pub fn schedule_in(&mut self, delay: SimTime, action: A) -> u64 {
        let at = self.now + delay;
        self.schedule(at, action).expect("relative schedule is never in the past")
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.time)
    }

    /// Pops the next event if it is due at or before `limit`, advancing the
    /// clock to it.
    pub fn pop_until(&mut self, limit: SimTime) -> Option<SimEvent<A>> {
        if self.heap.peek()?.time > limit {
            return None;
        }
        let ev = self.heap.pop()?;
        self.now = ev.time;
        Some(ev)
    }

    pub fn pop(&mut self) -> Option<SimEvent<A>> {
        self.pop_until(SimTime(u64::MAX))
    }

    /// Dispatches every event with `time <= t_end` in order and returns how
    /// many were handled. The handler may schedule further events.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64, PastEvent>
    where
        F: FnMut(&mut Self, SimEvent<A>),
    {
        if t_end < self.now {
            return Err(PastEvent { at: t_end, now: self.now });
        }
        let mut count = 0;
        while let Some(ev) = self.pop_until(t_end) {
            handler(self, ev);
            count += 1;
        }
        self.now = t_end;
        Ok(count)
    }
}
