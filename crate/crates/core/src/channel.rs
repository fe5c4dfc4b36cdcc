//! The 2.4 GHz channel plan: separation classes, interference factors and the
//! preferable-channel list (PCL) each node keeps per beacon interval.

use std::fmt;

use thiserror::Error;

/// Number of channels in the 2.4 GHz ISM band plan.
pub const NUM_CHANNELS: u8 = 11;

/// Separation at and beyond which two channels do not interfere.
pub const ORTHOGONAL_SEPARATION: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("channel {0} outside 1..=11")]
pub struct InvalidChannel(pub i64);

/// A channel index in `1..=11`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId(u8);

impl ChannelId {
    pub fn new(id: i64) -> Result<Self, InvalidChannel> {
        if (1..=NUM_CHANNELS as i64).contains(&id) {
            Ok(ChannelId(id as u8))
        } else {
            Err(InvalidChannel(id))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// All eleven channels in ascending order.
    pub fn all() -> impl Iterator<Item = ChannelId> {
        (1..=NUM_CHANNELS).map(ChannelId)
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// How badly two channels overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeparationClass {
    /// Same channel.
    SelfSame,
    /// Separation 1..=3.
    AdjacentSevere,
    /// Separation exactly 4; usable for traffic that tolerates loss.
    PartialAcceptable,
    /// Separation of 5 or more.
    Orthogonal,
}

impl SeparationClass {
    pub fn from_separation(separation: u8) -> Self {
        match separation {
            0 => SeparationClass::SelfSame,
            1..=3 => SeparationClass::AdjacentSevere,
            4 => SeparationClass::PartialAcceptable,
            _ => SeparationClass::Orthogonal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeparationClass::SelfSame => "SelfSame",
            SeparationClass::AdjacentSevere => "AdjacentSevere",
            SeparationClass::PartialAcceptable => "PartialAcceptable",
            SeparationClass::Orthogonal => "Orthogonal",
        }
    }
}

impl fmt::Display for SeparationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Index distance between two channels. The band is linear, so there is no
/// wraparound.
pub fn separation(a: ChannelId, b: ChannelId) -> u8 {
    a.0.abs_diff(b.0)
}

pub fn classify(a: ChannelId, b: ChannelId) -> SeparationClass {
    SeparationClass::from_separation(separation(a, b))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("interference profile must have factor 1 at separation 0")]
    NotUnitAtZero,
    #[error("interference factor {0} at separation {1} outside [0,1]")]
    OutOfRange(f64, usize),
    #[error("interference profile increases between separation {0} and {1}")]
    Increasing(usize, usize),
    #[error("interference profile must be 0 at separation 5 and beyond")]
    NonZeroOrthogonal,
}

/// Interference factor per channel separation (index 0..=10).
///
/// Every profile is nonincreasing, starts at 1 and is exactly 0 for the
/// orthogonal class.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceProfile {
    factors: [f64; NUM_CHANNELS as usize],
}

impl Default for InterferenceProfile {
    /// `max(0, 1 - separation / 5)`.
    fn default() -> Self {
        let mut factors = [0.0; NUM_CHANNELS as usize];
        for (sep, f) in factors.iter_mut().enumerate() {
            *f = (1.0 - sep as f64 / ORTHOGONAL_SEPARATION as f64).max(0.0);
        }
        InterferenceProfile { factors }
    }
}

impl InterferenceProfile {
    /// Builds a profile from factors for separations 0..=4; separations of 5
    /// and more are fixed at 0.
    pub fn from_overlapping(factors: [f64; 5]) -> Result<Self, ProfileError> {
        let mut full = [0.0; NUM_CHANNELS as usize];
        full[..5].copy_from_slice(&factors);
        Self::from_table(full)
    }

    pub fn from_table(factors: [f64; NUM_CHANNELS as usize]) -> Result<Self, ProfileError> {
        if factors[0] != 1.0 {
            return Err(ProfileError::NotUnitAtZero);
        }
        for (sep, &f) in factors.iter().enumerate() {
            if !(0.0..=1.0).contains(&f) {
                return Err(ProfileError::OutOfRange(f, sep));
            }
            if sep > 0 && f > factors[sep - 1] {
                return Err(ProfileError::Increasing(sep - 1, sep));
            }
        }
        if factors[ORTHOGONAL_SEPARATION as usize..].iter().any(|&f| f != 0.0) {
            return Err(ProfileError::NonZeroOrthogonal);
        }
        Ok(InterferenceProfile { factors })
    }

    pub fn factor(&self, a: ChannelId, b: ChannelId) -> f64 {
        self.factors[separation(a, b) as usize]
    }
}

/// Interference factor under the default profile.
pub fn interference_factor(a: ChannelId, b: ChannelId) -> f64 {
    InterferenceProfile::default().factor(a, b)
}

/// Preference level of a channel in a node's PCL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Preference {
    Low,
    Medium,
    High,
}

/// Channel-usage observation fed to [`PclTable::update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PclObservation {
    /// The node itself selected this channel in the current beacon interval.
    SelfSelected(ChannelId),
    /// A neighbor within transmission range took this channel.
    NeighborTook(ChannelId),
    /// A new beacon interval started.
    BeaconRollover,
}

/// Preferable channel list. Every channel has exactly one entry and at most
/// one channel is `High` at any time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PclTable {
    entries: [Preference; NUM_CHANNELS as usize],
    beacon_interval_id: u64,
}

impl Default for PclTable {
    fn default() -> Self {
        PclTable { entries: [Preference::Medium; NUM_CHANNELS as usize], beacon_interval_id: 0 }
    }
}

impl PclTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn preference(&self, ch: ChannelId) -> Preference {
        self.entries[ch.0 as usize - 1]
    }

    pub fn beacon_interval_id(&self) -> u64 {
        self.beacon_interval_id
    }

    pub fn update(&mut self, obs: PclObservation) {
        match obs {
            PclObservation::SelfSelected(ch) => {
                for p in self.entries.iter_mut() {
                    if *p == Preference::High {
                        *p = Preference::Medium;
                    }
                }
                self.entries[ch.0 as usize - 1] = Preference::High;
            }
            PclObservation::NeighborTook(ch) => {
                self.entries[ch.0 as usize - 1] = Preference::Low;
            }
            PclObservation::BeaconRollover => {
                for p in self.entries.iter_mut() {
                    if *p == Preference::High {
                        *p = Preference::Medium;
                    }
                }
                self.beacon_interval_id += 1;
            }
        }
    }

    /// Best-ranked channel; ties go to the lowest channel id.
    pub fn select(&self) -> ChannelId {
        self.select_among(ChannelId::all()).expect("channel set is nonempty")
    }

    /// Best-ranked channel among `candidates`, lowest id on ties.
    pub fn select_among<I>(&self, candidates: I) -> Option<ChannelId>
    where
        I: IntoIterator<Item = ChannelId>,
    {
        let mut best: Option<ChannelId> = None;
        for ch in candidates {
            best = match best {
                None => Some(ch),
                Some(b) => {
                    let (pb, pc) = (self.preference(b), self.preference(ch));
                    if pc > pb || (pc == pb && ch < b) {
                        Some(ch)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best
    }

    /// Clears neighbor-usage marks back to `Medium`, keeping any `High`.
    pub fn clear_neighbor_usage(&mut self) {
        for p in self.entries.iter_mut() {
            if *p == Preference::Low {
                *p = Preference::Medium;
            }
        }
    }

    pub fn high_count(&self) -> usize {
        self.entries.iter().filter(|p| **p == Preference::High).count()
    }
}
