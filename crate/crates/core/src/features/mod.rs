//! Normalized state features for the linear value function.
//!
//! Core features are shared by both agents: Targets, Distance, Gamma1,
//! Gamma2 and (optionally) Connectivity. The forward agent can additionally
//! see the hint features Overlap and Perm, computed against a backward
//! trajectory. Every value lies in `[0, 1]`.

mod distance;
mod hints;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use distance::{distance_lower_bound, DistanceTable};
pub use hints::{overlap, perm, BackwardTrajectory, HintIndex};

use crate::board::{packed_count, region_count, Mode, Square, State};
use crate::levels::Level;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Targets,
    Distance,
    Gamma1,
    Gamma2,
    Connectivity,
    Overlap,
    Perm,
}

impl FeatureKind {
    /// Canonical order; vectors and weight files list features in this order.
    pub const ALL: [FeatureKind; 7] = [
        FeatureKind::Targets,
        FeatureKind::Distance,
        FeatureKind::Gamma1,
        FeatureKind::Gamma2,
        FeatureKind::Connectivity,
        FeatureKind::Overlap,
        FeatureKind::Perm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Targets => "Targets",
            FeatureKind::Distance => "Distance",
            FeatureKind::Gamma1 => "Gamma1",
            FeatureKind::Gamma2 => "Gamma2",
            FeatureKind::Connectivity => "Connectivity",
            FeatureKind::Overlap => "Overlap",
            FeatureKind::Perm => "Perm",
        }
    }

    pub fn is_hint(self) -> bool {
        matches!(self, FeatureKind::Overlap | FeatureKind::Perm)
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown feature name {0:?}")]
pub struct UnknownFeature(pub String);

impl FromStr for FeatureKind {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownFeature(s.to_string()))
    }
}

/// A set of enabled features, iterated in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FeatureSet(u8);

impl FeatureSet {
    pub const EMPTY: FeatureSet = FeatureSet(0);

    pub fn core() -> FeatureSet {
        [
            FeatureKind::Targets,
            FeatureKind::Distance,
            FeatureKind::Gamma1,
            FeatureKind::Gamma2,
        ]
        .into_iter()
        .collect()
    }

    pub fn all() -> FeatureSet {
        FeatureKind::ALL.into_iter().collect()
    }

    /// Core features plus the three optional ones as requested.
    pub fn with_options(overlap: bool, perm: bool, connectivity: bool) -> FeatureSet {
        let mut set = FeatureSet::core();
        set.set(FeatureKind::Overlap, overlap);
        set.set(FeatureKind::Perm, perm);
        set.set(FeatureKind::Connectivity, connectivity);
        set
    }

    pub fn contains(self, kind: FeatureKind) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn set(&mut self, kind: FeatureKind, on: bool) {
        if on {
            self.0 |= kind.bit();
        } else {
            self.0 &= !kind.bit();
        }
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn has_hints(self) -> bool {
        self.contains(FeatureKind::Overlap) || self.contains(FeatureKind::Perm)
    }

    /// The same set with hint features removed (what the backward agent uses).
    pub fn without_hints(mut self) -> FeatureSet {
        self.set(FeatureKind::Overlap, false);
        self.set(FeatureKind::Perm, false);
        self
    }

    pub fn iter(self) -> impl Iterator<Item = FeatureKind> {
        FeatureKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }

    /// Position of `kind` within vectors over this set.
    pub fn index_of(self, kind: FeatureKind) -> Option<usize> {
        self.contains(kind)
            .then(|| (self.0 & (kind.bit() - 1)).count_ones() as usize)
    }
}

impl FromIterator<FeatureKind> for FeatureSet {
    fn from_iter<I: IntoIterator<Item = FeatureKind>>(iter: I) -> Self {
        let mut set = FeatureSet::EMPTY;
        for k in iter {
            set.set(k, true);
        }
        set
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(FeatureKind::name).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for FeatureSet {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect()
    }
}

pub const MAX_FEATURES: usize = FeatureKind::ALL.len();

/// Feature values over one [`FeatureSet`], in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    set: FeatureSet,
    values: [f64; MAX_FEATURES],
}

impl FeatureVector {
    pub fn zeros(set: FeatureSet) -> FeatureVector {
        FeatureVector {
            set,
            values: [0.0; MAX_FEATURES],
        }
    }

    /// Builds a vector from values listed in the set's canonical order.
    pub fn from_values(set: FeatureSet, values: &[f64]) -> FeatureVector {
        assert_eq!(values.len(), set.len(), "one value per enabled feature");
        let mut v = FeatureVector::zeros(set);
        v.values[..values.len()].copy_from_slice(values);
        v
    }

    pub fn set(&self) -> FeatureSet {
        self.set
    }

    pub fn values(&self) -> &[f64] {
        &self.values[..self.set.len()]
    }

    pub fn get(&self, kind: FeatureKind) -> Option<f64> {
        self.set.index_of(kind).map(|i| self.values[i])
    }

    fn put(&mut self, kind: FeatureKind, value: f64) {
        if let Some(i) = self.set.index_of(kind) {
            self.values[i] = value;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureKind, f64)> + '_ {
        self.set.iter().zip(self.values().iter().copied())
    }

    pub fn norm_squared(&self) -> f64 {
        self.values().iter().map(|v| v * v).sum()
    }
}

/// Which features are computed and the shared discount factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureConfig {
    pub set: FeatureSet,
    pub gamma: f64,
}

impl FeatureConfig {
    pub const DEFAULT_GAMMA: f64 = 0.95;

    pub fn new(set: FeatureSet) -> Self {
        FeatureConfig {
            set,
            gamma: Self::DEFAULT_GAMMA,
        }
    }
}

pub fn targets_feature(level: &Level, boxes: &[Square]) -> f64 {
    fraction(packed_count(level, boxes), boxes.len())
}

pub fn gamma1(level: &Level, gamma: f64) -> f64 {
    gamma.powi(level.box_count() as i32)
}

/// Forward: `gamma^(boxes - packed)`. Backward: the packed count is replaced
/// by the unpacked count, giving `gamma^packed`.
pub fn gamma2(level: &Level, boxes: &[Square], gamma: f64, mode: Mode) -> f64 {
    let packed = packed_count(level, boxes);
    let exponent = match mode {
        Mode::Forward => boxes.len() - packed,
        Mode::Backward => packed,
    };
    gamma.powi(exponent as i32)
}

/// Distance normalized by `boxes * (width + height)`, clamped to 1. An
/// unbounded distance maps to 1.
pub fn normalize_distance(level: &Level, raw: Option<u32>) -> f64 {
    let n = level.box_count();
    match raw {
        None => 1.0,
        Some(_) if n == 0 => 0.0,
        Some(d) => (d as f64 / (n * (level.width() + level.height())) as f64).min(1.0),
    }
}

/// `(regions - 1) / max(1, floor / 4)`, clamped to `[0, 1]`.
pub fn normalize_connectivity(level: &Level, regions: usize) -> f64 {
    let scale = (level.floor().len() as f64 / 4.0).max(1.0);
    (regions.saturating_sub(1) as f64 / scale).clamp(0.0, 1.0)
}

/// Connectivity feature of a state, normalized; see [`region_count`] for the
/// raw count.
pub fn connectivity(level: &Level, state: &State) -> f64 {
    normalize_connectivity(level, region_count(level, state.boxes()))
}

fn fraction(count: usize, boxes: usize) -> f64 {
    if boxes == 0 {
        1.0
    } else {
        count as f64 / boxes as f64
    }
}

/// Raw measurements a vector is assembled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFeatures {
    pub packed: usize,
    /// Matching lower bound; `None` when unbounded.
    pub distance: Option<u32>,
    pub regions: usize,
    pub overlap: usize,
    pub perm_prefix: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extracted {
    pub vector: FeatureVector,
    pub raw: RawFeatures,
}

impl Extracted {
    /// An unbounded Distance marks a dead state; callers prune it.
    pub fn is_dead(&self) -> bool {
        self.raw.distance.is_none()
    }
}

/// Assembles a normalized vector from raw measurements.
pub fn assemble(level: &Level, config: &FeatureConfig, mode: Mode, raw: &RawFeatures) -> FeatureVector {
    let n = level.box_count();
    let mut v = FeatureVector::zeros(config.set);
    v.put(FeatureKind::Targets, fraction(raw.packed, n));
    v.put(FeatureKind::Distance, normalize_distance(level, raw.distance));
    v.put(FeatureKind::Gamma1, config.gamma.powi(n as i32));
    let exponent = match mode {
        Mode::Forward => n - raw.packed,
        Mode::Backward => raw.packed,
    };
    v.put(FeatureKind::Gamma2, config.gamma.powi(exponent as i32));
    v.put(FeatureKind::Connectivity, normalize_connectivity(level, raw.regions));
    v.put(FeatureKind::Overlap, fraction(raw.overlap, n));
    v.put(FeatureKind::Perm, fraction(raw.perm_prefix, n));
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("hint features are enabled but no backward trajectory was given")]
    MissingTrajectory,
    #[error("hint features only apply to forward states")]
    HintsInBackwardMode,
}

/// Computes the enabled features of a state from scratch.
pub fn extract(
    level: &Level,
    table: &DistanceTable,
    state: &State,
    mode: Mode,
    trajectory: Option<&BackwardTrajectory>,
    config: &FeatureConfig,
) -> Result<Extracted, FeatureError> {
    if config.set.has_hints() {
        if mode == Mode::Backward {
            return Err(FeatureError::HintsInBackwardMode);
        }
        if trajectory.is_none() {
            return Err(FeatureError::MissingTrajectory);
        }
    }
    let boxes = state.boxes();
    let (overlap_count, perm_prefix) = match trajectory.filter(|_| config.set.has_hints()) {
        Some(t) => {
            let idx = HintIndex::new(level, t);
            (idx.max_overlap(boxes) as usize, idx.perm_prefix(boxes))
        }
        None => (0, 0),
    };
    let raw = RawFeatures {
        packed: packed_count(level, boxes),
        distance: distance_lower_bound(state, table),
        regions: region_count(level, boxes),
        overlap: overlap_count,
        perm_prefix,
    };
    Ok(Extracted {
        vector: assemble(level, config, mode, &raw),
        raw,
    })
}
