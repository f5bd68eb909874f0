//! Prediction-window labeling and tri-monthly partitioning.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, Utc};

use crate::error::{domain, Error, Result};
use crate::ordinal::{binarize, class_from_flux, BinaryLabel, FlareClass, PeakFlux, ThresholdSpec};

pub fn prediction_window() -> Duration {
    Duration::hours(24)
}

/// Labels an observation with the largest flare in `(obs_time, obs_time + window]`.
pub fn label_window(
    events: &[(DateTime<Utc>, f64)],
    obs_time: DateTime<Utc>,
    window: Duration,
    threshold: ThresholdSpec,
) -> Result<(FlareClass, BinaryLabel)> {
    let end = obs_time + window;
    let mut peak: Option<PeakFlux> = None;
    for &(t, flux) in events {
        let flux = PeakFlux::new(flux)?;
        if t > obs_time && t <= end && peak.is_none_or(|p| flux > p) {
            peak = Some(flux);
        }
    }
    let class = peak.map_or(FlareClass::FQ, class_from_flux);
    Ok((class, binarize(class, threshold)))
}

/// One of the four tri-monthly partitions, 1 through 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition(u8);

impl Partition {
    pub const ALL: [Partition; 4] = [Partition(1), Partition(2), Partition(3), Partition(4)];

    pub fn new(n: u8) -> Result<Self> {
        if (1..=4).contains(&n) {
            Ok(Partition(n))
        } else {
            Err(domain(format!("partition must be 1..=4, got {n}")))
        }
    }

    /// P1: Jan/May/Sep, P2: Feb/Jun/Oct, P3: Mar/Jul/Nov, P4: Apr/Aug/Dec.
    pub fn for_month(month: u32) -> Partition {
        debug_assert!((1..=12).contains(&month));
        Partition(((month - 1) % 4 + 1) as u8)
    }

    pub fn number(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

impl SplitRole {
    pub fn name(self) -> &'static str {
        match self {
            SplitRole::Train => "train",
            SplitRole::Validation => "val",
            SplitRole::Test => "test",
        }
    }
}

impl fmt::Display for SplitRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(SplitRole::Train),
            "val" | "validation" => Ok(SplitRole::Validation),
            "test" => Ok(SplitRole::Test),
            other => Err(Error::Parse(format!("unknown split {other:?}"))),
        }
    }
}

/// Default roles: partitions 1 and 2 train, 3 validates, 4 tests.
pub fn default_role(p: Partition) -> SplitRole {
    match p.0 {
        1 | 2 => SplitRole::Train,
        3 => SplitRole::Validation,
        _ => SplitRole::Test,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    partitions: BTreeMap<u64, Partition>,
}

impl SplitAssignment {
    pub fn partition(&self, region_id: u64) -> Option<Partition> {
        self.partitions.get(&region_id).copied()
    }

    pub fn role(&self, region_id: u64) -> Option<SplitRole> {
        self.partition(region_id).map(default_role)
    }

    pub fn regions(&self) -> impl Iterator<Item = (u64, Partition)> + '_ {
        self.partitions.iter().map(|(&r, &p)| (r, p))
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }
}

/// Assigns every region to the partition of the month it was first observed.
/// Repeated region ids are keyed on their earliest time.
pub fn assign_partitions(regions: &[(u64, DateTime<Utc>)]) -> Result<SplitAssignment> {
    if regions.is_empty() {
        return Err(domain("no regions to partition"));
    }
    let mut first: BTreeMap<u64, DateTime<Utc>> = BTreeMap::new();
    for &(id, t) in regions {
        first
            .entry(id)
            .and_modify(|seen| *seen = (*seen).min(t))
            .or_insert(t);
    }
    let partitions = first
        .into_iter()
        .map(|(id, t)| (id, Partition::for_month(t.month())))
        .collect();
    Ok(SplitAssignment { partitions })
}
