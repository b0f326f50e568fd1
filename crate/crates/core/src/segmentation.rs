//! Growing/Stable by Large/Small portal typology.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::catalog::ContentRecord;
use crate::error::{Error, Result};
use crate::usage::{AnalysisPeriod, DemandCounts};

/// Visit counts per bucket of an analysis period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandSeries {
    pub buckets: Vec<(DateTime<Utc>, u64)>,
    pub period: AnalysisPeriod,
}

impl DemandSeries {
    pub fn from_counts(counts: &DemandCounts, period: AnalysisPeriod) -> Self {
        Self {
            buckets: counts.bucket_starts.iter().copied().zip(counts.visits.iter().copied()).collect(),
            period,
        }
    }

    pub fn counts(&self) -> Vec<u64> {
        self.buckets.iter().map(|&(_, c)| c).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandTrend {
    /// Least-squares slope of visits against bucket index.
    pub slope: f64,
    /// Slope over the mean count; absent when every bucket is zero.
    pub relative_slope: Option<f64>,
}

/// Ordinary least-squares trend of a count series.
pub fn demand_trend(counts: &[u64]) -> Result<DemandTrend> {
    let m = counts.len();
    if m < 2 {
        return Err(Error::Domain(format!("trend needs at least two buckets, got {m}")));
    }
    let x_mean = (m - 1) as f64 / 2.0;
    let y_mean = counts.iter().map(|&c| c as f64).sum::<f64>() / m as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &c) in counts.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (c as f64 - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(DemandTrend {
        slope,
        relative_slope: (y_mean > 0.0).then(|| slope / y_mean),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dynamics {
    Growing,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicsClass {
    /// `None` when the series carries no demand at all.
    pub dynamics: Option<Dynamics>,
    pub declining: bool,
}

pub const DEFAULT_GROWTH_THRESHOLD: f64 = 0.05;

/// Growing iff the relative slope is strictly above `threshold`.
pub fn dynamics_class(relative_slope: Option<f64>, threshold: f64) -> Result<DynamicsClass> {
    if !(threshold > 0.0) {
        return Err(Error::Config(format!("growth threshold must be positive, got {threshold}")));
    }
    Ok(match relative_slope {
        None => DynamicsClass { dynamics: None, declining: false },
        Some(r) if r > threshold => DynamicsClass { dynamics: Some(Dynamics::Growing), declining: false },
        Some(r) => DynamicsClass { dynamics: Some(Dynamics::Stable), declining: r < 0.0 },
    })
}

/// Share of the network's distinct identifiers held by each portal.
///
/// Identifiers published by several portals are counted once in the
/// denominator, so ratios sum to less than one when portals overlap.
pub fn relative_size(records: &[ContentRecord]) -> Result<BTreeMap<String, f64>> {
    let mut per_portal: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut network: BTreeSet<&str> = BTreeSet::new();
    for r in records {
        per_portal.entry(&r.portal_id).or_default().insert(&r.identifier);
        network.insert(&r.identifier);
    }
    if network.is_empty() {
        return Err(Error::Domain("network holds no content".into()));
    }
    let total = network.len() as f64;
    Ok(per_portal
        .into_iter()
        .map(|(p, ids)| (p.to_string(), ids.len() as f64 / total))
        .collect())
}

/// Relative size from per-portal counts assumed disjoint.
pub fn relative_size_from_counts(counts: &BTreeMap<String, u64>) -> Result<BTreeMap<String, f64>> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::Domain("network holds no content".into()));
    }
    Ok(counts.iter().map(|(p, &c)| (p.clone(), c as f64 / total as f64)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Size {
    Large,
    Small,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeClasses {
    pub classes: BTreeMap<String, Size>,
    /// Set when the network has a single portal, which is Large by convention.
    pub single_portal: bool,
}

/// Large iff the ratio is at least the network median (ties go to Large).
pub fn size_class(ratios: &BTreeMap<String, f64>) -> SizeClasses {
    let mut values: Vec<f64> = ratios.values().copied().collect();
    let median = crate::usage::median(&mut values).unwrap_or(0.0);
    SizeClasses {
        classes: ratios
            .iter()
            .map(|(p, &r)| (p.clone(), if r >= median { Size::Large } else { Size::Small }))
            .collect(),
        single_portal: ratios.len() == 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    A,
    B,
    C,
    D,
}

impl Quadrant {
    pub fn of(dynamics: Dynamics, size: Size) -> Self {
        match (dynamics, size) {
            (Dynamics::Growing, Size::Large) => Quadrant::A,
            (Dynamics::Growing, Size::Small) => Quadrant::B,
            (Dynamics::Stable, Size::Large) => Quadrant::C,
            (Dynamics::Stable, Size::Small) => Quadrant::D,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Quadrant::A => "Growing portals with large relative size",
            Quadrant::B => "Growing portals with low relative size",
            Quadrant::C => "Stable portals with large relative size",
            Quadrant::D => "Stable portals with small relative size",
        }
    }

    pub fn all() -> [Quadrant; 4] {
        [Quadrant::A, Quadrant::B, Quadrant::C, Quadrant::D]
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self {
            Quadrant::A => 'a',
            Quadrant::B => 'b',
            Quadrant::C => 'c',
            Quadrant::D => 'd',
        };
        write!(f, "({letter}) {}", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub dynamics: Dynamics,
    pub size: Size,
    pub quadrant: Quadrant,
    pub name: String,
}

/// Places a portal in its quadrant; `None` when dynamics is unresolved.
pub fn segment(dynamics: Option<Dynamics>, size: Size) -> Option<SegmentLabel> {
    let dynamics = dynamics?;
    let quadrant = Quadrant::of(dynamics, size);
    Some(SegmentLabel { dynamics, size, quadrant, name: quadrant.name().to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn trend_examples() {
        let flat = demand_trend(&[10, 10, 10]).unwrap();
        assert_eq!((flat.slope, flat.relative_slope), (0.0, Some(0.0)));

        let line = demand_trend(&[10, 20, 30]).unwrap();
        assert_eq!((line.slope, line.relative_slope), (10.0, Some(0.5)));

        // sum dx*dy = 13, sum dx^2 = 10, mean 8.4
        let noisy = demand_trend(&[5, 9, 6, 12, 10]).unwrap();
        assert!((noisy.slope - 1.3).abs() < 1e-12);
        assert!((noisy.relative_slope.unwrap() - 1.3 / 8.4).abs() < 1e-12);

        assert_eq!(demand_trend(&[0, 0, 0]).unwrap().relative_slope, None);
        assert!(demand_trend(&[4]).is_err());
    }

    #[test]
    fn dynamics_examples() {
        let t = DEFAULT_GROWTH_THRESHOLD;
        assert_eq!(dynamics_class(Some(0.0), t).unwrap().dynamics, Some(Dynamics::Stable));
        assert_eq!(dynamics_class(Some(0.5), t).unwrap().dynamics, Some(Dynamics::Growing));
        let down = dynamics_class(Some(-0.2), t).unwrap();
        assert_eq!((down.dynamics, down.declining), (Some(Dynamics::Stable), true));
        assert_eq!(dynamics_class(None, t).unwrap().dynamics, None);
        assert!(dynamics_class(Some(1.0), 0.0).is_err());
    }

    fn rec(portal: &str, id: &str) -> ContentRecord {
        ContentRecord {
            identifier: id.into(),
            resource_type: "activity".into(),
            topic: "t".into(),
            published: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            portal_id: portal.into(),
        }
    }

    #[test]
    fn relative_size_examples() {
        assert_eq!(relative_size(&[rec("A", "1")]).unwrap()["A"], 1.0);

        let counts = BTreeMap::from([("A".to_string(), 250), ("B".to_string(), 750)]);
        let r = relative_size_from_counts(&counts).unwrap();
        assert_eq!((r["A"], r["B"]), (0.25, 0.75));

        let shared = [rec("A", "1"), rec("A", "2"), rec("B", "2"), rec("B", "3")];
        let r = relative_size(&shared).unwrap();
        assert_eq!((r["A"], r["B"]), (2.0 / 3.0, 2.0 / 3.0));
        assert!(relative_size(&[]).is_err());
    }

    #[test]
    fn size_class_examples() {
        let ratios = |v: &[f64]| -> BTreeMap<String, f64> {
            v.iter().enumerate().map(|(i, &r)| (format!("p{i}"), r)).collect()
        };
        let c = size_class(&ratios(&[0.25, 0.75]));
        assert_eq!((c.classes["p0"], c.classes["p1"]), (Size::Small, Size::Large));

        let c = size_class(&ratios(&[0.2, 0.2, 0.2]));
        assert!(c.classes.values().all(|&s| s == Size::Large));

        let c = size_class(&ratios(&[0.1, 0.2, 0.7]));
        assert_eq!(
            c.classes.values().copied().collect::<Vec<_>>(),
            vec![Size::Small, Size::Large, Size::Large]
        );

        let c = size_class(&ratios(&[1.0]));
        assert!(c.single_portal);
        assert_eq!(c.classes["p0"], Size::Large);
    }

    #[test]
    fn segment_examples() {
        let a = segment(Some(Dynamics::Growing), Size::Large).unwrap();
        assert_eq!(a.quadrant, Quadrant::A);
        assert_eq!(a.name, "Growing portals with large relative size");
        let d = segment(Some(Dynamics::Stable), Size::Small).unwrap();
        assert_eq!(d.name, "Stable portals with small relative size");
        assert_eq!(segment(None, Size::Large), None);
    }
}
