//! Per-slot inter-node distances and the coverage-window timeline.
//!
//! Geometry is quasi-static within a slot: every link carries exactly one
//! distance per slot. Distances come either from explicit tables or from a
//! circular-orbit parametrization (chord length between co-orbital
//! satellites, slant range from a satellite to the ground).

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Satellite,
    Ground,
}

/// A node of the constellation. Satellite 0 is `S_k`, satellite 1 is `S_l`;
/// ground node 0 is `U_k`, ground node 1 is `U_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: u32,
}

impl NodeId {
    pub const S_K: NodeId = NodeId::satellite(0);
    pub const S_L: NodeId = NodeId::satellite(1);
    pub const U_K: NodeId = NodeId::ground(0);
    pub const U_L: NodeId = NodeId::ground(1);

    pub const fn satellite(index: u32) -> Self {
        Self {
            kind: NodeKind::Satellite,
            index,
        }
    }

    pub const fn ground(index: u32) -> Self {
        Self {
            kind: NodeKind::Ground,
            index,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Satellite => write!(f, "S{}", self.index),
            NodeKind::Ground => write!(f, "U{}", self.index),
        }
    }
}

impl std::str::FromStr for NodeId {
    type Err = Error;

    /// Accepts `S0`/`S1`/`U0`/`U1` style labels as well as the aliases
    /// `S_k`, `S_l`, `U_k`, `U_l`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S_k" => return Ok(Self::S_K),
            "S_l" => return Ok(Self::S_L),
            "U_k" => return Ok(Self::U_K),
            "U_l" => return Ok(Self::U_L),
            _ => {}
        }
        let bad = || Error::Config(format!("unrecognized node label `{s}`"));
        let (kind, rest) = match s.chars().next() {
            Some('S') => (NodeKind::Satellite, &s[1..]),
            Some('U') => (NodeKind::Ground, &s[1..]),
            _ => return Err(bad()),
        };
        let index = rest.parse::<u32>().map_err(|_| bad())?;
        Ok(Self { kind, index })
    }
}

/// Slot structure of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timeline {
    slot_duration: f64,
    coverage_window: f64,
    horizon_slots: usize,
}

impl Timeline {
    pub fn new(slot_duration: f64, coverage_window: f64, horizon_slots: usize) -> Result<Self> {
        if !(slot_duration > 0.0 && slot_duration.is_finite()) {
            return Err(Error::Validation {
                field: "timeline.slot_s".into(),
                reason: format!("must be positive, got {slot_duration}"),
            });
        }
        if !(coverage_window >= slot_duration && coverage_window.is_finite()) {
            return Err(Error::Validation {
                field: "timeline.coverage_s".into(),
                reason: format!(
                    "coverage window {coverage_window} s must be at least one slot ({slot_duration} s)"
                ),
            });
        }
        if horizon_slots == 0 {
            return Err(Error::Validation {
                field: "timeline.horizon".into(),
                reason: "horizon must contain at least one slot".into(),
            });
        }
        Ok(Self {
            slot_duration,
            coverage_window,
            horizon_slots,
        })
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn coverage_window(&self) -> f64 {
        self.coverage_window
    }

    pub fn horizon_slots(&self) -> usize {
        self.horizon_slots
    }

    pub fn check_slot(&self, t: usize) -> Result<()> {
        if t < self.horizon_slots {
            Ok(())
        } else {
            Err(Error::SlotRange {
                slot: t,
                horizon: self.horizon_slots,
            })
        }
    }

    /// Index of the coverage window containing the start of slot `t`.
    pub fn window_of(&self, t: usize) -> usize {
        let x = t as f64 * self.slot_duration / self.coverage_window;
        // absorb rounding of products such as 3 * 0.1
        (x + 1e-9).floor() as usize
    }
}

/// Region-to-satellite association in force during a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Association {
    /// Satellite serving region `A_k`.
    pub region_k: NodeId,
    /// Satellite serving region `A_l`.
    pub region_l: NodeId,
}

impl fmt::Display for Association {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |n: NodeId| if n == NodeId::S_K { "S_k" } else { "S_l" };
        write!(f, "A_k={};A_l={}", name(self.region_k), name(self.region_l))
    }
}

/// Serving satellites for slot `t`. The pair swaps at every multiple of the
/// coverage window.
pub fn handover_map(timeline: &Timeline, t: usize) -> Result<Association> {
    timeline.check_slot(t)?;
    let assoc = if timeline.window_of(t).is_multiple_of(2) {
        Association {
            region_k: NodeId::S_K,
            region_l: NodeId::S_L,
        }
    } else {
        Association {
            region_k: NodeId::S_L,
            region_l: NodeId::S_K,
        }
    };
    Ok(assoc)
}

/// Chord length between two satellites on the same circular orbit.
pub fn chord_distance(altitude_m: f64, separation_rad: f64) -> f64 {
    2.0 * (EARTH_RADIUS_M + altitude_m) * (separation_rad / 2.0).sin()
}

/// Slant range from a ground point to a satellite seen at `elevation_rad`.
pub fn slant_range(altitude_m: f64, elevation_rad: f64) -> f64 {
    let r = EARTH_RADIUS_M;
    let orbit = r + altitude_m;
    let (s, c) = elevation_rad.sin_cos();
    (orbit * orbit - r * r * c * c).sqrt() - r * s
}

/// How a link's per-slot distance is obtained. Per-slot vectors hold either
/// a single value (constant over the run) or one value per slot.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceSource {
    Explicit { meters: Vec<f64> },
    Chord { altitude_m: f64, separation_rad: Vec<f64> },
    Slant { altitude_m: f64, elevation_rad: Vec<f64> },
}

impl DistanceSource {
    fn len(&self) -> usize {
        match self {
            DistanceSource::Explicit { meters } => meters.len(),
            DistanceSource::Chord { separation_rad, .. } => separation_rad.len(),
            DistanceSource::Slant { elevation_rad, .. } => elevation_rad.len(),
        }
    }

    fn at(&self, t: usize) -> Option<f64> {
        let pick = |v: &Vec<f64>| match v.len() {
            1 => v.first().copied(),
            _ => v.get(t).copied(),
        };
        match self {
            DistanceSource::Explicit { meters } => pick(meters),
            DistanceSource::Chord {
                altitude_m,
                separation_rad,
            } => pick(separation_rad).map(|s| chord_distance(*altitude_m, s)),
            DistanceSource::Slant {
                altitude_m,
                elevation_rad,
            } => pick(elevation_rad).map(|e| slant_range(*altitude_m, e)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkDescription {
    pub a: NodeId,
    pub b: NodeId,
    pub source: DistanceSource,
}

/// Declarative constellation geometry: the links of interest and how their
/// distances evolve over the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationDescription {
    pub horizon_slots: usize,
    pub links: Vec<LinkDescription>,
}

fn pair_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Distances for every (unordered) node pair and slot. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryTrack {
    horizon_slots: usize,
    distances: BTreeMap<(NodeId, NodeId), Vec<f64>>,
}

impl GeometryTrack {
    pub fn horizon_slots(&self) -> usize {
        self.horizon_slots
    }

    pub fn distance(&self, a: NodeId, b: NodeId, t: usize) -> Result<f64> {
        self.distances
            .get(&pair_key(a, b))
            .and_then(|v| v.get(t).copied())
            .ok_or_else(|| Error::Config(format!("no distance for link {a}-{b} at slot {t}")))
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.distances.keys().copied()
    }
}

/// Resolves the description into a complete track. Every pair in `required`
/// must be present for every slot of the horizon.
pub fn build_track(
    config: &ConstellationDescription,
    required: &[(NodeId, NodeId)],
) -> Result<GeometryTrack> {
    let horizon = config.horizon_slots;
    let mut distances = BTreeMap::new();
    for link in &config.links {
        if link.a == link.b {
            return Err(Error::Config(format!("link {}-{} joins a node to itself", link.a, link.b)));
        }
        let key = pair_key(link.a, link.b);
        if distances.contains_key(&key) {
            return Err(Error::Config(format!("link {}-{} described twice", link.a, link.b)));
        }
        let len = link.source.len();
        if len != 1 && len < horizon {
            return Err(Error::Config(format!(
                "link {}-{} has no entry for slot {} (got {len} values for a {horizon}-slot horizon)",
                link.a, link.b, len
            )));
        }
        let mut per_slot = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let d = link.source.at(t).ok_or_else(|| {
                Error::Config(format!("link {}-{} has no entry for slot {t}", link.a, link.b))
            })?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!(
                    "link {}-{} at slot {t}: distance must be positive, got {d} m",
                    link.a, link.b
                )));
            }
            per_slot.push(d);
        }
        distances.insert(key, per_slot);
    }
    for &(a, b) in required {
        if !distances.contains_key(&pair_key(a, b)) {
            return Err(Error::Config(format!("missing link {a}-{b} at slot 0")));
        }
    }
    Ok(GeometryTrack {
        horizon_slots: horizon,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chord_track(sep_deg: f64) -> Result<GeometryTrack> {
        let cfg = ConstellationDescription {
            horizon_slots: 1,
            links: vec![LinkDescription {
                a: NodeId::S_K,
                b: NodeId::S_L,
                source: DistanceSource::Chord {
                    altitude_m: 550e3,
                    separation_rad: vec![sep_deg.to_radians()],
                },
            }],
        };
        build_track(&cfg, &[(NodeId::S_K, NodeId::S_L)])
    }

    #[test]
    fn chord_matches_hand_arithmetic() {
        let track = chord_track(6.26).unwrap();
        let d = track.distance(NodeId::S_K, NodeId::S_L, 0).unwrap();
        let expected = 2.0 * 6_921_000.0 * (3.13f64).to_radians().sin();
        assert!((d - expected).abs() < 1e-6);
        assert!((d / 1e3 - 756.0).abs() < 1.0, "{d}");
        // stated range for 4.5..10 degree separations
        for sep in [4.5, 10.0] {
            let d = chord_distance(550e3, f64::to_radians(sep)) / 1e3;
            assert!((500.0..1300.0).contains(&d), "{sep} -> {d}");
        }
    }

    #[test]
    fn zero_separation_is_rejected() {
        let err = chord_track(0.0).unwrap_err();
        assert!(err.to_string().contains("S0-S1"), "{err}");
    }

    #[test]
    fn explicit_distance_passthrough() {
        let cfg = ConstellationDescription {
            horizon_slots: 3,
            links: vec![LinkDescription {
                a: NodeId::S_L,
                b: NodeId::S_K,
                source: DistanceSource::Explicit {
                    meters: vec![800e3],
                },
            }],
        };
        let track = build_track(&cfg, &[(NodeId::S_K, NodeId::S_L)]).unwrap();
        for t in 0..3 {
            assert_eq!(track.distance(NodeId::S_K, NodeId::S_L, t).unwrap(), 800e3);
            assert_eq!(track.distance(NodeId::S_L, NodeId::S_K, t).unwrap(), 800e3);
        }
    }

    #[test]
    fn missing_slot_names_pair_and_slot() {
        let cfg = ConstellationDescription {
            horizon_slots: 4,
            links: vec![LinkDescription {
                a: NodeId::S_K,
                b: NodeId::S_L,
                source: DistanceSource::Explicit {
                    meters: vec![800e3, 810e3],
                },
            }],
        };
        let err = build_track(&cfg, &[]).unwrap_err().to_string();
        assert!(err.contains("S0-S1") && err.contains("slot 2"), "{err}");

        let cfg = ConstellationDescription {
            horizon_slots: 1,
            links: vec![],
        };
        let err = build_track(&cfg, &[(NodeId::S_L, NodeId::U_K)]).unwrap_err().to_string();
        assert!(err.contains("S1-U0"), "{err}");
    }

    #[test]
    fn slant_range_limits() {
        // zenith: slant range equals altitude
        assert!((slant_range(550e3, std::f64::consts::FRAC_PI_2) - 550e3).abs() < 1e-6);
        let low = slant_range(550e3, 20f64.to_radians());
        let high = slant_range(550e3, 60f64.to_radians());
        assert!(low > high && high > 550e3);
    }

    #[test]
    fn handover_swaps_each_window() {
        let tl = Timeline::new(1.0, 10.0, 40).unwrap();
        let first = handover_map(&tl, 0).unwrap();
        assert_eq!(first.region_k, NodeId::S_K);
        assert_eq!(first.region_l, NodeId::S_L);
        let second = handover_map(&tl, 10).unwrap();
        assert_eq!(second.region_k, NodeId::S_L);
        assert_eq!(second.region_l, NodeId::S_K);
        assert_eq!(handover_map(&tl, 9).unwrap(), first);
        assert!(matches!(handover_map(&tl, 40), Err(Error::SlotRange { .. })));
    }

    #[test]
    fn handover_constant_within_single_window() {
        let tl = Timeline::new(0.1, 2.5, 25).unwrap();
        let a0 = handover_map(&tl, 0).unwrap();
        for t in 0..25 {
            assert_eq!(handover_map(&tl, t).unwrap(), a0);
        }
    }

    #[test]
    fn timeline_validation() {
        assert!(Timeline::new(0.0, 1.0, 1).is_err());
        assert!(Timeline::new(2.0, 1.0, 1).is_err());
        assert!(Timeline::new(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn node_labels_parse() {
        assert_eq!("S_l".parse::<NodeId>().unwrap(), NodeId::S_L);
        assert_eq!("U1".parse::<NodeId>().unwrap(), NodeId::U_L);
        assert!("X3".parse::<NodeId>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn chord_monotone_in_separation(h in 300e3..1500e3f64, sep in 0.01f64..179.0) {
                let full = chord_distance(h, sep.to_radians());
                let half = chord_distance(h, (sep / 2.0).to_radians());
                prop_assert!(half < full);
            }

            #[test]
            fn handover_period_two_windows(slots_per_window in 1usize..20, t in 0usize..200) {
                let tl = Timeline::new(1.0, slots_per_window as f64, 1000).unwrap();
                let p = 2 * slots_per_window;
                prop_assert_eq!(handover_map(&tl, t).unwrap(), handover_map(&tl, t + p).unwrap());
            }
        }
    }
}
