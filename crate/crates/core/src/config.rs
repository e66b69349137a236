//! Scenario file schema (TOML) and its resolution into a [`Scenario`].
//!
//! All dB quantities are converted to linear units here and nowhere else.

use std::path::Path;

use serde::Deserialize;

use crate::analytics::{CrossExponent, SeriesControls};
use crate::channel::{FadingLaw, RicianParams};
use crate::error::{Error, Result};
use crate::geometry::{
    build_track, ConstellationDescription, DistanceSource, LinkDescription, NodeId, NodeKind,
    Timeline,
};
use crate::linkbudget::{db_to_linear, dbm_to_watts, dbw_to_watts, RfConstants};
use crate::montecarlo::{Tolerance, TrialPlan};
use crate::scenario::{Interference, Scenario};
use crate::scheduler::{FdThroughput, Scheme};

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRUNCATION: u32 = 20;

/// A scalar or a per-slot list.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PerSlot<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> PerSlot<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            PerSlot::One(v) => vec![v.clone()],
            PerSlot::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub rf: RfSection,
    pub fading: FadingSection,
    pub nodes: Option<NodesSection>,
    pub links: LinksSection,
    pub geometry: GeometrySection,
    pub interference: InterferenceSection,
    pub backlogs: BacklogSection,
    pub timeline: TimelineSection,
    pub schemes: Option<SchemesSection>,
    pub series: Option<SeriesSection>,
    pub montecarlo: Option<MonteCarloSection>,
    pub analysis: Option<AnalysisSection>,
    pub tolerance: Option<ToleranceSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfSection {
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingSection {
    /// `"rician"` (default) or `"nakagami"`.
    pub law: Option<String>,
    pub mu_abs: Option<f64>,
    pub sigma_g_sq: Option<f64>,
    pub nakagami_m: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodesSection {
    pub satellites: Vec<String>,
    pub users: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinksSection {
    /// Transmit and receive antenna gains of the ISL.
    pub isl_gains_dbi: [f64; 2],
    /// Transmit and receive antenna gains of the satellite-to-ground links.
    pub sgl_gains_dbi: [f64; 2],
    /// Per-node transmit power `P`.
    pub power_dbw: f64,
    /// Residual self-interference at a full-duplex ISL receiver; absent
    /// means ideal cancellation.
    pub rsi_dbm: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub links: Vec<GeometryLink>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryLink {
    pub a: String,
    pub b: String,
    pub distance_km: Option<PerSlot<f64>>,
    pub altitude_km: Option<f64>,
    /// Angular separation of two co-orbital satellites.
    pub separation_deg: Option<PerSlot<f64>>,
    /// Elevation of the satellite seen from the ground node.
    pub elevation_deg: Option<PerSlot<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceSection {
    /// Interferers heard by `S_k` (they hit flow L's ISL).
    pub s_k: InterfererSpec,
    /// Interferers heard by `S_l` (they hit flow K's ISL).
    pub s_l: InterfererSpec,
}

/// Exactly one of: a constant explicit list, explicit per-slot lists, or a
/// count with a dB range from which a uniform grid is generated.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererSpec {
    pub snr_db: Option<Vec<f64>>,
    pub per_slot_snr_db: Option<Vec<Vec<f64>>>,
    pub count: Option<PerSlot<u32>>,
    pub range_db: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacklogSection {
    /// `Q_{S_k -> U_k}` in bits per slot; `inf` for an unlimited queue.
    pub flow_k_bits: PerSlot<f64>,
    pub flow_l_bits: PerSlot<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineSection {
    pub slot_s: f64,
    pub coverage_s: Option<f64>,
    pub horizon: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemesSection {
    pub list: Option<Vec<String>>,
    /// `"relay-half-duplex"` (default) or `"full-prelog"`.
    pub fd_throughput: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    #[serde(rename = "M")]
    pub m: Option<u32>,
    pub term_tolerance: Option<f64>,
    /// `"sum"` (default) or `"product"`.
    pub exponent: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Slots averaged by power sweeps and used by threshold sweeps (first
    /// entry). Defaults to the whole horizon.
    pub eval_slots: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSection {
    pub abs_tol: Option<f64>,
    pub sigma_mult: Option<f64>,
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

/// Expands a per-slot vector of length 1 or `horizon` to exactly `horizon`.
fn per_slot<T: Clone>(field: &str, v: Vec<T>, horizon: usize) -> Result<Vec<T>> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); horizon]),
        n if n == horizon => Ok(v),
        n => Err(invalid(
            field,
            format!("needs 1 or {horizon} entries (one per slot), got {n}"),
        )),
    }
}

/// Mean SNRs in dB of `n` interferers spread uniformly over `[lo, hi]`: the
/// midpoints of `n` equal cells.
pub fn interferer_grid_db(n: u32, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
        .collect()
}

fn resolve_interference(field: &str, spec: &InterfererSpec, horizon: usize) -> Result<Interference> {
    let modes = [
        spec.snr_db.is_some(),
        spec.per_slot_snr_db.is_some(),
        spec.count.is_some(),
    ]
    .iter()
    .filter(|m| **m)
    .count();
    if modes != 1 {
        return Err(invalid(
            field,
            "give exactly one of snr_db, per_slot_snr_db or count + range_db",
        ));
    }
    if spec.range_db.is_some() && spec.count.is_none() {
        return Err(invalid(field, "range_db requires count"));
    }
    let db_lists: Vec<Vec<f64>> = if let Some(list) = &spec.snr_db {
        vec![list.clone(); horizon]
    } else if let Some(lists) = &spec.per_slot_snr_db {
        per_slot(&format!("{field}.per_slot_snr_db"), lists.clone(), horizon)?
    } else {
        let counts = per_slot(
            &format!("{field}.count"),
            spec.count.as_ref().expect("checked").to_vec(),
            horizon,
        )?;
        let [lo, hi] = spec
            .range_db
            .ok_or_else(|| invalid(&format!("{field}.range_db"), "required with count"))?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(invalid(&format!("{field}.range_db"), "must be a finite [low, high] pair"));
        }
        counts.iter().map(|&n| interferer_grid_db(n, lo, hi)).collect()
    };
    let mut per_slot_linear = Vec::with_capacity(horizon);
    for list in db_lists {
        let mut lin = Vec::with_capacity(list.len());
        for db in list {
            lin.push(db_to_linear(finite(field, db)?));
        }
        per_slot_linear.push(lin);
    }
    Ok(Interference::new(per_slot_linear))
}

fn node(field: &str, name: &str) -> Result<NodeId> {
    name.parse()
        .map_err(|_| invalid(field, format!("unknown node {name:?}")))
}

fn resolve_geometry(section: &GeometrySection, horizon: usize, nodes: Option<&NodesSection>) -> Result<ConstellationDescription> {
    let declared: Option<Vec<NodeId>> = match nodes {
        None => None,
        Some(n) => {
            let mut all = Vec::new();
            for s in &n.satellites {
                let id = node("nodes.satellites", s)?;
                if id.kind != NodeKind::Satellite {
                    return Err(invalid("nodes.satellites", format!("{s} is not a satellite")));
                }
                all.push(id);
            }
            for u in &n.users {
                let id = node("nodes.users", u)?;
                if id.kind != NodeKind::Ground {
                    return Err(invalid("nodes.users", format!("{u} is not a ground node")));
                }
                all.push(id);
            }
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != all.len() {
                return Err(invalid("nodes", "node listed twice"));
            }
            Some(all)
        }
    };
    let mut links = Vec::new();
    for (i, l) in section.links.iter().enumerate() {
        let field = format!("geometry.links[{i}]");
        let a = node(&field, &l.a)?;
        let b = node(&field, &l.b)?;
        if let Some(d) = &declared {
            for n in [a, b] {
                if !d.contains(&n) {
                    return Err(invalid(&field, format!("node {n} is not declared in [nodes]")));
                }
            }
        }
        let source = match (&l.distance_km, l.altitude_km, &l.separation_deg, &l.elevation_deg) {
            (Some(d), None, None, None) => DistanceSource::Explicit {
                meters: d.to_vec().iter().map(|km| km * 1e3).collect(),
            },
            (None, Some(h), Some(sep), None) => DistanceSource::Chord {
                altitude_m: positive(&format!("{field}.altitude_km"), h)? * 1e3,
                separation_rad: sep.to_vec().iter().map(|d| d.to_radians()).collect(),
            },
            (None, Some(h), None, Some(el)) => DistanceSource::Slant {
                altitude_m: positive(&format!("{field}.altitude_km"), h)? * 1e3,
                elevation_rad: el.to_vec().iter().map(|d| d.to_radians()).collect(),
            },
            _ => {
                return Err(invalid(
                    &field,
                    "give distance_km, or altitude_km with separation_deg or elevation_deg",
                ))
            }
        };
        links.push(LinkDescription { a, b, source });
    }
    Ok(ConstellationDescription {
        horizon_slots: horizon,
        links,
    })
}

fn parse_exponent(s: &str) -> Result<CrossExponent> {
    match s {
        "sum" => Ok(CrossExponent::Sum),
        "product" => Ok(CrossExponent::Product),
        other => Err(invalid("series.exponent", format!("expected \"sum\" or \"product\", got {other:?}"))),
    }
}

fn parse_fd_throughput(s: &str) -> Result<FdThroughput> {
    match s {
        "relay-half-duplex" => Ok(FdThroughput::RelayHalfDuplex),
        "full-prelog" => Ok(FdThroughput::FullPrelog),
        other => Err(invalid(
            "schemes.fd_throughput",
            format!("expected \"relay-half-duplex\" or \"full-prelog\", got {other:?}"),
        )),
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let rf = RfConstants {
            carrier_frequency: positive("rf.frequency_hz", self.rf.frequency_hz)?,
            bandwidth: positive("rf.bandwidth_hz", self.rf.bandwidth_hz)?,
        };
        let noise_power = dbm_to_watts(finite("rf.noise_dbm", self.rf.noise_dbm)?);

        let fading = match self.fading.law.as_deref().unwrap_or("rician") {
            "rician" => {
                let mu = self
                    .fading
                    .mu_abs
                    .ok_or_else(|| invalid("fading.mu_abs", "required for Rician fading"))?;
                let s2 = self
                    .fading
                    .sigma_g_sq
                    .ok_or_else(|| invalid("fading.sigma_g_sq", "required for Rician fading"))?;
                FadingLaw::Rician(RicianParams::new(mu, s2)?)
            }
            "nakagami" => {
                let m = self
                    .fading
                    .nakagami_m
                    .ok_or_else(|| invalid("fading.nakagami_m", "required for Nakagami fading"))?;
                if m < 1 {
                    return Err(invalid("fading.nakagami_m", "must be at least 1"));
                }
                FadingLaw::Nakagami { shape: m }
            }
            other => {
                return Err(invalid(
                    "fading.law",
                    format!("expected \"rician\" or \"nakagami\", got {other:?}"),
                ))
            }
        };

        let l = &self.links;
        let isl_gains = (
            db_to_linear(finite("links.isl_gains_dbi", l.isl_gains_dbi[0])?),
            db_to_linear(finite("links.isl_gains_dbi", l.isl_gains_dbi[1])?),
        );
        let sgl_gains = (
            db_to_linear(finite("links.sgl_gains_dbi", l.sgl_gains_dbi[0])?),
            db_to_linear(finite("links.sgl_gains_dbi", l.sgl_gains_dbi[1])?),
        );
        let tx_power = dbw_to_watts(finite("links.power_dbw", l.power_dbw)?);
        let rsi_power = match l.rsi_dbm {
            Some(v) => dbm_to_watts(finite("links.rsi_dbm", v)?),
            None => 0.0,
        };

        let t = &self.timeline;
        if t.horizon < 1 {
            return Err(invalid("timeline.horizon", "must be at least 1"));
        }
        let slot = positive("timeline.slot_s", t.slot_s)?;
        let coverage = match t.coverage_s {
            Some(c) => positive("timeline.coverage_s", c)?,
            None => slot * t.horizon as f64,
        };
        let timeline = Timeline::new(slot, coverage, t.horizon)?;
        let horizon = t.horizon;

        let description = resolve_geometry(&self.geometry, horizon, self.nodes.as_ref())?;
        let track = build_track(&description, &Scenario::REQUIRED_LINKS)?;

        let interference_at_s_k = resolve_interference("interference.s_k", &self.interference.s_k, horizon)?;
        let interference_at_s_l = resolve_interference("interference.s_l", &self.interference.s_l, horizon)?;

        let backlog = |field: &str, v: &PerSlot<f64>| -> Result<Vec<f64>> {
            let v = per_slot(field, v.to_vec(), horizon)?;
            if let Some(bad) = v.iter().find(|q| !(**q >= 0.0)) {
                return Err(invalid(field, format!("backlog must be non-negative, got {bad}")));
            }
            Ok(v)
        };
        let backlog_k = backlog("backlogs.flow_k_bits", &self.backlogs.flow_k_bits)?;
        let backlog_l = backlog("backlogs.flow_l_bits", &self.backlogs.flow_l_bits)?;

        let (schemes, fd_throughput) = match &self.schemes {
            None => (Scheme::ALL.to_vec(), FdThroughput::default()),
            Some(s) => {
                let list = match &s.list {
                    None => Scheme::ALL.to_vec(),
                    Some(names) => {
                        if names.is_empty() {
                            return Err(invalid("schemes.list", "must not be empty"));
                        }
                        names
                            .iter()
                            .map(|n| n.parse::<Scheme>().map_err(|e| invalid("schemes.list", e.to_string())))
                            .collect::<Result<Vec<_>>>()?
                    }
                };
                let fd = match &s.fd_throughput {
                    None => FdThroughput::default(),
                    Some(v) => parse_fd_throughput(v)?,
                };
                (list, fd)
            }
        };

        let mut series = SeriesControls {
            truncation: DEFAULT_TRUNCATION,
            ..SeriesControls::default()
        };
        if let Some(s) = &self.series {
            if let Some(m) = s.m {
                series.truncation = m;
            }
            if let Some(tol) = s.term_tolerance {
                series.term_tolerance = positive("series.term_tolerance", tol)?;
            }
            if let Some(e) = &s.exponent {
                series.exponent = parse_exponent(e)?;
            }
        }
        series
            .validate()
            .map_err(|_| invalid("series.M", "truncation must be at least 1"))?;

        let mc = self.montecarlo.as_ref();
        let plan = TrialPlan::new(
            mc.and_then(|m| m.trials).unwrap_or(DEFAULT_TRIALS),
            mc.and_then(|m| m.seed).unwrap_or(DEFAULT_SEED),
            mc.and_then(|m| m.workers).unwrap_or_else(default_workers),
        )?;

        let eval_slots = match self.analysis.as_ref().and_then(|a| a.eval_slots.clone()) {
            None => (0..horizon).collect(),
            Some(v) => {
                if v.is_empty() {
                    return Err(invalid("analysis.eval_slots", "must not be empty"));
                }
                if let Some(bad) = v.iter().find(|&&t| t >= horizon) {
                    return Err(invalid(
                        "analysis.eval_slots",
                        format!("slot {bad} is outside the {horizon}-slot horizon"),
                    ));
                }
                v
            }
        };

        let mut tolerance = Tolerance::default();
        if let Some(t) = &self.tolerance {
            if let Some(a) = t.abs_tol {
                tolerance.abs_tol = positive("tolerance.abs_tol", a)?;
            }
            if let Some(s) = t.sigma_mult {
                tolerance.sigma_mult = positive("tolerance.sigma_mult", s)?;
            }
        }

        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            rf,
            noise_power,
            fading,
            isl_gains,
            sgl_gains,
            tx_power,
            rsi_power,
            timeline,
            track,
            interference_at_s_k,
            interference_at_s_l,
            backlog_k,
            backlog_l,
            series,
            plan,
            schemes,
            fd_throughput,
            eval_slots,
            tolerance,
        })
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    ScenarioFile::parse(text)?.resolve()
}

/// Reads, validates and resolves a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ScenarioFile::parse(&text)
        .map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?
        .resolve()
}
