//! Parameter sweeps pairing closed forms with Monte Carlo estimates, and
//! their CSV form.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::analytics::{CrossExponent, OutageRegion};
use crate::error::{Error, Result};
use crate::linkbudget::{dbw_to_watts, linear_to_db};
use crate::montecarlo::{compare, compare_upper_bound, estimate_ergodic_ee, estimate_outage_curve, Estimate};
use crate::scenario::{Scenario, SlotModel};
use crate::scheduler::{FdThroughput, Scheme};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Outage versus SINR threshold.
    Zeta,
    /// Energy efficiency versus per-node transmit power in dBW.
    Power,
    /// Energy efficiency per slot of the horizon.
    Slot,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::Zeta => "zeta",
            SweepVar::Power => "power",
            SweepVar::Slot => "slot",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeta" | "threshold_zeta" => Ok(SweepVar::Zeta),
            "power" | "power_dbw" => Ok(SweepVar::Power),
            "slot" | "slot_index" => Ok(SweepVar::Slot),
            other => Err(Error::Parse(format!("unknown sweep variable {other:?} (expected zeta, power or slot)"))),
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parses a grid: `a,b,c`, `linspace:lo:hi:n`, `logspace:lo:hi:n` (values
/// `10^lo .. 10^hi`) or `range:lo:hi` (integers, inclusive). The result must
/// be non-empty and strictly increasing.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Parse(format!("grid {spec:?}: {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("{s:?} is not a number")));
    let parts: Vec<&str> = spec.split(':').collect();
    let values: Vec<f64> = match parts.as_slice() {
        ["linspace", lo, hi, n] | ["logspace", lo, hi, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| bad("point count must be a positive integer"))?;
            if n == 0 {
                return Err(bad("point count must be positive"));
            }
            let lin: Vec<f64> = if n == 1 {
                vec![lo]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            };
            if parts[0] == "logspace" {
                lin.iter().map(|e| 10f64.powf(*e)).collect()
            } else {
                lin
            }
        }
        ["range", lo, hi] => {
            let lo: i64 = lo.trim().parse().map_err(|_| bad("range bounds must be integers"))?;
            let hi: i64 = hi.trim().parse().map_err(|_| bad("range bounds must be integers"))?;
            (lo..=hi).map(|v| v as f64).collect()
        }
        [list] => list.split(',').map(num).collect::<Result<_>>()?,
        _ => return Err(bad("expected a comma list, linspace:lo:hi:n, logspace:lo:hi:n or range:lo:hi")),
    };
    if values.is_empty() {
        return Err(bad("empty grid"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(values)
}

pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    if list.trim() == "all" {
        return Ok(Scheme::ALL.to_vec());
    }
    let schemes: Vec<Scheme> = list
        .split(',')
        .map(|s| s.trim().parse::<Scheme>().map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    if schemes.is_empty() {
        return Err(Error::Parse("empty scheme list".into()));
    }
    Ok(schemes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub grid: Vec<f64>,
    pub schemes: Vec<Scheme>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    /// Fill the `runtime_ms` column (makes output run-dependent).
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variable: f64,
    pub scheme: Scheme,
    pub closed_form: Option<f64>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub region_label: String,
    pub runtime_ms: Option<f64>,
    pub verdict: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn flagged(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.verdict == "fail")
    }
}

fn exponent_name(e: CrossExponent) -> &'static str {
    match e {
        CrossExponent::Sum => "sum",
        CrossExponent::Product => "product",
    }
}

fn fd_name(f: FdThroughput) -> &'static str {
    match f {
        FdThroughput::RelayHalfDuplex => "relay-half-duplex",
        FdThroughput::FullPrelog => "full-prelog",
    }
}

/// Label of the outage region containing `zeta`.
pub fn region_label(model: &SlotModel, zeta: f64) -> &'static str {
    let capped = |s: &crate::sinr::DirectionState| {
        if s.backlog_limited() {
            "backlog_limited"
        } else {
            "isl_limited"
        }
    };
    match model.outage_inputs().region(zeta) {
        OutageRegion::BothOpen => "downlink_limited",
        OutageRegion::FlowLCapped => capped(&model.states.flow_l),
        OutageRegion::FlowKCapped => capped(&model.states.flow_k),
        OutageRegion::Saturated => "saturated",
    }
}

fn elapsed_ms(start: Instant, timing: bool) -> Option<f64> {
    timing.then(|| (start.elapsed().as_secs_f64() * 1e3).round())
}

fn ee_row(
    scenario: &Scenario,
    models: &[SlotModel],
    scheme: Scheme,
    variable: f64,
    label: String,
    opts: SweepOptions,
) -> Result<SweepRow> {
    let start = Instant::now();
    let est: Estimate = estimate_ergodic_ee(models, scheme, &scenario.plan)?;
    let closed = models
        .iter()
        .map(|m| m.closed_form_ee(scheme, &scenario.series))
        .collect::<Result<Vec<f64>>>();
    let (closed_form, verdict) = match closed {
        Ok(v) => {
            let c = v.iter().sum::<f64>() / v.len() as f64;
            (Some(c), compare_upper_bound(c, &est, scenario.tolerance.sigma_mult).verdict())
        }
        Err(Error::Unsupported(_)) => (None, "n/a"),
        Err(e) => return Err(e),
    };
    Ok(SweepRow {
        variable,
        scheme,
        closed_form,
        mc_mean: est.mean,
        mc_stderr: est.std_error,
        region_label: label,
        runtime_ms: elapsed_ms(start, opts.timing),
        verdict,
    })
}

pub fn run_sweep(scenario: &Scenario, spec: &SweepSpec, opts: SweepOptions) -> Result<SweepResult> {
    if spec.grid.is_empty() || spec.grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("sweep grid must be non-empty and strictly increasing".into()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::Config("sweep needs at least one scheme".into()));
    }
    let mut metadata = vec![
        ("schema_version".to_string(), SCHEMA_VERSION.to_string()),
        ("scenario".into(), scenario.name.clone()),
        ("variable".into(), spec.variable.to_string()),
        ("seed".into(), scenario.plan.seed().to_string()),
        ("trials".into(), scenario.plan.trials().to_string()),
        ("M".into(), scenario.series.truncation.to_string()),
        ("exponent".into(), exponent_name(scenario.series.exponent).into()),
        ("fd_throughput".into(), fd_name(scenario.fd_throughput).into()),
        ("abs_tol".into(), scenario.tolerance.abs_tol.to_string()),
        ("sigma_mult".into(), scenario.tolerance.sigma_mult.to_string()),
        ("power_dbw".into(), linear_to_db(scenario.tx_power).to_string()),
    ];

    let rows: Vec<SweepRow> = match spec.variable {
        SweepVar::Zeta => {
            if spec.schemes.contains(&Scheme::Fd) {
                return Err(Error::Config(
                    "infeasible sweep: threshold outage is not defined for fd (it serves both flows)".into(),
                ));
            }
            if spec.grid[0] < 0.0 {
                return Err(Error::Config("infeasible sweep: thresholds must be non-negative".into()));
            }
            let t = scenario.eval_slots[0];
            metadata.push(("slot".into(), t.to_string()));
            let model = scenario.slot_model(t)?;
            let per_scheme: Vec<Vec<SweepRow>> = scenario.plan.install(|| {
                spec.schemes
                    .par_iter()
                    .map(|&scheme| -> Result<Vec<SweepRow>> {
                        let start = Instant::now();
                        let curve = estimate_outage_curve(&model, scheme, &spec.grid, &scenario.plan)?;
                        let runtime = elapsed_ms(start, opts.timing);
                        spec.grid
                            .iter()
                            .zip(curve)
                            .map(|(&z, est)| {
                                let closed = model.closed_form_outage(scheme, z)?;
                                let c = compare(closed, &est, scenario.tolerance.abs_tol, scenario.tolerance.sigma_mult)?;
                                Ok(SweepRow {
                                    variable: z,
                                    scheme,
                                    closed_form: Some(closed),
                                    mc_mean: est.mean,
                                    mc_stderr: est.std_error,
                                    region_label: region_label(&model, z).into(),
                                    runtime_ms: runtime,
                                    verdict: c.verdict(),
                                })
                            })
                            .collect()
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            // grid-major order
            let mut rows = Vec::new();
            for i in 0..spec.grid.len() {
                for s in &per_scheme {
                    rows.push(s[i].clone());
                }
            }
            rows
        }
        SweepVar::Power => {
            metadata.push((
                "eval_slots".into(),
                scenario.eval_slots.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";"),
            ));
            let points: Vec<(f64, Scheme)> = spec
                .grid
                .iter()
                .flat_map(|&p| spec.schemes.iter().map(move |&s| (p, s)))
                .collect();
            scenario.plan.install(|| {
                points
                    .par_iter()
                    .map(|&(p_dbw, scheme)| {
                        let sc = scenario.with_tx_power(dbw_to_watts(p_dbw));
                        let models = sc.eval_models()?;
                        ee_row(&sc, &models, scheme, p_dbw, String::new(), opts)
                    })
                    .collect::<Result<Vec<_>>>()
            })??
        }
        SweepVar::Slot => {
            let horizon = scenario.horizon();
            for &t in &spec.grid {
                if t < 0.0 || t.fract() != 0.0 || t as usize >= horizon {
                    return Err(Error::Config(format!(
                        "infeasible sweep: slot {t} is not an index within the {horizon}-slot horizon"
                    )));
                }
            }
            let points: Vec<(usize, Scheme)> = spec
                .grid
                .iter()
                .flat_map(|&t| spec.schemes.iter().map(move |&s| (t as usize, s)))
                .collect();
            scenario.plan.install(|| {
                points
                    .par_iter()
                    .map(|&(t, scheme)| {
                        let model = scenario.slot_model(t)?;
                        let label = scenario.association(t)?.to_string();
                        ee_row(scenario, &[model], scheme, t as f64, label, opts)
                    })
                    .collect::<Result<Vec<_>>>()
            })??
        }
    };
    Ok(SweepResult { metadata, rows })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const CSV_COLUMNS: [&str; 8] = [
    "variable",
    "scheme",
    "closed_form",
    "mc_mean",
    "mc_stderr",
    "region_label",
    "runtime_ms",
    "verdict",
];

/// CSV text: `#`-prefixed `key=value` metadata, a header, one row per point.
pub fn to_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (k, v) in &result.metadata {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in &result.rows {
        w.write_record([
            r.variable.to_string(),
            r.scheme.as_str().to_string(),
            fmt_opt(r.closed_form),
            r.mc_mean.to_string(),
            r.mc_stderr.to_string(),
            r.region_label.clone(),
            fmt_opt(r.runtime_ms),
            r.verdict.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let bytes = to_csv(result)?;
    std::fs::write(path, bytes)?;
    Ok(())
}
