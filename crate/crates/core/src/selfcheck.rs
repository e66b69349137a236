//! Built-in verification run: special functions against quadrature, Jensen
//! dominance and a small outage cross-validation.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{outage_probability, phi, psi, SeriesControls};
use crate::channel::{marcum_q1, nakagami_power_cdf, FadingLaw, NakagamiParams, RicianParams};
use crate::error::Result;
use crate::montecarlo::{compare_upper_bound, estimate_ergodic_ee, estimate_outage_curve, TrialPlan};
use crate::scenario::SlotModel;
use crate::scheduler::{FdThroughput, Scheme, SlotContext, SlotStates};
use crate::sinr::DirectionState;
use crate::verify::{marcum_q1_oracle, phi_oracle, psi_oracle};

pub type MarcumFn = fn(f64, f64) -> Result<f64>;

#[derive(Debug, Clone, Copy)]
pub struct SelfcheckOptions {
    /// Implementation under test for the Marcum grid.
    pub marcum: MarcumFn,
    pub seed: u64,
    pub trials: u64,
    pub workers: usize,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self {
            marcum: marcum_q1,
            seed: 1,
            trials: 200_000,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.summary)?;
            for line in &c.failures {
                writeln!(f, "    {line}")?;
            }
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

const MAX_LISTED: usize = 25;

fn check(name: &str, summary: String, failures: Vec<String>) -> Check {
    let n = failures.len();
    let mut listed: Vec<String> = failures.into_iter().take(MAX_LISTED).collect();
    if n > MAX_LISTED {
        listed.push(format!("... {} more", n - MAX_LISTED));
    }
    Check {
        name: name.into(),
        pass: n == 0,
        summary,
        failures: listed,
    }
}

fn marcum_grid(marcum: MarcumFn) -> Check {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let a = 10.0 * i as f64 / 19.0;
            let b = 10.0 * j as f64 / 19.0;
            let expected = marcum_q1_oracle(a, b);
            match marcum(a, b) {
                Ok(actual) => {
                    let err = (actual - expected).abs();
                    worst = worst.max(err);
                    if !(err <= 1e-10) {
                        failures.push(format!("Q1({a:.6}, {b:.6}): expected {expected:.15e}, actual {actual:.15e}"));
                    }
                }
                Err(e) => failures.push(format!("Q1({a:.6}, {b:.6}): expected {expected:.15e}, error {e}")),
            }
        }
    }
    check(
        "marcum_q1 vs quadrature, 20x20 grid on [0,10]^2",
        format!("max abs error {worst:.2e} (limit 1e-10)"),
        failures,
    )
}

fn series_kernels(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..40 {
        let m = rng.random_range(0..=5u32);
        let n = rng.random_range(0..=5u32);
        let a1 = rng.random_range(0.1..10.0);
        let a2 = rng.random_range(0.1..10.0);
        let s = rng.random_range(0.0..20.0);
        for (label, actual, expected) in [
            (format!("phi({m}, {a1:.4}, {s:.4})"), phi(m, a1, s), phi_oracle(m, a1, s)),
            (
                format!("psi({m}, {n}, {a1:.4}, {a2:.4}, {s:.4})"),
                psi(m, n, a1, a2, s),
                psi_oracle(m, n, a1, a2, s),
            ),
        ] {
            let rel = if expected == 0.0 { actual.abs() } else { (actual / expected - 1.0).abs() };
            worst = worst.max(rel);
            if !(rel <= 1e-8) {
                failures.push(format!("{label}: expected {expected:.15e}, actual {actual:.15e}"));
            }
        }
    }
    check(
        "phi/psi vs quadrature, 40 random points",
        format!("max rel error {worst:.2e} (limit 1e-8)"),
        failures,
    )
}

fn nakagami_exponential() -> Check {
    let mut failures = Vec::new();
    for &g in &[0.1, 1.0, 7.0] {
        for &x in &[0.0, 1e-6, 0.3, 1.0, 5.0, 40.0] {
            let v = nakagami_power_cdf(&NakagamiParams { shape: 1, mean_snr: g }, x).unwrap_or(f64::NAN);
            let e = -(-x / g).exp_m1();
            if !((v - e).abs() <= 1e-12) {
                failures.push(format!("m=1, mean {g}, x {x}: expected {e:.15e}, actual {v:.15e}"));
            }
        }
    }
    check("nakagami m=1 equals exponential CDF", "18 points".into(), failures)
}

fn model(isl_k: f64, isl_l: f64, dl_k: f64, dl_l: f64) -> SlotModel {
    let w = 500e6;
    let slot = 1e-3;
    let k = DirectionState::new(isl_k, dl_k, f64::INFINITY, w, slot).expect("valid");
    let l = DirectionState::new(isl_l, dl_l, f64::INFINITY, w, slot).expect("valid");
    SlotModel {
        slot: 0,
        states: SlotStates {
            flow_k: k,
            flow_l: l,
            fd_flow_k: k.with_isl_sinr(isl_k / 1.3),
            fd_flow_l: l.with_isl_sinr(isl_l / 1.3),
        },
        fading: FadingLaw::Rician(RicianParams::new(1.56, 1.3).expect("valid")),
        ctx: SlotContext {
            bandwidth: w,
            slot_duration: slot,
            tx_power: 10.0,
            fd_throughput: FdThroughput::RelayHalfDuplex,
        },
    }
}

fn jensen(plan: &TrialPlan) -> Result<Check> {
    let ctl = SeriesControls::default();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for &(ik, il, gk, gl) in &[(300.0, 120.0, 80.0, 150.0), (50.0, 900.0, 400.0, 20.0), (1e4, 1e4, 3e3, 3e3)] {
        let m = model(ik, il, gk, gl);
        for scheme in [Scheme::FlexD, Scheme::HdFixedK, Scheme::Fd] {
            let bound = m.closed_form_ee(scheme, &ctl)?;
            let est = estimate_ergodic_ee(&[m], scheme, plan)?;
            let c = compare_upper_bound(bound, &est, 3.0);
            lines.push(c.relative_gap());
            if !c.pass {
                failures.push(format!(
                    "{} at cuts ({ik}, {il}), means ({gk}, {gl}): bound {bound:.6e} below estimate {:.6e} +- {:.2e}",
                    scheme.as_str(),
                    est.mean,
                    est.std_error
                ));
            }
        }
    }
    let worst = lines.iter().cloned().fold(0.0, f64::max);
    Ok(check(
        "Jensen bound dominates ergodic EE",
        format!("{} cases, largest relative gap {worst:.3}", lines.len()),
        failures,
    ))
}

fn outage_cross(plan: &TrialPlan) -> Result<Check> {
    let m = model(300.0, 120.0, 80.0, 150.0);
    let zetas: Vec<f64> = (0..20).map(|i| 16.0 * i as f64).collect();
    let est = estimate_outage_curve(&m, Scheme::FlexD, &zetas, plan)?;
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (z, e) in zetas.iter().zip(&est) {
        let closed = outage_probability(*z, &m.outage_inputs())?;
        let d = (closed - e.mean).abs();
        worst = worst.max(d);
        if !(d <= 0.01) {
            failures.push(format!("zeta {z}: expected {closed:.6}, simulated {:.6}", e.mean));
        }
    }
    Ok(check(
        "outage closed form vs Monte Carlo",
        format!("{} thresholds, {} trials, max gap {worst:.4} (limit 0.01)", zetas.len(), plan.trials()),
        failures,
    ))
}

pub fn run(opts: &SelfcheckOptions) -> Result<Report> {
    let plan = TrialPlan::new(opts.trials, opts.seed, opts.workers)?;
    Ok(Report {
        checks: vec![
            marcum_grid(opts.marcum),
            series_kernels(opts.seed),
            nakagami_exponential(),
            jensen(&plan)?,
            outage_cross(&plan)?,
        ],
    })
}
