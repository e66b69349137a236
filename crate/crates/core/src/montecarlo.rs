//! Seeded Monte Carlo oracle for the per-slot pipeline.
//!
//! Trials are grouped into fixed blocks of [`BLOCK_TRIALS`]; block `b` draws
//! from a ChaCha8 stream selected by `(seed, b)`. A trial's fading draws
//! therefore depend only on the seed and the trial index, never on the
//! worker count, the slot or the scheme being evaluated. Block statistics
//! are merged in block order by pairwise reduction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::GainSampler;
use crate::error::{domain, Error, Result};
use crate::scenario::SlotModel;
use crate::scheduler::{HdPolicy, Scheme, SlotOutcome};

pub const BLOCK_TRIALS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialPlan {
    trials: u64,
    seed: u64,
    workers: usize,
}

impl TrialPlan {
    pub fn new(trials: u64, seed: u64, workers: usize) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Validation {
                field: "montecarlo.trials".into(),
                reason: "must be positive".into(),
            });
        }
        if workers == 0 {
            return Err(Error::Validation {
                field: "montecarlo.workers".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(Self { trials, seed, workers })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn with_trials(self, trials: u64) -> Result<Self> {
        Self::new(trials, self.seed, self.workers)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_workers(self, workers: usize) -> Result<Self> {
        Self::new(self.trials, self.seed, workers)
    }

    /// Runs `f` on a pool of `workers` threads, or in the current pool when
    /// already called from one.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        if rayon::current_thread_index().is_some() {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Count, mean and centred second moment; merged with Chan's update.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + d * b.n / n,
            m2: a.m2 + b.m2 + d * d * a.n * b.n / n,
        }
    }

    fn estimate(&self) -> Estimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        Estimate {
            mean: self.mean,
            std_error: (var.max(0.0) / self.n).sqrt(),
            trials: self.n as u64,
        }
    }
}

fn pairwise(mut parts: Vec<Vec<Moments>>) -> Vec<Moments> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.into_iter().zip(b).map(|(x, y)| Moments::merge(x, y)).collect()),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// RNG of block `block` under `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Downlink power gains of one trial: flow K's downlink first.
pub fn draw_gains<R: Rng + ?Sized>(sampler: &GainSampler, rng: &mut R) -> [f64; 2] {
    let k = sampler.sample(rng);
    let l = sampler.sample(rng);
    [k, l]
}

/// Core loop: for each trial draws both downlink gains and lets `f` write
/// `n_stats` per-trial values; returns their means and standard errors.
pub fn run_trials<F>(plan: &TrialPlan, sampler: &GainSampler, n_stats: usize, f: F) -> Result<Vec<Estimate>>
where
    F: Fn([f64; 2], &mut [f64]) + Sync,
{
    let blocks = plan.trials.div_ceil(BLOCK_TRIALS);
    let seed = plan.seed;
    let trials = plan.trials;
    let parts: Vec<Vec<Moments>> = plan.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                let start = b * BLOCK_TRIALS;
                let end = (start + BLOCK_TRIALS).min(trials);
                let mut acc = vec![Moments::default(); n_stats];
                let mut buf = vec![0.0; n_stats];
                for _ in start..end {
                    let gains = draw_gains(sampler, &mut rng);
                    f(gains, &mut buf);
                    for (m, &x) in acc.iter_mut().zip(&buf) {
                        m.push(x);
                    }
                }
                acc
            })
            .collect()
    })?;
    Ok(pairwise(parts).iter().map(Moments::estimate).collect())
}

/// One slot of `scheme` with freshly drawn fading.
pub fn simulate_slot<R: Rng + ?Sized>(model: &SlotModel, scheme: Scheme, rng: &mut R) -> Result<SlotOutcome> {
    let sampler = model.fading.sampler()?;
    Ok(model.evaluate(scheme, draw_gains(&sampler, rng)))
}

fn delivered_sinr(outcome: &SlotOutcome) -> Result<f64> {
    outcome.system_sinr().ok_or_else(|| {
        Error::Unsupported("full duplex serves both flows; it has no single delivered SINR".into())
    })
}

/// Empirical `Pr(Gamma <= zeta)` at every threshold of `zetas`, from the
/// same set of trials.
pub fn estimate_outage_curve(model: &SlotModel, scheme: Scheme, zetas: &[f64], plan: &TrialPlan) -> Result<Vec<Estimate>> {
    if scheme == Scheme::Fd {
        return Err(Error::Unsupported(
            "threshold outage is defined for single-direction schemes; full duplex serves both flows".into(),
        ));
    }
    if let Some(z) = zetas.iter().find(|z| !(**z >= 0.0)) {
        return Err(domain("estimate_outage", format!("threshold must be >= 0, got {z}")));
    }
    let sampler = model.fading.sampler()?;
    run_trials(plan, &sampler, zetas.len(), |g, out| {
        let gamma = model.evaluate(scheme, g).system_sinr().unwrap_or(0.0);
        for (o, z) in out.iter_mut().zip(zetas) {
            *o = if gamma <= *z { 1.0 } else { 0.0 };
        }
    })
}

pub fn estimate_outage(model: &SlotModel, scheme: Scheme, zeta: f64, plan: &TrialPlan) -> Result<Estimate> {
    Ok(estimate_outage_curve(model, scheme, &[zeta], plan)?[0])
}

/// Mean delivered SINR (`Gamma` for FlexD); for full duplex the sum of both
/// flows' composite SINRs.
pub fn estimate_mean_sinr(model: &SlotModel, scheme: Scheme, plan: &TrialPlan) -> Result<Estimate> {
    let sampler = model.fading.sampler()?;
    let est = run_trials(plan, &sampler, 1, |g, out| {
        let o = model.evaluate(scheme, g);
        out[0] = match delivered_sinr(&o) {
            Ok(v) => v,
            Err(_) => o.sinr_k + o.sinr_l,
        };
    })?;
    Ok(est[0])
}

/// Ergodic energy efficiency in bits/joule, averaged over the given slots.
/// Each trial's fading is shared by all slots.
pub fn estimate_ergodic_ee(models: &[SlotModel], scheme: Scheme, plan: &TrialPlan) -> Result<Estimate> {
    let first = models
        .first()
        .ok_or_else(|| domain("estimate_ergodic_ee", "need at least one slot"))?;
    if !(first.ctx.total_power(scheme) > 0.0) {
        return Err(domain("estimate_ergodic_ee", "total transmit power must be positive"));
    }
    let sampler = first.fading.sampler()?;
    let n = models.len() as f64;
    let est = run_trials(plan, &sampler, 1, |g, out| {
        out[0] = models
            .iter()
            .map(|m| m.evaluate(scheme, g).energy_efficiency(m.ctx.slot_duration))
            .sum::<f64>()
            / n;
    })?;
    Ok(est[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceReport {
    pub slots: u64,
    pub violations_fixed_k: u64,
    pub violations_fixed_l: u64,
    pub violations_alternating: u64,
}

impl DominanceReport {
    pub fn total_violations(&self) -> u64 {
        self.violations_fixed_k + self.violations_fixed_l + self.violations_alternating
    }
}

/// Per-slot comparison of FlexD against every half-duplex policy on shared
/// fading; trial `i` is evaluated in slot `models[i % len]`. Counts exact
/// inequality violations.
pub fn paired_dominance(models: &[SlotModel], plan: &TrialPlan) -> Result<DominanceReport> {
    let first = models
        .first()
        .ok_or_else(|| domain("paired_dominance", "need at least one slot"))?;
    let sampler = first.fading.sampler()?;
    let blocks = plan.trials.div_ceil(BLOCK_TRIALS);
    let (seed, trials) = (plan.seed, plan.trials);
    let counts: Vec<[u64; 3]> = plan.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                let start = b * BLOCK_TRIALS;
                let end = (start + BLOCK_TRIALS).min(trials);
                let mut c = [0u64; 3];
                for i in start..end {
                    let g = draw_gains(&sampler, &mut rng);
                    let m = &models[(i % models.len() as u64) as usize];
                    let flex = m.evaluate(Scheme::FlexD, g).achieved_rate;
                    for (slot, policy) in [HdPolicy::FixedK, HdPolicy::FixedL, HdPolicy::Alternating].iter().enumerate() {
                        let scheme = match policy {
                            HdPolicy::FixedK => Scheme::HdFixedK,
                            HdPolicy::FixedL => Scheme::HdFixedL,
                            HdPolicy::Alternating => Scheme::HdAlternating,
                        };
                        if flex < m.evaluate(scheme, g).achieved_rate {
                            c[slot] += 1;
                        }
                    }
                }
                c
            })
            .collect()
    })?;
    let mut total = [0u64; 3];
    for c in counts {
        for j in 0..3 {
            total[j] += c[j];
        }
    }
    Ok(DominanceReport {
        slots: trials,
        violations_fixed_k: total[0],
        violations_fixed_l: total[1],
        violations_alternating: total[2],
    })
}

/// Tolerances used when pairing a closed form with an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub sigma_mult: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 0.01,
            sigma_mult: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    TwoSided,
    /// The closed form is an upper bound (Jensen).
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub closed: f64,
    pub mean: f64,
    pub std_error: f64,
    pub mode: CompareMode,
    pub pass: bool,
}

impl Comparison {
    pub fn diff(&self) -> f64 {
        self.closed - self.mean
    }

    /// `(closed - mean) / mean`, the relative gap of a bound.
    pub fn relative_gap(&self) -> f64 {
        if self.mean == 0.0 {
            if self.closed == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.diff() / self.mean.abs()
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "pass"
        } else {
            "fail"
        }
    }
}

/// Two-sided: pass iff `|closed - mean| <= max(abs_tol, sigma_mult * se)`.
pub fn compare(closed: f64, est: &Estimate, abs_tol: f64, sigma_mult: f64) -> Result<Comparison> {
    if !(abs_tol > 0.0) {
        return Err(domain("compare", "abs_tol must be positive"));
    }
    let band = abs_tol.max(sigma_mult * est.std_error);
    Ok(Comparison {
        closed,
        mean: est.mean,
        std_error: est.std_error,
        mode: CompareMode::TwoSided,
        pass: (closed - est.mean).abs() <= band,
    })
}

/// One-sided: pass iff `closed >= mean - sigma_mult * se`.
pub fn compare_upper_bound(closed: f64, est: &Estimate, sigma_mult: f64) -> Comparison {
    Comparison {
        closed,
        mean: est.mean,
        std_error: est.std_error,
        mode: CompareMode::UpperBound,
        pass: closed >= est.mean - sigma_mult * est.std_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingLaw, RicianParams};
    use crate::scheduler::{FdThroughput, SlotContext, SlotStates};
    use crate::sinr::DirectionState;

    fn model(fading: FadingLaw, backlog: f64) -> SlotModel {
        let w = 500e6;
        let slot = 1e-3;
        let k = DirectionState::new(300.0, 80.0, backlog, w, slot).unwrap();
        let l = DirectionState::new(120.0, 150.0, backlog, w, slot).unwrap();
        SlotModel {
            slot: 0,
            states: SlotStates {
                flow_k: k,
                flow_l: l,
                fd_flow_k: k.with_isl_sinr(200.0),
                fd_flow_l: l.with_isl_sinr(100.0),
            },
            fading,
            ctx: SlotContext {
                bandwidth: w,
                slot_duration: slot,
                tx_power: 10.0,
                fd_throughput: FdThroughput::RelayHalfDuplex,
            },
        }
    }

    fn rician() -> FadingLaw {
        FadingLaw::Rician(RicianParams::new(1.56, 1.3).unwrap())
    }

    #[test]
    fn independent_of_worker_count() {
        let m = model(rician(), f64::INFINITY);
        let zetas = [10.0, 50.0, 119.0];
        let a = estimate_outage_curve(&m, Scheme::FlexD, &zetas, &TrialPlan::new(50_000, 9, 1).unwrap()).unwrap();
        let b = estimate_outage_curve(&m, Scheme::FlexD, &zetas, &TrialPlan::new(50_000, 9, 3).unwrap()).unwrap();
        assert_eq!(a, b);
        let e1 = estimate_ergodic_ee(&[m], Scheme::FlexD, &TrialPlan::new(20_001, 4, 1).unwrap()).unwrap();
        let e2 = estimate_ergodic_ee(&[m], Scheme::FlexD, &TrialPlan::new(20_001, 4, 4).unwrap()).unwrap();
        assert_eq!(e1.mean.to_bits(), e2.mean.to_bits());
        assert_eq!(e1.std_error.to_bits(), e2.std_error.to_bits());
        assert_eq!(e1.trials, 20_001);
    }

    #[test]
    fn same_seed_same_outcome() {
        let m = model(rician(), f64::INFINITY);
        let a = simulate_slot(&m, Scheme::FlexD, &mut block_rng(5, 0)).unwrap();
        let b = simulate_slot(&m, Scheme::FlexD, &mut block_rng(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_fading_limit() {
        // mu = 1, sigma^2 -> 0: |h|^2 = 1
        let f = FadingLaw::Rician(RicianParams::new(1.0, 1e-12).unwrap());
        let m = model(f, f64::INFINITY);
        let o = simulate_slot(&m, Scheme::FlexD, &mut block_rng(1, 0)).unwrap();
        let exact = m.evaluate(Scheme::FlexD, [1.0, 1.0]);
        assert!((o.achieved_rate / exact.achieved_rate - 1.0).abs() < 1e-5);
        let ee = estimate_ergodic_ee(&[m], Scheme::FlexD, &TrialPlan::new(1000, 1, 1).unwrap()).unwrap();
        assert!((ee.mean / exact.energy_efficiency(1e-3) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn zero_backlog_idle() {
        let m = model(rician(), 0.0);
        for s in Scheme::ALL {
            let o = simulate_slot(&m, s, &mut block_rng(2, 0)).unwrap();
            assert_eq!(o.achieved_rate, 0.0, "{s:?}");
            let ee = estimate_ergodic_ee(&[m], s, &TrialPlan::new(5000, 2, 1).unwrap()).unwrap();
            assert_eq!(ee.mean, 0.0);
        }
    }

    #[test]
    fn outage_edges_exact() {
        let m = model(rician(), f64::INFINITY);
        let plan = TrialPlan::new(30_000, 3, 1).unwrap();
        let e = estimate_outage_curve(&m, Scheme::FlexD, &[0.0, 300.0, 1e6], &plan).unwrap();
        assert_eq!(e[0].mean, 0.0);
        assert_eq!(e[1].mean, 1.0);
        assert_eq!(e[1].std_error, 0.0);
        assert_eq!(e[2].mean, 1.0);
        assert!(estimate_outage(&m, Scheme::Fd, 1.0, &plan).is_err());
    }

    #[test]
    fn compare_modes() {
        let est = Estimate { mean: 1.0, std_error: 0.01, trials: 100 };
        assert!(compare(1.0, &est, 1e-12, 3.0).unwrap().pass);
        assert!(!compare(1.1, &est, 1e-12, 3.0).unwrap().pass);
        assert!(compare(1.0, &est, 0.0, 3.0).is_err());
        assert!(compare_upper_bound(0.98, &est, 3.0).pass);
        assert!(!compare_upper_bound(0.96, &est, 3.0).pass);
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = Moments::merge(a, b);
        assert!((m.mean - whole.mean).abs() < 1e-12);
        assert!((m.m2 / whole.m2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominance_exact() {
        let r = paired_dominance(&[model(rician(), f64::INFINITY)], &TrialPlan::new(20_000, 8, 1).unwrap()).unwrap();
        assert_eq!(r.slots, 20_000);
        assert_eq!(r.total_violations(), 0);
    }
}
