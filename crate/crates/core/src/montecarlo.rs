//! Nested Monte Carlo estimation of `Pr(R_s < rs0)` per allocation scheme.
//!
//! The outer loop draws channel instances `(h, g_hat)` from the fading
//! ensemble; instances whose strongest main channel cannot carry the target
//! are set aside as main-channel outages. For every retained instance each
//! scheme picks its allocation from `(h, g_hat, eps2)` and the inner loop
//! averages the outage indicator over draws of the estimation error.
//!
//! Outer instance `k` draws from stream `(master_seed, stream_id(k, INSTANCE))`
//! and its inner loop from `(master_seed, stream_id(k, INNER))`. Every scheme
//! sees the same samples, and outcomes can be computed in any order or on any
//! number of workers; [`aggregate`] reduces them in index order.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::allocation::{PowerAllocation, Scheme};
use crate::channel::{fill_eavesdropper, ChannelInstance, FadingEnsemble};
use crate::error::{check_len, check_positive, Error, Result};
use crate::secrecy::{clipped_advantage, main_channel_outage_fading, served_power, TargetRate};
use crate::stats::{mix64, RngStream};

/// Outer and inner sample counts of the reference experiment.
pub const DEFAULT_SAMPLES: usize = 10_000;
/// Reduced sample counts for quick runs.
pub const DESK_SAMPLES: usize = 1_000;

const ROLE_INSTANCE: u64 = 0x01;
const ROLE_INNER: u64 = 0x02;

/// Sub-stream identifier for outer instance `index` and a role tag.
pub fn stream_id(index: u64, role: u64) -> u64 {
    mix64(mix64(index) ^ role.rotate_left(32))
}

/// Which indicator the inner loop averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventMode {
    /// `sum |h|^2 P - threshold < sum |g|^2 P`, the event the Markov bound covers.
    #[default]
    BoundEvent,
    /// `R_s < rs0` with the clipped low-SNR rate.
    ExactRate,
}

impl EventMode {
    pub fn name(self) -> &'static str {
        match self {
            EventMode::BoundEvent => "bound_event",
            EventMode::ExactRate => "exact_rate",
        }
    }
}

impl fmt::Display for EventMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bound_event" => Ok(EventMode::BoundEvent),
            "exact_rate" => Ok(EventMode::ExactRate),
            other => Err(Error::Config(alloc::format!("unknown event mode {other:?}"))),
        }
    }
}

/// Treatment of instances in main-channel outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MainOutagePolicy {
    /// Left out of the average (reference behaviour).
    #[default]
    Exclude,
    /// Counted with conditional outage probability 1.
    CountAsOutage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub ensemble: FadingEnsemble,
    pub budget: f64,
    pub target: TargetRate,
    pub outer_samples: usize,
    pub inner_samples: usize,
    pub master_seed: u64,
    pub schemes: Vec<Scheme>,
    pub event_mode: EventMode,
    pub main_outage_policy: MainOutagePolicy,
}

impl SimConfig {
    /// All four schemes, `10^4 x 10^4` samples, seed 0.
    pub fn new(ensemble: FadingEnsemble, budget: f64, target: TargetRate) -> Self {
        Self {
            ensemble,
            budget,
            target,
            outer_samples: DEFAULT_SAMPLES,
            inner_samples: DEFAULT_SAMPLES,
            master_seed: 0,
            schemes: Scheme::ALL.to_vec(),
            event_mode: EventMode::default(),
            main_outage_policy: MainOutagePolicy::default(),
        }
    }

    /// The reference experiment with `n` channels: budget 0.1, the reference
    /// ensemble and `rs0 = 0.625 P sigma_m2 / (2 ln 2)`.
    pub fn reference(n: usize) -> Result<Self> {
        let ensemble = FadingEnsemble::reference(n)?;
        let budget = 0.1;
        let target = TargetRate::from_factor(0.625, budget, ensemble.sigma_m2()[0])?;
        Ok(Self::new(ensemble, budget, target))
    }

    pub fn with_samples(mut self, outer: usize, inner: usize) -> Self {
        self.outer_samples = outer;
        self.inner_samples = inner;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("budget", self.budget)?;
        if self.outer_samples == 0 || self.inner_samples == 0 {
            return Err(Error::Config("sample counts must be at least 1".into()));
        }
        if self.inner_samples > u32::MAX as usize {
            return Err(Error::Config("inner sample count exceeds 2^32 - 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes selected".into()));
        }
        Ok(())
    }

    /// Closed-form probability of main-channel outage for this configuration.
    pub fn main_outage_closed_form(&self) -> Result<f64> {
        main_channel_outage_fading(&self.ensemble, self.budget, &self.target)
    }
}

/// Per-scheme estimate of `Pr(R_s < rs0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageEstimate {
    pub scheme: Scheme,
    pub p_hat: f64,
    pub std_err: f64,
    /// Instances not in main-channel outage.
    pub outer_used: usize,
    pub outer_total: usize,
    pub main_outage_frac: f64,
}

/// Result of one outer instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceOutcome {
    pub main_outage: bool,
    /// Inner-loop outage counts, one per configured scheme. Empty for
    /// main-outage instances under [`MainOutagePolicy::Exclude`].
    pub outage_counts: Vec<u32>,
}

struct Prepared {
    powers: Vec<f64>,
    served: f64,
}

fn outage_indicator(
    mode: EventMode,
    instance: &ChannelInstance,
    g_abs2: &[f64],
    prepared: &Prepared,
    threshold: f64,
) -> bool {
    match mode {
        EventMode::BoundEvent => {
            let leaked: f64 = g_abs2.iter().zip(&prepared.powers).map(|(g2, p)| g2 * p).sum();
            prepared.served - threshold < leaked
        }
        EventMode::ExactRate => clipped_advantage(instance, g_abs2.iter().copied(), &prepared.powers) < threshold,
    }
}

/// Runs the inner loop for several allocations on shared draws and returns
/// the outage count of each. `None` allocations count every draw as outage.
fn count_outages(
    instance: &ChannelInstance,
    allocations: &[Option<PowerAllocation>],
    target: &TargetRate,
    inner_samples: usize,
    rng: &mut RngStream,
    mode: EventMode,
) -> Vec<u32> {
    let threshold = target.threshold();
    let prepared: Vec<Option<Prepared>> = allocations
        .iter()
        .map(|a| {
            a.as_ref().map(|a| Prepared {
                powers: a.powers().to_vec(),
                served: served_power(instance, a.powers()),
            })
        })
        .collect();
    let mut counts = vec![0u32; allocations.len()];
    let mut g: Vec<Complex64> = Vec::with_capacity(instance.n());
    let mut g_abs2 = vec![0.0; instance.n()];
    for _ in 0..inner_samples {
        fill_eavesdropper(instance, rng, &mut g);
        for (dst, z) in g_abs2.iter_mut().zip(&g) {
            *dst = z.norm_sqr();
        }
        for (count, prep) in counts.iter_mut().zip(&prepared) {
            let hit = match prep {
                Some(prep) => outage_indicator(mode, instance, &g_abs2, prep, threshold),
                None => true,
            };
            *count += hit as u32;
        }
    }
    counts
}

/// Fraction of `inner_samples` eavesdropper draws for which the outage event
/// holds at allocation `alloc`.
pub fn conditional_outage(
    instance: &ChannelInstance,
    alloc: &PowerAllocation,
    target: &TargetRate,
    inner_samples: usize,
    rng: &mut RngStream,
    mode: EventMode,
) -> Result<f64> {
    check_len(instance.n(), alloc.n())?;
    if inner_samples == 0 {
        return Err(Error::Config("inner sample count must be at least 1".into()));
    }
    let counts = count_outages(instance, &[Some(alloc.clone())], target, inner_samples, rng, mode);
    Ok(counts[0] as f64 / inner_samples as f64)
}

/// Channel instance drawn for outer index `index`.
pub fn outer_instance(config: &SimConfig, index: u64) -> ChannelInstance {
    let mut rng = RngStream::new(config.master_seed, stream_id(index, ROLE_INSTANCE));
    config.ensemble.sample_instance(&mut rng)
}

/// Evaluates outer instance `index` for every configured scheme.
pub fn evaluate_instance(config: &SimConfig, index: u64) -> Result<InstanceOutcome> {
    let instance = outer_instance(config, index);
    let inner = config.inner_samples as u32;
    let main_outage = instance.max_h_abs2() * config.budget <= config.target.threshold();
    if main_outage {
        let outage_counts = match config.main_outage_policy {
            MainOutagePolicy::Exclude => Vec::new(),
            MainOutagePolicy::CountAsOutage => vec![inner; config.schemes.len()],
        };
        return Ok(InstanceOutcome { main_outage, outage_counts });
    }
    let allocations = config
        .schemes
        .iter()
        .map(|s| match s.allocate(&instance, config.budget, &config.target) {
            Ok(a) => Ok(Some(a)),
            // Within the feasibility margin of the boundary: the bound is vacuous.
            Err(Error::InfeasibleTarget) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = RngStream::new(config.master_seed, stream_id(index, ROLE_INNER));
    let outage_counts = count_outages(
        &instance,
        &allocations,
        &config.target,
        config.inner_samples,
        &mut rng,
        config.event_mode,
    );
    Ok(InstanceOutcome { main_outage, outage_counts })
}

/// Reduces per-instance outcomes (in outer-index order) to one estimate per
/// configured scheme.
pub fn aggregate(config: &SimConfig, outcomes: &[InstanceOutcome]) -> Result<Vec<OutageEstimate>> {
    let outer_total = outcomes.len();
    let outer_used = outcomes.iter().filter(|o| !o.main_outage).count();
    if outer_total == 0 {
        return Err(Error::NoData);
    }
    let main_outage_frac = 1.0 - outer_used as f64 / outer_total as f64;
    let inner = config.inner_samples as f64;

    let mut estimates = Vec::with_capacity(config.schemes.len());
    for (k, &scheme) in config.schemes.iter().enumerate() {
        let probs: Vec<f64> = outcomes
            .iter()
            .filter(|o| !o.outage_counts.is_empty())
            .map(|o| o.outage_counts[k] as f64 / inner)
            .collect();
        if probs.is_empty() {
            return Err(Error::NoData);
        }
        let n = probs.len() as f64;
        let mean = probs.iter().sum::<f64>() / n;
        let std_err = if probs.len() > 1 {
            let ss: f64 = probs.iter().map(|q| (q - mean) * (q - mean)).sum();
            libm::sqrt(ss / (n - 1.0) / n)
        } else {
            libm::sqrt(mean * (1.0 - mean) / inner)
        };
        estimates.push(OutageEstimate {
            scheme,
            p_hat: mean.clamp(0.0, 1.0),
            std_err,
            outer_used,
            outer_total,
            main_outage_frac,
        });
    }
    Ok(estimates)
}

/// Sequential driver: evaluates every outer instance in order and aggregates.
pub fn scheme_outage(config: &SimConfig) -> Result<Vec<OutageEstimate>> {
    config.validate()?;
    let outcomes = (0..config.outer_samples as u64)
        .map(|i| evaluate_instance(config, i))
        .collect::<Result<Vec<_>>>()?;
    aggregate(config, &outcomes)
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Target rate `rs0` in bits per channel use.
    Rs0,
    /// Multiplier on every uncertainty variance.
    Eps2Scale,
    /// Channel count, keeping the two-group uncertainty layout.
    NChannels,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Rs0 => "rs0",
            SweepParam::Eps2Scale => "eps2_scale",
            SweepParam::NChannels => "n_channels",
        }
    }

    /// `base` with this parameter set to `value`. The master seed is kept, so
    /// all sweep points share their random streams.
    pub fn apply(self, base: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut config = base.clone();
        match self {
            SweepParam::Rs0 => config.target = TargetRate::new(value)?,
            SweepParam::Eps2Scale => config.ensemble = base.ensemble.with_eps2_scaled(value)?,
            SweepParam::NChannels => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(Error::Domain { name: "n_channels", value });
                }
                config.ensemble = base.ensemble.resized(value as usize)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rs0" => Ok(SweepParam::Rs0),
            "eps2_scale" => Ok(SweepParam::Eps2Scale),
            "n_channels" => Ok(SweepParam::NChannels),
            other => Err(Error::Config(alloc::format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub estimate: OutageEstimate,
    pub main_outage_closed_form: f64,
}

/// Configurations of every sweep point, validated before anything runs.
pub fn sweep_configs(base: &SimConfig, param: SweepParam, values: &[f64]) -> Result<Vec<(f64, SimConfig)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values.iter().map(|&v| Ok((v, param.apply(base, v)?))).collect()
}

/// Rows for one sweep point, ordered by scheme name.
pub fn sweep_rows(param: SweepParam, value: f64, config: &SimConfig, estimates: Vec<OutageEstimate>) -> Result<Vec<SweepRow>> {
    let closed = config.main_outage_closed_form()?;
    let mut rows: Vec<SweepRow> = estimates
        .into_iter()
        .map(|estimate| SweepRow { param, value, estimate, main_outage_closed_form: closed })
        .collect();
    rows.sort_by(|a, b| a.estimate.scheme.name().cmp(b.estimate.scheme.name()));
    Ok(rows)
}

/// Orders rows by sweep value, then scheme name.
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.estimate.scheme.name().cmp(b.estimate.scheme.name()))
    });
}

/// Sequential sweep: one [`scheme_outage`] run per value.
pub fn sweep(base: &SimConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (value, config) in sweep_configs(base, param, values)? {
        let estimates = scheme_outage(&config)?;
        rows.extend(sweep_rows(param, value, &config, estimates)?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(config: SimConfig) -> SimConfig {
        config.with_samples(40, 50).with_seed(11)
    }

    #[test]
    fn deterministic_outcomes() {
        let inst = ChannelInstance::from_squared_magnitudes(&[0.6, 0.1], &[0.05, 0.2], &[0.0, 0.0]).unwrap();
        let t = TargetRate::from_threshold(0.01).unwrap();
        let a = PowerAllocation::new(vec![0.1, 0.0], 0.1).unwrap();
        let mut rng = RngStream::new(1, 1);
        // 0.06 - 0.01 > 0.005 on every draw.
        assert_eq!(conditional_outage(&inst, &a, &t, 100, &mut rng, EventMode::BoundEvent).unwrap(), 0.0);
        let a = PowerAllocation::new(vec![0.0, 0.1], 0.1).unwrap();
        // 0.01 - 0.01 < 0.02.
        assert_eq!(conditional_outage(&inst, &a, &t, 100, &mut rng, EventMode::BoundEvent).unwrap(), 1.0);
    }

    #[test]
    fn no_eavesdropper_zero_target() {
        let ensemble = FadingEnsemble::uniform(3, 0.6, 1e-300, 0.0).unwrap();
        let config = tiny(SimConfig::new(ensemble, 0.1, TargetRate::new(0.0).unwrap()));
        for est in scheme_outage(&config).unwrap() {
            assert_eq!(est.p_hat, 0.0, "{est:?}");
        }
    }

    #[test]
    fn bookkeeping_identities() {
        let config = tiny(SimConfig::reference(4).unwrap());
        let est = scheme_outage(&config).unwrap();
        assert_eq!(est.len(), 4);
        for e in &est {
            assert_eq!(e.outer_total, 40);
            assert!(e.outer_used <= e.outer_total);
            assert_eq!(e.outer_used as f64 / e.outer_total as f64 + e.main_outage_frac, 1.0);
            assert_eq!(e.main_outage_frac, est[0].main_outage_frac);
            assert!((0.0..=1.0).contains(&e.p_hat) && e.std_err >= 0.0);
        }
    }

    #[test]
    fn all_main_outage_is_no_data() {
        let mut config = tiny(SimConfig::reference(2).unwrap());
        config.target = TargetRate::new(1e6).unwrap();
        assert_eq!(scheme_outage(&config), Err(Error::NoData));
        config.main_outage_policy = MainOutagePolicy::CountAsOutage;
        for e in scheme_outage(&config).unwrap() {
            assert_eq!(e.p_hat, 1.0);
            assert_eq!(e.outer_used, 0);
        }
    }

    #[test]
    fn single_value_sweep_matches_direct_run() {
        let config = tiny(SimConfig::reference(3).unwrap());
        let eps = sweep(&config, SweepParam::Eps2Scale, &[1.0]).unwrap();
        let mut direct = scheme_outage(&config).unwrap();
        direct.sort_by(|a, b| a.scheme.name().cmp(b.scheme.name()));
        assert_eq!(eps.len(), direct.len());
        for (row, d) in eps.iter().zip(&direct) {
            assert_eq!(&row.estimate, d);
        }
        let rs0 = config.target.rs0();
        let rows = sweep(&config, SweepParam::Rs0, &[rs0]).unwrap();
        for (row, d) in rows.iter().zip(&direct) {
            assert_eq!(&row.estimate, d);
        }
    }

    #[test]
    fn sweep_rows_are_sorted() {
        let config = tiny(SimConfig::reference(2).unwrap());
        let rows = sweep(&config, SweepParam::NChannels, &[3.0, 1.0, 2.0]).unwrap();
        let keys: Vec<(f64, &str)> = rows.iter().map(|r| (r.value, r.estimate.scheme.name())).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        assert_eq!(keys, sorted);
        assert!(sweep(&config, SweepParam::NChannels, &[2.5]).is_err());
        assert!(sweep(&config, SweepParam::Rs0, &[]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(tiny(SimConfig::reference(2).unwrap()).with_samples(0, 3).validate().is_err());
        let mut c = tiny(SimConfig::reference(2).unwrap());
        c.schemes.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("exact_rate".parse::<EventMode>().unwrap(), EventMode::ExactRate);
        assert_eq!("eps2_scale".parse::<SweepParam>().unwrap(), SweepParam::Eps2Scale);
        assert!("n".parse::<SweepParam>().is_err());
    }
}
