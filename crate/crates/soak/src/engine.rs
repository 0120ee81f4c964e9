//! Multi-threaded drivers. Every unit of work draws from its own sub-stream
//! and results are reduced in index order, so the output does not depend on
//! the thread count.

use rayon::prelude::*;
use rayon::ThreadPool;

use soak_core::channel::ChannelInstance;
use soak_core::montecarlo::{aggregate, evaluate_instance, sort_rows, sweep_configs, sweep_rows};
use soak_core::stats::{mix64, RngStream};
use soak_core::{FadingEnsemble, FadingMode, OutageEstimate, Result, SimConfig, SweepParam, SweepRow, TargetRate};

use soak_core::Complex64;

/// Samples per independently seeded chunk in the plain Monte Carlo estimators.
pub const CHUNK: usize = 1 << 16;

/// A rayon pool with `threads` workers; 0 means one per core.
pub fn pool(threads: usize) -> std::result::Result<ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build()
}

/// Parallel counterpart of [`soak_core::montecarlo::scheme_outage`] with identical output.
pub fn scheme_outage(config: &SimConfig) -> Result<Vec<OutageEstimate>> {
    config.validate()?;
    let outcomes = (0..config.outer_samples as u64)
        .into_par_iter()
        .map(|i| evaluate_instance(config, i))
        .collect::<Result<Vec<_>>>()?;
    aggregate(config, &outcomes)
}

/// Parallel counterpart of [`soak_core::montecarlo::sweep`] with identical output.
pub fn sweep(base: &SimConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (value, config) in sweep_configs(base, param, values)? {
        let estimates = scheme_outage(&config)?;
        rows.extend(sweep_rows(param, value, &config, estimates)?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// A Bernoulli frequency with its normal-approximation standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency {
    pub hits: u64,
    pub trials: u64,
}

impl Frequency {
    pub fn p_hat(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    pub fn std_err(&self) -> f64 {
        let p = self.p_hat();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Counts `samples` trials split into fixed-size chunks. Each trial returns a
/// bit mask of `width` events; chunk `c` draws from stream
/// `(seed, mix64(key ^ mix64(c)))`.
fn chunked_count<F>(samples: usize, width: usize, seed: u64, key: u64, trial: F) -> Vec<u64>
where
    F: Fn(&mut RngStream) -> u32 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::new(seed, mix64(key ^ mix64(c as u64)));
            let len = CHUNK.min(samples - c * CHUNK);
            let mut counts = vec![0u64; width];
            for _ in 0..len {
                let mask = trial(&mut rng);
                for (bit, n) in counts.iter_mut().enumerate() {
                    *n += ((mask >> bit) & 1) as u64;
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; width];
    for counts in partial {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    total
}

/// Empirical frequency of `|h_i| < |g_i|` on every channel.
pub fn complete_outage_mc(instance: &ChannelInstance, samples: usize, seed: u64, key: u64) -> Frequency {
    let h_abs2: Vec<f64> = instance.h_abs2().collect();
    let zero = Complex64::new(0.0, 0.0);
    let counts = chunked_count(samples, 1, seed, key, |rng| {
        let mut all = true;
        for ((g_hat, &eps2), &h2) in instance.g_hat().iter().zip(instance.eps2()).zip(&h_abs2) {
            let err = soak_core::sample_complex_gaussian(zero, eps2, rng).expect("validated");
            all &= h2 < (g_hat + err).norm_sqr();
        }
        all as u32
    });
    Frequency { hits: counts[0], trials: samples as u64 }
}

/// Monte Carlo counterparts of the fading closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingFrequencies {
    pub complete_outage: Frequency,
    pub main_outage: Frequency,
}

/// Samples `h_i ~ CN(0, sigma_m2_i)` and an eavesdropper gain with the
/// variance `mode` prescribes. The variance-additive mode draws `g_hat` and the
/// error separately; the scale-additive mode draws `g` directly.
pub fn fading_mc(
    ensemble: &FadingEnsemble,
    mode: FadingMode,
    budget: f64,
    target: &TargetRate,
    samples: usize,
    seed: u64,
    key: u64,
) -> FadingFrequencies {
    let zero = Complex64::new(0.0, 0.0);
    let threshold = target.threshold();
    let n = ensemble.n();
    let counts = chunked_count(samples, 2, seed, key, |rng| {
        let mut complete = true;
        let mut strongest = 0.0f64;
        for i in 0..n {
            let h = soak_core::sample_complex_gaussian(zero, ensemble.sigma_m2()[i], rng).expect("validated");
            let g = match mode {
                FadingMode::ScaleAdditive => {
                    let var = mode.eavesdropper_variance(ensemble.sigma_e2()[i], ensemble.eps2()[i]);
                    soak_core::sample_complex_gaussian(zero, var, rng).expect("validated")
                }
                FadingMode::VarianceAdditive => {
                    let g_hat = soak_core::sample_complex_gaussian(zero, ensemble.sigma_e2()[i], rng).expect("validated");
                    soak_core::sample_complex_gaussian(g_hat, ensemble.eps2()[i], rng).expect("validated")
                }
            };
            complete &= h.norm_sqr() <= g.norm_sqr();
            strongest = strongest.max(h.norm_sqr());
        }
        complete as u32 | ((strongest * budget <= threshold) as u32) << 1
    });
    FadingFrequencies {
        complete_outage: Frequency { hits: counts[0], trials: samples as u64 },
        main_outage: Frequency { hits: counts[1], trials: samples as u64 },
    }
}
