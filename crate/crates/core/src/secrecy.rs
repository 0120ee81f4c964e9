//! Secrecy rates and closed-form outage probabilities.

use core::f64::consts::LN_2;
use core::fmt;
use core::str::FromStr;

use crate::allocation::PowerAllocation;
use crate::channel::{ChannelInstance, EavesdropperRealization, FadingEnsemble};
use crate::error::{check_len, check_nonnegative, check_positive, Error, Result};
use crate::stats::NoncentralChi2Dof2;

/// Target secrecy rate in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRate {
    rs0: f64,
}

impl TargetRate {
    pub fn new(rs0: f64) -> Result<Self> {
        Ok(Self { rs0: check_nonnegative("rs0", rs0)? })
    }

    /// `rs0 = factor * budget * sigma_m2 / (2 ln 2)`, so that the threshold
    /// equals `factor * budget * sigma_m2`.
    pub fn from_factor(factor: f64, budget: f64, sigma_m2: f64) -> Result<Self> {
        Self::new(factor * budget * sigma_m2 / (2.0 * LN_2))
    }

    /// Target whose threshold `2 ln(2) rs0` is `threshold`.
    pub fn from_threshold(threshold: f64) -> Result<Self> {
        Self::new(check_nonnegative("threshold", threshold)? / (2.0 * LN_2))
    }

    pub fn rs0(&self) -> f64 {
        self.rs0
    }

    /// `2 ln(2) rs0`, the rate target on the linear low-SNR scale.
    pub fn threshold(&self) -> f64 {
        2.0 * LN_2 * self.rs0
    }
}

/// How the eavesdropper gain variance combines in fading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingMode {
    /// `|g_i|` Rayleigh with scale `(sigma_e_i + eps_i) / sqrt(2)`: the
    /// standard deviations add.
    #[default]
    ScaleAdditive,
    /// `g_i = g_hat_i + g_tilde_i` as a sum of independent circular Gaussians:
    /// the variances add.
    VarianceAdditive,
}

impl FadingMode {
    /// Variance of the eavesdropper gain `g_i` under this mode.
    pub fn eavesdropper_variance(self, sigma_e2: f64, eps2: f64) -> f64 {
        match self {
            FadingMode::ScaleAdditive => {
                let s = libm::sqrt(sigma_e2) + libm::sqrt(eps2);
                s * s
            }
            FadingMode::VarianceAdditive => sigma_e2 + eps2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FadingMode::ScaleAdditive => "scale-additive",
            FadingMode::VarianceAdditive => "variance-additive",
        }
    }
}

impl fmt::Display for FadingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FadingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "scale-additive" => Ok(FadingMode::ScaleAdditive),
            "variance-additive" => Ok(FadingMode::VarianceAdditive),
            other => Err(Error::Config(alloc::format!("unknown fading mode {other:?}"))),
        }
    }
}

fn check_shapes(instance: &ChannelInstance, realization: &EavesdropperRealization, alloc: &PowerAllocation) -> Result<()> {
    check_len(instance.n(), realization.n())?;
    check_len(instance.n(), alloc.n())
}

/// `sum_i [ log2(1 + |h_i|^2 P_i)/2 - log2(1 + |g_i|^2 P_i)/2 ]^+` at the given
/// allocation.
pub fn secrecy_rate_exact(
    instance: &ChannelInstance,
    realization: &EavesdropperRealization,
    alloc: &PowerAllocation,
) -> Result<f64> {
    check_shapes(instance, realization, alloc)?;
    Ok(instance
        .h_abs2()
        .zip(realization.g_abs2())
        .zip(alloc.powers())
        .map(|((h2, g2), &p)| (0.5 * (libm::log1p(h2 * p) - libm::log1p(g2 * p)) / LN_2).max(0.0))
        .sum())
}

/// Low-SNR secrecy rate `sum_i [|h_i|^2 - |g_i|^2]^+ P_i / (2 ln 2)`.
pub fn secrecy_rate_low_snr(
    instance: &ChannelInstance,
    realization: &EavesdropperRealization,
    alloc: &PowerAllocation,
) -> Result<f64> {
    check_shapes(instance, realization, alloc)?;
    Ok(clipped_advantage(instance, realization.g_abs2(), alloc.powers()) / (2.0 * LN_2))
}

/// `sum_i [|h_i|^2 - |g_i|^2]^+ P_i`.
pub(crate) fn clipped_advantage(
    instance: &ChannelInstance,
    g_abs2: impl Iterator<Item = f64>,
    powers: &[f64],
) -> f64 {
    instance
        .h_abs2()
        .zip(g_abs2)
        .zip(powers)
        .map(|((h2, g2), &p)| (h2 - g2).max(0.0) * p)
        .sum()
}

/// `sum_i |h_i|^2 P_i - threshold < sum_i |g_i|^2 P_i`, the event bounded by
/// the Markov inequality. It contains the event `R_s < rs0`.
pub fn bound_event(
    instance: &ChannelInstance,
    realization: &EavesdropperRealization,
    alloc: &PowerAllocation,
    target: &TargetRate,
) -> Result<bool> {
    check_shapes(instance, realization, alloc)?;
    let served = served_power(instance, alloc.powers());
    let leaked: f64 = realization.g_abs2().zip(alloc.powers()).map(|(g2, p)| g2 * p).sum();
    Ok(served - target.threshold() < leaked)
}

/// `R_s < rs0` under the low-SNR rate, compared on the linear scale.
pub fn rate_outage_event(
    instance: &ChannelInstance,
    realization: &EavesdropperRealization,
    alloc: &PowerAllocation,
    target: &TargetRate,
) -> Result<bool> {
    check_shapes(instance, realization, alloc)?;
    Ok(clipped_advantage(instance, realization.g_abs2(), alloc.powers()) < target.threshold())
}

pub(crate) fn served_power(instance: &ChannelInstance, powers: &[f64]) -> f64 {
    instance.h_abs2().zip(powers).map(|(h2, p)| h2 * p).sum()
}

/// Central-approximation probability that every channel satisfies
/// `|h_i| < |g_i|`: `exp(-sum_i |h_i|^2 / (|g_hat_i|^2 + eps2_i))`.
///
/// A channel with `|g_hat_i|^2 + eps2_i = 0` contributes factor 1 if `h_i = 0`
/// and 0 otherwise.
pub fn complete_outage_instantaneous_approx(instance: &ChannelInstance) -> f64 {
    let mut exponent = 0.0;
    for ((h2, g2), &e2) in instance.h_abs2().zip(instance.g_hat_abs2()).zip(instance.eps2()) {
        let scale = g2 + e2;
        if scale > 0.0 {
            exponent += h2 / scale;
        } else if h2 > 0.0 {
            return 0.0;
        }
    }
    libm::exp(-exponent)
}

/// Exact probability that `|h_i| < |g_i|` on channel `i`: the upper tail of the
/// noncentral chi-square at `2|h|^2/eps2` with noncentrality `2|g_hat|^2/eps2`.
/// With `eps2 = 0` the comparison is deterministic.
pub fn channel_outage_exact(h_abs2: f64, g_hat_abs2: f64, eps2: f64) -> Result<f64> {
    if eps2 == 0.0 {
        return Ok(if h_abs2 < g_hat_abs2 { 1.0 } else { 0.0 });
    }
    let law = NoncentralChi2Dof2::new(2.0 * g_hat_abs2 / eps2)?;
    law.sf(2.0 * h_abs2 / eps2)
}

/// Exact probability that every channel satisfies `|h_i| < |g_i|`.
pub fn complete_outage_instantaneous_exact(instance: &ChannelInstance) -> Result<f64> {
    let mut prob = 1.0;
    for ((h2, g2), &e2) in instance.h_abs2().zip(instance.g_hat_abs2()).zip(instance.eps2()) {
        prob *= channel_outage_exact(h2, g2, e2)?;
    }
    Ok(prob.clamp(0.0, 1.0))
}

/// Complete secrecy outage under Rayleigh fading: `prod_i 1 / (1 + rho_i)` with
/// `rho_i = sigma_m2_i / var(g_i)`.
pub fn complete_outage_fading(ensemble: &FadingEnsemble, mode: FadingMode) -> f64 {
    ensemble
        .sigma_m2()
        .iter()
        .zip(ensemble.sigma_e2())
        .zip(ensemble.eps2())
        .map(|((&sm2, &se2), &e2)| 1.0 / (1.0 + sm2 / mode.eavesdropper_variance(se2, e2)))
        .product()
}

/// Probability that even the strongest main channel cannot sustain the target
/// with the full budget: `prod_i (1 - exp(-threshold / (P sigma_m2_i)))`.
pub fn main_channel_outage_fading(ensemble: &FadingEnsemble, budget: f64, target: &TargetRate) -> Result<f64> {
    let budget = check_positive("budget", budget)?;
    let threshold = target.threshold();
    Ok(ensemble
        .sigma_m2()
        .iter()
        .map(|&sm2| -libm::expm1(-threshold / (budget * sm2)))
        .product())
}

/// Markov bound on the outage event:
/// `sum_i (eps2_i + |g_hat_i|^2) P_i / (sum_i |h_i|^2 P_i - threshold)`.
///
/// Not clamped to 1. Fails when the main channel cannot carry the target at
/// this allocation.
pub fn markov_outage_bound(instance: &ChannelInstance, alloc: &PowerAllocation, target: &TargetRate) -> Result<f64> {
    check_len(instance.n(), alloc.n())?;
    let slack = served_power(instance, alloc.powers()) - target.threshold();
    if !(slack > 0.0) {
        return Err(Error::InfeasibleTarget);
    }
    let mean_leak: f64 = instance
        .g_hat_abs2()
        .zip(instance.eps2())
        .zip(alloc.powers())
        .map(|((g2, e2), p)| (e2 + g2) * p)
        .sum();
    Ok(mean_leak / slack)
}
