//! Chi-square distributions with two degrees of freedom and reproducible
//! random streams.
//!
//! With two degrees of freedom the central chi-square law is exponential, and
//! the noncentral CDF is `1 - Q1(sqrt(lambda2), sqrt(eta))` where `Q1` is the
//! first-order Marcum Q function. The noncentral CDF is evaluated by the
//! Poisson mixture of central chi-square CDFs with `2 + 2k` degrees of freedom.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_nonnegative, Error, Result};

/// Mixture terms below this magnitude (past the Poisson mode) end the series.
pub const SERIES_TOLERANCE: f64 = 1e-14;

/// Hard cap on mixture terms.
pub const SERIES_MAX_TERMS: usize = 10_000;

/// `Pr(X < eta)` for a central chi-square `X` with two degrees of freedom.
pub fn central_chi2_cdf_dof2(eta: f64) -> Result<f64> {
    let eta = check_nonnegative("eta", eta)?;
    Ok(-libm::expm1(-0.5 * eta))
}

/// `Pr(X < eta)` for a noncentral chi-square `X` with two degrees of freedom
/// and noncentrality `lambda2`.
pub fn noncentral_chi2_cdf_dof2(eta: f64, lambda2: f64) -> Result<f64> {
    NoncentralChi2Dof2::new(lambda2)?.cdf(eta)
}

/// Central approximation of the noncentral CDF: the threshold is shrunk by
/// `1 + lambda2 / 2` and evaluated against the central law.
pub fn approx_noncentral_chi2_cdf_dof2(eta: f64, lambda2: f64) -> Result<f64> {
    NoncentralChi2Dof2::new(lambda2)?.approx_cdf(eta)
}

/// Noncentral chi-square law with two degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChi2Dof2 {
    lambda2: f64,
}

impl NoncentralChi2Dof2 {
    pub fn new(lambda2: f64) -> Result<Self> {
        let lambda2 = check_nonnegative("lambda2", lambda2)?;
        Ok(Self { lambda2 })
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Mean of the distribution, `2 + lambda2`.
    pub fn mean(&self) -> f64 {
        2.0 + self.lambda2
    }

    /// Exact CDF by the Poisson mixture series.
    pub fn cdf(&self, eta: f64) -> Result<f64> {
        let eta = check_nonnegative("eta", eta)?;
        if eta == 0.0 {
            return Ok(0.0);
        }
        let mu = 0.5 * self.lambda2;
        if mu == 0.0 {
            return central_chi2_cdf_dof2(eta);
        }
        let x = 0.5 * eta;
        let ln_x = libm::log(x);
        let ln_mu = libm::log(mu);

        // lower: P(Gamma(k + 1, 1) <= x), stepped down by the Poisson(x) pmf at k + 1.
        let mut lower = -libm::expm1(-x);
        let mut ln_step = -x + ln_x;
        let mut ln_weight = -mu;
        let mut sum = 0.0;
        for k in 0..SERIES_MAX_TERMS {
            let term = libm::exp(ln_weight) * lower;
            sum += term;
            let past_mode = (k + 1) as f64 >= 2.0 * mu;
            if lower <= 0.0 || (past_mode && term < SERIES_TOLERANCE) {
                return Ok(sum.clamp(0.0, 1.0));
            }
            let m = (k + 1) as f64;
            lower = (lower - libm::exp(ln_step)).max(0.0);
            ln_step += ln_x - libm::log(m + 1.0);
            ln_weight += ln_mu - libm::log(m);
        }
        Err(Error::NonConvergence(SERIES_MAX_TERMS))
    }

    /// Upper tail `Pr(X > eta)`, i.e. the Marcum `Q1(sqrt(lambda2), sqrt(eta))`.
    pub fn sf(&self, eta: f64) -> Result<f64> {
        Ok(1.0 - self.cdf(eta)?)
    }

    pub fn approx_cdf(&self, eta: f64) -> Result<f64> {
        let eta = check_nonnegative("eta", eta)?;
        Ok(-libm::expm1(-eta / (2.0 + self.lambda2)))
    }
}

/// First-order Marcum Q function `Q1(a, b)` for `a, b >= 0`.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    let a = check_nonnegative("a", a)?;
    let b = check_nonnegative("b", b)?;
    NoncentralChi2Dof2::new(a * a)?.sf(b * b)
}

/// SplitMix64 finalizer, used to derive sub-stream identifiers.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream.
///
/// ChaCha8 keyed by `master_seed` (expanded with the `rand_core` PCG32 seeding
/// routine) with the 64-bit ChaCha stream parameter set to `stream_id`. The
/// output depends only on the pair, never on the platform or thread layout.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream under the same master seed.
    pub fn sibling(&self, stream_id: u64) -> Self {
        Self::new(self.master_seed, stream_id)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws from the circularly symmetric complex Gaussian `CN(mean, variance)`.
///
/// Each component gets variance `variance / 2`. Two normals are consumed even
/// when `variance == 0`, so streams stay aligned across parameter changes.
pub fn sample_complex_gaussian(
    mean: Complex64,
    variance: f64,
    rng: &mut RngStream,
) -> Result<Complex64> {
    let variance = check_nonnegative("variance", variance)?;
    let scale = libm::sqrt(0.5 * variance);
    let re = rng.standard_normal();
    let im = rng.standard_normal();
    Ok(Complex64::new(mean.re + scale * re, mean.im + scale * im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_known_points() {
        assert_eq!(central_chi2_cdf_dof2(0.0).unwrap(), 0.0);
        assert!((central_chi2_cdf_dof2(2.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((central_chi2_cdf_dof2(1e9).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            central_chi2_cdf_dof2(-1.0),
            Err(Error::Domain { name: "eta", .. })
        ));
    }

    #[test]
    fn noncentral_reduces_to_central() {
        for eta in [0.1, 1.0, 2.0, 7.5, 30.0] {
            let a = noncentral_chi2_cdf_dof2(eta, 0.0).unwrap();
            let b = central_chi2_cdf_dof2(eta).unwrap();
            assert_eq!(a, b);
        }
        assert!((noncentral_chi2_cdf_dof2(2.0, 0.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-12);
        assert_eq!(noncentral_chi2_cdf_dof2(0.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn approx_known_points() {
        assert!((approx_noncentral_chi2_cdf_dof2(2.0, 0.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-12);
        assert!((approx_noncentral_chi2_cdf_dof2(2.0, 2.0).unwrap() - 0.393_469_340_287_366_6).abs() < 1e-12);
        assert_eq!(approx_noncentral_chi2_cdf_dof2(0.0, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn negative_inputs_rejected() {
        assert!(noncentral_chi2_cdf_dof2(-0.1, 1.0).is_err());
        assert!(noncentral_chi2_cdf_dof2(1.0, -0.1).is_err());
        assert!(approx_noncentral_chi2_cdf_dof2(1.0, f64::NAN).is_err());
    }

    #[test]
    fn large_noncentrality_does_not_underflow() {
        // Mean 2 + 2000; the mass sits far above eta = 500 and far below eta = 4000.
        let d = NoncentralChi2Dof2::new(2000.0).unwrap();
        assert!(d.cdf(500.0).unwrap() < 1e-12);
        assert!(d.cdf(4000.0).unwrap() > 1.0 - 1e-12);
        let mid = d.cdf(2002.0).unwrap();
        assert!(mid > 0.3 && mid < 0.7, "{mid}");
    }

    #[test]
    fn series_cap_reports_nonconvergence() {
        let d = NoncentralChi2Dof2::new(1e6).unwrap();
        assert_eq!(d.cdf(1e6), Err(Error::NonConvergence(SERIES_MAX_TERMS)));
    }

    #[test]
    fn zero_variance_returns_mean() {
        let mut rng = RngStream::new(3, 0);
        let mean = Complex64::new(0.25, -1.5);
        assert_eq!(sample_complex_gaussian(mean, 0.0, &mut rng).unwrap(), mean);
        assert!(sample_complex_gaussian(mean, -1.0, &mut rng).is_err());
    }

    #[test]
    fn equal_streams_match_and_distinct_streams_differ() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        let mut c = RngStream::new(42, 8);
        let xa: alloc::vec::Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
        let xb: alloc::vec::Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
        let xc: alloc::vec::Vec<u64> = (0..64).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }
}
