//! Channel realizations, fading ensembles and the flat-text fixture record.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{check_len, check_nonnegative, check_positive, Error, Result};
use crate::stats::{sample_complex_gaussian, RngStream};

/// Uncertainty variance of the first `ceil(n/2)` channels in the reference setup.
pub const DEFAULT_EPS2_HIGH: f64 = 0.3;
/// Uncertainty variance of the remaining channels in the reference setup.
pub const DEFAULT_EPS2_LOW: f64 = 0.09;
pub const DEFAULT_SIGMA_M2: f64 = 0.6;
pub const DEFAULT_SIGMA_E2: f64 = 0.3;
pub const DEFAULT_CHANNELS: usize = 10;

/// One realization of the main-channel gains `h`, the estimated eavesdropper
/// gains `g_hat` and the per-channel uncertainty variances `eps2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    h: Vec<Complex64>,
    g_hat: Vec<Complex64>,
    eps2: Vec<f64>,
}

impl ChannelInstance {
    pub fn new(h: Vec<Complex64>, g_hat: Vec<Complex64>, eps2: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Config("a channel instance needs at least one channel".into()));
        }
        check_len(h.len(), g_hat.len())?;
        check_len(h.len(), eps2.len())?;
        for &e in &eps2 {
            check_nonnegative("eps2", e)?;
        }
        for z in h.iter().chain(&g_hat) {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Domain { name: "gain", value: if z.re.is_finite() { z.im } else { z.re } });
            }
        }
        Ok(Self { h, g_hat, eps2 })
    }

    /// Instance with real, nonnegative gains given by their magnitudes.
    pub fn from_magnitudes(h_abs: &[f64], g_hat_abs: &[f64], eps2: &[f64]) -> Result<Self> {
        let real = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(real(h_abs), real(g_hat_abs), eps2.to_vec())
    }

    /// Instance with real gains given by squared magnitudes.
    pub fn from_squared_magnitudes(h_abs2: &[f64], g_hat_abs2: &[f64], eps2: &[f64]) -> Result<Self> {
        let real = |v: &[f64]| -> Result<Vec<Complex64>> {
            v.iter()
                .map(|&x| Ok(Complex64::new(libm::sqrt(check_nonnegative("squared gain", x)?), 0.0)))
                .collect()
        };
        Self::new(real(h_abs2)?, real(g_hat_abs2)?, eps2.to_vec())
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[Complex64] {
        &self.h
    }

    pub fn g_hat(&self) -> &[Complex64] {
        &self.g_hat
    }

    pub fn eps2(&self) -> &[f64] {
        &self.eps2
    }

    pub fn h_abs2(&self) -> impl Iterator<Item = f64> + '_ {
        self.h.iter().map(|z| z.norm_sqr())
    }

    pub fn g_hat_abs2(&self) -> impl Iterator<Item = f64> + '_ {
        self.g_hat.iter().map(|z| z.norm_sqr())
    }

    pub fn max_h_abs2(&self) -> f64 {
        self.h_abs2().fold(0.0, f64::max)
    }

    /// Serializes to the fixture record: one line per channel with
    /// `Re(h) Im(h) Re(g_hat) Im(g_hat) eps2`.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n() {
            let (h, g) = (self.h[i], self.g_hat[i]);
            let _ = writeln!(out, "{} {} {} {} {}", h.re, h.im, g.re, g.im, self.eps2[i]);
        }
        out
    }

    /// Parses a fixture record. Fields may be separated by whitespace or
    /// commas; blank lines and `#` comments are skipped.
    pub fn parse_record(text: &str) -> Result<Self> {
        let (mut h, mut g_hat, mut eps2) = (Vec::new(), Vec::new(), Vec::new());
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let fields = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            if fields.len() != 5 {
                return Err(parse_err(format!("expected 5 fields, found {}", fields.len())));
            }
            if !(fields[4] >= 0.0) {
                return Err(parse_err("eps2 must be nonnegative".to_string()));
            }
            h.push(Complex64::new(fields[0], fields[1]));
            g_hat.push(Complex64::new(fields[2], fields[3]));
            eps2.push(fields[4]);
        }
        if h.is_empty() {
            return Err(Error::Parse { line: 0, message: "record has no channels".into() });
        }
        Self::new(h, g_hat, eps2)
    }
}

/// Eavesdropper gains `g = g_hat + g_tilde` for one draw of the estimation error.
#[derive(Debug, Clone, PartialEq)]
pub struct EavesdropperRealization {
    g: Vec<Complex64>,
}

impl EavesdropperRealization {
    pub fn new(g: Vec<Complex64>) -> Self {
        Self { g }
    }

    pub fn g(&self) -> &[Complex64] {
        &self.g
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn g_abs2(&self) -> impl Iterator<Item = f64> + '_ {
        self.g.iter().map(|z| z.norm_sqr())
    }
}

/// Per-channel Rayleigh-fading parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingEnsemble {
    sigma_m2: Vec<f64>,
    sigma_e2: Vec<f64>,
    eps2: Vec<f64>,
}

impl FadingEnsemble {
    pub fn new(sigma_m2: Vec<f64>, sigma_e2: Vec<f64>, eps2: Vec<f64>) -> Result<Self> {
        if sigma_m2.is_empty() {
            return Err(Error::Config("a fading ensemble needs at least one channel".into()));
        }
        check_len(sigma_m2.len(), sigma_e2.len())?;
        check_len(sigma_m2.len(), eps2.len())?;
        for &s in &sigma_m2 {
            check_positive("sigma_m2", s)?;
        }
        for &s in &sigma_e2 {
            check_positive("sigma_e2", s)?;
        }
        for &e in &eps2 {
            check_nonnegative("eps2", e)?;
        }
        Ok(Self { sigma_m2, sigma_e2, eps2 })
    }

    /// Identical parameters on every channel.
    pub fn uniform(n: usize, sigma_m2: f64, sigma_e2: f64, eps2: f64) -> Result<Self> {
        Self::new(alloc::vec![sigma_m2; n], alloc::vec![sigma_e2; n], alloc::vec![eps2; n])
    }

    /// Two uncertainty groups: `eps2_high` on channels `0..ceil(n/2)`,
    /// `eps2_low` on the rest.
    pub fn split_uncertainty(
        n: usize,
        sigma_m2: f64,
        sigma_e2: f64,
        eps2_high: f64,
        eps2_low: f64,
    ) -> Result<Self> {
        let high = n.div_ceil(2);
        let eps2 = (0..n).map(|i| if i < high { eps2_high } else { eps2_low }).collect();
        Self::new(alloc::vec![sigma_m2; n], alloc::vec![sigma_e2; n], eps2)
    }

    /// The reference ensemble: `sigma_m2 = 0.6`, `sigma_e2 = 0.3`, `eps2` split 0.3 / 0.09.
    pub fn reference(n: usize) -> Result<Self> {
        Self::split_uncertainty(n, DEFAULT_SIGMA_M2, DEFAULT_SIGMA_E2, DEFAULT_EPS2_HIGH, DEFAULT_EPS2_LOW)
    }

    pub fn n(&self) -> usize {
        self.sigma_m2.len()
    }

    pub fn sigma_m2(&self) -> &[f64] {
        &self.sigma_m2
    }

    pub fn sigma_e2(&self) -> &[f64] {
        &self.sigma_e2
    }

    pub fn eps2(&self) -> &[f64] {
        &self.eps2
    }

    /// Multiplies every uncertainty variance by `factor`.
    pub fn with_eps2_scaled(&self, factor: f64) -> Result<Self> {
        check_nonnegative("eps2 scale", factor)?;
        let eps2 = self.eps2.iter().map(|e| e * factor).collect();
        Self::new(self.sigma_m2.clone(), self.sigma_e2.clone(), eps2)
    }

    /// Rebuilds the ensemble with `n` channels, keeping the two-group layout:
    /// the first `ceil(n/2)` channels take the parameters of the current first
    /// channel, the rest those of the current last channel.
    pub fn resized(&self, n: usize) -> Result<Self> {
        let high = n.div_ceil(2);
        let last = self.n() - 1;
        let pick = |v: &[f64]| (0..n).map(|i| if i < high { v[0] } else { v[last] }).collect();
        Self::new(pick(&self.sigma_m2), pick(&self.sigma_e2), pick(&self.eps2))
    }

    /// Draws `h_i ~ CN(0, sigma_m2_i)` and `g_hat_i ~ CN(0, sigma_e2_i)`.
    pub fn sample_instance(&self, rng: &mut RngStream) -> ChannelInstance {
        let zero = Complex64::new(0.0, 0.0);
        let mut h = Vec::with_capacity(self.n());
        let mut g_hat = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            h.push(sample_complex_gaussian(zero, self.sigma_m2[i], rng).expect("validated variance"));
            g_hat.push(sample_complex_gaussian(zero, self.sigma_e2[i], rng).expect("validated variance"));
        }
        ChannelInstance { h, g_hat, eps2: self.eps2.clone() }
    }
}

/// Draws `g_i = g_hat_i + g_tilde_i` with `g_tilde_i ~ CN(0, eps2_i)`
/// independently per channel.
pub fn sample_eavesdropper(instance: &ChannelInstance, rng: &mut RngStream) -> EavesdropperRealization {
    let mut g = Vec::with_capacity(instance.n());
    fill_eavesdropper(instance, rng, &mut g);
    EavesdropperRealization { g }
}

/// Same as [`sample_eavesdropper`] but reuses `buf`.
pub(crate) fn fill_eavesdropper(instance: &ChannelInstance, rng: &mut RngStream, buf: &mut Vec<Complex64>) {
    buf.clear();
    for (g_hat, &eps2) in instance.g_hat.iter().zip(&instance.eps2) {
        buf.push(sample_complex_gaussian(*g_hat, eps2, rng).expect("validated variance"));
    }
}

pub fn sample_instance(ensemble: &FadingEnsemble, rng: &mut RngStream) -> ChannelInstance {
    ensemble.sample_instance(rng)
}
