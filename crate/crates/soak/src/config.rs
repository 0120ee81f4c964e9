//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # reference experiment
//! n = 10
//! p_budget = 0.1
//! rs0_factor = 0.625
//! sigma_m2 = 0.6
//! sigma_e2 = 0.3
//! eps2_high = 0.3
//! eps2_low = 0.09
//! outer = 10000
//! inner = 10000
//! seed = 0
//! schemes = equal,capacity,secrecy,robust
//! event_mode = bound_event
//! ```
//!
//! Every key is optional; missing keys take the values shown.

use std::path::Path;

use soak_core::montecarlo::{DEFAULT_SAMPLES, DESK_SAMPLES};
use soak_core::{Error, EventMode, FadingEnsemble, Scheme, SimConfig, TargetRate};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p_budget: f64,
    /// `rs0 = rs0_factor * p_budget * sigma_m2 / (2 ln 2)`.
    pub rs0_factor: f64,
    /// Explicit target rate; takes precedence over `rs0_factor`. Command line only.
    pub rs0: Option<f64>,
    pub sigma_m2: f64,
    pub sigma_e2: f64,
    pub eps2_high: f64,
    pub eps2_low: f64,
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub event_mode: EventMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 10,
            p_budget: 0.1,
            rs0_factor: 0.625,
            rs0: None,
            sigma_m2: 0.6,
            sigma_e2: 0.3,
            eps2_high: 0.3,
            eps2_low: 0.09,
            outer: DEFAULT_SAMPLES,
            inner: DEFAULT_SAMPLES,
            seed: 0,
            schemes: Scheme::ALL.to_vec(),
            event_mode: EventMode::BoundEvent,
        }
    }
}

impl ExperimentConfig {
    /// Reduced `10^3 x 10^3` sample counts.
    pub fn desk() -> Self {
        Self { outer: DESK_SAMPLES, inner: DESK_SAMPLES, ..Self::default() }
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), Error> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: idx + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(m) => err(m),
                other => err(other.to_string()),
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| Error::Config(format!("{key}: {value:?}: {e}")))
        }
        match key {
            "n" => self.n = num(key, value)?,
            "p_budget" => self.p_budget = num(key, value)?,
            "rs0_factor" => self.rs0_factor = num(key, value)?,
            "sigma_m2" => self.sigma_m2 = num(key, value)?,
            "sigma_e2" => self.sigma_e2 = num(key, value)?,
            "eps2_high" => self.eps2_high = num(key, value)?,
            "eps2_low" => self.eps2_low = num(key, value)?,
            "outer" => self.outer = num(key, value)?,
            "inner" => self.inner = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "schemes" => self.schemes = parse_schemes(value)?,
            "event_mode" => self.event_mode = value.parse()?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn ensemble(&self) -> Result<FadingEnsemble, Error> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        FadingEnsemble::split_uncertainty(self.n, self.sigma_m2, self.sigma_e2, self.eps2_high, self.eps2_low)
    }

    pub fn target(&self) -> Result<TargetRate, Error> {
        match self.rs0 {
            Some(rs0) => TargetRate::new(rs0),
            None => TargetRate::from_factor(self.rs0_factor, self.p_budget, self.sigma_m2),
        }
    }

    /// Validated simulation configuration.
    pub fn sim_config(&self) -> Result<SimConfig, Error> {
        let mut sim = SimConfig::new(self.ensemble()?, self.p_budget, self.target()?)
            .with_samples(self.outer, self.inner)
            .with_seed(self.seed);
        sim.schemes = self.schemes.clone();
        sim.event_mode = self.event_mode;
        sim.validate()?;
        Ok(sim)
    }
}

/// Comma-separated scheme names, deduplicated, in the order given.
pub fn parse_schemes(value: &str) -> Result<Vec<Scheme>, Error> {
    let mut out = Vec::new();
    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let scheme: Scheme = name.parse()?;
        if !out.contains(&scheme) {
            out.push(scheme);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no schemes listed".into()));
    }
    Ok(out)
}
