//! Power allocation strategies.
//!
//! The robust allocator minimizes the Markov bound on secrecy outage,
//!
//! ```text
//!     minimize  c'P / (d'P - offset)   over   sum(P) <= budget, P >= 0,
//! ```
//!
//! with `c_i = eps2_i + |g_hat_i|^2`, `d_i = |h_i|^2` and
//! `offset = 2 ln(2) rs0`. The optimum of this linear fractional program sits
//! on a corner of the full-budget simplex, so it is found by enumerating the
//! `N` single-channel allocations.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_distr::{Distribution, Exp1};

use crate::channel::ChannelInstance;
use crate::error::{check_len, check_nonnegative, check_positive, Error, Result};
use crate::secrecy::TargetRate;
use crate::stats::RngStream;

/// Relative slack allowed on the budget constraint.
pub const BUDGET_SLACK: f64 = 1e-12;

/// Relative margin a corner's denominator must clear to count as feasible.
pub const FEASIBILITY_MARGIN: f64 = 1e-12;

/// Nonnegative per-channel powers under a total budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    p: Vec<f64>,
    budget: f64,
}

impl PowerAllocation {
    pub fn new(p: Vec<f64>, budget: f64) -> Result<Self> {
        let budget = check_positive("budget", budget)?;
        if p.is_empty() {
            return Err(Error::Config("an allocation needs at least one channel".into()));
        }
        for &x in &p {
            check_nonnegative("channel power", x)?;
        }
        let alloc = Self { p, budget };
        let total = alloc.total();
        if total > budget * (1.0 + BUDGET_SLACK) {
            return Err(Error::Domain { name: "total power", value: total });
        }
        Ok(alloc)
    }

    /// The whole budget on channel `index` (0-based).
    pub fn corner(n: usize, index: usize, budget: f64) -> Result<Self> {
        if index >= n {
            return Err(Error::Shape { expected: n, actual: index + 1 });
        }
        let mut p = vec![0.0; n];
        p[index] = budget;
        Self::new(p, budget)
    }

    pub fn powers(&self) -> &[f64] {
        &self.p
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Compensated (Neumaier) sum of the channel powers.
    pub fn total(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &x in &self.p {
            let t = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - t) + x;
            } else {
                comp += (x - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    /// Index of the only powered channel, if the allocation is a corner.
    pub fn active_channel(&self) -> Option<usize> {
        let mut active = self.p.iter().enumerate().filter(|(_, &x)| x > 0.0);
        match (active.next(), active.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }
}

/// The robust allocation program.
#[derive(Debug, Clone, PartialEq)]
pub struct LfpProblem {
    c: Vec<f64>,
    d: Vec<f64>,
    offset: f64,
    budget: f64,
}

impl LfpProblem {
    pub fn new(c: Vec<f64>, d: Vec<f64>, offset: f64, budget: f64) -> Result<Self> {
        check_len(c.len(), d.len())?;
        if c.is_empty() {
            return Err(Error::Config("an allocation problem needs at least one channel".into()));
        }
        for &x in c.iter().chain(&d) {
            check_nonnegative("coefficient", x)?;
        }
        let offset = check_nonnegative("offset", offset)?;
        let budget = check_positive("budget", budget)?;
        Ok(Self { c, d, offset, budget })
    }

    /// Builds the program from the known channel quantities only: the main
    /// gains, the eavesdropper estimates and the uncertainty variances.
    pub fn from_instance(instance: &ChannelInstance, budget: f64, target: &TargetRate) -> Result<Self> {
        let c = instance
            .g_hat_abs2()
            .zip(instance.eps2())
            .map(|(g2, e2)| e2 + g2)
            .collect();
        let d = instance.h_abs2().collect();
        Self::new(c, d, target.threshold(), budget)
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Objective at `p`, or `None` when the denominator is not positive.
    pub fn objective(&self, p: &[f64]) -> Option<f64> {
        let num: f64 = self.c.iter().zip(p).map(|(c, p)| c * p).sum();
        let den = self.d.iter().zip(p).map(|(d, p)| d * p).sum::<f64>() - self.offset;
        (den > 0.0).then(|| num / den)
    }

    /// Objective at the corner with the whole budget on channel `i`, if the
    /// corner clears the feasibility margin.
    pub fn corner_objective(&self, i: usize) -> Option<f64> {
        let served = self.d[i] * self.budget;
        let slack = served - self.offset;
        (slack > FEASIBILITY_MARGIN * served.max(1.0)).then(|| self.c[i] * self.budget / slack)
    }
}

/// `P / N` on every channel.
pub fn equal_power(n: usize, budget: f64) -> Result<PowerAllocation> {
    if n == 0 {
        return Err(Error::Config("channel count must be at least 1".into()));
    }
    let budget = check_positive("budget", budget)?;
    PowerAllocation::new(vec![budget / n as f64; n], budget)
}

/// Whole budget on the strongest main channel.
pub fn optimum_capacity(instance: &ChannelInstance, budget: f64) -> Result<PowerAllocation> {
    let best = argmax_first(instance.h_abs2());
    PowerAllocation::corner(instance.n(), best, budget)
}

/// Whole budget on the channel with the largest `|h|^2 - |g_hat|^2`, ignoring
/// the estimation uncertainty.
pub fn optimum_secrecy(instance: &ChannelInstance, budget: f64) -> Result<PowerAllocation> {
    let best = argmax_first(instance.h_abs2().zip(instance.g_hat_abs2()).map(|(h, g)| h - g));
    PowerAllocation::corner(instance.n(), best, budget)
}

/// Corner enumeration for the robust program. Returns the minimizing corner
/// and its objective. Equal objectives go to the larger `d_i`, then to the
/// lowest channel index.
pub fn robust_lfp(problem: &LfpProblem) -> Result<(PowerAllocation, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..problem.n() {
        if let Some(value) = problem.corner_objective(i) {
            if best.is_none_or(|(j, v)| value < v || (value == v && problem.d[i] > problem.d[j])) {
                best = Some((i, value));
            }
        }
    }
    let (i, value) = best.ok_or(Error::InfeasibleTarget)?;
    Ok((PowerAllocation::corner(problem.n(), i, problem.budget)?, value))
}

/// Random-search check of the corner solution: draws `samples` allocations
/// uniformly from the full-budget simplex (corners are not added) and returns
/// the best feasible one.
pub fn lfp_sampling_oracle(
    problem: &LfpProblem,
    samples: usize,
    rng: &mut RngStream,
) -> Result<(PowerAllocation, f64)> {
    let n = problem.n();
    let mut p = vec![0.0; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..samples {
        sample_simplex(rng, problem.budget, &mut p);
        if let Some(value) = problem.objective(&p) {
            match &mut best {
                Some((bp, bv)) if value < *bv => {
                    bp.copy_from_slice(&p);
                    *bv = value;
                }
                None => best = Some((p.clone(), value)),
                _ => {}
            }
        }
    }
    let (p, value) = best.ok_or(Error::OracleInconclusive)?;
    Ok((PowerAllocation::new(p, problem.budget)?, value))
}

/// Fills `out` with a uniform point of `{p >= 0, sum(p) = total}` using
/// normalized exponential spacings.
pub fn sample_simplex(rng: &mut RngStream, total: f64, out: &mut [f64]) {
    let mut sum = 0.0;
    for x in out.iter_mut() {
        let e: f64 = Exp1.sample(rng);
        *x = e;
        sum += e;
    }
    let scale = total / sum;
    for x in out.iter_mut() {
        *x *= scale;
    }
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// The compared allocation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Equal,
    Capacity,
    Secrecy,
    Robust,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Equal, Scheme::Capacity, Scheme::Secrecy, Scheme::Robust];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Equal => "equal",
            Scheme::Capacity => "capacity",
            Scheme::Secrecy => "secrecy",
            Scheme::Robust => "robust",
        }
    }

    /// Allocation this scheme picks for `instance`. The robust scheme fails
    /// with [`Error::InfeasibleTarget`] when no corner can sustain the target.
    pub fn allocate(self, instance: &ChannelInstance, budget: f64, target: &TargetRate) -> Result<PowerAllocation> {
        match self {
            Scheme::Equal => equal_power(instance.n(), budget),
            Scheme::Capacity => optimum_capacity(instance, budget),
            Scheme::Secrecy => optimum_secrecy(instance, budget),
            Scheme::Robust => robust_lfp(&LfpProblem::from_instance(instance, budget, target)?).map(|(a, _)| a),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(alloc::format!("unknown scheme {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(h2: &[f64], g2: &[f64]) -> ChannelInstance {
        ChannelInstance::from_squared_magnitudes(h2, g2, &vec![0.1; h2.len()]).unwrap()
    }

    #[test]
    fn equal_power_examples() {
        assert_eq!(equal_power(4, 0.1).unwrap().powers(), &[0.025; 4]);
        assert_eq!(equal_power(1, 0.1).unwrap().powers(), &[0.1]);
        let ten = equal_power(10, 0.1).unwrap();
        assert_eq!(ten.total(), 0.1);
        assert!(ten.powers().windows(2).all(|w| w[0] == w[1]));
        assert!(equal_power(0, 0.1).is_err());
        assert!(equal_power(3, 0.0).is_err());
    }

    #[test]
    fn capacity_picks_strongest_lowest_on_ties() {
        let a = optimum_capacity(&inst(&[0.2, 0.9, 0.5], &[0.0; 3]), 0.1).unwrap();
        assert_eq!(a.active_channel(), Some(1));
        assert_eq!(a.powers()[1], 0.1);
        let a = optimum_capacity(&inst(&[0.9, 0.9], &[0.0; 2]), 0.1).unwrap();
        assert_eq!(a.active_channel(), Some(0));
        let scaled = ChannelInstance::from_squared_magnitudes(&[0.2 * 49.0, 0.9 * 49.0, 0.5 * 49.0], &[0.0; 3], &[0.1; 3]).unwrap();
        assert_eq!(optimum_capacity(&scaled, 0.1).unwrap().active_channel(), Some(1));
    }

    #[test]
    fn secrecy_picks_largest_difference() {
        let a = optimum_secrecy(&inst(&[0.6, 0.2], &[0.5, 0.0]), 0.1).unwrap();
        assert_eq!(a.active_channel(), Some(1));
        let i = inst(&[0.2, 0.9, 0.5], &[0.0; 3]);
        assert_eq!(optimum_secrecy(&i, 0.1).unwrap(), optimum_capacity(&i, 0.1).unwrap());
        let a = optimum_secrecy(&inst(&[0.1, 0.1, 0.3], &[0.5, 0.3, 0.5]), 0.1).unwrap();
        assert_eq!(a.active_channel(), Some(1));
        let a = optimum_secrecy(&inst(&[0.1, 0.1], &[0.5, 0.5]), 0.1).unwrap();
        assert_eq!(a.active_channel(), Some(0));
    }

    #[test]
    fn robust_worked_example() {
        let prob = LfpProblem::new(vec![0.4, 0.2], vec![0.6, 0.5], 0.03, 0.1).unwrap();
        let (a, v) = robust_lfp(&prob).unwrap();
        assert_eq!(a.active_channel(), Some(1));
        assert!((v - 1.0).abs() < 1e-12);
        assert!((prob.corner_objective(0).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn robust_zero_offset_is_ratio_argmin() {
        let c = vec![0.5, 0.3, 0.9, 0.2];
        let d = vec![0.4, 0.6, 1.0, 0.1];
        let (a, v) = robust_lfp(&LfpProblem::new(c.clone(), d.clone(), 0.0, 0.1).unwrap()).unwrap();
        assert_eq!(a.active_channel(), Some(1));
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn robust_infeasible() {
        let prob = LfpProblem::new(vec![0.1, 0.1], vec![0.1, 0.2], 0.05, 0.1).unwrap();
        assert_eq!(robust_lfp(&prob), Err(Error::InfeasibleTarget));
    }

    #[test]
    fn robust_ties_go_low() {
        let prob = LfpProblem::new(vec![0.2, 0.2], vec![0.5, 0.5], 0.01, 0.1).unwrap();
        assert_eq!(robust_lfp(&prob).unwrap().0.active_channel(), Some(0));
    }

    #[test]
    fn robust_without_eavesdropper_matches_capacity() {
        let inst = ChannelInstance::from_squared_magnitudes(&[0.2, 0.9, 0.4, 0.9], &[0.0; 4], &[0.0; 4]).unwrap();
        let t = TargetRate::from_threshold(0.01).unwrap();
        let robust = Scheme::Robust.allocate(&inst, 0.1, &t).unwrap();
        assert_eq!(robust, optimum_capacity(&inst, 0.1).unwrap());
        assert_eq!(robust.active_channel(), Some(1));
    }

    #[test]
    fn oracle_single_channel_is_exact() {
        let prob = LfpProblem::new(vec![0.4], vec![0.6], 0.03, 0.1).unwrap();
        let (a, v) = lfp_sampling_oracle(&prob, 10, &mut RngStream::new(1, 2)).unwrap();
        assert_eq!(a.powers(), &[0.1]);
        assert_eq!(v, robust_lfp(&prob).unwrap().1);
    }

    #[test]
    fn oracle_inconclusive_when_nothing_feasible() {
        let prob = LfpProblem::new(vec![0.1, 0.1], vec![0.1, 0.2], 0.05, 0.1).unwrap();
        assert_eq!(
            lfp_sampling_oracle(&prob, 100, &mut RngStream::new(1, 2)),
            Err(Error::OracleInconclusive)
        );
    }

    #[test]
    fn allocation_validation() {
        assert!(PowerAllocation::new(vec![0.05, 0.06], 0.1).is_err());
        assert!(PowerAllocation::new(vec![-0.01, 0.06], 0.1).is_err());
        assert!(PowerAllocation::new(vec![0.05, 0.05], 0.0).is_err());
        assert!(PowerAllocation::new(vec![0.05, 0.05], 0.1).unwrap().active_channel().is_none());
        assert!(PowerAllocation::corner(2, 2, 0.1).is_err());
    }

    #[test]
    fn scheme_names_parse() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("waterfill".parse::<Scheme>().is_err());
    }
}
