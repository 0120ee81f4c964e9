//! Secrecy outage analysis and robust power allocation for parallel
//! independent Gaussian wiretap channels with uncertain eavesdropper CSI.
//!
//! The crate is `no_std` and needs only `alloc`:
//!
//! - [`stats`]: two-degree-of-freedom chi-square CDFs (exact and central
//!   approximation), reproducible random streams, complex Gaussian sampling.
//! - [`channel`]: channel instances, eavesdropper realizations, fading ensembles.
//! - [`secrecy`]: secrecy rates, complete-outage and main-channel-outage
//!   probabilities, the Markov outage bound.
//! - [`allocation`]: the compared power allocation schemes, including the
//!   robust corner-enumeration allocator and its random-search oracle.
//! - [`montecarlo`]: the nested Monte Carlo experiment and parameter sweeps.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod allocation;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod secrecy;
pub mod stats;

pub use allocation::{
    equal_power, lfp_sampling_oracle, optimum_capacity, optimum_secrecy, robust_lfp, LfpProblem, PowerAllocation,
    Scheme,
};
pub use channel::{sample_eavesdropper, sample_instance, ChannelInstance, EavesdropperRealization, FadingEnsemble};
pub use error::{Error, Result};
pub use montecarlo::{
    conditional_outage, scheme_outage, sweep, EventMode, MainOutagePolicy, OutageEstimate, SimConfig, SweepParam,
    SweepRow,
};
pub use num_complex::Complex64;
pub use secrecy::{
    bound_event, complete_outage_fading, complete_outage_instantaneous_approx, complete_outage_instantaneous_exact,
    main_channel_outage_fading, markov_outage_bound, secrecy_rate_exact, secrecy_rate_low_snr, FadingMode, TargetRate,
};
pub use stats::{
    approx_noncentral_chi2_cdf_dof2, central_chi2_cdf_dof2, noncentral_chi2_cdf_dof2, sample_complex_gaussian,
    NoncentralChi2Dof2, RngStream,
};
