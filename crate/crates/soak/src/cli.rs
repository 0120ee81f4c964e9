//! The `soak` command line.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use soak_core::allocation::LfpProblem;
use soak_core::montecarlo::{sweep_rows, MainOutagePolicy};
use soak_core::secrecy::markov_outage_bound;
use soak_core::{
    complete_outage_fading, complete_outage_instantaneous_approx, complete_outage_instantaneous_exact,
    main_channel_outage_fading, robust_lfp, ChannelInstance, Error, FadingMode, Scheme, SimConfig, SweepParam,
    SweepRow, TargetRate,
};

use crate::config::{parse_schemes, ExperimentConfig};
use crate::engine;
use crate::output::{write_atomic, Cell, Format, Table};

pub const SIM_HEADER: [&str; 9] = [
    "sweep_param",
    "sweep_value",
    "scheme",
    "p_hat",
    "std_err",
    "outer_used",
    "outer_total",
    "main_outage_frac",
    "main_outage_closed_form",
];

pub const COMPLETE_HEADER: [&str; 8] =
    ["n", "g_hat_abs", "eps2", "lambda2", "approx", "exact", "mc_estimate", "mc_std_err"];

pub const FADING_HEADER: [&str; 8] = [
    "n",
    "mode",
    "complete_outage",
    "main_outage",
    "complete_outage_mc",
    "complete_outage_mc_se",
    "main_outage_mc",
    "main_outage_mc_se",
];

pub const ALLOCATE_HEADER: [&str; 5] = ["scheme", "active_channel", "powers", "markov_bound", "objective"];

#[derive(Debug, Parser)]
#[command(name = "soak", version, about = "Secrecy outage analysis for parallel Gaussian wiretap channels")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// key = value experiment configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed (overrides the config file)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Output file (default: standard output)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// csv or jsonl
    #[arg(long, global = true, default_value = "csv")]
    pub format: Format,
}

/// Overrides applied on top of the configuration file.
#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// Number of parallel channels
    #[arg(long)]
    pub n: Option<usize>,
    /// Total power budget P
    #[arg(long)]
    pub p_budget: Option<f64>,
    /// Target rate as a multiple of P * sigma_m2 / (2 ln 2)
    #[arg(long)]
    pub rs0_factor: Option<f64>,
    /// Target secrecy rate in bits per channel use (overrides --rs0-factor)
    #[arg(long)]
    pub rs0: Option<f64>,
    #[arg(long)]
    pub sigma_m2: Option<f64>,
    #[arg(long)]
    pub sigma_e2: Option<f64>,
    /// Uncertainty variance on the first ceil(n/2) channels
    #[arg(long)]
    pub eps2_high: Option<f64>,
    /// Uncertainty variance on the remaining channels
    #[arg(long)]
    pub eps2_low: Option<f64>,
    /// Channel instances (outer samples)
    #[arg(long)]
    pub outer: Option<usize>,
    /// Eavesdropper error draws per instance (inner samples)
    #[arg(long)]
    pub inner: Option<usize>,
    /// Comma-separated subset of equal,capacity,secrecy,robust
    #[arg(long)]
    pub schemes: Option<String>,
    /// bound_event or exact_rate
    #[arg(long)]
    pub event_mode: Option<String>,
    /// Use 10^3 x 10^3 samples unless --outer/--inner are given
    #[arg(long)]
    pub desk: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complete secrecy outage for fixed gains: approximation, exact value, Monte Carlo
    CompleteOutage(CompleteOutageArgs),
    /// Closed-form complete and main-channel outage under Rayleigh fading
    FadingOutage(FadingOutageArgs),
    /// Allocations, Markov bounds and the robust objective for one channel instance
    Allocate(AllocateArgs),
    /// Secrecy outage per scheme at one configuration
    Simulate(SimulateArgs),
    /// Secrecy outage per scheme over a parameter sweep
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CompleteOutageArgs {
    /// |h_i| on every channel
    #[arg(long, default_value_t = 0.5)]
    pub h_abs: f64,
    /// Channel counts, one series each
    #[arg(long = "n-list", value_delimiter = ',', default_value = "1")]
    pub n_list: Vec<usize>,
    /// |g_hat_i| values, one series each
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub g_hat_abs: Vec<f64>,
    /// Explicit eps2 grid (overrides --eps2-min/--eps2-max/--eps2-points)
    #[arg(long, value_delimiter = ',')]
    pub eps2: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub eps2_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps2_max: f64,
    #[arg(long, default_value_t = 20)]
    pub eps2_points: usize,
    /// Monte Carlo samples per grid point; 0 skips the simulation columns
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Uncertainty-sweep reproduction: n in {1,5,10}, |g_hat| in {0.1,0.2,0.3}, 10^6 samples
    #[arg(long)]
    pub fig1: bool,
}

#[derive(Debug, Args)]
pub struct FadingOutageArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// scale-additive (standard deviations add) or variance-additive
    #[arg(long, default_value = "scale-additive")]
    pub mode: String,
    /// Monte Carlo cross-check samples; 0 skips the simulation columns
    #[arg(long, default_value_t = 0)]
    pub mc_samples: usize,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Channel fixture: one line per channel, Re(h) Im(h) Re(g_hat) Im(g_hat) eps2
    #[arg(long, conflicts_with_all = ["h_abs2", "g_hat_abs2", "eps2"])]
    pub fixture: Option<PathBuf>,
    /// Inline |h_i|^2 values
    #[arg(long, value_delimiter = ',')]
    pub h_abs2: Option<Vec<f64>>,
    /// Inline |g_hat_i|^2 values
    #[arg(long, value_delimiter = ',')]
    pub g_hat_abs2: Option<Vec<f64>>,
    /// Inline eps2_i values
    #[arg(long, value_delimiter = ',')]
    pub eps2: Option<Vec<f64>>,
    /// Target as 2 ln(2) rs0 (overrides --rs0 and --rs0-factor)
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Count main-channel-outage instances as outage instead of excluding them
    #[arg(long)]
    pub count_main_outage: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// rs0, eps2_scale or n_channels
    #[arg(long)]
    pub param: String,
    /// Sweep values (defaults depend on --param)
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[arg(long)]
    pub count_main_outage: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("main channel cannot sustain target rate")]
    Infeasible,
    #[error("no data: every channel instance was in main-channel outage")]
    NoData,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Numeric(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible => 3,
            CliError::NoData => 4,
            CliError::Io(_) | CliError::Numeric(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleTarget => CliError::Infeasible,
            Error::NoData => CliError::NoData,
            Error::Domain { .. } | Error::Shape { .. } | Error::Config(_) | Error::Parse { .. } => {
                CliError::Usage(e.to_string())
            }
            Error::NonConvergence(_) | Error::OracleInconclusive => CliError::Numeric(e),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("soak: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(out) = &cli.global.out {
        check_writable(out)?;
    }
    let pool = engine::pool(cli.global.threads).map_err(|e| usage(format!("thread pool: {e}")))?;
    let table = pool.install(|| build_table(cli))?;
    let bytes = table.to_bytes(cli.global.format);
    match &cli.global.out {
        Some(path) => write_atomic(path, &bytes)?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn check_writable(path: &Path) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(usage(format!("output directory {} does not exist", dir.display())));
    }
    if path.is_dir() {
        return Err(usage(format!("output path {} is a directory", path.display())));
    }
    Ok(())
}

fn build_table(cli: &Cli) -> Result<Table, CliError> {
    match &cli.command {
        Command::CompleteOutage(a) => complete_outage(&cli.global, a),
        Command::FadingOutage(a) => fading_outage(&cli.global, a),
        Command::Allocate(a) => allocate(&cli.global, a),
        Command::Simulate(a) => simulate(&cli.global, a),
        Command::Sweep(a) => sweep(&cli.global, a),
    }
}

/// Defaults, then the config file, then command-line overrides.
fn experiment(global: &GlobalArgs, exp: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let mut c = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if exp.desk => ExperimentConfig::desk(),
        None => ExperimentConfig::default(),
    };
    if exp.desk && global.config.is_some() {
        c.outer = soak_core::montecarlo::DESK_SAMPLES;
        c.inner = soak_core::montecarlo::DESK_SAMPLES;
    }
    macro_rules! over {
        ($($field:ident),*) => { $( if let Some(v) = exp.$field { c.$field = v; } )* };
    }
    over!(n, p_budget, rs0_factor, sigma_m2, sigma_e2, eps2_high, eps2_low, outer, inner);
    if exp.rs0.is_some() {
        c.rs0 = exp.rs0;
    }
    if let Some(s) = &exp.schemes {
        c.schemes = parse_schemes(s)?;
    }
    if let Some(m) = &exp.event_mode {
        c.event_mode = m.parse()?;
    }
    if let Some(seed) = global.seed {
        c.seed = seed;
    }
    Ok(c)
}

fn sim_config(global: &GlobalArgs, exp: &ExperimentArgs, count_main_outage: bool) -> Result<SimConfig, CliError> {
    let mut sim = experiment(global, exp)?.sim_config()?;
    if count_main_outage {
        sim.main_outage_policy = MainOutagePolicy::CountAsOutage;
    }
    Ok(sim)
}

fn sim_table(rows: &[SweepRow], param: Option<SweepParam>) -> Table {
    let mut table = Table::new(&SIM_HEADER);
    for r in rows {
        let e = &r.estimate;
        table.push(vec![
            param.map_or("none", SweepParam::name).into(),
            param.map(|_| r.value).into(),
            e.scheme.name().into(),
            e.p_hat.into(),
            e.std_err.into(),
            e.outer_used.into(),
            e.outer_total.into(),
            e.main_outage_frac.into(),
            r.main_outage_closed_form.into(),
        ]);
    }
    table
}

fn simulate(global: &GlobalArgs, a: &SimulateArgs) -> Result<Table, CliError> {
    let sim = sim_config(global, &a.exp, a.count_main_outage)?;
    let estimates = engine::scheme_outage(&sim)?;
    // The sweep parameter is unused for a single run.
    let rows = sweep_rows(SweepParam::Rs0, sim.target.rs0(), &sim, estimates)?;
    Ok(sim_table(&rows, None))
}

/// Default sweep grids.
pub fn default_values(param: SweepParam, sim: &SimConfig) -> Vec<f64> {
    match param {
        SweepParam::Rs0 => {
            let unit = sim.budget * sim.ensemble.sigma_m2()[0] / (2.0 * std::f64::consts::LN_2);
            [0.25, 0.5, 0.625, 0.75, 1.0].iter().map(|f| f * unit).collect()
        }
        SweepParam::Eps2Scale => vec![0.03, 0.1, 0.3, 1.0, 2.0, 3.0],
        SweepParam::NChannels => (1..=10).map(|k| (2 * k) as f64).collect(),
    }
}

fn sweep(global: &GlobalArgs, a: &SweepArgs) -> Result<Table, CliError> {
    let param: SweepParam = a.param.parse()?;
    let sim = sim_config(global, &a.exp, a.count_main_outage)?;
    let values = a.values.clone().unwrap_or_else(|| default_values(param, &sim));
    let rows = engine::sweep(&sim, param, &values)?;
    Ok(sim_table(&rows, Some(param)))
}

fn complete_outage(global: &GlobalArgs, a: &CompleteOutageArgs) -> Result<Table, CliError> {
    let (n_list, g_list, mc_samples) = if a.fig1 {
        (vec![1, 5, 10], vec![0.1, 0.2, 0.3], 1_000_000)
    } else {
        (a.n_list.clone(), a.g_hat_abs.clone(), a.mc_samples)
    };
    let grid = match &a.eps2 {
        Some(v) => v.clone(),
        None => {
            if a.eps2_points == 0 || !(a.eps2_min <= a.eps2_max) {
                return Err(usage("eps2 grid needs eps2_points >= 1 and eps2_min <= eps2_max"));
            }
            if a.eps2_points == 1 {
                vec![a.eps2_min]
            } else {
                let step = (a.eps2_max - a.eps2_min) / (a.eps2_points - 1) as f64;
                (0..a.eps2_points).map(|i| a.eps2_min + step * i as f64).collect()
            }
        }
    };
    if grid.is_empty() || grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(usage("eps2 grid values must be positive"));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(usage("channel counts must be at least 1"));
    }
    if !(a.h_abs >= 0.0) || g_list.iter().any(|g| !(*g >= 0.0)) {
        return Err(usage("gain magnitudes must be nonnegative"));
    }
    let seed = global.seed.unwrap_or(0);

    let mut table = Table::new(&COMPLETE_HEADER);
    let mut key = 0u64;
    for &n in &n_list {
        for &g in &g_list {
            for &eps2 in &grid {
                let inst = ChannelInstance::from_magnitudes(&vec![a.h_abs; n], &vec![g; n], &vec![eps2; n])?;
                let approx = complete_outage_instantaneous_approx(&inst);
                let exact = complete_outage_instantaneous_exact(&inst)?;
                let (mc, se) = if mc_samples > 0 {
                    let f = engine::complete_outage_mc(&inst, mc_samples, seed, key);
                    (Some(f.p_hat()), Some(f.std_err()))
                } else {
                    (None, None)
                };
                key += 1;
                table.push(vec![
                    n.into(),
                    g.into(),
                    eps2.into(),
                    (2.0 * g * g / eps2).into(),
                    approx.into(),
                    exact.into(),
                    mc.into(),
                    se.into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn fading_outage(global: &GlobalArgs, a: &FadingOutageArgs) -> Result<Table, CliError> {
    let c = experiment(global, &a.exp)?;
    let mode: FadingMode = a.mode.parse()?;
    let ensemble = c.ensemble()?;
    let target = c.target()?;
    let complete = complete_outage_fading(&ensemble, mode);
    let main = main_channel_outage_fading(&ensemble, c.p_budget, &target)?;
    let mut row: Vec<Cell> = vec![c.n.into(), mode.name().into(), complete.into(), main.into()];
    if a.mc_samples > 0 {
        let f = engine::fading_mc(&ensemble, mode, c.p_budget, &target, a.mc_samples, c.seed, 0);
        row.extend([
            f.complete_outage.p_hat().into(),
            f.complete_outage.std_err().into(),
            f.main_outage.p_hat().into(),
            f.main_outage.std_err().into(),
        ]);
    } else {
        row.extend(std::iter::repeat_n(Cell::Missing, 4));
    }
    let mut table = Table::new(&FADING_HEADER);
    table.push(row);
    Ok(table)
}

fn load_instance(a: &AllocateArgs) -> Result<ChannelInstance, CliError> {
    if let Some(path) = &a.fixture {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read fixture {}: {e}", path.display())))?;
        return Ok(ChannelInstance::parse_record(&text)?);
    }
    match (&a.h_abs2, &a.g_hat_abs2, &a.eps2) {
        (Some(h), Some(g), Some(e)) => Ok(ChannelInstance::from_squared_magnitudes(h, g, e)?),
        _ => Err(usage("give --fixture or all of --h-abs2, --g-hat-abs2 and --eps2")),
    }
}

fn allocate(global: &GlobalArgs, a: &AllocateArgs) -> Result<Table, CliError> {
    let c = experiment(global, &a.exp)?;
    let instance = load_instance(a)?;
    let target = match a.threshold {
        Some(t) => TargetRate::from_threshold(t)?,
        None => c.target()?,
    };
    let budget = c.p_budget;
    let (_, objective) = robust_lfp(&LfpProblem::from_instance(&instance, budget, &target)?)?;

    let mut schemes = c.schemes.clone();
    schemes.sort_by_key(|s| s.name());
    let mut table = Table::new(&ALLOCATE_HEADER);
    for scheme in schemes {
        let alloc = scheme.allocate(&instance, budget, &target)?;
        let powers = alloc.powers().iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(";");
        let bound = markov_outage_bound(&instance, &alloc, &target).ok();
        table.push(vec![
            scheme.name().into(),
            alloc.active_channel().map(|i| i + 1).into(),
            powers.into(),
            bound.into(),
            (scheme == Scheme::Robust).then_some(objective).into(),
        ]);
    }
    Ok(table)
}
