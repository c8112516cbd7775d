//! The `qdiscord` command line: energy levels and correlation sweeps of the
//! XXZ dimer, the simulated preparation + tomography experiment, and a
//! self-check of the closed-form discord against the numerical oracle.
//!
//! Exit status is 0 on success, 1 when a computation or check fails and 2 on
//! usage errors. Noise comes from Xoshiro256++ seeded through SplitMix64 with
//! `--seed`; draws happen in a fixed order, so a given seed always produces
//! the same bytes.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Deserialize;
use serde_json::json;

use crate::correlations::{discord_bell_diagonal, discord_oracle, eof, OracleConfig};
use crate::error::Error;
use crate::spinsim::{invert_closed_form, prepare_bell_diagonal, Sign, SpinSystem};
use crate::states::{bell_diagonal, c_vector_of, CVector, ThermalMode, HIGH_T_VALIDITY_LIMIT};
use crate::tomography::{reconstruct_records, simulate_records, ReadoutConfig};
use crate::xxzmodel::{delta_grid, level_crossings, spectrum, sweep, LevelLabel};

/// Oracle-check failure threshold.
pub const ORACLE_CHECK_TOL: f64 = 1e-6;

/// Target state of the default experiment.
pub const DEFAULT_EXPERIMENT_C: CVector = CVector::new(-0.0044, -0.0044, 0.0008);

#[derive(Debug, Parser)]
#[command(
    name = "qdiscord",
    version,
    about = "Quantum discord of two-qubit states and the XXZ dimer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// XXZ energy levels against Δ, with the level crossings.
    Levels,
    /// Thermal c-vector, discord, EoF and maximizing branch against Δ.
    Sweep,
    /// Prepare a Bell-diagonal state on the spin pair, tomograph it and report
    /// its correlations.
    Experiment,
    /// Compare the closed-form discord with the numerical oracle on random
    /// Bell-diagonal states.
    OracleCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand; any of them can also come from
/// `--config`.
#[derive(Debug, Clone, Default, clap::Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Options {
    /// Exchange coupling J.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub j: Option<f64>,
    /// Temperature in units of J/k_B.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta_max: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub step: Option<f64>,
    /// Thermal state: exact or high_t.
    #[arg(long, global = true)]
    pub mode: Option<ThermalMode>,
    /// Flip angle of the first MW1 pulse, degrees.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta_deg: Option<f64>,
    /// Final wait, nanoseconds.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tau3_ns: Option<f64>,
    /// Sign of c_z: + or -.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sign: Option<String>,
    /// Readout noise per signal point, in units of the electron Rabi
    /// amplitude 2ε.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub noise: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of random states for oracle-check.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with any of these options (kebab-case keys); flags win.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Options {
    /// Fills every unset field from `base`.
    fn or(self, base: Options) -> Options {
        Options {
            j: self.j.or(base.j),
            t: self.t.or(base.t),
            delta_min: self.delta_min.or(base.delta_min),
            delta_max: self.delta_max.or(base.delta_max),
            step: self.step.or(base.step),
            mode: self.mode.or(base.mode),
            theta_deg: self.theta_deg.or(base.theta_deg),
            tau3_ns: self.tau3_ns.or(base.tau3_ns),
            sign: self.sign.or(base.sign),
            noise: self.noise.or(base.noise),
            seed: self.seed.or(base.seed),
            samples: self.samples.or(base.samples),
            out: self.out.or(base.out),
            format: self.format.or(base.format),
            config: self.config,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

/// Output of one command, plus warnings for stderr and whether a check
/// failed (exit status 1 with output still written).
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub text: String,
    pub warnings: Vec<String>,
    pub failed: bool,
}

/// The generator behind every seeded command.
pub fn seeded_rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Pinned number format: 9 significant digits, scientific below `1e-4`,
/// negative zero printed as zero.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    if x.abs() < 1e-4 {
        return sci;
    }
    let exponent: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_config(path: &PathBuf) -> Result<Options, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

/// Merges `--config` (if any) under the flags.
pub fn resolve_options(flags: &Options) -> Result<Options, CliError> {
    match &flags.config {
        Some(path) => Ok(flags.clone().or(load_config(path)?)),
        None => Ok(flags.clone()),
    }
}

pub fn execute(command: Command, opts: &Options) -> Result<CommandOutput, CliError> {
    match command {
        Command::Levels => cmd_levels(opts),
        Command::Sweep => cmd_sweep(opts),
        Command::Experiment => cmd_experiment(opts),
        Command::OracleCheck => cmd_oracle_check(opts),
    }
}

struct Range {
    lo: f64,
    hi: f64,
    step: f64,
}

fn range(opts: &Options) -> Result<Range, CliError> {
    let r = Range {
        lo: opts.delta_min.unwrap_or(-2.0),
        hi: opts.delta_max.unwrap_or(2.0),
        step: opts.step.unwrap_or(0.01),
    };
    if !(r.step > 0.0) || !r.step.is_finite() {
        return Err(usage(format!("--step must be positive, got {}", r.step)));
    }
    if !(r.lo < r.hi) {
        return Err(usage(format!(
            "--delta-min ({}) must be below --delta-max ({})",
            r.lo, r.hi
        )));
    }
    Ok(r)
}

fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

fn join_points(points: &[f64]) -> String {
    if points.is_empty() {
        "none".to_string()
    } else {
        points
            .iter()
            .map(|p| format!("{:.6}", p + 0.0))
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn cmd_levels(opts: &Options) -> Result<CommandOutput, CliError> {
    let r = range(opts)?;
    let j = opts.j.unwrap_or(1.0);
    let grid = delta_grid(r.lo, r.hi, r.step).map_err(|e| usage(e.to_string()))?;
    let crossings: Option<Vec<f64>> = if j == 0.0 {
        None
    } else {
        Some(level_crossings(j, r.lo, r.hi)?.into_iter().map(|c| c.delta).collect())
    };
    let order = [
        LevelLabel::UpUp,
        LevelLabel::DownDown,
        LevelLabel::Triplet0,
        LevelLabel::Singlet,
    ];
    let text = match opts.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = csv_row(&["delta", "E_upup", "E_dndn", "E_triplet0", "E_singlet"].map(String::from));
            for &delta in &grid {
                let s = spectrum(j, delta);
                let mut fields = vec![format_number(delta)];
                fields.extend(order.iter().map(|&l| format_number(s.energy(l))));
                out.push_str(&csv_row(&fields));
            }
            let summary = crossings.as_deref().map_or("degenerate".to_string(), join_points);
            writeln!(out, "# crossings: {summary}").expect("string write");
            out
        }
        Format::Json => {
            let rows: Vec<_> = grid
                .iter()
                .map(|&delta| {
                    let s = spectrum(j, delta);
                    json!({
                        "delta": delta,
                        "E_upup": s.energy(LevelLabel::UpUp),
                        "E_dndn": s.energy(LevelLabel::DownDown),
                        "E_triplet0": s.energy(LevelLabel::Triplet0),
                        "E_singlet": s.energy(LevelLabel::Singlet),
                    })
                })
                .collect();
            pretty(&json!({ "schema": "levels/1", "j": j, "rows": rows, "crossings": crossings }))?
        }
    };
    Ok(CommandOutput {
        text,
        ..Default::default()
    })
}

pub fn cmd_sweep(opts: &Options) -> Result<CommandOutput, CliError> {
    let r = range(opts)?;
    let j = opts.j.unwrap_or(1.0);
    let t = opts.t.unwrap_or(1.0);
    let mode = opts.mode.unwrap_or_default();
    let grid = delta_grid(r.lo, r.hi, r.step).map_err(|e| usage(e.to_string()))?;
    let series = sweep(j, t, &grid, mode)?;
    let mut warnings = Vec::new();
    if mode == ThermalMode::HighT && (j / t).abs() > HIGH_T_VALIDITY_LIMIT {
        warnings.push(format!(
            "high_t expansion used at J/T = {}, beyond its validity range {HIGH_T_VALIDITY_LIMIT}",
            j / t
        ));
    }
    let text = match opts.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = csv_row(&["delta", "c_x", "c_y", "c_z", "discord", "eof", "branch"].map(String::from));
            for k in 0..series.axis.len() {
                let c = series.c_vectors[k];
                out.push_str(&csv_row(&[
                    format_number(series.axis[k]),
                    format_number(c.x),
                    format_number(c.y),
                    format_number(c.z),
                    format_number(series.discord[k]),
                    format_number(series.eof[k]),
                    series.branches[k].label().to_string(),
                ]));
            }
            writeln!(out, "# sudden_change: {}", join_points(&series.sudden_change_points)).expect("string write");
            out
        }
        Format::Json => {
            let rows: Vec<_> = (0..series.axis.len())
                .map(|k| {
                    let c = series.c_vectors[k];
                    json!({
                        "delta": series.axis[k],
                        "c_x": c.x,
                        "c_y": c.y,
                        "c_z": c.z,
                        "discord": series.discord[k],
                        "eof": series.eof[k],
                        "branch": series.branches[k].label(),
                    })
                })
                .collect();
            pretty(&json!({
                "schema": "sweep/1",
                "j": j,
                "t": t,
                "mode": mode,
                "rows": rows,
                "sudden_change": series.sudden_change_points,
            }))?
        }
    };
    Ok(CommandOutput {
        text,
        warnings,
        failed: false,
    })
}

fn pretty(v: &serde_json::Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Failure(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn c_json(c: &CVector) -> serde_json::Value {
    json!([c.x, c.y, c.z])
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub theta: f64,
    pub tau3: f64,
    pub sign: Sign,
    pub predicted: CVector,
    pub prepared: CVector,
    pub reconstructed: CVector,
    pub discord: f64,
    pub eof: f64,
    pub trace_distance_to_prepared: f64,
    pub report: serde_json::Value,
}

/// Preparation on Si:P, simulated tomography with noise `noise_rel·2ε`, and
/// correlations of the reconstructed state.
pub fn run_experiment(
    theta: f64,
    tau3: f64,
    sign: Sign,
    noise_rel: f64,
    seed: u64,
) -> crate::Result<ExperimentOutcome> {
    let sys = SpinSystem::si_p_default();
    let prep = prepare_bell_diagonal(&sys, theta, tau3, sign)?;
    let cfg = ReadoutConfig {
        noise_sigma: noise_rel * 2.0 * sys.epsilon,
        ..ReadoutConfig::default()
    };
    let mut rng = seeded_rng(seed);
    let records = simulate_records(&prep.rho, sys.epsilon, &cfg, &mut rng)?;
    let report = reconstruct_records(&records, sys.epsilon)?;
    let (reconstructed, _) = c_vector_of(&report.rho);
    Ok(ExperimentOutcome {
        theta,
        tau3,
        sign,
        predicted: prep.predicted,
        prepared: c_vector_of(&prep.rho).0,
        reconstructed,
        discord: discord_bell_diagonal(&reconstructed)?.discord,
        eof: eof(&report.rho)?,
        trace_distance_to_prepared: report.rho.trace_distance(&prep.rho),
        report: report.to_json_value(),
    })
}

pub fn cmd_experiment(opts: &Options) -> Result<CommandOutput, CliError> {
    if opts.format == Some(Format::Csv) {
        return Err(usage("experiment only writes JSON"));
    }
    let sys = SpinSystem::si_p_default();
    let (theta0, tau30, sign0) =
        invert_closed_form(sys.epsilon, &sys.decay, DEFAULT_EXPERIMENT_C.x, DEFAULT_EXPERIMENT_C.z)?;
    let theta = opts.theta_deg.map_or(theta0, f64::to_radians);
    let tau3 = opts.tau3_ns.map_or(tau30, |ns| ns * 1e-9);
    let sign = match &opts.sign {
        Some(s) => s.parse::<Sign>().map_err(|e| usage(e.to_string()))?,
        None => sign0,
    };
    let noise = opts.noise.unwrap_or(0.0);
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(usage(format!("--noise must be ≥ 0, got {noise}")));
    }
    let seed = opts.seed.unwrap_or(0);
    let mut warnings = sys.decay.validate()?;
    let o = run_experiment(theta, tau3, sign, noise, seed)?;
    if noise > 0.0 && o.eof > 0.0 {
        warnings.push("reconstructed state has nonzero EoF under readout noise".to_string());
    }
    let text = pretty(&json!({
        "schema": "experiment/1",
        "parameters": {
            "theta_deg": o.theta.to_degrees(),
            "tau3_ns": o.tau3 * 1e9,
            "sign": sign,
            "noise": noise,
            "seed": seed,
            "epsilon": sys.epsilon,
            "t_c_ns": sys.decay.t_c * 1e9,
        },
        "predicted_c": c_json(&o.predicted),
        "prepared_c": c_json(&o.prepared),
        "reconstructed_c": c_json(&o.reconstructed),
        "discord": o.discord,
        "eof": o.eof,
        "separable": o.eof == 0.0,
        "trace_distance_to_prepared": o.trace_distance_to_prepared,
        "reconstruction": o.report,
    }))?;
    Ok(CommandOutput {
        text,
        warnings,
        failed: false,
    })
}

/// Random physical c-vector, uniform on the tetrahedron (flat Dirichlet Bell
/// weights from exponential variates).
pub fn sample_c_vector<R: Rng + ?Sized>(rng: &mut R) -> CVector {
    let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let s: f64 = e.iter().sum();
    CVector::from_bell_weights(e.map(|x| x / s))
}

/// Largest `|oracle − closed form|` over `n` states and the state attaining
/// it. Seed 0 selects the degenerate sampler, which always yields `c = 0`.
pub fn oracle_check(n: usize, seed: u64) -> crate::Result<(f64, CVector)> {
    let mut rng = seeded_rng(seed);
    let cfg = OracleConfig::default();
    let mut worst = (0.0, CVector::default());
    for _ in 0..n {
        let c = if seed == 0 {
            CVector::default()
        } else {
            sample_c_vector(&mut rng)
        };
        let closed = discord_bell_diagonal(&c)?.discord;
        let numeric = discord_oracle(&bell_diagonal(&c)?, &cfg)?.discord;
        let dev = (closed - numeric).abs();
        if dev > worst.0 {
            worst = (dev, c);
        }
    }
    Ok(worst)
}

pub fn cmd_oracle_check(opts: &Options) -> Result<CommandOutput, CliError> {
    let n = opts.samples.unwrap_or(200);
    if n == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let seed = opts.seed.unwrap_or(1);
    let (max_dev, worst) = oracle_check(n, seed)?;
    let pass = max_dev < ORACLE_CHECK_TOL;
    let text = match opts.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "schema": "oracle-check/1",
            "samples": n,
            "seed": seed,
            "max_deviation": max_dev,
            "worst_c": c_json(&worst),
            "pass": pass,
        }))?,
        Format::Csv => {
            let mut out = csv_row(&["samples", "seed", "max_deviation", "pass"].map(String::from));
            out.push_str(&csv_row(&[
                n.to_string(),
                seed.to_string(),
                format_number(max_dev),
                pass.to_string(),
            ]));
            out
        }
    };
    let mut warnings = Vec::new();
    if !pass {
        warnings.push(format!("oracle deviation {max_dev:e} exceeds {ORACLE_CHECK_TOL:e}"));
    }
    Ok(CommandOutput {
        text,
        warnings,
        failed: !pass,
    })
}

/// Parses `args`, runs the command and writes its output; returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = resolve_options(&cli.options).and_then(|opts| {
        let output = execute(cli.command, &opts)?;
        let target = output.text.as_bytes();
        match &opts.out {
            Some(path) => std::fs::write(path, target)
                .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?,
            None => stdout
                .write_all(target)
                .map_err(|e| CliError::Failure(format!("cannot write output: {e}")))?,
        }
        Ok(output)
    });
    match result {
        Ok(output) => {
            for w in &output.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            i32::from(output.failed)
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
