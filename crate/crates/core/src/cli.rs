//! Command-line front end.
//!
//! Exit codes: 0 success, 1 spec or domain failure, 2 verification failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::admissibility::{self, FrequencyIntegral, ModeCertificate, SystemCertificate, TailVerdict};
use crate::error::{Error, Result};
use crate::quasipoly::{self, ModeParams, Region};
use crate::simulate::{self, InputSignal};
use crate::systems::{load_spec, ModeSpec, SystemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

/// Relative agreement required between time- and frequency-domain norms.
pub const PALEY_WIENER_TOL: f64 = 1e-3;
/// Slack on the empirical forcing norm against the certificate.
pub const EMPIRICAL_SLACK: f64 = 1.05;
/// Region boundary samples per arc.
pub const REGION_SAMPLES: usize = 512;

#[derive(Debug, Parser)]
#[command(name = "delayadm", version, about = "Stability and admissibility analysis of diagonal delay systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Region membership, critical delay and rightmost root of every mode.
    Analyze(Options),
    /// Boundary of Lambda_tau as polar samples.
    Region(Options),
    /// Characteristic roots from the Lambert W branch sweep.
    Roots(Options),
    /// Fundamental and forced trajectories per mode.
    Simulate(Options),
    /// Time domain vs frequency domain vs certificate, per mode.
    Verify(Options),
    /// Per-mode constants and the summability verdict.
    Certify(Options),
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// System description (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Single mode `RE,IM` instead of a spec file (needs --tau; b = 1).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Output directory, created on demand.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Relative tolerance of the frequency integral.
    #[arg(long, default_value_t = admissibility::DEFAULT_REL_TOL)]
    pub tol: f64,
    /// Time steps per delay.
    #[arg(long = "dt-divisor", default_value_t = 64)]
    pub dt_divisor: usize,
    /// Truncation: modes certified, or at most this many modes processed.
    #[arg(long = "N", default_value_t = admissibility::DEFAULT_TRUNCATION)]
    pub n: usize,
    /// Seed of the random verification inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Lambert W branches on each side of the principal one.
    #[arg(long = "K", default_value_t = quasipoly::DEFAULT_BRANCHES)]
    pub k: u32,
    /// Delay (region command, or with --lambda).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Random inputs per mode (verify).
    #[arg(long, default_value_t = 8)]
    pub inputs: usize,
    /// Simulation horizon in delays (simulate).
    #[arg(long, default_value_t = 20.0)]
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Analyze,
    Region,
    Roots,
    Simulate,
    Verify,
    Certify,
}

/// Validated settings shared by every command.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub spec_path: Option<PathBuf>,
    /// Left out of reports so they do not depend on where they are written.
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub rel_tol: f64,
    pub dt_divisor: usize,
    pub truncation: usize,
    pub seed: u64,
    pub branches: u32,
    pub tau: Option<f64>,
    pub lambda: Option<Complex64>,
    pub inputs: usize,
    pub horizon: f64,
}

impl RunConfig {
    pub fn new(command: CommandKind, o: &Options) -> Result<Self> {
        if !(o.tol > 0.0 && o.tol < 1.0) {
            return Err(Error::invalid(format!("--tol must lie in (0, 1), got {}", o.tol)));
        }
        if o.dt_divisor < simulate::MIN_STEPS_PER_DELAY {
            return Err(Error::invalid(format!(
                "--dt-divisor must be at least {}, got {}",
                simulate::MIN_STEPS_PER_DELAY,
                o.dt_divisor
            )));
        }
        if o.n == 0 {
            return Err(Error::invalid("--N must be at least 1"));
        }
        if !(o.horizon.is_finite() && o.horizon > 0.0) {
            return Err(Error::invalid("--horizon must be positive"));
        }
        let lambda = o.lambda.as_deref().map(parse_complex).transpose()?;
        Ok(Self {
            command,
            spec_path: o.spec.clone(),
            output_dir: o.out.clone(),
            rel_tol: o.tol,
            dt_divisor: o.dt_divisor,
            truncation: o.n,
            seed: o.seed,
            branches: o.k,
            tau: o.tau,
            lambda,
            inputs: o.inputs,
            horizon: o.horizon,
        })
    }

    fn load_system(&self) -> Result<SystemSpec> {
        match (&self.spec_path, self.lambda) {
            (Some(path), None) => load_spec(path),
            (None, Some(lambda)) => {
                let tau = self.tau.ok_or_else(|| Error::invalid("--lambda needs --tau"))?;
                SystemSpec::new(tau, vec![ModeSpec { index: 1, lambda, b: Complex64::new(1.0, 0.0) }], None)
            }
            (Some(_), Some(_)) => Err(Error::invalid("give either --spec or --lambda, not both")),
            (None, None) => Err(Error::invalid("missing --spec")),
        }
    }

    fn dt(&self, tau: f64) -> f64 {
        tau / self.dt_divisor as f64
    }
}

fn parse_complex(text: &str) -> Result<Complex64> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::invalid(format!("bad number {s:?} in --lambda: {e}")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse(re)?, parse(im)?)),
        _ => Err(Error::invalid(format!("--lambda expects RE or RE,IM, got {text:?}"))),
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_DOMAIN } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (kind, options) = match &cli.command {
        Command::Analyze(o) => (CommandKind::Analyze, o),
        Command::Region(o) => (CommandKind::Region, o),
        Command::Roots(o) => (CommandKind::Roots, o),
        Command::Simulate(o) => (CommandKind::Simulate, o),
        Command::Verify(o) => (CommandKind::Verify, o),
        Command::Certify(o) => (CommandKind::Certify, o),
    };
    let outcome = RunConfig::new(kind, options).and_then(|config| {
        fs::create_dir_all(&config.output_dir)?;
        match kind {
            CommandKind::Analyze => cmd_analyze(&config),
            CommandKind::Region => cmd_region(&config),
            CommandKind::Roots => cmd_roots(&config),
            CommandKind::Simulate => cmd_simulate(&config),
            CommandKind::Verify => cmd_verify(&config),
            CommandKind::Certify => cmd_certify(&config),
        }
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DOMAIN
        }
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(dir.join(name))?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn listed_modes(spec: &SystemSpec, cap: usize) -> Vec<ModeSpec> {
    spec.modes.iter().take(cap).copied().collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeAnalysis {
    pub index: usize,
    pub lambda: Complex64,
    pub region: Region,
    pub member: bool,
    pub boundary_gap: f64,
    pub critical_delay: f64,
    pub crossing_frequency: f64,
    pub abscissa: Option<f64>,
    pub rightmost: Option<Complex64>,
    pub rhp_count: Option<u32>,
    pub error: Option<String>,
}

fn analyze_mode(m: &ModeSpec, tau: f64, branches: u32) -> Result<ModeAnalysis> {
    let mode = ModeParams::new(m.lambda, tau)?;
    let spectral = quasipoly::spectral_abscissa(&mode, branches.max(1));
    let (abscissa, rightmost, rhp_count, error) = match spectral {
        Ok(r) => (Some(r.abscissa), Some(r.rightmost), Some(r.rhp_count), None),
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    Ok(ModeAnalysis {
        index: m.index,
        lambda: m.lambda,
        region: mode.region(),
        member: mode.region() == Region::Member,
        boundary_gap: mode.boundary_gap(),
        critical_delay: quasipoly::critical_delay(m.lambda)?,
        crossing_frequency: quasipoly::crossing_frequency(m.lambda)?,
        abscissa,
        rightmost,
        rhp_count,
        error,
    })
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    config: &'a RunConfig,
    tau: f64,
    all_members: bool,
    consistent: bool,
    modes: Vec<ModeAnalysis>,
}

pub fn cmd_analyze(config: &RunConfig) -> Result<i32> {
    let spec = config.load_system()?;
    let modes = listed_modes(&spec, config.truncation);
    let results: Vec<ModeAnalysis> = modes
        .par_iter()
        .map(|m| analyze_mode(m, spec.tau, config.branches).map_err(|e| e.at_mode(m.index)))
        .collect::<Result<_>>()?;

    let all_members = results.iter().all(|r| r.member);
    // a member must be free of right half-plane roots
    let consistent = results
        .iter()
        .all(|r| r.error.is_none() && (!r.member || (r.rhp_count == Some(0) && r.abscissa.is_some_and(|a| a < 0.0))));

    let mut w = csv_writer(&config.output_dir, "modes.csv")?;
    w.write_record([
        "index", "lambda_re", "lambda_im", "region", "critical_delay", "abscissa", "rightmost_re", "rightmost_im",
        "rhp_count",
    ])?;
    for r in &results {
        w.write_record(&[
            r.index.to_string(),
            r.lambda.re.to_string(),
            r.lambda.im.to_string(),
            format!("{:?}", r.region).to_lowercase(),
            r.critical_delay.to_string(),
            opt(r.abscissa),
            opt(r.rightmost.map(|s| s.re)),
            opt(r.rightmost.map(|s| s.im)),
            r.rhp_count.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let members = results.iter().filter(|r| r.member).count();
    println!("{} modes, {members} in Lambda_tau (tau = {})", results.len(), spec.tau);
    for r in results.iter().filter(|r| !r.member) {
        println!("mode {}: lambda = {} is {:?}", r.index, r.lambda, r.region);
    }
    for r in results.iter().filter(|r| r.error.is_some()) {
        eprintln!("mode {}: {}", r.index, r.error.as_deref().unwrap_or_default());
    }
    write_json(&config.output_dir, "report.json", &AnalyzeReport { config, tau: spec.tau, all_members, consistent, modes: results })?;
    Ok(if !consistent {
        EXIT_VERIFY
    } else if all_members {
        EXIT_OK
    } else {
        EXIT_DOMAIN
    })
}

/// Boundary samples `(Arg, |lambda|_max)` with `|lambda| = (|Arg| - pi/2) / tau`
/// for `Arg = pi/2 + j pi / (2 samples)`, `j = 1..=samples`, and the mirror arc.
pub fn region_boundary(tau: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("--tau must be positive, got {tau}")));
    }
    let upper = (1..=samples).map(|j| {
        let eps = std::f64::consts::FRAC_PI_2 * j as f64 / samples as f64;
        (std::f64::consts::FRAC_PI_2 + eps, eps / tau)
    });
    let lower: Vec<_> = upper.clone().map(|(a, r)| (-a, r)).collect();
    Ok(upper.chain(lower).collect())
}

pub fn cmd_region(config: &RunConfig) -> Result<i32> {
    let tau = config.tau.ok_or_else(|| Error::invalid("region needs --tau"))?;
    let rows = region_boundary(tau, REGION_SAMPLES)?;
    let mut w = csv_writer(&config.output_dir, "boundary.csv")?;
    w.write_record(["arc", "arg", "radius", "re", "im"])?;
    for (i, &(arg, radius)) in rows.iter().enumerate() {
        let z = Complex64::from_polar(radius, arg);
        let arc = if i < REGION_SAMPLES { "upper" } else { "lower" };
        w.write_record(&[arc.to_string(), arg.to_string(), radius.to_string(), z.re.to_string(), z.im.to_string()])?;
    }
    w.flush()?;
    println!("{} boundary samples written (tau = {tau}, apsides 0 and {})", rows.len(), -std::f64::consts::FRAC_PI_2 / tau);
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct RootsReport<'a> {
    config: &'a RunConfig,
    modes: Vec<quasipoly::SpectralReport>,
}

pub fn cmd_roots(config: &RunConfig) -> Result<i32> {
    let spec = config.load_system()?;
    if config.branches == 0 {
        return Err(Error::invalid("--K must be at least 1"));
    }
    let modes = listed_modes(&spec, config.truncation);
    let reports: Vec<quasipoly::SpectralReport> = modes
        .par_iter()
        .map(|m| {
            let mode = ModeParams::new(m.lambda, spec.tau)?;
            quasipoly::spectral_abscissa(&mode, config.branches).map_err(|e| e.at_mode(m.index))
        })
        .collect::<Result<_>>()?;
    let mut w = csv_writer(&config.output_dir, "roots.csv")?;
    w.write_record(["mode", "branch", "re", "im", "residual"])?;
    for (m, r) in modes.iter().zip(&reports) {
        for root in &r.roots.roots {
            w.write_record(&[
                m.index.to_string(),
                root.branch.to_string(),
                root.s.re.to_string(),
                root.s.im.to_string(),
                format!("{:e}", root.residual),
            ])?;
        }
        println!(
            "mode {}: {} roots, rightmost {}, right half-plane count {}",
            m.index,
            r.roots.roots.len(),
            r.rightmost,
            r.rhp_count
        );
    }
    w.flush()?;
    write_json(&config.output_dir, "report.json", &RootsReport { config, modes: reports })?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
struct SimulationSummary {
    index: usize,
    fundamental_l2_sq: f64,
    forced_final_state_norm_sq: f64,
    input_norm_sq: f64,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    config: &'a RunConfig,
    horizon: f64,
    dt: f64,
    modes: Vec<SimulationSummary>,
}

pub fn cmd_simulate(config: &RunConfig) -> Result<i32> {
    let spec = config.load_system()?;
    let dt = config.dt(spec.tau);
    let horizon = config.horizon * spec.tau;
    let n = config.dt_divisor;
    let modes = listed_modes(&spec, config.truncation);
    // unit pulse on the first delay interval
    let u = InputSignal::constant(spec.tau, n, Complex64::new(1.0, 0.0))?;
    let summaries: Vec<SimulationSummary> = modes
        .par_iter()
        .map(|m| -> Result<SimulationSummary> {
            let mode = ModeParams::new(m.lambda, spec.tau)?;
            let fundamental = simulate::fundamental_solution(&mode, horizon, dt)?;
            let history = crate::resolvent::HistoryGrid::zeros(spec.tau, n)?;
            let forced = simulate::step_integrate(&mode, m.b, Complex64::new(0.0, 0.0), &history, &u, horizon, dt)?;
            fundamental.save_csv(config.output_dir.join(format!("fundamental_{}.csv", m.index)))?;
            forced.save_csv(config.output_dir.join(format!("forced_{}.csv", m.index)))?;
            Ok(SimulationSummary {
                index: m.index,
                fundamental_l2_sq: fundamental.l2_norm_sq(),
                forced_final_state_norm_sq: forced.state_norm_at(forced.len() - 1),
                input_norm_sq: u.norm_sq(),
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .zip(&modes)
        .map(|(r, m)| r.map_err(|e| e.at_mode(m.index)))
        .collect::<Result<_>>()?;
    for s in &summaries {
        println!("mode {}: ||T11||^2 on [0, {horizon}] = {}", s.index, s.fundamental_l2_sq);
    }
    write_json(&config.output_dir, "report.json", &SimulateReport { config, horizon, dt, modes: summaries })?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct InputCheck {
    pub input_norm_sq: f64,
    pub sup_state_norm_sq: f64,
    pub sup_state_norm: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeVerification {
    pub index: usize,
    pub lambda: Complex64,
    pub b: Complex64,
    pub status: CheckStatus,
    pub warning: Option<String>,
    pub frequency: Option<FrequencyIntegral>,
    pub time_domain_l2_sq: Option<f64>,
    pub time_domain_horizon: Option<f64>,
    pub paley_wiener_rel: Option<f64>,
    pub certificate: Option<ModeCertificate>,
    pub integral_bound: Option<f64>,
    pub inputs: Vec<InputCheck>,
    pub failures: Vec<String>,
}

fn skipped(m: &ModeSpec, warning: String) -> ModeVerification {
    ModeVerification {
        index: m.index,
        lambda: m.lambda,
        b: m.b,
        status: CheckStatus::Skipped,
        warning: Some(warning),
        frequency: None,
        time_domain_l2_sq: None,
        time_domain_horizon: None,
        paley_wiener_rel: None,
        certificate: None,
        integral_bound: None,
        inputs: Vec::new(),
        failures: Vec::new(),
    }
}

/// Time-domain norm vs frequency integral vs certificate for one mode.
/// `Err` only for domain failures (mode outside the region).
pub fn verify_mode(m: &ModeSpec, tau: f64, config: &RunConfig) -> Result<ModeVerification> {
    let mode = ModeParams::new(m.lambda, tau)?;
    match mode.region() {
        Region::Member => {}
        Region::Critical => return Ok(skipped(m, "mode lies on the boundary of Lambda_tau".into())),
        Region::Outside => {
            return Err(Error::OutsideRegion(format!("lambda = {}, tau = {tau}", m.lambda)));
        }
    }
    let cert = admissibility::mode_bound(&mode, m.b, None)?;
    if cert.near_boundary {
        return Ok(skipped(m, format!("feasible delta interval has width {:e}", cert.feasible_upper)));
    }
    let mut failures = Vec::new();
    let dt = config.dt(tau);
    let bound = admissibility::integral_bound(&mode, cert.delta);

    let frequency = match admissibility::frequency_integral(&mode, config.rel_tol) {
        Ok(f) => Some(f),
        Err(e) => {
            failures.push(format!("frequency integral: {e}"));
            None
        }
    };
    let energy = match simulate::fundamental_energy(&mode, dt, simulate::TRAILING_ENERGY_TOL) {
        Ok(e) => Some(e),
        Err(e) => {
            failures.push(format!("fundamental solution: {e}"));
            None
        }
    };
    let mut paley_wiener_rel = None;
    if let (Some(f), Some(e)) = (frequency, energy) {
        let rel = (e.value - f.value).abs() / f.value;
        paley_wiener_rel = Some(rel);
        if rel > PALEY_WIENER_TOL {
            failures.push(format!(
                "time-domain ||T11||^2 = {} vs frequency integral {} (relative gap {rel:e} > {PALEY_WIENER_TOL:e})",
                e.value, f.value
            ));
        }
        if f.value > bound + f.abs_error_estimate {
            failures.push(format!("frequency integral {} exceeds the bound {bound}", f.value));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(m.index as u64);
    let mut inputs = Vec::with_capacity(config.inputs);
    for j in 0..config.inputs {
        let u = simulate::band_limited_input(&mut rng, tau, config.dt_divisor)?;
        match simulate::forcing_norm_empirical(&mode, m.b, &u, dt, simulate::DEFAULT_DECAY_TOL) {
            Ok(sup) => {
                let limit = cert.c * u.norm_sq();
                let sup_sq = sup * sup;
                let pass = sup_sq <= limit * EMPIRICAL_SLACK;
                if !pass {
                    failures.push(format!("input {j}: sup ||v||^2 = {sup_sq} exceeds C ||u||^2 = {limit}"));
                }
                inputs.push(InputCheck {
                    input_norm_sq: u.norm_sq(),
                    sup_state_norm_sq: sup_sq,
                    sup_state_norm: sup,
                    bound: limit,
                    ratio: if limit > 0.0 { sup_sq / limit } else { 0.0 },
                    pass,
                });
            }
            Err(e) => failures.push(format!("input {j}: {e}")),
        }
    }

    Ok(ModeVerification {
        index: m.index,
        lambda: m.lambda,
        b: m.b,
        status: if failures.is_empty() { CheckStatus::Pass } else { CheckStatus::Fail },
        warning: None,
        frequency,
        time_domain_l2_sq: energy.map(|e| e.value),
        time_domain_horizon: energy.map(|e| e.horizon),
        paley_wiener_rel,
        certificate: Some(cert),
        integral_bound: Some(bound),
        inputs,
        failures,
    })
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config: &'a RunConfig,
    tau: f64,
    paley_wiener_tol: f64,
    empirical_slack: f64,
    all_pass: bool,
    modes: Vec<ModeVerification>,
}

pub fn cmd_verify(config: &RunConfig) -> Result<i32> {
    let spec = config.load_system()?;
    let modes = listed_modes(&spec, config.truncation);
    let results: Vec<ModeVerification> = modes
        .par_iter()
        .map(|m| verify_mode(m, spec.tau, config).map_err(|e| e.at_mode(m.index)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let mut w = csv_writer(&config.output_dir, "modes.csv")?;
    w.write_record([
        "index",
        "status",
        "frequency_integral",
        "time_domain_l2_sq",
        "paley_wiener_rel",
        "C",
        "worst_sup_state_norm_sq",
        "worst_sup_state_norm",
        "worst_ratio",
    ])?;
    for r in &results {
        let worst = r.inputs.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio));
        w.write_record(&[
            r.index.to_string(),
            format!("{:?}", r.status).to_lowercase(),
            opt(r.frequency.map(|f| f.value)),
            opt(r.time_domain_l2_sq),
            opt(r.paley_wiener_rel),
            opt(r.certificate.map(|c| c.c)),
            opt(worst.map(|i| i.sup_state_norm_sq)),
            opt(worst.map(|i| i.sup_state_norm)),
            opt(worst.map(|i| i.ratio)),
        ])?;
    }
    w.flush()?;

    let all_pass = results.iter().all(|r| r.status != CheckStatus::Fail);
    for r in &results {
        match r.status {
            CheckStatus::Pass => println!(
                "mode {}: pass (time {:.6e} ~ frequency {:.6e} <= bound {:.6e})",
                r.index,
                r.time_domain_l2_sq.unwrap_or(f64::NAN),
                r.frequency.map_or(f64::NAN, |f| f.value),
                r.integral_bound.unwrap_or(f64::NAN)
            ),
            CheckStatus::Skipped => eprintln!("warning: mode {} skipped: {}", r.index, r.warning.as_deref().unwrap_or("")),
            CheckStatus::Fail => {
                for f in &r.failures {
                    eprintln!("mode {} (lambda = {}): {f}", r.index, r.lambda);
                }
            }
        }
    }
    write_json(
        &config.output_dir,
        "report.json",
        &VerifyReport {
            config,
            tau: spec.tau,
            paley_wiener_tol: PALEY_WIENER_TOL,
            empirical_slack: EMPIRICAL_SLACK,
            all_pass,
            modes: results,
        },
    )?;
    Ok(if all_pass { EXIT_OK } else { EXIT_VERIFY })
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    config: &'a RunConfig,
    tau: f64,
    /// The spec lists every mode and all of them were summed.
    complete: bool,
    warnings: &'a [String],
    certificate: &'a SystemCertificate,
}

pub fn cmd_certify(config: &RunConfig) -> Result<i32> {
    let spec = config.load_system()?;
    let cert = admissibility::system_certificate(&spec, config.truncation)?;
    let complete = !spec.has_tail_rule() && cert.truncation == spec.len();

    let mut w = csv_writer(&config.output_dir, "modes.csv")?;
    w.write_record(["index", "lambda_re", "lambda_im", "b_re", "b_im", "delta", "m", "C", "near_boundary"])?;
    for (i, c) in cert.mode_certs.iter().enumerate() {
        w.write_record(&[
            (i + 1).to_string(),
            c.lambda.re.to_string(),
            c.lambda.im.to_string(),
            c.b.re.to_string(),
            c.b.im.to_string(),
            c.delta.to_string(),
            c.m.to_string(),
            c.c.to_string(),
            c.near_boundary.to_string(),
        ])?;
    }
    w.flush()?;
    write_json(
        &config.output_dir,
        "report.json",
        &CertifyReport { config, tau: spec.tau, complete, warnings: &spec.warnings, certificate: &cert },
    )?;

    for warning in &spec.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "sum of C_k over {} modes = {} ({})",
        cert.truncation,
        cert.partial_sum,
        if complete { "complete".to_string() } else { format!("tail: {:?}", cert.tail_verdict) }
    );
    if complete {
        return Ok(EXIT_OK);
    }
    Ok(match cert.tail_verdict {
        TailVerdict::ProvenSummableByRatio | TailVerdict::EmpiricallyDecaying => EXIT_OK,
        TailVerdict::Inconclusive => {
            eprintln!("warning: summability of the tail is inconclusive");
            EXIT_OK
        }
        TailVerdict::ProvenDivergentByRatio => {
            eprintln!("the admissibility constants are not summable");
            EXIT_DOMAIN
        }
    })
}
