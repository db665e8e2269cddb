//! Command-line surface: argument parsing, experiment orchestration, and
//! CSV/JSON emission.
//!
//! Every tabular output starts with a `# manifest {json}` line embedding the
//! resolved configuration, tool version, and timestamp, so results stay
//! reproducible without external bookkeeping. Numbers are printed with
//! 9 significant digits.

use crate::analytic::{self, PathLossModel};
use crate::boundary::{self, OrientationGrid};
use crate::gain::GainPattern;
use crate::mcsim::{self, SimConfig};
use crate::specfn::QuadratureSpec;
use crate::{par, Error};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser, Debug)]
#[command(
    name = "aniso",
    version,
    about = "Connectivity observables for networks of anisotropically radiating nodes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a gain pattern integrates to 4*pi over the sphere
    ValidateGains(ValidateGainsArgs),
    /// Tabulate the angular functional S over a path-loss exponent range
    STable(STableArgs),
    /// Analytic connectivity mass, mean degree, and full-connectivity probability
    Mass(MassArgs),
    /// Run one Monte Carlo ensemble from a JSON config
    Simulate(SimulateArgs),
    /// Monte Carlo sweep over path-loss exponents versus the analytic mass
    SweepEta(SweepEtaArgs),
    /// Minimize the corner gain integral over orientations
    CornerMin(CornerMinArgs),
    /// Minimum multi-sector corner mass over rigid rotations
    Multisector(MultisectorArgs),
    /// Minimal-energy point configuration on the sphere
    Thomson(ThomsonArgs),
}

#[derive(Args, Debug)]
struct ValidateGainsArgs {
    /// Gain pattern as JSON, e.g. '{"type":"cardioid","epsilon":1.0}'
    #[arg(long)]
    pattern: String,
}

#[derive(Args, Debug)]
struct STableArgs {
    #[arg(long, default_value_t = 2.0)]
    eta_min: f64,
    #[arg(long, default_value_t = 6.0)]
    eta_max: f64,
    #[arg(long, default_value_t = 9)]
    steps: usize,
    /// JSON list of gain patterns
    #[arg(long)]
    patterns: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MassArgs {
    #[arg(long)]
    pattern_tx: String,
    /// Defaults to the transmit pattern
    #[arg(long)]
    pattern_rx: Option<String>,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Node density for the mean-degree line
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Node count for the full-connectivity line
    #[arg(long, default_value_t = 500)]
    n_nodes: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Path to a SimConfig JSON file
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepEtaArgs {
    /// Path to a sweep config JSON file: {"base": SimConfig, "patterns": [...], "eta_values": [...]}
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CornerMinArgs {
    #[arg(long)]
    pattern: String,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Cube side truncating the radial integral; omitted = untruncated
    #[arg(long)]
    truncation: Option<f64>,
    /// Orientation grid step in degrees
    #[arg(long, default_value_t = 6.0)]
    grid_step: f64,
}

#[derive(Args, Debug)]
struct MultisectorArgs {
    /// Single lobe count; alternative to --n-min/--n-max
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Lobe sharpness; default sqrt(30*pi)/3 for every n
    #[arg(long)]
    lambda: Option<f64>,
    /// Scale lambda per lobe count as sqrt(n*pi)/3 instead of a fixed value
    #[arg(long, default_value_t = false)]
    lambda_scaled: bool,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    cube_side: f64,
    /// Euler grid step in degrees
    #[arg(long, default_value_t = 2.0)]
    euler_step: f64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ThomsonArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Fixture file to write; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Resolved run configuration embedded in every output.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub timestamp_unix: u64,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    fn header_line(&self) -> String {
        format!(
            "# manifest {}",
            serde_json::to_string(self).expect("manifest serializes")
        )
    }
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::OptimizationFailed(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("io error: {e}"))
    }
}

/// Format with 9 significant digits.
fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn parse_pattern(field: &'static str, json: &str) -> Result<GainPattern, CliError> {
    let p: GainPattern = serde_json::from_str(json)
        .map_err(|e| CliError::Usage(format!("{field}: invalid pattern JSON: {e}")))?;
    p.validate()?;
    Ok(p)
}

fn parse_patterns(field: &'static str, json: &str) -> Result<Vec<GainPattern>, CliError> {
    let list: Vec<GainPattern> = serde_json::from_str(json)
        .map_err(|e| CliError::Usage(format!("{field}: invalid pattern list JSON: {e}")))?;
    if list.is_empty() {
        return Err(CliError::Usage(format!("{field}: pattern list is empty")));
    }
    for p in &list {
        p.validate()?;
    }
    Ok(list)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, content)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    if let Ok(threads) = std::env::var("ANISO_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => par::limit_threads(n),
            _ => {
                eprintln!("ANISO_THREADS: must be a positive integer, got {threads:?}");
                return 2;
            }
        }
    }
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path with status 0
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { 2 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ValidateGains(args) => cmd_validate_gains(args),
        Command::STable(args) => cmd_s_table(args),
        Command::Mass(args) => cmd_mass(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::SweepEta(args) => cmd_sweep_eta(args),
        Command::CornerMin(args) => cmd_corner_min(args),
        Command::Multisector(args) => cmd_multisector(args),
        Command::Thomson(args) => cmd_thomson(args),
    }
}

fn cmd_validate_gains(args: ValidateGainsArgs) -> Result<(), CliError> {
    let pattern = parse_pattern("pattern", &args.pattern)?;
    let spec = QuadratureSpec::default();
    let integral = pattern.verify_normalization(&spec)?;
    let target = 4.0 * PI;
    let pass = (integral - target).abs() <= 1e-7 * target;
    println!(
        "pattern: {}\nsphere integral: {}\ntarget 4*pi:     {}\nnormalization: {}",
        pattern.label(),
        num(integral),
        num(target),
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "normalization off by {}",
            num(integral - target)
        )))
    }
}

fn cmd_s_table(args: STableArgs) -> Result<(), CliError> {
    if args.steps < 1 {
        return Err(CliError::Usage("steps: must be at least 1".into()));
    }
    if !(args.eta_min > 0.0) || args.eta_max < args.eta_min {
        return Err(CliError::Usage(
            "eta_min/eta_max: need 0 < eta_min <= eta_max".into(),
        ));
    }
    let patterns = parse_patterns("patterns", &args.patterns)?;
    let manifest = RunManifest::new(
        "s-table",
        serde_json::json!({
            "eta_min": args.eta_min,
            "eta_max": args.eta_max,
            "steps": args.steps,
            "patterns": patterns,
            "quadrature": QuadratureSpec::default(),
        }),
    );
    let spec = QuadratureSpec::default();
    let mut csv = String::new();
    csv.push_str(&manifest.header_line());
    csv.push('\n');
    csv.push_str("eta,pattern,s_closed,s_quadrature\n");
    for k in 0..args.steps {
        let eta = if args.steps == 1 {
            args.eta_min
        } else {
            args.eta_min
                + (args.eta_max - args.eta_min) * k as f64 / (args.steps - 1) as f64
        };
        for p in &patterns {
            let closed = p.s_functional_closed(eta)?;
            let quad = p.s_functional_quadrature(eta, &spec)?;
            let closed_col = closed.map(num).unwrap_or_default();
            csv.push_str(&format!(
                "{},{},{},{}\n",
                num(eta),
                p.label(),
                closed_col,
                num(quad)
            ));
        }
    }
    write_output(&args.out, &csv)
}

fn cmd_mass(args: MassArgs) -> Result<(), CliError> {
    let tx = parse_pattern("pattern_tx", &args.pattern_tx)?;
    let rx = match &args.pattern_rx {
        Some(json) => parse_pattern("pattern_rx", json)?,
        None => tx.clone(),
    };
    let model = PathLossModel::new(args.eta, args.beta)?;
    if !(args.rho > 0.0) {
        return Err(CliError::Usage(format!(
            "rho: must be positive, got {}",
            args.rho
        )));
    }
    if args.n_nodes < 2 {
        return Err(CliError::Usage(format!(
            "n_nodes: must be at least 2, got {}",
            args.n_nodes
        )));
    }
    let mass = analytic::homogeneous_mass(&tx, &rx, &model)?;
    let volume = args.n_nodes as f64 / args.rho;
    let degrees =
        analytic::mean_degree_and_pair_probability(&mass, args.rho, volume, args.n_nodes)?;
    let pfc = analytic::pfc_homogeneous(args.n_nodes, args.rho, &mass);
    let manifest = RunManifest::new(
        "mass",
        serde_json::json!({
            "pattern_tx": tx,
            "pattern_rx": rx,
            "model": model,
            "rho": args.rho,
            "n_nodes": args.n_nodes,
        }),
    );
    println!("{}", manifest.header_line());
    println!("mass M = {} ({:?})", num(mass.mass), mass.method);
    println!("mean degree mu = rho M = {}", num(degrees.mean_degree));
    println!("pair probability p2 = {}", num(degrees.pair_probability));
    println!(
        "finite-N mean degree (N-1)p2 = {}",
        num(degrees.mean_degree_finite_n)
    );
    println!("full-connectivity probability = {}", num(pfc));
    Ok(())
}

fn read_json_file<T: for<'de> Deserialize<'de>>(
    field: &'static str,
    path: &PathBuf,
) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{field}: cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{field}: invalid JSON in {}: {e}", path.display())))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config: SimConfig = read_json_file("config", &args.config)?;
    config.validate()?;
    let report = mcsim::run_ensemble(&config)?;
    let manifest = RunManifest::new(
        "simulate",
        serde_json::to_value(&config).expect("config serializes"),
    );
    let mut csv = String::new();
    csv.push_str(&manifest.header_line());
    csv.push('\n');
    csv.push_str(
        "trials,mean_degree,mean_degree_stderr,isolated_fraction,isolated_fraction_stderr,p_fc,p_fc_stderr\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        report.trials,
        num(report.mean_degree),
        num(report.mean_degree_stderr),
        num(report.isolated_fraction),
        num(report.isolated_fraction_stderr),
        num(report.full_connectivity_probability),
        num(report.full_connectivity_stderr),
    ));
    write_output(&args.out, &csv)
}

/// On-disk layout of the sweep configuration.
#[derive(Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: SimConfig,
    pub patterns: Vec<GainPattern>,
    pub eta_values: Vec<f64>,
}

fn cmd_sweep_eta(args: SweepEtaArgs) -> Result<(), CliError> {
    let config: SweepConfig = read_json_file("config", &args.config)?;
    config.base.validate()?;
    let rows = mcsim::sweep_eta(&config.base, &config.patterns, &config.eta_values)?;
    let manifest = RunManifest::new(
        "sweep-eta",
        serde_json::to_value(&config).expect("config serializes"),
    );
    let mut csv = String::new();
    csv.push_str(&manifest.header_line());
    csv.push('\n');
    csv.push_str("eta,pattern,mean_degree_over_rho,stderr,analytic_M\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            num(row.eta),
            row.pattern,
            num(row.mean_degree_over_rho),
            num(row.stderr_over_rho),
            num(row.analytic_mass),
        ));
    }
    write_output(&args.out, &csv)
}

fn cmd_corner_min(args: CornerMinArgs) -> Result<(), CliError> {
    let pattern = parse_pattern("pattern", &args.pattern)?;
    if !pattern.is_rotationally_symmetric() {
        return Err(CliError::Usage(
            "pattern: corner-min needs a rotationally symmetric pattern; use `multisector` for lobe sets".into(),
        ));
    }
    if !(args.grid_step > 0.0 && args.grid_step <= 90.0) {
        return Err(CliError::Usage(format!(
            "grid_step: must lie in (0, 90] degrees, got {}",
            args.grid_step
        )));
    }
    let model = PathLossModel::new(args.eta, args.beta)?;
    let step = args.grid_step.to_radians();
    let grid = OrientationGrid::Sphere {
        theta_step: step,
        phi_step: step,
    };
    let spec = QuadratureSpec::default();
    let (i_min, orientation) =
        boundary::min_corner_gain_integral(&pattern, args.eta, &grid, &spec)?;
    let mass = boundary::corner_mass(
        &pattern,
        orientation,
        &pattern,
        &model,
        args.truncation,
        &spec,
    )?;
    let manifest = RunManifest::new(
        "corner-min",
        serde_json::json!({
            "pattern": pattern,
            "model": model,
            "truncation": args.truncation,
            "grid_step_deg": args.grid_step,
        }),
    );
    println!("{}", manifest.header_line());
    println!("min corner gain integral I = {}", num(i_min));
    println!(
        "argmin orientation = ({}, {}, {})",
        num(orientation[0]),
        num(orientation[1]),
        num(orientation[2])
    );
    match args.truncation {
        Some(side) => println!(
            "corner mass at argmin (cube side {}) = {}",
            num(side),
            num(mass)
        ),
        None => println!("corner mass at argmin (untruncated) = {}", num(mass)),
    }
    Ok(())
}

fn cmd_multisector(args: MultisectorArgs) -> Result<(), CliError> {
    let (n_min, n_max) = match (args.n, args.n_min, args.n_max) {
        (Some(n), None, None) => (n, n),
        (None, Some(lo), Some(hi)) if lo <= hi => (lo, hi),
        _ => {
            return Err(CliError::Usage(
                "n: give either --n or a valid --n-min/--n-max range".into(),
            ))
        }
    };
    if n_min < 2 {
        return Err(CliError::Usage(format!(
            "n: lobe counts start at 2, got {n_min}"
        )));
    }
    if !(args.euler_step > 0.0 && args.euler_step <= 180.0) {
        return Err(CliError::Usage(format!(
            "euler_step: must lie in (0, 180] degrees, got {}",
            args.euler_step
        )));
    }
    if args.lambda.is_some() && args.lambda_scaled {
        return Err(CliError::Usage(
            "lambda: --lambda and --lambda-scaled are mutually exclusive".into(),
        ));
    }
    let model = PathLossModel::new(args.eta, args.beta)?;
    let manifest = RunManifest::new(
        "multisector",
        serde_json::json!({
            "n_min": n_min,
            "n_max": n_max,
            "lambda": args.lambda,
            "lambda_scaled": args.lambda_scaled,
            "model": model,
            "cube_side": args.cube_side,
            "euler_step_deg": args.euler_step,
            "restarts": args.restarts,
            "seed": args.seed,
        }),
    );
    let mut csv = String::new();
    csv.push_str(&manifest.header_line());
    csv.push('\n');
    csv.push_str(
        "n,lambda,min_mass,clearance,blind_spot,margin_blind_spot,rot_alpha,rot_beta,rot_gamma\n",
    );
    for n in n_min..=n_max {
        let lambda = match args.lambda {
            Some(l) => l,
            None if args.lambda_scaled => (n as f64 * PI).sqrt() / 3.0,
            None => (30.0 * PI).sqrt() / 3.0,
        };
        let base = boundary::thomson_points(n, args.restarts, 1e-6, args.seed)?;
        let result = boundary::min_multisector_corner_mass(
            n,
            lambda,
            &model,
            args.cube_side,
            args.euler_step.to_radians(),
            &base,
        )?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            n,
            num(lambda),
            num(result.value),
            num(result.clearance),
            result.blind_spot,
            result.margin_blind_spot,
            num(result.rotation[0]),
            num(result.rotation[1]),
            num(result.rotation[2]),
        ));
        eprintln!(
            "n = {n}: min M_C = {}, blind-spot: {}",
            num(result.value),
            if result.blind_spot { "yes" } else { "no" }
        );
    }
    write_output(&args.out, &csv)
}

fn cmd_thomson(args: ThomsonArgs) -> Result<(), CliError> {
    if args.n < 2 {
        return Err(CliError::Usage(format!(
            "n: need at least 2 points, got {}",
            args.n
        )));
    }
    if args.restarts < 1 {
        return Err(CliError::Usage("restarts: need at least 1".into()));
    }
    let points = boundary::thomson_points(args.n, args.restarts, args.tol, args.seed)?;
    let energy = boundary::coulomb_energy(&points)?;
    let mut fixture = format!("{}\n", args.n);
    for v in points.vectors() {
        fixture.push_str(&format!("{:.11e} {:.11e} {:.11e}\n", v[0], v[1], v[2]));
    }
    match &args.out {
        Some(path) => fs::write(path, &fixture)?,
        None => print!("{fixture}"),
    }
    println!("n = {}", args.n);
    println!("energy = {}", num(energy));
    Ok(())
}

/// Parse a Thomson fixture written by `thomson --out`.
pub fn parse_thomson_fixture(text: &str) -> crate::Result<crate::gain::OrientationSet> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Domain("empty fixture".into()))?
        .trim()
        .parse()
        .map_err(|e| Error::Domain(format!("bad fixture count line: {e}")))?;
    let mut vectors = Vec::with_capacity(n);
    for line in lines {
        let comps: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Domain(format!("bad fixture coordinate: {e}")))?;
        if comps.len() != 3 {
            return Err(Error::Domain(format!(
                "fixture line has {} components, expected 3",
                comps.len()
            )));
        }
        vectors.push([comps[0], comps[1], comps[2]]);
    }
    if vectors.len() != n {
        return Err(Error::Domain(format!(
            "fixture promises {n} points but contains {}",
            vectors.len()
        )));
    }
    crate::gain::OrientationSet::new(vectors)
}
