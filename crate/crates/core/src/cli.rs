//! Command-line dispatch. Exit contract: 0 when the command succeeds (for
//! experiments: every check passed), 1 when an experiment ran fine but at
//! least one check is refuted, 2 on usage, config, or runtime errors
//! (clap itself exits 2 on unknown flags and subcommands).

use crate::diagnostics::{onedim_distribution_curve, path_distribution_curve, WindowSpec};
use crate::empirical::{bl_distance, EmpiricalMeasure, MetricKind};
use crate::error::{Error, Result};
use crate::experiments::{aa_model, parse_weight, run_experiment, ExperimentConfig};
use crate::functions::{FunctionSpec, SampledFunction};
use crate::processes::{load_ensemble, save_ensemble, simulate_ou, OuParams, TimeGrid};
use crate::recurrence::{almost_period_scan, WindowGrid};
use crate::sde::simulate_mild;
use crate::seminorms::{seminorm, ScanConfig, SeminormKind};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "ergolab",
    version,
    about = "numerical laboratory for recurrence, ergodic averaging, and \
             distribution-drift diagnostics of stochastic processes"
)]
pub struct Cli {
    /// size of the rayon thread pool for this invocation (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Simulate an ensemble and save it as a binary snapshot
    Simulate(SimulateArgs),
    /// Sliding-window seminorm of a catalog function
    Seminorm(SeminormArgs),
    /// Scan a catalog function for eps-almost periods
    Recurrence(RecurrenceArgs),
    /// Bounded-Lipschitz distance between two empirical measures from CSV
    Distance(DistanceArgs),
    /// Distribution-drift curve of a saved ensemble
    Diagnose(DiagnoseArgs),
    /// Run a named experiment from a config file into a bundle directory
    Experiment(ExperimentArgs),
    /// Schema-check a config file without running anything
    ValidateConfig(ValidateConfigArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// "ou" (exact stationary sampler) or "aa-demo" (reference
    /// recurrent-coefficient model via the exponential integrator)
    #[arg(long, default_value = "ou")]
    kind: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long)]
    step: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    paths: usize,
    #[arg(long)]
    seed: u64,
    /// burn-in span for the aa-demo model
    #[arg(long, default_value_t = 8.0)]
    burn_in: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct SeminormArgs {
    /// catalog name: ap2, levitan, erg1, erg2, const, sin
    #[arg(long)]
    function: String,
    /// comma-separated catalog parameters, e.g. "1,1.4142135623730951"
    #[arg(long, allow_negative_numbers = true)]
    params: Option<String>,
    /// stepanov | weighted-stepanov | weyl | besicovitch
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// weight for weighted-stepanov: lebesgue, polynomial-<k>, exp-<a>
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    allow_sub_unit_p: bool,
    /// TOML file overriding the scan configuration
    #[arg(long)]
    scan: Option<PathBuf>,
}

#[derive(Args)]
pub struct RecurrenceArgs {
    #[arg(long)]
    function: String,
    #[arg(long, allow_negative_numbers = true)]
    params: Option<String>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    shift_max: f64,
    #[arg(long, default_value_t = 0.5)]
    shift_step: f64,
    #[arg(long, default_value_t = 10.0)]
    half_width: f64,
    #[arg(long, default_value_t = 0.01)]
    window_step: f64,
    /// report relative density of the found almost periods over this span
    #[arg(long)]
    density_len: Option<f64>,
}

#[derive(Args)]
pub struct DistanceArgs {
    /// CSV with header c0,..,c{d-1},weight
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    /// euclidean | max-coordinate
    #[arg(long, default_value = "euclidean")]
    metric: String,
}

#[derive(Args)]
pub struct DiagnoseArgs {
    /// binary snapshot written by `simulate`
    #[arg(long)]
    ensemble: PathBuf,
    /// onedim | path
    #[arg(long, default_value = "onedim")]
    curve: String,
    #[arg(long, allow_negative_numbers = true)]
    base: f64,
    /// comma-separated shifts in time units
    #[arg(long, allow_negative_numbers = true)]
    shifts: String,
    /// window depth for the path curve
    #[arg(long, default_value_t = 3)]
    k_max: usize,
    /// write the curve CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// scenario name; must match the config's scenario field
    name: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct ValidateConfigArgs {
    #[arg(long)]
    config: PathBuf,
}

/// Parse the process arguments and execute; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.threads {
        None => dispatch(cli.cmd),
        Some(0) => Err(Error::Config("threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| dispatch(cli.cmd))
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::Seminorm(a) => run_seminorm(a),
        Cmd::Recurrence(a) => run_recurrence(a),
        Cmd::Distance(a) => run_distance(a),
        Cmd::Diagnose(a) => run_diagnose(a),
        Cmd::Experiment(a) => run_experiment_cmd(a),
        Cmd::ValidateConfig(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            println!("config ok: scenario {}", cfg.scenario);
            Ok(0)
        }
    }
}

fn parse_float_list(s: &Option<String>) -> Result<Vec<f64>> {
    match s {
        None => Ok(vec![]),
        Some(s) => s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number {p:?} in list")))
            })
            .collect(),
    }
}

fn catalog_function(name: &str, params: &Option<String>) -> Result<SampledFunction> {
    let params = parse_float_list(params)?;
    let f = FunctionSpec::from_catalog(name, &params).map_err(|e| Error::Config(e.to_string()))?;
    Ok(SampledFunction::Expr(f))
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let grid = TimeGrid::new(a.t0, a.step, a.steps)?;
    let ens = match a.kind.as_str() {
        "ou" => simulate_ou(&OuParams { alpha: a.alpha, sigma: a.sigma }, &grid, a.paths, a.seed)?,
        "aa-demo" => {
            let report = simulate_mild(&aa_model(), &grid, a.burn_in, a.paths, a.seed)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            report.ensemble
        }
        other => {
            return Err(Error::Config(format!(
                "unknown simulation kind {other:?}; use ou or aa-demo"
            )))
        }
    };
    save_ensemble(&ens, &a.out)?;
    println!(
        "wrote {} paths x {} points (dim {}) to {}",
        ens.paths,
        ens.grid.points(),
        ens.dim,
        a.out.display()
    );
    Ok(0)
}

fn run_seminorm(a: SeminormArgs) -> Result<i32> {
    let h = catalog_function(&a.function, &a.params)?;
    let kind: SeminormKind = a.kind.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
    let scan = match &a.scan {
        None => ScanConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
    };
    let nu = a.weight.as_deref().map(parse_weight).transpose()?;
    let result = seminorm(&h, kind, a.p, &scan, nu.as_ref(), a.allow_sub_unit_p)?;
    println!("{}", to_json(&result)?);
    Ok(0)
}

fn run_recurrence(a: RecurrenceArgs) -> Result<i32> {
    let f = catalog_function(&a.function, &a.params)?;
    let window = WindowGrid { half_width: a.half_width, step: a.window_step };
    let report = almost_period_scan(&f, a.eps, a.shift_max, a.shift_step, &window, a.density_len)?;
    println!("{}", to_json(&report)?);
    Ok(0)
}

fn parse_metric(s: &str) -> Result<MetricKind> {
    match s {
        "euclidean" => Ok(MetricKind::Euclidean),
        "max-coordinate" => Ok(MetricKind::MaxCoordinate),
        other => Err(Error::Config(format!(
            "unknown metric {other:?}; use euclidean or max-coordinate"
        ))),
    }
}

/// Inverse of the measure CSV writer: header `c0,..,c{d-1},weight`, one
/// atom per row.
fn measure_from_csv(path: &Path, metric: MetricKind) -> Result<EmpiricalMeasure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty measure file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "weight" {
        return Err(Error::Format(format!(
            "measure header must be c0,..,c{{d-1}},weight; got {header:?}"
        )));
    }
    let dim = cols.len() - 1;
    for (i, c) in cols[..dim].iter().enumerate() {
        if *c != format!("c{i}") {
            return Err(Error::Format(format!("unexpected column {c:?} at position {i}")));
        }
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Format(format!(
                "row {} has {} fields, expected {}",
                ln + 2,
                fields.len(),
                dim + 1
            )));
        }
        for f in &fields[..dim] {
            points.push(
                f.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad coordinate {f:?} in row {}", ln + 2)))?,
            );
        }
        weights.push(
            fields[dim]
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("bad weight in row {}", ln + 2)))?,
        );
    }
    EmpiricalMeasure::new(dim, points, weights, metric)
}

fn run_distance(a: DistanceArgs) -> Result<i32> {
    let metric = parse_metric(&a.metric)?;
    let mu = measure_from_csv(&a.mu, metric.clone())?;
    let nu = measure_from_csv(&a.nu, metric)?;
    let result = bl_distance(&mu, &nu)?;
    println!("{}", to_json(&result)?);
    Ok(0)
}

fn run_diagnose(a: DiagnoseArgs) -> Result<i32> {
    let ens = load_ensemble(&a.ensemble)?;
    let shifts = parse_float_list(&Some(a.shifts.clone()))?;
    if shifts.is_empty() {
        return Err(Error::Config("need at least one shift".into()));
    }
    let curve = match a.curve.as_str() {
        "onedim" => onedim_distribution_curve(&ens, &[a.base], &shifts)?,
        "path" => {
            let spec = WindowSpec { k_max: a.k_max, base_time: a.base };
            path_distribution_curve(&ens, &spec, &shifts)?
        }
        other => {
            return Err(Error::Config(format!("unknown curve {other:?}; use onedim or path")))
        }
    };
    let csv = curve.to_csv();
    match &a.out {
        None => print!("{csv}"),
        Some(path) => std::fs::write(path, csv)?,
    }
    Ok(0)
}

fn run_experiment_cmd(a: ExperimentArgs) -> Result<i32> {
    let cfg = ExperimentConfig::load(&a.config)?;
    if cfg.scenario != a.name {
        return Err(Error::Config(format!(
            "config is for scenario {:?}, not {:?}",
            cfg.scenario, a.name
        )));
    }
    let verdicts = run_experiment(&cfg, &a.out)?;
    for c in &verdicts.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} {}: value {} ({} {})", c.check, c.value, c.kind.as_str(), c.bound);
    }
    let passed = verdicts.checks.iter().filter(|c| c.pass).count();
    println!(
        "verdicts: {passed}/{} passed; bundle at {}",
        verdicts.checks.len(),
        a.out.display()
    );
    Ok(if verdicts.all_pass { 0 } else { 1 })
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}
