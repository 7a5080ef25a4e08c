//! JSON-configured experiments.
//!
//! A config file holds exactly one experiment:
//!
//! ```json
//! {
//!   "experiment": "qfi-sweep",
//!   "seed": 7,
//!   "output_path": "quadratic",
//!   "parameters": { "g": 0.1, "order": 2, "times": {"start": 1, "stop": 10, "step": 1} }
//! }
//! ```
//!
//! Every experiment accepts a fixed set of parameter keys and rejects all
//! others. Results go to `<out>/<output_path>.csv` (absent for `fit`) and a
//! JSON sidecar `<out>/<output_path>.json` with the resolved parameters, the
//! crate version, the seed and all warnings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analytic::{cavity_asymptotics, friction_asymptotics, leading_term_margin, qfi_family_leading, qfi_leading};
use crate::dynamics::{Coupling, EvolveOptions, HamiltonianSpec};
use crate::hilbert::{coherent_state, make_space, moments, StateVector, Tolerances};
use crate::langevin::{estimate_precision, sweep_squeezing, Integrator, LangevinConfig};
use crate::metrology::{
    error_propagation_with, qfi_family_with, qfi_numeric_with, qfi_sweep, MeasurementSpec, ParameterizedFamily,
    QfiEstimate, QfiOptions,
};
use crate::scaling::{fit_exponential, fit_power_law, ScalingFit};
use crate::{Error, Result, C64};

/// Margin of the leading series term below which a closed-system row is
/// flagged as pre-asymptotic.
const MARGIN_WARN: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    QfiSweep,
    FamilySweep,
    DetuningScan,
    Compensate,
    OptimalMeasurement,
    Friction,
    Cavity,
    SqueezeSweep,
    Fit,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::QfiSweep => "qfi-sweep",
            Experiment::FamilySweep => "family-sweep",
            Experiment::DetuningScan => "detuning-scan",
            Experiment::Compensate => "compensate",
            Experiment::OptimalMeasurement => "optimal-measurement",
            Experiment::Friction => "friction",
            Experiment::Cavity => "cavity",
            Experiment::SqueezeSweep => "squeeze-sweep",
            Experiment::Fit => "fit",
        }
    }

    /// Exact CSV header, `None` for experiments that only write JSON.
    pub fn csv_header(&self) -> Option<&'static [&'static str]> {
        Some(match self {
            Experiment::QfiSweep => &["lambda", "G", "M", "T", "qfi", "qfi_leading", "warning"],
            Experiment::FamilySweep => &["y", "T", "qfi", "qfi_leading", "warning"],
            Experiment::DetuningScan => &["Omega", "T", "qfi", "warning"],
            Experiment::Compensate => &["Omega", "T", "qfi_detuned", "qfi_compensated", "warning"],
            Experiment::OptimalMeasurement => {
                &["T", "mean", "variance", "derivative", "delta_lambda", "qfi", "saturation", "warning"]
            }
            Experiment::Friction => {
                &["T", "mean_P", "var_P", "delta_lambda", "delta_lambda_analytic", "stderr", "warning"]
            }
            Experiment::Cavity => {
                &["T", "r", "mean_P", "var_P", "delta_lambda", "delta_lambda_analytic", "stderr", "warning"]
            }
            Experiment::SqueezeSweep => &["r", "delta_lambda", "stderr", "warning"],
            Experiment::Fit => return None,
        })
    }
}

/// Top-level document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "empty_object")]
    pub parameters: Value,
    /// File stem of the outputs, relative to the output directory.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// A list of values, or `{"start", "stop", "step"}` with `stop` included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Vec<f64>")]
pub struct Grid(pub Vec<f64>);

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

impl TryFrom<Value> for Grid {
    type Error = String;

    fn try_from(v: Value) -> std::result::Result<Self, String> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Range {
            start: f64,
            stop: f64,
            step: f64,
        }
        let values = match v {
            Value::Array(_) => serde_json::from_value::<Vec<f64>>(v).map_err(|e| format!("grid list: {e}"))?,
            Value::Object(_) => {
                let r: Range = serde_json::from_value(v).map_err(|e| format!("grid range: {e}"))?;
                if !(r.step > 0.0) || !(r.stop >= r.start) {
                    return Err(format!("grid range needs step > 0 and stop >= start, got {}..{} by {}", r.start, r.stop, r.step));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                (0..=n).map(|i| r.start + i as f64 * r.step).collect()
            }
            other => return Err(format!("a grid is a list or a {{start, stop, step}} range, got {other}")),
        };
        if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
            return Err("grid must be nonempty and finite".into());
        }
        Ok(Grid(values))
    }
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn default_dim() -> usize {
    32
}
fn default_max_dim() -> usize {
    4096
}
fn default_guard_fraction() -> f64 {
    Tolerances::default().guard_fraction
}
fn default_tail_threshold() -> f64 {
    Tolerances::default().tail_threshold
}
fn default_eps() -> f64 {
    1e-3
}
fn default_h() -> f64 {
    1e-3
}
fn default_h_quantum() -> f64 {
    1e-4
}
fn default_n_traj() -> u64 {
    10_000
}
fn default_omegas() -> Grid {
    Grid(vec![0.0, 0.2, 0.5])
}

/// Initial coherent amplitude (0 is the vacuum) and Fock-space sizing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub alpha_phase: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    /// Fraction of the basis watched for leakage, and the probability
    /// there that triggers a larger basis.
    #[serde(default = "default_guard_fraction")]
    pub guard_fraction: f64,
    #[serde(default = "default_tail_threshold")]
    pub tail_threshold: f64,
}

impl StateParams {
    fn initial_state(&self) -> Result<StateVector> {
        if !(self.guard_fraction > 0.0 && self.guard_fraction < 1.0) {
            return Err(Error::Config(format!("guard_fraction must lie in (0, 1), got {}", self.guard_fraction)));
        }
        if !(self.tail_threshold > 0.0) {
            return Err(Error::Config(format!("tail_threshold must be positive, got {}", self.tail_threshold)));
        }
        if self.max_dim < self.dim {
            return Err(Error::Config(format!("max_dim {} is below dim {}", self.max_dim, self.dim)));
        }
        let space = make_space(self.dim)?;
        if self.alpha == 0.0 {
            return Ok(StateVector::vacuum(space));
        }
        coherent_state(space, C64::from_polar(self.alpha, self.alpha_phase))
    }

    fn qfi_options(&self, eps: f64) -> QfiOptions {
        QfiOptions { eps, evolve: self.evolve_options(), ..Default::default() }
    }

    fn evolve_options(&self) -> EvolveOptions {
        let tolerances =
            Tolerances { guard_fraction: self.guard_fraction, tail_threshold: self.tail_threshold, ..Default::default() };
        EvolveOptions { max_dim: self.max_dim, tolerances, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QfiSweepParams {
    #[serde(default = "one")]
    pub lambda: f64,
    pub g: f64,
    pub order: u32,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub chi: f64,
    #[serde(default)]
    pub coupling: Coupling,
    pub times: Grid,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(flatten)]
    pub state: StateParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilySweepParams {
    /// `λ(y) = lambda0 + lambda1·y`.
    #[serde(default)]
    pub lambda0: f64,
    #[serde(default = "one")]
    pub lambda1: f64,
    /// `G(y) = g0 + g1·y`.
    pub g0: f64,
    pub g1: f64,
    #[serde(default = "one")]
    pub y: f64,
    pub order: u32,
    pub times: Grid,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(flatten)]
    pub state: StateParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetuningParams {
    #[serde(default = "one")]
    pub lambda: f64,
    pub g: f64,
    pub order: u32,
    #[serde(default = "default_omegas")]
    pub omegas: Grid,
    pub times: Grid,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(flatten)]
    pub state: StateParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimalMeasurementParams {
    #[serde(default = "one")]
    pub lambda: f64,
    /// Expansion point of the measurement operator, `lambda` if omitted.
    #[serde(default)]
    pub lambda_c: Option<f64>,
    pub g: f64,
    pub order: u32,
    pub times: Grid,
    #[serde(default = "default_h_quantum")]
    pub h: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(flatten)]
    pub state: StateParams,
}

/// Parameters shared by the stochastic experiments.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryParams {
    #[serde(default = "one")]
    pub lambda: f64,
    pub g: f64,
    pub order: u32,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: u64,
    /// Integration step, the largest accepted step if omitted.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub x0_mean: f64,
    #[serde(default)]
    pub p0_mean: f64,
    #[serde(default = "half")]
    pub x0_var: f64,
    #[serde(default = "half")]
    pub p0_var: f64,
    /// Step of the centered λ-difference.
    #[serde(default = "default_h")]
    pub h: f64,
}

impl TrajectoryParams {
    fn apply(&self, cfg: &mut LangevinConfig, seed: u64) {
        cfg.n_traj = self.n_traj;
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        cfg.integrator = self.integrator;
        cfg.x0_mean = self.x0_mean;
        cfg.p0_mean = self.p0_mean;
        cfg.x0_var = self.x0_var;
        cfg.p0_var = self.p0_var;
        cfg.seed = seed;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrictionParams {
    #[serde(flatten)]
    pub common: TrajectoryParams,
    #[serde(default = "one")]
    pub thermal_factor: f64,
    pub times: Grid,
}

/// Input squeezing: a fixed value or the predicted optimum at each time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Squeezing {
    Fixed(f64),
    Named(SqueezingRule),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezingRule {
    Optimal,
}

impl Default for Squeezing {
    fn default() -> Self {
        Squeezing::Named(SqueezingRule::Optimal)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CavityParams {
    #[serde(flatten)]
    pub common: TrajectoryParams,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default)]
    pub r: Squeezing,
    pub times: Grid,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SqueezeSweepParams {
    #[serde(flatten)]
    pub common: TrajectoryParams,
    #[serde(default = "one")]
    pub mu: f64,
    pub t: f64,
    pub r_grid: Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    PowerLaw,
    Exponential,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFilter {
    pub column: String,
    pub equals: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    /// CSV produced by another experiment, relative to the config file.
    pub input: PathBuf,
    pub x: String,
    pub y: String,
    pub model: FitModel,
    #[serde(default)]
    pub filter: Option<RowFilter>,
    #[serde(default)]
    pub x_min: Option<f64>,
    #[serde(default)]
    pub x_max: Option<f64>,
}

/// Command-line overrides and placement of outputs.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    /// Directory against which relative inputs are resolved.
    pub base_dir: Option<PathBuf>,
}

/// Files written by a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub csv: Option<PathBuf>,
    pub sidecar: PathBuf,
    pub warnings: Vec<String>,
}

#[derive(Debug)]
struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// 17 significant digits, `.` decimal separator.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn join(w: &[String]) -> String {
    w.join("; ")
}

/// Result of one experiment before it hits the disk.
#[derive(Debug)]
struct Outcome {
    table: Option<Table>,
    summary: Value,
    warnings: Vec<String>,
}

/// Decodes the parameters of `exp`, rejecting keys the experiment does not
/// read. Flattened structs cannot deny unknown fields themselves, so the
/// input keys are compared with those of the resolved value instead.
fn params<T: DeserializeOwned + Serialize>(exp: &Experiment, v: &Value) -> Result<T> {
    let fail = |msg: String| Error::Config(format!("{} parameters: {msg}", exp.name()));
    let Value::Object(given) = v else {
        return Err(fail(format!("expected an object, got {v}")));
    };
    let p: T = serde_json::from_value(v.clone()).map_err(|e| fail(e.to_string()))?;
    let Value::Object(known) = resolved(&p) else { unreachable!("parameter structs serialize to objects") };
    if let Some(key) = given.keys().find(|k| !known.contains_key(*k)) {
        let mut accepted: Vec<_> = known.keys().map(String::as_str).collect();
        accepted.sort_unstable();
        return Err(fail(format!("unknown key `{key}`, expected one of {}", accepted.join(", "))));
    }
    Ok(p)
}

fn resolved<T: Serialize>(p: &T) -> Value {
    serde_json::to_value(p).expect("parameters serialize")
}

/// Parses, validates and executes a config, writing CSV and sidecar.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutput> {
    let seed = opts.seed.unwrap_or(config.seed);
    let work = || execute(config, seed, opts);
    let (resolved_params, outcome) = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("threads: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let stem = config.output_path.clone().unwrap_or_else(|| PathBuf::from(config.experiment.name()));
    let base = opts.out_dir.join(stem);
    if let Some(parent) = base.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let csv_path = match &outcome.table {
        Some(t) => {
            let path = base.with_extension("csv");
            std::fs::write(&path, t.to_csv()?)?;
            Some(path)
        }
        None => None,
    };
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut sidecar = BTreeMap::new();
    sidecar.insert("experiment", Value::from(config.experiment.name()));
    sidecar.insert("parameters", resolved_params);
    sidecar.insert("seed", Value::from(seed));
    sidecar.insert("version", Value::from(env!("CARGO_PKG_VERSION")));
    sidecar.insert("timestamp_unix", Value::from(timestamp));
    sidecar.insert("warnings", Value::from(outcome.warnings.clone()));
    sidecar.insert("summary", outcome.summary);
    if let Some(p) = &csv_path {
        sidecar.insert("csv", Value::from(p.file_name().map(|f| f.to_string_lossy().into_owned())));
    }
    let sidecar_path = base.with_extension("json");
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&sidecar_path, text + "\n")?;
    Ok(RunOutput { csv: csv_path, sidecar: sidecar_path, warnings: outcome.warnings })
}

fn execute(config: &ExperimentConfig, seed: u64, opts: &RunOptions) -> Result<(Value, Outcome)> {
    let exp = &config.experiment;
    let v = &config.parameters;
    Ok(match exp {
        Experiment::QfiSweep => {
            let p: QfiSweepParams = params(exp, v)?;
            (resolved(&p), qfi_sweep_experiment(&p)?)
        }
        Experiment::FamilySweep => {
            let p: FamilySweepParams = params(exp, v)?;
            (resolved(&p), family_sweep(&p)?)
        }
        Experiment::DetuningScan => {
            let p: DetuningParams = params(exp, v)?;
            (resolved(&p), detuning_scan(&p, false)?)
        }
        Experiment::Compensate => {
            let p: DetuningParams = params(exp, v)?;
            (resolved(&p), detuning_scan(&p, true)?)
        }
        Experiment::OptimalMeasurement => {
            let p: OptimalMeasurementParams = params(exp, v)?;
            (resolved(&p), optimal_measurement_experiment(&p)?)
        }
        Experiment::Friction => {
            let p: FrictionParams = params(exp, v)?;
            (resolved(&p), friction(&p, seed)?)
        }
        Experiment::Cavity => {
            let p: CavityParams = params(exp, v)?;
            (resolved(&p), cavity(&p, seed)?)
        }
        Experiment::SqueezeSweep => {
            let p: SqueezeSweepParams = params(exp, v)?;
            (resolved(&p), squeeze_sweep(&p, seed)?)
        }
        Experiment::Fit => {
            let p: FitParams = params(exp, v)?;
            (resolved(&p), fit(&p, opts.base_dir.as_deref())?)
        }
    })
}

fn closed_warnings(est: &QfiEstimate, lambda: f64, g: f64, m: u32, t: f64) -> Vec<String> {
    let mut w = est.warnings.clone();
    let margin = leading_term_margin(lambda, g, m, t);
    if margin < MARGIN_WARN {
        w.push(format!("leading term not dominant (margin {margin:.3})"));
    }
    w
}

fn collect_warnings(rows: &[Vec<String>]) -> Vec<String> {
    let mut all: Vec<String> = Vec::new();
    for row in rows {
        let w = row.last().expect("warning column");
        if !w.is_empty() {
            all.push(format!("{}: {w}", row[..row.len() - 1].join(",")));
        }
    }
    all
}

fn qfi_sweep_experiment(p: &QfiSweepParams) -> Result<Outcome> {
    let psi = p.state.initial_state()?;
    let spec = HamiltonianSpec { lambda: p.lambda, g: p.g, order: p.order, omega: p.omega, chi: p.chi, coupling: p.coupling };
    let var = match p.coupling {
        Coupling::PositionCoupled => moments(&psi, psi.space().p())?.1,
        // rotated frame: the quadrature spread that enters is that of X
        Coupling::MomentumCoupled => moments(&psi, psi.space().x())?.1,
    };
    let est = qfi_sweep(&spec, &p.times.0, &psi, &p.state.qfi_options(p.eps))?;
    let mut table = Table::new(Experiment::QfiSweep.csv_header().unwrap());
    for (&t, e) in p.times.0.iter().zip(&est) {
        let mut w = closed_warnings(e, p.lambda, p.g, p.order, t);
        if p.omega != 0.0 || p.chi != 0.0 {
            w.push("qfi_leading ignores detuning and squeezing".into());
        }
        table.push(vec![
            real(p.lambda),
            real(p.g),
            p.order.to_string(),
            real(t),
            real(e.value),
            real(qfi_leading(p.lambda, p.g, p.order, t, var)),
            join(&w),
        ]);
    }
    let warnings = collect_warnings(&table.rows);
    Ok(Outcome { table: Some(table), summary: Value::Null, warnings })
}

fn family_sweep(p: &FamilySweepParams) -> Result<Outcome> {
    let psi = p.state.initial_state()?;
    let var_p = moments(&psi, psi.space().p())?.1;
    let fam = ParameterizedFamily::linear(p.lambda0, p.lambda1, p.g0, p.g1);
    let opts = p.state.qfi_options(p.eps);
    let est: Vec<QfiEstimate> =
        p.times.0.par_iter().map(|&t| qfi_family_with(&fam, p.y, p.order, t, &psi, &opts)).collect::<Result<_>>()?;
    let (l, g) = (fam.lambda(p.y), fam.g(p.y));
    let mut table = Table::new(Experiment::FamilySweep.csv_header().unwrap());
    for (&t, e) in p.times.0.iter().zip(&est) {
        let leading = qfi_family_leading(l, fam.dlambda(p.y), g, fam.dg(p.y), p.order, t, var_p);
        table.push(vec![real(p.y), real(t), real(e.value), real(leading), join(&closed_warnings(e, l, g, p.order, t))]);
    }
    let warnings = collect_warnings(&table.rows);
    let summary = serde_json::json!({ "enhancement_factor": fam.enhancement_factor(p.y) });
    Ok(Outcome { table: Some(table), summary, warnings })
}

fn detuning_scan(p: &DetuningParams, compensate: bool) -> Result<Outcome> {
    let psi = p.state.initial_state()?;
    let opts = p.state.qfi_options(p.eps);
    let base = HamiltonianSpec::new(p.lambda, p.g, p.order);
    let sweeps = |make: &(dyn Fn(f64) -> HamiltonianSpec + Sync)| -> Result<Vec<Vec<QfiEstimate>>> {
        p.omegas.0.par_iter().map(|&om| qfi_sweep(&make(om), &p.times.0, &psi, &opts)).collect()
    };
    let detuned = sweeps(&|om| base.with_detuning(om))?;
    let compensated = if compensate { Some(sweeps(&|om| base.compensated(om))?) } else { None };
    let exp = if compensate { Experiment::Compensate } else { Experiment::DetuningScan };
    let mut table = Table::new(exp.csv_header().unwrap());
    for (i, &om) in p.omegas.0.iter().enumerate() {
        for (k, &t) in p.times.0.iter().enumerate() {
            let d = &detuned[i][k];
            let mut row = vec![real(om), real(t), real(d.value)];
            let mut w = d.warnings.clone();
            if let Some(c) = &compensated {
                row.push(real(c[i][k].value));
                w.extend(c[i][k].warnings.iter().cloned());
            }
            row.push(join(&w));
            table.push(row);
        }
    }
    let warnings = collect_warnings(&table.rows);
    Ok(Outcome { table: Some(table), summary: Value::Null, warnings })
}

fn optimal_measurement_experiment(p: &OptimalMeasurementParams) -> Result<Outcome> {
    let psi = p.state.initial_state()?;
    let spec = HamiltonianSpec::new(p.lambda, p.g, p.order);
    let lambda_c = p.lambda_c.unwrap_or(p.lambda);
    let evolve = p.state.evolve_options();
    let qopts = p.state.qfi_options(p.eps);
    let rows: Vec<Vec<String>> = p
        .times
        .0
        .par_iter()
        .map(|&t| {
            let ms = MeasurementSpec { lambda_c, g: p.g, order: p.order, t };
            let ep = error_propagation_with(&spec, &ms, &psi, p.h, &evolve)?;
            let q = qfi_numeric_with(&spec, t, &psi, &qopts)?;
            let w = closed_warnings(&q, p.lambda, p.g, p.order, t);
            Ok(vec![
                real(t),
                real(ep.mean),
                real(ep.variance),
                real(ep.derivative),
                real(ep.delta_lambda),
                real(q.value),
                real(ep.delta_lambda * q.value.sqrt()),
                join(&w),
            ])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(Experiment::OptimalMeasurement.csv_header().unwrap());
    rows.into_iter().for_each(|r| table.push(r));
    let warnings = collect_warnings(&table.rows);
    Ok(Outcome { table: Some(table), summary: Value::Null, warnings })
}

fn friction(p: &FrictionParams, seed: u64) -> Result<Outcome> {
    let c = &p.common;
    let mut cfg = LangevinConfig::friction(c.lambda, c.g, c.order, c.gamma);
    c.apply(&mut cfg, seed);
    cfg.thermal_factor = p.thermal_factor;
    cfg.t_max = p.times.0.iter().cloned().fold(f64::MIN, f64::max);
    cfg.record_times = p.times.0.clone();
    let est = estimate_precision(&cfg, c.h)?;
    let mut table = Table::new(Experiment::Friction.csv_header().unwrap());
    for k in 0..est.time_grid.len() {
        let t = est.time_grid[k];
        let pred = friction_asymptotics(c.lambda, c.g, c.order, c.gamma, t)?;
        let mut w = pred.warnings.clone();
        if p.thermal_factor != 1.0 {
            w.push("analytic precision assumes thermal_factor = 1".into());
        }
        table.push(vec![
            real(t),
            real(est.mean_p[k]),
            real(est.var_p[k]),
            real(est.delta_lambda[k]),
            real(pred.delta_lambda),
            real(est.stderr[k]),
            join(&w),
        ]);
    }
    let mut warnings = est.warnings.clone();
    warnings.extend(collect_warnings(&table.rows));
    Ok(Outcome { table: Some(table), summary: Value::Null, warnings })
}

fn cavity(p: &CavityParams, seed: u64) -> Result<Outcome> {
    let c = &p.common;
    let predict = |t: f64| cavity_asymptotics(c.lambda, c.g, c.order, c.gamma, p.mu, c.x0_mean, t);
    let make = |r: f64, t: f64, record: Vec<f64>| {
        let mut cfg = LangevinConfig::cavity(c.lambda, c.g, c.order, c.gamma, p.mu, r);
        c.apply(&mut cfg, seed);
        cfg.t_max = t;
        cfg.record_times = record;
        cfg
    };
    let mut table = Table::new(Experiment::Cavity.csv_header().unwrap());
    let mut warnings = Vec::new();
    let mut push = |t: f64, r: f64, k: usize, est: &crate::langevin::PrecisionEstimate, mut w: Vec<String>| {
        let analytic = match predict(t) {
            Ok(pred) => {
                w.extend(pred.warnings);
                pred.delta_lambda
            }
            Err(e) => {
                w.push(e.to_string());
                f64::NAN
            }
        };
        table.push(vec![
            real(t),
            real(r),
            real(est.mean_p[k]),
            real(est.var_p[k]),
            real(est.delta_lambda[k]),
            real(analytic),
            real(est.stderr[k]),
            join(&w),
        ]);
    };
    match p.r {
        Squeezing::Fixed(r) => {
            let t_max = p.times.0.iter().cloned().fold(f64::MIN, f64::max);
            let est = estimate_precision(&make(r, t_max, p.times.0.clone()), c.h)?;
            warnings.extend(est.warnings.iter().cloned());
            for (k, &t) in est.time_grid.iter().enumerate() {
                push(t, r, k, &est, vec!["analytic precision is evaluated at its own optimal r".into()]);
            }
        }
        Squeezing::Named(SqueezingRule::Optimal) => {
            // the optimum depends on T, so each time is a separate ensemble
            let runs: Vec<(f64, crate::langevin::PrecisionEstimate)> = p
                .times
                .0
                .par_iter()
                .map(|&t| {
                    let r = predict(t)?.r_opt;
                    Ok((r, estimate_precision(&make(r, t, vec![t]), c.h)?))
                })
                .collect::<Result<_>>()?;
            for (&t, (r, est)) in p.times.0.iter().zip(&runs) {
                warnings.extend(est.warnings.iter().cloned());
                push(t, *r, 0, est, Vec::new());
            }
        }
    }
    warnings.extend(collect_warnings(&table.rows));
    Ok(Outcome { table: Some(table), summary: Value::Null, warnings })
}

fn squeeze_sweep(p: &SqueezeSweepParams, seed: u64) -> Result<Outcome> {
    let c = &p.common;
    let mut cfg = LangevinConfig::cavity(c.lambda, c.g, c.order, c.gamma, p.mu, 0.0);
    c.apply(&mut cfg, seed);
    cfg.t_max = p.t;
    let sweep = sweep_squeezing(&cfg, &p.r_grid.0, c.h)?;
    let mut table = Table::new(Experiment::SqueezeSweep.csv_header().unwrap());
    for k in 0..sweep.r_grid.len() {
        table.push(vec![real(sweep.r_grid[k]), real(sweep.delta_lambda[k]), real(sweep.stderr[k]), String::new()]);
    }
    let r_opt = cavity_asymptotics(c.lambda, c.g, c.order, c.gamma, p.mu, c.x0_mean, p.t).ok().map(|a| a.r_opt);
    let summary = serde_json::json!({ "r_star": sweep.r_star, "r_opt_analytic": r_opt });
    Ok(Outcome { table: Some(table), summary, warnings: Vec::new() })
}

fn fit(p: &FitParams, base_dir: Option<&Path>) -> Result<Outcome> {
    let path = match base_dir {
        Some(b) if p.input.is_relative() => b.join(&p.input),
        _ => p.input.clone(),
    };
    let points = read_columns(&path, p)?;
    let result: ScalingFit = match p.model {
        FitModel::PowerLaw => fit_power_law(&points)?,
        FitModel::Exponential => fit_exponential(&points)?,
    };
    let mut warnings = Vec::new();
    if result.r_squared < 0.99 {
        let mut s = String::new();
        let _ = write!(s, "poor fit: r^2 = {:.4}", result.r_squared);
        warnings.push(s);
    }
    let summary = serde_json::json!({ "fit": result, "input": path.display().to_string() });
    Ok(Outcome { table: None, summary, warnings })
}

fn read_columns(path: &Path, p: &FitParams) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("fit: column `{name}` not in {}", path.display())))
    };
    let (ix, iy) = (col(&p.x)?, col(&p.y)?);
    let filter = p.filter.as_ref().map(|f| col(&f.column).map(|i| (i, f.equals))).transpose()?;
    let num = |s: &str, name: &str| {
        s.parse::<f64>().map_err(|_| Error::Config(format!("fit: non-numeric `{s}` in column `{name}`")))
    };
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        if let Some((i, v)) = filter {
            if num(&rec[i], &headers[i])? != v {
                continue;
            }
        }
        let x = num(&rec[ix], &p.x)?;
        if p.x_min.is_some_and(|lo| x < lo) || p.x_max.is_some_and(|hi| x > hi) {
            continue;
        }
        points.push((x, num(&rec[iy], &p.y)?));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(text)
    }

    #[test]
    fn grid_forms() {
        let g: Grid = serde_json::from_str(r#"{"start": 1, "stop": 2, "step": 0.25}"#).unwrap();
        assert_eq!(g.0, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        let g: Grid = serde_json::from_str("[3, 1.5]").unwrap();
        assert_eq!(g.0, vec![3.0, 1.5]);
        assert!(serde_json::from_str::<Grid>(r#"{"start": 1, "stop": 2, "stp": 1}"#).is_err());
        assert!(serde_json::from_str::<Grid>(r#"{"start": 2, "stop": 1, "step": 1}"#).is_err());
        assert!(serde_json::from_str::<Grid>("[]").is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let cfg = parse(r#"{"experiment": "qfi-sweep", "parameters": {"g": 0, "order": 2, "times": [1], "lamda": 1}}"#)
            .unwrap();
        let err = execute(&cfg, 0, &RunOptions::default()).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("`lamda`")), "{err}");
        assert!(!err.is_numerical());
        assert!(parse(r#"{"experiment": "qfi-sweep", "sed": 3}"#).is_err());
        assert!(parse(r#"{"experiment": "qfi-swep"}"#).is_err());
    }

    #[test]
    fn nested_trajectory_keys_are_checked() {
        let cfg = parse(
            r#"{"experiment": "friction", "parameters": {"g": 0.1, "order": 2, "times": [1], "n_trajs": 10}}"#,
        )
        .unwrap();
        let err = execute(&cfg, 0, &RunOptions::default()).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("`n_trajs`")), "{err}");
    }

    #[test]
    fn free_qfi_rows() {
        let cfg = parse(r#"{"experiment": "qfi-sweep", "parameters": {"g": 0, "order": 3, "times": [1, 2]}}"#).unwrap();
        let (_, out) = execute(&cfg, 0, &RunOptions::default()).unwrap();
        let t = out.table.unwrap();
        assert_eq!(t.rows.len(), 2);
        let qfi: f64 = t.rows[1][4].parse().unwrap();
        assert!((qfi - 8.0).abs() < 0.04, "{qfi}");
        assert_eq!(t.rows[1][2], "3");
    }

    #[test]
    fn real_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn squeezing_setting_parses() {
        assert_eq!(serde_json::from_str::<Squeezing>("1.5").unwrap(), Squeezing::Fixed(1.5));
        assert_eq!(serde_json::from_str::<Squeezing>(r#""optimal""#).unwrap(), Squeezing::default());
        assert!(serde_json::from_str::<Squeezing>(r#""best""#).is_err());
    }
}
