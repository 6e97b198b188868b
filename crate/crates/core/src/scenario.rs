//! JSON-configured scenarios: build the closed loop, simulate, write the
//! CSV trace and the summary, and sweep one parameter.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_loop::{simulate_closed_loop, ClosedLoop, JumpRecord, LoopSample, TauEval};
use crate::error::{invalid_config, Result};
use crate::harness::{
    internal_model_core_process, linear_steady_state_map, run_core_process, verify_identifier_requirement, ExoSpec,
    IdentifierReport, VectorMap,
};
use crate::hybrid::ClockConfig;
use crate::identifier::{
    build_poly_regressor, Identifier, LinearModel, LsConfig, LsIdentifier, MiniBatchIdentifier, Regressor,
    RegressorMode, RidgeBatchSolver,
};
use crate::numerics::{place_poles, Matrix, Vector};
use crate::plant::{build_vdp_scenario, LinearHarmonicPlant, NormalFormPlant};
use crate::regulator::{default_internal_model_dim, InternalModelConfig, ObserverConfig, StabilizerConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    /// Van der Pol oscillator tracking the triangular wave; `p0` is the
    /// physical initial state.
    VanDerPol { a: f64, rho: f64, p0: [f64; 2], w0: [f64; 2] },
    /// Linear plant with `u* = coupling . w`; `x0` is the initial error state.
    LinearHarmonic { rho: f64, damping: [f64; 2], coupling: [f64; 2], x0: [f64; 2], w0: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorConfig {
    /// Closed-loop poles of `A - B K`, one per integrator.
    pub k_poles: Vec<f64>,
    pub sat_level: f64,
    /// Dimension of the default bidiagonal internal model; `2 (d_w + d_z + 1)` if absent.
    #[serde(default)]
    pub d_eta: Option<usize>,
    /// Explicit internal model, rows of `F` and `G`; overrides `d_eta`.
    #[serde(default)]
    pub f: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub g: Option<Vec<Vec<f64>>>,
    pub observer: ObserverConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentifierKind {
    /// No adaptation: `psi = 0`.
    #[default]
    None,
    Ls,
    MiniBatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentifierConfig {
    pub kind: IdentifierKind,
    pub mu_f: f64,
    /// `Omega = omega_scale * I`.
    pub omega_scale: f64,
    /// Maximal odd order `N` of the polynomial regressor.
    pub order: usize,
    pub mode: RegressorMode,
    /// Window length `N_w` of the mini-batch identifier.
    pub window: usize,
    pub rho_sigma: f64,
    pub rho_lambda: f64,
    pub theta_bound: f64,
}

impl Default for IdentifierConfig {
    fn default() -> Self {
        Self {
            kind: IdentifierKind::None,
            mu_f: 0.99,
            omega_scale: 1e-3,
            order: 1,
            mode: RegressorMode::FullMultiset,
            window: 20,
            rho_sigma: 1e6,
            rho_lambda: 1e6,
            theta_bound: 1e6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// Thresholds checked in `--assert` mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssertConfig {
    pub max_steady_state_y: Option<f64>,
    /// Allowed relative increase per step of a sweep that should be non-increasing.
    pub sweep_slack: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantConfig,
    pub regulator: RegulatorConfig,
    #[serde(default)]
    pub identifier: IdentifierConfig,
    pub clock: ClockConfig,
    pub sim: SimConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "assert")]
    pub assertions: AssertConfig,
}

impl ScenarioConfig {
    /// Van der Pol tracking with `a = rho = 2`, `l = 20`, `h = (6, 11, 6)`,
    /// `M = psi_bar = 100`, poles `{-1, -2}`, `T = 0.1`, horizon 100 s and
    /// `dt = 1e-3`, without adaptation.
    pub fn van_der_pol_default() -> Self {
        Self {
            plant: PlantConfig::VanDerPol { a: 2.0, rho: 2.0, p0: [0.1, 0.0], w0: [1.0, 0.0] },
            regulator: RegulatorConfig {
                k_poles: vec![-1.0, -2.0],
                sat_level: 100.0,
                d_eta: None,
                f: None,
                g: None,
                observer: ObserverConfig { ell: 20.0, h_coeffs: vec![vec![6.0, 11.0, 6.0]], psi_bar: 100.0 },
            },
            identifier: IdentifierConfig::default(),
            clock: ClockConfig::periodic(0.1),
            sim: SimConfig { horizon: 100.0, dt: 1e-3 },
            output: OutputConfig::default(),
            assertions: AssertConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Re-check every module-level invariant by building the loop once.
    pub fn validate(&self) -> Result<()> {
        self.clock.validate()?;
        if !(self.sim.horizon > 0.0 && self.sim.horizon.is_finite()) {
            return Err(invalid_config(format!("horizon must be positive, got {}", self.sim.horizon)));
        }
        if !(self.sim.dt > 0.0) || self.sim.dt > self.clock.t_low / 10.0 {
            return Err(invalid_config(format!("dt must be in (0, t_low / 10], got {}", self.sim.dt)));
        }
        build_closed_loop(self).map(|_| ())
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::van_der_pol_default()
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(invalid_config(format!("{what} must be a nonempty rectangular array of rows")));
    }
    Ok(Matrix::from_fn(n, m, |i, k| rows[i][k]))
}

/// Everything needed to simulate a configured scenario.
pub struct BuiltScenario {
    pub closed_loop: ClosedLoop,
    pub x0: Vector,
    /// Steady-state internal-model map, when it is known in closed form.
    pub tau: Option<Box<TauEval>>,
    pub plant: Arc<dyn NormalFormPlant>,
    pub im: InternalModelConfig,
    pub regressor: Option<Arc<dyn Regressor>>,
    pub w0: Vector,
}

fn build_plant(cfg: &PlantConfig) -> Result<(Arc<dyn NormalFormPlant>, Vector, Vector)> {
    match cfg {
        PlantConfig::VanDerPol { a, rho, p0, w0 } => {
            let plant = build_vdp_scenario(*a, *rho)?;
            let w0 = Vector::from_column_slice(w0);
            let x0 = plant.error_coordinates(&w0, &Vector::from_column_slice(p0));
            Ok((Arc::new(plant), w0, x0))
        }
        PlantConfig::LinearHarmonic { rho, damping, coupling, x0, w0 } => {
            if !(*rho > 0.0) {
                return Err(invalid_config(format!("exosystem rho must be positive, got {rho}")));
            }
            let plant = LinearHarmonicPlant { rho: *rho, damping: *damping, coupling: *coupling };
            Ok((Arc::new(plant), Vector::from_column_slice(w0), Vector::from_column_slice(x0)))
        }
    }
}

fn build_internal_model(cfg: &RegulatorConfig, d_w: usize, d_z: usize, d_y: usize) -> Result<InternalModelConfig> {
    match (&cfg.f, &cfg.g) {
        (Some(f), Some(g)) => InternalModelConfig::new(matrix_from_rows(f, "F")?, matrix_from_rows(g, "G")?),
        (None, None) => InternalModelConfig::bidiagonal(cfg.d_eta.unwrap_or(default_internal_model_dim(d_w, d_z)), d_y),
        _ => Err(invalid_config("F and G must be given together")),
    }
}

/// Build the identifier described by `cfg` for an internal model of
/// dimension `d_eta`; `None` for the non-adaptive loop.
pub fn build_identifier(
    cfg: &IdentifierConfig,
    d_eta: usize,
    d_y: usize,
) -> Result<Option<(Box<dyn Identifier>, Arc<dyn Regressor>)>> {
    if cfg.kind == IdentifierKind::None {
        return Ok(None);
    }
    let regressor: Arc<dyn Regressor> = Arc::new(build_poly_regressor(d_eta, cfg.order, cfg.mode)?);
    let n = regressor.len();
    let model = LinearModel::new(regressor.clone(), d_y);
    let omega = Matrix::from_diagonal_element(n, n, cfg.omega_scale);
    let id: Box<dyn Identifier> = match cfg.kind {
        IdentifierKind::Ls => {
            let mut ls = LsConfig::new(cfg.mu_f, omega);
            ls.rho_sigma = cfg.rho_sigma;
            ls.rho_lambda = cfg.rho_lambda;
            ls.theta_bound = cfg.theta_bound;
            Box::new(LsIdentifier::new(model, ls)?)
        }
        IdentifierKind::MiniBatch => {
            if cfg.omega_scale < 0.0 {
                return Err(invalid_config("omega_scale must be non-negative"));
            }
            let solver = Arc::new(RidgeBatchSolver::new(regressor.clone(), omega));
            Box::new(MiniBatchIdentifier::new(cfg.window, Arc::new(model), solver)?)
        }
        IdentifierKind::None => unreachable!(),
    };
    Ok(Some((id, regressor)))
}

pub fn build_closed_loop(cfg: &ScenarioConfig) -> Result<BuiltScenario> {
    let (plant, w0, x0) = build_plant(&cfg.plant)?;
    let dims = plant.dims();
    let k = place_poles(dims.r, dims.d_y, &cfg.regulator.k_poles).map_err(|e| invalid_config(e.to_string()))?;
    let stab = StabilizerConfig::new(k, cfg.regulator.sat_level, &plant.b_bar(), dims.r)?;
    let im = build_internal_model(&cfg.regulator, dims.d_w, dims.d_z, dims.d_y)?;
    let (identifier, regressor) = match build_identifier(&cfg.identifier, im.d_eta(), dims.d_y)? {
        Some((id, reg)) => (Some(id), Some(reg)),
        None => (None, None),
    };
    let closed_loop = ClosedLoop::new(plant.clone(), stab, im.clone(), &cfg.regulator.observer, identifier)?;
    let x0 = closed_loop.initial_state(&w0, &Vector::zeros(dims.d_z), &x0)?;
    let tau: Option<Box<TauEval>> = match &cfg.plant {
        PlantConfig::LinearHarmonic { rho, coupling, .. } => {
            let s = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -rho, 0.0]);
            let c = Matrix::from_row_slice(1, 2, coupling);
            let pi = linear_steady_state_map(&s, &im.f, &im.g, &c)?;
            Some(Box::new(move |w: &Vector| &pi * w))
        }
        PlantConfig::VanDerPol { .. } => None,
    };
    Ok(BuiltScenario { closed_loop, x0, tau, plant, im, regressor, w0 })
}

/// The summary file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub steady_state_max_y: f64,
    pub settling_time_s: f64,
    pub final_theta: Vec<f64>,
    pub jumps_total: usize,
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub samples: Vec<LoopSample>,
    pub summary: Summary,
    /// Largest `|x - x_hat|` over the steady-state window.
    pub steady_state_max_err_xhat: f64,
    /// Largest `|sigma_hat + b_bar u*|` over the steady-state window.
    pub steady_state_max_err_sigmahat: Option<f64>,
    /// Largest prediction error over the steady-state window.
    pub steady_state_max_eps_star: Option<f64>,
    pub max_u: f64,
    pub max_psi: f64,
    pub u_bound: f64,
    pub psi_bar: f64,
    pub horizon: f64,
    /// Identifier updates in which one of its clamps engaged.
    pub clamp_events: usize,
    pub jump_log: Vec<JumpRecord>,
}

/// Fraction of the horizon, counted from the end, over which steady-state
/// metrics are taken.
pub const STEADY_STATE_FRACTION: f64 = 0.2;

/// Start of the steady-state window.
pub fn steady_state_start(horizon: f64) -> f64 {
    horizon * (1.0 - STEADY_STATE_FRACTION)
}

/// `(steady-state max |y|, settling time)` from `(t, |y|)` pairs: the
/// settling time is the first instant after which `|y|` stays within twice
/// the steady-state maximum.
pub fn tracking_metrics(trace: &[(f64, f64)], horizon: f64) -> (f64, f64) {
    let start = steady_state_start(horizon);
    let ss = trace.iter().filter(|(t, _)| *t >= start).map(|(_, y)| *y).fold(0.0, f64::max);
    let band = 2.0 * ss;
    let settling = trace.iter().rev().find(|(_, y)| *y > band).map_or(0.0, |(t, _)| *t);
    (ss, settling)
}

fn summarize(samples: Vec<LoopSample>, horizon: f64, cl: &ClosedLoop, jumps_total: usize) -> ScenarioResult {
    let trace: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.y.norm())).collect();
    let (steady_state_max_y, settling_time_s) = tracking_metrics(&trace, horizon);
    let start = steady_state_start(horizon);
    let tail = || samples.iter().filter(move |s| s.t >= start);
    let opt_max = |vals: Vec<Option<f64>>| -> Option<f64> {
        vals.into_iter().try_fold(0.0f64, |acc, v| v.map(|x| acc.max(x)))
    };
    let final_theta = cl.identifier().map_or_else(Vec::new, |id| id.theta().as_slice().to_vec());
    let max_u = samples.iter().map(|s| s.u.norm()).fold(0.0, f64::max);
    let max_psi = samples.iter().map(|s| s.psi.norm()).fold(0.0, f64::max);
    ScenarioResult {
        steady_state_max_err_xhat: tail().map(|s| s.err_xhat).fold(0.0, f64::max),
        steady_state_max_err_sigmahat: opt_max(tail().map(|s| s.err_sigmahat).collect()),
        steady_state_max_eps_star: opt_max(tail().map(|s| s.eps_star).collect()),
        max_u,
        max_psi,
        u_bound: cl.stabilizer().control_bound(),
        psi_bar: cl.psi_bar(),
        horizon,
        clamp_events: cl.identifier().map_or(0, |id| id.clamp_events()),
        jump_log: cl.jump_log().to_vec(),
        summary: Summary { steady_state_max_y, settling_time_s, final_theta, jumps_total },
        samples,
    }
}

/// Shortest round-trip decimal; `-0` is written as `0`.
fn num(x: f64) -> String {
    (x + 0.0).to_string()
}

fn cell(v: &Vector) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(";")
}

/// CSV text of a run. Multi-channel vectors are written as `;`-separated
/// components within one cell.
pub fn samples_to_csv(samples: &[LoopSample]) -> String {
    let mut out = String::from("t,j,y,u,u_star,gamma_hat,err_xhat,err_sigmahat,eps_star\n");
    for s in samples {
        let opt = |v: Option<f64>| v.map_or_else(String::new, num);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            num(s.t),
            s.j,
            cell(&s.y),
            cell(&s.u),
            s.u_star.as_ref().map_or_else(String::new, cell),
            cell(&s.gamma_hat),
            num(s.err_xhat),
            opt(s.err_sigmahat),
            opt(s.eps_star),
        );
    }
    out
}

fn write_outputs(result: &ScenarioResult, output: &OutputConfig) -> Result<()> {
    if let Some(path) = &output.csv {
        std::fs::write(path, samples_to_csv(&result.samples))?;
    }
    if let Some(path) = &output.summary {
        std::fs::write(path, serde_json::to_string_pretty(&result.summary)?)?;
    }
    Ok(())
}

/// Simulate without writing any file.
pub fn simulate_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.clock.validate()?;
    let mut built = build_closed_loop(cfg)?;
    let (samples, end, _) = simulate_closed_loop(
        &mut built.closed_loop,
        built.x0.clone(),
        &cfg.clock,
        cfg.sim.horizon,
        cfg.sim.dt,
        built.tau.as_deref(),
    )?;
    Ok(summarize(samples, cfg.sim.horizon, &built.closed_loop, end.j))
}

/// Simulate and write the configured CSV and summary files.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let result = simulate_scenario(cfg)?;
    write_outputs(&result, &cfg.output)?;
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Ell,
    N,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ell" => Ok(Self::Ell),
            "N" | "n" => Ok(Self::N),
            other => Err(format!("unknown sweep axis '{other}', expected ell or N")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub steady_state_max_y: Option<f64>,
    pub settling_time_s: Option<f64>,
    pub error: Option<String>,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

/// The configuration of one sweep cell.
pub fn sweep_cell_config(base: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    let tag = match axis {
        SweepAxis::Ell => {
            cfg.regulator.observer.ell = value;
            format!("ell{value}")
        }
        SweepAxis::N => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(invalid_config(format!("model order must be a positive integer, got {value}")));
            }
            cfg.identifier.order = value as usize;
            format!("N{value}")
        }
    };
    cfg.output.csv = base.output.csv.as_ref().map(|p| with_suffix(p, &tag));
    cfg.output.summary = base.output.summary.as_ref().map(|p| with_suffix(p, &tag));
    Ok(cfg)
}

/// Run one scenario per value in parallel. Failing cells are reported in
/// their row; the sweep continues.
pub fn run_sweep(base: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(invalid_config("sweep needs at least one value"));
    }
    Ok(values
        .par_iter()
        .map(|&value| match sweep_cell_config(base, axis, value).and_then(|cfg| run_scenario(&cfg)) {
            Ok(r) => SweepRow {
                value,
                steady_state_max_y: Some(r.summary.steady_state_max_y),
                settling_time_s: Some(r.summary.settling_time_s),
                error: None,
            },
            Err(e) => SweepRow { value, steady_state_max_y: None, settling_time_s: None, error: Some(e.to_string()) },
        })
        .collect())
}

/// Whether the steady-state column never increases by more than `slack`
/// (relative) from one row to the next. Failed cells break the trend.
pub fn is_non_increasing(rows: &[SweepRow], slack: f64) -> bool {
    rows.windows(2).all(|p| match (p[0].steady_state_max_y, p[1].steady_state_max_y) {
        (Some(a), Some(b)) => b <= a * (1.0 + slack),
        _ => false,
    })
}

/// Check the configured identifier on the core process of the scenario.
/// The input samples are the internal-model state driven by `u*` after a
/// burn-in, which approximates the steady-state map along the run.
pub fn check_identifier(cfg: &ScenarioConfig, trials: usize, seed: u64) -> Result<IdentifierReport> {
    let built = build_closed_loop(cfg)?;
    let plant = built.plant.clone();
    let ustar_plant = plant.clone();
    let ustar: VectorMap = Arc::new(move |w: &Vector| {
        ustar_plant.ideal_feedforward(w).unwrap_or_else(|| Vector::zeros(ustar_plant.dims().d_y))
    });
    if plant.ideal_feedforward(&built.w0).is_none() {
        return Err(invalid_config("the plant does not expose its ideal feedforward"));
    }
    let field_plant = plant.clone();
    let exo = ExoSpec { field: Arc::new(move |w: &Vector| field_plant.exo_field(w)), w0: built.w0.clone() };
    let burn_in = 30.0;
    let mut run = internal_model_core_process(cfg.clock.clone(), exo, ustar, &built.im, burn_in, cfg.sim.dt)?;
    run_core_process(&mut run, cfg.sim.horizon, cfg.sim.dt, None)?;
    let d_y = plant.dims().d_y;
    let regressor = Arc::new(build_poly_regressor(built.im.d_eta(), cfg.identifier.order, cfg.identifier.mode)?);
    let n = regressor.len();
    let omega = Matrix::from_diagonal_element(n, n, cfg.identifier.omega_scale);
    let model = LinearModel::new(regressor.clone(), d_y);
    match cfg.identifier.kind {
        IdentifierKind::Ls | IdentifierKind::None => {
            let mut ls = LsConfig::new(cfg.identifier.mu_f, omega);
            ls.rho_sigma = cfg.identifier.rho_sigma;
            ls.rho_lambda = cfg.identifier.rho_lambda;
            ls.theta_bound = cfg.identifier.theta_bound;
            verify_identifier_requirement(&LsIdentifier::new(model, ls)?, &run, trials, seed)
        }
        IdentifierKind::MiniBatch => {
            let solver = Arc::new(RidgeBatchSolver::new(regressor, omega));
            let id = MiniBatchIdentifier::new(cfg.identifier.window, Arc::new(model), solver)?;
            verify_identifier_requirement(&id, &run, trials, seed)
        }
    }
}
