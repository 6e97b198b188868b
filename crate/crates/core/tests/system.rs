use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adaptive_regulator::harness::{run_core_process, CoreProcessRun, ExoSpec, VectorMap};
use adaptive_regulator::hybrid::{simulate, ClockConfig};
use adaptive_regulator::identifier::{
    build_poly_regressor, prediction_error, Identifier, LinearModel, LsConfig, LsIdentifier, RegressorMode,
};
use adaptive_regulator::numerics::Vector;
use adaptive_regulator::plant::harmonic_exo_field;
use adaptive_regulator::scenario::{
    run_scenario, run_sweep, samples_to_csv, simulate_scenario, steady_state_start, tracking_metrics, IdentifierKind,
    PlantConfig, ScenarioConfig, SweepAxis,
};

const C: [f64; 2] = [1.0, -0.5];

/// Harmonic exosystem, `tau(w) = (w1, w2, 0)` and `u*(w) = c^T w`: the
/// truth `(c1, c2, 0)` lies in the linear model set.
fn linear_core_process(clock: ClockConfig) -> CoreProcessRun {
    let exo = ExoSpec::harmonic(1.0, Vector::from_vec(vec![1.0, 0.0]));
    let tau: VectorMap = Arc::new(|w: &Vector| Vector::from_vec(vec![w[0], w[1], 0.0]));
    let ustar: VectorMap = Arc::new(|w: &Vector| Vector::from_element(1, C[0] * w[0] + C[1] * w[1]));
    CoreProcessRun::new(clock, exo, tau, ustar)
}

fn linear_ls(delta: f64) -> LsIdentifier {
    let reg = build_poly_regressor(3, 1, RegressorMode::FullMultiset).unwrap();
    LsIdentifier::new(LinearModel::new(Arc::new(reg), 1), LsConfig::diagonal(0.99, delta, 3)).unwrap()
}

fn theta_true() -> Vector {
    Vector::from_vec(vec![C[0], C[1], 0.0])
}

#[test]
fn core_process_samples_at_the_clock_ticks() {
    let clock = ClockConfig::uniform_random(0.05, 0.2, 11);
    let mut run = linear_core_process(clock.clone());
    let samples = run_core_process(&mut run, 10.0, 1e-3, None).unwrap();
    let arc = simulate(|w| harmonic_exo_field(w, 1.0), |w| w.clone(), Vector::from_vec(vec![1.0, 0.0]), &clock, 10.0, 1e-3).unwrap();
    let ticks = arc.jump_times();
    assert_eq!(samples.len(), ticks.len());
    for (s, t) in samples.iter().zip(&ticks) {
        assert_eq!(s.t, *t);
    }
}

#[test]
fn perfect_model_prediction_error_vanishes() {
    let mut run = linear_core_process(ClockConfig::periodic(0.1));
    run_core_process(&mut run, 60.0, 1e-3, None).unwrap();
    let mut id = linear_ls(1e-6);
    for (eta, u) in run.pairs() {
        id.jump(&eta, &u).unwrap();
    }
    // eps* over one period of the exosystem orbit w(t) = (cos t, -sin t)
    let mut worst: f64 = 0.0;
    for k in 0..64 {
        let phase = k as f64 / 64.0 * std::f64::consts::TAU;
        let w = Vector::from_vec(vec![phase.cos(), -phase.sin()]);
        let eps = prediction_error(id.model(), id.theta(), &(run.tau_eval)(&w), &(run.ustar_eval)(&w));
        worst = worst.max(eps.norm());
    }
    assert!(worst < 1e-6, "eps* = {worst}");
}

#[test]
fn regularization_bias_shrinks_with_omega() {
    let mut run = linear_core_process(ClockConfig::periodic(0.1));
    run_core_process(&mut run, 60.0, 1e-3, None).unwrap();
    let errors: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&delta| {
            let mut id = linear_ls(delta);
            for (eta, u) in run.pairs() {
                id.jump(&eta, &u).unwrap();
            }
            (id.theta() - theta_true()).norm()
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 1e-3, "{errors:?}");
}

#[test]
fn memory_deviation_is_proportional_to_the_disturbance() {
    let mut gains = Vec::new();
    for stream in 0..10u64 {
        let mut per_level = Vec::new();
        for level in [1e-2, 1e-3] {
            let mut clean = linear_core_process(ClockConfig::periodic(0.1));
            run_core_process(&mut clean, 20.0, 1e-3, None).unwrap();
            let n = clean.samples.len();
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let d_in: Vec<Vector> = (0..n).map(|_| Vector::from_fn(3, |_, _| level * rng.random_range(-1.0..1.0))).collect();
            let d_out: Vec<Vector> = (0..n).map(|_| Vector::from_fn(1, |_, _| level * rng.random_range(-1.0..1.0))).collect();
            let mut noisy = linear_core_process(ClockConfig::periodic(0.1));
            run_core_process(&mut noisy, 20.0, 1e-3, Some((&d_in, &d_out))).unwrap();
            let (mut a, mut b) = (linear_ls(1e-3), linear_ls(1e-3));
            let mut sup: f64 = 0.0;
            for ((ea, ua), (eb, ub)) in clean.pairs().iter().zip(noisy.pairs().iter()) {
                a.update(ea, ua).unwrap();
                b.update(eb, ub).unwrap();
                sup = sup.max(a.xi_distance(&b));
            }
            per_level.push(sup / level);
        }
        gains.push(per_level);
    }
    for g in &gains {
        assert!(g.iter().all(|x| x.is_finite()));
        // near-linear in the disturbance size
        let ratio = g[0] / g[1];
        assert!((0.5..2.0).contains(&ratio), "gains {g:?}");
    }
}

fn short_vdp(horizon: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::van_der_pol_default();
    if let PlantConfig::VanDerPol { w0, .. } = &mut cfg.plant {
        *w0 = [1.0 / std::f64::consts::PI, 0.0];
    }
    cfg.identifier.kind = IdentifierKind::Ls;
    cfg.sim.horizon = horizon;
    cfg
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn csv_is_deterministic_and_summary_is_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_vdp(10.0);
    cfg.clock = ClockConfig::uniform_random(0.05, 0.15, 3);
    cfg.output.csv = Some(dir.path().join("a.csv"));
    cfg.output.summary = Some(dir.path().join("a.json"));
    let result = run_scenario(&cfg).unwrap();
    let first = std::fs::read(dir.path().join("a.csv")).unwrap();
    cfg.output.csv = Some(dir.path().join("b.csv"));
    run_scenario(&cfg).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("b.csv")).unwrap());

    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("t,j,y,u,u_star,gamma_hat,err_xhat,err_sigmahat,eps_star\n"));
    let rows = parse_csv(&text);
    let trace: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[2].parse::<f64>().unwrap().abs())).collect();
    let (ss, settle) = tracking_metrics(&trace, cfg.sim.horizon);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    let keys: Vec<&str> = summary.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);
    assert_eq!(summary["steady_state_max_y"].as_f64().unwrap(), ss);
    assert_eq!(summary["settling_time_s"].as_f64().unwrap(), settle);
    let last_j: usize = rows.last().unwrap()[1].parse().unwrap();
    assert_eq!(summary["jumps_total"].as_u64().unwrap() as usize, last_j);
    assert_eq!(result.summary.jumps_total, last_j);
    let start = steady_state_start(cfg.sim.horizon);
    let direct = trace.iter().filter(|(t, _)| *t >= start).map(|(_, y)| *y).fold(0.0, f64::max);
    assert_eq!(direct, ss);
    let theta: Vec<f64> = summary["final_theta"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(theta, result.summary.final_theta);
}

#[test]
fn horizon_shorter_than_the_clock_gives_pure_flow() {
    let mut cfg = short_vdp(0.05);
    cfg.clock = ClockConfig::periodic(0.1);
    let r = simulate_scenario(&cfg).unwrap();
    assert_eq!(r.summary.jumps_total, 0);
    let rows = parse_csv(&samples_to_csv(&r.samples));
    assert!(rows.iter().all(|row| row.len() == 9 && row[1] == "0"));
}

#[test]
fn single_value_sweep_matches_the_scenario() {
    let cfg = short_vdp(5.0);
    let rows = run_sweep(&cfg, SweepAxis::Ell, &[20.0]).unwrap();
    let direct = simulate_scenario(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].steady_state_max_y, Some(direct.summary.steady_state_max_y));
    assert_eq!(rows[0].settling_time_s, Some(direct.summary.settling_time_s));
}

#[test]
fn failing_sweep_cells_are_recorded() {
    let cfg = short_vdp(1.0);
    let rows = run_sweep(&cfg, SweepAxis::N, &[1.0, 2.0]).unwrap();
    assert!(rows[0].error.is_none());
    assert!(rows[1].error.is_some());
}

#[test]
fn larger_model_lowers_the_error_but_settles_later() {
    let cfg = short_vdp(200.0);
    let rows = run_sweep(&cfg, SweepAxis::N, &[1.0, 3.0]).unwrap();
    let (a, b) = (rows[0].steady_state_max_y.unwrap(), rows[1].steady_state_max_y.unwrap());
    assert!(b < a, "{a} {b}");
    assert!(rows[1].settling_time_s.unwrap() >= rows[0].settling_time_s.unwrap());
}

#[test]
fn observer_error_shrinks_with_the_gain() {
    let errors: Vec<f64> = [20.0, 40.0]
        .iter()
        .map(|&ell| {
            let mut cfg = short_vdp(20.0);
            cfg.regulator.observer.ell = ell;
            let r = simulate_scenario(&cfg).unwrap();
            assert!(r.max_u <= r.u_bound * (1.0 + 1e-12));
            assert!(r.max_psi <= r.psi_bar * (1.0 + 1e-12));
            r.steady_state_max_err_xhat
        })
        .collect();
    assert!(errors[1] < errors[0], "{errors:?}");
}

#[test]
fn linear_steady_state_input_is_recovered_in_closed_loop() {
    let mut cfg = ScenarioConfig::van_der_pol_default();
    cfg.plant = PlantConfig::LinearHarmonic { rho: 1.0, damping: [1.0, 1.0], coupling: [1.0, 0.5], x0: [0.1, 0.0], w0: [1.0, 0.0] };
    cfg.regulator.d_eta = Some(2);
    cfg.identifier.kind = IdentifierKind::Ls;
    cfg.identifier.omega_scale = 1e-6;
    let r = simulate_scenario(&cfg).unwrap();
    assert!(r.steady_state_max_eps_star.unwrap() < 1e-3, "{:?}", r.steady_state_max_eps_star);
    assert!(r.summary.steady_state_max_y < 1e-4);
}
