//! Hybrid time, clock strategies and the flow/jump simulation engine.
//!
//! Jumps are triggered by the clock only: the flow set of the clock is
//! `[0, t_high]`, the jump set `[t_low, t_high]`, and a strategy decides where
//! in that window each tick lands. The engine integrates the flow with fixed
//! RK4 steps and shortens the last step of every flow interval so that it
//! lands exactly on the tick.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, Error, Result};
use crate::numerics::{rk4_step, Vector};

/// A point `(t, j)` of a hybrid time domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridTime {
    pub t: f64,
    pub j: usize,
}

impl HybridTime {
    pub fn new(t: f64, j: usize) -> Self {
        Self { t, j }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClockStrategy {
    Periodic { period: f64 },
    UniformRandom { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    pub t_low: f64,
    pub t_high: f64,
    pub strategy: ClockStrategy,
}

impl ClockConfig {
    pub fn periodic(period: f64) -> Self {
        Self { t_low: period, t_high: period, strategy: ClockStrategy::Periodic { period } }
    }

    pub fn uniform_random(t_low: f64, t_high: f64, seed: u64) -> Self {
        Self { t_low, t_high, strategy: ClockStrategy::UniformRandom { seed } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_low > 0.0 && self.t_low <= self.t_high && self.t_high.is_finite()) {
            return Err(invalid_config(format!(
                "clock bounds must satisfy 0 < t_low <= t_high, got [{}, {}]",
                self.t_low, self.t_high
            )));
        }
        if let ClockStrategy::Periodic { period } = self.strategy {
            if !(period >= self.t_low && period <= self.t_high) {
                return Err(invalid_config(format!(
                    "period {period} outside [{}, {}]",
                    self.t_low, self.t_high
                )));
            }
        }
        Ok(())
    }

    /// `min(1e-3, t_low / 100)`.
    pub fn default_dt(&self) -> f64 {
        (self.t_low / 100.0).min(1e-3)
    }
}

/// Stateful tick generator for a [`ClockConfig`].
#[derive(Clone, Debug)]
pub struct Clock {
    config: ClockConfig,
    rng: Option<ChaCha8Rng>,
}

impl Clock {
    pub fn new(config: ClockConfig) -> Result<Self> {
        config.validate()?;
        let rng = match config.strategy {
            ClockStrategy::UniformRandom { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            ClockStrategy::Periodic { .. } => None,
        };
        Ok(Self { config, rng })
    }

    pub fn config(&self) -> &ClockConfig {
        &self.config
    }

    /// Next tick after a jump at `last_jump_t`; always in
    /// `[last_jump_t + t_low, last_jump_t + t_high]`.
    pub fn next_jump_time(&mut self, last_jump_t: f64) -> f64 {
        let ClockConfig { t_low, t_high, .. } = self.config;
        let gap = match (&self.config.strategy, self.rng.as_mut()) {
            (ClockStrategy::Periodic { period }, _) => *period,
            (ClockStrategy::UniformRandom { .. }, Some(rng)) if t_high > t_low => rng.random_range(t_low..=t_high),
            _ => t_low,
        };
        last_jump_t + gap
    }
}

/// What a recorded sample represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Initial,
    Flow,
    /// Last sample of a flow interval, taken exactly at the tick.
    PreJump,
    PostJump,
}

/// A system the engine can drive: a flow field over the continuous state and
/// a jump map applied at clock ticks. Discrete-only state (identifier memory,
/// parameters) lives inside the implementor and is updated by `jump`.
pub trait HybridSystem {
    fn flow(&self, t: f64, x: &Vector) -> Vector;
    fn jump(&mut self, at: HybridTime, x: &Vector) -> Result<Vector>;
}

/// Drive `system` from `x0` over `[0, horizon]`, calling `observe` after the
/// initial point, after every integration step and after every jump.
/// Returns the final hybrid time and state.
pub fn run<S, O>(
    system: &mut S,
    x0: Vector,
    clock: &ClockConfig,
    horizon: f64,
    dt: f64,
    mut observe: O,
) -> Result<(HybridTime, Vector)>
where
    S: HybridSystem,
    O: FnMut(&S, HybridTime, &Vector, SampleKind),
{
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid_config(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0) || dt > clock.t_low / 10.0 {
        return Err(invalid_config(format!(
            "dt = {dt} must be positive and at most t_low / 10 = {}",
            clock.t_low / 10.0
        )));
    }
    let mut clock = Clock::new(clock.clone())?;
    let tick_slack = 1e-9 * dt;
    let mut t = 0.0;
    let mut j = 0usize;
    let mut x = x0;
    observe(system, HybridTime::new(t, j), &x, SampleKind::Initial);
    let mut next_jump = clock.next_jump_time(0.0);

    loop {
        let jump_due = next_jump <= horizon + tick_slack;
        let target = if jump_due { next_jump } else { horizon };
        while t < target {
            let remaining = target - t;
            let landing = remaining <= dt * (1.0 + 1e-6);
            let h = if landing { remaining } else { dt };
            let flow = |tau: f64, s: &Vector| system.flow(tau, s);
            x = rk4_step(flow, t, &x, h).map_err(|e| match e {
                Error::IntegrationBlowup { detail, .. } => {
                    Error::IntegrationBlowup { at: HybridTime::new(t, j), detail }
                }
                other => other,
            })?;
            t = if landing { target } else { t + h };
            let kind = if landing && jump_due { SampleKind::PreJump } else { SampleKind::Flow };
            observe(system, HybridTime::new(t, j), &x, kind);
        }
        if !jump_due {
            break;
        }
        x = system.jump(HybridTime::new(t, j), &x)?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::IntegrationBlowup {
                at: HybridTime::new(t, j),
                detail: "jump map produced a non-finite state".into(),
            });
        }
        j += 1;
        observe(system, HybridTime::new(t, j), &x, SampleKind::PostJump);
        next_jump = clock.next_jump_time(t);
    }
    Ok((HybridTime::new(t, j), x))
}

/// A recorded hybrid trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HybridArc {
    pub samples: Vec<(HybridTime, Vector)>,
    /// Indices into `samples` of the post-jump samples, where `j` increments.
    pub jump_indices: Vec<usize>,
}

impl HybridArc {
    pub fn final_state(&self) -> Option<&Vector> {
        self.samples.last().map(|(_, x)| x)
    }

    pub fn jump_times(&self) -> Vec<f64> {
        self.jump_indices.iter().map(|&i| self.samples[i].0.t).collect()
    }

    /// Check the hybrid-time-domain ordering and the clock gap bounds.
    pub fn validate(&self, clock: &ClockConfig) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(msg));
        for w in self.samples.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let ordered = (b.j == a.j && b.t >= a.t) || (b.j == a.j + 1 && b.t == a.t);
            if !ordered {
                return fail(format!("samples out of hybrid order: ({}, {}) then ({}, {})", a.t, a.j, b.t, b.j));
            }
        }
        for (k, &idx) in self.jump_indices.iter().enumerate() {
            if idx == 0 || self.samples[idx].0.j != self.samples[idx - 1].0.j + 1 {
                return fail(format!("jump index {idx} does not mark a jump"));
            }
            if k > 0 {
                let gap = self.samples[idx].0.t - self.samples[self.jump_indices[k - 1]].0.t;
                let slack = 1e-9 * clock.t_high;
                if gap < clock.t_low - slack || gap > clock.t_high + slack {
                    return fail(format!("inter-jump gap {gap} outside [{}, {}]", clock.t_low, clock.t_high));
                }
            }
        }
        let jumps_seen = self.samples.windows(2).filter(|w| w[1].0.j != w[0].0.j).count();
        if jumps_seen != self.jump_indices.len() {
            return fail("jump_indices does not list every jump".into());
        }
        Ok(())
    }
}

struct ClosureSystem<F, J> {
    flow: F,
    jump: J,
}

impl<F, J> HybridSystem for ClosureSystem<F, J>
where
    F: Fn(&Vector) -> Vector,
    J: FnMut(&Vector) -> Vector,
{
    fn flow(&self, _t: f64, x: &Vector) -> Vector {
        (self.flow)(x)
    }

    fn jump(&mut self, _at: HybridTime, x: &Vector) -> Result<Vector> {
        Ok((self.jump)(x))
    }
}

/// Simulate an autonomous flow/jump pair and record every sample.
pub fn simulate<F, J>(flow: F, jump: J, x0: Vector, clock: &ClockConfig, horizon: f64, dt: f64) -> Result<HybridArc>
where
    F: Fn(&Vector) -> Vector,
    J: FnMut(&Vector) -> Vector,
{
    let mut system = ClosureSystem { flow, jump };
    let mut arc = HybridArc::default();
    run(&mut system, x0, clock, horizon, dt, |_, at, x, kind| {
        if kind == SampleKind::PostJump {
            arc.jump_indices.push(arc.samples.len());
        }
        arc.samples.push((at, x.clone()));
    })?;
    Ok(arc)
}
