//! Plant, regulator and identifier wired into one hybrid system.
//!
//! The continuous state is `(w, z, x, eta, x_hat, sigma_hat)`. The clock is
//! handled by the engine; the identifier memory and `theta` live in the
//! identifier object and change only at jumps.

use std::sync::Arc;

use crate::error::{invalid_config, Result};
use crate::hybrid::{run, ClockConfig, HybridSystem, HybridTime, SampleKind};
use crate::identifier::Identifier;
use crate::numerics::{Matrix, Vector};
use crate::plant::{build_chain_matrices, NormalFormPlant};
use crate::regulator::{
    build_observer_gains, control_output, internal_model_flow, observer_flow, psi_consistency, InternalModelConfig,
    ObserverConfig, ObserverStructure, StabilizerConfig,
};

/// Offsets of the blocks of the closed-loop state vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateLayout {
    pub d_w: usize,
    pub d_z: usize,
    pub d_x: usize,
    pub d_eta: usize,
    pub d_y: usize,
}

impl StateLayout {
    pub fn w(&self) -> (usize, usize) {
        (0, self.d_w)
    }
    pub fn z(&self) -> (usize, usize) {
        (self.d_w, self.d_z)
    }
    pub fn x(&self) -> (usize, usize) {
        (self.d_w + self.d_z, self.d_x)
    }
    pub fn eta(&self) -> (usize, usize) {
        (self.d_w + self.d_z + self.d_x, self.d_eta)
    }
    pub fn x_hat(&self) -> (usize, usize) {
        (self.d_w + self.d_z + self.d_x + self.d_eta, self.d_x)
    }
    pub fn sigma_hat(&self) -> (usize, usize) {
        (self.d_w + self.d_z + 2 * self.d_x + self.d_eta, self.d_y)
    }
    pub fn len(&self) -> usize {
        self.d_w + self.d_z + 2 * self.d_x + self.d_eta + self.d_y
    }

    pub fn block(&self, state: &Vector, (start, len): (usize, usize)) -> Vector {
        state.rows(start, len).into_owned()
    }
}

pub struct ClosedLoop {
    plant: Arc<dyn NormalFormPlant>,
    layout: StateLayout,
    r: usize,
    a: Matrix,
    b: Matrix,
    stab: StabilizerConfig,
    im: InternalModelConfig,
    observer: ObserverStructure,
    psi_bar: f64,
    identifier: Option<Box<dyn Identifier>>,
    jump_log: Vec<JumpRecord>,
}

/// Identifier input/output at one tick and the parameter after the update.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpRecord {
    pub t: f64,
    pub eta: Vector,
    pub u: Vector,
    pub theta: Option<Vector>,
}

impl std::fmt::Debug for ClosedLoop {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedLoop").field("layout", &self.layout).field("adaptive", &self.identifier.is_some()).finish()
    }
}

impl ClosedLoop {
    /// `identifier = None` gives the loop without internal-model consistency
    /// term (`psi = 0`), i.e. a plain extended observer.
    pub fn new(
        plant: Arc<dyn NormalFormPlant>,
        stab: StabilizerConfig,
        im: InternalModelConfig,
        obs: &ObserverConfig,
        identifier: Option<Box<dyn Identifier>>,
    ) -> Result<Self> {
        let dims = plant.dims();
        let b_bar = plant.b_bar();
        if b_bar.shape() != (dims.d_y, dims.d_y) {
            return Err(invalid_config("b_bar shape does not match the output dimension"));
        }
        if stab.k.shape() != (dims.d_y, dims.d_x()) {
            return Err(invalid_config("stabilizer gain shape does not match the plant"));
        }
        if im.g.ncols() != dims.d_y {
            return Err(invalid_config("internal model input dimension must equal d_y"));
        }
        if let Some(id) = &identifier {
            let m = id.model();
            if m.d_eta() != im.d_eta() || m.d_y() != dims.d_y {
                return Err(invalid_config(format!(
                    "identifier model maps R^{} -> R^{}, loop needs R^{} -> R^{}",
                    m.d_eta(),
                    m.d_y(),
                    im.d_eta(),
                    dims.d_y
                )));
            }
        }
        let gains = build_observer_gains(obs, dims.r, dims.d_y)?;
        let (a, b, _) = build_chain_matrices(dims.r, dims.d_y);
        let layout = StateLayout { d_w: dims.d_w, d_z: dims.d_z, d_x: dims.d_x(), d_eta: im.d_eta(), d_y: dims.d_y };
        Ok(Self {
            observer: ObserverStructure::new(dims.r, b_bar, gains),
            plant,
            layout,
            r: dims.r,
            a,
            b,
            stab,
            im,
            psi_bar: obs.psi_bar,
            identifier,
            jump_log: Vec::new(),
        })
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn plant(&self) -> &dyn NormalFormPlant {
        self.plant.as_ref()
    }

    pub fn relative_degree(&self) -> usize {
        self.r
    }

    pub fn stabilizer(&self) -> &StabilizerConfig {
        &self.stab
    }

    pub fn psi_bar(&self) -> f64 {
        self.psi_bar
    }

    pub fn identifier(&self) -> Option<&dyn Identifier> {
        self.identifier.as_deref()
    }

    /// One record per jump so far.
    pub fn jump_log(&self) -> &[JumpRecord] {
        &self.jump_log
    }

    /// Closed-loop state with the regulator at zero.
    pub fn initial_state(&self, w0: &Vector, z0: &Vector, x0: &Vector) -> Result<Vector> {
        let l = self.layout;
        if w0.len() != l.d_w || z0.len() != l.d_z || x0.len() != l.d_x {
            return Err(invalid_config(format!(
                "initial state dimensions (w {}, z {}, x {}) do not match (w {}, z {}, x {})",
                w0.len(),
                z0.len(),
                x0.len(),
                l.d_w,
                l.d_z,
                l.d_x
            )));
        }
        let mut s = Vector::zeros(l.len());
        s.rows_mut(l.w().0, l.d_w).copy_from(w0);
        s.rows_mut(l.z().0, l.d_z).copy_from(z0);
        s.rows_mut(l.x().0, l.d_x).copy_from(x0);
        Ok(s)
    }

    pub fn output(&self, state: &Vector) -> Vector {
        state.rows(self.layout.x().0, self.layout.d_y).into_owned()
    }

    pub fn control(&self, state: &Vector) -> Vector {
        let l = self.layout;
        control_output(&l.block(state, l.x_hat()), &l.block(state, l.sigma_hat()), &self.stab)
    }

    pub fn psi(&self, state: &Vector, u: &Vector) -> Vector {
        match &self.identifier {
            Some(id) => {
                let eta = self.layout.block(state, self.layout.eta());
                psi_consistency(id.theta(), &eta, u, id.model(), &self.im, self.psi_bar)
            }
            None => Vector::zeros(self.layout.d_y),
        }
    }

    /// `gamma_hat(theta, eta)`; zero without identifier.
    pub fn gamma_hat(&self, state: &Vector) -> Vector {
        match &self.identifier {
            Some(id) => id.model().gamma_hat(id.theta(), &self.layout.block(state, self.layout.eta())),
            None => Vector::zeros(self.layout.d_y),
        }
    }
}

impl HybridSystem for ClosedLoop {
    fn flow(&self, _t: f64, state: &Vector) -> Vector {
        let l = self.layout;
        let w = l.block(state, l.w());
        let z = l.block(state, l.z());
        let x = l.block(state, l.x());
        let eta = l.block(state, l.eta());
        let x_hat = l.block(state, l.x_hat());
        let sigma_hat = l.block(state, l.sigma_hat());

        let u = control_output(&x_hat, &sigma_hat, &self.stab);
        let psi = self.psi(state, &u);
        let y = x.rows(0, l.d_y).into_owned();

        let mut out = Vector::zeros(l.len());
        out.rows_mut(l.w().0, l.d_w).copy_from(&self.plant.exo_field(&w));
        if l.d_z > 0 {
            out.rows_mut(l.z().0, l.d_z).copy_from(&self.plant.zero_dynamics(&w, &z, &x));
        }
        let drive = self.plant.q(&w, &z, &x) + self.plant.b(&w, &z, &x) * &u;
        out.rows_mut(l.x().0, l.d_x).copy_from(&(&self.a * &x + &self.b * drive));
        out.rows_mut(l.eta().0, l.d_eta).copy_from(&internal_model_flow(&eta, &u, &self.im));
        let (dx_hat, dsigma_hat) = observer_flow(&x_hat, &sigma_hat, &y, &u, &psi, &self.observer);
        out.rows_mut(l.x_hat().0, l.d_x).copy_from(&dx_hat);
        out.rows_mut(l.sigma_hat().0, l.d_y).copy_from(&dsigma_hat);
        out
    }

    /// Feeds `(eta, u)` to the identifier; the continuous state is held.
    fn jump(&mut self, at: HybridTime, state: &Vector) -> Result<Vector> {
        let u = self.control(state);
        let eta = self.layout.block(state, self.layout.eta());
        if let Some(id) = self.identifier.as_mut() {
            id.jump(&eta, &u)?;
        }
        let theta = self.identifier.as_ref().map(|id| id.theta().clone());
        self.jump_log.push(JumpRecord { t: at.t, eta, u, theta });
        Ok(state.clone())
    }
}

/// One stored sample of a closed-loop run.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopSample {
    pub t: f64,
    pub j: usize,
    pub y: Vector,
    pub u: Vector,
    pub u_star: Option<Vector>,
    pub gamma_hat: Vector,
    pub psi: Vector,
    /// `|x - x_hat|`.
    pub err_xhat: f64,
    /// `|sigma_hat + b_bar u*(w)|`, when the plant exposes `u*`.
    pub err_sigmahat: Option<f64>,
    /// `|u*(w) - gamma_hat(theta, tau(w))|`, when a test `tau` is supplied.
    pub eps_star: Option<f64>,
}

/// Map from exosystem state to the ideal internal-model state, used only
/// to report the prediction error along the run.
pub type TauEval = dyn Fn(&Vector) -> Vector + Send + Sync;

/// Simulate the loop and record one [`LoopSample`] per stored state.
/// Returns the samples and the final hybrid time.
pub fn simulate_closed_loop(
    cl: &mut ClosedLoop,
    x0: Vector,
    clock: &ClockConfig,
    horizon: f64,
    dt: f64,
    tau: Option<&TauEval>,
) -> Result<(Vec<LoopSample>, HybridTime, Vector)> {
    let mut samples = Vec::with_capacity((horizon / dt) as usize + 16);
    let (end, x_end) = run(cl, x0, clock, horizon, dt, |sys, at, state, _kind: SampleKind| {
        samples.push(sample_of(sys, at, state, tau));
    })?;
    Ok((samples, end, x_end))
}

fn sample_of(cl: &ClosedLoop, at: HybridTime, state: &Vector, tau: Option<&TauEval>) -> LoopSample {
    let l = cl.layout;
    let w = l.block(state, l.w());
    let u = cl.control(state);
    let u_star = cl.plant.ideal_feedforward(&w);
    let err_xhat = (l.block(state, l.x()) - l.block(state, l.x_hat())).norm();
    let err_sigmahat = u_star.as_ref().map(|us| (l.block(state, l.sigma_hat()) + cl.plant.b_bar() * us).norm());
    let eps_star = match (tau, &u_star, cl.identifier()) {
        (Some(tau), Some(us), Some(id)) => Some((us - id.model().gamma_hat(id.theta(), &tau(&w))).norm()),
        _ => None,
    };
    LoopSample {
        t: at.t,
        j: at.j,
        y: cl.output(state),
        psi: cl.psi(state, &u),
        gamma_hat: cl.gamma_hat(state),
        u,
        u_star,
        err_xhat,
        err_sigmahat,
        eps_star,
    }
}
