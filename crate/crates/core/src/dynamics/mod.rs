//! Stochastic dynamics around the traveling pulse: the full nonlinear SPDE
//! with phase tracking, the reduced linear system and its immediate
//! relaxation limit.
//!
//! Every field is held in the co-moving coordinate `xi = x + st`: a
//! fixed-frame perturbation `X(t, x)` is stored as `Y(t, xi) = X(t, xi - st)`,
//! so that `T_{-st} X = Y` and `Pi0_{st} X` pairs with `d1(. + st)` exactly as
//! `Pi#,0 Y` pairs with `d1`. In these coordinates the linear part is the
//! time-independent `L#`, stepped by Crank-Nicolson. The remainder and the
//! noise enter explicitly at the left end of each step; the noise modes are
//! fixed in the lab frame and therefore appear as `e_k(xi - st)`.
//!
//! The zero mode `d1` used here is the computed kernel vector of the discrete
//! `L#`, with `Z` renormalized so that `|d1|_H = 1` and `<psi, d1>_H = 1`.
//! Crank-Nicolson then conserves `<psi, Y>_H` up to `|lambda0|`.

pub mod diagnostics;
pub mod record;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frozen::{implicit_matrix, pinned_dofs, spectrum, FrozenOperator, SpectrumReport};
use crate::grid::{BoundaryCondition, Grid, SpaceWeights, StateUV};
use crate::linalg::{BandLu, BandMatrix};
use crate::noise::{NoiseModel, NoiseStream};
use crate::profile::{compute_profile, default_peak, ModelParams, WaveProfile};
use crate::projection::{kernel_direction, ProjectionPair};

pub use record::{RecordRow, TrajectoryRecord};

/// Grid used for path simulations.
pub const DYNAMICS_HALF_WIDTH: f64 = 200.0;
pub const DYNAMICS_POINTS: usize = 1024;

/// Number of eigenvalues requested when building a [`Context`].
const CONTEXT_EIGS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub sigma: f64,
    /// Relaxation rate of the phase equation.
    pub m: f64,
    /// Stopping exponent.
    pub q: f64,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    /// Record every this many steps.
    pub save_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sigma: 1e-3,
            m: 100.0,
            q: 0.0,
            t_end: 20.0,
            dt: 1e-3,
            seed: 0,
            save_every: 10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return bad(format!("need dt > 0 and T > 0 (dt={}, T={})", self.dt, self.t_end));
        }
        if !(self.m > 0.0) || self.m * self.dt > 0.5 {
            return bad(format!("need m > 0 and m dt <= 0.5 (m={}, dt={})", self.m, self.dt));
        }
        if !(0.0..0.5).contains(&self.q) {
            return bad(format!("q must lie in [0, 0.5), got {}", self.q));
        }
        if self.save_every == 0 {
            return bad("save_every must be >= 1".into());
        }
        self.steps().map(|_| ())
    }

    /// Number of steps; `T / dt` must be an integer up to 1e-9.
    pub fn steps(&self) -> Result<usize> {
        let n = (self.t_end / self.dt).round();
        if n < 1.0 || (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::InvalidParameter(format!(
                "T = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }

    /// `sigma^(1 - q)`, the threshold on `|X|_V`; infinite for the
    /// deterministic run `sigma = 0`.
    pub fn x_threshold(&self) -> f64 {
        if self.sigma > 0.0 {
            self.sigma.powf(1.0 - self.q)
        } else {
            f64::INFINITY
        }
    }

    /// `sigma^(-q)`, the threshold on the reduced phases.
    pub fn phase_threshold(&self) -> f64 {
        if self.sigma > 0.0 {
            self.sigma.powf(-self.q)
        } else {
            f64::INFINITY
        }
    }
}

/// Read-only objects shared by every replica.
#[derive(Clone, Debug)]
pub struct Context {
    pub profile: WaveProfile,
    pub operator: FrozenOperator,
    pub report: SpectrumReport,
    pub pair: ProjectionPair,
    fprime: Vec<f64>,
}

impl Context {
    pub fn new(mut profile: WaveProfile) -> Result<Self> {
        let operator = FrozenOperator::assemble(&profile);
        let report = spectrum(&operator, &profile, CONTEXT_EIGS)?;
        let kernel = kernel_direction(&profile, &report)?;
        profile.weights = SpaceWeights::normalizing(&profile.grid, profile.params.eps, &kernel)?;
        let pair = ProjectionPair::spectral(&profile, &report)?;
        let fprime = operator.fprime().to_vec();
        Ok(Self {
            profile,
            operator,
            report,
            pair,
            fprime,
        })
    }

    pub fn default_grid() -> Result<Grid> {
        Grid::new(DYNAMICS_HALF_WIDTH, DYNAMICS_POINTS, BoundaryCondition::Dirichlet0)
    }

    /// Default pulse on the dynamics grid.
    pub fn with_defaults() -> Result<Self> {
        let g = Self::default_grid()?;
        let peak = default_peak(&g);
        Self::new(compute_profile(&g, &ModelParams::default(), peak)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.profile.grid
    }

    pub fn weights(&self) -> &SpaceWeights {
        &self.profile.weights
    }

    pub fn speed(&self) -> f64 {
        self.profile.s
    }

    /// The zero mode `d1` (kernel vector, `|d1|_H = 1`).
    pub fn d1(&self) -> &StateUV {
        &self.pair.phi_dir
    }

    /// `Z eps w_i psi_u(xi_i)`, so that `<psi, (f, 0)>_H = sum_i g_i f_i`.
    pub fn psi_u_density(&self) -> Vec<f64> {
        let w = self.weights();
        let g = self.grid().weights();
        self.pair.psi.u.iter().zip(g).map(|(p, q)| w.z * w.eps * q * p).collect()
    }

    /// `b_k(t) = <Pi0_{st} (e_k, 0), d1(. + st)>_H = <psi, (e_k(. - st), 0)>_H`.
    pub fn couplings(&self, noise: &NoiseModel, t: f64) -> Vec<f64> {
        noise.shifted_pairings(self.grid().nodes(), self.speed() * t, &self.psi_u_density())
    }

    /// `V(t) = sum_k lambda_k b_k(t)^2`, the rate of the phase variance.
    pub fn drive_variance(&self, noise: &NoiseModel, t: f64) -> f64 {
        self.couplings(noise, t).iter().zip(noise.lambdas()).map(|(b, l)| l * b * b).sum()
    }

    /// `eps Z |(1, 0)^t (Pi#,0)^* d1|_H^2 = eps Z |(psi_u, 0)|_H^2`.
    pub fn phase_diffusion_target(&self) -> f64 {
        let w = self.weights();
        let d = self.psi_u_density();
        w.eps * w.z * d.iter().zip(&self.pair.psi.u).map(|(a, p)| a * p).sum::<f64>()
    }

    /// `X_hat(. + c) - X_hat` in the co-moving frame.
    pub fn shift_difference(&self, c: f64) -> Result<StateUV> {
        Ok(self.profile.pulse_at(c)?.sub(&self.profile.xhat))
    }
}

/// One Wiener increment in the co-moving frame.
#[derive(Clone, Debug)]
pub struct Increment {
    /// `Delta W(xi - st)` without the factor `sigma`.
    pub field: Vec<f64>,
    /// `<psi, (field, 0)>_H`
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct ReducedState {
    pub y: Vec<f64>,
    pub phi: f64,
    pub phi_dot: f64,
}

#[derive(Clone, Debug)]
pub struct ImmediateState {
    pub y: Vec<f64>,
    pub phi: f64,
}

/// Crank-Nicolson stepper for `L#` with explicit forcing.
pub struct Stepper<'a> {
    ctx: &'a Context,
    noise: &'a NoiseModel,
    dt: f64,
    lu: BandLu<f64>,
    rhs: BandMatrix<f64>,
    pins: Vec<usize>,
    d1: Vec<f64>,
    psi_density: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(ctx: &'a Context, noise: &'a NoiseModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let l = &ctx.operator.lsharp;
        let lu = implicit_matrix(l, 0.5 * dt).factor()?;
        let rhs = implicit_matrix(l, -0.5 * dt);
        Ok(Self {
            ctx,
            noise,
            dt,
            lu,
            rhs,
            pins: pinned_dofs(ctx.grid()),
            d1: ctx.d1().interleave(),
            psi_density: ctx.psi_u_density(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn context(&self) -> &Context {
        self.ctx
    }

    pub fn noise(&self) -> &NoiseModel {
        self.noise
    }

    /// Increment of step `step` from unit normals `xi`.
    pub fn increment_from_normals(&self, step: u64, xi: &[f64]) -> Increment {
        let sdt = self.dt.sqrt();
        let a: Vec<f64> = xi.iter().zip(self.noise.sqrt_lambdas()).map(|(x, l)| x * l * sdt).collect();
        let t = step as f64 * self.dt;
        let field = self.noise.shifted_field(self.ctx.grid().nodes(), self.ctx.speed() * t, &a);
        let beta = field.iter().zip(&self.psi_density).map(|(f, g)| f * g).sum();
        Increment { field, beta }
    }

    /// Increment of step `step` on a time grid `refine` times finer than
    /// this one: the fine normals of the covered substeps are summed, so runs
    /// with different `dt` share one Brownian path.
    pub fn increment(&self, stream: &NoiseStream, step: u64, refine: u64) -> Increment {
        let k = self.noise.rank();
        let mut xi = vec![0.0; k];
        for j in 0..refine {
            for (a, b) in xi.iter_mut().zip(stream.normals(step * refine + j, k)) {
                *a += b;
            }
        }
        let r = (refine as f64).sqrt();
        xi.iter_mut().for_each(|v| *v /= r);
        self.increment_from_normals(step, &xi)
    }

    /// `y <- (I - dt/2 L#)^{-1} [(I + dt/2 L#) y + b]` with `b` filled by
    /// `forcing`.
    fn cn_step(&self, y: &mut Vec<f64>, t: f64, forcing: impl FnOnce(&mut [f64])) -> Result<()> {
        let mut b = self.rhs.matvec(y);
        forcing(&mut b);
        for &k in &self.pins {
            b[k] = 0.0;
        }
        self.lu.solve_in_place(&mut b);
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: t + self.dt });
        }
        *y = b;
        Ok(())
    }

    /// Full nonlinear step: `Y' = CN(Y) + dt R(Y) + sigma (Delta W, 0)`
    /// with `R(Y) = f(y_u + u_hat) - f(u_hat) - f'(u_hat) y_u`.
    pub fn step_full(&self, y: &mut Vec<f64>, t: f64, sigma: f64, inc: &Increment) -> Result<()> {
        let reaction = &self.ctx.profile.params.reaction;
        let uh = &self.ctx.profile.xhat.u;
        let fp = &self.ctx.fprime;
        let dt = self.dt;
        let y0 = y.clone();
        self.cn_step(y, t, |b| {
            for i in 0..uh.len() {
                let u = y0[2 * i];
                let r = reaction.f(u + uh[i]) - reaction.f(uh[i]) - fp[i] * u;
                b[2 * i] += dt * r + sigma * inc.field[i];
            }
        })
    }

    /// `<Pi0_{st+phi} X^m, d1(. + st + phi)>_H` for the full state.
    pub fn phase_drive(&self, y: &[f64], phi: f64) -> Result<f64> {
        let xm = StateUV::from_interleaved(y).add(&self.ctx.shift_difference(phi)?.scaled(-1.0));
        self.ctx.pair.shifted_coefficient(&xm, phi)
    }

    /// Reduced step: exact-exponential OU update of `phi_dot`, exact
    /// integral `Delta phi = beta - Delta phi_dot / m` and the forced linear
    /// step `Y' = CN(Y) - Delta phi d1 + (Delta W, 0)`.
    pub fn step_reduced(&self, st: &mut ReducedState, t: f64, m: f64, inc: &Increment) -> Result<()> {
        let dphi = ou_update(&mut st.phi_dot, m, self.dt, inc.beta);
        st.phi += dphi;
        let d1 = &self.d1;
        self.cn_step(&mut st.y, t, |b| {
            for (bi, di) in b.iter_mut().zip(d1) {
                *bi -= dphi * di;
            }
            for (i, f) in inc.field.iter().enumerate() {
                b[2 * i] += f;
            }
        })
    }

    /// Immediate relaxation: `phi += beta` and
    /// `Y' = CN(Y) + Pi# (Delta W, 0)` with `Pi# z = z - <psi, z>_H d1`.
    pub fn step_immediate(&self, st: &mut ImmediateState, t: f64, inc: &Increment) -> Result<()> {
        st.phi += inc.beta;
        let d1 = &self.d1;
        self.cn_step(&mut st.y, t, |b| {
            for (bi, di) in b.iter_mut().zip(d1) {
                *bi -= inc.beta * di;
            }
            for (i, f) in inc.field.iter().enumerate() {
                b[2 * i] += f;
            }
        })
    }

    /// Homogeneous step `Y' = CN(Y)`.
    pub fn step_linear(&self, y: &mut Vec<f64>, t: f64) -> Result<()> {
        self.cn_step(y, t, |_| {})
    }

    /// `<psi, Y>_H` for an interleaved state.
    pub fn coefficient(&self, y: &[f64]) -> f64 {
        let w = self.ctx.weights();
        let g = self.ctx.grid().weights();
        let psi = &self.ctx.pair.psi;
        let mut s = 0.0;
        for i in 0..g.len() {
            s += g[i] * (w.eps * psi.u[i] * y[2 * i] + psi.v[i] * y[2 * i + 1]);
        }
        w.z * s
    }
}

/// One exact-exponential step of `d phi_dot = -m phi_dot dt + m d beta`.
/// The noise is scaled so that the step variance equals the exact OU
/// transition variance for a drive constant over the step. Returns the
/// exact increment of `phi`, `beta - Delta phi_dot / m`.
pub fn ou_update(phi_dot: &mut f64, m: f64, dt: f64, beta: f64) -> f64 {
    let a = (-m * dt).exp();
    let scale = ((1.0 - a * a) / (2.0 * m * dt)).sqrt();
    let old = *phi_dot;
    *phi_dot = a * old + m * beta * scale;
    beta - (*phi_dot - old) / m
}

/// What a call to [`simulate_path`] integrates.
#[derive(Clone, Debug, Default)]
pub struct PathOptions {
    /// Integrate the full nonlinear SPDE.
    pub full: bool,
    /// Track `phi^m` of the full run (requires `full`).
    pub track_phase: bool,
    pub reduced: bool,
    pub immediate: bool,
    /// `X(0)`; zero when absent. The reduced runs start from `X(0) / sigma`.
    pub initial: Option<StateUV>,
    /// Keep state snapshots at every saved step.
    pub snapshots: bool,
    /// Time-grid refinement of the underlying Brownian path.
    pub refine: u64,
}

impl PathOptions {
    pub fn all() -> Self {
        Self {
            full: true,
            track_phase: true,
            reduced: true,
            immediate: true,
            refine: 1,
            ..Self::default()
        }
    }
}

/// Runs one replica and records the saved steps.
pub fn simulate_path(
    ctx: &Context,
    noise: &NoiseModel,
    cfg: &SimConfig,
    replica: u64,
    opts: &PathOptions,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if opts.track_phase && !opts.full {
        return Err(Error::InvalidParameter("phase tracking needs the full run".into()));
    }
    if cfg.sigma == 0.0 && (opts.reduced || opts.immediate) {
        return Err(Error::InvalidParameter("the reduced runs are scaled by 1/sigma and need sigma > 0".into()));
    }
    let n_steps = cfg.steps()?;
    let stepper = Stepper::new(ctx, noise, cfg.dt)?;
    let stream = NoiseStream::new(cfg.seed, replica);
    let grid = ctx.grid();
    let zero = vec![0.0; 2 * grid.len()];
    let x0 = match &opts.initial {
        Some(s) => {
            grid.check_state(s)?;
            s.interleave()
        }
        None => zero.clone(),
    };
    let scaled0: Vec<f64> = x0.iter().map(|v| v / cfg.sigma).collect();
    let c0 = stepper.coefficient(&scaled0);

    let mut full = opts.full.then(|| x0.clone());
    let mut phi = 0.0;
    let mut phi_dot = f64::NAN;
    let mut reduced = opts.reduced.then(|| ReducedState {
        y: scaled0.clone(),
        phi: 0.0,
        phi_dot: cfg.m * c0,
    });
    let mut immediate = opts.immediate.then(|| {
        let d1 = &stepper.d1;
        ImmediateState {
            y: scaled0.iter().zip(d1).map(|(a, b)| a - c0 * b).collect(),
            phi: c0,
        }
    });

    let mut rec = TrajectoryRecord::new(cfg);
    let mut stops = diagnostics::CrossingTracker::new(cfg);
    let refine = opts.refine.max(1);
    for n in 0..=n_steps {
        let t = n as f64 * cfg.dt;
        if opts.track_phase {
            phi_dot = cfg.m * stepper.phase_drive(full.as_ref().unwrap(), phi)?;
        }
        let x_v = full
            .as_ref()
            .map(|y| grid.norm_vv(&StateUV::from_interleaved(y), ctx.weights()));
        stops.observe(
            t,
            x_v,
            reduced.as_ref().map(|r| r.phi),
            immediate.as_ref().map(|r| r.phi),
        );
        if n % cfg.save_every == 0 || n == n_steps {
            rec.push(record::observe(
                &stepper,
                cfg,
                t,
                full.as_deref(),
                opts.track_phase.then_some((phi, phi_dot)),
                reduced.as_ref(),
                immediate.as_ref(),
                opts.snapshots,
            )?);
        }
        if n == n_steps {
            break;
        }
        let inc = stepper.increment(&stream, n as u64, refine);
        if let Some(y) = full.as_mut() {
            stepper.step_full(y, t, cfg.sigma, &inc)?;
        }
        if opts.track_phase {
            phi += cfg.dt * phi_dot;
        }
        if let Some(r) = reduced.as_mut() {
            stepper.step_reduced(r, t, cfg.m, &inc)?;
        }
        if let Some(r) = immediate.as_mut() {
            stepper.step_immediate(r, t, &inc)?;
        }
    }
    rec.stopping = stops.finish();
    Ok(rec)
}

#[cfg(test)]
mod tests;
