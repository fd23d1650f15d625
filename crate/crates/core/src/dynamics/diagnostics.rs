//! Stopping times, multiscale residuals, the velocity SODE, local
//! minimality, the relaxation ladder, OU statistics and ensemble moments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::TrajectoryRecord;
use super::{ou_update, simulate_path, Context, PathOptions, SimConfig, Stepper};
use crate::error::{Error, Result};
use crate::grid::StateUV;
use crate::noise::{NoiseModel, NoiseStream};
use crate::projection::DecayFit;
use crate::stats::{ci95, linear_fit, mean_var, r_squared};

/// First crossing times; equal to `T` when the threshold is never reached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimes {
    /// `|X|_V >= sigma^(1-q)`
    pub tau: f64,
    /// `|phi0^m| >= sigma^(-q)`
    pub tau_m: f64,
    /// `|phi0^inf| >= sigma^(-q)`
    pub tau_inf: f64,
    pub t_end: f64,
}

impl StoppingTimes {
    pub fn none(t_end: f64) -> Self {
        Self {
            tau: t_end,
            tau_m: t_end,
            tau_inf: t_end,
            t_end,
        }
    }

    /// `min{tau, tau^m}`
    pub fn reduced_window(&self) -> f64 {
        self.tau.min(self.tau_m)
    }

    /// `min{tau, tau^inf}`
    pub fn immediate_window(&self) -> f64 {
        self.tau.min(self.tau_inf)
    }

    /// The event `min{tau, tau^inf} = T`.
    pub fn immediate_survives(&self) -> bool {
        self.immediate_window() >= self.t_end
    }
}

/// Online first-crossing detection with linear interpolation between
/// accepted steps.
pub struct CrossingTracker {
    x_thr: f64,
    phase_thr: f64,
    t_end: f64,
    prev: Option<(f64, [Option<f64>; 3])>,
    hit: [Option<f64>; 3],
}

impl CrossingTracker {
    pub fn new(cfg: &SimConfig) -> Self {
        Self {
            x_thr: cfg.x_threshold(),
            phase_thr: cfg.phase_threshold(),
            t_end: cfg.t_end,
            prev: None,
            hit: [None; 3],
        }
    }

    pub fn observe(&mut self, t: f64, x_v: Option<f64>, phi_m: Option<f64>, phi_inf: Option<f64>) {
        let vals = [x_v, phi_m.map(f64::abs), phi_inf.map(f64::abs)];
        let thr = [self.x_thr, self.phase_thr, self.phase_thr];
        for k in 0..3 {
            if self.hit[k].is_some() {
                continue;
            }
            let Some(v) = vals[k] else { continue };
            if v >= thr[k] || !v.is_finite() {
                let tc = match self.prev {
                    Some((tp, pv)) => match pv[k] {
                        Some(p) if p < thr[k] && v.is_finite() => tp + (thr[k] - p) / (v - p) * (t - tp),
                        _ => t,
                    },
                    None => t,
                };
                self.hit[k] = Some(tc.min(self.t_end));
            }
        }
        self.prev = Some((t, vals));
    }

    pub fn finish(&self) -> StoppingTimes {
        let get = |k: usize| self.hit[k].unwrap_or(self.t_end);
        StoppingTimes {
            tau: get(0),
            tau_m: get(1),
            tau_inf: get(2),
            t_end: self.t_end,
        }
    }
}

/// Stopping times from the saved rows of a record.
pub fn stopping_times(record: &TrajectoryRecord, cfg: &SimConfig) -> StoppingTimes {
    let mut tr = CrossingTracker::new(cfg);
    let some = |v: f64| (!v.is_nan()).then_some(v);
    for r in &record.rows {
        tr.observe(r.t, some(r.x_v), some(r.phi0_m), some(r.phi0_inf));
    }
    tr.finish()
}

/// `S = sigma^{-1} (X~ - X_hat(. + st + sigma phi0)) - X0` in the co-moving
/// frame, where `X~ - X_hat(. + st) = X`.
pub fn residual(ctx: &Context, x: &StateUV, x0: &StateUV, phi0: f64, sigma: f64) -> Result<StateUV> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("residuals need sigma > 0, got {sigma}")));
    }
    let shift = ctx.shift_difference(sigma * phi0)?;
    Ok(x.sub(&shift).scaled(1.0 / sigma).sub(x0))
}

/// Which residual a summary refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Residual {
    Relaxed,
    Immediate,
}

/// `max_t |S|_V` over the record, optionally only up to the stopping
/// window of that residual. Returns the maximum and whether the series was
/// truncated.
pub fn max_residual(record: &TrajectoryRecord, which: Residual, truncate: bool) -> (f64, bool) {
    let window = match which {
        Residual::Relaxed => record.stopping.reduced_window(),
        Residual::Immediate => record.stopping.immediate_window(),
    };
    let t_max = if truncate { window } else { record.config.t_end };
    let m = record
        .until(t_max)
        .map(|r| match which {
            Residual::Relaxed => r.s_m_v,
            Residual::Immediate => r.s_inf_v,
        })
        .fold(0.0f64, f64::max);
    (m, truncate && window < record.config.t_end)
}

/// The three right-hand terms of the velocity SODE over one step, and the
/// observed change of `phi_dot^m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SodeTerms {
    pub t: f64,
    pub damping: f64,
    pub noise: f64,
    pub remainder: f64,
    pub actual: f64,
}

impl SodeTerms {
    pub fn predicted(&self) -> f64 {
        self.damping + self.noise + self.remainder
    }
}

/// Runs a phase-tracked full path and evaluates the SODE terms at the left
/// end of every step:
/// damping `-m phi_dot (1 + <Pi0 d_x X^m, d1>) dt`, noise
/// `sigma m <Pi0 (dW, 0), d1>`, remainder `m <Pi0 R^m(X^m), d1> dt`, all
/// projections taken at `st + phi^m`.
pub fn velocity_sode_diagnostic(
    ctx: &Context,
    noise: &NoiseModel,
    cfg: &SimConfig,
    replica: u64,
    initial: Option<&StateUV>,
) -> Result<Vec<SodeTerms>> {
    cfg.validate()?;
    let stepper = Stepper::new(ctx, noise, cfg.dt)?;
    let stream = NoiseStream::new(cfg.seed, replica);
    let grid = ctx.grid();
    let reaction = &ctx.profile.params.reaction;
    let mut y = match initial {
        Some(s) => s.interleave(),
        None => vec![0.0; 2 * grid.len()],
    };
    let mut phi = 0.0;
    let mut drive = stepper.phase_drive(&y, phi)?;
    let n = cfg.steps()?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * cfg.dt;
        let phi_dot = cfg.m * drive;
        let inc = stepper.increment(&stream, k as u64, 1);
        let xm = StateUV::from_interleaved(&y).sub(&ctx.shift_difference(phi)?);
        let dxm = StateUV {
            u: grid.d1().apply(&xm.u),
            v: grid.d1().apply(&xm.v),
        };
        let uh = ctx.profile.pulse_at(phi)?.u;
        let rm = StateUV {
            u: xm
                .u
                .iter()
                .zip(&uh)
                .map(|(w, u)| reaction.f(w + u) - reaction.f(*u) - reaction.f1(*u) * w)
                .collect(),
            v: vec![0.0; grid.len()],
        };
        let dw = StateUV {
            u: inc.field.clone(),
            v: vec![0.0; grid.len()],
        };
        let pair = &ctx.pair;
        let damping = -cfg.m * phi_dot * (1.0 + pair.shifted_coefficient(&dxm, phi)?) * cfg.dt;
        let noise_term = cfg.sigma * cfg.m * pair.shifted_coefficient(&dw, phi)?;
        let remainder = cfg.m * pair.shifted_coefficient(&rm, phi)? * cfg.dt;
        stepper.step_full(&mut y, t, cfg.sigma, &inc)?;
        phi += cfg.dt * phi_dot;
        let next = stepper.phase_drive(&y, phi)?;
        out.push(SodeTerms {
            t,
            damping,
            noise: noise_term,
            remainder,
            actual: cfg.m * (next - drive),
        });
        drive = next;
    }
    Ok(out)
}

/// Coefficient of determination of `actual` regressed on `predicted`.
pub fn sode_r2(terms: &[SodeTerms]) -> f64 {
    let pts: Vec<(f64, f64)> = terms.iter().map(|s| (s.predicted(), s.actual)).collect();
    r_squared(&pts)
}

/// Derivatives of `phi -> |Pi0_{st} (X~ - X_hat(. + st + sigma phi))|_H^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minimality {
    pub g1: f64,
    pub g2: f64,
    pub g1_fd: f64,
    pub g2_fd: f64,
}

/// Evaluates `g1`, `g2` at `phi` for the full co-moving perturbation `x`.
/// With `c(phi) = <psi, X + X_hat - X_hat(. + sigma phi)>_H` the function is
/// `c^2 |d1|_H^2`, so `g1 = 2 c c'` and `g2 = 2 (c'^2 + c c'')` with
/// `c' = -sigma <psi, d1(. + sigma phi)>_H`,
/// `c'' = -sigma^2 <psi, d2(. + sigma phi)>_H`. The check values come from
/// Richardson-extrapolated centered differences with step `1e-4 / sigma`.
pub fn minimality_diagnostic(ctx: &Context, x: &StateUV, phi: f64, sigma: f64) -> Result<Minimality> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("minimality needs sigma > 0, got {sigma}")));
    }
    let g = ctx.grid();
    let w = ctx.weights();
    let psi = &ctx.pair.psi;
    let n2 = g.norm_h(ctx.d1(), w).powi(2);
    let c_at = |p: f64| -> Result<f64> { g.inner_h(psi, &x.sub(&ctx.shift_difference(sigma * p)?), w) };
    let c = c_at(phi)?;
    let d1 = g.translate(&ctx.profile.d1, sigma * phi)?;
    let d2 = g.translate(&ctx.profile.d2, sigma * phi)?;
    let c1 = -sigma * g.inner_h(psi, &d1, w)?;
    let c2 = -sigma * sigma * g.inner_h(psi, &d2, w)?;
    let f = |p: f64| -> Result<f64> { Ok(c_at(p)?.powi(2) * n2) };
    let h = 1e-4 / sigma;
    let f0 = f(phi)?;
    let diffs = |h: f64| -> Result<(f64, f64)> {
        let (fp, fm) = (f(phi + h)?, f(phi - h)?);
        Ok(((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)))
    };
    let (a1, a2) = diffs(h)?;
    let (b1, b2) = diffs(0.5 * h)?;
    Ok(Minimality {
        g1: 2.0 * c * c1 * n2,
        g2: 2.0 * (c1 * c1 + c * c2) * n2,
        g1_fd: (4.0 * b1 - a1) / 3.0,
        g2_fd: (4.0 * b2 - a2) / 3.0,
    })
}

/// `sqrt(lambda_k) b_k(t)` tabulated on a uniform time grid and linearly
/// interpolated, for phase-only runs that do not need the fields.
pub struct CouplingTable {
    spacing: f64,
    rows: Vec<Vec<f64>>,
}

impl CouplingTable {
    pub fn new(ctx: &Context, noise: &NoiseModel, t_end: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && t_end > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "table needs spacing > 0 and T > 0 (spacing={spacing}, T={t_end})"
            )));
        }
        let n = (t_end / spacing).ceil() as usize + 2;
        let rows = (0..n)
            .into_par_iter()
            .map(|j| {
                let b = ctx.couplings(noise, j as f64 * spacing);
                b.iter().zip(noise.sqrt_lambdas()).map(|(b, l)| b * l).collect()
            })
            .collect();
        Ok(Self { spacing, rows })
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        let q = (t / self.spacing).max(0.0);
        let j = (q.floor() as usize).min(self.rows.len() - 2);
        let a = q - j as f64;
        self.rows[j].iter().zip(&self.rows[j + 1]).map(|(x, y)| (1.0 - a) * x + a * y).collect()
    }

    /// `V(t) = sum_k lambda_k b_k(t)^2`
    pub fn variance_rate(&self, t: f64) -> f64 {
        self.at(t).iter().map(|v| v * v).sum()
    }

    /// `beta = sqrt(dt) sum_k sqrt(lambda_k) b_k(t) xi_k`
    pub fn beta(&self, t: f64, dt: f64, xi: &[f64]) -> f64 {
        dt.sqrt() * self.at(t).iter().zip(xi).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Reduced phases `phi0^m` for several `m` and `phi0^inf` on one shared
/// Brownian path, from zero initial data.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    pub phi_m: Vec<Vec<f64>>,
    pub phi_inf: Vec<f64>,
}

impl Ladder {
    /// `sup_{t >= t_min} |phi0^m - phi0^inf|` per `m`.
    pub fn sup_gaps(&self, t_min: f64) -> Vec<f64> {
        self.phi_m
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&self.phi_inf)
                    .zip(&self.t)
                    .filter(|(_, t)| **t >= t_min - 1e-12)
                    .map(|((a, b), _)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

pub fn phase_ladder(
    table: &CouplingTable,
    noise: &NoiseModel,
    ms: &[f64],
    cfg: &SimConfig,
    replica: u64,
) -> Result<Ladder> {
    for &m in ms {
        SimConfig { m, ..*cfg }.validate()?;
    }
    let n = cfg.steps()?;
    let stream = NoiseStream::new(cfg.seed, replica);
    let mut phi_dot = vec![0.0; ms.len()];
    let mut phi = vec![0.0; ms.len()];
    let mut inf = 0.0;
    let mut out = Ladder {
        t: Vec::new(),
        m: ms.to_vec(),
        phi_m: vec![Vec::new(); ms.len()],
        phi_inf: Vec::new(),
    };
    for k in 0..=n {
        let t = k as f64 * cfg.dt;
        if k % cfg.save_every == 0 || k == n {
            out.t.push(t);
            out.phi_inf.push(inf);
            for (j, p) in phi.iter().enumerate() {
                out.phi_m[j].push(*p);
            }
        }
        if k == n {
            break;
        }
        let beta = table.beta(t, cfg.dt, &stream.normals(k as u64, noise.rank()));
        inf += beta;
        for j in 0..ms.len() {
            phi[j] += ou_update(&mut phi_dot[j], ms[j], cfg.dt, beta);
        }
    }
    Ok(out)
}

/// Pooled comparison of the sample variance of `phi_dot0^m` with the
/// quasi-stationary OU value `m V(t) / 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OuReport {
    pub m: f64,
    pub samples: usize,
    /// `sum phi_dot^2 / sum m V(t) / 2` over the thinned samples.
    pub ratio: f64,
    pub t: Vec<f64>,
    pub phi_dot_sq: Vec<f64>,
    pub analytic: Vec<f64>,
}

pub fn ou_stationarity(
    table: &CouplingTable,
    noise: &NoiseModel,
    cfg: &SimConfig,
    thin: usize,
    replica: u64,
) -> Result<OuReport> {
    cfg.validate()?;
    let n = cfg.steps()?;
    let stream = NoiseStream::new(cfg.seed, replica);
    let burn = (10.0 / (cfg.m * cfg.dt)).ceil() as usize;
    let mut phi_dot = 0.0;
    let mut rep = OuReport {
        m: cfg.m,
        samples: 0,
        ratio: f64::NAN,
        t: Vec::new(),
        phi_dot_sq: Vec::new(),
        analytic: Vec::new(),
    };
    for k in 0..n {
        let t = k as f64 * cfg.dt;
        if k >= burn && k % thin.max(1) == 0 {
            rep.t.push(t);
            rep.phi_dot_sq.push(phi_dot * phi_dot);
            rep.analytic.push(0.5 * cfg.m * table.variance_rate(t));
        }
        let beta = table.beta(t, cfg.dt, &stream.normals(k as u64, noise.rank()));
        ou_update(&mut phi_dot, cfg.m, cfg.dt, beta);
    }
    rep.samples = rep.t.len();
    rep.ratio = rep.phi_dot_sq.iter().sum::<f64>() / rep.analytic.iter().sum::<f64>();
    Ok(rep)
}

/// Ensemble second moment of `X0^inf` against the moment bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentBoundReport {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub ci: Vec<f64>,
    pub bound: Vec<f64>,
    pub replicas: usize,
    /// `mean - ci <= bound` at every time.
    pub holds: bool,
}

/// Right side of the moment bound:
/// `2 C^2 e^{-2 theta t} |X0|_H^2 + C^2 (1 - e^{-2 theta t}) / theta |Pi#|^2 eps Z tr Q`.
pub fn moment_bound_rhs(fit: &DecayFit, t: f64, x0_sq: f64, pi_norm: f64, eps_z: f64, trace: f64) -> f64 {
    let c2 = fit.c * fit.c;
    let e = (-2.0 * fit.theta * t).exp();
    2.0 * c2 * e * x0_sq + c2 * (1.0 - e) / fit.theta * pi_norm * pi_norm * eps_z * trace
}

/// `E |X0^inf(t)|_H^2` from `replicas` immediate-relaxation paths started at
/// zero, on the saved times of `cfg`.
pub fn moment_bound_experiment(
    ctx: &Context,
    noise: &NoiseModel,
    cfg: &SimConfig,
    replicas: usize,
    fit: &DecayFit,
) -> Result<MomentBoundReport> {
    if replicas < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 replicas, got {replicas}")));
    }
    let opts = PathOptions {
        immediate: true,
        refine: 1,
        ..PathOptions::default()
    };
    let recs: Vec<TrajectoryRecord> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate_path(ctx, noise, cfg, r, &opts))
        .collect::<Result<_>>()?;
    let t = recs[0].times();
    let w = ctx.weights();
    let pi_norm = ctx.pair.operator_norm();
    let mut rep = MomentBoundReport {
        t: t.clone(),
        mean: Vec::new(),
        ci: Vec::new(),
        bound: Vec::new(),
        replicas,
        holds: true,
    };
    for (j, &tj) in t.iter().enumerate() {
        let xs: Vec<f64> = recs.iter().map(|r| r.rows[j].x0inf_h.powi(2)).collect();
        let (m, _) = mean_var(&xs);
        let ci = ci95(&xs);
        let b = moment_bound_rhs(fit, tj, 0.0, pi_norm, w.eps * w.z, noise.trace());
        rep.holds &= m - ci <= b;
        rep.mean.push(m);
        rep.ci.push(ci);
        rep.bound.push(b);
    }
    Ok(rep)
}

/// Phase variance without velocity adaptation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhaseVarianceReport {
    pub t: Vec<f64>,
    /// `E[<Pi0_{st} X, d1(. + st)>_H^2 1{min(tau, tau^inf) = T}]`
    pub moment: Vec<f64>,
    pub ci: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// `sigma^2 eps Z |(1,0)^t (Pi#,0)^* d1|_H^2`
    pub target: f64,
    /// `sigma^2` times the time average of `V(t)` for the noise in use.
    pub mode_sum_rate: f64,
    pub replicas: usize,
    pub survivors: usize,
    /// Fewer than half of the paths survived the stopping window.
    pub inconclusive: bool,
}

/// Full nonlinear runs with `phi = 0`; the stopping window uses the
/// immediate-relaxation phase accumulated on the same increments.
pub fn phase_variance_experiment(
    ctx: &Context,
    noise: &NoiseModel,
    cfg: &SimConfig,
    replicas: usize,
) -> Result<PhaseVarianceReport> {
    cfg.validate()?;
    if replicas < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 replicas, got {replicas}")));
    }
    let n = cfg.steps()?;
    let runs: Vec<(Vec<f64>, Vec<f64>, bool)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<(Vec<f64>, Vec<f64>, bool)> {
            let stepper = Stepper::new(ctx, noise, cfg.dt)?;
            let stream = NoiseStream::new(cfg.seed, r);
            let mut y = vec![0.0; 2 * ctx.grid().len()];
            let mut phi_inf = 0.0;
            let mut tr = CrossingTracker::new(cfg);
            let (mut ts, mut ps) = (Vec::new(), Vec::new());
            for k in 0..=n {
                let t = k as f64 * cfg.dt;
                let x_v = ctx.grid().norm_vv(&StateUV::from_interleaved(&y), ctx.weights());
                tr.observe(t, Some(x_v), None, Some(phi_inf));
                if k % cfg.save_every == 0 || k == n {
                    ts.push(t);
                    ps.push(stepper.coefficient(&y));
                }
                if k == n {
                    break;
                }
                let inc = stepper.increment(&stream, k as u64, 1);
                phi_inf += inc.beta;
                stepper.step_full(&mut y, t, cfg.sigma, &inc)?;
            }
            Ok((ts, ps, tr.finish().immediate_survives()))
        })
        .collect::<Result<_>>()?;
    let t = runs[0].0.clone();
    let survivors = runs.iter().filter(|r| r.2).count();
    let mut moment = Vec::new();
    let mut ci = Vec::new();
    for j in 0..t.len() {
        let xs: Vec<f64> = runs.iter().map(|r| if r.2 { r.1[j].powi(2) } else { 0.0 }).collect();
        moment.push(mean_var(&xs).0);
        ci.push(ci95(&xs));
    }
    let pts: Vec<(f64, f64)> = t.iter().copied().zip(moment.iter().copied()).collect();
    let (slope, intercept) = linear_fit(&pts);
    let s2 = cfg.sigma * cfg.sigma;
    let samples = 200;
    let avg_v = (0..samples)
        .map(|j| ctx.drive_variance(noise, (j as f64 + 0.5) * cfg.t_end / samples as f64))
        .sum::<f64>()
        / samples as f64;
    Ok(PhaseVarianceReport {
        t,
        moment,
        ci,
        slope,
        intercept,
        target: s2 * ctx.phase_diffusion_target(),
        mode_sum_rate: s2 * avg_v,
        replicas,
        survivors,
        inconclusive: 2 * survivors < replicas,
    })
}

/// Left-point Ito sums of the mild formula for the reduced phase,
/// `phi0^m(t_N) = (1 - e^{-m t_N}) c0 + sum_{n<N} (1 - e^{-m (t_N - t_n)}) beta_n`,
/// at every `t_N`, `N = 0 ..= betas.len()`.
pub fn mild_reduced_phase(c0: f64, m: f64, dt: f64, betas: &[f64]) -> Vec<f64> {
    let a = (-m * dt).exp();
    let mut out = Vec::with_capacity(betas.len() + 1);
    let (mut decay, mut sum, mut damped) = (1.0, 0.0, 0.0);
    out.push(0.0);
    for &b in betas {
        sum += b;
        damped = a * (damped + b);
        decay *= a;
        out.push((1.0 - decay) * c0 + sum - damped);
    }
    out
}
