//! The fast traveling pulse `(u_hat, v_hat)` and its speed `s`.
//!
//! In the co-moving coordinate `xi = x + s t` the pulse solves
//!
//! ```text
//! nu u'' + f(u) - v - s u' = 0
//! eps (u - gamma v) - s v' = 0
//! ```
//!
//! A rough shape is obtained by integrating the PDE in a moving frame
//! ([`relax_to_pulse`]); Newton's method on the discretized boundary
//! value problem with a phase condition then polishes it
//! ([`newton_refine`]).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frozen::{assemble_linear, pinned_dofs, PIN};
use crate::grid::{Grid, SpaceWeights, StateUV};
use crate::linalg::{BandLu, BandMatrix};
use crate::reaction::ReactionParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub nu: f64,
    pub gamma: f64,
    pub eps: f64,
    pub reaction: ReactionParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            gamma: 1.0,
            eps: 0.01,
            reaction: ReactionParams::default(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.reaction.validate()?;
        for (name, v) in [("nu", self.nu), ("gamma", self.gamma), ("eps", self.eps)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.reaction.kappa(self.eps, self.gamma)
    }
}

/// Default half-width of the domain `[-L, L]`.
pub const DEFAULT_HALF_WIDTH: f64 = 200.0;
/// Default number of grid points.
pub const DEFAULT_POINTS: usize = 8192;
/// The pulse maximum is placed at `-DEFAULT_PEAK_FRACTION * L`, leaving
/// room for the slowly decaying wake on the `+x` side.
pub const DEFAULT_PEAK_FRACTION: f64 = 0.6;

pub fn default_grid() -> Result<Grid> {
    Grid::new(DEFAULT_HALF_WIDTH, DEFAULT_POINTS, crate::grid::BoundaryCondition::Dirichlet0)
}

pub fn default_peak(grid: &Grid) -> f64 {
    -DEFAULT_PEAK_FRACTION * grid.half_width()
}

/// The pulse on a grid together with its derivatives and the `H` weights.
#[derive(Clone, Debug)]
pub struct WaveProfile {
    pub grid: Grid,
    pub params: ModelParams,
    pub xhat: StateUV,
    pub s: f64,
    pub d1: StateUV,
    pub d2: StateUV,
    pub weights: SpaceWeights,
}

impl WaveProfile {
    pub(crate) fn from_solution(grid: Grid, params: ModelParams, xhat: StateUV, s: f64) -> Result<Self> {
        let d1 = StateUV {
            u: grid.d1().apply(&xhat.u),
            v: grid.d1().apply(&xhat.v),
        };
        let d2 = StateUV {
            u: grid.d2().apply(&xhat.u),
            v: grid.d2().apply(&xhat.v),
        };
        let weights = SpaceWeights::normalizing(&grid, params.eps, &d1)?;
        Ok(Self {
            grid,
            params,
            xhat,
            s,
            d1,
            d2,
            weights,
        })
    }

    /// `X_hat(. + c)`
    pub fn pulse_at(&self, c: f64) -> Result<StateUV> {
        self.grid.translate(&self.xhat, c)
    }

    /// `d X_hat / d xi (. + c)`
    pub fn d1_at(&self, c: f64) -> Result<StateUV> {
        self.grid.translate(&self.d1, c)
    }

    /// Max-norm residuals of the two stationary equations, the second one
    /// divided by `s`.
    pub fn bvp_residual(&self) -> (f64, f64) {
        let r = stationary_residual(&self.grid, &self.params, &self.xhat, self.s);
        let mut ru = 0.0f64;
        let mut rv = 0.0f64;
        let pinned = pinned_dofs(&self.grid);
        for i in 0..self.grid.len() {
            if !pinned.contains(&(2 * i)) {
                ru = ru.max(r.u[i].abs());
            }
            if !pinned.contains(&(2 * i + 1)) {
                rv = rv.max(r.v[i].abs() / self.s);
            }
        }
        (ru, rv)
    }

    /// Largest modulus of `u_hat`, `v_hat` at the two boundary nodes.
    pub fn tail(&self) -> f64 {
        let n = self.grid.len();
        [self.xhat.u[0], self.xhat.u[n - 1], self.xhat.v[0], self.xhat.v[n - 1]]
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Position of the maximum of `u_hat`.
    pub fn peak(&self) -> f64 {
        let (i, _) = self
            .xhat
            .u
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
        self.grid.nodes()[i]
    }

    pub fn cache_key(&self) -> CacheKey {
        CacheKey::new(&self.params, &self.grid)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let key = self.cache_key();
        let mut out = String::new();
        let _ = writeln!(out, "# pulsetrack-profile v{CACHE_VERSION}");
        let _ = writeln!(out, "# key {}", key.render());
        let _ = writeln!(out, "# s {:e}", self.s);
        out.push_str("x,u,v\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e}",
                self.grid.nodes()[i],
                self.xhat.u[i],
                self.xhat.v[i]
            );
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Loads a cached profile if the file exists and its key matches.
    pub fn load(path: &Path, grid: &Grid, params: &ModelParams) -> Result<Option<Self>> {
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let bad = || Error::Config(format!("malformed profile cache {}", path.display()));
        if lines.next() != Some(format!("# pulsetrack-profile v{CACHE_VERSION}").as_str()) {
            return Ok(None);
        }
        let key = lines.next().and_then(|l| l.strip_prefix("# key ")).ok_or_else(bad)?;
        if key != CacheKey::new(params, grid).render() {
            return Ok(None);
        }
        let s: f64 = lines
            .next()
            .and_then(|l| l.strip_prefix("# s "))
            .and_then(|v| v.parse().ok())
            .ok_or_else(bad)?;
        lines.next();
        let mut u = Vec::with_capacity(grid.len());
        let mut v = Vec::with_capacity(grid.len());
        for line in lines {
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if cols.len() != 3 {
                return Err(bad());
            }
            u.push(cols[1]);
            v.push(cols[2]);
        }
        if u.len() != grid.len() {
            return Err(bad());
        }
        Ok(Some(Self::from_solution(grid.clone(), *params, StateUV { u, v }, s)?))
    }
}

const CACHE_VERSION: u32 = 1;

/// Identifies a cached profile: model parameters and grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CacheKey {
    pub nu: f64,
    pub gamma: f64,
    pub eps: f64,
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
    pub half_width: f64,
    pub n_points: usize,
}

impl CacheKey {
    pub fn new(p: &ModelParams, grid: &Grid) -> Self {
        Self {
            nu: p.nu,
            gamma: p.gamma,
            eps: p.eps,
            a: p.reaction.a,
            c1: p.reaction.c1,
            c2: p.reaction.c2,
            half_width: grid.half_width(),
            n_points: grid.len(),
        }
    }

    fn render(&self) -> String {
        format!(
            "nu={:e} gamma={:e} eps={:e} a={:e} c1={:e} c2={:e} L={:e} N={}",
            self.nu, self.gamma, self.eps, self.a, self.c1, self.c2, self.half_width, self.n_points
        )
    }
}

fn reaction_terms(p: &ModelParams, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    u.iter().map(|&w| {
        let e = p.reaction.eval(w);
        (e[0], e[1])
    }).unzip()
}

/// Right-hand side of the PDE in a frame moving with speed `c`:
/// `(nu D2 u + f(u) - v - c D1 u, eps (u - gamma v) - c D1 v)`.
pub fn stationary_residual(grid: &Grid, p: &ModelParams, x: &StateUV, c: f64) -> StateUV {
    let d1u = grid.d1().apply(&x.u);
    let d1v = grid.d1().apply(&x.v);
    let d2u = grid.d2().apply(&x.u);
    let n = grid.len();
    let mut r = StateUV::zeros(n);
    for i in 0..n {
        r.u[i] = p.nu * d2u[i] + p.reaction.f(x.u[i]) - x.v[i] - c * d1u[i];
        r.v[i] = p.eps * (x.u[i] - p.gamma * x.v[i]) - c * d1v[i];
    }
    r
}

fn pinned_residual(grid: &Grid, p: &ModelParams, x: &StateUV, c: f64) -> Vec<f64> {
    let mut r = stationary_residual(grid, p, x, c).interleave();
    let xi = x.interleave();
    for k in pinned_dofs(grid) {
        r[k] = -PIN * xi[k];
    }
    r
}

#[derive(Clone, Copy, Debug)]
pub struct RelaxOptions {
    pub dt: f64,
    pub t_max: f64,
    pub tol: f64,
    /// Number of steps between residual checks.
    pub check_every: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_max: 5000.0,
            tol: 1e-4,
            check_every: 20,
        }
    }
}

/// Counts disjoint regions where `u` exceeds one half.
fn excited_regions(u: &[f64]) -> usize {
    let mut count = 0;
    let mut inside = false;
    for &x in u {
        if x > 0.5 && !inside {
            count += 1;
        }
        inside = x > 0.5;
    }
    count
}

fn freezing_speed(grid: &Grid, p: &ModelParams, x: &StateUV) -> f64 {
    let rhs = stationary_residual(grid, p, x, 0.0);
    let du = grid.d1().apply(&x.u);
    let den = grid.dot_l2(&du, &du);
    if den == 0.0 {
        return 0.0;
    }
    grid.dot_l2(&rhs.u, &du) / den
}

fn max_active(grid: &Grid, r: &StateUV) -> f64 {
    let pinned = pinned_dofs(grid);
    r.interleave()
        .iter()
        .enumerate()
        .filter(|(k, _)| !pinned.contains(k))
        .fold(0.0f64, |m, (_, x)| m.max(x.abs()))
}

/// Relaxes a localized super-threshold bump to a traveling pulse.
///
/// The PDE is integrated in a frame `xi = x + c t`. While more than one
/// excited region exists the frame speed is the Nagumo front speed
/// `sqrt(nu / 2) (1 - 2a)`, so the pulse travelling towards `-x` stays
/// nearly at rest and its counter-propagating twin leaves through the
/// boundary. Afterwards `c` follows the freezing condition
/// `c = <F(U), u'> / <u', u'>`. Returns the relaxed shape and speed once the
/// co-moving residual `|F(U) - c U'|` drops below `opts.tol`.
pub fn relax_to_pulse(
    grid: &Grid,
    p: &ModelParams,
    seed: &StateUV,
    opts: &RelaxOptions,
) -> Result<(StateUV, f64)> {
    p.validate()?;
    grid.check_state(seed)?;
    let a = p.reaction.a;
    let mut x = seed.clone();
    crate::frozen::project_admissible(grid, &mut x);
    if x.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) <= a {
        return Err(Error::Extinction {
            max_u: x.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            threshold: a,
        });
    }
    let c0 = (p.nu / 2.0).sqrt() * (1.0 - 2.0 * a);

    let c = freezing_speed(grid, p, &x);
    let r = max_active(grid, &stationary_residual(grid, p, &x, c));
    if r < opts.tol && excited_regions(&x.u) == 1 {
        return Ok((x, c));
    }

    let n = grid.len();
    let zero_fp = vec![0.0; n];
    let factor = |c: f64| -> Result<BandLu<f64>> {
        let mut m: BandMatrix<f64> = assemble_linear(grid, p, c, &zero_fp);
        for (i, j, v) in m.clone().entries() {
            m.set(i, j, -opts.dt * v);
        }
        for k in 0..2 * n {
            m.add(k, k, 1.0);
        }
        m.factor()
    };

    let mut frozen = false;
    let mut seen_split = false;
    let mut c_frame = c0;
    let mut c_fact = c0;
    let mut lu = factor(c_fact)?;
    let steps = (opts.t_max / opts.dt).ceil() as usize;
    let mut last_res = f64::INFINITY;
    for step in 1..=steps {
        // explicit part: reaction and frame-speed mismatch
        let du = grid.d1().apply(&x.u);
        let dv = grid.d1().apply(&x.v);
        let mut rhs = x.interleave();
        for i in 0..n {
            rhs[2 * i] += opts.dt * (p.reaction.f(x.u[i]) - (c_frame - c_fact) * du[i]);
            rhs[2 * i + 1] -= opts.dt * (c_frame - c_fact) * dv[i];
        }
        for k in pinned_dofs(grid) {
            rhs[k] = 0.0;
        }
        lu.solve_in_place(&mut rhs);
        x = StateUV::from_interleaved(&rhs);
        if !x.is_finite() {
            return Err(Error::BlowUp {
                t: step as f64 * opts.dt,
            });
        }
        if step % opts.check_every != 0 {
            continue;
        }
        let max_u = x.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max_u < a / 2.0 {
            return Err(Error::Extinction {
                max_u,
                threshold: a / 2.0,
            });
        }
        if !frozen {
            let regions = excited_regions(&x.u);
            seen_split |= regions > 1;
            let t = step as f64 * opts.dt;
            if regions == 1 && (seen_split || t * c0 >= 2.0 * grid.half_width()) {
                frozen = true;
            } else {
                continue;
            }
        }
        c_frame = freezing_speed(grid, p, &x);
        if (c_frame - c_fact).abs() > 0.02 {
            c_fact = c_frame;
            lu = factor(c_fact)?;
        }
        last_res = max_active(grid, &stationary_residual(grid, p, &x, c_frame));
        if last_res < opts.tol {
            return Ok((x, c_frame));
        }
    }
    Err(Error::NoConvergence {
        iterations: steps,
        residual: last_res,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// Solves the bordered system `[J b; c^T 0] (dx, ds) = (r, rp)` by block
/// elimination followed by two rounds of iterative refinement.
fn bordered_solve(
    j: &BandMatrix<f64>,
    lu: &BandLu<f64>,
    b: &[f64],
    c: &[f64],
    r: &[f64],
    rp: f64,
) -> Result<(Vec<f64>, f64)> {
    let x2 = lu.solve(b);
    let cx2: f64 = c.iter().zip(&x2).map(|(a, b)| a * b).sum();
    if cx2 == 0.0 || !cx2.is_finite() {
        return Err(Error::Singular {
            pivot: j.n(),
            n: j.n() + 1,
            condition: lu.condition_estimate(),
        });
    }
    let elim = |r: &[f64], rp: f64| -> (Vec<f64>, f64) {
        let x1 = lu.solve(r);
        let cx1: f64 = c.iter().zip(&x1).map(|(a, b)| a * b).sum();
        let ds = (cx1 - rp) / cx2;
        let dx: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a - b * ds).collect();
        (dx, ds)
    };
    let (mut dx, mut ds) = elim(r, rp);
    for _ in 0..2 {
        let jx = j.matvec(&dx);
        let rr: Vec<f64> = (0..dx.len()).map(|k| r[k] - jx[k] - b[k] * ds).collect();
        let rrp = rp - c.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
        let (ex, es) = elim(&rr, rrp);
        for (a, e) in dx.iter_mut().zip(&ex) {
            *a += e;
        }
        ds += es;
    }
    Ok((dx, ds))
}

/// Newton's method for the stationary system with the phase condition
/// `<D1 guess, X - guess>_H = 0`.
pub fn newton_refine(
    grid: &Grid,
    p: &ModelParams,
    guess: &StateUV,
    s_guess: f64,
    opts: &NewtonOptions,
) -> Result<WaveProfile> {
    p.validate()?;
    grid.check_state(guess)?;
    let n = grid.len();
    let mut x = guess.clone();
    crate::frozen::project_admissible(grid, &mut x);
    let mut s = s_guess;
    let gd1 = StateUV {
        u: grid.d1().apply(&x.u),
        v: grid.d1().apply(&x.v),
    };
    let w = grid.weights();
    // phase row: H-weighted (Z = 1) derivative of the guess
    let mut c = vec![0.0; 2 * n];
    for i in 0..n {
        c[2 * i] = p.eps * w[i] * gd1.u[i];
        c[2 * i + 1] = w[i] * gd1.v[i];
    }
    for k in pinned_dofs(grid) {
        c[k] = 0.0;
    }
    let base = x.interleave();
    let phase = |y: &[f64]| -> f64 { c.iter().zip(y.iter().zip(&base)).map(|(a, (y, b))| a * (y - b)).sum() };

    let norm = |r: &[f64], ph: f64| r.iter().fold(ph.abs(), |m, v| m.max(v.abs()));
    let mut g = pinned_residual(grid, p, &x, s);
    let mut res = norm(&g, 0.0);
    for iter in 0..opts.max_iter {
        if res <= opts.tol {
            log_newton(iter, res);
            return WaveProfile::from_solution(grid.clone(), *p, x, s);
        }
        let (_, fp) = reaction_terms(p, &x.u);
        let jac = assemble_linear(grid, p, s, &fp);
        let lu = jac.factor()?;
        let mut b = vec![0.0; 2 * n];
        let du = grid.d1().apply(&x.u);
        let dv = grid.d1().apply(&x.v);
        for i in 0..n {
            b[2 * i] = -du[i];
            b[2 * i + 1] = -dv[i];
        }
        for k in pinned_dofs(grid) {
            b[k] = 0.0;
        }
        let xi = x.interleave();
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let (dx, ds) = bordered_solve(&jac, &lu, &b, &c, &neg_g, -phase(&xi))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = xi.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            let xt = StateUV::from_interleaved(&trial);
            let st = s + lambda * ds;
            let gt = pinned_residual(grid, p, &xt, st);
            let rt = norm(&gt, phase(&trial));
            if rt < res || lambda < 1e-3 {
                x = xt;
                s = st;
                g = gt;
                res = rt;
                break;
            }
            lambda *= 0.5;
        }
        if !res.is_finite() {
            break;
        }
    }
    if res <= opts.tol {
        return WaveProfile::from_solution(grid.clone(), *p, x, s);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: res,
    })
}

fn log_newton(iter: usize, res: f64) {
    if std::env::var_os("PULSETRACK_DEBUG").is_some() {
        eprintln!("newton converged after {iter} iterations, residual {res:e}");
    }
}

/// Grid used for the relaxation stage.
fn relaxation_grid(grid: &Grid) -> Result<Grid> {
    let n = grid.len().min(1025);
    Grid::new(grid.half_width(), n, grid.bc())
}

/// Default seed `1.2 exp(-x^2)`, `v = 0`.
pub fn default_seed(grid: &Grid) -> StateUV {
    StateUV {
        u: grid.sample(|x| 1.2 * (-x * x).exp()),
        v: vec![0.0; grid.len()],
    }
}

/// Relaxes on a coarse grid, recentres the pulse so that its maximum sits
/// at `peak`, interpolates onto `grid` and runs Newton.
pub fn compute_profile(grid: &Grid, p: &ModelParams, peak: f64) -> Result<WaveProfile> {
    let coarse = relaxation_grid(grid)?;
    let (shape, s) = relax_to_pulse(&coarse, p, &default_seed(&coarse), &RelaxOptions::default())?;
    let imax = shape
        .u
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0;
    let offset = coarse.nodes()[imax] - peak;
    let xs: Vec<f64> = grid.nodes().iter().map(|x| x + offset).collect();
    let guess = StateUV {
        u: coarse.interpolate_at(&shape.u, &xs)?,
        v: coarse.interpolate_at(&shape.v, &xs)?,
    };
    newton_refine(grid, p, &guess, s, &NewtonOptions::default())
}

/// Transfers a converged profile to another grid and re-solves there.
pub fn refine_onto(profile: &WaveProfile, grid: &Grid) -> Result<WaveProfile> {
    let guess = profile.grid.resample(&profile.xhat, grid)?;
    newton_refine(grid, &profile.params, &guess, profile.s, &NewtonOptions::default())
}

/// Loads the profile from `cache` when present and valid, otherwise
/// computes it and writes the cache.
pub fn cached_profile(
    grid: &Grid,
    p: &ModelParams,
    peak: f64,
    cache: Option<&Path>,
) -> Result<WaveProfile> {
    if let Some(path) = cache {
        if let Some(prof) = WaveProfile::load(path, grid, p)? {
            let (ru, rv) = prof.bvp_residual();
            if ru.max(rv) <= 1e-8 {
                return Ok(prof);
            }
        }
    }
    let prof = compute_profile(grid, p, peak)?;
    if let Some(path) = cache {
        prof.save(path)?;
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing;

    #[test]
    fn default_profile_invariants() {
        let prof = testing::profile();
        let (ru, rv) = prof.bvp_residual();
        assert!(ru <= 1e-8 && rv <= 1e-8, "{ru} {rv}");
        assert!(prof.tail() <= 1e-9, "{}", prof.tail());
        assert!(prof.s > 0.0);
        let nd = prof.grid.inner_h(&prof.d1, &prof.d1, &prof.weights).unwrap();
        assert!((nd - 1.0).abs() <= 1e-8);
        let lo = prof.xhat.u.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = prof.xhat.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo > -0.3 && hi < 1.1, "{lo} {hi}");
        assert!((prof.peak() - default_peak(&prof.grid)).abs() < 0.5);
    }

    #[test]
    fn residual_oracle_matches_direct_evaluation() {
        // independent evaluation with a plain second-order difference away
        // from the boundary; only the O(h^2) truncation error may remain
        let prof = testing::profile();
        let h = prof.grid.spacing();
        let (u, v) = (&prof.xhat.u, &prof.xhat.v);
        let p = &prof.params;
        let mut worst = 0.0f64;
        for i in 10..prof.grid.len() - 10 {
            let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            let ux = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let vx = (v[i + 1] - v[i - 1]) / (2.0 * h);
            let r1 = p.nu * uxx + p.reaction.f(u[i]) - v[i] - prof.s * ux;
            let r2 = p.eps * (u[i] - p.gamma * v[i]) - prof.s * vx;
            worst = worst.max(r1.abs()).max(r2.abs());
        }
        assert!(worst < h * h, "{worst}");
    }

    #[test]
    fn newton_at_a_root_needs_no_more_than_two_steps() {
        let prof = testing::profile();
        let opts = NewtonOptions { tol: 1e-10, max_iter: 2 };
        let again = newton_refine(&prof.grid, &prof.params, &prof.xhat, prof.s, &opts).unwrap();
        assert!((again.s - prof.s).abs() < 1e-12);
    }

    #[test]
    fn relax_fixed_point_returns_immediately() {
        let prof = testing::profile();
        let (x, s) = relax_to_pulse(&prof.grid, &prof.params, &prof.xhat, &RelaxOptions::default()).unwrap();
        assert!((s - prof.s).abs() < 1e-3);
        assert_eq!(x.u, prof.xhat.u);
    }

    #[test]
    fn subthreshold_seed_goes_extinct() {
        let g = Grid::new(200.0, 1025, crate::grid::BoundaryCondition::Dirichlet0).unwrap();
        let seed = StateUV {
            u: g.sample(|x| 0.01 * (-x * x).exp()),
            v: vec![0.0; g.len()],
        };
        let err = relax_to_pulse(&g, &ModelParams::default(), &seed, &RelaxOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Extinction { .. }));
    }

    #[test]
    fn default_seed_relaxes_to_a_pulse_moving_left() {
        let g = Grid::new(200.0, 1025, crate::grid::BoundaryCondition::Dirichlet0).unwrap();
        let p = ModelParams::default();
        let (x, s) = relax_to_pulse(&g, &p, &default_seed(&g), &RelaxOptions::default()).unwrap();
        assert!(s > 0.0);
        assert_eq!(excited_regions(&x.u), 1);
        // direct fixed-frame time stepping moves the bump towards -x at speed s
        let prof = testing::profile();
        assert!((s - prof.s).abs() < 0.01, "{s} {}", prof.s);
    }

    #[test]
    fn eps_continuation_is_continuous() {
        let g = Grid::new(200.0, 2048, crate::grid::BoundaryCondition::Dirichlet0).unwrap();
        let base = refine_onto(testing::profile(), &g).unwrap();
        for steps in [&[0.012, 0.014][..], &[0.009, 0.008, 0.007][..]] {
            let mut prev = base.clone();
            for &eps in steps {
                let mut p = prev.params;
                p.eps = eps;
                let next = newton_refine(&g, &p, &prev.xhat, prev.s, &NewtonOptions::default())
                    .unwrap_or_else(|e| panic!("eps {eps}: {e}"));
                assert!((next.s - prev.s).abs() < 0.1);
                assert!(next.s > 0.0);
                prev = next;
            }
        }
    }

    #[test]
    fn pulse_at_shifts() {
        let prof = testing::profile();
        assert_eq!(prof.pulse_at(0.0).unwrap().u, prof.xhat.u);
        let twice = prof.grid.translate(&prof.pulse_at(0.7).unwrap(), 1.1).unwrap();
        let once = prof.pulse_at(1.8).unwrap();
        assert!(twice.sub(&once).max_abs() < 1e-5);
        let d = 1e-3;
        let fd = prof.pulse_at(d).unwrap().sub(&prof.pulse_at(-d).unwrap()).scaled(0.5 / d);
        assert!(fd.sub(&prof.d1).max_abs() < 1e-4);
        assert!(prof.pulse_at(prof.grid.half_width()).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let prof = testing::profile();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        prof.save(&path).unwrap();
        let back = WaveProfile::load(&path, &prof.grid, &prof.params).unwrap().unwrap();
        assert_eq!(back.xhat.u, prof.xhat.u);
        assert_eq!(back.s, prof.s);
        let mut other = prof.params;
        other.eps = 0.02;
        assert!(WaveProfile::load(&path, &prof.grid, &other).unwrap().is_none());
    }
}
