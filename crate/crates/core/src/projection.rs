//! Spectral projections onto the zero mode of `L#` and their translates.
//!
//! The projection is kept in rank-one form `Pi0 y = <psi, y>_H d1` with the
//! adjoint zero mode `psi`. The Dunford integral over a small circle around
//! 0 is available as an independent check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frozen::{evolve_frozen, FrozenOperator, SpectrumReport};
use crate::grid::{Grid, SpaceWeights, StateUV};
use crate::profile::WaveProfile;

/// Contour condition numbers above this are rejected.
const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct ProjectionPair {
    grid: Grid,
    weights: SpaceWeights,
    /// `d X_hat / d xi`
    pub phi_dir: StateUV,
    /// Adjoint zero mode with `<psi, phi_dir>_H = 1`.
    pub psi: StateUV,
    /// Contour radius `min{|lambda*|, kappa} / 2`.
    pub r: f64,
}

impl ProjectionPair {
    pub fn new(profile: &WaveProfile, report: &SpectrumReport) -> Result<Self> {
        let grid = profile.grid.clone();
        let weights = profile.weights;
        let c = grid.inner_h(&report.psi, &profile.d1, &weights)?;
        if !(c.abs() > 0.0 && c.is_finite()) {
            return Err(Error::Eigen("adjoint zero mode orthogonal to d1".into()));
        }
        Ok(Self {
            psi: report.psi.scaled(1.0 / c),
            phi_dir: profile.d1.clone(),
            r: 0.5 * report.lambda_star.norm().min(report.kappa),
            grid,
            weights,
        })
    }

    /// Pair built on the computed kernel vector of the discrete `L#` instead
    /// of `D1 X_hat`, so that the projection commutes with the discrete
    /// operator up to `|lambda0|`. The kernel vector is scaled to the best
    /// approximation of `D1 X_hat` and `psi` to `<psi, d1>_H = 1`.
    pub fn spectral(profile: &WaveProfile, report: &SpectrumReport) -> Result<Self> {
        let grid = profile.grid.clone();
        let weights = profile.weights;
        let phi_dir = kernel_direction(profile, report)?;
        let c = grid.inner_h(&report.psi, &phi_dir, &weights)?;
        if !(c.abs() > 0.0 && c.is_finite()) {
            return Err(Error::Eigen("adjoint zero mode orthogonal to the kernel".into()));
        }
        Ok(Self {
            psi: report.psi.scaled(1.0 / c),
            phi_dir,
            r: 0.5 * report.lambda_star.norm().min(report.kappa),
            grid,
            weights,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &SpaceWeights {
        &self.weights
    }

    /// `<psi, y>_H`
    pub fn coefficient(&self, y: &StateUV) -> Result<f64> {
        self.grid.inner_h(&self.psi, y, &self.weights)
    }

    /// `Pi#,0 y`
    pub fn proj0(&self, y: &StateUV) -> Result<StateUV> {
        Ok(self.phi_dir.scaled(self.coefficient(y)?))
    }

    /// `Pi# y = y - Pi#,0 y`
    pub fn proj_c(&self, y: &StateUV) -> Result<StateUV> {
        Ok(y.sub(&self.proj0(y)?))
    }

    /// `Pi0_c = T_c Pi#,0 T_{-c}`
    pub fn proj0_shifted(&self, y: &StateUV, c: f64) -> Result<StateUV> {
        let back = self.grid.translate(y, -c)?;
        self.grid.translate(&self.proj0(&back)?, c)
    }

    /// `Pi_c = T_c Pi# T_{-c}`
    pub fn proj_c_shifted(&self, y: &StateUV, c: f64) -> Result<StateUV> {
        let back = self.grid.translate(y, -c)?;
        self.grid.translate(&self.proj_c(&back)?, c)
    }

    /// `<Pi0_c y, d1(. + c)>_H`, the scalar that drives the phase.
    pub fn shifted_coefficient(&self, y: &StateUV, c: f64) -> Result<f64> {
        let p = self.proj0_shifted(y, c)?;
        let d = self.grid.translate(&self.phi_dir, c)?;
        self.grid.inner_h(&p, &d, &self.weights)
    }

    /// `|Pi#,0|_{L(H)} = |psi|_H |phi_dir|_H`
    pub fn operator_norm(&self) -> f64 {
        self.grid.norm_h(&self.psi, &self.weights) * self.grid.norm_h(&self.phi_dir, &self.weights)
    }
}

/// Checks that the circle of radius `r` encloses `lambda0` and nothing else.
pub fn check_contour(report: &SpectrumReport, r: f64) -> Result<()> {
    let inside = report.eigenvalues.iter().filter(|e| e.value.norm() < r).count();
    let closest = report
        .eigenvalues
        .iter()
        .map(|e| (e.value.norm() - r).abs())
        .fold(f64::INFINITY, f64::min);
    if inside != 1 || report.lambda0.norm() >= r || closest < 1e-3 * r {
        return Err(Error::ContourTooClose {
            radius: r,
            condition: f64::INFINITY,
        });
    }
    Ok(())
}

/// `(1 / 2 pi i) oint_{|lambda| = r} (lambda - L#)^{-1} y d lambda` by the
/// trapezoid rule with `n_nodes` nodes. Returns the real part and the
/// largest imaginary residue.
pub fn contour_proj0(fo: &FrozenOperator, y: &StateUV, r: f64, n_nodes: usize) -> Result<(StateUV, f64)> {
    if n_nodes < 4 || !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "contour needs r > 0 and at least 4 nodes (r={r}, nodes={n_nodes})"
        )));
    }
    fo.grid().check_state(y)?;
    let rhs: Vec<Complex64> = y.interleave().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); rhs.len()];
    for j in 0..n_nodes {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_nodes as f64;
        let lambda = Complex64::from_polar(r, theta);
        // (lambda - L)^{-1} y = -(L - lambda)^{-1} y
        let lu = fo.resolvent_factor(lambda).map_err(|_| Error::ContourTooClose {
            radius: r,
            condition: f64::INFINITY,
        })?;
        let cond = lu.condition_estimate();
        if cond > MAX_CONDITION {
            return Err(Error::ContourTooClose { radius: r, condition: cond });
        }
        let x = lu.solve(&rhs);
        let wgt = -lambda / n_nodes as f64;
        for (a, b) in acc.iter_mut().zip(&x) {
            *a += wgt * b;
        }
    }
    let imag = acc.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let re: Vec<f64> = acc.iter().map(|z| z.re).collect();
    Ok((StateUV::from_interleaved(&re), imag))
}

/// `sqrt(|y|_H^2 + |D1 y|_H^2 + |D2 y|_H^2)`
pub fn h2_norm(grid: &Grid, w: &SpaceWeights, y: &StateUV) -> f64 {
    let d = |op: &dyn Fn(&[f64]) -> Vec<f64>| StateUV {
        u: op(&y.u),
        v: op(&y.v),
    };
    let y1 = d(&|f| grid.d1().apply(f));
    let y2 = d(&|f| grid.d2().apply(f));
    (grid.norm_h(y, w).powi(2) + grid.norm_h(&y1, w).powi(2) + grid.norm_h(&y2, w).powi(2)).sqrt()
}

/// Smooth test field: a few Gaussian bumps in each component, vanishing
/// near the boundary.
pub fn smooth_field(grid: &Grid, rng: &mut impl rand::Rng) -> StateUV {
    let l = grid.half_width();
    let mut bumps = |k: usize| -> Vec<(f64, f64, f64)> {
        (0..k)
            .map(|_| {
                (
                    rng.random_range(-0.8 * l..0.8 * l),
                    rng.random_range(2.0..8.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect()
    };
    let bu = bumps(4);
    let bv = bumps(4);
    let eval = |b: &[(f64, f64, f64)], x: f64| -> f64 {
        b.iter().map(|(c, w, a)| a * (-((x - c) / w).powi(2)).exp()).sum()
    };
    let mut y = StateUV {
        u: grid.sample(|x| eval(&bu, x)),
        v: grid.sample(|x| eval(&bv, x)),
    };
    crate::frozen::project_admissible(grid, &mut y);
    y
}

/// `sup_y |Pi0 L# y - L# Pi0 y|_H / |y|_{H^2}` over `samples` random
/// smooth fields.
pub fn commutation_check(fo: &FrozenOperator, pp: &ProjectionPair, samples: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let g = pp.grid();
    let w = pp.weights();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let y = smooth_field(g, &mut rng);
        let a = pp.proj0(&fo.apply(&y)?)?;
        let b = fo.apply(&pp.proj0(&y)?)?;
        worst = worst.max(g.norm_h(&a.sub(&b), w) / h2_norm(g, w, &y));
    }
    Ok(worst)
}

/// The computed zero mode scaled to `<zero_mode, d1>_H / |zero_mode|_H^2`,
/// the multiple closest to `D1 X_hat`. The scale does not depend on `Z`.
pub fn kernel_direction(profile: &WaveProfile, report: &SpectrumReport) -> Result<StateUV> {
    let g = &profile.grid;
    let w = &profile.weights;
    let zm = &report.zero_mode;
    let a = g.inner_h(zm, &profile.d1, w)? / g.inner_h(zm, zm, w)?;
    Ok(zm.scaled(a))
}

/// Exponential fit `|P#_t Pi#|_{L(H)} <= C e^{-theta t}`.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit {
    pub theta: f64,
    pub c: f64,
}

/// Probe fields for the decay fit: random smooth fields and `v`-only wave
/// packets. High-wavenumber `v` data decouple from `u` and decay at nearly
/// `eps gamma`, the slowest rate the limit operator allows.
pub fn decay_probes(grid: &Grid, seed: u64) -> Vec<StateUV> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let mut out: Vec<StateUV> = (0..4).map(|_| smooth_field(grid, &mut rng)).collect();
    for k in [1.0, 3.0] {
        for c in [-0.5 * l, 0.0] {
            let mut y = StateUV {
                u: vec![0.0; grid.len()],
                v: grid.sample(|x| (k * x).cos() * (-((x - c) / 10.0).powi(2)).exp()),
            };
            crate::frozen::project_admissible(grid, &mut y);
            out.push(y);
        }
    }
    out
}

/// Fits `t -> |P#_t Pi# y|_H / |y|_H` for each probe on `samples + 1`
/// equally spaced times in `[0, t_max]`. `theta` is the smallest of the
/// per-probe least-squares log slopes, i.e. the slowest decaying direction;
/// `c` is the smallest constant for which `C e^{-theta t}` bounds every
/// probe at every sampled time. Also returns the envelope over the probes.
pub fn fit_decay(
    fo: &FrozenOperator,
    pp: &ProjectionPair,
    probes: &[StateUV],
    t_max: f64,
    samples: usize,
    dt: f64,
) -> Result<(DecayFit, Vec<(f64, f64)>)> {
    let g = pp.grid();
    let w = pp.weights();
    let h = t_max / samples as f64;
    let mut envelope = vec![0.0f64; samples + 1];
    let mut theta = f64::INFINITY;
    for y in probes {
        let n0 = g.norm_h(y, w);
        if !(n0 > 0.0) {
            return Err(Error::InvalidParameter("zero probe field".into()));
        }
        let mut x = pp.proj_c(y)?;
        let mut pts = vec![(0.0, g.norm_h(&x, w) / n0)];
        for k in 1..=samples {
            x = evolve_frozen(fo, &x, h, dt)?;
            pts.push((k as f64 * h, g.norm_h(&x, w) / n0));
        }
        for (e, p) in envelope.iter_mut().zip(&pts) {
            *e = e.max(p.1);
        }
        let logs: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t, v.ln())).collect();
        theta = theta.min(-crate::stats::linear_fit(&logs).0);
    }
    let series: Vec<(f64, f64)> = envelope.iter().enumerate().map(|(k, &v)| (k as f64 * h, v)).collect();
    let c = series
        .iter()
        .map(|&(t, v)| v * (theta * t).exp())
        .fold(0.0f64, f64::max);
    Ok((DecayFit { theta, c }, series))
}
