//! The frozen-wave operator
//!
//! ```text
//! L# = [[nu D2 + f'(u_hat) - s D1, -1], [eps, -eps gamma - s D1]]
//! ```
//!
//! its adjoint in the `H` product, the constant-coefficient limit `L_inf`,
//! the dispersion relation of `L_inf`, the isolated spectrum and the
//! linear evolution generated by `L#`.
//!
//! Unknowns are interleaved, `(u_i, v_i) -> (2i, 2i + 1)`. Boundary values
//! that are held at zero (u at both ends, v at the inflow end) are
//! decoupled and carry the diagonal entry `-PIN`, which moves their
//! eigenvalues far into the left half plane.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, SpaceWeights, StateUV};
use crate::linalg::arnoldi::{shift_invert, ArnoldiOptions};
use crate::linalg::{BandLu, BandMatrix};
use crate::profile::{ModelParams, WaveProfile};

pub const PIN: f64 = 1.0e4;
pub(crate) const BAND: usize = 7;

/// Interleaved indices of degrees of freedom held at zero.
pub fn pinned_dofs(grid: &Grid) -> Vec<usize> {
    let n = grid.len();
    let mut out = Vec::with_capacity(3);
    if grid.is_pinned(0) {
        out.push(0);
    }
    // transport of v runs towards +xi, so v is fixed at the inflow end
    out.push(1);
    if grid.is_pinned(n - 1) {
        out.push(2 * (n - 1));
    }
    out.sort_unstable();
    out
}

/// Interleaved indices held at zero in the fixed frame: `u` at Dirichlet
/// ends only, since `v` is not transported there.
pub fn fixed_frame_pins(grid: &Grid) -> Vec<usize> {
    let n = grid.len();
    [0, n - 1]
        .into_iter()
        .filter(|&i| grid.is_pinned(i))
        .map(|i| 2 * i)
        .collect()
}

/// Assembles `[[nu D2 + diag(fp) - s D1, -1], [eps, -eps gamma - s D1]]`
/// with pinned boundary unknowns.
pub fn assemble_linear(grid: &Grid, p: &ModelParams, s: f64, fp: &[f64]) -> BandMatrix<f64> {
    let mut m = assemble_unpinned(grid, p, s, fp);
    pin(&mut m, &pinned_dofs(grid));
    m
}

/// The fixed-frame linear part `[[nu D2, -1], [eps, -eps gamma]]`.
pub fn assemble_fixed_frame(grid: &Grid, p: &ModelParams) -> BandMatrix<f64> {
    let mut m = assemble_unpinned(grid, p, 0.0, &vec![0.0; grid.len()]);
    pin(&mut m, &fixed_frame_pins(grid));
    m
}

fn assemble_unpinned(grid: &Grid, p: &ModelParams, s: f64, fp: &[f64]) -> BandMatrix<f64> {
    let n = grid.len();
    let mut m = BandMatrix::zeros(2 * n, BAND, BAND);
    for i in 0..n {
        let (ru, rv) = (2 * i, 2 * i + 1);
        for (j, c) in grid.d2().row(i) {
            m.add(ru, 2 * j, p.nu * c);
        }
        if s != 0.0 {
            for (j, c) in grid.d1().row(i) {
                m.add(ru, 2 * j, -s * c);
                m.add(rv, 2 * j + 1, -s * c);
            }
        }
        m.add(ru, ru, fp[i]);
        m.add(ru, rv, -1.0);
        m.add(rv, ru, p.eps);
        m.add(rv, rv, -p.eps * p.gamma);
    }
    m
}

pub(crate) fn pin(m: &mut BandMatrix<f64>, dofs: &[usize]) {
    let n = m.n();
    for &k in dofs {
        m.clear_row(k);
        for i in k.saturating_sub(m.upper())..=(k + m.lower()).min(n - 1) {
            m.set(i, k, 0.0);
        }
        m.set(k, k, -PIN);
    }
}

/// Zeroes the pinned entries of a state in place.
pub fn project_admissible(grid: &Grid, y: &mut StateUV) {
    for k in pinned_dofs(grid) {
        if k % 2 == 0 {
            y.u[k / 2] = 0.0;
        } else {
            y.v[k / 2] = 0.0;
        }
    }
}

/// Diagonal of the `H` Gram matrix in interleaved order.
pub fn h_weights(grid: &Grid, w: &SpaceWeights) -> Vec<f64> {
    grid.weights()
        .iter()
        .flat_map(|&q| [w.z * w.eps * q, w.z * q])
        .collect()
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `I - dt A` for a banded `A`.
pub(crate) fn implicit_matrix(a: &BandMatrix<f64>, dt: f64) -> BandMatrix<f64> {
    let mut m = a.map(|v| -dt * v);
    for k in 0..m.n() {
        m.add(k, k, 1.0);
    }
    m
}

#[derive(Clone, Debug)]
pub struct FrozenOperator {
    grid: Grid,
    params: ModelParams,
    s: f64,
    weights: SpaceWeights,
    fprime: Vec<f64>,
    pub lsharp: BandMatrix<f64>,
    /// Adjoint of `lsharp` in the `H` product, `W^{-1} L^T W`.
    pub adjoint: BandMatrix<f64>,
    pub linf: BandMatrix<f64>,
}

impl FrozenOperator {
    pub fn assemble(profile: &WaveProfile) -> Self {
        let grid = profile.grid.clone();
        let p = profile.params;
        let fprime: Vec<f64> = profile.xhat.u.iter().map(|&u| p.reaction.f1(u)).collect();
        let lsharp = assemble_linear(&grid, &p, profile.s, &fprime);
        let f0 = vec![p.reaction.f1(0.0); grid.len()];
        let linf = assemble_linear(&grid, &p, profile.s, &f0);
        let hw = h_weights(&grid, &profile.weights);
        let mut adjoint = BandMatrix::zeros(lsharp.n(), BAND, BAND);
        for (i, j, v) in lsharp.entries() {
            adjoint.add(j, i, v * hw[i] / hw[j]);
        }
        Self {
            grid,
            params: p,
            s: profile.s,
            weights: profile.weights,
            fprime,
            lsharp,
            adjoint,
            linf,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn speed(&self) -> f64 {
        self.s
    }
    pub fn weights(&self) -> &SpaceWeights {
        &self.weights
    }
    pub fn fprime(&self) -> &[f64] {
        &self.fprime
    }

    fn mat_apply(&self, m: &BandMatrix<f64>, y: &StateUV) -> Result<StateUV> {
        self.grid.check_state(y)?;
        Ok(StateUV::from_interleaved(&m.matvec(&y.interleave())))
    }

    pub fn apply(&self, y: &StateUV) -> Result<StateUV> {
        self.mat_apply(&self.lsharp, y)
    }

    pub fn apply_adjoint(&self, y: &StateUV) -> Result<StateUV> {
        self.mat_apply(&self.adjoint, y)
    }

    pub fn apply_linf(&self, y: &StateUV) -> Result<StateUV> {
        self.mat_apply(&self.linf, y)
    }

    /// The adjoint written out with difference operators,
    /// `[[nu D2 + f'(u_hat) + s D1, 1], [-eps, -eps gamma + s D1]]`.
    /// It agrees with [`apply_adjoint`](Self::apply_adjoint) away from the
    /// boundary closures.
    pub fn explicit_adjoint(&self, y: &StateUV) -> Result<StateUV> {
        self.grid.check_state(y)?;
        let p = &self.params;
        let d2u = self.grid.d2().apply(&y.u);
        let d1u = self.grid.d1().apply(&y.u);
        let d1v = self.grid.d1().apply(&y.v);
        let n = self.grid.len();
        let mut out = StateUV::zeros(n);
        for i in 0..n {
            out.u[i] = p.nu * d2u[i] + self.fprime[i] * y.u[i] + self.s * d1u[i] + y.v[i];
            out.v[i] = -p.eps * y.u[i] - p.eps * p.gamma * y.v[i] + self.s * d1v[i];
        }
        Ok(out)
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa()
    }

    /// `beta = |f'(u_hat) - f'(0)|_{W^{1,inf}} - kappa`
    pub fn beta(&self) -> f64 {
        let f0 = self.params.reaction.f1(0.0);
        let g: Vec<f64> = self.fprime.iter().map(|v| v - f0).collect();
        let dg = self.grid.d1().apply(&g);
        let sup = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        sup(&g) + sup(&dg) - self.kappa()
    }

    /// Factorization of `L# - shift` over the complex numbers.
    pub fn resolvent_factor(&self, shift: Complex64) -> Result<BandLu<Complex64>> {
        self.lsharp.map(|v| Complex64::new(v, 0.0)).shifted(-shift).factor()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DispersionPoint {
    pub k: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

/// Eigenvalues of the symbol `[[-nu k^2 + f'(0) - i s k, -1], [eps, -eps gamma - i s k]]`
/// of `L_inf` for each wavenumber.
pub fn dispersion(p: &ModelParams, s: f64, ks: &[f64]) -> Vec<DispersionPoint> {
    let f0 = p.reaction.f1(0.0);
    ks.iter()
        .map(|&k| {
            let alpha = -p.nu * k * k + f0;
            let delta = -p.eps * p.gamma;
            let mean = 0.5 * (alpha + delta);
            let half = 0.5 * (alpha - delta);
            let root = Complex64::new(half * half - p.eps, 0.0).sqrt();
            let shift = Complex64::new(mean, -s * k);
            DispersionPoint {
                k,
                lambda1: shift + root,
                lambda2: shift - root,
            }
        })
        .collect()
}

pub fn dispersion_max_re(points: &[DispersionPoint]) -> f64 {
    points
        .iter()
        .flat_map(|d| [d.lambda1.re, d.lambda2.re])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Evenly spaced wavenumbers on `[-k_max, k_max]`.
pub fn wavenumbers(k_max: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| -k_max + 2.0 * k_max * i as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenKind {
    Zero,
    Point,
    EssentialCluster,
}

impl EigenKind {
    pub fn label(self) -> &'static str {
        match self {
            EigenKind::Zero => "zero",
            EigenKind::Point => "point",
            EigenKind::EssentialCluster => "essential-cluster",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Eigenvalue {
    pub value: Complex64,
    pub kind: EigenKind,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub lambda0: Complex64,
    /// Real zero mode, `H`-normalized and oriented along `d1`.
    pub zero_mode: StateUV,
    /// `H` cosine between the zero mode and `d1`.
    pub zero_mode_cosine: f64,
    /// Adjoint zero mode scaled so that `<psi, d1>_H = 1`.
    pub psi: StateUV,
    pub lambda_star: Complex64,
    pub kappa: f64,
    pub eigenvalues: Vec<Eigenvalue>,
    pub dispersion: Vec<DispersionPoint>,
}

/// Shifts used for the shift-invert Arnoldi runs.
pub fn spectrum_shifts(kappa: f64) -> [f64; 3] {
    [0.05, 0.0, -0.5 * kappa]
}

/// Rightmost part of the spectrum of `L#`, the zero mode and the adjoint
/// zero mode.
pub fn spectrum(fo: &FrozenOperator, profile: &WaveProfile, n_eigs: usize) -> Result<SpectrumReport> {
    let grid = fo.grid();
    let hw = h_weights(grid, fo.weights());
    let kappa = fo.kappa();
    let opts = ArnoldiOptions {
        krylov_dim: (3 * n_eigs).max(60),
        tol: 1e-9,
    };
    let start: Vec<Complex64> = profile
        .d1
        .interleave()
        .iter()
        .enumerate()
        .map(|(k, &v)| Complex64::new(v + 1e-3 * ((k as f64) * 0.37).sin(), 0.0))
        .collect();

    let mut found: Vec<(Complex64, Vec<Complex64>, f64)> = Vec::new();
    for &sh in &spectrum_shifts(kappa) {
        let mut shift = Complex64::new(sh, 0.0);
        let lu = match fo.resolvent_factor(shift) {
            Ok(lu) => lu,
            Err(_) => {
                shift += 1e-9;
                fo.resolvent_factor(shift)?
            }
        };
        let pairs = shift_invert(|x| lu.solve(x), shift, &hw, &start, &opts)?;
        for pair in pairs.into_iter().take(n_eigs) {
            if pair.value.re < -0.5 * PIN {
                continue;
            }
            let scale = pair.value.norm().max(1e-3);
            if found.iter().all(|(v, _, _)| (v - pair.value).norm() > 1e-7 * scale) {
                found.push((pair.value, pair.vector, pair.residual));
            }
        }
    }
    if found.is_empty() {
        return Err(Error::Eigen("no converged eigenvalues".into()));
    }
    let i0 = (0..found.len())
        .min_by(|&a, &b| found[a].0.norm().partial_cmp(&found[b].0.norm()).unwrap())
        .unwrap();
    let lambda0 = found[i0].0;

    // orient the zero mode along d1 and keep its real part
    let w = fo.weights();
    let d1c = to_complex(&profile.d1.interleave());
    let vec0 = &found[i0].1;
    let proj: Complex64 = vec0
        .iter()
        .zip(&d1c)
        .zip(&hw)
        .map(|((a, b), q)| a.conj() * b * *q)
        .sum();
    let phase = proj / proj.norm();
    let zero_mode = StateUV::from_interleaved(&vec0.iter().map(|z| (z * phase).re).collect::<Vec<_>>());
    let nz = grid.norm_h(&zero_mode, w);
    let zero_mode = zero_mode.scaled(1.0 / nz);
    let cosine = grid.inner_h(&zero_mode, &profile.d1, w)? / grid.norm_h(&profile.d1, w);
    if cosine < 0.99 {
        return Err(Error::ZeroModeMisaligned { cosine });
    }

    let psi = adjoint_zero_mode(fo, profile, lambda0.re)?;

    let mut eigenvalues: Vec<Eigenvalue> = found
        .iter()
        .enumerate()
        .map(|(i, (v, _, r))| Eigenvalue {
            value: *v,
            kind: if i == i0 {
                EigenKind::Zero
            } else if v.re > -kappa {
                EigenKind::Point
            } else {
                EigenKind::EssentialCluster
            },
            residual: *r,
        })
        .collect();
    eigenvalues.sort_by(|a, b| b.value.re.partial_cmp(&a.value.re).unwrap());
    let lambda_star = eigenvalues
        .iter()
        .find(|e| e.kind != EigenKind::Zero)
        .map(|e| e.value)
        .ok_or_else(|| Error::Eigen("only the zero eigenvalue converged".into()))?;

    Ok(SpectrumReport {
        lambda0,
        zero_mode,
        zero_mode_cosine: cosine,
        psi,
        lambda_star,
        kappa,
        eigenvalues,
        dispersion: dispersion(fo.params(), fo.speed(), &wavenumbers(50.0, 1001)),
    })
}

/// Inverse iteration for the adjoint eigenvector at `shift`, normalized so
/// that `<psi, d1>_H = 1`.
fn adjoint_zero_mode(fo: &FrozenOperator, profile: &WaveProfile, shift: f64) -> Result<StateUV> {
    let grid = fo.grid();
    let w = fo.weights();
    let mut m = fo.adjoint.shifted(-shift);
    let lu = match m.factor() {
        Ok(lu) => lu,
        Err(_) => {
            m = fo.adjoint.shifted(-shift - 1e-12);
            m.factor()?
        }
    };
    let mut x = profile.d1.interleave();
    for _ in 0..4 {
        lu.solve_in_place(&mut x);
        let norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Eigen("adjoint inverse iteration broke down".into()));
        }
        x.iter_mut().for_each(|v| *v /= norm);
    }
    let psi = StateUV::from_interleaved(&x);
    let c = grid.inner_h(&psi, &profile.d1, w)?;
    if c.abs() < 1e-300 {
        return Err(Error::Eigen("adjoint zero mode orthogonal to d1".into()));
    }
    Ok(psi.scaled(1.0 / c))
}

/// Rayleigh-quotient inverse iteration started at `guess`. Returns the
/// eigenvalue it converges to.
pub fn refine_eigenvalue(fo: &FrozenOperator, guess: Complex64, iterations: usize) -> Result<Complex64> {
    let hw = h_weights(fo.grid(), fo.weights());
    let lu = fo.resolvent_factor(guess)?;
    let lc = fo.lsharp.map(|v| Complex64::new(v, 0.0));
    let n = hw.len();
    let mut x: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(((k as f64) * 0.61).sin(), ((k as f64) * 0.23).cos()))
        .collect();
    let mut value = guess;
    for _ in 0..iterations {
        lu.solve_in_place(&mut x);
        let nrm: f64 = x.iter().zip(&hw).map(|(z, q)| z.norm_sqr() * q).sum::<f64>().sqrt();
        x.iter_mut().for_each(|z| *z /= nrm);
        let lx = lc.matvec(&x);
        value = x.iter().zip(&lx).zip(&hw).map(|((a, b), q)| a.conj() * b * *q).sum();
    }
    Ok(value)
}

/// Splitting for `dY/dt = L# Y`. Diffusion and the zero-order part of
/// `L_inf` are backward Euler, the transport `-s D1` is trapezoidal and
/// `(f'(u_hat) - f'(0)) u` is explicit. Backward Euler on the transport
/// would damp a wave number `k` at the spurious rate `(s k)^2 dt / 2`.
pub struct FrozenPropagator<'a> {
    fo: &'a FrozenOperator,
    lu: BandLu<f64>,
    transport: BandMatrix<f64>,
    dt: f64,
    b: Vec<f64>,
}

impl<'a> FrozenPropagator<'a> {
    pub fn new(fo: &'a FrozenOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let f0 = fo.params.reaction.f1(0.0);
        let still = assemble_linear(&fo.grid, &fo.params, 0.0, &vec![f0; fo.grid.len()]);
        let mut transport = fo.linf.clone();
        for (i, j, v) in still.entries() {
            transport.add(i, j, -v);
        }
        let mut m = implicit_matrix(&still, dt);
        for (i, j, v) in transport.entries() {
            m.add(i, j, -0.5 * dt * v);
        }
        let lu = m.factor()?;
        let b = fo.fprime.iter().map(|v| v - f0).collect();
        Ok(Self {
            fo,
            lu,
            transport,
            dt,
            b,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, y: &mut [f64]) {
        let mut ty = self.transport.matvec(y);
        for (i, b) in self.b.iter().enumerate() {
            ty[2 * i] += 2.0 * b * y[2 * i];
        }
        for (a, t) in y.iter_mut().zip(&ty) {
            *a += 0.5 * self.dt * t;
        }
        for k in pinned_dofs(self.fo.grid()) {
            y[k] = 0.0;
        }
        self.lu.solve_in_place(y);
    }

    /// Applies `n` steps.
    pub fn advance(&self, y: &StateUV, n: usize) -> Result<StateUV> {
        self.fo.grid.check_state(y)?;
        let mut x = y.interleave();
        for _ in 0..n {
            self.step(&mut x);
        }
        Ok(StateUV::from_interleaved(&x))
    }
}

/// Action of `P#_t` on `y0`, using `ceil(t / dt)` equal steps.
pub fn evolve_frozen(fo: &FrozenOperator, y0: &StateUV, t: f64, dt: f64) -> Result<StateUV> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if t == 0.0 {
        fo.grid.check_state(y0)?;
        return Ok(y0.clone());
    }
    let n = (t / dt - 1e-9).ceil().max(1.0) as usize;
    FrozenPropagator::new(fo, t / n as f64)?.advance(y0, n)
}

/// The fixed-frame evolution family `P_{st,st'} = T_{st} P#_{t-t'} T_{-st'}`.
pub fn evolution_family(
    fo: &FrozenOperator,
    y0: &StateUV,
    t: f64,
    t_prime: f64,
    dt: f64,
) -> Result<StateUV> {
    if t < t_prime {
        return Err(Error::InvalidParameter(format!("need t >= t' (t={t}, t'={t_prime})")));
    }
    let s = fo.speed();
    let frozen = fo.grid.translate(y0, -s * t_prime)?;
    let evolved = evolve_frozen(fo, &frozen, t - t_prime, dt)?;
    fo.grid.translate(&evolved, s * t)
}

/// Direct fixed-frame integration of `dY/dt = L_{st} Y` with
/// `L_{st} = [[nu D2 + f'(u_hat(. + st)), -1], [eps, -eps gamma]]`.
/// The constant part is implicit, `f'(u_hat(. + st)) u` explicit at the
/// left end of each step.
pub struct FixedFramePropagator<'a> {
    fo: &'a FrozenOperator,
    lu: BandLu<f64>,
    dt: f64,
    pins: Vec<usize>,
}

impl<'a> FixedFramePropagator<'a> {
    pub fn new(fo: &'a FrozenOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let lu = implicit_matrix(&assemble_fixed_frame(&fo.grid, &fo.params), dt).factor()?;
        Ok(Self {
            fo,
            lu,
            dt,
            pins: fixed_frame_pins(&fo.grid),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `f'(u_hat(. + st))` on the grid.
    pub fn coefficient(&self, t: f64) -> Result<Vec<f64>> {
        let f0 = self.fo.params.reaction.f1(0.0);
        let g: Vec<f64> = self.fo.fprime.iter().map(|v| v - f0).collect();
        let shifted = self.fo.grid.translate_field(&g, self.fo.s * t)?;
        Ok(shifted.into_iter().map(|v| v + f0).collect())
    }

    /// One step from `t` with an additional explicit forcing `dt * force`.
    pub fn step(&self, y: &mut [f64], t: f64, force: Option<&[f64]>) -> Result<()> {
        let fp = self.coefficient(t)?;
        for (i, c) in fp.iter().enumerate() {
            y[2 * i] += self.dt * c * y[2 * i];
        }
        if let Some(f) = force {
            for (a, b) in y.iter_mut().zip(f) {
                *a += self.dt * b;
            }
        }
        for &k in &self.pins {
            y[k] = 0.0;
        }
        self.lu.solve_in_place(y);
        Ok(())
    }

    pub fn solve_in_place(&self, y: &mut [f64]) {
        self.lu.solve_in_place(y);
    }

    pub fn pins(&self) -> &[usize] {
        &self.pins
    }
}

/// Integrates `dY/dt = L_{st} Y` directly from `t'` to `t` in the fixed
/// frame with `ceil((t - t') / dt)` equal steps.
pub fn fixed_frame_linear(
    fo: &FrozenOperator,
    y0: &StateUV,
    t: f64,
    t_prime: f64,
    dt: f64,
) -> Result<StateUV> {
    if t < t_prime {
        return Err(Error::InvalidParameter(format!("need t >= t' (t={t}, t'={t_prime})")));
    }
    fo.grid.check_state(y0)?;
    if t == t_prime {
        return Ok(y0.clone());
    }
    let n = ((t - t_prime) / dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t - t_prime) / n as f64;
    let prop = FixedFramePropagator::new(fo, h)?;
    let mut y = y0.interleave();
    for k in 0..n {
        prop.step(&mut y, t_prime + k as f64 * h, None)?;
    }
    Ok(StateUV::from_interleaved(&y))
}
