//! Trace-class Q-Wiener noise with Hermite-Gaussian eigenmodes.
//!
//! `W = sum_k sqrt(lambda_k) beta_k e_k` with independent Brownian motions
//! `beta_k` and `e_k(x) = h_k((x - c) / l) / sqrt(l)`, where `h_k` are the
//! L2-orthonormal Hermite functions. Normals come from counter-addressed
//! ChaCha streams so that every (seed, replica, step) triple maps to fixed
//! numbers independent of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// ChaCha words reserved per step; enough for thousands of normals.
const WORDS_PER_STEP: u128 = 1 << 16;

/// Default mode centre relative to the pulse peak; the adjoint zero mode
/// sits at the leading front, ahead of the peak in the direction of motion.
pub const DEFAULT_MODE_OFFSET: f64 = -25.0;
pub const DEFAULT_MODE_SCALE: f64 = 3.5;

/// Eigenvalues of `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpectrum {
    /// `lambda_k = exp(-rate k)`, `k = 0 .. modes - 1`.
    Exponential { rate: f64, modes: usize },
    /// `lambda_k = 1` for `k < modes`.
    Flat { modes: usize },
}

impl Default for NoiseSpectrum {
    fn default() -> Self {
        NoiseSpectrum::Exponential { rate: 0.1, modes: 64 }
    }
}

impl NoiseSpectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        match *self {
            NoiseSpectrum::Exponential { rate, modes } => (0..modes).map(|k| (-rate * k as f64).exp()).collect(),
            NoiseSpectrum::Flat { modes } => vec![1.0; modes],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let NoiseSpectrum::Exponential { rate, .. } = *self {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::InvalidParameter(format!("noise rate must be >= 0, got {rate}")));
            }
        }
        Ok(())
    }
}

/// Hermite functions `h_0 .. h_{n-1}` at `y`.
pub fn hermite_functions(n: usize, y: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n);
    if n == 0 {
        return h;
    }
    h.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp());
    if n > 1 {
        h.push(std::f64::consts::SQRT_2 * y * h[0]);
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

/// Calls `f(k, h_k(y))` for `k < n`, with the recurrence coefficients
/// `(sqrt(2 / (k + 1)), sqrt(k / (k + 1)))` precomputed in `rec`.
#[inline]
fn fold_hermite(rec: &[(f64, f64)], y: f64, mut f: impl FnMut(usize, f64)) {
    let n = rec.len();
    if n == 0 {
        return;
    }
    let mut h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp();
    f(0, h0);
    if n == 1 {
        return;
    }
    let mut h1 = std::f64::consts::SQRT_2 * y * h0;
    f(1, h1);
    for (k, &(a, b)) in rec.iter().enumerate().take(n - 1).skip(1) {
        let h2 = a * y * h1 - b * h0;
        f(k + 1, h2);
        h0 = h1;
        h1 = h2;
    }
}

fn recurrence(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let kf = k as f64;
            ((2.0 / (kf + 1.0)).sqrt(), (kf / (kf + 1.0)).sqrt())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct NoiseModel {
    centre: f64,
    scale: f64,
    lambdas: Vec<f64>,
    sqrt_lambdas: Vec<f64>,
    /// Mode shapes sampled on the grid.
    modes: Vec<Vec<f64>>,
    rec: Vec<(f64, f64)>,
}

impl NoiseModel {
    /// Hermite-Gaussian modes centred at `centre` with length scale `scale`.
    /// Fails if the modes are not orthonormal on the grid to 1e-8 or do not
    /// vanish at the boundary.
    pub fn hermite(grid: &Grid, centre: f64, scale: f64, spectrum: &NoiseSpectrum) -> Result<Self> {
        spectrum.validate()?;
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter(format!("noise needs scale > 0, got {scale}")));
        }
        let lambdas = spectrum.eigenvalues();
        let k = lambdas.len();
        let mut modes = vec![vec![0.0; grid.len()]; k];
        for (i, &x) in grid.nodes().iter().enumerate() {
            for (j, h) in hermite_functions(k, (x - centre) / scale).into_iter().enumerate() {
                modes[j][i] = h / scale.sqrt();
            }
        }
        let model = Self {
            centre,
            scale,
            sqrt_lambdas: lambdas.iter().map(|l| l.sqrt()).collect(),
            lambdas,
            modes,
            rec: recurrence(k),
        };
        let defect = model.gram_defect(grid);
        if defect > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "noise modes not orthonormal on the grid (defect {defect:e})"
            )));
        }
        let n = grid.len();
        let edge = model.modes.iter().fold(0.0f64, |m, e| m.max(e[0].abs()).max(e[n - 1].abs()));
        if edge > 1e-12 {
            return Err(Error::InvalidParameter(format!("noise modes reach the boundary ({edge:e})")));
        }
        Ok(model)
    }

    /// Default spectrum with modes placed at `peak + DEFAULT_MODE_OFFSET`.
    pub fn default_for(grid: &Grid, peak: f64) -> Result<Self> {
        Self::hermite(grid, peak + DEFAULT_MODE_OFFSET, DEFAULT_MODE_SCALE, &NoiseSpectrum::default())
    }

    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn centre(&self) -> f64 {
        self.centre
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `tr Q = sum lambda_k`
    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// `sum_k lambda_k |e_k|_{H^1}^2`, the squared Hilbert-Schmidt norm of
    /// `sqrt(Q)` into `H^1`, on the grid.
    pub fn h1_hilbert_schmidt(&self, grid: &Grid) -> f64 {
        self.modes
            .iter()
            .zip(&self.lambdas)
            .map(|(e, l)| {
                let de = grid.d1().apply(e);
                l * (grid.dot_l2(e, e) + grid.dot_l2(&de, &de))
            })
            .sum()
    }

    /// `max |<e_j, e_k> - delta_jk|` in the grid quadrature.
    pub fn gram_defect(&self, grid: &Grid) -> f64 {
        let mut worst = 0.0f64;
        for (j, a) in self.modes.iter().enumerate() {
            for (k, b) in self.modes.iter().enumerate().skip(j) {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((grid.dot_l2(a, b) - target).abs());
            }
        }
        worst
    }

    /// Mode values `e_k(x)` for all `k` at an arbitrary point.
    pub fn modes_at(&self, x: f64) -> Vec<f64> {
        hermite_functions(self.rank(), (x - self.centre) / self.scale)
            .into_iter()
            .map(|h| h / self.scale.sqrt())
            .collect()
    }

    /// Scaled-coordinate radius beyond which every mode is below 1e-30.
    fn support_radius(&self) -> f64 {
        (2.0 * self.rank() as f64 + 1.0).sqrt() + 8.0
    }

    /// `sum_k a_k e_k(x - shift)` at each `x` in `nodes`, analytic in `shift`.
    pub fn shifted_field(&self, nodes: &[f64], shift: f64, a: &[f64]) -> Vec<f64> {
        let r = self.support_radius();
        let norm = self.scale.sqrt().recip();
        nodes
            .iter()
            .map(|&x| {
                let y = (x - shift - self.centre) / self.scale;
                if y.abs() > r {
                    return 0.0;
                }
                let mut acc = 0.0;
                fold_hermite(&self.rec, y, |k, h| acc += h * a[k]);
                acc * norm
            })
            .collect()
    }

    /// `sum_i g_i e_k(x_i - shift)` for every `k`, the quadrature pairing of
    /// a weighted field with the translated modes.
    pub fn shifted_pairings(&self, nodes: &[f64], shift: f64, g: &[f64]) -> Vec<f64> {
        let r = self.support_radius();
        let norm = self.scale.sqrt().recip();
        let mut out = vec![0.0; self.rank()];
        for (&x, &gi) in nodes.iter().zip(g) {
            let y = (x - shift - self.centre) / self.scale;
            if gi == 0.0 || y.abs() > r {
                continue;
            }
            let gn = gi * norm;
            fold_hermite(&self.rec, y, |k, h| out[k] += gn * h);
        }
        out
    }

    /// `sqrt(lambda_k)`
    pub fn sqrt_lambdas(&self) -> &[f64] {
        &self.sqrt_lambdas
    }

    /// `Q_N`: the same modes with `lambda_k = 1` for `k < n_modes`, else 0.
    pub fn truncation(&self, n_modes: usize) -> Result<Self> {
        if n_modes > self.rank() {
            return Err(Error::InvalidParameter(format!(
                "{n_modes} modes requested, {} available",
                self.rank()
            )));
        }
        let lambdas: Vec<f64> = (0..self.rank()).map(|k| if k < n_modes { 1.0 } else { 0.0 }).collect();
        Ok(Self {
            sqrt_lambdas: lambdas.clone(),
            lambdas,
            ..self.clone()
        })
    }

    /// `sum_k sqrt(lambda_k dt) xi_k e_k`, without the factor `sigma`.
    pub fn increment_from_normals(&self, dt: f64, xi: &[f64]) -> Vec<f64> {
        let n = self.modes.first().map_or(0, |e| e.len());
        let mut out = vec![0.0; n];
        let sdt = dt.sqrt();
        for ((e, sl), x) in self.modes.iter().zip(&self.sqrt_lambdas).zip(xi) {
            let c = sl * sdt * x;
            if c == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(e) {
                *o += c * v;
            }
        }
        out
    }

    /// Unit-sigma increment over `dt` from the normals of `stream` at `step`.
    pub fn sample_increment(&self, dt: f64, stream: &NoiseStream, step: u64) -> Result<Vec<f64>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(self.increment_from_normals(dt, &stream.normals(step, self.rank())))
    }

    /// `sigma` times [`sample_increment`](Self::sample_increment).
    pub fn sample_scaled_increment(&self, sigma: f64, dt: f64, stream: &NoiseStream, step: u64) -> Result<Vec<f64>> {
        let mut w = self.sample_increment(dt, stream, step)?;
        w.iter_mut().for_each(|v| *v *= sigma);
        Ok(w)
    }
}

/// Counter-addressed normal variates for one replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
    pub replica: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        Self { seed, replica }
    }

    /// The `k` standard normals belonging to `step`.
    pub fn normals(&self, step: u64, k: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replica);
        rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        (0..k).map(|_| rng.sample(StandardNormal)).collect()
    }
}
