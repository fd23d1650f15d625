//! Truncated one-dimensional mesh, summation-by-parts difference operators,
//! the weighted inner products of the state spaces and the translation
//! operator `T_c Y = Y(. + c)`.
//!
//! The first and second difference operators are the diagonal-norm
//! summation-by-parts pair of order 4 in the interior (order 2 in the
//! boundary closures). The quadrature weights are the SBP norm, which
//! integrates polynomials up to degree one exactly and makes
//! `<D1 u, u>_W = (u_N^2 - u_0^2) / 2` hold to rounding.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet0,
    Neumann0,
}

const CLOSURE_ROWS: usize = 4;
const CLOSURE_COLS: usize = 6;

const NORM_CLOSURE: [f64; CLOSURE_ROWS] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];

const D1_INTERIOR: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
// Q closure rows divided by the norm weights.
const D1_CLOSURE: [[f64; CLOSURE_COLS]; CLOSURE_ROWS] = [
    [-24.0 / 17.0, 59.0 / 34.0, -4.0 / 17.0, -3.0 / 34.0, 0.0, 0.0],
    [-0.5, 0.0, 0.5, 0.0, 0.0, 0.0],
    [4.0 / 43.0, -59.0 / 86.0, 0.0, 59.0 / 86.0, -4.0 / 43.0, 0.0],
    [3.0 / 98.0, 0.0, -59.0 / 98.0, 0.0, 32.0 / 49.0, -4.0 / 49.0],
];

const D2_INTERIOR: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
const D2_CLOSURE: [[f64; CLOSURE_COLS]; CLOSURE_ROWS] = [
    [2.0, -5.0, 4.0, -1.0, 0.0, 0.0],
    [1.0, -2.0, 1.0, 0.0, 0.0, 0.0],
    [-4.0 / 43.0, 59.0 / 43.0, -110.0 / 43.0, 59.0 / 43.0, -4.0 / 43.0, 0.0],
    [-1.0 / 49.0, 0.0, 59.0 / 49.0, -118.0 / 49.0, 64.0 / 49.0, -4.0 / 49.0],
];
// Boundary derivative used to weakly impose a zero flux.
const FLUX_CLOSURE: [f64; 4] = [-11.0 / 6.0, 3.0, -3.0 / 2.0, 1.0 / 3.0];

/// A difference operator stored as interior stencil plus boundary closures.
#[derive(Clone, Debug)]
pub struct DiffOp {
    n: usize,
    closure: [[f64; CLOSURE_COLS]; CLOSURE_ROWS],
    interior: [f64; 5],
    /// `+1` when the right closure mirrors the left one (even operators),
    /// `-1` for odd operators.
    parity: f64,
    scale: f64,
}

impl DiffOp {
    /// Nonzero coefficients of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let n = self.n;
        let mut out = Vec::with_capacity(CLOSURE_COLS);
        if i < CLOSURE_ROWS {
            for (j, &c) in self.closure[i].iter().enumerate() {
                if c != 0.0 {
                    out.push((j, c * self.scale));
                }
            }
        } else if i >= n - CLOSURE_ROWS {
            let r = n - 1 - i;
            for (j, &c) in self.closure[r].iter().enumerate() {
                if c != 0.0 {
                    out.push((n - 1 - j, self.parity * c * self.scale));
                }
            }
        } else {
            for (k, &c) in self.interior.iter().enumerate() {
                if c != 0.0 {
                    out.push((i + k - 2, c * self.scale));
                }
            }
        }
        out
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(f, &mut out);
        out
    }

    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        assert_eq!(f.len(), n);
        for i in 0..CLOSURE_ROWS {
            let mut s = 0.0;
            let mut t = 0.0;
            for j in 0..CLOSURE_COLS {
                s += self.closure[i][j] * f[j];
                t += self.closure[i][j] * f[n - 1 - j];
            }
            out[i] = s * self.scale;
            out[n - 1 - i] = self.parity * t * self.scale;
        }
        let c = &self.interior;
        for i in CLOSURE_ROWS..(n - CLOSURE_ROWS) {
            out[i] = (c[0] * f[i - 2] + c[1] * f[i - 1] + c[2] * f[i] + c[3] * f[i + 1]
                + c[4] * f[i + 2])
                * self.scale;
        }
    }
}

#[derive(Clone, Debug)]
pub struct Grid {
    half_width: f64,
    n: usize,
    h: f64,
    bc: BoundaryCondition,
    x: Vec<f64>,
    weights: Vec<f64>,
    d1: DiffOp,
    d2: DiffOp,
}

impl Grid {
    pub const MIN_POINTS: usize = 2 * CLOSURE_ROWS + 5;

    pub fn new(half_width: f64, n: usize, bc: BoundaryCondition) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "need at least {} grid points, got {n}",
                Self::MIN_POINTS
            )));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        let x = (0..n).map(|i| -half_width + i as f64 * h).collect();
        let mut weights = vec![h; n];
        for (k, &w) in NORM_CLOSURE.iter().enumerate() {
            weights[k] = w * h;
            weights[n - 1 - k] = w * h;
        }
        let d1 = DiffOp {
            n,
            closure: D1_CLOSURE,
            interior: D1_INTERIOR,
            parity: -1.0,
            scale: 1.0 / h,
        };
        let mut d2_closure = D2_CLOSURE;
        if bc == BoundaryCondition::Neumann0 {
            // weakly imposed zero flux: D2 + W^{-1} e_0 S_0
            let w0 = NORM_CLOSURE[0];
            for (j, s) in FLUX_CLOSURE.iter().enumerate() {
                d2_closure[0][j] += s / w0;
            }
        }
        let d2 = DiffOp {
            n,
            closure: d2_closure,
            interior: D2_INTERIOR,
            parity: 1.0,
            scale: 1.0 / (h * h),
        };
        Ok(Self {
            half_width,
            n,
            h,
            bc,
            x,
            weights,
            d1,
            d2,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }
    pub fn nodes(&self) -> &[f64] {
        &self.x
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn d1(&self) -> &DiffOp {
        &self.d1
    }
    pub fn d2(&self) -> &DiffOp {
        &self.d2
    }

    /// Whether node `i` carries a pinned (Dirichlet) value.
    pub fn is_pinned(&self, i: usize) -> bool {
        self.bc == BoundaryCondition::Dirichlet0 && (i == 0 || i == self.n - 1)
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.x.iter().map(|&x| f(x)).collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Unweighted `L^2` product with the grid quadrature.
    pub fn dot_l2(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| x * y * w)
            .sum()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    pub fn check_state(&self, a: &StateUV) -> Result<()> {
        self.check(a.u.len())?;
        self.check(a.v.len())
    }

    pub fn inner_h(&self, a: &StateUV, b: &StateUV, w: &SpaceWeights) -> Result<f64> {
        self.check_state(a)?;
        self.check_state(b)?;
        Ok(self.inner_h_unchecked(a, b, w))
    }

    pub(crate) fn inner_h_unchecked(&self, a: &StateUV, b: &StateUV, w: &SpaceWeights) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.weights[i] * (w.eps * a.u[i] * b.u[i] + a.v[i] * b.v[i]);
        }
        w.z * s
    }

    pub fn norm_h(&self, a: &StateUV, w: &SpaceWeights) -> f64 {
        self.inner_h_unchecked(a, a, w).max(0.0).sqrt()
    }

    pub fn inner_v(&self, a: &StateUV, b: &StateUV, w: &SpaceWeights) -> Result<f64> {
        let base = self.inner_h(a, b, w)?;
        let da = self.d1.apply(&a.u);
        let db = self.d1.apply(&b.u);
        Ok(base + w.z * w.eps * self.dot_l2(&da, &db))
    }

    pub fn inner_vv(&self, a: &StateUV, b: &StateUV, w: &SpaceWeights) -> Result<f64> {
        let base = self.inner_v(a, b, w)?;
        let da = self.d1.apply(&a.v);
        let db = self.d1.apply(&b.v);
        Ok(base + w.z * self.dot_l2(&da, &db))
    }

    pub fn norm_vv(&self, a: &StateUV, w: &SpaceWeights) -> f64 {
        self.inner_vv(a, a, w).map(|x| x.max(0.0).sqrt()).unwrap_or(f64::NAN)
    }

    fn window_check(&self, c: f64) -> Result<()> {
        let limit = 0.5 * self.half_width;
        if !(c.abs() < limit) {
            return Err(Error::OutOfWindow { shift: c, limit });
        }
        Ok(())
    }

    /// `T_c f = f(. + c)` by cubic spline interpolation, zero outside `[-L, L]`.
    pub fn translate_field(&self, f: &[f64], c: f64) -> Result<Vec<f64>> {
        self.check(f.len())?;
        self.window_check(c)?;
        Ok(self.shift_unchecked(f, c))
    }

    pub fn translate(&self, a: &StateUV, c: f64) -> Result<StateUV> {
        self.check_state(a)?;
        self.window_check(c)?;
        Ok(StateUV {
            u: self.shift_unchecked(&a.u, c),
            v: self.shift_unchecked(&a.v, c),
        })
    }

    /// Cubic-spline values of `f` at arbitrary points, zero outside `[-L, L]`.
    pub fn interpolate_at(&self, f: &[f64], xs: &[f64]) -> Result<Vec<f64>> {
        self.check(f.len())?;
        let spline = CubicSpline::new(f, self.h);
        let n = self.n;
        Ok(xs
            .iter()
            .map(|&x| {
                let q = (x + self.half_width) / self.h;
                if !(q >= 0.0 && q <= (n - 1) as f64) {
                    return 0.0;
                }
                let j = (q.floor() as usize).min(n - 2);
                spline.eval(j, q - j as f64)
            })
            .collect())
    }

    /// Resamples a state given on `self` onto another grid.
    pub fn resample(&self, a: &StateUV, target: &Grid) -> Result<StateUV> {
        Ok(StateUV {
            u: self.interpolate_at(&a.u, target.nodes())?,
            v: self.interpolate_at(&a.v, target.nodes())?,
        })
    }

    pub(crate) fn shift_unchecked(&self, f: &[f64], c: f64) -> Vec<f64> {
        if c == 0.0 {
            return f.to_vec();
        }
        let spline = CubicSpline::new(f, self.h);
        let n = self.n as isize;
        let q = c / self.h;
        let j0 = q.floor();
        let t = q - j0;
        let j0 = j0 as isize;
        (0..n)
            .map(|i| {
                let j = i + j0;
                if t == 0.0 {
                    if (0..n).contains(&j) {
                        f[j as usize]
                    } else {
                        0.0
                    }
                } else if j >= 0 && j + 1 < n {
                    spline.eval(j as usize, t)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Natural cubic spline on a uniform mesh.
struct CubicSpline<'a> {
    y: &'a [f64],
    m: Vec<f64>,
    h: f64,
}

impl<'a> CubicSpline<'a> {
    fn new(y: &'a [f64], h: f64) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2
            let k = n - 2;
            let mut cp = vec![0.0; k];
            let mut dp = vec![0.0; k];
            let rhs = |i: usize| 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
            cp[0] = 0.25;
            dp[0] = rhs(0) / 4.0;
            for i in 1..k {
                let denom = 4.0 - cp[i - 1];
                cp[i] = 1.0 / denom;
                dp[i] = (rhs(i) - dp[i - 1]) / denom;
            }
            m[k] = dp[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = dp[i] - cp[i] * m[i + 2];
            }
        }
        Self { y, m, h }
    }

    #[inline]
    fn eval(&self, j: usize, t: f64) -> f64 {
        let s = 1.0 - t;
        s * self.y[j]
            + t * self.y[j + 1]
            + self.h * self.h / 6.0 * ((s * s * s - s) * self.m[j] + (t * t * t - t) * self.m[j + 1])
    }
}

/// The parameters of the weighted product `<.,.>_H = Z int (eps w1 w2 + q1 q2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceWeights {
    pub eps: f64,
    pub z: f64,
}

impl SpaceWeights {
    pub fn new(eps: f64, z: f64) -> Result<Self> {
        if !(eps > 0.0 && z > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "space weights need eps > 0 and Z > 0 (eps={eps}, Z={z})"
            )));
        }
        Ok(Self { eps, z })
    }

    /// `Z = 1 / int (eps u'^2 + v'^2)` for a profile derivative.
    pub fn normalizing(grid: &Grid, eps: f64, d1: &StateUV) -> Result<Self> {
        let unit = SpaceWeights { eps, z: 1.0 };
        let s = grid.inner_h(d1, d1, &unit)?;
        Self::new(eps, 1.0 / s)
    }
}

/// A pair of grid fields `(u, v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateUV {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl StateUV {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Dimension {
                expected: u.len(),
                got: v.len(),
            });
        }
        Ok(Self { u, v })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| a * x).collect(),
            v: self.v.iter().map(|x| a * x).collect(),
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &StateUV) {
        for (x, y) in self.u.iter_mut().zip(&other.u) {
            *x += a * y;
        }
        for (x, y) in self.v.iter_mut().zip(&other.v) {
            *x += a * y;
        }
    }

    pub fn sub(&self, other: &StateUV) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &StateUV) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.u
            .iter()
            .chain(&self.v)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Interleaved vector `(u_0, v_0, u_1, v_1, ...)`.
    pub fn interleave(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.len());
        for (a, b) in self.u.iter().zip(&self.v) {
            out.push(*a);
            out.push(*b);
        }
        out
    }

    pub fn from_interleaved(x: &[f64]) -> Self {
        Self {
            u: x.iter().step_by(2).copied().collect(),
            v: x.iter().skip(1).step_by(2).copied().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(l: f64, n: usize) -> Grid {
        Grid::new(l, n, BoundaryCondition::Dirichlet0).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(0.0, 100, BoundaryCondition::Dirichlet0).is_err());
        assert!(Grid::new(1.0, 5, BoundaryCondition::Dirichlet0).is_err());
    }

    #[test]
    fn quadrature_of_one_is_domain_length() {
        let g = grid(120.0, 4096);
        let one = vec![1.0; g.len()];
        assert!((g.integrate(&one) - 240.0).abs() <= 1e-12 * 120.0);
    }

    #[test]
    fn d2_annihilates_constants_and_d1_linears() {
        for bc in [BoundaryCondition::Dirichlet0, BoundaryCondition::Neumann0] {
            let g = Grid::new(3.0, 61, bc).unwrap();
            let one = vec![2.5; g.len()];
            for (i, v) in g.d2().apply(&one).iter().enumerate() {
                assert!(v.abs() < 1e-9, "row {i}: {v}");
            }
        }
        let g = grid(3.0, 61);
        let lin = g.sample(|x| 3.0 * x - 1.0);
        let quad = g.sample(|x| x * x);
        for v in g.d1().apply(&lin) {
            assert!((v - 3.0).abs() < 1e-10);
        }
        for (d, x) in g.d1().apply(&quad).iter().zip(g.nodes()) {
            assert!((d - 2.0 * x).abs() < 1e-9);
        }
        for d in g.d2().apply(&quad) {
            assert!((d - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn d1_summation_by_parts() {
        let g = grid(5.0, 101);
        let u = g.sample(|x| (0.7 * x).sin() + 0.1 * x * x);
        let du = g.d1().apply(&u);
        let lhs = g.dot_l2(&du, &u);
        let n = g.len();
        let rhs = 0.5 * (u[n - 1] * u[n - 1] - u[0] * u[0]);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_d2_is_symmetric_negative() {
        let g = grid(2.0, 41);
        let n = g.len();
        let w = g.weights();
        let col = |j: usize| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            g.d2().apply(&e)
        };
        let cols: Vec<Vec<f64>> = (0..n).map(col).collect();
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let a = w[i] * cols[j][i];
                let b = w[j] * cols[i][j];
                assert!((a - b).abs() < 1e-9, "({i},{j}) {a} {b}");
            }
        }
        let f = g.sample(|x| (PI * x / 2.0).sin() * x.cos());
        let mut f = f;
        f[0] = 0.0;
        f[n - 1] = 0.0;
        assert!(g.dot_l2(&g.d2().apply(&f), &f) < 0.0);
    }

    #[test]
    fn neumann_d2_is_symmetric() {
        let g = Grid::new(2.0, 41, BoundaryCondition::Neumann0).unwrap();
        let n = g.len();
        let w = g.weights();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                g.d2().apply(&e)
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                let a = w[i] * cols[j][i];
                let b = w[j] * cols[i][j];
                assert!((a - b).abs() < 1e-8 * (a.abs() + 1.0), "({i},{j}) {a} {b}");
            }
        }
    }

    fn derivative_errors(n: usize) -> (f64, f64) {
        let g = grid(8.0, n);
        let f = g.sample(|x| (-x * x).exp());
        let d1 = g.d1().apply(&f);
        let d2 = g.d2().apply(&f);
        let mut e1 = 0.0f64;
        let mut e2 = 0.0f64;
        for (i, &x) in g.nodes().iter().enumerate() {
            let ex1 = -2.0 * x * (-x * x).exp();
            let ex2 = (4.0 * x * x - 2.0) * (-x * x).exp();
            e1 = e1.max((d1[i] - ex1).abs());
            e2 = e2.max((d2[i] - ex2).abs());
        }
        (e1, e2)
    }

    #[test]
    fn fourth_order_convergence() {
        let ns = [81, 161, 321, 641];
        let errs: Vec<(f64, f64)> = ns.iter().map(|&n| derivative_errors(n)).collect();
        for w in errs.windows(2) {
            let s1 = (w[0].0 / w[1].0).log2();
            let s2 = (w[0].1 / w[1].1).log2();
            assert!(s1 >= 3.5, "D1 slope {s1}");
            assert!(s2 >= 3.5, "D2 slope {s2}");
        }
    }

    #[test]
    fn inner_h_examples() {
        let g = grid(4.0, 81);
        let w = SpaceWeights::new(1.0, 1.0).unwrap();
        let a = StateUV::new(vec![1.0; 81], vec![0.0; 81]).unwrap();
        assert!((g.inner_h(&a, &a, &w).unwrap() - 8.0).abs() < 1e-12);
        let z = StateUV::zeros(81);
        assert_eq!(g.inner_h(&z, &a, &w).unwrap(), 0.0);
        let short = StateUV::zeros(80);
        assert!(matches!(g.inner_h(&short, &a, &w), Err(Error::Dimension { .. })));
        // derivative of a constant vanishes: V equals H
        let hv = g.inner_v(&a, &a, &w).unwrap();
        assert!((hv - 8.0).abs() < 1e-9);
    }

    #[test]
    fn inner_v_of_sine() {
        let l = 3.0;
        let g = grid(l, 601);
        let w = SpaceWeights::new(1.0, 1.0).unwrap();
        let a = StateUV::new(g.sample(|x| (PI * x / l).sin()), vec![0.0; 601]).unwrap();
        let exact = l + PI * PI / l;
        let got = g.inner_v(&a, &a, &w).unwrap();
        assert!((got - exact).abs() / exact < 0.02);
    }

    #[test]
    fn gaussian_translation() {
        // h = 0.05
        let g = grid(10.0, 401);
        let a = StateUV::new(g.sample(|x| (-x * x).exp()), vec![0.0; 401]).unwrap();
        let t = g.translate(&a, 1.5).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            let ex = (-(x + 1.5) * (x + 1.5)).exp();
            assert!((t.u[i] - ex).abs() <= 1e-6);
        }
        // off-node shift
        let t = g.translate(&a, 1.234).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            let ex = (-(x + 1.234) * (x + 1.234)).exp();
            assert!((t.u[i] - ex).abs() <= 2e-6);
        }
        assert_eq!(g.translate(&a, 0.0).unwrap(), a);
        assert!(matches!(g.translate(&a, 5.0), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn translation_round_trip() {
        let g = grid(10.0, 801);
        let f = g.sample(|x| (-0.5 * x * x).exp() * (1.0 + 0.3 * x));
        let back = g
            .translate_field(&g.translate_field(&f, 0.737).unwrap(), -0.737)
            .unwrap();
        let err = f.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-5, "{err}");
    }

    proptest! {
        #[test]
        fn h_norm_positive_and_translate_linear(
            seed in 0u64..1000, c in -2.0f64..2.0, alpha in -3.0f64..3.0, beta in -3.0f64..3.0
        ) {
            let g = grid(6.0, 61);
            let w = SpaceWeights::new(0.01, 7.0).unwrap();
            let mk = |s: u64| {
                let u: Vec<f64> = (0..61).map(|i| ((i as f64 + s as f64) * 0.37).sin()).collect();
                let v: Vec<f64> = (0..61).map(|i| ((i as f64 * 1.3 + s as f64) * 0.11).cos()).collect();
                StateUV::new(u, v).unwrap()
            };
            let a = mk(seed);
            let b = mk(seed + 17);
            prop_assert!(g.inner_h(&a, &a, &w).unwrap() > 0.0);
            let mut comb = a.scaled(alpha);
            comb.axpy(beta, &b);
            let lhs = g.translate(&comb, c).unwrap();
            let mut rhs = g.translate(&a, c).unwrap().scaled(alpha);
            rhs.axpy(beta, &g.translate(&b, c).unwrap());
            prop_assert!(lhs.sub(&rhs).max_abs() < 1e-10);
            let vv = g.inner_vv(&a, &a, &w).unwrap();
            let v = g.inner_v(&a, &a, &w).unwrap();
            let h = g.inner_h(&a, &a, &w).unwrap();
            prop_assert!(vv >= v && v >= h);
        }
    }
}
