//! Bistable reaction term `f(w) = chi(w) w (1 - w) (w - a)` with a cutoff
//! that flattens the cubic growth at `-infinity`.
//!
//! `chi = 1` on `[-c1, inf)`, `chi = c2^2 / w^2` on `(-inf, -c2]`. On the
//! bridge `[-c2, -c1]` the function `f` itself is a quintic Hermite
//! interpolant matching value, slope and curvature of both branches, so
//! `f` is `C^2` with exact derivatives everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionParams {
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for ReactionParams {
    fn default() -> Self {
        Self {
            a: 0.05,
            c1: 2.0,
            c2: 3.0,
        }
    }
}

impl ReactionParams {
    pub fn new(a: f64, c1: f64, c2: f64) -> Result<Self> {
        let p = Self { a, c1, c2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::InvalidParameter(format!("a must lie in (0,1), got {}", self.a)));
        }
        if !(1.0 < self.c1 && self.c1 < self.c2) {
            return Err(Error::InvalidParameter(format!(
                "cutoff needs 1 < c1 < c2, got c1={}, c2={}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    fn cubic(&self, w: f64) -> [f64; 3] {
        let a = self.a;
        // w(1-w)(w-a) = -w^3 + (1+a) w^2 - a w
        [
            w * (1.0 - w) * (w - a),
            -3.0 * w * w + 2.0 * (1.0 + a) * w - a,
            -6.0 * w + 2.0 * (1.0 + a),
        ]
    }

    fn tail(&self, w: f64) -> [f64; 3] {
        // c2^2 (1-w)(w-a)/w = c2^2 (-w + (1+a) - a/w)
        let k = self.c2 * self.c2;
        [
            k * (-w + (1.0 + self.a) - self.a / w),
            k * (-1.0 + self.a / (w * w)),
            k * (-2.0 * self.a / (w * w * w)),
        ]
    }

    fn bridge(&self, w: f64) -> [f64; 3] {
        let x0 = -self.c2;
        let x1 = -self.c1;
        let len = x1 - x0;
        let t = (w - x0) / len;
        let p0 = self.tail(x0);
        let p1 = self.cubic(x1);
        // quintic Hermite basis on [0,1]
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h = [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
            0.5 * t3 - t4 + 0.5 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
        ];
        let dh = [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
            1.5 * t2 - 4.0 * t3 + 2.5 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
        ];
        let ddh = [
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
            1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
            3.0 * t - 12.0 * t2 + 10.0 * t3,
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
            60.0 * t - 180.0 * t2 + 120.0 * t3,
        ];
        let coef = [
            p0[0],
            p0[1] * len,
            p0[2] * len * len,
            p1[2] * len * len,
            p1[1] * len,
            p1[0],
        ];
        let mut out = [0.0; 3];
        for k in 0..6 {
            out[0] += coef[k] * h[k];
            out[1] += coef[k] * dh[k] / len;
            out[2] += coef[k] * ddh[k] / (len * len);
        }
        out
    }

    /// `[f, f', f'']` at `w`.
    pub fn eval(&self, w: f64) -> [f64; 3] {
        if w >= -self.c1 {
            self.cubic(w)
        } else if w <= -self.c2 {
            self.tail(w)
        } else {
            self.bridge(w)
        }
    }

    pub fn f(&self, w: f64) -> f64 {
        self.eval(w)[0]
    }

    pub fn f1(&self, w: f64) -> f64 {
        self.eval(w)[1]
    }

    pub fn f2(&self, w: f64) -> f64 {
        self.eval(w)[2]
    }

    /// `kappa = min{-f'(0), eps gamma}`
    pub fn kappa(&self, eps: f64, gamma: f64) -> f64 {
        (-self.f1(0.0)).min(eps * gamma)
    }
}

/// Sampled suprema of the growth and Lipschitz ratios of `f`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EtaBounds {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta4: f64,
    pub eta5: f64,
    pub eta6: f64,
    pub eta7: f64,
}

impl EtaBounds {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.eta1, self.eta2, self.eta3, self.eta4, self.eta5, self.eta6, self.eta7,
        ]
    }
}

/// Estimates the seven constants on a 400 x 400 lattice of `[-box, box]^2`.
pub fn eta_bounds(p: &ReactionParams, box_half: f64) -> EtaBounds {
    const M: usize = 400;
    let pts: Vec<f64> = (0..M)
        .map(|i| -box_half + 2.0 * box_half * (i as f64 + 0.5) / M as f64)
        .collect();
    let vals: Vec<[f64; 3]> = pts.iter().map(|&w| p.eval(w)).collect();
    let mut e = EtaBounds {
        eta1: f64::NEG_INFINITY,
        eta2: 0.0,
        eta3: 0.0,
        eta4: 0.0,
        eta5: 0.0,
        eta6: 0.0,
        eta7: 0.0,
    };
    // one-variable suprema on a finer lattice
    const M1: usize = 40 * M;
    for i in 0..=M1 {
        let w = -box_half + 2.0 * box_half * i as f64 / M1 as f64;
        let d1 = p.f1(w);
        e.eta1 = e.eta1.max(d1);
        e.eta3 = e.eta3.max(d1.abs() / (1.0 + w * w));
    }
    for (i, &w1) in pts.iter().enumerate() {
        let [f_1, d_1, dd_1] = vals[i];
        for (j, &w2) in pts.iter().enumerate() {
            // second argument as an increment
            let w2_inc = w2;
            if w2_inc != 0.0 {
                let [fs, ds, _] = p.eval(w1 + w2_inc);
                let r2 = (fs - f_1 - d_1 * w2_inc).abs()
                    / ((1.0 + w1.abs() + w2_inc.abs()) * w2_inc * w2_inc);
                e.eta2 = e.eta2.max(r2);
                let r5 = (ds - d_1 - dd_1 * w2_inc).abs() / (w2_inc * w2_inc);
                e.eta5 = e.eta5.max(r5);
            }
            if i != j {
                let [f_2, d_2, dd_2] = vals[j];
                let dw = (w1 - w2).abs();
                e.eta4 = e.eta4.max((f_1 - f_2).abs() / (dw * (1.0 + w1 * w1 + w2 * w2)));
                e.eta6 = e.eta6.max((d_1 - d_2).abs() / (dw * (1.0 + w1.abs() + w2.abs())));
                e.eta7 = e.eta7.max((dd_1 - dd_2).abs() / dw);
            }
        }
    }
    e
}
