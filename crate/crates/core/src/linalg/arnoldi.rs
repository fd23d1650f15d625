//! Shift-invert Arnoldi in a diagonally weighted inner product.
//!
//! The Krylov space is built for `(A - shift)^{-1}`; Ritz values `theta`
//! map back to eigenvalues `shift + 1/theta`. Eigenvalues closest to the
//! shift converge first.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    /// Relative residual estimate of the Ritz pair.
    pub residual: f64,
}

pub struct ArnoldiOptions {
    pub krylov_dim: usize,
    pub tol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 60,
            tol: 1e-9,
        }
    }
}

fn winner(weights: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .zip(weights)
        .map(|((x, y), w)| x.conj() * y * *w)
        .sum()
}

fn wnorm(weights: &[f64], a: &[Complex64]) -> f64 {
    a.iter()
        .zip(weights)
        .map(|(x, w)| x.norm_sqr() * w)
        .sum::<f64>()
        .sqrt()
}

/// Runs shift-invert Arnoldi and returns the converged Ritz pairs sorted by
/// distance to the shift (closest first).
pub fn shift_invert<F>(
    apply_inverse: F,
    shift: Complex64,
    weights: &[f64],
    start: &[Complex64],
    opts: &ArnoldiOptions,
) -> Result<Vec<EigenPair>>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let n = weights.len();
    let m = opts.krylov_dim.min(n);
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<Complex64>::zeros(m + 1, m);

    let nrm = wnorm(weights, start);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::Eigen("degenerate start vector".into()));
    }
    basis.push(start.iter().map(|x| x / nrm).collect());

    let mut dim = m;
    for j in 0..m {
        let mut w = apply_inverse(&basis[j]);
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = winner(weights, q, &w);
                h[(i, j)] += c;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= c * qk;
                }
            }
        }
        let beta = wnorm(weights, &w);
        if !beta.is_finite() {
            return Err(Error::Eigen(format!("non-finite Krylov vector at step {j}")));
        }
        h[(j + 1, j)] = Complex64::new(beta, 0.0);
        if beta < 1e-14 {
            dim = j + 1;
            break;
        }
        basis.push(w.iter().map(|x| x / beta).collect());
    }

    let hm = h.view((0, 0), (dim, dim)).into_owned();
    let beta_last = h[(dim, dim - 1)].norm();
    let schur = Schur::try_new(hm, 1e-14, 10_000)
        .ok_or_else(|| Error::Eigen("Hessenberg Schur decomposition failed".into()))?;
    let (q, t) = schur.unpack();

    let mut pairs = Vec::new();
    for k in 0..dim {
        let theta = t[(k, k)];
        if theta.norm() < 1e-300 {
            continue;
        }
        // eigenvector of the triangular factor by back substitution
        let mut z = vec![Complex64::new(0.0, 0.0); dim];
        z[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for l in (i + 1)..=k {
                s += t[(i, l)] * z[l];
            }
            let mut d = t[(i, i)] - theta;
            if d.norm() < 1e-14 * theta.norm().max(1e-300) {
                d = Complex64::new(1e-14 * theta.norm(), 0.0);
            }
            z[i] = -s / d;
        }
        let mut y = vec![Complex64::new(0.0, 0.0); dim];
        for i in 0..dim {
            for l in 0..=k {
                y[i] += q[(i, l)] * z[l];
            }
        }
        let ynorm: f64 = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let residual = beta_last * y[dim - 1].norm() / (ynorm * theta.norm());
        if residual > opts.tol {
            continue;
        }
        let mut vec = vec![Complex64::new(0.0, 0.0); n];
        for (i, yi) in y.iter().enumerate() {
            for (v, b) in vec.iter_mut().zip(&basis[i]) {
                *v += *b * *yi;
            }
        }
        let vn = wnorm(weights, &vec);
        for v in vec.iter_mut() {
            *v /= vn;
        }
        pairs.push(EigenPair {
            value: shift + Complex64::new(1.0, 0.0) / theta,
            vector: vec,
            residual,
        });
    }
    pairs.sort_by(|a, b| {
        (a.value - shift)
            .norm()
            .partial_cmp(&(b.value - shift).norm())
            .unwrap()
    });
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::BandMatrix;

    #[test]
    fn finds_eigenvalues_of_tridiagonal() {
        // -2,1 Toeplitz: eigenvalues -2 + 2 cos(k pi/(n+1))
        let n = 80;
        let mut m = BandMatrix::<Complex64>::zeros(n, 1, 1);
        for i in 0..n {
            m.add(i, i, Complex64::new(-2.0, 0.0));
            if i + 1 < n {
                m.add(i, i + 1, Complex64::new(1.0, 0.0));
                m.add(i + 1, i, Complex64::new(1.0, 0.0));
            }
        }
        let shift = Complex64::new(0.01, 0.0);
        let lu = m.shifted(-shift).factor().unwrap();
        let w = vec![1.0; n];
        let start: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + 0.01 * i as f64, 0.0)).collect();
        let pairs = shift_invert(|x| lu.solve(x), shift, &w, &start, &ArnoldiOptions::default()).unwrap();
        let exact = -2.0 + 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((pairs[0].value.re - exact).abs() < 1e-10);
        let av = m.matvec(&pairs[0].vector);
        for (a, v) in av.iter().zip(&pairs[0].vector) {
            assert!((a - pairs[0].value * v).norm() < 1e-7);
        }
    }
}
