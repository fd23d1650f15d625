//! General banded matrices with an LU factorization using partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` layout: column `j` keeps rows
//! `j - kl - ku ..= j + kl`, the extra `kl` super-diagonals hold the fill
//! produced by row interchanges.

use super::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BandMatrix<T: Scalar> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<T>,
}

impl<T: Scalar> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![T::zero(); ldab * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.kl
    }

    pub fn upper(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            T::zero()
        }
    }

    /// Adds `value` to entry `(i, j)`. Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.ab[s] = self.ab[s] + value;
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(self.in_band(i, j));
        let s = self.slot(i, j);
        self.ab[s] = value;
    }

    /// Clears row `i` inside the band.
    pub fn clear_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j);
            self.ab[s] = T::zero();
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for (j, &xj) in x.iter().enumerate() {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            let col = &self.ab[self.slot(lo, j)..=self.slot(hi, j)];
            for (yi, a) in y[lo..=hi].iter_mut().zip(col) {
                *yi = *yi + *a * xj;
            }
        }
        y
    }

    /// Returns `self + alpha * I`.
    pub fn shifted(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.add(i, i, alpha);
        }
        out
    }

    /// Iterates over the stored nonzero entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |j| {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            (lo..=hi).filter_map(move |i| {
                let v = self.ab[self.slot(i, j)];
                if v.modulus() != 0.0 {
                    Some((i, j, v))
                } else {
                    None
                }
            })
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> BandMatrix<U> {
        BandMatrix {
            n: self.n,
            kl: self.kl,
            ku: self.ku,
            ldab: self.ldab,
            ab: self.ab.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn factor(&self) -> Result<BandLu<T>> {
        BandLu::new(self.clone())
    }
}

/// LU factors of a banded matrix.
#[derive(Clone, Debug)]
pub struct BandLu<T: Scalar> {
    m: BandMatrix<T>,
    ipiv: Vec<usize>,
    condition: f64,
}

impl<T: Scalar> BandLu<T> {
    fn new(mut m: BandMatrix<T>) -> Result<Self> {
        let n = m.n;
        let kl = m.kl;
        let kv = m.kl + m.ku;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = -1.0;
            for i in 0..=km {
                let a = m.ab[m.slot(j + i, j)].modulus();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            ipiv[j] = j + p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular {
                    pivot: j,
                    n,
                    condition: f64::INFINITY,
                });
            }
            max_piv = max_piv.max(best);
            min_piv = min_piv.min(best);
            ju = ju.max((j + kv.min(m.ku + p)).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let a = m.slot(j, c);
                    let b = m.slot(j + p, c);
                    m.ab.swap(a, b);
                }
            }
            let inv = T::one() / m.ab[m.slot(j, j)];
            for i in 1..=km {
                let s = m.slot(j + i, j);
                m.ab[s] = m.ab[s] * inv;
            }
            for c in (j + 1)..=ju {
                let t = m.ab[m.slot(j, c)];
                if t.modulus() == 0.0 {
                    continue;
                }
                for i in 1..=km {
                    let l = m.ab[m.slot(j + i, j)];
                    let s = m.slot(j + i, c);
                    m.ab[s] = m.ab[s] - l * t;
                }
            }
        }
        Ok(Self {
            m,
            ipiv,
            condition: max_piv / min_piv,
        })
    }

    /// Pivot-ratio estimate of the condition number (a lower bound in practice).
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn n(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.m.n;
        assert_eq!(b.len(), n);
        let kl = self.m.kl;
        let kv = self.m.kl + self.m.ku;
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj.modulus() == 0.0 {
                continue;
            }
            let km = kl.min(n - 1 - j);
            let s0 = self.m.slot(j, j);
            for (bi, a) in b[j + 1..=j + km].iter_mut().zip(&self.m.ab[s0 + 1..=s0 + km]) {
                *bi = *bi - *a * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] = b[j] / self.m.ab[self.m.slot(j, j)];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            let col = &self.m.ab[self.m.slot(lo, j)..self.m.slot(j, j)];
            for (bi, a) in b[lo..j].iter_mut().zip(col) {
                *bi = *bi - *a * bj;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
