//! Discrete least squares in a Krylov basis `phi(z) * pi_j(z)`.
//!
//! The basis vectors are built by Arnoldi iteration with multiplication by
//! `z` on the sample points, which avoids the ill-conditioned Vandermonde
//! matrix. The monomial coefficients of every `pi_j` are tracked alongside
//! so that fitted polynomials can be returned in the monomial basis.

use crate::algebra::{C64, ZERO};

pub(crate) struct KrylovBasis {
    pts: Vec<C64>,
    vecs: Vec<Vec<C64>>,
    polys: Vec<Vec<C64>>,
    saturated: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl KrylovBasis {
    /// Basis started from `phi` sampled at `pts`; `None` if `phi` vanishes
    /// on every point.
    pub(crate) fn new(pts: Vec<C64>, phi: Vec<C64>) -> Option<Self> {
        let n = norm(&phi);
        if !(n > 0.0 && n.is_finite()) {
            return None;
        }
        let v: Vec<C64> = phi.iter().map(|x| x / n).collect();
        Some(KrylovBasis {
            pts,
            vecs: vec![v],
            polys: vec![vec![C64::new(1.0 / n, 0.0)]],
            saturated: false,
        })
    }

    pub(crate) fn degree(&self) -> usize {
        self.vecs.len() - 1
    }

    /// Extends the basis up to polynomial degree `k` when the sample points
    /// allow it.
    pub(crate) fn extend_to(&mut self, k: usize) {
        while self.degree() < k && !self.saturated {
            let last = self.vecs.last().unwrap();
            let mut v: Vec<C64> = last.iter().zip(&self.pts).map(|(x, z)| x * z).collect();
            let mut p: Vec<C64> = std::iter::once(ZERO)
                .chain(self.polys.last().unwrap().iter().copied())
                .collect();
            let before = norm(&v);
            for _ in 0..2 {
                for (q, pq) in self.vecs.iter().zip(&self.polys) {
                    let t = dot(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= t * qi;
                    }
                    for (pi, c) in p.iter_mut().zip(pq) {
                        *pi -= t * c;
                    }
                }
            }
            let h = norm(&v);
            if !(h > 1e-13 * before) {
                self.saturated = true;
                break;
            }
            self.vecs.push(v.iter().map(|x| x / h).collect());
            self.polys.push(p.iter().map(|x| x / h).collect());
        }
    }

    /// Monomial coefficients of the least-squares `pi` of degree <= `k`
    /// minimising `sum |phi(z_i) pi(z_i) - y_i|^2`.
    pub(crate) fn solve(&self, y: &[C64], k: usize) -> Vec<C64> {
        let used = (k + 1).min(self.vecs.len());
        let mut coeffs = vec![ZERO; used];
        for j in 0..used {
            let a = dot(&self.vecs[j], y);
            for (c, pj) in coeffs.iter_mut().zip(&self.polys[j]) {
                *c += a * pj;
            }
        }
        coeffs
    }
}
