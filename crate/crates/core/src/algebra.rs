//! Polynomials, rational functions and truncated power series with
//! double-precision complex coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative size below which a coefficient produced by cancellation in a sum
/// is treated as rounding noise.
pub const CANCELLATION_TOL: f64 = 1e-14;

/// Relative pole tolerance used by [`RationalFunction::eval`].
pub const POLE_TOL: f64 = 1e-12;

pub(crate) fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Polynomial `sum_v coeffs[v] z^v`. The stored coefficient vector never has
/// an exactly-zero trailing entry; the empty vector is the zero polynomial.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl TryFrom<Vec<C64>> for Polynomial {
    type Error = Error;
    fn try_from(coeffs: Vec<C64>) -> Result<Self> {
        Polynomial::try_new(coeffs)
    }
}

impl From<Polynomial> for Vec<C64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    /// Builds a polynomial, dropping exactly-zero trailing coefficients.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    /// Like [`Polynomial::new`] but rejects NaN or infinite coefficients.
    pub fn try_new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.iter().all(|c| is_finite(*c)) {
            Ok(Self::new(coeffs))
        } else {
            Err(Error::NonFinite("polynomial coefficients"))
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `c z^k`
    pub fn monomial(k: usize, c: C64) -> Self {
        let mut coeffs = vec![ZERO; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Coefficient of `z^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to -1, convenient for the
    /// order inequalities of the constructors.
    pub fn degree_i64(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `sum |c_v| |z|^v`, the natural scale of the rounding error in `eval`.
    pub fn eval_abs(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Multiplies by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![ZERO; k];
        coeffs.extend_from_slice(&self.coeffs);
        Polynomial { coeffs }
    }

    /// Partial sum `sum_{v<=k} c_v z^v`.
    pub fn truncate(&self, k: usize) -> Self {
        Self::new(self.coeffs.iter().take(k + 1).copied().collect())
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let a = self.coeff(k);
            let b = other.coeff(k) * sign;
            out.push((a + b, a.norm() + b.norm()));
        }
        // trailing coefficients that are pure cancellation noise are dropped
        while let Some(&(c, scale)) = out.last() {
            if c == ZERO || c.norm() <= CANCELLATION_TOL * scale {
                out.pop();
            } else {
                break;
            }
        }
        Polynomial {
            coeffs: out.into_iter().map(|(c, _)| c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Re-expands the polynomial, given in powers of `(z - from)`, in powers
    /// of `(z - to)`.
    pub fn recenter(&self, from: C64, to: C64) -> Self {
        let h = to - from;
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division by (w - h)
        for i in 0..n {
            for k in (i..n - 1).rev() {
                let t = c[k + 1] * h;
                c[k] += t;
            }
        }
        Self::new(c)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-ONE)
    }
}

pub fn poly_eval(p: &Polynomial, z: C64) -> C64 {
    p.eval(z)
}

pub fn poly_add(a: &Polynomial, b: &Polynomial) -> Polynomial {
    a.add(b)
}

pub fn poly_mul(a: &Polynomial, b: &Polynomial) -> Polynomial {
    a.mul(b)
}

pub fn poly_scale(a: &Polynomial, s: C64) -> Polynomial {
    a.scale(s)
}

pub fn recenter(p: &Polynomial, from: C64, to: C64) -> Polynomial {
    p.recenter(from, to)
}

/// `num/den` with `den(0) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

#[derive(Deserialize)]
struct RawRational {
    num: Polynomial,
    den: Polynomial,
}

impl<'de> Deserialize<'de> for RationalFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawRational::deserialize(d)?;
        RationalFunction::new(raw.num, raw.den).map_err(serde::de::Error::custom)
    }
}

impl RationalFunction {
    /// Normalizes so that the denominator has constant term exactly 1.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        let d0 = den.coeff(0);
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        if d0 == ZERO {
            return Err(Error::InvalidInput(
                "denominator vanishes at the origin".into(),
            ));
        }
        if d0 == ONE {
            return Ok(RationalFunction { num, den });
        }
        let inv = ONE / d0;
        let mut den = den.scale(inv);
        den.coeffs[0] = ONE;
        Ok(RationalFunction {
            num: num.scale(inv),
            den,
        })
    }

    pub fn from_polynomial(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::constant(ONE),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn pole_tolerance(&self, z: C64) -> f64 {
        let q = self.den.degree().unwrap_or(0) as i32;
        POLE_TOL * (1.0 + z.norm()).powi(q)
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let d = self.den.eval(z);
        if d.norm() < self.pole_tolerance(z) {
            return Err(Error::PoleAtPoint { z, den_abs: d.norm() });
        }
        Ok(self.num.eval(z) / d)
    }

    /// Taylor coefficients `b_0..b_n` by recursive long division.
    pub fn series(&self, n: usize) -> FormalPowerSeries {
        let d = self.den.coeffs();
        let mut b: Vec<C64> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = self.num.coeff(k);
            for j in 1..=k.min(d.len().saturating_sub(1)) {
                acc -= d[j] * b[k - j];
            }
            b.push(acc);
        }
        FormalPowerSeries {
            coeffs: b,
            center: ZERO,
        }
    }
}

pub fn rational_eval(r: &RationalFunction, z: C64) -> Result<C64> {
    r.eval(z)
}

pub fn series_of_rational(r: &RationalFunction, order: usize) -> FormalPowerSeries {
    r.series(order)
}

/// Finite window `a_0..a_N` of a power series centred at `center`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormalPowerSeries {
    coeffs: Vec<C64>,
    center: C64,
}

#[derive(Deserialize)]
struct RawSeries {
    coeffs: Vec<C64>,
    #[serde(default)]
    center: C64,
}

impl<'de> Deserialize<'de> for FormalPowerSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSeries::deserialize(d)?;
        FormalPowerSeries::with_center(raw.coeffs, raw.center).map_err(serde::de::Error::custom)
    }
}

impl FormalPowerSeries {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        Self::with_center(coeffs, ZERO)
    }

    pub fn with_center(coeffs: Vec<C64>, center: C64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("a series needs at least a_0".into()));
        }
        if !coeffs.iter().all(|c| is_finite(*c)) || !is_finite(center) {
            return Err(Error::NonFinite("series coefficients"));
        }
        Ok(FormalPowerSeries { coeffs, center })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Result<C64> {
        self.coeffs
            .get(k)
            .copied()
            .ok_or(Error::TruncationExceeded {
                index: k,
                order: self.truncation_order(),
            })
    }

    /// `a_k`, with `a_k = 0` for negative `k`.
    pub fn coeff_signed(&self, k: i64) -> Result<C64> {
        if k < 0 {
            Ok(ZERO)
        } else {
            self.coeff(k as usize)
        }
    }

    pub fn require_order(&self, n: usize) -> Result<()> {
        if n > self.truncation_order() {
            Err(Error::TruncationExceeded {
                index: n,
                order: self.truncation_order(),
            })
        } else {
            Ok(())
        }
    }

    /// `S_k`; the zero polynomial for negative `k`.
    pub fn partial_sum(&self, k: i64) -> Result<Polynomial> {
        if k < 0 {
            return Ok(Polynomial::zero());
        }
        let k = k as usize;
        self.require_order(k)?;
        Ok(Polynomial::new(self.coeffs[..=k].to_vec()))
    }

    pub fn truncated(&self, n: usize) -> Result<Self> {
        self.require_order(n)?;
        Ok(FormalPowerSeries {
            coeffs: self.coeffs[..=n].to_vec(),
            center: self.center,
        })
    }

    pub fn max_abs_coeff(&self, upto: usize) -> f64 {
        self.coeffs
            .iter()
            .take(upto + 1)
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

pub fn partial_sum(f: &FormalPowerSeries, k: i64) -> Result<Polynomial> {
    f.partial_sum(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Polynomial::from_real(&[1.0, 0.0, 1.0]).eval(c(2.0)), c(5.0));
        assert_eq!(Polynomial::zero().eval(C64::new(1.0, 7.0)), ZERO);
        let z = C64::new(3.0, 4.0);
        assert_eq!(Polynomial::from_real(&[0.0, 1.0]).eval(z), z);
    }

    #[test]
    fn arithmetic_examples() {
        let a = Polynomial::from_real(&[1.0, 1.0]);
        let b = Polynomial::from_real(&[1.0, -1.0]);
        assert_eq!(poly_mul(&a, &b), Polynomial::from_real(&[1.0, 0.0, -1.0]));
        assert_eq!(poly_add(&a, &Polynomial::zero()), a);
        assert_eq!(
            poly_scale(&Polynomial::from_real(&[2.0, 4.0]), c(0.5)),
            Polynomial::from_real(&[1.0, 2.0])
        );
        assert_eq!(a.sub(&a), Polynomial::zero());
    }

    #[test]
    fn tiny_genuine_coefficients_survive() {
        let p = Polynomial::from_real(&[1.0]).add(&Polynomial::monomial(9, c(1e-30)));
        assert_eq!(p.degree(), Some(9));
    }

    #[test]
    fn rational_examples() {
        let g = RationalFunction::new(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[1.0, -1.0])).unwrap();
        assert!((g.eval(c(0.5)).unwrap() - c(2.0)).norm() < 1e-15);
        assert!(matches!(g.eval(c(1.0)), Err(Error::PoleAtPoint { .. })));
        let r = RationalFunction::from_polynomial(Polynomial::from_real(&[1.0, 1.0]));
        assert_eq!(r.eval(C64::new(0.0, 1.0)).unwrap(), C64::new(1.0, 1.0));
    }

    #[test]
    fn normalization_divides_by_constant_term() {
        let r = RationalFunction::new(Polynomial::from_real(&[2.0]), Polynomial::from_real(&[2.0, 1.0])).unwrap();
        assert_eq!(r.den().coeff(0), ONE);
        assert_eq!(r.num().coeff(0), ONE);
        assert!(RationalFunction::new(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn series_examples() {
        let g = RationalFunction::new(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[1.0, -1.0])).unwrap();
        assert_eq!(g.series(4).coeffs(), &[c(1.0); 5]);
        let r = RationalFunction::from_polynomial(Polynomial::from_real(&[1.0, 1.0]));
        assert_eq!(r.series(3).coeffs(), &[c(1.0), c(1.0), ZERO, ZERO]);
        let sq = RationalFunction::new(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[1.0, -2.0, 1.0])).unwrap();
        assert_eq!(sq.series(3).coeffs(), &[c(1.0), c(2.0), c(3.0), c(4.0)]);
    }

    #[test]
    fn partial_sum_examples() {
        let f = FormalPowerSeries::from_real(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.partial_sum(1).unwrap(), Polynomial::from_real(&[1.0, 2.0]));
        assert_eq!(f.partial_sum(-5).unwrap(), Polynomial::zero());
        assert!(matches!(f.partial_sum(7), Err(Error::TruncationExceeded { .. })));
        assert!(f.coeff(3).is_err());
    }

    #[test]
    fn recenter_examples() {
        let z = Polynomial::from_real(&[0.0, 1.0]);
        assert_eq!(z.recenter(ZERO, ONE), Polynomial::from_real(&[1.0, 1.0]));
        let five = Polynomial::from_real(&[5.0]);
        assert_eq!(five.recenter(ZERO, C64::new(2.0, -3.0)), five);
        let z2 = Polynomial::from_real(&[0.0, 0.0, 1.0]);
        assert_eq!(z2.recenter(ZERO, ONE), Polynomial::from_real(&[1.0, 2.0, 1.0]));
    }

    #[test]
    fn json_shapes() {
        let r = RationalFunction::new(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[1.0, -1.0])).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"num":[[1.0,0.0]],"den":[[1.0,0.0],[-1.0,0.0]]}"#);
        let f: FormalPowerSeries = serde_json::from_str(r#"{"coeffs":[[1,0],[2,0]]}"#).unwrap();
        assert_eq!(f.center(), ZERO);
        assert!(serde_json::from_str::<FormalPowerSeries>(r#"{"coeffs":[]}"#).is_err());
    }
}
