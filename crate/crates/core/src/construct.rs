//! Rational functions that are their own Padé approximants.
//!
//! Every constructor follows the same pattern: a family `R(c, d)` whose
//! Taylor prefix is fixed, a halving search over `(c, d)`, and a choice of
//! `d` away from the roots of `d -> det H_q`, which is a polynomial of degree
//! `q` in `d`. A candidate is accepted once it passes the denominator, sup
//! error, membership and fixed-point checks on the working grid and again on
//! the validation grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{FormalPowerSeries, Polynomial, RationalFunction, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::fit::KrylovBasis;
use crate::linalg;
use crate::pade::{self, PadeOrder, DEFAULT_REL_TOL};
use crate::sets::{self, are_disjoint, bounds, CompactSet, Grid, GridKind};

pub const DEFAULT_MAX_HALVINGS: usize = 60;
/// Fixed-point agreement required between a result and its own `[p/q]`.
pub const FIXED_POINT_TOL: f64 = 1e-8;
/// Above this `q` the determinant polynomial is read off the affine pencil
/// `H0 + d E` instead of being interpolated from samples.
pub const INTERPOLATION_MAX_Q: usize = 8;
/// Relative size below which an interpolated leading coefficient counts as
/// zero.
pub const DEGENERATE_LEADING: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constructor {
    Lemma23,
    Lemma24,
    Lemma25,
    Lemma61,
}

impl Constructor {
    pub fn name(&self) -> &'static str {
        match self {
            Constructor::Lemma23 => "lemma23",
            Constructor::Lemma24 => "lemma24",
            Constructor::Lemma25 => "lemma25",
            Constructor::Lemma61 => "lemma61",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub c: C64,
    pub d: C64,
    pub p: usize,
    pub q: usize,
    pub lambda: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetMethod {
    Interpolation,
    Pencil,
}

/// `d -> det H_q` for a family whose coefficients are affine in `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetInDPoly {
    pub coeffs_in_d: Vec<C64>,
    pub roots: Vec<C64>,
    /// Interpolation: leading coefficient over the largest coefficient in
    /// the variable `d / d0`. Pencil: `|det E|` over its Hadamard bound.
    pub relative_leading: f64,
    pub method: DetMethod,
}

impl DetInDPoly {
    pub fn degree(&self) -> usize {
        self.coeffs_in_d.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs_in_d.last().copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, d: C64) -> C64 {
        self.coeffs_in_d.iter().rev().fold(ZERO, |acc, &c| acc * d + c)
    }
}

/// A constructed rational function. `rational = base + tail`, where `tail`
/// has a zero of order larger than `deg base` at the origin, so the Taylor
/// prefix of `rational` is `base` exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionResult {
    pub constructor: Constructor,
    pub params: ConstructionParams,
    pub rational: RationalFunction,
    pub base: Polynomial,
    pub tail: RationalFunction,
    pub achieved_sup_error: f64,
    pub prefix_preserved_to: i64,
    pub hankel_det: C64,
    pub log_abs_hankel_det: f64,
    pub condition_estimate: f64,
    pub fixed_point_error: f64,
    pub search_iterations: usize,
    pub forbidden_d: Vec<C64>,
    pub det_poly: DetInDPoly,
}

/// Taylor coefficients `0..=n` of `base + tail`, with the prefix taken from
/// `base` verbatim.
pub fn composite_series(base: &Polynomial, tail: &RationalFunction, n: usize) -> FormalPowerSeries {
    let t = tail.series(n);
    let coeffs: Vec<C64> = t
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, &c)| if c == ZERO { base.coeff(k) } else { base.coeff(k) + c })
        .collect();
    FormalPowerSeries::new(coeffs).expect("nonempty")
}

impl ConstructionResult {
    pub fn order(&self) -> PadeOrder {
        PadeOrder::new(self.params.p, self.params.q)
    }

    /// Taylor window up to `p + q`.
    pub fn series(&self) -> FormalPowerSeries {
        self.series_to(self.params.p + self.params.q)
    }

    pub fn series_to(&self, n: usize) -> FormalPowerSeries {
        composite_series(&self.base, &self.tail, n)
    }
}

/// Outcome of the four conclusion checks on a result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConclusionReport {
    pub denominator_min: f64,
    pub sup_error: f64,
    pub prefix_exact: bool,
    pub member: bool,
    pub fixed_point_error: f64,
}

impl ConclusionReport {
    pub fn passed(&self, a: f64) -> bool {
        self.denominator_min > 0.0
            && self.sup_error < a
            && self.prefix_exact
            && self.member
            && self.fixed_point_error < FIXED_POINT_TOL
    }
}

/// `(c0 2^-k, d0 2^-k)` for the first `k` accepted by `check`, with `k`.
pub fn shrink_search<F>(mut check: F, c0: f64, d0: f64, max_halvings: usize) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64, f64) -> bool,
{
    if !(c0 > 0.0 && d0 > 0.0) {
        return Err(Error::InvalidInput("initial scales must be positive".into()));
    }
    for k in 0..=max_halvings {
        let s = 0.5f64.powi(k as i32);
        let (c, d) = (c0 * s, d0 * s);
        if check(c, d) {
            return Ok((c, d, k));
        }
    }
    Err(Error::SearchExhausted { halvings: max_halvings })
}

fn det_sample(f: &FormalPowerSeries, order: PadeOrder) -> Result<(f64, C64)> {
    let m = pade::in_d_pq(f, order, DEFAULT_REL_TOL)?;
    Ok((m.diagnostics.log_abs_det, m.diagnostics.phase))
}

/// Monomial coefficients of the interpolant through `(x_i, y_i)`.
fn newton_to_monomial(x: &[f64], y: &[C64]) -> Vec<C64> {
    let n = x.len();
    let mut dd = y.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (x[i] - x[i - j]);
        }
    }
    let mut c = vec![ZERO; n];
    for i in (0..n).rev() {
        // c <- c * (t - x_i) + dd_i
        for k in (1..n).rev() {
            c[k] = c[k - 1] - c[k] * x[i];
        }
        c[0] = -c[0] * x[i];
        c[0] += dd[i];
    }
    c
}

fn relative_leading(c: &[C64]) -> f64 {
    let max = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        0.0
    } else {
        c.last().map_or(0.0, |x| x.norm()) / max
    }
}

/// Interpolates `d -> det H_q(series_builder(d))` from the samples
/// `d = d0 * (1, 2, ..., q + 1)`.
pub fn det_in_d_poly<F>(series_builder: F, order: PadeOrder, d0: f64) -> Result<DetInDPoly>
where
    F: Fn(C64) -> Result<FormalPowerSeries>,
{
    let q = order.q;
    if q == 0 {
        return Ok(DetInDPoly {
            coeffs_in_d: vec![ONE],
            roots: Vec::new(),
            relative_leading: 1.0,
            method: DetMethod::Interpolation,
        });
    }
    let ts: Vec<f64> = (1..=q + 1).map(|i| i as f64).collect();
    let samples: Vec<(f64, C64)> = ts
        .iter()
        .map(|&t| det_sample(&series_builder(C64::new(d0 * t, 0.0))?, order))
        .collect::<Result<_>>()?;
    // common normalisation keeps tiny determinants representable
    let log_ref = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    if log_ref == f64::NEG_INFINITY {
        return Err(Error::DegenerateInterpolation { q, relative_leading: 0.0 });
    }
    let ys: Vec<C64> = samples
        .iter()
        .map(|&(l, ph)| if l == f64::NEG_INFINITY { ZERO } else { ph * (l - log_ref).exp() })
        .collect();
    let ct = newton_to_monomial(&ts, &ys);
    let rel = relative_leading(&ct);
    if !(rel > DEGENERATE_LEADING) {
        return Err(Error::DegenerateInterpolation { q, relative_leading: rel });
    }
    let roots = linalg::poly_roots(&ct)
        .ok_or(Error::DegenerateInterpolation { q, relative_leading: rel })?
        .into_iter()
        .map(|t| t * d0)
        .collect();
    let coeffs_in_d = ct
        .iter()
        .enumerate()
        .map(|(k, c)| c * (log_ref - k as f64 * d0.ln()).exp())
        .collect();
    Ok(DetInDPoly {
        coeffs_in_d,
        roots,
        relative_leading: rel,
        method: DetMethod::Interpolation,
    })
}

/// `det(H0 + d E)` where `H0` and `E` are the Hankel windows of `s0` and
/// `s1`; roots are the eigenvalues of `-E^{-1} H0`.
pub fn det_in_d_pencil(s0: &FormalPowerSeries, s1: &FormalPowerSeries, order: PadeOrder, d0: f64) -> Result<DetInDPoly> {
    let (p, q) = (order.p, order.q);
    if q == 0 {
        return Ok(DetInDPoly {
            coeffs_in_d: vec![ONE],
            roots: Vec::new(),
            relative_leading: 1.0,
            method: DetMethod::Interpolation,
        });
    }
    s0.require_order(p + q)?;
    s1.require_order(p + q)?;
    let mixed: Vec<C64> = s0
        .coeffs()
        .iter()
        .zip(s1.coeffs())
        .map(|(a, b)| a + b * d0)
        .collect();
    let mixed = FormalPowerSeries::new(mixed)?;
    let degenerate = || Error::DegenerateInterpolation { q, relative_leading: 0.0 };
    let (t, log_m) = pade::balancing_scale(&mixed, order).ok_or_else(degenerate)?;
    let idx = |i: usize, j: usize| p as i64 - q as i64 + 1 + (i + j) as i64;
    let h0 = linalg::CMatrix::from_fn(q, q, |i, j| pade::balanced_coeff(s0, idx(i, j), p, t, log_m));
    // E in the variable tau = d / d0
    let e = linalg::CMatrix::from_fn(q, q, |i, j| pade::balanced_coeff(s1, idx(i, j), p, t, log_m) * d0);
    let (log_e, phase_e) = linalg::log_det(&e);
    if log_e == f64::NEG_INFINITY {
        return Err(degenerate());
    }
    let lu = e.clone().lu();
    let x = lu.solve(&h0).ok_or_else(degenerate)?;
    let taus = linalg::eigenvalues(-x).ok_or_else(degenerate)?;
    // monic polynomial in tau from its roots
    let mut monic = vec![ONE];
    for r in &taus {
        monic.push(ZERO);
        for k in (1..monic.len()).rev() {
            let prev = monic[k - 1];
            monic[k] -= r * prev;
        }
    }
    monic.reverse();
    let hadamard: f64 = (0..q).map(|j| e.column(j).norm()).product();
    let rel = (log_e - hadamard.ln()).exp();
    // leading coefficient in d: det(E) = det(E_tau) m^q / d0^q
    let lead_log = log_e + q as f64 * log_m - q as f64 * d0.ln();
    let coeffs_in_d = monic
        .iter()
        .enumerate()
        .map(|(k, c)| c * phase_e * (lead_log + (q - k) as f64 * d0.ln()).exp())
        .collect();
    Ok(DetInDPoly {
        coeffs_in_d,
        roots: taus.into_iter().map(|t| t * d0).collect(),
        relative_leading: rel,
        method: DetMethod::Pencil,
    })
}

/// A `d` with `|d| <= d_preferred` away from every relevant root, scanning
/// `d_preferred 2^-k e^(i pi j / 7)`.
pub fn avoid_roots(poly: &DetInDPoly, d_preferred: f64) -> Result<C64> {
    let relevant: Vec<C64> = poly
        .roots
        .iter()
        .copied()
        .filter(|r| r.norm() <= 1e6 * d_preferred)
        .collect();
    for k in 0..=40 {
        for j in 0..14 {
            let d = C64::from_polar(d_preferred * 0.5f64.powi(k), PI / 7.0 * j as f64);
            if relevant
                .iter()
                .all(|r| (d - r).norm() > 1e-6 * d_preferred.max(r.norm()))
            {
                return Ok(d);
            }
        }
    }
    Err(Error::NoSafeD)
}

fn deg(p: &Polynomial) -> i64 {
    p.degree_i64()
}

fn order_violation(msg: String) -> Error {
    Error::OrderViolation(msg)
}

/// `exp(log)` clamped into the normal range.
fn clamped_exp(log: f64) -> f64 {
    log.clamp(-700.0, 700.0).exp()
}

fn eval_rational(r: &RationalFunction, z: C64) -> Result<C64> {
    r.eval(z)
}

/// One member of a constructor family.
struct Candidate {
    rational: RationalFunction,
    base: Polynomial,
    tail: RationalFunction,
    c: f64,
    d: C64,
}

/// Everything the generic search needs from a constructor.
struct Family<'a> {
    constructor: Constructor,
    order: PadeOrder,
    lambda: usize,
    prefix_preserved_to: i64,
    /// Set on which the error is measured.
    set: &'a CompactSet,
    a: f64,
    c0: f64,
    d0: f64,
    max_halvings: usize,
    build: Box<dyn Fn(f64, C64) -> Result<Candidate> + 'a>,
    /// Error of the candidate at one point.
    error: PointError<'a>,
    /// Extra structural requirement (exact degrees).
    admissible: Box<dyn Fn(&Candidate) -> bool + 'a>,
}

type PointError<'a> = Box<dyn Fn(&Candidate, C64) -> Result<C64> + 'a>;

fn min_den(r: &RationalFunction, grid: &Grid) -> Result<f64> {
    let mut best = r.den().eval(ZERO).norm();
    for z in grid.iter() {
        r.eval(z).map_err(|_| Error::PoleOnSet { z })?;
        best = best.min(r.den().eval(z).norm());
    }
    Ok(best)
}

fn sup_error(fam: &Family, cand: &Candidate, grid: &Grid) -> Result<f64> {
    let f = |z: C64| (fam.error)(cand, z);
    sets::sup_on(&f, grid)
}

fn det_poly_for(fam: &Family, c: f64, d_pref: f64) -> Result<DetInDPoly> {
    let n = fam.order.p + fam.order.q;
    let series_at = |d: C64| -> Result<FormalPowerSeries> {
        let cand = (fam.build)(c, d)?;
        Ok(composite_series(&cand.base, &cand.tail, n))
    };
    if fam.order.q <= INTERPOLATION_MAX_Q {
        match det_in_d_poly(series_at, fam.order, d_pref) {
            // roots far outside the sampling scale hide the leading term
            Err(Error::DegenerateInterpolation { .. }) => {}
            other => return other,
        }
    }
    let s0 = series_at(ZERO)?;
    let den = (fam.build)(c, ONE)?.tail.den().clone();
    let s1 = RationalFunction::new(Polynomial::monomial(fam.order.p, ONE), den)?.series(n);
    det_in_d_pencil(&s0, &s1, fam.order, d_pref)
}

fn fixed_point(rational: &RationalFunction, series: &FormalPowerSeries, order: PadeOrder) -> Option<(f64, pade::PadeApproximant)> {
    let approx = pade::pade_solve(series, order).ok()?;
    Some((pade::relative_coeff_error(&approx.value, rational), approx))
}

fn run_search(fam: Family) -> Result<ConstructionResult> {
    let mut found: Option<ConstructionResult> = None;
    let mut only_no_safe_d = true;
    let n = fam.order.p + fam.order.q;
    let mut attempt = |c: f64, d_pref: f64| -> bool {
        let outcome = (|| -> Result<Option<ConstructionResult>> {
            let poly = match det_poly_for(&fam, c, d_pref) {
                Ok(p) => p,
                Err(Error::DegenerateInterpolation { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let d = avoid_roots(&poly, d_pref)?;
            let cand = (fam.build)(c, d)?;
            if !(fam.admissible)(&cand) {
                return Ok(None);
            }
            let eval_grid = fam.set.eval_grid();
            if !(min_den(&cand.rational, eval_grid)? > 0.0) {
                return Ok(None);
            }
            if !(sup_error(&fam, &cand, eval_grid)? < fam.a) {
                return Ok(None);
            }
            let series = composite_series(&cand.base, &cand.tail, n);
            let Some((fp_err, approx)) = fixed_point(&cand.rational, &series, fam.order) else {
                return Ok(None);
            };
            if !(fp_err < FIXED_POINT_TOL) {
                return Ok(None);
            }
            let val_grid = fam.set.validation_grid();
            if !(min_den(&cand.rational, val_grid)? > 0.0) {
                return Ok(None);
            }
            let err = sup_error(&fam, &cand, val_grid)?;
            if !(err < fam.a) {
                return Ok(None);
            }
            Ok(Some(ConstructionResult {
                constructor: fam.constructor,
                params: ConstructionParams {
                    c: C64::new(cand.c, 0.0),
                    d: cand.d,
                    p: fam.order.p,
                    q: fam.order.q,
                    lambda: fam.lambda,
                },
                rational: cand.rational,
                base: cand.base,
                tail: cand.tail,
                achieved_sup_error: err,
                prefix_preserved_to: fam.prefix_preserved_to,
                hankel_det: approx.hankel_det,
                log_abs_hankel_det: approx.log_abs_hankel_det,
                condition_estimate: approx.condition_estimate,
                fixed_point_error: fp_err,
                search_iterations: 0,
                forbidden_d: poly.roots.clone(),
                det_poly: poly,
            }))
        })();
        match outcome {
            Ok(Some(r)) => {
                found = Some(r);
                true
            }
            Ok(None) => {
                only_no_safe_d = false;
                false
            }
            Err(Error::NoSafeD) => false,
            Err(Error::PoleOnSet { .. }) | Err(Error::PoleAtPoint { .. }) => {
                only_no_safe_d = false;
                false
            }
            Err(_) => {
                only_no_safe_d = false;
                false
            }
        }
    };
    match shrink_search(&mut attempt, fam.c0, fam.d0, fam.max_halvings) {
        Ok((_, _, k)) => {
            let mut r = found.expect("accepted candidate is stored");
            r.search_iterations = k;
            Ok(r)
        }
        Err(Error::SearchExhausted { .. }) if only_no_safe_d => Err(Error::NoSafeD),
        Err(e) => Err(e),
    }
}

/// `M`, with a unit fallback for a set concentrated at the origin.
fn radius_bound(set: &CompactSet) -> f64 {
    let m = bounds(set).m;
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

fn check_tolerance(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("tolerance must be positive, got {a}")))
    }
}

/// `1 - (c z)^q`, or `1` when `q = 0`.
fn geometric_den(c: f64, q: usize) -> Polynomial {
    if q == 0 {
        return Polynomial::constant(ONE);
    }
    Polynomial::constant(ONE).sub(&Polynomial::monomial(q, C64::new(c.powi(q as i32), 0.0)))
}

#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub max_halvings: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_halvings: DEFAULT_MAX_HALVINGS,
        }
    }
}

/// `R = P + d z^p / (1 - (c z)^q)` with `sup_K |R - P| < a` and
/// `R = [p/q]_R`. `q = 0` gives the polynomial `P + d z^p`.
pub fn lemma23(p_poly: &Polynomial, k: &CompactSet, a: f64, order: PadeOrder) -> Result<ConstructionResult> {
    lemma23_with(p_poly, k, a, order, SearchLimits::default())
}

pub fn lemma23_with(p_poly: &Polynomial, k: &CompactSet, a: f64, order: PadeOrder, limits: SearchLimits) -> Result<ConstructionResult> {
    check_tolerance(a)?;
    let (p, q) = (order.p, order.q);
    if p as i64 <= deg(p_poly) + q as i64 {
        return Err(order_violation(format!("p = {p} must exceed deg P + q = {}", deg(p_poly) + q as i64)));
    }
    let m = radius_bound(k);
    let fam = Family {
        constructor: Constructor::Lemma23,
        order,
        lambda: 0,
        prefix_preserved_to: deg(p_poly),
        set: k,
        a,
        c0: 1.0 / (2.0 * m),
        d0: clamped_exp((a / 4.0).ln() - p as f64 * m.ln()),
        max_halvings: limits.max_halvings,
        build: Box::new(move |c, d| {
            let den = geometric_den(c, q);
            let dz = Polynomial::monomial(p, d);
            let tail = RationalFunction::new(dz.clone(), den.clone())?;
            let rational = RationalFunction::new(p_poly.mul(&den).add(&dz), den)?;
            Ok(Candidate {
                rational,
                base: p_poly.clone(),
                tail,
                c,
                d,
            })
        }),
        error: Box::new(|cand, z| eval_rational(&cand.tail, z)),
        admissible: Box::new(|_| true),
    };
    run_search(fam)
}

/// `R = (P~ + d z^p) / (1 - (c z)^q)` with `sup_K |R - P~| < a` and
/// `R = [p/q]_R`.
pub fn lemma24(p_tilde: &Polynomial, k: &CompactSet, a: f64, order: PadeOrder) -> Result<ConstructionResult> {
    lemma24_with(p_tilde, k, a, order, SearchLimits::default())
}

pub fn lemma24_with(p_tilde: &Polynomial, k: &CompactSet, a: f64, order: PadeOrder, limits: SearchLimits) -> Result<ConstructionResult> {
    check_tolerance(a)?;
    let (p, q) = (order.p, order.q);
    let g = deg(p_tilde);
    if p as i64 <= g || q as i64 <= g || q == 0 {
        return Err(order_violation(format!("p = {p} and q = {q} must both exceed deg P~ = {g} (and q >= 1)")));
    }
    let m = radius_bound(k);
    let sup_p = sets::sup_norm(|z| Ok(p_tilde.eval(z)), k, GridKind::Validation)?;
    let mut c0 = 1.0 / (2.0 * m);
    if sup_p > 0.0 {
        // keeps (cM)^q sup|P~| below a/4
        c0 = c0.min(clamped_exp(((a / (4.0 * sup_p)).ln()) / q as f64) / m);
    }
    let fam = Family {
        constructor: Constructor::Lemma24,
        order,
        lambda: 0,
        prefix_preserved_to: g,
        set: k,
        a,
        c0,
        d0: clamped_exp((a / 4.0).ln() - p as f64 * m.ln()),
        max_halvings: limits.max_halvings,
        build: Box::new(move |c, d| {
            let den = geometric_den(c, q);
            let dz = Polynomial::monomial(p, d);
            let cq = C64::new(c.powi(q as i32), 0.0);
            let tail_num = p_tilde.shift(q).scale(cq).add(&dz);
            Ok(Candidate {
                rational: RationalFunction::new(p_tilde.add(&dz), den.clone())?,
                base: p_tilde.clone(),
                tail: RationalFunction::new(tail_num, den)?,
                c,
                d,
            })
        }),
        error: Box::new(|cand, z| eval_rational(&cand.tail, z)),
        admissible: Box::new(|_| true),
    };
    run_search(fam)
}

fn inf_with_origin(f: impl Fn(C64) -> C64, set: &CompactSet) -> f64 {
    let mut best = f(ZERO).norm();
    for z in set.validation_grid().iter() {
        best = best.min(f(z).norm());
    }
    best
}

/// `R = A~/B~` with `A~ = (B + c z^q) P + z^lambda A + d z^p`,
/// `B~ = B + c z^q`, approximating `P + z^lambda A/B` on `K`.
#[allow(clippy::too_many_arguments)]
pub fn lemma25(p_poly: &Polynomial, a_poly: &Polynomial, b_poly: &Polynomial, lambda: usize, k: &CompactSet, a: f64, order: PadeOrder) -> Result<ConstructionResult> {
    lemma25_with(p_poly, a_poly, b_poly, lambda, k, a, order, SearchLimits::default())
}

#[allow(clippy::too_many_arguments)]
pub fn lemma25_with(
    p_poly: &Polynomial,
    a_poly: &Polynomial,
    b_poly: &Polynomial,
    lambda: usize,
    k: &CompactSet,
    a: f64,
    order: PadeOrder,
    limits: SearchLimits,
) -> Result<ConstructionResult> {
    check_tolerance(a)?;
    let (p, q) = (order.p, order.q);
    if b_poly.is_zero() || (b_poly.coeff(0) - ONE).norm() > 1e-14 {
        return Err(Error::HypothesisViolation("B(0) must equal 1".into()));
    }
    if lambda == 0 || lambda as i64 <= deg(p_poly) {
        return Err(order_violation(format!("lambda = {lambda} must be positive and exceed deg P = {}", deg(p_poly))));
    }
    if (q as i64) < deg(b_poly) {
        return Err(order_violation(format!("q = {q} must be at least deg B = {}", deg(b_poly))));
    }
    let bound = (lambda as i64 + deg(a_poly)).max(q as i64 + deg(p_poly));
    if p as i64 <= bound {
        return Err(order_violation(format!("p = {p} must exceed max(lambda + deg A, q + deg P) = {bound}")));
    }
    let inf_b = inf_with_origin(|z| b_poly.eval(z), k);
    if !(inf_b > 1e-12) {
        return Err(Error::HypothesisViolation("B vanishes on K or at the origin".into()));
    }
    // the error bounds only involve B on K; the origin matters for safety alone
    let inf_b = sets::inf_abs(|z| Ok(b_poly.eval(z)), k, GridKind::Validation)?;
    let m = radius_bound(k);
    let sup_ratio = sets::sup_norm(
        |z| Ok(z.powu(lambda as u32) * a_poly.eval(z) / b_poly.eval(z)),
        k,
        GridKind::Validation,
    )?;
    let mut log_c0 = (-(2.0 * m).ln()).min(inf_b.ln() - 2f64.ln() - q as f64 * m.ln());
    if sup_ratio > 0.0 {
        log_c0 = log_c0.min((a * inf_b / (8.0 * sup_ratio)).ln() - q as f64 * m.ln());
    }
    let d0 = clamped_exp((a * inf_b / 8.0).ln() - p as f64 * m.ln());
    let zl_a = a_poly.shift(lambda);
    let fam = Family {
        constructor: Constructor::Lemma25,
        order,
        lambda,
        prefix_preserved_to: deg(p_poly),
        set: k,
        a,
        c0: clamped_exp(log_c0),
        d0,
        max_halvings: limits.max_halvings,
        build: Box::new(move |c, d| {
            let b_t = b_poly.add(&Polynomial::monomial(q, C64::new(c, 0.0)));
            let tail_num = zl_a.add(&Polynomial::monomial(p, d));
            let num = b_t.mul(p_poly).add(&tail_num);
            Ok(Candidate {
                rational: RationalFunction::new(num, b_t.clone())?,
                base: p_poly.clone(),
                tail: RationalFunction::new(tail_num, b_t)?,
                c,
                d,
            })
        }),
        error: Box::new(move |cand, z| {
            let target_tail = z.powu(lambda as u32) * a_poly.eval(z) / b_poly.eval(z);
            Ok(eval_rational(&cand.tail, z)? - target_tail)
        }),
        admissible: Box::new(move |cand| {
            cand.rational.num().degree() == Some(p) && cand.rational.den().degree() == Some(q)
        }),
    };
    run_search(fam)
}

/// `R = (A + d z^p) / (B + (c z)^q)` approximating `A/B` on `K ∪ L`.
pub fn lemma61(a_poly: &Polynomial, b_poly: &Polynomial, k: &CompactSet, l: &CompactSet, a: f64, order: PadeOrder) -> Result<ConstructionResult> {
    lemma61_with(a_poly, b_poly, k, l, a, order, SearchLimits::default())
}

#[allow(clippy::too_many_arguments)]
pub fn lemma61_with(
    a_poly: &Polynomial,
    b_poly: &Polynomial,
    k: &CompactSet,
    l: &CompactSet,
    a: f64,
    order: PadeOrder,
    limits: SearchLimits,
) -> Result<ConstructionResult> {
    check_tolerance(a)?;
    let (p, q) = (order.p, order.q);
    if deg(a_poly) >= p as i64 || deg(b_poly) >= q as i64 {
        return Err(order_violation(format!(
            "need deg A < p and deg B < q, got deg A = {}, deg B = {}, p = {p}, q = {q}",
            deg(a_poly),
            deg(b_poly)
        )));
    }
    if b_poly.coeff(0) == ZERO {
        return Err(Error::HypothesisViolation("B(0) must be nonzero".into()));
    }
    let kl = k.union(l);
    let inf_b = inf_with_origin(|z| b_poly.eval(z), &kl);
    if !(inf_b > 1e-12) {
        return Err(Error::HypothesisViolation("B vanishes on K ∪ L".into()));
    }
    let m = radius_bound(&kl);
    let sup_a = sets::sup_norm(|z| Ok(a_poly.eval(z)), &kl, GridKind::Validation)?;
    let mut log_c0 = (-(2.0 * m).ln()).min(((inf_b / 2.0).ln()) / q as f64 - m.ln());
    if sup_a > 0.0 {
        log_c0 = log_c0.min((a * inf_b * inf_b / (8.0 * sup_a)).ln() / q as f64 - m.ln());
    }
    let d0 = clamped_exp((a * inf_b / 8.0).ln() - p as f64 * m.ln());
    let fam_set = kl.clone();
    let fam = Family {
        constructor: Constructor::Lemma61,
        order,
        lambda: 0,
        prefix_preserved_to: -1,
        set: &fam_set,
        a,
        c0: clamped_exp(log_c0),
        d0,
        max_halvings: limits.max_halvings,
        build: Box::new(move |c, d| {
            let b_t = b_poly.add(&Polynomial::monomial(q, C64::new(c.powi(q as i32), 0.0)));
            let num = a_poly.add(&Polynomial::monomial(p, d));
            let r = RationalFunction::new(num, b_t)?;
            Ok(Candidate {
                rational: r.clone(),
                base: Polynomial::zero(),
                tail: r,
                c,
                d,
            })
        }),
        error: Box::new(move |cand, z| Ok(eval_rational(&cand.rational, z)? - a_poly.eval(z) / b_poly.eval(z))),
        admissible: Box::new(|_| true),
    };
    run_search(fam)
}

/// Re-runs the four conclusion checks of a lemma result against the set and
/// the reference function it was asked to approximate.
pub fn check_conclusions<F>(result: &ConstructionResult, set: &CompactSet, prefix: &Polynomial, reference: F) -> Result<ConclusionReport>
where
    F: Fn(C64) -> Result<C64>,
{
    let grid = set.validation_grid();
    let denominator_min = min_den(&result.rational, grid).unwrap_or(0.0);
    let sup_error = sets::sup_on(&|z| Ok(result.rational.eval(z)? - reference(z)?), grid)?;
    let series = result.series();
    let prefix_exact = prefix
        .coeffs()
        .iter()
        .enumerate()
        .all(|(k, c)| series.coeffs().get(k) == Some(c))
        && prefix.coeffs().len() <= series.coeffs().len();
    let (member, fixed_point_error) = match pade::in_d_pq(&series, result.order(), DEFAULT_REL_TOL) {
        Ok(m) if m.member => (
            true,
            fixed_point(&result.rational, &series, result.order()).map_or(f64::INFINITY, |x| x.0),
        ),
        _ => (false, f64::INFINITY),
    };
    Ok(ConclusionReport {
        denominator_min,
        sup_error,
        prefix_exact,
        member,
        fixed_point_error,
    })
}

/// Result of the two-set polynomial fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RungeFit {
    pub p_tilde: Polynomial,
    pub lambda: usize,
    pub pi_degree: usize,
    /// `sup_D |P~ - P|` on the validation grid.
    pub sup_on_d: f64,
    /// `sup_K |P~ - Q|` on the validation grid.
    pub sup_on_k: f64,
    /// Whether the stronger displayed bounds on `Pi` also hold.
    pub pi_bound_on_k: bool,
    pub pi_bound_on_d: bool,
}

fn fit_points(grid: &Grid) -> &[C64] {
    if grid.boundary.is_empty() {
        &grid.interior
    } else {
        &grid.boundary
    }
}

/// `P~ = P + z^lambda Pi` with `sup_D |P~ - P| < eps` and `sup_K |P~ - Q| < eps`.
///
/// `Pi` is the least-squares fit of `(Q - P)/z^lambda` on `K` and of `0` on
/// `D`, sampled on the boundary curves (the residuals are holomorphic, so
/// their maxima sit on the boundary); the degree grows in steps of five.
pub fn runge_fit(
    p_poly: &Polynomial,
    q_poly: &Polynomial,
    k: &CompactSet,
    d: &CompactSet,
    lambda: usize,
    eps: f64,
    degree_cap: usize,
) -> Result<RungeFit> {
    check_tolerance(eps)?;
    if !d.contains_origin() {
        return Err(Error::HypothesisViolation("D must contain the origin".into()));
    }
    if k.contains_origin() || bounds(k).dist_to_origin == 0.0 {
        return Err(Error::HypothesisViolation("K must not contain the origin".into()));
    }
    if !are_disjoint(k, d, 0.0) {
        return Err(Error::HypothesisViolation("K and D must be disjoint".into()));
    }
    if lambda as i64 <= deg(p_poly) {
        return Err(order_violation(format!("lambda = {lambda} must exceed deg P = {}", deg(p_poly))));
    }
    let diff = q_poly.sub(p_poly);
    let (kp, dp) = (fit_points(k.eval_grid()), fit_points(d.eval_grid()));
    let pts: Vec<C64> = kp.iter().chain(dp).copied().collect();
    let y: Vec<C64> = kp
        .iter()
        .map(|&z| diff.eval(z))
        .chain(dp.iter().map(|_| ZERO))
        .collect();
    let phi: Vec<C64> = pts.iter().map(|z| z.powu(lambda as u32)).collect();
    let mut basis = KrylovBasis::new(pts, phi).ok_or_else(|| Error::HypothesisViolation("degenerate sample".into()))?;
    let (mut best_d, mut best_k) = (f64::INFINITY, f64::INFINITY);
    let zl = |z: C64| z.powu(lambda as u32);
    let mut deg_pi = 0;
    loop {
        basis.extend_to(deg_pi);
        let pi = Polynomial::new(basis.solve(&y, deg_pi));
        let on_d = |z: C64| Ok(zl(z) * pi.eval(z));
        let on_k = |z: C64| Ok(zl(z) * pi.eval(z) - diff.eval(z));
        let (ed, ek) = (sets::sup_on(&on_d, d.eval_grid())?, sets::sup_on(&on_k, k.eval_grid())?);
        if ed < eps && ek < eps {
            let (vd, vk) = (sets::sup_on(&on_d, d.validation_grid())?, sets::sup_on(&on_k, k.validation_grid())?);
            if vd < eps && vk < eps {
                let mk = bounds(k).m;
                let rd = bounds(d).m;
                let pi_k = sets::sup_on(&|z: C64| Ok(pi.eval(z) - diff.eval(z) / zl(z)), k.validation_grid())?;
                let pi_d = sets::sup_on(&|z: C64| Ok(pi.eval(z)), d.validation_grid())?;
                return Ok(RungeFit {
                    p_tilde: p_poly.add(&pi.shift(lambda)),
                    lambda,
                    pi_degree: pi.degree().unwrap_or(0),
                    sup_on_d: vd,
                    sup_on_k: vk,
                    pi_bound_on_k: pi_k < eps / mk.powi(lambda as i32),
                    pi_bound_on_d: pi_d < eps / rd.powi(lambda as i32),
                });
            }
            best_d = best_d.min(vd);
            best_k = best_k.min(vk);
        } else if ed.max(ek) < best_d.max(best_k) {
            best_d = ed;
            best_k = ek;
        }
        if deg_pi + 5 > degree_cap {
            return Err(Error::DegreeCapExceeded {
                cap: degree_cap,
                best_d,
                best_k,
            });
        }
        deg_pi += 5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{sample, Shape};

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn disk(c: C64, r: f64) -> CompactSet {
        sample(&Shape::disk(c, r), None).unwrap()
    }

    #[test]
    fn shrink_search_examples() {
        assert_eq!(shrink_search(|_, _| true, 1.0, 2.0, 10).unwrap(), (1.0, 2.0, 0));
        let (c, _, k) = shrink_search(|c, _| c * 4.0 < 1.0, 1.0, 1.0, 10).unwrap();
        assert_eq!(k, 3);
        assert_eq!(c, 0.125);
        assert_eq!(shrink_search(|_, _| false, 1.0, 1.0, 10), Err(Error::SearchExhausted { halvings: 10 }));
    }

    #[test]
    fn det_poly_examples() {
        let constant = det_in_d_poly(|_| FormalPowerSeries::from_real(&[1.0]), PadeOrder::new(0, 0), 1.0).unwrap();
        assert_eq!(constant.coeffs_in_d, vec![ONE]);
        // a_p = d so that the 1x1 Hankel determinant is d
        let lin = det_in_d_poly(
            |d| FormalPowerSeries::new(vec![ONE, ONE, d, ZERO]),
            PadeOrder::new(2, 1),
            1.0,
        )
        .unwrap();
        assert!(lin.coeffs_in_d[0].norm() < 1e-14);
        assert!((lin.coeffs_in_d[1] - ONE).norm() < 1e-14);
    }

    #[test]
    fn det_poly_matches_direct_determinants() {
        let p_poly = Polynomial::from_real(&[1.0, 0.5]);
        let order = PadeOrder::new(5, 2);
        let (c, d0) = (0.2, 0.3);
        let series = |d: C64| {
            let den = geometric_den(c, 2);
            let tail = RationalFunction::new(Polynomial::monomial(5, d), den).unwrap();
            Ok(composite_series(&p_poly, &tail, 7))
        };
        let poly = det_in_d_poly(series, order, d0).unwrap();
        assert_eq!(poly.degree(), 2);
        for k in 0..7 {
            let d = C64::from_polar(0.1 + 0.2 * k as f64, 0.7 * k as f64);
            let direct = pade::hankel_det(&series(d).unwrap(), order).unwrap();
            assert!((poly.eval(d) - direct).norm() < 1e-8 * (1.0 + direct.norm()));
        }
        let s0 = series(ZERO).unwrap();
        let s1 = RationalFunction::new(Polynomial::monomial(5, ONE), geometric_den(c, 2)).unwrap().series(7);
        let pencil = det_in_d_pencil(&s0, &s1, order, d0).unwrap();
        for (a, b) in pencil.coeffs_in_d.iter().zip(&poly.coeffs_in_d) {
            assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn avoid_roots_examples() {
        let lin = DetInDPoly {
            coeffs_in_d: vec![ZERO, ONE],
            roots: vec![ZERO],
            relative_leading: 1.0,
            method: DetMethod::Interpolation,
        };
        let d = avoid_roots(&lin, 1.0).unwrap();
        assert!(d.norm() <= 1.0 && d.norm() > 1e-6);
        let one = DetInDPoly {
            coeffs_in_d: vec![ONE],
            roots: vec![],
            relative_leading: 1.0,
            method: DetMethod::Interpolation,
        };
        assert_eq!(avoid_roots(&one, 0.5).unwrap(), re(0.5));
        let two = DetInDPoly {
            coeffs_in_d: vec![re(0.125), re(-0.75), ONE],
            roots: vec![re(0.5), re(0.25)],
            relative_leading: 1.0,
            method: DetMethod::Interpolation,
        };
        let d = avoid_roots(&two, 0.5).unwrap();
        assert!((d - re(0.5)).norm() > 1e-6 && (d - re(0.25)).norm() > 1e-6);
    }

    fn assert_fixed_point(r: &ConstructionResult) {
        let approx = pade::pade_solve(&r.series(), r.order()).unwrap();
        assert!(pade::relative_coeff_error(&approx.value, &r.rational) < FIXED_POINT_TOL);
    }

    #[test]
    fn lemma23_examples() {
        let one = Polynomial::from_real(&[1.0]);
        let k = disk(re(3.0), 1.0);
        let r = lemma23(&one, &k, 0.1, PadeOrder::new(3, 1)).unwrap();
        assert!(r.achieved_sup_error < 0.1);
        assert_fixed_point(&r);
        assert!(matches!(lemma23(&one, &k, 0.1, PadeOrder::new(1, 1)), Err(Error::OrderViolation(_))));
        let z = Polynomial::from_real(&[0.0, 1.0]);
        let pt = sample(&Shape::points(vec![re(2.0)]), None).unwrap();
        let r = lemma23(&z, &pt, 1e-6, PadeOrder::new(5, 2)).unwrap();
        assert!((r.rational.eval(re(2.0)).unwrap() - re(2.0)).norm() < 1e-6);
    }

    #[test]
    fn lemma24_examples() {
        let p = Polynomial::from_real(&[1.0, 1.0]);
        let r = lemma24(&p, &disk(re(3.0), 1.0), 0.05, PadeOrder::new(4, 4)).unwrap();
        let rep = check_conclusions(&r, &disk(re(3.0), 1.0), &p, |z| Ok(p.eval(z))).unwrap();
        assert!(rep.passed(0.05), "{rep:?}");
        assert!(matches!(lemma24(&p, &disk(re(3.0), 1.0), 0.05, PadeOrder::new(1, 4)), Err(Error::OrderViolation(_))));
        let one = Polynomial::from_real(&[1.0]);
        let pt = sample(&Shape::points(vec![re(2.0)]), None).unwrap();
        let r = lemma24(&one, &pt, 1e-8, PadeOrder::new(2, 2)).unwrap();
        assert!((r.rational.eval(re(2.0)).unwrap() - ONE).norm() < 1e-8);
    }

    #[test]
    fn lemma25_examples() {
        let one = Polynomial::from_real(&[1.0]);
        let b = Polynomial::from_real(&[1.0, -0.1]);
        let k = sample(&Shape::annulus(ZERO, 2.0, 3.0), None).unwrap();
        let r = lemma25(&one, &one, &b, 1, &k, 0.01, PadeOrder::new(6, 2)).unwrap();
        let rep = check_conclusions(&r, &k, &one, |z| Ok(1.0 + z / (1.0 - z / 10.0))).unwrap();
        assert!(rep.passed(0.01), "{rep:?}");
        assert_eq!(r.rational.num().degree(), Some(6));
        assert_eq!(r.rational.den().degree(), Some(2));
        let b2 = Polynomial::from_real(&[2.0, 1.0]);
        assert!(matches!(lemma25(&one, &one, &b2, 1, &k, 0.01, PadeOrder::new(6, 2)), Err(Error::HypothesisViolation(_))));
        assert!(matches!(lemma25(&one, &one, &b, 0, &k, 0.01, PadeOrder::new(6, 2)), Err(Error::OrderViolation(_))));
    }

    #[test]
    fn lemma61_examples() {
        let one = Polynomial::from_real(&[1.0]);
        let b = Polynomial::from_real(&[1.0, -0.1]);
        let (k, l) = (disk(re(5.0), 1.0), disk(ZERO, 1.0));
        let r = lemma61(&one, &b, &k, &l, 0.01, PadeOrder::new(3, 3)).unwrap();
        assert!(r.achieved_sup_error < 0.01);
        assert_fixed_point(&r);
        assert!(matches!(lemma61(&Polynomial::from_real(&[1.0, 1.0, 1.0, 1.0]), &b, &k, &l, 0.01, PadeOrder::new(3, 3)), Err(Error::OrderViolation(_))));
        let r = lemma61(&one, &one, &disk(re(3.0), 0.5), &disk(re(-3.0), 0.5), 0.5, PadeOrder::new(2, 2)).unwrap();
        assert!(r.achieved_sup_error < 0.5);
    }

    #[test]
    fn runge_examples() {
        let zero = Polynomial::zero();
        let one = Polynomial::from_real(&[1.0]);
        let (k, d) = (disk(re(5.0), 1.0), disk(ZERO, 1.0));
        let fit = runge_fit(&zero, &one, &k, &d, 1, 0.1, 80).unwrap();
        assert!(fit.sup_on_d < 0.1 && fit.sup_on_k < 0.1);
        let p = Polynomial::from_real(&[0.5, -1.0]);
        let fit = runge_fit(&p, &p, &k, &d, 2, 1e-3, 80).unwrap();
        assert_eq!(fit.p_tilde.truncate(1), p);
        assert!(matches!(runge_fit(&zero, &one, &d, &d, 1, 0.1, 80), Err(Error::HypothesisViolation(_))));
    }
}
