//! Hankel membership test and Padé approximants `[p/q]_f`.

use serde::{Deserialize, Serialize};

use crate::algebra::{FormalPowerSeries, Polynomial, RationalFunction, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::linalg;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const JACOBI_CAP: usize = 4;
pub const ILL_CONDITIONED: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PadeOrder {
    pub p: usize,
    pub q: usize,
}

impl PadeOrder {
    pub fn new(p: usize, q: usize) -> Self {
        PadeOrder { p, q }
    }

    /// Index of the Taylor coefficient at Hankel position `(i, j)`.
    fn hankel_index(&self, i: usize, j: usize) -> i64 {
        self.p as i64 - self.q as i64 + 1 + (i + j) as i64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HankelMatrix {
    pub entries: Vec<Vec<C64>>,
    pub source_order: PadeOrder,
}

/// What the membership test saw. Logs are natural logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HankelDiagnostics {
    pub det: C64,
    pub log_abs_det: f64,
    /// `det / |det|`, kept separately because `det` may underflow.
    pub phase: C64,
    pub threshold: f64,
    pub log_threshold: f64,
    /// Variable scaling `z -> s z` under which the test was evaluated.
    pub scale: f64,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub diagnostics: HankelDiagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PadeApproximant {
    pub order: PadeOrder,
    pub value: RationalFunction,
    pub hankel_det: C64,
    pub log_abs_hankel_det: f64,
    pub condition_estimate: f64,
}

impl PadeApproximant {
    pub fn ill_conditioned(&self) -> bool {
        !(self.condition_estimate <= ILL_CONDITIONED)
    }
}

#[derive(Serialize, Deserialize)]
struct PadeJson {
    p: usize,
    q: usize,
    num: Polynomial,
    den: Polynomial,
    hankel_det: C64,
    log_abs_hankel_det: f64,
    cond: f64,
}

impl Serialize for PadeApproximant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PadeJson {
            p: self.order.p,
            q: self.order.q,
            num: self.value.num().clone(),
            den: self.value.den().clone(),
            hankel_det: self.hankel_det,
            log_abs_hankel_det: self.log_abs_hankel_det,
            cond: self.condition_estimate,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PadeApproximant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PadeJson::deserialize(d)?;
        let value = RationalFunction::new(raw.num, raw.den).map_err(serde::de::Error::custom)?;
        Ok(PadeApproximant {
            order: PadeOrder::new(raw.p, raw.q),
            value,
            hankel_det: raw.hankel_det,
            log_abs_hankel_det: raw.log_abs_hankel_det,
            condition_estimate: raw.cond,
        })
    }
}

fn check_truncation(f: &FormalPowerSeries, order: PadeOrder) -> Result<()> {
    f.require_order(order.p + order.q)
}

pub fn hankel_matrix(f: &FormalPowerSeries, order: PadeOrder) -> Result<HankelMatrix> {
    check_truncation(f, order)?;
    let q = order.q;
    let mut entries = vec![vec![ZERO; q]; q];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = f.coeff_signed(order.hankel_index(i, j))?;
        }
    }
    Ok(HankelMatrix {
        entries,
        source_order: order,
    })
}

/// Scaling of the independent variable that balances the Hankel entries.
///
/// Under `z -> s z` the entry `a_v` becomes `a_v s^(v-p)` up to a factor
/// that leaves the determinant unchanged. `t = ln s` is chosen to minimise
/// the largest scaled entry; the objective is convex and piecewise linear
/// in `t`. Returns `(t, ln of the minimal largest entry)`.
pub(crate) fn balancing_scale(f: &FormalPowerSeries, order: PadeOrder) -> Option<(f64, f64)> {
    let (p, q) = (order.p as i64, order.q as i64);
    let lines: Vec<(f64, f64)> = (p - q + 1..=p + q - 1)
        .filter(|&v| v >= 0)
        .filter_map(|v| {
            let a = f.coeffs()[v as usize].norm();
            (a > 0.0).then(|| (a.ln(), (v - p) as f64))
        })
        .collect();
    if lines.is_empty() {
        return None;
    }
    let objective = |t: f64| {
        lines
            .iter()
            .map(|&(ln_a, k)| ln_a + k * t)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (mut lo, mut hi) = (-2000.0_f64, 2000.0_f64);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective(m1) <= objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_min = 0.5 * (lo + hi);
    let f_min = objective(t_min);
    // the minimiser may be a flat segment; take its point closest to t = 0
    let flat = |t: f64| objective(t) <= f_min + 1e-12 * (1.0 + f_min.abs());
    let t = if flat(0.0) {
        0.0
    } else {
        let (mut inside, mut outside) = (t_min, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if flat(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    Some((t, objective(t)))
}

/// `a_v s^(v-p) / m` with the balancing scale: every entry of the balanced
/// Hankel window has modulus at most one.
pub(crate) fn balanced_coeff(f: &FormalPowerSeries, v: i64, p: usize, t: f64, log_m: f64) -> C64 {
    if v < 0 {
        return ZERO;
    }
    let a = f.coeffs()[v as usize];
    let r = a.norm();
    if r == 0.0 {
        return ZERO;
    }
    a / r * (r.ln() + (v - p as i64) as f64 * t - log_m).exp()
}

/// Balanced matrix in Toeplitz orientation, `T[k][j] = c_(p+k-j)` for
/// `k, j = 1..q`. Its determinant equals the Hankel determinant divided by
/// `m^q`, times the column-reversal sign.
fn balanced_toeplitz(f: &FormalPowerSeries, order: PadeOrder, t: f64, log_m: f64) -> linalg::CMatrix {
    let (p, q) = (order.p as i64, order.q);
    linalg::CMatrix::from_fn(q, q, |k, j| {
        balanced_coeff(f, p + k as i64 - j as i64, order.p, t, log_m)
    })
}

fn reversal_sign(q: usize) -> f64 {
    if (q * q.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Membership in `D_{p,q}`.
///
/// The determinant is compared with `rel_tol * m^q`, where `m` is the
/// largest Hankel entry after the balancing change of variable. The
/// determinant itself is invariant under that change; the reference size is
/// the smallest one over all rescalings, so every series accepted by the
/// unscaled comparison is accepted here as well.
pub fn in_d_pq(f: &FormalPowerSeries, order: PadeOrder, rel_tol: f64) -> Result<Membership> {
    check_truncation(f, order)?;
    let q = order.q;
    if q == 0 {
        return Ok(Membership {
            member: true,
            diagnostics: HankelDiagnostics {
                det: ONE,
                log_abs_det: 0.0,
                phase: ONE,
                threshold: rel_tol,
                log_threshold: rel_tol.ln(),
                scale: 1.0,
                rel_tol,
            },
        });
    }
    let Some((t, log_m)) = balancing_scale(f, order) else {
        return Ok(Membership {
            member: false,
            diagnostics: HankelDiagnostics {
                det: ZERO,
                log_abs_det: f64::NEG_INFINITY,
                phase: ZERO,
                threshold: 0.0,
                log_threshold: f64::NEG_INFINITY,
                scale: 1.0,
                rel_tol,
            },
        });
    };
    let (log_abs, phase) = linalg::log_det(&balanced_toeplitz(f, order, t, log_m));
    let log_abs_det = log_abs + q as f64 * log_m;
    let phase = phase * reversal_sign(q);
    let log_threshold = rel_tol.ln() + q as f64 * log_m;
    Ok(Membership {
        member: log_abs_det > log_threshold,
        diagnostics: HankelDiagnostics {
            det: linalg::det_from_log(log_abs_det, phase),
            log_abs_det,
            phase,
            threshold: log_threshold.exp(),
            log_threshold,
            scale: t.exp(),
            rel_tol,
        },
    })
}

pub fn hankel_det(f: &FormalPowerSeries, order: PadeOrder) -> Result<C64> {
    Ok(in_d_pq(f, order, DEFAULT_REL_TOL)?.diagnostics.det)
}

fn not_in_dpq(order: PadeOrder, d: &HankelDiagnostics) -> Error {
    Error::NotInDpq {
        p: order.p,
        q: order.q,
        log_abs_det: d.log_abs_det,
        log_threshold: d.log_threshold,
    }
}

pub fn pade_solve(f: &FormalPowerSeries, order: PadeOrder) -> Result<PadeApproximant> {
    pade_solve_with(f, order, DEFAULT_REL_TOL)
}

/// `[p/q]_f` from the Toeplitz system for the denominator and a convolution
/// for the numerator. The system is solved in balanced variables.
pub fn pade_solve_with(f: &FormalPowerSeries, order: PadeOrder, rel_tol: f64) -> Result<PadeApproximant> {
    let m = in_d_pq(f, order, rel_tol)?;
    if !m.member {
        return Err(not_in_dpq(order, &m.diagnostics));
    }
    let (p, q) = (order.p, order.q);
    let a = f.coeffs();
    let (den, cond) = if q == 0 {
        (vec![ONE], 1.0)
    } else {
        let (t, log_m) = balancing_scale(f, order).expect("member implies a nonzero window");
        let mat = balanced_toeplitz(f, order, t, log_m);
        let rhs: Vec<C64> = (1..=q)
            .map(|k| -balanced_coeff(f, (p + k) as i64, p, t, log_m))
            .collect();
        let e = linalg::solve(&mat, &rhs).ok_or_else(|| not_in_dpq(order, &m.diagnostics))?;
        let mut den = vec![ONE];
        for (j, ej) in e.iter().enumerate() {
            den.push(ej * (-((j + 1) as f64) * t).exp());
        }
        (den, linalg::condition_1(&mat))
    };
    let num: Vec<C64> = (0..=p)
        .map(|k| (0..=k.min(q)).map(|j| den[j] * a[k - j]).sum())
        .collect();
    let value = RationalFunction::new(Polynomial::new(num), Polynomial::new(den))?;
    Ok(PadeApproximant {
        order,
        value,
        hankel_det: m.diagnostics.det,
        log_abs_hankel_det: m.diagnostics.log_abs_det,
        condition_estimate: cond,
    })
}

fn laplace_det(m: &[Vec<C64>]) -> C64 {
    let n = m.len();
    match n {
        0 => ONE,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut acc = ZERO;
            for j in 0..n {
                if m[0][j] == ZERO {
                    continue;
                }
                let minor: Vec<Vec<C64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                    .collect();
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += m[0][j] * laplace_det(&minor) * s;
            }
            acc
        }
    }
}

/// Jacobi's determinant formulas, expanded along the first row. Used as an
/// independent oracle for small `q`.
pub fn pade_jacobi(f: &FormalPowerSeries, order: PadeOrder) -> Result<PadeApproximant> {
    let (p, q) = (order.p, order.q);
    if q > JACOBI_CAP {
        return Err(Error::OrderTooLarge { q, cap: JACOBI_CAP });
    }
    let m = in_d_pq(f, order, DEFAULT_REL_TOL)?;
    if !m.member {
        return Err(not_in_dpq(order, &m.diagnostics));
    }
    let base = p as i64 - q as i64;
    let rows: Vec<Vec<C64>> = (1..=q)
        .map(|i| {
            (0..=q)
                .map(|j| f.coeff_signed(base + (i + j) as i64))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut num = Polynomial::zero();
    let mut den = Polynomial::zero();
    for j in 0..=q {
        let minor: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
            .collect();
        let cof = laplace_det(&minor) * if j % 2 == 0 { 1.0 } else { -1.0 };
        let s = f.partial_sum(base + j as i64)?;
        num = num.add(&s.shift(q - j).scale(cof));
        den = den.add(&Polynomial::monomial(q - j, cof));
    }
    let d0 = den.coeff(0);
    if d0 == ZERO {
        return Err(not_in_dpq(order, &m.diagnostics));
    }
    let value = RationalFunction::new(num, den)?;
    Ok(PadeApproximant {
        order,
        value,
        hankel_det: m.diagnostics.det,
        log_abs_hankel_det: m.diagnostics.log_abs_det,
        condition_estimate: f64::NAN,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum TableEntry {
    Approximant(PadeApproximant),
    NotInDpq(HankelDiagnostics),
}

impl Serialize for TableEntry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TableEntry::Approximant(a) => a.serialize(s),
            TableEntry::NotInDpq(_) => s.serialize_none(),
        }
    }
}

/// Rows indexed by `p`, columns by `q`.
pub fn pade_table(f: &FormalPowerSeries, p_max: usize, q_max: usize, rel_tol: f64) -> Result<Vec<Vec<TableEntry>>> {
    f.require_order(p_max + q_max)?;
    (0..=p_max)
        .map(|p| {
            (0..=q_max)
                .map(|q| {
                    let order = PadeOrder::new(p, q);
                    let m = in_d_pq(f, order, rel_tol)?;
                    if m.member {
                        pade_solve_with(f, order, rel_tol).map(TableEntry::Approximant)
                    } else {
                        Ok(TableEntry::NotInDpq(m.diagnostics))
                    }
                })
                .collect()
        })
        .collect()
}

/// Largest coefficient deviation relative to the largest coefficient, per
/// coefficient vector; the worse of numerator and denominator.
pub fn relative_coeff_error(a: &RationalFunction, b: &RationalFunction) -> f64 {
    fn one(x: &Polynomial, y: &Polynomial) -> f64 {
        let n = x.coeffs().len().max(y.coeffs().len());
        let scale = x.max_abs_coeff().max(y.max_abs_coeff());
        if scale == 0.0 {
            return 0.0;
        }
        (0..n).map(|k| (x.coeff(k) - y.coeff(k)).norm()).fold(0.0, f64::max) / scale
    }
    one(a.num(), b.num()).max(one(a.den(), b.den()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(n: usize) -> FormalPowerSeries {
        FormalPowerSeries::from_real(&vec![1.0; n + 1]).unwrap()
    }

    fn exp_series(n: usize) -> FormalPowerSeries {
        let mut c = vec![1.0];
        for k in 1..=n {
            let prev = c[k - 1];
            c.push(prev / k as f64);
        }
        FormalPowerSeries::from_real(&c).unwrap()
    }

    #[test]
    fn hankel_examples() {
        let h = hankel_matrix(&geometric(3), PadeOrder::new(0, 1)).unwrap();
        assert_eq!(h.entries, vec![vec![ONE]]);
        assert!(hankel_matrix(&geometric(3), PadeOrder::new(2, 0)).unwrap().entries.is_empty());
        let h = hankel_matrix(&exp_series(6), PadeOrder::new(2, 2)).unwrap();
        assert_eq!(h.entries[0][0], ONE);
        assert_eq!(h.entries[0][1], C64::new(0.5, 0.0));
        assert_eq!(h.entries[1][1], C64::new(1.0 / 6.0, 0.0));
        assert!(hankel_matrix(&geometric(2), PadeOrder::new(2, 1)).is_err());
    }

    #[test]
    fn determinant_examples() {
        assert!((hankel_det(&geometric(3), PadeOrder::new(0, 1)).unwrap() - ONE).norm() < 1e-15);
        assert_eq!(hankel_det(&geometric(3), PadeOrder::new(1, 0)).unwrap(), ONE);
        let d = hankel_det(&exp_series(6), PadeOrder::new(2, 2)).unwrap();
        assert!((d - C64::new(-1.0 / 12.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        assert!(in_d_pq(&geometric(3), PadeOrder::new(0, 1), 1e-10).unwrap().member);
        let f = FormalPowerSeries::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(!in_d_pq(&f, PadeOrder::new(1, 1), 1e-10).unwrap().member);
        assert!(in_d_pq(&exp_series(6), PadeOrder::new(2, 2), 1e-10).unwrap().member);
    }

    #[test]
    fn solve_examples() {
        let r = pade_solve(&geometric(3), PadeOrder::new(0, 1)).unwrap();
        assert_eq!(r.value.num(), &Polynomial::from_real(&[1.0]));
        assert!((r.value.den().coeff(1) + ONE).norm() < 1e-15);
        let f = FormalPowerSeries::from_real(&[1.0, -2.0, 0.5, 3.0, 7.0]).unwrap();
        let r = pade_solve(&f, PadeOrder::new(3, 0)).unwrap();
        assert_eq!(r.value.num(), &f.partial_sum(3).unwrap());
        let r = pade_solve(&exp_series(4), PadeOrder::new(1, 1)).unwrap();
        let want = RationalFunction::new(Polynomial::from_real(&[1.0, 0.5]), Polynomial::from_real(&[1.0, -0.5])).unwrap();
        assert!(relative_coeff_error(&r.value, &want) < 1e-15);
    }

    #[test]
    fn jacobi_agrees() {
        let g = pade_jacobi(&geometric(3), PadeOrder::new(0, 1)).unwrap();
        assert!(relative_coeff_error(&g.value, &pade_solve(&geometric(3), PadeOrder::new(0, 1)).unwrap().value) < 1e-15);
        let f = exp_series(8);
        assert_eq!(pade_jacobi(&f, PadeOrder::new(3, 0)).unwrap().value.num(), &f.partial_sum(3).unwrap());
        let a = pade_jacobi(&f, PadeOrder::new(1, 1)).unwrap();
        let b = pade_solve(&f, PadeOrder::new(1, 1)).unwrap();
        assert!(relative_coeff_error(&a.value, &b.value) < 1e-10);
        assert!(matches!(pade_jacobi(&exp_series(12), PadeOrder::new(2, 5)), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn table_examples() {
        let t = pade_table(&geometric(4), 2, 2, 1e-10).unwrap();
        for (p, row) in t.iter().enumerate() {
            match &row[0] {
                TableEntry::Approximant(a) => assert_eq!(a.value.num(), &geometric(4).partial_sum(p as i64).unwrap()),
                TableEntry::NotInDpq(_) => panic!("column q = 0 always exists"),
            }
        }
        let t = pade_table(&geometric(1), 0, 1, 1e-10).unwrap();
        assert!(matches!(t[0][1], TableEntry::Approximant(_)));
        let f = FormalPowerSeries::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let t = pade_table(&f, 1, 1, 1e-10).unwrap();
        assert!(matches!(t[1][1], TableEntry::NotInDpq(_)));
        let js = serde_json::to_value(&t).unwrap();
        assert!(js[1][1].is_null());
    }

    #[test]
    fn membership_is_scale_invariant() {
        // a_v = r^v: the unscaled test depends on r, the balanced one does not
        for r in [1e-6f64, 1.0, 1e6] {
            let coeffs: Vec<f64> = (0..12).map(|v| r.powi(v) * (1.0 + v as f64)).collect();
            let f = FormalPowerSeries::from_real(&coeffs).unwrap();
            assert!(in_d_pq(&f, PadeOrder::new(3, 2), 1e-10).unwrap().member, "r = {r}");
        }
    }
}
