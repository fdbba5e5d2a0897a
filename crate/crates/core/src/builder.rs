//! Iterative construction of a series whose Padé approximants along a
//! schedule approximate a list of targets on compact sets.
//!
//! Each step extends the current Taylor prefix: a polynomial target goes
//! through a two-set polynomial fit and then `lemma24` (schedules with
//! `p_n, q_n -> inf`) or `lemma23` (`p_n - q_n -> inf`); a rational target is
//! first written as `P + z^lambda A/B` and then handed to `lemma25`.

use serde::{Deserialize, Serialize};

use crate::algebra::{FormalPowerSeries, Polynomial, RationalFunction, C64, ONE, ZERO};
use crate::construct::{
    self, composite_series, ConstructionResult, Constructor, RungeFit, SearchLimits, FIXED_POINT_TOL,
};
use crate::error::{Error, Result};
use crate::fit::KrylovBasis;
use crate::pade::{self, PadeOrder};
use crate::sets::{self, bounds, sample, CompactSet, Grid, Shape};

/// Agreement required between the combined rational's series and the stored
/// composite series during replay.
pub const SERIES_CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    H1,
    H2,
    #[serde(rename = "H_tilde")]
    HTilde,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `p_n = q_n = n`.
    Diagonal,
    /// `q_n = n`, `p_n = ceil(num/den * n)`.
    Ray { num: u32, den: u32 },
    /// `q_n = q`, `p_n = n`.
    Row { q: usize },
    Explicit { orders: Vec<PadeOrder> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    pub declared_condition: Condition,
}

impl Schedule {
    pub fn diagonal() -> Self {
        Schedule {
            kind: ScheduleKind::Diagonal,
            declared_condition: Condition::H1,
        }
    }

    pub fn ray(num: u32, den: u32, declared_condition: Condition) -> Self {
        Schedule {
            kind: ScheduleKind::Ray { num, den },
            declared_condition,
        }
    }

    pub fn row(q: usize) -> Self {
        Schedule {
            kind: ScheduleKind::Row { q },
            declared_condition: Condition::H2,
        }
    }

    /// The `n`-th order, `n >= 1`; `None` past the end of an explicit list.
    pub fn order(&self, n: usize) -> Option<PadeOrder> {
        match &self.kind {
            ScheduleKind::Diagonal => Some(PadeOrder::new(n, n)),
            ScheduleKind::Ray { num, den } => {
                let (num, den) = (*num as usize, (*den).max(1) as usize);
                Some(PadeOrder::new((num * n).div_ceil(den), n))
            }
            ScheduleKind::Row { q } => Some(PadeOrder::new(n, *q)),
            ScheduleKind::Explicit { orders } => orders.get(n.checked_sub(1)?).copied(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let ScheduleKind::Ray { num, den } = self.kind {
            if num == 0 || den == 0 {
                return Err(Error::InvalidInput("ray slope must be a positive ratio".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub h1: bool,
    pub h2: bool,
    pub h_tilde: bool,
    /// Set for explicit lists, whose behaviour past the window is unknown.
    pub unverifiable_tail: bool,
}

impl ConditionReport {
    pub fn holds(&self, c: Condition) -> bool {
        match c {
            Condition::H1 => self.h1,
            Condition::H2 => self.h2,
            Condition::HTilde => self.h_tilde,
        }
    }
}

fn diverges(xs: &[i64]) -> bool {
    xs.windows(2).all(|w| w[0] <= w[1]) && xs.first() < xs.last()
}

pub fn check_condition(s: &Schedule) -> ConditionReport {
    match &s.kind {
        ScheduleKind::Diagonal => ConditionReport {
            h1: true,
            h2: false,
            h_tilde: false,
            unverifiable_tail: false,
        },
        ScheduleKind::Ray { num, den } => {
            let positive = *num > 0 && *den > 0;
            let steep = positive && num > den;
            ConditionReport {
                h1: positive,
                h2: steep,
                h_tilde: steep,
                unverifiable_tail: false,
            }
        }
        ScheduleKind::Row { .. } => ConditionReport {
            h1: false,
            h2: true,
            h_tilde: false,
            unverifiable_tail: false,
        },
        ScheduleKind::Explicit { orders } => {
            let p: Vec<i64> = orders.iter().map(|o| o.p as i64).collect();
            let q: Vec<i64> = orders.iter().map(|o| o.q as i64).collect();
            let gap: Vec<i64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
            ConditionReport {
                h1: diverges(&p) && diverges(&q),
                h2: diverges(&gap),
                h_tilde: diverges(&q) && diverges(&gap),
                unverifiable_tail: true,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    Polynomial { coeffs: Polynomial },
    /// `num/den`, not normalised, so a pole at the origin is allowed.
    Rational { num: Polynomial, den: Polynomial },
}

impl Target {
    pub fn eval(&self, z: C64) -> Result<C64> {
        match self {
            Target::Polynomial { coeffs } => Ok(coeffs.eval(z)),
            Target::Rational { num, den } => {
                let d = den.eval(z);
                if d.norm() <= construct_pole_tol(den, z) {
                    return Err(Error::PoleAtPoint { z, den_abs: d.norm() });
                }
                Ok(num.eval(z) / d)
            }
        }
    }
}

fn construct_pole_tol(den: &Polynomial, z: C64) -> f64 {
    crate::algebra::POLE_TOL * den.max_abs_coeff() * (1.0 + z.norm()).powi(den.degree().unwrap_or(0) as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildTask {
    pub set: CompactSet,
    pub target: Target,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub rounds: usize,
    /// Largest `p + q` tried before a task is declared infeasible.
    pub max_order: usize,
    pub runge_degree_cap: usize,
    pub rational_degree_cap: usize,
    pub max_halvings: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            rounds: 1,
            max_order: 400,
            runge_degree_cap: 120,
            rational_degree_cap: 40,
            max_halvings: construct::DEFAULT_MAX_HALVINGS,
        }
    }
}

/// How the target was rewritten before the lemma was applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Reduction {
    Runge { fit: RungeFit, d_radius: f64 },
    Rational { a: Polynomial, b: Polynomial, lambda: usize, fit_error: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildStep {
    pub task: usize,
    pub round: usize,
    pub p: usize,
    pub q: usize,
    pub constructor: Constructor,
    pub reduction: Reduction,
    pub result: ConstructionResult,
    pub prefix_len: usize,
    /// `sup |R - target|` on the task's validation grid.
    pub sup_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildTranscript {
    pub schedule: Schedule,
    pub tasks: Vec<BuildTask>,
    pub seed: Polynomial,
    pub steps: Vec<BuildStep>,
    pub final_prefix: FormalPowerSeries,
}

fn validate_task(i: usize, task: &BuildTask) -> Result<()> {
    if !(task.tol > 0.0 && task.tol.is_finite()) {
        return Err(Error::InvalidInput(format!("task {i}: tolerance must be positive")));
    }
    if task.set.contains_origin() || bounds(&task.set).dist_to_origin == 0.0 {
        return Err(Error::HypothesisViolation(format!("task {i}: the set contains the origin")));
    }
    match &task.target {
        Target::Polynomial { .. } => {
            if !task.set.flags().complement_connected {
                return Err(Error::HypothesisViolation(format!(
                    "task {i}: a polynomial target needs a set with connected complement"
                )));
            }
        }
        Target::Rational { den, .. } => {
            if den.is_zero() {
                return Err(Error::InvalidInput(format!("task {i}: zero denominator")));
            }
            sets::inf_abs(|z| task.target.eval(z), &task.set, sets::GridKind::Validation)
                .map_err(|_| Error::HypothesisViolation(format!("task {i}: the target has a pole on the set")))?;
        }
    }
    Ok(())
}

fn poly_of(prefix: &FormalPowerSeries) -> Polynomial {
    Polynomial::new(prefix.coeffs().to_vec())
}

fn fit_points(grid: &Grid) -> &[C64] {
    if grid.boundary.is_empty() {
        &grid.interior
    } else {
        &grid.boundary
    }
}

struct StepPlan {
    base: Polynomial,
    reduction: Reduction,
}

/// `P~` with `sup_K |P~ - Q| < eps`, `P_cur` a partial sum of `P~`, and `P~`
/// close to `P_cur` on a disk around the origin.
fn polynomial_reduction(task: &BuildTask, q_poly: &Polynomial, p_cur: &Polynomial, lambda: usize, limits: &Limits) -> Result<StepPlan> {
    let dist = bounds(&task.set).dist_to_origin;
    let mut r = 0.99 * (dist / 2.0).min(1.0);
    let mut last = None;
    for _ in 0..4 {
        let d_set = sample(&Shape::disk(ZERO, r), None)?;
        match construct::runge_fit(p_cur, q_poly, &task.set, &d_set, lambda, task.tol / 2.0, limits.runge_degree_cap) {
            Ok(fit) => {
                return Ok(StepPlan {
                    base: fit.p_tilde.clone(),
                    reduction: Reduction::Runge { fit, d_radius: r },
                })
            }
            Err(e @ Error::DegreeCapExceeded { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
        r /= 2.0;
    }
    Err(last.expect("at least one attempt"))
}

/// `A`, `B` with `B(0) = 1`, `B != 0` on the set, and
/// `sup_K |P_cur + z^lambda A/B - T| < eps`.
fn rational_reduction(task: &BuildTask, den: &Polynomial, p_cur: &Polynomial, lambda: usize, limits: &Limits) -> Result<StepPlan> {
    let k0 = den.coeffs().iter().take_while(|c| **c == ZERO).count();
    let dr = Polynomial::new(den.coeffs()[k0..].to_vec());
    let b_target = dr.scale(ONE / dr.coeff(0));
    // extra poles on a small circle inside the hole around the origin
    let rho = bounds(&task.set).dist_to_origin / 8.0;
    let eps = task.tol / 2.0;
    let kp = fit_points(task.set.eval_grid()).to_vec();
    let y: Vec<C64> = kp
        .iter()
        .map(|&z| Ok(task.target.eval(z)? - p_cur.eval(z)))
        .collect::<Result<_>>()?;
    let mut best = f64::INFINITY;
    for m in lambda + k0..=lambda + k0 + 2 {
        let cluster = Polynomial::constant(ONE).sub(&Polynomial::monomial(m, C64::new(rho.powi(-(m as i32)), 0.0)));
        let b = b_target.mul(&cluster);
        let phi: Vec<C64> = kp.iter().map(|&z| z.powu(lambda as u32) / b.eval(z)).collect();
        let Some(mut basis) = KrylovBasis::new(kp.clone(), phi) else {
            continue;
        };
        let mut deg_a = 0;
        while deg_a <= limits.rational_degree_cap {
            basis.extend_to(deg_a);
            let a = Polynomial::new(basis.solve(&y, deg_a));
            let resid = |z: C64| Ok(p_cur.eval(z) + z.powu(lambda as u32) * a.eval(z) / b.eval(z) - task.target.eval(z)?);
            let e = sets::sup_on(&resid, task.set.eval_grid())?;
            if e < eps {
                let v = sets::sup_on(&resid, task.set.validation_grid())?;
                if v < eps {
                    return Ok(StepPlan {
                        base: p_cur.clone(),
                        reduction: Reduction::Rational {
                            a,
                            b,
                            lambda,
                            fit_error: v,
                        },
                    });
                }
            }
            best = best.min(e);
            deg_a += 2;
        }
    }
    Err(Error::DegreeCapExceeded {
        cap: limits.rational_degree_cap,
        best_d: 0.0,
        best_k: best,
    })
}

fn lemma_admits(constructor: Constructor, order: PadeOrder, g: i64, plan: &StepPlan) -> bool {
    let (p, q) = (order.p as i64, order.q as i64);
    match constructor {
        Constructor::Lemma24 => q >= 1 && p > g && q > g,
        Constructor::Lemma23 => p - q > g,
        Constructor::Lemma25 => match &plan.reduction {
            Reduction::Rational { a, b, lambda, .. } => {
                q >= b.degree_i64() && p > (*lambda as i64 + a.degree_i64()).max(q + g)
            }
            Reduction::Runge { .. } => false,
        },
        Constructor::Lemma61 => false,
    }
}

fn run_lemma(constructor: Constructor, task: &BuildTask, plan: &StepPlan, order: PadeOrder, limits: &Limits) -> Result<ConstructionResult> {
    let search = SearchLimits {
        max_halvings: limits.max_halvings,
    };
    let a = task.tol / 2.0;
    match (constructor, &plan.reduction) {
        (Constructor::Lemma24, _) => construct::lemma24_with(&plan.base, &task.set, a, order, search),
        (Constructor::Lemma23, _) => construct::lemma23_with(&plan.base, &task.set, a, order, search),
        (Constructor::Lemma25, Reduction::Rational { a: ap, b, lambda, .. }) => {
            construct::lemma25_with(&plan.base, ap, b, *lambda, &task.set, a, order, search)
        }
        _ => unreachable!("constructor chosen from the reduction"),
    }
}

fn step_sup_error(r: &RationalFunction, task: &BuildTask) -> Result<f64> {
    sets::sup_norm(|z| Ok(r.eval(z)? - task.target.eval(z)?), &task.set, sets::GridKind::Validation)
}

/// Runs every task in order (`limits.rounds` times) and records each step.
pub fn build(tasks: &[BuildTask], schedule: &Schedule, seed: &Polynomial, limits: &Limits) -> Result<BuildTranscript> {
    schedule.validate()?;
    for (i, t) in tasks.iter().enumerate() {
        validate_task(i, t)?;
    }
    let report = check_condition(schedule);
    if !report.holds(schedule.declared_condition) {
        return Err(Error::ScheduleIncompatible(format!(
            "the schedule does not satisfy its declared condition {:?}",
            schedule.declared_condition
        )));
    }
    if tasks.iter().any(|t| matches!(t.target, Target::Rational { .. })) && !report.h_tilde {
        return Err(Error::ScheduleIncompatible(
            "rational targets need a schedule with q_n -> inf and p_n - q_n -> inf".into(),
        ));
    }
    let poly_constructor = if report.h1 && schedule.declared_condition != Condition::H2 {
        Constructor::Lemma24
    } else {
        Constructor::Lemma23
    };

    let seed_len = if seed.is_zero() { 0 } else { seed.coeffs().len() };
    let mut prefix = FormalPowerSeries::new(if seed_len == 0 { vec![ZERO] } else { seed.coeffs().to_vec() })?;
    let mut prefix_len = seed_len;
    let mut used: Vec<PadeOrder> = Vec::new();
    let mut steps = Vec::new();

    for round in 0..limits.rounds.max(1) {
        for (ti, task) in tasks.iter().enumerate() {
            let p_cur = poly_of(&prefix);
            let lambda = prefix_len.max(1);
            let infeasible = |reason: String| Error::TaskInfeasible { task: ti, reason };
            let (plan, constructor) = match &task.target {
                Target::Polynomial { coeffs } => (
                    polynomial_reduction(task, coeffs, &p_cur, lambda, limits).map_err(|e| infeasible(e.to_string()))?,
                    poly_constructor,
                ),
                Target::Rational { den, .. } => (
                    rational_reduction(task, den, &p_cur, lambda, limits).map_err(|e| infeasible(e.to_string()))?,
                    Constructor::Lemma25,
                ),
            };
            let g = plan.base.degree_i64().max(prefix_len as i64 - 1);
            let mut last_err = String::from("no admissible order within max_order");
            let mut done = None;
            for n in 1.. {
                let Some(order) = schedule.order(n) else { break };
                if order.p + order.q > limits.max_order {
                    // structured schedules only grow from here
                    if matches!(schedule.kind, ScheduleKind::Explicit { .. }) {
                        continue;
                    }
                    break;
                }
                if used.contains(&order) || !lemma_admits(constructor, order, g, &plan) {
                    continue;
                }
                match run_lemma(constructor, task, &plan, order, limits) {
                    Ok(r) => {
                        done = Some((order, r));
                        break;
                    }
                    Err(e @ (Error::SearchExhausted { .. } | Error::NoSafeD)) => last_err = e.to_string(),
                    Err(e @ (Error::OrderViolation(_) | Error::HypothesisViolation(_))) => last_err = e.to_string(),
                    Err(e) => return Err(e),
                }
            }
            let Some((order, result)) = done else {
                return Err(infeasible(last_err));
            };
            used.push(order);
            prefix = result.series();
            prefix_len = order.p + order.q + 1;
            let sup_error = step_sup_error(&result.rational, task)?;
            steps.push(BuildStep {
                task: ti,
                round,
                p: order.p,
                q: order.q,
                constructor,
                reduction: plan.reduction,
                result,
                prefix_len,
                sup_error,
            });
        }
    }
    Ok(BuildTranscript {
        schedule: schedule.clone(),
        tasks: tasks.to_vec(),
        seed: seed.clone(),
        steps,
        final_prefix: prefix,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub step: usize,
    pub fixed_point: bool,
    pub fixed_point_error: f64,
    pub prefix: bool,
    pub denominator: bool,
    pub sup_error: f64,
    pub sup_error_ok: bool,
    pub distinct_order: bool,
}

impl StepCheck {
    pub fn passed(&self) -> bool {
        self.fixed_point && self.prefix && self.denominator && self.sup_error_ok && self.distinct_order
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub steps: Vec<StepCheck>,
    pub final_prefix: bool,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.final_prefix && self.steps.iter().all(StepCheck::passed)
    }
}

fn series_close(a: &FormalPowerSeries, b: &FormalPowerSeries, tol: f64) -> bool {
    let scale = a.max_abs_coeff(a.truncation_order()).max(b.max_abs_coeff(b.truncation_order())).max(1.0);
    a.coeffs().len() == b.coeffs().len()
        && a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).norm() <= tol * scale)
}

/// Re-verifies every step of a transcript from the stored rationals and sets.
pub fn replay(t: &BuildTranscript) -> Result<ReplayReport> {
    let mut prev: Vec<C64> = if t.seed.is_zero() { Vec::new() } else { t.seed.coeffs().to_vec() };
    let mut seen: Vec<PadeOrder> = Vec::new();
    let mut checks = Vec::new();
    let mut last_series: Option<FormalPowerSeries> = None;
    for (i, s) in t.steps.iter().enumerate() {
        let task = t
            .tasks
            .get(s.task)
            .ok_or_else(|| Error::CorruptTranscript(format!("step {i} refers to missing task {}", s.task)))?;
        if s.result.params.p != s.p || s.result.params.q != s.q {
            return Err(Error::CorruptTranscript(format!("step {i}: order does not match its result")));
        }
        let order = PadeOrder::new(s.p, s.q);
        let n = s.p + s.q;
        let composite = composite_series(&s.result.base, &s.result.tail, n);
        let rational_series = s.result.rational.series(n);

        let fixed_point_error = pade::pade_solve(&composite, order)
            .map(|a| pade::relative_coeff_error(&a.value, &s.result.rational))
            .unwrap_or(f64::INFINITY);
        let prefix = prev.len() <= composite.coeffs().len()
            && prev.iter().zip(composite.coeffs()).all(|(a, b)| a == b)
            && series_close(&composite, &rational_series, SERIES_CONSISTENCY_TOL)
            && s.prefix_len == n + 1
            && s.prefix_len > prev.len();
        let den = s.result.rational.den();
        let denominator = den.eval(ZERO).norm() > 0.0
            && sets::inf_abs(|z| s.result.rational.eval(z), &task.set, sets::GridKind::Validation).is_ok();
        let sup_error = step_sup_error(&s.result.rational, task).unwrap_or(f64::INFINITY);
        checks.push(StepCheck {
            step: i,
            fixed_point: fixed_point_error < FIXED_POINT_TOL,
            fixed_point_error,
            prefix,
            denominator,
            sup_error,
            sup_error_ok: sup_error < task.tol,
            distinct_order: !seen.contains(&order),
        });
        seen.push(order);
        prev = composite.coeffs().to_vec();
        last_series = Some(composite);
    }
    let final_prefix = match last_series {
        Some(s) => s == t.final_prefix,
        None => true,
    };
    Ok(ReplayReport {
        steps: checks,
        final_prefix,
    })
}
