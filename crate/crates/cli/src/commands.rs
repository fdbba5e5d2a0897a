use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;
use universal_pade::builder::{self, BuildTask, BuildTranscript, Limits, ReplayReport, Schedule};
use universal_pade::construct::{self, ConstructionResult, SearchLimits};
use universal_pade::pade::{self, TableEntry, DEFAULT_REL_TOL};
use universal_pade::sets::{CompactSet, GridKind};
use universal_pade::{FormalPowerSeries, PadeOrder, Polynomial, C64};

use crate::error::{CliError, CliResult};
use crate::io::{self, num, Csv};
use crate::{Ctx, Format};

fn required<T>(v: Option<T>, name: &'static str) -> CliResult<T> {
    v.ok_or(CliError::Missing(name))
}

fn load_series(ctx: &Ctx, flag: Option<PathBuf>, cfg: Option<PathBuf>) -> CliResult<FormalPowerSeries> {
    let path = match flag {
        Some(p) => p,
        None => ctx.resolve(required(cfg, "series")?),
    };
    io::read_json(&path)
}

#[derive(Args, Debug)]
pub struct PadeArgs {
    /// Series file: {"coeffs": [[re, im], ...], "center": [re, im]}
    #[arg(long, value_name = "FILE")]
    series: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// Set file; writes (x, y, |f - [p/q]|) over its working grid
    #[arg(long, value_name = "SETFILE")]
    grid: Option<PathBuf>,
    /// Where the grid CSV goes (default: `<out>.grid.csv`, or stdout)
    #[arg(long, value_name = "FILE")]
    grid_out: Option<PathBuf>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct PadeJob {
    series: Option<PathBuf>,
    p: Option<usize>,
    q: Option<usize>,
    grid: Option<PathBuf>,
    grid_out: Option<PathBuf>,
    rel_tol: Option<f64>,
}

pub fn pade(ctx: &Ctx, args: PadeArgs) -> CliResult<()> {
    let job: PadeJob = ctx.job()?;
    let f = load_series(ctx, args.series, job.series)?;
    let order = PadeOrder::new(required(args.p.or(job.p), "p")?, required(args.q.or(job.q), "q")?);
    let approx = pade::pade_solve_with(&f, order, args.rel_tol.or(job.rel_tol).unwrap_or(DEFAULT_REL_TOL))?;

    let grid = args.grid.or_else(|| job.grid.map(|p| ctx.resolve(p)));
    if let Some(set_path) = grid {
        let set: CompactSet = io::read_json(&set_path)?;
        let window = Polynomial::new(f.coeffs().to_vec());
        let mut csv = Csv::new(&["x", "y", "abs_error"]);
        for z in set.grid(GridKind::Eval).iter() {
            let w = z - f.center();
            let err = approx.value.eval(w).map_or(f64::INFINITY, |r| (window.eval(w) - r).norm());
            csv.row(&[num(z.re), num(z.im), num(err)]);
        }
        let grid_out = args
            .grid_out
            .or_else(|| job.grid_out.map(|p| ctx.resolve(p)))
            .or_else(|| ctx.out.as_ref().map(|o| PathBuf::from(format!("{}.grid.csv", o.display()))));
        io::emit(grid_out.as_deref(), &csv.finish())?;
    }

    match ctx.format {
        Format::Json => ctx.emit(&io::to_json(&approx)),
        Format::Csv => {
            let mut csv = Csv::new(&["part", "k", "re", "im"]);
            for (part, poly) in [("num", approx.value.num()), ("den", approx.value.den())] {
                for (k, c) in poly.coeffs().iter().enumerate() {
                    csv.row(&[part.into(), k.to_string(), num(c.re), num(c.im)]);
                }
            }
            ctx.emit(&csv.finish())
        }
    }
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long, value_name = "FILE")]
    series: Option<PathBuf>,
    #[arg(long)]
    p_max: Option<usize>,
    #[arg(long)]
    q_max: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct TableJob {
    series: Option<PathBuf>,
    p_max: Option<usize>,
    q_max: Option<usize>,
    rel_tol: Option<f64>,
}

pub fn table(ctx: &Ctx, args: TableArgs) -> CliResult<()> {
    let job: TableJob = ctx.job()?;
    let f = load_series(ctx, args.series, job.series)?;
    let p_max = required(args.p_max.or(job.p_max), "p_max")?;
    let q_max = required(args.q_max.or(job.q_max), "q_max")?;
    let t = pade::pade_table(&f, p_max, q_max, args.rel_tol.or(job.rel_tol).unwrap_or(DEFAULT_REL_TOL))?;
    match ctx.format {
        Format::Json => ctx.emit(&io::to_json(&t)),
        Format::Csv => {
            let mut csv = Csv::new(&["p", "q", "member", "log_abs_hankel_det", "cond"]);
            for (p, row) in t.iter().enumerate() {
                for (q, e) in row.iter().enumerate() {
                    let (member, log_det, cond) = match e {
                        TableEntry::Approximant(a) => (true, a.log_abs_hankel_det, a.condition_estimate),
                        TableEntry::NotInDpq(d) => (false, d.log_abs_det, f64::INFINITY),
                    };
                    csv.row(&[p.to_string(), q.to_string(), member.to_string(), num(log_det), num(cond)]);
                }
            }
            ctx.emit(&csv.finish())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Lemma {
    Lemma23,
    Lemma24,
    Lemma25,
    Lemma61,
    Runge,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// Target tolerance
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    lambda: Option<usize>,
}

/// Polynomials and sets keep their mathematical names.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ConstructJob {
    #[serde(rename = "P")]
    p_poly: Option<Polynomial>,
    #[serde(rename = "A")]
    a_poly: Option<Polynomial>,
    #[serde(rename = "B")]
    b_poly: Option<Polynomial>,
    #[serde(rename = "Q")]
    q_poly: Option<Polynomial>,
    #[serde(rename = "K")]
    k: Option<CompactSet>,
    #[serde(rename = "L")]
    l: Option<CompactSet>,
    #[serde(rename = "D")]
    d: Option<CompactSet>,
    a: Option<f64>,
    p: Option<usize>,
    q: Option<usize>,
    lambda: Option<usize>,
    eps: Option<f64>,
    degree_cap: Option<usize>,
    max_halvings: Option<usize>,
}

const DEFAULT_RUNGE_CAP: usize = 80;

fn check_result(ctx: &Ctx, r: &ConstructionResult, set: &CompactSet, prefix: &Polynomial, a: f64, reference: impl Fn(C64) -> universal_pade::Result<C64>) -> CliResult<()> {
    if !ctx.check {
        return Ok(());
    }
    let rep = construct::check_conclusions(r, set, prefix, reference)?;
    if rep.passed(a) {
        Ok(())
    } else {
        Err(CliError::Verification(format!("conclusion checks failed: {rep:?}")))
    }
}

pub fn construct(ctx: &Ctx, lemma: Lemma, args: ConstructArgs) -> CliResult<()> {
    if ctx.format == Format::Csv {
        return Err(CliError::Unsupported("construct writes JSON only".into()));
    }
    let job: ConstructJob = ctx.job()?;
    let k = required(job.k, "K")?;

    if lemma == Lemma::Runge {
        let d = required(job.d, "D")?;
        let p_poly = job.p_poly.unwrap_or_default();
        let q_poly = required(job.q_poly, "Q")?;
        let lambda = required(args.lambda.or(job.lambda), "lambda")?;
        let eps = required(job.eps.or(args.a).or(job.a), "eps")?;
        let fit = construct::runge_fit(&p_poly, &q_poly, &k, &d, lambda, eps, job.degree_cap.unwrap_or(DEFAULT_RUNGE_CAP))?;
        if ctx.check {
            let partial = fit.p_tilde.truncate(lambda.saturating_sub(1));
            let prefix_ok = lambda == 0 || partial == p_poly;
            if !(fit.sup_on_d < eps && fit.sup_on_k < eps && prefix_ok) {
                return Err(CliError::Verification(format!(
                    "fit bounds not met: sup on D {:e}, sup on K {:e}, partial sum preserved {prefix_ok}",
                    fit.sup_on_d, fit.sup_on_k
                )));
            }
        }
        return ctx.emit(&io::to_json(&fit));
    }

    let order = PadeOrder::new(required(args.p.or(job.p), "p")?, required(args.q.or(job.q), "q")?);
    let a = required(args.a.or(job.a), "a")?;
    let limits = job.max_halvings.map_or_else(SearchLimits::default, |max_halvings| SearchLimits { max_halvings });
    let r = match lemma {
        Lemma::Lemma23 => {
            let p_poly = required(job.p_poly, "P")?;
            let r = construct::lemma23_with(&p_poly, &k, a, order, limits)?;
            check_result(ctx, &r, &k, &p_poly, a, |z| Ok(p_poly.eval(z)))?;
            r
        }
        Lemma::Lemma24 => {
            let p_poly = required(job.p_poly, "P")?;
            let r = construct::lemma24_with(&p_poly, &k, a, order, limits)?;
            check_result(ctx, &r, &k, &p_poly, a, |z| Ok(p_poly.eval(z)))?;
            r
        }
        Lemma::Lemma25 => {
            let p_poly = required(job.p_poly, "P")?;
            let a_poly = required(job.a_poly, "A")?;
            let b_poly = required(job.b_poly, "B")?;
            let lambda = required(args.lambda.or(job.lambda), "lambda")?;
            let r = construct::lemma25_with(&p_poly, &a_poly, &b_poly, lambda, &k, a, order, limits)?;
            check_result(ctx, &r, &k, &p_poly, a, |z| {
                Ok(p_poly.eval(z) + z.powu(lambda as u32) * a_poly.eval(z) / b_poly.eval(z))
            })?;
            r
        }
        Lemma::Lemma61 => {
            let l = required(job.l, "L")?;
            let a_poly = required(job.a_poly, "A")?;
            let b_poly = required(job.b_poly, "B")?;
            let r = construct::lemma61_with(&a_poly, &b_poly, &k, &l, a, order, limits)?;
            check_result(ctx, &r, &k.union(&l), &Polynomial::zero(), a, |z| Ok(a_poly.eval(z) / b_poly.eval(z)))?;
            r
        }
        Lemma::Runge => unreachable!("handled above"),
    };
    ctx.emit(&io::to_json(&r))
}

#[derive(Debug, Deserialize)]
struct BuildJob {
    tasks: Vec<BuildTask>,
    schedule: Schedule,
    #[serde(default)]
    seed: Polynomial,
    #[serde(default)]
    limits: Limits,
}

pub fn verify_transcript(t: &BuildTranscript) -> CliResult<()> {
    replay_verdict(&builder::replay(t)?)
}

fn replay_verdict(rep: &ReplayReport) -> CliResult<()> {
    if rep.passed() {
        Ok(())
    } else {
        let failed: Vec<usize> = rep.steps.iter().filter(|s| !s.passed()).map(|s| s.step).collect();
        Err(CliError::Verification(format!(
            "replay failed at steps {failed:?}, final prefix ok: {}",
            rep.final_prefix
        )))
    }
}

pub fn run_build(ctx: &Ctx) -> CliResult<BuildTranscript> {
    if ctx.config.is_null() {
        return Err(CliError::Missing("tasks"));
    }
    let job: BuildJob = io::from_value("config", ctx.config.clone())?;
    let t = builder::build(&job.tasks, &job.schedule, &job.seed, &job.limits)?;
    if ctx.check {
        verify_transcript(&t)?;
    }
    Ok(t)
}

pub fn build(ctx: &Ctx) -> CliResult<()> {
    if ctx.format == Format::Csv {
        return Err(CliError::Unsupported("build writes JSON only".into()));
    }
    let t = run_build(ctx)?;
    ctx.emit(&io::to_json(&t))
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Transcript written by `upade build`
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct ReplayJob {
    transcript: Option<PathBuf>,
}

fn step_line(s: &builder::StepCheck) -> String {
    format!(
        "step {}: {} (fixed point {} err {:.2e}, prefix {}, denominator {}, sup error {:.2e} {}, distinct order {})",
        s.step,
        if s.passed() { "PASS" } else { "FAIL" },
        s.fixed_point,
        s.fixed_point_error,
        s.prefix,
        s.denominator,
        s.sup_error,
        if s.sup_error_ok { "ok" } else { "too large" },
        s.distinct_order
    )
}

pub fn replay(ctx: &Ctx, args: ReplayArgs) -> CliResult<()> {
    let job: ReplayJob = ctx.job()?;
    let path = match args.transcript {
        Some(p) => p,
        None => ctx.resolve(required(job.transcript, "transcript")?),
    };
    let t: BuildTranscript = io::read_json(&path)?;
    let rep = builder::replay(&t)?;
    for s in &rep.steps {
        println!("{}", step_line(s));
    }
    println!("final prefix: {}", if rep.final_prefix { "PASS" } else { "FAIL" });
    if ctx.out.is_some() {
        match ctx.format {
            Format::Json => ctx.emit(&io::to_json(&rep))?,
            Format::Csv => {
                let mut csv = Csv::new(&["step", "passed", "fixed_point_error", "sup_error"]);
                for s in &rep.steps {
                    csv.row(&[s.step.to_string(), s.passed().to_string(), num(s.fixed_point_error), num(s.sup_error)]);
                }
                ctx.emit(&csv.finish())?;
            }
        }
    }
    replay_verdict(&rep)
}
