use clap::ValueEnum;
use serde::Serialize;
use universal_pade::builder::{BuildTask, BuildTranscript, Limits, Schedule, Target};
use universal_pade::sets::{self, CompactSet, GridKind, Shape};
use universal_pade::{builder, Polynomial, C64};

use crate::commands::verify_transcript;
use crate::error::{CliError, CliResult};
use crate::io::{self, num, Csv};
use crate::{Ctx, Format};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    BoundedQ,
    Seleznev,
}

pub fn run(ctx: &Ctx, name: DemoName) -> CliResult<()> {
    match name {
        DemoName::BoundedQ => bounded_q(ctx),
        DemoName::Seleznev => seleznev(ctx),
    }
}

const CENTER: f64 = 5.0;
const RADIUS: f64 = 2.0;
const MAX_N: usize = 30;
const SHIFT_RADII: [f64; 7] = [2.05, 2.1, 2.25, 2.5, 3.0, 4.0, 6.0];
const SHIFT_DIRECTIONS: usize = 8;

#[derive(Serialize)]
struct FamilyEntry {
    n: usize,
    shift: C64,
    sup_error: f64,
}

#[derive(Serialize)]
struct BoundedQReport {
    target: &'static str,
    set: Shape,
    family: &'static str,
    entries: Vec<FamilyEntry>,
    floor: f64,
}

/// Taylor section of `1/(w + s)` in `w = z - 5`, so `1/P_n` is a `[0/n]`
/// candidate for `w + s`, i.e. for the target `z - 5` shifted by `s`.
fn section(s: C64, n: usize) -> Polynomial {
    let mut c = Vec::with_capacity(n + 1);
    let mut t = C64::new(1.0, 0.0) / s;
    for _ in 0..=n {
        c.push(t);
        t = -t / s;
    }
    Polynomial::new(c)
}

/// The sections of `1/(w + s)` vanish only on `|w| = |s| > 2`, so the error
/// is holomorphic on the disk and its maximum sits on the boundary samples.
fn sup_error(p: &Polynomial, k: &CompactSet) -> f64 {
    k.grid(GridKind::Validation)
        .boundary
        .iter()
        .map(|&z| {
            let w = z - CENTER;
            let v = p.eval(w);
            if v.norm() == 0.0 {
                f64::INFINITY
            } else {
                (1.0 / v - w).norm()
            }
        })
        .fold(0.0, f64::max)
}

fn bounded_q(ctx: &Ctx) -> CliResult<()> {
    let shape = Shape::disk(C64::new(CENTER, 0.0), RADIUS);
    let k = sets::sample(&shape, None)?;
    let mut entries = Vec::new();
    for n in 0..=MAX_N {
        let mut best: Option<FamilyEntry> = None;
        for r in SHIFT_RADII {
            for j in 0..SHIFT_DIRECTIONS {
                let s = C64::from_polar(r, std::f64::consts::TAU * j as f64 / SHIFT_DIRECTIONS as f64);
                let e = sup_error(&section(s, n), &k);
                if best.as_ref().is_none_or(|b| e < b.sup_error) {
                    best = Some(FamilyEntry { n, shift: s, sup_error: e });
                }
            }
        }
        entries.extend(best);
    }
    let floor = entries.iter().map(|e| e.sup_error).fold(f64::INFINITY, f64::min);
    match ctx.format {
        Format::Json => ctx.emit(&io::to_json(&BoundedQReport {
            target: "z - 5",
            set: shape,
            family: "1/P_n, P_n the degree-n Taylor section of 1/(z - 5 + s), best shift s per n",
            entries,
            floor,
        })),
        Format::Csv => {
            let mut csv = Csv::new(&["n", "shift_re", "shift_im", "sup_error"]);
            for e in &entries {
                csv.row(&[e.n.to_string(), num(e.shift.re), num(e.shift.im), num(e.sup_error)]);
            }
            ctx.emit(&csv.finish())
        }
    }
}

#[derive(Serialize)]
struct PartialSumCheck {
    step: usize,
    p: usize,
    q: usize,
    /// The approximant's numerator is the degree-`p` partial sum of the
    /// final series and its denominator is 1.
    partial_sum: bool,
    sup_error: f64,
}

#[derive(Serialize)]
struct SeleznevReport {
    approximants: Vec<PartialSumCheck>,
    all_partial_sums: bool,
    transcript: BuildTranscript,
}

fn seleznev_tasks() -> CliResult<Vec<BuildTask>> {
    // every later step must match its target through the monomial
    // coefficients of the previous ones, so the sets sit well apart
    let task = |c: C64, target: &[f64]| -> CliResult<BuildTask> {
        Ok(BuildTask {
            set: sets::sample(&Shape::disk(c, 0.5), None)?,
            target: Target::Polynomial {
                coeffs: Polynomial::from_real(target),
            },
            tol: 2e-2,
        })
    };
    Ok(vec![task(C64::new(4.0, 0.0), &[1.0])?, task(C64::new(-4.0, 0.0), &[0.0, 0.0, 1.0])?])
}

fn seleznev(ctx: &Ctx) -> CliResult<()> {
    if ctx.format == Format::Csv {
        return Err(CliError::Unsupported("the seleznev demo writes JSON only".into()));
    }
    let t = builder::build(&seleznev_tasks()?, &Schedule::row(0), &Polynomial::zero(), &Limits::default())?;
    if ctx.check {
        verify_transcript(&t)?;
    }
    let approximants: Vec<PartialSumCheck> = t
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let r = &s.result.rational;
            let partial = t.final_prefix.partial_sum(s.p as i64).ok();
            PartialSumCheck {
                step: i,
                p: s.p,
                q: s.q,
                partial_sum: s.q == 0 && *r.den() == Polynomial::from_real(&[1.0]) && partial.as_ref() == Some(r.num()),
                sup_error: s.sup_error,
            }
        })
        .collect();
    let all_partial_sums = approximants.iter().all(|a| a.partial_sum);
    ctx.emit(&io::to_json(&SeleznevReport {
        approximants,
        all_partial_sums,
        transcript: t,
    }))
}
