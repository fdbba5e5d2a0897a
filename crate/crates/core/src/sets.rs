//! Sampled compact subsets of the plane and grid-based sup norms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{C64, ZERO};
use crate::error::{Error, Result};

/// Minimum number of samples on every circle.
const MIN_CIRCLE_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub c: C64,
    pub r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub c: C64,
    pub r_in: f64,
    pub r_out: f64,
}

/// Axis-aligned rectangle given by two opposite corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub a: C64,
    pub b: C64,
}

/// User-asserted topological metadata.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SetFlags {
    pub complement_connected: bool,
    pub contains_origin: bool,
}

/// Union of primitives. `h` is the sampling density; `None` selects the
/// default of diameter/200, but never below 1e-3.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Shape {
    pub disks: Vec<Disk>,
    pub annuli: Vec<Annulus>,
    pub rects: Vec<Rect>,
    pub points: Vec<C64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub flags: SetFlags,
}

impl Shape {
    pub fn disk(c: C64, r: f64) -> Self {
        Shape {
            disks: vec![Disk { c, r }],
            flags: SetFlags {
                complement_connected: true,
                contains_origin: c.norm() <= r,
            },
            ..Default::default()
        }
    }

    pub fn annulus(c: C64, r_in: f64, r_out: f64) -> Self {
        let d = c.norm();
        Shape {
            annuli: vec![Annulus { c, r_in, r_out }],
            flags: SetFlags {
                complement_connected: false,
                contains_origin: d >= r_in && d <= r_out,
            },
            ..Default::default()
        }
    }

    pub fn rect(a: C64, b: C64) -> Self {
        let mut s = Shape {
            rects: vec![Rect { a, b }],
            flags: SetFlags {
                complement_connected: true,
                contains_origin: false,
            },
            ..Default::default()
        };
        s.flags.contains_origin = s.origin_in_primitives();
        s
    }

    pub fn points(points: Vec<C64>) -> Self {
        let contains_origin = points.contains(&ZERO);
        Shape {
            points,
            flags: SetFlags {
                complement_connected: true,
                contains_origin,
            },
            ..Default::default()
        }
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = Some(h);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty() && self.annuli.is_empty() && self.rects.is_empty() && self.points.is_empty()
    }

    /// Union of two shapes; flags are combined conservatively.
    pub fn merge(&self, other: &Shape) -> Shape {
        Shape {
            disks: cat(&self.disks, &other.disks),
            annuli: cat(&self.annuli, &other.annuli),
            rects: cat(&self.rects, &other.rects),
            points: cat(&self.points, &other.points),
            h: match (self.h, other.h) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
            flags: SetFlags {
                complement_connected: self.flags.complement_connected && other.flags.complement_connected,
                contains_origin: self.flags.contains_origin || other.flags.contains_origin,
            },
        }
    }

    /// Whether the origin lies in one of the primitives, from the geometry
    /// rather than the declared flag.
    pub fn origin_in_primitives(&self) -> bool {
        self.disks.iter().any(|d| d.c.norm() <= d.r)
            || self.annuli.iter().any(|a| {
                let r = a.c.norm();
                r >= a.r_in && r <= a.r_out
            })
            || self.rects.iter().any(|r| {
                let (x0, x1) = (r.a.re.min(r.b.re), r.a.re.max(r.b.re));
                let (y0, y1) = (r.a.im.min(r.b.im), r.a.im.max(r.b.im));
                x0 <= 0.0 && 0.0 <= x1 && y0 <= 0.0 && 0.0 <= y1
            })
            || self.points.contains(&ZERO)
    }

    fn bounding_box(&self) -> Option<(f64, f64, f64, f64)> {
        let mut boxes: Vec<(f64, f64, f64, f64)> = Vec::new();
        for d in &self.disks {
            boxes.push((d.c.re - d.r, d.c.re + d.r, d.c.im - d.r, d.c.im + d.r));
        }
        for a in &self.annuli {
            boxes.push((a.c.re - a.r_out, a.c.re + a.r_out, a.c.im - a.r_out, a.c.im + a.r_out));
        }
        for r in &self.rects {
            boxes.push((r.a.re.min(r.b.re), r.a.re.max(r.b.re), r.a.im.min(r.b.im), r.a.im.max(r.b.im)));
        }
        for p in &self.points {
            boxes.push((p.re, p.re, p.im, p.im));
        }
        boxes.into_iter().reduce(|a, b| (a.0.min(b.0), a.1.max(b.1), a.2.min(b.2), a.3.max(b.3)))
    }

    pub fn diameter(&self) -> f64 {
        self.bounding_box()
            .map_or(0.0, |(x0, x1, y0, y1)| (x1 - x0).hypot(y1 - y0))
    }

    pub fn default_h(&self) -> f64 {
        (self.diameter() / 200.0).max(1e-3)
    }

    fn validate(&self) -> Result<()> {
        let bad = |x: f64| !x.is_finite() || x < 0.0;
        let fin = |z: C64| z.re.is_finite() && z.im.is_finite();
        if self.disks.iter().any(|d| bad(d.r) || !fin(d.c))
            || self.annuli.iter().any(|a| bad(a.r_in) || bad(a.r_out) || a.r_in > a.r_out || !fin(a.c))
            || self.rects.iter().any(|r| !fin(r.a) || !fin(r.b))
            || self.points.iter().any(|p| !fin(*p))
        {
            return Err(Error::InvalidInput("malformed shape primitive".into()));
        }
        Ok(())
    }
}

/// Sample points, boundary curves first. Interior lattices are anchored at
/// the primitive's centre or corner so that the `h/4` grid contains the `h`
/// grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grid {
    pub boundary: Vec<C64>,
    pub interior: Vec<C64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.boundary.len() + self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = C64> + '_ {
        self.boundary.iter().chain(self.interior.iter()).copied()
    }

    fn extend(&mut self, other: &Grid) {
        self.boundary.extend_from_slice(&other.boundary);
        self.interior.extend_from_slice(&other.interior);
    }
}

fn cat<T: Clone>(a: &[T], b: &[T]) -> Vec<T> {
    [a, b].concat()
}

fn circle(c: C64, r: f64, h: f64, refine: usize) -> Vec<C64> {
    if r == 0.0 {
        return vec![c];
    }
    let n = ((2.0 * PI * r / h).ceil() as usize).max(MIN_CIRCLE_POINTS) * refine;
    (0..n)
        .map(|k| c + C64::from_polar(r, 2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// Lattice offsets `(i h, j h)` with `lo < |offset| < hi` (strict).
fn radial_lattice(c: C64, lo: f64, hi: f64, h: f64) -> Vec<C64> {
    let n = (hi / h).floor() as i64;
    let mut pts = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let off = C64::new(i as f64 * h, j as f64 * h);
            let r = off.norm();
            if r < hi && (r > lo || (lo == 0.0 && r == 0.0)) {
                pts.push(c + off);
            }
        }
    }
    pts
}

fn sample_rect(r: &Rect, h: f64, refine: usize) -> Grid {
    let (x0, x1) = (r.a.re.min(r.b.re), r.a.re.max(r.b.re));
    let (y0, y1) = (r.a.im.min(r.b.im), r.a.im.max(r.b.im));
    let corners = [C64::new(x0, y0), C64::new(x1, y0), C64::new(x1, y1), C64::new(x0, y1)];
    let mut boundary = Vec::new();
    for k in 0..4 {
        let (p, q) = (corners[k], corners[(k + 1) % 4]);
        let len = (q - p).norm();
        if len == 0.0 {
            if k == 0 {
                boundary.push(p);
            }
            continue;
        }
        let n = ((len / h).ceil() as usize).max(1) * refine;
        for i in 0..n {
            boundary.push(p + (q - p) * (i as f64 / n as f64));
        }
    }
    let mut interior = Vec::new();
    let nx = ((x1 - x0) / h).floor() as i64;
    let ny = ((y1 - y0) / h).floor() as i64;
    for i in 1..=nx {
        for j in 1..=ny {
            let z = C64::new(x0 + i as f64 * h, y0 + j as f64 * h);
            if z.re < x1 && z.im < y1 {
                interior.push(z);
            }
        }
    }
    Grid { boundary, interior }
}

fn sample_grid(shape: &Shape, h: f64, refine: usize) -> Grid {
    let mut g = Grid::default();
    for d in &shape.disks {
        g.extend(&Grid {
            boundary: circle(d.c, d.r, h, refine),
            interior: if d.r > 0.0 { radial_lattice(d.c, 0.0, d.r, h) } else { Vec::new() },
        });
    }
    for a in &shape.annuli {
        let mut boundary = circle(a.c, a.r_out, h, refine);
        if a.r_in > 0.0 {
            boundary.extend(circle(a.c, a.r_in, h, refine));
        }
        g.extend(&Grid {
            boundary,
            interior: radial_lattice(a.c, a.r_in, a.r_out, h),
        });
    }
    for r in &shape.rects {
        g.extend(&sample_rect(r, h, refine));
    }
    g.boundary.extend_from_slice(&shape.points);
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Eval,
    Validation,
}

/// A shape together with its working grid (spacing `h`) and validation grid
/// (spacing `h/4`).
#[derive(Clone, Debug, PartialEq)]
pub struct CompactSet {
    shape: Shape,
    h: f64,
    eval: Grid,
    validation: Grid,
}

impl Serialize for CompactSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut shape = self.shape.clone();
        shape.h = Some(self.h);
        shape.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CompactSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let shape = Shape::deserialize(d)?;
        sample(&shape, shape.h).map_err(serde::de::Error::custom)
    }
}

/// Samples `shape` at density `h` (or the shape's own / default density).
pub fn sample(shape: &Shape, h: Option<f64>) -> Result<CompactSet> {
    shape.validate()?;
    if shape.is_empty() {
        return Err(Error::EmptyShape);
    }
    let h = h.or(shape.h).unwrap_or_else(|| shape.default_h());
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("sampling density must be positive, got {h}")));
    }
    // the validation lattice uses h/4 while boundary counts are refined 4x,
    // which keeps every working point in the validation grid
    let eval = sample_grid(shape, h, 1);
    let validation = {
        let mut v = sample_grid(shape, h / 4.0, 1);
        v.boundary = sample_grid(shape, h, 4).boundary;
        v
    };
    if eval.is_empty() {
        return Err(Error::EmptyShape);
    }
    Ok(CompactSet {
        shape: shape.clone(),
        h,
        eval,
        validation,
    })
}

impl CompactSet {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn flags(&self) -> SetFlags {
        self.shape.flags
    }

    pub fn grid(&self, kind: GridKind) -> &Grid {
        match kind {
            GridKind::Eval => &self.eval,
            GridKind::Validation => &self.validation,
        }
    }

    pub fn eval_grid(&self) -> &Grid {
        &self.eval
    }

    pub fn validation_grid(&self) -> &Grid {
        &self.validation
    }

    pub fn union(&self, other: &CompactSet) -> CompactSet {
        let mut eval = self.eval.clone();
        eval.extend(&other.eval);
        let mut validation = self.validation.clone();
        validation.extend(&other.validation);
        CompactSet {
            shape: self.shape.merge(&other.shape),
            h: self.h.min(other.h),
            eval,
            validation,
        }
    }

    /// The set with the origin added as an isolated sample point.
    pub fn with_origin(&self) -> CompactSet {
        let mut s = self.clone();
        s.shape.points.push(ZERO);
        s.shape.flags.contains_origin = true;
        s.eval.boundary.push(ZERO);
        s.validation.boundary.push(ZERO);
        s
    }

    pub fn contains_origin(&self) -> bool {
        self.shape.flags.contains_origin || self.shape.origin_in_primitives()
    }

    /// Grid as CSV lines `x,y` with 17 significant digits.
    pub fn grid_csv(&self, kind: GridKind) -> String {
        let mut out = String::from("x,y\n");
        for z in self.grid(kind).iter() {
            out.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetBounds {
    #[serde(rename = "M")]
    pub m: f64,
    pub dist_to_origin: f64,
}

pub fn bounds(set: &CompactSet) -> SetBounds {
    let (mut m, mut d) = (0.0_f64, f64::INFINITY);
    for z in set.validation.iter() {
        let r = z.norm();
        m = m.max(r);
        d = d.min(r);
    }
    SetBounds { m, dist_to_origin: d }
}

fn pole_on_set(e: Error) -> Error {
    match e {
        Error::PoleAtPoint { z, .. } => Error::PoleOnSet { z },
        other => other,
    }
}

pub fn sup_norm<F>(f: F, set: &CompactSet, kind: GridKind) -> Result<f64>
where
    F: Fn(C64) -> Result<C64>,
{
    sup_on(&f, set.grid(kind))
}

pub fn inf_abs<F>(f: F, set: &CompactSet, kind: GridKind) -> Result<f64>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut best = f64::INFINITY;
    for z in set.grid(kind).iter() {
        best = best.min(f(z).map_err(pole_on_set)?.norm());
    }
    Ok(best)
}

pub(crate) fn sup_on<F>(f: &F, grid: &Grid) -> Result<f64>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut best = 0.0_f64;
    for z in grid.iter() {
        let v = f(z).map_err(pole_on_set)?.norm();
        if v.is_nan() {
            return Err(Error::NonFinite("function value on the grid"));
        }
        best = best.max(v);
    }
    Ok(best)
}

fn min_distance_below(a: &Grid, b: &Grid, margin: f64) -> bool {
    let mut pts: Vec<C64> = b.iter().collect();
    pts.sort_by(|x, y| x.re.total_cmp(&y.re));
    for z in a.iter() {
        let start = pts.partition_point(|w| w.re < z.re - margin);
        for w in &pts[start..] {
            if w.re > z.re + margin {
                break;
            }
            if (w - z).norm() <= margin {
                return true;
            }
        }
    }
    false
}

/// True iff every pair of working-grid points is more than `margin` apart.
pub fn are_disjoint(a: &CompactSet, b: &CompactSet, margin: f64) -> bool {
    !min_distance_below(&a.eval, &b.eval, margin)
}
