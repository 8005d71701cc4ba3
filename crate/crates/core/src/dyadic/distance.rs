//! Hausdorff-type distances between unions of closed dyadic cubes.
//!
//! Work happens on the grid of the finer of the two levels, in integer units
//! of that grid. On a unit cell `S` of `a` that is not already covered by `b`,
//! each cube of `b` is at a fixed "relative position" (left, right, above,
//! level with, diagonal), so the distance to it is either an affine function
//! of the point or the distance to one of its corners. The maximum of the
//! pointwise minimum of these functions over `S` is attained at a corner of
//! `S`, at an edge point where two of them agree, or at an interior point
//! where three agree; all such candidates are enumerated in closed form.

use super::{shr, CellSet, Coords};
use crate::error::{Error, Result};
use rustc_hash::FxHashSet;

const MAX_REFINED: u128 = 1 << 24;

/// `sup_{p ∈ ∪a} dist(p, ∪b)`.
pub fn one_sided_distance(a: &CellSet, b: &CellSet) -> Result<f64> {
    check_pair(a, b)?;
    Engine::new(a, b)?.run()
}

/// Hausdorff distance between the unions of the cubes of `a` and `b`.
pub fn hausdorff_distance(a: &CellSet, b: &CellSet) -> Result<f64> {
    check_pair(a, b)?;
    Ok(one_sided_distance(a, b)?.max(one_sided_distance(b, a)?))
}

fn check_pair(a: &CellSet, b: &CellSet) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::invalid("distance between cell sets of different dimension"));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("distance requires non-empty cell sets"));
    }
    Ok(())
}

struct Engine<'a> {
    dim: u8,
    level: u32,
    a_cells: Vec<Coords>,
    b: &'a CellSet,
    b_set: FxHashSet<Coords>,
    /// log2 of the side of a `b` cube in units.
    fb: u32,
}

impl<'a> Engine<'a> {
    fn new(a: &CellSet, b: &'a CellSet) -> Result<Self> {
        let level = a.level().max(b.level());
        let fa = level - a.level();
        let d = a.dim() as u32;
        let total = (a.len() as u128) << (d * fa).min(100);
        if total > MAX_REFINED {
            return Err(Error::ResourceLimit {
                level,
                detail: format!("distance needs {total} refined cells"),
            });
        }
        let mut a_cells = Vec::with_capacity(total as usize);
        let k = 1u64 << fa;
        for c in a.cells() {
            let (x0, y0) = (c[0] << fa, c[1] << fa);
            if a.dim() == 1 {
                for dx in 0..k {
                    a_cells.push([x0 + dx, 0]);
                }
            } else {
                for dx in 0..k {
                    for dy in 0..k {
                        a_cells.push([x0 + dx, y0 + dy]);
                    }
                }
            }
        }
        Ok(Engine {
            dim: a.dim(),
            level,
            a_cells,
            b,
            b_set: b.to_hash_set(),
            fb: level - b.level(),
        })
    }

    fn covered(&self, s: Coords) -> bool {
        self.b_set.contains(&[shr(s[0], self.fb), shr(s[1], self.fb)])
    }

    /// Boxes of `b` (relative to the lower corner of `s`, in units) whose
    /// distance to the unit cell `s` is at most `r`.
    fn boxes_near(&self, s: Coords, r: f64) -> Vec<[f64; 4]> {
        let side = 1i128 << self.fb;
        let n_b = 1i128 << self.b.level();
        let rr = r.ceil() as i128 + 1;
        let lo = |v: u64| ((v as i128 - rr).max(0)) / side;
        let hi = |v: u64| ((v as i128 + 1 + rr) / side).min(n_b - 1);
        let (x_lo, x_hi) = (lo(s[0]), hi(s[0]));
        let (y_lo, y_hi) = if self.dim == 1 { (0, 0) } else { (lo(s[1]), hi(s[1])) };
        let span = (x_hi - x_lo + 1) * (y_hi - y_lo + 1);
        let mut out = Vec::new();
        let mut consider = |c: Coords| {
            let bx = rel_box(c, s, side, self.dim);
            if box_box_distance(&bx) <= r {
                out.push(bx);
            }
        };
        if span as u128 > self.b.len() as u128 {
            for &c in self.b.cells() {
                consider(c);
            }
        } else {
            for x in x_lo..=x_hi {
                for y in y_lo..=y_hi {
                    let c = [x as u64, y as u64];
                    if self.b_set.contains(&c) {
                        consider(c);
                    }
                }
            }
        }
        out
    }

    /// Distance from the centre of the unit cell `s` to `∪b`, in units.
    fn centre_distance(&self, s: Coords) -> f64 {
        let centre = [0.5, 0.5];
        let mut r = (1u64 << self.fb) as f64;
        loop {
            let boxes = self.boxes_near(s, r);
            let best = boxes
                .iter()
                .map(|bx| point_box_distance(centre, bx, self.dim))
                .fold(f64::INFINITY, f64::min);
            if best <= r {
                return best;
            }
            r *= 2.0;
        }
    }

    fn run(&self) -> Result<f64> {
        let half_diag = if self.dim == 1 { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 };
        let mut scored: Vec<(f64, Coords)> = self
            .a_cells
            .iter()
            .filter(|&&s| !self.covered(s))
            .map(|&s| (self.centre_distance(s), s))
            .collect();
        if scored.is_empty() {
            return Ok(0.0);
        }
        scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        let mut best = scored[0].0;
        for &(d0, s) in &scored {
            let ub = d0 + half_diag;
            if ub <= best {
                break;
            }
            let boxes = self.boxes_near(s, ub);
            best = best.max(cell_max(&boxes, self.dim));
        }
        Ok(best * (-(self.level as f64)).exp2())
    }
}

fn rel_box(c: Coords, s: Coords, side: i128, dim: u8) -> [f64; 4] {
    let x0 = c[0] as i128 * side - s[0] as i128;
    let (y0, ys) = if dim == 1 {
        (0, 1)
    } else {
        (c[1] as i128 * side - s[1] as i128, side)
    };
    [x0 as f64, (x0 + side) as f64, y0 as f64, (y0 + ys) as f64]
}

fn axis_gap(lo: f64, hi: f64, p: f64) -> f64 {
    (lo - p).max(p - hi).max(0.0)
}

fn point_box_distance(p: [f64; 2], bx: &[f64; 4], dim: u8) -> f64 {
    let dx = axis_gap(bx[0], bx[1], p[0]);
    if dim == 1 {
        return dx;
    }
    dx.hypot(axis_gap(bx[2], bx[3], p[1]))
}

/// Distance between the unit square `[0,1]²` and a box.
fn box_box_distance(bx: &[f64; 4]) -> f64 {
    let dx = (bx[0] - 1.0).max(-bx[1]).max(0.0);
    let dy = (bx[2] - 1.0).max(-bx[3]).max(0.0);
    dx.hypot(dy)
}

#[derive(Debug, Clone, Copy)]
enum Constraint {
    /// `n·p + o` with `|n| = 1`.
    Affine { n: [f64; 2], o: f64 },
    /// `|p − q|`.
    Point { q: [f64; 2] },
}

impl Constraint {
    fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            Constraint::Affine { n, o } => n[0] * p[0] + n[1] * p[1] + o,
            Constraint::Point { q } => (p[0] - q[0]).hypot(p[1] - q[1]),
        }
    }
}

/// Classifies every box relative to the unit square. Returns `None` when a
/// box covers the square.
fn constraints(boxes: &[[f64; 4]], dim: u8) -> Option<Vec<Constraint>> {
    // tightest offset per axis direction: +x, −x, +y, −y
    let mut aff = [f64::INFINITY; 4];
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for bx in boxes {
        // −1 left/below, 0 level with, +1 right/above
        let rx = if bx[1] <= 0.0 { -1 } else if bx[0] >= 1.0 { 1 } else { 0 };
        let ry = if dim == 1 {
            0
        } else if bx[3] <= 0.0 {
            -1
        } else if bx[2] >= 1.0 {
            1
        } else {
            0
        };
        match (rx, ry) {
            (0, 0) => return None,
            (-1, 0) => aff[0] = aff[0].min(-bx[1]),
            (1, 0) => aff[1] = aff[1].min(bx[0]),
            (0, -1) => aff[2] = aff[2].min(-bx[3]),
            (0, 1) => aff[3] = aff[3].min(bx[2]),
            _ => {
                let qx = if rx < 0 { bx[1] } else { bx[0] };
                let qy = if ry < 0 { bx[3] } else { bx[2] };
                pts.push([qx, qy]);
            }
        }
    }
    let normals = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    let mut out: Vec<Constraint> = aff
        .iter()
        .zip(normals)
        .filter(|(o, _)| o.is_finite())
        .map(|(&o, n)| Constraint::Affine { n, o })
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    out.extend(pts.into_iter().map(|q| Constraint::Point { q }));
    Some(out)
}

fn g(cs: &[Constraint], p: [f64; 2]) -> f64 {
    cs.iter().map(|c| c.eval(p)).fold(f64::INFINITY, f64::min)
}

/// Parameters `s` along `p0 + s·w` (`|w| = 1`) where `c1` and `c2` agree.
fn solve_on_line(p0: [f64; 2], w: [f64; 2], c1: &Constraint, c2: &Constraint) -> Vec<f64> {
    let along = |c: &Constraint| -> (bool, f64, f64, f64) {
        match *c {
            Constraint::Affine { n, o } => (
                true,
                n[0] * p0[0] + n[1] * p0[1] + o,
                n[0] * w[0] + n[1] * w[1],
                0.0,
            ),
            Constraint::Point { q } => {
                let d = [p0[0] - q[0], p0[1] - q[1]];
                (false, w[0] * d[0] + w[1] * d[1], d[0] * d[0] + d[1] * d[1], 0.0)
            }
        }
    };
    let (a1, x1, y1, _) = along(c1);
    let (a2, x2, y2, _) = along(c2);
    let mut out = Vec::new();
    match (a1, a2) {
        (true, true) => {
            // x = α, y = β: α1 + β1 s = α2 + β2 s
            let db = y1 - y2;
            if db.abs() > 1e-14 {
                out.push((x2 - x1) / db);
            }
        }
        (false, false) => {
            // x = γ, y = δ: s² + 2γ s + δ equal
            let dg = 2.0 * (x1 - x2);
            if dg.abs() > 1e-14 {
                out.push((y2 - y1) / dg);
            }
        }
        _ => {
            let ((al, be), (ga, de)) = if a1 { ((x1, y1), (x2, y2)) } else { ((x2, y2), (x1, y1)) };
            // (α + β s)² = s² + 2γ s + δ
            let qa = be * be - 1.0;
            let qb = 2.0 * (al * be - ga);
            let qc = al * al - de;
            for s in quadratic_roots(qa, qb, qc) {
                if al + be * s >= -1e-12 {
                    out.push(s);
                }
            }
        }
    }
    out
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-14 {
        if b.abs() < 1e-14 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc > -1e-12 * (b * b).max(1.0) {
            return vec![-b / (2.0 * a)];
        }
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut r = Vec::with_capacity(2);
    if q != 0.0 {
        r.push(q / a);
        r.push(c / q);
    } else {
        r.push(0.0);
    }
    r
}

/// The line of points where two constraints of the same kind agree.
fn bisector(c1: &Constraint, c2: &Constraint) -> Option<([f64; 2], [f64; 2])> {
    match (*c1, *c2) {
        (Constraint::Affine { n: n1, o: o1 }, Constraint::Affine { n: n2, o: o2 }) => {
            let m = [n1[0] - n2[0], n1[1] - n2[1]];
            let mm = m[0] * m[0] + m[1] * m[1];
            if mm < 1e-20 {
                return None;
            }
            let k = (o2 - o1) / mm;
            let len = mm.sqrt();
            Some(([m[0] * k, m[1] * k], [-m[1] / len, m[0] / len]))
        }
        (Constraint::Point { q: q1 }, Constraint::Point { q: q2 }) => {
            let d = [q2[0] - q1[0], q2[1] - q1[1]];
            let len = d[0].hypot(d[1]);
            if len < 1e-14 {
                return None;
            }
            let mid = [0.5 * (q1[0] + q2[0]), 0.5 * (q1[1] + q2[1])];
            Some((mid, [-d[1] / len, d[0] / len]))
        }
        _ => None,
    }
}

fn same_kind(c1: &Constraint, c2: &Constraint) -> bool {
    matches!(
        (c1, c2),
        (Constraint::Affine { .. }, Constraint::Affine { .. })
            | (Constraint::Point { .. }, Constraint::Point { .. })
    )
}

/// `max_{p ∈ [0,1]²} min_box dist(p, box)` in units.
fn cell_max(boxes: &[[f64; 4]], dim: u8) -> f64 {
    let cs = match constraints(boxes, dim) {
        Some(cs) => cs,
        None => return 0.0,
    };
    if cs.is_empty() {
        return 0.0;
    }
    const EPS: f64 = 1e-9;
    let inside = |p: [f64; 2]| -> Option<[f64; 2]> {
        let ymax = if dim == 1 { 0.0 } else { 1.0 };
        if p[0] >= -EPS && p[0] <= 1.0 + EPS && p[1] >= -EPS && p[1] <= ymax + EPS {
            Some([p[0].clamp(0.0, 1.0), p[1].clamp(0.0, ymax)])
        } else {
            None
        }
    };
    let mut best = 0.0f64;
    let mut try_point = |p: [f64; 2]| {
        if let Some(p) = inside(p) {
            best = best.max(g(&cs, p));
        }
    };
    let corners: &[[f64; 2]] = if dim == 1 {
        &[[0.0, 0.0], [1.0, 0.0]]
    } else {
        &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
    };
    for &p in corners {
        try_point(p);
    }
    let edges: &[([f64; 2], [f64; 2])] = if dim == 1 {
        &[([0.0, 0.0], [1.0, 0.0])]
    } else {
        &[
            ([0.0, 0.0], [1.0, 0.0]),
            ([0.0, 1.0], [1.0, 0.0]),
            ([0.0, 0.0], [0.0, 1.0]),
            ([1.0, 0.0], [0.0, 1.0]),
        ]
    };
    for &(p0, w) in edges {
        for i in 0..cs.len() {
            for j in (i + 1)..cs.len() {
                for s in solve_on_line(p0, w, &cs[i], &cs[j]) {
                    if (-EPS..=1.0 + EPS).contains(&s) {
                        try_point([p0[0] + s * w[0], p0[1] + s * w[1]]);
                    }
                }
            }
        }
    }
    if dim == 2 {
        for i in 0..cs.len() {
            for j in (i + 1)..cs.len() {
                for k in (j + 1)..cs.len() {
                    let trip = [&cs[i], &cs[j], &cs[k]];
                    let (x, y, z) = if same_kind(trip[0], trip[1]) {
                        (trip[0], trip[1], trip[2])
                    } else if same_kind(trip[0], trip[2]) {
                        (trip[0], trip[2], trip[1])
                    } else {
                        (trip[1], trip[2], trip[0])
                    };
                    if let Some((p0, w)) = bisector(x, y) {
                        for s in solve_on_line(p0, w, x, z) {
                            try_point([p0[0] + s * w[0], p0[1] + s * w[1]]);
                        }
                    }
                }
            }
        }
    }
    best
}
