//! Outer rasterization of attractors.
//!
//! Words are refined until the image of the seed box under `T_w` has axis
//! extents at most one cell side (or fits inside a single cell); every closed
//! cell meeting one of these parallelograms is marked. The seed box contains
//! the attractor, so the output contains every closed cell meeting it, and
//! each output cell meets a parallelogram of diameter `≤ √2·2^-level` that
//! itself meets the attractor.
//!
//! A window restricts the output to the cells inside one dyadic cube; words
//! whose parallelogram misses the closed cube are pruned.

use super::{AffineMap2, BBox, Ifs};
use crate::dyadic::{CellSet, Coords, DyadicCube, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

/// Default cap on the number of refined words.
pub const DEFAULT_LEAF_LIMIT: u64 = 1 << 30;

/// Cap on marked cells (counted per worker, so duplicates across workers
/// count twice); keeps a raster within a few GiB.
pub const CELL_LIMIT: u64 = 1 << 26;

pub fn rasterize(ifs: &Ifs, level: u32) -> Result<CellSet> {
    rasterize_with_limit(ifs, level, DEFAULT_LEAF_LIMIT)
}

pub fn rasterize_with_limit(ifs: &Ifs, level: u32, leaf_limit: u64) -> Result<CellSet> {
    run(ifs, level, None, leaf_limit)
}

/// Level-`level` cells of the attractor lying inside `q`, in global coordinates.
pub fn rasterize_window(ifs: &Ifs, q: &DyadicCube, level: u32) -> Result<CellSet> {
    rasterize_window_with_limit(ifs, q, level, DEFAULT_LEAF_LIMIT)
}

pub fn rasterize_window_with_limit(ifs: &Ifs, q: &DyadicCube, level: u32, leaf_limit: u64) -> Result<CellSet> {
    if q.dim() != ifs.dim() {
        return Err(Error::invalid("window and IFS dimensions differ"));
    }
    if q.level() > level {
        return Err(Error::invalid(format!(
            "window level {} exceeds the raster level {level}",
            q.level()
        )));
    }
    run(ifs, level, Some(q), leaf_limit)
}

fn run(ifs: &Ifs, level: u32, window: Option<&DyadicCube>, leaf_limit: u64) -> Result<CellSet> {
    if level > MAX_LEVEL {
        return Err(Error::invalid(format!(
            "level {level} exceeds the cap of {MAX_LEVEL}"
        )));
    }
    let clip = window.map(|q| {
        let s = level - q.level();
        let c = q.coords();
        let y = if q.dim() == 1 { 0 } else { c[1] << s };
        let ny = if q.dim() == 1 { 1 } else { 1u64 << s };
        ([c[0] << s, y], [(c[0] << s) + (1u64 << s) - 1, y + ny - 1])
    });
    let mut maps: Vec<AffineMap2> = Vec::new();
    for m in ifs.normalized_maps() {
        if !maps.contains(m) {
            maps.push(*m);
        }
    }
    let r = Raster {
        dim: ifs.dim(),
        level,
        h: (-(level as f64)).exp2(),
        n: 1u64 << level,
        seed: ifs.seed(),
        clip,
        maps,
        leaves: AtomicU64::new(0),
        limit: leaf_limit,
        cells: AtomicU64::new(0),
        over: AtomicBool::new(false),
    };
    let mut frontier = vec![AffineMap2::IDENTITY];
    let mut done: FxHashSet<Coords> = FxHashSet::default();
    let target = 64 * rayon::current_num_threads().max(1);
    while !frontier.is_empty() && frontier.len() < target {
        let mut next = Vec::with_capacity(frontier.len() * r.maps.len());
        for w in frontier {
            if !r.visit_leaf(&w, &mut done) {
                next.extend(r.maps.iter().map(|m| w.then_inner(m)));
            }
        }
        frontier = next;
    }
    let parts: Vec<FxHashSet<Coords>> = frontier
        .par_iter()
        .map(|w| {
            let mut out = FxHashSet::default();
            r.descend(*w, &mut out);
            out
        })
        .collect();
    if r.over.load(Ordering::Relaxed) {
        return Err(Error::ResourceLimit {
            level,
            detail: format!(
                "rasterization needs more than {} words or {CELL_LIMIT} cells",
                r.limit
            ),
        });
    }
    let mut cells: Vec<Coords> = done.into_iter().collect();
    for p in parts {
        cells.extend(p);
    }
    CellSet::new(ifs.dim(), level, cells)
}

struct Raster {
    dim: u8,
    level: u32,
    h: f64,
    n: u64,
    seed: BBox,
    /// Inclusive cell-index ranges `(lo, hi)` of the window.
    clip: Option<(Coords, Coords)>,
    maps: Vec<AffineMap2>,
    leaves: AtomicU64,
    limit: u64,
    cells: AtomicU64,
    over: AtomicBool,
}

impl Raster {
    fn descend(&self, w: AffineMap2, out: &mut FxHashSet<Coords>) {
        if self.over.load(Ordering::Relaxed) {
            return;
        }
        if self.visit_leaf(&w, out) {
            return;
        }
        for m in &self.maps {
            self.descend(w.then_inner(m), out);
        }
    }

    /// Marks the cells of `T_w(seed)` and returns true when `w` needs no
    /// refinement or misses the window.
    fn visit_leaf(&self, w: &AffineMap2, out: &mut FxHashSet<Coords>) -> bool {
        let corners = self.seed.corners().map(|c| w.apply(c));
        let (lo, hi) = bounds(&corners);
        let eps = 1e-9 * self.h + 1e-15;
        let idx = |v: f64| -> i64 { (v / self.h).floor() as i64 };
        let x0 = idx(lo.x - eps);
        let x1 = idx(hi.x + eps);
        let (y0, y1) = if self.dim == 1 {
            (0, 0)
        } else {
            (idx(lo.y - eps), idx(hi.y + eps))
        };
        let max = self.n as i64 - 1;
        let ((cx0, cy0), (cx1, cy1)) = match self.clip {
            Some((a, b)) => ((a[0] as i64, a[1] as i64), (b[0] as i64, b[1] as i64)),
            None => ((0, 0), (max, if self.dim == 1 { 0 } else { max })),
        };
        if self.clip.is_some() && (x1 < cx0 || x0 > cx1 || y1 < cy0 || y0 > cy1) {
            return true;
        }
        let small = hi.x - lo.x <= self.h * (1.0 + 1e-9)
            && (self.dim == 1 || hi.y - lo.y <= self.h * (1.0 + 1e-9));
        let single = x0 == x1 && y0 == y1;
        if !(small || single || self.level == 0) {
            return false;
        }
        if self.leaves.fetch_add(1, Ordering::Relaxed) >= self.limit {
            self.over.store(true, Ordering::Relaxed);
            return true;
        }
        let (x0, x1) = (x0.max(cx0), x1.min(cx1));
        let (y0, y1) = (y0.max(cy0), y1.min(cy1));
        for x in x0..=x1 {
            for y in y0..=y1 {
                if self.meets(&corners, x, y, eps)
                    && out.insert([x as u64, y as u64])
                    && self.cells.fetch_add(1, Ordering::Relaxed) >= CELL_LIMIT
                {
                    self.over.store(true, Ordering::Relaxed);
                    return true;
                }
            }
        }
        true
    }

    /// Separating-axis test between a parallelogram and a cell grown by `eps`.
    fn meets(&self, p: &[Vec2; 4], x: i64, y: i64, eps: f64) -> bool {
        let (cx0, cx1) = (x as f64 * self.h - eps, (x + 1) as f64 * self.h + eps);
        let (px0, px1) = span(p, Vec2::new(1.0, 0.0));
        if px1 < cx0 || cx1 < px0 {
            return false;
        }
        if self.dim == 1 {
            return true;
        }
        let (cy0, cy1) = (y as f64 * self.h - eps, (y + 1) as f64 * self.h + eps);
        let (py0, py1) = span(p, Vec2::new(0.0, 1.0));
        if py1 < cy0 || cy1 < py0 {
            return false;
        }
        let cell = [
            Vec2::new(cx0, cy0),
            Vec2::new(cx1, cy0),
            Vec2::new(cx1, cy1),
            Vec2::new(cx0, cy1),
        ];
        for e in [p[1] - p[0], p[3] - p[0]] {
            let n = e.perp();
            if n.norm() == 0.0 {
                continue;
            }
            let (a0, a1) = span(p, n);
            let (b0, b1) = span(&cell, n);
            if a1 < b0 || b1 < a0 {
                return false;
            }
        }
        true
    }
}

fn bounds(p: &[Vec2; 4]) -> (Vec2, Vec2) {
    let mut lo = p[0];
    let mut hi = p[0];
    for q in &p[1..] {
        lo = Vec2::new(lo.x.min(q.x), lo.y.min(q.y));
        hi = Vec2::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    (lo, hi)
}

fn span(p: &[Vec2; 4], n: Vec2) -> (f64, f64) {
    let mut a = f64::INFINITY;
    let mut b = f64::NEG_INFINITY;
    for q in p {
        let v = q.dot(n);
        a = a.min(v);
        b = b.max(v);
    }
    (a, b)
}
