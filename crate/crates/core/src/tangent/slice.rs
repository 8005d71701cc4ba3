use super::pigeonhole::{counting_holds, profile};
use super::zoom::certify;
use crate::dimension::{select_windows, WindowSearch};
use crate::dyadic::{CellSet, DyadicCube};
use crate::error::{Error, Result};
use crate::ifs::{rasterize_window_with_limit, Ifs};
use crate::semigroup::Direction;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceConfig {
    /// Estimate of `dim_A K`.
    pub s_est: f64,
    /// Estimate of `dim_A π(K)` for the projection along the tubes.
    pub eta_est: f64,
    /// Cap on the window depth; the search uses `min(2n², depth_cap)`.
    pub depth_cap: u32,
    /// Coarse window levels tried in order; empty means `0, M/2, M, 3M/2`.
    pub coarse_levels: Vec<u32>,
    pub search: WindowSearch,
}

impl SliceConfig {
    pub fn new(s_est: f64, eta_est: f64) -> Self {
        SliceConfig { s_est, eta_est, depth_cap: 10, coarse_levels: Vec::new(), search: WindowSearch::default() }
    }
}

/// A vertical tube of a zoom window with a certified counting table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceResult {
    pub n: u32,
    /// Window depth `M`: the window is blown up to level `M` and split into
    /// `2^M` tubes of width `2^-M`.
    pub depth: u32,
    pub window: DyadicCube,
    /// `N_M(ψ_Q(K)∩Q₀)` and the weak-tangent requirement `2^{M(s−1/n)}`.
    pub window_count: usize,
    pub window_required: f64,
    pub occupied_tubes: usize,
    /// Tube index at level `M` inside the window.
    pub tube: u64,
    pub tube_count: usize,
    /// Descent parameters `t = s − η − 2/n`, `s = t − 1/n`.
    pub t: f64,
    pub s: f64,
    /// Heights of the tube's cells at level `M`.
    #[serde(with = "cells_1d")]
    pub tube_cells: CellSet,
    /// Certified sub-interval of the tube, in tube coordinates.
    pub cube: DyadicCube,
    /// `N_{p+j}` of the tube inside `cube`, `0 ≤ j ≤ n`.
    pub table: Vec<usize>,
    /// `min_{1≤j≤n} log₂(table[j])/j`.
    pub certified_exponent: f64,
}

impl SliceResult {
    /// Recount of the table from the stored tube cells.
    pub fn verify(&self) -> bool {
        if self.tube_cells.dim() != 1 || self.tube_cells.level() != self.depth || self.tube_count != self.tube_cells.len() {
            return false;
        }
        if self.table.len() != self.n as usize + 1 || self.cube.level() + self.n > self.depth {
            return false;
        }
        let Ok(inside) = self.tube_cells.restrict(&self.cube) else { return false };
        let (table, _) = profile(&inside, &self.cube, self.n);
        table == self.table && counting_holds(&table, self.s) && exponent(&table) == self.certified_exponent
    }
}

fn exponent(table: &[usize]) -> f64 {
    table
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &c)| (c as f64).log2() / j as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Desk-scale run of the tube pigeonhole: a zoom window with
/// `N_M ≥ 2^{M(s−1/n)}`, its most populated tube of width `2^-M` (which
/// holds at least the average over occupied tubes), then the counting
/// descent inside the tube with `ℓ = k = n`.
pub fn tangent_slice_search(ifs: &Ifs, v: &Direction, n: u32, config: &SliceConfig) -> Result<SliceResult> {
    if ifs.dim() != 2 {
        return Err(Error::invalid("slicing needs a planar IFS"));
    }
    if *v != Direction::horizontal() {
        return Err(Error::Unsupported("tubes are vertical only; V must be horizontal".into()));
    }
    if n < 4 {
        return Err(Error::invalid(format!("n = {n} must be at least 4")));
    }
    if !(config.s_est.is_finite() && config.eta_est.is_finite()) {
        return Err(Error::invalid("estimates must be finite"));
    }
    let nf = n as f64;
    let depth = (2 * n * n).min(config.depth_cap);
    if depth < n {
        return Err(Error::invalid(format!("depth cap {} is below n = {n}", config.depth_cap)));
    }
    let required = (depth as f64 * (config.s_est - 1.0 / nf)).exp2();
    let levels: Vec<u32> = if config.coarse_levels.is_empty() {
        vec![0, depth / 2, depth, depth + depth / 2]
    } else {
        config.coarse_levels.clone()
    };
    let mut best = 0usize;
    let mut found = None;
    'search: for kk in levels {
        let windows = select_windows(ifs, kk, config.search.lookahead.min(depth), &config.search)
            .map_err(|e| Error::stage("weak-tangent", e))?;
        for q in windows {
            let cells = rasterize_window_with_limit(ifs, &q, kk + depth, config.search.leaf_limit)
                .and_then(|c| c.renormalize(&q))
                .map_err(|e| Error::stage("weak-tangent", e))?;
            best = best.max(cells.len());
            if cells.len() as f64 >= required {
                found = Some((q, cells));
                break 'search;
            }
        }
    }
    let (window, cells) = found.ok_or_else(|| {
        Error::stage("weak-tangent", Error::InsufficientMass { level: depth, measured: best, required })
    })?;
    let mut columns: BTreeMap<u64, Vec<[u64; 2]>> = BTreeMap::new();
    for c in cells.cells() {
        columns.entry(c[0]).or_default().push([c[1], 0]);
    }
    let (&tube, ys) = columns
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .expect("window is non-empty");
    let tube_cells = CellSet::new(1, depth, ys.iter().copied())?;
    let t = config.s_est - config.eta_est - 2.0 / nf;
    let s = t - 1.0 / nf;
    let tube_required = (depth as f64 * t).exp2();
    if (tube_cells.len() as f64) < tube_required {
        return Err(Error::stage(
            "tube",
            Error::InsufficientMass { level: depth, measured: tube_cells.len(), required: tube_required },
        ));
    }
    let (cube, table) = certify(&tube_cells, s, n).ok_or_else(|| {
        Error::stage(
            "slice-descent",
            Error::NonConvergence { steps: depth as usize, detail: format!("no cube certifies exponent {s:.4}") },
        )
    })?;
    Ok(SliceResult {
        n,
        depth,
        window,
        window_count: cells.len(),
        window_required: required,
        occupied_tubes: columns.len(),
        tube,
        tube_count: tube_cells.len(),
        t,
        s,
        tube_cells,
        cube,
        certified_exponent: exponent(&table),
        table,
    })
}

/// Serializes a 1-D cell set inline as `{level, cells}`.
mod cells_1d {
    use crate::dyadic::CellSet;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        level: u32,
        cells: Vec<u64>,
    }

    pub fn serialize<S: Serializer>(c: &CellSet, s: S) -> Result<S::Ok, S::Error> {
        Repr { level: c.level(), cells: c.cells().iter().map(|c| c[0]).collect() }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CellSet, D::Error> {
        let r = Repr::deserialize(d)?;
        CellSet::new(1, r.level, r.cells.into_iter().map(|x| [x, 0])).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;
    use crate::linalg::{Mat2, Vec2};

    fn diag(a: f64, b: f64, pts: &[(f64, f64)]) -> Ifs {
        Ifs::new(pts.iter().map(|&(x, y)| AffineMap2::new(Mat2::diag(a, b), Vec2::new(x, y))).collect()).unwrap()
    }

    #[test]
    fn full_square_tube_is_an_interval() {
        let sq = diag(0.5, 0.5, &[(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]);
        let r = tangent_slice_search(&sq, &Direction::horizontal(), 6, &SliceConfig::new(2.0, 1.0)).unwrap();
        assert_eq!(r.tube_count, 1 << r.depth);
        assert_eq!(r.table, (0..=6).map(|j| 1usize << j).collect::<Vec<_>>());
        assert!(r.verify());
    }

    #[test]
    fn bedford_mcmullen_slice() {
        let bm = diag(0.25, 0.5, &[(0.0, 0.0), (0.0, 0.5), (0.5, 0.0)]);
        let r = tangent_slice_search(&bm, &Direction::horizontal(), 6, &SliceConfig::new(1.5, 0.5)).unwrap();
        assert!(r.verify());
        assert!(r.certified_exponent >= 1.5 - 0.5 - 0.5);
        // oracle: rebuild the tube from a fresh raster of the window
        let w = crate::ifs::rasterize_window(&bm, &r.window, r.window.level() + r.depth).unwrap();
        let blown = w.renormalize(&r.window).unwrap();
        let ys: Vec<[u64; 2]> = blown.cells().iter().filter(|c| c[0] == r.tube).map(|c| [c[1], 0]).collect();
        assert_eq!(CellSet::new(1, r.depth, ys).unwrap(), r.tube_cells);
    }

    #[test]
    fn rejects_bad_input() {
        let c = Ifs::new_1d(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]).unwrap();
        let cfg = SliceConfig::new(0.63, 0.63);
        assert!(matches!(
            tangent_slice_search(&c, &Direction::horizontal(), 6, &cfg),
            Err(Error::InvalidArgument(_))
        ));
        let bm = diag(0.25, 0.5, &[(0.0, 0.0), (0.0, 0.5), (0.5, 0.0)]);
        assert!(matches!(
            tangent_slice_search(&bm, &Direction::vertical(), 6, &cfg),
            Err(Error::Unsupported(_))
        ));
        let cfg = SliceConfig { coarse_levels: vec![0, 4], ..SliceConfig::new(1.9, 0.5) };
        let e = tangent_slice_search(&bm, &Direction::horizontal(), 6, &cfg).unwrap_err();
        assert!(matches!(e, Error::Stage { ref stage, .. } if stage == "weak-tangent"));
    }
}
