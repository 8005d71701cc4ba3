//! Closed dyadic cubes in `[0,1]^d` (d ∈ {1, 2}) and finite unions of them.
//!
//! A [`CellSet`] is the resolution-`2^-m` approximation of a compact set: the
//! list of closed level-`m` cubes meeting it. All counting machinery
//! (covering numbers, restriction, renormalization) is exact integer
//! arithmetic on cube coordinates.

mod distance;
mod text;

pub use distance::{hausdorff_distance, one_sided_distance};

use crate::error::{Error, Result};
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Largest supported level per axis.
pub const MAX_LEVEL: u32 = 62;

/// Coordinates of a cube; the second entry is always 0 in dimension 1.
pub type Coords = [u64; 2];

fn check_dim(dim: u8) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")))
    }
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        Err(Error::invalid(format!(
            "level {level} exceeds the cap of {MAX_LEVEL}"
        )))
    } else {
        Ok(())
    }
}

/// A closed dyadic cube `∏ [c_i 2^-n, (c_i+1) 2^-n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "CubeRepr", into = "CubeRepr")]
pub struct DyadicCube {
    dim: u8,
    level: u32,
    coords: Coords,
}

#[derive(Serialize, Deserialize)]
struct CubeRepr {
    level: u32,
    coords: Vec<u64>,
}

impl TryFrom<CubeRepr> for DyadicCube {
    type Error = Error;
    fn try_from(r: CubeRepr) -> Result<Self> {
        DyadicCube::new(r.coords.len() as u8, r.level, &r.coords)
    }
}

impl From<DyadicCube> for CubeRepr {
    fn from(q: DyadicCube) -> Self {
        CubeRepr { level: q.level, coords: q.coords().to_vec() }
    }
}

impl DyadicCube {
    pub fn new(dim: u8, level: u32, coords: &[u64]) -> Result<Self> {
        check_dim(dim)?;
        check_level(level)?;
        if coords.len() != dim as usize {
            return Err(Error::invalid(format!(
                "expected {dim} coordinates, got {}",
                coords.len()
            )));
        }
        let side = 1u64 << level;
        let mut c = [0u64; 2];
        for (i, &v) in coords.iter().enumerate() {
            if v >= side {
                return Err(Error::invalid(format!(
                    "coordinate {v} out of range for level {level}"
                )));
            }
            c[i] = v;
        }
        Ok(DyadicCube { dim, level, coords: c })
    }

    /// The unit cube `[0,1]^d`.
    pub fn root(dim: u8) -> Self {
        DyadicCube { dim, level: 0, coords: [0, 0] }
    }

    pub(crate) fn from_raw(dim: u8, level: u32, coords: Coords) -> Self {
        DyadicCube { dim, level, coords }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords[..self.dim as usize]
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Lower corner and side length in `[0,1]^d` coordinates.
    pub fn bounds(&self) -> ([f64; 2], f64) {
        let s = self.side();
        ([self.coords[0] as f64 * s, self.coords[1] as f64 * s], s)
    }

    /// The ancestor at `level` (must not exceed `self.level`).
    pub fn ancestor(&self, level: u32) -> DyadicCube {
        debug_assert!(level <= self.level);
        let sh = self.level - level;
        DyadicCube {
            dim: self.dim,
            level,
            coords: [shr(self.coords[0], sh), shr(self.coords[1], sh)],
        }
    }

    /// Whether `other` is contained in `self` (closed containment of cubes on the grid).
    pub fn contains(&self, other: &DyadicCube) -> bool {
        other.dim == self.dim && other.level >= self.level && other.ancestor(self.level) == *self
    }

    /// `ψ_self⁻¹(local)`: the sub-cube of `self` that `local` names in the
    /// blown-up coordinates of `self`.
    pub fn descendant(&self, local: &DyadicCube) -> Result<DyadicCube> {
        if local.dim != self.dim {
            return Err(Error::invalid("cube dimensions differ"));
        }
        let level = self.level + local.level;
        check_level(level)?;
        let sh = local.level;
        let c = [(self.coords[0] << sh) + local.coords[0], (self.coords[1] << sh) + local.coords[1]];
        Ok(DyadicCube::from_raw(self.dim, level, if self.dim == 1 { [c[0], 0] } else { c }))
    }

    /// Children one level down, in lexicographic order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let l = self.level + 1;
        let [x, y] = self.coords;
        if self.dim == 1 {
            vec![
                DyadicCube::from_raw(1, l, [2 * x, 0]),
                DyadicCube::from_raw(1, l, [2 * x + 1, 0]),
            ]
        } else {
            let mut v = Vec::with_capacity(4);
            for dx in 0..2 {
                for dy in 0..2 {
                    v.push(DyadicCube::from_raw(2, l, [2 * x + dx, 2 * y + dy]));
                }
            }
            v
        }
    }
}

#[inline]
pub(crate) fn shr(v: u64, sh: u32) -> u64 {
    if sh >= 64 {
        0
    } else {
        v >> sh
    }
}

/// A finite union of closed dyadic cubes of a common level.
///
/// Cells are kept sorted and duplicate-free, so every derived quantity is
/// independent of construction order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSet {
    dim: u8,
    level: u32,
    cells: Vec<Coords>,
}

impl CellSet {
    /// Builds a cell set, validating coordinates. Duplicates are removed.
    pub fn new<I>(dim: u8, level: u32, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = Coords>,
    {
        check_dim(dim)?;
        check_level(level)?;
        let side = 1u64 << level;
        let mut v: Vec<Coords> = Vec::new();
        for c in cells {
            if c[0] >= side || (dim == 2 && c[1] >= side) || (dim == 1 && c[1] != 0) {
                return Err(Error::invalid(format!(
                    "cell {:?} out of range for dim {dim} level {level}",
                    &c[..dim as usize]
                )));
            }
            v.push(c);
        }
        v.sort_unstable();
        v.dedup();
        Ok(CellSet { dim, level, cells: v })
    }

    /// Constructs from already sorted, deduplicated and valid coordinates.
    pub(crate) fn from_sorted(dim: u8, level: u32, cells: Vec<Coords>) -> Self {
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        CellSet { dim, level, cells }
    }

    pub(crate) fn from_unsorted(dim: u8, level: u32, mut cells: Vec<Coords>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CellSet { dim, level, cells }
    }

    /// Every cube of the given level.
    pub fn full(dim: u8, level: u32) -> Result<Self> {
        check_dim(dim)?;
        check_level(level)?;
        let side = 1u64 << level;
        let total = if dim == 1 { side as u128 } else { (side as u128) * (side as u128) };
        if total > (1u128 << 28) {
            return Err(Error::ResourceLimit {
                level,
                detail: format!("full grid would hold {total} cells"),
            });
        }
        let cells = if dim == 1 {
            (0..side).map(|x| [x, 0]).collect()
        } else {
            (0..side)
                .flat_map(|x| (0..side).map(move |y| [x, y]))
                .collect()
        };
        Ok(CellSet { dim, level, cells })
    }

    pub fn empty(dim: u8, level: u32) -> Result<Self> {
        CellSet::new(dim, level, std::iter::empty())
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Sorted cell coordinates (second entry is 0 in dimension 1).
    pub fn cells(&self) -> &[Coords] {
        &self.cells
    }

    pub fn cubes(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        self.cells
            .iter()
            .map(move |&c| DyadicCube::from_raw(self.dim, self.level, c))
    }

    pub fn contains(&self, coords: Coords) -> bool {
        self.cells.binary_search(&coords).is_ok()
    }

    /// Level-`n` dyadic covering number `N_n` of the represented union.
    pub fn covering_number(&self, n: u32) -> Result<usize> {
        if n > self.level {
            return Err(Error::invalid(format!(
                "cannot count at level {n} finer than the representation level {}",
                self.level
            )));
        }
        if n == self.level {
            return Ok(self.cells.len());
        }
        let sh = self.level - n;
        let mut v: Vec<Coords> = self
            .cells
            .iter()
            .map(|c| [shr(c[0], sh), shr(c[1], sh)])
            .collect();
        v.sort_unstable();
        v.dedup();
        Ok(v.len())
    }

    /// Covering numbers for every level `0..=self.level`.
    pub fn covering_profile(&self) -> Vec<usize> {
        (0..=self.level)
            .map(|n| self.covering_number(n).expect("level in range"))
            .collect()
    }

    /// The same union represented at a coarser level.
    pub fn truncate(&self, n: u32) -> Result<CellSet> {
        if n > self.level {
            return Err(Error::invalid(format!(
                "cannot truncate level {} to finer level {n}",
                self.level
            )));
        }
        let sh = self.level - n;
        let v = self
            .cells
            .iter()
            .map(|c| [shr(c[0], sh), shr(c[1], sh)])
            .collect();
        Ok(CellSet::from_unsorted(self.dim, n, v))
    }

    /// Every closed level-`level` cube containing `point`.
    pub fn point_cells(point: &[f64], level: u32) -> Result<CellSet> {
        let dim = point.len();
        if dim != 1 && dim != 2 {
            return Err(Error::invalid("point must have 1 or 2 coordinates"));
        }
        check_level(level)?;
        let mut axes: Vec<Vec<u64>> = Vec::with_capacity(dim);
        for &v in point {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("coordinate {v} outside [0,1]")));
            }
            axes.push(axis_cells(v, level));
        }
        let mut cells = Vec::new();
        if dim == 1 {
            cells.extend(axes[0].iter().map(|&x| [x, 0]));
        } else {
            for &x in &axes[0] {
                for &y in &axes[1] {
                    cells.push([x, y]);
                }
            }
        }
        CellSet::new(dim as u8, level, cells)
    }

    fn check_cube(&self, q: &DyadicCube) -> Result<()> {
        if q.dim != self.dim {
            return Err(Error::invalid(format!(
                "cube dimension {} does not match cell set dimension {}",
                q.dim, self.dim
            )));
        }
        if q.level > self.level {
            return Err(Error::invalid(format!(
                "cube level {} is finer than cell set level {}",
                q.level, self.level
            )));
        }
        Ok(())
    }

    /// Cells lying inside the cube `q`.
    pub fn restrict(&self, q: &DyadicCube) -> Result<CellSet> {
        self.check_cube(q)?;
        let sh = self.level - q.level;
        let cells = if self.dim == 1 {
            // sorted by x, so the prefix is a contiguous range
            let lo = q.coords[0] << sh;
            let hi = lo + (1u64 << sh);
            let a = self.cells.partition_point(|c| c[0] < lo);
            let b = self.cells.partition_point(|c| c[0] < hi);
            self.cells[a..b].to_vec()
        } else {
            let lo = q.coords[0] << sh;
            let hi = lo + (1u64 << sh);
            let a = self.cells.partition_point(|c| c[0] < lo);
            let b = self.cells.partition_point(|c| c[0] < hi);
            self.cells[a..b]
                .iter()
                .filter(|c| shr(c[1], sh) == q.coords[1])
                .copied()
                .collect()
        };
        Ok(CellSet::from_sorted(self.dim, self.level, cells))
    }

    /// `ψ_Q(X ∩ Q)`: the restriction to `q` blown up to the unit cube, at
    /// level `self.level − q.level`.
    pub fn renormalize(&self, q: &DyadicCube) -> Result<CellSet> {
        let r = self.restrict(q)?;
        if r.is_empty() {
            return Err(Error::EmptyResult(format!(
                "no cells inside cube {:?} at level {}",
                q.coords(),
                q.level
            )));
        }
        let sh = self.level - q.level;
        let off = [q.coords[0] << sh, q.coords[1] << sh];
        let cells = r
            .cells
            .iter()
            .map(|c| [c[0] - off[0], c[1] - off[1]])
            .collect();
        Ok(CellSet::from_sorted(self.dim, sh, cells))
    }

    /// Counts of cells grouped by their ancestor at level `k`.
    pub fn occupancy(&self, k: u32) -> Result<BTreeMap<Coords, usize>> {
        if k > self.level {
            return Err(Error::invalid(format!(
                "level {k} is finer than {}",
                self.level
            )));
        }
        let sh = self.level - k;
        let mut m = BTreeMap::new();
        for c in &self.cells {
            *m.entry([shr(c[0], sh), shr(c[1], sh)]).or_insert(0) += 1;
        }
        Ok(m)
    }

    /// Groups cells by their level-`k` ancestor; each group is renormalized
    /// to level `self.level − k`. Groups come out in ancestor order.
    pub fn windows(&self, k: u32) -> Result<Vec<(DyadicCube, CellSet)>> {
        if k > self.level {
            return Err(Error::invalid(format!(
                "window level {k} is finer than {}",
                self.level
            )));
        }
        let sh = self.level - k;
        let mask = if sh >= 64 { u64::MAX } else { (1u64 << sh) - 1 };
        let mut groups: BTreeMap<Coords, Vec<Coords>> = BTreeMap::new();
        for c in &self.cells {
            groups
                .entry([shr(c[0], sh), shr(c[1], sh)])
                .or_default()
                .push([c[0] & mask, c[1] & mask]);
        }
        Ok(groups
            .into_iter()
            .map(|(q, cells)| {
                (
                    DyadicCube::from_raw(self.dim, k, q),
                    CellSet::from_unsorted(self.dim, sh, cells),
                )
            })
            .collect())
    }

    /// Union with another cell set of the same dimension and level.
    pub fn union(&self, other: &CellSet) -> Result<CellSet> {
        if self.dim != other.dim || self.level != other.level {
            return Err(Error::invalid("union requires equal dimension and level"));
        }
        let mut v = self.cells.clone();
        v.extend_from_slice(&other.cells);
        Ok(CellSet::from_unsorted(self.dim, self.level, v))
    }

    /// Cartesian product of two 1-D cell sets of equal level.
    pub fn product(xs: &CellSet, ys: &CellSet) -> Result<CellSet> {
        if xs.dim != 1 || ys.dim != 1 || xs.level != ys.level {
            return Err(Error::invalid(
                "product requires two 1-D cell sets of equal level",
            ));
        }
        let mut v = Vec::with_capacity(xs.len() * ys.len());
        for x in &xs.cells {
            for y in &ys.cells {
                v.push([x[0], y[0]]);
            }
        }
        Ok(CellSet::from_sorted(2, xs.level, v))
    }

    pub(crate) fn to_hash_set(&self) -> FxHashSet<Coords> {
        self.cells.iter().copied().collect()
    }
}

fn axis_cells(v: f64, level: u32) -> Vec<u64> {
    let side = 1u64 << level;
    let s = v * side as f64;
    let f = s.floor();
    let mut idx = f as u64;
    let mut out = Vec::with_capacity(2);
    if f == s && idx > 0 {
        out.push(idx - 1);
    }
    if idx >= side {
        idx = side - 1;
    }
    if !out.contains(&idx) {
        out.push(idx);
    }
    out
}

/// Cell sets of one underlying set at consecutive levels `0..=top`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSetPyramid {
    levels: BTreeMap<u32, CellSet>,
}

impl CellSetPyramid {
    /// Builds every coarser level by truncating `finest`.
    pub fn from_finest(finest: &CellSet) -> Self {
        let mut levels = BTreeMap::new();
        for n in 0..=finest.level() {
            levels.insert(n, finest.truncate(n).expect("coarser level"));
        }
        CellSetPyramid { levels }
    }

    /// Assembles a pyramid from explicit levels, checking consistency.
    pub fn from_levels(sets: Vec<CellSet>) -> Result<Self> {
        let mut levels = BTreeMap::new();
        for s in sets {
            if levels.insert(s.level(), s).is_some() {
                return Err(Error::invalid("duplicate level in pyramid"));
            }
        }
        let p = CellSetPyramid { levels };
        p.check_consistency()?;
        Ok(p)
    }

    pub fn check_consistency(&self) -> Result<()> {
        let mut it = self.levels.values().peekable();
        while let Some(coarse) = it.next() {
            if let Some(fine) = it.peek() {
                if fine.dim() != coarse.dim() || fine.level() != coarse.level() + 1 {
                    return Err(Error::invalid("pyramid levels must be consecutive"));
                }
                if fine.truncate(coarse.level())? != *coarse {
                    return Err(Error::invalid(format!(
                        "level {} is not the truncation of level {}",
                        coarse.level(),
                        fine.level()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, level: u32) -> Option<&CellSet> {
        self.levels.get(&level)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// `(level, N_level)` pairs in increasing level order.
    pub fn counts(&self) -> Vec<(u32, usize)> {
        self.levels.iter().map(|(&n, s)| (n, s.len())).collect()
    }
}
