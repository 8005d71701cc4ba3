use super::{fit, project_cells, projection_frame, DimensionEstimate, Method, ScaleRow};
use crate::dyadic::CellSet;
use crate::error::{Error, Result};
use crate::ifs::{rasterize, Ifs};
use crate::semigroup::Direction;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The strip `{x : |⟨x, e_V⟩ − z| ≤ r}`, i.e. the preimage of `B(z, r)`
/// under orthogonal projection onto `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeQuery {
    pub v: Direction,
    pub z: f64,
    pub r: f64,
}

/// Cells sorted by the low end of their projection onto `V`. All cells
/// project to intervals of the same length, so strip counts reduce to two
/// binary searches.
#[derive(Debug, Clone)]
pub struct TubeIndex {
    lows: Vec<f64>,
    len: f64,
    slack: f64,
}

impl TubeIndex {
    pub fn new(cells: &CellSet, v: &Direction) -> Result<TubeIndex> {
        if cells.dim() != 2 {
            return Err(Error::invalid("tubes need a planar cell set"));
        }
        let e = v.unit();
        let h = (-(cells.level() as f64)).exp2();
        let mut lows: Vec<f64> = cells
            .cells()
            .iter()
            .map(|c| c[0] as f64 * h * e.x + c[1] as f64 * h * e.y + h * e.y.min(0.0))
            .collect();
        lows.sort_by(f64::total_cmp);
        Ok(TubeIndex { lows, len: h * (e.x.abs() + e.y.abs()), slack: 1e-12 * h })
    }

    /// Number of cells meeting the closed strip of half-width `r` about `z`.
    pub fn count(&self, z: f64, r: f64) -> usize {
        let a = z - r - self.len - self.slack;
        let b = z + r + self.slack;
        let i = self.lows.partition_point(|&x| x < a);
        let j = self.lows.partition_point(|&x| x <= b);
        j.saturating_sub(i)
    }
}

/// Level-`count_level` cells of `cells` meeting the closed strip of `q`.
pub fn tube_count(cells: &CellSet, q: &TubeQuery, count_level: u32) -> Result<usize> {
    if count_level > cells.level() {
        return Err(Error::invalid(format!(
            "count level {count_level} exceeds the cell level {}",
            cells.level()
        )));
    }
    if !(q.r > 0.0 && q.r < 1.0) {
        return Err(Error::invalid(format!("tube radius {} must lie in (0,1)", q.r)));
    }
    if q.r < (-(count_level as f64)).exp2() * (1.0 - 1e-12) {
        return Err(Error::invalid("tube radius is below the counting scale"));
    }
    Ok(TubeIndex::new(&cells.truncate(count_level)?, &q.v)?.count(q.z, q.r))
}

/// Slope of `log₂ max_z N_n(T_r(V, z) ∩ K)` against `n`, with `r = 2^-n`.
/// Centres run over occupied projection cells; the strip is widened by one
/// projection cell to cover the supremum over continuous `z`.
pub fn delta_estimate(ifs: &Ifs, v: &Direction, levels: &[u32]) -> Result<DimensionEstimate> {
    if ifs.dim() != 2 {
        return Err(Error::invalid("tubes need a planar IFS"));
    }
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::invalid("delta_estimate needs at least two levels"));
    }
    let top = *levels.last().expect("non-empty");
    let cells = rasterize(ifs, top)?;
    let (lo, w) = projection_frame(v);
    let mut table = Vec::with_capacity(levels.len());
    for &n in &levels {
        let set = cells.truncate(n)?;
        let index = TubeIndex::new(&set, v)?;
        let proj = project_cells(&set, v, n)?;
        let h = (-(n as f64)).exp2();
        let r = h + w * h;
        let best = proj
            .cells()
            .par_iter()
            .map(|c| index.count(lo + w * (c[0] as f64 + 0.5) * h, r))
            .max()
            .unwrap_or(0);
        table.push(ScaleRow { k: 0, n, log2count: (best as f64).log2() });
    }
    let (slope, se) = fit(&table);
    let mut e = DimensionEstimate::new(
        Method::Delta,
        slope.max(0.0),
        se,
        Some(levels[0]),
        Some(top - levels[0]),
        table,
    );
    e.notes.push(format!("direction angle {:.12}", v.angle()));
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;
    use crate::linalg::{Mat2, Vec2};

    #[test]
    fn full_square_column() {
        let sq = CellSet::full(2, 6).unwrap();
        for k in 1..6u32 {
            let h = (-(k as f64)).exp2();
            let q = TubeQuery { v: Direction::horizontal(), z: 0.5 + 0.5 * h, r: h };
            let c = tube_count(&sq, &q, k).unwrap();
            assert!(c >= 1 << k && c <= 3 << k, "k={k} c={c}");
        }
    }

    #[test]
    fn diagonal_strip() {
        let diag = CellSet::new(2, 8, (0..256u64).map(|i| [i, i])).unwrap();
        for k in 2..8u32 {
            let r = (-(k as f64)).exp2();
            let q = TubeQuery { v: Direction::horizontal(), z: 0.4, r };
            let c = tube_count(&diag, &q, k).unwrap();
            assert!(c as f64 <= 3.0 * (2.0 * r * (1u64 << k) as f64 + 2.0));
        }
    }

    #[test]
    fn empty_strip_and_errors() {
        let cells = CellSet::new(2, 4, [[0, 0], [1, 1]]).unwrap();
        let q = TubeQuery { v: Direction::horizontal(), z: 0.9, r: 0.0625 };
        assert_eq!(tube_count(&cells, &q, 4).unwrap(), 0);
        assert!(tube_count(&cells, &q, 5).is_err());
        assert!(tube_count(&cells, &TubeQuery { r: 0.01, ..q }, 4).is_err());
    }

    #[test]
    fn index_matches_brute_force() {
        let cells = CellSet::new(2, 5, (0..32u64).flat_map(|i| [[i, (i * 7) % 32], [31 - i, i / 2]])).unwrap();
        let h = 1.0 / 32.0;
        for angle in [0.0, 0.4, 1.2, 1.5707963267948966, 2.5] {
            let v = Direction::from_angle(angle);
            let e = v.unit();
            let index = TubeIndex::new(&cells, &v).unwrap();
            for zi in -10..50 {
                let z = zi as f64 * 0.031;
                let r = 0.07;
                let oracle = cells
                    .cells()
                    .iter()
                    .filter(|c| {
                        let proj: Vec<f64> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
                            .iter()
                            .map(|(dx, dy)| (c[0] as f64 + dx) * h * e.x + (c[1] as f64 + dy) * h * e.y)
                            .collect();
                        let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        lo <= z + r && hi >= z - r
                    })
                    .count();
                assert_eq!(index.count(z, r), oracle, "angle {angle} z {z}");
            }
        }
    }

    #[test]
    fn full_square_delta_is_one() {
        let m = |x: f64, y: f64| AffineMap2::new(Mat2::diag(0.5, 0.5), Vec2::new(x, y));
        let sq = Ifs::new(vec![m(0.0, 0.0), m(0.5, 0.0), m(0.0, 0.5), m(0.5, 0.5)]).unwrap();
        let e = delta_estimate(&sq, &Direction::horizontal(), &[4, 5, 6, 7, 8, 9]).unwrap();
        assert!((e.value - 1.0).abs() < 0.02, "{}", e.value);
    }
}
