use super::{fit, DimensionEstimate, Method, ScaleRow};
use crate::dyadic::{shr, CellSet, Coords, DyadicCube};
use crate::error::{Error, Result};
use crate::ifs::{rasterize_window_with_limit, Ifs, DEFAULT_LEAF_LIMIT};
use rayon::prelude::*;
use rustc_hash::FxHashMap;

/// `max_{Q ∈ 𝒟_k} N_{k+n}(X ∩ Q)` for `n = 0..=m`.
pub fn window_profile(cells: &CellSet, k: u32, m: u32) -> Result<Vec<usize>> {
    if k + m > cells.level() {
        return Err(Error::invalid(format!(
            "window levels {k}+{m} exceed the cell level {}",
            cells.level()
        )));
    }
    let fine = cells.truncate(k + m)?;
    let dim = cells.dim();
    Ok((0..=m)
        .into_par_iter()
        .map(|n| {
            let level = fine.truncate(k + n).expect("coarser level");
            let mut per: FxHashMap<Coords, usize> = FxHashMap::default();
            for c in level.cells() {
                let q = [shr(c[0], n), if dim == 1 { 0 } else { shr(c[1], n) }];
                *per.entry(q).or_default() += 1;
            }
            per.into_values().max().unwrap_or(0)
        })
        .collect())
}

/// Two-scale scan of a cell set: for each coarse level `k`, the slope of
/// `log₂ max_Q N_{k+n}(X ∩ Q)` against `n ∈ [0, m]`. Reports the largest.
pub fn assouad_from_cells(cells: &CellSet, k_range: &[u32], m: u32) -> Result<DimensionEstimate> {
    scan(cells, k_range, m, Method::Assouad)
}

pub(crate) fn scan(cells: &CellSet, k_range: &[u32], m: u32, method: Method) -> Result<DimensionEstimate> {
    if cells.is_empty() {
        return Err(Error::EmptyResult("empty cell set".into()));
    }
    check(k_range, m, 1)?;
    best_slope(k_range, m, method, |k| window_profile(cells, k, m))
}

fn check(k_range: &[u32], m: u32, min_m: u32) -> Result<()> {
    if k_range.is_empty() {
        return Err(Error::invalid("k_range must not be empty"));
    }
    if m < min_m {
        return Err(Error::invalid(format!("window depth {m} must be at least {min_m}")));
    }
    Ok(())
}

fn best_slope<F>(k_range: &[u32], m: u32, method: Method, mut profile: F) -> Result<DimensionEstimate>
where
    F: FnMut(u32) -> Result<Vec<usize>>,
{
    let mut table = Vec::new();
    let mut best: Option<(f64, f64, u32)> = None;
    for &k in k_range {
        let rows: Vec<ScaleRow> = profile(k)?
            .iter()
            .enumerate()
            .map(|(n, &c)| ScaleRow { k, n: n as u32, log2count: (c as f64).log2() })
            .collect();
        let (slope, se) = fit(&rows);
        if best.is_none_or(|(s, _, _)| slope > s) {
            best = Some((slope, se, k));
        }
        table.extend(rows);
    }
    let (value, se, k) = best.expect("non-empty k_range");
    Ok(DimensionEstimate::new(method, value.max(0.0), se, Some(k), Some(m), table))
}

/// Window selection for [`assouad_estimate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSearch {
    /// Cubes kept per level during the descent to level `k`.
    pub beam: usize,
    /// Children are ranked by their covering number this many levels down.
    pub lookahead: u32,
    /// Word cap for each window rasterization.
    pub leaf_limit: u64,
}

impl Default for WindowSearch {
    fn default() -> Self {
        WindowSearch { beam: 16, lookahead: 3, leaf_limit: DEFAULT_LEAF_LIMIT }
    }
}

/// [`assouad_estimate_with`] under the default [`WindowSearch`].
pub fn assouad_estimate(ifs: &Ifs, k_range: &[u32], m: u32) -> Result<DimensionEstimate> {
    assouad_estimate_with(ifs, k_range, m, &WindowSearch::default())
}

/// Two-scale scan of the attractor over windows found by a beam descent:
/// from the root, the children of the kept cubes are ranked by
/// `N_{ℓ+lookahead}` and the best `beam` are kept, down to level `k`. Each
/// surviving window is rasterized to level `k+m` on its own. The profile is
/// the per-`n` maximum over survivors, so it never exceeds the exhaustive
/// profile and equals it whenever the beam holds every occupied cube.
pub fn assouad_estimate_with(ifs: &Ifs, k_range: &[u32], m: u32, search: &WindowSearch) -> Result<DimensionEstimate> {
    check(k_range, m, 6)?;
    if search.beam == 0 {
        return Err(Error::invalid("beam width must be positive"));
    }
    let mut e = best_slope(k_range, m, Method::Assouad, |k| {
        let windows = select_windows(ifs, k, m.min(search.lookahead), search)?;
        let profiles: Vec<Vec<usize>> = windows
            .par_iter()
            .map(|q| -> Result<Vec<usize>> {
                let w = rasterize_window_with_limit(ifs, q, k + m, search.leaf_limit)?;
                (0..=m).map(|n| w.covering_number(k + n)).collect()
            })
            .collect::<Result<_>>()?;
        Ok((0..=m as usize).map(|n| profiles.iter().map(|p| p[n]).max().unwrap_or(0)).collect())
    })?;
    e.notes.push(format!("beam {} lookahead {}", search.beam, search.lookahead));
    Ok(e)
}

/// Kept cubes at level `k`, best first, ties broken by coordinates.
pub(crate) fn select_windows(ifs: &Ifs, k: u32, lookahead: u32, search: &WindowSearch) -> Result<Vec<DyadicCube>> {
    let mut keep = vec![DyadicCube::root(ifs.dim())];
    for level in 1..=k {
        let children: Vec<DyadicCube> = keep.iter().flat_map(|q| q.children()).collect();
        let mut scored: Vec<(usize, DyadicCube)> = children
            .into_par_iter()
            .map(|q| -> Result<(usize, DyadicCube)> {
                let n = rasterize_window_with_limit(ifs, &q, level + lookahead, search.leaf_limit)?.len();
                Ok((n, q))
            })
            .collect::<Result<Vec<_>>>()?;
        scored.retain(|(n, _)| *n > 0);
        if scored.is_empty() {
            return Err(Error::EmptyResult(format!("no occupied cube at level {level}")));
        }
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.coords().cmp(b.1.coords())));
        scored.truncate(search.beam);
        keep = scored.into_iter().map(|(_, q)| q).collect();
    }
    Ok(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;
    use crate::linalg::{Mat2, Vec2};

    #[test]
    fn full_square_is_two() {
        let m = |x: f64, y: f64| AffineMap2::new(Mat2::diag(0.5, 0.5), Vec2::new(x, y));
        let sq = Ifs::new(vec![m(0.0, 0.0), m(0.5, 0.0), m(0.0, 0.5), m(0.5, 0.5)]).unwrap();
        let e = assouad_estimate(&sq, &[0, 2], 6).unwrap();
        assert!((e.value - 2.0).abs() < 1e-6);
        assert_eq!(e.table.len(), 14);
    }

    #[test]
    fn profile_matches_brute_force() {
        let cells = CellSet::new(2, 5, (0..32u64).flat_map(|i| [[i, i], [i, 31 - i], [i, 7]])).unwrap();
        let prof = window_profile(&cells, 2, 3).unwrap();
        for (n, &got) in prof.iter().enumerate() {
            let oracle = cells
                .windows(2)
                .unwrap()
                .iter()
                .map(|(_, w)| w.covering_number(n as u32).unwrap())
                .max()
                .unwrap();
            assert_eq!(got, oracle);
        }
    }

    #[test]
    fn wide_beam_is_exhaustive() {
        let m = |x: f64, y: f64| AffineMap2::new(Mat2::diag(0.25, 0.5), Vec2::new(x, y));
        let bm = Ifs::new(vec![m(0.0, 0.0), m(0.0, 0.5), m(0.5, 0.0)]).unwrap();
        let wide = WindowSearch { beam: 1 << 12, ..WindowSearch::default() };
        let e = assouad_estimate_with(&bm, &[1, 3], 7, &wide).unwrap();
        let oracle = assouad_from_cells(&crate::ifs::rasterize(&bm, 10).unwrap(), &[1, 3], 7).unwrap();
        assert_eq!(e.table, oracle.table);
        let narrow = assouad_estimate_with(&bm, &[1, 3], 7, &WindowSearch { beam: 2, ..wide }).unwrap();
        for (a, b) in narrow.table.iter().zip(&oracle.table) {
            assert!(a.log2count <= b.log2count);
        }
    }

    #[test]
    fn window_depth_checked() {
        let c = Ifs::new_1d(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]).unwrap();
        assert!(assouad_estimate(&c, &[0], 5).is_err());
        assert!(assouad_estimate(&c, &[], 8).is_err());
    }
}
