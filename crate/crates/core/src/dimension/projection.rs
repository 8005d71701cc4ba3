use super::assouad::scan;
use super::{DimensionEstimate, Method};
use crate::dyadic::CellSet;
use crate::error::{Error, Result};
use crate::ifs::{rasterize, Ifs};
use crate::semigroup::Direction;

/// `(lo, width)` of the projection of `[0,1]²` onto `V` in the arc-length
/// coordinate `⟨x, e_V⟩`. The rescaled coordinate `(⟨x, e_V⟩ − lo)/width`
/// maps the square onto `[0,1]` and every level-`n` cell onto an interval
/// of length exactly `2^-n`.
pub fn projection_frame(v: &Direction) -> (f64, f64) {
    let e = v.unit();
    (e.y.min(0.0), e.x.abs() + e.y.abs())
}

/// Level-`out_level` intervals meeting the interior of the projection of some cell.
pub fn project_cells(cells: &CellSet, v: &Direction, out_level: u32) -> Result<CellSet> {
    if cells.dim() != 2 {
        return Err(Error::invalid("projection needs a planar cell set"));
    }
    if out_level > cells.level() {
        return Err(Error::invalid(format!(
            "output level {out_level} exceeds the cell level {}",
            cells.level()
        )));
    }
    let e = v.unit();
    let (lo, w) = projection_frame(v);
    let h = (-(cells.level() as f64)).exp2();
    let big = (-(out_level as f64)).exp2();
    let tol = 1e-9 * h;
    let max = (1u64 << out_level) - 1;
    let mut out = Vec::with_capacity(cells.len());
    for c in cells.cells() {
        let x = c[0] as f64 * h;
        let y = c[1] as f64 * h;
        let p = x * e.x + y * e.y + h * e.y.min(0.0);
        let u0 = (p - lo) / w;
        let u1 = u0 + h;
        let first = ((u0 + tol) / big).floor().max(0.0) as u64;
        let last = (((u1 - tol) / big).ceil() as u64).saturating_sub(1).min(max);
        for j in first.min(max)..=last.max(first.min(max)) {
            out.push([j, 0]);
        }
    }
    CellSet::new(1, out_level, out)
}

/// Two-scale scan of the projection of the attractor onto `V`.
pub fn assouad_projection(ifs: &Ifs, v: &Direction, k_range: &[u32], m: u32) -> Result<DimensionEstimate> {
    if m < 6 {
        return Err(Error::invalid(format!("window depth {m} must be at least 6")));
    }
    if ifs.dim() != 2 {
        return Err(Error::invalid("projection needs a planar IFS"));
    }
    let kmax = *k_range
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("k_range must not be empty"))?;
    let level = kmax + m;
    let cells = rasterize(ifs, level)?;
    let projected = project_cells(&cells, v, level)?;
    let mut e = scan(&projected, k_range, m, Method::AssouadProjection)?;
    e.notes.push(format!("direction angle {:.12}", v.angle()));
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;
    use crate::linalg::{Mat2, Vec2};
    use std::f64::consts::PI;

    #[test]
    fn full_square_projects_onto_full_interval() {
        let sq = CellSet::full(2, 5).unwrap();
        for angle in [0.0, 0.3, PI / 4.0, PI / 2.0, 2.0] {
            let p = project_cells(&sq, &Direction::from_angle(angle), 5).unwrap();
            assert_eq!(p.len(), 32, "angle {angle}");
        }
    }

    #[test]
    fn diagonal_onto_horizontal() {
        let diag = CellSet::new(2, 6, (0..64u64).map(|i| [i, i])).unwrap();
        let p = project_cells(&diag, &Direction::horizontal(), 6).unwrap();
        assert_eq!(p.len(), 64);
        let p = project_cells(&diag, &Direction::horizontal(), 3).unwrap();
        assert_eq!(p.len(), 8);
    }

    #[test]
    fn axis_projection_is_ancestry() {
        let cells = CellSet::new(2, 4, [[3, 9], [3, 1], [12, 0]]).unwrap();
        let p = project_cells(&cells, &Direction::horizontal(), 2).unwrap();
        let xs: Vec<u64> = p.cells().iter().map(|c| c[0]).collect();
        assert_eq!(xs, vec![0, 3]);
        let p = project_cells(&cells, &Direction::vertical(), 4).unwrap();
        let ys: Vec<u64> = p.cells().iter().map(|c| c[0]).collect();
        assert_eq!(ys, vec![0, 1, 9]);
    }

    #[test]
    fn bedford_mcmullen_projection_matches_projected_system() {
        let m = |x: f64, y: f64| AffineMap2::new(Mat2::diag(0.25, 0.5), Vec2::new(x, y));
        let bm = Ifs::new(vec![m(0.0, 0.0), m(0.0, 0.5), m(0.5, 0.0)]).unwrap();
        let level = 8;
        let p = project_cells(&rasterize(&bm, level).unwrap(), &Direction::horizontal(), level).unwrap();
        let proj = Ifs::new_1d(&[(0.25, 0.0), (0.25, 0.5)]).unwrap();
        let q = rasterize(&proj, level).unwrap();
        // within one cell of each other
        for c in q.cells() {
            assert!(p.contains(*c));
        }
        for c in p.cells() {
            let near = [c[0].saturating_sub(1), c[0], c[0] + 1].iter().any(|&x| q.contains([x, 0]));
            assert!(near, "{c:?}");
        }
    }
}
