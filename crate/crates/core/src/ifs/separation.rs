//! Separation diagnostics: the rectangular open set condition and stopping
//! cylinder counts for the weak bounded neighbourhood condition.

use super::{AffineMap2, BBox, Ifs};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Whether the open images `T_i((0,1)²)` are pairwise disjoint.
/// Only diagonal planar systems are supported.
pub fn check_rosc(ifs: &Ifs) -> Result<bool> {
    Ok(rosc_overlap(ifs)?.is_none())
}

/// The first pair of maps whose open rectangles overlap, if any.
pub fn rosc_overlap(ifs: &Ifs) -> Result<Option<(usize, usize)>> {
    if ifs.dim() != 2 || !ifs.is_diagonal() {
        return Err(Error::Unsupported(
            "rectangular open set condition needs diagonal planar maps".into(),
        ));
    }
    let rects: Vec<[f64; 4]> = ifs
        .maps()
        .iter()
        .map(|m| {
            let (x0, x1) = ordered(m.t.x, m.t.x + m.a.a);
            let (y0, y1) = ordered(m.t.y, m.t.y + m.a.d);
            [x0, x1, y0, y1]
        })
        .collect();
    for i in 0..rects.len() {
        for j in (i + 1)..rects.len() {
            let (a, b) = (&rects[i], &rects[j]);
            if a[0].max(b[0]) < a[1].min(b[1]) && a[2].max(b[2]) < a[3].min(b[3]) {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    (a.min(b), a.max(b))
}

/// Number of stopping words `w` with `α₂(A_w) ≤ r < α₂(A_{w⁻})` whose
/// cylinder parallelogram `T_w(seed)` meets the open ball `B(x, r)`
/// (normalized coordinates). The parallelogram contains `T_w(K)`, so this
/// bounds the number of such cylinders of `K` meeting the ball.
pub fn wbnc_count(ifs: &Ifs, x: Vec2, r: f64) -> Result<usize> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid(format!("radius {r} must lie in (0,1)")));
    }
    let seed = ifs.seed();
    // A box sent into itself by every map bounds all deeper cylinders, which
    // makes pruning sound; otherwise fall back to the square around the
    // invariant R₀-ball.
    let prune_box = if ifs.seed_invariant() {
        seed
    } else {
        let f = ifs.frame();
        let c = f.apply(Vec2::ZERO);
        let rad = ifs.r0() * f.scale * (1.0 + 1e-12) + 1e-12;
        BBox {
            lo: c - Vec2::new(rad, rad),
            hi: c + Vec2::new(rad, rad),
        }
    };
    let tol = r * 1e-9;
    let mut count = 0usize;
    let mut stack = vec![AffineMap2::IDENTITY];
    let mut visited = 0usize;
    while let Some(w) = stack.pop() {
        visited += 1;
        if visited > 50_000_000 {
            return Err(Error::ResourceLimit {
                level: 0,
                detail: "stopping-word enumeration exceeded 5e7 nodes".into(),
            });
        }
        if parallelogram_distance(&prune_box, &w, x) >= r - tol {
            continue;
        }
        let a2 = alpha2(&w.a);
        if a2 <= r {
            if parallelogram_distance(&seed, &w, x) < r - tol {
                count += 1;
            }
            continue;
        }
        for m in ifs.normalized_maps() {
            stack.push(w.then_inner(m));
        }
    }
    Ok(count)
}

fn alpha2(a: &Mat2) -> f64 {
    let a1 = a.op_norm();
    a.det().abs() / a1
}

/// Euclidean distance from `x` to the parallelogram `T(b)`.
fn parallelogram_distance(b: &BBox, t: &AffineMap2, x: Vec2) -> f64 {
    let p = b.corners().map(|c| t.apply(c));
    if inside_convex(&p, x) {
        return 0.0;
    }
    (0..4)
        .map(|i| segment_distance(p[i], p[(i + 1) % 4], x))
        .fold(f64::INFINITY, f64::min)
}

fn inside_convex(p: &[Vec2; 4], x: Vec2) -> bool {
    let mut sign = 0.0;
    for i in 0..4 {
        let e = p[(i + 1) % 4] - p[i];
        let c = e.x * (x.y - p[i].y) - e.y * (x.x - p[i].x);
        if c != 0.0 {
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
    }
    true
}

fn segment_distance(a: Vec2, b: Vec2, x: Vec2) -> f64 {
    let d = b - a;
    let l2 = d.dot(d);
    let s = if l2 == 0.0 { 0.0 } else { ((x - a).dot(d) / l2).clamp(0.0, 1.0) };
    (a + d.scale(s) - x).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_map(a: f64, b: f64, x: f64, y: f64) -> AffineMap2 {
        AffineMap2::new(Mat2::diag(a, b), Vec2::new(x, y))
    }

    #[test]
    fn rosc_examples() {
        let bm = Ifs::new(vec![
            diag_map(0.25, 0.5, 0.0, 0.0),
            diag_map(0.25, 0.5, 0.0, 0.5),
            diag_map(0.25, 0.5, 0.5, 0.0),
        ])
        .unwrap();
        assert!(check_rosc(&bm).unwrap());
        let twice = Ifs::new(vec![diag_map(0.5, 0.5, 0.0, 0.0), diag_map(0.5, 0.5, 0.0, 0.0)]).unwrap();
        assert!(!check_rosc(&twice).unwrap());
        let fj = Ifs::new(vec![
            diag_map(0.5, 1.0 / 3.0, 0.0, 0.0),
            diag_map(0.5, 1.0 / 3.0, 0.0, 1.0 / 3.0),
            diag_map(0.5, 1.0 / 3.0, 0.5, 2.0 / 3.0),
        ])
        .unwrap();
        assert!(check_rosc(&fj).unwrap());
        let rot = Ifs::new(vec![AffineMap2::new(Mat2::rotation(0.5).scale(0.5), Vec2::ZERO)]).unwrap();
        assert!(matches!(check_rosc(&rot), Err(Error::Unsupported(_))));
    }

    #[test]
    fn wbnc_examples() {
        let single = Ifs::new(vec![diag_map(0.5, 0.3, 0.1, 0.2)]).unwrap();
        for r in [0.5, 0.1, 1e-3] {
            // the attractor is the fixed point (0.2, 2/7)
            assert_eq!(wbnc_count(&single, Vec2::new(0.2, 0.2857), r).unwrap(), 1);
        }
        let quarter = Ifs::new(vec![
            diag_map(0.5, 0.5, 0.0, 0.0),
            diag_map(0.5, 0.5, 0.5, 0.0),
            diag_map(0.5, 0.5, 0.0, 0.5),
            diag_map(0.5, 0.5, 0.5, 0.5),
        ])
        .unwrap();
        for k in 1..7 {
            let r = (-(k as f64)).exp2();
            assert_eq!(wbnc_count(&quarter, Vec2::new(0.5, 0.5), r).unwrap(), 4, "k={k}");
        }
        let separated = Ifs::new(vec![diag_map(0.2, 0.2, 0.0, 0.0), diag_map(0.2, 0.2, 0.8, 0.8)]).unwrap();
        assert_eq!(wbnc_count(&separated, Vec2::new(0.01, 0.01), 0.01).unwrap(), 1);
        assert!(wbnc_count(&quarter, Vec2::new(0.5, 0.5), 1.0).is_err());
        assert!(wbnc_count(&quarter, Vec2::new(0.5, 0.5), 0.0).is_err());
    }
}
