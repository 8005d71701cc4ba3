//! 2×2 matrix-semigroup analysis: singular data, the direction maps
//! `ϑ₁`/`ϑ₂`, approximate forward and backward Furstenberg directions,
//! domination classification and rank-one limits.
//!
//! Directions are points of `RP¹`, stored as angles in `[0, π)`. The
//! distance between two directions is `|sin(θ₁ − θ₂)|`.

mod domination;
mod rank_one;

pub use domination::{
    almost_multiplicativity, domination_check, Arc, Classification, DominationReport,
};
pub use rank_one::{rank_one_limit, RankOneLimit};

use crate::error::{Error, Result};
use crate::ifs::{Ifs, Word};
use crate::linalg::{Mat2, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative singular-value gap below which a matrix counts as conformal.
pub const CONFORMAL_TOL: f64 = 1e-10;

/// A line through the origin.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Direction {
    angle: f64,
}

impl Direction {
    /// The line at angle `theta` (any real; reduced mod π).
    pub fn from_angle(theta: f64) -> Direction {
        let mut a = theta.rem_euclid(PI);
        if a >= PI - 1e-15 {
            a = 0.0;
        }
        Direction { angle: a }
    }

    pub fn from_vector(v: Vec2) -> Result<Direction> {
        if v.norm() == 0.0 || !v.norm().is_finite() {
            return Err(Error::DegenerateDirection("zero vector has no direction".into()));
        }
        Ok(Direction::from_angle(v.y.atan2(v.x)))
    }

    pub fn horizontal() -> Direction {
        Direction { angle: 0.0 }
    }

    pub fn vertical() -> Direction {
        Direction { angle: PI / 2.0 }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Unit vector with positive x-coordinate, or `(0, 1)` for the vertical line.
    pub fn unit(&self) -> Vec2 {
        if self.angle == PI / 2.0 {
            return Vec2::new(0.0, 1.0);
        }
        let (s, c) = self.angle.sin_cos();
        if c > 0.0 {
            Vec2::new(c, s)
        } else if c < 0.0 {
            Vec2::new(-c, -s)
        } else {
            Vec2::new(0.0, 1.0)
        }
    }

    pub fn perp(&self) -> Direction {
        Direction::from_angle(self.angle + PI / 2.0)
    }

    /// Projective distance `|sin Δθ|`.
    pub fn distance(&self, other: &Direction) -> f64 {
        (self.angle - other.angle).sin().abs()
    }

    /// The image line `A·V`.
    pub fn image(&self, a: &Mat2) -> Result<Direction> {
        Direction::from_vector(*a * self.unit())
    }
}

/// Closed-form singular decomposition of a 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularData {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Right singular vectors (unit).
    pub v1: Vec2,
    pub v2: Vec2,
    /// Left singular vectors: `A v_i = α_i u_i`.
    pub u1: Vec2,
    pub u2: Vec2,
    pub eta1: Direction,
    pub eta2: Direction,
    pub image1: Direction,
    pub image2: Direction,
    /// `α₁ = α₂` (within `CONFORMAL_TOL`); `η₁` is then horizontal.
    pub degenerate: bool,
}

impl SingularData {
    /// `U·diag(α)·Vᵀ`.
    pub fn reconstruct(&self) -> Mat2 {
        let outer = |u: Vec2, v: Vec2, s: f64| Mat2::new(s * u.x * v.x, s * u.x * v.y, s * u.y * v.x, s * u.y * v.y);
        outer(self.u1, self.v1, self.alpha1) + outer(self.u2, self.v2, self.alpha2)
    }
}

pub fn singular_data(a: &Mat2) -> Result<SingularData> {
    let det = a.det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::invalid("singular matrix has no singular data"));
    }
    let alpha1 = a.op_norm();
    let alpha2 = det.abs() / alpha1;
    let degenerate = alpha1 - alpha2 <= CONFORMAL_TOL * alpha1;
    let psi = if degenerate {
        0.0
    } else {
        let ata = a.transpose() * *a;
        0.5 * (2.0 * ata.b).atan2(ata.a - ata.d)
    };
    let v1 = Vec2::new(psi.cos(), psi.sin());
    let v2 = v1.perp();
    let u1 = (*a * v1).scale(1.0 / alpha1);
    let u2 = (*a * v2).scale(1.0 / alpha2);
    Ok(SingularData {
        alpha1,
        alpha2,
        v1,
        v2,
        u1,
        u2,
        eta1: Direction::from_vector(v1)?,
        eta2: Direction::from_vector(v2)?,
        image1: Direction::from_vector(u1)?,
        image2: Direction::from_vector(u2)?,
        degenerate,
    })
}

/// `‖A e_V‖`.
pub fn restriction_norm(a: &Mat2, v: &Direction) -> f64 {
    (*a * v.unit()).norm()
}

/// Which direction map to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    /// `ϑ₁(w) = A_w η₁(A_w)`.
    Forward,
    /// `ϑ₂(w) = A_{←w}^{-1} η₁(A_{←w}^{-1})`.
    Backward,
}

/// `A_{←w}^{-1} = A_{w_1}^{-1} ⋯ A_{w_n}^{-1}`.
pub fn backward_matrix(mats: &[Mat2], w: &Word) -> Result<Mat2> {
    let mut acc = Mat2::IDENTITY;
    for &s in w.symbols() {
        let m = mats
            .get(s)
            .ok_or_else(|| Error::invalid(format!("symbol {s} out of range")))?;
        acc = acc * m.inverse().ok_or_else(|| Error::invalid("singular matrix"))?;
    }
    Ok(acc)
}

fn top_image(m: &Mat2) -> Result<Direction> {
    let sd = singular_data(m)?;
    if sd.degenerate {
        return Err(Error::DegenerateDirection(
            "composed matrix is conformal; no dominant direction".into(),
        ));
    }
    Ok(sd.image1)
}

/// `ϑ₁(w)` (`which = Forward`) or `ϑ₂(w)` (`which = Backward`).
pub fn theta(ifs: &Ifs, w: &Word, which: Which) -> Result<Direction> {
    if w.is_empty() {
        return Err(Error::invalid("direction maps need a non-empty word"));
    }
    let mats = ifs.matrices();
    let m = match which {
        Which::Forward => crate::ifs::word_matrix(&mats, w)?,
        Which::Backward => backward_matrix(&mats, w)?,
    };
    top_image(&m)
}

/// Approximate `Y_F` (forward) or `X_F` (backward) at a fixed word length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub directions: Vec<Direction>,
    pub depth: usize,
    /// Largest movement `|sin Δθ|` between a word of length `depth` and its
    /// prefix of length `depth − 1`.
    pub movement: f64,
    /// Words skipped because their product was conformal.
    pub skipped: usize,
}

impl DirectionSet {
    /// Smallest distance from `d` to a member.
    pub fn distance_to(&self, d: &Direction) -> f64 {
        self.directions
            .iter()
            .map(|x| x.distance(d))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Whether every matrix of the tuple is a scaled orthogonal matrix.
pub fn is_strongly_conformal(mats: &[Mat2]) -> bool {
    mats.iter().all(is_conformal)
}

pub fn is_conformal(m: &Mat2) -> bool {
    let a1 = m.op_norm();
    let a2 = m.det().abs() / a1;
    a1 - a2 <= CONFORMAL_TOL * a1
}

const MAX_WORDS: u128 = 1 << 24;

/// Evaluates `ϑ` on every word of length `depth`.
pub fn furstenberg_directions(ifs: &Ifs, depth: usize, which: Which) -> Result<DirectionSet> {
    directions_of(&ifs.matrices(), depth, which, None)
}

/// As [`furstenberg_directions`], on raw matrices, optionally restricted to
/// words containing at least one letter flagged in `must_contain`.
pub fn directions_of(
    mats: &[Mat2],
    depth: usize,
    which: Which,
    must_contain: Option<&[bool]>,
) -> Result<DirectionSet> {
    if depth == 0 {
        return Err(Error::invalid("depth must be positive"));
    }
    if is_strongly_conformal(mats) {
        return Err(Error::NoFurstenbergDirections);
    }
    let words = (mats.len() as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if words > MAX_WORDS {
        return Err(Error::ResourceLimit {
            level: depth as u32,
            detail: format!("{words} words exceed the enumeration cap {MAX_WORDS}"),
        });
    }
    let step: Vec<Mat2> = match which {
        Which::Forward => mats.to_vec(),
        Which::Backward => mats
            .iter()
            .map(|m| m.inverse().ok_or_else(|| Error::invalid("singular matrix")))
            .collect::<Result<_>>()?,
    };
    let mut out = Vec::new();
    let mut movement = 0.0f64;
    let mut skipped = 0usize;
    // (product, depth, contains flagged letter, direction at parent)
    let mut stack: Vec<(Mat2, usize, bool, Option<Direction>)> = vec![(Mat2::IDENTITY, 0, false, None)];
    while let Some((m, d, flagged, parent_dir)) = stack.pop() {
        let dir = if d > 0 { top_image(&m).ok() } else { None };
        if d == depth {
            if must_contain.is_some() && !flagged {
                continue;
            }
            match dir {
                Some(x) => {
                    if let Some(p) = parent_dir {
                        movement = movement.max(p.distance(&x));
                    }
                    out.push(x);
                }
                None => skipped += 1,
            }
            continue;
        }
        for (i, s) in step.iter().enumerate().rev() {
            let mut next = m * *s;
            let n = next.op_norm();
            if n > 0.0 {
                next = next.scale(1.0 / n);
            }
            let f = flagged || must_contain.is_some_and(|mc| mc[i]);
            stack.push((next, d + 1, f, dir));
        }
    }
    Ok(DirectionSet {
        directions: dedup_directions(out, 1e-9),
        depth,
        movement,
        skipped,
    })
}

/// Sorts by angle and merges directions closer than `tol` (wrapping at π).
pub fn dedup_directions(mut v: Vec<Direction>, tol: f64) -> Vec<Direction> {
    v.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    let mut out: Vec<Direction> = Vec::with_capacity(v.len());
    for d in v {
        if out.last().is_none_or(|l| l.distance(&d) > tol) {
            out.push(d);
        }
    }
    if out.len() > 1 && out[0].distance(out.last().unwrap()) <= tol {
        out.pop();
    }
    out
}

/// A strictly positive, strongly dominated pair used in tests.
#[cfg(test)]
pub(crate) fn positive_pair() -> Ifs {
    use crate::ifs::AffineMap2;
    Ifs::new(vec![
        AffineMap2::new(Mat2::new(0.5, 0.3, 0.2, 0.1), Vec2::ZERO),
        AffineMap2::new(Mat2::new(0.2, 0.3, 0.1, 0.6), Vec2::new(0.4, 0.3)),
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::AffineMap2;
    use rand::{Rng, SeedableRng};

    fn diag_ifs() -> Ifs {
        Ifs::new(vec![
            AffineMap2::new(Mat2::diag(0.5, 0.25), Vec2::ZERO),
            AffineMap2::new(Mat2::diag(0.6, 0.2), Vec2::new(0.4, 0.5)),
        ])
        .unwrap()
    }

    #[test]
    fn direction_convention() {
        assert_eq!(Direction::vertical().unit(), Vec2::new(0.0, 1.0));
        let d = Direction::from_vector(Vec2::new(-1.0, -1.0)).unwrap();
        assert!((d.angle() - PI / 4.0).abs() < 1e-15);
        let d = Direction::from_vector(Vec2::new(-1.0, 1.0)).unwrap();
        assert!(d.unit().x > 0.0);
        assert!(Direction::from_angle(PI).angle() == 0.0);
        assert!((Direction::horizontal().distance(&Direction::vertical()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_examples() {
        let s = singular_data(&Mat2::diag(0.5, 1.0 / 3.0)).unwrap();
        assert_eq!(s.alpha1, 0.5);
        assert!((s.alpha2 - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(s.eta1, Direction::horizontal());
        let r = singular_data(&Mat2::rotation(0.7).scale(0.3)).unwrap();
        assert!(r.degenerate && (r.alpha1 - 0.3).abs() < 1e-15 && (r.alpha2 - 0.3).abs() < 1e-15);
        assert_eq!(r.eta1, Direction::horizontal());
        let sh = singular_data(&Mat2::new(1.0, 1.0, 0.0, 1.0)).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sh.alpha1 - phi).abs() < 1e-14 && (sh.alpha2 - (phi - 1.0)).abs() < 1e-14);
        assert!(singular_data(&Mat2::new(1.0, 2.0, 2.0, 4.0)).is_err());
    }

    #[test]
    fn restriction_norm_examples() {
        assert_eq!(restriction_norm(&Mat2::diag(0.3, 0.1), &Direction::horizontal()), 0.3);
        let a = Mat2::new(0.3, -0.7, 0.4, 0.2);
        let s = singular_data(&a).unwrap();
        assert!((restriction_norm(&a, &s.eta1) - s.alpha1).abs() < 1e-14);
        let sh = Mat2::new(1.0, 1.0, 0.0, 1.0);
        assert!((restriction_norm(&sh, &Direction::vertical()) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_on_random_matrices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let a = Mat2::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            if a.det().abs() < 1e-6 {
                continue;
            }
            let s = singular_data(&a).unwrap();
            assert!(s.reconstruct().max_abs_diff(&a) < 1e-10);
            assert!((s.alpha1 * s.alpha2 - a.det().abs()).abs() < 1e-10);
            assert!(s.v1.dot(s.v2).abs() < 1e-12);
        }
    }

    #[test]
    fn theta_on_diagonal() {
        let ifs = diag_ifs();
        for w in [vec![0], vec![1, 0], vec![0, 1, 1, 0]] {
            assert_eq!(theta(&ifs, &Word(w.clone()), Which::Forward).unwrap(), Direction::horizontal());
            assert_eq!(theta(&ifs, &Word(w), Which::Backward).unwrap(), Direction::vertical());
        }
        assert!(theta(&ifs, &Word::empty(), Which::Forward).is_err());
    }

    #[test]
    fn theta_matches_power_iteration() {
        let a = Mat2::new(0.6, 0.2, 0.1, 0.5).scale(0.9);
        let b = Mat2::new(0.3, 0.4, 0.2, 0.6).scale(0.9);
        let ifs = Ifs::new(vec![
            AffineMap2::new(a, Vec2::ZERO),
            AffineMap2::new(b, Vec2::new(0.5, 0.1)),
        ])
        .unwrap();
        let d = theta(&ifs, &Word(vec![0, 1]), Which::Forward).unwrap();
        // oracle: power iteration on AᵀA gives η₁, then push forward
        let m = a * b;
        let ata = m.transpose() * m;
        let mut v = Vec2::new(1.0, 0.3);
        for _ in 0..200 {
            v = ata * v;
            v = v.scale(1.0 / v.norm());
        }
        let oracle = Direction::from_vector(m * v).unwrap();
        assert!(d.distance(&oracle) < 1e-8);
    }

    #[test]
    fn furstenberg_sets() {
        let ifs = diag_ifs();
        let fwd = furstenberg_directions(&ifs, 6, Which::Forward).unwrap();
        let bwd = furstenberg_directions(&ifs, 6, Which::Backward).unwrap();
        assert_eq!(fwd.directions, vec![Direction::horizontal()]);
        assert_eq!(bwd.directions, vec![Direction::vertical()]);
        let pos = positive_pair();
        let f12 = furstenberg_directions(&pos, 12, Which::Forward).unwrap();
        let f14 = furstenberg_directions(&pos, 14, Which::Forward).unwrap();
        for d in &f14.directions {
            let u = d.unit();
            assert!(u.x > 0.0 && u.y > 0.0);
            assert!(f12.distance_to(d) < 1e-6);
        }
        let conf = Ifs::new(vec![AffineMap2::new(Mat2::rotation(1.0).scale(0.5), Vec2::ZERO)]).unwrap();
        assert!(matches!(
            furstenberg_directions(&conf, 4, Which::Forward),
            Err(Error::NoFurstenbergDirections)
        ));
    }
}
