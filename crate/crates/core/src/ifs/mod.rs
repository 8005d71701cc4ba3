//! Planar affine iterated function systems and their symbolic structure.
//!
//! An [`Ifs`] keeps the maps exactly as given. The attractor is placed in
//! `[0,1]^d` by a fixed homothety chosen at construction (the identity when
//! the attractor already lies there); rasterization, projection and every
//! other geometric query work in those normalized coordinates, where the
//! conjugated maps keep their linear parts.

mod io;
mod raster;
mod separation;
mod similarity;

pub use raster::{rasterize, rasterize_window, rasterize_window_with_limit, rasterize_with_limit, CELL_LIMIT, DEFAULT_LEAF_LIMIT};
pub use separation::{check_rosc, rosc_overlap, wbnc_count};
pub use similarity::{frostman_dim, project_ifs, MeasureModel, Similarity1D, SimilarityIfs1D};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use serde::{Deserialize, Serialize};

/// `x ↦ A x + t` with `A` invertible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub a: Mat2,
    pub t: Vec2,
}

impl AffineMap2 {
    pub const IDENTITY: AffineMap2 = AffineMap2 {
        a: Mat2::IDENTITY,
        t: Vec2::ZERO,
    };

    pub fn new(a: Mat2, t: Vec2) -> Self {
        AffineMap2 { a, t }
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        self.a * x + self.t
    }

    /// `self ∘ other`.
    pub fn then_inner(&self, other: &AffineMap2) -> AffineMap2 {
        AffineMap2 {
            a: self.a * other.a,
            t: self.a * other.t + self.t,
        }
    }
}

/// A finite string over the alphabet `{0, …, len−1}` of an IFS.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// The word with its last symbol removed.
    pub fn parent(&self) -> Option<Word> {
        if self.0.is_empty() {
            None
        } else {
            Some(Word(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// All words of length `len` over `alphabet` letters, in lexicographic order.
    pub fn all(alphabet: usize, len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..len {
            let mut next = Vec::with_capacity(out.len() * alphabet);
            for w in &out {
                for i in 0..alphabet {
                    let mut v = w.0.clone();
                    v.push(i);
                    next.push(Word(v));
                }
            }
            out = next;
        }
        out
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

/// Homothety `x ↦ scale·(x − offset)` taking the attractor into `[0,1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub offset: Vec2,
    pub scale: f64,
}

impl Frame {
    pub fn is_identity(&self) -> bool {
        self.offset == Vec2::ZERO && self.scale == 1.0
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        (x - self.offset).scale(self.scale)
    }
}

/// Axis-aligned box `[lo.x, hi.x] × [lo.y, hi.y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Vec2,
    pub hi: Vec2,
}

impl BBox {
    pub fn corners(&self) -> [Vec2; 4] {
        [
            self.lo,
            Vec2::new(self.hi.x, self.lo.y),
            self.hi,
            Vec2::new(self.lo.x, self.hi.y),
        ]
    }

    pub fn extent(&self) -> Vec2 {
        self.hi - self.lo
    }

    fn of_points(pts: impl IntoIterator<Item = Vec2>) -> BBox {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        BBox { lo, hi }
    }

    fn image(&self, m: &AffineMap2) -> BBox {
        BBox::of_points(self.corners().map(|c| m.apply(c)))
    }

    fn intersect(&self, o: &BBox) -> BBox {
        BBox {
            lo: Vec2::new(self.lo.x.max(o.lo.x), self.lo.y.max(o.lo.y)),
            hi: Vec2::new(self.hi.x.min(o.hi.x), self.hi.y.min(o.hi.y)),
        }
    }

    fn inflate(&self, e: f64) -> BBox {
        BBox {
            lo: self.lo - Vec2::new(e, e),
            hi: self.hi + Vec2::new(e, e),
        }
    }

    fn contains_box(&self, o: &BBox, tol: f64) -> bool {
        o.lo.x >= self.lo.x - tol
            && o.lo.y >= self.lo.y - tol
            && o.hi.x <= self.hi.x + tol
            && o.hi.y <= self.hi.y + tol
    }
}

/// A finite tuple of contracting invertible affine maps of the line
/// (`dim = 1`) or the plane (`dim = 2`).
///
/// Maps of the line are stored as `a·I` with translation `(t, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ifs {
    dim: u8,
    maps: Vec<AffineMap2>,
    weights: Option<Vec<f64>>,
    r0: f64,
    frame: Frame,
    normalized: Vec<AffineMap2>,
    seed: BBox,
    seed_invariant: bool,
}

impl Ifs {
    /// A planar system. Fails on singular or non-contracting maps, naming the index.
    pub fn new(maps: Vec<AffineMap2>) -> Result<Self> {
        Ifs::build(2, maps, None)
    }

    pub fn with_weights(maps: Vec<AffineMap2>, weights: Vec<f64>) -> Result<Self> {
        Ifs::build(2, maps, Some(weights))
    }

    /// A system on the line from `(ratio, offset)` pairs.
    pub fn new_1d(maps: &[(f64, f64)]) -> Result<Self> {
        let m = maps
            .iter()
            .map(|&(a, t)| AffineMap2::new(Mat2::diag(a, a), Vec2::new(t, 0.0)))
            .collect();
        Ifs::build(1, m, None)
    }

    pub(crate) fn build(dim: u8, maps: Vec<AffineMap2>, weights: Option<Vec<f64>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidIfs("no maps".into()));
        }
        for (i, m) in maps.iter().enumerate() {
            let vals = [m.a.a, m.a.b, m.a.c, m.a.d, m.t.x, m.t.y];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidIfs(format!("map {i} has non-finite entries")));
            }
            if m.a.det() == 0.0 {
                return Err(Error::InvalidIfs(format!("map {i} is singular")));
            }
            let norm = m.a.op_norm();
            if norm >= 1.0 {
                return Err(Error::InvalidIfs(format!(
                    "map {i} is not contracting (operator norm {norm})"
                )));
            }
            if dim == 1 && (m.a.b != 0.0 || m.a.c != 0.0 || m.a.a != m.a.d || m.t.y != 0.0) {
                return Err(Error::InvalidIfs(format!("map {i} is not a map of the line")));
            }
        }
        if let Some(w) = &weights {
            if w.len() != maps.len() {
                return Err(Error::InvalidIfs(format!(
                    "{} weights for {} maps",
                    w.len(),
                    maps.len()
                )));
            }
            if w.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
                return Err(Error::InvalidIfs("weights must be positive".into()));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidIfs(format!("weights sum to {s}, not 1")));
            }
        }
        let max_norm = maps.iter().map(|m| m.a.op_norm()).fold(0.0, f64::max);
        let max_t = maps.iter().map(|m| m.t.norm()).fold(0.0, f64::max);
        let r0 = max_t / (1.0 - max_norm);
        let raw_box = attractor_box(&maps, r0, dim);
        let ext = raw_box.extent();
        let in_unit = raw_box.lo.x >= -1e-12
            && raw_box.lo.y >= -1e-12
            && raw_box.hi.x <= 1.0 + 1e-12
            && raw_box.hi.y <= 1.0 + 1e-12;
        let frame = if in_unit {
            Frame { offset: Vec2::ZERO, scale: 1.0 }
        } else {
            Frame {
                offset: raw_box.lo,
                scale: 1.0 / ext.x.max(ext.y).max(1.0),
            }
        };
        let normalized: Vec<AffineMap2> = maps
            .iter()
            .map(|m| AffineMap2 {
                a: m.a,
                t: (m.a * frame.offset + m.t - frame.offset).scale(frame.scale),
            })
            .collect();
        let nb = BBox {
            lo: frame.apply(raw_box.lo),
            hi: frame.apply(raw_box.hi),
        };
        let pad = 1e-12 * (1.0 + ext.x.max(ext.y) * frame.scale);
        let mut seed = nb.inflate(pad);
        if dim == 1 {
            seed.lo.y = 0.0;
            seed.hi.y = 0.0;
        }
        let seed_invariant = normalized
            .iter()
            .all(|m| seed.contains_box(&seed.image(m), 0.0));
        Ok(Ifs {
            dim,
            maps,
            weights,
            r0,
            frame,
            normalized,
            seed,
            seed_invariant,
        })
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Maps as supplied.
    pub fn maps(&self) -> &[AffineMap2] {
        &self.maps
    }

    /// Maps conjugated into normalized coordinates.
    pub fn normalized_maps(&self) -> &[AffineMap2] {
        &self.normalized
    }

    pub fn matrices(&self) -> Vec<Mat2> {
        self.maps.iter().map(|m| m.a).collect()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Bounding radius `max‖t_i‖ / (1 − max‖A_i‖)` in raw coordinates.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    /// A box containing the normalized attractor.
    pub fn seed(&self) -> BBox {
        self.seed
    }

    /// Whether every map sends [`Ifs::seed`] into itself.
    pub fn seed_invariant(&self) -> bool {
        self.seed_invariant
    }

    pub fn is_diagonal(&self) -> bool {
        self.maps.iter().all(|m| m.a.is_diagonal())
    }

    /// A copy with the maps permuted: entry `j` of the result is map `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Ifs> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len() || perm.iter().any(|&p| p >= self.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("not a permutation of the map indices"));
        }
        let maps = perm.iter().map(|&p| self.maps[p]).collect();
        let weights = self
            .weights
            .as_ref()
            .map(|w| perm.iter().map(|&p| w[p]).collect());
        Ifs::build(self.dim, maps, weights)
    }

    /// The same system with every map conjugated by a translation by `v`.
    pub fn translated(&self, v: Vec2) -> Result<Ifs> {
        let maps = self
            .maps
            .iter()
            .map(|m| AffineMap2 { a: m.a, t: m.t + v - m.a * v })
            .collect();
        Ifs::build(self.dim, maps, self.weights.clone())
    }

    /// Attractor points `T_w(x₀)` for `count` pseudo-random words of length
    /// `len`, in normalized coordinates.
    pub fn sample_points(&self, count: usize, len: usize, seed: u64) -> Vec<Vec2> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // a fixed point of map 0 lies on the attractor
        let m0 = &self.normalized[0];
        let fixed = (Mat2::IDENTITY - m0.a)
            .inverse()
            .map(|inv| inv * m0.t)
            .unwrap_or(Vec2::ZERO);
        (0..count)
            .map(|_| {
                let mut p = fixed;
                for _ in 0..len {
                    let i = rng.gen_range(0..self.len());
                    p = self.normalized[i].apply(p);
                }
                p
            })
            .collect()
    }
}

/// `T_w = T_{w_1} ∘ … ∘ T_{w_n}` on raw coordinates.
pub fn compose(ifs: &Ifs, w: &Word) -> Result<AffineMap2> {
    compose_maps(ifs.maps(), w)
}

pub(crate) fn compose_maps(maps: &[AffineMap2], w: &Word) -> Result<AffineMap2> {
    let mut acc = AffineMap2::IDENTITY;
    for &s in w.symbols() {
        let m = maps.get(s).ok_or_else(|| {
            Error::invalid(format!("symbol {s} out of range for {} maps", maps.len()))
        })?;
        acc = acc.then_inner(m);
    }
    Ok(acc)
}

/// Product `A_{w_1} ⋯ A_{w_n}`.
pub fn word_matrix(mats: &[Mat2], w: &Word) -> Result<Mat2> {
    let mut acc = Mat2::IDENTITY;
    for &s in w.symbols() {
        let m = mats.get(s).ok_or_else(|| {
            Error::invalid(format!("symbol {s} out of range for {} maps", mats.len()))
        })?;
        acc = acc * *m;
    }
    Ok(acc)
}

/// A box containing the attractor: the fixed point of
/// `B ↦ bbox(⋃ T_i(B)) ∩ B` started from the `R₀` square, which never loses
/// a point of the attractor.
fn attractor_box(maps: &[AffineMap2], r0: f64, dim: u8) -> BBox {
    let r = r0.max(1e-300);
    let mut b = BBox {
        lo: Vec2::new(-r, if dim == 1 { 0.0 } else { -r }),
        hi: Vec2::new(r, if dim == 1 { 0.0 } else { r }),
    };
    for _ in 0..10_000 {
        let img = BBox::of_points(maps.iter().flat_map(|m| b.image(m).corners()));
        let next = img.intersect(&b);
        let change = (next.lo - b.lo).norm().max((next.hi - b.hi).norm());
        b = next;
        if change <= 1e-16 * (1.0 + r) {
            break;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn three_maps() -> Ifs {
        Ifs::new(vec![
            AffineMap2::new(Mat2::new(0.5, 0.1, -0.2, 0.4), Vec2::new(0.1, 0.0)),
            AffineMap2::new(Mat2::new(0.3, 0.0, 0.2, 0.5), Vec2::new(0.5, 0.2)),
            AffineMap2::new(Mat2::new(-0.4, 0.1, 0.1, 0.3), Vec2::new(0.7, 0.6)),
        ])
        .unwrap()
    }

    #[test]
    fn compose_examples() {
        let ifs = three_maps();
        assert_eq!(compose(&ifs, &Word::empty()).unwrap(), AffineMap2::IDENTITY);

        let t = Vec2::new(0.3, 0.7);
        let d = Ifs::new(vec![AffineMap2::new(Mat2::diag(0.5, 1.0 / 3.0), t)]).unwrap();
        let m = compose(&d, &Word(vec![0, 0])).unwrap();
        assert_eq!(m.a, Mat2::diag(0.25, 1.0 / 9.0));
        assert_eq!(m.t, Mat2::diag(0.5, 1.0 / 3.0) * t + t);

        assert!(matches!(
            compose(&ifs, &Word(vec![0, 3])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn compose_matches_pointwise_folding() {
        let ifs = three_maps();
        let w = Word(vec![2, 0, 1, 1, 2]);
        let m = compose(&ifs, &w).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let mut y = x;
            for &s in w.symbols().iter().rev() {
                y = ifs.maps()[s].apply(y);
            }
            assert!((m.apply(x) - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_maps_by_index() {
        let ok = AffineMap2::new(Mat2::diag(0.5, 0.5), Vec2::ZERO);
        let singular = AffineMap2::new(Mat2::new(0.5, 0.5, 0.25, 0.25), Vec2::ZERO);
        let expanding = AffineMap2::new(Mat2::diag(1.5, 0.5), Vec2::ZERO);
        let e = Ifs::new(vec![ok, singular]).unwrap_err();
        assert!(e.to_string().contains("map 1"), "{e}");
        let e = Ifs::new(vec![expanding]).unwrap_err();
        assert!(e.to_string().contains("map 0"), "{e}");
    }

    #[test]
    fn frame_is_identity_inside_unit_square() {
        let bm = Ifs::new(vec![
            AffineMap2::new(Mat2::diag(0.25, 0.5), Vec2::new(0.0, 0.0)),
            AffineMap2::new(Mat2::diag(0.25, 0.5), Vec2::new(0.0, 0.5)),
            AffineMap2::new(Mat2::diag(0.25, 0.5), Vec2::new(0.5, 0.0)),
        ])
        .unwrap();
        assert!(bm.frame().is_identity());
        assert!(bm.seed_invariant());
        let s = bm.seed();
        assert!((s.hi.x - 2.0 / 3.0).abs() < 1e-9 && (s.hi.y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn frame_places_points_in_unit_square() {
        let ifs = three_maps();
        for p in ifs.sample_points(2000, 40, 1) {
            assert!(p.x >= -1e-9 && p.x <= 1.0 + 1e-9 && p.y >= -1e-9 && p.y <= 1.0 + 1e-9);
            let s = ifs.seed();
            assert!(p.x >= s.lo.x && p.x <= s.hi.x && p.y >= s.lo.y && p.y <= s.hi.y);
        }
        let shifted = Ifs::new(vec![
            AffineMap2::new(Mat2::diag(0.5, 0.5), Vec2::new(3.0, -4.0)),
            AffineMap2::new(Mat2::diag(0.5, 0.5), Vec2::new(4.0, -4.0)),
        ])
        .unwrap();
        assert!(!shifted.frame().is_identity());
        let s = shifted.seed();
        assert!(s.lo.x.abs() < 1e-9 && (s.hi.x - 1.0).abs() < 1e-9);
    }
}
