//! Similarity systems on the line, projections of planar systems onto them,
//! and the Frostman exponent of self-similar measures.

use super::Ifs;
use crate::dimension::{DimensionEstimate, Method, ScaleRow};
use crate::error::{Error, Result};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

/// `x ↦ ratio·x + offset` with `0 < |ratio| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity1D {
    pub ratio: f64,
    pub offset: f64,
}

/// A similarity system on the line with optional probability weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityIfs1D {
    pub maps: Vec<Similarity1D>,
    pub weights: Option<Vec<f64>>,
}

/// A weighted similarity system; the weights define the self-similar measure.
pub type MeasureModel = SimilarityIfs1D;

impl SimilarityIfs1D {
    pub fn new(maps: Vec<Similarity1D>, weights: Option<Vec<f64>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidIfs("no maps".into()));
        }
        for (i, m) in maps.iter().enumerate() {
            if !(m.ratio.abs() > 0.0 && m.ratio.abs() < 1.0) || !m.offset.is_finite() {
                return Err(Error::InvalidIfs(format!(
                    "map {i}: ratio {} is not in (−1,1)∖{{0}}",
                    m.ratio
                )));
            }
        }
        if let Some(w) = &weights {
            if w.len() != maps.len() || w.iter().any(|&p| !(p > 0.0)) {
                return Err(Error::InvalidIfs("weights must be positive, one per map".into()));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidIfs(format!("weights sum to {s}, not 1")));
            }
        }
        Ok(SimilarityIfs1D { maps, weights })
    }

    /// Uniform weights `1/len`.
    pub fn with_uniform_weights(mut self) -> Self {
        let n = self.maps.len();
        self.weights = Some(vec![1.0 / n as f64; n]);
        self
    }

    /// Convex hull `[lo, hi]` of the attractor.
    pub fn hull(&self) -> (f64, f64) {
        let max_r = self.maps.iter().map(|m| m.ratio.abs()).fold(0.0, f64::max);
        let max_u = self.maps.iter().map(|m| m.offset.abs()).fold(0.0, f64::max);
        let big = max_u / (1.0 - max_r) + 1.0;
        let (mut lo, mut hi) = (-big, big);
        for _ in 0..100_000 {
            let mut nlo = f64::INFINITY;
            let mut nhi = f64::NEG_INFINITY;
            for m in &self.maps {
                let a = m.ratio * lo + m.offset;
                let b = m.ratio * hi + m.offset;
                nlo = nlo.min(a.min(b));
                nhi = nhi.max(a.max(b));
            }
            let change = (nlo - lo).abs().max((nhi - hi).abs());
            lo = nlo;
            hi = nhi;
            if change <= 1e-17 * (1.0 + big) {
                break;
            }
        }
        // endpoints are usually fixed points of single maps; snap to them
        let snap = |v: f64| {
            self.maps
                .iter()
                .filter(|m| m.ratio > 0.0)
                .map(|m| m.offset / (1.0 - m.ratio))
                .find(|f| (f - v).abs() <= 1e-12 * (1.0 + v.abs()))
                .unwrap_or(v)
        };
        (snap(lo), snap(hi))
    }

    /// Similarity dimension: the root `d` of `Σ |r_i|^d = 1`.
    pub fn similarity_dimension(&self) -> f64 {
        let f = |d: f64| self.maps.iter().map(|m| m.ratio.abs().powf(d)).sum::<f64>() - 1.0;
        let (mut a, mut b) = (0.0f64, 1.0f64);
        while f(b) > 0.0 {
            b *= 2.0;
        }
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if f(c) > 0.0 {
                a = c;
            } else {
                b = c;
            }
        }
        0.5 * (a + b)
    }

    /// Merges maps that coincide exactly, summing their weights.
    pub fn merged(&self) -> SimilarityIfs1D {
        let mut maps: Vec<Similarity1D> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (i, m) in self.maps.iter().enumerate() {
            let w = self.weights.as_ref().map_or(1.0, |w| w[i]);
            match maps.iter().position(|x| x == m) {
                Some(j) => weights[j] += w,
                None => {
                    maps.push(*m);
                    weights.push(w);
                }
            }
        }
        SimilarityIfs1D {
            maps,
            weights: self.weights.as_ref().map(|_| weights),
        }
    }

    /// Whether the images of the hull have pairwise disjoint interiors.
    pub fn open_set_condition_on_hull(&self) -> bool {
        let (lo, hi) = self.hull();
        let iv: Vec<(f64, f64)> = self
            .maps
            .iter()
            .map(|m| {
                let a = m.ratio * lo + m.offset;
                let b = m.ratio * hi + m.offset;
                (a.min(b), a.max(b))
            })
            .collect();
        for i in 0..iv.len() {
            for j in (i + 1)..iv.len() {
                if iv[i].0.max(iv[j].0) < iv[i].1.min(iv[j].1) {
                    return false;
                }
            }
        }
        true
    }
}

/// The first-coordinate factor `S_i` with `S_i ∘ π = π ∘ T_i`, read off the
/// normalized maps. Requires every `A_i` to be lower triangular.
pub fn project_ifs(ifs: &Ifs) -> Result<SimilarityIfs1D> {
    if ifs.dim() != 2 {
        return Err(Error::invalid("projection needs a planar IFS"));
    }
    let mut maps = Vec::with_capacity(ifs.len());
    for (i, m) in ifs.normalized_maps().iter().enumerate() {
        if m.a.b.abs() > 1e-14 * m.a.max_abs() {
            return Err(Error::NotProjectable {
                index: i,
                reason: format!(
                    "A[0][1] = {} couples the first coordinate to the second",
                    m.a.b
                ),
            });
        }
        maps.push(Similarity1D {
            ratio: m.a.a,
            offset: m.t.x,
        });
    }
    SimilarityIfs1D::new(maps, ifs.weights().map(|w| w.to_vec()))
}

const MAX_NODES: usize = 1 << 22;
const MAX_DEPTH: u32 = 26;

/// Frostman exponent `min_I log ν(I) / log |I|` over level-`depth` dyadic
/// intervals of the (hull-normalized) self-similar measure.
///
/// Mass is pushed through the word tree; coincident cylinder maps are merged,
/// and each final cylinder's mass is spread over the dyadic intervals it
/// overlaps in proportion to overlap length. For maps with dyadic ratios
/// and offsets this is exact.
pub fn frostman_dim(measure: &MeasureModel, depth: u32) -> Result<DimensionEstimate> {
    let weights = measure
        .weights
        .as_ref()
        .ok_or_else(|| Error::invalid("frostman dimension needs weights"))?;
    if depth < 4 {
        return Err(Error::invalid("depth must be at least 4"));
    }
    if depth > MAX_DEPTH {
        return Err(Error::ResourceLimit {
            level: depth,
            detail: format!("frostman depth is capped at {MAX_DEPTH}"),
        });
    }
    let (lo, hi) = measure.hull();
    let len = hi - lo;
    if len <= 0.0 {
        return Ok(DimensionEstimate::new(Method::Frostman, 0.0, 0.0, None, Some(depth), Vec::new()));
    }
    // conjugate into [0,1]
    let maps: Vec<(f64, f64, f64)> = measure
        .maps
        .iter()
        .zip(weights)
        .map(|(m, &p)| (m.ratio, (m.ratio * lo + m.offset - lo) / len, p))
        .collect();
    let target = (-(depth as f64)).exp2();
    let key = |r: f64, c: f64| ((r * 2f64.powi(44)).round() as i64, (c * 2f64.powi(44)).round() as i64);

    let mut done: Vec<(f64, f64, f64)> = Vec::new();
    let mut open: Vec<(f64, f64, f64)> = vec![(1.0, 0.0, 1.0)];
    let mut truncated = false;
    while !open.is_empty() {
        let mut next: FxHashMap<(i64, i64), (f64, f64, f64)> = FxHashMap::default();
        for (r, c, p) in open {
            if r.abs() <= target || truncated {
                done.push((r, c, p));
                continue;
            }
            for &(ri, ci, pi) in &maps {
                let (nr, nc) = (r * ri, r * ci + c);
                let e = next.entry(key(nr, nc)).or_insert((nr, nc, 0.0));
                e.2 += p * pi;
            }
        }
        let mut v: Vec<_> = next.into_iter().collect();
        v.sort_unstable_by_key(|(k, _)| *k);
        open = v.into_iter().map(|(_, x)| x).collect();
        if open.len() > MAX_NODES {
            truncated = true;
        }
    }

    let n_cells = 1usize << depth;
    let scale = n_cells as f64;
    let mut mass = vec![0.0f64; n_cells];
    for (r, c, p) in done {
        let (a, b) = if r > 0.0 { (c, c + r) } else { (c + r, c) };
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        let width = b - a;
        let i0 = ((a * scale).floor() as usize).min(n_cells - 1);
        let i1 = ((b * scale).floor() as usize).min(n_cells - 1);
        if width <= 0.0 || i0 == i1 {
            mass[i0] += p;
            continue;
        }
        for (i, m) in mass.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            let cl = (i as f64 / scale).max(a);
            let ch = ((i + 1) as f64 / scale).min(b);
            if ch > cl {
                *m += p * (ch - cl) / width;
            }
        }
    }

    let mut table = Vec::with_capacity(depth as usize);
    let mut level_mass = mass;
    let mut values = vec![0.0; depth as usize + 1];
    for n in (1..=depth).rev() {
        let top = level_mass.iter().cloned().fold(0.0, f64::max);
        let e = -top.log2();
        values[n as usize] = e / n as f64;
        table.push(ScaleRow { k: 0, n, log2count: e });
        level_mass = level_mass.chunks(2).map(|c| c.iter().sum()).collect();
    }
    table.reverse();
    let value = values[depth as usize];
    let stderr = (value - values[depth as usize - 1]).abs();
    let mut est = DimensionEstimate::new(Method::Frostman, value, stderr, Some(0), Some(depth), table);
    if truncated {
        est.notes.push(format!(
            "word tree truncated at {MAX_NODES} cylinders; coarse cylinders spread uniformly"
        ));
    }
    Ok(est)
}
