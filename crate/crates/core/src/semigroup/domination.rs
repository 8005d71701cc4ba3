//! Empirical domination classification.

use super::{dedup_directions, directions_of, is_conformal, Direction, Which};
use crate::error::Result;
use crate::ifs::Ifs;
use crate::linalg::{least_squares, Mat2};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Dominated,
    WeaklyDominated,
    StronglyConformal,
    Undetermined,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Dominated => "dominated",
            Classification::WeaklyDominated => "weakly-dominated",
            Classification::StronglyConformal => "strongly-conformal",
            Classification::Undetermined => "undetermined",
        })
    }
}

/// A closed arc of `RP¹`: angles `start, start + len` (mod π), `0 < len < π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
}

impl Arc {
    pub fn end(&self) -> f64 {
        (self.start + self.len).rem_euclid(PI)
    }

    pub fn contains(&self, d: &Direction) -> bool {
        ccw(self.start, d.angle()) <= self.len
    }

    /// The image arc under the projective action of `a`.
    fn image(&self, a: &Mat2) -> Option<Arc> {
        let s = Direction::from_angle(self.start).image(a).ok()?.angle();
        let e = Direction::from_angle(self.start + self.len).image(a).ok()?.angle();
        let (s, e) = if a.det() > 0.0 { (s, e) } else { (e, s) };
        Some(Arc { start: s, len: ccw(s, e) })
    }

    fn strictly_inside(&self, outer: &Arc, margin: f64) -> bool {
        let off = ccw(outer.start, self.start);
        off > margin && off + self.len < outer.len - margin
    }

    fn same_as(&self, other: &Arc, tol: f64) -> bool {
        let ds = ccw(self.start, other.start).min(ccw(other.start, self.start));
        ds <= tol && (self.len - other.len).abs() <= tol
    }
}

/// Counter-clockwise angular distance from `a` to `b` in `[0, π)`.
fn ccw(a: f64, b: f64) -> f64 {
    (b - a).rem_euclid(PI)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub classification: Classification,
    /// Fit `max α₂/α₁ ≈ c·τⁿ` over word lengths `1..=maxlen`.
    pub tau: Option<f64>,
    pub c: Option<f64>,
    /// Conformal members (`𝓘_e`).
    pub conformal: Vec<usize>,
    /// Non-conformal members (`𝓘_h`).
    pub dominated_part: Vec<usize>,
    /// Certified invariant multicone, if one was found.
    pub multicone: Vec<Arc>,
    /// Empirical almost-multiplicativity constant.
    pub almost_mult: f64,
    /// Smallest projective distance between approximate backward and forward directions.
    pub delta: Option<f64>,
    /// Largest `α₂/α₁` over words of each length.
    pub ratio_table: Vec<f64>,
    pub maxlen: usize,
}

impl DominationReport {
    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.12}"));
        let idx = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let cones = self
            .multicone
            .iter()
            .map(|a| format!("{:.12}:{:.12}", a.start, a.end()))
            .collect::<Vec<_>>()
            .join(";");
        format!(
            "classification={}\ntau={}\nc={}\nC={:.12}\ndelta={}\nconformal={}\ndominated_part={}\ncones={}\nmaxlen={}\n",
            self.classification,
            opt(self.tau),
            opt(self.c),
            self.almost_mult,
            opt(self.delta),
            idx(&self.conformal),
            idx(&self.dominated_part),
            cones,
            self.maxlen
        )
    }
}

const WORD_CAP: u128 = 1 << 21;
const TAU_MARGIN: f64 = 1e-3;
const RADII: [f64; 9] = [0.3, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];

pub fn domination_check(ifs: &Ifs, maxlen: usize) -> Result<DominationReport> {
    check_matrices(&ifs.matrices(), maxlen)
}

pub(crate) fn check_matrices(mats: &[Mat2], maxlen: usize) -> Result<DominationReport> {
    if maxlen < 4 {
        return Err(crate::Error::invalid("maxlen must be at least 4"));
    }
    let conformal: Vec<usize> = (0..mats.len()).filter(|&i| is_conformal(&mats[i])).collect();
    let dominated_part: Vec<usize> = (0..mats.len()).filter(|&i| !is_conformal(&mats[i])).collect();
    let mut report = DominationReport {
        classification: Classification::Undetermined,
        tau: None,
        c: None,
        conformal: conformal.clone(),
        dominated_part: dominated_part.clone(),
        multicone: Vec::new(),
        almost_mult: almost_multiplicativity(mats, 8.min(maxlen))
            .into_iter()
            .fold(1.0, f64::min),
        delta: None,
        ratio_table: Vec::new(),
        maxlen,
    };
    if dominated_part.is_empty() {
        report.classification = Classification::StronglyConformal;
        return Ok(report);
    }
    let maxlen = capped_len(mats.len(), maxlen);
    report.maxlen = maxlen;
    report.ratio_table = max_ratio_table(mats, maxlen);
    let (tau, c) = fit_decay(&report.ratio_table);
    report.tau = Some(tau);
    report.c = Some(c);

    let depth = capped_len(mats.len(), maxlen.min(10));
    let flags: Vec<bool> = (0..mats.len()).map(|i| !conformal.contains(&i)).collect();
    if let (Ok(x), Ok(y)) = (
        directions_of(mats, depth, Which::Backward, Some(&flags)),
        directions_of(mats, depth, Which::Forward, Some(&flags)),
    ) {
        report.delta = Some(
            x.directions
                .iter()
                .flat_map(|a| y.directions.iter().map(move |b| a.distance(b)))
                .fold(f64::INFINITY, f64::min),
        );
        if conformal.is_empty() {
            if tau < 1.0 - TAU_MARGIN {
                report.classification = Classification::Dominated;
                report.multicone = find_multicone(mats, &[], &y.directions).unwrap_or_default();
            }
        } else {
            let sub: Vec<Mat2> = dominated_part.iter().map(|&i| mats[i]).collect();
            let (sub_tau, _) = fit_decay(&max_ratio_table(&sub, capped_len(sub.len(), maxlen)));
            if sub_tau < 1.0 - TAU_MARGIN {
                if let Some(cone) = find_multicone(mats, &conformal, &y.directions) {
                    report.classification = Classification::WeaklyDominated;
                    report.multicone = cone;
                }
            }
        }
    }
    Ok(report)
}

/// Largest word length `≤ maxlen` whose word count stays under the cap.
fn capped_len(k: usize, maxlen: usize) -> usize {
    let mut n = maxlen;
    while n > 1 && (k as u128).checked_pow(n as u32).is_none_or(|w| w > WORD_CAP) {
        n -= 1;
    }
    n
}

fn max_ratio_table(mats: &[Mat2], maxlen: usize) -> Vec<f64> {
    let mut table = vec![0.0f64; maxlen];
    let mut stack = vec![(Mat2::IDENTITY, 0usize)];
    while let Some((m, d)) = stack.pop() {
        if d > 0 {
            let a1 = m.op_norm();
            table[d - 1] = table[d - 1].max(m.det().abs() / (a1 * a1));
        }
        if d == maxlen {
            continue;
        }
        for a in mats {
            let next = m * *a;
            let n = next.op_norm();
            stack.push((next.scale(1.0 / n), d + 1));
        }
    }
    table
}

/// Least-squares fit of `log ratio = log c + n log τ`.
fn fit_decay(table: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = (1..=table.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = table.iter().map(|r| r.max(1e-300).ln()).collect();
    let (slope, intercept, _) = least_squares(&xs, &ys);
    (slope.exp().min(1.0), intercept.exp())
}

/// Searches for a union of arcs around `centres` that the non-conformal
/// maps send strictly inside itself and the `conformal` maps permute.
fn find_multicone(mats: &[Mat2], conformal: &[usize], centres: &[Direction]) -> Option<Vec<Arc>> {
    if centres.is_empty() {
        return None;
    }
    for rho in RADII {
        let Some(cone) = merged_arcs(centres, rho) else { continue };
        let ok = mats.iter().enumerate().all(|(i, m)| {
            cone.iter().all(|arc| {
                let Some(img) = arc.image(m) else { return false };
                if conformal.contains(&i) {
                    cone.iter().any(|c| img.same_as(c, 1e-6))
                } else {
                    cone.iter().any(|c| img.strictly_inside(c, 1e-12))
                }
            })
        });
        if ok {
            return Some(cone);
        }
    }
    None
}

/// Union of `rho`-neighbourhoods of `centres` (in angle), or `None` if it is all of `RP¹`.
fn merged_arcs(centres: &[Direction], rho: f64) -> Option<Vec<Arc>> {
    let pts = dedup_directions(centres.to_vec(), 0.0);
    // start right after the largest gap so no arc wraps across the seam
    let n = pts.len();
    let gap = |i: usize| ccw(pts[i].angle(), pts[(i + 1) % n].angle()).max(if n == 1 { PI } else { 0.0 });
    let widest = (0..n).max_by(|&a, &b| gap(a).total_cmp(&gap(b)))?;
    if gap(widest) <= 2.0 * rho {
        return None;
    }
    let mut arcs: Vec<Arc> = Vec::new();
    for k in 1..=n {
        let c = pts[(widest + k) % n].angle();
        let start = c - rho;
        match arcs.last_mut() {
            Some(last) if ccw(last.start, start) <= last.len => {
                last.len = ccw(last.start, c + rho);
            }
            _ => arcs.push(Arc { start: start.rem_euclid(PI), len: 2.0 * rho }),
        }
    }
    Some(arcs)
}

/// Minimum of `‖A_{uv}‖/(‖A_u‖‖A_v‖)` over word pairs with `|u| = |v| = L`,
/// for `L = 1..=max_len`. Exhaustive when there are few pairs, sampled otherwise.
pub fn almost_multiplicativity(mats: &[Mat2], max_len: usize) -> Vec<f64> {
    let k = mats.len();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    (1..=max_len)
        .map(|len| {
            let words = (k as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
            let products: Vec<Mat2> = if words <= 4096 {
                all_products(mats, len)
            } else {
                (0..4096)
                    .map(|_| (0..len).fold(Mat2::IDENTITY, |acc, _| acc * mats[rng.gen_range(0..k)]))
                    .collect()
            };
            let norms: Vec<f64> = products.iter().map(|m| m.op_norm()).collect();
            let mut best = f64::INFINITY;
            for (u, nu) in products.iter().zip(&norms) {
                for (v, nv) in products.iter().zip(&norms) {
                    best = best.min((*u * *v).op_norm() / (nu * nv));
                }
            }
            best
        })
        .collect()
}

fn all_products(mats: &[Mat2], len: usize) -> Vec<Mat2> {
    let mut cur = vec![Mat2::IDENTITY];
    for _ in 0..len {
        cur = cur.iter().flat_map(|p| mats.iter().map(move |m| *p * *m)).collect();
    }
    cur
}
