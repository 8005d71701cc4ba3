//! Rank-one limits of normalized products with a prescribed kernel.

use super::{is_strongly_conformal, restriction_norm, singular_data, Direction};
use crate::error::{Error, Result};
use crate::ifs::{Ifs, Word};
use crate::linalg::Mat2;
use serde::{Deserialize, Serialize};

const MAX_LETTERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneLimit {
    /// Trace of the limit `κ·π_Y^V`.
    pub kappa: f64,
    /// Kernel direction (the input).
    pub v: Direction,
    /// Image direction.
    pub y: Direction,
    /// `A_w/‖A_w‖` at the stopping word.
    pub normalized: Mat2,
    /// Kernel of the normalized product, for comparison with `v`.
    pub kernel: Direction,
    /// `|det(A_w/‖A_w‖)|` at the stopping word.
    pub det_ratio: f64,
    /// The witness word; the letter applied first is the rightmost.
    pub word: Word,
}

/// Extends a word on the left, one letter at a time, keeping `‖A_w e_V‖`
/// comparable to `α₂(A_w)` (judged over a short look-ahead block), until `|det(A_w/‖A_w‖)| < tol`.
pub fn rank_one_limit(ifs: &Ifs, v: Direction, tol: f64) -> Result<RankOneLimit> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("tolerance {tol} must lie in (0,1)")));
    }
    let mats = ifs.matrices();
    if is_strongly_conformal(&mats) {
        return Err(Error::NoFurstenbergDirections);
    }
    let mut horizon = 1;
    while horizon < 8 && mats.len().pow(horizon as u32 + 1) <= 4096 {
        horizon += 1;
    }
    let mut acc = Mat2::IDENTITY;
    let mut letters: Vec<usize> = Vec::new();
    loop {
        let det_ratio = acc.det().abs();
        if !letters.is_empty() && det_ratio < tol {
            let sd = singular_data(&acc)?;
            letters.reverse();
            return Ok(RankOneLimit {
                kappa: acc.trace(),
                v,
                y: sd.image1,
                normalized: acc,
                kernel: sd.eta2,
                det_ratio,
                word: Word(letters),
            });
        }
        if letters.len() >= MAX_LETTERS {
            return Err(Error::NonConvergence {
                steps: MAX_LETTERS,
                detail: format!("determinant ratio {det_ratio:e} still above {tol:e}"),
            });
        }
        let i = best_first_letter(&mats, &acc, &v, horizon);
        let m = mats[i] * acc;
        letters.push(i);
        acc = m.scale(1.0 / m.op_norm());
    }
}

/// First letter of the block `u` of length `horizon` minimizing
/// `‖A_u A e_V‖/α₂(A_u A)`, ties broken by the smaller singular-value ratio.
fn best_first_letter(mats: &[Mat2], acc: &Mat2, v: &Direction, horizon: usize) -> usize {
    let mut best = (f64::INFINITY, f64::INFINITY, 0usize);
    let mut stack: Vec<(Mat2, usize, usize)> = vec![(*acc, 0, usize::MAX)];
    while let Some((m, d, first)) = stack.pop() {
        if d == horizon {
            let a2 = m.det().abs();
            let score = restriction_norm(&m, v) / a2;
            let (s, r, _) = best;
            if score < s * (1.0 - 1e-9) || (score <= s * (1.0 + 1e-9) && a2 < r) {
                best = (score, a2, first);
            }
            continue;
        }
        for (i, a) in mats.iter().enumerate() {
            let next = *a * m;
            let f = if d == 0 { i } else { first };
            stack.push((next.scale(1.0 / next.op_norm()), d + 1, f));
        }
    }
    best.2
}
