use crate::dyadic::{shr, CellSet, Coords, DyadicCube};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which conclusion a certificate carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `N_m(K∩Q′)/N_m(K∩Q) ≤ 2^{-ns}` for every `Q′ ⊂ Q` at level `p+n`, `n ≤ ℓ`.
    Branching,
    /// `N_{p+n}(K∩Q) ≥ 2^{ns}` for `n ≤ ℓ`.
    Counting,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "branching" => Ok(Mode::Branching),
            "counting" => Ok(Mode::Counting),
            _ => Err(Error::invalid(format!("unknown mode `{s}`"))),
        }
    }
}

/// A certified cube. Counts are taken over the cells lying inside a cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeResult {
    pub mode: Mode,
    /// Level of the input cells.
    pub m: u32,
    pub s: f64,
    pub t: f64,
    pub ell: u32,
    pub k: u32,
    pub p: u32,
    pub cube: DyadicCube,
    /// `N_{p+n}(K∩Q)` for `0 ≤ n ≤ ℓ`.
    pub table: Vec<usize>,
    /// `max_{Q′} N_m(K∩Q′)/N_m(K∩Q)` over `Q′` at level `p+n`, `0 ≤ n ≤ ℓ`.
    pub max_ratio: Vec<f64>,
    /// Cubes visited by the descent, root first.
    pub path: Vec<DyadicCube>,
}

impl PigeonholeResult {
    /// Recounts the table and ratios from `cells` and checks the certified
    /// inequality, the level bound `p ≤ m−k` and the path.
    pub fn verify(&self, cells: &CellSet) -> bool {
        if cells.level() != self.m || self.cube.level() != self.p || self.p + self.k > self.m {
            return false;
        }
        if self.path.first() != Some(&DyadicCube::root(cells.dim())) || self.path.last().is_none() {
            return false;
        }
        if !self.path.iter().any(|q| *q == self.cube) || self.path.windows(2).any(|w| !w[0].contains(&w[1])) {
            return false;
        }
        if self.table.len() != self.ell as usize + 1 {
            return false;
        }
        let Ok(inside) = cells.restrict(&self.cube) else { return false };
        let (table, ratio) = profile(&inside, &self.cube, self.ell);
        if table != self.table || ratio != self.max_ratio {
            return false;
        }
        match self.mode {
            Mode::Branching => branching_holds(&ratio, self.s),
            Mode::Counting => counting_holds(&table, self.s),
        }
    }
}

pub(crate) fn branching_holds(ratio: &[f64], s: f64) -> bool {
    ratio.iter().enumerate().all(|(n, &r)| r <= (-(n as f64) * s).exp2())
}

pub(crate) fn counting_holds(table: &[usize], s: f64) -> bool {
    table.iter().enumerate().all(|(n, &c)| c as f64 >= (n as f64 * s).exp2())
}

/// Counts and largest child fractions of `inside` (the cells of `q`) over
/// `ℓ` levels below `q`, stopping at the cell level.
pub(crate) fn profile(inside: &CellSet, q: &DyadicCube, ell: u32) -> (Vec<usize>, Vec<f64>) {
    let total = inside.len();
    let depth = ell.min(inside.level() - q.level());
    let mut table = Vec::with_capacity(depth as usize + 1);
    let mut ratio = Vec::with_capacity(depth as usize + 1);
    for n in 0..=depth {
        let counts = child_counts(inside, q.level() + n);
        table.push(counts.len());
        let big = counts.values().copied().max().unwrap_or(0);
        ratio.push(if total == 0 { 0.0 } else { big as f64 / total as f64 });
    }
    (table, ratio)
}

fn child_counts(cells: &CellSet, level: u32) -> BTreeMap<Coords, usize> {
    let sh = cells.level() - level;
    let mut m = BTreeMap::new();
    for c in cells.cells() {
        *m.entry([shr(c[0], sh), shr(c[1], sh)]).or_insert(0usize) += 1;
    }
    m
}

/// The greedy descent of the branching lemma without its preconditions.
/// Stops at the first cube satisfying the branching bound, or when the next
/// cube would sit below level `max_p`.
pub(crate) struct Descent {
    pub path: Vec<DyadicCube>,
    /// Index into `path` of the branching certificate.
    pub certified: Option<usize>,
}

pub(crate) fn descend(cells: &CellSet, s: f64, ell: u32, max_p: u32) -> Descent {
    let mut q = DyadicCube::root(cells.dim());
    let mut inside = cells.clone();
    let mut path = vec![q];
    loop {
        let total = inside.len() as f64;
        let room = ell.min(cells.level() - q.level());
        let mut next = None;
        'levels: for n in 1..=room {
            let bound = (-(n as f64) * s).exp2();
            for (c, &count) in &child_counts(&inside, q.level() + n) {
                if count as f64 > bound * total {
                    next = Some(cube_at(cells.dim(), q.level() + n, *c));
                    break 'levels;
                }
            }
        }
        // the bound at depth ℓ must be checkable for the cube to certify
        match next {
            None if room == ell => {
                let at = path.len() - 1;
                return Descent { path, certified: Some(at) };
            }
            None => return Descent { path, certified: None },
            Some(c) if c.level() > max_p => return Descent { path, certified: None },
            Some(c) => {
                inside = inside.restrict(&c).expect("descendant of a visited cube");
                q = c;
                path.push(q);
            }
        }
    }
}

fn cube_at(dim: u8, level: u32, c: Coords) -> DyadicCube {
    let coords: &[u64] = if dim == 1 { &c[..1] } else { &c[..] };
    DyadicCube::new(dim, level, coords).expect("coordinates come from cells")
}

/// Lemma-style Furstenberg descent. From the root, while some descendant at
/// most `ℓ` levels down holds more than a `2^{-ns}` share of the level-`m`
/// cells, moves to the shallowest such descendant (lexicographically first
/// on ties). Counting mode then returns the shallowest cube on the descent
/// path whose counts already satisfy `N_{p+n} ≥ 2^{ns}`.
pub fn furstenberg_pigeonhole(cells: &CellSet, s: f64, t: f64, ell: u32, k: u32, mode: Mode) -> Result<PigeonholeResult> {
    if !(s > 0.0 && s < t && t.is_finite()) {
        return Err(Error::InvalidParameters(format!("need 0 < s < t, got s={s}, t={t}")));
    }
    if !(ell >= 1 && k >= ell) {
        return Err(Error::InvalidParameters(format!("need k ≥ ℓ ≥ 1, got k={k}, ℓ={ell}")));
    }
    let m = cells.level();
    let d = cells.dim() as f64;
    let need = k as f64 * d / (t - s);
    if (m as f64) < need {
        return Err(Error::InvalidParameters(format!(
            "level {m} is below k·d/(t−s) = {need:.3}"
        )));
    }
    let required = (m as f64 * t).exp2();
    if (cells.len() as f64) < required {
        return Err(Error::InsufficientMass { level: m, measured: cells.len(), required });
    }
    let run = descend(cells, s, ell, m - k);
    let at = run.certified.ok_or_else(|| Error::NonConvergence {
        steps: run.path.len(),
        detail: "descent left the admissible levels".into(),
    })?;
    let path: Vec<DyadicCube> = run.path[..=at].to_vec();
    let pick = match mode {
        Mode::Branching => at,
        Mode::Counting => path
            .iter()
            .position(|q| {
                let inside = cells.restrict(q).expect("cube of the path");
                counting_holds(&profile(&inside, q, ell).0, s)
            })
            .expect("a branching certificate also certifies counts"),
    };
    let cube = path[pick];
    let (table, max_ratio) = profile(&cells.restrict(&cube)?, &cube, ell);
    Ok(PigeonholeResult { mode, m, s, t, ell, k, p: cube.level(), cube, table, max_ratio, path })
}
