use super::pigeonhole::{counting_holds, descend, profile};
use crate::dimension::{select_windows, WindowSearch};
use crate::dyadic::{CellSet, DyadicCube};
use crate::error::{Error, Result};
use crate::ifs::{rasterize_window_with_limit, Ifs};
use serde::Serialize;

/// Where to look for zoom windows.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomConfig {
    /// Coarse levels tried in order; empty means `0, 2, …, 2m`.
    pub coarse_levels: Vec<u32>,
    /// Levels rasterized below a window beyond the `m` the table needs; the
    /// descent may move this far down.
    pub extra_depth: u32,
    pub search: WindowSearch,
}

impl Default for ZoomConfig {
    fn default() -> Self {
        ZoomConfig { coarse_levels: Vec::new(), extra_depth: 2, search: WindowSearch::default() }
    }
}

/// One zoom window with `N_n(ψ_Q(K)∩Q₀) ≥ 2^{n·exponent}` for `0 ≤ n ≤ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomEntry {
    pub m: u32,
    /// `η − 1/m`.
    pub exponent: f64,
    /// The window, in the normalized frame of the IFS.
    pub cube: DyadicCube,
    /// Level of the beam window the descent started from.
    pub coarse_level: u32,
    /// `ψ_Q(K)∩Q₀` at level `m`.
    pub cells: CellSet,
    /// `N_n` for `0 ≤ n ≤ m`.
    pub table: Vec<usize>,
}

impl ZoomEntry {
    /// Recount of the table from the stored cells, and the bound.
    pub fn verify(&self) -> bool {
        self.cells.level() == self.m
            && self.cells.covering_profile() == self.table
            && counting_holds(&self.table, self.exponent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoomSequence {
    pub eta: f64,
    pub entries: Vec<ZoomEntry>,
    /// Set when some requested `m` had no window at the searched depths;
    /// `entries` then stops before it.
    pub truncated: bool,
    pub notes: Vec<String>,
}

#[derive(Serialize)]
struct EntrySummary<'a> {
    m: u32,
    exponent: f64,
    cube: &'a DyadicCube,
    coarse_level: u32,
    table: &'a [usize],
}

impl ZoomSequence {
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let entries: Vec<EntrySummary> = self
            .entries
            .iter()
            .map(|e| EntrySummary {
                m: e.m,
                exponent: e.exponent,
                cube: &e.cube,
                coarse_level: e.coarse_level,
                table: &e.table,
            })
            .collect();
        Ok(serde_json::json!({
            "eta": self.eta,
            "truncated": self.truncated,
            "entries": entries,
            "notes": self.notes,
        }))
    }
}

/// For each quality `m` (ascending), a window whose blow-up has counts
/// `≥ 2^{n(η−1/m)}` for `n ≤ m`. Candidate windows come from the beam
/// search at each coarse level; inside each, the branching descent runs
/// with `s = η − 1/m`, `ℓ = m` and the shallowest cube on its path meeting
/// the counting bound is taken.
pub fn weak_tangent_sequence(ifs: &Ifs, qualities: &[u32], eta: f64, config: &ZoomConfig) -> Result<ZoomSequence> {
    if qualities.is_empty() {
        return Err(Error::invalid("no qualities requested"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("η = {eta} must be finite and non-negative")));
    }
    let mut qs = qualities.to_vec();
    qs.sort_unstable();
    qs.dedup();
    if qs[0] == 0 {
        return Err(Error::invalid("qualities must be positive"));
    }
    let mut seq = ZoomSequence { eta, entries: Vec::new(), truncated: false, notes: Vec::new() };
    for m in qs {
        match zoom_window(ifs, m, eta, config)? {
            Some(e) => seq.entries.push(e),
            None => {
                seq.truncated = true;
                seq.notes.push(format!("no window certifies m = {m} at the searched depths"));
                break;
            }
        }
    }
    Ok(seq)
}

pub(crate) fn zoom_window(ifs: &Ifs, m: u32, eta: f64, config: &ZoomConfig) -> Result<Option<ZoomEntry>> {
    let exponent = eta - 1.0 / m as f64;
    let levels: Vec<u32> = if config.coarse_levels.is_empty() {
        (0..=2 * m).step_by(2).collect()
    } else {
        config.coarse_levels.clone()
    };
    let depth = m + config.extra_depth;
    for kk in levels {
        let windows = select_windows(ifs, kk, config.search.lookahead.min(m), &config.search)?;
        for q in windows {
            let cells = rasterize_window_with_limit(ifs, &q, kk + depth, config.search.leaf_limit)?.renormalize(&q)?;
            if let Some((local, table)) = certify(&cells, exponent, m) {
                let cube = q.descendant(&local)?;
                let blown = cells.renormalize(&local)?.truncate(m)?;
                return Ok(Some(ZoomEntry { m, exponent, cube, coarse_level: kk, cells: blown, table }));
            }
        }
    }
    Ok(None)
}

/// Shallowest cube on the descent path of `cells` with counts `≥ 2^{ns}` over
/// `ℓ` levels, in local coordinates, with its table.
pub(crate) fn certify(cells: &CellSet, s: f64, ell: u32) -> Option<(DyadicCube, Vec<usize>)> {
    if cells.level() < ell {
        return None;
    }
    let path = descend(cells, s.max(f64::MIN_POSITIVE), ell, cells.level() - ell).path;
    path.into_iter().find_map(|q| {
        if cells.level() - q.level() < ell {
            return None;
        }
        let inside = cells.restrict(&q).ok()?;
        let (table, _) = profile(&inside, &q, ell);
        counting_holds(&table, s).then_some((q, table))
    })
}
