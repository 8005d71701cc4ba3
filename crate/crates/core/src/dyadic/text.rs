//! Line-oriented cell-set format: a header `dim level count`, then one cell
//! per line as space-separated integer coordinates.

use super::{CellSet, Coords};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

impl CellSet {
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(16 + self.len() * 12);
        let _ = writeln!(s, "{} {} {}", self.dim(), self.level(), self.len());
        for c in self.cells() {
            if self.dim() == 1 {
                let _ = writeln!(s, "{}", c[0]);
            } else {
                let _ = writeln!(s, "{} {}", c[0], c[1]);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<CellSet> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        let h: Vec<u64> = parse_ints(header, 1)?;
        if h.len() != 3 {
            return Err(Error::Parse(format!(
                "header must be `dim level count`, got `{header}`"
            )));
        }
        let dim = u8::try_from(h[0]).map_err(|_| Error::Parse("dimension too large".into()))?;
        let level = u32::try_from(h[1]).map_err(|_| Error::Parse("level too large".into()))?;
        let count = h[2] as usize;
        let mut cells: Vec<Coords> = Vec::with_capacity(count.min(1 << 24));
        for (i, line) in lines {
            let v = parse_ints(line, i + 1)?;
            if v.len() != dim as usize {
                return Err(Error::Parse(format!(
                    "line {}: expected {dim} coordinates, got {}",
                    i + 1,
                    v.len()
                )));
            }
            cells.push([v[0], if dim == 2 { v[1] } else { 0 }]);
        }
        if cells.len() != count {
            return Err(Error::Parse(format!(
                "header announces {count} cells, found {}",
                cells.len()
            )));
        }
        let set = CellSet::new(dim, level, cells)?;
        if set.len() != count {
            return Err(Error::Parse("duplicate cells in input".into()));
        }
        Ok(set)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<CellSet> {
        CellSet::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_ints(line: &str, lineno: usize) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u64>()
                .map_err(|e| Error::Parse(format!("line {lineno}: `{t}`: {e}")))
        })
        .collect()
}
