use super::{fit, DimensionEstimate, Method, ScaleRow};
use crate::dyadic::CellSetPyramid;
use crate::error::{Error, Result};

/// Lower and upper box-dimension estimates from the finest half of the
/// pyramid: the smallest and largest least-squares slope over sliding
/// windows spanning three quarters of that range.
pub fn box_dimensions(pyramid: &CellSetPyramid) -> Result<(DimensionEstimate, DimensionEstimate)> {
    let counts = pyramid.counts();
    if counts.len() < 5 {
        return Err(Error::invalid(format!(
            "box dimensions need at least 5 levels, got {}",
            counts.len()
        )));
    }
    if counts.iter().any(|&(_, c)| c == 0) {
        return Err(Error::EmptyResult("empty cell set has no box dimension".into()));
    }
    let rows: Vec<ScaleRow> = counts[counts.len() / 2..]
        .iter()
        .map(|&(n, c)| ScaleRow { k: 0, n, log2count: (c as f64).log2() })
        .collect();
    let width = (3 * rows.len()).div_ceil(4).max(3).min(rows.len());
    let mut lo: Option<(f64, f64, usize)> = None;
    let mut hi: Option<(f64, f64, usize)> = None;
    for start in 0..=rows.len() - width {
        let (slope, se) = fit(&rows[start..start + width]);
        if lo.is_none_or(|(s, _, _)| slope < s) {
            lo = Some((slope, se, start));
        }
        if hi.is_none_or(|(s, _, _)| slope > s) {
            hi = Some((slope, se, start));
        }
    }
    let make = |method, (value, se, start): (f64, f64, usize)| {
        let mut e = DimensionEstimate::new(
            method,
            value.max(0.0),
            se,
            Some(rows[start].n),
            Some(width as u32 - 1),
            rows.clone(),
        );
        e.notes.push(format!("window of {width} levels starting at {}", rows[start].n));
        e
    };
    Ok((
        make(Method::BoxLower, lo.expect("at least one window")),
        make(Method::BoxUpper, hi.expect("at least one window")),
    ))
}
