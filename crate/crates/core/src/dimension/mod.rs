//! Dimension estimators on dyadic cell sets: box counting, the two-scale
//! Assouad scan, projections to a line and tube counts.

mod assouad;
mod boxdim;
mod estimate;
mod projection;
mod tube;

pub(crate) use assouad::select_windows;
pub use assouad::{assouad_estimate, assouad_estimate_with, assouad_from_cells, window_profile, WindowSearch};
pub use boxdim::box_dimensions;
pub use estimate::{read_csv, to_csv_string, write_csv, DimensionEstimate, Method, ScaleRow};
pub use projection::{assouad_projection, project_cells, projection_frame};
pub use tube::{delta_estimate, tube_count, TubeIndex, TubeQuery};

use crate::linalg::least_squares;

/// Least-squares slope and its standard error for `log₂ count` against `n`.
pub(crate) fn fit(rows: &[ScaleRow]) -> (f64, f64) {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log2count).collect();
    let (slope, _, se) = least_squares(&xs, &ys);
    (slope, if se.is_finite() { se } else { 0.0 })
}
