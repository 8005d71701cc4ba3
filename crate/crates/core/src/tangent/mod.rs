//! Pigeonholing constructions: the Furstenberg descent, weak-tangent zoom
//! windows, tube slices of tangents, and the product tangent of diagonal
//! systems.

mod pigeonhole;
mod product;
mod slice;
mod zoom;

pub use pigeonhole::{furstenberg_pigeonhole, Mode, PigeonholeResult};
pub use product::{diag_product_tangent, verify_product_bounds, PartCertificate, ProductConfig, ProductTangentReport, Scales};
pub use slice::{tangent_slice_search, SliceConfig, SliceResult};
pub use zoom::{weak_tangent_sequence, ZoomConfig, ZoomEntry, ZoomSequence};
