use super::pigeonhole::counting_holds;
use super::slice::{tangent_slice_search, SliceConfig};
use super::zoom::{certify, zoom_window, ZoomConfig};
use crate::dimension::{assouad_estimate, delta_estimate};
use crate::dyadic::{CellSet, DyadicCube};
use crate::error::{Error, Result};
use crate::ifs::{AffineMap2, BBox, Ifs};
use crate::linalg::{Mat2, Vec2};
use crate::semigroup::Direction;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ProductConfig {
    /// `dim_A π(K)`; estimated from the projected system when absent.
    pub eta: Option<f64>,
    /// Slice dimension; estimated by vertical tube counting when absent.
    pub beta: Option<f64>,
    pub projection_k_range: Vec<u32>,
    pub projection_depth: u32,
    pub delta_levels: Vec<u32>,
    /// Depth of the zoom window holding the slice family.
    pub slice_depth: u32,
    pub zoom: ZoomConfig,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig {
            eta: None,
            beta: None,
            projection_k_range: vec![0, 4, 8],
            projection_depth: 10,
            delta_levels: (6..=12).collect(),
            slice_depth: 10,
            zoom: ZoomConfig::default(),
        }
    }
}

/// A 1-D cell set at level `m` with `table[n] = N_n ≥ 2^{n·exponent}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartCertificate {
    /// Window in the normalized frame: `P_m` on the projection line, `Q_m`
    /// on the slice line.
    pub cube: DyadicCube,
    pub cells: CellSet,
    pub table: Vec<usize>,
    pub exponent: f64,
}

impl PartCertificate {
    fn check(&self, m: u32) -> bool {
        self.cells.dim() == 1
            && self.cells.level() == m
            && self.table.len() == m as usize + 1
            && self.cells.covering_profile() == self.table
            && counting_holds(&self.table, self.exponent)
    }
}

/// Scales of the construction. `R₀ = 1` and `r₀ = 2^-M` live in the zoom
/// window standing in for the tangent; `R = 2^{-ℓ₁}`, `r = 2^{-ℓ₂}` and
/// `R′ = 2^{-ℓ_m}` are the matching scales of `K`; `h = 2^{-k_m-ℓ₂}` and
/// `w = a_{i₀}^{j_m} h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub big_r0: f64,
    pub r0: f64,
    pub big_r: f64,
    pub r: f64,
    pub r_prime: f64,
    pub h: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductTangentReport {
    pub m: u32,
    /// Coordinates were exchanged so that `a_i ≥ b_i`.
    pub swapped: bool,
    pub eta: f64,
    pub beta: f64,
    pub k_m: u32,
    pub ell1: u32,
    pub ell2: u32,
    pub ell_m: u32,
    pub scales: Scales,
    /// Bin centre of `(u/r, (v − tube)/r)` and the bin side `1/(m 2^{k_m})`.
    pub u_m: f64,
    pub v_m: f64,
    pub bin_width: f64,
    /// Bins needed to cover the achieved `(u, v)` range.
    pub bin_count: usize,
    pub family_size: usize,
    pub bin_size: usize,
    pub i0: usize,
    pub kappa: f64,
    pub j_m: u32,
    /// `𝒫_m`: blow-up of the projection window.
    pub projection: PartCertificate,
    /// `ℰ_m`: blow-up of the amplified slice family.
    pub slice: PartCertificate,
    /// `𝒫_m × ℰ_m` at level `m`.
    pub product: CellSet,
    pub notes: Vec<String>,
}

/// Recounts both tables from the stored cells, checks the certified bounds
/// and that the product is the product of the parts.
pub fn verify_product_bounds(report: &ProductTangentReport) -> bool {
    let m = report.m;
    report.projection.check(m)
        && report.slice.check(m)
        && report.projection.exponent <= report.eta - 1.0 / m as f64 + 1e-12
        && report.slice.exponent <= report.beta - 2.0 / m as f64 + 1e-12
        && CellSet::product(&report.projection.cells, &report.slice.cells).as_ref() == Ok(&report.product)
}

/// Finite-precision run of the diagonal product-tangent construction:
/// a projection window `𝒫_m`, the family of stopping cylinders over a
/// dense vertical tube, pigeonholed by the affine part `(u, v)` of their
/// projected maps, amplified by the counting descent into `ℰ_m`, and the
/// squashing power `j_m` that turns `g_m(𝒫_m) × ℰ_m` into a nearly square
/// image. Scale requirements of the asymptotic argument are replaced by the
/// depths reached; all bounds are checked against those.
pub fn diag_product_tangent(ifs: &Ifs, m: u32, config: &ProductConfig) -> Result<ProductTangentReport> {
    if ifs.dim() != 2 || !ifs.is_diagonal() {
        return Err(Error::Unsupported("the product construction needs diagonal planar maps".into()));
    }
    if !(2..=10).contains(&m) {
        return Err(Error::invalid(format!("m = {m} must lie in 2..=10")));
    }
    let (sys, swapped) = orient(ifs)?;
    let mut notes = Vec::new();
    let maps = sys.normalized_maps().to_vec();
    let mf = m as f64;

    // projection part
    let proj = Ifs::new_1d(&maps.iter().map(|t| (t.a.a, t.t.x)).collect::<Vec<_>>())
        .map_err(|e| Error::stage("projection", e))?;
    let eta = match config.eta {
        Some(e) => e,
        None => assouad_estimate(&proj, &config.projection_k_range, config.projection_depth)
            .map_err(|e| Error::stage("projection", e))?
            .value,
    };
    let entry = zoom_window(&proj, m, eta, &config.zoom)
        .map_err(|e| Error::stage("projection", e))?
        .ok_or_else(|| Error::Stage {
            stage: "projection".into(),
            detail: format!("no window certifies exponent {:.4}", eta - 1.0 / mf),
        })?;
    let k_m = entry.cube.level();
    let projection = PartCertificate {
        cube: entry.cube,
        table: entry.table,
        exponent: entry.exponent,
        cells: entry.cells,
    };

    // slice family
    let beta = match config.beta {
        Some(b) => b,
        None => delta_estimate(&sys, &Direction::horizontal(), &config.delta_levels)
            .map_err(|e| Error::stage("slice", e))?
            .value,
    };
    let slice_cfg = SliceConfig {
        depth_cap: config.slice_depth,
        search: config.zoom.search,
        ..SliceConfig::new(eta + beta, eta)
    };
    let tube = tangent_slice_search(&sys, &Direction::horizontal(), m.max(4), &slice_cfg)
        .map_err(|e| Error::stage("slice", e))?;
    let depth = tube.depth;
    let ell1 = tube.window.level();
    let ell2 = ell1 + depth;
    let r = (-(ell2 as f64)).exp2();
    let qc = tube.window.coords();
    let column = (qc[0] << depth) + tube.tube;
    let row0 = qc[1] << depth;
    let rect = BBox {
        lo: Vec2::new(column as f64 * r, row0 as f64 * r),
        hi: Vec2::new((column + 1) as f64 * r, (row0 + (1u64 << depth)) as f64 * r),
    };
    let family = stopping_family(&maps, &sys.seed(), &rect, r, &tube.tube_cells, row0);
    if family.is_empty() {
        return Err(Error::Stage { stage: "slice".into(), detail: "no stopping cylinder meets the tube".into() });
    }

    // pigeonhole by (u, v)
    let bin_width = 1.0 / (mf * (k_m as f64).exp2());
    let mut bins: BTreeMap<(i64, i64), Vec<u64>> = BTreeMap::new();
    let (mut vlo, mut vhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (&y, t) in &family {
        let u = t.a.a / r;
        let v = (t.t.x - column as f64 * r) / r;
        vlo = vlo.min(v);
        vhi = vhi.max(v);
        let key = ((u / bin_width).floor() as i64, (v / bin_width).floor() as i64);
        bins.entry(key).or_default().push(y);
    }
    let a_min = maps.iter().map(|t| t.a.a).fold(f64::INFINITY, f64::min);
    let bin_count = (((1.0 - a_min) / bin_width).ceil().max(1.0) * ((vhi - vlo) / bin_width).ceil().max(1.0)) as usize;
    let (&(bu, bv), ys) = bins
        .iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .expect("family is non-empty");
    let u_m = (bu as f64 + 0.5) * bin_width;
    let v_m = (bv as f64 + 0.5) * bin_width;
    if ys.len() * bin_count < family.len() {
        notes.push("largest bin is below the pigeonhole average".into());
    }
    let family_e = CellSet::new(1, depth, ys.iter().map(|&y| [y, 0]))?;

    // amplification
    let s_slice = beta - 2.0 / mf;
    let (local, _) = certify(&family_e, s_slice, m).ok_or_else(|| Error::Stage {
        stage: "slice-amplification".into(),
        detail: format!("no interval of the binned family certifies exponent {s_slice:.4} over {m} levels"),
    })?;
    let slice_cells = family_e.renormalize(&local)?.truncate(m)?;
    let slice_cube = DyadicCube::new(1, ell1, &[qc[1]])?.descendant(&local)?;
    let ell_m = slice_cube.level();
    let slice = PartCertificate {
        cube: slice_cube,
        table: slice_cells.covering_profile(),
        exponent: s_slice,
        cells: slice_cells,
    };

    // squashing word
    let (i0, kappa, a0) = maps
        .iter()
        .enumerate()
        .map(|(i, t)| (i, t.a.d / t.a.a, t.a.a))
        .filter(|&(_, k, _)| k < 1.0)
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
        .expect("orientation guarantees a strict map");
    let h = (-((k_m + ell2) as f64)).exp2();
    let top = (-(ell_m as f64)).exp2();
    let mut j_m = 0u32;
    while top * kappa.powi(j_m as i32 + 1) >= h {
        j_m += 1;
    }
    let w = a0.powi(j_m as i32) * h;
    let product = CellSet::product(&projection.cells, &slice.cells)?;
    if swapped {
        notes.push("coordinates exchanged so that the first axis is the weaker contraction".into());
    }
    Ok(ProductTangentReport {
        m,
        swapped,
        eta,
        beta,
        k_m,
        ell1,
        ell2,
        ell_m,
        scales: Scales {
            big_r0: 1.0,
            r0: (-(depth as f64)).exp2(),
            big_r: (-(ell1 as f64)).exp2(),
            r,
            r_prime: top,
            h,
            w,
        },
        u_m,
        v_m,
        bin_width,
        bin_count,
        family_size: family.len(),
        bin_size: ys.len(),
        i0,
        kappa,
        j_m,
        projection,
        slice,
        product,
        notes,
    })
}

/// The system with `a_i ≥ b_i` for all `i`, strict for some, exchanging
/// coordinates when needed.
fn orient(ifs: &Ifs) -> Result<(Ifs, bool)> {
    let ab: Vec<(f64, f64)> = ifs.maps().iter().map(|t| (t.a.a.abs(), t.a.d.abs())).collect();
    if ifs.maps().iter().any(|t| t.a.a < 0.0 || t.a.d < 0.0) {
        return Err(Error::Unsupported("diagonal entries must be positive".into()));
    }
    let wide = ab.iter().all(|&(a, b)| a >= b) && ab.iter().any(|&(a, b)| a > b);
    let tall = ab.iter().all(|&(a, b)| a <= b) && ab.iter().any(|&(a, b)| a < b);
    if wide {
        return Ok((ifs.clone(), false));
    }
    if !tall {
        return Err(Error::Unsupported("the system is not weakly dominated along either axis".into()));
    }
    let maps = ifs
        .maps()
        .iter()
        .map(|t| AffineMap2::new(Mat2::diag(t.a.d, t.a.a), Vec2::new(t.t.y, t.t.x)))
        .collect();
    Ok((Ifs::new(maps)?, true))
}

/// Cylinders `T_w` with `a_w ≤ r < a_{w⁻}` meeting the closed rectangle,
/// keyed by the tube row (relative to `row0`) they are assigned to. Each row
/// of `rows` takes the first cylinder in word order that meets it.
fn stopping_family(
    maps: &[AffineMap2],
    seed: &BBox,
    rect: &BBox,
    r: f64,
    rows: &CellSet,
    row0: u64,
) -> BTreeMap<u64, AffineMap2> {
    let eps = 1e-9 * r;
    let mut out = BTreeMap::new();
    let mut stack = vec![AffineMap2::IDENTITY];
    let mut order = Vec::new();
    while let Some(w) = stack.pop() {
        let lo = w.apply(seed.lo);
        let hi = w.apply(seed.hi);
        let (x0, x1) = (lo.x.min(hi.x), lo.x.max(hi.x));
        let (y0, y1) = (lo.y.min(hi.y), lo.y.max(hi.y));
        if x1 < rect.lo.x - eps || x0 > rect.hi.x + eps || y1 < rect.lo.y - eps || y0 > rect.hi.y + eps {
            continue;
        }
        if w.a.a <= r * (1.0 + 1e-12) {
            order.push((w, y0, y1));
            continue;
        }
        for t in maps.iter().rev() {
            stack.push(w.then_inner(t));
        }
    }
    for (w, y0, y1) in order {
        let first = ((y0 - eps) / r).floor().max(row0 as f64) as u64;
        let last = ((y1 + eps) / r).floor() as u64;
        for y in first..=last {
            if y < row0 {
                continue;
            }
            let rel = y - row0;
            if rows.contains([rel, 0]) {
                out.entry(rel).or_insert(w);
            }
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct PartDoc {
    cube: DyadicCube,
    cells: String,
    table: Vec<usize>,
    exponent: f64,
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    m: u32,
    swapped: bool,
    eta: f64,
    beta: f64,
    k_m: u32,
    ell1: u32,
    ell2: u32,
    ell_m: u32,
    scales: Scales,
    u_m: f64,
    v_m: f64,
    bin_width: f64,
    bin_count: usize,
    family_size: usize,
    bin_size: usize,
    i0: usize,
    kappa: f64,
    j_m: u32,
    projection: PartDoc,
    slice: PartDoc,
    product: String,
    notes: Vec<String>,
}

impl ProductTangentReport {
    /// Writes `<stem>.json` into `dir` with the three cell sets in sidecar
    /// files next to it. Returns the JSON path.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let side = |part: &str, cells: &CellSet| -> Result<String> {
            let name = format!("{stem}.{part}.cells");
            cells.write_file(dir.join(&name))?;
            Ok(name)
        };
        let doc = ReportDoc {
            m: self.m,
            swapped: self.swapped,
            eta: self.eta,
            beta: self.beta,
            k_m: self.k_m,
            ell1: self.ell1,
            ell2: self.ell2,
            ell_m: self.ell_m,
            scales: self.scales,
            u_m: self.u_m,
            v_m: self.v_m,
            bin_width: self.bin_width,
            bin_count: self.bin_count,
            family_size: self.family_size,
            bin_size: self.bin_size,
            i0: self.i0,
            kappa: self.kappa,
            j_m: self.j_m,
            projection: PartDoc {
                cube: self.projection.cube,
                cells: side("projection", &self.projection.cells)?,
                table: self.projection.table.clone(),
                exponent: self.projection.exponent,
            },
            slice: PartDoc {
                cube: self.slice.cube,
                cells: side("slice", &self.slice.cells)?,
                table: self.slice.table.clone(),
                exponent: self.slice.exponent,
            },
            product: side("product", &self.product)?,
            notes: self.notes.clone(),
        };
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
        Ok(path)
    }

    /// Reads a report written by [`ProductTangentReport::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<ProductTangentReport> {
        let path = path.as_ref();
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let doc: ReportDoc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let part = |p: PartDoc| -> Result<PartCertificate> {
            Ok(PartCertificate {
                cube: p.cube,
                cells: CellSet::read_file(dir.join(&p.cells))?,
                table: p.table,
                exponent: p.exponent,
            })
        };
        Ok(ProductTangentReport {
            m: doc.m,
            swapped: doc.swapped,
            eta: doc.eta,
            beta: doc.beta,
            k_m: doc.k_m,
            ell1: doc.ell1,
            ell2: doc.ell2,
            ell_m: doc.ell_m,
            scales: doc.scales,
            u_m: doc.u_m,
            v_m: doc.v_m,
            bin_width: doc.bin_width,
            bin_count: doc.bin_count,
            family_size: doc.family_size,
            bin_size: doc.bin_size,
            i0: doc.i0,
            kappa: doc.kappa,
            j_m: doc.j_m,
            projection: part(doc.projection)?,
            slice: part(doc.slice)?,
            product: CellSet::read_file(dir.join(&doc.product))?,
            notes: doc.notes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(a: f64, b: f64, pts: &[(f64, f64)]) -> Ifs {
        Ifs::new(pts.iter().map(|&(x, y)| AffineMap2::new(Mat2::diag(a, b), Vec2::new(x, y))).collect()).unwrap()
    }

    fn bm() -> Ifs {
        diag(0.25, 0.5, &[(0.0, 0.0), (0.0, 0.5), (0.5, 0.0)])
    }

    #[test]
    fn bedford_mcmullen_report() {
        let r = diag_product_tangent(&bm(), 6, &ProductConfig::default()).unwrap();
        assert!(r.swapped);
        assert!(verify_product_bounds(&r));
        // oracle: the product's counts are the products of the parts' counts
        let prod: Vec<usize> = r.projection.table.iter().zip(&r.slice.table).map(|(a, b)| a * b).collect();
        assert_eq!(r.product.covering_profile(), prod);
        assert!(r.kappa < 1.0 && r.scales.h <= r.scales.r_prime);
    }

    #[test]
    fn tampering_is_detected() {
        let r = diag_product_tangent(&bm(), 6, &ProductConfig::default()).unwrap();
        let mut a = r.clone();
        a.projection.table[3] -= 1;
        assert!(!verify_product_bounds(&a));
        let mut b = r.clone();
        b.slice.table.swap(2, 4);
        assert!(!verify_product_bounds(&b));
        let mut c = r;
        c.slice.table.reverse();
        assert!(!verify_product_bounds(&c));
    }

    #[test]
    fn rejects_unsupported() {
        let rot = Ifs::new(vec![AffineMap2::new(Mat2::new(0.0, -0.5, 0.5, 0.0), Vec2::ZERO)]).unwrap();
        assert!(matches!(diag_product_tangent(&rot, 6, &ProductConfig::default()), Err(Error::Unsupported(_))));
        let mixed = Ifs::new(vec![
            AffineMap2::new(Mat2::diag(0.5, 0.25), Vec2::ZERO),
            AffineMap2::new(Mat2::diag(0.25, 0.5), Vec2::new(0.5, 0.5)),
        ])
        .unwrap();
        assert!(matches!(diag_product_tangent(&mixed, 6, &ProductConfig::default()), Err(Error::Unsupported(_))));
    }
}
