//! Carpet-type benchmark families with closed-form dimensions, and a harness
//! comparing the estimators against them.

use crate::dimension::{assouad_estimate, assouad_projection, delta_estimate, DimensionEstimate};
use crate::error::{Error, Result};
use crate::ifs::{check_rosc, frostman_dim, project_ifs, rosc_overlap, AffineMap2, Ifs, SimilarityIfs1D};
use crate::linalg::{Mat2, Vec2};
use crate::semigroup::{furstenberg_directions, Direction, Which};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Maps `((x+i)/n, (y+j)/m)` for digits `(i, j)`.
    BedfordMcmullen { n: u32, m: u32, digits: Vec<(u32, u32)> },
    /// Maps `(βx, αy) + (b_i, a_i)`.
    FraserJordan { beta: f64, alpha: f64, b: Vec<f64>, a: Vec<f64> },
    Custom { path: PathBuf },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::BedfordMcmullen { .. } => "bedford_mcmullen",
            FamilySpec::FraserJordan { .. } => "fraser_jordan",
            FamilySpec::Custom { .. } => "custom",
        }
    }

    /// The three-map carpet on the 4×2 grid with digits (0,0), (0,1), (2,0).
    pub fn bm_benchmark() -> FamilySpec {
        FamilySpec::BedfordMcmullen { n: 4, m: 2, digits: vec![(0, 0), (0, 1), (2, 0)] }
    }

    /// `β = 1/2`, `α = 1/3`, offsets `b = (0, 0, 1/2)`, `a = (0, 1/3, 2/3)`.
    pub fn fj_benchmark() -> FamilySpec {
        FamilySpec::FraserJordan {
            beta: 0.5,
            alpha: 1.0 / 3.0,
            b: vec![0.0, 0.0, 0.5],
            a: vec![0.0, 1.0 / 3.0, 2.0 / 3.0],
        }
    }
}

pub fn make_family(spec: &FamilySpec) -> Result<Ifs> {
    match spec {
        FamilySpec::BedfordMcmullen { n, m, digits } => {
            if !(*m >= 2 && n > m) {
                return Err(Error::InvalidFamily(format!("grid needs n > m ≥ 2, got n={n}, m={m}")));
            }
            if digits.is_empty() {
                return Err(Error::InvalidFamily("no digits".into()));
            }
            let mut seen = BTreeSet::new();
            for &(i, j) in digits {
                if i >= *n || j >= *m {
                    return Err(Error::InvalidFamily(format!("digit ({i},{j}) lies outside the {n}×{m} grid")));
                }
                if !seen.insert((i, j)) {
                    return Err(Error::InvalidFamily(format!("digit ({i},{j}) repeats")));
                }
            }
            let (nf, mf) = (*n as f64, *m as f64);
            let maps = digits
                .iter()
                .map(|&(i, j)| AffineMap2::new(Mat2::diag(1.0 / nf, 1.0 / mf), Vec2::new(i as f64 / nf, j as f64 / mf)))
                .collect();
            Ifs::new(maps)
        }
        FamilySpec::FraserJordan { beta, alpha, b, a } => {
            if !(0.0 < *alpha && alpha < beta && *beta < 1.0) {
                return Err(Error::InvalidFamily(format!("need 0 < α < β < 1, got α={alpha}, β={beta}")));
            }
            if b.len() != a.len() || b.is_empty() {
                return Err(Error::InvalidFamily("offset lists must be non-empty and of equal length".into()));
            }
            let maps = b
                .iter()
                .zip(a)
                .map(|(&bi, &ai)| AffineMap2::new(Mat2::diag(*beta, *alpha), Vec2::new(bi, ai)))
                .collect();
            let ifs = Ifs::new(maps)?;
            if let Some((i, j)) = rosc_overlap(&ifs)? {
                return Err(Error::InvalidFamily(format!(
                    "rectangles of maps {i} and {j} overlap; the rectangular open set condition fails"
                )));
            }
            Ok(ifs)
        }
        FamilySpec::Custom { path } => Ifs::read_file(path),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Assouad,
    ProjectionAssouad,
    Delta,
    Frostman,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::Assouad => "assouad",
            Quantity::ProjectionAssouad => "projection_assouad",
            Quantity::Delta => "delta",
            Quantity::Frostman => "frostman",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub quantity: Quantity,
    pub value: f64,
    pub note: String,
    /// The value itself comes from an estimator, not a closed form.
    pub estimator_reference: bool,
}

fn reference(quantity: Quantity, value: f64, note: impl Into<String>) -> ReferenceValue {
    ReferenceValue { quantity, value, note: note.into(), estimator_reference: false }
}

/// Closed-form values, for the projection onto `V^⊥` and tubes along `V`
/// where `V` is the backward direction: the vertical axis for FJ systems,
/// the horizontal axis for grid carpets with `n > m`.
pub fn reference_values(spec: &FamilySpec) -> Result<Vec<ReferenceValue>> {
    match spec {
        FamilySpec::BedfordMcmullen { n, m, digits } => {
            make_family(spec)?;
            let rows: BTreeSet<u32> = digits.iter().map(|d| d.1).collect();
            let max_row = rows.iter().map(|&r| digits.iter().filter(|d| d.1 == r).count()).max().unwrap_or(0);
            let eta = (rows.len() as f64).ln() / (*m as f64).ln();
            let delta = (max_row as f64).ln() / (*n as f64).ln();
            Ok(vec![
                reference(Quantity::Assouad, eta + delta, "projection + delta"),
                reference(Quantity::ProjectionAssouad, eta, "log(#rows)/log m"),
                reference(Quantity::Delta, delta, "log(max row)/log n"),
            ])
        }
        FamilySpec::FraserJordan { beta, alpha, .. } => {
            let ifs = make_family(spec)?;
            let proj = project_ifs(&ifs)?.with_uniform_weights().merged();
            let count = ifs.len() as f64;
            let separated = proj.open_set_condition_on_hull();
            let (s, s_ref) = if separated {
                let s = proj
                    .maps
                    .iter()
                    .zip(proj.weights.as_deref().expect("uniform weights"))
                    .map(|(m, p)| p.ln() / m.ratio.abs().ln())
                    .fold(f64::INFINITY, f64::min);
                (s, reference(Quantity::Frostman, s, "min log p_i / log r_i of the merged projected measure"))
            } else {
                let e = frostman_dim(&proj, FROSTMAN_REFERENCE_DEPTH)?;
                let mut r = reference(Quantity::Frostman, e.value, "frostman estimator");
                r.estimator_reference = true;
                (e.value, r)
            };
            let delta = (count * beta.powf(s)).ln() / (1.0 / alpha).ln();
            let eta = projected_assouad(&proj)?;
            let mut out = vec![
                reference(Quantity::Assouad, eta.0 + delta, "projection + delta"),
                reference(Quantity::ProjectionAssouad, eta.0, eta.1),
                reference(Quantity::Delta, delta, "log(#maps·β^s)/log(1/α)"),
                s_ref,
            ];
            if !separated || eta.2 {
                for r in &mut out {
                    r.estimator_reference = true;
                }
            }
            Ok(out)
        }
        FamilySpec::Custom { .. } => Err(Error::NoReference("custom families have no closed form".into())),
    }
}

const FROSTMAN_REFERENCE_DEPTH: u32 = 20;

/// Assouad dimension of the projected system: its similarity dimension
/// under the open set condition, else a window estimate.
fn projected_assouad(proj: &SimilarityIfs1D) -> Result<(f64, &'static str, bool)> {
    if proj.open_set_condition_on_hull() {
        return Ok((proj.similarity_dimension().min(1.0), "similarity dimension of the merged projected system", false));
    }
    let maps: Vec<(f64, f64)> = proj.maps.iter().map(|m| (m.ratio, m.offset)).collect();
    let line = Ifs::new_1d(&maps)?;
    let e = assouad_estimate(&line, &[0, 4, 8], 10)?;
    Ok((e.value, "assouad estimate of the projected system", true))
}

/// Per-quantity tolerances and the estimator settings they were calibrated
/// with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub family: &'static str,
    /// Finest raster level the settings were calibrated at.
    pub calibrated_budget: u32,
    pub assouad: f64,
    pub projection: f64,
    pub delta: f64,
    pub frostman: f64,
    pub composite: f64,
}

pub const TOLERANCES_V1: [Tolerances; 2] = [
    Tolerances {
        family: "bedford_mcmullen",
        calibrated_budget: 14,
        assouad: 0.05,
        projection: 0.03,
        delta: 0.05,
        frostman: 0.02,
        composite: 0.08,
    },
    Tolerances {
        family: "fraser_jordan",
        calibrated_budget: 14,
        assouad: 0.07,
        projection: 0.03,
        delta: 0.05,
        frostman: 0.02,
        composite: 0.1,
    },
];

pub fn tolerances(spec: &FamilySpec) -> Result<Tolerances> {
    TOLERANCES_V1
        .iter()
        .find(|t| t.family == spec.name())
        .copied()
        .ok_or_else(|| Error::NoReference(format!("no tolerances for {}", spec.name())))
}

/// Estimator settings derived from a depth budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub assouad_k: Vec<u32>,
    pub window: u32,
    pub projection_k: Vec<u32>,
    pub delta_levels: Vec<u32>,
    pub frostman_depth: u32,
}

impl Plan {
    /// Window depth `min(10, budget − 4)`; the coarse levels of the Assouad
    /// scan sit deep enough to reach the fibre-dominated regime, which for
    /// strongly anisotropic carpets lies well below the window.
    pub fn new(spec: &FamilySpec, budget: u32) -> Result<Plan> {
        if budget < 10 {
            return Err(Error::invalid(format!("budget {budget} is below 10")));
        }
        let window = (budget - 4).min(10);
        let assouad_k = match spec {
            FamilySpec::FraserJordan { .. } => vec![budget, budget + 2, budget + 4],
            _ => vec![2, 4, 6],
        };
        Ok(Plan {
            assouad_k,
            window,
            projection_k: vec![2, 4, 6],
            delta_levels: (budget / 2..=budget).collect(),
            frostman_depth: (budget + 2).min(26),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    /// A [`Quantity`] name or `composite`.
    pub quantity: String,
    pub reference: f64,
    pub estimate: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_s: f64,
    pub note: String,
}

impl VerificationRow {
    fn new(quantity: &str, reference: f64, estimate: Result<f64>, tolerance: f64, runtime_s: f64) -> Self {
        let (estimate, note) = match estimate {
            Ok(v) => (Some(v), String::new()),
            Err(e) => (None, e.to_string()),
        };
        let pass = estimate.is_some_and(|v| (v - reference).abs() <= tolerance);
        VerificationRow { quantity: quantity.into(), reference, estimate, tolerance, pass, runtime_s, note }
    }
}

/// Runs each estimator against its reference, then checks the composite
/// `assouad ≈ projection + delta` on the estimates. Estimator failures become
/// failed rows. Rows come back in the order assouad, projection, delta,
/// frostman (when referenced), composite.
pub fn verify_formula(spec: &FamilySpec, budget: u32) -> Result<Vec<VerificationRow>> {
    let refs = reference_values(spec)?;
    let tol = tolerances(spec)?;
    let plan = Plan::new(spec, budget)?;
    let ifs = make_family(spec)?;
    let v = backward_direction(&ifs).map(|d| d.perp());
    let jobs: Vec<&ReferenceValue> = refs.iter().collect();
    let mut rows: Vec<(VerificationRow, Option<f64>)> = jobs
        .par_iter()
        .map(|r| {
            let start = Instant::now();
            let est = match r.quantity {
                Quantity::Assouad => assouad_estimate(&ifs, &plan.assouad_k, plan.window).map(|e| e.value),
                Quantity::ProjectionAssouad => v
                    .clone()
                    .and_then(|v| assouad_projection(&ifs, &v, &plan.projection_k, plan.window))
                    .map(|e| e.value),
                Quantity::Delta => v.clone().and_then(|v| delta_estimate(&ifs, &v, &plan.delta_levels)).map(|e| e.value),
                Quantity::Frostman => project_ifs(&ifs)
                    .and_then(|p| frostman_dim(&p.with_uniform_weights(), plan.frostman_depth))
                    .map(|e: DimensionEstimate| e.value),
            };
            let t = match r.quantity {
                Quantity::Assouad => tol.assouad,
                Quantity::ProjectionAssouad => tol.projection,
                Quantity::Delta => tol.delta,
                Quantity::Frostman => tol.frostman,
            };
            let raw = est.as_ref().ok().copied();
            let mut row = VerificationRow::new(r.quantity.as_str(), r.value, est, t, start.elapsed().as_secs_f64());
            if r.estimator_reference {
                row.note = join(&row.note, "estimator-reference");
            }
            (row, raw)
        })
        .collect();
    let get = |q: Quantity| rows.iter().find(|(r, _)| r.quantity == q.as_str()).and_then(|(_, v)| *v);
    let composite = match (get(Quantity::Assouad), get(Quantity::ProjectionAssouad), get(Quantity::Delta)) {
        (Some(a), Some(p), Some(d)) => Ok(a - (p + d)),
        _ => Err(Error::EmptyResult("an estimator behind the composite failed".into())),
    };
    let mut row = VerificationRow::new("composite", 0.0, composite, tol.composite, 0.0);
    let rv = |q: Quantity| refs.iter().find(|r| r.quantity == q).map(|r| r.value);
    if let (Some(a), Some(p), Some(d)) = (rv(Quantity::Assouad), rv(Quantity::ProjectionAssouad), rv(Quantity::Delta)) {
        if (a - p - d).abs() > 1e-9 {
            row.note = join(&row.note, &format!("references differ from the identity by {:.4}", a - p - d));
        }
    }
    rows.push((row, None));
    Ok(rows.into_iter().map(|(r, _)| r).collect())
}

fn join(a: &str, b: &str) -> String {
    if a.is_empty() {
        b.to_string()
    } else {
        format!("{a}; {b}")
    }
}

/// The backward Furstenberg direction, which is unique for diagonal
/// systems with a strictly stronger axis.
fn backward_direction(ifs: &Ifs) -> Result<Direction> {
    let set = furstenberg_directions(ifs, 4, Which::Backward)?;
    match set.directions.as_slice() {
        [d] => Ok(*d),
        _ => Err(Error::Unsupported(format!("{} backward directions; expected one", set.directions.len()))),
    }
}

/// Whether an FJ spec satisfies the rectangular open set condition, for
/// callers that want the check without building the family.
pub fn fj_is_separated(beta: f64, alpha: f64, b: &[f64], a: &[f64]) -> Result<bool> {
    let maps = b
        .iter()
        .zip(a)
        .map(|(&bi, &ai)| AffineMap2::new(Mat2::diag(beta, alpha), Vec2::new(bi, ai)))
        .collect();
    check_rosc(&Ifs::new(maps)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(refs: &[ReferenceValue], q: Quantity) -> f64 {
        refs.iter().find(|r| r.quantity == q).unwrap().value
    }

    #[test]
    fn families_build() {
        let bm = make_family(&FamilySpec::bm_benchmark()).unwrap();
        assert_eq!(bm.len(), 3);
        assert!(bm.maps().iter().all(|m| m.a == Mat2::diag(0.25, 0.5)));
        let fj = make_family(&FamilySpec::fj_benchmark()).unwrap();
        assert!(fj.maps().iter().all(|m| m.a == Mat2::diag(0.5, 1.0 / 3.0)));
    }

    #[test]
    fn overlapping_rectangles_are_rejected() {
        let spec = FamilySpec::FraserJordan { beta: 0.6, alpha: 0.5, b: vec![0.0, 0.3], a: vec![0.0, 0.1] };
        match make_family(&spec) {
            Err(Error::InvalidFamily(msg)) => assert!(msg.contains("0 and 1"), "{msg}"),
            other => panic!("{other:?}"),
        }
        assert!(!fj_is_separated(0.6, 0.5, &[0.0, 0.3], &[0.0, 0.1]).unwrap());
    }

    #[test]
    fn invalid_grids() {
        let bad = [
            FamilySpec::BedfordMcmullen { n: 2, m: 2, digits: vec![(0, 0)] },
            FamilySpec::BedfordMcmullen { n: 4, m: 2, digits: vec![(0, 0), (0, 0)] },
            FamilySpec::BedfordMcmullen { n: 4, m: 2, digits: vec![(4, 0)] },
            FamilySpec::FraserJordan { beta: 0.3, alpha: 0.5, b: vec![0.0], a: vec![0.0] },
        ];
        for s in bad {
            assert!(matches!(make_family(&s), Err(Error::InvalidFamily(_))), "{s:?}");
        }
    }

    #[test]
    fn bm_references() {
        let r = reference_values(&FamilySpec::bm_benchmark()).unwrap();
        assert!((value(&r, Quantity::Assouad) - 1.5).abs() < 1e-12);
        assert!((value(&r, Quantity::ProjectionAssouad) - 1.0).abs() < 1e-12);
        assert!((value(&r, Quantity::Delta) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fj_references() {
        let r = reference_values(&FamilySpec::fj_benchmark()).unwrap();
        let s = (1.5f64).ln() / 2f64.ln();
        let d = 2f64.ln() / 3f64.ln();
        assert!((value(&r, Quantity::Frostman) - s).abs() < 1e-12);
        assert!((value(&r, Quantity::Delta) - d).abs() < 1e-12);
        assert!((value(&r, Quantity::ProjectionAssouad) - 1.0).abs() < 1e-9);
        assert!((value(&r, Quantity::Assouad) - (1.0 + d)).abs() < 1e-9);
        assert!(r.iter().all(|x| !x.estimator_reference));
    }

    #[test]
    fn custom_has_no_reference() {
        let spec = FamilySpec::Custom { path: "x.json".into() };
        assert!(matches!(reference_values(&spec), Err(Error::NoReference(_))));
    }

    #[test]
    fn full_square_is_exact() {
        let spec = FamilySpec::BedfordMcmullen { n: 3, m: 2, digits: (0..3).flat_map(|i| (0..2).map(move |j| (i, j))).collect() };
        let r = reference_values(&spec).unwrap();
        assert!((value(&r, Quantity::Assouad) - 2.0).abs() < 1e-12);
        assert!((value(&r, Quantity::ProjectionAssouad) - 1.0).abs() < 1e-12);
        assert!((value(&r, Quantity::Delta) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_json() {
        for s in [FamilySpec::bm_benchmark(), FamilySpec::fj_benchmark()] {
            let j = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<FamilySpec>(&j).unwrap(), s);
        }
    }
}
