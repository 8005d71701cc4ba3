use proptest::prelude::*;
use selfaffine_core::ifs::{compose, frostman_dim, rasterize, AffineMap2, Ifs, Similarity1D, SimilarityIfs1D, Word};
use selfaffine_core::linalg::{Mat2, Vec2};

fn random_ifs() -> impl Strategy<Value = Ifs> {
    prop::collection::vec(
        ((-0.6f64..0.6, -0.3f64..0.3, -0.3f64..0.3, -0.6f64..0.6), (-1.0f64..1.0, -1.0f64..1.0)),
        2..4,
    )
    .prop_filter_map("contractions", |maps| {
        let maps: Vec<AffineMap2> = maps
            .into_iter()
            .map(|((a, b, c, d), (x, y))| AffineMap2::new(Mat2::new(a, b, c, d), Vec2::new(x, y)))
            .collect();
        if maps.iter().any(|m| m.a.op_norm() > 0.7 || m.a.det().abs() < 1e-3) {
            return None;
        }
        Ifs::new(maps).ok()
    })
}

fn diagonal_ifs() -> impl Strategy<Value = Ifs> {
    prop::collection::vec((0.2f64..0.5, 0.2f64..0.5, 0.0f64..0.5, 0.0f64..0.5), 2..4)
        .prop_map(|v| Ifs::new(v.into_iter().map(|(a, d, x, y)| AffineMap2::new(Mat2::diag(a, d), Vec2::new(x, y))).collect()).unwrap())
}

fn close(a: &AffineMap2, b: &AffineMap2) -> bool {
    let scale = 1.0 + a.t.norm();
    a.a.max_abs_diff(&b.a) <= 1e-12 && (a.t - b.t).norm() <= 1e-12 * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_concatenation(ifs in random_ifs(), u in prop::collection::vec(0usize..4, 0..7), v in prop::collection::vec(0usize..4, 0..6)) {
        let k = ifs.len();
        let u = Word(u.into_iter().map(|s| s % k).collect());
        let v = Word(v.into_iter().map(|s| s % k).collect());
        let uv = compose(&ifs, &u.concat(&v)).unwrap();
        let split = compose(&ifs, &u).unwrap().then_inner(&compose(&ifs, &v).unwrap());
        prop_assert!(close(&uv, &split));
    }

    #[test]
    fn raster_refines_and_holds_samples(ifs in diagonal_ifs(), n in 3u32..6) {
        let coarse = rasterize(&ifs, n).unwrap();
        let fine = rasterize(&ifs, n + 2).unwrap();
        let truncated = fine.truncate(n).unwrap();
        prop_assert!(truncated.cells().iter().all(|c| coarse.contains(*c)));
        // the cell holding a sampled point sits in both rasters
        let h = (-((n + 2) as f64)).exp2();
        let max = (1u64 << (n + 2)) - 1;
        for p in ifs.sample_points(2000, 40, 7) {
            let c = [((p.x / h).floor() as u64).min(max), ((p.y / h).floor() as u64).min(max)];
            prop_assert!(fine.contains(c), "{:?} missing at level {}", p, n + 2);
            prop_assert!(coarse.contains([c[0] >> 2, c[1] >> 2]));
        }
    }

    #[test]
    fn frostman_bounds_and_permutation(maps in prop::collection::vec((0.2f64..0.5, 0.0f64..1.0), 2..4), w in prop::collection::vec(0.1f64..1.0, 4)) {
        let k = maps.len();
        let total: f64 = w[..k].iter().sum();
        let weights: Vec<f64> = w[..k].iter().map(|x| x / total).collect();
        let sims: Vec<Similarity1D> = maps.iter().map(|&(r, t)| Similarity1D { ratio: r, offset: t }).collect();
        let m = SimilarityIfs1D::new(sims.clone(), Some(weights.clone())).unwrap();
        let d = frostman_dim(&m, 10).unwrap().value;
        prop_assert!((0.0..=1.0 + 1e-9).contains(&d));
        let rev = SimilarityIfs1D::new(sims.into_iter().rev().collect(), Some(weights.into_iter().rev().collect())).unwrap();
        prop_assert!((frostman_dim(&rev, 10).unwrap().value - d).abs() < 1e-9);
    }
}

#[test]
fn cylinder_counts_rescale() {
    // SSC carpet: one cylinder of generation 1 is a scaled copy of the whole
    let m = |x: f64, y: f64| AffineMap2::new(Mat2::diag(0.25, 0.25), Vec2::new(x, y));
    let ifs = Ifs::new(vec![m(0.0, 0.0), m(0.75, 0.0), m(0.375, 0.75)]).unwrap();
    let whole = rasterize(&ifs, 6).unwrap();
    let deep = rasterize(&ifs, 8).unwrap();
    let q = selfaffine_core::dyadic::DyadicCube::new(2, 2, &[0, 0]).unwrap();
    let copy = deep.renormalize(&q).unwrap();
    for n in 0..=6 {
        let a = copy.covering_number(n).unwrap() as f64;
        let b = whole.covering_number(n).unwrap() as f64;
        // one-cell slack on each side of the copy
        assert!(a <= b * 4.0 + 4.0 && b <= a * 4.0 + 4.0, "n={n}: {a} vs {b}");
    }
}
