use std::collections::BTreeSet;

use num_complex::Complex64;
use proptest::prelude::*;
use tfa_core::analysis::{Grid, SampledFunction};
use tfa_core::generators::{random_tiles, rng};
use tfa_core::geometry::{build_tritile, DyadicInterval, FrequencySquare, Interval, SquareCollection, TileCollection, TriTile};
use tfa_core::operators::{trilinear_form, ExponentTuple};
use tfa_core::probe::{
    counterexample_config, restricted_probe, select_intervals, stratify, superlevel_union, verify_selection, GridSet,
    HConstruction, RestrictedTriple, StripOrientation, PROBE_SCHEMA,
};

fn grid() -> Grid {
    Grid::new(1024, 64.0).unwrap()
}

fn random_set(grid: Grid, seed: u64, pieces: usize) -> GridSet {
    use rand::Rng;
    let mut r = rng(seed);
    let intervals: Vec<Interval> = (0..pieces)
        .map(|_| Interval::new(r.gen_range(-16.0..16.0), r.gen_range(0.25..4.0)))
        .collect();
    GridSet::from_intervals(grid, &intervals)
}

#[test]
fn single_tile_selects_its_own_interval() {
    let g = grid();
    let t = build_tritile(DyadicInterval::new(1, 2), FrequencySquare::from_parts(-1, 0, 1)).unwrap();
    let tiles = TileCollection::from_tiles([t]);
    let x = GridSet::from_intervals(g, &[t.spatial.as_interval()]);
    let sel = select_intervals(&tiles, &x, 10.0);
    // the weighted average of 1_{I_s} over I_s is exactly 1, so n = 0
    assert_eq!(sel.levels.len(), 1);
    let (n, chosen) = sel.levels.iter().next().unwrap();
    assert_eq!(*n, 0);
    assert_eq!(chosen.len(), 1);
    assert_eq!(chosen[0].0, t.spatial);
    assert_eq!(chosen[0].1, tiles);
}

#[test]
fn strip_configurations() {
    let g = Grid::new(8192, 32.0).unwrap();
    let one = counterexample_config(1, StripOrientation::EtaStrip, &g).unwrap();
    assert_eq!(one, SquareCollection::from_squares([FrequencySquare::from_parts(0, 0, 0)]).unwrap());
    for o in [StripOrientation::XiStrip, StripOrientation::EtaStrip] {
        let eight = counterexample_config(8, o, &g).unwrap();
        assert_eq!(eight.len(), 8);
        let v: Vec<&FrequencySquare> = eight.iter().collect();
        for (i, a) in v.iter().enumerate() {
            for b in &v[i + 1..] {
                let x = a.omega1.start() < b.omega1.end() && b.omega1.start() < a.omega1.end();
                let y = a.omega2.start() < b.omega2.end() && b.omega2.start() < a.omega2.end();
                assert!(!(x && y));
            }
        }
    }
}

fn aligned_probe(f_scale: f64) -> (f64, f64, TileCollection, RestrictedTriple) {
    let g = grid();
    let omega = SquareCollection::from_squares([FrequencySquare::from_parts(0, 0, 0)]).unwrap();
    let tiles = TileCollection::from_squares(&omega, Interval::new(-4.0, 8.0));
    let unit = [Interval::new(-0.5, 1.0)];
    let set = GridSet::from_intervals(g, &unit);
    let ind = |c: f64| {
        SampledFunction::new(
            g,
            set.indicator().iter().enumerate().map(|(i, v)| Complex64::from_polar(v * c, 0.25 * g.x(i))).collect(),
        )
        .unwrap()
    };
    let triple = RestrictedTriple::build(
        &tiles,
        set.clone(),
        set.clone(),
        set.clone(),
        ind(f_scale),
        ind(1.0),
        4.0,
        4.0,
        HConstruction::Extremal,
    )
    .unwrap();
    (set.measure(), set.measure(), tiles, triple)
}

#[test]
fn aligned_single_square_ratio_is_the_direct_quotient() {
    let (mf, mg, tiles, triple) = aligned_probe(1.0);
    let e = ExponentTuple::new(3.0, 3.0, 4.0).unwrap();
    let rep = restricted_probe("aligned", &tiles, &triple, e, None, Some(1)).unwrap();
    let lambda = trilinear_form(&triple.f, &triple.g, &triple.h, &tiles).unwrap().norm();
    assert!(lambda > 0.0);
    let denom = mf.powf(1.0 / 3.0) * mg.powf(1.0 / 3.0) * triple.h_set.measure().powf(1.0 - 2.0 / 3.0);
    assert!((rep.ratio - lambda / denom).abs() <= 1e-12 * rep.ratio, "{} vs {}", rep.ratio, lambda / denom);
    assert!(rep.ratio.is_finite());
    assert_eq!(rep.schema, PROBE_SCHEMA);
    let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["label"], "aligned");

    let (_, _, tiles0, zero) = aligned_probe(0.0);
    let rep0 = restricted_probe("zero", &tiles0, &zero, e, None, None).unwrap();
    assert_eq!(rep0.ratio, 0.0);
}

/// `avg_I(1_X chi_tilde^e) <= K M(1_X)(x)` on `I`, with `K` the layer-cake
/// integral of the shortest dyadic window covering `{dist < d}`.
fn containment_constant(e: f64) -> f64 {
    let s = |j: i32| (2.0 / (2f64.powi(j) + 1.0)).powf(e);
    0.5 / (1..60).map(|j| 2f64.powi(j) * (s(j - 1) - s(j))).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn superlevel_sets_shrink_as_c_grows(seed in 0u64..100_000, c in 0.5f64..8.0) {
        let g = grid();
        let f = random_set(g, seed, 3);
        let h = random_set(g, seed + 1, 2);
        let lo = superlevel_union(&f, &h, c);
        let hi = superlevel_union(&f, &h, 2.0 * c);
        prop_assert!(hi.is_subset_of(&lo));
    }

    #[test]
    fn strata_partition_the_tiles(seed in 0u64..100_000) {
        let g = grid();
        let tiles = random_tiles(&g, seed, 6, (-1, 0), 2.0, Interval::new(-8.0, 16.0)).unwrap();
        let e = random_set(g, seed, 4);
        let strata = stratify(&tiles, &e).unwrap();
        let mut seen: BTreeSet<TriTile> = BTreeSet::new();
        for s in strata.values() {
            for t in s.iter() {
                prop_assert!(seen.insert(*t));
            }
        }
        prop_assert_eq!(seen.len(), tiles.len());
        if let Some(d0) = strata.get(&0) {
            // d = 0 means dist(I_s, E^c) < |I_s|
            for t in d0.iter() {
                let near = (0..g.len()).any(|i| !e.contains(i) && g.periodic_dist(&t.spatial.as_interval(), g.x(i)) < t.spatial_len());
                prop_assert!(near);
            }
        }
    }

    #[test]
    fn selections_verify(seed in 0u64..100_000) {
        let g = grid();
        let tiles = random_tiles(&g, seed, 6, (-1, 0), 2.0, Interval::new(-8.0, 16.0)).unwrap();
        let x = random_set(g, seed + 3, 3);
        for exponent in [10.0, 20.0 * 4.0 / 3.0] {
            let sel = select_intervals(&tiles, &x, exponent);
            let checked = verify_selection(&tiles, &x, &sel, containment_constant(exponent) * (1.0 - 1e-9));
            prop_assert!(checked.is_ok(), "{:?}", checked);
        }
    }
}
