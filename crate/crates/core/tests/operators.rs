use num_complex::Complex64;
use proptest::prelude::*;
use tfa_core::analysis::{inner_product, Grid, SampledFunction};
use tfa_core::generators::{generate_omega, random_function, random_h, random_tiles, rng, OmegaGenerator};
use tfa_core::geometry::{FrequencySquare, Interval, SquareCollection, TileCollection};
use tfa_core::operators::{eval_lp, eval_model, eval_rf_r, eval_t_r, model_pieces, trilinear_form};
use tfa_core::oracle;

fn small() -> Grid {
    Grid::new(256, 32.0).unwrap()
}

fn re(f: &SampledFunction) -> Vec<f64> {
    f.values.iter().map(|v| v.re).collect()
}

fn eight_squares(grid: &Grid, seed: u64) -> SquareCollection {
    let gen = OmegaGenerator::RandomDisjoint { count: 8, min_scale: -2, max_scale: -1, lo: -1.0, hi: 1.0 };
    generate_omega(&gen, seed, grid).unwrap()
}

#[test]
fn t_r_matches_direct_double_sum() {
    let grid = small();
    for seed in 0..3 {
        let mut r = rng(seed);
        let f = random_function(&grid, &mut r, 1.5);
        let g = random_function(&grid, &mut r, 1.5);
        let omega = eight_squares(&grid, seed);
        let squares: Vec<FrequencySquare> = omega.iter().copied().collect();
        for sharp in [false, true] {
            for p in [3.0, 4.0, 6.0] {
                let fast = re(&eval_t_r(&f, &g, &omega, p, sharp).unwrap());
                let slow = oracle::t_r(&f, &g, &squares, p, sharp);
                let e = oracle::relative_error(&fast, &slow);
                assert!(e < 1e-8, "seed {seed} sharp {sharp} r {p}: {e}");
            }
        }
    }
}

#[test]
fn lp_with_four_intervals_matches_direct_double_sum() {
    let grid = small();
    let intervals = [
        Interval::from_endpoints(-2.0, -1.0),
        Interval::from_endpoints(-1.0, 0.0),
        Interval::from_endpoints(0.0, 0.5),
        Interval::from_endpoints(1.0, 2.5),
    ];
    for seed in 0..3 {
        let mut r = rng(100 + seed);
        let f = random_function(&grid, &mut r, 1.5);
        let g = random_function(&grid, &mut r, 1.5);
        for p in [2.0, 4.0] {
            let fast = re(&eval_lp(&f, &g, &intervals, p).unwrap());
            let slow = oracle::lp(&f, &g, &intervals, p);
            let e = oracle::relative_error(&fast, &slow);
            assert!(e < 1e-8, "seed {seed} r {p}: {e}");
        }
    }
    let f = random_function(&grid, &mut rng(9), 1.5);
    assert!(eval_lp(&f, &f, &[], 4.0).unwrap().values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn model_matches_direct_packets() {
    let grid = small();
    let tiles = random_tiles(&grid, 4, 4, (-1, 0), 1.0, Interval::new(-4.0, 8.0)).unwrap();
    let mut r = rng(4);
    let f = random_function(&grid, &mut r, 3.0);
    let g = random_function(&grid, &mut r, 3.0);
    let fast = re(&eval_model(&f, &g, &tiles, 4.0).unwrap());
    let slow = oracle::model(&f, &g, &tiles, 4.0).unwrap();
    assert!(oracle::relative_error(&fast, &slow) < 1e-8);
}

#[test]
fn wave_packets_match_direct_synthesis() {
    let grid = small();
    let tiles = random_tiles(&grid, 6, 3, (-1, 0), 1.0, Interval::new(-2.0, 4.0)).unwrap();
    for t in tiles.iter() {
        for c in [
            tfa_core::geometry::Component::First,
            tfa_core::geometry::Component::Second,
            tfa_core::geometry::Component::Third,
        ] {
            let fast = tfa_core::analysis::make_wave_packet(&grid, t, c).unwrap().sampled();
            let slow = oracle::packet(&grid, t, c).unwrap();
            let err = fast.values.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "tile {t} {c:?}: {err}");
        }
    }
}

#[test]
fn model_pieces_are_dual_to_the_trilinear_form() {
    let grid = Grid::new(1024, 64.0).unwrap();
    let tiles = random_tiles(&grid, 11, 6, (-1, 0), 2.0, Interval::new(-8.0, 16.0)).unwrap();
    let mut r = rng(11);
    let f = random_function(&grid, &mut r, 3.0);
    let g = random_function(&grid, &mut r, 3.0);
    let h = random_h(&grid, tiles.squares(), &mut r, 6.0).unwrap();
    let direct: Complex64 = model_pieces(&f, &g, &tiles)
        .unwrap()
        .iter()
        .map(|(sq, piece)| inner_product(piece, h.get(sq).unwrap()).unwrap())
        .sum();
    let lambda = trilinear_form(&f, &g, &h, &tiles).unwrap();
    assert!((direct - lambda).norm() <= 1e-8 * lambda.norm().max(1e-300), "{direct} vs {lambda}");
}

fn partition(tiles: &TileCollection, mask: u64) -> (TileCollection, TileCollection) {
    let (a, b): (Vec<_>, Vec<_>) = tiles.iter().enumerate().partition(|(i, _)| mask >> (i % 64) & 1 == 1);
    (
        TileCollection::from_tiles(a.into_iter().map(|(_, t)| *t)),
        TileCollection::from_tiles(b.into_iter().map(|(_, t)| *t)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trilinear_form_is_linear_in_f(seed in 0u64..1_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let grid = small();
        let tiles = random_tiles(&grid, seed, 4, (-1, 0), 1.0, Interval::new(-4.0, 8.0)).unwrap();
        let mut r = rng(seed);
        let f1 = random_function(&grid, &mut r, 3.0);
        let f2 = random_function(&grid, &mut r, 3.0);
        let g = random_function(&grid, &mut r, 3.0);
        let h = random_h(&grid, tiles.squares(), &mut r, 3.0).unwrap();
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let combo = f1.scale(ca).add(&f2.scale(cb)).unwrap();
        let lhs = trilinear_form(&combo, &g, &h, &tiles).unwrap();
        let rhs = ca * trilinear_form(&f1, &g, &h, &tiles).unwrap() + cb * trilinear_form(&f2, &g, &h, &tiles).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn trilinear_form_is_additive_over_partitions(seed in 0u64..1_000, mask in any::<u64>()) {
        let grid = small();
        let tiles = random_tiles(&grid, seed, 4, (-1, 0), 1.0, Interval::new(-4.0, 8.0)).unwrap();
        let mut r = rng(seed + 7);
        let f = random_function(&grid, &mut r, 3.0);
        let g = random_function(&grid, &mut r, 3.0);
        let h = random_h(&grid, tiles.squares(), &mut r, 3.0).unwrap();
        let (s1, s2) = partition(&tiles, mask);
        let whole = trilinear_form(&f, &g, &h, &tiles).unwrap();
        let parts = trilinear_form(&f, &g, &h, &s1).unwrap() + trilinear_form(&f, &g, &h, &s2).unwrap();
        prop_assert!((whole - parts).norm() <= 1e-12 * (1.0 + whole.norm()));
    }

    #[test]
    fn sharp_rf_two_is_an_isometry_on_partitions(seed in 0u64..1_000, cuts in proptest::collection::btree_set(-27i32..28, 1..12)) {
        let grid = Grid::new(512, 64.0).unwrap();
        let f = random_function(&grid, &mut rng(seed), 3.0);
        let mut edges: Vec<f64> = vec![-3.5];
        // eighths keep adjacent endpoints exact
        edges.extend(cuts.iter().map(|c| *c as f64 / 8.0));
        edges.push(3.5);
        let intervals: Vec<Interval> = edges.windows(2).map(|w| Interval::from_endpoints(w[0], w[1])).collect();
        let n2 = eval_rf_r(&f, &intervals, 2.0, true).unwrap().norm_l2();
        let n4 = eval_rf_r(&f, &intervals, 4.0, true).unwrap().norm_l2();
        prop_assert!((n2 - f.norm_l2()).abs() <= 1e-10 * f.norm_l2());
        prop_assert!(n4 <= f.norm_l2() * (1.0 + 1e-10));
    }
}
