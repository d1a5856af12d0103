use std::collections::BTreeSet;

use proptest::prelude::*;
use tfa_core::analysis::{chi_tilde_grid, make_wave_packet, Grid, SampledFunction};
use tfa_core::columns::{maximal_tower, mutually_disjoint, HProfile, Orientation, Tower, Workspace};
use tfa_core::experiment::COLUMN_PARAMS;
use tfa_core::generators::{random_function, random_h, random_tiles, rng, separated_column};
use tfa_core::geometry::{build_tritile, Component, DyadicInterval, FrequencySquare, Interval, TileCollection, TriTile};
use tfa_core::operators::{conjugate, Pairings, SequenceH};
use tfa_core::oracle;
use tfa_core::size_energy::{energy_f, greedy_fg_family, restrict, size_f, size_h, Slot};

fn small() -> Grid {
    Grid::new(256, 32.0).unwrap()
}

fn medium() -> Grid {
    Grid::new(1024, 64.0).unwrap()
}

fn within(a: &DyadicInterval, b: &DyadicInterval) -> bool {
    b.start() <= a.start() && a.end() <= b.end()
}

fn overlap(a: &DyadicInterval, b: &DyadicInterval) -> bool {
    a.start() < b.end() && b.start() < a.end()
}

fn member(o: Orientation, top: &TriTile, s: &TriTile) -> bool {
    let (wt, ws) = match o {
        Orientation::Column => (top.square.omega1, s.square.omega1),
        Orientation::Row => (top.square.omega2, s.square.omega2),
    };
    within(&s.spatial, &top.spatial) && within(&wt, &ws)
}

fn instance(grid: &Grid, seed: u64) -> TileCollection {
    random_tiles(grid, seed, 6, (-1, 0), 2.0, Interval::new(-12.0, 24.0)).unwrap()
}

#[test]
fn maximal_towers_equal_the_brute_force_filter() {
    let grid = medium();
    for seed in 0..5 {
        let tiles = instance(&grid, seed);
        assert!(tiles.len() >= 50, "{} tiles", tiles.len());
        for top in tiles.iter() {
            for o in [Orientation::Column, Orientation::Row] {
                let t = maximal_tower(&tiles, top, o);
                let got: BTreeSet<TriTile> = t.members.iter().copied().collect();
                let want: BTreeSet<TriTile> = tiles.iter().copied().filter(|s| member(o, top, s)).collect();
                assert_eq!(got, want);
                assert!(got.contains(top));
            }
        }
        let top = *tiles.iter().next().unwrap();
        assert!(maximal_tower(&TileCollection::new(), &top, Orientation::Column).is_empty());
    }
}

fn disjoint_oracle(towers: &[Tower]) -> bool {
    for (i, a) in towers.iter().enumerate() {
        for b in &towers[i + 1..] {
            if a.members.iter().any(|s| b.members.contains(s)) {
                return false;
            }
            let wa = if a.orientation == Orientation::Column { a.top.square.omega1 } else { a.top.square.omega2 };
            let wb = if b.orientation == Orientation::Column { b.top.square.omega1 } else { b.top.square.omega2 };
            if overlap(&a.top.spatial, &b.top.spatial) && overlap(&wa, &wb) {
                return false;
            }
        }
    }
    true
}

#[test]
fn mutual_disjointness_matches_rectangle_oracle() {
    use rand::seq::SliceRandom;
    let grid = medium();
    let mut agree = [0usize; 2];
    for seed in 0..40 {
        let tiles = instance(&grid, seed % 4);
        let mut r = rng(seed);
        let mut tops: Vec<TriTile> = tiles.iter().copied().collect();
        tops.shuffle(&mut r);
        let k = 1 + (seed as usize % 4);
        let fam: Vec<Tower> = tops[..k]
            .iter()
            .enumerate()
            .map(|(i, t)| maximal_tower(&tiles, t, if i % 2 == 0 { Orientation::Column } else { Orientation::Row }))
            .collect();
        let want = disjoint_oracle(&fam);
        assert_eq!(mutually_disjoint(&fam), want, "seed {seed}");
        agree[want as usize] += 1;
    }
    assert!(agree[0] > 0 && agree[1] > 0, "both outcomes exercised: {agree:?}");
}

/// `int_I |M(h chi_I^20)|^{r'}` with the window-enumeration maximal function.
fn j_oracle(grid: &Grid, h: &SampledFunction, i: &DyadicInterval, rp: f64) -> f64 {
    let w = chi_tilde_grid(grid, &i.as_interval(), 20.0);
    let u: Vec<f64> = h.values.iter().zip(&w).map(|(v, w)| v.norm() * w).collect();
    let n = u.len();
    let mut total = 0.0;
    for c in 0..n {
        let x = grid.x(c);
        if !(i.start() <= x && x < i.end()) {
            continue;
        }
        let mut best = u[c];
        let mut len = 2;
        while len <= n {
            for start in (c + n + 1 - len)..=(c + n) {
                let s: f64 = (0..len).map(|j| u[(start + j) % n]).sum();
                best = best.max(s / len as f64);
            }
            len *= 2;
        }
        total += best.powf(rp);
    }
    total * grid.spacing()
}

#[test]
fn size_h_equals_exhaustive_tower_search() {
    let grid = small();
    let tiles = random_tiles(&grid, 5, 6, (-1, 0), 1.0, Interval::new(-10.0, 20.0)).unwrap();
    assert!(tiles.len() >= 50, "{} tiles", tiles.len());
    let h = random_h(&grid, tiles.squares(), &mut rng(21), 2.0).unwrap();
    let rp = conjugate(4.0);
    let got = size_h(&tiles, &HProfile::new(&h, rp)).unwrap().value;
    let mut j = std::collections::HashMap::new();
    let mut want: f64 = 0.0;
    for top in tiles.iter() {
        for o in [Orientation::Column, Orientation::Row] {
            let squares: BTreeSet<FrequencySquare> =
                tiles.iter().filter(|s| member(o, top, s)).map(|s| s.square).collect();
            let total: f64 = squares
                .iter()
                .map(|sq| *j.entry((top.spatial, *sq)).or_insert_with(|| j_oracle(&grid, h.get(sq).unwrap(), &top.spatial, rp)))
                .sum();
            want = want.max((total / top.spatial_len()).powf(1.0 / rp));
        }
    }
    assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
}

#[test]
fn size_f_equals_direct_packet_maximum() {
    let grid = small();
    let tiles = random_tiles(&grid, 5, 6, (-1, 0), 1.0, Interval::new(-4.0, 8.0)).unwrap();
    let f = random_function(&grid, &mut rng(5), 3.0);
    let pairings = Pairings::compute(&grid, &tiles, &f, &f, None).unwrap();
    let want = tiles
        .iter()
        .map(|t| {
            let p = oracle::packet(&grid, t, Component::First).unwrap();
            oracle::pair(&grid, &f.values, &p).norm() / t.spatial_len().sqrt()
        })
        .fold(0.0, f64::max);
    let got = size_f(&tiles, &pairings).value;
    assert!((got - want).abs() <= 1e-10 * want);
    assert_eq!(size_f(&TileCollection::new(), &pairings).value, 0.0);
}

fn unit_tile() -> TriTile {
    build_tritile(DyadicInterval::new(0, 0), FrequencySquare::from_parts(0, 0, 1)).unwrap()
}

#[test]
fn energy_of_a_self_paired_unit_packet() {
    let grid = medium();
    let t = unit_tile();
    let tiles = TileCollection::from_tiles([t]);
    let f = make_wave_packet(&grid, &t, Component::First).unwrap().sampled();
    let pairings = Pairings::compute(&grid, &tiles, &f, &f, None).unwrap();
    let e = energy_f(&tiles, &pairings);
    assert!(e.value >= 0.5, "energy {}", e.value);
    let zero = SampledFunction::zeros(grid);
    let p0 = Pairings::compute(&grid, &tiles, &zero, &zero, None).unwrap();
    assert_eq!(energy_f(&tiles, &p0).value, 0.0);
}

fn h_for(grid: &Grid, tiles: &TileCollection, seed: u64) -> SequenceH {
    random_h(grid, tiles.squares(), &mut rng(seed), 3.0).unwrap()
}

#[test]
fn single_tile_column_sides_in_closed_form() {
    let grid = medium();
    let t = unit_tile();
    let tiles = TileCollection::from_tiles([t]);
    let mut r = rng(8);
    let f = random_function(&grid, &mut r, 3.0);
    let g = random_function(&grid, &mut r, 3.0);
    let h = h_for(&grid, &tiles, 9);
    let ws = Workspace::new(&tiles, &f, &g, Some(&h), 4.0).unwrap();
    let (lhs, rhs) = ws.estimate_sides(&maximal_tower(&tiles, &t, Orientation::Column)).unwrap();

    let a = oracle::pair(&grid, &f.values, &oracle::packet(&grid, &t, Component::First).unwrap()).norm();
    let b = oracle::pair(&grid, &g.values, &oracle::packet(&grid, &t, Component::Second).unwrap()).norm();
    let c = oracle::pair(&grid, &oracle::packet(&grid, &t, Component::Third).unwrap(), &h.get(&t.square).unwrap().values).norm();
    let rp = conjugate(4.0);
    let hval = (j_oracle(&grid, h.get(&t.square).unwrap(), &t.spatial, rp) / t.spatial_len()).powf(1.0 / rp);
    // with one tile the supremum, the energy and the Hölder step collapse to
    // |<f,phi_1>| |<g,phi_2>| times the h value
    assert!((lhs - a * b * c).abs() <= 1e-9 * lhs);
    assert!((rhs - a * b * hval).abs() <= 1e-9 * rhs, "{rhs} vs {}", a * b * hval);
}

#[test]
fn row_estimate_equals_reflected_column_estimate() {
    let grid = medium();
    let tiles = instance(&grid, 31);
    let mut r = rng(31);
    let f = random_function(&grid, &mut r, 3.0);
    let g = random_function(&grid, &mut r, 3.0);
    let h = h_for(&grid, &tiles, 32);
    let mut h_ref = SequenceH::new(grid);
    for (sq, v) in h.iter() {
        h_ref.insert(sq.reflect(), v.clone()).unwrap();
    }
    let reflected = TileCollection::from_tiles(tiles.iter().map(|t| t.reflect()));
    let ws = Workspace::new(&tiles, &f, &g, Some(&h), 4.0).unwrap();
    let ws_ref = Workspace::new(&reflected, &g, &f, Some(&h_ref), 4.0).unwrap();
    for top in tiles.iter().take(20) {
        let row = maximal_tower(&tiles, top, Orientation::Row);
        let col = row.reflect();
        assert_eq!(col.orientation, Orientation::Column);
        let (l1, r1) = ws.estimate_sides(&row).unwrap();
        let (l2, r2) = ws_ref.estimate_sides(&col).unwrap();
        assert!((l1 - l2).abs() <= 1e-12 * l1.max(1e-300), "{l1} vs {l2}");
        assert!((r1 - r2).abs() <= 1e-12 * r1.max(1e-300), "{r1} vs {r2}");
    }
}

#[test]
fn g_orthogonality_of_a_single_packet_is_the_inverse_top_length() {
    let grid = Grid::new(4096, 256.0).unwrap();
    let mut r = rng(12);
    for size in [1, 4, 12] {
        let c = separated_column(&mut r, size, &COLUMN_PARAMS).unwrap();
        let s = c.members[c.len() / 2];
        let g = make_wave_packet(&grid, &s, Component::Second).unwrap().sampled();
        let tiles = TileCollection::from_tiles(c.members.iter().copied());
        let ws = Workspace::new(&tiles, &g, &g, None, 4.0).unwrap();
        let (lhs, rhs) = ws.g_orthogonality(&c).unwrap();
        assert!((lhs * c.measure() - 1.0).abs() < 1e-10, "size {size}: {lhs}");
        assert!(rhs > 0.0 && lhs <= 2.0 * rhs, "size {size}: {lhs} vs {rhs}");
    }
}

#[test]
fn restrict_equals_brute_force_filter() {
    let grid = medium();
    let tiles = instance(&grid, 3);
    for scale in 0..4 {
        for pos in -3..3 {
            let i0 = DyadicInterval::new(scale, pos);
            let got: BTreeSet<TriTile> = restrict(&tiles, &i0).iter().copied().collect();
            let want: BTreeSet<TriTile> = tiles.iter().copied().filter(|t| within(&t.spatial, &i0)).collect();
            assert_eq!(got, want);
        }
    }
    let right = random_tiles(&grid, 3, 6, (-1, 0), 2.0, Interval::new(0.0, 16.0)).unwrap();
    assert_eq!(restrict(&right, &DyadicInterval::new(4, 0)), right);
    assert!(restrict(&right, &DyadicInterval::new(4, -1)).is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn greedy_families_are_admissible(seed in 0u64..10_000) {
        let grid = medium();
        let tiles = instance(&grid, seed);
        let f = random_function(&grid, &mut rng(seed), 3.0);
        let g = random_function(&grid, &mut rng(seed + 1), 3.0);
        let pairings = Pairings::compute(&grid, &tiles, &f, &g, None).unwrap();
        let top = size_f(&tiles, &pairings).value.log2().floor() as i32;
        for slot in [Slot::F, Slot::G] {
            for n in (top - 6)..=top {
                let fam = greedy_fg_family(&tiles, &pairings, slot, n);
                prop_assert!(disjoint_oracle(&fam));
                for t in &fam {
                    prop_assert!(t.check().is_ok());
                }
            }
        }
    }

    #[test]
    fn tower_membership_is_reflexive_and_reflection_is_an_involution(seed in 0u64..10_000) {
        let grid = medium();
        let tiles = instance(&grid, seed);
        for top in tiles.iter() {
            let c = maximal_tower(&tiles, top, Orientation::Column);
            prop_assert!(c.members.contains(top));
            prop_assert_eq!(c.reflect().reflect(), c.clone());
        }
    }
}
