use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::Rational64;
use proptest::prelude::*;
use tfa_core::analysis::{make_wave_packet, Grid, SampledFunction};
use tfa_core::columns::{HProfile, Orientation, Workspace};
use tfa_core::decomposition::{alpha, decompose_f, decompose_h, split, verify_partition, verify_splitting};
use tfa_core::experiment::{exponent_identity, COLUMN_PARAMS};
use tfa_core::generators::{random_function, random_h, random_tiles, random_tower, rng};
use tfa_core::geometry::{build_tritile, Component, DyadicInterval, FrequencySquare, Interval, TileCollection, TriTile};
use tfa_core::operators::{conjugate, Pairings, SequenceH};
use tfa_core::size_energy::size_h;

#[test]
fn alpha_and_the_exponent_identity() {
    assert_eq!(alpha(4.0).unwrap(), 0.25);
    assert!(alpha(2.0 + 1e-9).unwrap() > 0.0 && alpha(2.0 + 1e-9).unwrap() < 1e-9);
    assert!(alpha(2.0).is_err());
    for r in [3i64, 4, 6] {
        let r_q = Rational64::from_integer(r);
        let one = Rational64::from_integer(1);
        let a = Rational64::new(1, 2) - one / r_q;
        let inv_rp = one - one / r_q;
        let two = Rational64::from_integer(2);
        assert_eq!(one + two * a + two * inv_rp - two, Rational64::from_integer(4) * a, "r = {r}");
        assert!(exponent_identity(r));
    }
    // at r = 4 both sides equal 1
    let a = Rational64::new(1, 4);
    assert_eq!(Rational64::from_integer(1) + a * 2 + Rational64::new(3, 2) - 2, Rational64::from_integer(1));
    assert_eq!(a * 4, Rational64::from_integer(1));
}

fn unit_tile() -> TriTile {
    build_tritile(DyadicInterval::new(0, 0), FrequencySquare::from_parts(0, 0, 1)).unwrap()
}

#[test]
fn one_tile_above_the_threshold_is_one_column() {
    let grid = Grid::new(1024, 64.0).unwrap();
    let t = unit_tile();
    let tiles = TileCollection::from_tiles([t]);
    let f = make_wave_packet(&grid, &t, Component::First).unwrap().sampled();
    let pairings = Pairings::compute(&grid, &tiles, &f, &f, None).unwrap();
    let size = tfa_core::size_energy::size_f(&tiles, &pairings).value;
    let p = decompose_f(&tiles, 0, size, &pairings).unwrap();
    assert!(p.residual.is_empty());
    assert_eq!(p.extracted.len(), 1);
    assert_eq!(p.extracted[0].orientation, Orientation::Column);
    assert_eq!(p.extracted[0].members, vec![t]);
    verify_partition(&tiles, &p).unwrap();
}

#[test]
fn dominant_column_is_extracted_before_rows() {
    let grid = Grid::new(4096, 256.0).unwrap();
    let column = random_tower(&mut rng(2), Orientation::Column, 16, &COLUMN_PARAMS).unwrap();
    assert!(column.len() > 4);
    let tiles = TileCollection::from_tiles(column.members.iter().copied());
    let mut h = SequenceH::new(grid);
    for sq in tiles.squares() {
        h.insert(sq, SampledFunction::new(grid, vec![Complex64::new(1.0, 0.0); grid.len()]).unwrap()).unwrap();
    }
    let profile = HProfile::new(&h, conjugate(4.0));
    let size = size_h(&tiles, &profile).unwrap().value;
    let p = decompose_h(&tiles, 0, size, &profile).unwrap();
    verify_partition(&tiles, &p).unwrap();
    let first = &p.extracted[0];
    assert_eq!(first.orientation, Orientation::Column);
    // members at the top scale generate the same maximal column
    assert_eq!((first.top.spatial, first.top.square.omega1), (column.top.spatial, column.top.square.omega1));
    assert_eq!(first.len(), column.len());
    assert!(p.residual.is_empty());

    let zero = {
        let mut z = SequenceH::new(grid);
        for sq in tiles.squares() {
            z.insert(sq, SampledFunction::zeros(grid)).unwrap();
        }
        z
    };
    let p0 = decompose_h(&tiles, 0, 1.0, &HProfile::new(&zero, conjugate(4.0))).unwrap();
    assert!(p0.extracted.is_empty());
    assert_eq!(p0.residual, tiles);
}

fn workspace(grid: &Grid, tiles: &TileCollection, seed: u64) -> Workspace {
    let mut r = rng(seed);
    let f = random_function(grid, &mut r, 3.0);
    let g = random_function(grid, &mut r, 3.0);
    let h = random_h(grid, tiles.squares(), &mut r, 3.0).unwrap();
    Workspace::new(tiles, &f, &g, Some(&h), 4.0).unwrap()
}

#[test]
fn splitting_of_nothing_and_of_one_tile() {
    let grid = Grid::new(1024, 64.0).unwrap();
    let empty = TileCollection::new();
    let sp = split(&empty, &workspace(&grid, &empty, 1)).unwrap();
    assert_eq!(sp.nonempty_levels().count(), 0);
    assert_eq!(sp.tile_count(), 0);

    let one = TileCollection::from_tiles([unit_tile()]);
    let ws = workspace(&grid, &one, 2);
    let sp = split(&one, &ws).unwrap();
    assert_eq!(sp.nonempty_levels().count(), 1);
    assert_eq!(sp.tile_count(), 1);
    verify_splitting(&one, &sp, &ws).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn splitting_is_an_exact_partition(seed in 0u64..10_000) {
        let grid = Grid::new(1024, 64.0).unwrap();
        let tiles = random_tiles(&grid, seed, 6, (-1, 0), 2.0, Interval::new(-8.0, 16.0)).unwrap();
        let ws = workspace(&grid, &tiles, seed);
        let sp = split(&tiles, &ws).unwrap();
        let mut count: BTreeMap<TriTile, usize> = BTreeMap::new();
        for level in sp.levels.values() {
            for t in level.columns.iter().chain(&level.rows) {
                for s in &t.members {
                    *count.entry(*s).or_default() += 1;
                }
            }
        }
        prop_assert_eq!(count.len(), tiles.len());
        prop_assert!(count.values().all(|&c| c == 1));
        prop_assert!(tiles.iter().all(|t| count.contains_key(t)));
        prop_assert!(verify_splitting(&tiles, &sp, &ws).is_ok());
    }
}
