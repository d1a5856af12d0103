use std::collections::BTreeMap;

use proptest::prelude::*;
use tfa_core::analysis::{cutoff, Grid, SampledFunction};
use tfa_core::bochner::{
    build_symbol, fit_slope, lr_domination, phi_weight, shell_factor_from_counts, shell_series, tensor_bump, DIMENSION,
};
use tfa_core::generators::{random_function, rng};
use tfa_core::geometry::{whitney_cover, OpenRegion, SquareCollection};

#[test]
fn phi_doubling_ratio() {
    for r in [3.0, 4.0, 6.0] {
        let rp = r / (r - 1.0);
        let eps = 0.25;
        let mut last = f64::INFINITY;
        for t in [2.0, 10.0, 1e3, 1e6, 1e12] {
            let q = phi_weight(2.0 * t, r, eps, 1).unwrap() / phi_weight(t, r, eps, 1).unwrap();
            let expect = 2f64.powf(1.0 / rp) * ((1.0 + f64::ln(t)) / (1.0 + f64::ln(2.0 * t))).powf(1.0 / rp + eps);
            assert!((q - expect).abs() < 1e-12 * expect);
            // the log factor pushes the ratio up toward 2^{1/r'}
            let gap = 2f64.powf(1.0 / rp) - q;
            assert!(gap > 0.0 && gap < last);
            last = gap;
        }
    }
}

fn disc(n_max: i32) -> (OpenRegion, SquareCollection) {
    let region = OpenRegion::disc(0.0, 0.0, 1.0);
    let cover = whitney_cover(&region, n_max).unwrap();
    (region, cover)
}

#[test]
fn symbol_is_the_sum_of_its_pieces() {
    let (region, cover) = disc(4);
    let sym = build_symbol(&region, &cover, 4.0, 0.25, DIMENSION).unwrap();
    let mut r = rng(3);
    use rand::Rng;
    for _ in 0..200 {
        let (xi, eta) = (r.gen_range(-1.2..1.2), r.gen_range(-1.2..1.2));
        let direct: f64 = sym
            .pieces
            .iter()
            .map(|p| p.coefficient * cutoff(&p.square.omega1.as_interval(), xi) * cutoff(&p.square.omega2.as_interval(), eta))
            .sum();
        assert!((sym.eval(xi, eta) - direct).abs() < 1e-14);
        for (i, p) in sym.pieces.iter().enumerate() {
            assert_eq!(sym.piece_value(i, xi, eta), p.coefficient * tensor_bump(&p.square, xi, eta));
            if sym.piece_value(i, xi, eta) != 0.0 {
                assert!(sym.in_support(i, xi, eta));
            }
        }
    }
    // outside the dilated disc the symbol vanishes
    assert_eq!(sym.eval(1.5, 1.5), 0.0);
}

#[test]
fn one_piece_domination_is_an_equality() {
    let (region, cover) = disc(3);
    let one = SquareCollection::from_squares([*cover.iter().next().unwrap()]).unwrap();
    let sym = build_symbol(&region, &one, 4.0, 0.25, DIMENSION).unwrap();
    let grid = Grid::new(512, 128.0).unwrap();
    let mut r = rng(8);
    let f = random_function(&grid, &mut r, 1.5);
    let g = random_function(&grid, &mut r, 1.5);
    let d = lr_domination(&f, &g, &sym, 4.0).unwrap();
    assert!((d.factor - sym.pieces[0].coefficient).abs() < 1e-15);
    for (a, b) in d.lhs.values.iter().zip(&d.rhs.values) {
        assert!((a.re - b.re).abs() <= 1e-12 * b.re.max(1e-300));
    }

    let zero = SampledFunction::zeros(grid);
    let d0 = lr_domination(&zero, &g, &sym, 4.0).unwrap();
    assert!(d0.lhs.values.iter().chain(&d0.rhs.values).all(|v| v.norm() == 0.0));
}

#[test]
fn geometric_shells_have_an_exact_tail() {
    // #Omega_n = 2^n makes every term n^{-s}
    let counts: BTreeMap<i32, usize> = (1..=10).map(|n| (n, 1usize << n)).collect();
    let (r, eps) = (4.0, 1.0);
    let s = 1.0 + eps * r / (r - 1.0);
    let ser = shell_series(&counts, r, eps, 1, 10).unwrap();
    assert!((ser.count_constant - 1.0).abs() < 1e-15);
    let head: f64 = (1..=10).map(|n| (n as f64).powf(-s)).sum();
    assert!((ser.partial_sums.last().unwrap().1 - head).abs() < 1e-13);
    // Euler-Maclaurin from N = 10_000 on
    let big = 10_000.0f64;
    let tail: f64 = (11..10_000).map(|n| (n as f64).powf(-s)).sum::<f64>()
        + big.powf(1.0 - s) / (s - 1.0)
        + 0.5 * big.powf(-s)
        + s / 12.0 * big.powf(-s - 1.0);
    assert!((ser.tail - tail).abs() < 1e-9 * tail, "{} vs {}", ser.tail, tail);
    assert!(ser.tail_fraction() < 0.1);
}

#[test]
fn disc_shell_counts_grow_like_two_to_the_n() {
    let (region, cover) = disc(7);
    let sym = build_symbol(&region, &cover, 4.0, 0.25, DIMENSION).unwrap();
    let counts = sym.shell_counts();
    let pts: Vec<(f64, f64)> = (2..=6).map(|n| (n as f64, (counts[&n] as f64).log2())).collect();
    let slope = fit_slope(&pts).unwrap();
    assert!((0.8..=1.2).contains(&slope), "slope {slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn shell_factor_decreases_in_eps(a in 0.05f64..2.0, b in 0.05f64..2.0, c1 in 1usize..50, c2 in 1usize..50, c3 in 1usize..50) {
        let counts = BTreeMap::from([(1, c1), (2, c2), (4, c3)]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let f_lo = shell_factor_from_counts(&counts, 4.0, lo, 1).unwrap();
        let f_hi = shell_factor_from_counts(&counts, 4.0, hi, 1).unwrap();
        prop_assert!(f_hi <= f_lo * (1.0 + 1e-15));
    }

    #[test]
    fn disc_symbol_is_dominated(seed in 0u64..10_000) {
        let (region, cover) = disc(4);
        let sym = build_symbol(&region, &cover, 4.0, 0.25, DIMENSION).unwrap();
        let grid = Grid::new(512, 128.0).unwrap();
        let mut r = rng(seed);
        let f = random_function(&grid, &mut r, 1.5);
        let g = random_function(&grid, &mut r, 1.5);
        let d = lr_domination(&f, &g, &sym, 4.0);
        prop_assert!(d.is_ok(), "{:?}", d.err());
        prop_assert!(d.unwrap().worst_excess() <= 1e-8);
    }
}
