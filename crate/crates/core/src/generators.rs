//! Seeded generators for square collections, towers, tile collections and
//! test functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{Grid, SampledFunction, SUPPORT_DILATION};
use crate::columns::{Orientation, Tower};
use crate::error::{Error, Result};
use crate::geometry::{
    build_tritile, whitney_cover, Component, DyadicInterval, FrequencySquare, Interval, OpenRegion, SquareCollection,
    TileCollection, TriTile,
};
use crate::operators::SequenceH;
use crate::probe::{counterexample_config, StripOrientation};

pub const PLACEMENT_ATTEMPTS: usize = 10_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OmegaGenerator {
    /// `count` dyadic squares with scales in `[min_scale, max_scale]`
    /// inside the box `[lo, hi)^2`.
    RandomDisjoint { count: usize, min_scale: i32, max_scale: i32, lo: f64, hi: f64 },
    AlignedStrip { n: usize, orientation: StripOrientation },
    WhitneyDisc { radius: f64, n_max: i32 },
}

/// All three tile components of tiles over `sq`, dilated, inside Nyquist.
pub fn check_square_band(grid: &Grid, sq: &FrequencySquare) -> Result<()> {
    let t = build_tritile(DyadicInterval::new(-sq.scale(), 0), *sq)?;
    for c in [Component::First, Component::Second, Component::Third] {
        let w = t.frequency(c).dilate(SUPPORT_DILATION);
        grid.check_band(w.start, w.end(), &format!("square {sq}"))?;
    }
    Ok(())
}

pub fn generate_omega(generator: &OmegaGenerator, seed: u64, grid: &Grid) -> Result<SquareCollection> {
    let omega = match generator {
        OmegaGenerator::RandomDisjoint { count, min_scale, max_scale, lo, hi } => {
            random_disjoint(*count, *min_scale, *max_scale, *lo, *hi, seed)?
        }
        OmegaGenerator::AlignedStrip { n, orientation } => counterexample_config(*n, *orientation, grid)?,
        OmegaGenerator::WhitneyDisc { radius, n_max } => whitney_cover(&OpenRegion::disc(0.0, 0.0, *radius), *n_max)?,
    };
    if !omega.is_pairwise_disjoint() {
        return Err(Error::Precondition("generated squares overlap".into()));
    }
    if !matches!(generator, OmegaGenerator::WhitneyDisc { .. }) {
        for sq in omega.iter() {
            check_square_band(grid, sq)?;
        }
    }
    Ok(omega)
}

fn random_disjoint(count: usize, min_scale: i32, max_scale: i32, lo: f64, hi: f64, seed: u64) -> Result<SquareCollection> {
    if min_scale > max_scale || !(hi > lo) {
        return Err(Error::InvalidArgument("empty scale range or box".into()));
    }
    let mut rng = rng(seed);
    let mut out = SquareCollection::new();
    let mut attempts = 0;
    while out.len() < count {
        if attempts >= PLACEMENT_ATTEMPTS {
            return Err(Error::Placement { requested: count, placed: out.len(), attempts });
        }
        attempts += 1;
        let j = rng.gen_range(min_scale..=max_scale);
        let side = 2f64.powi(j);
        let k_lo = (lo / side).ceil() as i64;
        let k_hi = (hi / side).floor() as i64 - 1;
        if k_hi < k_lo {
            continue;
        }
        let sq = FrequencySquare::from_parts(j, rng.gen_range(k_lo..=k_hi), rng.gen_range(k_lo..=k_hi));
        if out.iter().any(|o| o.intersects(&sq)) {
            continue;
        }
        out.insert(sq)?;
    }
    Ok(out)
}

/// Shape of random columns: the top has spatial scale `top_scale`, members
/// have spatial scales in `[min_scale, top_scale]`, and all frequency
/// intervals lie in `[-half_box, half_box)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TowerParams {
    pub top_scale: i32,
    pub min_scale: i32,
    pub half_box: f64,
    /// Top positions are drawn from `[-top_positions, top_positions)`.
    pub top_positions: i64,
}

impl Default for TowerParams {
    fn default() -> Self {
        Self { top_scale: 3, min_scale: -1, half_box: 2.0, top_positions: 2 }
    }
}

fn random_dyadic_in(rng: &mut ChaCha8Rng, scale: i32, half_box: f64) -> DyadicInterval {
    let side = 2f64.powi(scale);
    let k = (half_box / side).floor() as i64;
    DyadicInterval::new(scale, rng.gen_range(-k..k.max(-k + 1)))
}

/// A random column with the requested number of members when it can be
/// placed; rows are reflected columns.
pub fn random_tower(rng: &mut ChaCha8Rng, orientation: Orientation, size: usize, params: &TowerParams) -> Result<Tower> {
    let jt = params.top_scale;
    let spatial = DyadicInterval::new(jt, rng.gen_range(-params.top_positions..params.top_positions));
    let top_sq = FrequencySquare::from_parts(
        -jt,
        random_dyadic_in(rng, -jt, params.half_box).pos,
        random_dyadic_in(rng, -jt, params.half_box).pos,
    );
    let top = build_tritile(spatial, top_sq)?;
    let mut members: Vec<TriTile> = vec![top];
    let mut attempts = 0;
    while members.len() < size && attempts < PLACEMENT_ATTEMPTS {
        attempts += 1;
        let js = rng.gen_range(params.min_scale..=jt);
        let w1 = top.square.omega1.ancestor(-js);
        let w2 = random_dyadic_in(rng, -js, params.half_box);
        let sq = FrequencySquare::new(w1, w2)?;
        let span = 1i64 << (jt - js);
        let i = DyadicInterval::new(js, spatial.pos * span + rng.gen_range(0..span));
        let s = build_tritile(i, sq)?;
        let clash = members.iter().any(|m| {
            if m.square == s.square {
                m.spatial.intersects(&s.spatial)
            } else {
                m.square.omega2.intersects(&s.square.omega2)
            }
        });
        if !clash {
            members.push(s);
        }
    }
    let column = Tower::new(Orientation::Column, top, members)?;
    Ok(match orientation {
        Orientation::Column => column,
        Orientation::Row => column.reflect(),
    })
}

/// A column with one tile per square whose dilated second frequency
/// intervals are pairwise disjoint, so the second packets are orthonormal.
pub fn separated_column(rng: &mut ChaCha8Rng, size: usize, params: &TowerParams) -> Result<Tower> {
    let jt = params.top_scale;
    let spatial = DyadicInterval::new(jt, rng.gen_range(-params.top_positions..params.top_positions));
    let top_sq = FrequencySquare::from_parts(
        -jt,
        random_dyadic_in(rng, -jt, params.half_box).pos,
        random_dyadic_in(rng, -jt, params.half_box).pos,
    );
    let top = build_tritile(spatial, top_sq)?;
    let mut members = vec![top];
    let mut attempts = 0;
    while members.len() < size && attempts < PLACEMENT_ATTEMPTS {
        attempts += 1;
        let js = rng.gen_range(params.min_scale..=jt);
        let sq = FrequencySquare::new(top.square.omega1.ancestor(-js), random_dyadic_in(rng, -js, params.half_box))?;
        let span = 1i64 << (jt - js);
        let s = build_tritile(DyadicInterval::new(js, spatial.pos * span + rng.gen_range(0..span)), sq)?;
        let w = s.square.omega2.as_interval().dilate(SUPPORT_DILATION);
        let clash = members.iter().any(|m| {
            m.square == s.square || m.square.omega2.as_interval().dilate(SUPPORT_DILATION).overlaps(&w)
        });
        if !clash {
            members.push(s);
        }
    }
    Tower::new(Orientation::Column, top, members)
}

/// Random trigonometric polynomial with frequencies in `[-band, band]`,
/// normalized in `L^2`.
pub fn random_function(grid: &Grid, rng: &mut ChaCha8Rng, band: f64) -> SampledFunction {
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, s) in spec.iter_mut().enumerate() {
        if grid.freq(k).abs() <= band {
            *s = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let f = SampledFunction::from_spectrum(*grid, &spec);
    let n = f.norm_l2();
    if n > 0.0 {
        f.scale(Complex64::new(1.0 / n, 0.0))
    } else {
        f
    }
}

/// Random complex samples, uniform in the unit square.
pub fn random_samples(grid: &Grid, rng: &mut ChaCha8Rng) -> SampledFunction {
    let v = (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    SampledFunction::new(*grid, v).expect("length matches")
}

/// One random band-limited `h_omega` per square.
pub fn random_h(grid: &Grid, squares: impl IntoIterator<Item = FrequencySquare>, rng: &mut ChaCha8Rng, band: f64) -> Result<SequenceH> {
    let mut h = SequenceH::new(*grid);
    for sq in squares {
        h.insert(sq, random_function(grid, rng, band))?;
    }
    Ok(h)
}

/// Random tile collection: random disjoint squares, one tile per square and
/// dyadic interval meeting the window.
pub fn random_tiles(grid: &Grid, seed: u64, count: usize, scales: (i32, i32), half_box: f64, window: Interval) -> Result<TileCollection> {
    let omega = generate_omega(
        &OmegaGenerator::RandomDisjoint { count, min_scale: scales.0, max_scale: scales.1, lo: -half_box, hi: half_box },
        seed,
        grid,
    )?;
    Ok(TileCollection::from_squares(&omega, window))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_is_empty() {
        let g = Grid::new(1024, 64.0).unwrap();
        let gen = OmegaGenerator::RandomDisjoint { count: 0, min_scale: -1, max_scale: 0, lo: -2.0, hi: 2.0 };
        assert!(generate_omega(&gen, 1, &g).unwrap().is_empty());
    }

    #[test]
    fn random_disjoint_is_deterministic() {
        let g = Grid::new(4096, 64.0).unwrap();
        let gen = OmegaGenerator::RandomDisjoint { count: 32, min_scale: -2, max_scale: 0, lo: -4.0, hi: 4.0 };
        let a = generate_omega(&gen, 1, &g).unwrap();
        let b = generate_omega(&gen, 1, &g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 32);
        assert!(a.is_pairwise_disjoint());
    }

    #[test]
    fn overfull_box_fails_explicitly() {
        let g = Grid::new(4096, 64.0).unwrap();
        let gen = OmegaGenerator::RandomDisjoint { count: 5, min_scale: 0, max_scale: 0, lo: 0.0, hi: 2.0 };
        assert!(matches!(generate_omega(&gen, 3, &g), Err(Error::Placement { requested: 5, placed: 4, .. })));
    }

    #[test]
    fn random_towers_check() {
        let mut r = rng(5);
        for size in [1, 8, 32, 64] {
            for o in [Orientation::Column, Orientation::Row] {
                let t = random_tower(&mut r, o, size, &TowerParams::default()).unwrap();
                t.check().unwrap();
                assert!(t.len() <= size);
            }
        }
    }
}
