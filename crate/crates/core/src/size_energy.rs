//! Sizes, greedy energy lower bounds and the averaged majorants.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{chi_tilde_grid, lp_norm, SampledFunction, CHI_EXPONENT};
use crate::columns::{maximal_tower, mutually_disjoint, HProfile, Orientation, Tower};
use crate::error::Result;
use crate::geometry::{DyadicInterval, TileCollection, TriTile};
use crate::operators::{Pairings, SequenceH};

/// Number of dyadic levels scanned below a size.
pub const ENERGY_LEVELS: i32 = 21;

/// Which of the first two functions a size or energy refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Slot {
    F,
    G,
}

impl Slot {
    pub fn orientation(self) -> Orientation {
        match self {
            Slot::F => Orientation::Column,
            Slot::G => Orientation::Row,
        }
    }
}

/// `|<f, phi_{s_1}>| / |I_s|^{1/2}` or the `g` analogue.
pub fn tile_value(pairings: &Pairings, t: &TriTile, slot: Slot) -> f64 {
    let p = pairings.get(t);
    let v = match slot {
        Slot::F => p.f,
        Slot::G => p.g,
    };
    v.norm() / t.spatial_len().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SizeWitness {
    Tile(TriTile),
    Tower(Orientation, TriTile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeReport {
    pub value: f64,
    pub witness: Option<SizeWitness>,
}

impl SizeReport {
    fn zero() -> Self {
        Self { value: 0.0, witness: None }
    }
}

/// First maximum in iteration order.
fn argmax<T: Clone>(items: impl IntoIterator<Item = (T, f64)>) -> Option<(T, f64)> {
    let mut best: Option<(T, f64)> = None;
    for (t, v) in items {
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((t, v));
        }
    }
    best
}

pub fn size_fg(tiles: &TileCollection, pairings: &Pairings, slot: Slot) -> SizeReport {
    match argmax(tiles.iter().map(|t| (*t, tile_value(pairings, t, slot)))) {
        Some((t, v)) => SizeReport { value: v, witness: Some(SizeWitness::Tile(t)) },
        None => SizeReport::zero(),
    }
}

pub fn size_f(tiles: &TileCollection, pairings: &Pairings) -> SizeReport {
    size_fg(tiles, pairings, Slot::F)
}

pub fn size_g(tiles: &TileCollection, pairings: &Pairings) -> SizeReport {
    size_fg(tiles, pairings, Slot::G)
}

/// Sup over maximal columns and rows with tops among the tiles.
pub fn size_h(tiles: &TileCollection, profile: &HProfile) -> Result<SizeReport> {
    let candidates: Vec<(Orientation, TriTile)> = [Orientation::Column, Orientation::Row]
        .iter()
        .flat_map(|o| tiles.iter().map(move |t| (*o, *t)))
        .collect();
    let values = candidates
        .par_iter()
        .map(|(o, t)| profile.tower_value(&maximal_tower(tiles, t, *o)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(match argmax(candidates.into_iter().zip(values)) {
        Some(((o, t), v)) => SizeReport { value: v, witness: Some(SizeWitness::Tower(o, t)) },
        None => SizeReport::zero(),
    })
}

/// Re-evaluates a size witness.
pub fn size_witness_value(
    tiles: &TileCollection,
    pairings: &Pairings,
    profile: Option<&HProfile>,
    witness: &SizeWitness,
    slot: Option<Slot>,
) -> Result<f64> {
    match witness {
        SizeWitness::Tile(t) => Ok(tile_value(pairings, t, slot.unwrap_or(Slot::F))),
        SizeWitness::Tower(o, t) => {
            let p = profile.ok_or_else(|| crate::Error::InvalidArgument("tower witness needs an h profile".into()))?;
            p.tower_value(&maximal_tower(tiles, t, *o))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub value: f64,
    pub witness_n: Option<i32>,
    pub family: Vec<Tower>,
}

impl EnergyReport {
    fn zero() -> Self {
        Self { value: 0.0, witness_n: None, family: Vec::new() }
    }
}

fn top_levels(size: f64) -> Vec<i32> {
    if !(size > 0.0) {
        return Vec::new();
    }
    let top = size.log2().floor() as i32;
    (0..ENERGY_LEVELS).map(|i| top - i).collect()
}

fn sum_measure(family: &[Tower]) -> f64 {
    let mut m: Vec<f64> = family.iter().map(|t| t.measure()).collect();
    m.sort_by(f64::total_cmp);
    m.iter().sum()
}

fn rect_overlaps(chosen: &[(DyadicInterval, DyadicInterval)], rect: (DyadicInterval, DyadicInterval)) -> bool {
    chosen.iter().any(|(i, w)| i.intersects(&rect.0) && w.intersects(&rect.1))
}

/// Greedy family at level `n` for `f` (columns) or `g` (rows).
pub fn greedy_fg_family(tiles: &TileCollection, pairings: &Pairings, slot: Slot, n: i32) -> Vec<Tower> {
    let lo = 2f64.powi(n);
    let hi = 2f64.powi(n + 1);
    let orientation = slot.orientation();
    let values: BTreeMap<TriTile, f64> = tiles.iter().map(|t| (*t, tile_value(pairings, t, slot))).collect();
    let mut remaining: BTreeSet<TriTile> = tiles.iter().copied().collect();
    let mut family = Vec::new();
    let mut rects = Vec::new();
    for t in tiles {
        let v = values[t];
        if !remaining.contains(t) || v < lo || v > hi {
            continue;
        }
        let candidate = Tower { orientation, top: *t, members: Vec::new() };
        if rect_overlaps(&rects, candidate.top_rectangle()) {
            continue;
        }
        let pool = TileCollection::from_tiles(remaining.iter().copied().filter(|s| values[s] <= hi));
        let tower = maximal_tower(&pool, t, orientation);
        for s in &tower.members {
            remaining.remove(s);
        }
        rects.push(tower.top_rectangle());
        family.push(tower);
    }
    family
}

pub fn energy_fg(tiles: &TileCollection, pairings: &Pairings, slot: Slot) -> EnergyReport {
    let size = size_fg(tiles, pairings, slot).value;
    let levels = top_levels(size);
    let results: Vec<(i32, Vec<Tower>)> =
        levels.par_iter().map(|&n| (n, greedy_fg_family(tiles, pairings, slot, n))).collect();
    let mut best = EnergyReport::zero();
    for (n, family) in results {
        let v = 2f64.powi(n) * sum_measure(&family).sqrt();
        if v > best.value {
            best = EnergyReport { value: v, witness_n: Some(n), family };
        }
    }
    best
}

pub fn energy_f(tiles: &TileCollection, pairings: &Pairings) -> EnergyReport {
    energy_fg(tiles, pairings, Slot::F)
}

pub fn energy_g(tiles: &TileCollection, pairings: &Pairings) -> EnergyReport {
    energy_fg(tiles, pairings, Slot::G)
}

/// Greedy columns, then rows from the leftover tiles, each with h-value at
/// least `2^n`.
pub fn greedy_h_family(tiles: &TileCollection, profile: &HProfile, n: i32) -> Result<Vec<Tower>> {
    let lo = 2f64.powi(n);
    let mut remaining: BTreeSet<TriTile> = tiles.iter().copied().collect();
    let mut family = Vec::new();
    for orientation in [Orientation::Column, Orientation::Row] {
        let mut rects = Vec::new();
        for t in tiles {
            if !remaining.contains(t) {
                continue;
            }
            let probe = Tower { orientation, top: *t, members: Vec::new() };
            if rect_overlaps(&rects, probe.top_rectangle()) {
                continue;
            }
            let pool = TileCollection::from_tiles(remaining.iter().copied());
            let tower = maximal_tower(&pool, t, orientation);
            if profile.tower_value(&tower)? < lo {
                continue;
            }
            for s in &tower.members {
                remaining.remove(s);
            }
            rects.push(tower.top_rectangle());
            family.push(tower);
        }
    }
    Ok(family)
}

/// Sum variant: `2^n (sum_T |I_T|)^{1/r'}`.
pub fn energy_h(tiles: &TileCollection, profile: &HProfile) -> Result<EnergyReport> {
    let size = size_h(tiles, profile)?.value;
    let levels = top_levels(size);
    let results = levels
        .par_iter()
        .map(|&n| Ok((n, greedy_h_family(tiles, profile, n)?)))
        .collect::<Result<Vec<(i32, Vec<Tower>)>>>()?;
    let mut best = EnergyReport::zero();
    for (n, family) in results {
        let v = 2f64.powi(n) * sum_measure(&family).powf(1.0 / profile.r_prime());
        if v > best.value {
            best = EnergyReport { value: v, witness_n: Some(n), family };
        }
    }
    Ok(best)
}

fn check_family_shape(tiles: &TileCollection, family: &[Tower]) -> std::result::Result<(), String> {
    for t in family {
        if t.is_empty() {
            return Err(format!("empty tower with top {}", t.top));
        }
        t.check().map_err(|e| e.to_string())?;
        if let Some(s) = t.members.iter().find(|s| !tiles.contains(s)) {
            return Err(format!("member {s} not in the collection"));
        }
    }
    let columns: Vec<Tower> = family.iter().filter(|t| t.orientation == Orientation::Column).cloned().collect();
    let rows: Vec<Tower> = family.iter().filter(|t| t.orientation == Orientation::Row).cloned().collect();
    if !mutually_disjoint(&columns) || !mutually_disjoint(&rows) {
        return Err("towers are not mutually disjoint".into());
    }
    let mut all = BTreeSet::new();
    for t in family {
        for s in &t.members {
            if !all.insert(*s) {
                return Err(format!("tile {s} used twice"));
            }
        }
    }
    Ok(())
}

/// Independent admissibility check of an `f`/`g` energy witness.
pub fn verify_fg_witness(
    tiles: &TileCollection,
    pairings: &Pairings,
    slot: Slot,
    report: &EnergyReport,
) -> std::result::Result<(), String> {
    let Some(n) = report.witness_n else {
        return if report.value == 0.0 && report.family.is_empty() { Ok(()) } else { Err("value without witness".into()) };
    };
    check_family_shape(tiles, &report.family)?;
    let (lo, hi) = (2f64.powi(n), 2f64.powi(n + 1));
    for t in &report.family {
        if t.orientation != slot.orientation() {
            return Err("wrong orientation".into());
        }
        let p = pairings.get(&t.top);
        let top = match slot {
            Slot::F => p.f,
            Slot::G => p.g,
        }
        .norm()
            / t.measure().sqrt();
        if top < lo {
            return Err(format!("top {} below 2^{n}: {top}", t.top));
        }
        for s in &t.members {
            let v = tile_value(pairings, s, slot);
            if v > hi {
                return Err(format!("member {s} above 2^{}: {v}", n + 1));
            }
        }
    }
    let m: f64 = report.family.iter().map(|t| t.measure()).sum();
    let v = lo * m.sqrt();
    if (v - report.value).abs() > 1e-12 * v.max(1.0) {
        return Err(format!("value {v} does not reproduce {}", report.value));
    }
    Ok(())
}

pub fn verify_h_witness(tiles: &TileCollection, profile: &HProfile, report: &EnergyReport) -> std::result::Result<(), String> {
    let Some(n) = report.witness_n else {
        return if report.value == 0.0 && report.family.is_empty() { Ok(()) } else { Err("value without witness".into()) };
    };
    check_family_shape(tiles, &report.family)?;
    let lo = 2f64.powi(n);
    for t in &report.family {
        let v = profile.tower_value(t).map_err(|e| e.to_string())?;
        if v < lo {
            return Err(format!("tower with top {} has value {v} < 2^{n}", t.top));
        }
    }
    let m: f64 = report.family.iter().map(|t| t.measure()).sum();
    let v = lo * m.powf(1.0 / profile.r_prime());
    if (v - report.value).abs() > 1e-12 * v.max(1.0) {
        return Err(format!("value {v} does not reproduce {}", report.value));
    }
    Ok(())
}

fn distinct_intervals(tiles: &TileCollection) -> Vec<DyadicInterval> {
    tiles.iter().map(|t| t.spatial).collect::<BTreeSet<_>>().into_iter().collect()
}

/// `sup_s |I_s|^{-1} int |f| chi_{I_s}^{20}`.
pub fn size_upper_bound_f(tiles: &TileCollection, f: &SampledFunction) -> f64 {
    let abs = f.abs();
    distinct_intervals(tiles)
        .par_iter()
        .map(|i| {
            let w = chi_tilde_grid(&f.grid, &i.as_interval(), CHI_EXPONENT);
            abs.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() * f.grid.spacing() / i.len()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// `sup_t (|I_t|^{-1} int (sum_omega |h_omega|^{r'}) chi_{I_t}^{20 r'})^{1/r'}`.
pub fn size_upper_bound_h(tiles: &TileCollection, h: &SequenceH, r_prime: f64) -> f64 {
    let agg = h.aggregate(r_prime);
    distinct_intervals(tiles)
        .par_iter()
        .map(|i| {
            let w = chi_tilde_grid(&h.grid, &i.as_interval(), CHI_EXPONENT * r_prime);
            let s = agg.iter().zip(&w).map(|(a, b)| a.powf(r_prime) * b).sum::<f64>() * h.grid.spacing();
            (s / i.len()).powf(1.0 / r_prime)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// `S(I_0) = {s : I_s ⊆ I_0}`.
pub fn restrict(tiles: &TileCollection, i0: &DyadicInterval) -> TileCollection {
    tiles.spatially_within(i0)
}

/// `|| (sum |h_omega|^{r'})^{1/r'} ||_{r'}`.
pub fn h_norm(h: &SequenceH, r_prime: f64) -> f64 {
    lp_norm(&h.grid, &h.aggregate(r_prime), r_prime)
}

/// `|| f chi_{I_0} ||_2` with the base exponent 10.
pub fn localized_norm_f(f: &SampledFunction, i0: &DyadicInterval) -> f64 {
    let w = chi_tilde_grid(&f.grid, &i0.as_interval(), 10.0);
    let v: Vec<f64> = f.abs().iter().zip(&w).map(|(a, b)| a * b).collect();
    lp_norm(&f.grid, &v, 2.0)
}

/// `|| (sum |h_omega|^{r'})^{1/r'} chi_{I_0}^{20} ||_{r'}`.
pub fn localized_norm_h(h: &SequenceH, r_prime: f64, i0: &DyadicInterval) -> f64 {
    let w = chi_tilde_grid(&h.grid, &i0.as_interval(), CHI_EXPONENT);
    let v: Vec<f64> = h.aggregate(r_prime).iter().zip(&w).map(|(a, b)| a * b).collect();
    lp_norm(&h.grid, &v, r_prime)
}
