//! Restricted-type probes: exceptional sets, distance strata, the interval
//! selection stopping time and the strip counterexample.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{cells_in, chi_tilde_grid, maximal_of_abs, Grid, SampledFunction};
use crate::error::{Error, Result};
use crate::geometry::{DyadicInterval, FrequencySquare, Interval, SquareCollection, TileCollection, TriTile};
use crate::operators::{conjugate, model_pieces, ExponentTuple, Pairings, SequenceH};

/// A union of grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    pub grid: Grid,
    pub cells: Vec<bool>,
}

impl GridSet {
    pub fn empty(grid: Grid) -> Self {
        Self { grid, cells: vec![false; grid.len()] }
    }

    pub fn full(grid: Grid) -> Self {
        Self { grid, cells: vec![true; grid.len()] }
    }

    /// Cells whose sample point lies in one of the half-open intervals.
    pub fn from_intervals(grid: Grid, intervals: &[Interval]) -> Self {
        let cells = grid.points().iter().map(|&x| intervals.iter().any(|i| i.contains(x))).collect();
        Self { grid, cells }
    }

    pub fn measure(&self) -> f64 {
        self.cells.iter().filter(|&&b| b).count() as f64 * self.grid.spacing()
    }

    pub fn indicator(&self) -> Vec<f64> {
        self.cells.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.cells[i]
    }

    pub fn union(&self, other: &GridSet) -> GridSet {
        GridSet { grid: self.grid, cells: self.cells.iter().zip(&other.cells).map(|(a, b)| *a || *b).collect() }
    }

    pub fn minus(&self, other: &GridSet) -> GridSet {
        GridSet { grid: self.grid, cells: self.cells.iter().zip(&other.cells).map(|(a, b)| *a && !*b).collect() }
    }

    pub fn is_subset_of(&self, other: &GridSet) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| !*a || *b)
    }
}

/// `{M 1_F > C|F|} ∪ {M 1_G > C|G|}` for a fixed `C`.
pub fn superlevel_union(f_set: &GridSet, g_set: &GridSet, c: f64) -> GridSet {
    let level = |s: &GridSet| {
        let m = maximal_of_abs(&s.indicator());
        let t = c * s.measure();
        GridSet { grid: s.grid, cells: m.iter().map(|v| *v > t).collect() }
    };
    level(f_set).union(&level(g_set))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalSet {
    pub set: GridSet,
    /// Constant actually used after escalation.
    pub c: f64,
}

/// Exceptional set, doubling `C` from `c0` until its measure drops below 1/2.
pub fn exceptional_set(f_set: &GridSet, g_set: &GridSet, c0: f64) -> Result<ExceptionalSet> {
    if !(f_set.measure() > 0.0 && g_set.measure() > 0.0) {
        return Err(Error::Precondition("exceptional set needs |F|, |G| > 0".into()));
    }
    if !(c0 > 0.0) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c0}")));
    }
    let mut c = c0;
    for _ in 0..256 {
        let set = superlevel_union(f_set, g_set, c);
        if set.measure() < 0.5 {
            return Ok(ExceptionalSet { set, c });
        }
        c *= 2.0;
    }
    Err(Error::Precondition("exceptional set did not shrink below 1/2".into()))
}

/// `dist(I, E^c)` over the complement's sample points, periodically.
fn dist_to_complement(interval: &Interval, e: &GridSet, complement: &[usize]) -> Option<f64> {
    complement.iter().map(|&i| e.grid.periodic_dist(interval, e.grid.x(i))).min_by(f64::total_cmp)
}

/// `d` with `2^d <= 1 + dist(I_s, E^c)/|I_s| < 2^{d+1}`.
pub fn stratify(tiles: &TileCollection, e: &GridSet) -> Result<BTreeMap<u32, TileCollection>> {
    let complement: Vec<usize> = (0..e.grid.len()).filter(|&i| !e.contains(i)).collect();
    let intervals: BTreeSet<DyadicInterval> = tiles.iter().map(|t| t.spatial).collect();
    let mut level = HashMap::new();
    for i in intervals {
        let d = dist_to_complement(&i.as_interval(), e, &complement)
            .ok_or_else(|| Error::Precondition("exceptional set covers the whole period".into()))?;
        level.insert(i, (1.0 + d / i.len()).log2().floor() as u32);
    }
    let mut out: BTreeMap<u32, Vec<TriTile>> = BTreeMap::new();
    for t in tiles {
        out.entry(level[&t.spatial]).or_default().push(*t);
    }
    Ok(out.into_iter().map(|(d, v)| (d, TileCollection::from_tiles(v))).collect())
}

/// Which indicator drives an interval selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SelectionWeight {
    FAvg,
    GAvg,
    HAvg,
}

/// Stopping-time output: for each `n` the selected intervals and the tiles
/// assigned to them.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub levels: BTreeMap<i32, Vec<(DyadicInterval, TileCollection)>>,
    /// Decay exponent of the averaging weight.
    pub exponent: f64,
    /// Level collecting tiles whose averages vanish.
    pub floor: i32,
}

/// Lowest band reachable; averages at or below `2^{-SELECTION_FLOOR}` land
/// in the floor bucket.
pub const SELECTION_FLOOR: i32 = 60;

/// `|I|^{-1} int 1_X chi_I^{e}`.
pub fn weighted_average(x: &GridSet, interval: &DyadicInterval, exponent: f64) -> f64 {
    let w = chi_tilde_grid(&x.grid, &interval.as_interval(), exponent);
    let s: f64 = x.cells.iter().zip(&w).filter(|(b, _)| **b).map(|(_, v)| v).sum();
    s * x.grid.spacing() / interval.len()
}

/// `n` with `2^{-n-1} < a <= 2^{-n}`, clamped to the floor.
fn band(a: f64) -> i32 {
    if !(a > 2f64.powi(-SELECTION_FLOOR)) {
        return SELECTION_FLOOR;
    }
    ((-a.log2()).floor() as i32).min(SELECTION_FLOOR)
}

/// Exponent of the averaging weight for each selection: `chi_tilde` for
/// `f` and `g`, `chi_tilde^{M r'}` for `h`.
pub fn selection_exponent(weight: SelectionWeight, r_prime: f64) -> f64 {
    match weight {
        SelectionWeight::FAvg | SelectionWeight::GAvg => 10.0,
        SelectionWeight::HAvg => crate::analysis::CHI_EXPONENT * r_prime,
    }
}

/// Maximal dyadic intervals of `I^+(S)` whose average falls in the band of
/// the current `n`, largest first, each swallowing the available tiles
/// beneath it.
pub fn select_intervals(tiles: &TileCollection, x: &GridSet, exponent: f64) -> Selection {
    let top_scale = (x.grid.period().log2().floor() as i32) - 1;
    let mut candidates: BTreeSet<DyadicInterval> = BTreeSet::new();
    for t in tiles {
        let mut i = t.spatial;
        candidates.insert(i);
        while i.scale < top_scale {
            i = i.parent();
            candidates.insert(i);
        }
    }
    let avg: HashMap<DyadicInterval, f64> = {
        use rayon::prelude::*;
        let v: Vec<DyadicInterval> = candidates.iter().copied().collect();
        v.par_iter().map(|i| (*i, weighted_average(x, i, exponent))).collect()
    };
    let mut levels: BTreeMap<i32, Vec<(DyadicInterval, TileCollection)>> = BTreeMap::new();
    let mut available: BTreeSet<TriTile> = tiles.iter().copied().collect();
    let start = avg.values().map(|a| band(*a)).min().unwrap_or(SELECTION_FLOOR);
    for n in start..=SELECTION_FLOOR {
        if available.is_empty() {
            break;
        }
        // I^+ of the available tiles, largest first then leftmost
        let mut live: Vec<DyadicInterval> = candidates
            .iter()
            .copied()
            .filter(|i| band(avg[i]) == n && available.iter().any(|t| t.spatial.is_within(i)))
            .collect();
        live.sort_by_key(|i| (-i.scale, i.pos));
        for i0 in live {
            let taken: Vec<TriTile> = available.iter().copied().filter(|t| t.spatial.is_within(&i0)).collect();
            if taken.is_empty() {
                continue;
            }
            for t in &taken {
                available.remove(t);
            }
            levels.entry(n).or_default().push((i0, TileCollection::from_tiles(taken)));
        }
    }
    Selection { levels, exponent, floor: SELECTION_FLOOR }
}

/// Re-verifies a selection: exact partition, disjointness per level, the
/// two residual-average bounds and the superlevel containment with `c`.
pub fn verify_selection(tiles: &TileCollection, x: &GridSet, sel: &Selection, c: f64) -> std::result::Result<(), String> {
    let mut seen = BTreeSet::new();
    let m = maximal_of_abs(&x.indicator());
    for (&n, chosen) in &sel.levels {
        for (a, (ia, _)) in chosen.iter().enumerate() {
            for (ib, _) in &chosen[a + 1..] {
                if ia.intersects(ib) {
                    return Err(format!("level {n}: {ia} and {ib} intersect"));
                }
            }
        }
        let cap = 2f64.powi(-n) * (1.0 + 1e-12);
        for (i0, members) in chosen {
            for t in members {
                if !seen.insert(*t) || !tiles.contains(t) || !t.spatial.is_within(i0) {
                    return Err(format!("tile {t} misplaced under {i0}"));
                }
                if n == sel.floor {
                    continue;
                }
                let mut j = t.spatial;
                loop {
                    let a = weighted_average(x, &j, sel.exponent);
                    if a > cap {
                        return Err(format!("average {a} over {j} above 2^-{n}"));
                    }
                    if j == *i0 {
                        break;
                    }
                    j = j.parent();
                }
            }
            if n == sel.floor {
                continue;
            }
            let level = c * 2f64.powi(-n);
            if let Some(&i) = cells_in(&x.grid, i0).iter().find(|&&i| m[i] < level) {
                return Err(format!("{i0} at level {n} leaves the superlevel set at x = {}", x.grid.x(i)));
            }
        }
    }
    if seen.len() != tiles.len() {
        return Err(format!("selection holds {} tiles, input has {}", seen.len(), tiles.len()));
    }
    Ok(())
}

/// How the probe builds `h` from the model pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HConstruction {
    /// Pointwise `l^r`-dual weights `|B_omega|^{r-1}`, phase aligned.
    Extremal,
    /// Constant weights `|Omega|^{-1/r'}`, phase aligned.
    Uniform,
}

/// Sets, functions and the major subset for one probe run.
#[derive(Debug, Clone)]
pub struct RestrictedTriple {
    pub f_set: GridSet,
    pub g_set: GridSet,
    pub h_set: GridSet,
    pub exceptional: ExceptionalSet,
    pub h_prime: GridSet,
    pub f: SampledFunction,
    pub g: SampledFunction,
    pub h: SequenceH,
}

/// `h_omega = 1_{H'} w_omega B_omega / |B_omega|` with `sum w^{r'} = 1`.
fn build_h(
    pieces: &[(FrequencySquare, SampledFunction)],
    h_prime: &GridSet,
    r: f64,
    construction: HConstruction,
) -> Result<SequenceH> {
    let grid = h_prime.grid;
    let n = grid.len();
    let mut total = vec![0.0; n];
    for (_, b) in pieces {
        for (t, v) in total.iter_mut().zip(&b.values) {
            *t += v.norm().powf(r);
        }
    }
    let uniform = (pieces.len().max(1) as f64).powf(-1.0 / conjugate(r));
    let mut h = SequenceH::new(grid);
    for (sq, b) in pieces {
        let values = (0..n)
            .map(|i| {
                let v = b.values[i];
                let a = v.norm();
                if !h_prime.contains(i) || a == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let w = match construction {
                    HConstruction::Extremal => a.powf(r - 1.0) / total[i].powf((r - 1.0) / r),
                    HConstruction::Uniform => uniform,
                };
                v / a * w
            })
            .collect();
        h.insert(*sq, SampledFunction::new(grid, values)?)?;
    }
    Ok(h)
}

impl RestrictedTriple {
    /// Builds the exceptional set, `H' = H \ E` and the probe's `h`.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        tiles: &TileCollection,
        f_set: GridSet,
        g_set: GridSet,
        h_set: GridSet,
        f: SampledFunction,
        g: SampledFunction,
        r: f64,
        c0: f64,
        construction: HConstruction,
    ) -> Result<Self> {
        for (name, s) in [("F", &f_set), ("G", &g_set), ("H", &h_set)] {
            if !(s.measure() > 0.0) {
                return Err(Error::Precondition(format!("{name} has measure zero")));
            }
        }
        if (h_set.measure() - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("|H| must be 1, got {}", h_set.measure())));
        }
        let exceptional = exceptional_set(&f_set, &g_set, c0)?;
        let h_prime = h_set.minus(&exceptional.set);
        let pieces = model_pieces(&f, &g, tiles)?;
        let h = build_h(&pieces, &h_prime, r, construction)?;
        let t = Self { f_set, g_set, h_set, exceptional, h_prime, f, g, h };
        t.check(r)?;
        Ok(t)
    }

    /// Pointwise domination of `f`, `g` and `h`, and the majority of `H'`.
    pub fn check(&self, r: f64) -> Result<()> {
        let tol = 1e-12;
        for (name, fun, set) in [("f", &self.f, &self.f_set), ("g", &self.g, &self.g_set)] {
            for (i, v) in fun.values.iter().enumerate() {
                let bound = if set.contains(i) { 1.0 } else { 0.0 };
                if v.norm() > bound + tol {
                    return Err(Error::Precondition(format!("|{name}| exceeds its indicator at x = {}", fun.grid.x(i))));
                }
            }
        }
        let rp = conjugate(r);
        let agg = self.h.aggregate(rp);
        for (i, a) in agg.iter().enumerate() {
            let bound = if self.h_prime.contains(i) { 1.0 } else { 0.0 };
            if *a > bound + tol {
                return Err(Error::Precondition(format!("h exceeds 1_H' at x = {}", self.h.grid.x(i))));
            }
        }
        if !self.h_prime.is_subset_of(&self.h_set) || !(self.h_prime.measure() > 0.5 * self.h_set.measure()) {
            return Err(Error::Precondition(format!(
                "H' is not a major subset: |H'| = {}, |H| = {}",
                self.h_prime.measure(),
                self.h_set.measure()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetMeasures {
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub h_prime: f64,
    pub exceptional: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumValue {
    pub d: u32,
    pub tiles: usize,
    pub lambda_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectionStats {
    pub tiles: usize,
    pub squares: usize,
    pub min_scale: Option<i32>,
    pub max_scale: Option<i32>,
}

/// One probe run, serialized as a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub schema: u32,
    pub label: String,
    pub exponents: ExponentTuple,
    pub nu: Option<[f64; 3]>,
    pub c_used: f64,
    pub measures: SetMeasures,
    pub per_d: Vec<StratumValue>,
    pub decay_monotone: bool,
    pub lambda_abs: f64,
    pub ratio: f64,
    pub nu_ratio: Option<f64>,
    pub stats: CollectionStats,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

pub const PROBE_SCHEMA: u32 = 1;

impl ProbeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const PROBE_CSV_HEADER: &str = "label,p,q,s,r,f,g,h,h_prime,c,lambda,ratio,nu_ratio,tiles,squares,strata,seed";

/// One CSV line per report, in the given order.
pub fn reports_to_csv(reports: &[ProbeReport]) -> String {
    let mut out = String::from(PROBE_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let e = &r.exponents;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{:e},{:e},{},{},{},{},{}\n",
            r.label,
            e.p,
            e.q,
            e.s,
            e.r,
            r.measures.f,
            r.measures.g,
            r.measures.h,
            r.measures.h_prime,
            r.c_used,
            r.lambda_abs,
            r.ratio,
            r.nu_ratio.map(|v| format!("{v:e}")).unwrap_or_default(),
            r.stats.tiles,
            r.stats.squares,
            r.per_d.len(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ));
    }
    out
}

pub fn check_nu(nu: [f64; 3]) -> Result<()> {
    if (nu.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("nu must sum to 1, got {nu:?}")));
    }
    Ok(())
}

/// Admissible `nu` on a 0.05 lattice: `0 < nu_1, nu_2 < 1/r'`,
/// `-1 < nu_3 < 1/r'`, summing to 1.
pub fn nu_grid(r: f64) -> Vec<[f64; 3]> {
    let cap = 1.0 / conjugate(r);
    let mut out = Vec::new();
    for a in 1..20 {
        for b in 1..20 {
            let (n1, n2) = (a as f64 * 0.05, b as f64 * 0.05);
            let n3 = 1.0 - n1 - n2;
            if n1 < cap && n2 < cap && n3 > -1.0 && n3 < cap {
                out.push([n1, n2, n3]);
            }
        }
    }
    out
}

/// Strata values, total form and the restricted-type ratio
/// `|Lambda| / (|F|^{1/p} |G|^{1/q} |H|^{1/s'})`.
pub fn restricted_probe(
    label: &str,
    tiles: &TileCollection,
    triple: &RestrictedTriple,
    exponents: ExponentTuple,
    nu: Option<[f64; 3]>,
    seed: Option<u64>,
) -> Result<ProbeReport> {
    if let Some(nu) = nu {
        check_nu(nu)?;
    }
    triple.check(exponents.r)?;
    let grid = triple.f.grid;
    let pairings = Pairings::compute(&grid, tiles, &triple.f, &triple.g, Some(&triple.h))?;
    let strata = stratify(tiles, &triple.exceptional.set)?;
    let mut per_d = Vec::new();
    for (d, s) in &strata {
        per_d.push(StratumValue { d: *d, tiles: s.len(), lambda_abs: pairings.lambda(s.iter()).norm() });
    }
    let lambda_abs = pairings.lambda(tiles.iter()).norm();
    let measures = SetMeasures {
        f: triple.f_set.measure(),
        g: triple.g_set.measure(),
        h: triple.h_set.measure(),
        h_prime: triple.h_prime.measure(),
        exceptional: triple.exceptional.set.measure(),
    };
    let inv_s_prime = 1.0 - 1.0 / exponents.p - 1.0 / exponents.q;
    let denom = measures.f.powf(1.0 / exponents.p) * measures.g.powf(1.0 / exponents.q) * measures.h.powf(inv_s_prime);
    let nu_ratio = nu.map(|v| lambda_abs / (measures.f.powf(v[0]) * measures.g.powf(v[1]) * measures.h.powf(v[2])));
    let decay_monotone = per_d.windows(2).all(|w| w[1].lambda_abs <= w[0].lambda_abs * (1.0 + 1e-12));
    let scales: Vec<i32> = tiles.iter().map(|t| t.spatial.scale).collect();
    Ok(ProbeReport {
        schema: PROBE_SCHEMA,
        label: label.to_string(),
        exponents,
        nu,
        c_used: triple.exceptional.c,
        measures,
        per_d,
        decay_monotone,
        lambda_abs,
        ratio: lambda_abs / denom,
        nu_ratio,
        stats: CollectionStats {
            tiles: tiles.len(),
            squares: tiles.squares().len(),
            min_scale: scales.iter().copied().min(),
            max_scale: scales.iter().copied().max(),
        },
        seed,
        wall_time: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StripOrientation {
    /// `[0,1) × [k,k+1)`: the second function is split.
    XiStrip,
    /// `[k,k+1) × [0,1)`: the first function is split.
    EtaStrip,
}

/// `n` unit squares stacked along one axis, checked against the grid's
/// Nyquist range for all three tile components.
pub fn counterexample_config(n: usize, orientation: StripOrientation, grid: &Grid) -> Result<SquareCollection> {
    if n == 0 {
        return Err(Error::InvalidArgument("counterexample needs at least one square".into()));
    }
    // omega_3 has length 4 centred at c1 + c2, dilated by 1.1
    let top = n as f64 + 2.0 * crate::analysis::SUPPORT_DILATION;
    grid.check_band(-0.05, top, &format!("strip of {n} unit squares"))?;
    SquareCollection::from_squares((0..n as i64).map(|k| match orientation {
        StripOrientation::XiStrip => FrequencySquare::from_parts(0, 0, k),
        StripOrientation::EtaStrip => FrequencySquare::from_parts(0, k, 0),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(256, 32.0).unwrap()
    }

    #[test]
    fn huge_constant_empties_exceptional_set() {
        let g = grid();
        let cell = GridSet::from_intervals(g, &[Interval::new(0.0, g.spacing())]);
        assert_eq!(superlevel_union(&cell, &cell, 1e9).measure(), 0.0);
    }

    #[test]
    fn whole_period_with_two_is_empty() {
        let g = grid();
        let all = GridSet::full(g);
        // M 1 = 1 <= 2 * 32
        assert_eq!(superlevel_union(&all, &all, 2.0).measure(), 0.0);
    }

    #[test]
    fn empty_exceptional_set_puts_everything_in_d0() {
        let g = grid();
        let t = crate::geometry::build_tritile(DyadicInterval::new(0, 3), FrequencySquare::from_parts(0, 0, 0)).unwrap();
        let s = TileCollection::from_tiles([t]);
        let strata = stratify(&s, &GridSet::empty(g)).unwrap();
        assert_eq!(strata.keys().copied().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn deep_tile_lands_in_d3() {
        let g = grid();
        // E = [-8, 8); I = [0, 1) sits 7 away from E^c
        let e = GridSet::from_intervals(g, &[Interval::new(-8.0, 16.0)]);
        let t = crate::geometry::build_tritile(DyadicInterval::new(0, 0), FrequencySquare::from_parts(0, 0, 0)).unwrap();
        let strata = stratify(&TileCollection::from_tiles([t]), &e).unwrap();
        assert_eq!(strata.keys().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn zero_weight_selects_floor_bucket() {
        let g = grid();
        let t = crate::geometry::build_tritile(DyadicInterval::new(0, 0), FrequencySquare::from_parts(0, 0, 0)).unwrap();
        let s = TileCollection::from_tiles([t]);
        let sel = select_intervals(&s, &GridSet::empty(g), 10.0);
        assert_eq!(sel.levels.keys().copied().collect::<Vec<_>>(), vec![SELECTION_FLOOR]);
        verify_selection(&s, &GridSet::empty(g), &sel, 0.5).unwrap();
    }

    #[test]
    fn strip_configs() {
        let g = Grid::new(1024, 32.0).unwrap();
        assert_eq!(counterexample_config(1, StripOrientation::XiStrip, &g).unwrap().len(), 1);
        let c = counterexample_config(8, StripOrientation::EtaStrip, &g).unwrap();
        assert_eq!(c.len(), 8);
        assert!(c.is_pairwise_disjoint());
        assert!(matches!(counterexample_config(20, StripOrientation::XiStrip, &g), Err(Error::Nyquist { .. })));
    }

    #[test]
    fn nu_grid_is_admissible() {
        let v = nu_grid(4.0);
        assert!(!v.is_empty());
        for nu in v {
            check_nu(nu).unwrap();
            assert!(nu[0] < 0.75 && nu[1] < 0.75 && nu[2] > -1.0);
        }
    }
}
