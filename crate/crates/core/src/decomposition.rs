//! Stopping-time decompositions, the splitting into levels and the generic
//! size/energy bound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::Rational64;
use serde::Serialize;

use crate::analysis::{chi_tilde_grid, Grid};
use crate::columns::{maximal_tower, mutually_disjoint, HProfile, Orientation, Tower, Workspace};
use crate::error::{Error, Result};
use crate::geometry::{TileCollection, TriTile};
use crate::operators::{conjugate, Pairings};
use crate::size_energy::{energy_f, energy_g, energy_h, size_f, size_g, size_h, tile_value, Slot, ENERGY_LEVELS};

const PRE_TOL: f64 = 1e-12;

pub fn alpha(r: f64) -> Result<f64> {
    if !(r > 2.0) {
        return Err(Error::InvalidArgument(format!("alpha needs r > 2, got {r}")));
    }
    Ok(0.5 - 1.0 / r)
}

/// Output of one stopping-time decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub level: i32,
    pub residual: TileCollection,
    pub extracted: Vec<Tower>,
    /// Membership tests performed.
    pub work: usize,
}

impl Partition {
    pub fn columns(&self) -> impl Iterator<Item = &Tower> {
        self.extracted.iter().filter(|t| t.orientation == Orientation::Column)
    }

    pub fn rows(&self) -> impl Iterator<Item = &Tower> {
        self.extracted.iter().filter(|t| t.orientation == Orientation::Row)
    }

    pub fn measure(&self, orientation: Orientation) -> f64 {
        self.extracted.iter().filter(|t| t.orientation == orientation).map(|t| t.measure()).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("partition level={} residual={}\n", self.level, self.residual.len());
        for t in &self.extracted {
            write_tower(&mut out, t, "");
        }
        out
    }
}

fn write_tower(out: &mut String, t: &Tower, indent: &str) {
    let kind = match t.orientation {
        Orientation::Column => "column",
        Orientation::Row => "row",
    };
    let _ = writeln!(out, "{indent}{kind} top={} members={} measure={}", t.top, t.len(), t.measure());
}

fn check_budget(work: usize, n: usize) {
    assert!(work <= 4 * n * n + 16, "stopping time exceeded its work budget: {work} tests for {n} tiles");
}

/// Greedy extraction of maximal towers whose top exceeds `tau`, largest
/// top first. `exceeds` sees the tower built over the remaining tiles.
fn extract<F>(tiles: &TileCollection, orientation: Orientation, mut exceeds: F, work: &mut usize) -> Result<(TileCollection, Vec<Tower>)>
where
    F: FnMut(&TriTile, &dyn Fn() -> Tower) -> Result<bool>,
{
    let mut remaining: BTreeSet<TriTile> = tiles.iter().copied().collect();
    let mut out = Vec::new();
    for t in tiles {
        if !remaining.contains(t) {
            continue;
        }
        let pool = TileCollection::from_tiles(remaining.iter().copied());
        *work += pool.len();
        let build = || maximal_tower(&pool, t, orientation);
        if !exceeds(t, &build)? {
            continue;
        }
        let tower = build();
        for s in &tower.members {
            remaining.remove(s);
        }
        out.push(tower);
    }
    Ok((TileCollection::from_tiles(remaining), out))
}

fn precondition(size: f64, cap: f64, witness: Option<String>) -> Result<()> {
    if size > cap * (1.0 + PRE_TOL) + f64::MIN_POSITIVE {
        return Err(Error::Precondition(format!(
            "size {size} exceeds the cap {cap}{}",
            witness.map(|w| format!(" at {w}")).unwrap_or_default()
        )));
    }
    Ok(())
}

/// Columns (`Slot::F`) or rows (`Slot::G`) of tiles above `2^{-n0-1} E`.
pub fn decompose_fg(tiles: &TileCollection, n0: i32, energy: f64, pairings: &Pairings, slot: Slot) -> Result<Partition> {
    let size = crate::size_energy::size_fg(tiles, pairings, slot);
    let cap = 2f64.powi(-n0) * energy;
    let offending = size.witness.map(|w| match w {
        crate::size_energy::SizeWitness::Tile(t) => t.to_string(),
        crate::size_energy::SizeWitness::Tower(_, t) => t.to_string(),
    });
    precondition(size.value, cap, offending)?;
    let tau = cap / 2.0;
    let mut work = 0;
    let (residual, extracted) =
        extract(tiles, slot.orientation(), |t, _| Ok(tile_value(pairings, t, slot) > tau), &mut work)?;
    check_budget(work, tiles.len());
    Ok(Partition { level: n0, residual, extracted, work })
}

pub fn decompose_f(tiles: &TileCollection, n0: i32, e1: f64, pairings: &Pairings) -> Result<Partition> {
    decompose_fg(tiles, n0, e1, pairings, Slot::F)
}

pub fn decompose_g(tiles: &TileCollection, n0: i32, e2: f64, pairings: &Pairings) -> Result<Partition> {
    decompose_fg(tiles, n0, e2, pairings, Slot::G)
}

/// Maximal columns with h-value above `2^{-n0-1} E3`, then rows.
pub fn decompose_h(tiles: &TileCollection, n0: i32, e3: f64, profile: &HProfile) -> Result<Partition> {
    let size = size_h(tiles, profile)?;
    let cap = 2f64.powi(-n0) * energy_or_zero(e3);
    let offending = size.witness.as_ref().map(|w| format!("{w:?}"));
    precondition(size.value, cap, offending)?;
    let tau = cap / 2.0;
    let mut work = 0;
    let mut extracted = Vec::new();
    let mut current = tiles.clone();
    for orientation in [Orientation::Column, Orientation::Row] {
        let (rest, towers) =
            extract(&current, orientation, |_, build| Ok(profile.tower_value(&build())? > tau), &mut work)?;
        current = rest;
        extracted.extend(towers);
    }
    check_budget(work, tiles.len());
    Ok(Partition { level: n0, residual: current, extracted, work })
}

fn energy_or_zero(e: f64) -> f64 {
    if e.is_finite() {
        e.max(0.0)
    } else {
        0.0
    }
}

/// Independent check of the exact-partition and disjointness postconditions.
pub fn verify_partition(input: &TileCollection, p: &Partition) -> std::result::Result<(), String> {
    let mut seen: BTreeSet<TriTile> = p.residual.iter().copied().collect();
    let mut count = p.residual.len();
    for t in &p.extracted {
        t.check().map_err(|e| e.to_string())?;
        for s in &t.members {
            count += 1;
            if !seen.insert(*s) {
                return Err(format!("tile {s} appears twice"));
            }
        }
    }
    if count != input.len() || seen.iter().any(|s| !input.contains(s)) {
        return Err(format!("partition has {count} tiles, input has {}", input.len()));
    }
    for o in [Orientation::Column, Orientation::Row] {
        let fam: Vec<Tower> = p.extracted.iter().filter(|t| t.orientation == o).cloned().collect();
        if !mutually_disjoint(&fam) {
            return Err(format!("extracted {o:?}s are not mutually disjoint"));
        }
    }
    Ok(())
}

/// The six numbers entering the generic bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizesEnergies {
    pub s1: f64,
    pub e1: f64,
    pub s2: f64,
    pub e2: f64,
    pub s3: f64,
    pub e3: f64,
}

pub fn sizes_energies(tiles: &TileCollection, ws: &Workspace) -> Result<SizesEnergies> {
    let profile = ws.profile()?;
    Ok(SizesEnergies {
        s1: size_f(tiles, &ws.pairings).value,
        e1: energy_f(tiles, &ws.pairings).value,
        s2: size_g(tiles, &ws.pairings).value,
        e2: energy_g(tiles, &ws.pairings).value,
        s3: size_h(tiles, profile)?.value,
        e3: energy_h(tiles, profile)?.value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub n: i32,
    pub columns: Vec<Tower>,
    pub rows: Vec<Tower>,
    /// Levels of the h decomposition run inside this level.
    pub h_levels: Vec<i32>,
    /// Final sweep of whatever the 21 levels left over.
    pub terminal: bool,
}

impl Level {
    fn new(n: i32) -> Self {
        Level { n, columns: Vec::new(), rows: Vec::new(), h_levels: Vec::new(), terminal: false }
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty() && self.rows.is_empty()
    }

    pub fn tiles(&self, orientation: Orientation) -> TileCollection {
        let fam = match orientation {
            Orientation::Column => &self.columns,
            Orientation::Row => &self.rows,
        };
        TileCollection::from_tiles(fam.iter().flat_map(|t| t.members.iter().copied()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub levels: BTreeMap<i32, Level>,
    pub inputs: SizesEnergies,
    pub r_prime: f64,
    pub n_start: i32,
}

impl Splitting {
    pub fn nonempty_levels(&self) -> impl Iterator<Item = &Level> {
        self.levels.values().filter(|l| !l.is_empty())
    }

    pub fn tile_count(&self) -> usize {
        self.levels.values().flat_map(|l| l.columns.iter().chain(&l.rows)).map(|t| t.len()).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("splitting n_start={} levels={}\n", self.n_start, self.levels.len());
        for l in self.nonempty_levels() {
            let _ = writeln!(out, "level {} terminal={} columns={} rows={}", l.n, l.terminal, l.columns.len(), l.rows.len());
            for t in l.columns.iter().chain(&l.rows) {
                write_tower(&mut out, t, "  ");
            }
        }
        out
    }
}

fn ratio_level(s: f64, e: f64, scale: f64) -> Option<i32> {
    (s > 0.0 && e > 0.0).then(|| (scale * (e / s).log2()).floor() as i32)
}

/// First h level run at split level `n`.
fn h_first(n: i32, r_prime: f64, first: bool) -> i32 {
    let x = 2.0 * n as f64 / r_prime;
    if first {
        x.floor() as i32
    } else {
        x.ceil() as i32
    }
}

/// Iterates the three decompositions over decreasing thresholds.
///
/// At level `n` the `f` and `g` lemmas run at `n`, and the `h` lemma at every
/// integer `k` with `2n/r' <= k < 2(n+1)/r'` (the first level starts at the
/// floor), which keeps the `h` size at most `2^{-2(n+1)/r'} E3` going into
/// level `n + 1`. Whatever survives the 21 levels is swept into maximal
/// columns at a terminal level.
pub fn split(tiles: &TileCollection, ws: &Workspace) -> Result<Splitting> {
    let profile = ws.profile()?;
    let r_prime = profile.r_prime();
    let mut inputs = sizes_energies(tiles, ws)?;
    // a positive size always admits a positive greedy energy; guard anyway
    for (s, e) in [(inputs.s1, &mut inputs.e1), (inputs.s2, &mut inputs.e2), (inputs.s3, &mut inputs.e3)] {
        if s > 0.0 && !(*e > 0.0) {
            *e = s;
        }
    }
    let candidates = [
        ratio_level(inputs.s1, inputs.e1, 1.0),
        ratio_level(inputs.s2, inputs.e2, 1.0),
        ratio_level(inputs.s3, inputs.e3, r_prime / 2.0),
    ];
    let n_start = candidates.iter().flatten().copied().min().unwrap_or(0);
    let mut levels = BTreeMap::new();
    let mut current = tiles.clone();
    let n_end = n_start + ENERGY_LEVELS;
    for n in n_start..n_end {
        if current.is_empty() {
            break;
        }
        let mut level = Level::new(n);
        let pf = decompose_f(&current, n, inputs.e1, &ws.pairings)?;
        level.columns.extend(pf.extracted);
        let pg = decompose_g(&pf.residual, n, inputs.e2, &ws.pairings)?;
        level.rows.extend(pg.extracted);
        current = pg.residual;
        let k_end = (2.0 * (n + 1) as f64 / r_prime).ceil() as i32;
        for k in h_first(n, r_prime, n == n_start)..k_end {
            level.h_levels.push(k);
            let ph = decompose_h(&current, k, inputs.e3, profile)?;
            current = ph.residual;
            for t in ph.extracted {
                match t.orientation {
                    Orientation::Column => level.columns.push(t),
                    Orientation::Row => level.rows.push(t),
                }
            }
        }
        levels.insert(n, level);
    }
    if !current.is_empty() {
        let mut level = Level::new(n_end);
        level.terminal = true;
        let mut work = 0;
        let (_, towers) = extract(&current, Orientation::Column, |_, _| Ok(true), &mut work)?;
        level.columns = towers;
        levels.insert(n_end, level);
    }
    Ok(Splitting { levels, inputs, r_prime, n_start })
}

/// Per-level caps and the observed sizes and measure ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    pub n: i32,
    pub terminal: bool,
    pub size_f: f64,
    pub size_g: f64,
    pub size_h: f64,
    pub cap_f: f64,
    pub cap_g: f64,
    pub cap_h: f64,
    /// `sum |I_C| / 2^{2n}`, and the same for rows.
    pub column_ratio: f64,
    pub row_ratio: f64,
}

/// Re-verifies properties (a)-(c) of a splitting, the exact partition and
/// tower admissibility. Measure ratios are reported, not judged.
pub fn verify_splitting(input: &TileCollection, sp: &Splitting, ws: &Workspace) -> std::result::Result<Vec<LevelCheck>, String> {
    let profile = ws.profile().map_err(|e| e.to_string())?;
    let mut seen = BTreeSet::new();
    let mut count = 0;
    let mut checks = Vec::new();
    let SizesEnergies { s1, e1, s2, e2, s3, e3 } = sp.inputs;
    for l in sp.levels.values() {
        for t in l.columns.iter().chain(&l.rows) {
            t.check().map_err(|e| e.to_string())?;
            for s in &t.members {
                count += 1;
                if !seen.insert(*s) || !input.contains(s) {
                    return Err(format!("tile {s} misplaced at level {}", l.n));
                }
            }
        }
        let cols = l.tiles(Orientation::Column);
        let rows = l.tiles(Orientation::Row);
        let both = TileCollection::from_tiles(cols.iter().chain(rows.iter()).copied());
        let n = l.n as f64;
        let c = LevelCheck {
            n: l.n,
            terminal: l.terminal,
            size_f: size_f(&both, &ws.pairings).value,
            size_g: size_g(&both, &ws.pairings).value,
            size_h: size_h(&both, profile).map_err(|e| e.to_string())?.value,
            cap_f: (2f64.powf(-n) * e1).min(s1),
            cap_g: (2f64.powf(-n) * e2).min(s2),
            cap_h: (2f64.powf(-2.0 * n / sp.r_prime) * e3).min(s3),
            column_ratio: l.columns.iter().map(|t| t.measure()).sum::<f64>() / 2f64.powf(2.0 * n),
            row_ratio: l.rows.iter().map(|t| t.measure()).sum::<f64>() / 2f64.powf(2.0 * n),
        };
        let slack = |cap: f64| cap * (1.0 + 1e-9) + 1e-300;
        if c.size_f > slack(c.cap_f) || c.size_g > slack(c.cap_g) || c.size_h > slack(c.cap_h) {
            return Err(format!("level {} breaks a size cap: {c:?}", l.n));
        }
        checks.push(c);
    }
    if count != input.len() {
        return Err(format!("splitting holds {count} tiles, input has {}", input.len()));
    }
    Ok(checks)
}

/// Inputs of the two-term size/energy bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenericBoundInputs {
    pub se: SizesEnergies,
    pub theta: [f64; 3],
    pub beta: [f64; 3],
    pub alpha: f64,
    /// `sup_s |I_s|^{-1} int 1_F chi_{I_s}^{100}` before the `1/r` power.
    pub sup_avg_f: f64,
    pub sup_avg_g: f64,
}

/// Exponents of `(S1, E1, S2, E2, S3, E3)` in the two terms.
pub fn bound_exponents(theta: [f64; 3], beta: [f64; 3], r: f64) -> [[f64; 6]; 2] {
    let a = 0.5 - 1.0 / r;
    let rp = conjugate(r);
    [
        [
            4.0 * a * theta[0],
            1.0 - 4.0 * a * theta[0],
            4.0 * a * theta[1],
            2.0 * a - 4.0 * a * theta[1],
            2.0 * rp * a * theta[2],
            1.0 - 2.0 * rp * a * theta[2],
        ],
        [
            4.0 * a * beta[0],
            2.0 * a - 4.0 * a * beta[0],
            4.0 * a * beta[1],
            1.0 - 4.0 * a * beta[1],
            2.0 * rp * a * beta[2],
            1.0 - 2.0 * rp * a * beta[2],
        ],
    ]
}

/// Exact rational version of [`bound_exponents`].
pub fn bound_exponents_exact(theta: [Rational64; 3], beta: [Rational64; 3], r: Rational64) -> [[Rational64; 6]; 2] {
    let one = Rational64::from_integer(1);
    let two = Rational64::from_integer(2);
    let four = Rational64::from_integer(4);
    let a = one / two - one / r;
    let rp = r / (r - one);
    let row = |w: [Rational64; 3], first_full: bool| {
        let (e1, e2) = if first_full {
            (one - four * a * w[0], two * a - four * a * w[1])
        } else {
            (two * a - four * a * w[0], one - four * a * w[1])
        };
        [four * a * w[0], e1, four * a * w[1], e2, two * rp * a * w[2], one - two * rp * a * w[2]]
    };
    [row(theta, true), row(beta, false)]
}

/// Constraint on the simplex weights.
pub fn check_weights(theta: [f64; 3], beta: [f64; 3], alpha: f64) -> Result<()> {
    let tol = 1e-12;
    let cap = (1.0f64).min(1.0 / (4.0 * alpha));
    let bad = |what: &str| Err(Error::WeightConstraint(what.to_string()));
    if ((theta.iter().sum::<f64>()) - 1.0).abs() > tol || ((beta.iter().sum::<f64>()) - 1.0).abs() > tol {
        return bad("weights must sum to 1");
    }
    if theta.iter().chain(&beta).any(|w| !w.is_finite()) {
        return bad("weights must be finite");
    }
    if !(theta[0] >= 0.0 && theta[0] <= cap + tol && beta[1] >= 0.0 && beta[1] <= cap + tol) {
        return bad("theta_1 and beta_2 must lie in [0, min(1, 1/(4 alpha))]");
    }
    if !(theta[1] >= 0.0 && theta[1] <= 0.5 + tol && beta[0] >= 0.0 && beta[0] <= 0.5 + tol) {
        return bad("theta_2 and beta_1 must lie in [0, 1/2]");
    }
    if !(theta[2] > 0.0 && theta[2] <= 1.0 + tol && beta[2] > 0.0 && beta[2] <= 1.0 + tol) {
        return bad("theta_3 and beta_3 must lie in (0, 1]");
    }
    Ok(())
}

fn monomial(bases: [f64; 6], exps: [f64; 6]) -> f64 {
    bases
        .iter()
        .zip(exps)
        .map(|(b, e)| if e == 0.0 { 1.0 } else { b.powf(e) })
        .product()
}

pub fn generic_bound(inputs: &GenericBoundInputs, r: f64) -> Result<f64> {
    let a = alpha(r)?;
    if (a - inputs.alpha).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("alpha {} does not match r = {r}", inputs.alpha)));
    }
    check_weights(inputs.theta, inputs.beta, a)?;
    let se = inputs.se;
    let vals = [se.s1, se.e1, se.s2, se.e2, se.s3, se.e3];
    if vals.iter().chain([&inputs.sup_avg_f, &inputs.sup_avg_g]).any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("sizes, energies and averages must be nonnegative".into()));
    }
    let [x1, x2] = bound_exponents(inputs.theta, inputs.beta, r);
    let t1 = inputs.sup_avg_g.powf(1.0 / r) * monomial(vals, x1);
    let t2 = inputs.sup_avg_f.powf(1.0 / r) * monomial(vals, x2);
    Ok(t1 + t2)
}

/// `sup_s |I_s|^{-1} int 1_E chi_{I_s}^{100}` for a sampled indicator.
pub fn sup_average(grid: &Grid, indicator: &[f64], tiles: &TileCollection) -> f64 {
    let intervals: BTreeSet<_> = tiles.iter().map(|t| t.spatial).collect();
    intervals
        .iter()
        .map(|i| {
            let w = chi_tilde_grid(grid, &i.as_interval(), 100.0);
            indicator.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() * grid.spacing() / i.len()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones() -> SizesEnergies {
        SizesEnergies { s1: 1.0, e1: 1.0, s2: 1.0, e2: 1.0, s3: 1.0, e3: 1.0 }
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(4.0).unwrap(), 0.25);
        assert!(alpha(2.0).is_err());
        let a = alpha(2.0 + 1e-9).unwrap();
        assert!(a > 0.0 && a < 1e-8);
        let rp = conjugate(4.0);
        assert!((1.0 + 2.0 * 0.25 + 2.0 / rp - 2.0 - 4.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn bound_of_ones_is_two() {
        let w = [1.0 / 3.0; 3];
        let inputs = GenericBoundInputs { se: ones(), theta: w, beta: w, alpha: 0.25, sup_avg_f: 1.0, sup_avg_g: 1.0 };
        assert!((generic_bound(&inputs, 4.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weight_constraint_rejected() {
        let inputs = GenericBoundInputs {
            se: ones(),
            theta: [0.0, 1.0, 0.0],
            beta: [1.0 / 3.0; 3],
            alpha: 0.25,
            sup_avg_f: 1.0,
            sup_avg_g: 1.0,
        };
        assert!(matches!(generic_bound(&inputs, 4.0), Err(Error::WeightConstraint(_))));
    }

    #[test]
    fn exact_and_float_exponents_agree() {
        let third = Rational64::new(1, 3);
        let ex = bound_exponents_exact([third; 3], [third; 3], Rational64::from_integer(4));
        let fl = bound_exponents([1.0 / 3.0; 3], [1.0 / 3.0; 3], 4.0);
        for (a, b) in ex.iter().flatten().zip(fl.iter().flatten()) {
            assert!((*a.numer() as f64 / *a.denom() as f64 - b).abs() < 1e-14);
        }
    }

    #[test]
    fn no_tile_above_threshold_extracts_nothing() {
        let g = Grid::new(256, 32.0).unwrap();
        let s = TileCollection::from_tiles([crate::geometry::build_tritile(
            crate::geometry::DyadicInterval::new(0, 0),
            crate::geometry::FrequencySquare::from_parts(0, 0, 0),
        )
        .unwrap()]);
        let f = crate::analysis::SampledFunction::zeros(g);
        let p = Pairings::compute(&g, &s, &f, &f, None).unwrap();
        let part = decompose_f(&s, 0, 1.0, &p).unwrap();
        assert_eq!(part.residual, s);
        assert!(part.extracted.is_empty());
    }
}
