//! Columns and rows of tri-tiles and both sides of their local estimates.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use serde::Serialize;

use crate::analysis::{cells_in, chi_tilde_grid, maximal_of_abs, Grid, SampledFunction, CHI_EXPONENT};
use crate::error::{Error, Result};
use crate::geometry::{DyadicInterval, FrequencySquare, TileCollection, TriTile};
use crate::operators::{Pairings, SequenceH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Orientation {
    Column,
    Row,
}

/// A column (`omega_{t_1} ⊆ omega_{s_1}`) or row (`omega_{t_2} ⊆ omega_{s_2}`)
/// with top `t` and `I_s ⊆ I_t` for every member.
#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    pub orientation: Orientation,
    pub top: TriTile,
    pub members: Vec<TriTile>,
}

pub type Column = Tower;
pub type Row = Tower;

fn in_tower(orientation: Orientation, top: &TriTile, s: &TriTile) -> bool {
    if !s.spatial.is_within(&top.spatial) {
        return false;
    }
    match orientation {
        Orientation::Column => top.square.omega1.is_within(&s.square.omega1),
        Orientation::Row => top.square.omega2.is_within(&s.square.omega2),
    }
}

/// All `s ∈ S` with `I_s ⊆ I_top` and `omega_{top,1} ⊆ omega_{s_1}`.
pub fn maximal_column(tiles: &TileCollection, top: &TriTile) -> Column {
    maximal_tower(tiles, top, Orientation::Column)
}

pub fn maximal_row(tiles: &TileCollection, top: &TriTile) -> Row {
    maximal_tower(tiles, top, Orientation::Row)
}

pub fn maximal_tower(tiles: &TileCollection, top: &TriTile, orientation: Orientation) -> Tower {
    let members = tiles.iter().copied().filter(|s| in_tower(orientation, top, s)).collect();
    Tower { orientation, top: *top, members }
}

impl Tower {
    pub fn new(orientation: Orientation, top: TriTile, members: Vec<TriTile>) -> Result<Self> {
        let t = Tower { orientation, top, members };
        t.check()?;
        Ok(t)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn top_interval(&self) -> DyadicInterval {
        self.top.spatial
    }

    pub fn measure(&self) -> f64 {
        self.top.spatial_len()
    }

    /// `omega_{s_2}` for columns, `omega_{s_1}` for rows.
    fn free_interval(&self, s: &TriTile) -> DyadicInterval {
        match self.orientation {
            Orientation::Column => s.square.omega2,
            Orientation::Row => s.square.omega1,
        }
    }

    /// Top rectangle `I_t × omega_{t_1}` (columns) or `I_t × omega_{t_2}` (rows).
    pub fn top_rectangle(&self) -> (DyadicInterval, DyadicInterval) {
        match self.orientation {
            Orientation::Column => (self.top.spatial, self.top.square.omega1),
            Orientation::Row => (self.top.spatial, self.top.square.omega2),
        }
    }

    /// Containment relations, and disjointness of the free frequency
    /// intervals between members carried by distinct squares. Members sharing
    /// a square share the free interval and have disjoint spatial intervals.
    pub fn check(&self) -> Result<()> {
        for s in &self.members {
            if !in_tower(self.orientation, &self.top, s) {
                return Err(Error::Precondition(format!("{s} violates the containment relations of top {}", self.top)));
            }
        }
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                if a == b {
                    return Err(Error::Precondition(format!("{a} listed twice")));
                }
                let ok = if a.square == b.square {
                    !a.spatial.intersects(&b.spatial)
                } else {
                    !self.free_interval(a).intersects(&self.free_interval(b))
                };
                if !ok {
                    return Err(Error::Precondition(format!("members {a} and {b} overlap")));
                }
            }
        }
        Ok(())
    }

    pub fn squares(&self) -> BTreeSet<FrequencySquare> {
        self.members.iter().map(|t| t.square).collect()
    }

    /// Same configuration with the frequency axes swapped.
    pub fn reflect(&self) -> Tower {
        let orientation = match self.orientation {
            Orientation::Column => Orientation::Row,
            Orientation::Row => Orientation::Column,
        };
        Tower { orientation, top: self.top.reflect(), members: self.members.iter().map(|t| t.reflect()).collect() }
    }
}

/// Members pairwise disjoint and top rectangles pairwise disjoint.
pub fn mutually_disjoint(towers: &[Tower]) -> bool {
    let mut seen = BTreeSet::new();
    for t in towers {
        for s in &t.members {
            if !seen.insert(*s) {
                return false;
            }
        }
    }
    for (i, a) in towers.iter().enumerate() {
        for b in &towers[i + 1..] {
            let (ia, wa) = a.top_rectangle();
            let (ib, wb) = b.top_rectangle();
            if ia.intersects(&ib) && wa.intersects(&wb) {
                return false;
            }
        }
    }
    true
}

/// Cached `J(I, omega) = int_I |M(h_omega chi_I^20)|^{r'}`.
pub struct HProfile {
    grid: Grid,
    r_prime: f64,
    abs: HashMap<FrequencySquare, Vec<f64>>,
    cache: Mutex<HashMap<(DyadicInterval, FrequencySquare), f64>>,
}

impl HProfile {
    pub fn new(h: &SequenceH, r_prime: f64) -> Self {
        let abs = h.iter().map(|(sq, f)| (*sq, f.abs())).collect();
        Self { grid: h.grid, r_prime, abs, cache: Mutex::new(HashMap::new()) }
    }

    pub fn r_prime(&self) -> f64 {
        self.r_prime
    }

    pub fn j(&self, interval: &DyadicInterval, omega: &FrequencySquare) -> Result<f64> {
        let key = (*interval, *omega);
        if let Some(v) = self.cache.lock().expect("profile cache poisoned").get(&key) {
            return Ok(*v);
        }
        let h = self.abs.get(omega).ok_or_else(|| Error::MissingH(omega.to_string()))?;
        let w = chi_tilde_grid(&self.grid, &interval.as_interval(), CHI_EXPONENT);
        let u: Vec<f64> = h.iter().zip(&w).map(|(a, b)| a * b).collect();
        let m = maximal_of_abs(&u);
        let mut cells: Vec<f64> = cells_in(&self.grid, interval).into_iter().map(|i| m[i].powf(self.r_prime)).collect();
        cells.sort_by(f64::total_cmp);
        let v = cells.iter().sum::<f64>() * self.grid.spacing();
        self.cache.lock().expect("profile cache poisoned").insert(key, v);
        Ok(v)
    }

    /// `(|I|^{-1} sum_omega J(I, omega))^{1/r'}`.
    pub fn value<'a, I: IntoIterator<Item = &'a FrequencySquare>>(&self, interval: &DyadicInterval, squares: I) -> Result<f64> {
        let mut terms = squares.into_iter().map(|sq| self.j(interval, sq)).collect::<Result<Vec<f64>>>()?;
        terms.sort_by(f64::total_cmp);
        let total: f64 = terms.iter().sum();
        Ok((total / interval.len()).powf(1.0 / self.r_prime))
    }

    pub fn tower_value(&self, t: &Tower) -> Result<f64> {
        if t.is_empty() {
            return Ok(0.0);
        }
        self.value(&t.top.spatial, t.squares().iter())
    }
}

/// Pairings and the h profile for one instance.
pub struct Workspace {
    pub grid: Grid,
    pub r: f64,
    pub pairings: Pairings,
    pub profile: Option<HProfile>,
    pub g: Option<SampledFunction>,
}

impl Workspace {
    pub fn new(
        tiles: &TileCollection,
        f: &SampledFunction,
        g: &SampledFunction,
        h: Option<&SequenceH>,
        r: f64,
    ) -> Result<Self> {
        if !(r > 2.0) {
            return Err(Error::InvalidArgument(format!("estimates need r > 2, got {r}")));
        }
        let pairings = Pairings::compute(&f.grid, tiles, f, g, h)?;
        let profile = h.map(|h| HProfile::new(h, crate::operators::conjugate(r)));
        Ok(Self { grid: f.grid, r, pairings, profile, g: Some(g.clone()) })
    }

    pub fn profile(&self) -> Result<&HProfile> {
        self.profile.as_ref().ok_or_else(|| Error::InvalidArgument("instance carries no h".into()))
    }

    /// `(lhs, rhs)` of the column estimate, or the row estimate with the
    /// roles of `f` and `g` exchanged.
    pub fn estimate_sides(&self, t: &Tower) -> Result<(f64, f64)> {
        if t.is_empty() {
            return Ok((0.0, 0.0));
        }
        let lhs = self.pairings.lambda(t.members.iter()).norm();
        let (first, second): (Vec<f64>, Vec<f64>) = t
            .members
            .iter()
            .map(|s| {
                let p = self.pairings.get(s);
                let (a, b) = match t.orientation {
                    Orientation::Column => (p.f, p.g),
                    Orientation::Row => (p.g, p.f),
                };
                (a.norm() / s.spatial_len().sqrt(), b.norm())
            })
            .unzip();
        let sup_a = first.iter().copied().fold(0.0, f64::max);
        let sup_b = t.members.iter().zip(&second).map(|(s, b)| b / s.spatial_len().sqrt()).fold(0.0, f64::max);
        let mut sq: Vec<f64> = second.iter().map(|b| b * b).collect();
        sq.sort_by(f64::total_cmp);
        let it = t.measure();
        let energy = sq.iter().sum::<f64>() / it;
        let hval = self.profile()?.tower_value(t)?;
        let r = self.r;
        let rhs = it * sup_a * sup_b.powf((r - 2.0) / r) * energy.powf(1.0 / r) * hval;
        Ok((lhs, rhs))
    }

    /// `|I_C|^{-1} sum |<g, phi_{s_2}>|^2` against `|I_C|^{-1} int |g|^2 chi_{I_C}^{10}`.
    pub fn g_orthogonality(&self, c: &Column) -> Result<(f64, f64)> {
        let g = self.g.as_ref().ok_or_else(|| Error::InvalidArgument("instance carries no g".into()))?;
        g_orthogonality_with(&self.pairings, c, g)
    }
}

fn g_orthogonality_with(pairings: &Pairings, c: &Column, g: &SampledFunction) -> Result<(f64, f64)> {
    let it = c.measure();
    let mut sq: Vec<f64> = c.members.iter().map(|s| pairings.get(s).g.norm_sqr()).collect();
    sq.sort_by(f64::total_cmp);
    let lhs = sq.iter().sum::<f64>() / it;
    let w = chi_tilde_grid(&g.grid, &c.top.spatial.as_interval(), 10.0);
    let rhs = g.values.iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>() * g.grid.spacing() / it;
    Ok((lhs, rhs))
}

pub fn column_estimate_sides(
    c: &Column,
    f: &SampledFunction,
    g: &SampledFunction,
    h: &SequenceH,
    r: f64,
) -> Result<(f64, f64)> {
    if c.is_empty() {
        return Ok((0.0, 0.0));
    }
    let tiles = TileCollection::from_tiles(c.members.iter().copied());
    Workspace::new(&tiles, f, g, Some(h), r)?.estimate_sides(c)
}

pub fn row_estimate_sides(
    row: &Row,
    f: &SampledFunction,
    g: &SampledFunction,
    h: &SequenceH,
    r: f64,
) -> Result<(f64, f64)> {
    column_estimate_sides(row, f, g, h, r)
}

pub fn column_g_orthogonality(c: &Column, g: &SampledFunction) -> Result<(f64, f64)> {
    let tiles = TileCollection::from_tiles(c.members.iter().copied());
    let pairings = Pairings::compute(&g.grid, &tiles, g, g, None)?;
    g_orthogonality_with(&pairings, c, g)
}
