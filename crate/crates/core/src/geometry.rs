//! Dyadic intervals, frequency squares, tri-tiles and Whitney coverings.
//!
//! All containment and disjointness questions between dyadic objects are
//! answered in integer arithmetic. Real coordinates are only produced when a
//! caller asks for endpoints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `[pos * 2^scale, (pos + 1) * 2^scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct DyadicInterval {
    pub scale: i32,
    pub pos: i64,
}

/// Outcome of comparing two dyadic intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Disjoint,
    AInB,
    BInA,
    Equal,
}

pub fn make_dyadic(scale: i32, pos: i64) -> DyadicInterval {
    DyadicInterval { scale, pos }
}

impl DyadicInterval {
    pub fn new(scale: i32, pos: i64) -> Self {
        Self { scale, pos }
    }

    pub fn len(&self) -> f64 {
        2f64.powi(self.scale)
    }

    pub fn start(&self) -> f64 {
        self.pos as f64 * self.len()
    }

    pub fn end(&self) -> f64 {
        (self.pos + 1) as f64 * self.len()
    }

    pub fn center(&self) -> f64 {
        (self.pos as f64 + 0.5) * self.len()
    }

    pub fn as_interval(&self) -> Interval {
        Interval::new(self.start(), self.len())
    }

    /// Ancestor at a coarser (or equal) scale.
    pub fn ancestor(&self, scale: i32) -> DyadicInterval {
        debug_assert!(scale >= self.scale);
        let shift = (scale - self.scale) as u32;
        DyadicInterval { scale, pos: self.pos >> shift }
    }

    pub fn parent(&self) -> DyadicInterval {
        self.ancestor(self.scale + 1)
    }

    pub fn children(&self) -> [DyadicInterval; 2] {
        let s = self.scale - 1;
        [
            DyadicInterval { scale: s, pos: 2 * self.pos },
            DyadicInterval { scale: s, pos: 2 * self.pos + 1 },
        ]
    }

    pub fn relate(&self, other: &DyadicInterval) -> Relation {
        relate(*self, *other)
    }

    /// `self ⊆ other`.
    pub fn is_within(&self, other: &DyadicInterval) -> bool {
        self.scale <= other.scale && self.ancestor(other.scale).pos == other.pos
    }

    pub fn intersects(&self, other: &DyadicInterval) -> bool {
        relate(*self, *other) != Relation::Disjoint
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start(), self.end())
    }
}

pub fn relate(a: DyadicInterval, b: DyadicInterval) -> Relation {
    if a == b {
        return Relation::Equal;
    }
    if a.scale < b.scale {
        if a.ancestor(b.scale).pos == b.pos {
            Relation::AInB
        } else {
            Relation::Disjoint
        }
    } else if a.scale > b.scale {
        if b.ancestor(a.scale).pos == a.pos {
            Relation::BInA
        } else {
            Relation::Disjoint
        }
    } else {
        Relation::Disjoint
    }
}

/// Half-open real interval `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub len: f64,
}

impl Interval {
    pub fn new(start: f64, len: f64) -> Self {
        Self { start, len }
    }

    pub fn from_endpoints(a: f64, b: f64) -> Self {
        Self { start: a, len: b - a }
    }

    pub fn end(&self) -> f64 {
        self.start + self.len
    }

    pub fn center(&self) -> f64 {
        self.start + 0.5 * self.len
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x < self.end()
    }

    /// Same center, length scaled by `factor`.
    pub fn dilate(&self, factor: f64) -> Interval {
        let len = self.len * factor;
        Interval { start: self.center() - 0.5 * len, len }
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.start >= self.start && other.end() <= self.end()
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end() && other.start < self.end()
    }

    /// Distance from a point to the closed interval.
    pub fn dist(&self, x: f64) -> f64 {
        if x < self.start {
            self.start - x
        } else if x > self.end() {
            x - self.end()
        } else {
            0.0
        }
    }
}

/// `omega1 × omega2` with equal side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct FrequencySquare {
    pub omega1: DyadicInterval,
    pub omega2: DyadicInterval,
}

impl FrequencySquare {
    pub fn new(omega1: DyadicInterval, omega2: DyadicInterval) -> Result<Self> {
        if omega1.scale != omega2.scale {
            return Err(Error::NotSquare(omega1.scale, omega2.scale));
        }
        Ok(Self { omega1, omega2 })
    }

    pub fn from_parts(scale: i32, k1: i64, k2: i64) -> Self {
        Self { omega1: DyadicInterval::new(scale, k1), omega2: DyadicInterval::new(scale, k2) }
    }

    pub fn scale(&self) -> i32 {
        self.omega1.scale
    }

    pub fn side(&self) -> f64 {
        self.omega1.len()
    }

    pub fn diam(&self) -> f64 {
        self.side() * std::f64::consts::SQRT_2
    }

    pub fn intersects(&self, other: &FrequencySquare) -> bool {
        self.omega1.intersects(&other.omega1) && self.omega2.intersects(&other.omega2)
    }

    /// Swap the two frequency axes.
    pub fn reflect(&self) -> FrequencySquare {
        FrequencySquare { omega1: self.omega2, omega2: self.omega1 }
    }

    pub fn corners_and_center(&self) -> [(f64, f64); 5] {
        let (a, b) = (self.omega1.start(), self.omega1.end());
        let (c, d) = (self.omega2.start(), self.omega2.end());
        [(a, c), (b, c), (a, d), (b, d), (self.omega1.center(), self.omega2.center())]
    }

    pub fn children(&self) -> [FrequencySquare; 4] {
        let [a0, a1] = self.omega1.children();
        let [b0, b1] = self.omega2.children();
        [
            FrequencySquare { omega1: a0, omega2: b0 },
            FrequencySquare { omega1: a1, omega2: b0 },
            FrequencySquare { omega1: a0, omega2: b1 },
            FrequencySquare { omega1: a1, omega2: b1 },
        ]
    }
}

impl fmt::Display for FrequencySquare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.omega1, self.omega2)
    }
}

/// Which of the three tiles of a tri-tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    First,
    Second,
    Third,
}

impl Component {
    pub fn from_index(j: u8) -> Result<Self> {
        match j {
            1 => Ok(Component::First),
            2 => Ok(Component::Second),
            3 => Ok(Component::Third),
            _ => Err(Error::InvalidArgument(format!("component index {j} not in {{1,2,3}}"))),
        }
    }
}

/// Spatial interval `I_s`, frequency square `omega`, and the output interval
/// `omega3` of length `4|omega1|` centered at `c(omega1) + c(omega2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriTile {
    pub spatial: DyadicInterval,
    pub square: FrequencySquare,
    pub output: Interval,
}

impl Eq for TriTile {}

impl std::hash::Hash for TriTile {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.spatial.hash(state);
        self.square.hash(state);
    }
}

impl PartialOrd for TriTile {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TriTile {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.selection_key().cmp(&other.selection_key())
    }
}

pub fn build_tritile(spatial: DyadicInterval, square: FrequencySquare) -> Result<TriTile> {
    if spatial.scale + square.scale() != 0 {
        return Err(Error::AreaMismatch { spatial_scale: spatial.scale, freq_scale: square.scale() });
    }
    let c = square.omega1.center() + square.omega2.center();
    let len = 4.0 * square.side();
    Ok(TriTile { spatial, square, output: Interval::new(c - 0.5 * len, len) })
}

impl TriTile {
    pub fn new(spatial: DyadicInterval, square: FrequencySquare) -> Result<Self> {
        build_tritile(spatial, square)
    }

    pub fn frequency(&self, component: Component) -> Interval {
        match component {
            Component::First => self.square.omega1.as_interval(),
            Component::Second => self.square.omega2.as_interval(),
            Component::Third => self.output,
        }
    }

    pub fn spatial_len(&self) -> f64 {
        self.spatial.len()
    }

    /// Ordering used by every greedy selection: largest spatial interval
    /// first, then leftmost `I_s`, leftmost `omega1`, leftmost `omega2`.
    pub fn selection_key(&self) -> (i32, i64, i64, i64) {
        (-self.spatial.scale, self.spatial.pos, self.square.omega1.pos, self.square.omega2.pos)
    }

    pub fn reflect(&self) -> TriTile {
        build_tritile(self.spatial, self.square.reflect()).expect("reflection preserves area")
    }

    /// `I_s × omega_{s_1}` and `I_t × omega_{t_1}` intersect.
    pub fn first_tiles_intersect(&self, other: &TriTile) -> bool {
        self.spatial.intersects(&other.spatial) && self.square.omega1.intersects(&other.square.omega1)
    }

    pub fn second_tiles_intersect(&self, other: &TriTile) -> bool {
        self.spatial.intersects(&other.spatial) && self.square.omega2.intersects(&other.square.omega2)
    }
}

impl fmt::Display for TriTile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I={} w={}", self.spatial, self.square)
    }
}

/// Pairwise disjoint frequency squares.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SquareCollection {
    squares: BTreeSet<FrequencySquare>,
}

impl SquareCollection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_squares<I: IntoIterator<Item = FrequencySquare>>(squares: I) -> Result<Self> {
        let mut out = Self::new();
        for sq in squares {
            out.insert(sq)?;
        }
        Ok(out)
    }

    /// Inserts a square, rejecting it if it meets one already present.
    pub fn insert(&mut self, sq: FrequencySquare) -> Result<()> {
        if let Some(other) = self.squares.iter().find(|o| o.intersects(&sq)) {
            return Err(Error::Precondition(format!("square {sq} intersects {other}")));
        }
        self.squares.insert(sq);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &FrequencySquare> {
        self.squares.iter()
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn contains(&self, sq: &FrequencySquare) -> bool {
        self.squares.contains(sq)
    }

    pub fn is_pairwise_disjoint(&self) -> bool {
        let v: Vec<_> = self.squares.iter().collect();
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                if v[i].intersects(v[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// One square per line: `j k1 k2`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for sq in &self.squares {
            s.push_str(&format!("{} {} {}\n", sq.scale(), sq.omega1.pos, sq.omega2.pos));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse { line: i + 1, msg: format!("expected 'j k1 k2', got '{line}'") });
            }
            let bad = |m: &str| Error::Parse { line: i + 1, msg: format!("bad integer '{m}'") };
            let j: i32 = parts[0].parse().map_err(|_| bad(parts[0]))?;
            let k1: i64 = parts[1].parse().map_err(|_| bad(parts[1]))?;
            let k2: i64 = parts[2].parse().map_err(|_| bad(parts[2]))?;
            out.insert(FrequencySquare::from_parts(j, k1, k2))
                .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(out)
    }
}

impl<'a> IntoIterator for &'a SquareCollection {
    type Item = &'a FrequencySquare;
    type IntoIter = std::collections::btree_set::Iter<'a, FrequencySquare>;
    fn into_iter(self) -> Self::IntoIter {
        self.squares.iter()
    }
}

/// Finite set of tri-tiles, stored in selection order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TileCollection {
    tiles: Vec<TriTile>,
}

impl TileCollection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tiles<I: IntoIterator<Item = TriTile>>(tiles: I) -> Self {
        let mut v: Vec<TriTile> = tiles.into_iter().collect();
        v.sort();
        v.dedup();
        Self { tiles: v }
    }

    /// One tile per square and per dyadic `I` with `|I||omega_1| = 1`
    /// meeting the spatial window.
    pub fn from_squares(omega: &SquareCollection, window: Interval) -> Self {
        let mut tiles = Vec::new();
        for sq in omega {
            let scale = -sq.scale();
            let len = 2f64.powi(scale);
            let k_lo = (window.start / len).floor() as i64;
            let k_hi = (window.end() / len).ceil() as i64;
            for k in k_lo..k_hi {
                let i = DyadicInterval::new(scale, k);
                if i.start() < window.end() && i.end() > window.start {
                    tiles.push(build_tritile(i, *sq).expect("area by construction"));
                }
            }
        }
        Self::from_tiles(tiles)
    }

    pub fn tiles(&self) -> &[TriTile] {
        &self.tiles
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TriTile> {
        self.tiles.iter()
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn contains(&self, t: &TriTile) -> bool {
        self.tiles.binary_search(t).is_ok()
    }

    pub fn index_of(&self, t: &TriTile) -> Option<usize> {
        self.tiles.binary_search(t).ok()
    }

    pub fn filter<F: Fn(&TriTile) -> bool>(&self, pred: F) -> TileCollection {
        TileCollection { tiles: self.tiles.iter().copied().filter(|t| pred(t)).collect() }
    }

    pub fn without(&self, removed: &[TriTile]) -> TileCollection {
        let gone: BTreeSet<TriTile> = removed.iter().copied().collect();
        self.filter(|t| !gone.contains(t))
    }

    /// `Omega(S)`, the squares carried by at least one tile.
    pub fn squares(&self) -> BTreeSet<FrequencySquare> {
        self.tiles.iter().map(|t| t.square).collect()
    }

    pub fn by_square(&self) -> BTreeMap<FrequencySquare, Vec<TriTile>> {
        let mut m: BTreeMap<FrequencySquare, Vec<TriTile>> = BTreeMap::new();
        for t in &self.tiles {
            m.entry(t.square).or_default().push(*t);
        }
        m
    }

    /// Tiles whose spatial interval lies inside `outer`.
    pub fn spatially_within(&self, outer: &DyadicInterval) -> TileCollection {
        self.filter(|t| t.spatial.is_within(outer))
    }

    pub fn max_spatial_len(&self) -> f64 {
        self.tiles.iter().map(|t| t.spatial_len()).fold(0.0, f64::max)
    }
}

impl<'a> IntoIterator for &'a TileCollection {
    type Item = &'a TriTile;
    type IntoIter = std::slice::Iter<'a, TriTile>;
    fn into_iter(self) -> Self::IntoIter {
        self.tiles.iter()
    }
}

/// Axis-parallel box `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

type Indicator = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;
type SquareDistance = Arc<dyn Fn(&FrequencySquare) -> f64 + Send + Sync>;

/// Bounded open subset of the frequency plane.
///
/// Regions built from a bare indicator measure distances to the complement
/// on a lattice at spacing `2^{-n_max - 2}`; the named constructors carry the
/// exact distance.
#[derive(Clone)]
pub struct OpenRegion {
    indicator: Indicator,
    bbox: BoundingBox,
    exact_distance: Option<SquareDistance>,
    label: String,
}

impl fmt::Debug for OpenRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpenRegion").field("label", &self.label).field("bbox", &self.bbox).finish()
    }
}

impl OpenRegion {
    pub fn from_indicator<F>(label: &str, bbox: BoundingBox, indicator: F) -> Self
    where
        F: Fn(f64, f64) -> bool + Send + Sync + 'static,
    {
        Self { indicator: Arc::new(indicator), bbox, exact_distance: None, label: label.to_string() }
    }

    pub fn empty() -> Self {
        Self::from_indicator("empty", BoundingBox { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }, |_, _| false)
    }

    /// Open disc.
    pub fn disc(cx: f64, cy: f64, radius: f64) -> Self {
        let bbox = BoundingBox { x0: cx - radius, x1: cx + radius, y0: cy - radius, y1: cy + radius };
        let r2 = radius * radius;
        let indicator = move |x: f64, y: f64| (x - cx).powi(2) + (y - cy).powi(2) < r2;
        let dist = move |sq: &FrequencySquare| {
            let far = sq
                .corners_and_center()
                .iter()
                .take(4)
                .map(|&(x, y)| ((x - cx).powi(2) + (y - cy).powi(2)).sqrt())
                .fold(0.0, f64::max);
            (radius - far).max(0.0)
        };
        Self {
            indicator: Arc::new(indicator),
            bbox,
            exact_distance: Some(Arc::new(dist)),
            label: format!("disc({cx},{cy},{radius})"),
        }
    }

    /// Open axis-parallel square `(x0, x0 + side) × (y0, y0 + side)`.
    pub fn open_square(x0: f64, y0: f64, side: f64) -> Self {
        let bbox = BoundingBox { x0, x1: x0 + side, y0, y1: y0 + side };
        let indicator = move |x: f64, y: f64| x > x0 && x < x0 + side && y > y0 && y < y0 + side;
        let dist = move |sq: &FrequencySquare| {
            let d = [
                sq.omega1.start() - x0,
                x0 + side - sq.omega1.end(),
                sq.omega2.start() - y0,
                y0 + side - sq.omega2.end(),
            ];
            d.iter().copied().fold(f64::INFINITY, f64::min).max(0.0)
        };
        Self {
            indicator: Arc::new(indicator),
            bbox,
            exact_distance: Some(Arc::new(dist)),
            label: format!("square({x0},{y0},{side})"),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.indicator)(x, y)
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_exact_distance(&self) -> bool {
        self.exact_distance.is_some()
    }

    /// Corner-and-center membership test.
    pub fn contains_square(&self, sq: &FrequencySquare) -> bool {
        sq.corners_and_center().iter().all(|&(x, y)| self.contains(x, y))
    }
}

/// Distance from squares to the complement of a region.
pub struct ComplementDistance {
    exact: Option<SquareDistance>,
    lattice: Option<LatticeDistance>,
}

impl ComplementDistance {
    pub fn new(region: &OpenRegion, n_max: u32) -> Self {
        match &region.exact_distance {
            Some(d) => Self { exact: Some(d.clone()), lattice: None },
            None => Self { exact: None, lattice: Some(LatticeDistance::new(region, n_max)) },
        }
    }

    pub fn of(&self, sq: &FrequencySquare) -> f64 {
        if let Some(d) = &self.exact {
            return d(sq);
        }
        self.lattice.as_ref().expect("one of the two is set").of(sq)
    }
}

/// Euclidean distance transform of the sampled complement.
struct LatticeDistance {
    x0: f64,
    y0: f64,
    h: f64,
    nx: usize,
    ny: usize,
    dist2: Vec<f64>,
}

impl LatticeDistance {
    fn new(region: &OpenRegion, n_max: u32) -> Self {
        let h = 2f64.powi(-(n_max as i32) - 2);
        let b = region.bbox;
        // One lattice layer outside the box is always complement.
        let x0 = (b.x0 / h).floor() * h - h;
        let y0 = (b.y0 / h).floor() * h - h;
        let nx = ((b.x1 - x0) / h).ceil() as usize + 2;
        let ny = ((b.y1 - y0) / h).ceil() as usize + 2;
        let inf = f64::INFINITY;
        let mut grid = vec![inf; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let (x, y) = (x0 + ix as f64 * h, y0 + iy as f64 * h);
                let outside = ix == 0 || iy == 0 || ix == nx - 1 || iy == ny - 1 || !region.contains(x, y);
                if outside {
                    grid[iy * nx + ix] = 0.0;
                }
            }
        }
        // Separable squared-distance transform (lower envelope of parabolas).
        let mut tmp = vec![0.0; nx * ny];
        let mut col = vec![0.0; ny];
        let mut out = vec![0.0; ny.max(nx)];
        for ix in 0..nx {
            for iy in 0..ny {
                col[iy] = grid[iy * nx + ix];
            }
            edt_1d(&col, &mut out[..ny]);
            for iy in 0..ny {
                tmp[iy * nx + ix] = out[iy];
            }
        }
        let mut row = vec![0.0; nx];
        for iy in 0..ny {
            row.copy_from_slice(&tmp[iy * nx..(iy + 1) * nx]);
            edt_1d(&row, &mut out[..nx]);
            grid[iy * nx..(iy + 1) * nx].copy_from_slice(&out[..nx]);
        }
        let dist2 = grid.into_iter().map(|d| d * h * h).collect();
        Self { x0, y0, h, nx, ny, dist2 }
    }

    fn of(&self, sq: &FrequencySquare) -> f64 {
        let ix0 = ((sq.omega1.start() - self.x0) / self.h).ceil().max(0.0) as usize;
        let ix1 = (((sq.omega1.end() - self.x0) / self.h).floor() as usize).min(self.nx - 1);
        let iy0 = ((sq.omega2.start() - self.y0) / self.h).ceil().max(0.0) as usize;
        let iy1 = (((sq.omega2.end() - self.y0) / self.h).floor() as usize).min(self.ny - 1);
        let mut best = f64::INFINITY;
        for iy in iy0..=iy1 {
            for ix in ix0..=ix1 {
                best = best.min(self.dist2[iy * self.nx + ix]);
            }
        }
        if best.is_finite() {
            best.sqrt()
        } else {
            0.0
        }
    }
}

/// Felzenszwalb-Huttenlocher 1-D squared distance transform, unit spacing.
fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = f.iter().position(|x| x.is_finite());
    let Some(first) = first else {
        d.iter_mut().for_each(|x| *x = f64::INFINITY);
        return;
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in (first + 1)..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates everywhere
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Whitney property with the normalization used throughout:
/// `side(omega) <= dist(omega, O^c) <= 4 diam(omega)`.
pub fn satisfies_whitney(sq: &FrequencySquare, dist: f64) -> bool {
    sq.side() <= dist && dist <= 4.0 * sq.diam()
}

/// Quadtree Whitney cover of `region` down to squares of side `2^{-n_max}`.
pub fn whitney_cover(region: &OpenRegion, n_max: i32) -> Result<SquareCollection> {
    if n_max < 0 {
        return Err(Error::InvalidArgument(format!("n_max must be >= 0, got {n_max}")));
    }
    let dist = ComplementDistance::new(region, n_max as u32);
    let b = region.bbox();
    let extent = (b.x1 - b.x0).max(b.y1 - b.y0).max(f64::MIN_POSITIVE);
    let j0 = extent.log2().ceil() as i32;
    let side = 2f64.powi(j0);
    let mut stack = Vec::new();
    let (kx0, kx1) = ((b.x0 / side).floor() as i64, (b.x1 / side).ceil() as i64);
    let (ky0, ky1) = ((b.y0 / side).floor() as i64, (b.y1 / side).ceil() as i64);
    for k1 in kx0..kx1.max(kx0 + 1) {
        for k2 in ky0..ky1.max(ky0 + 1) {
            stack.push(FrequencySquare::from_parts(j0, k1, k2));
        }
    }
    let min_scale = -n_max;
    let mut out = BTreeSet::new();
    while let Some(sq) = stack.pop() {
        let d = dist.of(&sq);
        let inside = d > 0.0 && region.contains_square(&sq);
        if inside && satisfies_whitney(&sq, d) {
            out.insert(sq);
            continue;
        }
        if inside && d > 4.0 * sq.diam() {
            // Only reachable for root squares of a region larger than its box.
            out.insert(sq);
            continue;
        }
        if sq.scale() > min_scale {
            stack.extend(sq.children());
        }
    }
    Ok(SquareCollection { squares: out })
}

/// Shell index `n` with `2^{-n} <= d < 2^{-n+1}`.
pub fn shell_index(d: f64) -> i32 {
    debug_assert!(d > 0.0);
    let mut n = (-d.log2()).ceil() as i32;
    while 2f64.powi(-n) > d {
        n += 1;
    }
    while 2f64.powi(-n + 1) <= d {
        n -= 1;
    }
    n
}

/// Squares of a Whitney cover whose distance to the complement lies in
/// `[2^{-n}, 2^{-n+1})`.
pub fn shell(cover: &SquareCollection, region: &OpenRegion, n: i32) -> SquareCollection {
    let n_max = cover.iter().map(|s| -s.scale()).max().unwrap_or(0).max(0) as u32;
    let dist = ComplementDistance::new(region, n_max);
    shell_with(cover, &dist, n)
}

pub fn shell_with(cover: &SquareCollection, dist: &ComplementDistance, n: i32) -> SquareCollection {
    SquareCollection {
        squares: cover.iter().copied().filter(|sq| shell_index(dist.of(sq)) == n).collect(),
    }
}

/// All shells at once, keyed by `n`.
pub fn shells(cover: &SquareCollection, region: &OpenRegion) -> BTreeMap<i32, SquareCollection> {
    let n_max = cover.iter().map(|s| -s.scale()).max().unwrap_or(0).max(0) as u32;
    let dist = ComplementDistance::new(region, n_max);
    let mut out: BTreeMap<i32, SquareCollection> = BTreeMap::new();
    for sq in cover {
        out.entry(shell_index(dist.of(sq))).or_default().squares.insert(*sq);
    }
    out
}
