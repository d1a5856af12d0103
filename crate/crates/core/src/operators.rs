//! The continuous square functions, the model operator and the trilinear
//! form.
//!
//! Pairing convention: `<f, g> = int f conj(g)`. The trilinear form uses
//! `<phi_{s_3}, h_s> = conj(<h_s, phi_{s_3}>)` in its third slot, so it is
//! conjugate-linear in `h` and `Lambda = sum_omega int piece_omega conj(h_omega)`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::{cutoff, inverse, make_wave_packet, Grid, SampledFunction, WavePacket, SUPPORT_DILATION};
use crate::error::{Error, Result};
use crate::geometry::{Component, FrequencySquare, Interval, SquareCollection, TileCollection, TriTile};

/// `p, q, s, r` with `1/p + 1/q = 1/s`; infinite values are allowed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExponentTuple {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub r: f64,
}

/// Hölder conjugate, `1/x + 1/x' = 1`.
pub fn conjugate(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else if x == 1.0 {
        f64::INFINITY
    } else {
        x / (x - 1.0)
    }
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

impl ExponentTuple {
    pub fn new(p: f64, q: f64, r: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q), ("r", r)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be >= 1")));
            }
        }
        let inv_s = recip(p) + recip(q);
        let s = if inv_s == 0.0 { f64::INFINITY } else { 1.0 / inv_s };
        Ok(Self { p, q, s, r })
    }

    pub fn r_prime(&self) -> f64 {
        conjugate(self.r)
    }

    /// `1/s' = 1 - 1/s`; negative when `s < 1`.
    pub fn s_prime(&self) -> f64 {
        let inv = 1.0 - recip(self.s);
        if inv == 0.0 {
            f64::INFINITY
        } else {
            1.0 / inv
        }
    }

    pub fn holder_defect(&self) -> f64 {
        (recip(self.p) + recip(self.q) - recip(self.s)).abs()
    }
}

/// `{h_omega}` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceH {
    pub grid: Grid,
    entries: BTreeMap<FrequencySquare, SampledFunction>,
}

impl SequenceH {
    pub fn new(grid: Grid) -> Self {
        Self { grid, entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, omega: FrequencySquare, h: SampledFunction) -> Result<()> {
        self.grid.same_as(&h.grid)?;
        self.entries.insert(omega, h);
        Ok(())
    }

    pub fn get(&self, omega: &FrequencySquare) -> Option<&SampledFunction> {
        self.entries.get(omega)
    }

    pub fn try_get(&self, omega: &FrequencySquare) -> Result<&SampledFunction> {
        self.entries.get(omega).ok_or_else(|| Error::MissingH(omega.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FrequencySquare, &SampledFunction)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pointwise `(sum_omega |h_omega|^{r'})^{1/r'}`.
    pub fn aggregate(&self, r_prime: f64) -> Vec<f64> {
        let pieces: Vec<Vec<f64>> = self.entries.values().map(|h| h.abs()).collect();
        aggregate_lr(self.grid.len(), &pieces, r_prime)
    }
}

/// Pointwise `l^r` norm across pieces, summed in piece order.
pub fn aggregate_lr(n: usize, pieces: &[Vec<f64>], r: f64) -> Vec<f64> {
    let mut out = vec![0.0f64; n];
    if r.is_infinite() {
        for p in pieces {
            for (o, v) in out.iter_mut().zip(p) {
                *o = o.max(*v);
            }
        }
        return out;
    }
    for p in pieces {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v.powf(r);
        }
    }
    for o in out.iter_mut() {
        *o = o.powf(1.0 / r);
    }
    out
}

fn check_r(r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 {
        return Err(Error::InvalidArgument(format!("r = {r} must be >= 1 or infinite")));
    }
    Ok(())
}

/// Sparse Fourier multiplier for one interval: peak-normalized bump on the
/// (11/10)-dilate, or the indicator of `[a, b)`.
pub fn band_multiplier(grid: &Grid, omega: &Interval, sharp: bool) -> Result<Vec<(usize, f64)>> {
    if sharp {
        grid.check_band(omega.start, omega.end(), &format!("interval [{}, {})", omega.start, omega.end()))?;
        Ok(grid.bins_in_half_open(omega.start, omega.end()).into_iter().map(|k| (k, 1.0)).collect())
    } else {
        let d = omega.dilate(SUPPORT_DILATION);
        grid.check_band(d.start, d.end(), &format!("interval [{}, {})", omega.start, omega.end()))?;
        Ok(grid
            .bins_in_open(d.start, d.end())
            .into_iter()
            .map(|k| (k, cutoff(omega, grid.freq(k))))
            .filter(|&(_, v)| v > 0.0)
            .collect())
    }
}

/// Applies a sparse multiplier to a spectrum and returns grid samples.
pub fn apply_multiplier(grid: &Grid, spectrum: &[Complex64], mult: &[(usize, f64)]) -> Vec<Complex64> {
    let mut s = vec![Complex64::new(0.0, 0.0); grid.len()];
    for &(k, m) in mult {
        s[k] = spectrum[k] * m;
    }
    inverse(grid, &s)
}

/// Per-square bilinear pieces `(Phi_omega-restricted f)(Phi_omega-restricted g)`.
pub fn t_r_pieces(
    f: &SampledFunction,
    g: &SampledFunction,
    omega: &[FrequencySquare],
    sharp: bool,
) -> Result<Vec<Vec<Complex64>>> {
    f.grid.same_as(&g.grid)?;
    let grid = f.grid;
    let mults = omega
        .iter()
        .map(|sq| {
            Ok((
                band_multiplier(&grid, &sq.omega1.as_interval(), sharp)?,
                band_multiplier(&grid, &sq.omega2.as_interval(), sharp)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let fs = f.spectrum();
    let gs = g.spectrum();
    Ok(mults
        .par_iter()
        .map(|(m1, m2)| {
            let a = apply_multiplier(&grid, &fs, m1);
            let b = apply_multiplier(&grid, &gs, m2);
            a.iter().zip(&b).map(|(x, y)| x * y).collect()
        })
        .collect())
}

pub fn eval_t_r(
    f: &SampledFunction,
    g: &SampledFunction,
    omega: &SquareCollection,
    r: f64,
    sharp: bool,
) -> Result<SampledFunction> {
    check_r(r)?;
    let squares: Vec<FrequencySquare> = omega.iter().copied().collect();
    let pieces = t_r_pieces(f, g, &squares, sharp)?;
    let abs: Vec<Vec<f64>> = pieces.iter().map(|p| p.iter().map(|v| v.norm()).collect()).collect();
    Ok(SampledFunction::from_real(f.grid, aggregate_lr(f.grid.len(), &abs, r)))
}

pub fn check_disjoint(intervals: &[Interval]) -> Result<()> {
    let mut v: Vec<&Interval> = intervals.iter().collect();
    v.sort_by(|a, b| a.start.total_cmp(&b.start));
    for w in v.windows(2) {
        if w[0].overlaps(w[1]) {
            return Err(Error::Overlap(w[0].start, w[0].end(), w[1].start, w[1].end()));
        }
    }
    Ok(())
}

pub fn eval_rf_r(f: &SampledFunction, intervals: &[Interval], r: f64, sharp: bool) -> Result<SampledFunction> {
    check_r(r)?;
    check_disjoint(intervals)?;
    let grid = f.grid;
    let mults = intervals.iter().map(|i| band_multiplier(&grid, i, sharp)).collect::<Result<Vec<_>>>()?;
    let fs = f.spectrum();
    let abs: Vec<Vec<f64>> = mults
        .par_iter()
        .map(|m| apply_multiplier(&grid, &fs, m).iter().map(|v| v.norm()).collect())
        .collect();
    Ok(SampledFunction::from_real(grid, aggregate_lr(grid.len(), &abs, r)))
}

/// Pieces with multiplier `1_{[a, b]}(xi - eta)`, one spectrum per interval.
pub fn lp_pieces(f: &SampledFunction, g: &SampledFunction, intervals: &[Interval]) -> Result<Vec<Vec<Complex64>>> {
    f.grid.same_as(&g.grid)?;
    check_disjoint(intervals)?;
    let grid = f.grid;
    let fs = f.spectrum();
    let gs = g.spectrum();
    let n = grid.len();
    let half = (n / 2) as i64;
    let scale = 1.0 / (n as f64).sqrt();
    let l = grid.period();
    Ok(intervals
        .par_iter()
        .map(|iv| {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for k in 0..n {
                if fs[k] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mk = grid.freq_index(k);
                // a <= (mk - ml)/L <= b
                let ml_lo = (mk as f64 - iv.end() * l).ceil() as i64;
                let ml_hi = (mk as f64 - iv.start * l).floor() as i64;
                for ml in ml_lo.max(-half)..=ml_hi.min(half - 1) {
                    let u = (mk - ml) as f64 / l;
                    if u < iv.start || u > iv.end() {
                        continue;
                    }
                    let gl = gs[grid.bin(ml)];
                    out[grid.bin(mk + ml)] += fs[k] * gl * scale;
                }
            }
            inverse(&grid, &out)
        })
        .collect())
}

pub fn eval_lp(f: &SampledFunction, g: &SampledFunction, intervals: &[Interval], r: f64) -> Result<SampledFunction> {
    check_r(r)?;
    let pieces = lp_pieces(f, g, intervals)?;
    let abs: Vec<Vec<f64>> = pieces.iter().map(|p| p.iter().map(|v| v.norm()).collect()).collect();
    Ok(SampledFunction::from_real(f.grid, aggregate_lr(f.grid.len(), &abs, r)))
}

/// The three wave packets of a tile.
pub fn tile_packets(grid: &Grid, tile: &TriTile) -> Result<[WavePacket; 3]> {
    Ok([
        make_wave_packet(grid, tile, Component::First)?,
        make_wave_packet(grid, tile, Component::Second)?,
        make_wave_packet(grid, tile, Component::Third)?,
    ])
}

/// Inner products of one tile with `f`, `g` and `h_{omega_s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TilePairing {
    pub f: Complex64,
    pub g: Complex64,
    pub h: Complex64,
}

impl TilePairing {
    /// `|I_s|^{-1/2} <f, phi_1> <g, phi_2> <phi_3, h_s>`.
    pub fn term(&self, tile: &TriTile) -> Complex64 {
        self.f * self.g * self.h.conj() / tile.spatial_len().sqrt()
    }
}

/// Per-tile pairing table computed once and looked up for sub-collections.
#[derive(Debug, Clone, Default)]
pub struct Pairings {
    map: HashMap<TriTile, TilePairing>,
    has_h: bool,
}

impl Pairings {
    pub fn compute(
        grid: &Grid,
        tiles: &TileCollection,
        f: &SampledFunction,
        g: &SampledFunction,
        h: Option<&SequenceH>,
    ) -> Result<Self> {
        grid.same_as(&f.grid)?;
        grid.same_as(&g.grid)?;
        let fs = f.spectrum();
        let gs = g.spectrum();
        let mut h_spectra: HashMap<FrequencySquare, Vec<Complex64>> = HashMap::new();
        if let Some(h) = h {
            grid.same_as(&h.grid)?;
            for sq in tiles.squares() {
                h_spectra.insert(sq, h.try_get(&sq)?.spectrum());
            }
        }
        let entries = tiles
            .tiles()
            .par_iter()
            .map(|t| {
                let [p1, p2, p3] = tile_packets(grid, t)?;
                let hv = match h_spectra.get(&t.square) {
                    Some(hs) => p3.pair(hs),
                    None => Complex64::new(0.0, 0.0),
                };
                Ok((*t, TilePairing { f: p1.pair(&fs), g: p2.pair(&gs), h: hv }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { map: entries.into_iter().collect(), has_h: h.is_some() })
    }

    pub fn get(&self, t: &TriTile) -> &TilePairing {
        self.map.get(t).unwrap_or_else(|| panic!("no pairing for tile {t}"))
    }

    pub fn has_h(&self) -> bool {
        self.has_h
    }

    /// `Lambda` over the given tiles, summed in selection order.
    pub fn lambda<'a, I: IntoIterator<Item = &'a TriTile>>(&self, tiles: I) -> Complex64 {
        let mut v: Vec<&TriTile> = tiles.into_iter().collect();
        v.sort();
        v.into_iter().map(|t| self.get(t).term(t)).sum()
    }
}

/// Model-operator inner sums, one per square in `Omega(S)`.
pub fn model_pieces(
    f: &SampledFunction,
    g: &SampledFunction,
    tiles: &TileCollection,
) -> Result<Vec<(FrequencySquare, SampledFunction)>> {
    f.grid.same_as(&g.grid)?;
    let grid = f.grid;
    let pairings = Pairings::compute(&grid, tiles, f, g, None)?;
    let groups: Vec<(FrequencySquare, Vec<TriTile>)> = tiles.by_square().into_iter().collect();
    groups
        .par_iter()
        .map(|(sq, ts)| {
            let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
            for t in ts {
                let p = pairings.get(t);
                let c = p.f * p.g / t.spatial_len().sqrt();
                let phi3 = make_wave_packet(&grid, t, Component::Third)?;
                for &(k, v) in &phi3.coeffs {
                    spec[k] += c * v;
                }
            }
            Ok((*sq, SampledFunction::from_spectrum(grid, &spec)))
        })
        .collect()
}

pub fn eval_model(f: &SampledFunction, g: &SampledFunction, tiles: &TileCollection, r: f64) -> Result<SampledFunction> {
    check_r(r)?;
    let pieces = model_pieces(f, g, tiles)?;
    let abs: Vec<Vec<f64>> = pieces.iter().map(|(_, p)| p.abs()).collect();
    Ok(SampledFunction::from_real(f.grid, aggregate_lr(f.grid.len(), &abs, r)))
}

pub fn trilinear_form(
    f: &SampledFunction,
    g: &SampledFunction,
    h: &SequenceH,
    tiles: &TileCollection,
) -> Result<Complex64> {
    let pairings = Pairings::compute(&f.grid, tiles, f, g, Some(h))?;
    Ok(pairings.lambda(tiles.iter()))
}
