//! Brute-force references: direct `O(N^2)` Fourier sums at the grid points,
//! with the bump and the `l^r` aggregation written out again by hand.
//!
//! Transform convention: `fhat(xi_k) = dx sum_n f(x_n) e^{-2 pi i xi_k x_n}`
//! and `f(x) = L^{-1} sum_k fhat(xi_k) e^{2 pi i xi_k x}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::analysis::{Grid, SampledFunction};
use crate::error::{Error, Result};
use crate::geometry::{Component, FrequencySquare, Interval, TileCollection, TriTile};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `e^{2 pi i m x_n / L}` for integer `m`, from a table of `N`-th roots.
struct Phases {
    roots: Vec<Complex64>,
    n: i64,
}

impl Phases {
    fn new(grid: &Grid) -> Self {
        let n = grid.len();
        let roots = (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect();
        Self { roots, n: n as i64 }
    }

    /// `x_n = -L/2 + n L/N`, so the phase is `(-1)^m w^{m n}`.
    fn at(&self, m: i64, idx: usize) -> Complex64 {
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        self.roots[(m * idx as i64).rem_euclid(self.n) as usize] * sign
    }
}

/// Signed frequency indices in bin order.
fn indices(grid: &Grid) -> Vec<i64> {
    let n = grid.len() as i64;
    (0..n).map(|k| if k < n / 2 { k } else { k - n }).collect()
}

pub fn dft(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let ph = Phases::new(grid);
    indices(grid)
        .iter()
        .map(|&m| values.iter().enumerate().map(|(i, v)| v * ph.at(m, i).conj()).sum::<Complex64>() * grid.spacing())
        .collect()
}

/// Synthesis from `(m, coefficient)` pairs; `m` may leave `[-N/2, N/2)`.
pub fn synthesize(grid: &Grid, terms: &[(i64, Complex64)]) -> Vec<Complex64> {
    let ph = Phases::new(grid);
    (0..grid.len())
        .map(|i| terms.iter().map(|&(m, c)| c * ph.at(m, i)).sum::<Complex64>() / grid.period())
        .collect()
}

pub fn idft(grid: &Grid, fhat: &[Complex64]) -> Vec<Complex64> {
    let terms: Vec<(i64, Complex64)> = indices(grid).into_iter().zip(fhat.iter().copied()).filter(|(_, c)| *c != zero()).collect();
    synthesize(grid, &terms)
}

/// `exp(1 - 1/(1 - u^2))` on the (11/10)-dilate of `omega`.
pub fn smooth_cutoff(omega: &Interval, xi: f64) -> f64 {
    let u = (xi - (omega.start + 0.5 * omega.len)) / (0.55 * omega.len);
    if u * u >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

fn multiplier(omega: &Interval, xi: f64, sharp: bool) -> f64 {
    if sharp {
        if xi >= omega.start && xi < omega.start + omega.len {
            1.0
        } else {
            0.0
        }
    } else {
        smooth_cutoff(omega, xi)
    }
}

fn project(grid: &Grid, fhat: &[Complex64], omega: &Interval, sharp: bool) -> Vec<Complex64> {
    let m: Vec<Complex64> = fhat.iter().enumerate().map(|(k, v)| v * multiplier(omega, grid.freq(k), sharp)).collect();
    idft(grid, &m)
}

fn lr(pieces: &[Vec<Complex64>], n: usize, r: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if r.is_infinite() {
                pieces.iter().map(|p| p[i].norm()).fold(0.0, f64::max)
            } else {
                pieces.iter().map(|p| p[i].norm().powf(r)).sum::<f64>().powf(1.0 / r)
            }
        })
        .collect()
}

pub fn t_r(f: &SampledFunction, g: &SampledFunction, omega: &[FrequencySquare], r: f64, sharp: bool) -> Vec<f64> {
    let grid = f.grid;
    let fh = dft(&grid, &f.values);
    let gh = dft(&grid, &g.values);
    let pieces: Vec<Vec<Complex64>> = omega
        .iter()
        .map(|sq| {
            let a = project(&grid, &fh, &sq.omega1.as_interval(), sharp);
            let b = project(&grid, &gh, &sq.omega2.as_interval(), sharp);
            a.iter().zip(&b).map(|(x, y)| x * y).collect()
        })
        .collect();
    lr(&pieces, grid.len(), r)
}

pub fn rf_r(f: &SampledFunction, intervals: &[Interval], r: f64, sharp: bool) -> Vec<f64> {
    let grid = f.grid;
    let fh = dft(&grid, &f.values);
    let pieces: Vec<Vec<Complex64>> = intervals.iter().map(|w| project(&grid, &fh, w, sharp)).collect();
    lr(&pieces, grid.len(), r)
}

/// Pieces `L^{-2} sum_{a <= xi - eta <= b} fhat(xi) ghat(eta) e^{2 pi i (xi + eta) x}`.
pub fn lp(f: &SampledFunction, g: &SampledFunction, intervals: &[Interval], r: f64) -> Vec<f64> {
    let grid = f.grid;
    let fh = dft(&grid, &f.values);
    let gh = dft(&grid, &g.values);
    let ms = indices(&grid);
    let l = grid.period();
    let pieces: Vec<Vec<Complex64>> = intervals
        .iter()
        .map(|w| {
            let mut acc: BTreeMap<i64, Complex64> = BTreeMap::new();
            for (k, &mk) in ms.iter().enumerate() {
                for (j, &mj) in ms.iter().enumerate() {
                    let u = (mk - mj) as f64 / l;
                    if u >= w.start && u <= w.start + w.len {
                        *acc.entry(mk + mj).or_insert(zero()) += fh[k] * gh[j] / l;
                    }
                }
            }
            let terms: Vec<(i64, Complex64)> = acc.into_iter().collect();
            synthesize(&grid, &terms)
        })
        .collect();
    lr(&pieces, grid.len(), r)
}

/// Grid samples of the `L^2`-normalized packet of one tile component.
pub fn packet(grid: &Grid, tile: &TriTile, component: Component) -> Result<Vec<Complex64>> {
    let omega = tile.frequency(component);
    let x_i = tile.spatial.start() + 0.5 * tile.spatial_len();
    let mut terms = Vec::new();
    for (k, m) in indices(grid).into_iter().enumerate() {
        let xi = grid.freq(k);
        let amp = smooth_cutoff(&omega, xi);
        if amp > 0.0 {
            terms.push((m, Complex64::from_polar(amp, -2.0 * PI * xi * x_i)));
        }
    }
    let energy: f64 = terms.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>() / grid.period();
    if !(energy > 0.0) {
        return Err(Error::InvalidArgument(format!("tile {tile} has no bins")));
    }
    let s = 1.0 / energy.sqrt();
    for (_, c) in terms.iter_mut() {
        *c *= s;
    }
    Ok(synthesize(grid, &terms))
}

/// `dx sum f conj(g)`.
pub fn pair(grid: &Grid, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<Complex64>() * grid.spacing()
}

pub fn model(f: &SampledFunction, g: &SampledFunction, tiles: &TileCollection, r: f64) -> Result<Vec<f64>> {
    let grid = f.grid;
    let mut by_square: BTreeMap<FrequencySquare, Vec<Complex64>> = BTreeMap::new();
    for t in tiles.iter() {
        let p1 = packet(&grid, t, Component::First)?;
        let p2 = packet(&grid, t, Component::Second)?;
        let p3 = packet(&grid, t, Component::Third)?;
        let c = pair(&grid, &f.values, &p1) * pair(&grid, &g.values, &p2) / t.spatial_len().sqrt();
        let acc = by_square.entry(t.square).or_insert_with(|| vec![zero(); grid.len()]);
        for (a, v) in acc.iter_mut().zip(&p3) {
            *a += c * v;
        }
    }
    let pieces: Vec<Vec<Complex64>> = by_square.into_values().collect();
    Ok(lr(&pieces, grid.len(), r))
}

/// `max |a - b| / max |b|`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::forward;

    #[test]
    fn dft_matches_unitary_fft_up_to_scale() {
        let grid = Grid::new(64, 8.0).unwrap();
        let f = SampledFunction::from_fn(grid, |x| Complex64::new((x * 0.7).cos(), x.sin() * 0.3));
        let a = dft(&grid, &f.values);
        let b = forward(&grid, &f.values);
        let s = grid.spacing() * (grid.len() as f64).sqrt();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y * s).norm() < 1e-12);
        }
    }

    #[test]
    fn idft_inverts_dft() {
        let grid = Grid::new(32, 4.0).unwrap();
        let f = SampledFunction::from_fn(grid, |x| Complex64::new(x, -x * x));
        let back = idft(&grid, &dft(&grid, &f.values));
        for (x, y) in back.iter().zip(&f.values) {
            assert!((x - y).norm() < 1e-10);
        }
    }
}
