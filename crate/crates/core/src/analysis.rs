//! Periodic grids, spectra, the weight `chi_tilde`, wave packets and the
//! discrete maximal function.
//!
//! Spectrum convention: for a grid of `N` points on `[-L/2, L/2)` the
//! coefficient at index `k` belongs to the frequency `m_k / L` where
//! `m_k = k` for `k < N/2` and `k - N` otherwise, and
//! `f(x_n) = N^{-1/2} sum_k F_k exp(2 pi i m_k x_n / L)`.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{Component, DyadicInterval, Interval, TriTile};

/// Decay exponent of `chi_tilde^M` with `M = 2`.
pub const CHI_EXPONENT: f64 = 20.0;

/// Spectral support factor of the template bump.
pub const SUPPORT_DILATION: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    period: f64,
}

impl Grid {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::GridNotPowerOfTwo(n));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::BadPeriod(period));
        }
        Ok(Self { n, period })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.n as f64 / (2.0 * self.period)
    }

    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.period + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Signed frequency index of bin `k`.
    pub fn freq_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.freq_index(k) as f64 / self.period
    }

    /// Bin holding the signed index `m` (taken modulo `N`).
    pub fn bin(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    /// Bins whose frequency lies in the open interval `(lo, hi)`.
    pub fn bins_in_open(&self, lo: f64, hi: f64) -> Vec<usize> {
        let m_lo = (lo * self.period).floor() as i64;
        let m_hi = (hi * self.period).ceil() as i64;
        let half = (self.n / 2) as i64;
        (m_lo.max(-half)..=m_hi.min(half - 1))
            .filter(|&m| {
                let xi = m as f64 / self.period;
                xi > lo && xi < hi
            })
            .map(|m| self.bin(m))
            .collect()
    }

    /// Bins whose frequency lies in `[lo, hi)`.
    pub fn bins_in_half_open(&self, lo: f64, hi: f64) -> Vec<usize> {
        let m_lo = (lo * self.period).floor() as i64;
        let m_hi = (hi * self.period).ceil() as i64;
        let half = (self.n / 2) as i64;
        (m_lo.max(-half)..=m_hi.min(half - 1))
            .filter(|&m| {
                let xi = m as f64 / self.period;
                xi >= lo && xi < hi
            })
            .map(|m| self.bin(m))
            .collect()
    }

    pub fn check_band(&self, lo: f64, hi: f64, context: &str) -> Result<()> {
        let nyq = self.nyquist();
        if lo < -nyq || hi > nyq {
            return Err(Error::Nyquist { lo, hi, nyquist: nyq, context: context.to_string() });
        }
        Ok(())
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                n_a: self.n,
                period_a: self.period,
                n_b: other.n,
                period_b: other.period,
            });
        }
        Ok(())
    }

    /// Periodic distance from `x` to the interval.
    pub fn periodic_dist(&self, interval: &Interval, x: f64) -> f64 {
        if interval.len >= self.period {
            return 0.0;
        }
        let y = (x - interval.center() + 0.5 * self.period).rem_euclid(self.period) - 0.5 * self.period;
        (y.abs() - 0.5 * interval.len).max(0.0)
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().expect("fft planner poisoned");
    if forward {
        p.plan_fft_forward(n)
    } else {
        p.plan_fft_inverse(n)
    }
}

fn sign(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Unitary spectrum of grid samples.
pub fn forward(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    plan(grid.len(), true).process(&mut buf);
    let s = 1.0 / (grid.len() as f64).sqrt();
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= s * sign(grid.freq_index(k));
    }
    buf
}

/// Grid samples from a unitary spectrum.
pub fn inverse(grid: &Grid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let s = 1.0 / (grid.len() as f64).sqrt();
    let mut buf: Vec<Complex64> =
        spectrum.iter().enumerate().map(|(k, v)| v * (s * sign(grid.freq_index(k)))).collect();
    plan(grid.len(), false).process(&mut buf);
    buf
}

/// Complex samples on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid, f: F) -> Self {
        Self { grid, values: (0..grid.len()).map(|i| f(grid.x(i))).collect() }
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Self {
        Self { grid, values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn from_spectrum(grid: Grid, spectrum: &[Complex64]) -> Self {
        Self { grid, values: inverse(&grid, spectrum) }
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        forward(&self.grid, &self.values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_lp(2.0)
    }

    /// `(dx sum |f|^p)^{1/p}`; `p = inf` gives the max.
    pub fn norm_lp(&self, p: f64) -> f64 {
        lp_norm(&self.grid, &self.abs(), p)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &SampledFunction) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    pub fn mul(&self, other: &SampledFunction) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect() })
    }

    pub fn mul_real(&self, w: &[f64]) -> Self {
        Self { grid: self.grid, values: self.values.iter().zip(w).map(|(a, b)| a * b).collect() }
    }

    /// Header `N` (u64 LE), `L` (f64 LE), then interleaved `re, im` f64 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.values.len());
        out.extend_from_slice(&(self.grid.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.grid.period().to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let short = || Error::Parse { line: 0, msg: "truncated sampled-function record".into() };
        let word = |i: usize| -> Result<[u8; 8]> {
            bytes.get(i..i + 8).and_then(|s| s.try_into().ok()).ok_or_else(short)
        };
        let n = u64::from_le_bytes(word(0)?) as usize;
        let period = f64::from_le_bytes(word(8)?);
        let grid = Grid::new(n, period)?;
        if bytes.len() != 16 + 16 * n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} bytes, got {}", 16 + 16 * n, bytes.len()),
            });
        }
        let values = (0..n)
            .map(|i| {
                let re = f64::from_le_bytes(word(16 + 16 * i)?);
                let im = f64::from_le_bytes(word(24 + 16 * i)?);
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }
}

pub fn lp_norm(grid: &Grid, abs: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return abs.iter().copied().fold(0.0, f64::max);
    }
    let s: f64 = abs.iter().map(|v| v.powf(p)).sum::<f64>() * grid.spacing();
    s.powf(1.0 / p)
}

/// `<f, g> = dx sum f conj(g)`.
pub fn inner_product(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    f.grid.same_as(&g.grid)?;
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    Ok(s * f.grid.spacing())
}

/// Same pairing evaluated from spectra.
pub fn inner_product_spectral(grid: &Grid, fs: &[Complex64], gs: &[Complex64]) -> Complex64 {
    let s: Complex64 = fs.iter().zip(gs).map(|(a, b)| a * b.conj()).sum();
    s * grid.spacing()
}

/// `(1 + dist(x, I)/|I|)^{-exponent}`.
pub fn chi_tilde(interval: &Interval, x: f64, exponent: i32) -> f64 {
    assert!(interval.len > 0.0, "chi_tilde needs |I| > 0");
    (1.0 + interval.dist(x) / interval.len).powi(-exponent)
}

/// `chi_tilde` sampled on the grid with periodic distance.
pub fn chi_tilde_grid(grid: &Grid, interval: &Interval, exponent: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| (1.0 + grid.periodic_dist(interval, grid.x(i)) / interval.len).powf(-exponent))
        .collect()
}

/// `exp(-1/(1-u^2))` on `|u| < 1`.
pub fn template_bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Template bump rescaled to peak value 1, dilated to `omega`.
pub fn cutoff(omega: &Interval, xi: f64) -> f64 {
    let u = (xi - omega.center()) / (0.5 * SUPPORT_DILATION * omega.len);
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// L^2-normalized wave packet stored as a sparse spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    pub grid: Grid,
    pub tile: TriTile,
    pub component: Component,
    pub coeffs: Vec<(usize, Complex64)>,
}

pub fn make_wave_packet(grid: &Grid, tile: &TriTile, component: Component) -> Result<WavePacket> {
    let omega = tile.frequency(component);
    let half = 0.5 * SUPPORT_DILATION * omega.len;
    let (lo, hi) = (omega.center() - half, omega.center() + half);
    grid.check_band(lo, hi, &format!("tile {tile} component {component:?}"))?;
    if tile.spatial_len() < 4.0 * grid.spacing() {
        return Err(Error::SpatialResolution {
            len: tile.spatial_len(),
            spacing: grid.spacing(),
            context: format!("tile {tile}"),
        });
    }
    let x_i = tile.spatial.center();
    let mut coeffs: Vec<(usize, Complex64)> = grid
        .bins_in_open(lo, hi)
        .into_iter()
        .map(|k| {
            let xi = grid.freq(k);
            let amp = template_bump((xi - omega.center()) / half);
            (k, Complex64::from_polar(amp, -2.0 * std::f64::consts::PI * xi * x_i))
        })
        .filter(|(_, c)| c.norm() > 0.0)
        .collect();
    let energy: f64 = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>() * grid.spacing();
    if energy <= 0.0 {
        return Err(Error::Nyquist {
            lo,
            hi,
            nyquist: grid.nyquist(),
            context: format!("tile {tile}: no frequency bins inside the support"),
        });
    }
    let norm = 1.0 / energy.sqrt();
    for (_, c) in coeffs.iter_mut() {
        *c *= norm;
    }
    Ok(WavePacket { grid: *grid, tile: *tile, component, coeffs })
}

impl WavePacket {
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for &(k, c) in &self.coeffs {
            s[k] = c;
        }
        s
    }

    pub fn sampled(&self) -> SampledFunction {
        SampledFunction::from_spectrum(self.grid, &self.spectrum())
    }

    /// `<f, phi>` from the spectrum of `f`.
    pub fn pair(&self, f_spectrum: &[Complex64]) -> Complex64 {
        let s: Complex64 = self.coeffs.iter().map(|&(k, c)| f_spectrum[k] * c.conj()).sum();
        s * self.grid.spacing()
    }

    pub fn support_bins(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().map(|&(k, _)| k)
    }
}

/// Uncentered maximal function over dyadic windows of every length and
/// every unit translate, periodically.
pub fn maximal_function(f: &SampledFunction) -> SampledFunction {
    let m = maximal_of_abs(&f.abs());
    SampledFunction::from_real(f.grid, m)
}

/// Maximal function of a nonnegative sequence.
pub fn maximal_of_abs(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut best = u.to_vec();
    let mut sums = u.to_vec();
    let mut next = vec![0.0; n];
    let mut w = 1usize;
    while w < n {
        for i in 0..n {
            next[i] = sums[i] + sums[(i + w) % n];
        }
        std::mem::swap(&mut sums, &mut next);
        w *= 2;
        let inv = 1.0 / w as f64;
        let level = sliding_max(&sums, w);
        for (b, s) in best.iter_mut().zip(level) {
            *b = b.max(s * inv);
        }
    }
    best
}

/// `out[j] = max_{i in [j-w+1, j]} a[i mod n]`.
fn sliding_max(a: &[f64], w: usize) -> Vec<f64> {
    let n = a.len();
    if w >= n {
        let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return vec![m; n];
    }
    let mut out = vec![0.0; n];
    let mut dq: VecDeque<(i64, f64)> = VecDeque::new();
    for t in -(w as i64 - 1)..(n as i64) {
        let v = a[t.rem_euclid(n as i64) as usize];
        while dq.back().is_some_and(|&(_, b)| b <= v) {
            dq.pop_back();
        }
        dq.push_back((t, v));
        while dq.front().is_some_and(|&(s, _)| s < t - w as i64 + 1) {
            dq.pop_front();
        }
        if t >= 0 {
            out[t as usize] = dq.front().expect("window nonempty").1;
        }
    }
    out
}

/// Grid cells whose sample point lies in `I`, taken periodically.
pub fn cells_in(grid: &Grid, interval: &DyadicInterval) -> Vec<usize> {
    let dx = grid.spacing();
    let start = ((interval.start() + 0.5 * grid.period()) / dx).ceil() as i64;
    let end = ((interval.end() + 0.5 * grid.period()) / dx).ceil() as i64;
    let count = (end - start).min(grid.len() as i64).max(0);
    (0..count).map(|i| (start + i).rem_euclid(grid.len() as i64) as usize).collect()
}
