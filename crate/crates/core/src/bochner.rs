//! Symbols on rough planar domains built from a Whitney cover, and the
//! `l^r` domination of the resulting bilinear multiplier.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::{cutoff, SampledFunction, SUPPORT_DILATION};
use crate::error::{Error, Result};
use crate::geometry::{shells, FrequencySquare, OpenRegion, SquareCollection};
use crate::operators::{aggregate_lr, conjugate, t_r_pieces};

/// Dimension of the frequency variable; the plane case.
pub const DIMENSION: u32 = 1;

fn check_params(r: f64, eps: f64) -> Result<()> {
    if !(r > 2.0) {
        return Err(Error::InvalidArgument(format!("symbol weights need r > 2, got {r}")));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

/// `t^{(2d-1)/r'} (1 + ln t)^{-(1/r' + eps)}`. For `t < 1/e` the
/// log factor is negative and only integer powers of it are defined.
pub fn phi_weight(t: f64, r: f64, eps: f64, d: u32) -> Result<f64> {
    check_params(r, eps)?;
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("phi needs t > 0, got {t}")));
    }
    let rp = conjugate(r);
    let a = (2 * d - 1) as f64 / rp;
    let b = -(1.0 / rp + eps);
    let base = 1.0 + t.ln();
    if base == 0.0 || (base < 0.0 && b.fract() != 0.0) {
        return Err(Error::InvalidArgument(format!("(1 + ln {t})^{b} is not a real number")));
    }
    Ok(t.powf(a) * base.powf(b))
}

/// Shells with `n <= 0` are merged into `n = 1`.
pub fn effective_shell(n: i32) -> i32 {
    n.max(1)
}

/// `2^{-n(2d-1)/r'} n^{-(1/r'+eps)}`.
pub fn shell_weight(n: i32, r: f64, eps: f64, d: u32) -> f64 {
    let rp = conjugate(r);
    let n = effective_shell(n) as f64;
    2f64.powf(-n * (2 * d - 1) as f64 / rp) * n.powf(-(1.0 / rp + eps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolPiece {
    pub square: FrequencySquare,
    pub shell: i32,
    pub coefficient: f64,
    /// Largest `|m|` seen on the square's sample lattice.
    pub sup: f64,
}

/// `m = sum_n shell_weight(n) sum_{omega in Omega_n} b_omega` with `b_omega`
/// the peak-normalized tensor bump on the (11/10)-dilate of `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughSymbol {
    pub label: String,
    pub cover: SquareCollection,
    pub r: f64,
    pub eps: f64,
    pub d: u32,
    pub pieces: Vec<SymbolPiece>,
}

/// `b_omega(xi, eta)`.
pub fn tensor_bump(sq: &FrequencySquare, xi: f64, eta: f64) -> f64 {
    cutoff(&sq.omega1.as_interval(), xi) * cutoff(&sq.omega2.as_interval(), eta)
}

const SUP_LATTICE: usize = 9;

pub fn build_symbol(region: &OpenRegion, cover: &SquareCollection, r: f64, eps: f64, d: u32) -> Result<RoughSymbol> {
    check_params(r, eps)?;
    if cover.is_empty() {
        return Err(Error::InvalidArgument("symbol needs a nonempty cover".into()));
    }
    let mut pieces = Vec::new();
    for (n, sqs) in shells(cover, region) {
        for sq in sqs.iter() {
            pieces.push(SymbolPiece { square: *sq, shell: n, coefficient: shell_weight(n, r, eps, d), sup: 0.0 });
        }
    }
    pieces.sort_by(|a, b| a.square.cmp(&b.square));
    let mut sym = RoughSymbol { label: region.label().to_string(), cover: cover.clone(), r, eps, d, pieces };
    let sups: Vec<f64> = sym.pieces.iter().map(|p| sym.sup_on(&p.square)).collect();
    for (p, s) in sym.pieces.iter_mut().zip(sups) {
        p.sup = s;
    }
    Ok(sym)
}

impl RoughSymbol {
    pub fn squares(&self) -> Vec<FrequencySquare> {
        self.pieces.iter().map(|p| p.square).collect()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.pieces.iter().map(|p| p.coefficient).collect()
    }

    /// Value of one piece `coefficient * b_omega` at `(xi, eta)`.
    pub fn piece_value(&self, i: usize, xi: f64, eta: f64) -> f64 {
        let p = &self.pieces[i];
        p.coefficient * tensor_bump(&p.square, xi, eta)
    }

    pub fn eval(&self, xi: f64, eta: f64) -> f64 {
        (0..self.pieces.len()).map(|i| self.piece_value(i, xi, eta)).sum()
    }

    /// Whether `(xi, eta)` lies in the support of piece `i`.
    pub fn in_support(&self, i: usize, xi: f64, eta: f64) -> bool {
        let sq = &self.pieces[i].square;
        let a = sq.omega1.as_interval().dilate(SUPPORT_DILATION);
        let b = sq.omega2.as_interval().dilate(SUPPORT_DILATION);
        a.start < xi && xi < a.end() && b.start < eta && eta < b.end()
    }

    fn sup_on(&self, sq: &FrequencySquare) -> f64 {
        let mut best: f64 = 0.0;
        let s = sq.side();
        for a in 0..SUP_LATTICE {
            for b in 0..SUP_LATTICE {
                let xi = sq.omega1.start() + s * (a as f64 + 0.5) / SUP_LATTICE as f64;
                let eta = sq.omega2.start() + s * (b as f64 + 0.5) / SUP_LATTICE as f64;
                best = best.max(self.eval(xi, eta).abs());
            }
        }
        best
    }

    /// Per-shell sup of `|m|` over the shell's squares.
    pub fn shell_sups(&self) -> BTreeMap<i32, f64> {
        let mut out: BTreeMap<i32, f64> = BTreeMap::new();
        for p in &self.pieces {
            let e = out.entry(p.shell).or_insert(0.0);
            *e = e.max(p.sup);
        }
        out
    }

    /// `max_omega sup|m| / shell_weight(n)`: the order-zero constant.
    pub fn order_zero_constant(&self) -> f64 {
        self.pieces.iter().map(|p| p.sup / p.coefficient).fold(0.0, f64::max)
    }

    pub fn shell_counts(&self) -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        for p in &self.pieces {
            *out.entry(p.shell).or_insert(0) += 1;
        }
        out
    }

    /// `j k1 k2 coefficient` per square.
    pub fn to_text(&self) -> String {
        let mut out = format!("# symbol {} r={} eps={} d={}\n", self.label, self.r, self.eps, self.d);
        for p in &self.pieces {
            let _ = writeln!(out, "{} {} {} {:e}", p.square.scale(), p.square.omega1.pos, p.square.omega2.pos, p.coefficient);
        }
        out
    }

    /// Histogram `n,count,weight` of the shells.
    pub fn shell_csv(&self) -> String {
        let mut out = String::from("n,count,weight\n");
        for (n, c) in self.shell_counts() {
            let _ = writeln!(out, "{n},{c},{:e}", shell_weight(n, self.r, self.eps, self.d));
        }
        out
    }
}

/// `(sum_n 2^{-n(2d-1)} n^{-1-r' eps} #Omega_n)^{1/r'}` from shell counts.
pub fn shell_factor_from_counts(counts: &BTreeMap<i32, usize>, r: f64, eps: f64, d: u32) -> Result<f64> {
    check_params(r, eps)?;
    let rp = conjugate(r);
    let mut merged: BTreeMap<i32, usize> = BTreeMap::new();
    for (n, c) in counts {
        *merged.entry(effective_shell(*n)).or_insert(0) += c;
    }
    let total: f64 = merged
        .iter()
        .map(|(&n, &c)| {
            let n = n as f64;
            2f64.powf(-n * (2 * d - 1) as f64) * n.powf(-1.0 - rp * eps) * c as f64
        })
        .sum();
    let v = total.powf(1.0 / rp);
    if !v.is_finite() {
        return Err(Error::InvalidArgument("shell factor is not finite".into()));
    }
    Ok(v)
}

pub fn shell_counts(cover: &SquareCollection, region: &OpenRegion) -> BTreeMap<i32, usize> {
    shells(cover, region).into_iter().map(|(n, s)| (n, s.len())).collect()
}

pub fn shell_factor(cover: &SquareCollection, region: &OpenRegion, r: f64, eps: f64, d: u32) -> Result<f64> {
    shell_factor_from_counts(&shell_counts(cover, region), r, eps, d)
}

/// Partial sums of the shell series and a tail estimate beyond the last
/// shell, assuming `#Omega_n <= C 2^{n(2d-1)}` with `C` the largest observed
/// ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellSeries {
    pub partial_sums: Vec<(i32, f64)>,
    pub count_constant: f64,
    pub tail: f64,
}

impl ShellSeries {
    pub fn total(&self) -> f64 {
        self.partial_sums.last().map(|p| p.1).unwrap_or(0.0) + self.tail
    }

    pub fn tail_fraction(&self) -> f64 {
        let t = self.total();
        if t > 0.0 {
            self.tail / t
        } else {
            0.0
        }
    }
}

pub fn shell_series(counts: &BTreeMap<i32, usize>, r: f64, eps: f64, d: u32, n_max: i32) -> Result<ShellSeries> {
    check_params(r, eps)?;
    let rp = conjugate(r);
    let s = 1.0 + rp * eps;
    let dim = (2 * d - 1) as f64;
    let mut merged: BTreeMap<i32, usize> = BTreeMap::new();
    for (n, c) in counts {
        if *n <= n_max {
            *merged.entry(effective_shell(*n)).or_insert(0) += c;
        }
    }
    let mut acc = 0.0;
    let mut partial = Vec::new();
    let mut cmax: f64 = 0.0;
    for (&n, &c) in &merged {
        let nf = n as f64;
        acc += 2f64.powf(-nf * dim) * nf.powf(-s) * c as f64;
        partial.push((n, acc));
        cmax = cmax.max(c as f64 / 2f64.powf(nf * dim));
    }
    // sum_{n > n_max} n^{-s}: explicit terms then the integral remainder
    let start = n_max.max(0) as f64 + 1.0;
    let cut = start + 100_000.0;
    let mut tail = 0.0;
    let mut k = start;
    while k < cut {
        tail += k.powf(-s);
        k += 1.0;
    }
    tail += cut.powf(1.0 - s) / (s - 1.0);
    Ok(ShellSeries { partial_sums: partial, count_constant: cmax, tail: cmax * tail })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Pointwise sides of `|T_m(f,g)| <= (sum |T_omega(f,g)|^r)^{1/r} * factor`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domination {
    pub lhs: SampledFunction,
    pub rhs: SampledFunction,
    pub factor: f64,
}

impl Domination {
    /// Largest `lhs - rhs` over the grid.
    pub fn worst_excess(&self) -> f64 {
        self.lhs.values.iter().zip(&self.rhs.values).map(|(a, b)| a.re - b.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub const DOMINATION_TOL: f64 = 1e-8;

pub fn lr_domination(f: &SampledFunction, g: &SampledFunction, symbol: &RoughSymbol, r: f64) -> Result<Domination> {
    let grid = f.grid;
    let pieces = t_r_pieces(f, g, &symbol.squares(), false)?;
    let coefs = symbol.coefficients();
    let mut total = vec![num_complex::Complex64::new(0.0, 0.0); grid.len()];
    for (p, c) in pieces.iter().zip(&coefs) {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v * *c;
        }
    }
    let lhs: Vec<f64> = total.iter().map(|v| v.norm()).collect();
    let abs: Vec<Vec<f64>> = pieces.iter().map(|p| p.iter().map(|v| v.norm()).collect()).collect();
    let agg = aggregate_lr(grid.len(), &abs, r);
    let rp = conjugate(r);
    let factor = coefs.iter().map(|c| c.powf(rp)).sum::<f64>().powf(1.0 / rp);
    let rhs: Vec<f64> = agg.iter().map(|v| v * factor).collect();
    let dom = Domination { lhs: SampledFunction::from_real(grid, lhs), rhs: SampledFunction::from_real(grid, rhs), factor };
    let excess = dom.worst_excess();
    if excess > DOMINATION_TOL {
        return Err(Error::Precondition(format!("domination fails by {excess}")));
    }
    Ok(dom)
}
