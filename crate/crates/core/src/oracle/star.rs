//! Moyal product of phase-space symbols on a periodic grid.
//!
//! A symbol is an affine part c + a_p·p + a_q·q plus a smooth residual sampled
//! on the grid. Affine factors are handled with the exact two-term product
//! rule; residual pairs go through a twisted convolution of their Fourier
//! modes, e^{ik₁·x} ⋆ e^{ik₂·x} = e^{(iħ/2) k₁∧k₂} e^{i(k₁+k₂)·x}.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Relative spectral amplitude allowed outside the alias-free band.
pub const STAR_ALIAS_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub p0: f64,
    pub dp: f64,
    pub np: usize,
    pub q0: f64,
    pub dq: f64,
    pub nq: usize,
}

impl PhaseGrid {
    /// n×n points on [−L, L)².
    pub fn square(n: usize, half_width: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(4) || !(half_width > 0.0) {
            return Err(Error::InvalidArgument(format!("star grid needs n ≥ 8 divisible by 4, got {n}")));
        }
        let d = 2.0 * half_width / n as f64;
        Ok(Self { p0: -half_width, dp: d, np: n, q0: -half_width, dq: d, nq: n })
    }

    pub fn p(&self, i: usize) -> f64 {
        self.p0 + i as f64 * self.dp
    }

    pub fn q(&self, j: usize) -> f64 {
        self.q0 + j as f64 * self.dq
    }

    pub fn len(&self) -> usize {
        self.np * self.nq
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Affine {
    pub c: Complex64,
    pub p: Complex64,
    pub q: Complex64,
}

impl Affine {
    fn value(&self, p: f64, q: f64) -> Complex64 {
        self.c + self.p * p + self.q * q
    }

    fn is_zero(&self) -> bool {
        self.c == Complex64::default() && self.p == Complex64::default() && self.q == Complex64::default()
    }
}

/// Values indexed [i_p · nq + j_q].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSymbol {
    pub grid: PhaseGrid,
    pub affine: Affine,
    pub residual: Vec<Complex64>,
}

impl PhaseSymbol {
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let residual = (0..grid.np).flat_map(|i| (0..grid.nq).map(move |j| (i, j))).map(|(i, j)| f(grid.p(i), grid.q(j))).collect();
        Self { grid, affine: Affine::default(), residual }
    }

    pub fn real_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |p, q| Complex64::new(f(p, q), 0.0))
    }

    pub fn affine(grid: PhaseGrid, c: f64, a_p: f64, a_q: f64) -> Self {
        Self {
            grid,
            affine: Affine { c: c.into(), p: a_p.into(), q: a_q.into() },
            residual: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn constant(grid: PhaseGrid, c: f64) -> Self {
        Self::affine(grid, c, 0.0, 0.0)
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.affine.value(self.grid.p(i), self.grid.q(j)) + self.residual[i * self.grid.nq + j]
    }

    /// Full pointwise values.
    pub fn values(&self) -> Vec<Complex64> {
        (0..self.grid.np).flat_map(|i| (0..self.grid.nq).map(move |j| self.value(i, j))).collect()
    }

    pub fn max_abs_diff(&self, other: &PhaseSymbol) -> f64 {
        self.values().iter().zip(other.values()).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

fn wavenumber(k: usize, n: usize, d: f64) -> f64 {
    let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * std::f64::consts::PI * signed / (n as f64 * d)
}

fn spectrum(grid: &PhaseGrid, values: &[Complex64]) -> Vec<Complex64> {
    let (np, nq) = (grid.np, grid.nq);
    let mut planner = FftPlanner::new();
    let fq = planner.plan_fft_forward(nq);
    let fp = planner.plan_fft_forward(np);
    let mut a = values.to_vec();
    for row in a.chunks_mut(nq) {
        fq.process(row);
    }
    let mut col = vec![Complex64::default(); np];
    for j in 0..nq {
        for i in 0..np {
            col[i] = a[i * nq + j];
        }
        fp.process(&mut col);
        for i in 0..np {
            a[i * nq + j] = col[i] / (np * nq) as f64;
        }
    }
    a
}

fn synthesis(grid: &PhaseGrid, modes: &[Complex64]) -> Vec<Complex64> {
    let (np, nq) = (grid.np, grid.nq);
    let mut planner = FftPlanner::new();
    let fq = planner.plan_fft_inverse(nq);
    let fp = planner.plan_fft_inverse(np);
    let mut a = modes.to_vec();
    for row in a.chunks_mut(nq) {
        fq.process(row);
    }
    let mut col = vec![Complex64::default(); np];
    for j in 0..nq {
        for i in 0..np {
            col[i] = a[i * nq + j];
        }
        fp.process(&mut col);
        for i in 0..np {
            a[i * nq + j] = col[i];
        }
    }
    a
}

fn signed(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn in_band(k: usize, n: usize) -> bool {
    4 * signed(k, n).unsigned_abs() < n as u64
}

fn check_band(grid: &PhaseGrid, modes: &[Complex64]) -> Result<()> {
    let peak = modes.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if peak == 0.0 {
        return Ok(());
    }
    let mut outside: f64 = 0.0;
    for i in 0..grid.np {
        for j in 0..grid.nq {
            if !(in_band(i, grid.np) && in_band(j, grid.nq)) {
                outside = outside.max(modes[i * grid.nq + j].norm());
            }
        }
    }
    if outside > STAR_ALIAS_THRESHOLD * peak {
        return Err(Error::Aliasing { population: outside / peak, threshold: STAR_ALIAS_THRESHOLD });
    }
    Ok(())
}

/// ∂_p and ∂_q of a residual by spectral differentiation.
fn derivatives(grid: &PhaseGrid, modes: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut dp = modes.to_vec();
    let mut dq = modes.to_vec();
    for i in 0..grid.np {
        let kp = wavenumber(i, grid.np, grid.dp);
        for j in 0..grid.nq {
            let kq = wavenumber(j, grid.nq, grid.dq);
            let z = modes[i * grid.nq + j];
            dp[i * grid.nq + j] = z * Complex64::new(0.0, kp);
            dq[i * grid.nq + j] = z * Complex64::new(0.0, kq);
        }
    }
    (synthesis(grid, &dp), synthesis(grid, &dq))
}

fn twisted(grid: &PhaseGrid, a: &[Complex64], b: &[Complex64], hbar: f64) -> Vec<Complex64> {
    let (np, nq) = (grid.np, grid.nq);
    let band: Vec<(i64, i64, Complex64)> = (0..np)
        .flat_map(|i| (0..nq).map(move |j| (i, j)))
        .filter(|&(i, j)| in_band(i, np) && in_band(j, nq) && a[i * nq + j] != Complex64::default())
        .map(|(i, j)| (signed(i, np), signed(j, nq), a[i * nq + j]))
        .collect();
    let (up, uq) = (2.0 * std::f64::consts::PI / (np as f64 * grid.dp), 2.0 * std::f64::consts::PI / (nq as f64 * grid.dq));
    let half = (np / 2) as i64;
    let halfq = (nq / 2) as i64;
    let out: Vec<Complex64> = (0..np * nq)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nq, idx % nq);
            let (kp, kq) = (signed(i, np), signed(j, nq));
            let mut sum = Complex64::default();
            for &(k1p, k1q, za) in &band {
                let (k2p, k2q) = (kp - k1p, kq - k1q);
                if k2p.abs() * 4 >= np as i64 || k2q.abs() * 4 >= nq as i64 || k2p >= half || k2q >= halfq {
                    continue;
                }
                let zb = b[(k2p.rem_euclid(np as i64) as usize) * nq + k2q.rem_euclid(nq as i64) as usize];
                if zb == Complex64::default() {
                    continue;
                }
                // k₁∧k = k₁p·kq − k₁q·kp
                let wedge = (k1p as f64 * up) * (kq as f64 * uq) - (k1q as f64 * uq) * (kp as f64 * up);
                sum += za * zb * Complex64::from_polar(1.0, 0.5 * hbar * wedge);
            }
            sum
        })
        .collect();
    synthesis(grid, &out)
}

/// Weyl symbol of the operator product Â·B̂.
pub fn moyal_star(a: &PhaseSymbol, b: &PhaseSymbol, hbar: f64) -> Result<PhaseSymbol> {
    if a.grid != b.grid {
        return Err(Error::InvalidArgument("star product of symbols on different grids".into()));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("ħ must be positive, got {hbar}")));
    }
    let g = a.grid;
    let (ma, mb) = (spectrum(&g, &a.residual), spectrum(&g, &b.residual));
    check_band(&g, &ma)?;
    check_band(&g, &mb)?;
    let ih2 = Complex64::new(0.0, 0.5 * hbar);
    let mut out = twisted(&g, &ma, &mb, hbar);
    let (aa, ab) = (a.affine, b.affine);
    if !aa.is_zero() {
        let (bp, bq) = derivatives(&g, &mb);
        for i in 0..g.np {
            for j in 0..g.nq {
                let k = i * g.nq + j;
                // affine ⋆ R = affine·R + (iħ/2)(∂_q affine ∂_p R − ∂_p affine ∂_q R)
                out[k] += aa.value(g.p(i), g.q(j)) * b.residual[k] + ih2 * (aa.q * bp[k] - aa.p * bq[k]);
            }
        }
    }
    if !ab.is_zero() {
        let (ap, aq) = derivatives(&g, &ma);
        for i in 0..g.np {
            for j in 0..g.nq {
                let k = i * g.nq + j;
                out[k] += a.residual[k] * ab.value(g.p(i), g.q(j)) + ih2 * (aq[k] * ab.p - ap[k] * ab.q);
            }
        }
    }
    if !aa.is_zero() || !ab.is_zero() {
        let bracket = ih2 * (aa.q * ab.p - aa.p * ab.q);
        for i in 0..g.np {
            for j in 0..g.nq {
                out[i * g.nq + j] += aa.value(g.p(i), g.q(j)) * ab.value(g.p(i), g.q(j)) + bracket;
            }
        }
    }
    Ok(PhaseSymbol { grid: g, affine: Affine::default(), residual: out })
}
