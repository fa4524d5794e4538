//! Discrete Weyl–Wigner transform on the half-step centre grid.
//!
//! For a position grid of n points the centres q_s = q0 + s·dq/2 take
//! 2n − 1 values and the momenta p_m = (m − n)·πħ/(n·dq) take 2n values over
//! one period P = 2πħ/dq. The map is invertible. The torus covers phase space
//! twice: rows with even s repeat with period P/2, rows with odd s flip sign,
//! so the physical Wigner function is the window |p| < P/4.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::PositionGrid;
use super::state::DensityGrid;
use crate::error::{Error, Result};

pub const DEFAULT_ALIAS_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub grid: PositionGrid,
    pub hbar: f64,
    /// Row-major, (2n − 1) centres by 2n momenta.
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn zeros(grid: PositionGrid, hbar: f64) -> Self {
        Self { grid, hbar, values: vec![0.0; (2 * grid.n - 1) * 2 * grid.n] }
    }

    pub fn rows(&self) -> usize {
        2 * self.grid.n - 1
    }

    pub fn cols(&self) -> usize {
        2 * self.grid.n
    }

    pub fn q(&self, s: usize) -> f64 {
        self.grid.q0 + 0.5 * s as f64 * self.grid.dq
    }

    pub fn p(&self, m: usize) -> f64 {
        (m as f64 - self.grid.n as f64) * self.dp()
    }

    pub fn dp(&self) -> f64 {
        std::f64::consts::PI * self.hbar / (self.grid.n as f64 * self.grid.dq)
    }

    pub fn value(&self, s: usize, m: usize) -> f64 {
        self.values[s * self.cols() + m]
    }

    pub fn value_mut(&mut self, s: usize, m: usize) -> &mut f64 {
        let c = self.cols();
        &mut self.values[s * c + m]
    }

    fn cell(&self) -> f64 {
        0.5 * self.grid.dq * self.dp()
    }

    /// Σ W · cell over the torus; equals tr ρ exactly.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// ∫ W dp at the original grid points; equals ρ(q_j, q_j).
    pub fn position_marginal(&self) -> Vec<f64> {
        (0..self.grid.n)
            .map(|j| 0.5 * self.dp() * (0..self.cols()).map(|m| self.value(2 * j, m)).sum::<f64>())
            .collect()
    }

    /// 2πħ ∫ W_a W_b, equal to tr(AB); the torus double cover is divided out.
    pub fn overlap(&self, other: &WignerGrid) -> Result<f64> {
        if self.grid != other.grid || self.hbar != other.hbar {
            return Err(Error::InvalidArgument("overlap of Wigner grids on different lattices".into()));
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        Ok(std::f64::consts::PI * self.hbar * s * self.cell())
    }

    pub fn in_physical_window(&self, m: usize) -> bool {
        2 * (m as i64 - self.grid.n as i64).unsigned_abs() < self.grid.n as u64
    }

    /// (q, p, W) over the physical window, centre-major.
    pub fn physical_points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for s in 0..self.rows() {
            for m in (0..self.cols()).filter(|&m| self.in_physical_window(m)) {
                out.push((self.q(s), self.p(m), self.value(s, m)));
            }
        }
        out
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "q,p,w")?;
        for (q, p, v) in self.physical_points() {
            writeln!(w, "{q:.12e},{p:.12e},{v:.12e}")?;
        }
        Ok(())
    }
}

/// Population at the position edges and beyond |p| = P/4.
pub fn boundary_population(rho: &DensityGrid) -> (f64, f64) {
    let n = rho.grid.n;
    let edge = (n / 16).max(1);
    let trace = rho.trace().re.abs().max(1e-300);
    let position: f64 = (0..edge).chain(n - edge..n).map(|j| rho.rho[(j, j)].re.abs()).sum::<f64>() / trace;
    // momentum populations from the wrapped diagonals of ρ
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for k in 0..n {
            c[(j + n - k) % n] += rho.rho[(j, k)];
        }
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut c);
    let high: f64 = (0..n)
        .filter(|&k| {
            let signed = if k < n / 2 { k } else { n - k };
            4 * signed >= n
        })
        .map(|k| c[k].re.abs() / n as f64)
        .sum();
    (position, high / trace)
}

fn check_aliasing(rho: &DensityGrid, threshold: Option<f64>) -> Result<()> {
    if let Some(threshold) = threshold {
        let (position, momentum) = boundary_population(rho);
        let population = position.max(momentum);
        if population > threshold {
            return Err(Error::Aliasing { population, threshold });
        }
    }
    Ok(())
}

pub fn weyl_transform(rho: &DensityGrid) -> Result<WignerGrid> {
    weyl_transform_with(rho, Some(DEFAULT_ALIAS_THRESHOLD))
}

/// `alias_threshold = None` skips the boundary check.
pub fn weyl_transform_with(rho: &DensityGrid, alias_threshold: Option<f64>) -> Result<WignerGrid> {
    check_aliasing(rho, alias_threshold)?;
    let n = rho.grid.n;
    let len = 2 * n;
    let fft = FftPlanner::new().plan_fft_forward(len);
    let mut out = WignerGrid::zeros(rho.grid, rho.hbar);
    let scale = 1.0 / (std::f64::consts::PI * rho.hbar);
    let peak = rho.rho.camax().max(1e-300);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for s in 0..out.rows() {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let reach = s.min(2 * n - 2 - s) as i64;
        let mut d = -reach;
        while d <= reach {
            let j = ((s as i64 + d) / 2) as usize;
            let k = ((s as i64 - d) / 2) as usize;
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            buf[d.rem_euclid(len as i64) as usize] = rho.rho[(j, k)] * sign;
            d += 2;
        }
        fft.process(&mut buf);
        for (m, z) in buf.iter().enumerate() {
            if z.im.abs() > 1e-10 * peak * (reach + 1) as f64 {
                return Err(Error::InvalidArgument(format!("imaginary Wigner residue {:e}; ρ is not hermitian", z.im)));
            }
            *out.value_mut(s, m) = z.re * scale;
        }
    }
    Ok(out)
}

pub fn inverse_weyl(w: &WignerGrid) -> Result<DensityGrid> {
    inverse_weyl_with(w, Some(DEFAULT_ALIAS_THRESHOLD))
}

pub fn inverse_weyl_with(w: &WignerGrid, alias_threshold: Option<f64>) -> Result<DensityGrid> {
    let n = w.grid.n;
    let len = 2 * n;
    if w.values.len() != w.rows() * len {
        return Err(Error::LengthMismatch(w.values.len(), w.rows() * len));
    }
    if w.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Wigner grid".into()));
    }
    let ifft = FftPlanner::new().plan_fft_inverse(len);
    let mut rho = DMatrix::zeros(n, n);
    let scale = std::f64::consts::PI * w.hbar / len as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for s in 0..w.rows() {
        for (m, z) in buf.iter_mut().enumerate() {
            *z = Complex64::new(w.value(s, m) * scale, 0.0);
        }
        ifft.process(&mut buf);
        let reach = s.min(2 * n - 2 - s) as i64;
        let mut d = -reach;
        while d <= reach {
            let j = ((s as i64 + d) / 2) as usize;
            let k = ((s as i64 - d) / 2) as usize;
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            rho[(j, k)] = buf[d.rem_euclid(len as i64) as usize] * sign;
            d += 2;
        }
    }
    let out = DensityGrid::new(w.grid, w.hbar, rho)?;
    check_aliasing(&out, alias_threshold)?;
    Ok(out)
}
