use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::Potential;
use crate::error::{Error, Result};
use crate::lindblad::{LindbladChannel, WeylPolynomial};

/// Default number of position grid points.
pub const DEFAULT_GRID_POINTS: usize = 512;
/// The grid half-width in units of the classical turning radius.
pub const TURNING_RADII: f64 = 6.0;

/// Uniform position grid q_j = q0 + j·dq, j = 0..n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionGrid {
    pub n: usize,
    pub q0: f64,
    pub dq: f64,
}

impl PositionGrid {
    /// n points on [−L, L) with q = 0 at index n/2.
    pub fn symmetric(n: usize, half_width: f64) -> Result<Self> {
        if n < 4 || !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidArgument(format!("grid needs n ≥ 4 and L > 0, got n={n}, L={half_width}")));
        }
        let dq = 2.0 * half_width / n as f64;
        Ok(Self { n, q0: -((n / 2) as f64) * dq, dq })
    }

    /// Half-width set to six turning radii of the shell V(q) = E.
    pub fn auto(potential: &Potential, energy: f64, n: usize) -> Result<Self> {
        let radius = turning_radius(potential, energy)?;
        Self::symmetric(n, TURNING_RADII * radius)
    }

    pub fn point(&self, j: usize) -> f64 {
        self.q0 + j as f64 * self.dq
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Nearest grid index to q, if q lies on the grid.
    pub fn index_of(&self, q: f64) -> Option<usize> {
        let x = ((q - self.q0) / self.dq).round();
        (x >= 0.0 && (x as usize) < self.n).then_some(x as usize)
    }
}

/// Largest |q| with V(q) = E, on either side of the origin.
pub fn turning_radius(potential: &Potential, energy: f64) -> Result<f64> {
    if potential.value(0.0) >= energy {
        return Err(Error::EmptyShell { energy, minimum: potential.value(0.0) });
    }
    let mut radius: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let v = |q: f64| potential.value(sign * q) - energy;
        let mut hi = 1.0;
        while v(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::OpenShell(energy));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if v(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        radius = radius.max(hi);
    }
    Ok(radius)
}

/// Lowest eigenpairs of p²/2 + V(q) on a position grid. Columns of `vectors`
/// are discretely normalized, Σ_j |ψ_j|² = 1, so ψ(q_j) = ψ_j/√dq.
#[derive(Debug, Clone)]
pub struct Eigenbasis {
    pub grid: PositionGrid,
    pub hbar: f64,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigenbasis {
    pub fn size(&self) -> usize {
        self.energies.len()
    }

    /// ψ_n on the grid as continuum values ψ(q_j).
    pub fn wavefunction(&self, n: usize) -> Vec<f64> {
        let s = self.grid.dq.sqrt();
        self.vectors.column(n).iter().map(|v| v / s).collect()
    }

    pub fn hamiltonian(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.size(),
            self.energies.iter().map(|&e| Complex64::new(e, 0.0)),
        ))
    }

    /// ⟨ψ_m|A|ψ_n⟩ for a grid operator given by its action on column vectors.
    pub fn project_action(&self, apply: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>) -> DMatrix<Complex64> {
        let psi = self.vectors.map(|v| Complex64::new(v, 0.0));
        psi.transpose() * apply(&psi)
    }

    /// Channel matrix in the truncated basis; needs a polynomial symbol.
    pub fn channel_matrix(&self, channel: &LindbladChannel) -> Result<DMatrix<Complex64>> {
        let symbol = channel.symbol().ok_or_else(|| {
            Error::Unsupported(format!("channel {} has no polynomial symbol to quantize", channel.name))
        })?;
        Ok(self.project_action(|v| apply_weyl(symbol, &self.grid, self.hbar, v)))
    }
}

/// Sinc-basis kinetic matrix for p²/2.
pub fn kinetic_matrix(grid: &PositionGrid, hbar: f64) -> DMatrix<f64> {
    let c = hbar * hbar / (2.0 * grid.dq * grid.dq);
    DMatrix::from_fn(grid.n, grid.n, |i, j| {
        if i == j {
            c * std::f64::consts::PI.powi(2) / 3.0
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            c * 2.0 * sign / (d * d)
        }
    })
}

/// Sinc-basis first derivative, antisymmetric.
pub fn derivative_matrix(grid: &PositionGrid) -> DMatrix<f64> {
    DMatrix::from_fn(grid.n, grid.n, |i, j| {
        if i == j {
            0.0
        } else {
            let d = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign / (d * grid.dq)
        }
    })
}

pub fn solve_eigenstates(potential: &Potential, grid: &PositionGrid, hbar: f64, count: usize) -> Result<Eigenbasis> {
    if !(hbar > 0.0) || count == 0 || count > grid.n {
        return Err(Error::InvalidArgument(format!("eigensolver needs ħ > 0 and 0 < count ≤ {}, got ħ={hbar}, count={count}", grid.n)));
    }
    let mut h = kinetic_matrix(grid, hbar);
    for j in 0..grid.n {
        let v = potential.value(grid.point(j));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("potential at q={}", grid.point(j))));
        }
        h[(j, j)] += v;
    }
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..grid.n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let mut vectors = DMatrix::zeros(grid.n, count);
    let mut energies = Vec::with_capacity(count);
    for (k, &i) in order.iter().take(count).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        v /= v.norm();
        // fix the sign on the outermost significant component
        let peak = v.amax();
        if let Some(last) = v.iter().rev().find(|x| x.abs() > 1e-3 * peak) {
            if *last < 0.0 {
                v = -v;
            }
        }
        let e = eig.eigenvalues[i];
        let residual = (&h * &v - &v * e).norm();
        if residual > 1e-8 * scale {
            return Err(Error::NonConvergence(format!("eigenpair {k}: residual {residual:e}")));
        }
        vectors.set_column(k, &v);
        energies.push(e);
    }
    Ok(Eigenbasis { grid: *grid, hbar, energies, vectors })
}

fn apply_q(grid: &PositionGrid, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = v.clone();
    for (j, mut row) in out.row_iter_mut().enumerate() {
        row *= Complex64::new(grid.point(j), 0.0);
    }
    out
}

/// Weyl-ordered polynomial symbol applied to grid column vectors. Monomials
/// p^a q^b quantize as 2^{−b} Σ_k C(b,k) q̂^k p̂^a q̂^{b−k} with p̂ = −iħ∂.
pub fn apply_weyl(symbol: &WeylPolynomial, grid: &PositionGrid, hbar: f64, v: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = derivative_matrix(grid).map(|x| Complex64::new(0.0, -hbar * x));
    let mut out = DMatrix::zeros(v.nrows(), v.ncols());
    for term in &symbol.terms {
        let c = Complex64::new(term.re, term.im);
        let b = term.q_power;
        let mut sum = DMatrix::zeros(v.nrows(), v.ncols());
        let mut binom = 1.0;
        for k in 0..=b {
            let mut w = v.clone();
            for _ in 0..(b - k) {
                w = apply_q(grid, &w);
            }
            for _ in 0..term.p_power {
                w = &d * w;
            }
            for _ in 0..k {
                w = apply_q(grid, &w);
            }
            sum += w * Complex64::new(binom, 0.0);
            binom = binom * (b - k) as f64 / (k + 1) as f64;
        }
        out += sum * (c / 2f64.powi(b as i32));
    }
    out
}

/// Full n×n grid matrix of a Weyl-ordered symbol.
pub fn weyl_matrix(symbol: &WeylPolynomial, grid: &PositionGrid, hbar: f64) -> DMatrix<Complex64> {
    apply_weyl(symbol, grid, hbar, &DMatrix::identity(grid.n, grid.n))
}
