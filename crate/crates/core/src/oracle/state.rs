use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{Eigenbasis, PositionGrid};
use crate::error::{Error, Result};

/// Fraction of the basis counted as its top end by the leak check.
pub const LEAK_FRACTION: f64 = 0.1;
pub const DEFAULT_LEAK_THRESHOLD: f64 = 1e-6;

/// Density matrix on a position grid, stored as dq·ρ(q_j, q_k) so that
/// tr ρ = Σ_j ρ_jj.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub grid: PositionGrid,
    pub hbar: f64,
    pub rho: DMatrix<Complex64>,
}

impl DensityGrid {
    pub fn new(grid: PositionGrid, hbar: f64, rho: DMatrix<Complex64>) -> Result<Self> {
        if rho.nrows() != grid.n || rho.ncols() != grid.n {
            return Err(Error::DimensionMismatch { left: rho.nrows(), right: grid.n });
        }
        Ok(Self { grid, hbar, rho })
    }

    /// |ψ⟩⟨ψ| from continuum samples ψ(q_j).
    pub fn pure(grid: PositionGrid, hbar: f64, psi: &[Complex64]) -> Result<Self> {
        if psi.len() != grid.n {
            return Err(Error::LengthMismatch(psi.len(), grid.n));
        }
        let v = DVector::from_iterator(grid.n, psi.iter().map(|z| z * grid.dq.sqrt()));
        Self::new(grid, hbar, &v * v.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// ρ(q_j, q_k) as a continuum kernel value.
    pub fn element(&self, j: usize, k: usize) -> Complex64 {
        self.rho[(j, k)] / self.grid.dq
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Checks hermiticity, the declared trace and positivity.
    pub fn validate(&self, declared_trace: f64) -> Result<()> {
        let scale = self.rho.camax().max(1e-300);
        if self.hermiticity_defect() > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!("density matrix not hermitian: {:e}", self.hermiticity_defect())));
        }
        let tr = self.trace();
        if (tr.re - declared_trace).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!("trace {tr} differs from {declared_trace}")));
        }
        let m = self.min_eigenvalue();
        if m < -1e-8 {
            return Err(Error::InvalidArgument(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }
}

/// Density matrix in a truncated eigenbasis with its energies.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    pub hbar: f64,
    pub energies: Vec<f64>,
    pub rho: DMatrix<Complex64>,
}

impl TruncatedState {
    pub fn new(hbar: f64, energies: Vec<f64>, rho: DMatrix<Complex64>) -> Result<Self> {
        if rho.nrows() != energies.len() || rho.ncols() != energies.len() {
            return Err(Error::DimensionMismatch { left: rho.nrows(), right: energies.len() });
        }
        Ok(Self { hbar, energies, rho })
    }

    pub fn eigenstate(basis: &Eigenbasis, n: usize) -> Result<Self> {
        let mut c = vec![Complex64::new(0.0, 0.0); basis.size()];
        *c.get_mut(n).ok_or(Error::InvalidArgument(format!("level {n} outside the basis")))? = Complex64::new(1.0, 0.0);
        Self::pure(basis, &c)
    }

    /// |c⟩⟨c| for basis coefficients c, normalized.
    pub fn pure(basis: &Eigenbasis, coefficients: &[Complex64]) -> Result<Self> {
        if coefficients.len() != basis.size() {
            return Err(Error::LengthMismatch(coefficients.len(), basis.size()));
        }
        let v = DVector::from_column_slice(coefficients);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = v / Complex64::new(norm, 0.0);
        Self::new(basis.hbar, basis.energies.clone(), &v * v.adjoint())
    }

    /// Σ w_n |n⟩⟨n| with weights normalized to unit trace.
    pub fn diagonal(basis: &Eigenbasis, weights: &[f64]) -> Result<Self> {
        if weights.len() != basis.size() {
            return Err(Error::LengthMismatch(weights.len(), basis.size()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidArgument("weights must be nonnegative with positive sum".into()));
        }
        let d = DVector::from_iterator(weights.len(), weights.iter().map(|w| Complex64::new(w / total, 0.0)));
        Self::new(basis.hbar, basis.energies.clone(), DMatrix::from_diagonal(&d))
    }

    pub fn size(&self) -> usize {
        self.energies.len()
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.size()).map(|n| self.rho[(n, n)].re).collect()
    }

    /// Population in the top `LEAK_FRACTION` of the basis.
    pub fn leak(&self) -> f64 {
        let n = self.size();
        let top = ((n as f64 * LEAK_FRACTION).ceil() as usize).max(1);
        (n - top..n).map(|k| self.rho[(k, k)].re).sum()
    }

    pub fn check_leak(&self, threshold: f64) -> Result<()> {
        let population = self.leak();
        if population > threshold {
            return Err(Error::TruncationLeak { population, threshold });
        }
        Ok(())
    }
}

/// Var(E) = tr(ρH²) − (tr ρH)² with H diagonal in the basis.
pub fn energy_variance(state: &TruncatedState) -> f64 {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (k, e) in state.energies.iter().enumerate() {
        let w = state.rho[(k, k)].re;
        m1 += w * e;
        m2 += w * e * e;
    }
    (m2 - m1 * m1).max(0.0)
}

pub fn mean_energy(state: &TruncatedState) -> f64 {
    state.energies.iter().enumerate().map(|(k, e)| state.rho[(k, k)].re * e).sum()
}

impl Eigenbasis {
    pub fn to_grid(&self, state: &TruncatedState) -> Result<DensityGrid> {
        if state.size() != self.size() {
            return Err(Error::DimensionMismatch { left: state.size(), right: self.size() });
        }
        let psi = self.vectors.map(|v| Complex64::new(v, 0.0));
        DensityGrid::new(self.grid, self.hbar, &psi * &state.rho * psi.transpose())
    }

    /// ρ_mn = ⟨ψ_m|ρ|ψ_n⟩; drops whatever lies outside the basis.
    pub fn project(&self, rho: &DensityGrid) -> Result<TruncatedState> {
        if rho.grid != self.grid {
            return Err(Error::InvalidArgument("density grid differs from the basis grid".into()));
        }
        let psi = self.vectors.map(|v| Complex64::new(v, 0.0));
        TruncatedState::new(self.hbar, self.energies.clone(), psi.transpose() * &rho.rho * &psi)
    }

    /// Basis coefficients of a wavefunction sampled as ψ(q_j).
    pub fn coefficients(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != self.grid.n {
            return Err(Error::LengthMismatch(psi.len(), self.grid.n));
        }
        let s = self.grid.dq.sqrt();
        Ok((0..self.size())
            .map(|n| self.vectors.column(n).iter().zip(psi).map(|(v, z)| z * (v * s)).sum())
            .collect())
    }
}

const CHECKPOINT_FORMAT: &str = "chordwig-truncated-state";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    basis: usize,
    hbar: f64,
    grid: Option<PositionGrid>,
    energies: Vec<f64>,
}

/// One JSON header line, then ρ as little-endian (re, im) f64 pairs, row-major.
pub fn write_checkpoint(w: &mut impl Write, state: &TruncatedState, grid: Option<&PositionGrid>) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        basis: state.size(),
        hbar: state.hbar,
        grid: grid.copied(),
        energies: state.energies.clone(),
    };
    let io = |e: std::io::Error| Error::InvalidArgument(format!("checkpoint write: {e}"));
    let json = serde_json::to_string(&header).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    writeln!(w, "{json}").map_err(io)?;
    let n = state.size();
    let mut buf = Vec::with_capacity(16 * n * n);
    for i in 0..n {
        for j in 0..n {
            let z = state.rho[(i, j)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(io)
}

pub fn read_checkpoint(r: &mut impl BufRead) -> Result<(TruncatedState, Option<PositionGrid>)> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("checkpoint read: {e}"));
    let mut line = String::new();
    r.read_line(&mut line).map_err(io)?;
    let header: CheckpointHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::InvalidArgument(format!("checkpoint header: {e}")))?;
    if header.format != CHECKPOINT_FORMAT || header.energies.len() != header.basis {
        return Err(Error::InvalidArgument("not a truncated-state checkpoint".into()));
    }
    let n = header.basis;
    let mut bytes = vec![0u8; 16 * n * n];
    r.read_exact(&mut bytes).map_err(io)?;
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    let rho = DMatrix::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(f(k), f(k + 1))
    });
    Ok((TruncatedState::new(header.hbar, header.energies, rho)?, header.grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::Potential;
    use crate::oracle::grid::solve_eigenstates;

    fn basis() -> Eigenbasis {
        let v = Potential::Polynomial(vec![0.0, 0.0, 0.5]);
        let grid = PositionGrid::symmetric(128, 8.0).unwrap();
        solve_eigenstates(&v, &grid, 1.0, 16).unwrap()
    }

    #[test]
    fn variance_examples() {
        let b = basis();
        assert!(energy_variance(&TruncatedState::eigenstate(&b, 3).unwrap()) < 1e-12);
        let mut w = vec![0.0; 16];
        w[0] = 1.0;
        w[1] = 1.0;
        let mix = TruncatedState::diagonal(&b, &w).unwrap();
        let de = b.energies[1] - b.energies[0];
        assert!((energy_variance(&mix) - de * de / 4.0).abs() < 1e-12);
    }

    #[test]
    fn grid_round_trip() {
        let b = basis();
        let c: Vec<Complex64> = (0..16).map(|k| Complex64::new(1.0 / (1.0 + k as f64), 0.3 * k as f64 / 16.0)).collect();
        let s = TruncatedState::pure(&b, &c).unwrap();
        let g = b.to_grid(&s).unwrap();
        g.validate(1.0).unwrap();
        assert!((g.purity() - 1.0).abs() < 1e-10);
        let back = b.project(&g).unwrap();
        assert!((back.rho - &s.rho).camax() < 1e-12);
    }

    #[test]
    fn leak_and_validation() {
        let b = basis();
        let s = TruncatedState::eigenstate(&b, 15).unwrap();
        assert!(s.check_leak(1e-6).is_err());
        assert!(TruncatedState::eigenstate(&b, 3).unwrap().check_leak(1e-6).is_ok());
        let mut g = b.to_grid(&TruncatedState::eigenstate(&b, 0).unwrap()).unwrap();
        assert!(g.validate(2.0).is_err());
        g.rho[(3, 7)] += Complex64::new(0.0, 1e-3);
        assert!(g.validate(1.0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let b = basis();
        let c: Vec<Complex64> = (0..16).map(|k| Complex64::new((k as f64).sin(), (k as f64).cos())).collect();
        let s = TruncatedState::pure(&b, &c).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &s, Some(&b.grid)).unwrap();
        let (back, grid) = read_checkpoint(&mut std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, s);
        assert_eq!(grid, Some(b.grid));
    }
}
