use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::{TruncatedState, DEFAULT_LEAK_THRESHOLD};
use crate::error::{Error, Result};

/// Entries below this fraction of the largest one are dropped.
const SPARSE_CUTOFF: f64 = 1e-12;

fn truncated(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let cut = SPARSE_CUTOFF * m.camax();
    m.map(|z| if z.norm() > cut { z } else { Complex64::default() })
}

#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub n: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let cut = SPARSE_CUTOFF * m.camax();
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > cut {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { n: m.nrows(), entries }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// S·ρ
    fn left(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>, scale: Complex64) {
        for &(i, j, s) in &self.entries {
            let f = s * scale;
            for c in 0..rho.ncols() {
                out[(i, c)] += f * rho[(j, c)];
            }
        }
    }

    /// ρ·S
    fn right(&self, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>, scale: Complex64) {
        for &(i, j, s) in &self.entries {
            let f = s * scale;
            for r in 0..rho.nrows() {
                out[(r, j)] += rho[(r, i)] * f;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum HamiltonianPart {
    Diagonal(Vec<f64>),
    Dense(DMatrix<Complex64>),
}

/// dρ/dt = −(i/ħ)[H, ρ] + (1/ħ) Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ}).
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    pub hbar: f64,
    h: HamiltonianPart,
    channels: Vec<(SparseOperator, SparseOperator)>,
    /// Σ L†L built from the truncated matrices, which keeps the trace exact.
    k: SparseOperator,
}

impl LindbladGenerator {
    pub fn new(h_op: &DMatrix<Complex64>, l_ops: &[DMatrix<Complex64>], hbar: f64) -> Result<Self> {
        let n = h_op.nrows();
        if h_op.ncols() != n {
            return Err(Error::DimensionMismatch { left: h_op.nrows(), right: h_op.ncols() });
        }
        if !(hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("ħ must be positive, got {hbar}")));
        }
        if (h_op - h_op.adjoint()).camax() > 1e-12 * h_op.camax().max(1.0) {
            return Err(Error::InvalidArgument("Hamiltonian matrix is not hermitian".into()));
        }
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off.max(h_op[(i, j)].norm());
                }
            }
        }
        let h = if off == 0.0 {
            HamiltonianPart::Diagonal((0..n).map(|i| h_op[(i, i)].re).collect())
        } else {
            HamiltonianPart::Dense(h_op.clone())
        };
        let mut k = DMatrix::zeros(n, n);
        let mut channels = Vec::with_capacity(l_ops.len());
        for l in l_ops {
            if l.nrows() != n || l.ncols() != n {
                return Err(Error::DimensionMismatch { left: l.nrows(), right: n });
            }
            // noise-level entries would make the ladder-like matrices dense
            let l = truncated(l);
            k += l.adjoint() * &l;
            channels.push((SparseOperator::from_dense(&l), SparseOperator::from_dense(&l.adjoint())));
        }
        Ok(Self { hbar, h, channels, k: SparseOperator::from_dense(&k) })
    }

    pub fn size(&self) -> usize {
        self.k.n.max(match &self.h {
            HamiltonianPart::Diagonal(d) => d.len(),
            HamiltonianPart::Dense(m) => m.nrows(),
        })
    }

    pub fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = rho.nrows();
        let mut out = DMatrix::zeros(n, n);
        let mih = Complex64::new(0.0, -1.0 / self.hbar);
        match &self.h {
            HamiltonianPart::Diagonal(e) => {
                for i in 0..n {
                    for j in 0..n {
                        out[(i, j)] = mih * (e[i] - e[j]) * rho[(i, j)];
                    }
                }
            }
            HamiltonianPart::Dense(h) => {
                out = (h * rho - rho * h) * mih;
            }
        }
        let g = Complex64::new(1.0 / self.hbar, 0.0);
        let mut tmp = DMatrix::zeros(n, n);
        for (l, ld) in &self.channels {
            tmp.fill(Complex64::default());
            l.left(rho, &mut tmp, Complex64::new(1.0, 0.0));
            ld.right(&tmp, &mut out, g);
        }
        let half = Complex64::new(-0.5 / self.hbar, 0.0);
        self.k.left(rho, &mut out, half);
        self.k.right(rho, &mut out, half);
        out
    }

    /// One classical RK4 step.
    pub fn step(&self, rho: &DMatrix<Complex64>, dt: f64) -> DMatrix<Complex64> {
        let h = Complex64::new(dt, 0.0);
        let half = Complex64::new(0.5 * dt, 0.0);
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&(rho + &k1 * half));
        let k3 = self.rhs(&(rho + &k2 * half));
        let k4 = self.rhs(&(rho + &k3 * h));
        rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * (h / 6.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub dt: f64,
    pub leak_threshold: f64,
    /// Leak check cadence in steps; the final state is always checked.
    pub check_every: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { dt: 1e-3, leak_threshold: DEFAULT_LEAK_THRESHOLD, check_every: 10 }
    }
}

pub fn lindblad_integrate(
    state: &TruncatedState,
    h_op: &DMatrix<Complex64>,
    l_ops: &[DMatrix<Complex64>],
    t: f64,
    dt: f64,
) -> Result<TruncatedState> {
    let gen = LindbladGenerator::new(h_op, l_ops, state.hbar)?;
    lindblad_integrate_with(state, &gen, t, IntegratorOptions { dt, ..Default::default() }, |_, _| {})
}

/// Integrates to t with steps of at most `opts.dt`, calling `observe(t, ρ)`
/// at the start and after every step.
pub fn lindblad_integrate_with(
    state: &TruncatedState,
    gen: &LindbladGenerator,
    t: f64,
    opts: IntegratorOptions,
    mut observe: impl FnMut(f64, &TruncatedState),
) -> Result<TruncatedState> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("Lindblad time must be finite and nonnegative, got {t}")));
    }
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {}", opts.dt)));
    }
    if gen.size() != state.size() {
        return Err(Error::DimensionMismatch { left: gen.size(), right: state.size() });
    }
    let steps = (t / opts.dt).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut current = state.clone();
    observe(0.0, &current);
    for k in 1..=steps {
        current.rho = gen.step(&current.rho, dt);
        if current.rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("density matrix at step {k}")));
        }
        if k % opts.check_every.max(1) == 0 || k == steps {
            current.check_leak(opts.leak_threshold)?;
        }
        observe(k as f64 * dt, &current);
    }
    Ok(current)
}
