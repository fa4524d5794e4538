//! Angle-pair integrals over the shell torus: purity at t = 0, purity decay,
//! the direct trace, and the degenerate-chord Hessian limit.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chord::{amplitude_prefactor, ShellSpec};
use crate::classical::{flow_steps, HamiltonianSystem};
use crate::error::{Error, Result};
use crate::lindblad::{require_hermitian, LindbladChannel};
use crate::quadrature::{gauss_legendre_on, simpson};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleIntegralReport {
    pub value: f64,
    /// Points per angle direction (or quadrature nodes) of the finest grid.
    pub grid: usize,
    /// Difference from the next coarser grid.
    pub error: f64,
}

/// Exponent applied to D_t² in the purity-decay integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurityExponent {
    /// exp(−D²/ħ), the square of the chord damping exp(−D²/2ħ).
    #[default]
    D2OverHbar,
    /// exp(−D²) as literally written.
    D2,
    /// exp(−D²/2ħ)
    D2OverTwoHbar,
}

impl PurityExponent {
    pub fn factor(self, d2: f64, hbar: f64) -> f64 {
        match self {
            PurityExponent::D2OverHbar => (-d2 / hbar).exp(),
            PurityExponent::D2 => (-d2).exp(),
            PurityExponent::D2OverTwoHbar => (-d2 / (2.0 * hbar)).exp(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PurityExponent::D2OverHbar => "exp(-D^2/hbar)",
            PurityExponent::D2 => "exp(-D^2)",
            PurityExponent::D2OverTwoHbar => "exp(-D^2/(2 hbar))",
        }
    }
}

fn angles(m: usize) -> Vec<f64> {
    (0..m).map(|i| TAU * (i as f64 + 0.5) / m as f64).collect()
}

/// 2πħ ∫ W² dx averaged over oscillations, as an angle-pair integral.
pub fn purity_t0(shell: &ShellSpec, hbar: f64) -> Result<AngleIntegralReport> {
    purity_t0_with(shell, hbar, 128, 1.0)
}

/// `amplitude_scale` multiplies every chord amplitude.
pub fn purity_t0_with(shell: &ShellSpec, hbar: f64, m: usize, amplitude_scale: f64) -> Result<AngleIntegralReport> {
    if !(hbar > 0.0) || m < 2 {
        return Err(Error::InvalidArgument(format!("purity needs ħ > 0 and a grid, got ħ={hbar}, m={m}")));
    }
    let prefactor = amplitude_prefactor(hbar) * amplitude_scale;
    let integrate = |m: usize| {
        let th = angles(m);
        let tangents: Vec<_> = th.iter().map(|&t| shell.tangent(t)).collect();
        let mut sum = 0.0;
        for a in &tangents {
            for b in &tangents {
                let w = a.wedge(*b).abs();
                // Jacobian |w|/4, swap double counting ½, oscillation average ½, A²|w| = prefactor²
                let a2w = if w == 0.0 { prefactor * prefactor } else { (prefactor / w.sqrt()).powi(2) * w };
                sum += 0.25 * 0.5 * 0.5 * a2w;
            }
        }
        TAU * hbar * sum * (TAU / m as f64).powi(2)
    };
    let fine = integrate(m);
    let coarse = integrate(m / 2);
    Ok(AngleIntegralReport { value: fine, grid: m, error: (fine - coarse).abs() })
}

/// tr ρ²(t) ≈ ∬ dθ₋dθ₊/(2π)² exp(−κ D_t²[θ₋, θ₊]).
pub fn purity_decay(
    shell: &ShellSpec,
    system: &HamiltonianSystem,
    channels: &[LindbladChannel],
    t: f64,
    hbar: f64,
    exponent: PurityExponent,
    m: usize,
) -> Result<AngleIntegralReport> {
    require_hermitian(channels)?;
    if !(hbar > 0.0) || m < 4 || !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("purity_decay needs ħ > 0 and even m ≥ 4, got ħ={hbar}, m={m}")));
    }
    if t == 0.0 || channels.is_empty() {
        return Ok(AngleIntegralReport { value: 1.0, grid: m, error: 0.0 });
    }
    let steps = {
        let n = ((t.abs() / shell.flow.dt).ceil() as usize).max(2);
        n + n % 2
    };
    let h = t.abs() / steps as f64;
    let th = angles(m);
    // channel values along each launched trajectory, [point][node][channel]
    let values: Vec<Vec<f64>> = th
        .par_iter()
        .map(|&theta| {
            let tr = flow_steps(shell.point(theta), t, steps, system, &shell.flow)?;
            Ok(tr
                .samples
                .iter()
                .flat_map(|(_, x)| channels.iter().map(move |c| c.value(*x).re))
                .collect())
        })
        .collect::<Result<_>>()?;
    let nc = channels.len();
    let pair = |i: usize, j: usize| -> f64 {
        let integrand: Vec<f64> = (0..=steps)
            .map(|k| {
                (0..nc)
                    .map(|c| {
                        let d = values[i][k * nc + c] - values[j][k * nc + c];
                        d * d
                    })
                    .sum()
            })
            .collect();
        exponent.factor(simpson(&integrand, h).unwrap_or(f64::NAN), hbar)
    };
    let rows: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut all = 0.0;
            let mut even = 0.0;
            for j in 0..m {
                let v = pair(i, j);
                all += v;
                if i % 2 == 0 && j % 2 == 0 {
                    even += v;
                }
            }
            (all, even)
        })
        .collect();
    let fine = rows.iter().map(|r| r.0).sum::<f64>() / (m * m) as f64;
    let coarse = rows.iter().map(|r| r.1).sum::<f64>() / ((m / 2) * (m / 2)) as f64;
    if !fine.is_finite() {
        return Err(Error::NonFinite("purity integrand".into()));
    }
    Ok(AngleIntegralReport { value: fine, grid: m, error: (fine - coarse).abs() })
}

/// ∫ W dx over the torus of angle pairs, integrand ∝ |w|^{1/2} cos(S/ħ − μ).
pub fn direct_trace(shell: &ShellSpec, hbar: f64) -> Result<AngleIntegralReport> {
    direct_trace_with(shell, hbar, FRAC_PI_4, 64)
}

/// `maslov` is the phase offset μ; `panels` the Gauss panels per half-range.
pub fn direct_trace_with(shell: &ShellSpec, hbar: f64, maslov: f64, panels: usize) -> Result<AngleIntegralReport> {
    if !(hbar > 0.0) || panels < 2 {
        return Err(Error::InvalidArgument(format!("direct_trace needs ħ > 0 and panels ≥ 2, got {hbar}, {panels}")));
    }
    let m = 64;
    let th = angles(m);
    let integrate = |panels: usize| -> f64 {
        // δ = θ₊ − θ₋ with δ = u² near 0 and δ = 2π − u² near 2π absorbs the √δ endpoints
        let umax = PI.sqrt();
        let nodes: Vec<(f64, f64)> = (0..panels)
            .flat_map(|k| {
                let w = umax / panels as f64;
                gauss_legendre_on(16, k as f64 * w, (k + 1) as f64 * w)
            })
            .collect();
        th.par_iter()
            .map(|&tm| {
                let dm = shell.tangent(tm);
                let mut s = 0.0;
                for &(u, wt) in &nodes {
                    for delta in [u * u, TAU - u * u] {
                        let tp = tm + delta;
                        let forward = shell.forward_segment_area(tm, tp);
                        let action = forward.min(shell.area - forward);
                        let w = shell.tangent(tp).wedge(dm).abs();
                        s += wt * 2.0 * u * w.sqrt() * (action / hbar - maslov).cos();
                    }
                }
                s
            })
            .sum::<f64>()
            * (TAU / m as f64)
    };
    // Jacobian ¼, swap double counting ½, amplitude prefactor
    let scale = 0.125 * amplitude_prefactor(hbar);
    let fine = scale * integrate(panels);
    let coarse = scale * integrate(panels / 2);
    Ok(AngleIntegralReport { value: fine, grid: panels * 16, error: (fine - coarse).abs() })
}

/// (finite-difference ∂²S/∂θ₊² at θ₋ = θ, θ₊ = θ + separation; ½ x_θ(θ₋)∧x_θ(θ₊)).
pub fn hessian_limit(shell: &ShellSpec, theta: f64, separation: f64) -> Result<(f64, f64)> {
    if !(separation > 0.0) || separation >= PI {
        return Err(Error::InvalidArgument(format!("separation must lie in (0, π), got {separation}")));
    }
    let speed = shell.tangent(theta).norm();
    if speed < 1e-12 * shell.max_speed.max(1e-300) || !speed.is_finite() {
        return Err(Error::InvalidArgument(format!("parametrization degenerates at θ={theta}")));
    }
    let s = |tp: f64| shell.forward_segment_area(theta, tp);
    let tp = theta + separation;
    let h = 0.1 * separation;
    let fd = (s(tp + h) - 2.0 * s(tp) + s(tp - h)) / (h * h);
    let limit = 0.5 * shell.tangent(theta).wedge(shell.tangent(tp));
    Ok((fd, limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chord::build_shell;
    use std::sync::OnceLock;

    fn harmonic() -> &'static ShellSpec {
        static S: OnceLock<ShellSpec> = OnceLock::new();
        S.get_or_init(|| build_shell(&HamiltonianSystem::harmonic(), 0.5, 256).unwrap())
    }

    #[test]
    fn purity_is_one() {
        let shells = [
            harmonic().clone(),
            build_shell(&HamiltonianSystem::quartic(), 0.5, 256).unwrap(),
            build_shell(&HamiltonianSystem::pendulum(), 0.3, 256).unwrap(),
        ];
        for s in &shells {
            let r = purity_t0(s, 0.05).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
            assert!(r.error < 1e-10);
        }
        let k = purity_t0_with(harmonic(), 0.05, 64, 1.3).unwrap();
        assert!((k.value - 1.69).abs() < 1e-9);
    }

    #[test]
    fn purity_decay_trivial_cases() {
        let s = harmonic();
        let h = HamiltonianSystem::harmonic();
        let q = [LindbladChannel::position(1.0)];
        assert_eq!(purity_decay(s, &h, &q, 0.0, 0.05, PurityExponent::default(), 64).unwrap().value, 1.0);
        let fh = LindbladChannel::real(
            "H",
            crate::classical::FnField::new(|x| 0.5 * (x.p * x.p + x.q * x.q)),
        );
        let r = purity_decay(s, &h, &[fh], 1.0, 0.05, PurityExponent::default(), 32).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purity_decay_closed_form() {
        let s = harmonic();
        let h = HamiltonianSystem::harmonic();
        let q = [LindbladChannel::position(1.0)];
        let (t, hbar) = (1.0, 0.05);
        let m = 256;
        let r = purity_decay(s, &h, &q, t, hbar, PurityExponent::D2OverHbar, m).unwrap();
        // q(θ, t′) = cos(θ + t′) on the unit circle
        let th = angles(m);
        let (icc, iss, ics) = (t / 2.0 + (2.0 * t).sin() / 4.0, t / 2.0 - (2.0 * t).sin() / 4.0, t.sin().powi(2) / 2.0);
        let mut sum = 0.0;
        for &a in &th {
            for &b in &th {
                let (c, d) = (a.cos() - b.cos(), -(a.sin() - b.sin()));
                let d2 = c * c * icc + d * d * iss + 2.0 * c * d * ics;
                sum += (-d2 / hbar).exp();
            }
        }
        let closed = sum / (m * m) as f64;
        assert!((r.value - closed).abs() < 1e-9, "{} vs {}", r.value, closed);
        let finer = purity_decay(s, &h, &q, t, hbar, PurityExponent::D2OverHbar, 512).unwrap();
        assert!((finer.value - r.value).abs() < 1e-6);
    }

    #[test]
    fn purity_decay_is_monotone() {
        let s = harmonic();
        let h = HamiltonianSystem::harmonic();
        let q = [LindbladChannel::position(1.0)];
        let mut last = 1.0;
        for k in 1..6 {
            let v = purity_decay(s, &h, &q, 0.05 * k as f64, 0.05, PurityExponent::default(), 64).unwrap().value;
            assert!(v <= last && v > 0.0);
            last = v;
        }
    }

    #[test]
    fn purity_decay_first_order() {
        // 1 − tr ρ² ≈ t·⟨rate⟩ with the angle-averaged Σ|ΔL|²/ħ for the D²/ħ exponent
        let s = harmonic();
        let h = HamiltonianSystem::harmonic();
        let q = [LindbladChannel::position(1.0)];
        let hbar = 0.05;
        let t = 1e-5;
        let m = 64;
        let th = angles(m);
        let avg: f64 = th
            .iter()
            .flat_map(|&a| th.iter().map(move |&b| (a.cos() - b.cos()).powi(2)))
            .sum::<f64>()
            / (m * m) as f64
            / hbar;
        let r = purity_decay(s, &h, &q, t, hbar, PurityExponent::D2OverHbar, m).unwrap();
        assert!(((1.0 - r.value) / t - avg).abs() < 2e-3 * avg, "{} {}", (1.0 - r.value) / t, avg);
    }

    #[test]
    fn direct_trace_is_stable() {
        let s = harmonic();
        let r = direct_trace(s, 0.05).unwrap();
        assert!(r.error < 1e-5, "{r:?}");
        assert!(r.value > 0.5 && r.value < 1.0);
    }

    #[test]
    fn hessian_examples() {
        let s = harmonic();
        for theta in [0.0, 1.3, 4.0] {
            let (fd, limit) = hessian_limit(s, theta, 1e-3).unwrap();
            assert!((fd - limit).abs() < 1e-4, "{fd} {limit}");
        }
        let big = build_shell(&HamiltonianSystem::harmonic(), 2.0, 256).unwrap();
        let (_, l1) = hessian_limit(s, 0.7, 1e-2).unwrap();
        let (_, l4) = hessian_limit(&big, 0.7, 1e-2).unwrap();
        assert!((l4 / l1 - 4.0).abs() < 1e-8);
        assert!(hessian_limit(s, 0.7, 0.0).is_err());
    }
}
