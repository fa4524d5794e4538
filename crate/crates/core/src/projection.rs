//! Position and momentum matrix elements of the semiclassical state, with
//! decoherence damping, and the short-chord Bessel correlation.

use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chord::{build_shell_with, ShellSpec};
use crate::classical::{FnField, HamiltonianSystem, PhaseSpacePoint, ScalarField};
use crate::error::{Error, Result};
use crate::lindblad::{decoherence_distance, require_hermitian, LindbladChannel};
use crate::special::normalized_bessel;

/// One momentum branch p_j(q) of the shell over a position q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WKBBranch {
    pub id: usize,
    pub q: f64,
    pub p: f64,
    /// 1/√(T·|∂H/∂p|), normalizing the WKB density to unit trace.
    pub amplitude: f64,
    /// ∫ p_j dq from the leftmost turning point.
    pub action: f64,
    /// −π/4 for branches moving right (p > 0), +π/4 for those moving left.
    pub maslov: f64,
    pub theta: f64,
    pub turning: bool,
}

const SCAN: usize = 2048;

fn leftmost_angle(shell: &ShellSpec) -> f64 {
    let (j, _) = (0..SCAN)
        .map(|j| (j, shell.point(TAU * j as f64 / SCAN as f64).q))
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    refine_extremum(shell, TAU * j as f64 / SCAN as f64)
}

// Newton on dq/dθ = 0.
fn refine_extremum(shell: &ShellSpec, mut theta: f64) -> f64 {
    let h = 1e-4;
    for _ in 0..50 {
        let d = shell.tangent(theta).q;
        let dd = (shell.tangent(theta + h).q - shell.tangent(theta - h).q) / (2.0 * h);
        if dd == 0.0 {
            break;
        }
        let step = (d / dd).clamp(-0.1, 0.1);
        theta -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    theta.rem_euclid(TAU)
}

/// All shell points above position q, ordered by angle.
pub fn wkb_branches(q: f64, shell: &ShellSpec) -> Vec<WKBBranch> {
    let qs: Vec<f64> = (0..SCAN).map(|j| shell.point(TAU * j as f64 / SCAN as f64).q).collect();
    let (qmin, qmax) = qs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = qmax - qmin;
    let theta_left = leftmost_angle(shell);
    let mut thetas = Vec::new();
    let mut turning = Vec::new();

    // a position at an extremum of q(θ) gives one degenerate, flagged branch
    for j in 0..SCAN {
        let (a, b, c) = (qs[(j + SCAN - 1) % SCAN], qs[j], qs[(j + 1) % SCAN]);
        if (b >= a && b >= c) || (b <= a && b <= c) {
            let th = refine_extremum(shell, TAU * j as f64 / SCAN as f64);
            if (shell.point(th).q - q).abs() <= 1e-9 * span.max(1e-300) {
                thetas.push(th);
                turning.push(true);
            }
        }
    }
    for j in 0..SCAN {
        let (t0, t1) = (TAU * j as f64 / SCAN as f64, TAU * (j + 1) as f64 / SCAN as f64);
        let (f0, f1) = (qs[j] - q, qs[(j + 1) % SCAN] - q);
        let th = if f0 == 0.0 {
            t0
        } else if f1 == 0.0 || f0.signum() == f1.signum() {
            continue;
        } else {
            let (mut lo, mut hi) = (t0, t1);
            let mut th = 0.5 * (lo + hi);
            for _ in 0..100 {
                let (x, dx) = shell.point_and_tangent(th);
                let f = x.q - q;
                if f == 0.0 {
                    break;
                }
                if f.signum() == f0.signum() {
                    lo = th;
                } else {
                    hi = th;
                }
                let newton = th - f / dx.q;
                let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if (next - th).abs() < 1e-16 || hi - lo < 1e-16 {
                    th = next;
                    break;
                }
                th = next;
            }
            th
        };
        let th = th.rem_euclid(TAU);
        let near = |t: f64, tol: f64| {
            let d = (t - th).rem_euclid(TAU);
            d.min(TAU - d) < tol
        };
        let shadowed = thetas.iter().zip(&turning).any(|(&t, &tp)| near(t, if tp { 1e-4 } else { 1e-9 }));
        if !shadowed {
            thetas.push(th);
            turning.push(false);
        }
    }
    let mut out: Vec<(f64, bool)> = thetas.into_iter().zip(turning).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));

    out.into_iter()
        .enumerate()
        .map(|(id, (theta, is_turning))| {
            let x = shell.point(theta);
            let dhdp = shell.system.gradient(x).p;
            let forward = shell.tangent(theta).q >= 0.0;
            // action along the orbit from the left turning point, forward for right-movers
            let action = if forward {
                shell.forward_arc_action(theta_left, theta)
            } else {
                -shell.forward_arc_action(theta, theta_left)
            };
            let turning = is_turning || dhdp.abs() < 1e-9 * shell.max_speed;
            WKBBranch {
                id,
                q,
                p: x.p,
                amplitude: if turning { f64::INFINITY } else { 1.0 / (shell.period * dhdp.abs()).sqrt() },
                action,
                maslov: if forward { -FRAC_PI_4 } else { FRAC_PI_4 },
                theta,
                turning,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPair {
    pub plus: usize,
    pub minus: usize,
    pub re: f64,
    pub im: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixElement {
    pub q_plus: f64,
    pub q_minus: f64,
    pub re: f64,
    pub im: f64,
    pub pairs: Vec<BranchPair>,
    /// Smallest damping factor among the summed pairs (1 when none).
    pub damping_min: f64,
    /// Set when turning-point branches were left out.
    pub turning_excluded: bool,
}

impl DensityMatrixElement {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn conjugate_swapped(mut self) -> Self {
        std::mem::swap(&mut self.q_plus, &mut self.q_minus);
        self.im = -self.im;
        for p in &mut self.pairs {
            std::mem::swap(&mut p.plus, &mut p.minus);
            p.im = -p.im;
        }
        self
    }
}

/// Σ_{j₊,j₋} a a* exp[i(s₊ − s₋)/ħ + i(μ₊ − μ₋)]·exp(−D_t²/2ħ), with D_t along the
/// tip pair launched from (p_{j±}, q±) under `system`.
pub fn density_matrix_sc(
    q_plus: f64,
    q_minus: f64,
    shell: &ShellSpec,
    system: &HamiltonianSystem,
    channels: &[LindbladChannel],
    t: f64,
    hbar: f64,
) -> Result<DensityMatrixElement> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    require_hermitian(channels)?;
    if q_plus < q_minus {
        return density_matrix_sc(q_minus, q_plus, shell, system, channels, t, hbar).map(|e| e.conjugate_swapped());
    }
    let bp = wkb_branches(q_plus, shell);
    let bm = wkb_branches(q_minus, shell);
    let turning_excluded = bp.iter().chain(&bm).any(|b| b.turning);
    let mut pairs = Vec::new();
    let mut total = Complex64::new(0.0, 0.0);
    for a in bp.iter().filter(|b| !b.turning) {
        for b in bm.iter().filter(|b| !b.turning) {
            let damping = if t == 0.0 || channels.is_empty() {
                1.0
            } else {
                let rec = decoherence_distance(
                    PhaseSpacePoint::new(a.p, q_plus),
                    PhaseSpacePoint::new(b.p, q_minus),
                    system,
                    channels,
                    t,
                    &shell.flow,
                )?;
                (-rec.squared() / (2.0 * hbar)).exp()
            };
            let phase = (a.action - b.action) / hbar + a.maslov - b.maslov;
            let v = Complex64::from_polar(a.amplitude * b.amplitude * damping, phase);
            total += v;
            pairs.push(BranchPair { plus: a.id, minus: b.id, re: v.re, im: v.im, damping });
        }
    }
    let damping_min = pairs.iter().map(|p| p.damping).fold(1.0, f64::min);
    Ok(DensityMatrixElement { q_plus, q_minus, re: total.re, im: total.im, pairs, damping_min, turning_excluded })
}

/// The field f(p = Q, q = −P): the same function in rotated canonical coordinates
/// (Q, P) = (p, −q), where the momentum representation becomes a position one.
fn rotated(f: impl ScalarField + Clone + 'static) -> FnField {
    let g = f.clone();
    FnField::new(move |x| f.value(PhaseSpacePoint::new(x.q, -x.p))).with_gradient(move |x| {
        let d = g.gradient(PhaseSpacePoint::new(x.q, -x.p));
        PhaseSpacePoint::new(-d.q, d.p)
    })
}

#[derive(Clone)]
struct ChannelPart(LindbladChannel, bool);

impl ScalarField for ChannelPart {
    fn value(&self, x: PhaseSpacePoint) -> f64 {
        let v = self.0.value(x);
        if self.1 { v.im } else { v.re }
    }
}

/// Momentum-representation element ⟨p₊|ρ|p₋⟩, evaluated as a position element
/// of the rotated system.
pub fn momentum_rep_element(
    p_plus: f64,
    p_minus: f64,
    shell: &ShellSpec,
    system: &HamiltonianSystem,
    channels: &[LindbladChannel],
    t: f64,
    hbar: f64,
) -> Result<DensityMatrixElement> {
    let rot_shell_sys = HamiltonianSystem::custom(format!("{}-rotated", shell.system.name()), rotated(shell.system.clone()));
    let rot_shell = build_shell_with(&rot_shell_sys, shell.energy, shell.boundary.len(), &shell.flow)?
        .with_maslov(shell.maslov);
    let rot_sys = HamiltonianSystem::custom(format!("{}-rotated", system.name()), rotated(system.clone()));
    require_hermitian(channels)?;
    let rot_channels: Vec<LindbladChannel> = channels
        .iter()
        .map(|c| LindbladChannel::real(c.name.clone(), rotated(ChannelPart(c.clone(), false))))
        .collect();
    density_matrix_sc(p_plus, p_minus, &rot_shell, &rot_sys, &rot_channels, t, hbar)
}

/// Normalized J_ν(z)/z^ν with ν = l/2 − 1 and z = p·separation/ħ.
pub fn bessel_correlation(separation: f64, p: f64, hbar: f64, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidArgument("degree-of-freedom count must be at least 1".into()));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let nu = 0.5 * l as f64 - 1.0;
    Ok(normalized_bessel(nu, p * separation / hbar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chord::build_shell;
    use crate::classical::FlowConfig;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn harmonic() -> &'static ShellSpec {
        static S: OnceLock<ShellSpec> = OnceLock::new();
        S.get_or_init(|| build_shell(&HamiltonianSystem::harmonic(), 0.5, 512).unwrap())
    }

    #[test]
    fn harmonic_branches() {
        let s = harmonic();
        let b = wkb_branches(0.0, s);
        assert_eq!(b.len(), 2);
        let mut ps: Vec<f64> = b.iter().map(|b| b.p).collect();
        ps.sort_by(f64::total_cmp);
        assert!((ps[0] + 1.0).abs() < 1e-10 && (ps[1] - 1.0).abs() < 1e-10);
        // action from the left turning point: quarter disk on the upper branch
        for br in &b {
            assert!((br.action.abs() - PI / 4.0).abs() < 1e-9);
            assert!((br.action.signum() - br.p.signum()).abs() < 1e-12);
        }
        assert!(wkb_branches(1.5, s).is_empty());
        let edge = wkb_branches(1.0, s);
        assert_eq!(edge.len(), 1);
        assert!(edge[0].turning);
    }

    #[test]
    fn action_derivative_is_momentum() {
        let s = build_shell(&HamiltonianSystem::quartic(), 0.5, 512).unwrap();
        let h = 1e-5;
        for q in [-0.5, 0.1, 0.6] {
            let (a, c, b) = (wkb_branches(q - h, &s), wkb_branches(q, &s), wkb_branches(q + h, &s));
            for k in 0..c.len() {
                let ds = (b[k].action - a[k].action) / (2.0 * h);
                assert!((ds - c[k].p).abs() < 1e-6, "q={q}: {ds} vs {}", c[k].p);
            }
        }
    }

    #[test]
    fn unit_trace_normalization() {
        let s = harmonic();
        // ∫ Σ_j a_j² dq = 1
        let n = 4000;
        let sum: f64 = (0..n)
            .map(|k| {
                let q = -1.0 + 2.0 * (k as f64 + 0.5) / n as f64;
                wkb_branches(q, s).iter().map(|b| b.amplitude.powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            * 2.0
            / n as f64;
        assert!((sum - 1.0).abs() < 0.02, "{sum}");
    }

    #[test]
    fn density_element_properties() {
        let s = harmonic();
        let h = HamiltonianSystem::harmonic();
        let chans = [LindbladChannel::position(1.0)];
        let a = density_matrix_sc(0.3, -0.2, s, &h, &chans, 0.4, 0.05).unwrap();
        let b = density_matrix_sc(-0.2, 0.3, s, &h, &chans, 0.4, 0.05).unwrap();
        assert_eq!(a.re, b.re);
        assert_eq!(a.im, -b.im);
        let diag = density_matrix_sc(0.25, 0.25, s, &h, &chans, 0.8, 0.05).unwrap();
        assert!(diag.pairs.iter().filter(|p| p.plus == p.minus).all(|p| p.damping == 1.0));
        let t0 = density_matrix_sc(0.3, -0.2, s, &h, &chans, 0.0, 0.05).unwrap();
        assert_eq!(t0.damping_min, 1.0);
        let free = density_matrix_sc(0.3, -0.2, s, &h, &[], 2.0, 0.05).unwrap();
        assert_eq!(free.value(), t0.value());
        assert!(density_matrix_sc(0.3, -0.2, s, &h, &[LindbladChannel::annihilation(1.0)], 1.0, 0.05).is_err());
    }

    #[test]
    fn frozen_position_decay() {
        let s = harmonic();
        let z = HamiltonianSystem::zero();
        let chans = [LindbladChannel::position(1.0)];
        let (qp, qm, t, hbar) = (0.4, -0.3, 0.3, 0.05);
        let r0 = density_matrix_sc(qp, qm, s, &z, &chans, 0.0, hbar).unwrap().value().norm();
        let rt = density_matrix_sc(qp, qm, s, &z, &chans, t, hbar).unwrap().value().norm();
        let expected = (-t * (qp - qm) * (qp - qm) / (2.0 * hbar)).exp();
        assert!((rt / r0 - expected).abs() < 1e-10 * expected.max(1e-300) + 1e-14);
    }

    #[test]
    fn momentum_mirror() {
        let s = build_shell(&HamiltonianSystem::harmonic(), 0.5, 256).unwrap();
        let h = HamiltonianSystem::harmonic();
        let pos = density_matrix_sc(0.3, -0.1, &s, &h, &[], 0.0, 0.05).unwrap();
        let mom = momentum_rep_element(0.3, -0.1, &s, &h, &[], 0.0, 0.05).unwrap();
        assert!((pos.value().norm() - mom.value().norm()).abs() < 1e-8);
        let diag = momentum_rep_element(0.2, 0.2, &s, &HamiltonianSystem::zero(), &[LindbladChannel::momentum(1.0)], 1.0, 0.05).unwrap();
        assert_eq!(diag.damping_min, 1.0);
        let z = HamiltonianSystem::zero();
        let chans = [LindbladChannel::momentum(1.0)];
        let (pp, pm, t, hbar) = (0.5, 0.1, 0.2, 0.05);
        let r0 = momentum_rep_element(pp, pm, &s, &z, &chans, 0.0, hbar).unwrap().value().norm();
        let rt = momentum_rep_element(pp, pm, &s, &z, &chans, t, hbar).unwrap().value().norm();
        let expected = (-t * (pp - pm) * (pp - pm) / (2.0 * hbar)).exp();
        assert!((rt / r0 - expected).abs() < 1e-9);
        let _ = FlowConfig::default();
    }

    #[test]
    fn bessel_examples() {
        assert!((bessel_correlation(0.0, 1.0, 0.05, 2).unwrap() - 1.0).abs() < 1e-15);
        // first zero of J0 by bisection on the evaluator
        let f = |z: f64| bessel_correlation(z, 1.0, 1.0, 2).unwrap();
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if f(lo).signum() == f(m).signum() { lo = m } else { hi = m }
        }
        assert!((lo - 2.404_825_557_7).abs() < 1e-9);
        for z in [0.3, 2.0, 9.0] {
            assert!((bessel_correlation(z, 1.0, 1.0, 3).unwrap() - z.sin() / z).abs() < 1e-11);
        }
        assert!(bessel_correlation(1.0, 1.0, 1.0, 0).is_err());
    }
}
