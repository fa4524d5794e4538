use std::f64::consts::{PI, TAU};

use super::curve::ShellCurve;
use crate::classical::{
    enclosed_area, locate_orbit, orbit_samples, shell_minimum, FlowConfig, HamiltonianSystem,
    PhaseSpacePoint,
};
use crate::error::{Error, Result};

pub const DEFAULT_MASLOV: f64 = PI / 4.0;
pub const CAUSTIC_FRACTION: f64 = 1e-3;

/// A closed energy shell parametrized by the canonical angle θ = 2πt/T.
#[derive(Debug, Clone)]
pub struct ShellSpec {
    pub system: HamiltonianSystem,
    pub energy: f64,
    pub period: f64,
    pub centre: PhaseSpacePoint,
    /// Uniform-in-time samples, boundary[j] at θ = 2πj/n.
    pub boundary: Vec<PhaseSpacePoint>,
    /// Enclosed area ∮ p dq.
    pub area: f64,
    pub max_speed: f64,
    /// Constant phase offset carried by every chord.
    pub maslov: f64,
    pub flow: FlowConfig,
    curve: ShellCurve,
    orientation: f64,
}

/// Samples the shell H = E and fits the angle interpolant.
pub fn build_shell(system: &HamiltonianSystem, energy: f64, n_samples: usize) -> Result<ShellSpec> {
    build_shell_with(system, energy, n_samples, &FlowConfig::default())
}

pub fn build_shell_with(
    system: &HamiltonianSystem,
    energy: f64,
    n_samples: usize,
    flow: &FlowConfig,
) -> Result<ShellSpec> {
    if n_samples < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 shell samples, got {n_samples}")));
    }
    let orbit = locate_orbit(system, energy, flow)?;
    let boundary = orbit_samples(system, &orbit, n_samples, flow)?;

    // refit on finer grids until the interpolant stays on the shell between nodes
    let mut n = 256usize.max(n_samples.next_power_of_two());
    let curve = loop {
        let pts = if n == n_samples { boundary.clone() } else { orbit_samples(system, &orbit, n, flow)? };
        let curve = ShellCurve::from_points(&pts);
        let residual = (0..n)
            .map(|j| {
                let th = TAU * (j as f64 + 0.5) / n as f64;
                (system.energy(curve.point(th)) - energy).abs()
            })
            .fold(0.0f64, f64::max);
        if residual <= 1e-11 * energy.abs().max(1.0) {
            break curve;
        }
        if n >= 1 << 17 {
            return Err(Error::NonConvergence(format!(
                "shell interpolant residual {residual:e} at E={energy}"
            )));
        }
        n *= 2;
    };

    let signed = curve.signed_area();
    let max_speed = (0..1024)
        .map(|j| system.velocity(curve.point(TAU * j as f64 / 1024.0)).norm())
        .fold(0.0f64, f64::max);
    Ok(ShellSpec {
        system: system.clone(),
        energy,
        period: orbit.period,
        centre: orbit.centre,
        boundary,
        area: signed.abs(),
        max_speed,
        maslov: DEFAULT_MASLOV,
        flow: *flow,
        curve,
        orientation: signed.signum(),
    })
}

/// Energy whose shell encloses 2πħ(n + ½).
pub fn quantized_energy(system: &HamiltonianSystem, n: u32, hbar: f64, flow: &FlowConfig) -> Result<f64> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let target = TAU * hbar * (n as f64 + 0.5);
    let (_, e_min) = shell_minimum(system).ok_or(Error::OpenShell(f64::NAN))?;
    let area = |e: f64| enclosed_area(system, e, flow);
    let mut lo = e_min;
    let mut a_lo = 0.0;
    let mut width = target / TAU;
    let mut hi = e_min + width;
    let mut a_hi = area(hi)?;
    while a_hi < target {
        lo = hi;
        a_lo = a_hi;
        width *= 2.0;
        hi = e_min + width;
        a_hi = area(hi)?;
    }
    for _ in 0..100 {
        let guess = lo + (target - a_lo) * (hi - lo) / (a_hi - a_lo);
        let mid = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
        let a = area(mid)?;
        if (a - target).abs() < 1e-13 * target || (hi - lo) < 1e-15 * hi.abs().max(1.0) {
            return Ok(mid);
        }
        if a < target {
            lo = mid;
            a_lo = a;
        } else {
            hi = mid;
            a_hi = a;
        }
    }
    Err(Error::NonConvergence(format!("quantized energy for n={n}")))
}

impl ShellSpec {
    pub fn with_maslov(mut self, maslov: f64) -> Self {
        self.maslov = maslov;
        self
    }

    pub fn point(&self, theta: f64) -> PhaseSpacePoint {
        self.curve.point(theta)
    }

    /// Angle derivative dx/dθ = (T/2π)·J∇H.
    pub fn tangent(&self, theta: f64) -> PhaseSpacePoint {
        self.curve.tangent(theta)
    }

    pub fn point_and_tangent(&self, theta: f64) -> (PhaseSpacePoint, PhaseSpacePoint) {
        self.curve.point_and_tangent(theta)
    }

    /// Hamiltonian velocity at the shell point with angle θ.
    pub fn velocity(&self, theta: f64) -> PhaseSpacePoint {
        self.system.velocity(self.point(theta))
    }

    pub fn caustic_tolerance(&self) -> f64 {
        CAUSTIC_FRACTION * self.max_speed * self.max_speed
    }

    pub fn curve_modes(&self) -> usize {
        self.curve.modes()
    }

    /// Signed area between the forward arc θa → θb (θb reached after less than
    /// one turn) and the chord closing it, positive for the shell's orientation.
    pub fn forward_segment_area(&self, theta_a: f64, theta_b: f64) -> f64 {
        let delta = (theta_b - theta_a).rem_euclid(TAU);
        let (xa, xb) = (self.point(theta_a), self.point(theta_a + delta));
        let arc = self.curve.action(theta_a + delta) - self.curve.action(theta_a);
        self.orientation * (arc - 0.5 * (xa.p + xb.p) * (xb.q - xa.q))
    }

    /// ∫ p dq along the forward arc θa → θb.
    pub fn forward_arc_action(&self, theta_a: f64, theta_b: f64) -> f64 {
        let delta = (theta_b - theta_a).rem_euclid(TAU);
        self.curve.action(theta_a + delta) - self.curve.action(theta_a)
    }

    /// Angle of the shell point closest to x, and the distance to it.
    pub fn locate(&self, x: PhaseSpacePoint) -> (f64, f64) {
        let n = self.boundary.len();
        let (j, _) = self
            .boundary
            .iter()
            .enumerate()
            .map(|(j, b)| (j, b.distance(x)))
            .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        let mut theta = TAU * j as f64 / n as f64;
        for _ in 0..60 {
            let (y, dy) = self.point_and_tangent(theta);
            let step = (y - x).dot(dy) / dy.dot(dy).max(f64::MIN_POSITIVE);
            theta -= step.clamp(-0.5, 0.5);
            if step.abs() < 1e-15 {
                break;
            }
        }
        let theta = theta.rem_euclid(TAU);
        (theta, self.point(theta).distance(x))
    }

    /// Maximum |H − E| over the stored boundary samples.
    pub fn boundary_residual(&self) -> f64 {
        self.boundary
            .iter()
            .map(|&x| (self.system.energy(x) - self.energy).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_shell_is_unit_circle() {
        let s = build_shell(&HamiltonianSystem::harmonic(), 0.5, 512).unwrap();
        assert_eq!(s.boundary.len(), 512);
        assert!((s.period - TAU).abs() < 1e-10);
        assert!(s.boundary.iter().all(|x| (x.norm() - 1.0).abs() < 1e-10));
        assert!((s.area - PI).abs() < 1e-10);
        assert!(s.boundary_residual() < 1e-12);
    }

    #[test]
    fn empty_and_open_shells() {
        assert!(matches!(
            build_shell(&HamiltonianSystem::harmonic(), -0.1, 64),
            Err(Error::EmptyShell { .. })
        ));
        assert!(matches!(
            build_shell(&HamiltonianSystem::pendulum(), 1.2, 64),
            Err(Error::OpenShell(_))
        ));
    }

    #[test]
    fn quartic_shell_residual() {
        let s = build_shell(&HamiltonianSystem::quartic(), 0.5, 512).unwrap();
        assert!(s.boundary_residual() <= 1e-8);
        for j in 0..97 {
            let th = TAU * j as f64 / 97.0;
            assert!((s.system.energy(s.point(th)) - 0.5).abs() <= 1e-8);
            // interpolated tangent is the scaled hamiltonian velocity
            let v = s.velocity(th) * (s.period / TAU);
            assert!((s.tangent(th) - v).norm() < 1e-8);
        }
    }

    #[test]
    fn harmonic_quantization() {
        let e = quantized_energy(&HamiltonianSystem::harmonic(), 10, 1.0, &FlowConfig::default()).unwrap();
        assert!((e - 10.5).abs() < 1e-9);
    }

    #[test]
    fn locate_points() {
        let s = build_shell(&HamiltonianSystem::harmonic(), 0.5, 256).unwrap();
        let (th, d) = s.locate(s.point(2.0));
        assert!((th - 2.0).abs() < 1e-10 && d < 1e-12);
        let (_, d) = s.locate(PhaseSpacePoint::new(0.0, 0.5));
        assert!((d - 0.5).abs() < 1e-10);
    }
}
