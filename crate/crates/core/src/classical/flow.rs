use serde::{Deserialize, Serialize};

use super::field::{HamiltonianSystem, ScalarField};
use super::point::PhaseSpacePoint;
use crate::error::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;

// Triple-jump weights; the composition of three midpoint steps is fourth order.
const W1: f64 = 1.351_207_191_959_657_6; // 1/(2 − 2^{1/3})
const W0: f64 = 1.0 - 2.0 * W1;

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub dt: f64,
    /// Absolute energy drift (scaled by max(1, |E|)) that aborts the run.
    pub drift_cap: f64,
    pub max_iterations: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, drift_cap: 1e-6, max_iterations: 80 }
    }
}

impl FlowConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }
}

/// Time-ordered samples of a flow. For backward runs the stored times are
/// negative and decreasing; `samples` is ordered along the integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<(f64, PhaseSpacePoint)>,
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn start(&self) -> PhaseSpacePoint {
        self.samples[0].1
    }

    pub fn end(&self) -> PhaseSpacePoint {
        self.samples[self.samples.len() - 1].1
    }

    pub fn duration(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn points(&self) -> impl Iterator<Item = PhaseSpacePoint> + '_ {
        self.samples.iter().map(|s| s.1)
    }
}

fn midpoint_step(
    x: PhaseSpacePoint,
    h: f64,
    system: &HamiltonianSystem,
    max_iterations: usize,
) -> Result<PhaseSpacePoint> {
    let mut y = x + system.velocity(x) * h;
    let mut last = f64::INFINITY;
    for _ in 0..max_iterations {
        let next = x + system.velocity(PhaseSpacePoint::midpoint(x, y)) * h;
        let change = next.distance(y);
        y = next;
        if !y.is_finite() {
            break;
        }
        if change <= 4.0 * f64::EPSILON * (1.0 + y.norm()) || (change >= last && change < 1e-13) {
            return Ok(y);
        }
        last = change;
    }
    Err(Error::NonConvergence(format!(
        "implicit midpoint solve at ({:.6}, {:.6}) with step {h:e}",
        x.p, x.q
    )))
}

/// One fourth-order symplectic step of size h (h may be negative).
pub fn symplectic_step(
    x: PhaseSpacePoint,
    h: f64,
    system: &HamiltonianSystem,
    max_iterations: usize,
) -> Result<PhaseSpacePoint> {
    let a = midpoint_step(x, W1 * h, system, max_iterations)?;
    let b = midpoint_step(a, W0 * h, system, max_iterations)?;
    midpoint_step(b, W1 * h, system, max_iterations)
}

/// Integrates Hamilton's equations for time t (negative t runs backward).
pub fn hamiltonian_flow(
    x0: PhaseSpacePoint,
    t: f64,
    system: &HamiltonianSystem,
    dt: f64,
) -> Result<Trajectory> {
    flow_with(x0, t, system, &FlowConfig::with_dt(dt))
}

pub fn flow_with(
    x0: PhaseSpacePoint,
    t: f64,
    system: &HamiltonianSystem,
    config: &FlowConfig,
) -> Result<Trajectory> {
    check_config(config)?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("flow duration {t}")));
    }
    let steps = (t.abs() / config.dt).ceil() as usize;
    flow_steps(x0, t, steps, system, config)
}

/// Integrates with exactly `steps` equal steps (zero steps only when t = 0).
pub fn flow_steps(
    x0: PhaseSpacePoint,
    t: f64,
    steps: usize,
    system: &HamiltonianSystem,
    config: &FlowConfig,
) -> Result<Trajectory> {
    if !x0.is_finite() {
        return Err(Error::NonFinite("initial point".into()));
    }
    if t == 0.0 || steps == 0 {
        return Ok(Trajectory { samples: vec![(0.0, x0)], energy_drift: 0.0 });
    }
    let h = t / steps as f64;
    let e0 = system.energy(x0);
    let cap = config.drift_cap * e0.abs().max(1.0);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((0.0, x0));
    let mut x = x0;
    let mut drift: f64 = 0.0;
    for k in 1..=steps {
        x = symplectic_step(x, h, system, config.max_iterations)?;
        let d = (system.energy(x) - e0).abs();
        if !d.is_finite() || d > cap {
            return Err(Error::StepRejected { drift: d, cap });
        }
        drift = drift.max(d);
        samples.push((h * k as f64, x));
    }
    Ok(Trajectory { samples, energy_drift: drift })
}

/// End point of the time-t flow without keeping the samples.
pub fn flow_point(
    x0: PhaseSpacePoint,
    t: f64,
    system: &HamiltonianSystem,
    config: &FlowConfig,
) -> Result<PhaseSpacePoint> {
    check_config(config)?;
    let steps = (t.abs() / config.dt).ceil() as usize;
    if steps == 0 {
        return Ok(x0);
    }
    let h = t / steps as f64;
    let mut x = x0;
    for _ in 0..steps {
        x = symplectic_step(x, h, system, config.max_iterations)?;
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("flow end point".into()));
    }
    Ok(x)
}

fn check_config(config: &FlowConfig) -> Result<()> {
    if !(config.dt > 0.0) || !config.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {}", config.dt)));
    }
    Ok(())
}

/// A closed shell orbit: the minimum it winds around, a start point and the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub energy: f64,
    pub centre: PhaseSpacePoint,
    pub start: PhaseSpacePoint,
    pub period: f64,
}

/// The minimum of H reached by damped Newton from the origin, with its value.
pub fn shell_minimum(system: &HamiltonianSystem) -> Option<(PhaseSpacePoint, f64)> {
    find_minimum(system).map(|x| (x, system.energy(x)))
}

fn find_minimum(system: &HamiltonianSystem) -> Option<PhaseSpacePoint> {
    let mut x = PhaseSpacePoint::ORIGIN;
    for _ in 0..200 {
        let g = system.gradient(x);
        if g.norm() < 1e-12 {
            return Some(x);
        }
        let h = 1e-5 * x.norm().max(1.0);
        let gp = (system.gradient(x + PhaseSpacePoint::new(h, 0.0))
            - system.gradient(x - PhaseSpacePoint::new(h, 0.0)))
            * (0.5 / h);
        let gq = (system.gradient(x + PhaseSpacePoint::new(0.0, h))
            - system.gradient(x - PhaseSpacePoint::new(0.0, h)))
            * (0.5 / h);
        let det = gp.p * gq.q - gq.p * gp.q;
        let step = if det > 1e-12 && gp.p > 0.0 {
            PhaseSpacePoint::new(
                (gq.q * g.p - gq.p * g.q) / det,
                (-gp.q * g.p + gp.p * g.q) / det,
            )
        } else {
            g * 0.1
        };
        let mut s = 1.0;
        let e = system.energy(x);
        while system.energy(x - step * s) > e && s > 1e-8 {
            s *= 0.5;
        }
        x = x - step * s;
        if !x.is_finite() {
            return None;
        }
    }
    (system.gradient(x).norm() < 1e-9).then_some(x)
}

/// Locates the closed orbit H = E around the minimum of H and measures its period.
pub fn locate_orbit(system: &HamiltonianSystem, energy: f64, config: &FlowConfig) -> Result<PeriodicOrbit> {
    check_config(config)?;
    if !energy.is_finite() {
        return Err(Error::InvalidArgument(format!("energy {energy}")));
    }
    let centre = find_minimum(system).ok_or(Error::OpenShell(energy))?;
    let minimum = system.energy(centre);
    if energy <= minimum + 1e-14 * minimum.abs().max(1.0) {
        return Err(Error::EmptyShell { energy, minimum });
    }

    let on_ray = |r: f64| system.energy(centre + PhaseSpacePoint::new(0.0, r)) - energy;
    let (mut lo, mut hi) = (0.0, 1e-3);
    while on_ray(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::OpenShell(energy));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if on_ray(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let start = centre + PhaseSpacePoint::new(0.0, if on_ray(lo).abs() < on_ray(hi).abs() { lo } else { hi });
    let v0 = system.velocity(start);
    if v0.norm() == 0.0 {
        return Err(Error::OpenShell(energy));
    }

    let h = config.dt;
    let g = |x: PhaseSpacePoint| (x - start).dot(v0);
    let mut x = start;
    let mut t = 0.0;
    let mut reach: f64 = 0.0;
    let mut prev_g = 0.0;
    let max_steps = 50_000_000usize;
    for k in 1..=max_steps {
        let next = symplectic_step(x, h, system, config.max_iterations)?;
        let gn = g(next);
        let dist = next.distance(start);
        reach = reach.max(dist);
        if k > 2 && prev_g < 0.0 && gn >= 0.0 && dist < 0.1 * reach {
            // refine the crossing inside the last step
            let (mut a, mut b) = (0.0, h);
            let (mut ga, mut gb) = (prev_g, gn);
            for _ in 0..100 {
                let s = if gb != ga { a - ga * (b - a) / (gb - ga) } else { 0.5 * (a + b) };
                let s = if s <= a || s >= b { 0.5 * (a + b) } else { s };
                let gs = g(symplectic_step(x, s, system, config.max_iterations)?);
                if gs < 0.0 {
                    a = s;
                    ga = gs;
                } else {
                    b = s;
                    gb = gs;
                }
                if (b - a) < 1e-15 * (1.0 + t) || gs.abs() < 1e-18 {
                    break;
                }
                // Illinois modification keeps the bracket shrinking from both sides
                if gs < 0.0 {
                    gb *= 0.5;
                } else {
                    ga *= 0.5;
                }
            }
            let s = if ga.abs() < gb.abs() { a } else { b };
            let end = symplectic_step(x, s, system, config.max_iterations)?;
            let miss = end.distance(start);
            if miss > 1e-8 {
                return Err(Error::NonConvergence(format!(
                    "orbit at E={energy} misses its start by {miss:e}"
                )));
            }
            return Ok(PeriodicOrbit { energy, centre, start, period: t + s });
        }
        prev_g = gn;
        x = next;
        t += h;
        if !x.is_finite() || reach > 1e8 {
            return Err(Error::OpenShell(energy));
        }
    }
    Err(Error::NonConvergence(format!("no return to start at E={energy}")))
}

/// One period of the orbit sampled at `n` equal time steps (the end point is not repeated).
pub fn orbit_samples(
    system: &HamiltonianSystem,
    orbit: &PeriodicOrbit,
    n: usize,
    config: &FlowConfig,
) -> Result<Vec<PhaseSpacePoint>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let sub = ((orbit.period / n as f64) / config.dt).ceil().max(1.0) as usize;
    let h = orbit.period / (n * sub) as f64;
    let mut out = Vec::with_capacity(n);
    let mut x = orbit.start;
    for _ in 0..n {
        out.push(x);
        for _ in 0..sub {
            x = symplectic_step(x, h, system, config.max_iterations)?;
        }
    }
    Ok(out)
}

/// Time average of f over one period of the shell H = E.
pub fn shell_average<F: ScalarField + ?Sized>(
    f: &F,
    energy: f64,
    system: &HamiltonianSystem,
) -> Result<f64> {
    shell_average_with(f, energy, system, &FlowConfig::default())
}

pub fn shell_average_with<F: ScalarField + ?Sized>(
    f: &F,
    energy: f64,
    system: &HamiltonianSystem,
    config: &FlowConfig,
) -> Result<f64> {
    let orbit = locate_orbit(system, energy, config)?;
    let n = (orbit.period / config.dt).ceil().max(64.0) as usize;
    let pts = orbit_samples(system, &orbit, n, &FlowConfig { dt: orbit.period / n as f64, ..*config })?;
    // periodic trapezoid rule, spectrally accurate for smooth f
    let sum: f64 = pts.iter().map(|&x| f.value(x)).sum();
    let avg = sum / n as f64;
    if !avg.is_finite() {
        return Err(Error::NonFinite("shell average".into()));
    }
    Ok(avg)
}

/// Area enclosed by the shell, ∮ p dq = ∫ p ∂H/∂p dt over one period.
pub fn enclosed_area(system: &HamiltonianSystem, energy: f64, config: &FlowConfig) -> Result<f64> {
    let orbit = locate_orbit(system, energy, config)?;
    let n = (orbit.period / config.dt).ceil().max(64.0) as usize;
    let pts = orbit_samples(system, &orbit, n, &FlowConfig { dt: orbit.period / n as f64, ..*config })?;
    let sum: f64 = pts
        .iter()
        .map(|&x| (x.p - orbit.centre.p) * system.gradient(x).p)
        .sum();
    Ok((sum * orbit.period / n as f64).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::field::{FnField, Polynomial};
    use std::f64::consts::PI;

    fn pt(p: f64, q: f64) -> PhaseSpacePoint {
        PhaseSpacePoint::new(p, q)
    }

    #[test]
    fn harmonic_quarter_turn() {
        let tr = hamiltonian_flow(pt(0.0, 1.0), PI / 2.0, &HamiltonianSystem::harmonic(), 1e-3).unwrap();
        assert!(tr.end().distance(pt(-1.0, 0.0)) < 1e-6);
        assert!(tr.samples.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn zero_time_is_single_sample() {
        let tr = hamiltonian_flow(pt(0.2, 0.1), 0.0, &HamiltonianSystem::quartic(), 1e-3).unwrap();
        assert_eq!(tr.samples, vec![(0.0, pt(0.2, 0.1))]);
    }

    #[test]
    fn quartic_drift_is_small() {
        let sys = HamiltonianSystem::quartic();
        let tr = hamiltonian_flow(pt(0.3, 0.7), 10.0, &sys, 1e-3).unwrap();
        assert!(tr.energy_drift <= 1e-8, "drift {}", tr.energy_drift);
        // tighter-step reference run
        let fine = flow_point(pt(0.3, 0.7), 10.0, &sys, &FlowConfig::with_dt(2.5e-4)).unwrap();
        assert!(fine.distance(tr.end()) < 1e-9);
    }

    #[test]
    fn backward_flow_inverts_forward() {
        let sys = HamiltonianSystem::pendulum();
        let fwd = flow_point(pt(0.5, 0.2), 3.0, &sys, &FlowConfig::default()).unwrap();
        let back = flow_point(fwd, -3.0, &sys, &FlowConfig::default()).unwrap();
        assert!(back.distance(pt(0.5, 0.2)) < 1e-12);
    }

    #[test]
    fn bad_step_is_rejected() {
        assert!(hamiltonian_flow(pt(0.0, 1.0), 1.0, &HamiltonianSystem::harmonic(), 0.0).is_err());
        assert!(hamiltonian_flow(pt(0.0, 1.0), 1.0, &HamiltonianSystem::harmonic(), -1e-3).is_err());
        let huge = hamiltonian_flow(pt(0.0, 3.0), 5.0, &HamiltonianSystem::quartic(), 0.5);
        assert!(huge.is_err());
    }

    #[test]
    fn periods() {
        let cfg = FlowConfig::default();
        let o = locate_orbit(&HamiltonianSystem::harmonic(), 0.5, &cfg).unwrap();
        assert!((o.period - 2.0 * PI).abs() < 1e-10);
        // small-amplitude pendulum approaches 2π
        let o = locate_orbit(&HamiltonianSystem::pendulum(), -1.0 + 1e-4, &cfg).unwrap();
        assert!((o.period - 2.0 * PI).abs() < 1e-3);
        assert!(matches!(
            locate_orbit(&HamiltonianSystem::harmonic(), -1.0, &cfg),
            Err(Error::EmptyShell { .. })
        ));
        assert!(matches!(
            locate_orbit(&HamiltonianSystem::pendulum(), 1.5, &cfg),
            Err(Error::OpenShell(_))
        ));
    }

    #[test]
    fn quartic_period_matches_quadrature() {
        // T = 4 ∫_0^a dq / sqrt(2E − q⁴), a = (2E)^{1/4}; with q = a·s this is
        // 4 a^{-1} ∫_0^1 ds / sqrt(1 − s⁴) and the integral is Γ(1/4)²/(4√(2π)).
        let e: f64 = 0.5;
        let a = (2.0 * e).powf(0.25);
        let gamma_quarter = 3.625_609_908_221_908;
        let lemniscate = gamma_quarter * gamma_quarter / (4.0 * (2.0 * PI).sqrt());
        let expected = 4.0 * lemniscate / a;
        let o = locate_orbit(&HamiltonianSystem::quartic(), e, &FlowConfig::default()).unwrap();
        assert!((o.period - expected).abs() < 1e-9, "{} vs {}", o.period, expected);
    }

    #[test]
    fn shell_average_examples() {
        let h = HamiltonianSystem::harmonic();
        let one = FnField::new(|_| 1.0);
        assert!((shell_average(&one, 0.5, &h).unwrap() - 1.0).abs() < 1e-14);
        let p2 = Polynomial::from_triples(&[(1.0, 2, 0)]);
        assert!((shell_average(&p2, 0.5, &h).unwrap() - 0.5).abs() < 1e-9);
        assert!((shell_average(&p2, 2.0, &h).unwrap() - 2.0).abs() < 1e-9);
        assert!(shell_average(&p2, -0.1, &h).is_err());
    }

    #[test]
    fn area_of_harmonic_shell() {
        let a = enclosed_area(&HamiltonianSystem::harmonic(), 0.5, &FlowConfig::default()).unwrap();
        assert!((a - PI).abs() < 1e-10);
    }

    #[test]
    fn time_map_is_area_preserving() {
        let sys = HamiltonianSystem::pendulum();
        let cfg = FlowConfig::default();
        let x = pt(0.4, 1.0);
        let h = 1e-6;
        let f = |d: PhaseSpacePoint| flow_point(x + d, 2.0, &sys, &cfg).unwrap();
        let dp = (f(pt(h, 0.0)) - f(pt(-h, 0.0))) * (0.5 / h);
        let dq = (f(pt(0.0, h)) - f(pt(0.0, -h))) * (0.5 / h);
        let det = dp.p * dq.q - dq.p * dp.q;
        assert!((det - 1.0).abs() < 1e-6, "det {det}");
    }
}
