//! Chord contributions under hermitian Lindblad channels: rates, the
//! decoherence distance, and continuous and split evolution.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chord::Chord;
use crate::classical::{
    flow_steps, FlowConfig, HamiltonianSystem, PhaseSpacePoint, Polynomial, ScalarField, Trajectory,
};
use crate::error::{Error, Result};
use crate::quadrature::cumulative_simpson;

/// One term (re + i·im)·p^i·q^j of a Weyl symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylTerm {
    pub re: f64,
    pub im: f64,
    pub p_power: u32,
    pub q_power: u32,
}

/// Complex polynomial symbol, quantized by symmetric ordering in the oracle.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeylPolynomial {
    pub terms: Vec<WeylTerm>,
}

impl WeylPolynomial {
    pub fn real(poly: &Polynomial) -> Self {
        Self {
            terms: poly
                .terms
                .iter()
                .map(|m| WeylTerm { re: m.coefficient, im: 0.0, p_power: m.p_power, q_power: m.q_power })
                .collect(),
        }
    }

    pub fn real_part(&self) -> Polynomial {
        Polynomial::from_triples(&self.terms.iter().map(|t| (t.re, t.p_power, t.q_power)).collect::<Vec<_>>())
    }

    pub fn imag_part(&self) -> Polynomial {
        Polynomial::from_triples(&self.terms.iter().map(|t| (t.im, t.p_power, t.q_power)).collect::<Vec<_>>())
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.im == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|t| WeylTerm { re: t.re * s, im: t.im * s, ..*t }).collect() }
    }
}

/// An environment coupling L(x); the coupling constant is folded into L.
#[derive(Clone)]
pub struct LindbladChannel {
    pub name: String,
    re: Arc<dyn ScalarField>,
    im: Option<Arc<dyn ScalarField>>,
    symbol: Option<WeylPolynomial>,
}

impl fmt::Debug for LindbladChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LindbladChannel")
            .field("name", &self.name)
            .field("hermitian", &self.is_hermitian())
            .field("symbol", &self.symbol)
            .finish()
    }
}

impl LindbladChannel {
    pub fn polynomial(name: impl Into<String>, symbol: WeylPolynomial) -> Self {
        let im = (!symbol.is_real()).then(|| Arc::new(symbol.imag_part()) as Arc<dyn ScalarField>);
        Self { name: name.into(), re: Arc::new(symbol.real_part()), im, symbol: Some(symbol) }
    }

    /// L = c·q
    pub fn position(coupling: f64) -> Self {
        Self::polynomial("q", WeylPolynomial::real(&Polynomial::q().scaled(coupling)))
    }

    /// L = c·p
    pub fn momentum(coupling: f64) -> Self {
        Self::polynomial("p", WeylPolynomial::real(&Polynomial::p().scaled(coupling)))
    }

    /// L = c·(q + ip)/√2
    pub fn annihilation(coupling: f64) -> Self {
        let s = coupling / 2f64.sqrt();
        Self::polynomial(
            "a",
            WeylPolynomial {
                terms: vec![
                    WeylTerm { re: s, im: 0.0, p_power: 0, q_power: 1 },
                    WeylTerm { re: 0.0, im: s, p_power: 1, q_power: 0 },
                ],
            },
        )
    }

    /// Real channel from an arbitrary field (no operator symbol attached).
    pub fn real(name: impl Into<String>, field: impl ScalarField + 'static) -> Self {
        Self { name: name.into(), re: Arc::new(field), im: None, symbol: None }
    }

    pub fn complex(
        name: impl Into<String>,
        re: impl ScalarField + 'static,
        im: impl ScalarField + 'static,
    ) -> Self {
        Self { name: name.into(), re: Arc::new(re), im: Some(Arc::new(im)), symbol: None }
    }

    pub fn value(&self, x: PhaseSpacePoint) -> Complex64 {
        Complex64::new(self.re.value(x), self.im.as_ref().map_or(0.0, |f| f.value(x)))
    }

    pub fn real_field(&self) -> &dyn ScalarField {
        &*self.re
    }

    pub fn symbol(&self) -> Option<&WeylPolynomial> {
        self.symbol.as_ref()
    }

    pub fn is_hermitian(&self) -> bool {
        self.im.is_none()
    }
}

/// Fails unless every channel is real.
pub fn require_hermitian(channels: &[LindbladChannel]) -> Result<()> {
    match channels.iter().find(|c| !c.is_hermitian()) {
        Some(c) => Err(Error::NonHermitianChannel(c.name.clone())),
        None => Ok(()),
    }
}

/// Σ_j |L_j(x₊) − L_j(x₋)|².
pub fn channel_spread(channels: &[LindbladChannel], x_plus: PhaseSpacePoint, x_minus: PhaseSpacePoint) -> f64 {
    channels.iter().map(|c| (c.value(x_plus) - c.value(x_minus)).norm_sqr()).sum()
}

/// Time derivative of one chord term for general (possibly complex) channels,
/// with the term's phase φ = S/ħ − maslov.
pub fn lindblad_rate_at(
    x_plus: PhaseSpacePoint,
    x_minus: PhaseSpacePoint,
    action: f64,
    amplitude: f64,
    maslov: f64,
    channels: &[LindbladChannel],
    hbar: f64,
) -> f64 {
    let phase = action / hbar - maslov;
    let rot = Complex64::from_polar(1.0, phase);
    let sum: f64 = channels
        .iter()
        .map(|c| {
            let (lp, lm) = (c.value(x_plus), c.value(x_minus));
            (lp * lm.conj() * rot).re - 0.5 * (lp.norm_sqr() + lm.norm_sqr()) * phase.cos()
        })
        .sum();
    amplitude / hbar * sum
}

pub fn lindblad_rate(chord: &Chord, channels: &[LindbladChannel], hbar: f64) -> Result<f64> {
    let a = chord.amplitude(hbar)?;
    Ok(lindblad_rate_at(chord.x_plus, chord.x_minus, chord.action, a, chord.maslov, channels, hbar))
}

/// (1/2ħ) Σ_j |L_j(x₊) − L_j(x₋)|².
pub fn hermitian_decay_rate(chord: &Chord, channels: &[LindbladChannel], hbar: f64) -> Result<f64> {
    require_hermitian(channels)?;
    Ok(channel_spread(channels, chord.x_plus, chord.x_minus) / (2.0 * hbar))
}

/// Tip trajectories and the accumulated D_t² on a common time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceRecord {
    pub t: f64,
    /// D_t ≥ 0.
    pub distance: f64,
    /// (t′, Σ_j |ΔL_j|²) at the grid nodes.
    pub integrand: Vec<(f64, f64)>,
    /// D² at every grid node.
    pub cumulative: Vec<f64>,
    pub plus: Trajectory,
    pub minus: Trajectory,
}

impl DecoherenceRecord {
    pub fn squared(&self) -> f64 {
        self.distance * self.distance
    }
}

fn even_steps(t: f64, dt: f64) -> usize {
    if t == 0.0 {
        return 0;
    }
    let n = ((t.abs() / dt).ceil() as usize).max(2);
    n + n % 2
}

pub fn decoherence_distance(
    x_plus: PhaseSpacePoint,
    x_minus: PhaseSpacePoint,
    system: &HamiltonianSystem,
    channels: &[LindbladChannel],
    t: f64,
    flow: &FlowConfig,
) -> Result<DecoherenceRecord> {
    require_hermitian(channels)?;
    let n = even_steps(t, flow.dt);
    let plus = flow_steps(x_plus, t, n, system, flow)?;
    let minus = flow_steps(x_minus, t, n, system, flow)?;
    let integrand: Vec<(f64, f64)> = plus
        .samples
        .iter()
        .zip(&minus.samples)
        .map(|(a, b)| (a.0, channel_spread(channels, a.1, b.1)))
        .collect();
    let h = if n == 0 { 0.0 } else { t.abs() / n as f64 };
    let values: Vec<f64> = integrand.iter().map(|v| v.1).collect();
    let cumulative: Vec<f64> = cumulative_simpson(&values, h).into_iter().map(|v| v.max(0.0)).collect();
    let d2 = *cumulative.last().unwrap_or(&0.0);
    Ok(DecoherenceRecord { t, distance: d2.sqrt(), integrand, cumulative, plus, minus })
}

/// One row of an evolution trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSample {
    pub t: f64,
    pub x_plus: PhaseSpacePoint,
    pub x_minus: PhaseSpacePoint,
    pub action: f64,
    pub distance: f64,
    pub damping: f64,
}

/// A chord carried to time t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolvedChord {
    /// Chord at time t; its tips need not lie on the original shell.
    pub base: Chord,
    pub action: f64,
    pub damping: f64,
    /// −D_t²/2ħ, kept separately so strong suppression stays readable.
    pub log_damping: f64,
    pub trace: Vec<EvolutionSample>,
}

fn moved_chord(chord0: &Chord, x_plus: PhaseSpacePoint, x_minus: PhaseSpacePoint, action: f64) -> Chord {
    Chord {
        centre: PhaseSpacePoint::midpoint(x_plus, x_minus),
        xi: x_plus - x_minus,
        x_plus,
        x_minus,
        angles: None,
        action,
        ..chord0.clone()
    }
}

/// Continuous evolution: classical transport of the tips, Hamilton–Jacobi
/// update of the action and damping exp(−D_t²/2ħ). The amplitude is held.
pub fn evolve_contribution(
    chord0: &Chord,
    system: &HamiltonianSystem,
    channels: &[LindbladChannel],
    t: f64,
    hbar: f64,
    flow: &FlowConfig,
) -> Result<EvolvedChord> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let rec = decoherence_distance(chord0.x_plus, chord0.x_minus, system, channels, t, flow)?;
    let dh: Vec<f64> = rec
        .plus
        .samples
        .iter()
        .zip(&rec.minus.samples)
        .map(|(a, b)| system.energy(a.1) - system.energy(b.1))
        .collect();
    let h = if dh.len() > 1 { t / (dh.len() - 1) as f64 } else { 0.0 };
    let actions: Vec<f64> = cumulative_simpson(&dh, h).iter().map(|s| chord0.action - s).collect();
    let trace: Vec<EvolutionSample> = (0..dh.len())
        .map(|k| EvolutionSample {
            t: rec.plus.samples[k].0,
            x_plus: rec.plus.samples[k].1,
            x_minus: rec.minus.samples[k].1,
            action: actions[k],
            distance: rec.cumulative[k].sqrt(),
            damping: (-rec.cumulative[k] / (2.0 * hbar)).exp(),
        })
        .collect();
    let last = trace[trace.len() - 1];
    let log_damping = -rec.squared() / (2.0 * hbar);
    Ok(EvolvedChord {
        base: moved_chord(chord0, last.x_plus, last.x_minus, last.action),
        action: last.action,
        damping: log_damping.exp(),
        log_damping,
        trace,
    })
}

/// N-step splitting: each step transports the tips for t/N (the doubled
/// Hamiltonian over t/2N) and then damps the frozen chord with couplings
/// scaled by √2 over t/2N. Channels are the physical ones; the rescaling is internal.
pub fn trotter_evolve(
    chord0: &Chord,
    system: &HamiltonianSystem,
    channels: &[LindbladChannel],
    t: f64,
    n: usize,
    hbar: f64,
    flow: &FlowConfig,
) -> Result<EvolvedChord> {
    if n == 0 {
        return Err(Error::InvalidArgument("trotter_evolve needs at least one step".into()));
    }
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    require_hermitian(channels)?;
    let doubled = system.scaled(2.0);
    let half = t / (2 * n) as f64;
    let (mut xp, mut xm) = (chord0.x_plus, chord0.x_minus);
    let mut action = chord0.action;
    let mut log_damping = 0.0;
    let mut trace = vec![EvolutionSample { t: 0.0, x_plus: xp, x_minus: xm, action, distance: 0.0, damping: 1.0 }];
    let sub = even_steps(half, flow.dt);
    for k in 1..=n {
        let a = flow_steps(xp, half, sub, &doubled, flow)?;
        let b = flow_steps(xm, half, sub, &doubled, flow)?;
        let dh: Vec<f64> = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(u, v)| doubled.energy(u.1) - doubled.energy(v.1))
            .collect();
        let h = if sub == 0 { 0.0 } else { half / sub as f64 };
        action -= cumulative_simpson(&dh, h).last().copied().unwrap_or(0.0);
        xp = a.end();
        xm = b.end();
        // √2·L over t/2N equals L over t/N
        log_damping -= half * 2.0 * channel_spread(channels, xp, xm) / (2.0 * hbar);
        trace.push(EvolutionSample {
            t: t * k as f64 / n as f64,
            x_plus: xp,
            x_minus: xm,
            action,
            distance: (-2.0 * hbar * log_damping).max(0.0).sqrt(),
            damping: log_damping.exp(),
        });
    }
    Ok(EvolvedChord {
        base: moved_chord(chord0, xp, xm, action),
        action,
        damping: log_damping.exp(),
        log_damping,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chord::{build_shell, find_chords};
    use crate::classical::FnField;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pt(p: f64, q: f64) -> PhaseSpacePoint {
        PhaseSpacePoint::new(p, q)
    }

    fn example_chord() -> Chord {
        let s = build_shell(&HamiltonianSystem::harmonic(), 0.5, 256).unwrap();
        find_chords(pt(0.0, 0.5), &s).remove(0)
    }

    #[test]
    fn hermitian_rate_examples() {
        let c = example_chord();
        assert!(hermitian_decay_rate(&c, &[LindbladChannel::position(1.0)], 0.05).unwrap().abs() < 1e-14);
        let mut moved = c.clone();
        moved.x_plus = pt(0.0, 1.0);
        moved.x_minus = pt(0.0, -1.0);
        let r = hermitian_decay_rate(&moved, &[LindbladChannel::position(1.0)], 0.1).unwrap();
        assert!((r - 20.0).abs() < 1e-12);
        let both = hermitian_decay_rate(&moved, &[LindbladChannel::position(1.0), LindbladChannel::momentum(1.0)], 0.1).unwrap();
        let p_only = hermitian_decay_rate(&moved, &[LindbladChannel::momentum(1.0)], 0.1).unwrap();
        assert!((both - r - p_only).abs() < 1e-12);
        assert!(matches!(
            hermitian_decay_rate(&c, &[LindbladChannel::annihilation(1.0)], 0.1),
            Err(Error::NonHermitianChannel(_))
        ));
    }

    #[test]
    fn general_rate_reduces_for_real_channels() {
        let c = example_chord();
        let hbar = 0.05;
        let chans = [LindbladChannel::real("pq", FnField::new(|x| x.p * x.q + 0.3 * x.p))];
        let a = c.amplitude(hbar).unwrap();
        let phase = c.action / hbar - c.maslov;
        let general = lindblad_rate(&c, &chans, hbar).unwrap();
        let reduced = -(a / (2.0 * hbar)) * phase.cos() * channel_spread(&chans, c.x_plus, c.x_minus);
        assert!((general - reduced).abs() < 1e-12 * reduced.abs().max(1.0));
        let via_decay = -a * phase.cos() * hermitian_decay_rate(&c, &chans, hbar).unwrap();
        assert!((general - via_decay).abs() < 1e-12 * general.abs().max(1.0));
        let constant = [LindbladChannel::real("c", FnField::new(|_| 2.0))];
        assert!(lindblad_rate(&c, &constant, hbar).unwrap().abs() < 1e-12);
    }

    #[test]
    fn annihilation_rate_by_direct_substitution() {
        let (xp, xm) = (pt(0.8660254037844386, 0.5), pt(-0.8660254037844386, 0.5));
        let (s, a, hbar): (f64, f64, f64) = (0.6142, 1.0, 0.05);
        let l = |x: PhaseSpacePoint| Complex64::new(x.q, x.p) / 2f64.sqrt();
        let phi = s / hbar;
        let expected = a / hbar
            * ((l(xp) * l(xm).conj() * Complex64::new(phi.cos(), phi.sin())).re
                - 0.5 * (l(xp).norm_sqr() + l(xm).norm_sqr()) * phi.cos());
        let got = lindblad_rate_at(xp, xm, s, a, 0.0, &[LindbladChannel::annihilation(1.0)], hbar);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn decoherence_distance_examples() {
        let h = HamiltonianSystem::harmonic();
        let cfg = FlowConfig::default();
        let (xp, xm) = (pt(0.8660254037844386, 0.5), pt(-0.8660254037844386, 0.5));
        let constant = [LindbladChannel::real("c", FnField::new(|_| 1.5))];
        assert_eq!(decoherence_distance(xp, xm, &h, &constant, 2.0, &cfg).unwrap().distance, 0.0);
        let q = [LindbladChannel::position(1.0)];
        assert_eq!(decoherence_distance(xp, xp, &h, &q, 2.0, &cfg).unwrap().distance, 0.0);
        let rec = decoherence_distance(xp, xm, &h, &q, PI, &cfg).unwrap();
        assert!((rec.squared() - 3.0 * PI / 2.0).abs() < 1e-9, "{}", rec.squared());
        assert!(rec.cumulative.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert_eq!(rec.cumulative[0], 0.0);
        assert!(decoherence_distance(xp, xm, &h, &[LindbladChannel::annihilation(1.0)], 1.0, &cfg).is_err());
    }

    #[test]
    fn evolution_examples() {
        let c = example_chord();
        let h = HamiltonianSystem::harmonic();
        let cfg = FlowConfig::default();
        let free = evolve_contribution(&c, &h, &[], 2.0, 0.05, &cfg).unwrap();
        assert!((free.action - c.action).abs() < 1e-10);
        assert_eq!(free.damping, 1.0);
        let damped = evolve_contribution(&c, &h, &[LindbladChannel::position(1.0)], PI, 0.05, &cfg).unwrap();
        assert!((damped.log_damping + 4.712_388_98 / 0.1).abs() < 1e-6);
        // short times follow the frozen-chord rate
        let mut tilted = c.clone();
        tilted.x_plus = pt(0.6, 0.8);
        tilted.x_minus = pt(-0.6, -0.8);
        let chans = [LindbladChannel::position(1.0)];
        let rate = hermitian_decay_rate(&tilted, &chans, 0.05).unwrap();
        let t = 1e-5;
        let e = evolve_contribution(&tilted, &h, &chans, t, 0.05, &FlowConfig::with_dt(1e-6)).unwrap();
        assert!(((1.0 - e.damping) - rate * t).abs() < 1e-3 * rate * t);
    }

    #[test]
    fn frozen_dynamics() {
        let mut c = example_chord();
        c.x_plus = pt(0.3, 1.0);
        c.x_minus = pt(-0.1, -0.4);
        let chans = [LindbladChannel::position(1.0), LindbladChannel::momentum(0.5)];
        let z = HamiltonianSystem::zero();
        let e = evolve_contribution(&c, &z, &chans, 1.7, 0.05, &FlowConfig::default()).unwrap();
        assert_eq!(e.action, c.action);
        let rate = hermitian_decay_rate(&c, &chans, 0.05).unwrap();
        assert!((e.log_damping + 1.7 * rate).abs() < 1e-10 * rate);
    }

    #[test]
    fn commuting_channel_does_not_damp() {
        let c = example_chord();
        let h = HamiltonianSystem::harmonic();
        let f_of_h = LindbladChannel::real("H^2", FnField::new(|x| (0.5 * (x.p * x.p + x.q * x.q)).powi(2)));
        let e = evolve_contribution(&c, &h, &[f_of_h], 3.0, 0.05, &FlowConfig::default()).unwrap();
        assert!(e.log_damping.abs() < 1e-12);
    }

    #[test]
    fn trotter_limits() {
        let c = example_chord();
        let h = HamiltonianSystem::harmonic();
        let cfg = FlowConfig::default();
        let free = trotter_evolve(&c, &h, &[], 1.0, 7, 0.05, &cfg).unwrap();
        let exact = crate::classical::flow_point(c.x_plus, 1.0, &h, &cfg).unwrap();
        assert!(free.base.x_plus.distance(exact) < 1e-10);
        assert_eq!(free.damping, 1.0);
        let chans = [LindbladChannel::position(1.0)];
        let cont = evolve_contribution(&c, &h, &chans, 1.0, 0.05, &cfg).unwrap();
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|&n| (trotter_evolve(&c, &h, &chans, 1.0, n, 0.05, &cfg).unwrap().log_damping - cont.log_damping).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!((order - 1.0).abs() < 0.2, "order {order}");
        assert!(trotter_evolve(&c, &h, &chans, 1.0, 0, 0.05, &cfg).is_err());
    }

    #[test]
    fn hamilton_jacobi_consistency() {
        // tips on different shells so the action actually moves
        let mut c = example_chord();
        c.x_plus = pt(0.2, 1.1);
        c.x_minus = pt(-0.3, 0.1);
        let sys = HamiltonianSystem::quartic();
        let cfg = FlowConfig::default();
        let t = 0.7;
        let base = evolve_contribution(&c, &sys, &[], t, 0.05, &cfg).unwrap();
        let dh = sys.energy(base.base.x_plus) - sys.energy(base.base.x_minus);
        let mut errs = Vec::new();
        for delta in [0.08, 0.04, 0.02] {
            let later = evolve_contribution(&c, &sys, &[], t + delta, 0.05, &cfg).unwrap();
            errs.push(((later.action - base.action) / delta + dh).abs());
        }
        // energy is conserved on each tip, so the residual is quadrature noise
        assert!(errs.iter().all(|e| *e < 1e-8), "{errs:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn distance_is_additive(t1 in 0.1..1.5f64, t2 in 0.1..1.5f64, p in -1.0..1.0f64) {
            let h = HamiltonianSystem::pendulum();
            let cfg = FlowConfig::default();
            let chans = [LindbladChannel::position(1.0), LindbladChannel::real("sin", FnField::new(|x| x.q.sin()))];
            let (xp, xm) = (pt(p, 0.4), pt(0.2, -0.3));
            let whole = decoherence_distance(xp, xm, &h, &chans, t1 + t2, &cfg).unwrap();
            let first = decoherence_distance(xp, xm, &h, &chans, t1, &cfg).unwrap();
            let second = decoherence_distance(first.plus.end(), first.minus.end(), &h, &chans, t2, &cfg).unwrap();
            prop_assert!((whole.squared() - first.squared() - second.squared()).abs() < 1e-8);
        }
    }
}
