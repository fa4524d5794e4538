//! Pure and spectral semiclassical Wigner functions assembled from chords.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chord::{build_shell_with, find_chords, quantized_energy, Chord, ShellSpec};
use crate::classical::{FlowConfig, HamiltonianSystem, PhaseSpacePoint};
use crate::error::{Error, Result};

/// Energy window applied to chord contributions of a spectral state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowShape {
    /// exp(−ε²τ²/2ħ²)
    Gaussian,
    /// exp(−ε|τ|/ħ)
    Lorentzian,
}

impl WindowShape {
    pub fn factor(self, epsilon: f64, tau: f64, hbar: f64) -> f64 {
        match self {
            WindowShape::Gaussian => (-(epsilon * tau).powi(2) / (2.0 * hbar * hbar)).exp(),
            WindowShape::Lorentzian => (-epsilon * tau.abs() / hbar).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StateKind {
    Pure,
    /// Window of width ε. Amplitudes are the pure-chord ones times `calibration`.
    Spectral { epsilon: f64, window: WindowShape, calibration: f64 },
}

/// A shell with ħ and the conventions needed to evaluate W(x).
///
/// Chords inside the caustic tolerance of the shell are reported but never summed.
#[derive(Debug, Clone)]
pub struct SemiclassicalState {
    pub shell: ShellSpec,
    pub hbar: f64,
    pub maslov: f64,
    pub kind: StateKind,
}

impl SemiclassicalState {
    pub fn pure(shell: ShellSpec, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        let maslov = shell.maslov;
        Ok(Self { shell, hbar, maslov, kind: StateKind::Pure })
    }

    /// The pure state on the shell enclosing 2πħ(n + ½).
    pub fn eigenstate(system: &HamiltonianSystem, n: u32, hbar: f64, n_samples: usize) -> Result<Self> {
        let flow = FlowConfig::default();
        let e = quantized_energy(system, n, hbar, &flow)?;
        Self::pure(build_shell_with(system, e, n_samples, &flow)?, hbar)
    }

    pub fn spectral(shell: ShellSpec, hbar: f64, epsilon: f64, window: WindowShape) -> Result<Self> {
        check_hbar(hbar)?;
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("window width must be nonnegative, got {epsilon}")));
        }
        let maslov = shell.maslov;
        Ok(Self { shell, hbar, maslov, kind: StateKind::Spectral { epsilon, window, calibration: 1.0 } })
    }

    pub fn with_maslov(mut self, maslov: f64) -> Self {
        self.maslov = maslov;
        self.shell.maslov = maslov;
        self
    }

    pub fn with_calibration(mut self, factor: f64) -> Self {
        if let StateKind::Spectral { calibration, .. } = &mut self.kind {
            *calibration = factor;
        }
        self
    }

    /// Chords centred on x, carrying this state's Maslov offset.
    pub fn chords(&self, x: PhaseSpacePoint) -> Vec<Chord> {
        let mut cs = find_chords(x, &self.shell);
        for c in &mut cs {
            c.maslov = self.maslov;
        }
        cs
    }
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")))
    }
}

/// One chord's share of W(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordContribution {
    pub action: f64,
    /// None when the chord is flagged.
    pub amplitude: Option<f64>,
    /// Window or decoherence factor multiplying the amplitude.
    pub damping: f64,
    /// S/ħ − maslov.
    pub phase: f64,
    pub tau: f64,
    pub caustic: bool,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerSample {
    pub x: PhaseSpacePoint,
    pub value: f64,
    pub contributions: Vec<ChordContribution>,
    pub caustic_flag: bool,
}

impl WignerSample {
    pub fn chord_count(&self) -> usize {
        self.contributions.len()
    }
}

fn assemble(x: PhaseSpacePoint, state: &SemiclassicalState, scale: f64, window: impl Fn(f64) -> f64) -> WignerSample {
    let hbar = state.hbar;
    let contributions: Vec<ChordContribution> = state
        .chords(x)
        .into_iter()
        .map(|c| {
            let phase = c.action / hbar - state.maslov;
            let damping = window(c.tau);
            let amplitude = (!c.caustic).then(|| scale * c.amplitude(hbar).unwrap_or(f64::NAN));
            let value = amplitude.map_or(0.0, |a| a * damping * phase.cos());
            ChordContribution { action: c.action, amplitude, damping, phase, tau: c.tau, caustic: c.caustic, value }
        })
        .collect();
    let caustic_flag = contributions.iter().any(|c| c.caustic);
    let value = contributions.iter().filter(|c| !c.caustic).map(|c| c.value).sum();
    WignerSample { x, value, contributions, caustic_flag }
}

/// W(x) = Σ A cos(S/ħ − maslov) over unflagged chords.
pub fn eval_pure(x: PhaseSpacePoint, state: &SemiclassicalState) -> Result<WignerSample> {
    match state.kind {
        StateKind::Pure => Ok(assemble(x, state, 1.0, |_| 1.0)),
        StateKind::Spectral { .. } => Err(Error::InvalidArgument("eval_pure needs a pure state".into())),
    }
}

/// Window-weighted chord sum of a spectral state.
pub fn eval_spectral(x: PhaseSpacePoint, state: &SemiclassicalState) -> Result<WignerSample> {
    match state.kind {
        StateKind::Spectral { epsilon, window, calibration } => {
            let hbar = state.hbar;
            Ok(assemble(x, state, calibration, move |tau| window.factor(epsilon, tau, hbar)))
        }
        StateKind::Pure => Err(Error::InvalidArgument("eval_spectral needs a spectral state".into())),
    }
}

pub fn eval(x: PhaseSpacePoint, state: &SemiclassicalState) -> Result<WignerSample> {
    match state.kind {
        StateKind::Pure => eval_pure(x, state),
        StateKind::Spectral { .. } => eval_spectral(x, state),
    }
}

/// Pointwise weighted sum of samples taken at the same point.
pub fn mix_states(weights: &[f64], samples: &[WignerSample]) -> Result<WignerSample> {
    if weights.len() != samples.len() {
        return Err(Error::LengthMismatch(weights.len(), samples.len()));
    }
    let Some(first) = samples.first() else {
        return Err(Error::InvalidArgument("nothing to mix".into()));
    };
    if samples.iter().any(|s| s.x != first.x) {
        return Err(Error::InvalidArgument("samples taken at different points".into()));
    }
    let mut contributions = Vec::new();
    let mut value = 0.0;
    for (&w, s) in weights.iter().zip(samples) {
        value += w * s.value;
        contributions.extend(s.contributions.iter().map(|c| ChordContribution {
            amplitude: c.amplitude.map(|a| w * a),
            value: w * c.value,
            ..c.clone()
        }));
    }
    Ok(WignerSample {
        x: first.x,
        value,
        caustic_flag: samples.iter().any(|s| s.caustic_flag),
        contributions,
    })
}

/// Evaluates on the tensor grid, p varying fastest.
pub fn eval_grid(state: &SemiclassicalState, ps: &[f64], qs: &[f64]) -> Result<Vec<WignerSample>> {
    let points: Vec<PhaseSpacePoint> = qs
        .iter()
        .flat_map(|&q| ps.iter().map(move |&p| PhaseSpacePoint::new(p, q)))
        .collect();
    points.par_iter().map(|&x| eval(x, state)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chord::build_shell;
    use std::f64::consts::PI;

    fn harmonic_state(hbar: f64) -> SemiclassicalState {
        SemiclassicalState::pure(build_shell(&HamiltonianSystem::harmonic(), 0.5, 256).unwrap(), hbar).unwrap()
    }

    #[test]
    fn pure_example() {
        let st = harmonic_state(0.05);
        let w = eval_pure(PhaseSpacePoint::new(0.0, 0.5), &st).unwrap();
        assert_eq!(w.contributions.len(), 1);
        let c = &w.contributions[0];
        assert!((c.amplitude.unwrap() - 1.2206).abs() < 1e-4);
        assert!((c.action - 0.6142).abs() < 1e-4);
        let expected = c.amplitude.unwrap() * (c.action / 0.05 - PI / 4.0).cos();
        assert!((w.value - expected).abs() < 1e-14);
        assert!(eval_spectral(PhaseSpacePoint::new(0.0, 0.5), &st).is_err());
    }

    #[test]
    fn outside_is_empty_and_parity_holds() {
        let st = harmonic_state(0.05);
        let w = eval_pure(PhaseSpacePoint::new(1.5, 0.0), &st).unwrap();
        assert!(w.contributions.is_empty() && w.value == 0.0 && !w.caustic_flag);
        for &(p, q) in &[(0.3, 0.2), (0.55, -0.4), (0.1, 0.7)] {
            let a = eval_pure(PhaseSpacePoint::new(p, q), &st).unwrap().value;
            let b = eval_pure(PhaseSpacePoint::new(-p, q), &st).unwrap().value;
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn spectral_windows() {
        let shell = build_shell(&HamiltonianSystem::harmonic(), 0.5, 256).unwrap();
        let x = PhaseSpacePoint::new(0.0, 0.5);
        let pure = eval_pure(x, &SemiclassicalState::pure(shell.clone(), 0.05).unwrap()).unwrap();
        let zero = eval_spectral(x, &SemiclassicalState::spectral(shell.clone(), 0.05, 0.0, WindowShape::Gaussian).unwrap()).unwrap();
        assert!((zero.value - pure.value).abs() < 1e-15);
        let st = SemiclassicalState::spectral(shell, 0.05, 0.02, WindowShape::Gaussian).unwrap();
        let s = eval_spectral(x, &st).unwrap();
        let tau = s.contributions[0].tau;
        assert!((tau - 2.0 * PI / 3.0).abs() < 1e-8);
        let ratio = s.value / pure.value;
        assert!((ratio - (-(0.02f64 * tau).powi(2) / (2.0 * 0.05f64.powi(2))).exp()).abs() < 1e-12);
        assert!((WindowShape::Gaussian.factor(0.1, 2.0 * 0.05 / 0.1, 0.05) - (-2.0f64).exp()).abs() < 1e-15);
        assert!((WindowShape::Lorentzian.factor(0.1, 2.0 * 0.05 / 0.1, 0.05) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn window_is_monotone() {
        for shape in [WindowShape::Gaussian, WindowShape::Lorentzian] {
            let mut last = 1.0;
            for k in 0..50 {
                let f = shape.factor(0.03, 0.1 * k as f64, 0.05);
                assert!(f <= last);
                last = f;
            }
        }
    }

    #[test]
    fn mixing() {
        let st = harmonic_state(0.05);
        let w = eval_pure(PhaseSpacePoint::new(0.2, 0.3), &st).unwrap();
        assert_eq!(mix_states(&[1.0], std::slice::from_ref(&w)).unwrap().value, w.value);
        let mut neg = w.clone();
        neg.value = -neg.value;
        assert_eq!(mix_states(&[0.5, 0.5], &[w.clone(), neg]).unwrap().value, 0.0);
        assert!(matches!(mix_states(&[1.0, 0.0], &[w]), Err(Error::LengthMismatch(2, 1))));
    }

    #[test]
    fn fringe_wavelength_follows_chord_length() {
        // along the q axis the phase gradient is |Jξ·q̂|/ħ = ξ_p/ħ = 2√(1−q²)/ħ
        let hbar = 0.005;
        let st = harmonic_state(hbar);
        let n = 4000;
        let qs: Vec<f64> = (0..=n).map(|k| 0.2 + 0.4 * k as f64 / n as f64).collect();
        let vals: Vec<f64> = qs
            .iter()
            .map(|&q| eval_pure(PhaseSpacePoint::new(0.0, q), &st).unwrap().value)
            .collect();
        let zeros: Vec<f64> = (1..vals.len())
            .filter(|&k| vals[k - 1].signum() != vals[k].signum())
            .map(|k| qs[k - 1] - vals[k - 1] * (qs[k] - qs[k - 1]) / (vals[k] - vals[k - 1]))
            .collect();
        assert!(zeros.len() > 10);
        for w in zeros.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let predicted = 2.0 * PI * hbar / (2.0 * (1.0 - mid * mid).sqrt());
            let measured = 2.0 * (w[1] - w[0]);
            assert!((measured / predicted - 1.0).abs() < 0.1, "{measured} vs {predicted}");
        }
    }
}
