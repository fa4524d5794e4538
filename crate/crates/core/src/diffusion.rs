//! Short chords and the diffusive spreading of an energy window.

use serde::{Deserialize, Serialize};

use crate::classical::{
    poisson_bracket, shell_average_with, FlowConfig, FnField, HamiltonianSystem, PhaseSpacePoint,
};
use crate::error::{Error, Result};
use crate::lindblad::{require_hermitian, LindbladChannel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub energy: f64,
    pub epsilon: f64,
    pub t: f64,
}

/// ξ_τ ≈ τ·J∇H(x).
pub fn short_chord(x: PhaseSpacePoint, tau: f64, system: &HamiltonianSystem) -> PhaseSpacePoint {
    system.velocity(x) * tau
}

/// Σ_j ⟨|{H, L_j}|²⟩ over the shell H = E.
pub fn bracket_rate(energy: f64, channels: &[LindbladChannel], system: &HamiltonianSystem) -> Result<f64> {
    bracket_rate_with(energy, channels, system, &FlowConfig::default())
}

pub fn bracket_rate_with(
    energy: f64,
    channels: &[LindbladChannel],
    system: &HamiltonianSystem,
    flow: &FlowConfig,
) -> Result<f64> {
    require_hermitian(channels)?;
    let mut total = 0.0;
    for c in channels {
        let sys = system.clone();
        let ch = c.clone();
        let sq = FnField::new(move |x| {
            poisson_bracket(&sys, ch.real_field(), x).map_or(f64::NAN, |b| b * b)
        });
        let avg = shell_average_with(&sq, energy, system, flow)?;
        if !avg.is_finite() {
            return Err(Error::NonFinite(format!("bracket of H with `{}`", c.name)));
        }
        total += avg;
    }
    Ok(total)
}

/// ε(t)² = ε0² + (ħt/2)·bracket_rate(E).
pub fn window_width(
    epsilon0: f64,
    t: f64,
    energy: f64,
    channels: &[LindbladChannel],
    system: &HamiltonianSystem,
    hbar: f64,
) -> Result<EnergyWindow> {
    if !(epsilon0 >= 0.0) || !(hbar > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window needs ε0 ≥ 0, ħ > 0, t ≥ 0 (got {epsilon0}, {hbar}, {t})"
        )));
    }
    let rate = if t == 0.0 { 0.0 } else { bracket_rate(energy, channels, system)? };
    Ok(window_from_rate(epsilon0, t, energy, rate, hbar))
}

/// The same law with a precomputed bracket rate.
pub fn window_from_rate(epsilon0: f64, t: f64, energy: f64, rate: f64, hbar: f64) -> EnergyWindow {
    let eps2 = epsilon0 * epsilon0 + 0.5 * hbar * t * rate;
    EnergyWindow { energy, epsilon: eps2.sqrt(), t }
}
