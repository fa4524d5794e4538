//! JSON experiment configuration. Every key is optional; missing keys take
//! the defaults below.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use chordwig::chord::{build_shell_with, quantized_energy, ShellSpec};
use chordwig::classical::FlowConfig;
use chordwig::lindblad::{LindbladChannel, WeylPolynomial, WeylTerm};
use chordwig::normalization::PurityExponent;
use chordwig::wigner::WindowShape;
use chordwig::HamiltonianSystem;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// harmonic, quartic, pendulum, zero or polynomial.
    pub name: String,
    /// (coefficient, p power, q power) terms for `polynomial`.
    pub coefficients: Vec<(f64, u32, u32)>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { name: "harmonic".into(), coefficients: vec![] }
    }
}

/// Exactly one of `n` (quantized level) or `energy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShellConfig {
    pub n: Option<u32>,
    pub energy: Option<f64>,
    pub samples: usize,
}

impl Default for ShellConfig {
    fn default() -> Self {
        Self { n: Some(10), energy: None, samples: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// q, p, a (annihilation) or poly.
    pub symbol: String,
    pub coupling: f64,
    /// (re, im, p power, q power) terms for `poly`.
    pub terms: Vec<(f64, f64, u32, u32)>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { symbol: "q".into(), coupling: 1.0, terms: vec![] }
    }
}

impl ChannelConfig {
    pub fn named(symbol: &str) -> Self {
        Self { symbol: symbol.into(), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub steps: usize,
    /// Classical integrator step.
    pub flow_dt: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { t_end: 1.0, steps: 10, flow_dt: 1e-3 }
    }
}

impl TimeConfig {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.t_end * k as f64 / self.steps as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub n_q: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { p_min: -5.0, p_max: 5.0, n_p: 41, q_min: -5.0, q_max: 5.0, n_q: 41 }
    }
}

impl GridConfig {
    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        Self::axis(self.p_min, self.p_max, self.n_p)
    }

    pub fn qs(&self) -> Vec<f64> {
        Self::axis(self.q_min, self.q_max, self.n_q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    /// Caustic threshold as a fraction of the squared maximum shell speed.
    pub caustic_fraction: f64,
    pub leak_threshold: f64,
    pub alias_threshold: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { caustic_fraction: 0.4, leak_threshold: 1e-6, alias_threshold: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Conventions {
    pub maslov: f64,
    pub purity_exponent: PurityExponent,
    pub window: WindowShape,
}

impl Default for Conventions {
    fn default() -> Self {
        Self { maslov: FRAC_PI_4, purity_exponent: PurityExponent::default(), window: WindowShape::Gaussian }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub grid_points: usize,
    pub basis: usize,
    pub dt: f64,
    /// Acceptance criteria run by oracle-compare.
    pub criteria: Vec<u32>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { grid_points: 512, basis: 64, dt: 1e-3, criteria: (1..=9).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub hbar: f64,
    pub shell: ShellConfig,
    pub channels: Vec<ChannelConfig>,
    pub time: TimeConfig,
    pub grid: GridConfig,
    /// (p, q) centres followed by `evolve`.
    pub centres: Vec<(f64, f64)>,
    /// (q₊, q₋) pairs for `project`.
    pub pairs: Vec<(f64, f64)>,
    /// Initial energy window for `diffusion`.
    pub epsilon0: f64,
    /// Angle points per direction for the purity integrals.
    pub angle_grid: usize,
    /// Points per side of the star-check grid and its half-width.
    pub star_points: usize,
    pub star_half_width: f64,
    pub tolerances: ToleranceConfig,
    pub conventions: Conventions,
    pub oracle: OracleConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            hbar: 1.0,
            shell: ShellConfig::default(),
            channels: vec![ChannelConfig::named("q")],
            time: TimeConfig::default(),
            grid: GridConfig::default(),
            centres: vec![(0.0, 1.0), (0.5, 0.5), (1.0, -2.0)],
            pairs: vec![(0.3, -0.3), (1.0, 0.0), (2.0, -1.0)],
            epsilon0: 0.1,
            angle_grid: 128,
            star_points: 128,
            star_half_width: 6.0,
            tolerances: ToleranceConfig::default(),
            conventions: Conventions::default(),
            oracle: OracleConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.hamiltonian()?;
        self.lindblad_channels()?;
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return bad(format!("hbar must be positive, got {}", self.hbar));
        }
        match (self.shell.n, self.shell.energy) {
            (Some(_), None) => {}
            (None, Some(e)) if e.is_finite() => {}
            _ => return bad("shell needs exactly one of n or energy".into()),
        }
        if self.shell.samples < 8 {
            return bad(format!("shell.samples must be at least 8, got {}", self.shell.samples));
        }
        let t = &self.time;
        if !(t.t_end >= 0.0) || !t.t_end.is_finite() || t.steps == 0 || !(t.flow_dt > 0.0) {
            return bad("time needs t_end ≥ 0, steps ≥ 1 and flow_dt > 0".into());
        }
        let g = &self.grid;
        if g.n_p == 0 || g.n_q == 0 || !(g.p_max >= g.p_min) || !(g.q_max >= g.q_min) {
            return bad("grid needs nonempty ordered axes".into());
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("caustic_fraction", tol.caustic_fraction),
            ("leak_threshold", tol.leak_threshold),
            ("alias_threshold", tol.alias_threshold),
            ("oracle.dt", self.oracle.dt),
            ("star_half_width", self.star_half_width),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.epsilon0 >= 0.0) {
            return bad(format!("epsilon0 must be nonnegative, got {}", self.epsilon0));
        }
        if self.angle_grid < 4 || !self.angle_grid.is_multiple_of(2) {
            return bad(format!("angle_grid must be even and at least 4, got {}", self.angle_grid));
        }
        if self.star_points < 8 || !self.star_points.is_multiple_of(4) {
            return bad(format!("star_points must be a multiple of 4, at least 8, got {}", self.star_points));
        }
        if self.oracle.basis == 0 || self.oracle.grid_points < self.oracle.basis {
            return bad("oracle needs 0 < basis ≤ grid_points".into());
        }
        if let Some(c) = self.oracle.criteria.iter().find(|c| !(1..=9).contains(*c)) {
            return bad(format!("unknown acceptance criterion {c}"));
        }
        if !self.conventions.maslov.is_finite() {
            return bad("conventions.maslov must be finite".into());
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSystem, ConfigError> {
        HamiltonianSystem::by_name(&self.system.name, &self.system.coefficients)
            .map_err(|e| ConfigError::Invalid(format!("system: {e}")))
    }

    pub fn lindblad_channels(&self) -> Result<Vec<LindbladChannel>, ConfigError> {
        self.channels
            .iter()
            .map(|c| {
                if !c.coupling.is_finite() {
                    return Err(ConfigError::Invalid(format!("channel {} coupling must be finite", c.symbol)));
                }
                match c.symbol.as_str() {
                    "q" => Ok(LindbladChannel::position(c.coupling)),
                    "p" => Ok(LindbladChannel::momentum(c.coupling)),
                    "a" => Ok(LindbladChannel::annihilation(c.coupling)),
                    "poly" if !c.terms.is_empty() => Ok(LindbladChannel::polynomial(
                        "poly",
                        WeylPolynomial {
                            terms: c
                                .terms
                                .iter()
                                .map(|&(re, im, p, q)| WeylTerm { re: re * c.coupling, im: im * c.coupling, p_power: p, q_power: q })
                                .collect(),
                        },
                    )),
                    "poly" => Err(ConfigError::Invalid("poly channel needs terms".into())),
                    other => Err(ConfigError::Invalid(format!("unknown channel symbol {other:?}"))),
                }
            })
            .collect()
    }

    pub fn flow(&self) -> FlowConfig {
        FlowConfig::with_dt(self.time.flow_dt)
    }

    pub fn shell_energy(&self) -> chordwig::Result<f64> {
        match (self.shell.n, self.shell.energy) {
            (_, Some(e)) => Ok(e),
            (Some(n), None) => {
                let system = self.hamiltonian().map_err(|e| chordwig::Error::InvalidArgument(e.to_string()))?;
                quantized_energy(&system, n, self.hbar, &self.flow())
            }
            (None, None) => Err(chordwig::Error::InvalidArgument("no shell selected".into())),
        }
    }

    pub fn build_shell(&self) -> chordwig::Result<ShellSpec> {
        let system = self.hamiltonian().map_err(|e| chordwig::Error::InvalidArgument(e.to_string()))?;
        Ok(build_shell_with(&system, self.shell_energy()?, self.shell.samples, &self.flow())?
            .with_maslov(self.conventions.maslov))
    }

    /// SHA-256 of the serialized configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"hbar": -1}"#,
            r#"{"system": {"name": "duffing"}}"#,
            r#"{"channels": [{"symbol": "x"}]}"#,
            r#"{"shell": {"n": 3, "energy": 0.5}}"#,
            r#"{"tolerances": {"leak_threshold": 0}}"#,
            r#"{"unknown_key": 1}"#,
            r#"{"oracle": {"criteria": [12]}}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.hbar = 0.5;
        assert_ne!(a.hash(), b.hash());
    }
}
