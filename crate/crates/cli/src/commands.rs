//! Subcommand implementations. Each writes CSV or JSON artifacts plus a
//! `manifest.json` into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chordwig::chord::find_chords;
use chordwig::diffusion::{bracket_rate, window_width};
use chordwig::lindblad::evolve_contribution;
use chordwig::normalization::{direct_trace_with, purity_decay, purity_t0};
use chordwig::oracle::{moyal_star, PhaseGrid, PhaseSymbol};
use chordwig::projection::density_matrix_sc;
use chordwig::wigner::{eval_grid, SemiclassicalState};
use chordwig::PhaseSpacePoint;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig};
use crate::experiments::{run_criterion, CriterionReport};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] chordwig::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CommandError {
    /// 2 for configuration problems, 3 for numerical or output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            CommandError::Numerical(_) | CommandError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BuildWigner,
    Evolve,
    Project,
    Diffusion,
    Normalize,
    OracleCompare,
    StarCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BuildWigner => "build-wigner",
            Command::Evolve => "evolve",
            Command::Project => "project",
            Command::Diffusion => "diffusion",
            Command::Normalize => "normalize",
            Command::OracleCompare => "oracle-compare",
            Command::StarCheck => "star-check",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    conventions: Conventions,
    config: &'a ExperimentConfig,
    outputs: Vec<OutputFile>,
}

#[derive(Debug, Serialize)]
struct Conventions {
    coordinates: &'static str,
    wedge: &'static str,
    poisson_bracket: &'static str,
    wigner_phase: &'static str,
    maslov_offset: f64,
    chord_action: &'static str,
    purity_exponent: &'static str,
    energy_window: &'static str,
    lindblad_normalization: &'static str,
}

fn conventions(cfg: &ExperimentConfig) -> Conventions {
    Conventions {
        coordinates: "x = (p, q)",
        wedge: "a^b = p_a q_b - q_a p_b",
        poisson_bracket: "{f,g} = f_q g_p - f_p g_q",
        wigner_phase: "S/hbar - maslov",
        maslov_offset: cfg.conventions.maslov,
        chord_action: "area of the smaller segment cut by the chord",
        purity_exponent: cfg.conventions.purity_exponent.label(),
        energy_window: match cfg.conventions.window {
            chordwig::wigner::WindowShape::Gaussian => "exp(-eps^2 tau^2 / (2 hbar^2))",
            chordwig::wigner::WindowShape::Lorentzian => "exp(-eps |tau| / hbar)",
        },
        lindblad_normalization: "drho/dt = -(i/hbar)[H,rho] + (1/hbar) sum(L rho L+ - {L+L, rho}/2)",
    }
}

struct Writer {
    dir: PathBuf,
    outputs: Vec<OutputFile>,
}

impl Writer {
    fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), outputs: vec![] })
    }

    fn write(&mut self, name: &str, body: &str, rows: usize) -> std::io::Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.outputs.push(OutputFile { file: name.into(), sha256: hex::encode(Sha256::digest(body.as_bytes())), rows });
        Ok(())
    }

    fn finish(self, command: Command, cfg: &ExperimentConfig) -> Result<Vec<OutputFile>, CommandError> {
        let manifest = Manifest {
            command: command.name(),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: cfg.hash(),
            conventions: conventions(cfg),
            config: cfg,
            outputs: self.outputs.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| std::io::Error::other(e.to_string()))?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(self.outputs)
    }
}

fn f(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Vec<OutputFile>, CommandError> {
    cfg.validate()?;
    let mut out = Writer::new(&cfg.output_dir)?;
    match command {
        Command::BuildWigner => build_wigner(cfg, &mut out)?,
        Command::Evolve => evolve(cfg, &mut out)?,
        Command::Project => project(cfg, &mut out)?,
        Command::Diffusion => diffusion(cfg, &mut out)?,
        Command::Normalize => normalize(cfg, &mut out)?,
        Command::OracleCompare => oracle_compare(cfg, &mut out)?,
        Command::StarCheck => star_check(cfg, &mut out)?,
    }
    out.finish(command, cfg)
}

fn build_wigner(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CommandError> {
    let state = SemiclassicalState::pure(cfg.build_shell()?, cfg.hbar)?;
    let samples = eval_grid(&state, &cfg.grid.ps(), &cfg.grid.qs())?;
    let mut body = String::from("p,q,w,chords,caustic\n");
    for s in &samples {
        let _ = writeln!(body, "{},{},{},{},{}", f(s.x.p), f(s.x.q), f(s.value), s.chord_count(), s.caustic_flag as u8);
    }
    out.write("wigner.csv", &body, samples.len())?;
    Ok(())
}

fn evolve(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CommandError> {
    let shell = cfg.build_shell()?;
    let system = cfg.hamiltonian()?;
    let channels = cfg.lindblad_channels()?;
    let flow = cfg.flow();
    let mut body = String::from("centre_p,centre_q,chord,t,x_plus_p,x_plus_q,x_minus_p,x_minus_q,action,log_damping,contribution\n");
    let mut rows = 0;
    for &(p, q) in &cfg.centres {
        for (k, chord) in find_chords(PhaseSpacePoint::new(p, q), &shell).iter().enumerate() {
            let amplitude = chord.amplitude(cfg.hbar).unwrap_or(f64::NAN);
            for t in cfg.time.times() {
                let e = evolve_contribution(chord, &system, &channels, t, cfg.hbar, &flow)?;
                let value = amplitude * e.damping * (e.action / cfg.hbar - chord.maslov).cos();
                let (xp, xm) = (e.base.x_plus, e.base.x_minus);
                let _ = writeln!(
                    body,
                    "{},{},{k},{},{},{},{},{},{},{},{}",
                    f(p), f(q), f(t), f(xp.p), f(xp.q), f(xm.p), f(xm.q), f(e.action), f(e.log_damping), f(value)
                );
                rows += 1;
            }
        }
    }
    out.write("evolution.csv", &body, rows)?;
    Ok(())
}

fn project(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CommandError> {
    let shell = cfg.build_shell()?;
    let system = cfg.hamiltonian()?;
    let channels = cfg.lindblad_channels()?;
    let mut body = String::from("q_plus,q_minus,t,re,im,abs,damping_min,pairs,turning_excluded\n");
    let mut rows = 0;
    for &(a, b) in &cfg.pairs {
        for t in cfg.time.times() {
            let e = density_matrix_sc(a, b, &shell, &system, &channels, t, cfg.hbar)?;
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{},{},{}",
                f(a), f(b), f(t), f(e.re), f(e.im), f(e.value().norm()), f(e.damping_min), e.pairs.len(), e.turning_excluded as u8
            );
            rows += 1;
        }
    }
    out.write("projection.csv", &body, rows)?;
    Ok(())
}

fn diffusion(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CommandError> {
    let system = cfg.hamiltonian()?;
    let channels = cfg.lindblad_channels()?;
    let energy = cfg.shell_energy()?;
    let rate = bracket_rate(energy, &channels, &system)?;
    let mut body = String::from("t,energy,epsilon,variance,bracket_rate\n");
    let times = cfg.time.times();
    for &t in &times {
        let w = window_width(cfg.epsilon0, t, energy, &channels, &system, cfg.hbar)?;
        let _ = writeln!(body, "{},{},{},{},{}", f(t), f(w.energy), f(w.epsilon), f(w.epsilon * w.epsilon), f(rate));
    }
    out.write("diffusion.csv", &body, times.len())?;
    Ok(())
}

fn normalize(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CommandError> {
    let shell = cfg.build_shell()?;
    let system = cfg.hamiltonian()?;
    let channels = cfg.lindblad_channels()?;
    let p0 = purity_t0(&shell, cfg.hbar)?;
    let trace = direct_trace_with(&shell, cfg.hbar, cfg.conventions.maslov, 64)?;
    let mut body = String::from("quantity,t,value,error\n");
    let _ = writeln!(body, "purity_t0,{},{},{}", f(0.0), f(p0.value), f(p0.error));
    let _ = writeln!(body, "direct_trace,{},{},{}", f(0.0), f(trace.value), f(trace.error));
    let times = cfg.time.times();
    for &t in &times {
        let r = purity_decay(&shell, &system, &channels, t, cfg.hbar, cfg.conventions.purity_exponent, cfg.angle_grid)?;
        let _ = writeln!(body, "purity_decay,{},{},{}", f(t), f(r.value), f(r.error));
    }
    out.write("normalize.csv", &body, times.len() + 2)?;
    Ok(())
}

fn oracle_compare(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CommandError> {
    let mut reports: Vec<CriterionReport> = vec![];
    for &id in &cfg.oracle.criteria {
        let r = run_criterion(id)?;
        println!("{}", r.line());
        reports.push(r);
    }
    let text = serde_json::to_string_pretty(&reports).map_err(|e| std::io::Error::other(e.to_string()))?;
    out.write("report.json", &(text + "\n"), reports.len())?;
    Ok(())
}

fn star_check(cfg: &ExperimentConfig, out: &mut Writer) -> Result<(), CommandError> {
    let hbar = cfg.hbar;
    let g = PhaseGrid::square(cfg.star_points, cfg.star_half_width)?;
    let ground = PhaseSymbol::real_fn(g, |p, q| (-(p * p + q * q) / hbar).exp() / (std::f64::consts::PI * hbar));
    let one = PhaseSymbol::constant(g, 1.0);
    let (q, p) = (PhaseSymbol::affine(g, 0.0, 0.0, 1.0), PhaseSymbol::affine(g, 0.0, 1.0, 0.0));
    let max_norm = |v: &[Complex64]| v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));

    let mut ww = moyal_star(&ground, &ground, hbar)?;
    ww.residual.iter_mut().for_each(|z| *z *= 2.0 * std::f64::consts::PI * hbar);
    let idempotence = ww.max_abs_diff(&ground) * std::f64::consts::PI * hbar;
    let unit = moyal_star(&one, &ground, hbar)?.max_abs_diff(&ground);
    let qp = moyal_star(&q, &p, hbar)?.values();
    let pq = moyal_star(&p, &q, hbar)?.values();
    let comm: Vec<Complex64> = qp.iter().zip(&pq).map(|(a, b)| a - b - Complex64::new(0.0, hbar)).collect();
    let shifted = PhaseSymbol::real_fn(g, |p, q| (-((p - 0.5).powi(2) + 2.0 * q * q) / hbar).exp());
    let left = moyal_star(&moyal_star(&ground, &shifted, hbar)?, &ground, hbar)?;
    let right = moyal_star(&ground, &moyal_star(&shifted, &ground, hbar)?, hbar)?;
    let assoc = left.max_abs_diff(&right) / max_norm(&left.values()).max(1e-300);

    let checks = [
        ("projector_idempotence", idempotence, 1e-6),
        ("unit", unit, 1e-12),
        ("commutator", max_norm(&comm), 1e-12),
        ("associativity", assoc, 1e-6),
    ];
    let mut body = String::from("check,defect,tolerance,passed\n");
    for (name, defect, tol) in checks {
        let _ = writeln!(body, "{name},{},{},{}", f(defect), f(tol), (defect <= tol) as u8);
    }
    out.write("star.csv", &body, checks.len())?;
    Ok(())
}
