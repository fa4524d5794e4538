use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::shell::ShellSpec;
use crate::classical::PhaseSpacePoint;
use crate::error::{Error, Result};

const SCAN: usize = 64;

/// A chord of the shell centred on x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chord {
    pub centre: PhaseSpacePoint,
    /// ξ = x₊ − x₋.
    pub xi: PhaseSpacePoint,
    pub x_plus: PhaseSpacePoint,
    pub x_minus: PhaseSpacePoint,
    /// (θ₋, θ₊) while both tips sit on the shell they were found on.
    pub angles: Option<(f64, f64)>,
    /// Area between chord and shell.
    pub action: f64,
    /// Flow time from x₋ to x₊.
    pub tau: f64,
    pub maslov: f64,
    /// |x_θ(θ₊) ∧ x_θ(θ₋)| with angle derivatives x_θ = dx/dθ.
    pub wedge: f64,
    /// |ẋ₊ ∧ ẋ₋| with hamiltonian velocities.
    pub velocity_wedge: f64,
    pub caustic: bool,
}

impl Chord {
    /// Amplitude 2/(π√(2πħ))·|{I₋,I₊}|^{-1/2}; withheld at caustics.
    pub fn amplitude(&self, hbar: f64) -> Result<f64> {
        if self.caustic {
            return Err(Error::Caustic { wedge: self.velocity_wedge, tolerance: f64::NAN });
        }
        Ok(amplitude_prefactor(hbar) / self.wedge.sqrt())
    }
}

/// 2/(π√(2πħ)) for one degree of freedom.
pub fn amplitude_prefactor(hbar: f64) -> f64 {
    2.0 / (PI * (TAU * hbar).sqrt())
}

/// (θ₋, θ₊) together with |det ∂x/∂(θ₋, θ₊)|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleChart {
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub jacobian: f64,
}

pub fn angle_jacobian(theta_minus: f64, theta_plus: f64, shell: &ShellSpec) -> AngleChart {
    let w = shell.tangent(theta_plus).wedge(shell.tangent(theta_minus));
    AngleChart { theta_minus, theta_plus, jacobian: 0.25 * w.abs() }
}

pub fn traversal_time(theta_minus: f64, theta_plus: f64, shell: &ShellSpec) -> f64 {
    (theta_plus - theta_minus).rem_euclid(TAU) * shell.period / TAU
}

/// Area between the chord and the shell, the smaller of the two segments.
pub fn chord_action(chord: &Chord, shell: &ShellSpec) -> Result<f64> {
    let (tm, tp) = match chord.angles {
        Some(a) => a,
        None => {
            let (tm, dm) = shell.locate(chord.x_minus);
            let (tp, dp) = shell.locate(chord.x_plus);
            let tol = 1e-8 * shell.max_speed.max(1.0) * shell.period;
            if dm > tol || dp > tol {
                return Err(Error::InvalidArgument(format!(
                    "chord tips lie off the shell by {:.3e}",
                    dm.max(dp)
                )));
            }
            (tm, tp)
        }
    };
    if (tp - tm).rem_euclid(TAU).min((tm - tp).rem_euclid(TAU)) == 0.0 {
        return Ok(0.0);
    }
    let forward = shell.forward_segment_area(tm, tp);
    Ok(forward.min(shell.area - forward))
}

/// Amplitude of an unflagged chord at ħ.
pub fn chord_amplitude(chord: &Chord, shell: &ShellSpec, hbar: f64) -> Result<f64> {
    if !(hbar > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
    }
    let tolerance = shell.caustic_tolerance();
    if chord.caustic || chord.velocity_wedge < tolerance {
        return Err(Error::Caustic { wedge: chord.velocity_wedge, tolerance });
    }
    Ok(amplitude_prefactor(hbar) / chord.wedge.sqrt())
}

/// Builds the chord with tips at angles θa, θb, orienting it so that the
/// forward arc x₋ → x₊ bounds the smaller segment.
pub fn chord_from_angles(theta_a: f64, theta_b: f64, centre: PhaseSpacePoint, shell: &ShellSpec) -> Chord {
    let forward = shell.forward_segment_area(theta_a, theta_b);
    let (tm, tp, action) = if forward <= shell.area - forward {
        (theta_a, theta_b, forward)
    } else {
        (theta_b, theta_a, shell.area - forward)
    };
    let (xm, dm) = shell.point_and_tangent(tm);
    let (xp, dp) = shell.point_and_tangent(tp);
    let velocity_wedge = shell.system.velocity(xp).wedge(shell.system.velocity(xm)).abs();
    Chord {
        centre,
        xi: xp - xm,
        x_plus: xp,
        x_minus: xm,
        angles: Some((tm, tp)),
        action: action.max(0.0),
        tau: traversal_time(tm, tp, shell),
        maslov: shell.maslov,
        wedge: dp.wedge(dm).abs(),
        velocity_wedge,
        caustic: velocity_wedge < shell.caustic_tolerance(),
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn newton(
    x: PhaseSpacePoint,
    mut ta: f64,
    mut tb: f64,
    shell: &ShellSpec,
    scale: f64,
) -> Option<(f64, f64)> {
    for _ in 0..80 {
        let (ya, da) = shell.point_and_tangent(ta);
        let (yb, db) = shell.point_and_tangent(tb);
        let f = PhaseSpacePoint::midpoint(ya, yb) - x;
        if f.norm() <= 1e-14 * scale {
            return Some((ta, tb));
        }
        // J = ½ [x′(θa) x′(θb)], solved by Levenberg–Marquardt for robustness
        let (j11, j12, j21, j22) = (0.5 * da.p, 0.5 * db.p, 0.5 * da.q, 0.5 * db.q);
        let lambda = 1e-14 * (da.dot(da) + db.dot(db));
        let (a11, a12, a22) = (
            j11 * j11 + j21 * j21 + lambda,
            j11 * j12 + j21 * j22,
            j12 * j12 + j22 * j22 + lambda,
        );
        let (g1, g2) = (j11 * f.p + j21 * f.q, j12 * f.p + j22 * f.q);
        let det = a11 * a22 - a12 * a12;
        if det <= 0.0 || !det.is_finite() {
            break;
        }
        let s1 = (a22 * g1 - a12 * g2) / det;
        let s2 = (a11 * g2 - a12 * g1) / det;
        let norm = s1.hypot(s2);
        let damp = if norm > 0.5 { 0.5 / norm } else { 1.0 };
        ta -= damp * s1;
        tb -= damp * s2;
        if !ta.is_finite() || !tb.is_finite() {
            return None;
        }
    }
    let f = PhaseSpacePoint::midpoint(shell.point(ta), shell.point(tb)) - x;
    (f.norm() <= 1e-10 * scale).then_some((ta, tb))
}

/// All chords of the shell centred on x, deduplicated under tip exchange.
///
/// A point on the shell yields one degenerate, flagged chord; a point with no
/// real chords yields an empty vector.
pub fn find_chords(x: PhaseSpacePoint, shell: &ShellSpec) -> Vec<Chord> {
    let scale = shell.boundary.iter().map(|b| b.distance(shell.centre)).fold(0.0, f64::max).max(1e-300);

    let (theta0, dist) = shell.locate(x);
    if dist <= 1e-9 * scale {
        let mut c = chord_from_angles(theta0, theta0, x, shell);
        c.caustic = true;
        return vec![c];
    }

    let ys: Vec<PhaseSpacePoint> = (0..SCAN).map(|i| shell.point(TAU * i as f64 / SCAN as f64)).collect();
    let d = |i: usize, j: usize| PhaseSpacePoint::midpoint(ys[i % SCAN], ys[j % SCAN]).distance(x);
    let spacing = (0..SCAN).map(|i| ys[i].distance(ys[(i + 1) % SCAN])).fold(0.0, f64::max);

    let mut seeds = Vec::new();
    for i in 0..SCAN {
        for j in (i + 1)..SCAN {
            let v = d(i, j);
            if v > 2.0 * spacing {
                continue;
            }
            let is_min = (0..3).all(|di| {
                (0..3).all(|dj| {
                    (di == 1 && dj == 1) || v <= d(i + SCAN + di - 1, j + SCAN + dj - 1)
                })
            });
            if is_min {
                seeds.push((TAU * i as f64 / SCAN as f64, TAU * j as f64 / SCAN as f64));
            }
        }
    }

    let mut found: Vec<(f64, f64)> = Vec::new();
    for (a, b) in seeds {
        let Some((ta, tb)) = newton(x, a, b, shell, scale) else { continue };
        let (ta, tb) = (ta.rem_euclid(TAU), tb.rem_euclid(TAU));
        if angle_gap(ta, tb) < 1e-6 {
            continue;
        }
        let duplicate = found.iter().any(|&(fa, fb)| {
            (angle_gap(fa, ta) < 1e-6 && angle_gap(fb, tb) < 1e-6)
                || (angle_gap(fa, tb) < 1e-6 && angle_gap(fb, ta) < 1e-6)
        });
        if !duplicate {
            found.push((ta, tb));
        }
    }

    let mut chords: Vec<Chord> = found.into_iter().map(|(a, b)| chord_from_angles(a, b, x, shell)).collect();
    chords.sort_by(|c1, c2| {
        let (a1, b1) = c1.angles.unwrap_or_default();
        let (a2, b2) = c2.angles.unwrap_or_default();
        a1.total_cmp(&a2).then(b1.total_cmp(&b2))
    });
    chords
}

/// Smallest |ẋ₊∧ẋ₋| over the chords centred on x; infinite when there are none.
pub fn caustic_indicator(x: PhaseSpacePoint, shell: &ShellSpec) -> f64 {
    find_chords(x, shell)
        .iter()
        .map(|c| c.velocity_wedge)
        .fold(f64::INFINITY, f64::min)
}
