//! Normalized Bessel functions.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma, ln_gamma};

use crate::quadrature::gauss_legendre_on;

/// Γ(ν+1)·(2/z)^ν·J_ν(z), which tends to 1 as z → 0. Requires ν > −1.
pub fn normalized_bessel(nu: f64, z: f64) -> f64 {
    let z = z.abs();
    if z == 0.0 {
        return 1.0;
    }
    if z < 8.0 {
        // Σ_k (−z²/4)^k / (k! (ν+1)_k)
        let x = -0.25 * z * z;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= x / (k as f64 * (nu + k as f64));
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        return sum;
    }
    let j = bessel_j_large(nu, z);
    // Γ(ν+1)(2/z)^ν in log form to avoid overflow at large ν
    let log_scale = ln_gamma(nu + 1.0) + nu * (2.0 / z).ln();
    j * log_scale.exp() * gamma_sign(nu)
}

fn gamma_sign(nu: f64) -> f64 {
    gamma(nu + 1.0).signum()
}

/// J_ν(z) from Schläfli's integral, for moderate to large z.
fn bessel_j_large(nu: f64, z: f64) -> f64 {
    // oscillatory part: (1/π) ∫_0^π cos(νθ − z sin θ) dθ, enough panels to resolve it
    let panels = ((z + nu.abs()) / 2.0).ceil().max(4.0) as usize;
    let width = PI / panels as f64;
    let mut first = 0.0;
    for k in 0..panels {
        for (t, w) in gauss_legendre_on(24, k as f64 * width, (k + 1) as f64 * width) {
            first += w * (nu * t - z * t.sin()).cos();
        }
    }
    first /= PI;
    let s = (nu * PI).sin();
    if s.abs() < 1e-15 {
        return first;
    }
    // −(sin νπ/π) ∫_0^∞ exp(−z sinh t − νt) dt, truncated where the integrand is negligible
    let upper = ((60.0 + nu.abs() * 5.0) / z).asinh().max(1e-3) + 1.0;
    let mut second = 0.0;
    let panels = 16;
    let width = upper / panels as f64;
    for k in 0..panels {
        for (t, w) in gauss_legendre_on(24, k as f64 * width, (k + 1) as f64 * width) {
            second += w * (-z * t.sinh() - nu * t).exp();
        }
    }
    first - s / PI * second
}
