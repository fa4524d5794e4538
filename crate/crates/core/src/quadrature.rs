//! Fixed-order quadrature rules used throughout.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Composite Simpson over uniformly spaced samples (even number of intervals).
pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    let n = values.len().saturating_sub(1);
    if n == 0 {
        return Ok(0.0);
    }
    if n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("Simpson needs an even interval count, got {n}")));
    }
    let mut s = values[0] + values[n];
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(s * h / 3.0)
}

/// Running integral at every node. Even nodes use composite Simpson; odd nodes
/// add the three-point rule for the last half panel.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (values[0] + values[1]);
        return out;
    }
    let mut k = 2;
    while k < n {
        out[k] = out[k - 2] + h / 3.0 * (values[k - 2] + 4.0 * values[k - 1] + values[k]);
        k += 2;
    }
    let mut k = 1;
    while k < n {
        out[k] = if k + 1 < n {
            out[k - 1] + h / 12.0 * (5.0 * values[k - 1] + 8.0 * values[k] - values[k + 1])
        } else {
            out[k - 1] + h / 12.0 * (-values[k - 2] + 8.0 * values[k - 1] + 5.0 * values[k])
        };
        k += 2;
    }
    out
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.into_iter().zip(w).map(|(x, w)| (c + r * x, r * w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.1;
        let v: Vec<f64> = (0..=10).map(|k| (k as f64 * h).powi(3)).collect();
        assert!((simpson(&v, h).unwrap() - 0.25).abs() < 1e-14);
        assert!(simpson(&v[..10], h).is_err());
        let c = cumulative_simpson(&v, h);
        for (k, ck) in c.iter().enumerate() {
            let t = k as f64 * h;
            assert!((ck - t.powi(4) / 4.0).abs() < 1e-4, "{k}: {ck}");
        }
    }

    #[test]
    fn legendre_rule() {
        for n in [1, 2, 5, 16, 40] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // exact for degree 2n − 1
            let deg = 2 * n - 1;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((integral - exact).abs() < 1e-13, "n={n}");
        }
        let s: f64 = gauss_legendre_on(20, 0.0, PI).iter().map(|(x, w)| w * x.sin()).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }
}
