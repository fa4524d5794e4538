use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::classical::PhaseSpacePoint;

/// Truncated real trigonometric series f(θ) = a₀ + Σ_k (a_k cos kθ + b_k sin kθ).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TrigSeries {
    /// Interpolates samples taken at θ_j = 2πj/n, dropping the Nyquist mode and
    /// trailing coefficients below `cutoff` relative to the largest one.
    pub fn from_samples(samples: &[f64], cutoff: f64) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let kmax = (n - 1) / 2;
        let mut a = Vec::with_capacity(kmax + 1);
        let mut b = Vec::with_capacity(kmax + 1);
        a.push(buf[0].re / n as f64);
        b.push(0.0);
        for c in buf.iter().take(kmax + 1).skip(1) {
            a.push(2.0 * c.re / n as f64);
            b.push(-2.0 * c.im / n as f64);
        }
        let scale = a.iter().chain(&b).skip(1).fold(0.0f64, |m, v| m.max(v.abs())).max(a[0].abs());
        let mut keep = a.len();
        while keep > 1 && a[keep - 1].abs() <= cutoff * scale && b[keep - 1].abs() <= cutoff * scale {
            keep -= 1;
        }
        a.truncate(keep);
        b.truncate(keep);
        Self { a, b }
    }

    pub fn modes(&self) -> usize {
        self.a.len() - 1
    }

    /// (f, f′) at θ.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        let mut f = self.a[0];
        let mut df = 0.0;
        for k in 1..self.a.len() {
            let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
            s = sn;
            c = cn;
            let kf = k as f64;
            f += self.a[k] * c + self.b[k] * s;
            df += kf * (self.b[k] * c - self.a[k] * s);
        }
        (f, df)
    }

    /// Antiderivative vanishing at θ = 0, including the secular a₀θ term.
    pub fn integral(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        let mut f = self.a[0] * theta;
        for k in 1..self.a.len() {
            let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
            s = sn;
            c = cn;
            let kf = k as f64;
            f += (self.a[k] * s + self.b[k] * (1.0 - c)) / kf;
        }
        f
    }
}

/// Closed curve x(θ) with its cumulative action ∫₀^θ p dq.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellCurve {
    p: TrigSeries,
    q: TrigSeries,
    pdq: TrigSeries,
}

impl ShellCurve {
    pub fn from_points(points: &[PhaseSpacePoint]) -> Self {
        let n = points.len();
        let ps: Vec<f64> = points.iter().map(|x| x.p).collect();
        let qs: Vec<f64> = points.iter().map(|x| x.q).collect();
        let p = TrigSeries::from_samples(&ps, 1e-14);
        let q = TrigSeries::from_samples(&qs, 1e-14);
        // the product p·q′ has twice the bandwidth; sample it on a doubled grid
        let m = 2 * n;
        let prod: Vec<f64> = (0..m)
            .map(|j| {
                let th = TAU * j as f64 / m as f64;
                p.eval(th).0 * q.eval(th).1
            })
            .collect();
        let pdq = TrigSeries::from_samples(&prod, 1e-14);
        Self { p, q, pdq }
    }

    pub fn point(&self, theta: f64) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.p.eval(theta).0, self.q.eval(theta).0)
    }

    /// dx/dθ.
    pub fn tangent(&self, theta: f64) -> PhaseSpacePoint {
        PhaseSpacePoint::new(self.p.eval(theta).1, self.q.eval(theta).1)
    }

    pub fn point_and_tangent(&self, theta: f64) -> (PhaseSpacePoint, PhaseSpacePoint) {
        let (p, dp) = self.p.eval(theta);
        let (q, dq) = self.q.eval(theta);
        (PhaseSpacePoint::new(p, q), PhaseSpacePoint::new(dp, dq))
    }

    /// ∫₀^θ p dq along the curve (θ may exceed 2π).
    pub fn action(&self, theta: f64) -> f64 {
        self.pdq.integral(theta)
    }

    /// Signed enclosed area ∮ p dq.
    pub fn signed_area(&self) -> f64 {
        TAU * self.pdq.a[0]
    }

    pub fn modes(&self) -> usize {
        self.p.modes().max(self.q.modes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_reproduces_trig_polynomial() {
        let f = |t: f64| 0.3 + 1.2 * (2.0 * t).cos() - 0.7 * (3.0 * t).sin();
        let n = 32;
        let samples: Vec<f64> = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
        let s = TrigSeries::from_samples(&samples, 1e-14);
        assert_eq!(s.modes(), 3);
        for &t in &[0.1, 1.7, 4.4] {
            let (v, dv) = s.eval(t);
            assert!((v - f(t)).abs() < 1e-13);
            let exact_d = -2.4 * (2.0 * t).sin() - 2.1 * (3.0 * t).cos();
            assert!((dv - exact_d).abs() < 1e-12);
            let exact_i = 0.3 * t + 0.6 * (2.0 * t).sin() + 0.7 / 3.0 * ((3.0 * t).cos() - 1.0);
            assert!((s.integral(t) - exact_i).abs() < 1e-13);
        }
    }

    #[test]
    fn circle_area() {
        let pts: Vec<PhaseSpacePoint> = (0..64)
            .map(|j| {
                let t = TAU * j as f64 / 64.0;
                PhaseSpacePoint::new(-2.0 * t.sin(), 2.0 * t.cos())
            })
            .collect();
        let c = ShellCurve::from_points(&pts);
        assert!((c.signed_area() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
