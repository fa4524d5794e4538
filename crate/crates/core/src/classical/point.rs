use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point x = (p, q) of a one degree-of-freedom phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub p: f64,
    pub q: f64,
}

impl PhaseSpacePoint {
    pub const ORIGIN: Self = Self { p: 0.0, q: 0.0 };

    pub const fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }

    /// Skew product a∧b = (Ja)·b = p_a q_b − q_a p_b.
    #[inline]
    pub fn wedge(self, other: Self) -> f64 {
        self.p * other.q - self.q * other.p
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.p * other.p + self.q * other.q
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.p.hypot(self.q)
    }

    /// Applies J, so that `grad.rotate()` is the hamiltonian velocity for gradient `grad`.
    #[inline]
    pub fn rotate(self) -> Self {
        Self::new(-self.q, self.p)
    }

    pub fn midpoint(a: Self, b: Self) -> Self {
        Self::new(0.5 * (a.p + b.p), 0.5 * (a.q + b.q))
    }

    pub fn is_finite(self) -> bool {
        self.p.is_finite() && self.q.is_finite()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

impl Add for PhaseSpacePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.p + o.p, self.q + o.q)
    }
}

impl Sub for PhaseSpacePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.p - o.p, self.q - o.q)
    }
}

impl Neg for PhaseSpacePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.p, -self.q)
    }
}

impl Mul<f64> for PhaseSpacePoint {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.p * s, self.q * s)
    }
}

impl Mul<PhaseSpacePoint> for f64 {
    type Output = PhaseSpacePoint;
    fn mul(self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        x * self
    }
}

/// a∧b for one degree of freedom.
pub fn symplectic_form(a: PhaseSpacePoint, b: PhaseSpacePoint) -> f64 {
    a.wedge(b)
}

/// a∧b for l degrees of freedom, coordinates laid out as (p_1..p_l, q_1..q_l).
pub fn symplectic_form_nd(a: &[f64], b: &[f64]) -> Result<f64> {
    let l = half_dimension(a, b)?;
    let (pa, qa) = a.split_at(l);
    let (pb, qb) = b.split_at(l);
    Ok((0..l).map(|k| pa[k] * qb[k] - qa[k] * pb[k]).sum())
}

/// Δ = 2(x∧x1 + x1∧x2 + x2∧x).
pub fn triangle_area(x: PhaseSpacePoint, x1: PhaseSpacePoint, x2: PhaseSpacePoint) -> f64 {
    2.0 * (x.wedge(x1) + x1.wedge(x2) + x2.wedge(x))
}

pub fn triangle_area_nd(x: &[f64], x1: &[f64], x2: &[f64]) -> Result<f64> {
    half_dimension(x, x2)?;
    Ok(2.0
        * (symplectic_form_nd(x, x1)?
            + symplectic_form_nd(x1, x2)?
            + symplectic_form_nd(x2, x)?))
}

fn half_dimension(a: &[f64], b: &[f64]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() || a.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "phase-space vectors need even positive length, got {}",
            a.len()
        )));
    }
    Ok(a.len() / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(p: f64, q: f64) -> PhaseSpacePoint {
        PhaseSpacePoint::new(p, q)
    }

    #[test]
    fn skew_product_examples() {
        assert_eq!(symplectic_form(pt(1.0, 0.0), pt(0.0, 1.0)), 1.0);
        assert_eq!(symplectic_form(pt(3.0, -2.0), pt(3.0, -2.0)), 0.0);
        assert_eq!(symplectic_form(pt(2.0, 1.0), pt(1.0, 3.0)), 5.0);
        assert_eq!(symplectic_form(pt(1.0, 3.0), pt(2.0, 1.0)), -5.0);
    }

    #[test]
    fn skew_product_matches_block_matrix() {
        // J = [[0, -1], [1, 0]] acting on (p, q)
        let a = pt(0.7, -1.3);
        let b = pt(2.1, 0.4);
        let ja = (-a.q, a.p);
        let expected = ja.0 * b.p + ja.1 * b.q;
        assert!((symplectic_form(a, b) - expected).abs() < 1e-15);
    }

    #[test]
    fn nd_version_checks_dimensions() {
        assert_eq!(symplectic_form_nd(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(
            symplectic_form_nd(&[1.0, 0.0], &[0.0, 1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        // two degrees of freedom add
        let a = [1.0, 2.0, 0.0, 0.0];
        let b = [0.0, 0.0, 3.0, 4.0];
        assert_eq!(symplectic_form_nd(&a, &b).unwrap(), 11.0);
    }

    #[test]
    fn triangle_examples() {
        let x = pt(0.3, -0.2);
        assert_eq!(triangle_area(x, x, x), 0.0);
        assert_eq!(triangle_area(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)), 2.0);
        assert_eq!(
            triangle_area_nd(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            2.0
        );
    }

    #[test]
    fn triangle_is_four_shoelace_areas() {
        let (a, b, c) = (pt(0.2, 1.1), pt(-0.7, 0.3), pt(1.5, -0.4));
        let shoelace = 0.5
            * ((b.p - a.p) * (c.q - a.q) - (b.q - a.q) * (c.p - a.p));
        assert!((triangle_area(a, b, c) - 4.0 * shoelace).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wedge_antisymmetric_bilinear(
            ap in -10.0..10.0f64, aq in -10.0..10.0f64,
            bp in -10.0..10.0f64, bq in -10.0..10.0f64,
            cp in -10.0..10.0f64, cq in -10.0..10.0f64,
            s in -3.0..3.0f64,
        ) {
            let (a, b, c) = (pt(ap, aq), pt(bp, bq), pt(cp, cq));
            prop_assert!((a.wedge(b) + b.wedge(a)).abs() < 1e-12);
            prop_assert_eq!(a.wedge(a), 0.0);
            let lhs = (a * s + c).wedge(b);
            let rhs = s * a.wedge(b) + c.wedge(b);
            prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
        }

        #[test]
        fn triangle_cyclic_and_swap(
            ap in -5.0..5.0f64, aq in -5.0..5.0f64,
            bp in -5.0..5.0f64, bq in -5.0..5.0f64,
            cp in -5.0..5.0f64, cq in -5.0..5.0f64,
        ) {
            let (a, b, c) = (pt(ap, aq), pt(bp, bq), pt(cp, cq));
            let d = triangle_area(a, b, c);
            prop_assert!((d - triangle_area(b, c, a)).abs() < 1e-10);
            prop_assert!((d - triangle_area(c, a, b)).abs() < 1e-10);
            prop_assert!((d + triangle_area(a, c, b)).abs() < 1e-10);
        }
    }
}
