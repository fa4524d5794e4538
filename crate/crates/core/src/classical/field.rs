use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::point::PhaseSpacePoint;
use crate::error::{Error, Result};

/// A smooth real function on phase space.
///
/// `gradient` returns (∂f/∂p, ∂f/∂q) packed into a `PhaseSpacePoint`.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: PhaseSpacePoint) -> f64;

    fn gradient(&self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        central_difference(self, x)
    }
}

/// Central differences with h = 1e-6·max(1, |x|).
pub fn central_difference<F: ScalarField + ?Sized>(f: &F, x: PhaseSpacePoint) -> PhaseSpacePoint {
    let h = 1e-6 * x.norm().max(1.0);
    let dp = (f.value(x + PhaseSpacePoint::new(h, 0.0)) - f.value(x - PhaseSpacePoint::new(h, 0.0)))
        / (2.0 * h);
    let dq = (f.value(x + PhaseSpacePoint::new(0.0, h)) - f.value(x - PhaseSpacePoint::new(0.0, h)))
        / (2.0 * h);
    PhaseSpacePoint::new(dp, dq)
}

type ValueFn = dyn Fn(PhaseSpacePoint) -> f64 + Send + Sync;
type GradFn = dyn Fn(PhaseSpacePoint) -> PhaseSpacePoint + Send + Sync;

/// Closure-backed field with an optional analytic gradient.
#[derive(Clone)]
pub struct FnField {
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradFn>>,
}

impl FnField {
    pub fn new(value: impl Fn(PhaseSpacePoint) -> f64 + Send + Sync + 'static) -> Self {
        Self { value: Arc::new(value), gradient: None }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(PhaseSpacePoint) -> PhaseSpacePoint + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl ScalarField for FnField {
    fn value(&self, x: PhaseSpacePoint) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        match &self.gradient {
            Some(g) => g(x),
            None => central_difference(self, x),
        }
    }
}

/// One term c·p^i·q^j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coefficient: f64,
    pub p_power: u32,
    pub q_power: u32,
}

/// Real polynomial in (p, q).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    /// Builds from (coefficient, p power, q power) triples.
    pub fn from_triples(triples: &[(f64, u32, u32)]) -> Self {
        Self::new(
            triples
                .iter()
                .map(|&(coefficient, p_power, q_power)| Monomial { coefficient, p_power, q_power })
                .collect(),
        )
    }

    pub fn constant(c: f64) -> Self {
        Self::from_triples(&[(c, 0, 0)])
    }

    pub fn q() -> Self {
        Self::from_triples(&[(1.0, 0, 1)])
    }

    pub fn p() -> Self {
        Self::from_triples(&[(1.0, 1, 0)])
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|m| Monomial { coefficient: m.coefficient * s, ..*m })
                .collect(),
        )
    }

    /// If the polynomial reads p²/2 + V(q), returns the coefficients of V by power.
    pub fn potential_coefficients(&self) -> Option<Vec<f64>> {
        let mut kinetic = 0.0;
        let mut v = Vec::new();
        for m in &self.terms {
            match (m.p_power, m.q_power) {
                (0, j) => {
                    let j = j as usize;
                    if v.len() <= j {
                        v.resize(j + 1, 0.0);
                    }
                    v[j] += m.coefficient;
                }
                (2, 0) => kinetic += m.coefficient,
                _ if m.coefficient == 0.0 => {}
                _ => return None,
            }
        }
        ((kinetic - 0.5).abs() < 1e-15).then_some(v)
    }

    pub fn is_even_in_p(&self) -> bool {
        self.terms.iter().all(|m| m.coefficient == 0.0 || m.p_power % 2 == 0)
    }
}

fn powi(x: f64, n: u32) -> f64 {
    x.powi(n as i32)
}

impl ScalarField for Polynomial {
    fn value(&self, x: PhaseSpacePoint) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coefficient * powi(x.p, m.p_power) * powi(x.q, m.q_power))
            .sum()
    }

    fn gradient(&self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        let mut g = PhaseSpacePoint::ORIGIN;
        for m in &self.terms {
            if m.p_power > 0 {
                g.p += m.coefficient
                    * m.p_power as f64
                    * powi(x.p, m.p_power - 1)
                    * powi(x.q, m.q_power);
            }
            if m.q_power > 0 {
                g.q += m.coefficient
                    * m.q_power as f64
                    * powi(x.p, m.p_power)
                    * powi(x.q, m.q_power - 1);
            }
        }
        g
    }
}

/// p²/2 − cos q.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pendulum;

impl ScalarField for Pendulum {
    fn value(&self, x: PhaseSpacePoint) -> f64 {
        0.5 * x.p * x.p - x.q.cos()
    }

    fn gradient(&self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        PhaseSpacePoint::new(x.p, x.q.sin())
    }
}

/// Potential part V(q) of a Hamiltonian p²/2 + V(q).
#[derive(Clone)]
pub enum Potential {
    Polynomial(Vec<f64>),
    Cosine,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Potential {
    pub fn value(&self, q: f64) -> f64 {
        match self {
            Potential::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &a| acc * q + a),
            Potential::Cosine => -q.cos(),
            Potential::Custom(f) => f(q),
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            Potential::Cosine => f.write_str("Cosine"),
            Potential::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Named Hamiltonian with its gradient.
#[derive(Clone)]
pub struct HamiltonianSystem {
    name: String,
    field: Arc<dyn ScalarField>,
    potential: Option<Potential>,
    even_in_p: bool,
    scale: f64,
}

impl fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("name", &self.name)
            .field("potential", &self.potential)
            .field("scale", &self.scale)
            .finish()
    }
}

impl HamiltonianSystem {
    /// (p² + q²)/2
    pub fn harmonic() -> Self {
        Self::polynomial("harmonic", Polynomial::from_triples(&[(0.5, 2, 0), (0.5, 0, 2)]))
    }

    /// (p² + q⁴)/2
    pub fn quartic() -> Self {
        Self::polynomial("quartic", Polynomial::from_triples(&[(0.5, 2, 0), (0.5, 0, 4)]))
    }

    /// p²/2 − cos q
    pub fn pendulum() -> Self {
        Self {
            name: "pendulum".into(),
            field: Arc::new(Pendulum),
            potential: Some(Potential::Cosine),
            even_in_p: true,
            scale: 1.0,
        }
    }

    /// H ≡ 0, freezes the dynamics.
    pub fn zero() -> Self {
        Self::polynomial("zero", Polynomial::default())
    }

    pub fn polynomial(name: impl Into<String>, poly: Polynomial) -> Self {
        let potential = poly.potential_coefficients().map(Potential::Polynomial);
        let even_in_p = poly.is_even_in_p();
        Self { name: name.into(), field: Arc::new(poly), potential, even_in_p, scale: 1.0 }
    }

    pub fn custom(name: impl Into<String>, field: impl ScalarField + 'static) -> Self {
        Self {
            name: name.into(),
            field: Arc::new(field),
            potential: None,
            even_in_p: false,
            scale: 1.0,
        }
    }

    /// Declares H = p²/2 + V(q), which enables the grid eigensolver.
    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = Some(potential);
        self.even_in_p = true;
        self
    }

    /// Looks up "harmonic", "quartic", "pendulum", "zero", or "polynomial" with
    /// (coefficient, p power, q power) triples.
    pub fn by_name(name: &str, coefficients: &[(f64, u32, u32)]) -> Result<Self> {
        match name {
            "harmonic" => Ok(Self::harmonic()),
            "quartic" => Ok(Self::quartic()),
            "pendulum" => Ok(Self::pendulum()),
            "zero" | "off" => Ok(Self::zero()),
            "polynomial" if !coefficients.is_empty() => {
                Ok(Self::polynomial("polynomial", Polynomial::from_triples(coefficients)))
            }
            "polynomial" => Err(Error::InvalidArgument("polynomial system needs coefficients".into())),
            other => Err(Error::InvalidArgument(format!("unknown hamiltonian `{other}`"))),
        }
    }

    /// The same system with H multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.scale *= factor;
        s.potential = if (s.scale - 1.0).abs() < f64::EPSILON { s.potential } else { None };
        s
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn energy(&self, x: PhaseSpacePoint) -> f64 {
        self.scale * self.field.value(x)
    }

    /// (∂H/∂p, ∂H/∂q).
    pub fn gradient(&self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        self.field.gradient(x) * self.scale
    }

    /// ẋ = J∇H = (−∂H/∂q, ∂H/∂p).
    pub fn velocity(&self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        self.gradient(x).rotate()
    }

    pub fn potential(&self) -> Option<&Potential> {
        self.potential.as_ref()
    }

    pub fn is_even_in_p(&self) -> bool {
        self.even_in_p
    }

    pub fn is_trivial(&self) -> bool {
        self.scale == 0.0
            || [(0.3, -0.7), (1.1, 0.4), (-0.6, 1.9)]
                .iter()
                .all(|&(p, q)| self.gradient(PhaseSpacePoint::new(p, q)).norm() == 0.0)
    }

    /// Relative mismatch between the supplied gradient and central differences.
    pub fn gradient_mismatch(&self, x: PhaseSpacePoint) -> f64 {
        let analytic = self.gradient(x);
        let numeric = central_difference(&*self.field, x) * self.scale;
        (analytic - numeric).norm() / analytic.norm().max(1.0)
    }
}

impl ScalarField for HamiltonianSystem {
    fn value(&self, x: PhaseSpacePoint) -> f64 {
        self.energy(x)
    }

    fn gradient(&self, x: PhaseSpacePoint) -> PhaseSpacePoint {
        HamiltonianSystem::gradient(self, x)
    }
}

/// {f,g} = ∂f/∂q ∂g/∂p − ∂f/∂p ∂g/∂q, so that {H, q} = −p.
pub fn poisson_bracket<F, G>(f: &F, g: &G, x: PhaseSpacePoint) -> Result<f64>
where
    F: ScalarField + ?Sized,
    G: ScalarField + ?Sized,
{
    let df = f.gradient(x);
    let dg = g.gradient(x);
    if !df.is_finite() || !dg.is_finite() {
        return Err(Error::NonFinite(format!("gradient near ({}, {})", x.p, x.q)));
    }
    Ok(df.q * dg.p - df.p * dg.q)
}
