//! Polynomial scalars and polynomial vector fields of low total degree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;

/// `coef * x^e0 * y^e1 * z^e2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exps: [u32; 3],
}

impl Monomial {
    pub fn new(coef: f64, exps: [u32; 3]) -> Self {
        Self { coef, exps }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        let mut v = self.coef;
        for d in 0..3 {
            v *= p[d].powi(self.exps[d] as i32);
        }
        v
    }

    fn derivative(&self, axis: usize) -> Option<Monomial> {
        let e = self.exps[axis];
        if e == 0 {
            return None;
        }
        let mut exps = self.exps;
        exps[axis] -= 1;
        Some(Monomial::new(self.coef * e as f64, exps))
    }
}

/// Scalar polynomial as a sum of monomials.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalarPoly {
    pub terms: Vec<Monomial>,
}

impl ScalarPoly {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        self.terms.iter().map(|m| m.eval(p)).sum()
    }

    pub fn derivative(&self, axis: usize) -> ScalarPoly {
        ScalarPoly::new(self.terms.iter().filter_map(|m| m.derivative(axis)).collect())
    }

    /// `∇γ`; requires total degree at most 3 so the result fits a [`PolyField`].
    pub fn gradient(&self) -> Result<PolyField> {
        PolyField::new(std::array::from_fn(|d| self.derivative(d)))
    }
}

/// Polynomial vector field whose components have total degree at most 2.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolyField {
    pub components: [ScalarPoly; 3],
}

impl PolyField {
    pub const MAX_DEGREE: u32 = 2;

    pub fn new(components: [ScalarPoly; 3]) -> Result<Self> {
        for (d, c) in components.iter().enumerate() {
            if c.degree() > Self::MAX_DEGREE {
                return Err(Error::invalid(format!(
                    "component {d} has degree {} > {}",
                    c.degree(),
                    Self::MAX_DEGREE
                )));
            }
            if c.terms.iter().any(|m| !m.coef.is_finite()) {
                return Err(Error::invalid("polynomial coefficients must be finite"));
            }
        }
        Ok(Self { components })
    }

    pub fn constant(v: [f64; 3]) -> Self {
        Self {
            components: std::array::from_fn(|d| ScalarPoly::new(vec![Monomial::new(v[d], [0, 0, 0])])),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, p: &Vec3) -> Vec3 {
        Vec3::new(self.components[0].eval(p), self.components[1].eval(p), self.components[2].eval(p))
    }

    pub fn divergence(&self, p: &Vec3) -> f64 {
        (0..3).map(|d| self.components[d].derivative(d).eval(p)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.terms.iter().all(|m| m.coef == 0.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.components {
            for m in &mut c.terms {
                m.coef *= s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    #[test]
    fn gradient_of_cubic() {
        // γ = x^2 y + 3 z^3 - y
        let g = ScalarPoly::new(vec![
            Monomial::new(1.0, [2, 1, 0]),
            Monomial::new(3.0, [0, 0, 3]),
            Monomial::new(-1.0, [0, 1, 0]),
        ]);
        let grad = g.gradient().unwrap();
        let p = vec3(0.5, -2.0, 1.5);
        let v = grad.eval(&p);
        assert!((v[0] - 2.0 * 0.5 * -2.0).abs() < 1e-15);
        assert!((v[1] - (0.25 - 1.0)).abs() < 1e-15);
        assert!((v[2] - 9.0 * 2.25).abs() < 1e-14);
    }

    #[test]
    fn degree_cap_enforced() {
        let quartic = ScalarPoly::new(vec![Monomial::new(1.0, [4, 0, 0])]);
        assert!(quartic.gradient().is_err());
    }
}
