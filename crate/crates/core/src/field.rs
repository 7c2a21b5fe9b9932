//! Vector field sources: closed forms, sampled grids and linear combinations.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::{Aabb, GridSpec, Vec3};
use crate::poly::PolyField;
use crate::synthesis::Dipole;

/// Points closer than this to a declared singular point are rejected.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Node-collocated samples of a vector field, three components per node,
/// node index x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if data.len() != 3 * spec.node_count() {
            return Err(Error::invalid(format!(
                "grid field needs {} samples, got {}",
                3 * spec.node_count(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid samples must be finite"));
        }
        Ok(Self { spec, data })
    }

    /// Samples `f` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&Vec3) -> Vec3) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * spec.node_count());
        for k in 0..spec.dims[2] {
            for j in 0..spec.dims[1] {
                for i in 0..spec.dims[0] {
                    let v = f(&spec.node(i, j, k));
                    data.extend_from_slice(&[v[0], v[1], v[2]]);
                }
            }
        }
        Self::new(spec, data)
    }

    pub fn node_value(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let b = 3 * self.spec.index(i, j, k);
        Vec3::new(self.data[b], self.data[b + 1], self.data[b + 2])
    }

    /// Trilinear interpolation.
    pub fn sample(&self, p: &Vec3) -> Result<Vec3> {
        let (cell, t) = self
            .spec
            .locate(p)
            .ok_or(Error::OutOfDomain(p[0], p[1], p[2]))?;
        let mut out = Vec3::zeros();
        for corner in 0..8 {
            let o = [corner & 1, corner >> 1 & 1, corner >> 2 & 1];
            let mut w = 1.0;
            for d in 0..3 {
                w *= if o[d] == 1 { t[d] } else { 1.0 - t[d] };
            }
            if w != 0.0 {
                out += w * self.node_value(cell[0] + o[0], cell[1] + o[1], cell[2] + o[2]);
            }
        }
        Ok(out)
    }
}

/// A vector field on `R³` (or on a grid box).
#[derive(Clone, Debug)]
pub enum FieldSource {
    /// Trilinearly interpolated node samples; defined on the grid box only.
    Grid(GridField),
    /// `(x - a) / (4π |x - a|³)`, unit outward flux through spheres enclosing `a`.
    Monopole { center: Vec3 },
    Dipole(Dipole),
    Constant(Vec3),
    Polynomial(PolyField),
    /// Linear combination `Σ c_i X_i`.
    Sum(Vec<(f64, FieldSource)>),
}

impl FieldSource {
    pub fn monopole(center: Vec3) -> Self {
        FieldSource::Monopole { center }
    }

    pub fn zero() -> Self {
        FieldSource::Constant(Vec3::zeros())
    }

    pub fn scaled(self, s: f64) -> Self {
        FieldSource::Sum(vec![(s, self)])
    }

    pub fn plus(self, other: FieldSource) -> Self {
        match self {
            FieldSource::Sum(mut parts) => {
                parts.push((1.0, other));
                FieldSource::Sum(parts)
            }
            first => FieldSource::Sum(vec![(1.0, first), (1.0, other)]),
        }
    }

    pub fn evaluate(&self, p: &Vec3) -> Result<Vec3> {
        match self {
            FieldSource::Grid(g) => g.sample(p),
            FieldSource::Monopole { center } => {
                let r = p - center;
                let n = r.norm();
                if n <= SINGULAR_TOL {
                    return Err(Error::SingularPoint(p[0], p[1], p[2]));
                }
                Ok(r / (4.0 * PI * n * n * n))
            }
            FieldSource::Dipole(d) => d.evaluate(p),
            FieldSource::Constant(v) => Ok(*v),
            FieldSource::Polynomial(poly) => Ok(poly.eval(p)),
            FieldSource::Sum(parts) => {
                let mut acc = Vec3::zeros();
                for (c, f) in parts {
                    let v = f.evaluate(p)?;
                    if *c != 0.0 {
                        acc += *c * v;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Declared isolated singular points.
    pub fn singular_points(&self) -> Vec<Vec3> {
        let mut out = Vec::new();
        self.collect_singular(&mut out);
        out
    }

    fn collect_singular(&self, out: &mut Vec<Vec3>) {
        match self {
            FieldSource::Monopole { center } => out.push(*center),
            FieldSource::Dipole(d) => out.extend([d.a, d.b]),
            FieldSource::Sum(parts) => parts
                .iter()
                .filter(|(c, _)| *c != 0.0)
                .for_each(|(_, f)| f.collect_singular(out)),
            _ => {}
        }
    }

    /// Box on which the field is defined, `None` for all of `R³`.
    pub fn domain(&self) -> Option<Aabb> {
        match self {
            FieldSource::Grid(g) => Some(g.spec.bounds()),
            FieldSource::Sum(parts) => parts.iter().filter_map(|(_, f)| f.domain()).reduce(|a, b| Aabb {
                min: std::array::from_fn(|d| a.min[d].max(b.min[d])),
                max: std::array::from_fn(|d| a.max[d].min(b.max[d])),
            }),
            _ => None,
        }
    }

    /// Smallest grid spacing among grid parts, if any.
    pub fn grid_spacing(&self) -> Option<f64> {
        match self {
            FieldSource::Grid(g) => Some(g.spec.spacing.iter().cloned().fold(f64::INFINITY, f64::min)),
            FieldSource::Sum(parts) => parts
                .iter()
                .filter_map(|(_, f)| f.grid_spacing())
                .reduce(f64::min),
            _ => None,
        }
    }

    /// Flattens nested sums into `(coefficient, dipole)` pairs when the field is
    /// a combination of dipoles only.
    pub fn as_dipole_sum(&self) -> Option<Vec<(f64, &Dipole)>> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a FieldSource, c: f64, out: &mut Vec<(f64, &'a Dipole)>) -> bool {
            match f {
                FieldSource::Dipole(d) => {
                    out.push((c, d));
                    true
                }
                FieldSource::Sum(parts) => parts.iter().all(|(w, g)| walk(g, c * w, out)),
                _ => false,
            }
        }
        walk(self, 1.0, &mut out).then_some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    #[test]
    fn constant_evaluates_everywhere() {
        let f = FieldSource::Constant(vec3(1.0, 0.0, 0.0));
        assert_eq!(f.evaluate(&vec3(0.3, 0.3, 0.3)).unwrap(), vec3(1.0, 0.0, 0.0));
    }

    #[test]
    fn monopole_matches_scalar_closed_form() {
        let f = FieldSource::monopole(Vec3::zeros());
        let v = f.evaluate(&vec3(0.5, 0.0, 0.0)).unwrap();
        // (x - a) / (4π |x - a|^3) with |x - a| = 0.5, evaluated by hand.
        let expected = 0.5 / (4.0 * PI * 0.125);
        assert!((v[0] - expected).abs() < 1e-15);
        assert!((v[0] - 1.0 / PI).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
        assert!(matches!(f.evaluate(&Vec3::zeros()), Err(Error::SingularPoint(..))));
    }

    #[test]
    fn trilinear_reproduces_linear_fields() {
        let spec = GridSpec::spanning(&Aabb::unit_cube(), 4).unwrap();
        let lin = |p: &Vec3| vec3(1.0 + 2.0 * p[0] - p[1], 3.0 * p[2], p[0] + p[1] + p[2]);
        let g = GridField::from_fn(spec, lin).unwrap();
        let h = 1.0 / 3.0;
        for p in [vec3(0.5 * h, 0.5 * h, 0.5 * h), vec3(0.77, 0.11, 0.42), vec3(1.0, 1.0, 1.0)] {
            let d = g.sample(&p).unwrap() - lin(&p);
            assert!(d.norm() < 1e-14, "{p:?}");
        }
        assert_eq!(g.sample(&spec.node(2, 1, 3)).unwrap(), g.node_value(2, 1, 3));
        assert!(matches!(g.sample(&vec3(1.2, 0.5, 0.5)), Err(Error::OutOfDomain(..))));
    }

    #[test]
    fn sums_combine_linearly() {
        let f = FieldSource::Constant(vec3(1.0, 2.0, 3.0))
            .scaled(0.5)
            .plus(FieldSource::Constant(vec3(0.0, 0.0, 1.0)));
        assert_eq!(f.evaluate(&Vec3::zeros()).unwrap(), vec3(0.5, 1.0, 2.5));
    }
}
