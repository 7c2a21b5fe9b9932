use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridField, SINGULAR_TOL};
use crate::geom::{Aabb, GridSpec, Vec3};
use crate::poly::PolyField;
use crate::quadrature::gauss_legendre_on;

/// Construction parameters of a dipole between poles `a` and `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleSpec {
    pub a: [f64; 3],
    pub b: [f64; 3],
    /// Transverse radius at the mid-section; defaults to the half-length.
    pub rho_t: Option<f64>,
    /// Ambient dimension, 2 or 3. In dimension 2 the field lives in the
    /// `z = a_z` plane and ignores the `z` coordinate of query points.
    pub dim: usize,
}

impl DipoleSpec {
    pub fn new(a: Vec3, b: Vec3) -> Self {
        Self { a: a.into(), b: b.into(), rho_t: None, dim: 3 }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho_t = Some(rho);
        self
    }
}

/// Piecewise smooth field supported in the double cone over `[b, a]`,
/// `{ |ξ| + (ε/ρ_t)|y| <= ε }` in axial/transverse coordinates around the
/// midpoint.
///
/// Each half is radial from its pole and carries unit flux through every
/// cross-section, so in the weak sense `⟨X, ∇γ⟩ = γ(a) − γ(b)`: the unit of
/// flux leaves `b` and enters `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dipole {
    pub a: Vec3,
    pub b: Vec3,
    pub half_length: f64,
    pub rho_t: f64,
    pub dim: usize,
    axis: Vec3,
    mid: Vec3,
    transverse: [Vec3; 2],
}

/// `|B^{n-1}_1|`: length of `[-1, 1]` or area of the unit disk.
fn unit_ball_measure(dim: usize) -> f64 {
    if dim == 2 {
        2.0
    } else {
        PI
    }
}

impl Dipole {
    pub fn new(spec: &DipoleSpec) -> Result<Self> {
        let a = Vec3::from(spec.a);
        let b = Vec3::from(spec.b);
        if !(spec.dim == 2 || spec.dim == 3) {
            return Err(Error::invalid(format!("dipole dimension must be 2 or 3, got {}", spec.dim)));
        }
        if spec.dim == 2 && a[2] != b[2] {
            return Err(Error::invalid("planar dipole needs both poles in one z-plane"));
        }
        let diff = a - b;
        let len = diff.norm();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::invalid("dipole poles must be distinct and finite"));
        }
        let half_length = 0.5 * len;
        let rho_t = spec.rho_t.unwrap_or(half_length);
        if !(rho_t > 0.0 && rho_t.is_finite()) {
            return Err(Error::invalid("transverse radius must be positive"));
        }
        let axis = diff / len;
        let transverse = if spec.dim == 2 {
            [Vec3::new(-axis[1], axis[0], 0.0), Vec3::zeros()]
        } else {
            let helper = if axis[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let u1 = axis.cross(&helper).normalize();
            [u1, axis.cross(&u1)]
        };
        Ok(Self { a, b, half_length, rho_t, dim: spec.dim, axis, mid: 0.5 * (a + b), transverse })
    }

    /// Unit vector from `b` to `a`.
    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn midpoint(&self) -> Vec3 {
        self.mid
    }

    fn local(&self, p: &Vec3) -> (f64, Vec3) {
        let mut q = p - self.mid;
        if self.dim == 2 {
            q[2] = 0.0;
        }
        let xi = q.dot(&self.axis);
        (xi, q - xi * self.axis)
    }

    /// Closed support test.
    pub fn contains(&self, p: &Vec3) -> bool {
        let (xi, y) = self.local(p);
        let t = 1.0 - xi.abs() / self.half_length;
        t >= 0.0 && y.norm() <= self.rho_t * t
    }

    pub fn evaluate(&self, p: &Vec3) -> Result<Vec3> {
        let mut pp = *p;
        if self.dim == 2 {
            pp[2] = self.a[2];
        }
        if (pp - self.a).norm() <= SINGULAR_TOL || (pp - self.b).norm() <= SINGULAR_TOL {
            return Err(Error::SingularPoint(p[0], p[1], p[2]));
        }
        let (xi, y) = self.local(p);
        let eps = self.half_length;
        let t = 1.0 - xi.abs() / eps;
        if t <= 0.0 || y.norm() > self.rho_t * t {
            return Ok(Vec3::zeros());
        }
        let amp = 1.0 / (unit_ball_measure(self.dim) * (self.rho_t * t).powi(self.dim as i32 - 1));
        let spread = y / (eps * t);
        Ok(if xi < 0.0 { amp * (self.axis + spread) } else { amp * (self.axis - spread) })
    }

    pub fn bounding_box(&self) -> Aabb {
        let r = self.rho_t.max(self.half_length);
        let z_pad = if self.dim == 2 { 0.0 } else { r };
        Aabb {
            min: std::array::from_fn(|d| self.a[d].min(self.b[d]) - if d == 2 { z_pad } else { r }),
            max: std::array::from_fn(|d| self.a[d].max(self.b[d]) + if d == 2 { z_pad } else { r }),
        }
    }

    /// `∫ |X|^p` in closed form: with `κ = ρ_t/ε`,
    /// `2 ε ρ_t^{(n-1)(1-p)} |B^{n-1}|^{-p} / (n - (n-1)p) · ∫_{B^{n-1}} (1 + κ²|s|²)^{p/2} ds`,
    /// which scales as `ε^{n-(n-1)p}` when `ρ_t = ε`.
    pub fn lp_energy(&self, p: f64) -> Result<f64> {
        let n = self.dim as f64;
        let denom = n - (n - 1.0) * p;
        if !(p > 0.0) || denom <= 0.0 {
            return Err(Error::NonFinite(format!(
                "dipole field is not in L^p for p = {p} >= n/(n-1) = {}",
                n / (n - 1.0)
            )));
        }
        let eps = self.half_length;
        let kappa = self.rho_t / eps;
        let transverse = if self.dim == 3 {
            let k2 = kappa * kappa;
            2.0 * PI * ((1.0 + k2).powf(0.5 * p + 1.0) - 1.0) / (k2 * (p + 2.0))
        } else {
            gauss_legendre_on(32, -1.0, 1.0)
                .into_iter()
                .map(|(s, w)| w * (1.0 + kappa * kappa * s * s).powf(0.5 * p))
                .sum()
        };
        Ok(2.0 * eps * self.rho_t.powf((n - 1.0) * (1.0 - p)) * unit_ball_measure(self.dim).powf(-p) / denom
            * transverse)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.lp_energy(p)?.powf(1.0 / p))
    }

    /// `∫ X · test` by tensor Gauss quadrature in the cone coordinates
    /// `(t, s)`, where the cross-sectional Jacobian cancels the `t^{1-n}`
    /// growth of the field. Exact for polynomial test fields up to roundoff.
    pub fn pair_polynomial(&self, test: &PolyField) -> Result<f64> {
        let eps = self.half_length;
        let t_rule = gauss_legendre_on(8, 0.0, 1.0);
        // Unit transverse ball: (offset vector, weight).
        let s_rule: Vec<(Vec3, f64)> = if self.dim == 3 {
            let n_ang = 16;
            gauss_legendre_on(8, 0.0, 1.0)
                .into_iter()
                .flat_map(|(sigma, w)| {
                    (0..n_ang).map(move |j| {
                        let ang = 2.0 * PI * j as f64 / n_ang as f64;
                        (sigma, ang, w * sigma * 2.0 * PI / n_ang as f64)
                    })
                })
                .map(|(sigma, ang, w)| {
                    (sigma * (ang.cos() * self.transverse[0] + ang.sin() * self.transverse[1]), w)
                })
                .collect()
        } else {
            gauss_legendre_on(8, -1.0, 1.0)
                .into_iter()
                .map(|(s, w)| (s * self.transverse[0], w))
                .collect()
        };
        let mut total = 0.0;
        for side in [-1.0, 1.0] {
            for &(t, wt) in &t_rule {
                let xi = side * eps * (1.0 - t);
                let section = self.rho_t * t;
                let jac = eps * section.powi(self.dim as i32 - 1);
                for (s, ws) in &s_rule {
                    let p = self.mid + xi * self.axis + section * s;
                    total += wt * ws * jac * self.evaluate(&p)?.dot(&test.eval(&p));
                }
            }
        }
        Ok(total)
    }

    /// Node samples on `grid`; the half-length must span at least 4 cells.
    /// Nodes that coincide with a pole are set to zero.
    pub fn rasterize(&self, grid: &GridSpec) -> Result<GridField> {
        let h = grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.half_length < 4.0 * h {
            return Err(Error::DegenerateDipole { half_length: self.half_length, spacing: h });
        }
        GridField::from_fn(*grid, |p| self.evaluate(p).unwrap_or_else(|_| Vec3::zeros()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;
    use crate::poly::{Monomial, ScalarPoly};

    fn unit_x_dipole() -> Dipole {
        Dipole::new(&DipoleSpec::new(vec3(0.1, 0.0, 0.0), vec3(-0.1, 0.0, 0.0))).unwrap()
    }

    #[test]
    fn zero_outside_support() {
        let d = unit_x_dipole();
        for p in [vec3(0.3, 0.0, 0.0), vec3(0.0, 0.11, 0.0), vec3(0.05, 0.0, 0.06)] {
            assert_eq!(d.evaluate(&p).unwrap(), Vec3::zeros());
        }
        assert!(matches!(d.evaluate(&vec3(0.1, 0.0, 0.0)), Err(Error::SingularPoint(..))));
    }

    #[test]
    fn planar_normalization_matches_displayed_formula() {
        // For n = 2 and ρ_t = ε the axial part is 1 / (ε t |B^1|).
        let d = Dipole::new(&DipoleSpec::new(vec3(0.5, 0.0, 0.0), vec3(-0.5, 0.0, 0.0)).with_dim(2)).unwrap();
        let t: f64 = 0.6;
        let v = d.evaluate(&vec3(-0.5 * (1.0 - t), 0.1, 7.0)).unwrap();
        assert!((v[0] - 1.0 / (0.5 * t * 2.0)).abs() < 1e-14);
        assert!((v[1] - 0.1 / (0.5 * t) * v[0]).abs() < 1e-14);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn unit_flux_through_cross_sections() {
        // ∫ X·e over every cross-section disk {ξ} x B_{ρ_t t} equals 1.
        let d = unit_x_dipole();
        for xi in [-0.07, -0.01, 0.03, 0.09] {
            let radius = d.rho_t * (1.0 - f64::abs(xi) / d.half_length);
            let mut flux = 0.0;
            for (sigma, w) in gauss_legendre_on(20, 0.0, radius) {
                for j in 0..32 {
                    let ang = 2.0 * PI * j as f64 / 32.0;
                    let p = vec3(xi, sigma * ang.cos(), sigma * ang.sin());
                    flux += w * sigma * 2.0 * PI / 32.0 * d.evaluate(&p).unwrap()[0];
                }
            }
            assert!((flux - 1.0).abs() < 1e-12, "{xi}: {flux}");
        }
    }

    #[test]
    fn pairing_with_constant_is_segment_vector() {
        let d = unit_x_dipole();
        let e1 = PolyField::constant([1.0, 0.0, 0.0]);
        assert!((d.pair_polynomial(&e1).unwrap() - 0.2).abs() < 1e-14);
        let g = ScalarPoly::new(vec![Monomial::new(1.0, [3, 0, 0]), Monomial::new(2.0, [0, 2, 1])]);
        let v = d.pair_polynomial(&g.gradient().unwrap()).unwrap();
        let exact = g.eval(&d.a) - g.eval(&d.b);
        assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
    }

    #[test]
    fn energy_is_finite_below_critical_exponent_only() {
        let d = unit_x_dipole();
        assert!(d.lp_energy(1.49).is_ok());
        assert!(matches!(d.lp_energy(1.5), Err(Error::NonFinite(_))));
        let d2 = Dipole::new(&DipoleSpec::new(vec3(0.1, 0.0, 0.0), vec3(-0.1, 0.0, 0.0)).with_dim(2)).unwrap();
        assert!(d2.lp_energy(1.9).is_ok());
        assert!(d2.lp_energy(2.0).is_err());
    }

    #[test]
    fn rasterize_rejects_thin_dipoles() {
        let d = unit_x_dipole();
        let coarse = GridSpec::spanning(&Aabb::symmetric(0.5), 11).unwrap();
        assert!(matches!(d.rasterize(&coarse), Err(Error::DegenerateDipole { .. })));
        let fine = GridSpec::spanning(&Aabb::symmetric(0.5), 41).unwrap();
        assert!(d.rasterize(&fine).is_ok());
    }
}
