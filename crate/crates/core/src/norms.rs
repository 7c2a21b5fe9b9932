//! Volume integration over boxes and spherical shells with dyadic
//! refinement toward declared singular points, and the `L^p` norms built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSource;
use crate::geom::{Aabb, Vec3};
use crate::quadrature::{gauss_legendre_on, SphereQuadrature};

/// Integration region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Box(Aabb),
    /// `{inner <= |x - center| <= outer}`; `inner = 0` is the full ball.
    Shell { center: [f64; 3], inner: f64, outer: f64 },
}

impl Region {
    pub fn ball(center: Vec3, radius: f64) -> Self {
        Region::Shell { center: center.into(), inner: 0.0, outer: radius }
    }

    pub fn shell(center: Vec3, inner: f64, outer: f64) -> Self {
        Region::Shell { center: center.into(), inner, outer }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Box(b) => b.volume(),
            Region::Shell { inner, outer, .. } => 4.0 / 3.0 * std::f64::consts::PI * (outer.powi(3) - inner.powi(3)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Region::Box(b) => Aabb::new(b.min, b.max).map(|_| ()),
            Region::Shell { inner, outer, .. } => {
                if !(*inner >= 0.0 && outer > inner && outer.is_finite()) {
                    return Err(Error::invalid(format!("bad shell radii [{inner}, {outer}]")));
                }
                Ok(())
            }
        }
    }
}

/// Quadrature controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    /// Cells per axis for boxes; radial cells for shells.
    pub resolution: usize,
    /// Dyadic refinement levels toward singular points (and toward the
    /// center of a full ball).
    pub depth: usize,
    /// Partial sums beyond this magnitude are reported as divergent.
    pub divergence_bound: f64,
    /// Angular rule order for shells.
    pub sphere_order: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { resolution: 32, depth: 12, divergence_bound: 1e12, sphere_order: 16 }
    }
}

const RADIAL_POINTS: usize = 3;
/// Geometric ratios closer to 1 than this are treated as divergent tails.
/// Midpoint subcells per axis for cells next to a singular point.
const REFINED_SUBCELLS: usize = 4;
const TAIL_RATIO_LIMIT: f64 = 1.0 - 1e-6;

struct Levels {
    signed: Vec<f64>,
    absolute: Vec<f64>,
}

impl Levels {
    fn new() -> Self {
        Self { signed: Vec::new(), absolute: Vec::new() }
    }

    fn push(&mut self, signed: f64, absolute: f64, bound: f64) -> Result<()> {
        self.signed.push(signed);
        self.absolute.push(absolute);
        let partial: f64 = self.absolute.iter().sum();
        if !partial.is_finite() || partial > bound {
            return Err(Error::NonFinite(format!(
                "partial sums exceed {bound:e} after {} refinement levels",
                self.absolute.len()
            )));
        }
        Ok(())
    }

    /// Refined sum plus a geometric tail extrapolated from the last two levels.
    fn total_with_tail(&self) -> Result<f64> {
        let sum: f64 = self.signed.iter().sum();
        let n = self.absolute.len();
        if n < 2 {
            return Ok(sum);
        }
        let (last, prev) = (self.absolute[n - 1], self.absolute[n - 2]);
        if last == 0.0 {
            return Ok(sum);
        }
        if prev == 0.0 {
            return Err(Error::NonFinite("refinement contributions do not decay".into()));
        }
        let q = last / prev;
        if !(q < TAIL_RATIO_LIMIT) {
            return Err(Error::NonFinite(format!(
                "refinement contributions decay with ratio {q:.6} >= 1; integrand is not integrable"
            )));
        }
        Ok(sum + self.signed[n - 1] * q / (1.0 - q))
    }
}

/// `∫_region f`, composite midpoint on box cells (dyadic refinement of cells
/// holding a singular point) or composite Gauss in `ln r` times the sphere
/// rule on shells.
///
/// Integrand evaluations that hit a singular point exactly contribute zero.
pub fn integrate(
    region: &Region,
    singular: &[Vec3],
    opts: &IntegrationOptions,
    f: &dyn Fn(&Vec3) -> Result<f64>,
) -> Result<f64> {
    region.validate()?;
    if opts.resolution == 0 || opts.depth < 2 {
        return Err(Error::invalid("resolution must be positive and depth at least 2"));
    }
    let eval = |p: &Vec3| match f(p) {
        Err(Error::SingularPoint(..)) => Ok(0.0),
        other => other,
    };
    match region {
        Region::Box(b) => integrate_box(b, singular, opts, &eval),
        Region::Shell { center, inner, outer } => {
            integrate_shell(&Vec3::from(*center), *inner, *outer, opts, &eval)
        }
    }
}

fn integrate_box(
    b: &Aabb,
    singular: &[Vec3],
    opts: &IntegrationOptions,
    f: &dyn Fn(&Vec3) -> Result<f64>,
) -> Result<f64> {
    let n = opts.resolution;
    let h: [f64; 3] = std::array::from_fn(|d| b.extent(d) / n as f64);
    let vol = h[0] * h[1] * h[2];
    let tol = 1e-12 * h.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let idx = [i, j, k];
                let cell = Aabb {
                    min: std::array::from_fn(|d| b.min[d] + idx[d] as f64 * h[d]),
                    max: std::array::from_fn(|d| {
                        if idx[d] + 1 == n {
                            b.max[d]
                        } else {
                            b.min[d] + (idx[d] + 1) as f64 * h[d]
                        }
                    }),
                };
                let inside: Vec<Vec3> = singular.iter().filter(|s| cell.contains(s, tol)).copied().collect();
                if inside.is_empty() {
                    total += f(&cell.center())? * vol;
                } else {
                    total += refine_cell(cell, &inside, opts, tol, f)?;
                }
            }
        }
    }
    Ok(total)
}

/// Composite midpoint rule with `m³` subcells.
fn midpoint(cell: &Aabb, m: usize, f: &dyn Fn(&Vec3) -> Result<f64>) -> Result<f64> {
    let h: [f64; 3] = std::array::from_fn(|d| cell.extent(d) / m as f64);
    let mut total = 0.0;
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let idx = [i, j, k];
                let p = Vec3::from(std::array::from_fn::<f64, 3, _>(|d| cell.min[d] + (idx[d] as f64 + 0.5) * h[d]));
                total += f(&p)?;
            }
        }
    }
    Ok(total * h[0] * h[1] * h[2])
}

fn refine_cell(
    cell: Aabb,
    singular: &[Vec3],
    opts: &IntegrationOptions,
    tol: f64,
    f: &dyn Fn(&Vec3) -> Result<f64>,
) -> Result<f64> {
    let mut levels = Levels::new();
    let mut current = vec![cell];
    for _ in 0..opts.depth {
        let mut next = Vec::new();
        let (mut signed, mut absolute) = (0.0, 0.0);
        for c in &current {
            for child in c.children() {
                if singular.iter().any(|s| child.contains(s, tol)) {
                    next.push(child);
                } else {
                    let v = midpoint(&child, REFINED_SUBCELLS, f)?;
                    signed += v;
                    absolute += v.abs();
                }
            }
        }
        levels.push(signed, absolute, opts.divergence_bound)?;
        current = next;
    }
    levels.total_with_tail()
}

fn integrate_shell(
    center: &Vec3,
    inner: f64,
    outer: f64,
    opts: &IntegrationOptions,
    f: &dyn Fn(&Vec3) -> Result<f64>,
) -> Result<f64> {
    let rule = SphereQuadrature::new(opts.sphere_order);
    // Contribution of the radial band [r0, r1], split into `cells` log-uniform cells.
    let band = |r0: f64, r1: f64, cells: usize| -> Result<(f64, f64)> {
        let (u0, u1) = (r0.ln(), r1.ln());
        let du = (u1 - u0) / cells as f64;
        let (mut signed, mut absolute) = (0.0, 0.0);
        for c in 0..cells {
            let a = u0 + c as f64 * du;
            for (u, wu) in gauss_legendre_on(RADIAL_POINTS, a, a + du) {
                let r = u.exp();
                let jac = wu * r * r * r;
                for (theta, w) in rule.nodes().iter().zip(rule.weights()) {
                    let v = f(&(center + r * theta))? * w * jac;
                    signed += v;
                    absolute += v.abs();
                }
            }
        }
        Ok((signed, absolute))
    };
    if inner > 0.0 {
        return band(inner, outer, opts.resolution).map(|(s, _)| s);
    }
    let per_octave = (opts.resolution / 8).max(2);
    let mut levels = Levels::new();
    for j in 0..opts.depth {
        let r1 = outer * 0.5f64.powi(j as i32);
        let (s, a) = band(0.5 * r1, r1, per_octave)?;
        levels.push(s, a, opts.divergence_bound)?;
    }
    levels.total_with_tail()
}

/// `∫_region |X|^p`.
pub fn lp_integral(field: &FieldSource, p: f64, region: &Region, opts: &IntegrationOptions) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must lie in (0, inf), got {p}")));
    }
    if let (Some(parts), Region::Box(b)) = (field.as_dipole_sum(), region) {
        if let [(c, d)] = parts.as_slice() {
            if b.contains_box(&d.bounding_box(), 1e-12) {
                return Ok(c.abs().powf(p) * d.lp_energy(p)?);
            }
        }
    }
    integrate(region, &field.singular_points(), opts, &|x| Ok(field.evaluate(x)?.norm().powf(p)))
}

/// `(∫_region |X|^p)^{1/p}`.
pub fn lp_norm(field: &FieldSource, p: f64, region: &Region, opts: &IntegrationOptions) -> Result<f64> {
    Ok(lp_integral(field, p, region, opts)?.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;
    use std::f64::consts::PI;

    fn monopole_shell_energy(p: f64, eps: f64, outer: f64) -> f64 {
        // (4π)^{1-p} ∫_eps^outer r^{2-2p} dr
        let e = 3.0 - 2.0 * p;
        let radial = if e.abs() < 1e-14 { (outer / eps).ln() } else { (outer.powf(e) - eps.powf(e)) / e };
        (4.0 * PI).powf(1.0 - p) * radial
    }

    #[test]
    fn constant_field_unit_cube() {
        let f = FieldSource::Constant(vec3(1.0, 0.0, 0.0));
        let opts = IntegrationOptions { resolution: 4, ..Default::default() };
        for p in [0.5, 1.0, 1.3, 2.0, 7.0] {
            let v = lp_norm(&f, p, &Region::Box(Aabb::unit_cube()), &opts).unwrap();
            assert!((v - 1.0).abs() < 1e-13);
        }
        let z = lp_norm(&FieldSource::zero(), 1.2, &Region::Box(Aabb::unit_cube()), &opts).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn monopole_shell_matches_radial_integral() {
        let f = FieldSource::monopole(Vec3::zeros());
        let opts = IntegrationOptions::default();
        let v = lp_norm(&f, 1.2, &Region::shell(Vec3::zeros(), 0.1, 1.0), &opts).unwrap();
        let exact = monopole_shell_energy(1.2, 0.1, 1.0).powf(1.0 / 1.2);
        assert!(((v - exact) / exact).abs() < 1e-10, "{v} vs {exact}");
    }

    #[test]
    fn box_refinement_integrates_monopole_singularity() {
        // Monopole at a cube corner shared by 8 cells; p = 1.2 is integrable.
        let f = FieldSource::monopole(Vec3::zeros());
        let b = Aabb::symmetric(0.5);
        let opts = IntegrationOptions { resolution: 8, ..Default::default() };
        let v = lp_integral(&f, 1.2, &Region::Box(b), &opts).unwrap();
        // Oracle: ball of radius 0.5 by the closed form plus the corners by a
        // fine midpoint rule on the complement.
        let inner = monopole_shell_energy(1.2, 0.0, 0.5);
        let n = 120;
        let h = 1.0 / n as f64;
        let mut corners = 0.0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let p = vec3(-0.5 + (i as f64 + 0.5) * h, -0.5 + (j as f64 + 0.5) * h, -0.5 + (k as f64 + 0.5) * h);
                    if p.norm() > 0.5 {
                        corners += (4.0 * PI * p.norm_squared()).powf(-1.2) * h * h * h;
                    }
                }
            }
        }
        let oracle = inner + corners;
        assert!(((v - oracle) / oracle).abs() < 0.02, "{v} vs {oracle}");
    }

    #[test]
    fn non_integrable_power_is_reported() {
        let f = FieldSource::monopole(Vec3::zeros());
        let opts = IntegrationOptions { resolution: 4, ..Default::default() };
        let r = lp_integral(&f, 1.5, &Region::Box(Aabb::symmetric(0.5)), &opts);
        assert!(matches!(r, Err(Error::NonFinite(_))), "{r:?}");
        let r = lp_integral(&f, 1.6, &Region::ball(Vec3::zeros(), 0.5), &opts);
        assert!(matches!(r, Err(Error::NonFinite(_))), "{r:?}");
    }

    #[test]
    fn full_ball_uses_dyadic_tail() {
        let f = FieldSource::monopole(Vec3::zeros());
        let opts = IntegrationOptions::default();
        let v = lp_integral(&f, 1.2, &Region::ball(Vec3::zeros(), 1.0), &opts).unwrap();
        let exact = monopole_shell_energy(1.2, 0.0, 1.0);
        assert!(((v - exact) / exact).abs() < 1e-9, "{v} vs {exact}");
    }
}
