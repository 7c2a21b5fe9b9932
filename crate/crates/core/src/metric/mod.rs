//! Poisson solves, Hodge decompositions and the computable slice-metric
//! upper bound on the periodic unit square and on the unit sphere.

mod sphere;
mod torus;

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::quadrature::{SphereForm, SphereQuadrature};

use sphere::SphereBasis;
use torus::Torus;

/// Mollifier width in grid cells.
pub const DIRAC_WIDTH_CELLS: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    SquarePeriodic,
    Sphere,
}

/// `resolution` is the number of nodes per axis on the square and the
/// harmonic degree cap `L` on the sphere, where data lives on the
/// quadrature rule of order `L + 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub resolution: usize,
}

impl DomainSpec {
    pub fn square(n: usize) -> Result<Self> {
        Self { kind: DomainKind::SquarePeriodic, resolution: n }.validated()
    }

    pub fn sphere(l_max: usize) -> Result<Self> {
        Self { kind: DomainKind::Sphere, resolution: l_max }.validated()
    }

    /// Sphere domain matching the data on `rule`.
    pub fn sphere_for_rule(rule: &SphereQuadrature) -> Result<Self> {
        Self::sphere(rule.order().saturating_sub(2))
    }

    pub fn validated(self) -> Result<Self> {
        if self.resolution < 8 {
            return Err(Error::invalid(format!("domain resolution must be at least 8, got {}", self.resolution)));
        }
        Ok(self)
    }

    pub fn sphere_rule(&self) -> Arc<SphereQuadrature> {
        SphereQuadrature::shared(self.resolution + 2)
    }

    pub fn node_count(&self) -> usize {
        match self.kind {
            DomainKind::SquarePeriodic => self.resolution * self.resolution,
            DomainKind::Sphere => {
                let n = self.resolution + 2;
                2 * n * n
            }
        }
    }

    /// Quadrature weight of every node.
    pub fn weights(&self) -> Vec<f64> {
        match self.kind {
            DomainKind::SquarePeriodic => {
                let h = 1.0 / self.resolution as f64;
                vec![h * h; self.node_count()]
            }
            DomainKind::Sphere => self.sphere_rule().weights().to_vec(),
        }
    }

    pub fn area(&self) -> f64 {
        match self.kind {
            DomainKind::SquarePeriodic => 1.0,
            DomainKind::Sphere => 4.0 * PI,
        }
    }

    /// Grid center of the square, north pole of the sphere.
    pub fn default_base_point(&self) -> [f64; 3] {
        match self.kind {
            DomainKind::SquarePeriodic => [0.5, 0.5, 0.0],
            DomainKind::Sphere => [0.0, 0.0, 1.0],
        }
    }

    /// Node coordinates: `(x, y, 0)` on the square, unit vectors on the sphere.
    pub fn nodes(&self) -> Vec<[f64; 3]> {
        match self.kind {
            DomainKind::SquarePeriodic => {
                let t = Torus::new(self.resolution);
                (0..self.node_count()).map(|i| {
                    let [x, y] = t.node(i);
                    [x, y, 0.0]
                })
                .collect()
            }
            DomainKind::Sphere => self.sphere_rule().nodes().iter().map(|v| (*v).into()).collect(),
        }
    }
}

/// Scalar density on a domain: node values on the square grid, or a form on
/// the sphere rule of the domain.
#[derive(Clone, Debug)]
pub enum Density {
    Square(Vec<f64>),
    Sphere(SphereForm),
}

impl Density {
    pub fn values(&self) -> &[f64] {
        match self {
            Density::Square(v) => v,
            Density::Sphere(f) => &f.values,
        }
    }

    fn check(&self, domain: &DomainSpec) -> Result<()> {
        let ok = match (self, domain.kind) {
            (Density::Square(v), DomainKind::SquarePeriodic) => v.len() == domain.node_count(),
            (Density::Sphere(f), DomainKind::Sphere) => f.quadrature.order() == domain.resolution + 2,
            _ => false,
        };
        if !ok {
            return Err(Error::invalid("density does not live on the requested domain discretization"));
        }
        if self.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("density values must be finite"));
        }
        Ok(())
    }

    /// `∫_D h`.
    pub fn integral(&self, domain: &DomainSpec) -> f64 {
        self.values().iter().zip(domain.weights()).map(|(v, w)| v * w).sum()
    }

    fn with_values(&self, values: Vec<f64>) -> Density {
        match self {
            Density::Square(_) => Density::Square(values),
            Density::Sphere(f) => Density::Sphere(SphereForm::new(values, f.quadrature.clone(), f.center, f.radius)),
        }
    }
}

/// Tangent one-form (vector field) by components at the nodes: `(∂_x, ∂_y)`
/// components on the square, `(θ, φ)` components on the sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl OneForm {
    pub fn zeros(n: usize) -> Self {
        Self { u: vec![0.0; n], v: vec![0.0; n] }
    }

    /// `(Σ w |V|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64, weights: &[f64]) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .zip(weights)
            .map(|((a, b), w)| w * (a * a + b * b).sqrt().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// `Σ w V·W`.
    pub fn inner(&self, other: &OneForm, weights: &[f64]) -> f64 {
        (0..self.u.len())
            .map(|i| weights[i] * (self.u[i] * other.u[i] + self.v[i] * other.v[i]))
            .sum()
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &OneForm) -> OneForm {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> OneForm {
        OneForm { u: self.u.iter().map(|a| s * a).collect(), v: self.v.iter().map(|a| s * a).collect() }
    }
}

#[derive(Clone, Debug)]
enum Coefficients {
    Torus(Vec<Complex64>),
    Sphere(Vec<f64>),
}

/// Zero-mean scalar potential in spectral form.
#[derive(Clone, Debug)]
pub struct Potential {
    pub domain: DomainSpec,
    coeffs: Coefficients,
}

impl Potential {
    pub fn values(&self) -> Vec<f64> {
        match &self.coeffs {
            Coefficients::Torus(c) => Torus::new(self.domain.resolution).inverse(c),
            Coefficients::Sphere(c) => SphereBasis::new(self.domain.resolution).synthesize(c),
        }
    }

    pub fn gradient(&self) -> OneForm {
        let (u, v) = match &self.coeffs {
            Coefficients::Torus(c) => Torus::new(self.domain.resolution).gradient(c),
            Coefficients::Sphere(c) => SphereBasis::new(self.domain.resolution).gradient(c),
        };
        OneForm { u, v }
    }

    /// Node values of `Δψ`.
    pub fn laplacian(&self) -> Vec<f64> {
        match &self.coeffs {
            Coefficients::Torus(c) => {
                let t = Torus::new(self.domain.resolution);
                let n = t.n;
                let lc: Vec<Complex64> = (0..n * n).map(|idx| c[idx] * t.laplace_symbol(idx % n, idx / n)).collect();
                t.inverse(&lc)
            }
            Coefficients::Sphere(c) => {
                let b = SphereBasis::new(self.domain.resolution);
                let mut lc = c.clone();
                for l in 0..=b.l_max {
                    for m in -(l as i64)..=l as i64 {
                        lc[sphere::lm_index(l, m)] *= -((l * (l + 1)) as f64);
                    }
                }
                b.synthesize(&lc)
            }
        }
    }

    /// `∫_D ψ / |D|`.
    pub fn mean(&self) -> f64 {
        let w = self.domain.weights();
        self.values().iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / self.domain.area()
    }
}

/// Projection of `rhs` onto the modes the solver retains: all grid modes on
/// the square, degrees `<= L` on the sphere.
pub fn retained_part(rhs: &Density, domain: &DomainSpec) -> Result<Vec<f64>> {
    rhs.check(domain)?;
    Ok(match domain.kind {
        DomainKind::SquarePeriodic => rhs.values().to_vec(),
        DomainKind::Sphere => {
            let b = SphereBasis::new(domain.resolution);
            b.synthesize(&b.analyze(rhs.values()))
        }
    })
}

/// Solves `Δψ = rhs` with `∫ψ = 0`.
pub fn poisson_solve(rhs: &Density, domain: &DomainSpec) -> Result<Potential> {
    let domain = domain.validated()?;
    rhs.check(&domain)?;
    let w = domain.weights();
    let vals = rhs.values();
    let mean = vals.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / domain.area();
    let scale = (vals.iter().zip(&w).map(|(v, w)| v * v * w).sum::<f64>() / domain.area()).sqrt();
    if mean.abs() > 1e-10 * scale {
        return Err(Error::NonZeroMean { mean, scale });
    }
    let coeffs = match domain.kind {
        DomainKind::SquarePeriodic => {
            let t = Torus::new(domain.resolution);
            let n = t.n;
            let mut c = t.forward(vals);
            for (idx, z) in c.iter_mut().enumerate() {
                let lambda = t.laplace_symbol(idx % n, idx / n);
                *z = if lambda == 0.0 { Complex64::new(0.0, 0.0) } else { *z / lambda };
            }
            Coefficients::Torus(c)
        }
        DomainKind::Sphere => {
            let b = SphereBasis::new(domain.resolution);
            let mut c = b.analyze(vals);
            c[0] = 0.0;
            for l in 1..=b.l_max {
                for m in -(l as i64)..=l as i64 {
                    c[sphere::lm_index(l, m)] /= -((l * (l + 1)) as f64);
                }
            }
            Coefficients::Sphere(c)
        }
    };
    Ok(Potential { domain, coeffs })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HodgeParts {
    /// `df`.
    pub exact: OneForm,
    /// `d*ω`, a rotated gradient.
    pub coexact: OneForm,
    /// Constant modes on the square; zero on the sphere.
    pub harmonic: OneForm,
}

pub fn hodge_decompose(form: &OneForm, domain: &DomainSpec) -> Result<HodgeParts> {
    let domain = domain.validated()?;
    let n_nodes = domain.node_count();
    if form.u.len() != n_nodes || form.v.len() != n_nodes {
        return Err(Error::invalid("one-form does not match the domain discretization"));
    }
    if form.u.iter().chain(&form.v).any(|x| !x.is_finite()) {
        return Err(Error::invalid("one-form values must be finite"));
    }
    match domain.kind {
        DomainKind::SquarePeriodic => {
            let t = Torus::new(domain.resolution);
            let n = t.n;
            let (cu, cv) = (t.forward(&form.u), t.forward(&form.v));
            let zero = Complex64::new(0.0, 0.0);
            let mut ex = (vec![zero; n * n], vec![zero; n * n]);
            let mut co = ex.clone();
            let mut ha = ex.clone();
            for idx in 0..n * n {
                let (kx, ky) = (t.derivative_wavenumber(idx % n), t.derivative_wavenumber(idx / n));
                let k2 = kx * kx + ky * ky;
                if k2 == 0.0 {
                    ha.0[idx] = cu[idx];
                    ha.1[idx] = cv[idx];
                    continue;
                }
                let s = (cu[idx] * kx + cv[idx] * ky) / k2;
                ex.0[idx] = s * kx;
                ex.1[idx] = s * ky;
                co.0[idx] = cu[idx] - ex.0[idx];
                co.1[idx] = cv[idx] - ex.1[idx];
            }
            let back = |p: (Vec<Complex64>, Vec<Complex64>)| OneForm { u: t.inverse(&p.0), v: t.inverse(&p.1) };
            Ok(HodgeParts { exact: back(ex), coexact: back(co), harmonic: back(ha) })
        }
        DomainKind::Sphere => {
            let b = SphereBasis::new(domain.resolution);
            let (mut f, mut g) = b.analyze_tangent(&form.u, &form.v);
            f[0] = 0.0;
            g[0] = 0.0;
            for l in 1..=b.l_max {
                let ev = (l * (l + 1)) as f64;
                for m in -(l as i64)..=l as i64 {
                    f[sphere::lm_index(l, m)] /= ev;
                    g[sphere::lm_index(l, m)] /= ev;
                }
            }
            let (eu, evv) = b.gradient(&f);
            let (cu, cv) = b.rotated_gradient(&g);
            Ok(HodgeParts {
                exact: OneForm { u: eu, v: evv },
                coexact: OneForm { u: cu, v: cv },
                harmonic: OneForm::zeros(n_nodes),
            })
        }
    }
}

/// Grid-scale Gaussian of width [`DIRAC_WIDTH_CELLS`] at `base`, unit mass
/// under the domain quadrature.
pub fn mollified_dirac(domain: &DomainSpec, base: [f64; 3]) -> Density {
    let w = domain.weights();
    let (raw, template) = match domain.kind {
        DomainKind::SquarePeriodic => {
            let t = Torus::new(domain.resolution);
            let sigma = DIRAC_WIDTH_CELLS / domain.resolution as f64;
            let raw: Vec<f64> = (0..domain.node_count())
                .map(|i| {
                    let d = Torus::displacement(t.node(i), [base[0], base[1]]);
                    (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * sigma * sigma)).exp()
                })
                .collect();
            (raw, Density::Square(Vec::new()))
        }
        DomainKind::Sphere => {
            let rule = domain.sphere_rule();
            let sigma = DIRAC_WIDTH_CELLS * PI / rule.order() as f64;
            let b = Vec3::from(base).normalize();
            let raw: Vec<f64> = rule
                .nodes()
                .iter()
                .map(|x| {
                    let ang = x.dot(&b).clamp(-1.0, 1.0).acos();
                    (-(ang * ang) / (2.0 * sigma * sigma)).exp()
                })
                .collect();
            (raw, Density::Sphere(SphereForm::on_unit_sphere(vec![0.0; rule.len()], rule)))
        }
    };
    let mass: f64 = raw.iter().zip(&w).map(|(v, w)| v * w).sum();
    template.with_values(raw.iter().map(|v| v / mass).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBound {
    pub upper_bound: f64,
    pub flux_h1: f64,
    pub flux_h2: f64,
    /// `round(∫h1) - round(∫h2)`.
    pub integer_gap: i64,
}

/// `‖∇ψ‖_{L^p}` for `Δψ = h1 - h2 - δ_{x0} ∫(h1 - h2)` with the default base point.
pub fn metric_upper_bound(h1: &Density, h2: &Density, p: f64, domain: &DomainSpec) -> Result<MetricBound> {
    metric_upper_bound_at(h1, h2, p, domain, domain.default_base_point())
}

pub fn metric_upper_bound_at(
    h1: &Density,
    h2: &Density,
    p: f64,
    domain: &DomainSpec,
    base: [f64; 3],
) -> Result<MetricBound> {
    if !(p > 1.0 && p < 1.5) {
        return Err(Error::invalid(format!("metric exponent must lie in (1, 3/2), got {p}")));
    }
    let domain = domain.validated()?;
    h1.check(&domain)?;
    h2.check(&domain)?;
    let flux_h1 = h1.integral(&domain);
    let flux_h2 = h2.integral(&domain);
    let charge = flux_h1 - flux_h2;
    let diff: Vec<f64> = h1.values().iter().zip(h2.values()).map(|(a, b)| a - b).collect();
    let rhs = if charge == 0.0 {
        diff
    } else {
        let dirac = mollified_dirac(&domain, base);
        diff.iter().zip(dirac.values()).map(|(d, delta)| d - charge * delta).collect()
    };
    let psi = poisson_solve(&h1.with_values(rhs), &domain)?;
    let upper_bound = psi.gradient().lp_norm(p, &domain.weights());
    Ok(MetricBound {
        upper_bound,
        flux_h1,
        flux_h2,
        integer_gap: flux_h1.round() as i64 - flux_h2.round() as i64,
    })
}

/// Whether `∫ form` is within `τ` of an integer.
pub fn flux_class_check(form: &SphereForm, tau: f64) -> Result<bool> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::invalid(format!("tolerance must lie in (0, 0.5), got {tau}")));
    }
    let s = form.integral();
    Ok((s - s.round()).abs() <= tau)
}

#[cfg(test)]
mod tests;
