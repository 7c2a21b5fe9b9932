//! Gauss–Legendre rules and the product quadrature on the unit sphere.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::geom::{vec3, Vec3};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(&x, &w)| (mid + half * x, half * w)).collect()
}

/// Product rule on `S²`: Gauss–Legendre in `cos θ` (`order` rings) times the
/// uniform trapezoid in azimuth (`2 * order` meridians).
///
/// Integrates exactly every polynomial in `(x, y, z)` of degree `< 2 * order`.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    order: usize,
    cos_theta: Vec<f64>,
    ring_weights: Vec<f64>,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(order: usize) -> Self {
        assert!(order > 0, "sphere quadrature order must be positive");
        let (z, wz) = gauss_legendre(order);
        let n_phi = 2 * order;
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(order * n_phi);
        let mut weights = Vec::with_capacity(order * n_phi);
        for (&zi, &wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = j as f64 * dphi;
                nodes.push(vec3(s * phi.cos(), s * phi.sin(), zi));
                weights.push(wi * dphi);
            }
        }
        Self { order, cos_theta: z, ring_weights: wz, nodes, weights }
    }

    pub fn shared(order: usize) -> Arc<Self> {
        Arc::new(Self::new(order))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Highest polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        2 * self.order - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_phi(&self) -> usize {
        2 * self.order
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn ring_weights(&self) -> &[f64] {
        &self.ring_weights
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi() as f64
    }

    /// `Σ w_i f(θ_i)` in node order.
    pub fn integrate(&self, mut f: impl FnMut(&Vec3) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Scalar density per unit solid angle on the quadrature nodes of a sphere
/// rule, remembering the sphere it was pulled back from.
#[derive(Clone, Debug)]
pub struct SphereForm {
    pub values: Vec<f64>,
    pub quadrature: Arc<SphereQuadrature>,
    pub center: Vec3,
    pub radius: f64,
}

impl SphereForm {
    pub fn new(values: Vec<f64>, quadrature: Arc<SphereQuadrature>, center: Vec3, radius: f64) -> Self {
        assert_eq!(values.len(), quadrature.len(), "one value per quadrature node");
        Self { values, quadrature, center, radius }
    }

    /// Form on the unit sphere at the origin.
    pub fn on_unit_sphere(values: Vec<f64>, quadrature: Arc<SphereQuadrature>) -> Self {
        Self::new(values, quadrature, Vec3::zeros(), 1.0)
    }

    pub fn from_fn(quadrature: Arc<SphereQuadrature>, f: impl Fn(&Vec3) -> f64) -> Self {
        let values = quadrature.nodes().iter().map(f).collect();
        Self::on_unit_sphere(values, quadrature)
    }

    /// `Σ w_i v_i`.
    pub fn integral(&self) -> f64 {
        self.values.iter().zip(self.quadrature.weights()).map(|(v, w)| w * v).sum()
    }

    /// `Σ w_i |v_i|^p`.
    pub fn lp_energy(&self, p: f64) -> f64 {
        self.values
            .iter()
            .zip(self.quadrature.weights())
            .map(|(v, w)| w * v.abs().powf(p))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-13, "n={n} deg={deg}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn weights_sum_to_four_pi() {
        for order in [1, 2, 5, 16, 32, 64] {
            let q = SphereQuadrature::new(order);
            let s: f64 = q.weights().iter().sum();
            assert!(((s - 4.0 * PI) / (4.0 * PI)).abs() < 1e-12, "order {order}: {s}");
            assert!(q.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn constant_form_integrates_to_four_pi() {
        let q = SphereQuadrature::shared(16);
        let f = SphereForm::from_fn(q, |_| 1.0);
        assert!((f.integral() - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
    }

    #[test]
    fn degree_one_harmonics_integrate_to_zero() {
        let q = SphereQuadrature::shared(8);
        for axis in 0..3 {
            let f = SphereForm::from_fn(q.clone(), |x| x[axis]);
            assert!(f.integral().abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_rule_exact_to_declared_degree() {
        // ∫ z^{2m} dΩ = 4π/(2m+1), ∫ x^2 y^2 dΩ = 4π/15.
        let q = SphereQuadrature::new(6);
        for m in 0..6 {
            let v = q.integrate(|x| x[2].powi(2 * m));
            assert!((v - 4.0 * PI / (2 * m + 1) as f64).abs() < 1e-13);
        }
        let v = q.integrate(|x| x[0] * x[0] * x[1] * x[1]);
        assert!((v - 4.0 * PI / 15.0).abs() < 1e-13);
    }
}
