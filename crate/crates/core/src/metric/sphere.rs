//! Real orthonormal spherical harmonics on the nodes of a
//! [`SphereQuadrature`], evaluated ring by ring.
//!
//! Coefficient of `Y_lm` (`-l <= m <= l`) sits at `l² + l + m`. Tangent
//! fields are stored as `(V_θ, V_φ)` components at the nodes.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use crate::quadrature::SphereQuadrature;

pub(crate) fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

#[derive(Clone, Copy, PartialEq)]
enum Radial {
    P,
    DTheta,
    OverSin,
}

pub(crate) struct SphereBasis {
    pub l_max: usize,
    pub rule: Arc<SphereQuadrature>,
    sin: Vec<f64>,
    // Per ring, `tri(l, m) = l(l+1)/2 + m` for `0 <= m <= l`.
    p: Vec<Vec<f64>>,
    dp: Vec<Vec<f64>>,
}

fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Orthonormal associated Legendre functions `P̃_lm(x)` (so that
/// `P̃_lm(cos θ) e^{imφ}` has unit `L²(S²)` norm) and their `θ`-derivatives.
fn legendre(l_max: usize, x: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let size = tri(l_max, l_max) + 1;
    let mut p = vec![0.0; size];
    let mut dp = vec![0.0; size];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=l_max {
        p[tri(m, m)] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * p[tri(m - 1, m - 1)];
    }
    for m in 0..l_max {
        p[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * p[tri(m, m)];
    }
    for m in 0..=l_max {
        for l in m + 2..=l_max {
            let a = |l: usize| (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt();
            p[tri(l, m)] = a(l) * (x * p[tri(l - 1, m)] - p[tri(l - 2, m)] / a(l - 1));
        }
    }
    for l in 0..=l_max {
        for m in 0..=l {
            let prev = if l > m {
                (((2 * l + 1) as f64 / (2 * l - 1) as f64) * ((l * l - m * m) as f64)).sqrt() * p[tri(l - 1, m)]
            } else {
                0.0
            };
            dp[tri(l, m)] = (l as f64 * x * p[tri(l, m)] - prev) / s;
        }
    }
    (p, dp)
}

impl SphereBasis {
    /// Basis up to degree `l_max` on the rule of order `l_max + 2`, which
    /// integrates products of band-limited fields and their gradients exactly.
    pub fn new(l_max: usize) -> Self {
        Self::on_rule(l_max, SphereQuadrature::shared(l_max + 2))
    }

    pub fn on_rule(l_max: usize, rule: Arc<SphereQuadrature>) -> Self {
        let mut sin = Vec::new();
        let mut p = Vec::new();
        let mut dp = Vec::new();
        for &x in rule.cos_theta() {
            let s = (1.0 - x * x).sqrt();
            let (a, b) = legendre(l_max, x, s);
            sin.push(s);
            p.push(a);
            dp.push(b);
        }
        Self { l_max, rule, sin, p, dp }
    }

    pub fn n_coeffs(&self) -> usize {
        (self.l_max + 1) * (self.l_max + 1)
    }

    fn radial(&self, kind: Radial, ring: usize, l: usize, m: usize) -> f64 {
        match kind {
            Radial::P => self.p[ring][tri(l, m)],
            Radial::DTheta => self.dp[ring][tri(l, m)],
            Radial::OverSin => self.p[ring][tri(l, m)] / self.sin[ring],
        }
    }

    /// `Σ_j Δφ g(φ_j) cos(mφ_j)` and `... sin(mφ_j)` on `ring`, `m = 0..=l_max`.
    fn ring_fourier(&self, g: &[f64], ring: usize) -> (Vec<f64>, Vec<f64>) {
        let n_phi = self.rule.n_phi();
        let dphi = 2.0 * PI / n_phi as f64;
        let row = &g[ring * n_phi..(ring + 1) * n_phi];
        let mut c = vec![0.0; self.l_max + 1];
        let mut s = vec![0.0; self.l_max + 1];
        for m in 0..=self.l_max {
            for (j, v) in row.iter().enumerate() {
                let ang = m as f64 * self.rule.phi(j);
                c[m] += dphi * v * ang.cos();
                s[m] += dphi * v * ang.sin();
            }
        }
        (c, s)
    }

    /// `∫ g T_m` and `∫ g T_m'` ring sums for the real trig factor `T_m`
    /// (`1`, `√2 cos mφ` or `√2 sin |m|φ`).
    fn trig_moment(c: &[f64], s: &[f64], m: i64, derivative: bool) -> f64 {
        let mu = m.unsigned_abs() as usize;
        let muf = mu as f64;
        match (m.signum(), derivative) {
            (0, false) => c[0],
            (0, true) => 0.0,
            (1, false) => SQRT_2 * c[mu],
            (1, true) => -SQRT_2 * muf * s[mu],
            (_, false) => SQRT_2 * s[mu],
            (_, true) => SQRT_2 * muf * c[mu],
        }
    }

    /// Quadrature coefficients `c_lm = Σ w g Y_lm`.
    pub fn analyze(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_coeffs()];
        for (ring, &wr) in self.rule.ring_weights().iter().enumerate() {
            let (c, s) = self.ring_fourier(g, ring);
            for l in 0..=self.l_max {
                for m in -(l as i64)..=l as i64 {
                    let mu = m.unsigned_abs() as usize;
                    out[lm_index(l, m)] += wr * self.radial(Radial::P, ring, l, mu) * Self::trig_moment(&c, &s, m, false);
                }
            }
        }
        out
    }

    /// `(⟨V, ∇Y_lm⟩, ⟨V, ∇⊥Y_lm⟩)` with `∇⊥ = r̂ ×∇`.
    pub fn analyze_tangent(&self, vt: &[f64], vp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut grad = vec![0.0; self.n_coeffs()];
        let mut rot = vec![0.0; self.n_coeffs()];
        for (ring, &wr) in self.rule.ring_weights().iter().enumerate() {
            let (ct, st) = self.ring_fourier(vt, ring);
            let (cp, sp) = self.ring_fourier(vp, ring);
            for l in 0..=self.l_max {
                for m in -(l as i64)..=l as i64 {
                    let mu = m.unsigned_abs() as usize;
                    let dp = self.radial(Radial::DTheta, ring, l, mu);
                    let ps = self.radial(Radial::OverSin, ring, l, mu);
                    let idx = lm_index(l, m);
                    grad[idx] += wr
                        * (dp * Self::trig_moment(&ct, &st, m, false) + ps * Self::trig_moment(&cp, &sp, m, true));
                    rot[idx] += wr
                        * (-ps * Self::trig_moment(&ct, &st, m, true) + dp * Self::trig_moment(&cp, &sp, m, false));
                }
            }
        }
        (grad, rot)
    }

    /// Node values of `Σ c_lm R_lm(θ) T_m(φ)` or of its `φ`-derivative.
    fn synth(&self, coeffs: &[f64], kind: Radial, phi_derivative: bool) -> Vec<f64> {
        let n_phi = self.rule.n_phi();
        let mut out = vec![0.0; self.rule.len()];
        let l = self.l_max as i64;
        for ring in 0..self.rule.cos_theta().len() {
            let mut a = vec![0.0; (2 * l + 1) as usize];
            for deg in 0..=self.l_max {
                for m in -(deg as i64)..=deg as i64 {
                    a[(m + l) as usize] +=
                        coeffs[lm_index(deg, m)] * self.radial(kind, ring, deg, m.unsigned_abs() as usize);
                }
            }
            for j in 0..n_phi {
                let phi = self.rule.phi(j);
                let mut v = a[l as usize] * if phi_derivative { 0.0 } else { 1.0 };
                for mu in 1..=l {
                    let (sin, cos) = (mu as f64 * phi).sin_cos();
                    let (ac, as_) = (a[(l + mu) as usize], a[(l - mu) as usize]);
                    v += if phi_derivative {
                        SQRT_2 * mu as f64 * (-ac * sin + as_ * cos)
                    } else {
                        SQRT_2 * (ac * cos + as_ * sin)
                    };
                }
                out[ring * n_phi + j] = v;
            }
        }
        out
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        self.synth(coeffs, Radial::P, false)
    }

    /// `(∂_θ f, ∂_φ f / sin θ)`.
    pub fn gradient(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.synth(coeffs, Radial::DTheta, false), self.synth(coeffs, Radial::OverSin, true))
    }

    /// `r̂ × ∇g = (-∂_φ g / sin θ, ∂_θ g)`.
    pub fn rotated_gradient(&self, coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (gt, gp) = self.gradient(coeffs);
        (gp.iter().map(|v| -v).collect(), gt)
    }
}
