//! Spectral calculus on the periodic unit square `[0,1)²` sampled on an
//! `n x n` grid, node `(i, j)` at `(i/n, j/n)`, index `i + n j`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Torus {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Torus {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        let n = self.n as f64;
        [(idx % self.n) as f64 / n, (idx / self.n) as f64 / n]
    }

    /// Angular wavenumber of FFT bin `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let n = self.n as i64;
        let i = i as i64;
        2.0 * PI * if i <= n / 2 { i } else { i - n } as f64
    }

    /// Wavenumber used for first derivatives: the unpaired Nyquist bin of an
    /// even grid has no real derivative and maps to zero.
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if self.n.is_multiple_of(2) && i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = data[i + n * j];
            }
            plan.process(&mut col);
            for j in 0..n {
                data[i + n * j] = col[j];
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        data
    }

    /// Inverse transform, normalized, real part.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform(&mut data, &self.inv);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter().map(|c| c.re * s).collect()
    }

    /// `(∂_x, ∂_y)` of the field with the given coefficients.
    pub fn gradient(&self, coeffs: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut gx = coeffs.to_vec();
        let mut gy = coeffs.to_vec();
        for j in 0..n {
            for i in 0..n {
                let c = coeffs[i + n * j];
                gx[i + n * j] = Complex64::new(0.0, self.derivative_wavenumber(i)) * c;
                gy[i + n * j] = Complex64::new(0.0, self.derivative_wavenumber(j)) * c;
            }
        }
        (self.inverse(&gx), self.inverse(&gy))
    }

    /// Eigenvalue of the Laplacian on bin `(i, j)`.
    pub fn laplace_symbol(&self, i: usize, j: usize) -> f64 {
        let (kx, ky) = (self.wavenumber(i), self.wavenumber(j));
        -(kx * kx + ky * ky)
    }

    /// Minimum-image displacement from `b` to `a`.
    pub fn displacement(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        std::array::from_fn(|d| {
            let mut x = a[d] - b[d];
            x -= x.round();
            x
        })
    }
}
