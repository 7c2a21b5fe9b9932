//! Points, boxes and regular grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Axis-aligned box `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for d in 0..3 {
            if !(min[d].is_finite() && max[d].is_finite() && min[d] < max[d]) {
                return Err(Error::invalid(format!(
                    "degenerate box on axis {d}: [{}, {}]",
                    min[d], max[d]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn unit_cube() -> Self {
        Self { min: [0.0; 3], max: [1.0; 3] }
    }

    pub fn symmetric(half: f64) -> Self {
        Self { min: [-half; 3], max: [half; 3] }
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.max[axis] - self.min[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|d| self.extent(d)).product()
    }

    pub fn center(&self) -> Vec3 {
        vec3(
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        )
    }

    /// Closed containment with an absolute slack `tol`.
    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|d| p[d] >= self.min[d] - tol && p[d] <= self.max[d] + tol)
    }

    /// Distance from an interior point to the boundary (negative outside).
    pub fn distance_to_boundary(&self, p: &Vec3) -> f64 {
        (0..3)
            .map(|d| (p[d] - self.min[d]).min(self.max[d] - p[d]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains_box(&self, other: &Aabb, tol: f64) -> bool {
        (0..3).all(|d| other.min[d] >= self.min[d] - tol && other.max[d] <= self.max[d] + tol)
    }

    /// The eight dyadic children.
    pub fn children(&self) -> [Aabb; 8] {
        let c = self.center();
        std::array::from_fn(|i| {
            let mut min = self.min;
            let mut max = self.max;
            for d in 0..3 {
                if i >> d & 1 == 0 {
                    max[d] = c[d];
                } else {
                    min[d] = c[d];
                }
            }
            Aabb { min, max }
        })
    }
}

/// Node-collocated regular grid: node `(i, j, k)` sits at
/// `origin + (i, j, k) * spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: [f64; 3], spacing: [f64; 3], dims: [usize; 3]) -> Result<Self> {
        let spec = Self { origin, spacing, dims };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid with `nodes` nodes per axis spanning `bounds`.
    pub fn spanning(bounds: &Aabb, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::invalid("a grid needs at least 2 nodes per axis"));
        }
        let spacing = std::array::from_fn(|d| bounds.extent(d) / (nodes - 1) as f64);
        Self::new(bounds.min, spacing, [nodes; 3])
    }

    pub fn validate(&self) -> Result<()> {
        for d in 0..3 {
            if self.dims[d] < 2 {
                return Err(Error::invalid(format!("grid axis {d} has fewer than 2 nodes")));
            }
            if !(self.spacing[d].is_finite() && self.spacing[d] > 0.0) {
                return Err(Error::invalid(format!("grid spacing on axis {d} must be positive")));
            }
            if !self.origin[d].is_finite() {
                return Err(Error::invalid("grid origin must be finite"));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: self.origin,
            max: std::array::from_fn(|d| self.origin[d] + self.spacing[d] * (self.dims[d] - 1) as f64),
        }
    }

    /// Linear index, x fastest.
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        vec3(
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        )
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Nearest node to `p`, clamped into the grid.
    pub fn nearest_node(&self, p: &Vec3) -> [usize; 3] {
        std::array::from_fn(|d| {
            let t = ((p[d] - self.origin[d]) / self.spacing[d]).round();
            t.clamp(0.0, (self.dims[d] - 1) as f64) as usize
        })
    }

    /// Cell containing `p` and local coordinates in `[0, 1]^3`, or `None` if
    /// `p` lies outside the grid box (up to a relative slack).
    pub(crate) fn locate(&self, p: &Vec3) -> Option<([usize; 3], [f64; 3])> {
        let mut cell = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..3 {
            let t = (p[d] - self.origin[d]) / self.spacing[d];
            let last = (self.dims[d] - 1) as f64;
            if !(t >= -1e-9 && t <= last + 1e-9) {
                return None;
            }
            let t = t.clamp(0.0, last);
            let c = (t.floor() as usize).min(self.dims[d] - 2);
            cell[d] = c;
            frac[d] = t - c as f64;
        }
        Some((cell, frac))
    }
}
