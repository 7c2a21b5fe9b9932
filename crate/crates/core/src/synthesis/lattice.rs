use serde::{Deserialize, Serialize};

use crate::current::{PolylineCurrent, Segment};
use crate::error::{Error, Result};

/// Default ceiling on generated segments.
pub const DEFAULT_SEGMENT_CAP: u128 = 2_000_000;

/// The dyadic lattice at level `k`: centers `2^{-k} Z³ ∩ (0,1)³`, each
/// carrying an `x`-directed segment of half-length `2^{-3k-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub k: u32,
}

impl LatticeSpec {
    pub fn new(k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("lattice level k must be at least 1"));
        }
        if k > 40 {
            return Err(Error::invalid(format!("lattice level k = {k} is out of range")));
        }
        Ok(Self { k })
    }

    /// Centers per axis, `2^k - 1`.
    pub fn per_axis(&self) -> u64 {
        (1u64 << self.k) - 1
    }

    pub fn segment_count(&self) -> u128 {
        (self.per_axis() as u128).pow(3)
    }

    pub fn spacing(&self) -> f64 {
        0.5f64.powi(self.k as i32)
    }

    pub fn half_length(&self) -> f64 {
        0.5f64.powi(3 * self.k as i32 + 1)
    }

    /// `M(I_k)` as the exact fraction `(2^k - 1)^3 / 2^{3k}`.
    pub fn mass_rational(&self) -> (u128, u128) {
        (self.segment_count(), 1u128 << (3 * self.k))
    }

    pub fn mass_string(&self) -> String {
        let (n, d) = self.mass_rational();
        format!("{n}/{d}")
    }

    pub fn check_cap(&self, cap: u128) -> Result<()> {
        let requested = self.segment_count();
        if requested > cap {
            return Err(Error::ResourceLimit { requested, cap });
        }
        Ok(())
    }

    /// Lattice points, `x` index fastest.
    pub fn centers(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        let m = self.per_axis();
        let h = self.spacing();
        (1..=m).flat_map(move |l| {
            (1..=m).flat_map(move |j| (1..=m).map(move |i| [i as f64 * h, j as f64 * h, l as f64 * h]))
        })
    }
}

/// Segment through `center` along `axis` with total length `length`,
/// oriented toward `+axis` when `sign > 0`.
pub(crate) fn segment_along(center: [f64; 3], axis: usize, sign: f64, length: f64) -> Segment {
    let mut start = center;
    let mut end = center;
    start[axis] -= 0.5 * sign * length;
    end[axis] += 0.5 * sign * length;
    Segment { start, end, multiplicity: 1 }
}

/// `I_k`: unit-multiplicity segments pointing in `+x`.
pub fn segment_lattice(k: u32, cap: u128) -> Result<PolylineCurrent> {
    let spec = LatticeSpec::new(k)?;
    spec.check_cap(cap)?;
    let len = 2.0 * spec.half_length();
    Ok(PolylineCurrent::new(spec.centers().map(|c| segment_along(c, 0, 1.0, len)).collect()))
}
