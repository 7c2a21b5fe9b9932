//! Integer-multiplicity polyline 1-currents.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::measure::AtomicMeasure;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub multiplicity: i64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (Vec3::from(self.end) - Vec3::from(self.start)).norm()
    }

    pub fn midpoint(&self) -> Vec3 {
        0.5 * (Vec3::from(self.start) + Vec3::from(self.end))
    }
}

/// Oriented segments with integer weights. Orientation runs from `start`
/// to `end`, so `∂[[start, end]] = δ_end − δ_start`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolylineCurrent {
    pub segments: Vec<Segment>,
}

/// Endpoints closer than this are merged when forming the boundary.
const MERGE_TOL: f64 = 1e-12;

impl PolylineCurrent {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `Σ |m| · length`.
    pub fn mass(&self) -> f64 {
        self.segments.iter().map(|s| s.multiplicity.unsigned_abs() as f64 * s.length()).sum()
    }

    /// `⟨I, ω⟩` for a constant covector `ω`.
    pub fn pair_constant(&self, omega: &Vec3) -> f64 {
        self.segments
            .iter()
            .map(|s| s.multiplicity as f64 * (Vec3::from(s.end) - Vec3::from(s.start)).dot(omega))
            .sum()
    }

    /// Boundary as integer-weighted atoms, coincident endpoints merged and
    /// cancelled atoms dropped. Atoms come out in lexicographic point order.
    pub fn boundary(&self) -> AtomicMeasure {
        let key = |p: &[f64; 3]| -> [i64; 3] { std::array::from_fn(|d| (p[d] / MERGE_TOL).round() as i64) };
        let mut acc: BTreeMap<[i64; 3], ([f64; 3], i64)> = BTreeMap::new();
        for s in &self.segments {
            acc.entry(key(&s.end)).or_insert((s.end, 0)).1 += s.multiplicity;
            acc.entry(key(&s.start)).or_insert((s.start, 0)).1 -= s.multiplicity;
        }
        AtomicMeasure::from_atoms(
            acc.into_values()
                .filter(|(_, w)| *w != 0)
                .map(|(p, w)| (p, w as f64))
                .collect(),
        )
    }

    /// `M(∂I)`.
    pub fn boundary_mass(&self) -> f64 {
        self.boundary().total_variation()
    }
}
