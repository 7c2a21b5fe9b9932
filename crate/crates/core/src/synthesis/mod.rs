//! Explicit fields: the unit monopole, dipoles, dyadic segment lattices and
//! the dipole-sum approximations of diffuse currents.

mod counterexample;
mod dipole;
mod lattice;

pub use counterexample::{
    counterexample_field, test_dictionary, Counterexample, CounterexampleReport, PairingRecord, TargetMeasure,
};
pub use dipole::{Dipole, DipoleSpec};
pub use lattice::{segment_lattice, LatticeSpec, DEFAULT_SEGMENT_CAP};

use crate::error::Result;
use crate::field::FieldSource;
use crate::geom::Vec3;
use crate::norms::{integrate, IntegrationOptions, Region};
use crate::poly::PolyField;

/// `(x - a) / (4π |x - a|³)`.
pub fn monopole(center: Vec3) -> FieldSource {
    FieldSource::monopole(center)
}

pub fn dipole(spec: &DipoleSpec) -> Result<FieldSource> {
    Ok(FieldSource::Dipole(Dipole::new(spec)?))
}

/// `∫_region X · a`. Dipole sums whose supports lie inside a box region are
/// paired exactly, dipole by dipole; everything else goes through volume
/// quadrature with refinement at singular points.
pub fn weak_pairing(field: &FieldSource, test: &PolyField, region: &Region, opts: &IntegrationOptions) -> Result<f64> {
    if test.is_zero() {
        return Ok(0.0);
    }
    if let (Some(parts), Region::Box(b)) = (field.as_dipole_sum(), region) {
        if parts.iter().all(|(_, d)| b.contains_box(&d.bounding_box(), 1e-12)) {
            let mut total = 0.0;
            for (c, d) in parts {
                total += c * d.pair_polynomial(test)?;
            }
            return Ok(total);
        }
    }
    integrate(region, &field.singular_points(), opts, &|x| Ok(field.evaluate(x)?.dot(&test.eval(x))))
}
