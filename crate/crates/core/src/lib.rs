//! Numerical toolkit for vector fields with integer flux through spheres.
//!
//! The crate is organized bottom-up:
//!
//! * [`geom`], [`quadrature`], [`poly`], [`field`], [`measure`], [`current`],
//!   [`norms`] and [`fld`] hold the shared substrate: grids, sphere quadrature,
//!   field sources, atomic measures, polyline currents, `L^p` integration and
//!   the binary field format.
//! * [`slicing`] computes fluxes and pulled-back slices on spheres and decides
//!   integer-flux membership.
//! * [`synthesis`] builds the explicit monopole, dipole and lattice
//!   counterexample fields.
//! * [`metric`] solves Poisson problems and Hodge decompositions on the
//!   periodic square and on the sphere and evaluates the slice-metric upper
//!   bound.
//! * [`maximal`] provides slice energies, the uncentered maximal function and
//!   the chain and weak-type checks.
//! * [`minimize`] evaluates `YM_p` and minimizes the smoothed `L^p` energy
//!   under prescribed integer point charges.
//! * [`cli`] wires everything into the `intflux` command line tool.

pub mod cli;
pub mod current;
pub mod error;
pub mod field;
pub mod fld;
pub mod geom;
pub mod maximal;
pub mod measure;
pub mod metric;
pub mod minimize;
pub mod norms;
pub mod output;
pub mod poly;
pub mod quadrature;
pub mod slicing;
pub mod synthesis;

pub use error::{Error, Result};
pub use field::FieldSource;
pub use geom::{Aabb, GridSpec, Vec3};
pub use quadrature::{SphereForm, SphereQuadrature};
