//! Fluxes through spheres, slices pulled back to the unit sphere by
//! `T_r(θ) = a + rθ`, radial scans and integer-flux reports.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSource;
use crate::geom::Vec3;
use crate::output::fmt17;
use crate::quadrature::{SphereForm, SphereQuadrature};

/// Spheres passing within this distance (relative to `max(r, 1)`) of a
/// declared singular point are rejected.
pub const SPHERE_TOL: f64 = 1e-9;

pub const SCAN_HEADER: &str = "r,flux,nearest,deviation,energy,valid";

fn check_sphere(field: &FieldSource, center: &Vec3, radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("sphere radius must be positive, got {radius}")));
    }
    if let Some(b) = field.domain() {
        if b.distance_to_boundary(center) < radius * (1.0 - 1e-12) {
            return Err(Error::OutOfDomain(center[0], center[1], center[2]));
        }
    }
    let tol = SPHERE_TOL * radius.max(1.0);
    if field.singular_points().iter().any(|s| ((s - center).norm() - radius).abs() <= tol) {
        return Err(Error::SingularOnSphere { center: (*center).into(), radius });
    }
    Ok(())
}

fn sample_sphere(
    field: &FieldSource,
    center: &Vec3,
    radius: f64,
    rule: &SphereQuadrature,
    mut each: impl FnMut(&Vec3, Vec3),
) -> Result<()> {
    check_sphere(field, center, radius)?;
    for theta in rule.nodes() {
        let v = field.evaluate(&(center + radius * theta)).map_err(|e| match e {
            Error::SingularPoint(..) => Error::SingularOnSphere { center: (*center).into(), radius },
            other => other,
        })?;
        each(theta, v);
    }
    Ok(())
}

/// Pulled-back normal component per unit solid angle, `v_i = r² X(a + rθ_i)·θ_i`.
pub fn slice_pullback(field: &FieldSource, center: &Vec3, radius: f64, rule: &Arc<SphereQuadrature>) -> Result<SphereForm> {
    let mut values = Vec::with_capacity(rule.len());
    sample_sphere(field, center, radius, rule, |theta, v| values.push(radius * radius * v.dot(theta)))?;
    Ok(SphereForm::new(values, rule.clone(), *center, radius))
}

/// `∫_{∂B_r(a)} X·ν`, the integral of [`slice_pullback`].
pub fn sphere_flux(field: &FieldSource, center: &Vec3, radius: f64, rule: &Arc<SphereQuadrature>) -> Result<f64> {
    Ok(slice_pullback(field, center, radius, rule)?.integral())
}

/// Pulled-back tangential part `r (X - (X·θ)θ)` at `a + rθ_i`. Its radial
/// integral over `[s, t]` has spherical divergence `h(s) - h(t)` wherever the
/// field is divergence free.
pub fn tangential_pullback(field: &FieldSource, center: &Vec3, radius: f64, rule: &SphereQuadrature) -> Result<Vec<Vec3>> {
    let mut out = Vec::with_capacity(rule.len());
    sample_sphere(field, center, radius, rule, |theta, v| out.push(radius * (v - v.dot(theta) * theta)))?;
    Ok(out)
}

/// Data at one valid scan radius.
#[derive(Clone, Debug)]
pub struct SliceSample {
    pub flux: f64,
    /// `Σ w_i |v_i|^p`.
    pub energy: f64,
    pub slice: SphereForm,
    pub tangential: Vec<Vec3>,
}

/// Slices on concentric spheres at uniformly spaced radii. Radii whose
/// sphere meets a singular point are kept with `None`.
#[derive(Clone, Debug)]
pub struct SliceScan {
    pub center: Vec3,
    pub p: f64,
    pub radii: Vec<f64>,
    pub samples: Vec<Option<SliceSample>>,
}

/// One line of the scan CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub r: f64,
    pub flux: f64,
    pub nearest: i64,
    pub deviation: f64,
    pub energy: f64,
    pub valid: bool,
}

impl ScanRow {
    fn from_flux(r: f64, flux: f64, energy: f64) -> Self {
        let nearest = flux.round();
        Self { r, flux, nearest: nearest as i64, deviation: (flux - nearest).abs(), energy, valid: true }
    }

    fn invalid(r: f64) -> Self {
        Self { r, flux: f64::NAN, nearest: 0, deviation: f64::NAN, energy: f64::NAN, valid: false }
    }
}

pub fn radial_scan(
    field: &FieldSource,
    center: &Vec3,
    r_min: f64,
    r_max: f64,
    n_samples: usize,
    p: f64,
    rule: &Arc<SphereQuadrature>,
) -> Result<SliceScan> {
    if n_samples < 2 {
        return Err(Error::invalid("a scan needs at least 2 radii"));
    }
    if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
        return Err(Error::invalid(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid(format!("p must be positive, got {p}")));
    }
    if let Some(b) = field.domain() {
        if b.distance_to_boundary(center) <= r_max {
            return Err(Error::OutOfDomain(center[0], center[1], center[2]));
        }
    }
    let step = (r_max - r_min) / (n_samples - 1) as f64;
    let radii: Vec<f64> = (0..n_samples)
        .map(|i| if i + 1 == n_samples { r_max } else { r_min + i as f64 * step })
        .collect();
    let mut samples = Vec::with_capacity(n_samples);
    for &r in &radii {
        match slice_pullback(field, center, r, rule) {
            Ok(slice) => {
                let tangential = tangential_pullback(field, center, r, rule)?;
                samples.push(Some(SliceSample {
                    flux: slice.integral(),
                    energy: slice.lp_energy(p),
                    slice,
                    tangential,
                }));
            }
            Err(Error::SingularOnSphere { .. }) => samples.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(SliceScan { center: *center, p, radii, samples })
}

impl SliceScan {
    pub fn rows(&self) -> Vec<ScanRow> {
        self.radii
            .iter()
            .zip(&self.samples)
            .map(|(&r, s)| match s {
                Some(s) => ScanRow::from_flux(r, s.flux, s.energy),
                None => ScanRow::invalid(r),
            })
            .collect()
    }

    pub fn valid_count(&self) -> usize {
        self.samples.iter().filter(|s| s.is_some()).count()
    }
}

/// One sphere in a [`FluxReport`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub center: [f64; 3],
    pub radius: f64,
    pub flux: f64,
    pub nearest: i64,
    pub deviation: f64,
}

impl FluxRecord {
    pub fn new(center: Vec3, radius: f64, flux: f64) -> Self {
        let nearest = flux.round();
        Self { center: center.into(), radius, flux, nearest: nearest as i64, deviation: (flux - nearest).abs() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub records: Vec<FluxRecord>,
    /// Spheres skipped because they meet a singular point.
    pub skipped: usize,
    pub tau: f64,
    pub max_deviation: f64,
    pub pass: bool,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(Error::invalid(format!("tolerance must lie in (0, 0.5), got {tau}")));
    }
    Ok(())
}

/// Pass iff every record's deviation from the nearest integer is at most `τ`.
pub fn flux_report(records: Vec<FluxRecord>, skipped: usize, tau: f64) -> Result<FluxReport> {
    check_tau(tau)?;
    let max_deviation = records.iter().map(|r| r.deviation).fold(0.0, f64::max);
    let pass = records.iter().all(|r| r.deviation <= tau);
    Ok(FluxReport { records, skipped, tau, max_deviation, pass })
}

/// `max |Φ_n - Φ_{2n}|` over the admissible spheres, `n` the rule order.
pub fn quadrature_error_estimate(field: &FieldSource, spheres: &[(Vec3, f64)], order: usize) -> Result<f64> {
    let lo = SphereQuadrature::shared(order);
    let hi = SphereQuadrature::shared(2 * order);
    let mut worst: f64 = 0.0;
    for (c, r) in spheres {
        match (sphere_flux(field, c, *r, &lo), sphere_flux(field, c, *r, &hi)) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            (Err(Error::SingularOnSphere { .. }), _) | (_, Err(Error::SingularOnSphere { .. })) => {}
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok(worst)
}

/// Ten times the order-doubling error estimate, clamped to `[1e-9, 0.25]`.
pub fn default_tau(error_estimate: f64) -> f64 {
    (10.0 * error_estimate).clamp(1e-9, 0.25)
}

/// Flux report over explicit spheres. Without `tau` the tolerance comes from
/// [`default_tau`] applied to the order-doubling estimate.
pub fn integer_flux_report(
    field: &FieldSource,
    spheres: &[(Vec3, f64)],
    rule: &Arc<SphereQuadrature>,
    tau: Option<f64>,
) -> Result<FluxReport> {
    let tau = match tau {
        Some(t) => t,
        None => default_tau(quadrature_error_estimate(field, spheres, rule.order())?),
    };
    check_tau(tau)?;
    let mut records = Vec::with_capacity(spheres.len());
    let mut skipped = 0;
    for (c, r) in spheres {
        match sphere_flux(field, c, *r, rule) {
            Ok(flux) => records.push(FluxRecord::new(*c, *r, flux)),
            Err(Error::SingularOnSphere { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    flux_report(records, skipped, tau)
}

/// Flux report over the valid radii of a scan.
pub fn scan_report(scan: &SliceScan, tau: f64) -> Result<FluxReport> {
    let records = scan
        .radii
        .iter()
        .zip(&scan.samples)
        .filter_map(|(&r, s)| s.as_ref().map(|s| FluxRecord::new(scan.center, r, s.flux)))
        .collect();
    flux_report(records, scan.samples.len() - scan.valid_count(), tau)
}

pub fn write_scan_csv(rows: &[ScanRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "{SCAN_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt17(r.r),
            fmt17(r.flux),
            r.nearest,
            fmt17(r.deviation),
            fmt17(r.energy),
            u8::from(r.valid)
        )?;
    }
    Ok(())
}

pub fn read_scan_csv(r: impl BufRead) -> Result<Vec<ScanRow>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty scan file".into()))??;
    if header.trim() != SCAN_HEADER {
        return Err(Error::Format(format!("unexpected scan header {header:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        match s {
            "NaN" => Ok(f64::NAN),
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => s.parse().map_err(|_| Error::Format(format!("bad number {s:?}"))),
        }
    };
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.trim().split(',').collect();
        if cells.len() != 6 {
            return Err(Error::Format(format!("line {}: expected 6 fields", lineno + 2)));
        }
        let valid = match cells[5] {
            "1" => true,
            "0" => false,
            other => return Err(Error::Format(format!("line {}: bad valid flag {other:?}", lineno + 2))),
        };
        rows.push(ScanRow {
            r: num(cells[0])?,
            flux: num(cells[1])?,
            nearest: cells[2].parse().map_err(|_| Error::Format(format!("line {}: bad nearest", lineno + 2)))?,
            deviation: num(cells[3])?,
            energy: num(cells[4])?,
            valid,
        });
    }
    if rows.windows(2).any(|w| !(w[1].r > w[0].r)) {
        return Err(Error::Format("scan radii must be strictly increasing".into()));
    }
    Ok(rows)
}
