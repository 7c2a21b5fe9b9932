//! Slice energies along a radial scan, the uncentered maximal function over
//! sample-aligned intervals, the Hölder/maximal chain and the weak-type
//! bound.
//!
//! Radial integrals use the trapezoid rule on the valid radii.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::metric::{metric_upper_bound, Density, DomainSpec};
use crate::quadrature::SphereForm;
use crate::slicing::{ScanRow, SliceScan};

/// Constant of the weak-type bound.
pub const WEAK_CONSTANT: f64 = 3.0;

/// `f(r) = ‖h(r)‖^p` at the valid radii of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub radii: Vec<f64>,
    pub f: Vec<f64>,
    pub p: f64,
    /// Integer flux at each radius, when known.
    pub nearest: Vec<i64>,
}

pub fn slice_energy(scan: &SliceScan) -> Result<EnergyProfile> {
    energy_from_rows(&scan.rows(), scan.p)
}

pub fn energy_from_rows(rows: &[ScanRow], p: f64) -> Result<EnergyProfile> {
    let valid: Vec<&ScanRow> = rows.iter().filter(|r| r.valid && r.energy.is_finite()).collect();
    if valid.len() < 2 {
        return Err(Error::TooFewRadii(valid.len()));
    }
    if valid.iter().any(|r| r.energy < 0.0) {
        return Err(Error::invalid("slice energies must be nonnegative"));
    }
    Ok(EnergyProfile {
        radii: valid.iter().map(|r| r.r).collect(),
        f: valid.iter().map(|r| r.energy).collect(),
        p,
        nearest: valid.iter().map(|r| r.nearest).collect(),
    })
}

/// Cumulative trapezoid integrals, `S[0] = 0`.
fn prefix_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; t.len()];
    for i in 1..t.len() {
        s[i] = s[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    }
    s
}

/// Trapezoid weights of the nodes `t`.
pub fn trapezoid_weights(t: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; t.len()];
    for i in 1..t.len() {
        let h = 0.5 * (t[i] - t[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalProfile {
    pub radii: Vec<f64>,
    pub f: Vec<f64>,
    pub mf: Vec<f64>,
    /// `Mf^{1/p}`.
    pub n: Vec<f64>,
    pub p: f64,
}

/// Indices of the profile radii inside `[lo, hi]`.
fn window(radii: &[f64], interval: (f64, f64)) -> Result<std::ops::Range<usize>> {
    let (lo, hi) = interval;
    let span = radii[radii.len() - 1] - radii[0];
    let tol = 1e-12 * span.max(1.0);
    if !(lo <= hi) || lo < radii[0] - tol || hi > radii[radii.len() - 1] + tol {
        return Err(Error::invalid(format!(
            "interval [{lo}, {hi}] is not inside the sampled span [{}, {}]",
            radii[0],
            radii[radii.len() - 1]
        )));
    }
    let start = radii.iter().position(|&r| r >= lo - tol).unwrap_or(radii.len());
    let end = radii.iter().rposition(|&r| r <= hi + tol).map_or(0, |i| i + 1);
    if end <= start {
        return Err(Error::invalid("interval contains no sample"));
    }
    Ok(start..end)
}

/// `Mf(t_k) = max { mean_J f : J = [t_i, t_j] ⊂ K, i <= k <= j }`, the
/// degenerate interval `i = j` contributing `f(t_k)`.
pub fn uncentered_maximal(profile: &EnergyProfile, interval: (f64, f64)) -> Result<MaximalProfile> {
    let range = window(&profile.radii, interval)?;
    let t = &profile.radii[range.clone()];
    let f = &profile.f[range];
    let s = prefix_trapezoid(t, f);
    let n = t.len();
    let mut mf = f.to_vec();
    let mut suffix = vec![0.0; n];
    for i in 0..n {
        // suffix[k] = max_{j >= k} mean(i, j) for k >= i.
        let mut best = f64::NEG_INFINITY;
        for j in (i..n).rev() {
            let mean = if j == i { f[i] } else { (s[j] - s[i]) / (t[j] - t[i]) };
            best = best.max(mean);
            suffix[j] = best;
        }
        for k in i..n {
            mf[k] = mf[k].max(suffix[k]);
        }
    }
    let p = profile.p;
    Ok(MaximalProfile {
        radii: t.to_vec(),
        f: f.to_vec(),
        n: mf.iter().map(|m| m.max(0.0).powf(1.0 / p)).collect(),
        mf,
        p,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakBoundReport {
    /// `sup_λ λ^p |{N > λ}|`.
    pub sup: f64,
    /// `∫ |f|`.
    pub integral: f64,
    pub ratio: f64,
    pub constant: f64,
    pub pass: bool,
}

/// Checks `sup_λ λ^p |{N > λ}| <= 3 ∫|f|`, with level-set measures taken
/// with trapezoid weights. Without a grid, `λ` runs just below every
/// sampled value of `N`, where the supremum is attained.
pub fn weak_bound_check(maximal: &MaximalProfile, p: f64, lambda_grid: Option<&[f64]>) -> Result<WeakBoundReport> {
    let w = trapezoid_weights(&maximal.radii);
    let default: Vec<f64>;
    let grid = match lambda_grid {
        Some(g) => {
            if g.iter().any(|l| !(*l > 0.0)) || g.windows(2).any(|x| !(x[1] > x[0])) {
                return Err(Error::invalid("lambda grid must be positive and increasing"));
            }
            g
        }
        None => {
            default = maximal.n.iter().filter(|v| **v > 0.0).map(|v| v * (1.0 - 1e-12)).collect();
            &default
        }
    };
    let mut sup: f64 = 0.0;
    for &lambda in grid {
        let measure: f64 = maximal.n.iter().zip(&w).filter(|(n, _)| **n > lambda).map(|(_, w)| w).sum();
        sup = sup.max(lambda.powf(p) * measure);
    }
    let integral: f64 = maximal.f.iter().zip(&w).map(|(f, w)| f.abs() * w).sum();
    let ratio = if integral > 0.0 { sup / integral } else if sup > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(WeakBoundReport { sup, integral, ratio, constant: WEAK_CONSTANT, pass: sup <= WEAK_CONSTANT * integral })
}

/// Comparison of the metric bound with the tangential transport along one
/// radial step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportComparison {
    pub pairs: usize,
    /// `min (‖∫ g‖_p - U(h(t), h(t+δ)))` over consecutive valid radii with
    /// equal integer flux.
    pub worst_slack: f64,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub pairs: usize,
    /// Needs the slices themselves; absent when only energies are known.
    pub worst_slack_i: Option<f64>,
    pub worst_slack_ii: f64,
    /// Consecutive valid radii whose integer fluxes differ.
    pub flux_mismatch_radii: Vec<[f64; 2]>,
    pub transport: Option<TransportComparison>,
}

impl ChainReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.worst_slack_i.is_none_or(|s| s >= -tol) && self.worst_slack_ii >= -tol
    }
}

fn combine(forms: &[&SphereForm], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; forms[0].values.len()];
    for (f, w) in forms.iter().zip(weights) {
        for (o, v) in out.iter_mut().zip(&f.values) {
            *o += w * v;
        }
    }
    out
}

fn sphere_lp(values: &[f64], weights: &[f64], p: f64) -> f64 {
    values.iter().zip(weights).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Inequality (ii) over every sample pair and the flux mismatches, from
/// slice energies alone.
pub fn energy_chain_check(profile: &EnergyProfile, interval: (f64, f64)) -> Result<ChainReport> {
    let range = window(&profile.radii, interval)?;
    let t = &profile.radii[range.clone()];
    if t.len() < 3 {
        return Err(Error::TooFewRadii(t.len()));
    }
    let f = &profile.f[range.clone()];
    let nearest = &profile.nearest[range];
    let p = profile.p;
    let maximal = uncentered_maximal(profile, (t[0], t[t.len() - 1]))?;
    let s = prefix_trapezoid(t, f);
    let mut worst_ii = f64::INFINITY;
    let mut pairs = 0;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            let delta = t[j] - t[i];
            let middle = delta.powf(1.0 - 1.0 / p) * (s[j] - s[i]).max(0.0).powf(1.0 / p);
            worst_ii = worst_ii.min(delta * maximal.mf[i].powf(1.0 / p) - middle);
            pairs += 1;
        }
    }
    let flux_mismatch_radii =
        (0..t.len() - 1).filter(|&i| nearest[i] != nearest[i + 1]).map(|i| [t[i], t[i + 1]]).collect();
    Ok(ChainReport { pairs, worst_slack_i: None, worst_slack_ii: worst_ii, flux_mismatch_radii, transport: None })
}

/// For every valid pair `t < t + δ` in `interval` checks
/// (i) `‖∫ h‖_p <= δ^{1-1/p} (∫ ‖h‖_p^p)^{1/p}` and
/// (ii) `δ^{1-1/p} (∫ f)^{1/p} <= δ (Mf(t))^{1/p}`.
/// With `transport` set, consecutive pairs with matching integer flux also
/// compare the metric bound against `‖∫ g‖_p` for the tangential pullback;
/// the comparison is reported, not enforced.
pub fn lipschitz_chain_check(scan: &SliceScan, interval: (f64, f64), transport: bool) -> Result<ChainReport> {
    let idx: Vec<usize> = (0..scan.radii.len()).filter(|&i| scan.samples[i].is_some()).collect();
    let all_t: Vec<f64> = idx.iter().map(|&i| scan.radii[i]).collect();
    if all_t.len() < 3 {
        return Err(Error::TooFewRadii(all_t.len()));
    }
    let range = window(&all_t, interval)?;
    let idx = &idx[range];
    if idx.len() < 3 {
        return Err(Error::TooFewRadii(idx.len()));
    }
    let p = scan.p;
    let samples: Vec<_> = idx.iter().map(|&i| scan.samples[i].as_ref().unwrap()).collect();
    let t: Vec<f64> = idx.iter().map(|&i| scan.radii[i]).collect();
    let wq = samples[0].slice.quadrature.weights().to_vec();
    let profile = EnergyProfile {
        radii: t.clone(),
        f: samples.iter().map(|s| s.energy).collect(),
        p,
        nearest: samples.iter().map(|s| s.flux.round() as i64).collect(),
    };
    let maximal = uncentered_maximal(&profile, (t[0], t[t.len() - 1]))?;
    let n = t.len();
    let (mut worst_i, mut worst_ii) = (f64::INFINITY, f64::INFINITY);
    let mut pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            let delta = t[j] - t[i];
            let w = trapezoid_weights(&t[i..=j]);
            let forms: Vec<&SphereForm> = samples[i..=j].iter().map(|s| &s.slice).collect();
            let lhs_i = sphere_lp(&combine(&forms, &w), &wq, p);
            let energy_integral: f64 = w.iter().zip(&profile.f[i..=j]).map(|(w, f)| w * f).sum();
            let middle = delta.powf(1.0 - 1.0 / p) * energy_integral.powf(1.0 / p);
            let rhs_ii = delta * maximal.mf[i].powf(1.0 / p);
            worst_i = worst_i.min(middle - lhs_i);
            worst_ii = worst_ii.min(rhs_ii - middle);
            pairs += 1;
        }
    }
    let flux_mismatch_radii = (0..n - 1)
        .filter(|&i| profile.nearest[i] != profile.nearest[i + 1])
        .map(|i| [t[i], t[i + 1]])
        .collect();
    let transport = if transport && p > 1.0 && p < 1.5 {
        match DomainSpec::sphere_for_rule(&samples[0].slice.quadrature) {
            Ok(domain) => Some(transport_comparison(&samples, &t, &profile.nearest, p, &domain, &wq)?),
            Err(_) => None,
        }
    } else {
        None
    };
    Ok(ChainReport { pairs, worst_slack_i: Some(worst_i), worst_slack_ii: worst_ii, flux_mismatch_radii, transport })
}

fn transport_comparison(
    samples: &[&crate::slicing::SliceSample],
    t: &[f64],
    nearest: &[i64],
    p: f64,
    domain: &DomainSpec,
    wq: &[f64],
) -> Result<TransportComparison> {
    let mut worst = f64::INFINITY;
    let mut pairs = 0;
    let mut violations = 0;
    for i in 0..t.len() - 1 {
        if nearest[i] != nearest[i + 1] {
            continue;
        }
        let half = 0.5 * (t[i + 1] - t[i]);
        let moved: Vec<f64> = samples[i]
            .tangential
            .iter()
            .zip(&samples[i + 1].tangential)
            .map(|(a, b): (&Vec3, &Vec3)| (half * (a + b)).norm())
            .collect();
        let transport = sphere_lp(&moved, wq, p);
        let u = metric_upper_bound(
            &Density::Sphere(samples[i].slice.clone()),
            &Density::Sphere(samples[i + 1].slice.clone()),
            p,
            domain,
        )?
        .upper_bound;
        let slack = transport - u;
        if slack < -1e-8 {
            violations += 1;
        }
        worst = worst.min(slack);
        pairs += 1;
    }
    Ok(TransportComparison { pairs, worst_slack: if pairs == 0 { 0.0 } else { worst }, violations })
}
