use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::current::{PolylineCurrent, Segment};
use crate::error::{Error, Result};
use crate::field::FieldSource;
use crate::geom::{Aabb, Vec3};
use crate::measure::AtomicMeasure;
use crate::poly::{Monomial, PolyField, ScalarPoly};
use crate::quadrature::gauss_legendre_on;

use super::dipole::{Dipole, DipoleSpec};
use super::lattice::{segment_along, LatticeSpec};

/// Target of the approximation: the diffuse current whose weak limit the
/// dipole sums approach.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TargetMeasure {
    /// `(1, 0, 0) dx` on the unit cube.
    ConstantX,
    /// One signed measure per axis; positive and negative parts give
    /// oppositely oriented segments.
    Vector(Box<[AtomicMeasure; 3]>),
}

impl TargetMeasure {
    /// `∫ a · dX`.
    pub fn pairing(&self, test: &PolyField) -> f64 {
        match self {
            TargetMeasure::ConstantX => {
                let rule = gauss_legendre_on(3, 0.0, 1.0);
                let mut s = 0.0;
                for &(z, wz) in &rule {
                    for &(y, wy) in &rule {
                        for &(x, wx) in &rule {
                            s += wx * wy * wz * test.components[0].eval(&Vec3::new(x, y, z));
                        }
                    }
                }
                s
            }
            TargetMeasure::Vector(parts) => parts
                .iter()
                .enumerate()
                .map(|(d, m)| m.integrate(|p| test.components[d].eval(p)))
                .sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let TargetMeasure::Vector(parts) = self {
            for (d, m) in parts.iter().enumerate() {
                let tv = m.total_variation();
                if !(tv <= 1.0 + 1e-9) {
                    return Err(Error::invalid(format!("component {d} has total variation {tv} > 1")));
                }
            }
        }
        Ok(())
    }
}

/// The level-`k` dipole approximation `X_k` and its current `I_k`.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub lattice: LatticeSpec,
    pub current: PolylineCurrent,
    pub dipoles: Vec<Dipole>,
}

fn dipole_of(seg: &Segment) -> Result<Dipole> {
    Dipole::new(&DipoleSpec::new(Vec3::from(seg.end), Vec3::from(seg.start)))
}

/// Builds `X_k` for `measure`: one dipole per lattice point and per nonzero
/// part of the measure in the dyadic cube around it, with length equal to
/// that part's mass.
pub fn counterexample_field(k: u32, measure: &TargetMeasure, cap: u128) -> Result<Counterexample> {
    let lattice = LatticeSpec::new(k)?;
    measure.validate()?;
    let parts = match measure {
        TargetMeasure::ConstantX => 1,
        TargetMeasure::Vector(_) => 6,
    };
    let requested = lattice.segment_count() * parts;
    if requested > cap {
        return Err(Error::ResourceLimit { requested, cap });
    }
    let half = 0.5 * lattice.spacing();
    let mut segments = Vec::new();
    match measure {
        TargetMeasure::ConstantX => {
            let len = 2.0 * lattice.half_length();
            segments.extend(lattice.centers().map(|c| segment_along(c, 0, 1.0, len)));
        }
        TargetMeasure::Vector(components) => {
            for (axis, m) in components.iter().enumerate() {
                for sign in [1.0, -1.0] {
                    for c in lattice.centers() {
                        let cube = Aabb { min: c.map(|x| x - half), max: c.map(|x| x + half) };
                        let len = m.part_mass_in(&cube, sign);
                        if len > 0.0 {
                            segments.push(segment_along(c, axis, sign, len));
                        }
                    }
                }
            }
        }
    }
    let dipoles = segments.iter().map(dipole_of).collect::<Result<Vec<_>>>()?;
    Ok(Counterexample { lattice, current: PolylineCurrent::new(segments), dipoles })
}

impl Counterexample {
    pub fn field(&self) -> FieldSource {
        FieldSource::Sum(self.dipoles.iter().map(|d| (1.0, FieldSource::Dipole(d.clone()))).collect())
    }

    pub fn segment_count(&self) -> usize {
        self.dipoles.len()
    }

    /// `M(div X_k)`: total variation of the endpoint atoms.
    pub fn div_mass(&self) -> f64 {
        self.current.boundary_mass()
    }

    /// `Σ_i ∫ |X_i|^p`, which equals `∫ |X_k|^p` for disjoint supports.
    pub fn lp_energy(&self, p: f64) -> Result<f64> {
        let mut total = 0.0;
        for d in &self.dipoles {
            total += d.lp_energy(p)?;
        }
        Ok(total)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.lp_energy(p)?.powf(1.0 / p))
    }

    pub fn l1_norm(&self) -> f64 {
        self.lp_energy(1.0).expect("dipoles are integrable")
    }

    /// `⟨X_k, a⟩`.
    pub fn pairing(&self, test: &PolyField) -> Result<f64> {
        let mut total = 0.0;
        for d in &self.dipoles {
            total += d.pair_polynomial(test)?;
        }
        Ok(total)
    }

    /// Largest number of dipole supports containing any sample point, the
    /// samples being the midpoint and two axial and two transverse points of
    /// every dipole.
    pub fn max_overlap(&self) -> usize {
        if self.dipoles.is_empty() {
            return 0;
        }
        let cell = self.lattice.spacing();
        let key = |p: &Vec3| -> [i64; 3] { std::array::from_fn(|d| (p[d] / cell).floor() as i64) };
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (idx, d) in self.dipoles.iter().enumerate() {
            let b = d.bounding_box();
            let lo = key(&Vec3::from(b.min));
            let hi = key(&Vec3::from(b.max));
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        buckets.entry([x, y, z]).or_default().push(idx);
                    }
                }
            }
        }
        let mut worst = 0;
        for d in &self.dipoles {
            let e = d.axis() * (0.5 * d.half_length);
            let helper = if d.axis()[0].abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let u = d.axis().cross(&helper).normalize() * (0.5 * d.rho_t);
            let m = d.midpoint();
            for p in [m, m + e, m - e, m + u, m - u] {
                let count = buckets
                    .get(&key(&p))
                    .map_or(0, |ids| ids.iter().filter(|&&i| self.dipoles[i].contains(&p)).count());
                worst = worst.max(count);
            }
        }
        worst
    }

    pub fn report(&self, measure: &TargetMeasure, ps: &[f64], tests: &[(String, PolyField)]) -> Result<CounterexampleReport> {
        let mut lp_norms = BTreeMap::new();
        for &p in ps {
            lp_norms.insert(format!("{p}"), self.lp_norm(p)?);
        }
        let pairings = tests
            .iter()
            .map(|(name, a)| {
                Ok(PairingRecord { test: name.clone(), value: self.pairing(a)?, target: measure.pairing(a) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CounterexampleReport {
            k: self.lattice.k,
            segment_count: self.segment_count() as u64,
            mass_ik: self.lattice.mass_string(),
            div_mass: self.div_mass(),
            l1_norm: self.l1_norm(),
            lp_norms,
            pairings,
            max_overlap: self.max_overlap(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingRecord {
    pub test: String,
    pub value: f64,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub k: u32,
    pub segment_count: u64,
    #[serde(rename = "mass_Ik")]
    pub mass_ik: String,
    pub div_mass: f64,
    pub l1_norm: f64,
    pub lp_norms: BTreeMap<String, f64>,
    pub pairings: Vec<PairingRecord>,
    pub max_overlap: usize,
}

/// Constant, linear and quadratic test fields.
pub fn test_dictionary() -> Vec<(String, PolyField)> {
    let m = Monomial::new;
    let p = |terms: Vec<Monomial>| ScalarPoly::new(terms);
    vec![
        ("constant".into(), PolyField::constant([1.0, 0.0, 0.0])),
        (
            "linear".into(),
            PolyField {
                components: [
                    p(vec![m(1.0, [1, 0, 0]), m(2.0, [0, 1, 0]), m(-1.0, [0, 0, 1])]),
                    p(vec![m(1.0, [1, 0, 0])]),
                    p(vec![m(1.0, [0, 1, 0])]),
                ],
            },
        ),
        (
            "quadratic".into(),
            PolyField {
                components: [
                    p(vec![m(1.0, [2, 0, 0]), m(1.0, [0, 1, 1])]),
                    p(vec![m(1.0, [1, 1, 0])]),
                    p(vec![m(1.0, [0, 0, 2])]),
                ],
            },
        ),
    ]
}
