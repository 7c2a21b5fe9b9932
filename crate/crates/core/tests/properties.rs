use proptest::prelude::*;

use intflux::geom::{vec3, Aabb, GridSpec, Vec3};
use intflux::field::GridField;
use intflux::maximal::{uncentered_maximal, EnergyProfile};
use intflux::metric::{metric_upper_bound, Density, DomainSpec};
use intflux::norms::{lp_norm, IntegrationOptions, Region};
use intflux::poly::{Monomial, PolyField, ScalarPoly};
use intflux::slicing::sphere_flux;
use intflux::{fld, FieldSource, SphereQuadrature};

fn linear(c: [f64; 4]) -> ScalarPoly {
    ScalarPoly::new(vec![
        Monomial::new(c[0], [0, 0, 0]),
        Monomial::new(c[1], [1, 0, 0]),
        Monomial::new(c[2], [0, 1, 0]),
        Monomial::new(c[3], [0, 0, 1]),
    ])
}

fn coeffs() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-2.0f64..2.0)
}

fn linear_field() -> impl Strategy<Value = PolyField> {
    (coeffs(), coeffs(), coeffs()).prop_map(|(a, b, c)| PolyField::new([linear(a), linear(b), linear(c)]).unwrap())
}

fn opts() -> IntegrationOptions {
    IntegrationOptions { resolution: 8, ..Default::default() }
}

fn profile() -> impl Strategy<Value = EnergyProfile> {
    prop::collection::vec(0.0f64..3.0, 3..40).prop_map(|f| {
        let n = f.len();
        EnergyProfile { radii: (0..n).map(|i| i as f64 / (n - 1) as f64).collect(), nearest: vec![0; n], f, p: 1.2 }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_norm_is_homogeneous(f in linear_field(), s in -3.0f64..3.0, p in 1.0f64..1.5) {
        let region = Region::Box(Aabb::unit_cube());
        let a = lp_norm(&FieldSource::Polynomial(f.clone()), p, &region, &opts()).unwrap();
        let b = lp_norm(&FieldSource::Polynomial(f.scaled(s)), p, &region, &opts()).unwrap();
        prop_assert!((b - s.abs() * a).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn lp_norm_triangle_inequality(f in linear_field(), g in linear_field(), p in 1.0f64..1.5) {
        let region = Region::Box(Aabb::unit_cube());
        let n = |x: FieldSource| lp_norm(&x, p, &region, &opts()).unwrap();
        let ff = FieldSource::Polynomial(f);
        let gg = FieldSource::Polynomial(g);
        let sum = n(ff.clone().plus(gg.clone()));
        prop_assert!(sum <= n(ff) + n(gg) + 1e-10);
    }

    #[test]
    fn flux_is_linear(f in linear_field(), s in -2.0f64..2.0, cx in -0.3f64..0.3, r in 0.2f64..1.0) {
        let rule = SphereQuadrature::shared(16);
        let c = vec3(cx, 0.1, -0.2);
        let mono = FieldSource::monopole(vec3(cx + 0.05, 0.1, -0.2));
        let poly = FieldSource::Polynomial(f);
        let combined = mono.clone().plus(poly.clone().scaled(s));
        let lhs = sphere_flux(&combined, &c, r, &rule).unwrap();
        let rhs = sphere_flux(&mono, &c, r, &rule).unwrap() + s * sphere_flux(&poly, &c, r, &rule).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn flux_of_polynomial_is_divergence_integral(f in linear_field(), r in 0.1f64..1.0) {
        let rule = SphereQuadrature::shared(8);
        let c = Vec3::zeros();
        let div = f.divergence(&c);
        let flux = sphere_flux(&FieldSource::Polynomial(f), &c, r, &rule).unwrap();
        let expected = div * 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        prop_assert!((flux - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }

    #[test]
    fn maximal_dominates_and_grows_with_the_interval(p in profile(), cut in 0.1f64..0.45) {
        let full = uncentered_maximal(&p, (0.0, 1.0)).unwrap();
        for (m, f) in full.mf.iter().zip(&full.f) {
            prop_assert!(*m >= *f);
        }
        let inner = uncentered_maximal(&p, (cut, 1.0 - cut));
        prop_assume!(inner.is_ok());
        let inner = inner.unwrap();
        for (i, r) in inner.radii.iter().enumerate() {
            let j = full.radii.iter().position(|x| x == r).unwrap();
            prop_assert!(inner.mf[i] <= full.mf[j] * (1.0 + 1e-12) + 1e-14, "{} > {}", inner.mf[i], full.mf[j]);
        }
    }

    #[test]
    fn trilinear_interpolation_reproduces_linear_fields(f in linear_field(), x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0) {
        let grid = GridSpec::new([0.0; 3], [0.25, 0.5, 0.2], [5, 3, 6]).unwrap();
        let g = GridField::from_fn(grid, |q| f.eval(q)).unwrap();
        let q = vec3(x, y, z);
        prop_assert!((g.sample(&q).unwrap() - f.eval(&q)).norm() <= 1e-12);
    }

    #[test]
    fn fld_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 3 * 2 * 3 * 4)) {
        let grid = GridSpec::new([0.5, -1.0, 2.0], [0.1, 0.2, 0.3], [2, 3, 4]).unwrap();
        let g = GridField::new(grid, vals).unwrap();
        let back = fld::decode(&fld::encode(&g)).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn metric_bound_symmetric_and_zero_on_diagonal(a in prop::array::uniform3(-0.2f64..0.2), seedless in 0.5f64..2.0) {
        let domain = DomainSpec::square(16).unwrap();
        let nodes = domain.nodes();
        let h = |c: f64, s: f64| Density::Square(nodes.iter().map(|x| c + s * (2.0 * std::f64::consts::PI * x[0]).sin() + a[2] * (2.0 * std::f64::consts::PI * (x[0] + 2.0 * x[1])).cos()).collect());
        let h1 = h(1.0, a[0]);
        let h2 = h(seedless, a[1]);
        let u12 = metric_upper_bound(&h1, &h2, 1.3, &domain).unwrap().upper_bound;
        let u21 = metric_upper_bound(&h2, &h1, 1.3, &domain).unwrap().upper_bound;
        prop_assert!((u12 - u21).abs() <= 1e-10 * (1.0 + u12));
        prop_assert!(metric_upper_bound(&h1, &h1, 1.3, &domain).unwrap().upper_bound <= 1e-12);
    }
}
