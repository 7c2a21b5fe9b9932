use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::field::FieldSource;
use crate::slicing::slice_pullback;

fn square_values(n: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..n * n).map(|i| f((i % n) as f64 / n as f64, (i / n) as f64 / n as f64)).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn torus_single_mode_is_divided_by_eigenvalue() {
    let n = 16;
    let d = DomainSpec::square(n).unwrap();
    let rhs = square_values(n, |x, y| (2.0 * PI * x).cos() * (4.0 * PI * y).sin());
    let psi = poisson_solve(&Density::Square(rhs.clone()), &d).unwrap();
    let lambda = -(4.0 * PI * PI + 16.0 * PI * PI);
    let expect: Vec<f64> = rhs.iter().map(|v| v / lambda).collect();
    let got = psi.values();
    for (a, b) in got.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(psi.mean().abs() < 1e-16);
    let lap = psi.laplacian();
    let res: Vec<f64> = lap.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    assert!(max_abs(&res) <= 1e-12 * max_abs(&rhs));
}

#[test]
fn zero_rhs_and_nonzero_mean() {
    let d = DomainSpec::square(8).unwrap();
    let psi = poisson_solve(&Density::Square(vec![0.0; 64]), &d).unwrap();
    assert!(psi.values().iter().all(|v| *v == 0.0));
    assert!(matches!(
        poisson_solve(&Density::Square(vec![1.0; 64]), &d),
        Err(Error::NonZeroMean { .. })
    ));
    assert!(DomainSpec::square(4).is_err());
}

/// Periodic five-point Laplacian solved densely, mean pinned to zero.
fn dense_fd_poisson(n: usize, rhs: &[f64]) -> Vec<f64> {
    let h2 = (1.0 / n as f64).powi(2);
    let m = n * n;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for j in 0..n {
        for i in 0..n {
            let r = i + n * j;
            a[(r, r)] -= 4.0 / h2;
            for (di, dj) in [(1, 0), (n - 1, 0), (0, 1), (0, n - 1)] {
                a[(r, (i + di) % n + n * ((j + dj) % n))] += 1.0 / h2;
            }
        }
    }
    a.add_scalar_mut(1.0);
    let x = a.lu().solve(&DVector::from_column_slice(rhs)).unwrap();
    let mean = x.mean();
    x.iter().map(|v| v - mean).collect()
}

#[test]
fn dirac_solution_matches_dense_oracle_away_from_source() {
    let n = 32;
    let d = DomainSpec::square(n).unwrap();
    let delta = mollified_dirac(&d, d.default_base_point());
    assert!((delta.integral(&d) - 1.0).abs() < 1e-14);
    let rhs: Vec<f64> = delta.values().iter().map(|v| v - 1.0).collect();
    let psi = poisson_solve(&Density::Square(rhs.clone()), &d).unwrap().values();
    let oracle = dense_fd_poisson(n, &rhs);
    let far: Vec<usize> = (0..n * n)
        .filter(|&k| {
            let (i, j) = ((k % n) as i64 - 16, (k / n) as i64 - 16);
            i * i + j * j >= 64
        })
        .collect();
    let lo = far.iter().map(|&k| psi[k]).fold(f64::INFINITY, f64::min);
    let hi = far.iter().map(|&k| psi[k]).fold(f64::NEG_INFINITY, f64::max);
    // Same additive normalization on the far field.
    let shift = far.iter().map(|&k| psi[k] - oracle[k]).sum::<f64>() / far.len() as f64;
    let worst = far.iter().map(|&k| (psi[k] - oracle[k] - shift).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.02 * (hi - lo), "{worst} vs range {}", hi - lo);
}

fn random_smooth_form(n: usize, rng: &mut ChaCha8Rng) -> OneForm {
    let mut u = vec![0.0; n * n];
    let mut v = vec![0.0; n * n];
    for _ in 0..6 {
        let (kx, ky) = (rng.gen_range(-3i32..=3) as f64, rng.gen_range(-3i32..=3) as f64);
        let (a, b, ph) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.0));
        for idx in 0..n * n {
            let (x, y) = ((idx % n) as f64 / n as f64, (idx / n) as f64 / n as f64);
            let s = (2.0 * PI * (kx * x + ky * y) + ph).sin();
            u[idx] += a * s;
            v[idx] += b * s;
        }
    }
    let c = rng.gen_range(-1.0..1.0);
    u.iter_mut().for_each(|x| *x += c);
    OneForm { u, v }
}

#[test]
fn torus_hodge_parts_are_complete_and_orthogonal() {
    let n = 16;
    let d = DomainSpec::square(n).unwrap();
    let w = d.weights();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let form = random_smooth_form(n, &mut rng);
    let parts = hodge_decompose(&form, &d).unwrap();
    let sum = parts.exact.add(&parts.coexact).add(&parts.harmonic);
    let scale = form.inner(&form, &w).sqrt();
    assert!(sum.sub(&form).inner(&sum.sub(&form), &w).sqrt() <= 1e-12 * scale);
    for (a, b) in [(&parts.exact, &parts.coexact), (&parts.exact, &parts.harmonic), (&parts.coexact, &parts.harmonic)] {
        assert!(a.inner(b, &w).abs() <= 1e-10 * scale * scale);
    }
    // Gradient input has no coexact part; rotated gradient has no exact part.
    let grad = |x: f64, y: f64| ((2.0 * PI * x).cos() * (2.0 * PI * y).sin(), (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
    let gx = square_values(n, |x, y| grad(x, y).0);
    let gy = square_values(n, |x, y| grad(x, y).1);
    let p = hodge_decompose(&OneForm { u: gx.clone(), v: gy.clone() }, &d).unwrap();
    assert!(max_abs(&p.coexact.u).max(max_abs(&p.coexact.v)) < 1e-12);
    let rot = OneForm { u: gy.iter().map(|v| -v).collect(), v: gx };
    let p = hodge_decompose(&rot, &d).unwrap();
    assert!(max_abs(&p.exact.u).max(max_abs(&p.exact.v)) < 1e-12);
}

#[test]
fn torus_exact_part_matches_dense_projection() {
    let n = 8;
    let d = DomainSpec::square(n).unwrap();
    let m = n * n;
    // Columns: spectral gradient of each unit nodal function.
    let mut g = DMatrix::<f64>::zeros(2 * m, m);
    for c in 0..m {
        let mut e = vec![0.0; m];
        e[c] = 1.0;
        let ec = e.iter().sum::<f64>() / m as f64;
        e.iter_mut().for_each(|x| *x -= ec);
        let t = torus::Torus::new(n);
        let (gx, gy) = t.gradient(&t.forward(&e));
        for r in 0..m {
            g[(r, c)] = gx[r];
            g[(m + r, c)] = gy[r];
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let form = random_smooth_form(n, &mut rng);
    let vvec = DVector::from_iterator(2 * m, form.u.iter().chain(&form.v).cloned());
    let gtg = g.transpose() * &g;
    let coef = gtg.pseudo_inverse(1e-9).unwrap() * (g.transpose() * &vvec);
    let proj = &g * coef;
    let parts = hodge_decompose(&form, &d).unwrap();
    for r in 0..m {
        assert!((proj[r] - parts.exact.u[r]).abs() < 1e-8);
        assert!((proj[m + r] - parts.exact.v[r]).abs() < 1e-8);
    }
}

/// Tangential `(θ, φ)` components of an ambient vector at a unit vector.
fn tangent_components(x: &Vec3, a: Vec3) -> (f64, f64) {
    let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let (cp, sp) = (x[0] / s, x[1] / s);
    let e_theta = Vec3::new(x[2] * cp, x[2] * sp, -s);
    let e_phi = Vec3::new(-sp, cp, 0.0);
    (a.dot(&e_theta), a.dot(&e_phi))
}

#[test]
fn sphere_poisson_single_mode() {
    let d = DomainSpec::sphere(10).unwrap();
    let rule = d.sphere_rule();
    // x z is a degree-2 harmonic restricted to the sphere.
    let rhs = SphereForm::from_fn(rule.clone(), |x| x[0] * x[2]);
    let psi = poisson_solve(&Density::Sphere(rhs.clone()), &d).unwrap();
    for (got, x) in psi.values().iter().zip(rule.nodes()) {
        assert!((got + x[0] * x[2] / 6.0).abs() < 1e-13);
    }
    let lap = psi.laplacian();
    for (a, b) in lap.iter().zip(&rhs.values) {
        assert!((a - b).abs() < 1e-12);
    }
    let mismatched = SphereForm::from_fn(SphereQuadrature::shared(7), |x| x[0]);
    assert!(poisson_solve(&Density::Sphere(mismatched), &d).is_err());
}

#[test]
fn sphere_hodge_separates_gradients_and_rotations() {
    let d = DomainSpec::sphere(10).unwrap();
    let rule = d.sphere_rule();
    let w = d.weights();
    // f = x z + y, g = x² - y z; ambient gradients restricted tangentially.
    let (mut fu, mut fv, mut gu, mut gv) = (vec![], vec![], vec![], vec![]);
    for x in rule.nodes() {
        let (a, b) = tangent_components(x, Vec3::new(x[2], 1.0, x[0]));
        fu.push(a);
        fv.push(b);
        let (c, e) = tangent_components(x, Vec3::new(2.0 * x[0], -x[2], -x[1]));
        gu.push(-e);
        gv.push(c);
    }
    let grad = OneForm { u: fu, v: fv };
    let rot = OneForm { u: gu, v: gv };
    let p = hodge_decompose(&grad, &d).unwrap();
    assert!(max_abs(&p.coexact.u).max(max_abs(&p.coexact.v)) < 1e-12);
    assert!(max_abs(&p.exact.sub(&grad).u).max(max_abs(&p.exact.sub(&grad).v)) < 1e-12);
    let p = hodge_decompose(&rot, &d).unwrap();
    assert!(max_abs(&p.exact.u).max(max_abs(&p.exact.v)) < 1e-12);
    let mixed = grad.add(&rot.scaled(0.7));
    let p = hodge_decompose(&mixed, &d).unwrap();
    let recon = p.exact.add(&p.coexact).add(&p.harmonic);
    assert!(max_abs(&recon.sub(&mixed).u).max(max_abs(&recon.sub(&mixed).v)) < 1e-12);
    assert!(p.exact.inner(&p.coexact, &w).abs() < 1e-12);
    assert!(p.harmonic.u.iter().all(|v| *v == 0.0));
}

#[test]
fn metric_axioms_on_square() {
    let n = 32;
    let d = DomainSpec::square(n).unwrap();
    let h1 = Density::Square(square_values(n, |x, y| 1.0 + (2.0 * PI * x).sin() * (2.0 * PI * y).cos()));
    let h2 = Density::Square(square_values(n, |x, _| 0.4 + 0.3 * (4.0 * PI * x).cos()));
    let u = metric_upper_bound(&h1, &h1, 1.2, &d).unwrap();
    assert!(u.upper_bound <= 1e-10);
    let a = metric_upper_bound(&h1, &h2, 1.2, &d).unwrap();
    let b = metric_upper_bound(&h2, &h1, 1.2, &d).unwrap();
    assert!((a.upper_bound - b.upper_bound).abs() <= 1e-10);
    assert!((a.flux_h1 - 1.0).abs() < 1e-12 && (a.flux_h2 - 0.4).abs() < 1e-12);
    assert_eq!(a.integer_gap, 1);
    assert!(metric_upper_bound(&h1, &h2, 1.6, &d).is_err());
}

#[test]
fn metric_of_single_mode_has_closed_form() {
    let n = 64;
    let p = 1.3;
    let d = DomainSpec::square(n).unwrap();
    let h1 = Density::Square(square_values(n, |x, _| (2.0 * PI * x).cos()));
    let h2 = Density::Square(vec![0.0; n * n]);
    let u = metric_upper_bound(&h1, &h2, p, &d).unwrap().upper_bound;
    // ∇ψ = (sin(2πx) / 2π, 0): sampled mean of |sin|^p on the grid.
    let mean: f64 = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin().abs().powf(p)).sum::<f64>() / n as f64;
    let expect = mean.powf(1.0 / p) / (2.0 * PI);
    assert!((u - expect).abs() < 1e-12 * expect);
}

#[test]
fn metric_is_translation_equivariant() {
    let n = 32;
    let d = DomainSpec::square(n).unwrap();
    let f1 = |x: f64, y: f64| 2.0 + (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * y).cos();
    let f2 = |x: f64, y: f64| (2.0 * PI * (x + y)).cos().powi(2);
    let (sx, sy) = (3.0 / n as f64, 5.0 / n as f64);
    let base = d.default_base_point();
    let u0 = metric_upper_bound_at(
        &Density::Square(square_values(n, f1)),
        &Density::Square(square_values(n, f2)),
        1.2,
        &d,
        base,
    )
    .unwrap();
    let u1 = metric_upper_bound_at(
        &Density::Square(square_values(n, |x, y| f1(x - sx, y - sy))),
        &Density::Square(square_values(n, |x, y| f2(x - sx, y - sy))),
        1.2,
        &d,
        [base[0] + sx, base[1] + sy, 0.0],
    )
    .unwrap();
    assert!((u0.upper_bound - u1.upper_bound).abs() <= 1e-10);
}

#[test]
fn scaling_without_dirac_term() {
    let n = 16;
    let d = DomainSpec::square(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let shift = (a.iter().sum::<f64>() - b.iter().sum::<f64>()) / (n * n) as f64;
    b.iter_mut().for_each(|x| *x += shift);
    let base = metric_upper_bound(&Density::Square(a.clone()), &Density::Square(b.clone()), 1.4, &d).unwrap();
    for lambda in [-2.0, 0.5, 3.0] {
        let sa: Vec<f64> = a.iter().map(|x| lambda * x).collect();
        let sb: Vec<f64> = b.iter().map(|x| lambda * x).collect();
        let u = metric_upper_bound(&Density::Square(sa), &Density::Square(sb), 1.4, &d).unwrap();
        assert!((u.upper_bound - f64::abs(lambda) * base.upper_bound).abs() <= 1e-10 * u.upper_bound.max(1.0));
    }
}

#[test]
fn sphere_metric_and_flux_classes() {
    let d = DomainSpec::sphere(14).unwrap();
    let rule = d.sphere_rule();
    let mono = FieldSource::monopole(Vec3::zeros());
    let slice = slice_pullback(&mono, &Vec3::zeros(), 0.5, &rule).unwrap();
    assert!(flux_class_check(&slice, 1e-9).unwrap());
    assert!(!flux_class_check(&slice.scaled(0.37), 1e-3).unwrap());
    assert!(flux_class_check(&slice.scaled(0.0), 1e-9).unwrap());
    let delta = mollified_dirac(&d, d.default_base_point());
    assert!((delta.integral(&d) - 1.0).abs() < 1e-14);
    let h1 = Density::Sphere(slice.clone());
    let h2 = Density::Sphere(SphereForm::from_fn(rule.clone(), |x| (1.0 + x[0]) / (4.0 * PI)));
    let a = metric_upper_bound(&h1, &h2, 1.2, &d).unwrap();
    let b = metric_upper_bound(&h2, &h1, 1.2, &d).unwrap();
    assert!((a.upper_bound - b.upper_bound).abs() < 1e-10);
    assert!(a.upper_bound > 0.0);
    assert_eq!(a.integer_gap, 0);
}
