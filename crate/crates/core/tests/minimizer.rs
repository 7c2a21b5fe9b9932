use intflux::geom::{vec3, Aabb, GridSpec};
use intflux::minimize::{minimize_charged, Charge, ChargeSpec, SolverOptions};
use intflux::slicing::sphere_flux;
use intflux::{FieldSource, SphereQuadrature};

#[test]
fn minimizer_flux_matches_charges() {
    let grid = GridSpec::spanning(&Aabb::unit_cube(), 13).unwrap();
    let atoms = vec![
        Charge { point: [0.25, 0.5, 0.5], charge: 1 },
        Charge { point: [0.75, 0.5, 0.5], charge: -1 },
    ];
    let spec = ChargeSpec::new(atoms, grid).unwrap();
    let (sol, trace) = minimize_charged(&spec, 1.2, &SolverOptions::default()).unwrap();
    assert!(trace.final_residual() <= 1e-8);
    for w in trace.objective.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
    let field = FieldSource::Grid(sol.node_field());
    let rule = SphereQuadrature::shared(32);
    let plus = sphere_flux(&field, &vec3(0.25, 0.5, 0.5), 0.2, &rule).unwrap();
    let minus = sphere_flux(&field, &vec3(0.75, 0.5, 0.5), 0.2, &rule).unwrap();
    assert!((plus - 1.0).abs() < 0.05, "{plus}");
    assert!((minus + 1.0).abs() < 0.05, "{minus}");
}
