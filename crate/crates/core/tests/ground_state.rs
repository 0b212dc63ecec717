//! A small ground state checked against the identities a constrained
//! critical point must satisfy.

use confined_nls::functional::{evaluate, ProblemParams};
use confined_nls::grid::{apply_h, CylGrid};
use confined_nls::ground::{grid_lambda, initial_ground_guess, monotonicity_violation, solve_ground, GroundOptions};
use confined_nls::linalg::SeparableSolver;
use confined_nls::study::liouville_diagnostic;

#[test]
fn ground_state_satisfies_its_identities() {
    let g = CylGrid::new(64, 128, 7.0, 90.0).unwrap();
    let solver = SeparableSolver::new(&g);
    let params = ProblemParams::new(3.0, 1.0).unwrap();
    let lam = grid_lambda(&g, &solver);
    let half = 0.5 * lam * params.mu;
    let init = initial_ground_guess(&params, &g, half).unwrap();
    let u = solve_ground(&params, &init, &solver, &GroundOptions::default()).unwrap();
    assert!(u.converged, "plug-back {}", u.plugback);

    let rep = evaluate(&u.field, &params);
    assert!((rep.mass - 1.0).abs() < 1e-10);
    assert!(rep.energy < half, "{} vs {half}", rep.energy);
    assert!(rep.g_indicator > 0.0);
    // the multiplier from the equation agrees with the one from the energy
    let from_energy = -(rep.kinetic + rep.confine - rep.nonlin) / rep.mass;
    assert!((u.multiplier - from_energy).abs() < 1e-6 * from_energy.abs(), "{} vs {from_energy}", u.multiplier);
    assert!(u.multiplier > -lam);
    let r = apply_h(&u.field, u.multiplier, 1.0, 3.0);
    assert!(r.l2_norm() / u.field.l2_norm() < 1e-6);

    assert!(u.field.values.iter().all(|v| *v >= 0.0));
    assert!(monotonicity_violation(&u.field) < 1e-8);

    let radii: Vec<f64> = (1..=6).map(|k| k as f64).collect();
    let weak = liouville_diagnostic(&u.field, u.multiplier, 3.0, &radii).unwrap();
    assert!(weak.max_residual() < 1e-6, "{}", weak.max_residual());
}
