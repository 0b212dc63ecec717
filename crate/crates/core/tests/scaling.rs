//! Dilation and mass-normalization scaling laws on sampled fields.

use confined_nls::grid::{dilate3, dilate_z, t_mu_factors, t_mu_map_onto, CylGrid, Direction, Field};
use confined_nls::soliton::shoot_q;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn isotropic_dilation_scales_each_term() {
    let g = CylGrid::new(161, 161, 10.0, 10.0).unwrap();
    let u = Field::from_fn(&g, |r, z| (-(r * r) / 2.0 - z * z / 3.0).exp());
    let p = 3.0;
    for t in [0.8, 1.25, 1.6] {
        let v = dilate3(&u, t).unwrap();
        assert!(rel(v.mass(), u.mass()) < 2e-3, "mass at t={t}");
        assert!(rel(v.kinetic(), t * t * u.kinetic()) < 5e-3, "kinetic at t={t}");
        assert!(rel(v.confinement(), u.confinement() / (t * t)) < 5e-3, "confinement at t={t}");
        let want = t.powf(1.5 * (p - 1.0)) * u.lq_power(p + 1.0);
        assert!(rel(v.lq_power(p + 1.0), want) < 5e-3, "nonlinear at t={t}");
    }
}

#[test]
fn axial_dilation_leaves_planar_terms() {
    let g = CylGrid::new(81, 241, 8.0, 24.0).unwrap();
    let u = Field::from_fn(&g, |r, z| (-(r * r) / 2.0 - z * z / 8.0).exp());
    let t = 0.5;
    let v = dilate_z(&u, t).unwrap();
    assert!(rel(v.mass(), u.mass()) < 1e-3);
    assert!(rel(v.confinement(), u.confinement()) < 1e-3);
    assert!(rel(v.lq_power(4.0), t * u.lq_power(4.0)) < 1e-3);
}

#[test]
fn mass_normalization_maps_soliton_family_onto_itself() {
    let p = 3.0;
    let q = shoot_q(p, 1e-12).unwrap();
    // frequency 16: width about a quarter, resolved on an extent-4 grid
    let mu = 0.5 * q.mass_q;
    let src = CylGrid::new(161, 161, 4.0, 4.0).unwrap();
    let u_mu = q.u_omega_field(q.omega_for_mass(mu).unwrap(), &src).unwrap();
    assert!(rel(u_mu.mass(), mu) < 2e-3, "{} vs {mu}", u_mu.mass());
    let (_, len) = t_mu_factors(p, mu, Direction::Forward);
    let dst = CylGrid::new(161, 161, 4.0 / len, 4.0 / len).unwrap();
    let (unit_mass, drift) = t_mu_map_onto(&u_mu, p, mu, Direction::Forward, &dst).unwrap();
    assert!(drift < 2e-3, "{drift}");
    let unit = q.u_omega_field(q.omega1(), &dst).unwrap();
    let d = unit_mass.sub(&unit).l2_norm();
    assert!(d < 1e-3, "{d}");
    let (back, drift) = t_mu_map_onto(&unit_mass, p, mu, Direction::Inverse, &src).unwrap();
    assert!(drift < 2e-3, "{drift}");
    assert!(back.sub(&u_mu).l2_norm() / u_mu.l2_norm() < 1e-3);
}
