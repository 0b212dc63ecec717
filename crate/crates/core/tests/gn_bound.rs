//! The Gagliardo-Nirenberg quotient against the constant from the shooting
//! profile: sampled extremal, seeded random fields and a direct ascent.

use confined_nls::functional::{gn_ascent, gn_quotient};
use confined_nls::grid::{CylGrid, Field};
use confined_nls::linalg::SeparableSolver;
use confined_nls::soliton::shoot_q;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sampled_extremal_attains_the_constant() {
    let q = shoot_q(3.0, 1e-12).unwrap();
    let c = q.gn_constant();
    let err = |n: usize| {
        let g = CylGrid::new(n, n, 16.0, 16.0).unwrap();
        let u = q.u_omega_field(1.0, &g).unwrap();
        (gn_quotient(&u, 3.0).unwrap() / c - 1.0).abs()
    };
    let (coarse, fine) = (err(129), err(257));
    assert!(fine < 5e-3, "{fine}");
    assert!(coarse / fine > 3.0, "{coarse} -> {fine}");
}

#[test]
fn random_fields_stay_below_the_constant() {
    let g = CylGrid::new(65, 97, 8.0, 12.0).unwrap();
    for p in [3.0, 4.0] {
        let c = shoot_q(p, 1e-12).unwrap().gn_constant();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let u = Field::random_bumps(&g, &mut rng, 3);
            worst = worst.max(gn_quotient(&u, p).unwrap() / c);
        }
        assert!(worst <= 1.005, "p={p}: worst ratio {worst}");
        assert!(worst > 0.3, "p={p}: sampling too weak to be informative ({worst})");
    }
}

#[test]
fn ascent_from_a_gaussian_reaches_the_constant() {
    let c = shoot_q(3.0, 1e-12).unwrap().gn_constant();
    let g = CylGrid::new(97, 97, 8.0, 8.0).unwrap();
    let init = Field::from_fn(&g, |r, z| (-(r * r) / 2.0 - z * z / 4.0).exp());
    let start = gn_quotient(&init, 3.0).unwrap() / c;
    let out = gn_ascent(&init, 3.0, &SeparableSolver::new(&g), 2000, 1e-12).unwrap();
    let ratio = out.quotient / c;
    assert!(ratio > start, "{start} -> {ratio}");
    assert!((ratio - 1.0).abs() < 1e-2, "{ratio}");
    assert!((out.field.mass() - 1.0).abs() < 1e-12);
}
