//! Property tests of algebraic invariants.

use confined_nls::functional::{evaluate, mu1_threshold, pohozaev_weight, ProblemParams};
use confined_nls::grid::{t_mu_factors, CylGrid, Direction, Field};
use confined_nls::study::{aitken_limit, least_squares_slope};
use confined_nls::sum::pairwise_sum;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_is_self_adjoint(seed in any::<u64>(), nr in 8usize..24, nz in 8usize..24) {
        let g = CylGrid::new(nr, nz, 3.0, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Field::random_bumps(&g, &mut rng, 2);
        let v = Field::random_bumps(&g, &mut rng, 2);
        let (mut lu, mut lv) = (vec![0.0; g.len()], vec![0.0; g.len()]);
        g.neg_laplacian(&u.values, &mut lu);
        g.neg_laplacian(&v.values, &mut lv);
        prop_assert!(close(g.dot(&lu, &v.values), g.dot(&u.values, &lv), 1e-11));
        prop_assert!(close(g.dot(&lu, &u.values), u.kinetic(), 1e-11));
        prop_assert!(u.kinetic() >= 0.0);
    }

    #[test]
    fn energy_terms_are_homogeneous(seed in any::<u64>(), s in 0.1f64..3.0, p in 2.4f64..4.9) {
        let g = CylGrid::new(17, 17, 4.0, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Field::random_bumps(&g, &mut rng, 3);
        let mut v = u.clone();
        v.scale(s);
        let params = ProblemParams::new(p, 1.0).unwrap();
        let (a, b) = (evaluate(&u, &params), evaluate(&v, &params));
        prop_assert!(close(b.mass, s * s * a.mass, 1e-12));
        prop_assert!(close(b.kinetic, s * s * a.kinetic, 1e-12));
        prop_assert!(close(b.confine, s * s * a.confine, 1e-12));
        prop_assert!(close(b.nonlin, s.powf(p + 1.0) * a.nonlin, 1e-10));
    }

    #[test]
    fn mass_normalization_factors(p in 2.34f64..5.0, mu in 1e-3f64..50.0) {
        let (amp, len) = t_mu_factors(p, mu, Direction::Forward);
        let (ia, il) = t_mu_factors(p, mu, Direction::Inverse);
        // ∫(amp·u(len·x))² = amp² len⁻³ ∫u²
        prop_assert!(close(amp * amp / len.powi(3), 1.0 / mu, 1e-10));
        prop_assert!(close(amp * ia, 1.0, 1e-12) && close(len * il, 1.0, 1e-12));
        // the free soliton family ω^{1/(p−1)}Q(√ω x) is mapped into itself
        prop_assert!(close(amp.powf(p - 1.0), len * len, 1e-10));
    }

    #[test]
    fn threshold_decreases_with_the_spectral_floor(p in 2.4f64..4.9, l0 in 0.5f64..4.0, c in 0.05f64..2.0) {
        let w = pohozaev_weight(p);
        prop_assert!(w > 0.6 && w < 1.0);
        let a = mu1_threshold(p, l0, c).unwrap();
        let b = mu1_threshold(p, 1.1 * l0, c).unwrap();
        prop_assert!(a > 0.0 && b < a);
    }

    #[test]
    fn aitken_recovers_geometric_limits(l in -5.0f64..5.0, a in 0.1f64..3.0, q in 0.05f64..0.95) {
        let s: Vec<f64> = (0..5).map(|n| l + a * q.powi(n)).collect();
        prop_assert!(close(aitken_limit(&s).unwrap(), l, 1e-8));
    }

    #[test]
    fn slope_of_exact_power_laws(k in -3.0f64..3.0, c in 0.1f64..10.0) {
        let xs: Vec<f64> = [0.08f64, 0.04, 0.02, 0.01].iter().map(|m| m.ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (c * (k * x).exp()).ln()).collect();
        prop_assert!(close(least_squares_slope(&xs, &ys), k, 1e-10));
    }

    #[test]
    fn pairwise_sum_agrees_with_naive(xs in prop::collection::vec(-1e3f64..1e3, 0..500)) {
        let naive: f64 = xs.iter().sum();
        let bound = 1e-12 * xs.iter().map(|x| x.abs()).sum::<f64>();
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= bound + 1e-300);
    }
}
