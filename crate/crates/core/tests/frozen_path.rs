//! Energies along a fixed path as the nonlinearity weight varies.

use confined_nls::functional::ProblemParams;
use confined_nls::grid::CylGrid;
use confined_nls::ground::SeparableGaussian;
use confined_nls::mpass::Path;

#[test]
fn path_energies_decrease_with_the_nonlinearity_weight() {
    let g = CylGrid::new(65, 65, 8.0, 8.0).unwrap();
    let mu = 1.0;
    let seed = SeparableGaussian { mu, t_z: 0.7 };
    let nodes: Vec<_> = (0..9).map(|k| seed.sample(&g, 1.5f64.powf(k as f64 / 4.0)).0).collect();
    let at = |tau: f64| Path::from_nodes(nodes.clone(), &ProblemParams::with_tau(3.0, mu, tau).unwrap());
    let taus = [0.5, 0.7, 0.9, 1.0];
    let paths: Vec<Path> = taus.iter().map(|&t| at(t)).collect();
    for w in paths.windows(2) {
        for (a, b) in w[0].node_energies.iter().zip(&w[1].node_energies) {
            assert!(b < a, "node energy rose: {a} -> {b}");
        }
        assert!(w[1].max_energy() < w[0].max_energy());
    }
    let p0 = ProblemParams::with_tau(3.0, mu, 0.5).unwrap();
    let p1 = ProblemParams::with_tau(3.0, mu, 1.0).unwrap();
    let (s0, s1) = (paths[0].continuous_sup(&p0, 8), paths[3].continuous_sup(&p1, 8));
    assert!(s1 < s0);
    assert!(s0 >= paths[0].max_energy() - 1e-12);
}
