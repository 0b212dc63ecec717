//! Mountain-pass solution `u₂` and the min-max level `m_μ`.
//!
//! `u₂` is computed by bordered Newton seeded with the mass-`μ` rescaling of
//! the unit-mass soliton, continued in the nonlinearity weight `τ` up to 1.
//! Independently, paths between a point of `G_μ` and a concentrated point
//! outside it are built by dilation and relaxed with a string iteration;
//! the supremum of the energy along the relaxed path bounds `m_μ` from
//! above.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{evaluate, ProblemParams};
use crate::ground::{finish, grid_lambda, initial_ground_seed, GroundOptions, SeparableGaussian, SolutionKind, SolveResult};
use crate::grid::{apply_h, dilate3, t_mu_factors, CylGrid, Direction, Field};
use crate::linalg::SeparableSolver;
use crate::newton::{newton_polish, NewtonOptions};
use crate::soliton::SolitonProfile;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MPassConfig {
    pub n_nodes: usize,
    /// increasing list in `[1/2, 1]` ending at 1
    pub tau_schedule: Vec<f64>,
    /// minimal `‖u₂ − u₁‖_{L²}`; `None` means `1e-3·√μ`
    pub deflation_distance: Option<f64>,
    pub newton_tol: f64,
    pub flow_tol: f64,
    pub plugback_tol: f64,
}

impl Default for MPassConfig {
    fn default() -> Self {
        Self {
            n_nodes: 16,
            tau_schedule: vec![0.9, 0.95, 0.99, 1.0],
            deflation_distance: None,
            newton_tol: 1e-11,
            flow_tol: 1e-8,
            plugback_tol: 1e-6,
        }
    }
}

impl MPassConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.tau_schedule;
        if s.is_empty() || *s.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter("tau schedule must end at 1".into()));
        }
        if s.iter().any(|t| !(0.5..=1.0).contains(t)) || s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("tau schedule must increase inside [1/2, 1]".into()));
        }
        Ok(())
    }

    pub fn deflation_distance(&self, mu: f64) -> f64 {
        self.deflation_distance.unwrap_or(1e-3 * mu.sqrt())
    }
}

/// Length scale of the mountain-pass core, `μ^{(p−1)/(3p−7)}/√ω₁`.
pub fn core_length(p: f64, mu: f64, omega1: f64) -> f64 {
    mu.powf((p - 1.0) / (3.0 * p - 7.0)) / omega1.sqrt()
}

/// Square grid sized to the mountain-pass core: extent `span` core lengths.
pub fn mountain_pass_grid(params: &ProblemParams, profile: &SolitonProfile, n: usize, span: f64) -> Result<Arc<CylGrid>> {
    let ext = span * core_length(params.p, params.mu, profile.omega1());
    CylGrid::new(n, n, ext, ext)
}

/// `T_μ^{-1} u_{ω₁}`, sampled analytically on `grid`.
pub fn soliton_seed(params: &ProblemParams, profile: &SolitonProfile, grid: &Arc<CylGrid>) -> Field {
    let p = params.p;
    let w1 = profile.omega1();
    let (amp, len) = t_mu_factors(p, params.mu, Direction::Inverse);
    let a1 = w1.powf(1.0 / (p - 1.0));
    let k1 = w1.sqrt();
    Field::from_fn(grid, |r, z| {
        let rho = (r * r + z * z).sqrt() * len;
        amp * a1 * profile.eval(k1 * rho)
    })
}

/// `L²` and `H` distances between fields that may live on different grids.
/// The field on the larger domain is resampled onto the smaller one for the
/// cross terms.
pub fn field_distance(a: &Field, b: &Field) -> (f64, f64) {
    let same = Arc::ptr_eq(&a.grid, &b.grid) || *a.grid == *b.grid;
    if same {
        let d = a.sub(b);
        return (d.l2_norm(), d.h_norm());
    }
    let (small, large) = if a.grid.r_max * a.grid.z_max <= b.grid.r_max * b.grid.z_max { (a, b) } else { (b, a) };
    let lr = large.resample_onto(&small.grid);
    let g = &small.grid;
    let cross_l2 = g.dot(&lr.values, &small.values);
    let plus = {
        let mut s = lr.clone();
        s.axpy(1.0, small);
        s
    };
    let minus = lr.sub(small);
    let cross_k = 0.25 * (plus.kinetic() - minus.kinetic());
    let cross_v = 0.25 * (plus.confinement() - minus.confinement());
    let l2sq = large.mass() + small.mass() - 2.0 * cross_l2;
    let hsq = l2sq + large.kinetic() + small.kinetic() - 2.0 * cross_k + large.confinement()
        + small.confinement()
        - 2.0 * cross_v;
    (l2sq.max(0.0).sqrt(), hsq.max(0.0).sqrt())
}

/// Mountain-pass critical point by seeded Newton with `τ` continuation.
///
/// `half_level` is `½Λμ` for the comparison (normally with the `Λ` measured
/// on the ground-state grid); `u1`, when given, is checked for distinctness.
pub fn solve_mountain_pass(
    params: &ProblemParams,
    grid: &Arc<CylGrid>,
    profile: &SolitonProfile,
    config: &MPassConfig,
    half_level: f64,
    u1: Option<&SolveResult>,
) -> Result<SolveResult> {
    config.validate()?;
    let solver = SeparableSolver::new(grid);
    let seed = soliton_seed(params, profile, grid);
    let seed_mass_error = (seed.mass() - params.mu).abs() / params.mu;
    let mut u = seed;
    u.normalize_to(params.mu);
    let mut lambda = profile.omega_for_mass(params.mu)?;

    let lambda_grid = grid_lambda(grid, &solver);
    let nopts = NewtonOptions { tol: config.newton_tol, min_precond_shift: -lambda_grid + 1e-9, ..NewtonOptions::default() };
    let attempt = |u: &Field, lambda: f64, tau: f64| -> Result<Option<(Field, f64, usize)>> {
        let pt = ProblemParams { tau, ..*params };
        let out = newton_polish(u, lambda, &pt, &solver, &nopts)?;
        let ok = out.plugback <= config.plugback_tol && out.field.values.iter().all(|v| v.is_finite());
        Ok(ok.then_some((out.field, out.multiplier, out.steps)))
    };
    let mut tau = config.tau_schedule[0];
    let mut steps = 0;
    let mut bisections = 0;
    match attempt(&u, lambda, tau)? {
        Some((f, l, s)) => {
            u = f;
            lambda = l;
            steps += s;
        }
        None => {
            return Err(Error::NoConvergence { what: format!("mountain-pass Newton at tau={tau}"), iterations: nopts.max_steps, residual: f64::NAN });
        }
    }
    for &next in &config.tau_schedule[1..] {
        let mut h = next - tau;
        while tau < next {
            let target = (tau + h).min(next);
            match attempt(&u, lambda, target)? {
                Some((f, l, s)) => {
                    u = f;
                    lambda = l;
                    steps += s;
                    tau = target;
                }
                None => {
                    bisections += 1;
                    h *= 0.5;
                    if h < 1e-4 {
                        return Err(Error::NoConvergence { what: format!("mountain-pass continuation at tau={target}"), iterations: steps, residual: f64::NAN });
                    }
                }
            }
        }
    }

    let opts = GroundOptions { newton_tol: config.newton_tol, flow_tol: config.flow_tol, plugback_tol: config.plugback_tol, ..GroundOptions::default() };
    let mut res = finish(params, u, lambda, steps, true, lambda_grid, SolutionKind::MountainPass, &opts, Vec::new())?;
    res.manifest.notes.push(format!("tau_schedule={:?}", config.tau_schedule));
    res.manifest.notes.push(format!("seed_mass_error={seed_mass_error:.3e}"));
    res.manifest.notes.push(format!("tau_bisections={bisections}"));
    if res.report.energy <= half_level {
        return Err(Error::CheckFailed(format!(
            "mountain-pass candidate collapsed onto the ground branch: E={} <= {half_level}",
            res.report.energy
        )));
    }
    if let Some(u1) = u1 {
        let (d, _) = field_distance(&res.field, &u1.field);
        let need = config.deflation_distance(params.mu);
        if d < need {
            return Err(Error::CheckFailed(format!("u2 within {d:.3e} of u1 (need {need:.3e})")));
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistinctnessReport {
    pub l2_distance: f64,
    pub h_distance: f64,
    pub energy_ground: f64,
    pub energy_mpass: f64,
    pub half_level: f64,
    pub multiplier_ground: f64,
    pub multiplier_mpass: f64,
    pub lambda_domain: f64,
    pub ordered: bool,
    pub multipliers_above_floor: bool,
}

/// Reports distances and the ordering `E(u₁) < ½Λμ < E(u₂)`; an ordering
/// violation is an error.
pub fn distinctness_check(u1: &SolveResult, u2: &SolveResult, half_level: f64, lambda_domain: f64) -> Result<DistinctnessReport> {
    let (l2, h) = field_distance(&u1.field, &u2.field);
    let rep = DistinctnessReport {
        l2_distance: l2,
        h_distance: h,
        energy_ground: u1.report.energy,
        energy_mpass: u2.report.energy,
        half_level,
        multiplier_ground: u1.multiplier,
        multiplier_mpass: u2.multiplier,
        lambda_domain,
        ordered: u1.report.energy < half_level && half_level < u2.report.energy,
        multipliers_above_floor: u1.multiplier > -lambda_domain && u2.multiplier > -lambda_domain,
    };
    if !rep.ordered {
        return Err(Error::CheckFailed(format!(
            "level ordering violated: E(u1)={} half={} E(u2)={}",
            rep.energy_ground, half_level, rep.energy_mpass
        )));
    }
    Ok(rep)
}

/// Discrete path on `S_μ`.
#[derive(Debug, Clone)]
pub struct Path {
    pub nodes: Vec<Field>,
    pub node_energies: Vec<f64>,
    pub indicators: Vec<f64>,
    pub max_index: usize,
}

impl Path {
    pub fn from_nodes(nodes: Vec<Field>, params: &ProblemParams) -> Self {
        let reps: Vec<_> = nodes.par_iter().map(|n| evaluate(n, params)).collect();
        let node_energies: Vec<f64> = reps.iter().map(|r| r.energy).collect();
        let indicators = reps.iter().map(|r| r.g_indicator).collect();
        let max_index = argmax(&node_energies);
        Self { nodes, node_energies, indicators, max_index }
    }

    pub fn max_energy(&self) -> f64 {
        self.node_energies[self.max_index]
    }

    /// Number of sign changes of the `G_μ` indicator along the nodes.
    pub fn indicator_sign_changes(&self) -> usize {
        self.indicators.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
    }

    /// Supremum of the energy along the continuous path obtained by joining
    /// consecutive nodes with mass-normalized chords, sampled with `sub`
    /// points per segment and refined by golden-section search around the
    /// best sample.
    pub fn continuous_sup(&self, params: &ProblemParams, sub: usize) -> f64 {
        let mu = params.mu;
        let chord = |a: &Field, b: &Field, s: f64| -> f64 {
            let mut f = a.clone();
            f.scale(1.0 - s);
            f.axpy(s, b);
            f.normalize_to(mu);
            evaluate(&f, params).energy
        };
        let best: Vec<f64> = (0..self.nodes.len() - 1)
            .into_par_iter()
            .map(|k| {
                let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
                let samples: Vec<f64> = (0..=sub).map(|i| chord(a, b, i as f64 / sub as f64)).collect();
                let i = argmax(&samples);
                let mut lo = (i as f64 - 1.0).max(0.0) / sub as f64;
                let mut hi = (i as f64 + 1.0).min(sub as f64) / sub as f64;
                let gr = 0.5 * (5f64.sqrt() - 1.0);
                let mut best = samples[i];
                for _ in 0..30 {
                    let x1 = hi - gr * (hi - lo);
                    let x2 = lo + gr * (hi - lo);
                    let (f1, f2) = (chord(a, b, x1), chord(a, b, x2));
                    best = best.max(f1).max(f2);
                    if f1 > f2 {
                        hi = x2;
                    } else {
                        lo = x1;
                    }
                }
                best
            })
            .collect();
        best.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Two-column `(s, E)` listing with `s` the normalized node index.
    pub fn energy_profile(&self) -> Vec<(f64, f64)> {
        let n = self.nodes.len();
        self.node_energies.iter().enumerate().map(|(k, e)| (k as f64 / (n - 1) as f64, *e)).collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut k = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[k] {
            k = i;
        }
    }
    k
}

/// Path endpoints together with the dilation family joining them.
#[derive(Debug, Clone)]
pub struct Endpoints {
    pub w0: Field,
    pub w1: Field,
    pub seed: SeparableGaussian,
    /// dilation factor with `w₁ = t^{3/2} w₀(t·)`
    pub t_end: f64,
    /// whether `E(w₁) < 0` was reached within the grid's resolution
    pub negative_energy: bool,
}

/// Endpoints `w₀ ∈ G_μ` (the closed-form Gaussian of the ground-state guess) and `w₁ = w₀` dilated by
/// the smallest factor `t > 1` of a geometric scan with `w₁ ∉ G_μ` and
/// `E(w₁) < 0`. The dilation is sampled from the closed form of `w₀`; the
/// scan stops once the grid no longer resolves the dilated profile (raw
/// discrete mass off by more than [`DILATION_DEFECT_CAP`]). An elongated `w₀` may need more
/// dilation than the grid resolves before its energy turns negative; the
/// scan then settles for the largest resolved `t` with `w₁ ∉ G_μ` and
/// `E(w₁) < half_level`, which is all the mountain-pass geometry needs.
pub fn make_endpoints(params: &ProblemParams, grid: &Arc<CylGrid>, half_level: f64) -> Result<Endpoints> {
    let seed = initial_ground_seed(params, grid, half_level)?;
    endpoints_from_seed(params, grid, seed, half_level)
}

/// Largest raw quadrature defect of a sampled dilation accepted as resolved.
pub const DILATION_DEFECT_CAP: f64 = 1e-2;

/// [`make_endpoints`] starting from an arbitrary separable Gaussian, which
/// must lie in `G_μ` on `grid`.
pub fn endpoints_from_seed(params: &ProblemParams, grid: &Arc<CylGrid>, seed: SeparableGaussian, half_level: f64) -> Result<Endpoints> {
    let (w0, _) = seed.sample(grid, 1.0);
    if evaluate(&w0, params).g_indicator <= 0.0 {
        return Err(Error::InvalidParameter("path seed is not in G_mu".into()));
    }
    let mut t: f64 = 1.0;
    let mut fallback = None;
    loop {
        t *= 1.05;
        let (w, drift) = seed.sample(grid, t);
        if drift > DILATION_DEFECT_CAP {
            return match fallback {
                Some((w1, t_end)) => {
                    log::info!("make_endpoints: E(w1) < 0 not resolved; using t={t_end:.3} with E(w1) below the half level");
                    Ok(Endpoints { w0, w1, seed, t_end, negative_energy: false })
                }
                None => Err(Error::CheckFailed(format!(
                    "dilation factor {t:.3} under-resolved (mass defect {drift:.2e}) before leaving G_mu below the half level"
                ))),
            };
        }
        let e = evaluate(&w, params);
        if e.g_indicator < 0.0 && e.energy < 0.0 {
            return Ok(Endpoints { w0, w1: w, seed, t_end: t, negative_energy: true });
        }
        if e.g_indicator < 0.0 && e.energy < half_level {
            fallback = Some((w, t));
        }
    }
}

impl Endpoints {
    /// Nodes `t_k^{3/2} w₀(t_k·)` with `t_k` geometric from 1 to `t_end`.
    pub fn dilation_path(&self, n_nodes: usize, params: &ProblemParams) -> Result<Path> {
        if n_nodes < 2 {
            return Err(Error::InvalidParameter("a path needs at least two nodes".into()));
        }
        let grid = &self.w0.grid;
        let nodes = (0..n_nodes)
            .map(|k| self.seed.sample(grid, self.t_end.powf(k as f64 / (n_nodes - 1) as f64)).0)
            .collect();
        Ok(Path::from_nodes(nodes, params))
    }
}

/// Nodes `dilate3(w0, t_k)` (grid interpolation), `t_k` geometric from 1 to
/// `t_end`, renormalized to mass `μ`.
pub fn dilation_path(w0: &Field, t_end: f64, n_nodes: usize, params: &ProblemParams) -> Result<Path> {
    if n_nodes < 2 {
        return Err(Error::InvalidParameter("a path needs at least two nodes".into()));
    }
    let nodes: Vec<Field> = (0..n_nodes)
        .map(|k| {
            let t = t_end.powf(k as f64 / (n_nodes - 1) as f64);
            let mut f = dilate3(w0, t)?;
            f.normalize_to(params.mu);
            Ok(f)
        })
        .collect::<Result<_>>()?;
    Ok(Path::from_nodes(nodes, params))
}

#[derive(Debug, Clone)]
pub struct PathOptimization {
    pub path: Path,
    pub iterations: usize,
    pub stagnated: bool,
    /// energy supremum along the chords of the final path
    pub sup: f64,
    /// the same supremum after every iteration
    pub max_trace: Vec<f64>,
}

/// String relaxation: interior nodes take preconditioned projected-gradient
/// steps on `S_μ`, endpoints stay fixed, and each step is first tried with
/// the nodes re-spaced by normalized energy-weighted arclength, then as
/// is. The monitored quantity is
/// the energy supremum along the chords joining the nodes (the node maximum
/// alone can drop below the barrier when nodes straddle it); a step that
/// raises it is retried with half the step size.
pub fn optimize_path(path: &Path, params: &ProblemParams, solver: &SeparableSolver, iters: usize) -> Result<PathOptimization> {
    let mut cur = path.clone();
    let n = cur.nodes.len();
    let mut sup = cur.continuous_sup(params, SUP_SAMPLES);
    let mut trace = vec![sup];
    if n <= 2 {
        return Ok(PathOptimization { path: cur, iterations: 0, stagnated: false, sup, max_trace: trace });
    }
    let grid = cur.nodes[0].grid.clone();
    let lambda_grid = grid_lambda(&grid, solver);
    let mut dt = 0.2;
    let mut flat = 0;
    let mut it = 0;
    let mut stagnated = false;
    while it < iters {
        it += 1;
        let dirs: Vec<Field> = cur.nodes[1..n - 1]
            .par_iter()
            .map(|u| descent_direction(u, params, solver, lambda_grid))
            .collect();
        let mut accepted = false;
        for _ in 0..12 {
            let mut nodes = cur.nodes.clone();
            for (k, d) in dirs.iter().enumerate() {
                let node = &mut nodes[k + 1];
                node.axpy(-dt, d);
                node.clip_negative();
                node.normalize_to(params.mu);
            }
            let candidates = [respace(&nodes, params), nodes];
            for nodes in candidates {
                let trial = Path::from_nodes(nodes, params);
                let tsup = trial.continuous_sup(params, SUP_SAMPLES);
                if tsup <= sup {
                    flat = if sup - tsup < 1e-12 { flat + 1 } else { 0 };
                    cur = trial;
                    sup = tsup;
                    accepted = true;
                    break;
                }
            }
            if accepted {
                dt = (dt * 1.2).min(2.0);
                break;
            }
            dt *= 0.5;
        }
        trace.push(sup);
        if !accepted || flat >= 50 {
            stagnated = true;
            log::info!("optimize_path: stagnation after {it} iterations (sup {sup:.12e})");
            break;
        }
    }
    Ok(PathOptimization { path: cur, iterations: it, stagnated, sup, max_trace: trace })
}

/// Samples per chord used by [`Path::continuous_sup`] inside the optimizer.
pub const SUP_SAMPLES: usize = 4;


/// Preconditioned gradient of the energy on `S_μ`, tangent to the sphere.
fn descent_direction(u: &Field, params: &ProblemParams, solver: &SeparableSolver, lambda_grid: f64) -> Field {
    let g = &u.grid;
    let lambda = evaluate(u, params).multiplier;
    let r = apply_h(u, lambda, params.tau, params.p);
    let gap = lambda + lambda_grid;
    let s = if gap > 1e-3 { lambda + gap } else { -lambda_grid + 1e-3 };
    let mut pr = vec![0.0; g.len()];
    let mut pu = vec![0.0; g.len()];
    solver.solve(&r.values, s, &mut pr);
    solver.solve(&u.values, s, &mut pu);
    let c = g.dot(&u.values, &pr) / g.dot(&u.values, &pu);
    let values = pr.iter().zip(&pu).map(|(a, b)| a - c * b).collect();
    Field { grid: g.clone(), values }
}

/// Redistributes interior nodes uniformly in arclength weighted by
/// `1 + (E − E_min)/(E_max − E_min)` (denser where the energy is high).
fn respace(nodes: &[Field], params: &ProblemParams) -> Vec<Field> {
    let n = nodes.len();
    let energies: Vec<f64> = nodes.iter().map(|f| evaluate(f, params).energy).collect();
    let (emin, emax) = energies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(*e), b.max(*e)));
    let span = (emax - emin).max(f64::MIN_POSITIVE);
    let mut s = vec![0.0; n];
    for k in 1..n {
        let d = nodes[k].sub(&nodes[k - 1]).l2_norm();
        let w = 1.0 + 0.5 * ((energies[k] + energies[k - 1]) / 2.0 - emin) / span;
        s[k] = s[k - 1] + w * d;
    }
    let total = s[n - 1];
    if total == 0.0 {
        return nodes.to_vec();
    }
    let mut out = Vec::with_capacity(n);
    out.push(nodes[0].clone());
    let mut seg = 0;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 1 < n - 1 && s[seg + 1] < target {
            seg += 1;
        }
        let len = s[seg + 1] - s[seg];
        let a = if len > 0.0 { (target - s[seg]) / len } else { 0.0 };
        let mut f = nodes[seg].clone();
        f.scale(1.0 - a);
        f.axpy(a, &nodes[seg + 1]);
        f.normalize_to(params.mu);
        out.push(f);
    }
    out.push(nodes[n - 1].clone());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        let mut c = MPassConfig::default();
        assert!(c.validate().is_ok());
        c.tau_schedule = vec![0.9, 0.95];
        assert!(c.validate().is_err());
        c.tau_schedule = vec![0.4, 1.0];
        assert!(c.validate().is_err());
        c.tau_schedule = vec![0.95, 0.9, 1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn two_node_path_is_endpoints() {
        let g = CylGrid::new(40, 40, 5.0, 5.0).unwrap();
        let params = ProblemParams::new(3.0, 1.0).unwrap();
        let w0 = Field::from_fn(&g, |r, z| (-(r * r + z * z) / 2.0).exp());
        let mut w0n = w0.clone();
        w0n.normalize_to(1.0);
        let path = dilation_path(&w0n, 2.0, 2, &params).unwrap();
        assert_eq!(path.nodes.len(), 2);
        let d = path.nodes[0].sub(&w0n).l2_norm();
        assert!(d < 1e-14, "{d}");
        assert!(dilation_path(&w0n, 2.0, 1, &params).is_err());
        let seed = SeparableGaussian { mu: 1.0, t_z: 1.0 };
        let ep = Endpoints { w0: seed.sample(&g, 1.0).0, w1: seed.sample(&g, 2.0).0, seed, t_end: 2.0, negative_energy: false };
        let p2 = ep.dilation_path(2, &params).unwrap();
        assert_eq!(p2.nodes[0], ep.w0);
        assert_eq!(p2.nodes[1], ep.w1);
    }
}
