//! Ground state `u₁`: minimizer of the energy over `G_μ`.
//!
//! The solve runs a mass-projected, preconditioned gradient flow with
//! energy backtracking until the projected gradient is small, then polishes
//! `(u, λ)` with the bordered Newton iteration of [`crate::newton`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{evaluate, EnergyReport, ProblemParams, Region};
use crate::grid::{apply_h, CylGrid, Field};
use crate::linalg::SeparableSolver;
use crate::newton::{newton_polish, NewtonOptions};
use std::f64::consts::PI;

use crate::spectral::radial_eigenpair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Ground,
    MountainPass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_z: usize,
    pub r_max: f64,
    pub z_max: f64,
}

impl GridSpec {
    pub fn of(grid: &CylGrid) -> Self {
        Self { n_r: grid.n_r, n_z: grid.n_z, r_max: grid.r_max, z_max: grid.z_max }
    }

    pub fn build(&self) -> Result<Arc<CylGrid>> {
        CylGrid::new(self.n_r, self.n_z, self.r_max, self.z_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: ProblemParams,
    pub grid: GridSpec,
    pub flow_tol: f64,
    pub newton_tol: f64,
    /// free-form solver notes (τ schedule start, seed kind, ...)
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub field: Field,
    pub multiplier: f64,
    pub report: EnergyReport,
    /// `‖apply_h(u, λ_E, τ)‖ / ‖u‖` with `λ_E` from the energy identity
    pub grad_residual: f64,
    /// `‖apply_h(u, λ, τ)‖ / ‖u‖` with the solver's multiplier
    pub plugback: f64,
    pub iterations: usize,
    pub kind: SolutionKind,
    pub converged: bool,
    pub polished: bool,
    /// smallest eigenvalue of `−Δ + V` on the grid
    pub lambda_grid: f64,
    pub manifest: Manifest,
    /// energies of accepted flow steps
    pub energy_trace: Vec<f64>,
}

impl SolveResult {
    /// Compact record of the scalar outcome.
    pub fn record(&self) -> SolveRecord {
        SolveRecord {
            kind: self.kind,
            converged: self.converged,
            polished: self.polished,
            multiplier: self.multiplier,
            report: self.report,
            grad_residual: self.grad_residual,
            plugback: self.plugback,
            iterations: self.iterations,
            lambda_grid: self.lambda_grid,
            manifest: self.manifest.clone(),
        }
    }
}

/// Serializable part of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub kind: SolutionKind,
    pub converged: bool,
    pub polished: bool,
    pub multiplier: f64,
    pub report: EnergyReport,
    pub grad_residual: f64,
    pub plugback: f64,
    pub iterations: usize,
    pub lambda_grid: f64,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, Copy)]
pub struct GroundOptions {
    pub flow_tol: f64,
    pub newton_tol: f64,
    pub dt0: f64,
    pub max_flow_steps: usize,
    /// plug-back residual required for `converged`
    pub plugback_tol: f64,
}

impl Default for GroundOptions {
    fn default() -> Self {
        Self { flow_tol: 1e-8, newton_tol: 1e-11, dt0: 1e-2, max_flow_steps: 4000, plugback_tol: 1e-6 }
    }
}

/// Smallest eigenvalue of the discrete `−Δ + V` (separable: radial + axial).
pub fn grid_lambda(grid: &CylGrid, solver: &SeparableSolver) -> f64 {
    radial_eigenpair(grid).0 + solver.axial_eigenvalues()[0]
}

/// `A·e^{−r²/2}·e^{−(t_z z)²/2}` with `A` fixing the continuum mass to `μ`:
/// the oscillator ground state times a Gaussian of width `1/t_z` in z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableGaussian {
    pub mu: f64,
    pub t_z: f64,
}

impl SeparableGaussian {
    /// Samples `t^{3/2}w(t·)` on `grid`, normalizes it to discrete mass `μ`,
    /// and returns the relative defect of the raw discrete mass (a measure
    /// of how well the grid resolves the dilated profile).
    pub fn sample(&self, grid: &Arc<CylGrid>, t: f64) -> (Field, f64) {
        let amp = (self.mu * self.t_z / PI.powf(1.5)).sqrt() * t.powf(1.5);
        let (a, b) = (t * t, (t * self.t_z).powi(2));
        let mut f = Field::from_fn(grid, |r, z| amp * (-0.5 * (a * r * r + b * z * z)).exp());
        let drift = (f.mass() - self.mu).abs() / self.mu;
        f.normalize_to(self.mu);
        (f, drift)
    }
}

/// Starting point in `G_μ` below the level `half_level` (normally `½Λμ`):
/// the discrete radial ground mode times a Gaussian in z of width `1/t`,
/// scanning `t` downward from 1 and keeping the lowest-energy admissible
/// candidate. Using the discrete radial mode (rather than `e^{−r²/2}`)
/// matters at small mass, where the energy gain below `½Λμ` is far smaller
/// than the `O(h²)` Rayleigh-quotient error of the sampled Gaussian.
///
/// The discrete linear ground mode at mass `μ` competes as well. Its energy
/// is `½Λμ` minus the nonlinear term, so it lies below the level whenever it
/// is in `G_μ`; this covers short domains where no Gaussian fits.
pub fn initial_ground_guess(params: &ProblemParams, grid: &Arc<CylGrid>, half_level: f64) -> Result<Field> {
    let (_, radial) = radial_eigenpair(grid);
    let gaussian = scan_axial_width(params, grid, half_level, |t| radial_mode_product(grid, &radial, params.mu, t));
    let axial = SeparableSolver::new(grid).axial_mode(0);
    let mut linear = Field::zeros(grid);
    for i in 0..grid.n_r - 1 {
        for j in 0..grid.n_z - 1 {
            linear.values[grid.idx(i, j)] = radial[i] * axial[j];
        }
    }
    linear.normalize_to(params.mu);
    let le = evaluate(&linear, params);
    let linear_ok = le.g_indicator > 0.0 && le.energy < half_level;
    match gaussian {
        Ok(t) => {
            let f = radial_mode_product(grid, &radial, params.mu, t);
            if linear_ok && le.energy < evaluate(&f, params).energy {
                Ok(linear)
            } else {
                Ok(f)
            }
        }
        Err(_) if linear_ok => Ok(linear),
        Err(e) => Err(e),
    }
}

/// The separable Gaussian whose axial width [`initial_ground_guess`] would
/// pick, as a closed-form family for dilation paths.
pub fn initial_ground_seed(params: &ProblemParams, grid: &Arc<CylGrid>, half_level: f64) -> Result<SeparableGaussian> {
    let (_, radial) = radial_eigenpair(grid);
    let t = scan_axial_width(params, grid, half_level, |t| radial_mode_product(grid, &radial, params.mu, t))?;
    Ok(SeparableGaussian { mu: params.mu, t_z: t })
}

fn radial_mode_product(grid: &Arc<CylGrid>, radial: &[f64], mu: f64, t: f64) -> Field {
    let mut f = Field::zeros(grid);
    for i in 0..grid.n_r {
        for j in 0..grid.n_z {
            let z = grid.z(j) * t;
            f.values[grid.idx(i, j)] = radial[i] * (-0.5 * z * z).exp();
        }
    }
    f.enforce_dirichlet();
    f.normalize_to(mu);
    f
}

fn scan_axial_width(
    params: &ProblemParams,
    grid: &Arc<CylGrid>,
    half_level: f64,
    candidate: impl Fn(f64) -> Field,
) -> Result<f64> {
    let mut trace = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    let mut t = 1.0;
    while t >= 1e-4 {
        // the Gaussian must fit: its mass beyond z_max has to be negligible
        if grid.z_max * t >= 4.5 {
            let e = evaluate(&candidate(t), params);
            trace.push(e.energy);
            if e.g_indicator > 0.0 && e.energy < half_level && best.is_none_or(|(be, _)| e.energy < be) {
                best = Some((e.energy, t));
            }
        }
        t *= 0.8;
    }
    best.map(|(_, t)| t).ok_or_else(|| Error::CheckFailed(format!(
        "no z-dilation in [1e-4, 1] gives a point of G_mu below the level {half_level}; energy trace {trace:?}"
    )))
}

/// Minimizes the energy on `S_μ ∩ G_μ` from `init`.
pub fn solve_ground(
    params: &ProblemParams,
    init: &Field,
    solver: &SeparableSolver,
    opts: &GroundOptions,
) -> Result<SolveResult> {
    let grid = init.grid.clone();
    let lambda_grid = grid_lambda(&grid, solver);
    let mut u = init.clone();
    u.clip_negative();
    u.normalize_to(params.mu);
    let mut rep = evaluate(&u, params);
    if rep.pohozaev_region() != Region::Interior {
        return Err(Error::InvalidParameter("initial guess is not in G_mu".into()));
    }
    let mut dt = opts.dt0;
    let mut trace = vec![rep.energy];
    let mut grad = f64::INFINITY;
    let mut steps = 0;
    let mut scratch = vec![0.0; grid.len()];
    // shift floor below the axial mode spacing, so slow axial modes are not
    // damped on long domains
    let ax = solver.axial_eigenvalues();
    let floor = (0.1 * (ax[1] - ax[0])).min(1e-3);
    while steps < opts.max_flow_steps {
        let lambda = rep.multiplier;
        let r = apply_h(&u, lambda, params.tau, params.p);
        grad = r.l2_norm() / u.l2_norm();
        if grad <= opts.flow_tol {
            break;
        }
        // P = −Δ + V + s, with s pushed toward −Λ as the multiplier approaches it
        let gap = lambda + lambda_grid;
        let s = if gap > floor { lambda + gap } else { -lambda_grid + floor };
        solver.solve(&r.values, s, &mut scratch);
        let pr = Field { grid: grid.clone(), values: scratch.clone() };
        solver.solve(&u.values, s, &mut scratch);
        let pu = Field { grid: grid.clone(), values: scratch.clone() };
        let c = grid.dot(&u.values, &pr.values) / grid.dot(&u.values, &pu.values);
        let mut dir = pr;
        dir.axpy(-c, &pu);

        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = u.clone();
            trial.axpy(-dt, &dir);
            trial.clip_negative();
            trial.normalize_to(params.mu);
            let te = evaluate(&trial, params);
            if te.energy < rep.energy {
                u = trial;
                rep = te;
                dt = (dt * 1.2).min(1.0);
                accepted = true;
                break;
            }
            dt *= 0.5;
        }
        steps += 1;
        if !accepted {
            // no descent available at machine precision: the flow has converged
            break;
        }
        trace.push(rep.energy);
        if rep.g_indicator <= 0.0 {
            return Err(Error::LeftPohozaevSet { iteration: steps, indicator: rep.g_indicator, energy_trace: trace });
        }
    }

    let nopts = NewtonOptions {
        tol: opts.newton_tol,
        min_precond_shift: -lambda_grid + 1e-9,
        ..NewtonOptions::default()
    };
    let newton = newton_polish(&u, rep.multiplier, params, solver, &nopts)?;
    let flow_u = u;
    let polished_ok = newton.plugback < grad.max(opts.plugback_tol)
        && newton.field.values.iter().all(|v| *v > -1e-8 * params.mu.sqrt());
    let (field, multiplier, polished) = if polished_ok {
        (newton.field, newton.multiplier, true)
    } else {
        log::warn!("solve_ground: Newton polish rejected (plug-back {:.3e})", newton.plugback);
        (flow_u, rep.multiplier, false)
    };
    finish(params, field, multiplier, steps + newton.steps, polished, lambda_grid, SolutionKind::Ground, opts, trace)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish(
    params: &ProblemParams,
    field: Field,
    multiplier: f64,
    iterations: usize,
    polished: bool,
    lambda_grid: f64,
    kind: SolutionKind,
    opts: &GroundOptions,
    energy_trace: Vec<f64>,
) -> Result<SolveResult> {
    let report = evaluate(&field, params);
    let grad_residual = apply_h(&field, report.multiplier, params.tau, params.p).l2_norm() / field.l2_norm();
    let plugback = apply_h(&field, multiplier, params.tau, params.p).l2_norm() / field.l2_norm();
    let converged = plugback <= opts.plugback_tol && report.g_indicator > 0.0;
    Ok(SolveResult {
        manifest: Manifest {
            params: *params,
            grid: GridSpec::of(&field.grid),
            flow_tol: opts.flow_tol,
            newton_tol: opts.newton_tol,
            notes: Vec::new(),
        },
        field,
        multiplier,
        report,
        grad_residual,
        plugback,
        iterations,
        kind,
        converged,
        polished,
        lambda_grid,
        energy_trace,
    })
}

/// Largest violation of "non-negative and non-increasing in r and in |z|
/// along grid lines", relative to the maximum value.
pub fn monotonicity_violation(field: &Field) -> f64 {
    let g = &field.grid;
    let max = field.values.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..g.n_r {
        for j in 0..g.n_z {
            let v = field.at(i, j);
            worst = worst.max(-v);
            if i + 1 < g.n_r {
                worst = worst.max(field.at(i + 1, j) - v);
            }
            if j + 1 < g.n_z {
                worst = worst.max(field.at(i, j + 1) - v);
            }
        }
    }
    worst / max
}

/// Richardson-extrapolated level from energies on successively refined grids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub energies: Vec<f64>,
    pub spacings: Vec<f64>,
    pub value: f64,
    pub error_bar: f64,
    /// `(E_k − E_{k−1})` for consecutive grids
    pub deltas: Vec<f64>,
    pub observed_order: f64,
    pub monotone: bool,
}

/// Extrapolates `E(h) = c + a·h^q` from the last three entries.
pub fn richardson(energies: &[f64], spacings: &[f64]) -> Result<LevelEstimate> {
    let n = energies.len();
    if n < 3 || spacings.len() != n {
        return Err(Error::InvalidParameter("need at least three refinement levels".into()));
    }
    let deltas: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = deltas.windows(2).all(|d| d[0] * d[1] > 0.0);
    let (d1, d2) = (deltas[n - 3], deltas[n - 2]);
    let ratio = spacings[n - 2] / spacings[n - 1];
    let order = if d2 != 0.0 && d1 / d2 > 1.0 { (d1 / d2).ln() / ratio.ln() } else { 2.0 };
    let factor = ratio.powf(order) - 1.0;
    let correction = d2 / factor;
    Ok(LevelEstimate {
        energies: energies.to_vec(),
        spacings: spacings.to_vec(),
        value: energies[n - 1] + correction,
        error_bar: correction.abs().max((d2 / (ratio * ratio - 1.0)).abs()),
        deltas,
        observed_order: order,
        monotone,
    })
}

/// `c_μ` from [`solve_ground`] on a refinement sequence of grids.
pub fn c_mu_estimate(
    params: &ProblemParams,
    grids: &[Arc<CylGrid>],
    half_level: f64,
    opts: &GroundOptions,
) -> Result<(LevelEstimate, Vec<SolveResult>)> {
    let mut results = Vec::new();
    for g in grids {
        let solver = SeparableSolver::new(g);
        let init = initial_ground_guess(params, g, half_level)?;
        results.push(solve_ground(params, &init, &solver, opts)?);
    }
    let energies: Vec<f64> = results.iter().map(|r| r.report.energy).collect();
    let spacings: Vec<f64> = grids.iter().map(|g| g.h_r.max(g.h_z)).collect();
    let est = richardson(&energies, &spacings)?;
    if !est.monotone {
        log::warn!("c_mu_estimate: non-monotone refinement sequence {:?}", est.deltas);
    }
    Ok((est, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_recovers_quadratic_model() {
        let hs = [0.4, 0.2, 0.1];
        let es: Vec<f64> = hs.iter().map(|h| 1.5 + 0.7 * h * h).collect();
        let est = richardson(&es, &hs).unwrap();
        assert!((est.value - 1.5).abs() < 1e-12);
        assert!((est.observed_order - 2.0).abs() < 1e-9);
        assert!(est.monotone);
    }

    #[test]
    fn guess_is_admissible() {
        let g = CylGrid::new(48, 192, 6.0, 200.0).unwrap();
        let params = ProblemParams::new(3.0, 1.0).unwrap();
        let half = 0.5 * grid_lambda(&g, &SeparableSolver::new(&g)) * params.mu;
        let w = initial_ground_guess(&params, &g, half).unwrap();
        let e = evaluate(&w, &params);
        assert!((e.mass - 1.0).abs() < 1e-10);
        assert!(e.energy < half);
        assert!(e.g_indicator > 0.0);
    }
}
