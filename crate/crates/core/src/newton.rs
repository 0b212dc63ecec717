//! Bordered Newton iteration for `(−Δ + V + λ)u = τ|u|^{p−1}u`,
//! `∫u² = μ`, with unknowns `(u, λ)`.
//!
//! Each step eliminates `δλ` through the Schur complement of the bordered
//! Jacobian, so two solves with `A = −Δ + V + λ − pτ|u|^{p−1}` are needed.
//! Those run through GMRES preconditioned by the exact separable inverse of
//! `−Δ + V + σ`.

use crate::error::Result;
use crate::functional::ProblemParams;
use crate::grid::{apply_h_into, Field};
use crate::linalg::{gmres, SeparableSolver};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    /// stop when the scaled residual falls below this
    pub tol: f64,
    pub max_steps: usize,
    /// relative tolerance of the inner linear solves
    pub inner_tol: f64,
    /// confinement weight (1 for the physical energy)
    pub confine_weight: f64,
    /// lower bound for the preconditioner shift (keeps `−Δ + V + σ` positive)
    pub min_precond_shift: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_steps: 40, inner_tol: 1e-3, confine_weight: 1.0, min_precond_shift: -1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub field: Field,
    pub multiplier: f64,
    pub steps: usize,
    /// `‖F‖ / (‖(−Δ+V)u‖ + |λ|‖u‖ + τ‖u^p‖)`
    pub scaled_residual: f64,
    /// `‖F‖ / ‖u‖`
    pub plugback: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// `F(u, λ)` together with the normalization of the scaled residual.
pub(crate) fn residual(u: &Field, lambda: f64, params: &ProblemParams, kappa: f64) -> (Vec<f64>, f64) {
    let g = &u.grid;
    let mut f = vec![0.0; g.len()];
    apply_h_into(g, &u.values, 0.0, 0.0, params.p, &mut f);
    if kappa != 1.0 {
        add_confinement(u, kappa - 1.0, &mut f);
    }
    let lin = g.dot(&f, &f).sqrt();
    let mut nl = vec![0.0; g.len()];
    for k in 0..g.len() {
        let v = u.values[k];
        nl[k] = params.tau * v.abs().powf(params.p - 1.0) * v;
    }
    for i in 0..g.n_r - 1 {
        for j in 0..g.n_z - 1 {
            let k = g.idx(i, j);
            f[k] += lambda * u.values[k] - nl[k];
        }
    }
    let scale = lin + lambda.abs() * u.l2_norm() + g.dot(&nl, &nl).sqrt();
    (f, scale)
}

/// Adds `c·r²u` on interior nodes.
pub(crate) fn add_confinement(u: &Field, c: f64, out: &mut [f64]) {
    let g = &u.grid;
    for i in 0..g.n_r - 1 {
        let r2 = g.r(i).powi(2);
        for j in 0..g.n_z - 1 {
            let k = g.idx(i, j);
            out[k] += c * r2 * u.values[k];
        }
    }
}

pub fn newton_polish(
    init: &Field,
    lambda0: f64,
    params: &ProblemParams,
    solver: &SeparableSolver,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let g = init.grid.clone();
    let n = g.len();
    let mu = params.mu;
    let kappa = opts.confine_weight;
    let mut u = init.clone();
    let mut lambda = lambda0;
    let mut history = Vec::new();

    let merit = |u: &Field, lambda: f64| -> (f64, f64, Vec<f64>) {
        let (f, scale) = residual(u, lambda, params, kappa);
        let fn_ = g.dot(&f, &f).sqrt();
        let m = (u.mass() - mu).abs();
        (fn_ / scale.max(f64::MIN_POSITIVE) + m / mu, fn_, f)
    };

    let (mut phi, _, mut f) = merit(&u, lambda);
    history.push(phi);
    let mut steps = 0;
    while phi > opts.tol && steps < opts.max_steps {
        steps += 1;
        let p = params.p;
        let tau = params.tau;
        let diag: Vec<f64> = u.values.iter().map(|v| p * tau * v.abs().powf(p - 1.0)).collect();
        let sigma = lambda.max(opts.min_precond_shift);
        let gg = g.clone();
        let apply = |x: &[f64], out: &mut [f64]| {
            apply_h_into(&gg, x, lambda, 0.0, p, out);
            if kappa != 1.0 {
                let xf = Field { grid: gg.clone(), values: x.to_vec() };
                add_confinement(&xf, kappa - 1.0, out);
            }
            for i in 0..gg.n_r - 1 {
                for j in 0..gg.n_z - 1 {
                    let k = gg.idx(i, j);
                    out[k] -= diag[k] * x[k];
                }
            }
        };
        let prec = |x: &[f64], out: &mut [f64]| solver.solve(x, sigma, out);
        let dot = |a: &[f64], b: &[f64]| g.dot(a, b);
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let inner = opts.inner_tol.min(phi.max(1e-12));
        let before = phi;
        let s1 = gmres(&apply, &prec, &dot, &f, &mut a, inner, 40, 400);
        let s2 = gmres(&apply, &prec, &dot, &u.values, &mut b, inner, 40, 400);
        if !(s1.converged && s2.converged) {
            log::debug!("newton: inner solves {:?} {:?}", s1, s2);
        }
        let ub = g.dot(&u.values, &b);
        let ua = g.dot(&u.values, &a);
        let m = u.mass();
        let dlambda = if ub.abs() > 0.0 { (-2.0 * ua + (m - mu)) / (2.0 * ub) } else { 0.0 };
        let du: Vec<f64> = a.iter().zip(&b).map(|(a, b)| -a - dlambda * b).collect();

        // backtracking on the merit function
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = u.clone();
            trial.values.iter_mut().zip(&du).for_each(|(v, d)| *v += t * d);
            trial.enforce_dirichlet();
            let tl = lambda + t * dlambda;
            let (tphi, _, tf) = merit(&trial, tl);
            if tphi.is_finite() && tphi < (1.0 - 1e-4 * t) * phi {
                u = trial;
                lambda = tl;
                phi = tphi;
                f = tf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        history.push(phi);
        if !accepted {
            log::debug!("newton: line search stalled at merit {phi:.3e}");
            break;
        }
        if !(s1.converged && s2.converged) && phi > 0.5 * before {
            // the inner solves hit their accuracy floor and no longer drive
            // the residual down
            log::debug!("newton: stagnated at merit {phi:.3e}");
            break;
        }
    }
    let (fvec, scale) = residual(&u, lambda, params, kappa);
    let fnorm = g.dot(&fvec, &fvec).sqrt();
    Ok(NewtonOutcome {
        plugback: fnorm / u.l2_norm(),
        scaled_residual: fnorm / scale,
        converged: phi <= opts.tol,
        field: u,
        multiplier: lambda,
        steps,
        history,
    })
}
