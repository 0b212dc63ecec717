//! Scalar functionals on fields and the closed-form constants built from
//! `Λ₀` and the Gagliardo–Nirenberg constant `C_{p+1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{apply_h, Field};
use crate::linalg::SeparableSolver;

/// Exponent, mass and nonlinearity weight of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub p: f64,
    pub mu: f64,
    pub tau: f64,
}

impl ProblemParams {
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        Self::with_tau(p, mu, 1.0)
    }

    pub fn with_tau(p: f64, mu: f64, tau: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mu}")));
        }
        if !(0.5..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must lie in [1/2, 1], got {tau}")));
        }
        Ok(Self { p, mu, tau })
    }

    /// `(3p − 3)/(2p + 2)`, the Pohozaev weight of the nonlinear term.
    pub fn pohozaev_weight(&self) -> f64 {
        pohozaev_weight(self.p)
    }
}

pub fn check_exponent(p: f64) -> Result<()> {
    if !(p > 7.0 / 3.0 && p < 5.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent p must lie in (7/3, 5), got {p}"
        )));
    }
    Ok(())
}

pub fn pohozaev_weight(p: f64) -> f64 {
    (3.0 * p - 3.0) / (2.0 * p + 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub mass: f64,
    pub kinetic: f64,
    pub confine: f64,
    pub nonlin: f64,
    pub energy: f64,
    pub pohozaev_residual: f64,
    pub g_indicator: f64,
    pub multiplier: f64,
}

impl EnergyReport {
    /// `|pohozaev_residual| / kinetic`.
    pub fn relative_pohozaev(&self) -> f64 {
        if self.kinetic > 0.0 {
            self.pohozaev_residual.abs() / self.kinetic
        } else {
            0.0
        }
    }

    /// Membership in `G_μ` with the boundary band `±1e-8·kinetic`.
    pub fn pohozaev_region(&self) -> Region {
        let band = 1e-8 * self.kinetic;
        if self.g_indicator > band {
            Region::Interior
        } else if self.g_indicator < -band {
            Region::Exterior
        } else {
            Region::Boundary
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Interior,
    Boundary,
    Exterior,
}

/// All terms of `E_τ(u) = ½∫|∇u|² + ½∫V u² − τ/(p+1)∫|u|^{p+1}` plus the
/// Pohozaev residual, the `G_μ` indicator and the energy-identity multiplier.
/// A zero field yields an all-zero report and a logged degeneracy.
pub fn evaluate(field: &Field, params: &ProblemParams) -> EnergyReport {
    evaluate_weighted(field, params, 1.0)
}

/// As [`evaluate`] with the confinement scaled by `confine_weight`
/// (the rescaled energy uses `μ^{(4p−4)/(3p−7)}`).
pub fn evaluate_weighted(field: &Field, params: &ProblemParams, confine_weight: f64) -> EnergyReport {
    let p = params.p;
    let mass = field.mass();
    let kinetic = field.kinetic();
    let confine = confine_weight * field.confinement();
    let nonlin = field.lq_power(p + 1.0);
    let w = pohozaev_weight(p);
    let energy = 0.5 * kinetic + 0.5 * confine - params.tau * nonlin / (p + 1.0);
    let multiplier = if mass > 0.0 {
        (params.tau * nonlin - kinetic - confine) / mass
    } else {
        log::debug!("evaluate: zero-mass field is degenerate");
        0.0
    };
    EnergyReport {
        mass,
        kinetic,
        confine,
        nonlin,
        energy,
        pohozaev_residual: kinetic - confine - w * params.tau * nonlin,
        g_indicator: kinetic - w * nonlin,
        multiplier,
    }
}

/// Multiplier minimizing `‖apply_h(u, λ, τ)‖_{L²}`: the least-squares
/// alternative to the energy identity.
pub fn least_squares_multiplier(field: &Field, params: &ProblemParams) -> f64 {
    let r0 = apply_h(field, 0.0, params.tau, params.p);
    let m = field.mass();
    if m == 0.0 {
        return 0.0;
    }
    -field.grid.dot(&r0.values, &field.values) / m
}

/// `∫|u|^{p+1} / (‖∇u‖^{(3p−3)/2} ‖u‖^{(5−p)/2})`.
pub fn gn_quotient(field: &Field, p: f64) -> Result<f64> {
    let mass = field.mass();
    let kin = field.kinetic();
    if mass == 0.0 || kin == 0.0 {
        return Err(Error::Degenerate("GN quotient of a zero field".into()));
    }
    Ok(field.lq_power(p + 1.0) / (kin.powf((3.0 * p - 3.0) / 4.0) * mass.powf((5.0 - p) / 4.0)))
}

#[derive(Debug, Clone)]
pub struct GnAscent {
    pub field: Field,
    pub quotient: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Maximizes [`gn_quotient`] by preconditioned gradient ascent on its
/// logarithm, from `init`, independently of the shooting route.
///
/// The quotient is dilation invariant, but its discrete version grows
/// without bound as a field concentrates onto a few nodes. The ascent
/// therefore maximizes `ln Q − (ln(K/M) − ln(K₀/M₀))²`, which pins the
/// scale at that of `init` and has the same supremum in the continuum.
pub fn gn_ascent(init: &Field, p: f64, solver: &SeparableSolver, max_iters: usize, tol: f64) -> Result<GnAscent> {
    check_exponent(p)?;
    let g = init.grid.clone();
    let (a, b) = ((3.0 * p - 3.0) / 4.0, (5.0 - p) / 4.0);
    let mut u = init.clone();
    u.normalize_to(1.0);
    let k0 = u.kinetic();
    let objective = |f: &Field| -> Result<f64> { Ok(gn_quotient(f, p)?.ln() - (f.kinetic() / k0).ln().powi(2)) };
    let mut q = gn_quotient(&u, p)?;
    let mut obj = objective(&u)?;
    let mut trace = vec![q];
    let mut lap = vec![0.0; g.len()];
    let mut dir = vec![0.0; g.len()];
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let (n, k, m) = (u.lq_power(p + 1.0), u.kinetic(), u.mass());
        g.neg_laplacian(&u.values, &mut lap);
        let grad: Vec<f64> = u
            .values
            .iter()
            .zip(&lap)
            .map(|(v, l)| {
                let pin = 4.0 * (k / k0).ln() * l / k;
                (p + 1.0) * v.abs().powf(p - 1.0) * v / n - 2.0 * a * l / k - 2.0 * b * v / m - pin
            })
            .collect();
        // the operator scale of −Δ relative to the field's own frequency
        solver.solve(&grad, k / m, &mut dir);
        let mut improved = false;
        for _ in 0..40 {
            let mut trial = u.clone();
            trial.values.iter_mut().zip(&dir).for_each(|(v, d)| *v += step * d);
            trial.enforce_dirichlet();
            trial.normalize_to(1.0);
            let to = objective(&trial)?;
            if to > obj {
                let gain = to - obj;
                q = gn_quotient(&trial, p)?;
                u = trial;
                obj = to;
                step *= 1.2;
                improved = gain > tol;
                break;
            }
            step *= 0.5;
        }
        trace.push(q);
        if !improved {
            break;
        }
    }
    Ok(GnAscent { field: u, quotient: q, iterations, trace })
}

/// Constants entering the thresholds and bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub p: f64,
    pub lambda0: f64,
    pub gn_constant: f64,
    pub mu1: f64,
    pub omega1: f64,
    /// `(a, b)` with `ν_μ ≥ a·μ^{−b}`.
    pub nu_lower: (f64, f64),
}

impl Constants {
    pub fn new(p: f64, lambda0: f64, gn_constant: f64, omega1: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(lambda0 > 0.0 && gn_constant > 0.0 && omega1 > 0.0) {
            return Err(Error::InvalidParameter("constants must be positive".into()));
        }
        let mu1 = mu1_threshold(p, lambda0, gn_constant)?;
        Ok(Self { p, lambda0, gn_constant, mu1, omega1, nu_lower: nu_lower_coefficients(p, gn_constant) })
    }

    /// Re-evaluates `μ₁` and returns the relative disagreement with the stored value.
    pub fn mu1_consistency(&self) -> f64 {
        let again = mu1_threshold(self.p, self.lambda0, self.gn_constant).unwrap_or(f64::NAN);
        (again - self.mu1).abs() / self.mu1
    }

    pub fn nu_lower_bound(&self, mu: f64) -> f64 {
        self.nu_lower.0 * mu.powf(-self.nu_lower.1)
    }

    /// Upper end of the mass range where the ground-state multiplier bracket holds.
    pub fn lambda1_bracket_threshold(&self) -> f64 {
        let p = self.p;
        let base = (3.0 * p - 3.0) / (3.0 * p - 7.0) * self.lambda0;
        self.gn_constant.powf(-2.0 / (p - 1.0)) * base.powf(-(3.0 * p - 7.0) / (2.0 * p - 2.0))
    }

    /// Open interval containing the ground-state multiplier for small mass.
    pub fn lambda1_bracket(&self, mu: f64) -> (f64, f64) {
        let p = self.p;
        let base = (3.0 * p - 3.0) / (3.0 * p - 7.0) * self.lambda0;
        let upper = -self.lambda0
            * (1.0 - self.gn_constant * base.powf((3.0 * p - 7.0) / 4.0) * mu.powf((p - 1.0) / 2.0));
        (-self.lambda0, upper)
    }

    /// `½Λ₀μ`.
    pub fn half_lambda_mu(&self, mu: f64) -> f64 {
        0.5 * self.lambda0 * mu
    }
}

/// Existence threshold `μ₁` from `Λ₀` and `C_{p+1}`.
pub fn mu1_threshold(p: f64, lambda0: f64, gn_constant: f64) -> Result<f64> {
    check_exponent(p)?;
    let a = 3.0 * p - 7.0;
    let num = a.powf(a / (2.0 * p - 2.0)) * (2.0 * p + 2.0).powf(2.0 / (p - 1.0));
    let den = (3.0 * p - 3.0).powf(1.5)
        * gn_constant.powf(2.0 / (p - 1.0))
        * lambda0.powf((2.0 * p - 2.0) / a);
    Ok(num / den)
}

/// Coefficient and exponent of the lower bound
/// `ν_μ ≥ (3p−7)/(6p−6)·(C_{p+1}(3p−3)/(2p+2))^{−4/(3p−7)}·μ^{−(5−p)/(3p−7)}`.
pub fn nu_lower_coefficients(p: f64, gn_constant: f64) -> (f64, f64) {
    let a = 3.0 * p - 7.0;
    let coef = a / (6.0 * p - 6.0) * (gn_constant * pohozaev_weight(p)).powf(-4.0 / a);
    (coef, (5.0 - p) / a)
}

/// Evaluates the `ν_μ` lower bound. Past `μ₁` the value is still returned
/// but its ordering against `½Λ₀μ` is not guaranteed, which is logged.
pub fn nu_lower_bound(params: &ProblemParams, constants: &Constants) -> f64 {
    if params.mu >= constants.mu1 {
        log::warn!("nu_lower_bound: mu={} is not below mu1={}", params.mu, constants.mu1);
    }
    constants.nu_lower_bound(params.mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CylGrid;

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(2.0, 1.0).is_err());
        assert!(ProblemParams::new(5.0, 1.0).is_err());
        assert!(ProblemParams::new(3.0, 0.0).is_err());
        assert!(ProblemParams::with_tau(3.0, 1.0, 0.4).is_err());
        assert!(ProblemParams::with_tau(3.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn zero_field_reports_zero() {
        let g = CylGrid::new(16, 16, 3.0, 3.0).unwrap();
        let r = evaluate(&Field::zeros(&g), &ProblemParams::new(3.0, 1.0).unwrap());
        assert_eq!(r, EnergyReport::default());
        assert!(gn_quotient(&Field::zeros(&g), 3.0).is_err());
    }

    #[test]
    fn mu1_at_cubic_reduces() {
        let c = 0.04;
        let m = mu1_threshold(3.0, 2.0, c).unwrap();
        assert!((m - 1.0 / (3.0 * 3f64.sqrt() * c)).abs() < 1e-12 * m);
        let m2 = mu1_threshold(3.0, 2.0, 2.0 * c).unwrap();
        assert!((m2 / m - 0.5).abs() < 1e-12);
        let m5 = mu1_threshold(4.0, 2.0, c).unwrap();
        let m5b = mu1_threshold(4.0, 2.0, 2.0 * c).unwrap();
        assert!((m5b / m5 - 2f64.powf(-2.0 / 3.0)).abs() < 1e-12);
        assert!(mu1_threshold(7.0 / 3.0 + 1e-3, 2.0, c).unwrap() < 1e-20);
        assert!(mu1_threshold(2.0, 2.0, c).is_err());
    }

    #[test]
    fn nu_bound_at_cubic_reduces() {
        let c = 0.04;
        let (a, b) = nu_lower_coefficients(3.0, c);
        assert!((a - 8.0 / (27.0 * c * c)).abs() < 1e-10 * a);
        assert_eq!(b, 1.0);
    }

    #[test]
    fn nu_bound_above_half_lambda_mu_below_mu1() {
        for &p in &[2.5, 3.0, 3.7, 4.6] {
            let k = Constants::new(p, 2.0, 0.05, 1.0).unwrap();
            let mut prev = f64::INFINITY;
            for s in 1..100 {
                let mu = k.mu1 * s as f64 / 100.0;
                let nu = k.nu_lower_bound(mu);
                assert!(nu > k.half_lambda_mu(mu), "p={p} mu={mu}");
                assert!(nu < prev);
                prev = nu;
            }
            assert!(k.mu1_consistency() < 1e-12);
        }
    }

    #[test]
    fn energy_assembly_identities() {
        let g = CylGrid::new(24, 24, 4.0, 4.0).unwrap();
        let u = Field::from_fn(&g, |r, z| 0.7 * (-(r * r) / 2.0 - z * z / 3.0).exp());
        let params = ProblemParams::with_tau(3.0, 1.0, 0.75).unwrap();
        let e = evaluate(&u, &params);
        assert_eq!(e.energy, 0.5 * e.kinetic + 0.5 * e.confine - 0.75 * e.nonlin / 4.0);
        assert_eq!(e.g_indicator, e.kinetic - 0.75 * e.nonlin);
        let ls = least_squares_multiplier(&u, &params);
        assert!((ls - e.multiplier).abs() < 1e-10 * e.multiplier.abs().max(1.0));
    }
}
