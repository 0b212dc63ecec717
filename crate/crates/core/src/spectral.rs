//! Ground eigenpair of `−Δ + x₁² + x₂²` on a truncated cylinder, the 2D
//! oscillator ground state `Ψ₀`, and the projection of a field onto the
//! `Ψ₀` mode.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{apply_h, CylGrid, Field};
use crate::linalg::SeparableSolver;

/// Shift of the inverse iteration: solves with `H − 1`.
pub const INVERSE_SHIFT: f64 = 1.0;
pub const EIGEN_TOL: f64 = 1e-10;
const MAX_INVERSE_ITERS: usize = 5000;

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalue: f64,
    /// unit mass, positive
    pub eigenfield: Field,
    /// `‖Hv − λv‖_{L²}`
    pub residual: f64,
    /// `max(r_max, z_max)` of the grid
    pub domain_extent: f64,
    pub iterations: usize,
}

/// Smallest eigenpair of the discrete `−Δ + r²` with Dirichlet outer
/// boundary, by inverse iteration on `H − 1` with exact separable solves,
/// started from the product of the radial and axial ground modes.
pub fn first_eigenpair(grid: &Arc<CylGrid>) -> Result<EigenResult> {
    first_eigenpair_with(grid, &SeparableSolver::new(grid), EIGEN_TOL)
}

pub fn first_eigenpair_with(
    grid: &Arc<CylGrid>,
    solver: &SeparableSolver,
    tol: f64,
) -> Result<EigenResult> {
    // the discrete operator is separable, so the product of the radial and
    // axial ground modes is already the eigenvector up to rounding
    let (_, radial) = radial_eigenpair(grid);
    let axial = solver.axial_mode(0);
    let mut v = Field::zeros(grid);
    for i in 0..grid.n_r - 1 {
        for j in 0..grid.n_z - 1 {
            v.values[grid.idx(i, j)] = radial[i] * axial[j];
        }
    }
    v.normalize_to(1.0);
    let mut x = vec![0.0; grid.len()];
    let mut residual = f64::INFINITY;
    let mut eigenvalue = 0.0;
    for it in 1..=MAX_INVERSE_ITERS {
        solver.solve(&v.values, -INVERSE_SHIFT, &mut x);
        v.values.copy_from_slice(&x);
        v.normalize_to(1.0);
        let hv = apply_h(&v, 0.0, 0.0, 3.0);
        eigenvalue = grid.dot(&hv.values, &v.values);
        let mut r = hv;
        r.axpy(-eigenvalue, &v);
        residual = r.l2_norm();
        if residual <= tol {
            if v.values[0] < 0.0 {
                v.scale(-1.0);
            }
            return Ok(EigenResult {
                eigenvalue,
                eigenfield: v,
                residual,
                domain_extent: grid.r_max.max(grid.z_max),
                iterations: it,
            });
        }
    }
    log::warn!("first_eigenpair: λ≈{eigenvalue}, residual {residual:.3e}");
    Err(Error::NoConvergence {
        what: "inverse iteration".into(),
        iterations: MAX_INVERSE_ITERS,
        residual,
    })
}

/// Smallest eigenpair of the discrete 2D operator `−Δ_{x₁x₂} + r²` on the
/// radial nodes of `grid` (the `x₃`-free reduction). Dense, for checks.
pub fn radial_eigenpair(grid: &CylGrid) -> (f64, Vec<f64>) {
    let m = grid.n_r - 1;
    let w = &grid.radial_weights()[..m];
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let r = grid.r(i);
        // symmetric form w_i (L u)_i = 2π[(i+½)(u_i − u_{i+1}) + (i−½)(u_i − u_{i−1})]
        let right = 2.0 * PI * (i as f64 + 0.5);
        let left = if i == 0 { 0.0 } else { 2.0 * PI * (i as f64 - 0.5) };
        t[(i, i)] = (right + left) / w[i] + r * r;
        if i + 1 < m {
            let off = -right / (w[i] * w[i + 1]).sqrt();
            t[(i, i + 1)] = off;
            t[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(t);
    let k = eig.eigenvalues.imin();
    let mut prof: Vec<f64> = (0..m).map(|i| eig.eigenvectors[(i, k)] / w[i].sqrt()).collect();
    if prof[0] < 0.0 {
        prof.iter_mut().for_each(|v| *v = -*v);
    }
    prof.push(0.0);
    (eig.eigenvalues[k], prof)
}

/// Radial-only profile `ψ(r)` on the radial nodes of a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl RadialProfile {
    /// `∫_{ℝ²} ψ² dx₁dx₂` by the grid's planar quadrature.
    pub fn mass_2d(&self) -> f64 {
        self.power_2d(2.0)
    }

    /// `∫_{ℝ²} |ψ|^q`.
    pub fn power_2d(&self, q: f64) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v.abs().powf(q) * w).sum()
    }
}

/// `Ψ₀ = c·e^{−r²/2}`, the positive ground state of the 2D oscillator
/// (eigenvalue 2), with `c ≈ π^{−1/2}` fixed by unit discrete mass.
pub fn psi0_on_grid(grid: &CylGrid) -> RadialProfile {
    let r = grid.r_nodes();
    let weights = grid.radial_weights().to_vec();
    let mut values: Vec<f64> = r.iter().map(|r| (-(r * r) / 2.0).exp()).collect();
    let m: f64 = values.iter().zip(&weights).map(|(v, w)| v * v * w).sum();
    let c = m.sqrt().recip();
    values.iter_mut().for_each(|v| *v *= c);
    RadialProfile { r, values, weights }
}

/// Analytic `π^{−1/2} e^{−r²/2}`.
pub fn psi0_exact(r: f64) -> f64 {
    (-(r * r) / 2.0).exp() / PI.sqrt()
}

#[derive(Debug, Clone)]
pub struct Phi0Projection {
    pub z: Vec<f64>,
    /// `φ₀(z) = ∫ u(x₁,x₂,z) Ψ₀(x₁,x₂) dx₁dx₂`
    pub phi: Vec<f64>,
    /// `Ψ₀ ⊗ φ₀` on the field's grid
    pub reconstruction: Field,
    /// `‖u − Ψ₀φ₀‖_H`
    pub error_h: f64,
}

impl Phi0Projection {
    /// `∫_ℝ φ₀² dx₃`.
    pub fn phi_mass(&self, grid: &CylGrid) -> f64 {
        self.phi.iter().zip(grid.axial_weights()).map(|(v, w)| v * v * w).sum()
    }
}

pub fn phi0_projection(field: &Field) -> Phi0Projection {
    phi0_projection_with(field, &psi0_on_grid(&field.grid).values)
}

/// Discrete radial ground mode of the grid, unit planar mass, positive.
pub fn radial_ground_mode(grid: &CylGrid) -> Vec<f64> {
    let (_, mut prof) = radial_eigenpair(grid);
    let m: f64 = prof.iter().zip(grid.radial_weights()).map(|(v, w)| v * v * w).sum();
    let s = m.sqrt().recip();
    prof.iter_mut().for_each(|v| *v *= s);
    prof
}

/// Projection onto an arbitrary radial profile `psi` of unit planar mass
/// (one value per radial node).
pub fn phi0_projection_with(field: &Field, psi: &[f64]) -> Phi0Projection {
    let g = &field.grid;
    let wr = g.radial_weights();
    let phi: Vec<f64> = (0..g.n_z)
        .map(|j| (0..g.n_r).map(|i| wr[i] * psi[i] * field.at(i, j)).sum())
        .collect();
    let mut rec = Field::zeros(g);
    for i in 0..g.n_r {
        for j in 0..g.n_z {
            rec.values[g.idx(i, j)] = psi[i] * phi[j];
        }
    }
    rec.enforce_dirichlet();
    let error_h = field.sub(&rec).h_norm();
    Phi0Projection { z: g.z_nodes(), phi, reconstruction: rec, error_h }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi0_unit_mass_and_eigen_relation() {
        let g = CylGrid::new(200, 8, 10.0, 1.0).unwrap();
        let psi = psi0_on_grid(&g);
        assert!((psi.mass_2d() - 1.0).abs() < 1e-12);
        assert!((psi.values[0] - psi0_exact(0.0)).abs() < 1e-3);
        // (−Δ₂ + r²)ψ = 2ψ at interior nodes, O(h²)
        let h = g.h_r;
        for i in 1..100 {
            let r = g.r(i);
            let v = &psi.values;
            let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h) + (v[i + 1] - v[i - 1]) / (2.0 * r * h);
            let hv = -lap + r * r * v[i];
            assert!((hv - 2.0 * v[i]).abs() < 5.0 * h * h * psi.values[0], "i={i}");
        }
    }

    #[test]
    fn projection_of_separable_field_is_exact() {
        let g = CylGrid::new(60, 50, 6.0, 5.0).unwrap();
        let psi = psi0_on_grid(&g);
        let gz = |z: f64| (-(z * z) / 4.0).exp() * (1.0 - z / 5.0);
        let mut u = Field::zeros(&g);
        for i in 0..g.n_r {
            for j in 0..g.n_z {
                u.values[g.idx(i, j)] = psi.values[i] * gz(g.z(j));
            }
        }
        u.enforce_dirichlet();
        let pr = phi0_projection(&u);
        for j in 0..g.n_z - 1 {
            assert!((pr.phi[j] - gz(g.z(j))).abs() < 1e-12);
        }
        assert!(pr.error_h < 1e-6);
    }

    #[test]
    fn orthogonal_mode_projects_to_zero() {
        let g = CylGrid::new(60, 50, 6.0, 5.0).unwrap();
        let psi = psi0_on_grid(&g);
        let wr = g.radial_weights();
        let mut ex: Vec<f64> = g.r_nodes().iter().map(|r| (1.0 - r * r) * (-(r * r) / 2.0).exp()).collect();
        let c: f64 = (0..g.n_r).map(|i| wr[i] * ex[i] * psi.values[i]).sum();
        ex.iter_mut().zip(&psi.values).for_each(|(e, p)| *e -= c * p);
        let mut u = Field::zeros(&g);
        for i in 0..g.n_r {
            for j in 0..g.n_z {
                u.values[g.idx(i, j)] = ex[i] * (-(g.z(j).powi(2))).exp();
            }
        }
        u.enforce_dirichlet();
        let pr = phi0_projection(&u);
        assert!(pr.phi_mass(&g).sqrt() <= 1e-6);
    }

    #[test]
    fn radial_reduction_matches_oscillator() {
        let g = CylGrid::new(256, 8, 12.0, 1.0).unwrap();
        let (lam, prof) = radial_eigenpair(&g);
        assert!((lam - 2.0).abs() < 1e-3, "{lam}");
        let wr = g.radial_weights();
        let norm: f64 = prof.iter().zip(wr).map(|(v, w)| v * v * w).sum();
        let err: f64 = (0..g.n_r)
            .map(|i| wr[i] * (prof[i] / norm.sqrt() - psi0_exact(g.r(i))).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-3, "{err}");
    }

    #[test]
    fn eigenpair_converges_and_is_positive() {
        let g = CylGrid::new(64, 64, 6.0, 6.0).unwrap();
        let e = first_eigenpair(&g).unwrap();
        assert!(e.residual <= EIGEN_TOL);
        assert!((e.eigenfield.mass() - 1.0).abs() < 1e-10);
        assert!(e.eigenfield.values.iter().all(|v| *v >= -1e-12));
        // separable: radial eigenvalue + lowest axial eigenvalue
        let (lr, _) = radial_eigenpair(&g);
        let arg = std::f64::consts::PI * g.h_z / (4.0 * g.z_max);
        let lz = 4.0 / (g.h_z * g.h_z) * arg.sin().powi(2);
        assert!((e.eigenvalue - (lr + lz)).abs() < 1e-9, "{} vs {}", e.eigenvalue, lr + lz);
    }
}
