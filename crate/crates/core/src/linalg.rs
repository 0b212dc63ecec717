//! Linear solvers on grid vectors.
//!
//! [`SeparableSolver`] inverts `−Δ + r² + σ` exactly by diagonalizing the
//! axial part once per grid (fast diagonalization) and running a tridiagonal
//! sweep in `r` for each axial mode. It is the preconditioner for every
//! iterative solve in the crate. [`gmres`] is restarted, right-preconditioned
//! GMRES in the grid's weighted inner product.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::grid::CylGrid;

pub struct SeparableSolver {
    grid: Arc<CylGrid>,
    /// `W_z^{1/2} Q`, columns are axial modes.
    forward: DMatrix<f64>,
    /// `Qᵀ W_z^{-1/2}`.
    backward: DMatrix<f64>,
    /// axial eigenvalues, ascending
    axial_eigs: Vec<f64>,
}

impl SeparableSolver {
    pub fn new(grid: &Arc<CylGrid>) -> Self {
        let m = grid.n_z - 1;
        let h = grid.h_z;
        let wz = &grid.axial_weights()[..m];
        // symmetric form W_z L_z, then similarity to W^{-1/2} S W^{-1/2}
        let mut t = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            let diag = if j == 0 { 2.0 / h } else { 4.0 / h };
            t[(j, j)] = diag / wz[j];
            if j + 1 < m {
                let off = -2.0 / h / (wz[j] * wz[j + 1]).sqrt();
                t[(j, j + 1)] = off;
                t[(j + 1, j)] = off;
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut q = DMatrix::<f64>::zeros(m, m);
        let mut axial_eigs = Vec::with_capacity(m);
        for (c, &k) in order.iter().enumerate() {
            axial_eigs.push(eig.eigenvalues[k]);
            let mut col = eig.eigenvectors.column(k).into_owned();
            // sign convention: positive at z = 0
            if col[0] < 0.0 {
                col.neg_mut();
            }
            q.set_column(c, &col);
        }
        let mut forward = q.clone();
        let mut backward = q.transpose();
        for j in 0..m {
            let s = wz[j].sqrt();
            forward.row_mut(j).scale_mut(s);
            backward.column_mut(j).scale_mut(1.0 / s);
        }
        Self { grid: Arc::clone(grid), forward, backward, axial_eigs }
    }

    pub fn grid(&self) -> &Arc<CylGrid> {
        &self.grid
    }

    /// Eigenvalues of the discrete `−∂_z²` (even, Dirichlet at `z_max`).
    pub fn axial_eigenvalues(&self) -> &[f64] {
        &self.axial_eigs
    }

    /// Axial mode `k` as values at the interior z nodes, unit discrete norm.
    pub fn axial_mode(&self, k: usize) -> Vec<f64> {
        let wz = self.grid.axial_weights();
        (0..self.grid.n_z - 1).map(|j| self.forward[(j, k)] / wz[j]).collect()
    }

    /// Solves `(−Δ + r² + σ) x = b` on interior nodes. The caller guarantees
    /// the shifted operator is nonsingular; Dirichlet nodes of `x` are zero.
    pub fn solve(&self, b: &[f64], sigma: f64, x: &mut [f64]) {
        let g = &self.grid;
        let (nr, nz) = (g.n_r, g.n_z);
        let (mr, mz) = (nr - 1, nz - 1);
        let mut bm = DMatrix::<f64>::zeros(mr, mz);
        for i in 0..mr {
            for j in 0..mz {
                bm[(i, j)] = b[i * nz + j];
            }
        }
        let bhat = &bm * &self.forward;
        let ih2 = 1.0 / (g.h_r * g.h_r);
        let cols: Vec<Vec<f64>> = (0..mz)
            .into_par_iter()
            .map(|k| {
                let theta = self.axial_eigs[k] + sigma;
                let rhs: Vec<f64> = (0..mr).map(|i| bhat[(i, k)]).collect();
                radial_sweep(mr, g.h_r, ih2, theta, &rhs)
            })
            .collect();
        let mut xhat = DMatrix::<f64>::zeros(mr, mz);
        for (k, col) in cols.iter().enumerate() {
            for i in 0..mr {
                xhat[(i, k)] = col[i];
            }
        }
        let xm = xhat * &self.backward;
        x.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..mr {
            for j in 0..mz {
                x[i * nz + j] = xm[(i, j)];
            }
        }
    }
}

/// Thomas algorithm for the radial operator `−∂_r² − r⁻¹∂_r + r² + θ`.
fn radial_sweep(m: usize, h: f64, ih2: f64, theta: f64, rhs: &[f64]) -> Vec<f64> {
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    for i in 0..m {
        let r = i as f64 * h;
        if i == 0 {
            diag[0] = 4.0 * ih2 + theta;
            upper[0] = -4.0 * ih2;
        } else {
            let a = 0.5 / i as f64;
            lower[i] = -(1.0 - a) * ih2;
            diag[i] = 2.0 * ih2 + r * r + theta;
            upper[i] = -(1.0 + a) * ih2;
        }
    }
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..m {
        let den = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < m { upper[i] / den } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Right-preconditioned restarted GMRES for `A x = b`, starting from `x`.
/// `dot` is the inner product defining the residual norm.
#[allow(clippy::too_many_arguments)]
pub fn gmres(
    apply: &dyn Fn(&[f64], &mut [f64]),
    precond: &dyn Fn(&[f64], &mut [f64]),
    dot: &dyn Fn(&[f64], &[f64]) -> f64,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> SolveStats {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveStats { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut total = 0;
    let mut tmp = vec![0.0; n];
    let mut z = vec![0.0; n];
    loop {
        apply(x, &mut tmp);
        let r: Vec<f64> = b.iter().zip(&tmp).map(|(b, a)| b - a).collect();
        let beta = dot(&r, &r).sqrt();
        if beta / bnorm <= rel_tol || total >= max_iter {
            return SolveStats {
                iterations: total,
                relative_residual: beta / bnorm,
                converged: beta / bnorm <= rel_tol,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut k_used = 0;
        for k in 0..restart {
            precond(&basis[k], &mut z);
            apply(&z, &mut tmp);
            let mut w = tmp.clone();
            let mut h = vec![0.0; k + 2];
            // modified Gram–Schmidt, two passes
            for _ in 0..2 {
                for (l, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    h[l] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let hn = dot(&w, &w).sqrt();
            h[k + 1] = hn;
            for l in 0..k {
                let t = cs[l] * h[l] + sn[l] * h[l + 1];
                h[l + 1] = -sn[l] * h[l] + cs[l] * h[l + 1];
                h[l] = t;
            }
            let den = (h[k] * h[k] + h[k + 1] * h[k + 1]).sqrt();
            let (c, s) = if den == 0.0 { (1.0, 0.0) } else { (h[k] / den, h[k + 1] / den) };
            cs.push(c);
            sn.push(s);
            h[k] = c * h[k] + s * h[k + 1];
            h[k + 1] = 0.0;
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(h);
            total += 1;
            k_used = k + 1;
            let res = g[k + 1].abs() / bnorm;
            if res <= rel_tol || hn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            update.iter_mut().zip(&basis[j]).for_each(|(u, v)| *u += yj * v);
        }
        precond(&update, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field;

    fn apply_shifted(grid: &CylGrid, u: &[f64], sigma: f64, out: &mut [f64]) {
        grid.neg_laplacian(u, out);
        for i in 0..grid.n_r {
            let r2 = grid.r(i).powi(2);
            for j in 0..grid.n_z {
                let k = grid.idx(i, j);
                if grid.is_interior(i, j) {
                    out[k] += (r2 + sigma) * u[k];
                }
            }
        }
    }

    #[test]
    fn separable_solve_inverts_operator() {
        let g = CylGrid::new(30, 41, 5.0, 7.0).unwrap();
        let s = SeparableSolver::new(&g);
        let b = Field::from_fn(&g, |r, z| (1.0 + r) * (-(z - 1.0).powi(2)).exp()).values;
        let mut x = vec![0.0; g.len()];
        s.solve(&b, 0.3, &mut x);
        let mut back = vec![0.0; g.len()];
        apply_shifted(&g, &x, 0.3, &mut back);
        let err: f64 = back.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn axial_spectrum_matches_closed_form() {
        // even extension + Dirichlet at z_max: θ_k = 4/h² sin²((2k+1)π h / (4 z_max))
        let g = CylGrid::new(10, 25, 2.0, 3.0).unwrap();
        let s = SeparableSolver::new(&g);
        for (k, th) in s.axial_eigenvalues().iter().enumerate() {
            let arg = (2 * k + 1) as f64 * std::f64::consts::PI * g.h_z / (4.0 * g.z_max);
            let exact = 4.0 / (g.h_z * g.h_z) * arg.sin().powi(2);
            assert!((th - exact).abs() < 1e-9 * exact.max(1.0), "{k}: {th} vs {exact}");
        }
    }

    #[test]
    fn gmres_solves_indefinite_shift() {
        let g = CylGrid::new(24, 24, 4.0, 4.0).unwrap();
        let s = SeparableSolver::new(&g);
        let pot = Field::from_fn(&g, |r, z| 3.0 * (-(r * r + z * z)).exp()).values;
        let gg = Arc::clone(&g);
        let apply = move |u: &[f64], out: &mut [f64]| {
            apply_shifted(&gg, u, 0.0, out);
            for k in 0..u.len() {
                out[k] -= pot[k] * u[k];
            }
        };
        let prec = |v: &[f64], out: &mut [f64]| s.solve(v, 0.0, out);
        let dot = |a: &[f64], b: &[f64]| g.dot(a, b);
        let b = Field::from_fn(&g, |r, z| (-(r * r) - z).exp()).values;
        let mut x = vec![0.0; g.len()];
        let st = gmres(&apply, &prec, &dot, &b, &mut x, 1e-10, 30, 200);
        assert!(st.converged, "{st:?}");
        let mut back = vec![0.0; g.len()];
        apply(&x, &mut back);
        let r: Vec<f64> = back.iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(g.dot(&r, &r).sqrt() <= 1e-9 * g.dot(&b, &b).sqrt());
    }
}
