//! Axisymmetric, z-even finite-difference discretization.
//!
//! A [`CylGrid`] covers the half-plane `(r, z) ∈ [0, r_max] × [0, z_max]` with
//! uniform nodes. A [`Field`] on it represents the 3D function
//! `u(x₁, x₂, x₃) = values(r, |x₃|)` with `r = (x₁² + x₂²)^{1/2}`, so every
//! field is axisymmetric and even in `x₃` by construction. The last radial
//! column and the last axial row are Dirichlet nodes and always hold zero.
//!
//! Quadrature weights come from a cell-centred partition of the cylinder
//! `[0, r_max] × [−z_max, z_max]`: the axis node owns the disc of radius
//! `h_r/2`, interior nodes own annuli `[r − h_r/2, r + h_r/2]`, and the
//! `z = 0` node owns `[−h_z/2, h_z/2]`. The discrete Laplacian is the
//! finite-volume operator of the same partition, which makes it symmetric in
//! the weighted inner product and reduces to `u_rr + u_r/r + u_zz` at interior
//! nodes and `2u_rr + u_zz` on the axis.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::{pchip_resample, Pchip};
use crate::sum::pairwise_sum;

/// Smallest node count accepted in either direction.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CylGrid {
    pub n_r: usize,
    pub n_z: usize,
    pub r_max: f64,
    pub z_max: f64,
    pub h_r: f64,
    pub h_z: f64,
    #[serde(skip)]
    weights: Vec<f64>,
    #[serde(skip)]
    radial_weights: Vec<f64>,
    #[serde(skip)]
    axial_weights: Vec<f64>,
}

impl CylGrid {
    /// Builds the grid. `n_r`, `n_z` count nodes including `r = 0`, `z = 0`
    /// and the Dirichlet nodes at `r_max`, `z_max`.
    pub fn new(n_r: usize, n_z: usize, r_max: f64, z_max: f64) -> Result<Arc<Self>> {
        if n_r < MIN_NODES || n_z < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes per direction, got {n_r}x{n_z}"
            )));
        }
        if !(r_max.is_finite() && z_max.is_finite() && r_max > 0.0 && z_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extents must be finite and positive, got r_max={r_max}, z_max={z_max}"
            )));
        }
        let h_r = r_max / (n_r - 1) as f64;
        let h_z = z_max / (n_z - 1) as f64;

        let radial_weights: Vec<f64> = (0..n_r)
            .map(|i| {
                let r = i as f64 * h_r;
                if i == 0 {
                    PI * h_r * h_r / 4.0
                } else if i == n_r - 1 {
                    PI * (r_max * r_max - (r_max - 0.5 * h_r).powi(2))
                } else {
                    2.0 * PI * r * h_r
                }
            })
            .collect();
        // both half-lines of z are folded onto z ≥ 0
        let axial_weights: Vec<f64> = (0..n_z)
            .map(|j| if j == 0 || j == n_z - 1 { h_z } else { 2.0 * h_z })
            .collect();
        let mut weights = Vec::with_capacity(n_r * n_z);
        for wr in &radial_weights {
            for wz in &axial_weights {
                weights.push(wr * wz);
            }
        }
        Ok(Arc::new(Self {
            n_r,
            n_z,
            r_max,
            z_max,
            h_r,
            h_z,
            weights,
            radial_weights,
            axial_weights,
        }))
    }

    /// Grid with (approximately) the requested spacing covering the given
    /// extents. Extents are kept exact; spacing is rounded down.
    pub fn with_spacing(h: f64, r_max: f64, z_max: f64) -> Result<Arc<Self>> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        // extents that are whole multiples of h must not pick up an extra
        // cell from rounding
        let cells = |ext: f64| (ext / h * (1.0 - 1e-12)).ceil() as usize;
        let (n_r, n_z) = (cells(r_max) + 1, cells(z_max) + 1);
        Self::new(n_r.max(MIN_NODES), n_z.max(MIN_NODES), r_max, z_max)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_r * self.n_z
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_z + j
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h_r
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.h_z
    }

    pub fn r_nodes(&self) -> Vec<f64> {
        (0..self.n_r).map(|i| self.r(i)).collect()
    }

    pub fn z_nodes(&self) -> Vec<f64> {
        (0..self.n_z).map(|j| self.z(j)).collect()
    }

    /// Volume weights, one per node (3D measure, both signs of z).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Planar (x₁, x₂) measure attached to each radial node.
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    /// Line measure in x₃ attached to each axial node (counts ±z).
    pub fn axial_weights(&self) -> &[f64] {
        &self.axial_weights
    }

    /// `true` for nodes carrying an unknown (not on the Dirichlet rows).
    #[inline]
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i + 1 < self.n_r && j + 1 < self.n_z
    }

    /// Weighted integral of node values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        let terms: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
        pairwise_sum(&terms)
    }

    /// Weighted inner product `∫ a b dx`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), self.len());
        assert_eq!(b.len(), self.len());
        let terms: Vec<f64> = a
            .iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| x * y * w)
            .collect();
        pairwise_sum(&terms)
    }

    /// Volume of the truncated cylinder `π r_max² · 2 z_max`.
    pub fn volume(&self) -> f64 {
        PI * self.r_max * self.r_max * 2.0 * self.z_max
    }

    /// Same extents, node counts scaled by `factor` (spacing divided by it).
    pub fn refined(&self, factor: usize) -> Result<Arc<Self>> {
        Self::new(
            (self.n_r - 1) * factor + 1,
            (self.n_z - 1) * factor + 1,
            self.r_max,
            self.z_max,
        )
    }

    /// Applies `-Δ` (finite-volume form) to `u`, writing into `out`.
    /// Dirichlet nodes of `out` are set to zero.
    pub fn neg_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let (nr, nz) = (self.n_r, self.n_z);
        let ihr2 = 1.0 / (self.h_r * self.h_r);
        let ihz2 = 1.0 / (self.h_z * self.h_z);
        for i in 0..nr {
            for j in 0..nz {
                let k = i * nz + j;
                if i + 1 == nr || j + 1 == nz {
                    out[k] = 0.0;
                    continue;
                }
                let c = u[k];
                let radial = if i == 0 {
                    4.0 * (u[k + nz] - c) * ihr2
                } else {
                    let a = 0.5 / i as f64;
                    ((1.0 + a) * (u[k + nz] - c) - (1.0 - a) * (c - u[k - nz])) * ihr2
                };
                let axial = if j == 0 {
                    2.0 * (u[k + 1] - c) * ihz2
                } else {
                    (u[k + 1] - 2.0 * c + u[k - 1]) * ihz2
                };
                out[k] = -(radial + axial);
            }
        }
    }

    /// `∫|∇u|²` assembled edge by edge; equals `⟨−Δu, u⟩` for fields that
    /// vanish on the Dirichlet nodes.
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        let (nr, nz) = (self.n_r, self.n_z);
        let mut terms = Vec::with_capacity(2 * nr * nz);
        for i in 0..nr {
            for j in 0..nz {
                let k = i * nz + j;
                if i + 1 < nr {
                    // face at r_{i+1/2}, planar measure 2π r h_r per unit length over h_r
                    let rf = (i as f64 + 0.5) * self.h_r;
                    let d = u[k + nz] - u[k];
                    terms.push(2.0 * PI * rf * d * d / self.h_r * self.axial_weights[j]);
                }
                if j + 1 < nz {
                    let d = u[k + 1] - u[k];
                    terms.push(2.0 * d * d / self.h_z * self.radial_weights[i]);
                }
            }
        }
        pairwise_sum(&terms)
    }
}

/// Grid function on a [`CylGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Arc<CylGrid>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<CylGrid>) -> Self {
        Self { grid: Arc::clone(grid), values: vec![0.0; grid.len()] }
    }

    /// Samples `f(r, z)` at every node; Dirichlet nodes are forced to zero.
    pub fn from_fn(grid: &Arc<CylGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for i in 0..grid.n_r {
            for j in 0..grid.n_z {
                if grid.is_interior(i, j) {
                    values[grid.idx(i, j)] = f(grid.r(i), grid.z(j));
                }
            }
        }
        Self { grid: Arc::clone(grid), values }
    }

    /// Sum of `bumps` random Gaussian bumps centred on the axis at
    /// `±z_k` (even in z), with random signed amplitudes and widths in
    /// `[0.3, 2]`.
    pub fn random_bumps(grid: &Arc<CylGrid>, rng: &mut impl rand::Rng, bumps: usize) -> Self {
        let params: Vec<[f64; 4]> = (0..bumps)
            .map(|_| {
                let z_span = (0.4 * grid.z_max).min(4.0);
                [rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0), rng.random_range(0.3..2.0), rng.random_range(0.0..z_span)]
            })
            .collect();
        Self::from_fn(grid, |r, z| {
            params
                .iter()
                .map(|&[c, a, b, zk]| {
                    let radial = (-0.5 * (r / a).powi(2)).exp();
                    c * radial * ((-0.5 * ((z - zk) / b).powi(2)).exp() + (-0.5 * ((z + zk) / b).powi(2)).exp())
                })
                .sum()
        })
    }

    pub fn from_values(grid: &Arc<CylGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        let mut f = Self { grid: Arc::clone(grid), values };
        f.enforce_dirichlet();
        Ok(f)
    }

    pub fn enforce_dirichlet(&mut self) {
        let g = &self.grid;
        let (nr, nz) = (g.n_r, g.n_z);
        for j in 0..nz {
            self.values[(nr - 1) * nz + j] = 0.0;
        }
        for i in 0..nr {
            self.values[i * nz + nz - 1] = 0.0;
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn mass(&self) -> f64 {
        self.grid.dot(&self.values, &self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn kinetic(&self) -> f64 {
        self.grid.dirichlet_form(&self.values)
    }

    /// `∫ (x₁² + x₂²) u²`.
    pub fn confinement(&self) -> f64 {
        let g = &self.grid;
        let mut terms = Vec::with_capacity(g.len());
        for i in 0..g.n_r {
            let r2 = g.r(i).powi(2);
            for j in 0..g.n_z {
                let k = g.idx(i, j);
                terms.push(r2 * self.values[k] * self.values[k] * g.weights()[k]);
            }
        }
        pairwise_sum(&terms)
    }

    /// `∫ |u|^q`.
    pub fn lq_power(&self, q: f64) -> f64 {
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v.abs().powf(q) * w)
            .collect();
        pairwise_sum(&terms)
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Rescales in place to the requested mass. Returns the previous mass.
    pub fn normalize_to(&mut self, mass: f64) -> f64 {
        let m = self.mass();
        if m > 0.0 {
            self.scale((mass / m).sqrt());
        }
        m
    }

    pub fn axpy(&mut self, a: f64, x: &Field) {
        assert!(Arc::ptr_eq(&self.grid, &x.grid) || *self.grid == *x.grid);
        self.values.iter_mut().zip(&x.values).for_each(|(y, x)| *y += a * x);
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn clip_negative(&mut self) {
        self.values.iter_mut().for_each(|v| {
            if *v < 0.0 {
                *v = 0.0
            }
        });
    }

    /// `‖u‖_H² = ∫|∇u|² + ∫V u² + ∫u²`.
    pub fn h_norm(&self) -> f64 {
        (self.kinetic() + self.confinement() + self.mass()).sqrt()
    }

    /// Samples `amp · u(t_r r, t_z z)` at the nodes of `target` using
    /// monotone cubic interpolation in each direction; zero outside the
    /// source grid.
    pub fn rescale_onto(&self, target: &Arc<CylGrid>, amp: f64, t_r: f64, t_z: f64) -> Field {
        let src = &self.grid;
        let src_r = src.r_nodes();
        let src_z = src.z_nodes();
        let tr: Vec<f64> = target.r_nodes().iter().map(|r| r * t_r).collect();
        let tz: Vec<f64> = target.z_nodes().iter().map(|z| z * t_z).collect();

        // pass 1: along r for every source z row
        let mut stage = vec![0.0; target.n_r * src.n_z];
        let mut column = vec![0.0; src.n_r];
        for j in 0..src.n_z {
            for i in 0..src.n_r {
                column[i] = self.values[src.idx(i, j)];
            }
            let interp = Pchip::even(&src_r, &column);
            for (it, &r) in tr.iter().enumerate() {
                stage[it * src.n_z + j] = interp.eval(r);
            }
        }
        // pass 2: along z
        let mut values = vec![0.0; target.len()];
        for it in 0..target.n_r {
            let row = &stage[it * src.n_z..(it + 1) * src.n_z];
            let out = pchip_resample(&src_z, row, &tz);
            for (jt, v) in out.into_iter().enumerate() {
                values[target.idx(it, jt)] = amp * v;
            }
        }
        let mut f = Field { grid: Arc::clone(target), values };
        f.enforce_dirichlet();
        f
    }

    pub fn resample_onto(&self, target: &Arc<CylGrid>) -> Field {
        self.rescale_onto(target, 1.0, 1.0, 1.0)
    }
}

/// `−Δu + r²u + λu − τ|u|^{p−1}u`, zero on the Dirichlet nodes.
pub fn apply_h(field: &Field, shift: f64, tau: f64, p: f64) -> Field {
    let g = &field.grid;
    let mut out = vec![0.0; g.len()];
    apply_h_into(g, &field.values, shift, tau, p, &mut out);
    Field { grid: Arc::clone(g), values: out }
}

pub(crate) fn apply_h_into(g: &CylGrid, u: &[f64], shift: f64, tau: f64, p: f64, out: &mut [f64]) {
    g.neg_laplacian(u, out);
    for i in 0..g.n_r - 1 {
        let r2 = g.r(i).powi(2);
        for j in 0..g.n_z - 1 {
            let k = g.idx(i, j);
            let v = u[k];
            let nl = if tau == 0.0 { 0.0 } else { tau * v.abs().powf(p - 1.0) * v };
            out[k] += (r2 + shift) * v - nl;
        }
    }
}

fn check_scale(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {t}")));
    }
    Ok(())
}

fn warn_mass_drift(what: &str, before: f64, after: f64) -> f64 {
    let drift = if before > 0.0 { (after - before).abs() / before } else { 0.0 };
    if drift > 1e-3 {
        log::warn!("{what}: mass drift {drift:.2e} (support under-resolved or clipped)");
    }
    drift
}

/// `t^{3/2} u(t x)`: mass-preserving 3D dilation.
pub fn dilate3(field: &Field, t: f64) -> Result<Field> {
    check_scale(t)?;
    if t == 1.0 {
        return Ok(field.clone());
    }
    let out = field.rescale_onto(&field.grid, t.powf(1.5), t, t);
    warn_mass_drift("dilate3", field.mass(), out.mass());
    Ok(out)
}

/// `t^{1/2} u(x₁, x₂, t x₃)`: mass-preserving dilation along x₃.
pub fn dilate_z(field: &Field, t: f64) -> Result<Field> {
    check_scale(t)?;
    if t == 1.0 {
        return Ok(field.clone());
    }
    let out = field.rescale_onto(&field.grid, t.sqrt(), 1.0, t);
    warn_mass_drift("dilate_z", field.mass(), out.mass());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Amplitude and length factors of the mass-normalizing scaling
/// `u ↦ μ^{2/(3p−7)} u(μ^{(p−1)/(3p−7)} x)`.
pub fn t_mu_factors(p: f64, mu: f64, direction: Direction) -> (f64, f64) {
    let d = 3.0 * p - 7.0;
    let amp = mu.powf(2.0 / d);
    let len = mu.powf((p - 1.0) / d);
    match direction {
        Direction::Forward => (amp, len),
        Direction::Inverse => (1.0 / amp, 1.0 / len),
    }
}

/// The scaling map between `S_μ` and `S_1`, sampled onto `target`.
/// Returns the mapped field and its relative mass drift from the expected
/// mass (1 forward, `μ` inverse).
pub fn t_mu_map_onto(
    field: &Field,
    p: f64,
    mu: f64,
    direction: Direction,
    target: &Arc<CylGrid>,
) -> Result<(Field, f64)> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must lie in (0, ∞), got {mu}")));
    }
    let (amp, len) = t_mu_factors(p, mu, direction);
    let out = if mu == 1.0 && Arc::ptr_eq(target, &field.grid) {
        field.clone()
    } else {
        field.rescale_onto(target, amp, len, len)
    };
    let expected = match direction {
        Direction::Forward => 1.0,
        Direction::Inverse => mu,
    };
    let drift = (out.mass() - expected).abs() / expected;
    if drift > 1e-3 {
        log::warn!("t_mu_map: mass drift {drift:.2e}");
    }
    Ok((out, drift))
}

/// [`t_mu_map_onto`] with the source grid as target.
pub fn t_mu_map(field: &Field, p: f64, mu: f64, direction: Direction) -> Result<(Field, f64)> {
    t_mu_map_onto(field, p, mu, direction, &field.grid.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_to_volume() {
        for &(nr, nz, r, z) in &[(64, 64, 8.0, 8.0), (8, 8, 1.0, 1.0), (33, 17, 3.5, 0.7)] {
            let g = CylGrid::new(nr, nz, r, z).unwrap();
            let ones = vec![1.0; g.len()];
            let rel = (g.integrate(&ones) - g.volume()).abs() / g.volume();
            assert!(rel < 1e-10, "{rel}");
            assert!(g.weights().iter().all(|w| *w >= 0.0));
            assert!(g.weights()[0] > 0.0);
        }
        let g = CylGrid::new(64, 64, 8.0, 8.0).unwrap();
        assert!((g.volume() - PI * 64.0 * 16.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_extents() {
        assert!(CylGrid::new(8, 8, 0.0, 1.0).is_err());
        assert!(CylGrid::new(8, 8, 1.0, f64::NAN).is_err());
        assert!(CylGrid::new(8, 8, f64::INFINITY, 1.0).is_err());
        assert!(CylGrid::new(7, 8, 1.0, 1.0).is_err());
    }

    #[test]
    fn deterministic_construction() {
        let a = CylGrid::new(40, 30, 5.0, 6.0).unwrap();
        let b = CylGrid::new(40, 30, 5.0, 6.0).unwrap();
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn dirichlet_form_matches_operator() {
        let g = CylGrid::new(40, 50, 5.0, 6.0).unwrap();
        let u = Field::from_fn(&g, |r, z| (-(r * r) / 3.0 - z * z / 5.0).exp() * (1.0 + 0.1 * r));
        let mut lu = vec![0.0; g.len()];
        g.neg_laplacian(&u.values, &mut lu);
        let a = g.dot(&lu, &u.values);
        let b = u.kinetic();
        assert!((a - b).abs() < 1e-12 * b, "{a} {b}");
    }

    #[test]
    fn dilation_identity_and_rejections() {
        let g = CylGrid::new(32, 32, 6.0, 6.0).unwrap();
        let u = Field::from_fn(&g, |r, z| (-(r * r + z * z)).exp());
        assert_eq!(dilate3(&u, 1.0).unwrap(), u);
        assert_eq!(dilate_z(&u, 1.0).unwrap(), u);
        assert!(dilate3(&u, 0.0).is_err());
        assert!(dilate_z(&u, -1.0).is_err());
        assert!(t_mu_map(&u, 3.0, 0.0, Direction::Forward).is_err());
    }

    #[test]
    fn t_mu_exponents_at_cubic() {
        let (a, l) = t_mu_factors(3.0, 0.25, Direction::Forward);
        assert!((a - 0.25).abs() < 1e-15 && (l - 0.25).abs() < 1e-15);
        let (a, l) = t_mu_factors(3.0, 1.0, Direction::Inverse);
        assert_eq!((a, l), (1.0, 1.0));
    }
}
