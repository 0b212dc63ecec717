//! The free radial soliton `Q`: the positive decaying solution of
//! `−ΔQ + Q = Q^p` in ℝ³, found by shooting on `Q(0)`.
//!
//! The radial ODE `Q'' + (2/r)Q' − Q + Q^p = 0` is integrated with classical
//! RK4 on a fixed fine mesh, started from the regular series at `r = 0`. The
//! central value is bisected between undershooting trajectories (`Q'` turns
//! positive while `Q > 0`) and overshooting ones (`Q` crosses zero). Shooting
//! cannot resolve the tail below the double-precision separation point, so
//! the profile is continued past it by the exact linear tail
//! `A·e^{−r}/r`, matched in value there.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::check_exponent;
use crate::grid::{CylGrid, Field};

/// Integration step of the shooting mesh.
pub const SHOOT_STEP: f64 = 1e-3;
/// Outer radius tried by a single shot.
const SHOOT_RADIUS: f64 = 40.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolitonProfile {
    pub p: f64,
    pub q0: f64,
    /// uniform mesh spacing of `values`
    pub step: f64,
    /// `Q(k·step)` for `k = 0..`, up to `r_end`
    pub values: Vec<f64>,
    /// `Q'(k·step)`
    pub derivs: Vec<f64>,
    /// radius where the shot trajectory is replaced by the analytic tail
    pub r_match: f64,
    pub r_end: f64,
    pub mass_q: f64,
    pub kinetic_q: f64,
    pub nonlin_q: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// `Q` crossed zero: central value too large
    Crossed,
    /// `Q'` became positive while `Q > 0`: central value too small
    Turned,
}

struct Trajectory {
    q: Vec<f64>,
    dq: Vec<f64>,
    outcome: Shot,
}

fn rhs(r: f64, q: f64, dq: f64, p: f64) -> f64 {
    q - q.abs().powf(p - 1.0) * q - 2.0 * dq / r
}

fn shoot(a: f64, p: f64, h: f64) -> Trajectory {
    let n_max = (SHOOT_RADIUS / h) as usize;
    let mut q = Vec::with_capacity(n_max);
    let mut dq = Vec::with_capacity(n_max);
    let c = (a - a.powf(p)) / 6.0;
    q.push(a);
    dq.push(0.0);
    // series start one step off the axis
    let mut y = a + c * h * h;
    let mut v = 2.0 * c * h;
    q.push(y);
    dq.push(v);
    for k in 1..n_max {
        let r = k as f64 * h;
        let k1y = v;
        let k1v = rhs(r, y, v, p);
        let k2y = v + 0.5 * h * k1v;
        let k2v = rhs(r + 0.5 * h, y + 0.5 * h * k1y, k2y, p);
        let k3y = v + 0.5 * h * k2v;
        let k3v = rhs(r + 0.5 * h, y + 0.5 * h * k2y, k3y, p);
        let k4y = v + h * k3v;
        let k4v = rhs(r + h, y + h * k3y, k4y, p);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        q.push(y);
        dq.push(v);
        if y < 0.0 {
            return Trajectory { q, dq, outcome: Shot::Crossed };
        }
        if v > 0.0 {
            return Trajectory { q, dq, outcome: Shot::Turned };
        }
    }
    // neither event within the shooting radius; treat by the sign of the tail slope
    let outcome = if v < 0.0 { Shot::Crossed } else { Shot::Turned };
    Trajectory { q, dq, outcome }
}

/// Bracket `[lo, hi]` with `lo` undershooting and `hi` overshooting.
fn bracket(p: f64, h: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let mut lo = lo;
    let mut hi = hi;
    if shoot(lo, p, h).outcome != Shot::Turned {
        return Err(Error::Shooting(format!("lower bracket {lo} does not undershoot")));
    }
    let mut tries = 0;
    while shoot(hi, p, h).outcome != Shot::Crossed {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Shooting("could not find an overshooting central value".into()));
        }
    }
    Ok((lo, hi))
}

/// Shoots `Q` for exponent `p`, bisecting `Q(0)` to absolute tolerance `tol`
/// starting from the bracket `[lo, hi]`.
pub fn shoot_q_bracketed(p: f64, tol: f64, lo: f64, hi: f64) -> Result<SolitonProfile> {
    check_exponent(p)?;
    let h = SHOOT_STEP;
    let (mut lo, mut hi) = bracket(p, h, lo, hi)?;
    let mut iters = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, p, h).outcome {
            Shot::Crossed => hi = mid,
            Shot::Turned => lo = mid,
        }
        iters += 1;
        if iters > 200 {
            return Err(Error::Shooting("bisection interval exhausted".into()));
        }
    }
    let t_lo = shoot(lo, p, h);
    let t_hi = shoot(hi, p, h);
    // both bracketing shots agree with Q up to their separation point
    let n_common = t_lo.q.len().min(t_hi.q.len());
    let mut n_match = 0;
    for k in 1..n_common {
        let (a, b) = (t_lo.q[k], t_hi.q[k]);
        let scale = 0.5 * (a + b);
        if scale <= 0.0 || (a - b).abs() > 1e-6 * scale || t_lo.dq[k] >= 0.0 {
            break;
        }
        n_match = k;
    }
    // back off so that the matching point sits well inside the agreement region
    let n_match = (n_match as f64 * 0.9) as usize;
    if n_match < 10 {
        return Err(Error::Shooting("bracketing shots separate immediately".into()));
    }
    let r_match = n_match as f64 * h;
    let q_match = 0.5 * (t_lo.q[n_match] + t_hi.q[n_match]);
    let q0 = 0.5 * (lo + hi);
    if q_match > 1e-3 * q0 {
        return Err(Error::Shooting(format!(
            "tail not decayed at the matching radius {r_match:.2} (Q = {q_match:.3e})"
        )));
    }

    let mut values: Vec<f64> = (0..=n_match).map(|k| 0.5 * (t_lo.q[k] + t_hi.q[k])).collect();
    let mut derivs: Vec<f64> = (0..=n_match).map(|k| 0.5 * (t_lo.dq[k] + t_hi.dq[k])).collect();
    // linear tail A e^{-r}/r until Q < 1e-12 Q(0)
    let amp = q_match * r_match * r_match.exp();
    let mut k = n_match + 1;
    loop {
        let r = k as f64 * h;
        let q = amp * (-r).exp() / r;
        values.push(q);
        derivs.push(-q * (1.0 + 1.0 / r));
        if q < 1e-12 * q0 && k.is_multiple_of(2) {
            break;
        }
        k += 1;
    }
    let r_end = (values.len() - 1) as f64 * h;

    let radial = |f: &dyn Fn(usize) -> f64| -> f64 { 4.0 * PI * simpson(&values, h, f) };
    let mass_q = radial(&|k| (k as f64 * h).powi(2) * values[k] * values[k]);
    let kinetic_q = radial(&|k| (k as f64 * h).powi(2) * derivs[k] * derivs[k]);
    let nonlin_q = radial(&|k| (k as f64 * h).powi(2) * values[k].powf(p + 1.0));
    Ok(SolitonProfile {
        p,
        q0,
        step: h,
        values,
        derivs,
        r_match,
        r_end,
        mass_q,
        kinetic_q,
        nonlin_q,
        omega: 1.0,
    })
}

fn simpson(values: &[f64], h: f64, f: &dyn Fn(usize) -> f64) -> f64 {
    let n = values.len() - 1;
    assert!(n.is_multiple_of(2));
    let mut s = f(0) + f(n);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 * f(k) } else { 2.0 * f(k) };
    }
    s * h / 3.0
}

/// [`shoot_q_bracketed`] with the default bracket `[1 + 1e-6, 2]`
/// (expanded upward until the upper shot overshoots).
pub fn shoot_q(p: f64, tol: f64) -> Result<SolitonProfile> {
    shoot_q_bracketed(p, tol, 1.0 + 1e-6, 2.0)
}

impl SolitonProfile {
    /// `Q(r)`, cubic Hermite between mesh nodes, zero past `r_end`.
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_end {
            return 0.0;
        }
        let x = r / self.step;
        let k = x.floor() as usize;
        let s = x - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.derivs[k] * self.step, self.derivs[k + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.step)
    }

    /// Frequency whose scaled soliton `ω^{1/(p−1)}Q(√ω x)` has mass `mu`.
    pub fn omega_for_mass(&self, mu: f64) -> Result<f64> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mu}")));
        }
        let p = self.p;
        Ok((self.mass_q / mu).powf(2.0 * (p - 1.0) / (3.0 * p - 7.0)))
    }

    /// Mass of `ω^{1/(p−1)}Q(√ω x)`.
    pub fn mass_at_omega(&self, omega: f64) -> f64 {
        let p = self.p;
        omega.powf((7.0 - 3.0 * p) / (2.0 * (p - 1.0))) * self.mass_q
    }

    /// `ω₁`: the frequency of the unit-mass soliton.
    pub fn omega1(&self) -> f64 {
        self.omega_for_mass(1.0).expect("unit mass is valid")
    }

    /// `ω^{1/(p−1)} Q(√ω |x|)` sampled on the grid.
    pub fn u_omega_field(&self, omega: f64, grid: &Arc<CylGrid>) -> Result<Field> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        let amp = omega.powf(1.0 / (self.p - 1.0));
        let k = omega.sqrt();
        let f = Field::from_fn(grid, |r, z| amp * self.eval(k * (r * r + z * z).sqrt()));
        let expected = self.mass_at_omega(omega);
        let lost = (expected - f.mass()) / expected;
        if lost > 1e-3 {
            log::warn!("u_omega_field: {:.2}% of the mass falls outside the grid", 100.0 * lost);
        }
        Ok(f)
    }

    /// `C_{p+1}` from the extremal `Q`.
    pub fn gn_constant(&self) -> f64 {
        let p = self.p;
        self.nonlin_q
            / (self.kinetic_q.powf((3.0 * p - 3.0) / 4.0) * self.mass_q.powf((5.0 - p) / 4.0))
    }

    /// Free-space Pohozaev indicator `∫|∇Q|² − (3p−3)/(2p+2)∫Q^{p+1}`.
    pub fn g_indicator(&self) -> f64 {
        self.kinetic_q - crate::functional::pohozaev_weight(self.p) * self.nonlin_q
    }

    /// Two-column `r Q` text.
    pub fn write_profile<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# r Q(r)   p={} Q(0)={:.15e}", self.p, self.q0)?;
        for (r, q) in self.radii().zip(&self.values).step_by(10) {
            writeln!(out, "{r:.6e} {q:.15e}")?;
        }
        Ok(())
    }
}

/// `C_{p+1}` from a converged profile.
pub fn gn_constant_from_q(profile: &SolitonProfile) -> f64 {
    profile.gn_constant()
}
