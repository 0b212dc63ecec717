//! Run configuration: flat `key = value` text with `[section]` headers.
//!
//! Every key has a default, so an empty file is a valid configuration. The
//! resolved configuration (file plus command-line overrides) is serialized
//! canonically and hashed; the hash is stamped on every artifact.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use confined_nls::functional::check_exponent;
use confined_nls::grid::MIN_NODES;
use confined_nls::mpass::MPassConfig;
use ini::Ini;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Mass given directly or as a fraction of the existence threshold `μ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mass {
    Absolute(f64),
    OverMu1(f64),
}

impl Mass {
    pub fn resolve(self, mu1: f64) -> f64 {
        match self {
            Mass::Absolute(m) => m,
            Mass::OverMu1(f) => f * mu1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSection {
    pub p: f64,
    pub mass: Mass,
    /// shooting tolerance on `Q(0)`
    pub shoot_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSection {
    pub n_r: usize,
    pub n_z: usize,
    /// the floor is reported at the largest extent
    pub extents: Vec<f64>,
    pub floor_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundSection {
    pub n_r: usize,
    pub n_z: usize,
    pub r_max: f64,
    pub z_max: f64,
    pub flow_tol: f64,
    pub newton_tol: f64,
    pub plugback_tol: f64,
    pub dt0: f64,
    pub max_flow_steps: usize,
    pub pohozaev_tol: f64,
    /// number of cut-off radii for the weak-form identity, evenly spaced up to `z_max`
    pub liouville_radii: usize,
    pub liouville_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MpassSection {
    /// nodes per side of the square mountain-pass grid
    pub nodes: usize,
    /// grid extent in core lengths
    pub span: f64,
    pub tau_schedule: Vec<f64>,
    pub newton_tol: f64,
    pub plugback_tol: f64,
    /// path nodes of the coarser sandwich path; 0 skips the sandwich
    pub path_nodes: usize,
    pub path_iters: usize,
    /// nodes per side of the sandwich grid
    pub path_grid: usize,
    pub sandwich_lower_slack: f64,
    pub sandwich_upper_slack: f64,
    pub sandwich_shrink: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSection {
    pub extents: Vec<f64>,
    pub spacing: f64,
    pub limit_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSection {
    pub mus: Vec<f64>,
    pub ground_n_r: usize,
    pub ground_r_max: f64,
    pub ground_n_z: usize,
    pub ground_z_widths: f64,
    pub mpass_span: f64,
    pub mpass_nodes: usize,
    pub min_core_nodes: usize,
    pub slope_tol: f64,
    pub ratio_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSection {
    pub seed: u64,
    pub random_fields: usize,
    pub bumps: usize,
    pub gn_nodes: usize,
    pub gn_extent: f64,
    pub gn_iters: usize,
    pub ascent_tol: f64,
    pub random_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub spectral: SpectralSection,
    pub ground: GroundSection,
    pub mpass: MpassSection,
    pub domain: DomainSection,
    pub sweep: SweepSection,
    pub check: CheckSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSection { p: 3.0, mass: Mass::OverMu1(0.25), shoot_tol: 1e-13 },
            spectral: SpectralSection { n_r: 256, n_z: 256, extents: vec![4.0, 6.0, 8.0, 12.0], floor_tol: 1e-3 },
            ground: GroundSection {
                n_r: 128,
                n_z: 256,
                r_max: 8.0,
                z_max: 200.0,
                flow_tol: 1e-8,
                newton_tol: 1e-11,
                plugback_tol: 1e-6,
                dt0: 1e-2,
                max_flow_steps: 4000,
                pohozaev_tol: 5e-3,
                liouville_radii: 12,
                liouville_tol: 1e-4,
            },
            mpass: MpassSection {
                nodes: 256,
                span: 16.0,
                tau_schedule: vec![0.9, 0.95, 0.99, 1.0],
                newton_tol: 1e-11,
                plugback_tol: 1e-6,
                path_nodes: 0,
                path_iters: 200,
                path_grid: 160,
                sandwich_lower_slack: 0.05,
                sandwich_upper_slack: 1e-6,
                sandwich_shrink: 1.5,
            },
            domain: DomainSection { extents: vec![6.0, 8.0, 10.0, 12.0], spacing: 0.025, limit_tol: 0.01 },
            sweep: SweepSection {
                mus: vec![0.08, 0.04, 0.02, 0.01],
                ground_n_r: 128,
                ground_r_max: 8.0,
                ground_n_z: 256,
                ground_z_widths: 14.0,
                mpass_span: 16.0,
                mpass_nodes: 256,
                min_core_nodes: 12,
                slope_tol: 0.1,
                ratio_tol: 0.1,
            },
            check: CheckSection {
                seed: 7,
                random_fields: 100,
                bumps: 3,
                gn_nodes: 128,
                gn_extent: 8.0,
                gn_iters: 2000,
                ascent_tol: 0.01,
                random_slack: 5e-3,
            },
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().with_context(|| format!("{key}: expected a number, got {v:?}"))?;
    if !x.is_finite() {
        bail!("{key}: value must be finite");
    }
    Ok(x)
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.trim().parse().with_context(|| format!("{key}: expected a non-negative integer, got {v:?}"))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s)).collect()
}

impl RunConfig {
    /// Parses configuration text; unknown sections or keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| anyhow!("config syntax: {e}"))?;
        let mut cfg = Self::default();
        let mut mass_keys = 0;
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let sec = section.ok_or_else(|| anyhow!("key {key:?} outside any section"))?;
                if sec == "problem" && (key == "mu" || key == "mu_over_mu1") {
                    mass_keys += 1;
                }
                cfg.set(sec, key, value)?;
            }
        }
        if mass_keys > 1 {
            bail!("[problem]: give either mu or mu_over_mu1, not both");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let k = format!("[{section}] {key}");
        let k = k.as_str();
        match (section, key) {
            ("problem", "p") => self.problem.p = num(k, v)?,
            ("problem", "mu") => self.problem.mass = Mass::Absolute(num(k, v)?),
            ("problem", "mu_over_mu1") => self.problem.mass = Mass::OverMu1(num(k, v)?),
            ("problem", "shoot_tol") => self.problem.shoot_tol = num(k, v)?,

            ("spectral", "n_r") => self.spectral.n_r = count(k, v)?,
            ("spectral", "n_z") => self.spectral.n_z = count(k, v)?,
            ("spectral", "extents") => self.spectral.extents = list(k, v)?,
            ("spectral", "floor_tol") => self.spectral.floor_tol = num(k, v)?,

            ("ground", "n_r") => self.ground.n_r = count(k, v)?,
            ("ground", "n_z") => self.ground.n_z = count(k, v)?,
            ("ground", "r_max") => self.ground.r_max = num(k, v)?,
            ("ground", "z_max") => self.ground.z_max = num(k, v)?,
            ("ground", "flow_tol") => self.ground.flow_tol = num(k, v)?,
            ("ground", "newton_tol") => self.ground.newton_tol = num(k, v)?,
            ("ground", "plugback_tol") => self.ground.plugback_tol = num(k, v)?,
            ("ground", "dt0") => self.ground.dt0 = num(k, v)?,
            ("ground", "max_flow_steps") => self.ground.max_flow_steps = count(k, v)?,
            ("ground", "pohozaev_tol") => self.ground.pohozaev_tol = num(k, v)?,
            ("ground", "liouville_radii") => self.ground.liouville_radii = count(k, v)?,
            ("ground", "liouville_tol") => self.ground.liouville_tol = num(k, v)?,

            ("mpass", "nodes") => self.mpass.nodes = count(k, v)?,
            ("mpass", "span") => self.mpass.span = num(k, v)?,
            ("mpass", "tau_schedule") => self.mpass.tau_schedule = list(k, v)?,
            ("mpass", "newton_tol") => self.mpass.newton_tol = num(k, v)?,
            ("mpass", "plugback_tol") => self.mpass.plugback_tol = num(k, v)?,
            ("mpass", "path_nodes") => self.mpass.path_nodes = count(k, v)?,
            ("mpass", "path_iters") => self.mpass.path_iters = count(k, v)?,
            ("mpass", "path_grid") => self.mpass.path_grid = count(k, v)?,
            ("mpass", "sandwich_lower_slack") => self.mpass.sandwich_lower_slack = num(k, v)?,
            ("mpass", "sandwich_upper_slack") => self.mpass.sandwich_upper_slack = num(k, v)?,
            ("mpass", "sandwich_shrink") => self.mpass.sandwich_shrink = num(k, v)?,

            ("domain", "extents") => self.domain.extents = list(k, v)?,
            ("domain", "spacing") => self.domain.spacing = num(k, v)?,
            ("domain", "limit_tol") => self.domain.limit_tol = num(k, v)?,

            ("sweep", "mus") => self.sweep.mus = list(k, v)?,
            ("sweep", "ground_n_r") => self.sweep.ground_n_r = count(k, v)?,
            ("sweep", "ground_r_max") => self.sweep.ground_r_max = num(k, v)?,
            ("sweep", "ground_n_z") => self.sweep.ground_n_z = count(k, v)?,
            ("sweep", "ground_z_widths") => self.sweep.ground_z_widths = num(k, v)?,
            ("sweep", "mpass_span") => self.sweep.mpass_span = num(k, v)?,
            ("sweep", "mpass_nodes") => self.sweep.mpass_nodes = count(k, v)?,
            ("sweep", "min_core_nodes") => self.sweep.min_core_nodes = count(k, v)?,
            ("sweep", "slope_tol") => self.sweep.slope_tol = num(k, v)?,
            ("sweep", "ratio_tol") => self.sweep.ratio_tol = num(k, v)?,

            ("check", "seed") => self.check.seed = v.trim().parse().with_context(|| format!("{k}: expected an integer"))?,
            ("check", "random_fields") => self.check.random_fields = count(k, v)?,
            ("check", "bumps") => self.check.bumps = count(k, v)?,
            ("check", "gn_nodes") => self.check.gn_nodes = count(k, v)?,
            ("check", "gn_extent") => self.check.gn_extent = num(k, v)?,
            ("check", "gn_iters") => self.check.gn_iters = count(k, v)?,
            ("check", "ascent_tol") => self.check.ascent_tol = num(k, v)?,
            ("check", "random_slack") => self.check.random_slack = num(k, v)?,
            _ => bail!("unknown key {k}"),
        }
        Ok(())
    }

    /// Bounds every solver relies on; runs before any computation.
    pub fn validate(&self) -> Result<()> {
        check_exponent(self.problem.p)?;
        match self.problem.mass {
            Mass::Absolute(m) | Mass::OverMu1(m) if m > 0.0 => {}
            _ => bail!("[problem] mass must be positive"),
        }
        let grids = [
            ("spectral", self.spectral.n_r, self.spectral.n_z),
            ("ground", self.ground.n_r, self.ground.n_z),
            ("mpass", self.mpass.nodes, self.mpass.nodes),
            ("sweep", self.sweep.ground_n_r, self.sweep.ground_n_z),
        ];
        for (name, a, b) in grids {
            if a < MIN_NODES || b < MIN_NODES {
                bail!("[{name}] grids need at least {MIN_NODES} nodes per direction");
            }
        }
        let increasing = |name: &str, xs: &[f64], min_len: usize| -> Result<()> {
            if xs.len() < min_len || xs.iter().any(|x| *x <= 0.0) || xs.windows(2).any(|w| w[1] <= w[0]) {
                bail!("[{name}] extents must be {min_len} or more positive increasing values");
            }
            Ok(())
        };
        increasing("spectral", &self.spectral.extents, 1)?;
        increasing("domain", &self.domain.extents, 3)?;
        if self.sweep.mus.len() < 2 || self.sweep.mus.iter().any(|m| *m <= 0.0) {
            bail!("[sweep] mus needs two or more positive masses");
        }
        for (name, x) in [
            ("ground.r_max", self.ground.r_max),
            ("ground.z_max", self.ground.z_max),
            ("ground.flow_tol", self.ground.flow_tol),
            ("ground.newton_tol", self.ground.newton_tol),
            ("ground.plugback_tol", self.ground.plugback_tol),
            ("ground.dt0", self.ground.dt0),
            ("mpass.span", self.mpass.span),
            ("domain.spacing", self.domain.spacing),
            ("sweep.ground_r_max", self.sweep.ground_r_max),
            ("check.gn_extent", self.check.gn_extent),
            ("problem.shoot_tol", self.problem.shoot_tol),
        ] {
            if x <= 0.0 {
                bail!("{name} must be positive");
            }
        }
        if self.mpass.path_nodes == 1 {
            bail!("[mpass] path_nodes must be 0 (off) or at least 2");
        }
        self.mpass_config().validate()?;
        Ok(())
    }

    pub fn mpass_config(&self) -> MPassConfig {
        MPassConfig {
            tau_schedule: self.mpass.tau_schedule.clone(),
            newton_tol: self.mpass.newton_tol,
            flow_tol: self.ground.flow_tol,
            plugback_tol: self.mpass.plugback_tol,
            ..MPassConfig::default()
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
