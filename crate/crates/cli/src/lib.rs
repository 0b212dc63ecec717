//! Batch driver for the `confined-nls` solvers: configuration, run
//! orchestration and artifact emission behind the `cnls` binary.

pub mod artifacts;
pub mod config;
pub mod pipeline;

use anyhow::{bail, Result};

pub use artifacts::{Artifacts, Check};
pub use config::RunConfig;
pub use pipeline::{run, Command};

/// Applies `--grid NxM` and `--extent R` to the grid the command solves on.
///
/// | command | `--grid` | `--extent` |
/// |---|---|---|
/// | constants | spectral `n_r × n_z` | adds `R` to the spectral extents |
/// | ground, mpass | ground `n_r × n_z` | ground `r_max = z_max = R` |
/// | domain-study | rejected | adds `R` to the domain extents |
/// | mu-sweep | ground `n_r × n_z` of every point | rejected |
/// | check | GN grid (needs `N = M`) | GN grid extent |
pub fn apply_overrides(cfg: &mut RunConfig, cmd: Command, grid: Option<(usize, usize)>, extent: Option<f64>) -> Result<()> {
    let add = |xs: &mut Vec<f64>, r: f64| {
        if !xs.contains(&r) {
            xs.push(r);
            xs.sort_by(f64::total_cmp);
        }
    };
    if let Some((n, m)) = grid {
        match cmd {
            Command::Constants => (cfg.spectral.n_r, cfg.spectral.n_z) = (n, m),
            Command::Ground | Command::Mpass => (cfg.ground.n_r, cfg.ground.n_z) = (n, m),
            Command::MuSweep => (cfg.sweep.ground_n_r, cfg.sweep.ground_n_z) = (n, m),
            Command::Check if n == m => cfg.check.gn_nodes = n,
            Command::Check => bail!("check uses a square GN grid; --grid needs N = M"),
            Command::DomainStudy => bail!("domain-study sets its grids by [domain] spacing; --grid does not apply"),
        }
    }
    if let Some(r) = extent {
        if !(r.is_finite() && r > 0.0) {
            bail!("--extent must be positive");
        }
        match cmd {
            Command::Constants => add(&mut cfg.spectral.extents, r),
            Command::Ground | Command::Mpass => (cfg.ground.r_max, cfg.ground.z_max) = (r, r),
            Command::DomainStudy => add(&mut cfg.domain.extents, r),
            Command::Check => cfg.check.gn_extent = r,
            Command::MuSweep => bail!("mu-sweep sizes its grids from each mass; --extent does not apply"),
        }
    }
    Ok(())
}

/// Parses `NxM`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let n = a.trim().parse().map_err(|_| format!("bad node count {a:?}"))?;
    let m = b.trim().parse().map_err(|_| format!("bad node count {b:?}"))?;
    Ok((n, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_parses() {
        assert_eq!(parse_grid("128x256"), Ok((128, 256)));
        assert!(parse_grid("128").is_err());
        assert!(parse_grid("ax3").is_err());
    }

    #[test]
    fn overrides_change_the_hash() {
        let base = RunConfig::default();
        let mut cfg = base.clone();
        apply_overrides(&mut cfg, Command::Ground, Some((64, 96)), Some(10.0)).unwrap();
        assert_eq!((cfg.ground.n_r, cfg.ground.n_z, cfg.ground.z_max), (64, 96, 10.0));
        assert_ne!(cfg.hash(), base.hash());
    }

    #[test]
    fn extent_joins_the_domain_list() {
        let mut cfg = RunConfig::default();
        apply_overrides(&mut cfg, Command::DomainStudy, None, Some(14.0)).unwrap();
        assert_eq!(cfg.domain.extents, vec![6.0, 8.0, 10.0, 12.0, 14.0]);
        assert!(apply_overrides(&mut cfg, Command::DomainStudy, Some((8, 8)), None).is_err());
    }
}
