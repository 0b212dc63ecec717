//! One function per subcommand: solve, check, and collect artifacts.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use confined_nls::functional::{evaluate, gn_ascent, gn_quotient, Constants, ProblemParams};
use confined_nls::ground::{
    grid_lambda, initial_ground_guess, solve_ground, GroundOptions, SeparableGaussian, SolveResult,
};
use confined_nls::grid::{CylGrid, Field};
use confined_nls::linalg::SeparableSolver;
use confined_nls::mpass::{
    distinctness_check, endpoints_from_seed, mountain_pass_grid, optimize_path, solve_mountain_pass,
};
use confined_nls::soliton::{shoot_q, SolitonProfile};
use confined_nls::spectral::{first_eigenpair, radial_eigenpair};
use confined_nls::study::{
    domain_sweep, liouville_diagnostic, mu_sweep, rescaled_frame_check, DomainSweepOptions, LiouvilleReport,
    MuSweepOptions, MONOTONE_TOL,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifacts::{cell, Artifacts};
use crate::config::RunConfig;

/// Transverse spectral floor of the unbounded problem, `Λ₀ = 2`.
pub const LAMBDA0: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Constants,
    Ground,
    Mpass,
    DomainStudy,
    MuSweep,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Ground => "ground",
            Command::Mpass => "mpass",
            Command::DomainStudy => "domain-study",
            Command::MuSweep => "mu-sweep",
            Command::Check => "check",
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let mut art = Artifacts::new(command.name(), cfg);
    match command {
        Command::Constants => constants(cfg, &mut art)?,
        Command::Ground => ground(cfg, &mut art)?,
        Command::Mpass => mpass(cfg, &mut art)?,
        Command::DomainStudy => domain_study(cfg, &mut art)?,
        Command::MuSweep => sweep(cfg, &mut art)?,
        Command::Check => check(cfg, &mut art)?,
    }
    Ok(art)
}

/// Shooting profile and the constants built on it.
pub fn setup(cfg: &RunConfig) -> Result<(SolitonProfile, Constants)> {
    let p = cfg.problem.p;
    let q = shoot_q(p, cfg.problem.shoot_tol).context("shooting for the soliton profile")?;
    let c = Constants::new(p, LAMBDA0, q.gn_constant(), q.omega1())?;
    Ok((q, c))
}

fn params_below_threshold(cfg: &RunConfig, constants: &Constants) -> Result<ProblemParams> {
    let mu = cfg.problem.mass.resolve(constants.mu1);
    if mu >= constants.mu1 {
        bail!("mass {mu} is not below the existence threshold mu1 = {}", constants.mu1);
    }
    Ok(ProblemParams::new(cfg.problem.p, mu)?)
}

fn ground_options(cfg: &RunConfig) -> GroundOptions {
    GroundOptions {
        flow_tol: cfg.ground.flow_tol,
        newton_tol: cfg.ground.newton_tol,
        dt0: cfg.ground.dt0,
        max_flow_steps: cfg.ground.max_flow_steps,
        plugback_tol: cfg.ground.plugback_tol,
    }
}

#[derive(Serialize)]
struct ConstantsRecord {
    p: f64,
    lambda0: f64,
    lambda0_transverse: f64,
    gn_constant: f64,
    mu1: f64,
    mu1_consistency: f64,
    omega1: f64,
    q0: f64,
    nu_lower_coefficient: f64,
    nu_lower_exponent: f64,
    lambda1_bracket_threshold: f64,
}

#[derive(Serialize)]
struct FloorRecord {
    extent: f64,
    n_r: usize,
    n_z: usize,
    eigenvalue: f64,
    residual: f64,
}

fn constants(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let (q, c) = setup(cfg)?;
    let s = &cfg.spectral;
    let largest = *s.extents.last().expect("validated");
    let transverse = radial_eigenpair(&*CylGrid::new(s.n_r, s.n_z, largest, largest)?).0;
    art.record(
        "constants",
        &ConstantsRecord {
            p: c.p,
            lambda0: c.lambda0,
            lambda0_transverse: transverse,
            gn_constant: c.gn_constant,
            mu1: c.mu1,
            mu1_consistency: c.mu1_consistency(),
            omega1: c.omega1,
            q0: q.q0,
            nu_lower_coefficient: c.nu_lower.0,
            nu_lower_exponent: c.nu_lower.1,
            lambda1_bracket_threshold: c.lambda1_bracket_threshold(),
        },
    )?;
    let mut floors = Vec::new();
    for &ext in &s.extents {
        let g = CylGrid::new(s.n_r, s.n_z, ext, ext)?;
        let e = first_eigenpair(&g)?;
        art.record("spectral_floor", &FloorRecord { extent: ext, n_r: s.n_r, n_z: s.n_z, eigenvalue: e.eigenvalue, residual: e.residual })?;
        floors.push((ext, e.eigenvalue));
    }
    art.csv_header(&["quantity", "value"]);
    for (k, v) in [
        ("gn_constant", c.gn_constant),
        ("mu1", c.mu1),
        ("omega1", c.omega1),
        ("lambda0", c.lambda0),
        ("lambda0_transverse", transverse),
        ("lambda_largest_extent", floors.last().expect("nonempty").1),
    ] {
        art.csv_row(vec![k.to_string(), cell(v)]);
    }
    let mut profile = Vec::new();
    q.write_profile(&mut profile)?;
    art.text("soliton_profile.dat", &String::from_utf8(profile)?);
    art.plot("spectral_floor", "extent", "lambda", floors.iter().copied());

    art.check("mu1_consistency", c.mu1_consistency() <= 1e-12, format!("{:.3e}", c.mu1_consistency()));
    art.check(
        "transverse_floor",
        (transverse - LAMBDA0).abs() <= s.floor_tol,
        format!("{transverse:.9} vs {LAMBDA0} within {}", s.floor_tol),
    );
    art.check(
        "floor_decreasing",
        floors.windows(2).all(|w| w[1].1 < w[0].1),
        format!("{:?}", floors.iter().map(|f| f.1).collect::<Vec<_>>()),
    );
    Ok(())
}

/// Solves the ground state on the configured grid and returns it with its
/// half level.
fn solve_ground_state(cfg: &RunConfig, params: &ProblemParams) -> Result<(SolveResult, f64, Arc<CylGrid>)> {
    let g = &cfg.ground;
    let grid = CylGrid::new(g.n_r, g.n_z, g.r_max, g.z_max)?;
    let solver = SeparableSolver::new(&grid);
    let half = 0.5 * grid_lambda(&grid, &solver) * params.mu;
    let init = initial_ground_guess(params, &grid, half)?;
    let u1 = solve_ground(params, &init, &solver, &ground_options(cfg))?;
    Ok((u1, half, grid))
}

#[derive(Serialize)]
struct Levels {
    mu: f64,
    mu1: f64,
    half_level: f64,
    nu_lower: f64,
}

#[derive(Serialize)]
struct Bracket {
    lower: f64,
    upper: f64,
    lower_continuum: f64,
    upper_continuum: f64,
    multiplier: f64,
    inside: bool,
}

fn solution_checks(art: &mut Artifacts, tag: &str, cfg: &RunConfig, u: &SolveResult) {
    art.check(
        &format!("{tag}_converged"),
        u.plugback <= cfg.ground.plugback_tol && u.converged,
        format!("plug-back {:.3e}", u.plugback),
    );
    art.check(
        &format!("{tag}_pohozaev"),
        u.report.relative_pohozaev() <= cfg.ground.pohozaev_tol,
        format!("{:.3e}", u.report.relative_pohozaev()),
    );
    art.check(
        &format!("{tag}_multiplier_above_floor"),
        u.multiplier > -u.lambda_grid,
        format!("{} > {}", u.multiplier, -u.lambda_grid),
    );
}

fn liouville(art: &mut Artifacts, tag: &str, cfg: &RunConfig, u: &SolveResult) -> Result<LiouvilleReport> {
    let g = &u.field.grid;
    let n = cfg.ground.liouville_radii.max(2);
    let radii: Vec<f64> = (1..=n).map(|k| g.z_max * k as f64 / n as f64).collect();
    let rep = liouville_diagnostic(&u.field, u.multiplier, u.manifest.params.p, &radii)?;
    art.record(&format!("{tag}_liouville"), &rep)?;
    art.plot(&format!("{tag}_liouville_shift"), "R", "abs_shift", rep.radii.iter().zip(&rep.shift).map(|(r, s)| (*r, s.abs())));
    art.plot(&format!("{tag}_liouville_residual"), "R", "residual", rep.radii.iter().copied().zip(rep.residual.iter().copied()));
    art.check(
        &format!("{tag}_liouville_residual"),
        rep.max_residual() <= cfg.ground.liouville_tol,
        format!("{:.3e}", rep.max_residual()),
    );
    if u.multiplier > -LAMBDA0 {
        let rate = rep.shift_growth_rate.unwrap_or(f64::NAN);
        art.check(&format!("{tag}_liouville_shift_growth"), rate > 0.0, format!("fitted rate {rate:.4}"));
    }
    Ok(rep)
}

fn profile_plots(art: &mut Artifacts, tag: &str, f: &Field) {
    let g = &f.grid;
    art.plot(&format!("{tag}_axial"), "z", "u(0,z)", (0..g.n_z).map(|j| (g.z(j), f.at(0, j))));
    art.plot(&format!("{tag}_radial"), "r", "u(r,0)", (0..g.n_r).map(|i| (g.r(i), f.at(i, 0))));
}

fn solution_row(art: &mut Artifacts, label: &str, u: &SolveResult, half: f64) {
    let r = &u.report;
    art.csv_row(vec![
        label.to_string(),
        cell(u.manifest.params.mu),
        cell(r.energy),
        cell(half),
        cell(u.multiplier),
        cell(u.plugback),
        cell(r.relative_pohozaev()),
        cell(r.g_indicator),
    ]);
}

const SOLUTION_COLUMNS: [&str; 8] = ["solution", "mu", "energy", "half_level", "multiplier", "plugback", "pohozaev", "g_indicator"];

fn ground_part(cfg: &RunConfig, art: &mut Artifacts, c: &Constants, params: &ProblemParams) -> Result<(SolveResult, f64)> {
    let (u1, half, _) = solve_ground_state(cfg, params)?;
    art.record("levels", &Levels { mu: params.mu, mu1: c.mu1, half_level: half, nu_lower: c.nu_lower_bound(params.mu) })?;
    art.record("ground", &u1.record())?;
    solution_checks(art, "ground", cfg, &u1);
    art.check("ground_below_half_level", u1.report.energy < half, format!("{} < {half}", u1.report.energy));
    art.check("ground_in_pohozaev_set", u1.report.g_indicator > 0.0, format!("{:.3e}", u1.report.g_indicator));
    profile_plots(art, "ground", &u1.field);
    art.plot("ground_energy_trace", "step", "energy", u1.energy_trace.iter().enumerate().map(|(k, e)| (k as f64, *e)));
    if params.mu < c.lambda1_bracket_threshold() {
        let local = Constants { lambda0: u1.lambda_grid, ..*c };
        let (lo, hi) = local.lambda1_bracket(params.mu);
        let (clo, chi) = c.lambda1_bracket(params.mu);
        let inside = lo < u1.multiplier && u1.multiplier < hi;
        art.record(
            "lambda1_bracket",
            &Bracket { lower: lo, upper: hi, lower_continuum: clo, upper_continuum: chi, multiplier: u1.multiplier, inside },
        )?;
        art.check("ground_multiplier_bracket", inside, format!("{lo} < {} < {hi}", u1.multiplier));
    }
    Ok((u1, half))
}

fn ground(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let (_, c) = setup(cfg)?;
    let params = params_below_threshold(cfg, &c)?;
    let (u1, half) = ground_part(cfg, art, &c, &params)?;
    liouville(art, "ground", cfg, &u1)?;
    art.csv_header(&SOLUTION_COLUMNS);
    solution_row(art, "ground", &u1, half);
    Ok(())
}

#[derive(Serialize)]
struct SandwichRecord {
    path_nodes: usize,
    iterations: usize,
    stagnated: bool,
    initial_node_max: f64,
    node_max: f64,
    sup: f64,
    mpass_energy: f64,
    nu_lower: f64,
    width: f64,
}

#[derive(Serialize)]
struct EndpointRecord {
    seed: SeparableGaussian,
    t_end: f64,
    negative_energy: bool,
    energy_w0: f64,
    energy_w1: f64,
    indicator_w0: f64,
    indicator_w1: f64,
}

fn mpass(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let (q, c) = setup(cfg)?;
    let params = params_below_threshold(cfg, &c)?;
    let (u1, half) = ground_part(cfg, art, &c, &params)?;
    liouville(art, "ground", cfg, &u1)?;
    let m = &cfg.mpass;
    let mcfg = cfg.mpass_config();
    let grid = mountain_pass_grid(&params, &q, m.nodes, m.span)?;
    let u2 = solve_mountain_pass(&params, &grid, &q, &mcfg, half, Some(&u1))?;
    art.record("mountain_pass", &u2.record())?;
    solution_checks(art, "mpass", cfg, &u2);
    art.check("mpass_above_half_level", u2.report.energy > half, format!("{} > {half}", u2.report.energy));
    let d = distinctness_check(&u1, &u2, half, u1.lambda_grid)?;
    art.record("distinctness", &d)?;
    let need = mcfg.deflation_distance(params.mu);
    art.check("solutions_distinct", d.l2_distance >= need, format!("{:.4e} >= {need:.4e}", d.l2_distance));
    art.check("levels_ordered", d.ordered, format!("{} < {half} < {}", d.energy_ground, d.energy_mpass));
    let frame = rescaled_frame_check(&u2, &q)?;
    art.record("rescaled_frame", &frame)?;
    art.check("rescaled_energy_identity", frame.energy_identity_holds(), format!("{:.3e}", frame.relative_error));
    liouville(art, "mpass", cfg, &u2)?;
    profile_plots(art, "mpass", &u2.field);
    art.csv_header(&SOLUTION_COLUMNS);
    solution_row(art, "ground", &u1, half);
    solution_row(art, "mountain_pass", &u2, half);
    if m.path_nodes >= 2 {
        sandwich(cfg, art, &q, &c, &params)?;
    }
    Ok(())
}

/// Lower bound, mountain-pass energy and optimized-path supremum on one
/// grid, for two path resolutions.
fn sandwich(cfg: &RunConfig, art: &mut Artifacts, q: &SolitonProfile, c: &Constants, params: &ProblemParams) -> Result<()> {
    let m = &cfg.mpass;
    let grid = mountain_pass_grid(params, q, m.path_grid, m.span)?;
    let solver = SeparableSolver::new(&grid);
    let half = 0.5 * grid_lambda(&grid, &solver) * params.mu;
    let u2 = solve_mountain_pass(params, &grid, q, &cfg.mpass_config(), half, None)?;
    let e2 = u2.report.energy;
    let nu = c.nu_lower_bound(params.mu);
    let ep = endpoints_from_seed(params, &grid, SeparableGaussian { mu: params.mu, t_z: 1.0 }, half)?;
    let (r0, r1) = (evaluate(&ep.w0, params), evaluate(&ep.w1, params));
    art.record(
        "sandwich_endpoints",
        &EndpointRecord {
            seed: ep.seed,
            t_end: ep.t_end,
            negative_energy: ep.negative_energy,
            energy_w0: r0.energy,
            energy_w1: r1.energy,
            indicator_w0: r0.g_indicator,
            indicator_w1: r1.g_indicator,
        },
    )?;
    art.check(
        "sandwich_lower",
        nu * (1.0 - m.sandwich_lower_slack) <= e2,
        format!("nu={nu} (slack {}) <= E(u2)={e2}", m.sandwich_lower_slack),
    );
    let mut widths = Vec::new();
    for n in [m.path_nodes, 2 * m.path_nodes] {
        let path = ep.dilation_path(n, params)?;
        let opt = optimize_path(&path, params, &solver, m.path_iters)?;
        let width = opt.sup - e2;
        art.record(
            "sandwich_path",
            &SandwichRecord {
                path_nodes: n,
                iterations: opt.iterations,
                stagnated: opt.stagnated,
                initial_node_max: path.max_energy(),
                node_max: opt.path.max_energy(),
                sup: opt.sup,
                mpass_energy: e2,
                nu_lower: nu,
                width,
            },
        )?;
        art.plot(&format!("path_energy_n{n}"), "arclength", "energy", opt.path.energy_profile());
        art.plot(&format!("path_sup_trace_n{n}"), "iteration", "chord_sup", opt.max_trace.iter().enumerate().map(|(k, s)| (k as f64, *s)));
        art.check(
            &format!("sandwich_upper_n{n}"),
            e2 <= opt.sup * (1.0 + m.sandwich_upper_slack),
            format!("E(u2)={e2} <= sup={}", opt.sup),
        );
        widths.push(width);
    }
    let shrink = widths[0] / widths[1];
    art.check(
        "sandwich_width_shrinks",
        widths[1] > 0.0 && shrink >= m.sandwich_shrink,
        format!("widths {:.4e} -> {:.4e} (ratio {shrink:.2})", widths[0], widths[1]),
    );
    Ok(())
}

fn domain_study(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let (q, c) = setup(cfg)?;
    let params = params_below_threshold(cfg, &c)?;
    let opts = DomainSweepOptions { spacing: cfg.domain.spacing, ground: ground_options(cfg), mpass: cfg.mpass_config() };
    let sweep = domain_sweep(&params, &cfg.domain.extents, &q, &opts)?;
    art.csv_header(&["extent", "lambda_domain", "c_level", "m_level", "half_level", "lambda1", "lambda2"]);
    for r in &sweep.records {
        art.record("domain", r)?;
        art.csv_row(vec![cell(r.control), cell(r.lambda_domain), cell(r.c_level), cell(r.m_level), cell(r.half_level), cell(r.lambda1), cell(r.lambda2)]);
        art.check(&format!("levels_separated_R{}", r.control), r.levels_separated(), format!("{} < {} < {}", r.c_level, r.half_level, r.m_level));
    }
    art.record("domain_limits", &serde_json::json!({
        "limit_last": sweep.limit_last,
        "limit_previous": sweep.limit_previous,
        "drift": sweep.limit_drift(),
        "monotone_tol": MONOTONE_TOL,
    }))?;
    let pts = |f: fn(&confined_nls::study::SweepRecord) -> f64| sweep.records.iter().map(|r| (r.control, f(r))).collect::<Vec<_>>();
    art.plot("domain_lambda", "extent", "lambda", pts(|r| r.lambda_domain));
    art.plot("domain_c", "extent", "c_level", pts(|r| r.c_level));
    art.plot("domain_m", "extent", "m_level", pts(|r| r.m_level));
    art.check("lambda_strictly_decreasing", sweep.lambda_strictly_decreasing, "");
    art.check("c_strictly_decreasing", sweep.c_strictly_decreasing, "");
    art.check("m_non_increasing", sweep.m_non_increasing, format!("slack {MONOTONE_TOL}"));
    let drift = sweep.limit_drift().unwrap_or(f64::INFINITY);
    art.check("limits_stable", drift <= cfg.domain.limit_tol, format!("{drift:.3e}"));
    Ok(())
}

fn sweep(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let (q, c) = setup(cfg)?;
    let s = &cfg.sweep;
    if let Some(mu) = s.mus.iter().find(|&&m| m >= c.mu1) {
        bail!("sweep mass {mu} is not below mu1 = {}", c.mu1);
    }
    let opts = MuSweepOptions {
        ground_n_r: s.ground_n_r,
        ground_r_max: s.ground_r_max,
        ground_n_z: s.ground_n_z,
        ground_z_widths: s.ground_z_widths,
        mpass_span: s.mpass_span,
        mpass_nodes: s.mpass_nodes,
        min_core_nodes: s.min_core_nodes,
        ground: ground_options(cfg),
        mpass: cfg.mpass_config(),
    };
    let sw = mu_sweep(cfg.problem.p, &s.mus, &q, &c, &opts)?;
    art.csv_header(&["mu", "lambda1", "lambda2", "lambda2_scaled_ratio", "u1_projection_ratio", "u2_rescaled_distance", "c_level", "m_level"]);
    let opt = |x: Option<f64>| x.map(cell).unwrap_or_default();
    for r in &sw.records {
        art.record("mu_point", r)?;
        art.csv_row(vec![
            cell(r.mu),
            cell(r.lambda1),
            cell(r.lambda2),
            opt(r.lambda2_scaled_ratio),
            opt(r.u1_projection_ratio),
            opt(r.u2_rescaled_distance),
            cell(r.c_level),
            cell(r.m_level),
        ]);
        art.check(&format!("levels_separated_mu{}", r.mu), r.levels_separated(), format!("{} < {} < {}", r.c_level, r.half_level, r.m_level));
        art.check(
            &format!("plugback_mu{}", r.mu),
            r.plugback_ground.max(r.plugback_mpass) <= cfg.ground.plugback_tol,
            format!("{:.3e} {:.3e}", r.plugback_ground, r.plugback_mpass),
        );
    }
    art.record("slope", &serde_json::json!({
        "lambda2_slope": sw.lambda2_slope,
        "predicted_slope": sw.predicted_slope,
    }))?;
    art.text(
        "slope_report.txt",
        &format!("lambda2_slope {:.12}\npredicted_slope {:.12}\nmasses {:?}\n", sw.lambda2_slope, sw.predicted_slope, s.mus),
    );
    let series = |f: fn(&confined_nls::study::SweepRecord) -> Option<f64>| sw.records.iter().filter_map(|r| f(r).map(|v| (r.mu, v))).collect::<Vec<_>>();
    art.plot("lambda2_vs_mu", "mu", "lambda2", sw.records.iter().map(|r| (r.mu, r.lambda2)));
    art.plot("lambda2_scaled_ratio", "mu", "lambda2_scaled_over_omega1", series(|r| r.lambda2_scaled_ratio));
    art.plot("u1_projection_ratio", "mu", "ratio", series(|r| r.u1_projection_ratio));
    art.plot("u2_rescaled_distance", "mu", "distance", series(|r| r.u2_rescaled_distance));
    art.plot("u2_analytic_distance", "mu", "distance", series(|r| r.u2_analytic_distance));

    art.check(
        "lambda2_slope",
        (sw.lambda2_slope - sw.predicted_slope).abs() <= s.slope_tol,
        format!("{:.6} vs {:.6}", sw.lambda2_slope, sw.predicted_slope),
    );
    let smallest = sw
        .records
        .iter()
        .min_by(|a, b| a.mu.total_cmp(&b.mu))
        .and_then(|r| r.lambda2_scaled_ratio)
        .unwrap_or(f64::NAN);
    art.check("lambda2_scaled_limit", (smallest - 1.0).abs() <= s.ratio_tol, format!("{smallest:.6}"));
    art.check("u2_distance_decreasing", sw.u2_distance_decreasing, "");
    art.check("u1_ratio_decreasing", sw.u1_ratio_decreasing, "");
    if sw.records.iter().any(|r| r.lambda1_bracket.is_some()) {
        art.check("lambda1_brackets", sw.brackets_hold, "");
    }
    Ok(())
}

#[derive(Serialize)]
struct GnRecord {
    gn_constant: f64,
    ascent_quotient: f64,
    ascent_relative: f64,
    ascent_iterations: usize,
    random_fields: usize,
    random_worst_ratio: f64,
    seed: u64,
}

fn check(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    let (_, c) = setup(cfg)?;
    let k = &cfg.check;
    let p = cfg.problem.p;
    let grid = CylGrid::new(k.gn_nodes, k.gn_nodes, k.gn_extent, k.gn_extent)?;
    let solver = SeparableSolver::new(&grid);
    let init = Field::from_fn(&grid, |r, z| (-0.5 * (r * r + z * z)).exp());
    let asc = gn_ascent(&init, p, &solver, k.gn_iters, 1e-13)?;
    let rel = (asc.quotient - c.gn_constant).abs() / c.gn_constant;
    let mut rng = ChaCha8Rng::seed_from_u64(k.seed);
    let ratios: Vec<f64> = (0..k.random_fields)
        .map(|_| gn_quotient(&Field::random_bumps(&grid, &mut rng, k.bumps.max(1)), p).map(|x| x / c.gn_constant))
        .collect::<std::result::Result<_, _>>()?;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    art.record(
        "gn",
        &GnRecord {
            gn_constant: c.gn_constant,
            ascent_quotient: asc.quotient,
            ascent_relative: rel,
            ascent_iterations: asc.iterations,
            random_fields: k.random_fields,
            random_worst_ratio: worst,
            seed: k.seed,
        },
    )?;
    art.plot("gn_ascent_trace", "iteration", "quotient", asc.trace.iter().enumerate().map(|(i, q)| (i as f64, *q)));
    art.plot("gn_random_ratios", "field", "quotient_over_constant", ratios.iter().enumerate().map(|(i, r)| (i as f64, *r)));
    art.csv_header(&["quantity", "value"]);
    art.csv_row(vec!["gn_constant".into(), cell(c.gn_constant)]);
    art.csv_row(vec!["ascent_quotient".into(), cell(asc.quotient)]);
    art.csv_row(vec!["random_worst_ratio".into(), cell(worst)]);
    art.check("mu1_consistency", c.mu1_consistency() <= 1e-12, format!("{:.3e}", c.mu1_consistency()));
    art.check("gn_ascent_agrees", rel <= k.ascent_tol, format!("{rel:.3e}"));
    art.check("gn_random_bound", worst <= 1.0 + k.random_slack, format!("worst ratio {worst:.6}"));
    Ok(())
}
