//! Acceptance suite: one line per criterion, with its runtime.
//!
//! Run with `cargo test -p confined-nls-cli --test acceptance`. Each
//! criterion drives the same pipelines as the `cnls` subcommands.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Result};
use confined_nls::spectral::radial_eigenpair;
use confined_nls::grid::CylGrid;
use confined_nls_cli::config::Mass;
use confined_nls_cli::pipeline::setup;
use confined_nls_cli::{run, Artifacts, Command, RunConfig};

/// Criteria that cannot hold as stated. They still run and print FAIL, but
/// do not fail the test binary.
///
/// 1: on a domain of half-length R the lowest axial Dirichlet mode lifts
/// the floor by about (π/2R)², 0.0171 at R = 12, which is seventeen times
/// the 1e-3 tolerance; the same criterion requires Λ_R to decrease toward 2
/// from above.
const UNATTAINABLE: &[usize] = &[1];

struct Outcome {
    passed: bool,
    detail: String,
}

fn require(art: &Artifacts, names: &[&str]) -> Result<Outcome> {
    let mut detail = Vec::new();
    let mut passed = true;
    for n in names {
        let c = art.check_named(n).ok_or_else(|| anyhow!("check {n} missing"))?;
        passed &= c.passed;
        detail.push(format!("{}={}{}", n, if c.passed { "ok" } else { "FAIL" }, if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) }));
    }
    Ok(Outcome { passed, detail: detail.join("; ") })
}

fn num(art: &Artifacts, kind: &str, key: &str) -> Vec<f64> {
    art.records_of(kind).filter_map(|r| r[key].as_f64()).collect()
}

fn criterion_1() -> Result<Outcome> {
    let cfg = RunConfig::default();
    let art = run(Command::Constants, &cfg)?;
    let lam = num(&art, "spectral_floor", "eigenvalue");
    let ext = num(&art, "spectral_floor", "extent");
    let last = *lam.last().ok_or_else(|| anyhow!("no floor records"))?;
    let floor_ok = (last - 2.0).abs() <= cfg.spectral.floor_tol;
    let decreasing = lam.windows(2).all(|w| w[1] < w[0]);
    let r = *ext.last().expect("extent");
    let g = CylGrid::new(cfg.spectral.n_r, cfg.spectral.n_z, r, r)?;
    let transverse = radial_eigenpair(&g).0;
    let axial = (PI / (2.0 * r)).powi(2);
    Ok(Outcome {
        passed: floor_ok && decreasing,
        detail: format!(
            "Lambda(R={r})={last:.6} (|.-2|<=1e-3: {floor_ok}); decreasing over {ext:?}: {decreasing} {lam:?}; transverse part {transverse:.6}, axial mode (pi/2R)^2={axial:.6}"
        ),
    })
}

fn criterion_2() -> Result<Outcome> {
    let art = run(Command::Check, &RunConfig::default())?;
    require(&art, &["gn_ascent_agrees", "gn_random_bound"])
}

fn two_solution_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.problem.mass = Mass::OverMu1(0.25);
    cfg
}

fn criterion_3() -> Result<(Outcome, Artifacts)> {
    let art = run(Command::Mpass, &two_solution_config())?;
    let out = require(
        &art,
        &[
            "ground_converged",
            "mpass_converged",
            "levels_ordered",
            "solutions_distinct",
            "ground_multiplier_above_floor",
            "mpass_multiplier_above_floor",
            "ground_pohozaev",
            "mpass_pohozaev",
        ],
    )?;
    Ok((out, art))
}

fn criterion_4() -> Result<Outcome> {
    let base = RunConfig::default();
    let (_, c) = setup(&base)?;
    let threshold = c.lambda1_bracket_threshold();
    let mut passed = true;
    let mut detail = vec![format!("threshold {threshold:.6}")];
    for f in [0.1, 0.05] {
        let mut cfg = base.clone();
        cfg.problem.mass = Mass::Absolute(f * threshold);
        let art = run(Command::Ground, &cfg)?;
        let b = art.records_of("lambda1_bracket").next().ok_or_else(|| anyhow!("no bracket record"))?;
        let inside = b["inside"].as_bool().unwrap_or(false) && art.passed();
        passed &= inside;
        detail.push(format!(
            "mu={:.6}: {} < lambda1={} < {} ({})",
            f * threshold,
            b["lower"],
            b["multiplier"],
            b["upper"],
            if inside { "ok" } else { "FAIL" }
        ));
    }
    Ok(Outcome { passed, detail: detail.join("; ") })
}

fn criteria_5_6() -> Result<(Outcome, Outcome)> {
    let art = run(Command::MuSweep, &RunConfig::default())?;
    let five = require(&art, &["lambda2_slope", "lambda2_scaled_limit", "u2_distance_decreasing"])?;
    let mut six = require(&art, &["u1_ratio_decreasing"])?;
    let ratios = num(&art, "mu_point", "u1_projection_ratio");
    six.detail = format!("{}; ratios {ratios:?}", six.detail);
    Ok((five, six))
}

fn criterion_7() -> Result<Outcome> {
    let mut cfg = RunConfig::default();
    cfg.problem.mass = Mass::OverMu1(0.9);
    let art = run(Command::DomainStudy, &cfg)?;
    require(&art, &["c_strictly_decreasing", "m_non_increasing", "limits_stable"])
}

fn criterion_8() -> Result<Outcome> {
    let mut cfg = RunConfig::default();
    cfg.problem.mass = Mass::OverMu1(0.9);
    cfg.mpass.path_nodes = 8;
    let art = run(Command::Mpass, &cfg)?;
    require(&art, &["sandwich_lower", "sandwich_upper_n8", "sandwich_upper_n16", "sandwich_width_shrinks"])
}

fn criterion_9() -> Result<Outcome> {
    let mut cfg = two_solution_config();
    cfg.ground.liouville_radii = 100;
    let art = run(Command::Mpass, &cfg)?;
    require(
        &art,
        &["ground_liouville_residual", "ground_liouville_shift_growth", "mpass_liouville_residual", "mpass_liouville_shift_growth"],
    )
}

fn criterion_10(first: &Artifacts) -> Result<Outcome> {
    let again = run(Command::Mpass, &two_solution_config())?;
    let (a, b) = (first.render()?, again.render()?);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let same = differing.is_empty() && a.len() == b.len();
    Ok(Outcome { passed: same, detail: format!("{} files compared, differing: {differing:?}", a.len()) })
}

struct Line {
    id: usize,
    name: &'static str,
    budget: Duration,
    outcome: Result<Outcome>,
    elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut lines = Vec::new();
    let mut push = |id, name, budget, outcome, elapsed| lines.push(Line { id, name, budget, outcome, elapsed });

    let (o, t) = timed(criterion_1);
    push(1, "spectral floor", secs(30), o, t);
    let (o, t) = timed(criterion_2);
    push(2, "GN layer", secs(60), o, t);
    let (r3, t3) = timed(criterion_3);
    let first = match r3 {
        Ok((o, art)) => {
            push(3, "two solutions at 0.25 mu1", secs(300), Ok(o), t3);
            Some(art)
        }
        Err(e) => {
            push(3, "two solutions at 0.25 mu1", secs(300), Err(e), t3);
            None
        }
    };
    let (o, t) = timed(criterion_4);
    push(4, "ground multiplier bracket", secs(300), o, t);
    let (r56, t56) = timed(criteria_5_6);
    match r56 {
        Ok((five, six)) => {
            push(5, "mountain-pass asymptotics", secs(1200), Ok(five), t56);
            push(6, "ground-state asymptotics", secs(1200), Ok(six), t56);
        }
        Err(e) => {
            push(5, "mountain-pass asymptotics", secs(1200), Err(anyhow!("{e:#}")), t56);
            push(6, "ground-state asymptotics", secs(1200), Err(e), t56);
        }
    }
    let (o, t) = timed(criterion_7);
    push(7, "domain limits", secs(900), o, t);
    let (o, t) = timed(criterion_8);
    push(8, "min-max sandwich", secs(600), o, t);
    let (o, t) = timed(criterion_9);
    push(9, "weak-form identity", secs(120), o, t);
    let (o, t) = timed(|| match &first {
        Some(a) => criterion_10(a),
        None => Err(anyhow!("criterion 3 produced no artifacts")),
    });
    push(10, "determinism", secs(300), o, t);

    let mut unexpected = 0;
    let mut passed = 0;
    for l in &lines {
        let in_time = l.elapsed <= l.budget;
        let (ok, detail) = match &l.outcome {
            Ok(o) => (o.passed && in_time, o.detail.clone()),
            Err(e) => (false, format!("error: {e:#}")),
        };
        let tag = if ok { "PASS" } else if UNATTAINABLE.contains(&l.id) { "FAIL (unattainable as stated)" } else { "FAIL" };
        println!(
            "criterion {:>2} {:<28} {tag} [{:.1}s / {}s] {detail}",
            l.id,
            l.name,
            l.elapsed.as_secs_f64(),
            l.budget.as_secs()
        );
        if ok {
            passed += 1;
        } else if !UNATTAINABLE.contains(&l.id) {
            unexpected += 1;
        }
    }
    println!("acceptance: {passed}/{} criteria pass; {unexpected} unexpected failures", lines.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
