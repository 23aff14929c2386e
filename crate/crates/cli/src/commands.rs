use std::path::PathBuf;

use levy_liquidation::equivalence::ImpactBridge;
use levy_liquidation::impact::log_grid;
use levy_liquidation::levy::vg_kappa_hat_lower_bound_ln;
use levy_liquidation::{
    evaluate_strategy, DiscreteProblem, KappaFunction, LevyKind, LevyModel, MinimiseOptions, SimConfig, SimReport,
    SolveConfig, SolveResult, Solver, TauClass, TrajectoryGap,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{a_tag, num, write_csv, write_json, write_trajectory};

/// Per-run settings that come from the command line rather than the config.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
}

impl Context {
    pub fn new(cfg: &RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        let out_dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        Context { out_dir, seed }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn solver(cfg: &RunConfig, levy: LevyModel, a: f64) -> Result<Solver, CliError> {
    let solve_cfg = SolveConfig {
        y_grid_points: cfg.solve.grid_points,
        ..SolveConfig::default()
    };
    Ok(Solver::new(levy, cfg.impact_model()?, a)?.with_config(solve_cfg)?)
}

fn class_name(c: TauClass) -> &'static str {
    match c {
        TauClass::Finite => "finite",
        TauClass::Infinite => "infinite",
        TauClass::Unclassified => "unclassified",
    }
}

/// One row of `summary.json`.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub result: SolveResult,
    pub time_to_40pct: Option<f64>,
    pub time_to_90pct: Option<f64>,
}

impl SolveSummary {
    fn to_json(&self, time_unit: &str) -> Value {
        let r = &self.result;
        json!({
            "risk_aversion": num(r.risk_aversion),
            "tau": r.termination.tau().map_or(Value::Null, num),
            "value": num(r.value),
            "log_value": num(r.ln_value),
            "termination": class_name(r.termination.class()),
            "time_to_40pct": self.time_to_40pct.map_or(Value::Null, num),
            "time_to_90pct": self.time_to_90pct.map_or(Value::Null, num),
            "time_unit": time_unit,
        })
    }
}

fn solve_one(cfg: &RunConfig, levy: &LevyModel, a: f64) -> Result<SolveSummary, CliError> {
    let s = solver(cfg, levy.clone(), a)?;
    let y0 = cfg.solve.y0;
    Ok(SolveSummary {
        result: s.solve(y0)?,
        time_to_40pct: s.time_to_fraction(y0, 0.4)?,
        time_to_90pct: s.time_to_fraction(y0, 0.9)?,
    })
}

/// Trajectory CSV per risk aversion plus `summary.json`.
pub fn cmd_solve(cfg: &RunConfig, ctx: &Context) -> Result<Vec<SolveSummary>, CliError> {
    let levy = cfg.levy_model()?;
    let runs: Vec<SolveSummary> = cfg
        .solve
        .risk_aversion
        .par_iter()
        .map(|&a| solve_one(cfg, &levy, a))
        .collect::<Result<_, _>>()?;
    for run in &runs {
        let tag = a_tag(run.result.risk_aversion);
        write_trajectory(&ctx.path(&format!("trajectory_a{tag}.csv")), &run.result.trajectory)?;
    }
    let rows: Vec<Value> = runs.iter().map(|r| r.to_json(cfg.time_unit())).collect();
    write_json(&ctx.path("summary.json"), &Value::Array(rows))?;
    Ok(runs)
}

fn matched_metadata(cfg: &RunConfig, bm: &LevyModel) -> Value {
    let mut meta = serde_json::Map::new();
    if let LevyKind::BrownianLinear { mu, sigma } = bm.kind() {
        meta.insert("mu".into(), num(*mu));
        meta.insert("sigma".into(), num(*sigma));
    }
    if let Some((vg, _)) = cfg.vg_params() {
        if let Ok((mu_t, var_t)) = levy_liquidation::levy::bm_match_moments(vg.theta, vg.rho, vg.eta) {
            meta.insert("mu_tilde".into(), num(mu_t));
            meta.insert("sigma_tilde".into(), num(var_t.sqrt()));
        }
        meta.insert("d_minus_c".into(), num(vg.d() - vg.c()));
    }
    Value::Object(meta)
}

/// Levy model against its moment-matched Brownian model.
pub fn cmd_compare(cfg: &RunConfig, ctx: &Context) -> Result<Vec<TrajectoryGap>, CliError> {
    let levy = cfg.levy_model()?;
    let bm = levy.matched_brownian()?;
    let gaps: Vec<TrajectoryGap> = cfg
        .solve
        .risk_aversion
        .par_iter()
        .map(|&a| {
            let l = solver(cfg, levy.clone(), a)?.trajectory(cfg.solve.y0)?;
            let b = solver(cfg, bm.clone(), a)?.trajectory(cfg.solve.y0)?;
            Ok(TrajectoryGap::between(&l, &b, None))
        })
        .collect::<Result<_, CliError>>()?;
    let mut runs = Vec::new();
    for (&a, gap) in cfg.solve.risk_aversion.iter().zip(&gaps) {
        let mut times: Vec<f64> = gap.levy.times.iter().chain(&gap.bm.times).copied().collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let rows = times.iter().map(|&t| {
            let (yl, yb) = (gap.levy.position_at(t), gap.bm.position_at(t));
            vec![t, yl, yb, yl - yb]
        });
        write_csv(&ctx.path(&format!("compare_a{}.csv", a_tag(a))), &["t", "Y_levy", "Y_bm", "gap"], rows)?;
        runs.push(json!({
            "risk_aversion": num(a),
            "max_gap": num(gap.sup_gap),
            "max_gap_fraction": num(gap.sup_gap / cfg.solve.y0),
            "max_gap_time": num(gap.at_time),
            "tau_levy": gap.levy.tau.map_or(Value::Null, num),
            "tau_bm": gap.bm.tau.map_or(Value::Null, num),
        }));
    }
    let doc = json!({
        "matched": matched_metadata(cfg, &bm),
        "time_unit": cfg.time_unit(),
        "runs": runs,
    });
    write_json(&ctx.path("compare.json"), &doc)?;
    Ok(gaps)
}

fn bridge(cfg: &RunConfig, levy: &LevyModel, a: f64) -> Result<ImpactBridge, CliError> {
    let impact = cfg.impact_model()?;
    Ok(match levy.kind() {
        LevyKind::BrownianLinear { .. } => ImpactBridge::new(KappaFunction::new(levy.clone(), a)?, levy, impact)?,
        _ => ImpactBridge::vg_matched(levy, impact, a)?,
    })
}

/// Tabulates the impact function that makes the Levy model reproduce the
/// Brownian trajectories, and optionally verifies the match.
pub fn cmd_derive_impact(cfg: &RunConfig, ctx: &Context) -> Result<Vec<Option<TrajectoryGap>>, CliError> {
    let levy = cfg.levy_model()?;
    let d = &cfg.derive;
    if !(d.x_min > 0.0 && d.x_max > d.x_min && d.points >= 2) {
        return Err(CliError::Config("derive needs 0 < x_min < x_max and points >= 2".into()));
    }
    let speeds = log_grid(d.x_min, d.x_max, d.points);
    let mut runs = Vec::new();
    let mut gaps = Vec::new();
    for &a in &cfg.solve.risk_aversion {
        let br = bridge(cfg, &levy, a)?;
        let table = br.tabulate_ln(&speeds)?;
        let rows = table.iter().map(|(x, lfl, lfb)| vec![*x, lfb.exp(), lfl.exp(), *lfb, *lfl]);
        let header = ["x", "F_bm", "F_levy", "ln_F_bm", "ln_F_levy"];
        write_csv(&ctx.path(&format!("derived_impact_a{}.csv", a_tag(a))), &header, rows)?;
        let gap = if d.verify {
            Some(br.verify_trajectories_coincide(cfg.solve.y0, None)?)
        } else {
            None
        };
        runs.push(json!({
            "risk_aversion": num(a),
            "max_gap": gap.as_ref().map_or(Value::Null, |g| num(g.sup_gap)),
            "max_gap_fraction": gap.as_ref().map_or(Value::Null, |g| num(g.sup_gap / cfg.solve.y0)),
        }));
        gaps.push(gap);
    }
    write_json(&ctx.path("derive_impact.json"), &json!({ "runs": runs }))?;
    Ok(gaps)
}

fn estimate(e: &levy_liquidation::Estimate) -> Value {
    json!({ "value": num(e.value), "std_error": num(e.std_error) })
}

/// Monte-Carlo evaluation of the optimal strategy.
pub fn cmd_simulate(cfg: &RunConfig, ctx: &Context) -> Result<SimReport, CliError> {
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs a [simulate] section".into()))?;
    let levy = cfg.levy_model()?;
    let a = sim.risk_aversion.unwrap_or(cfg.solve.risk_aversion[0]);
    let strategy = solver(cfg, levy.clone(), a)?.trajectory(cfg.solve.y0)?;
    let seed = ctx.seed.unwrap_or(sim.seed);
    let sim_cfg = SimConfig {
        model: levy,
        impact: cfg.impact_model()?,
        strategy,
        n_paths: sim.n_paths,
        dt: sim.dt,
        seed,
        c0: sim.c0,
        s0: sim.s0,
        alpha: sim.alpha,
        risk_aversion: a,
        antithetic: sim.antithetic,
    };
    let report = evaluate_strategy(&sim_cfg)?;
    let doc = json!({
        "risk_aversion": num(a),
        "seed": seed,
        "n_paths": report.n_paths,
        "n_steps": report.n_steps,
        "dt": num(sim.dt),
        "mean_cash": estimate(&report.mean_cash),
        "var_cash": estimate(&report.var_cash),
        "expected_utility": estimate(&report.expected_utility),
        "log_neg_expected_utility": num(report.ln_neg_expected_utility),
        "certainty_equivalent": estimate(&report.certainty_equivalent),
        "mean_variance_score": estimate(&report.mean_variance_score),
    });
    write_json(&ctx.path("simulate.json"), &doc)?;
    Ok(report)
}

/// One line of the validation report.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

fn validate_one(cfg: &RunConfig, levy: &LevyModel, a: f64) -> Result<Vec<Check>, CliError> {
    let v = &cfg.validate;
    let y0 = cfg.solve.y0;
    let s = solver(cfg, levy.clone(), a)?;
    let mut checks = Vec::new();

    let mut worst = (0.0_f64, true);
    for k in 0..v.hjb_points {
        let frac = if v.hjb_points > 1 { k as f64 / (v.hjb_points - 1) as f64 } else { 0.0 };
        let y = y0 * 10f64.powf(-4.0 * frac);
        let h = s.hjb_residual(y, 200)?;
        worst.0 = worst.0.max(h.relative_residual.abs());
        worst.1 &= h.passes(v.hjb_tol);
    }
    checks.push(Check::new(
        format!("hjb residual (A = {})", a_tag(a)),
        worst.1,
        format!("max normalised residual {:.3e} over {} positions", worst.0, v.hjb_points),
    ));

    if cfg.vg_params().is_some() {
        let kf = s.kappa();
        let mut violations = 0;
        for u in log_grid(1e-2, 1e6, 50) {
            if let Some(lb) = vg_kappa_hat_lower_bound_ln(kf, u)? {
                if kf.ln_kappa(u)? < lb + (1.0 - 1e-10f64).ln() {
                    violations += 1;
                }
            }
        }
        checks.push(Check::new(
            format!("cumulant lower bound (A = {})", a_tag(a)),
            violations == 0,
            format!("{violations} violations on 50 points in [1e-2, 1e6]"),
        ));
    }

    // The uniform-grid oracle cannot resolve the front-loaded jump-model
    // trajectories, so jump models are certified through their Brownian match.
    let (oracle_solver, label) = match levy.kind() {
        LevyKind::BrownianLinear { .. } => (s.clone(), "oracle certification"),
        _ => (solver(cfg, levy.matched_brownian()?, a)?, "oracle certification, matched Brownian"),
    };
    let problem = DiscreteProblem::for_solver(&oracle_solver, y0, v.oracle_steps)?;
    let m = problem.minimise_multilevel(16, MinimiseOptions::default())?;
    let value = oracle_solver.value_function(y0)?;
    let rel = (m.value - value).abs() / value.abs().max(f64::MIN_POSITIVE);
    checks.push(Check::new(
        format!("{label} (A = {})", a_tag(a)),
        m.converged && rel <= v.oracle_tol,
        format!(
            "discrete minimum {:.10e} vs value {:.10e}, relative gap {:.3e} with {} steps",
            m.value, value, rel, v.oracle_steps
        ),
    ));
    Ok(checks)
}

/// Runs the invariant suite. Returns the checks; any failure becomes a
/// validation error after the report is written.
pub fn cmd_validate(cfg: &RunConfig, ctx: &Context) -> Result<Vec<Check>, CliError> {
    let levy = cfg.levy_model()?;
    let impact = cfg.impact_model()?;
    let mut checks = Vec::new();

    let report = impact.validate_assumptions(&log_grid(1e-6, 1e6, 49));
    let failed: Vec<String> = report.failures().map(|c| format!("{:?}: {}", c.condition, c.detail)).collect();
    let detail = if failed.is_empty() { "all conditions hold".to_string() } else { failed.join("; ") };
    checks.push(Check::new("impact assumptions", failed.is_empty(), detail));

    if let Some((vg, _)) = cfg.vg_params() {
        let gap = vg.d() - vg.c();
        checks.push(Check::new("tail admissibility", gap > 2.0, format!("D - C = {gap:.6}")));
    }

    let per_a: Vec<Vec<Check>> = cfg
        .solve
        .risk_aversion
        .par_iter()
        .map(|&a| validate_one(cfg, &levy, a))
        .collect::<Result<_, _>>()?;
    checks.extend(per_a.into_iter().flatten());

    let rows: Vec<Value> = checks
        .iter()
        .map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail }))
        .collect();
    write_json(&ctx.path("validate.json"), &Value::Array(rows))?;
    Ok(checks)
}

pub fn failures(checks: &[Check]) -> Option<CliError> {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    (!failed.is_empty()).then(|| CliError::Validation(failed.join(", ")))
}

pub fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}
