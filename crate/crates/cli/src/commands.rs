//! One function per subcommand. Each returns a JSON report, an optional CSV
//! table and a pass flag; writing is left to the caller.

use gcalc_core::payoff::Shape;
use gcalc_core::pde::solve_on_grid;
use gcalc_core::{
    concave_payoff_value, convex_payoff_value, directional_sigmas, euler_solve, evaluate_pt, generate_path_indexed,
    is_g_convex, ito_integral, jensen_check, moment_abs, moment_even_signed, picard_contraction, quadratic_variation,
    risk_demo, sample_scenarios, scenario_sup_expect, GNormalParams, Matrix, Partition, ProbeSet, ScenarioControl,
    SimpleProcess,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{direction, Config};
use crate::error::Result;

/// Pathwise identities hold to rounding; anything above this is a bug.
pub const ROUNDING: f64 = 1e-10;
/// Per-moment tolerance of the `moments` table, relative above 1.
pub const MOMENT_TOL: f64 = 2e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub csv: Option<String>,
    pub passed: bool,
}

impl Outcome {
    fn new<T: Serialize>(report: &T, csv: Option<String>, passed: bool) -> Result<Self> {
        Ok(Self { report: serde_json::to_value(report)?, csv, passed })
    }
}

pub fn price(cfg: &Config) -> Result<Outcome> {
    let pc = &cfg.price;
    let a = direction(&pc.direction, "price.direction")?;
    let (sp, sm) = directional_sigmas(&cfg.gamma, &a)?;
    let payoff = pc.payoff.clone();
    let (value, diagnostics, csv) = if pc.t == 0.0 {
        (payoff.eval(pc.x), None, None)
    } else {
        let grid = cfg.pde.grid_for(sp.max(-sm), pc.t, pc.x, cfg.pde.grid_points)?;
        let initial = grid.nodes().into_iter().map(|z| payoff.eval(z)).collect();
        let u = solve_on_grid(grid, initial, sp, sm, pc.t, &cfg.pde)?;
        (u.eval(pc.x), Some(u.diagnostics), Some(u.to_csv()))
    };
    let params = GNormalParams::new(sp, sm, pc.t)?;
    let closed_form = match payoff.shape() {
        Shape::Convex | Shape::Affine => Some(convex_payoff_value(&params, |z| payoff.eval(z), pc.x)?),
        Shape::Concave => Some(concave_payoff_value(&params, |z| payoff.eval(z), pc.x)?),
        Shape::Unknown => None,
    };
    let mut passed = true;
    let scenario = if pc.scenario_bound && pc.t > 0.0 {
        let partition = Partition::uniform(pc.t, cfg.paths.steps)?;
        let controls = ScenarioControl::ladder(&cfg.gamma, &partition, pc.ladder_levels);
        let p = payoff.clone();
        let (x, dir) = (pc.x, a.clone());
        let est = scenario_sup_expect(
            move |path| p.eval(x + path.terminal(&dir).unwrap_or(f64::NAN)),
            &cfg.gamma,
            &controls,
            cfg.paths.n_paths,
            cfg.paths.seed,
            &cfg.paths.budget(),
        )?;
        // the scenario sup may not exceed the G-expectation beyond noise
        passed = est.value <= value + 3.0 * est.se + cfg.suite.numeric_tol;
        Some(json!({
            "lower_bound": est.value,
            "se": est.se,
            "argmax": est.label,
            "gap": value - est.value,
        }))
    } else {
        None
    };
    let report = json!({
        "payoff": payoff.label(),
        "t": pc.t,
        "x": pc.x,
        "value": value,
        "closed_form": closed_form,
        "abs_error": closed_form.map(|c| (c - value).abs()),
        "diagnostics": diagnostics,
        "scenario": scenario,
    });
    Outcome::new(&report, csv, passed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub n: i32,
    pub closed_form: f64,
    pub pde_value: f64,
    pub abs_error: f64,
}

pub fn moment_rows(cfg: &Config) -> Result<Vec<MomentRow>> {
    let mc = &cfg.moments;
    let a = direction(&mc.direction, "moments.direction")?;
    let params = GNormalParams::from_direction(&cfg.gamma, &a, mc.t)?;
    mc.orders
        .iter()
        .map(|&n| {
            let k = n.unsigned_abs();
            let (closed_form, pde_value) = if n > 0 {
                (moment_abs(&params, k)?, evaluate_pt(&cfg.gamma, &a, |x| x.abs().powi(n), mc.t, 0.0, &cfg.pde)?)
            } else {
                let e = k as i32;
                (moment_even_signed(&params, k, -1)?, evaluate_pt(&cfg.gamma, &a, |x| -x.powi(e), mc.t, 0.0, &cfg.pde)?)
            };
            Ok(MomentRow { n, closed_form, pde_value, abs_error: (closed_form - pde_value).abs() })
        })
        .collect()
}

pub fn moments(cfg: &Config) -> Result<Outcome> {
    let rows = moment_rows(cfg)?;
    let passed = rows.iter().all(|r| r.abs_error <= MOMENT_TOL * r.closed_form.abs().max(1.0));
    let mut csv = String::from("n,closed_form,pde_value,abs_error\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.n, r.closed_form, r.pde_value, r.abs_error));
    }
    Outcome::new(&json!({ "t": cfg.moments.t, "rows": rows }), Some(csv), passed)
}

/// Top-of-Γ control along the first axis, or the configured constant.
fn qv_control(cfg: &Config, partition: Partition) -> Result<(ScenarioControl, f64)> {
    let d = cfg.gamma.dim();
    let a = gcalc_core::Direction::unit(d, 0);
    let m = match cfg.paths.volatility {
        Some(v) if d == 1 => Matrix::scalar(v),
        Some(v) => Matrix::diagonal(&vec![v; d]),
        None => cfg.gamma.extreme_matrix(&a, true)?,
    };
    let variance = m.trace_outer_with(&gcalc_core::SymMatrix::outer(&a));
    Ok((ScenarioControl::constant(partition, m, "qv"), variance))
}

pub fn qv(cfg: &Config) -> Result<Outcome> {
    let pc = &cfg.paths;
    let partition = Partition::uniform(pc.horizon, pc.steps)?;
    let (control, variance) = qv_control(cfg, partition)?;
    let a = gcalc_core::Direction::unit(cfg.gamma.dim(), 0);
    let samples = sample_scenarios(
        &cfg.gamma,
        std::slice::from_ref(&control),
        pc.n_paths,
        pc.seed,
        &pc.budget(),
        2,
        |path, out| {
            let q = quadratic_variation(path, &a).map(|q| q[q.len() - 1]).unwrap_or(f64::NAN);
            let b = SimpleProcess::adapted(path, &a, |k, _, prefix| prefix[k]);
            let int = b.and_then(|b| ito_integral(&b, path, &a)).unwrap_or(f64::NAN);
            let bt = path.terminal(&a).unwrap_or(f64::NAN);
            out[0] = q;
            out[1] = (bt * bt - 2.0 * int - q).abs();
        },
    )?;
    let t = pc.horizon;
    let moment = |p: i32| {
        let s = samples.control_stat(0, |v| v[0].powi(p));
        let target = (variance * t).powi(p);
        json!({ "order": p, "mean": s.mean, "se": s.se, "target": target, "rel_error": (s.mean - target).abs() / target })
    };
    let moments: Vec<Value> = (1..=3).map(moment).collect();
    let identity = (0..samples.n_paths()).map(|i| samples.path_values(0, i)[1]).fold(0.0, f64::max);
    let passed = identity <= ROUNDING
        && moments.iter().all(|m| m["rel_error"].as_f64().is_some_and(|e| e <= 0.05) || variance == 0.0);
    let mut csv = String::from("path,qv,identity_error\n");
    for i in 0..samples.n_paths() {
        let v = samples.path_values(0, i);
        csv.push_str(&format!("{i},{},{}\n", v[0], v[1]));
    }
    let report = json!({
        "variance": variance,
        "horizon": t,
        "steps": pc.steps,
        "n_paths": pc.n_paths,
        "moments": moments,
        "identity_max_error": identity,
    });
    Outcome::new(&report, Some(csv), passed)
}

pub fn sde(cfg: &Config) -> Result<Outcome> {
    let sc = &cfg.sde;
    let picard = picard_contraction(&sc.spec, &cfg.gamma, sc.ladder_levels, &sc.picard, &cfg.paths.budget())?;
    let partition = Partition::uniform(sc.picard.horizon, sc.picard.steps)?;
    let controls = ScenarioControl::ladder(&cfg.gamma, &partition, sc.ladder_levels);
    let n = sc.spec.n();
    let driftless = sc.spec.b.is_zero() && sc.spec.h.iter().flatten().all(|f| f.is_zero());
    let samples = sample_scenarios(
        &cfg.gamma,
        &controls,
        sc.picard.n_paths,
        sc.picard.seed,
        &cfg.paths.budget(),
        n,
        |path, out| match euler_solve(&sc.spec, path) {
            Ok(x) => out.copy_from_slice(x.terminal()),
            Err(_) => out.fill(f64::NAN),
        },
    )?;
    let mut martingale = Vec::new();
    let mut mean_ok = true;
    for c in 0..samples.n_controls() {
        for i in 0..n {
            let s = samples.control_stat(c, |v| v[i]);
            let gap = (s.mean - sc.spec.x0[i]).abs();
            if driftless && !(gap <= 3.0 * s.se + ROUNDING) {
                mean_ok = false;
            }
            martingale.push(json!({ "control": s.label, "component": i, "mean": s.mean, "se": s.se, "gap": gap }));
        }
    }
    let passed = picard.max_ratio <= 0.6 && picard.fixed_point_residual < 1e-6 && mean_ok;
    let top = controls.last().expect("ladder is nonempty");
    let csv = euler_solve(&sc.spec, &generate_path_indexed(top, sc.picard.seed, 0))?.to_csv();
    let report = json!({
        "picard": picard,
        "driftless": driftless,
        "terminal_means": martingale,
    });
    Outcome::new(&report, Some(csv), passed)
}

pub fn jensen(cfg: &Config) -> Result<Outcome> {
    let jc = &cfg.jensen;
    let a = direction(&jc.direction, "jensen.direction")?;
    let convex = is_g_convex(&jc.function, &cfg.gamma, &ProbeSet::standard(cfg.gamma.dim(), &[]))?;
    let p = jc.payoff.clone();
    let check = jensen_check(&jc.function, move |x| p.eval(x), &cfg.gamma, &a, jc.horizon, cfg.suite.window, &cfg.pde)?;
    let tol = cfg.suite.numeric_tol;
    let passed = !convex.verdict || (check.delta >= -tol && check.conditional_min_delta >= -tol);
    Outcome::new(&json!({ "g_convex": convex, "jensen": check, "payoff": jc.payoff.label() }), None, passed)
}

pub fn risk(cfg: &Config) -> Result<Outcome> {
    let r = risk_demo(&cfg.risk, &cfg.pde, &cfg.paths.budget())?;
    let mut csv = String::from("view,volatility,value,se,inside\n");
    for (name, t) in [("trader_a", &r.trader_a), ("trader_b", &r.trader_b)] {
        csv.push_str(&format!("{name},{},{},{},{}\n", t.volatility, t.mean, t.se, t.inside));
    }
    csv.push_str(&format!("supervisor_lower,,{},,\nsupervisor_upper,,{},,\n", r.lower, r.upper));
    Outcome::new(&json!({ "spec": cfg.risk, "report": r }), Some(csv), r.consistent())
}
