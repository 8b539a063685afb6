//! Named check batteries for `gcalc suite`.
//!
//! A failing or erroring check never stops the battery; every check is
//! reported and the suite passes only if all of them do.

use std::f64::consts::PI;

use gcalc_core::expectation::CheckKind;
use gcalc_core::{
    bochner_integral, compensated_martingale_check, concave_payoff_value, conditional_expect, convex_payoff_value,
    euler_solve, evaluate_pt, integral_wrt_qv, is_g_convex, ito_integral, ito_refinement, jensen_check, moment_abs,
    moment_even_signed, picard_contraction, risk_demo, sample_scenarios, semigroup_compose, sigma_of,
    submartingale_check, verify_appendix_inequalities, verify_expectation_axioms, AxiomBattery, CylinderFunctional,
    Direction, GNormalParams, ItoIngredients, Partition, Payoff, ProbeSet, ScalarFunction2, ScenarioControl, SdeSpec,
    SimpleProcess, Smooth, SymMatrix,
};
use serde::{Deserialize, Serialize};

use crate::commands::ROUNDING;
use crate::config::Config;
use crate::error::{CliError, Result};

pub const SUITES: [&str; 5] = ["acceptance", "axioms", "calculus", "sde", "jensen"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, limit, passed: value <= limit, error: None }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, limit, passed: value >= limit, error: None }
    }

    /// A yes/no condition as 1 ≥ 1 or 0 ≥ 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }

    fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            relation: Relation::AtMost,
            limit: f64::NAN,
            passed: false,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub failures: usize,
    pub checks: Vec<Check>,
}

/// Runs a group, turning an error into one failed check named after the group.
fn group<F: FnOnce() -> Result<Vec<Check>>>(name: &str, f: F) -> Vec<Check> {
    f().unwrap_or_else(|e| vec![Check::failed(name, e)])
}

fn axis(cfg: &Config) -> Direction {
    Direction::unit(cfg.gamma.dim(), 0)
}

pub fn run(name: &str, cfg: &Config) -> Result<SuiteReport> {
    let checks = match name {
        "acceptance" => acceptance(cfg),
        "axioms" => axioms(cfg),
        "calculus" => calculus(cfg),
        "sde" => sde(cfg),
        "jensen" => jensen(cfg),
        other => return Err(CliError::Config(format!("unknown suite {other:?}; expected one of {SUITES:?}"))),
    };
    let failures = checks.iter().filter(|c| !c.passed).count();
    Ok(SuiteReport { suite: name.to_string(), passed: failures == 0, failures, checks })
}

pub fn axioms(cfg: &Config) -> Vec<Check> {
    group("axioms", || {
        let mut battery = AxiomBattery::standard(&axis(cfg))?;
        battery.window = cfg.suite.window;
        let report = verify_expectation_axioms(&cfg.gamma, &battery, &cfg.pde)?;
        Ok(report
            .entries
            .iter()
            .map(|e| {
                let limit = match e.kind {
                    CheckKind::Exact => cfg.suite.exact_tol,
                    CheckKind::Numerical => cfg.suite.numeric_tol,
                };
                Check::at_most(format!("axiom.{}", e.name), e.worst_violation, limit)
            })
            .collect())
    })
}

fn qv_checks(cfg: &Config) -> Result<Vec<Check>> {
    let a = axis(cfg);
    let sigma_up = sigma_of(&cfg.gamma, &SymMatrix::outer(&a))?;
    let sigma_low = -sigma_of(&cfg.gamma, &SymMatrix::outer(&a).neg())?;
    let p = Partition::uniform(1.0, cfg.suite.qv_steps)?;
    let top = ScenarioControl::constant(p, cfg.gamma.extreme_matrix(&a, true)?, "top");
    let samples = sample_scenarios(
        &cfg.gamma,
        std::slice::from_ref(&top),
        cfg.suite.mc_paths,
        cfg.paths.seed,
        &cfg.paths.budget(),
        2,
        |path, out| {
            let q = gcalc_core::quadratic_variation(path, &a).map(|q| q[q.len() - 1]).unwrap_or(f64::NAN);
            let int = SimpleProcess::adapted(path, &a, |k, _, prefix| prefix[k])
                .and_then(|b| ito_integral(&b, path, &a))
                .unwrap_or(f64::NAN);
            let bt = path.terminal(&a).unwrap_or(f64::NAN);
            out[0] = q;
            out[1] = (bt * bt - 2.0 * int - q).abs();
        },
    )?;
    let mut checks = Vec::new();
    for k in 1..=3 {
        let s = samples.control_stat(0, |v| v[0].powi(k));
        let target = sigma_up.powi(k);
        checks.push(Check::at_most(format!("qv.moment{k}.rel_error"), (s.mean - target).abs() / target, 0.05));
    }
    let identity = (0..samples.n_paths()).map(|i| samples.path_values(0, i)[1]).fold(0.0, f64::max);
    checks.push(Check::at_most("qv.pathwise_identity", identity, ROUNDING));

    // E[⟨B⟩_t − ⟨B⟩_s | H_s] through B increments, both signs
    let (s, t) = (0.5, 1.0);
    let inc = CylinderFunctional::new(vec![s, t], a.clone(), |v| (v[1] - v[0]).powi(2))?;
    let up = conditional_expect(&inc, 1, &cfg.gamma, &cfg.pde)?;
    checks.push(Check::at_most(
        "qv.conditional_upper",
        up.max_deviation(|_| sigma_up * (t - s), cfg.suite.window),
        cfg.suite.numeric_tol,
    ));
    let down = conditional_expect(&inc.neg(), 1, &cfg.gamma, &cfg.pde)?;
    checks.push(Check::at_most(
        "qv.conditional_lower",
        down.max_deviation(|_| -sigma_low * (t - s), cfg.suite.window),
        cfg.suite.numeric_tol,
    ));
    Ok(checks)
}

/// Zero mean, energy bound and isometry of ∫η dB for η_k = sin(B_{t_k}) on
/// each ladder control.
fn integral_checks(cfg: &Config) -> Result<Vec<Check>> {
    let a = axis(cfg);
    let sigma_up = sigma_of(&cfg.gamma, &SymMatrix::outer(&a))?;
    let p = Partition::uniform(1.0, 200)?;
    let controls = ScenarioControl::ladder(&cfg.gamma, &p, 3);
    let samples = sample_scenarios(
        &cfg.gamma,
        &controls,
        cfg.suite.mc_paths,
        cfg.paths.seed,
        &cfg.paths.budget(),
        3,
        |path, out| {
            let r: gcalc_core::Result<[f64; 3]> = (|| {
                let eta = SimpleProcess::adapted(path, &a, |k, _, prefix| prefix[k].sin())?;
                let sq = eta.map(|v| v * v);
                Ok([ito_integral(&eta, path, &a)?, integral_wrt_qv(&sq, path, &a)?, bochner_integral(&sq, path)?])
            })();
            out.copy_from_slice(&r.unwrap_or([f64::NAN; 3]));
        },
    )?;
    let mut checks = Vec::new();
    for c in 0..samples.n_controls() {
        let label = &samples.labels()[c];
        let mean = samples.control_stat(c, |v| v[0]);
        checks.push(Check::at_most(format!("ito.zero_mean[{label}]"), mean.mean.abs(), 3.0 * mean.se));
        let iso = samples.control_stat(c, |v| v[0] * v[0] - v[1]);
        checks.push(Check::at_most(format!("ito.isometry[{label}]"), iso.mean.abs(), 3.0 * iso.se));
        let energy = samples.control_stat(c, |v| v[0] * v[0] - sigma_up * v[2]);
        checks.push(Check::at_most(format!("ito.energy_bound[{label}]"), energy.mean, 3.0 * energy.se));
    }
    Ok(checks)
}

fn ito_formula_checks(cfg: &Config) -> Result<Vec<Check>> {
    let a = axis(cfg);
    let p = Partition::uniform(1.0, cfg.suite.ito_steps)?;
    let finest = ScenarioControl::constant(p, cfg.gamma.extreme_matrix(&a, true)?, "top");
    let one_d = cfg.gamma.dim() == 1;
    let mut checks = Vec::new();
    if !one_d {
        return Ok(checks);
    }
    let square = (0..20)
        .map(|i| {
            let path = gcalc_core::generate_path_indexed(&finest, cfg.paths.seed, i);
            gcalc_core::ito_residual(&Smooth::power(2), &ItoIngredients::brownian(), &path).map(|r| r.max_abs)
        })
        .collect::<gcalc_core::Result<Vec<_>>>()?;
    checks.push(Check::at_most("ito_formula.square_residual", square.into_iter().fold(0.0, f64::max), ROUNDING));
    let mixed = ItoIngredients::constant(vec![0.3], vec![0.2], vec![-0.1], vec![0.8]);
    for (phi, ing) in [
        (Smooth::power(3), ItoIngredients::brownian()),
        (Smooth::sin(), ItoIngredients::brownian()),
        (Smooth::exp(), mixed.clone()),
        (Smooth::power(3), mixed),
    ] {
        let r = ito_refinement(&phi, &ing, &finest, cfg.suite.ito_levels, cfg.suite.mc_paths, cfg.paths.seed)?;
        // worst order, credited with three standard errors
        let worst = r.orders.iter().zip(&r.order_se).map(|(o, se)| o + 3.0 * se).fold(f64::INFINITY, f64::min);
        checks.push(Check::at_least(format!("ito_formula.order[{}]", phi.name), worst, 1.0));
    }
    Ok(checks)
}

pub fn calculus(cfg: &Config) -> Vec<Check> {
    let mut checks = group("qv", || qv_checks(cfg));
    checks.extend(group("ito", || integral_checks(cfg)));
    checks.extend(group("ito_formula", || ito_formula_checks(cfg)));
    checks
}

pub fn sde(cfg: &Config) -> Vec<Check> {
    let mut checks = group("sde.picard", || {
        let sc = &cfg.sde;
        let r = picard_contraction(&sc.spec, &cfg.gamma, sc.ladder_levels, &sc.picard, &cfg.paths.budget())?;
        Ok(vec![
            Check::at_most("sde.picard.max_ratio", r.max_ratio, 0.6),
            Check::at_most("sde.picard.fixed_point_residual", r.fixed_point_residual, 1e-6),
        ])
    });
    checks.extend(group("sde.mean_preservation", || {
        let spec = SdeSpec::geometric(1.0, 1.0);
        if cfg.gamma.dim() != 1 {
            return Ok(Vec::new());
        }
        let p = Partition::uniform(1.0, 100)?;
        let controls = ScenarioControl::ladder(&cfg.gamma, &p, 3);
        let samples = sample_scenarios(
            &cfg.gamma,
            &controls,
            cfg.suite.mc_paths,
            cfg.paths.seed,
            &cfg.paths.budget(),
            1,
            |path, out| {
                out[0] = euler_solve(&spec, path).map(|x| x.terminal()[0]).unwrap_or(f64::NAN);
            },
        )?;
        Ok((0..samples.n_controls())
            .map(|c| {
                let s = samples.control_stat(c, |v| v[0]);
                Check::at_most(format!("sde.mean_preservation[{}]", s.label), (s.mean - 1.0).abs(), 3.0 * s.se)
            })
            .collect())
    }));
    checks
}

pub fn jensen(cfg: &Config) -> Vec<Check> {
    let tol = cfg.suite.numeric_tol;
    let mut checks = group("jensen.convexity", || {
        let probes = ProbeSet::standard(cfg.gamma.dim(), &[]);
        let mut out = Vec::new();
        for h in [ScalarFunction2::Linear, ScalarFunction2::Square, ScalarFunction2::Exp] {
            let r = is_g_convex(&h, &cfg.gamma, &probes)?;
            out.push(Check::at_least(format!("jensen.g_convex[{}]", r.function), r.min_value, -1e-10));
        }
        let r = is_g_convex(&ScalarFunction2::NegSquare, &cfg.gamma, &probes)?;
        out.push(Check::at_most("jensen.not_g_convex[neg_square]", r.min_value, -1e-10));
        Ok(out)
    });
    checks.extend(group("jensen.delta", || {
        let a = axis(cfg);
        let payoffs = [Payoff::Power { n: 1 }, Payoff::Call { strike: 0.0 }, Payoff::Put { strike: 0.5 }];
        let mut out = Vec::new();
        for h in [ScalarFunction2::Linear, ScalarFunction2::Square, ScalarFunction2::Exp] {
            for p in &payoffs {
                let q = p.clone();
                let r = jensen_check(&h, move |x| q.eval(x), &cfg.gamma, &a, 1.0, cfg.suite.window, &cfg.pde)?;
                let tag = format!("{},{}", h.name(), p.label());
                out.push(Check::at_least(format!("jensen.delta[{tag}]"), r.delta, -tol));
                out.push(Check::at_least(format!("jensen.conditional_delta[{tag}]"), r.conditional_min_delta, -tol));
            }
        }
        let r = jensen_check(&ScalarFunction2::NegSquare, |x| x, &cfg.gamma, &a, 1.0, cfg.suite.window, &cfg.pde)?;
        out.push(Check::at_most("jensen.counterexample_delta[neg_square,x]", r.delta, -tol));
        Ok(out)
    }));
    checks.extend(group("martingale", || martingale_checks(cfg)));
    checks
}

fn martingale_checks(cfg: &Config) -> Result<Vec<Check>> {
    let tol = cfg.suite.numeric_tol;
    let a = axis(cfg);
    let aat = SymMatrix::outer(&a);
    let (s, t) = (0.5, 1.0);
    let zero = vec![0.0; cfg.gamma.dim()];
    let mut out = Vec::new();
    let pos = compensated_martingale_check(&aat, &zero, &cfg.gamma, s, t, cfg.suite.window, &cfg.pde)?;
    out.push(Check::at_most("martingale.compensated[eta=1]", pos.violation, tol));
    let spread = (sigma_of(&cfg.gamma, &aat)? + sigma_of(&cfg.gamma, &aat.neg())?) * (t - s);
    out.push(Check::at_least("martingale.negated_gap[eta=1]", pos.negated_gap, spread - tol));
    let neg = compensated_martingale_check(&aat.neg(), &zero, &cfg.gamma, s, t, cfg.suite.window, &cfg.pde)?;
    out.push(Check::at_most("martingale.compensated[eta=-1]", neg.violation, tol));
    let x = CylinderFunctional::new(vec![1.0, 2.0], a, |v| v[1])?;
    let sub = submartingale_check(&ScalarFunction2::Square, &x, 1.0, 2.0, &cfg.gamma, cfg.suite.window, &cfg.pde)?;
    out.push(Check::at_least("martingale.submartingale[square]", sub.margin, -tol));
    Ok(out)
}

fn moment_checks(cfg: &Config) -> Result<Vec<Check>> {
    let a = axis(cfg);
    let params = GNormalParams::from_direction(&cfg.gamma, &a, 1.0)?;
    let pt = |f: fn(f64) -> f64| evaluate_pt(&cfg.gamma, &a, f, 1.0, 0.0, &cfg.pde);
    let rows = [
        ("moment.B^2", moment_even_signed(&params, 2, 1)?, pt(|x| x * x)?),
        ("moment.-B^2", moment_even_signed(&params, 2, -1)?, pt(|x| -x * x)?),
        ("moment.B^4", moment_even_signed(&params, 4, 1)?, pt(|x| x.powi(4))?),
        ("moment.|B|", moment_abs(&params, 1)?, pt(f64::abs)?),
        ("moment.|B|^3", moment_abs(&params, 3)?, pt(|x| x.abs().powi(3))?),
    ];
    Ok(rows.into_iter().map(|(n, c, v)| Check::at_most(n, (c - v).abs(), 2e-3)).collect())
}

fn closed_form_checks(cfg: &Config) -> Result<Vec<Check>> {
    let a = axis(cfg);
    let params = GNormalParams::from_direction(&cfg.gamma, &a, 1.0)?;
    let call = |x: f64| x.max(0.0);
    let pde_call = evaluate_pt(&cfg.gamma, &a, call, 1.0, 0.0, &cfg.pde)?;
    let pde_concave = evaluate_pt(&cfg.gamma, &a, |x| -call(x), 1.0, 0.0, &cfg.pde)?;
    let quad_call = convex_payoff_value(&params, call, 0.0)?;
    let quad_concave = concave_payoff_value(&params, |x| -call(x), 0.0)?;
    let exact_call = (params.upper_variance() / (2.0 * PI)).sqrt();
    let exact_concave = -(params.lower_variance() / (2.0 * PI)).sqrt();
    Ok(vec![
        Check::at_most("closed_form.call", (pde_call - exact_call).abs(), 1e-3),
        Check::at_most("closed_form.concave", (pde_concave - exact_concave).abs(), 1e-3),
        Check::at_most("closed_form.call_quadrature_vs_pde", (pde_call - quad_call).abs(), 2e-3),
        Check::at_most("closed_form.concave_quadrature_vs_pde", (pde_concave - quad_concave).abs(), 2e-3),
    ])
}

fn semigroup_checks(cfg: &Config) -> Result<Vec<Check>> {
    let a = axis(cfg);
    let battery: [(&str, fn(f64) -> f64); 4] = [
        ("call", |x| x.max(0.0)),
        ("abs", f64::abs),
        ("square", |x| x * x),
        ("put_spread", |x| (0.5 - x).max(0.0) - 0.5 * (-x).max(0.0)),
    ];
    battery
        .into_iter()
        .map(|(name, f)| {
            let (composed, direct) = semigroup_compose(&cfg.gamma, &a, f, 0.5, 0.5, cfg.suite.window, &cfg.pde)?;
            Ok(Check::at_most(format!("semigroup[{name}]"), composed.sup_gap(&direct, cfg.suite.window), 5e-3))
        })
        .collect()
}

fn risk_checks(cfg: &Config) -> Result<Vec<Check>> {
    let r = risk_demo(&cfg.risk, &cfg.pde, &cfg.paths.budget())?;
    let t = cfg.risk.horizon;
    let sign = cfg.risk.claim.sign();
    Ok(vec![
        Check::at_most("risk.trader_a", (r.trader_a.mean - sign * t).abs(), 0.02),
        Check::at_most("risk.trader_b", (r.trader_b.mean - sign * 0.25 * t).abs(), 0.01),
        Check::holds("risk.inside_bounds", r.consistent()),
    ])
}

fn inequality_checks(cfg: &Config) -> Result<Vec<Check>> {
    let a = axis(cfg);
    let p = Partition::uniform(1.0, 50)?;
    let controls = ScenarioControl::ladder(&cfg.gamma, &p, 5);
    let samples = sample_scenarios(
        &cfg.gamma,
        &controls,
        cfg.suite.mc_paths,
        cfg.paths.seed,
        &cfg.paths.budget(),
        4,
        |path, out| {
            let pos = path.positions(&a).unwrap_or_else(|_| vec![f64::NAN; 51]);
            let (half, end) = (pos[25], pos[50]);
            out[0] = end;
            out[1] = half * half - 0.5;
            out[2] = (end - half).max(0.0);
            out[3] = end.sin() + half;
        },
    )?;
    let pairs = [(0, 1), (0, 2), (1, 3), (2, 3)];
    let mut out = Vec::new();
    for (pe, qe, r) in [(2.0, 2.0, 1.0), (3.0, 1.5, 2.0), (1.5, 3.0, 0.5)] {
        let report = verify_appendix_inequalities(&samples, &pairs, pe, qe, r)?;
        for c in &report.checks {
            out.push(Check::at_most(format!("inequality[p={pe},r={r}].{}", c.name), c.violation, c.allowance));
        }
    }
    Ok(out)
}

pub fn acceptance(cfg: &Config) -> Vec<Check> {
    let mut checks = group("moments", || moment_checks(cfg));
    checks.extend(group("closed_forms", || closed_form_checks(cfg)));
    checks.extend(group("semigroup", || semigroup_checks(cfg)));
    checks.extend(axioms(cfg));
    checks.extend(calculus(cfg));
    checks.extend(jensen(cfg));
    checks.extend(sde(cfg));
    checks.extend(group("risk", || risk_checks(cfg)));
    checks.extend(group("inequality", || inequality_checks(cfg)));
    checks
}
