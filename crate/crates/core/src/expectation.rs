//! G-expectation of cylinder functionals by backward recursion.
//!
//! For X = φ((a,B_{t₁}), …, (a,B_{t_m})) the last coordinate is integrated out
//! first: φ₁(x¹,…,x^{m−1}) = E[φ(x¹,…,x^{m−1}, x^{m−1} + B_{t_m} − B_{t_{m−1}})],
//! which is one 1D G-heat solve per prefix node. Repeating down to a scalar gives
//! E[X]; stopping after m − k steps gives E[X | H_{t_k}] tabulated on a grid.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{ScenarioSamples, SupEstimate};
use crate::pde::{evaluate_1d, Grid1D, SolverConfig};
use crate::sublinear::{directional_sigmas, Direction, UncertaintySet};

/// Largest number of observation times handled by the grid recursion.
pub const MAX_TIMES: usize = 3;

pub type Phi = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthTag {
    BoundedLipschitz,
    Polynomial,
}

/// φ((a,B_{t₁}), …, (a,B_{t_m})) with 1 ≤ m ≤ 3.
#[derive(Clone)]
pub struct CylinderFunctional {
    times: Vec<f64>,
    direction: Direction,
    phi: Phi,
    growth: GrowthTag,
    label: String,
}

impl fmt::Debug for CylinderFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderFunctional")
            .field("label", &self.label)
            .field("times", &self.times)
            .field("direction", &self.direction)
            .field("growth", &self.growth)
            .finish()
    }
}

fn check_mesh(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Empty("observation times"));
    }
    if times.len() > MAX_TIMES {
        return Err(Error::Unsupported(format!(
            "{} observation times; the grid recursion handles at most {MAX_TIMES}",
            times.len()
        )));
    }
    if !times.iter().all(|t| t.is_finite() && *t > 0.0) {
        return Err(Error::InvalidArgument("observation times must be finite and positive".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("observation times must be strictly increasing".into()));
    }
    Ok(())
}

impl CylinderFunctional {
    pub fn new<F>(times: Vec<f64>, direction: Direction, phi: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_mesh(&times)?;
        Ok(Self { times, direction, phi: Arc::new(phi), growth: GrowthTag::Polynomial, label: String::from("X") })
    }

    /// φ(B_t) for a single time.
    pub fn terminal<F>(t: f64, direction: Direction, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(vec![t], direction, move |x| f(x[0]))
    }

    /// The constant c on the given mesh.
    pub fn constant(times: Vec<f64>, direction: Direction, c: f64) -> Result<Self> {
        Ok(Self::new(times, direction, move |_| c)?.with_label(format!("{c}")))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_growth(mut self, growth: GrowthTag) -> Self {
        self.growth = growth;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn growth(&self) -> GrowthTag {
        self.growth
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn m(&self) -> usize {
        self.times.len()
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn eval(&self, xs: &[f64]) -> f64 {
        (self.phi)(xs)
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let phi = self.phi.clone();
        Self { phi: Arc::new(move |x| f(phi(x))), label: format!("f({})", self.label), ..self.clone() }
    }

    pub fn scale(&self, lambda: f64) -> Self {
        self.map(move |v| lambda * v).with_label(format!("{lambda}*{}", self.label))
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v).with_label(format!("-{}", self.label))
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(move |v| v + c).with_label(format!("{}+{c}", self.label))
    }

    /// f(X, Y) on the union of both meshes. Directions must agree.
    pub fn combine<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if self.direction != other.direction {
            return Err(Error::InvalidArgument("cannot combine functionals along different directions".into()));
        }
        let mut times: Vec<f64> = self.times.iter().chain(&other.times).copied().collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        check_mesh(&times)?;
        let pick = |own: &[f64]| -> Vec<usize> {
            own.iter().map(|t| times.iter().position(|u| u == t).expect("time in union")).collect()
        };
        let (ix, iy) = (pick(&self.times), pick(&other.times));
        let (px, py) = (self.phi.clone(), other.phi.clone());
        let phi = move |xs: &[f64]| {
            let mut bx = [0.0; MAX_TIMES];
            let mut by = [0.0; MAX_TIMES];
            for (slot, &i) in ix.iter().enumerate() {
                bx[slot] = xs[i];
            }
            for (slot, &i) in iy.iter().enumerate() {
                by[slot] = xs[i];
            }
            f(px(&bx[..ix.len()]), py(&by[..iy.len()]))
        };
        let growth = if self.growth == GrowthTag::BoundedLipschitz && other.growth == GrowthTag::BoundedLipschitz {
            GrowthTag::BoundedLipschitz
        } else {
            GrowthTag::Polynomial
        };
        Ok(Self {
            times,
            direction: self.direction.clone(),
            phi: Arc::new(phi),
            growth,
            label: format!("f({}, {})", self.label, other.label),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(self.combine(other, |a, b| a + b)?.with_label(format!("{}+{}", self.label, other.label)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(self.combine(other, |a, b| a - b)?.with_label(format!("{}-{}", self.label, other.label)))
    }

    pub fn max(&self, other: &Self) -> Result<Self> {
        Ok(self.combine(other, f64::max)?.with_label(format!("max({}, {})", self.label, other.label)))
    }
}

/// E[X | H_{t_k}] sampled on a tensor grid over the first k coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalValue {
    pub at_time: f64,
    pub grids: Vec<Grid1D>,
    /// Row-major over `grids`, last coordinate fastest.
    pub values: Vec<f64>,
}

impl ConditionalValue {
    pub fn k(&self) -> usize {
        self.grids.len()
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    /// Coordinates of node `idx`.
    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.k()];
        self.node_into(idx, &mut out);
        out
    }

    fn node_into(&self, mut idx: usize, out: &mut [f64]) {
        for j in (0..self.k()).rev() {
            let n = self.grids[j].len();
            out[j] = self.grids[j].node(idx % n);
            idx /= n;
        }
    }

    /// Multilinear interpolation at a prefix (linear extension outside).
    pub fn eval(&self, prefix: &[f64]) -> f64 {
        let k = self.k();
        let mut base = [0usize; MAX_TIMES];
        let mut w = [0.0; MAX_TIMES];
        for j in 0..k {
            let (i, wj) = self.grids[j].locate(prefix[j]);
            base[j] = i;
            w[j] = wj;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << k) {
            let mut weight = 1.0;
            let mut idx = 0;
            for j in 0..k {
                let up = (corner >> j) & 1 == 1;
                weight *= if up { w[j] } else { 1.0 - w[j] };
                idx = idx * self.grids[j].len() + base[j] + usize::from(up);
            }
            if weight != 0.0 {
                acc += weight * self.values[idx];
            }
        }
        acc
    }

    /// Largest |value − f(node)| over nodes with every coordinate in ±window.
    pub fn max_deviation<F: Fn(&[f64]) -> f64>(&self, f: F, window: f64) -> f64 {
        let mut p = vec![0.0; self.k()];
        let mut worst: f64 = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            self.node_into(idx, &mut p);
            if p.iter().all(|x| x.abs() <= window) {
                worst = worst.max((v - f(&p)).abs());
            }
        }
        worst
    }

    /// Largest f(node, value) over windowed nodes.
    pub fn max_over_nodes<F: Fn(&[f64], f64) -> f64>(&self, f: F, window: f64) -> f64 {
        let mut p = vec![0.0; self.k()];
        let mut worst = f64::NEG_INFINITY;
        for (idx, v) in self.values.iter().enumerate() {
            self.node_into(idx, &mut p);
            if p.iter().all(|x| x.abs() <= window) {
                worst = worst.max(f(&p, *v));
            }
        }
        worst
    }

    /// The conditional value as a functional on the first k times of `x`.
    pub fn as_functional(&self, x: &CylinderFunctional) -> Result<CylinderFunctional> {
        let me = Arc::new(self.clone());
        Ok(CylinderFunctional::new(x.times()[..self.k()].to_vec(), x.direction().clone(), move |p| me.eval(p))?
            .with_label(format!("E[{}|H]", x.label())))
    }
}

fn prefix_grids(x: &CylinderFunctional, k: usize, sigma_top: f64, cfg: &SolverConfig) -> Result<Vec<Grid1D>> {
    x.times[..k].iter().map(|&t| cfg.grid_for(sigma_top, t, 0.0, cfg.prefix_points)).collect()
}

/// F_k on the prefix grid from F_{k+1} (`upper`, a function of k + 1 coordinates).
fn tabulate_level(
    x: &CylinderFunctional,
    upper: &(dyn Fn(&[f64]) -> f64 + Sync),
    k: usize,
    sp: f64,
    sm: f64,
    cfg: &SolverConfig,
) -> Result<ConditionalValue> {
    let grids = prefix_grids(x, k, sp.max(-sm), cfg)?;
    let horizon = x.times[k] - x.times[k - 1];
    let shape = ConditionalValue { at_time: x.times[k - 1], grids, values: Vec::new() };
    let count: usize = shape.grids.iter().map(Grid1D::len).product();
    let values = (0..count)
        .into_par_iter()
        .map(|idx| {
            let mut p = [0.0; MAX_TIMES];
            shape.node_into(idx, &mut p[..k]);
            let base = p[k - 1];
            let inner = |z: f64| {
                let mut buf = p;
                buf[k] = base + z;
                upper(&buf[..=k])
            };
            evaluate_1d(sp, sm, inner, horizon, 0.0, cfg.nested_grid_points, cfg)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConditionalValue { values, ..shape })
}

/// Runs the recursion down to level `stop` (≥ 1) and returns that table.
fn reduce_to(
    x: &CylinderFunctional,
    stop: usize,
    sp: f64,
    sm: f64,
    cfg: &SolverConfig,
) -> Result<Option<ConditionalValue>> {
    let mut table: Option<ConditionalValue> = None;
    for k in (stop..x.m()).rev() {
        let next = match &table {
            None => tabulate_level(x, &|p: &[f64]| (x.phi)(p), k, sp, sm, cfg)?,
            Some(t) => tabulate_level(x, &|p: &[f64]| t.eval(p), k, sp, sm, cfg)?,
        };
        table = Some(next);
    }
    Ok(table)
}

/// E[X] under the G-expectation generated by `gamma`.
pub fn expect(x: &CylinderFunctional, gamma: &UncertaintySet, cfg: &SolverConfig) -> Result<f64> {
    cfg.validate()?;
    let (sp, sm) = directional_sigmas(gamma, &x.direction)?;
    let table = reduce_to(x, 1, sp, sm, cfg)?;
    let t1 = x.times[0];
    match table {
        None => evaluate_1d(sp, sm, |z| (x.phi)(&[z]), t1, 0.0, cfg.grid_points, cfg),
        Some(t) => evaluate_1d(sp, sm, |z| t.eval(&[z]), t1, 0.0, cfg.grid_points, cfg),
    }
}

/// E[X | H_{t_k}] for 1 ≤ k < m.
pub fn conditional_expect(
    x: &CylinderFunctional,
    k: usize,
    gamma: &UncertaintySet,
    cfg: &SolverConfig,
) -> Result<ConditionalValue> {
    cfg.validate()?;
    if k == 0 || k >= x.m() {
        return Err(Error::InvalidArgument(format!("conditioning index {k} outside 1..{}", x.m())));
    }
    let (sp, sm) = directional_sigmas(gamma, &x.direction)?;
    Ok(reduce_to(x, k, sp, sm, cfg)?.expect("k < m leaves at least one level"))
}

/// (Ê[|X|^p])^{1/p} for variable `var` of a scenario sample.
pub fn lp_norm(samples: &ScenarioSamples, var: usize, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    Ok(samples.estimate(|v| v[var].abs().powf(p))?.value.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Holds exactly for the monotone scheme, up to floating-point rounding.
    Exact,
    /// Subject to grid error.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomEntry {
    pub name: String,
    pub kind: CheckKind,
    pub checks: usize,
    pub worst_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub entries: Vec<AxiomEntry>,
}

impl AxiomReport {
    pub fn worst(&self, kind: CheckKind) -> f64 {
        self.entries.iter().filter(|e| e.kind == kind).map(|e| e.worst_violation).fold(0.0, f64::max)
    }

    pub fn entry(&self, name: &str) -> Option<&AxiomEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn passes(&self, exact_tol: f64, numeric_tol: f64) -> bool {
        self.worst(CheckKind::Exact) <= exact_tol && self.worst(CheckKind::Numerical) <= numeric_tol
    }
}

/// A prefix multiplier η(x¹), measurable with respect to the first time.
#[derive(Clone)]
pub struct PrefixFn {
    pub label: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for PrefixFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrefixFn({})", self.label)
    }
}

impl PrefixFn {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(label: &str, f: F) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }
}

/// Functionals on a common two-time mesh plus the scalars used by the checks.
#[derive(Debug, Clone)]
pub struct AxiomBattery {
    pub functionals: Vec<CylinderFunctional>,
    pub constants: Vec<f64>,
    pub scales: Vec<f64>,
    /// Bounded multipliers; unbounded ones are clamped to ±eta_bound.
    pub multipliers: Vec<PrefixFn>,
    pub eta_bound: f64,
    /// (s, t, ψ): compares E[ψ(B_{s+t} − B_s)] with E[ψ(B_t)].
    pub increments: Vec<(f64, f64, PrefixFn)>,
    /// Window on prefix nodes for pointwise conditional checks.
    pub window: f64,
}

impl AxiomBattery {
    /// Default battery on the mesh (0.5, 1) along `a`.
    pub fn standard(a: &Direction) -> Result<Self> {
        let mesh = vec![0.5, 1.0];
        let f = |label: &str, phi: fn(&[f64]) -> f64| -> Result<CylinderFunctional> {
            Ok(CylinderFunctional::new(mesh.clone(), a.clone(), phi)?.with_label(label))
        };
        Ok(Self {
            functionals: vec![
                f("B1^2", |x| x[1] * x[1])?,
                f("-B1^2", |x| -x[1] * x[1])?,
                f("B.5(B1-B.5)", |x| x[0] * (x[1] - x[0]))?,
                f("call(B1)-|B.5|/2", |x| x[1].max(0.0) - 0.5 * x[0].abs())?,
            ],
            constants: vec![-1.5, 0.0, 2.0],
            scales: vec![0.0, 0.5, 3.0],
            multipliers: vec![PrefixFn::new("sin", f64::sin), PrefixFn::new("x", |x| x)],
            eta_bound: 2.0,
            increments: vec![
                (0.5, 0.5, PrefixFn::new("call", |x: f64| x.max(0.0))),
                (0.25, 0.75, PrefixFn::new("-x^2", |x| -x * x)),
            ],
            window: 2.0,
        })
    }
}

struct Tally {
    name: &'static str,
    kind: CheckKind,
    checks: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, kind: CheckKind) -> Self {
        Self { name, kind, checks: 0, worst: 0.0 }
    }

    fn record(&mut self, violation: f64) {
        self.checks += 1;
        self.worst = self.worst.max(violation);
    }

    fn finish(self) -> AxiomEntry {
        AxiomEntry { name: self.name.into(), kind: self.kind, checks: self.checks, worst_violation: self.worst }
    }
}

fn rel(v: f64, reference: f64) -> f64 {
    v.abs() / reference.abs().max(1.0)
}

/// Checks the sublinear-expectation axioms and the conditional-expectation
/// properties numerically; reports the worst violation per property.
pub fn verify_expectation_axioms(
    gamma: &UncertaintySet,
    battery: &AxiomBattery,
    cfg: &SolverConfig,
) -> Result<AxiomReport> {
    use CheckKind::{Exact, Numerical};
    let fs = &battery.functionals;
    let first = fs.first().ok_or(Error::Empty("axiom battery"))?;
    if fs.iter().any(|f| f.times() != first.times() || f.m() < 2) {
        return Err(Error::InvalidArgument("battery functionals must share one mesh with >= 2 times".into()));
    }
    let a = first.direction().clone();
    let mesh = first.times().to_vec();
    let w = battery.window;
    let e = |x: &CylinderFunctional| expect(x, gamma, cfg);
    let ce = |x: &CylinderFunctional| conditional_expect(x, 1, gamma, cfg);

    let means: Vec<f64> = fs.iter().map(e).collect::<Result<_>>()?;
    let conds: Vec<ConditionalValue> = fs.iter().map(ce).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..fs.len()).flat_map(|i| (i + 1..fs.len()).map(move |j| (i, j))).collect();

    let mut mono = Tally::new("monotonicity", Numerical);
    let mut consts = Tally::new("constants", Exact);
    let mut subadd = Tally::new("subadditivity", Numerical);
    let mut homog = Tally::new("positive_homogeneity", Exact);
    let mut transl = Tally::new("translation", Exact);
    let mut c_ident = Tally::new("cond_known_value", Numerical);
    let mut c_mono = Tally::new("cond_monotonicity", Numerical);
    let mut c_subadd = Tally::new("cond_subadditivity", Numerical);
    let mut tower = Tally::new("tower", Numerical);
    let mut c_transl = Tally::new("cond_translation", Numerical);
    let mut c_mult = Tally::new("cond_multiplier", Numerical);
    let mut indep = Tally::new("independence", Numerical);
    let mut ident = Tally::new("identical_increments", Numerical);
    let mut additive = Tally::new("additive_symmetric_part", Numerical);

    for &c in &battery.constants {
        let k = CylinderFunctional::constant(mesh.clone(), a.clone(), c)?;
        consts.record((e(&k)? - c).abs());
        consts.record(ce(&k)?.max_deviation(|_| c, f64::INFINITY));
    }

    for (i, x) in fs.iter().enumerate() {
        for &lambda in &battery.scales {
            let v = e(&x.scale(lambda))?;
            homog.record(rel(v - lambda * means[i], lambda * means[i]));
        }
        for &c in &battery.constants {
            let v = e(&x.shift(c))?;
            transl.record(rel(v - means[i] - c, means[i] + c));
        }
        // tower: E[E[X|H_t]] = E[X]
        let outer = e(&conds[i].as_functional(x)?)?;
        tower.record((outer - means[i]).abs());

        for eta in &battery.multipliers {
            let (fe, b) = (eta.f.clone(), battery.eta_bound);
            let eta_fn = move |x1: f64| fe(x1).clamp(-b, b);
            let eta_x = {
                let g = eta_fn.clone();
                CylinderFunctional::new(vec![mesh[0]], a.clone(), move |p| g(p[0]))?
            };
            let plus = ce(&x.add(&eta_x)?)?;
            let cond = &conds[i];
            c_transl.record(plus.max_over_nodes(|p, v| (v - cond.eval(p) - eta_fn(p[0])).abs(), w));

            let prod = ce(&x.combine(&eta_x, |v, h| h * v)?)?;
            let neg = ce(&x.neg())?;
            c_mult.record(prod.max_over_nodes(
                |p, v| {
                    let h = eta_fn(p[0]);
                    (v - (h.max(0.0) * cond.eval(p) + (-h).max(0.0) * neg.eval(p))).abs()
                },
                w,
            ));
        }
    }

    // E[X | H_t] = X for X known at t
    for eta in &battery.multipliers {
        let (fe, b) = (eta.f.clone(), battery.eta_bound);
        let g = move |p: &[f64]| fe(p[0]).clamp(-b, b);
        let g2 = g.clone();
        let known = CylinderFunctional::new(mesh.clone(), a.clone(), move |p| g2(p))?;
        c_ident.record(ce(&known)?.max_deviation(g, w));
    }

    for &(i, j) in &pairs {
        let (x, y) = (&fs[i], &fs[j]);
        let hi = x.max(y)?;
        let e_hi = e(&hi)?;
        mono.record((means[i] - e_hi).max(0.0));
        mono.record((means[j] - e_hi).max(0.0));
        let c_hi = ce(&hi)?;
        let (cx, cy) = (&conds[i], &conds[j]);
        c_mono.record(c_hi.max_over_nodes(|p, v| (cx.eval(p).max(cy.eval(p)) - v).max(0.0), w));

        subadd.record((e(&x.add(y)?)? - means[i] - means[j]).max(0.0));
        let diff = ce(&x.sub(y)?)?;
        c_subadd.record(diff.max_over_nodes(|p, v| (cx.eval(p) - cy.eval(p) - v).max(0.0), w));
    }

    for (s, t, psi) in &battery.increments {
        let (f1, f2) = (psi.f.clone(), psi.f.clone());
        let shifted = CylinderFunctional::new(vec![*s, s + t], a.clone(), move |p| f1(p[1] - p[0]))?;
        let plain = CylinderFunctional::terminal(*t, a.clone(), move |x| f2(x))?;
        let e_plain = e(&plain)?;
        ident.record((e(&shifted)? - e_plain).abs());
        // the increment is independent of H_s
        indep.record(ce(&shifted)?.max_deviation(|_| e_plain, w));
    }

    // E[X + Y | H_1] = E[X | H_1] when E[Y|H_1] = E[−Y|H_1] = 0
    {
        let x = CylinderFunctional::new(vec![1.0, 2.0], a.clone(), |p| p[0] * p[0])?;
        let y = CylinderFunctional::new(vec![1.0, 2.0], a.clone(), |p| p[1] - p[0])?;
        let lhs = ce(&x.add(&y)?)?;
        let rhs = ce(&x)?;
        additive.record(lhs.max_over_nodes(|p, v| (v - rhs.eval(p)).abs(), w));
    }

    Ok(AxiomReport {
        entries: [
            mono, consts, subadd, homog, transl, c_ident, c_mono, c_subadd, tower, c_transl, c_mult, indep, ident,
            additive,
        ]
        .into_iter()
        .map(Tally::finish)
        .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// max(lhs − rhs, 0)
    pub violation: f64,
    /// 3 standard errors of the estimates involved.
    pub allowance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub checks: Vec<InequalityCheck>,
}

impl AppendixReport {
    pub fn worst_excess(&self) -> f64 {
        self.checks.iter().map(|c| c.violation - c.allowance).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.violation <= c.allowance)
    }
}

fn three_se(es: &[&SupEstimate]) -> f64 {
    3.0 * es.iter().map(|e| e.se).sum::<f64>()
}

/// Hölder, Minkowski, the C_r inequality and ‖X‖₁ ≤ ‖X‖₂ on the scenario-sup
/// estimator, for each variable pair of `samples`.
pub fn verify_appendix_inequalities(
    samples: &ScenarioSamples,
    pairs: &[(usize, usize)],
    p: f64,
    q: f64,
    r: f64,
) -> Result<AppendixReport> {
    if !(p > 1.0 && q > 1.0 && (1.0 / p + 1.0 / q - 1.0).abs() < 1e-12) {
        return Err(Error::InvalidArgument(format!("p = {p}, q = {q} are not conjugate exponents")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
    }
    if pairs.is_empty() {
        return Err(Error::Empty("variable pairs"));
    }
    let cr = 1f64.max(2f64.powf(r - 1.0));
    let mut checks = Vec::new();
    let mut push = |name: String, lhs: f64, rhs: f64, allowance: f64| {
        checks.push(InequalityCheck { name, lhs, rhs, violation: (lhs - rhs).max(0.0), allowance });
    };
    let norm = |var: usize, e: f64| -> Result<(f64, SupEstimate)> {
        let est = samples.estimate(|v| v[var].abs().powf(e))?;
        Ok((est.value.powf(1.0 / e), est))
    };
    let mut singles: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    singles.sort_unstable();
    singles.dedup();
    for &i in &singles {
        let (n1, e1) = norm(i, 1.0)?;
        let (n2, e2) = norm(i, 2.0)?;
        push(format!("norm_monotone[{i}]"), n1, n2, three_se(&[&e1, &e2]));
    }
    for &(i, j) in pairs {
        let exy = samples.estimate(|v| (v[i] * v[j]).abs())?;
        let (nxp, ex) = norm(i, p)?;
        let (nyq, ey) = norm(j, q)?;
        push(format!("holder[{i},{j}]"), exy.value, nxp * nyq, three_se(&[&exy, &ex, &ey]));

        let (sum_p, es) = {
            let est = samples.estimate(|v| (v[i] + v[j]).abs().powf(p))?;
            (est.value.powf(1.0 / p), est)
        };
        let (nyp, eyp) = norm(j, p)?;
        push(format!("minkowski[{i},{j}]"), sum_p, nxp + nyp, three_se(&[&es, &ex, &eyp]));

        let lhs = samples.estimate(|v| (v[i] + v[j]).abs().powf(r))?;
        let xr = samples.estimate(|v| v[i].abs().powf(r))?;
        let yr = samples.estimate(|v| v[j].abs().powf(r))?;
        push(format!("c_r[{i},{j}]"), lhs.value, cr * (xr.value + yr.value), three_se(&[&lhs, &xr, &yr]));
    }
    Ok(AppendixReport { p, q, r, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (UncertaintySet, Direction, SolverConfig) {
        let cfg = SolverConfig { prefix_points: 81, nested_grid_points: 201, grid_points: 801, ..Default::default() };
        (UncertaintySet::interval(0.5, 1.0).unwrap(), Direction::new(vec![1.0]).unwrap(), cfg)
    }

    #[test]
    fn mesh_validation() {
        let a = Direction::new(vec![1.0]).unwrap();
        assert!(CylinderFunctional::new(vec![], a.clone(), |_| 0.0).is_err());
        assert!(CylinderFunctional::new(vec![1.0, 0.5], a.clone(), |_| 0.0).is_err());
        assert!(CylinderFunctional::new(vec![0.0, 0.5], a.clone(), |_| 0.0).is_err());
        assert!(matches!(CylinderFunctional::new(vec![0.1, 0.2, 0.3, 0.4], a, |_| 0.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn combine_merges_meshes() {
        let a = Direction::new(vec![1.0]).unwrap();
        let x = CylinderFunctional::terminal(0.5, a.clone(), |v| v).unwrap();
        let y = CylinderFunctional::terminal(1.0, a, |v| 10.0 * v).unwrap();
        let z = x.add(&y).unwrap();
        assert_eq!(z.times(), &[0.5, 1.0]);
        assert_eq!(z.eval(&[1.0, 2.0]), 21.0);
    }

    #[test]
    fn increment_statistics() {
        let (g, a, cfg) = setup();
        let inc = CylinderFunctional::new(vec![0.5, 1.0], a.clone(), |x| x[1] - x[0]).unwrap();
        assert!(expect(&inc, &g, &cfg).unwrap().abs() < 2e-3);
        let sq = CylinderFunctional::new(vec![0.5, 1.0], a, |x| (x[1] - x[0]).powi(2)).unwrap();
        assert!((expect(&sq, &g, &cfg).unwrap() - 0.5).abs() < 2e-3);
    }

    #[test]
    fn conditional_of_signed_quadratic() {
        let (g, a, cfg) = setup();
        let x = CylinderFunctional::new(vec![1.0, 2.0], a, |x| x[0] * (x[1] - x[0]).powi(2)).unwrap();
        let c = conditional_expect(&x, 1, &g, &cfg).unwrap();
        let want = |p: &[f64]| p[0].max(0.0) - 0.25 * (-p[0]).max(0.0);
        assert!(c.max_deviation(want, 2.0) < 5e-3);
        assert!(conditional_expect(&x, 2, &g, &cfg).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_affine_tables() {
        let g = Grid1D::new(2.0, 5).unwrap();
        let mut values = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                values.push(1.0 + 2.0 * g.node(i) - g.node(j));
            }
        }
        let c = ConditionalValue { at_time: 1.0, grids: vec![g, g], values };
        assert!((c.eval(&[0.3, -0.7]) - (1.0 + 0.6 + 0.7)).abs() < 1e-14);
        assert_eq!(c.node(7), vec![-1.0, 0.0]);
    }
}
