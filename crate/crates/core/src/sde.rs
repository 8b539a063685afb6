//! SDEs driven by G-Brownian motion, solved scenario by scenario.
//!
//! dX = b(X)dt + h_ij(X)d⟨B^i,B^j⟩ + σ_j(X)dB^j with the mutual variation taken
//! as the realized product ΔB^iΔB^j on each cell.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{generate_path_indexed, Budget, Partition, SamplePath, ScenarioControl};
use crate::sublinear::UncertaintySet;

const BLOW_UP: f64 = 1e12;

/// A vector field R^n → R^n from a small named library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Field {
    Zero,
    Constant {
        value: Vec<f64>,
    },
    /// x ↦ M x
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    /// x ↦ M x + c
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// x ↦ rate · x
    Geometric {
        rate: f64,
    },
    /// x ↦ rate · x + amplitude · sin(x), componentwise
    SinePerturbed {
        rate: f64,
        amplitude: f64,
    },
}

impl Field {
    fn validate(&self, n: usize) -> Result<()> {
        let square = |m: &Vec<Vec<f64>>| {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                Err(Error::DimensionMismatch { expected: n, actual: m.len() })
            } else {
                Ok(())
            }
        };
        match self {
            Field::Zero | Field::Geometric { .. } | Field::SinePerturbed { .. } => Ok(()),
            Field::Constant { value } if value.len() != n => {
                Err(Error::DimensionMismatch { expected: n, actual: value.len() })
            }
            Field::Constant { .. } => Ok(()),
            Field::Linear { matrix } => square(matrix),
            Field::Affine { matrix, offset } => {
                square(matrix)?;
                if offset.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: offset.len() });
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Field::Zero)
    }

    /// out += scale · f(x)
    #[inline]
    pub fn add_to(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Field::Zero => {}
            Field::Constant { value } => out.iter_mut().zip(value).for_each(|(o, v)| *o += scale * v),
            Field::Linear { matrix } => {
                for (o, row) in out.iter_mut().zip(matrix) {
                    *o += scale * row.iter().zip(x).map(|(m, v)| m * v).sum::<f64>();
                }
            }
            Field::Affine { matrix, offset } => {
                for ((o, row), c) in out.iter_mut().zip(matrix).zip(offset) {
                    *o += scale * (row.iter().zip(x).map(|(m, v)| m * v).sum::<f64>() + c);
                }
            }
            Field::Geometric { rate } => out.iter_mut().zip(x).for_each(|(o, v)| *o += scale * rate * v),
            Field::SinePerturbed { rate, amplitude } => {
                out.iter_mut().zip(x).for_each(|(o, v)| *o += scale * (rate * v + amplitude * v.sin()))
            }
        }
    }

    /// A Lipschitz constant in the Euclidean norm.
    pub fn lipschitz_bound(&self) -> f64 {
        let frob = |m: &Vec<Vec<f64>>| m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            Field::Zero | Field::Constant { .. } => 0.0,
            Field::Linear { matrix } | Field::Affine { matrix, .. } => frob(matrix),
            Field::Geometric { rate } => rate.abs(),
            Field::SinePerturbed { rate, amplitude } => rate.abs() + amplitude.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSpec {
    /// Driving dimension d.
    pub d: usize,
    pub x0: Vec<f64>,
    pub b: Field,
    /// h[i][j], d × d.
    pub h: Vec<Vec<Field>>,
    /// σ[j], d entries.
    pub sigma: Vec<Field>,
    /// Caller-supplied Lipschitz constant K for all coefficients.
    pub lipschitz: f64,
}

impl SdeSpec {
    /// dX = β X dB, one-dimensional.
    pub fn geometric(x0: f64, vol: f64) -> Self {
        Self {
            d: 1,
            x0: vec![x0],
            b: Field::Zero,
            h: vec![vec![Field::Zero]],
            sigma: vec![Field::Geometric { rate: vol }],
            lipschitz: vol.abs(),
        }
    }

    pub fn n(&self) -> usize {
        self.x0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Empty("initial state"));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { location: "x0".into() });
        }
        if self.h.len() != self.d || self.h.iter().any(|r| r.len() != self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, actual: self.h.len() });
        }
        if self.sigma.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, actual: self.sigma.len() });
        }
        if !(self.lipschitz >= 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!("Lipschitz constant must be >= 0, got {}", self.lipschitz)));
        }
        self.b.validate(n)?;
        self.h.iter().flatten().chain(&self.sigma).try_for_each(|f| f.validate(n))?;
        let declared = self.lipschitz * (1.0 + 1e-12);
        if let Some(f) = std::iter::once(&self.b)
            .chain(self.h.iter().flatten())
            .chain(&self.sigma)
            .find(|f| f.lipschitz_bound() > declared)
        {
            return Err(Error::InvalidArgument(format!(
                "coefficient {f:?} has Lipschitz bound {} above the declared K = {}",
                f.lipschitz_bound(),
                self.lipschitz
            )));
        }
        Ok(())
    }

    /// X_{k+1} − X_k given the state y driving the coefficients on cell k.
    #[inline]
    fn step_increment(&self, y: &[f64], dt: f64, db: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        self.b.add_to(y, dt, out);
        for i in 0..self.d {
            for j in 0..self.d {
                if !self.h[i][j].is_zero() {
                    self.h[i][j].add_to(y, db[i] * db[j], out);
                }
            }
            self.sigma[i].add_to(y, db[i], out);
        }
    }
}

/// X at every partition point, row-major by node.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    partition: Partition,
    n: usize,
    states: Vec<f64>,
}

impl StatePath {
    pub fn constant(partition: Partition, x: &[f64]) -> Self {
        let states = x.iter().copied().cycle().take(x.len() * (partition.steps() + 1)).collect();
        Self { partition, n: x.len(), states }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n..(k + 1) * self.n]
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.partition.steps())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            out.push_str(&format!(",X{i}"));
        }
        out.push('\n');
        for (k, t) in self.partition.points().iter().enumerate() {
            out.push_str(&t.to_string());
            for v in self.state(k) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_path(spec: &SdeSpec, path: &SamplePath) -> Result<()> {
    if path.dim() != spec.d {
        return Err(Error::DimensionMismatch { expected: spec.d, actual: path.dim() });
    }
    Ok(())
}

/// Λ(Y): X₀ + Σ coefficients evaluated at Y_k, on one path.
fn apply_lambda(spec: &SdeSpec, y: &StatePath, path: &SamplePath) -> Result<StatePath> {
    let p = path.partition();
    let n = spec.n();
    let mut states = Vec::with_capacity(n * (p.steps() + 1));
    states.extend_from_slice(&spec.x0);
    let mut inc = vec![0.0; n];
    for k in 0..p.steps() {
        spec.step_increment(y.state(k), p.dt(k), path.increment(k), &mut inc);
        let base = k * n;
        for i in 0..n {
            let v = states[base + i] + inc[i];
            states.push(v);
        }
    }
    Ok(StatePath { partition: p.clone(), n, states })
}

/// Euler scheme along one sample path.
pub fn euler_solve(spec: &SdeSpec, path: &SamplePath) -> Result<StatePath> {
    spec.validate()?;
    check_path(spec, path)?;
    let p = path.partition();
    let n = spec.n();
    let mut states = Vec::with_capacity(n * (p.steps() + 1));
    states.extend_from_slice(&spec.x0);
    let mut inc = vec![0.0; n];
    for k in 0..p.steps() {
        let (done, _) = states.split_at(k * n + n);
        let x = &done[k * n..];
        spec.step_increment(x, p.dt(k), path.increment(k), &mut inc);
        let next: Vec<f64> = x.iter().zip(&inc).map(|(a, b)| a + b).collect();
        let magnitude = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(magnitude <= BLOW_UP) {
            return Err(Error::BlowUp { step: k + 1, magnitude });
        }
        states.extend_from_slice(&next);
    }
    Ok(StatePath { partition: p.clone(), n, states })
}

/// Weight constant C = (1 + d + d²)·K²·(T + σ_max + σ_max²·T), σ_max = sup tr[γγᵀ].
pub fn picard_weight(spec: &SdeSpec, gamma: &UncertaintySet, horizon: f64) -> f64 {
    let d = spec.d as f64;
    let s = gamma.max_trace();
    (1.0 + d + d * d) * spec.lipschitz.powi(2) * (horizon + s + s * s * horizon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// Y ≡ x0
    Start,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    pub iterations: usize,
    pub n_paths: usize,
    pub steps: usize,
    pub horizon: f64,
    pub seed: u64,
    /// Overrides the weight constant C when set.
    pub weight: Option<f64>,
    pub guesses: (InitialGuess, InitialGuess),
    /// Stop criterion for the fixed-point run.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iterations: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            iterations: 8,
            n_paths: 2000,
            steps: 100,
            horizon: 1.0,
            seed: 2024,
            weight: None,
            guesses: (InitialGuess::Start, InitialGuess::Zero),
            fixed_point_tol: 1e-6,
            max_fixed_point_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub weight: f64,
    /// Weighted distances D_n between the two iterates, n = 0..=iterations.
    pub distances: Vec<f64>,
    /// D_{n+1} / D_n, with 0 when D_n = 0.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Weighted distance between successive iterates at the stop.
    pub fixed_point_distance: f64,
    /// Distance moved by one more application after the stop.
    pub fixed_point_residual: f64,
    pub fixed_point_iterations: usize,
}

/// (Σ_k Δt_k e^{−2Ct_k} · max over controls of the path mean of |Y_k − Y'_k|²)^{1/2}.
fn weighted_distance(p: &Partition, weight: f64, ys: &[Vec<StatePath>], zs: &[Vec<StatePath>]) -> f64 {
    let mut total = 0.0;
    for k in 0..p.steps() {
        let t = p.points()[k];
        let sup = ys
            .iter()
            .zip(zs)
            .map(|(yc, zc)| {
                let s: f64 = yc
                    .iter()
                    .zip(zc)
                    .map(|(y, z)| y.state(k).iter().zip(z.state(k)).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                    .sum();
                s / yc.len() as f64
            })
            .fold(0.0, f64::max);
        total += p.dt(k) * (-2.0 * weight * t).exp() * sup;
    }
    total.sqrt()
}

/// Measures the weighted contraction of the Picard map Λ on a scenario family.
pub fn picard_contraction(
    spec: &SdeSpec,
    gamma: &UncertaintySet,
    controls_levels: usize,
    cfg: &PicardConfig,
    budget: &Budget,
) -> Result<PicardReport> {
    spec.validate()?;
    if spec.d != gamma.dim() {
        return Err(Error::DimensionMismatch { expected: gamma.dim(), actual: spec.d });
    }
    let p = Partition::uniform(cfg.horizon, cfg.steps)?;
    let controls = ScenarioControl::ladder(gamma, &p, controls_levels);
    let requested = (controls.len() * cfg.n_paths * cfg.steps * spec.d) as u128;
    if requested > budget.max_normals {
        return Err(Error::BudgetExhausted { requested, limit: budget.max_normals });
    }
    let weight = cfg.weight.unwrap_or_else(|| picard_weight(spec, gamma, cfg.horizon));
    let paths: Vec<Vec<SamplePath>> = controls
        .iter()
        .map(|c| (0..cfg.n_paths as u64).into_par_iter().map(|i| generate_path_indexed(c, cfg.seed, i)).collect())
        .collect();
    let init = |g: InitialGuess| -> Vec<Vec<StatePath>> {
        let x = match g {
            InitialGuess::Start => spec.x0.clone(),
            InitialGuess::Zero => vec![0.0; spec.n()],
        };
        paths.iter().map(|pc| vec![StatePath::constant(p.clone(), &x); pc.len()]).collect()
    };
    let lambda = |ys: &[Vec<StatePath>]| -> Result<Vec<Vec<StatePath>>> {
        ys.iter()
            .zip(&paths)
            .map(|(yc, pc)| yc.par_iter().zip(pc).map(|(y, path)| apply_lambda(spec, y, path)).collect())
            .collect()
    };

    let (mut y, mut z) = (init(cfg.guesses.0), init(cfg.guesses.1));
    let mut distances = vec![weighted_distance(&p, weight, &y, &z)];
    for _ in 0..cfg.iterations {
        y = lambda(&y)?;
        z = lambda(&z)?;
        distances.push(weighted_distance(&p, weight, &y, &z));
    }
    let ratios: Vec<f64> = distances.windows(2).map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] }).collect();

    let mut current = init(cfg.guesses.0);
    let mut moved = f64::INFINITY;
    let mut iterations = 0;
    while moved >= cfg.fixed_point_tol && iterations < cfg.max_fixed_point_iterations {
        let next = lambda(&current)?;
        moved = weighted_distance(&p, weight, &next, &current);
        current = next;
        iterations += 1;
    }
    let once_more = lambda(&current)?;
    let residual = weighted_distance(&p, weight, &once_more, &current);

    Ok(PicardReport {
        weight,
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        distances,
        ratios,
        fixed_point_distance: moved,
        fixed_point_residual: residual,
        fixed_point_iterations: iterations,
    })
}

/// A C² function Φ: R^n → R with closed-form gradient and Hessian.
#[derive(Clone)]
pub struct Smooth {
    pub name: String,
    pub n: usize,
    pub f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    /// Row-major n × n.
    pub hess: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

impl fmt::Debug for Smooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Smooth({}, n = {})", self.name, self.n)
    }
}

impl Smooth {
    /// Φ(x) = h(x) on R with h', h'' supplied.
    pub fn scalar<F, D1, D2>(name: &str, h: F, d1: D1, d2: D2) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            n: 1,
            f: Arc::new(move |x| h(x[0])),
            grad: Arc::new(move |x, g| g[0] = d1(x[0])),
            hess: Arc::new(move |x, h| h[0] = d2(x[0])),
        }
    }

    /// xᵖ on R.
    pub fn power(p: i32) -> Self {
        let pf = p as f64;
        Self::scalar(
            &format!("x^{p}"),
            move |x| x.powi(p),
            move |x| if p == 0 { 0.0 } else { pf * x.powi(p - 1) },
            move |x| if p < 2 { 0.0 } else { pf * (pf - 1.0) * x.powi(p - 2) },
        )
    }

    pub fn sin() -> Self {
        Self::scalar("sin", f64::sin, f64::cos, |x| -x.sin())
    }

    pub fn exp() -> Self {
        Self::scalar("exp", f64::exp, f64::exp, f64::exp)
    }
}

/// Ingredients of X_t = X₀ + ∫α dt + ∫η^{ij} d⟨B^i,B^j⟩ + ∫β^j dB^j.
/// Each ingredient holds one entry per cell, or a single entry used on every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItoIngredients {
    pub x0: Vec<f64>,
    /// α^ν, length n per entry.
    pub alpha: Vec<Vec<f64>>,
    /// η^{νij}, row-major n × d × d per entry.
    pub eta: Vec<Vec<f64>>,
    /// β^{νj}, row-major n × d per entry.
    pub beta: Vec<Vec<f64>>,
}

impl ItoIngredients {
    pub fn constant(x0: Vec<f64>, alpha: Vec<f64>, eta: Vec<f64>, beta: Vec<f64>) -> Self {
        Self { x0, alpha: vec![alpha], eta: vec![eta], beta: vec![beta] }
    }

    /// X = B in one dimension.
    pub fn brownian() -> Self {
        Self::constant(vec![0.0], vec![0.0], vec![0.0], vec![1.0])
    }

    fn pick(v: &[Vec<f64>], k: usize) -> &[f64] {
        if v.len() == 1 {
            &v[0]
        } else {
            &v[k]
        }
    }

    fn validate(&self, n: usize, d: usize, steps: usize) -> Result<()> {
        if self.x0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: self.x0.len() });
        }
        for (v, width) in [(&self.alpha, n), (&self.eta, n * d * d), (&self.beta, n * d)] {
            if v.len() != 1 && v.len() != steps {
                return Err(Error::PartitionMismatch(format!("{} ingredient entries for {steps} cells", v.len())));
            }
            if let Some(e) = v.iter().find(|e| e.len() != width) {
                return Err(Error::DimensionMismatch { expected: width, actual: e.len() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItoResidual {
    /// LHS − RHS at T.
    pub final_residual: f64,
    /// max over partition points of |LHS − RHS|.
    pub max_abs: f64,
}

/// Φ(X_t) − Φ(X_0) minus the dB, dt and d⟨B^i,B^j⟩ sums of the G-Itô formula,
/// with X built from `ing` along `path`.
pub fn ito_residual(phi: &Smooth, ing: &ItoIngredients, path: &SamplePath) -> Result<ItoResidual> {
    let n = phi.n;
    let d = path.dim();
    let p = path.partition();
    ing.validate(n, d, p.steps())?;
    let mut x = ing.x0.clone();
    let mut next = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    let mut running = 0.0;
    let mut max_abs: f64 = 0.0;
    for k in 0..p.steps() {
        let (alpha, eta, beta) = (
            ItoIngredients::pick(&ing.alpha, k),
            ItoIngredients::pick(&ing.eta, k),
            ItoIngredients::pick(&ing.beta, k),
        );
        let db = path.increment(k);
        let dt = p.dt(k);
        for nu in 0..n {
            let mut dx = alpha[nu] * dt;
            for i in 0..d {
                dx += beta[nu * d + i] * db[i];
                for j in 0..d {
                    dx += eta[(nu * d + i) * d + j] * db[i] * db[j];
                }
            }
            next[nu] = x[nu] + dx;
        }
        (phi.grad)(&x, &mut grad);
        (phi.hess)(&x, &mut hess);
        let mut rhs = 0.0;
        for nu in 0..n {
            let mut first = alpha[nu] * dt;
            for i in 0..d {
                first += beta[nu * d + i] * db[i];
                for j in 0..d {
                    first += eta[(nu * d + i) * d + j] * db[i] * db[j];
                }
            }
            rhs += grad[nu] * first;
            for mu in 0..n {
                let mut bb = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        bb += beta[mu * d + i] * beta[nu * d + j] * db[i] * db[j];
                    }
                }
                rhs += 0.5 * hess[mu * n + nu] * bb;
            }
        }
        running += (phi.f)(&next) - (phi.f)(&x) - rhs;
        max_abs = max_abs.max(running.abs());
        std::mem::swap(&mut x, &mut next);
    }
    Ok(ItoResidual { final_residual: running, max_abs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub function: String,
    /// Steps per level, coarsest first.
    pub steps: Vec<usize>,
    /// RMS over paths of the terminal residual.
    pub rms_final: Vec<f64>,
    /// RMS over paths of the max residual along the partition.
    pub rms_max: Vec<f64>,
    /// log2(rms_final[j] / rms_final[j + 1]) for each halving of the mesh.
    pub orders: Vec<f64>,
    /// Batch-means standard errors of `orders`.
    pub order_se: Vec<f64>,
}

impl RefinementReport {
    /// True iff every order is at least `target` − 3 SE.
    pub fn meets(&self, target: f64) -> bool {
        self.orders.iter().zip(&self.order_se).all(|(o, se)| *o >= target - 3.0 * se)
    }
}

const REFINEMENT_BATCHES: usize = 20;

/// Itô residuals on `levels` successive halvings of one fine path per index.
/// The coarse paths are sums of the fine increments, so levels are coupled.
pub fn ito_refinement(
    phi: &Smooth,
    ing: &ItoIngredients,
    finest: &ScenarioControl,
    levels: usize,
    n_paths: usize,
    seed: u64,
) -> Result<RefinementReport> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!("need at least two levels, got {levels}")));
    }
    if n_paths < REFINEMENT_BATCHES {
        return Err(Error::InvalidArgument(format!("need at least {REFINEMENT_BATCHES} paths, got {n_paths}")));
    }
    if [&ing.alpha, &ing.eta, &ing.beta].iter().any(|v| v.len() != 1) {
        return Err(Error::Unsupported("refinement needs constant ingredients".into()));
    }
    let factor = 1usize << (levels - 1);
    let fine_steps = finest.partition().steps();
    if fine_steps % factor != 0 {
        return Err(Error::PartitionMismatch(format!("{fine_steps} steps are not divisible by {factor}")));
    }
    // per path: (final², max²) per level, coarsest first
    let per_path: Vec<Vec<(f64, f64)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let fine = generate_path_indexed(finest, seed, i);
            (0..levels)
                .rev()
                .map(|j| {
                    let p = fine.coarsen(1 << j)?;
                    let r = ito_residual(phi, ing, &p)?;
                    Ok((r.final_residual.powi(2), r.max_abs.powi(2)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mean_sq = |range: std::ops::Range<usize>, level: usize, pick: fn(&(f64, f64)) -> f64| {
        let len = range.len() as f64;
        range.map(|i| pick(&per_path[i][level])).sum::<f64>() / len
    };
    let all = 0..n_paths;
    let rms_final: Vec<f64> = (0..levels).map(|l| mean_sq(all.clone(), l, |v| v.0).sqrt()).collect();
    let rms_max: Vec<f64> = (0..levels).map(|l| mean_sq(all.clone(), l, |v| v.1).sqrt()).collect();
    let order = |a: f64, b: f64| 0.5 * (a / b).log2();
    let mut orders = Vec::with_capacity(levels - 1);
    let mut order_se = Vec::with_capacity(levels - 1);
    let batch = n_paths / REFINEMENT_BATCHES;
    for l in 0..levels - 1 {
        orders.push(order(rms_final[l].powi(2), rms_final[l + 1].powi(2)));
        let est: Vec<f64> = (0..REFINEMENT_BATCHES)
            .map(|b| {
                let r = b * batch..(b + 1) * batch;
                order(mean_sq(r.clone(), l, |v| v.0), mean_sq(r, l + 1, |v| v.0))
            })
            .collect();
        let m = est.iter().sum::<f64>() / est.len() as f64;
        let var = est.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (est.len() - 1) as f64;
        order_se.push((var / est.len() as f64).sqrt());
    }
    Ok(RefinementReport {
        function: phi.name.clone(),
        steps: (0..levels).rev().map(|j| fine_steps >> j).collect(),
        rms_final,
        rms_max,
        orders,
        order_se,
    })
}
