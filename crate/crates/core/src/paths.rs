//! G-Brownian motion one volatility scenario at a time.
//!
//! A scenario control γ(·) ∈ Γ turns B into a classical martingale with
//! increments γ_k √Δt Z_k. Its linear expectation is dominated by the
//! G-expectation, so the maximum of Monte Carlo means over a family of controls
//! is a lower estimate of E[X]. Pathwise identities (quadratic variation,
//! Itô sums) hold exactly on each generated path.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::NormalStream;
use crate::sublinear::{Direction, Matrix, UncertaintySet};

/// 0 = t₀ < t₁ < … < t_N = T.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Arc<[f64]>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::PartitionMismatch("a partition needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::PartitionMismatch("a partition starts at 0".into()));
        }
        if !points.iter().all(|t| t.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::PartitionMismatch("partition points must be finite and strictly increasing".into()));
        }
        Ok(Self { points: points.into() })
    }

    /// `steps` equal cells on [0, horizon]. Point k is horizon·(k/steps), so
    /// uniform partitions with proportional step counts share their points.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
            return Err(Error::InvalidArgument(format!(
                "uniform partition needs T > 0 and N > 0 (T = {horizon}, N = {steps})"
            )));
        }
        let n = steps as f64;
        let mut pts: Vec<f64> = (0..=steps).map(|k| horizon * (k as f64 / n)).collect();
        pts[steps] = horizon;
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    #[inline]
    pub fn dt(&self, k: usize) -> f64 {
        self.points[k + 1] - self.points[k]
    }

    /// μ(π) = max cell length.
    pub fn mesh(&self) -> f64 {
        (0..self.steps()).map(|k| self.dt(k)).fold(0.0, f64::max)
    }

    /// Every `factor`-th point.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps() % factor != 0 {
            return Err(Error::PartitionMismatch(format!("{} steps are not divisible by {factor}", self.steps())));
        }
        Self::new(self.points.iter().step_by(factor).copied().collect())
    }

    /// For each cell of `self`, the index of the cell of `coarse` containing it.
    pub fn cell_map(&self, coarse: &Partition) -> Result<Vec<usize>> {
        if Arc::ptr_eq(&self.points, &coarse.points) || self.points == coarse.points {
            return Ok((0..self.steps()).collect());
        }
        if self.horizon() != coarse.horizon() {
            return Err(Error::PartitionMismatch("partitions cover different horizons".into()));
        }
        let mut map = Vec::with_capacity(self.steps());
        let mut c = 0;
        for k in 0..self.steps() {
            if self.points[k] == coarse.points[c + 1] {
                c += 1;
            } else if self.points[k] > coarse.points[c + 1] {
                return Err(Error::PartitionMismatch("partition does not refine the process partition".into()));
            }
            map.push(c);
        }
        if coarse.points.iter().any(|t| self.points.binary_search_by(|p| p.total_cmp(t)).is_err()) {
            return Err(Error::PartitionMismatch("partition does not refine the process partition".into()));
        }
        Ok(map)
    }
}

/// Piecewise-constant volatility γ_k on the cells of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioControl {
    partition: Partition,
    matrices: Vec<Matrix>,
    label: String,
}

impl ScenarioControl {
    pub fn new(partition: Partition, matrices: Vec<Matrix>, label: impl Into<String>) -> Result<Self> {
        if matrices.len() != partition.steps() {
            return Err(Error::DimensionMismatch { expected: partition.steps(), actual: matrices.len() });
        }
        let d = matrices[0].dim();
        if let Some(m) = matrices.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: m.dim() });
        }
        Ok(Self { partition, matrices, label: label.into() })
    }

    pub fn constant(partition: Partition, gamma: Matrix, label: impl Into<String>) -> Self {
        let matrices = vec![gamma; partition.steps()];
        Self { partition, matrices, label: label.into() }
    }

    /// Constant controls on the volatility ladder of Γ.
    pub fn ladder(gamma: &UncertaintySet, partition: &Partition, levels: usize) -> Vec<Self> {
        gamma
            .volatility_ladder(levels)
            .into_iter()
            .map(|m| {
                let label = format!("const{:?}", Vec::<Vec<f64>>::from(m.clone()));
                Self::constant(partition.clone(), m, label)
            })
            .collect()
    }

    /// Upper corner for a along cells where `proxy(t_k) ≥ 0`, lower corner elsewhere.
    pub fn bang_bang<F: Fn(f64) -> f64>(
        gamma: &UncertaintySet,
        partition: &Partition,
        a: &Direction,
        proxy: F,
        label: impl Into<String>,
    ) -> Result<Self> {
        let hi = gamma.extreme_matrix(a, true)?;
        let lo = gamma.extreme_matrix(a, false)?;
        let matrices = partition.points()[..partition.steps()]
            .iter()
            .map(|&t| if proxy(t) >= 0.0 { hi.clone() } else { lo.clone() })
            .collect();
        Self::new(partition.clone(), matrices, label)
    }

    pub fn validate_within(&self, gamma: &UncertaintySet, tol: f64) -> Result<()> {
        match self.matrices.iter().position(|m| !gamma.contains(m, tol)) {
            Some(step) => Err(Error::ControlOutsideSet { step }),
            None => Ok(()),
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }
}

/// Increments ΔB_k ∈ R^d of one simulated path, row-major by step.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    partition: Partition,
    dim: usize,
    increments: Vec<f64>,
    pub seed: u64,
    pub path_index: u64,
}

/// Path 0 of `seed` under `control`.
pub fn generate_path(control: &ScenarioControl, seed: u64) -> SamplePath {
    generate_path_indexed(control, seed, 0)
}

/// Path `index` of `seed`: ΔB_k = γ_k √Δt_k Z_k with Z drawn from stream `index`.
/// The same (seed, index) gives the same Z under every control.
pub fn generate_path_indexed(control: &ScenarioControl, seed: u64, index: u64) -> SamplePath {
    let d = control.dim();
    let p = control.partition.clone();
    let n = p.steps();
    let mut z = vec![0.0; n * d];
    NormalStream::new(seed, index).fill(&mut z);
    let increments = if d == 1 {
        for (k, v) in z.iter_mut().enumerate() {
            *v *= control.matrices[k].get(0, 0) * p.dt(k).sqrt();
        }
        z
    } else {
        let mut out = vec![0.0; n * d];
        for k in 0..n {
            let row = k * d..(k + 1) * d;
            control.matrices[k].mul_vec(&z[row.clone()], &mut out[row.clone()]);
            let s = p.dt(k).sqrt();
            out[row].iter_mut().for_each(|v| *v *= s);
        }
        out
    };
    SamplePath { partition: p, dim: d, increments, seed, path_index: index }
}

impl SamplePath {
    /// A path from given increments (row-major, `dim` per step).
    pub fn from_increments(partition: Partition, dim: usize, increments: Vec<f64>) -> Result<Self> {
        if dim == 0 || increments.len() != partition.steps() * dim {
            return Err(Error::DimensionMismatch { expected: partition.steps() * dim, actual: increments.len() });
        }
        if increments.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { location: "path increments".into() });
        }
        Ok(Self { partition, dim, increments, seed: 0, path_index: 0 })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim..(k + 1) * self.dim]
    }

    fn check_dir(&self, a: &Direction) -> Result<()> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: a.dim() });
        }
        Ok(())
    }

    /// ΔB^a_k = (a, ΔB_k).
    pub fn projected_increments(&self, a: &Direction) -> Result<Vec<f64>> {
        self.check_dir(a)?;
        if self.dim == 1 {
            let s = a.components()[0];
            return Ok(self.increments.iter().map(|v| s * v).collect());
        }
        Ok(self.increments.chunks_exact(self.dim).map(|c| a.dot(c)).collect())
    }

    /// B^a at every partition point, starting from 0.
    pub fn positions(&self, a: &Direction) -> Result<Vec<f64>> {
        let inc = self.projected_increments(a)?;
        let mut out = Vec::with_capacity(inc.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for v in inc {
            acc += v;
            out.push(acc);
        }
        Ok(out)
    }

    pub fn terminal(&self, a: &Direction) -> Result<f64> {
        Ok(*self.positions(a)?.last().expect("nonempty"))
    }

    /// B^a at time t, which must be a partition point.
    pub fn value_at(&self, a: &Direction, t: f64) -> Result<f64> {
        let k = self
            .partition
            .points()
            .iter()
            .position(|p| *p == t)
            .ok_or_else(|| Error::PartitionMismatch(format!("time {t} is not a partition point")))?;
        Ok(self.positions(a)?[k])
    }

    /// The same path seen on a partition `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let partition = self.partition.coarsen(factor)?;
        let d = self.dim;
        let mut inc = vec![0.0; partition.steps() * d];
        for (k, chunk) in self.increments.chunks_exact(d).enumerate() {
            let c = k / factor;
            for i in 0..d {
                inc[c * d + i] += chunk[i];
            }
        }
        Ok(Self { partition, dim: d, increments: inc, seed: self.seed, path_index: self.path_index })
    }

    /// `t,B1,…,Bd` rows.
    pub fn to_csv(&self) -> String {
        let d = self.dim;
        let mut out = String::from("t");
        for i in 1..=d {
            out.push_str(&format!(",B{i}"));
        }
        out.push('\n');
        let mut pos = vec![0.0; d];
        for (k, t) in self.partition.points().iter().enumerate() {
            if k > 0 {
                for i in 0..d {
                    pos[i] += self.increments[(k - 1) * d + i];
                }
            }
            out.push_str(&t.to_string());
            for v in &pos {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// ξ_k on the cells of a partition; ξ_k may only use the path before t_k.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleProcess {
    partition: Partition,
    values: Vec<f64>,
}

impl SimpleProcess {
    pub fn constant(partition: Partition, c: f64) -> Self {
        let values = vec![c; partition.steps()];
        Self { partition, values }
    }

    /// ξ_k = f(t_k).
    pub fn deterministic<F: Fn(f64) -> f64>(partition: Partition, f: F) -> Self {
        let values = partition.points()[..partition.steps()].iter().map(|&t| f(t)).collect();
        Self { partition, values }
    }

    /// ξ_k = f(k, t_k, B^a_{t₀..t_k}). The closure only ever sees the prefix,
    /// which makes the process adapted by construction.
    pub fn adapted<F: Fn(usize, f64, &[f64]) -> f64>(path: &SamplePath, a: &Direction, f: F) -> Result<Self> {
        let pos = path.positions(a)?;
        let p = path.partition().clone();
        let values = (0..p.steps()).map(|k| f(k, p.points()[k], &pos[..=k])).collect();
        Ok(Self { partition: p, values })
    }

    pub fn from_values(partition: Partition, values: Vec<f64>) -> Result<Self> {
        if values.len() != partition.steps() {
            return Err(Error::DimensionMismatch { expected: partition.steps(), actual: values.len() });
        }
        Ok(Self { partition, values })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { partition: self.partition.clone(), values: self.values.iter().map(|v| f(*v)).collect() }
    }
}

fn weighted_sum(eta: &SimpleProcess, path: &SamplePath, dz: &[f64]) -> Result<f64> {
    let map = path.partition().cell_map(eta.partition())?;
    Ok(map.iter().zip(dz).map(|(&c, d)| eta.values[c] * d).sum())
}

/// Σ ξ_k (B^a_{t_{k+1}} − B^a_{t_k}).
pub fn ito_integral(eta: &SimpleProcess, path: &SamplePath, a: &Direction) -> Result<f64> {
    weighted_sum(eta, path, &path.projected_increments(a)?)
}

/// Σ ξ_k (t_{k+1} − t_k).
pub fn bochner_integral(eta: &SimpleProcess, path: &SamplePath) -> Result<f64> {
    path.partition().cell_map(eta.partition())?;
    let p = eta.partition();
    Ok(eta.values.iter().enumerate().map(|(k, v)| v * p.dt(k)).sum())
}

/// Running Σ (ΔB^a)² at every partition point.
pub fn quadratic_variation(path: &SamplePath, a: &Direction) -> Result<Vec<f64>> {
    let inc = path.projected_increments(a)?;
    let mut out = Vec::with_capacity(inc.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in inc {
        acc += v * v;
        out.push(acc);
    }
    Ok(out)
}

/// Running ¼[⟨B^{a+ā}⟩ − ⟨B^{a−ā}⟩].
pub fn mutual_variation(path: &SamplePath, a: &Direction, abar: &Direction) -> Result<Vec<f64>> {
    let plus = path.projected_increments(&a.combine(abar, 1.0))?;
    let minus = path.projected_increments(&a.combine(abar, -1.0))?;
    let mut out = Vec::with_capacity(plus.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for (p, m) in plus.iter().zip(&minus) {
        acc += 0.25 * (p * p - m * m);
        out.push(acc);
    }
    Ok(out)
}

/// Σ ξ_k (⟨B^a⟩_{t_{k+1}} − ⟨B^a⟩_{t_k}).
pub fn integral_wrt_qv(eta: &SimpleProcess, path: &SamplePath, a: &Direction) -> Result<f64> {
    let dq: Vec<f64> = path.projected_increments(a)?.iter().map(|v| v * v).collect();
    weighted_sum(eta, path, &dq)
}

/// Σ ξ_k Δ⟨B^a, B^ā⟩_k.
pub fn integral_wrt_mutual(eta: &SimpleProcess, path: &SamplePath, a: &Direction, abar: &Direction) -> Result<f64> {
    let mv = mutual_variation(path, a, abar)?;
    let d: Vec<f64> = mv.windows(2).map(|w| w[1] - w[0]).collect();
    weighted_sum(eta, path, &d)
}

/// Upper bound on simulated normals for one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_normals: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_normals: 20_000_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlStat {
    pub label: String,
    pub mean: f64,
    pub se: f64,
}

/// max over controls of a Monte Carlo mean, with the standard error of the
/// maximising control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: usize,
    pub label: String,
    pub se: f64,
    pub per_control: Vec<ControlStat>,
}

/// Per-path values of several variables under each control, common random
/// numbers across controls.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSamples {
    labels: Vec<String>,
    n_vars: usize,
    n_paths: usize,
    /// [control][path][var]
    data: Vec<f64>,
}

impl ScenarioSamples {
    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_controls(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn path_values(&self, control: usize, path: usize) -> &[f64] {
        let start = (control * self.n_paths + path) * self.n_vars;
        &self.data[start..start + self.n_vars]
    }

    /// Mean and standard error of g under one control.
    pub fn control_stat<G: Fn(&[f64]) -> f64>(&self, control: usize, g: G) -> ControlStat {
        let n = self.n_paths as f64;
        let vals: Vec<f64> = (0..self.n_paths).map(|i| g(self.path_values(control, i))).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = if self.n_paths > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        ControlStat { label: self.labels[control].clone(), mean, se: (var / n).sqrt() }
    }

    /// Ê[g] = max over controls of the sample mean of g.
    pub fn estimate<G: Fn(&[f64]) -> f64>(&self, g: G) -> Result<SupEstimate> {
        if self.labels.is_empty() || self.n_paths == 0 {
            return Err(Error::Empty("scenario ensemble"));
        }
        let per_control: Vec<ControlStat> = (0..self.n_controls()).map(|c| self.control_stat(c, &g)).collect();
        let argmax = per_control
            .iter()
            .enumerate()
            .fold(0, |best, (i, s)| if s.mean > per_control[best].mean { i } else { best });
        if !per_control[argmax].mean.is_finite() {
            return Err(Error::NonFinite { location: "ensemble mean".into() });
        }
        Ok(SupEstimate {
            value: per_control[argmax].mean,
            argmax,
            label: per_control[argmax].label.clone(),
            se: per_control[argmax].se,
            per_control,
        })
    }
}

fn check_controls(gamma: &UncertaintySet, controls: &[ScenarioControl], n_paths: usize, budget: &Budget) -> Result<()> {
    if controls.is_empty() {
        return Err(Error::Empty("scenario controls"));
    }
    if n_paths == 0 {
        return Err(Error::Empty("paths"));
    }
    for c in controls {
        if c.dim() != gamma.dim() {
            return Err(Error::DimensionMismatch { expected: gamma.dim(), actual: c.dim() });
        }
        c.validate_within(gamma, 1e-12)?;
    }
    let requested: u128 = controls.iter().map(|c| (c.partition().steps() * c.dim()) as u128 * n_paths as u128).sum();
    if requested > budget.max_normals {
        return Err(Error::BudgetExhausted { requested, limit: budget.max_normals });
    }
    Ok(())
}

/// Evaluates `f` (writing `n_vars` values) on `n_paths` paths per control.
/// Path i uses normal stream i under every control.
pub fn sample_scenarios<F>(
    gamma: &UncertaintySet,
    controls: &[ScenarioControl],
    n_paths: usize,
    seed: u64,
    budget: &Budget,
    n_vars: usize,
    f: F,
) -> Result<ScenarioSamples>
where
    F: Fn(&SamplePath, &mut [f64]) + Sync,
{
    check_controls(gamma, controls, n_paths, budget)?;
    let mut data = Vec::with_capacity(controls.len() * n_paths * n_vars);
    for c in controls {
        let chunk: Vec<Vec<f64>> = (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let path = generate_path_indexed(c, seed, i);
                let mut out = vec![0.0; n_vars];
                f(&path, &mut out);
                out
            })
            .collect();
        for v in chunk {
            data.extend_from_slice(&v);
        }
    }
    Ok(ScenarioSamples { labels: controls.iter().map(|c| c.label.clone()).collect(), n_vars, n_paths, data })
}

/// max over controls of the sample mean of X.
pub fn scenario_sup_expect<F>(
    x_rv: F,
    gamma: &UncertaintySet,
    controls: &[ScenarioControl],
    n_paths: usize,
    seed: u64,
    budget: &Budget,
) -> Result<SupEstimate>
where
    F: Fn(&SamplePath) -> f64 + Sync,
{
    sample_scenarios(gamma, controls, n_paths, seed, budget, 1, |p, out| out[0] = x_rv(p))?.estimate(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1() -> Direction {
        Direction::new(vec![1.0]).unwrap()
    }

    #[test]
    fn partitions() {
        let p = Partition::uniform(1.0, 10).unwrap();
        assert_eq!(p.steps(), 10);
        assert!((p.mesh() - 0.1).abs() < 1e-15);
        let fine = Partition::uniform(1.0, 40).unwrap();
        assert_eq!(fine.coarsen(4).unwrap(), p);
        let map = fine.cell_map(&p).unwrap();
        assert_eq!(map[0..5], [0, 0, 0, 0, 1]);
        assert!(p.cell_map(&fine).is_err());
        assert!(Partition::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(Partition::new(vec![0.1, 0.5]).is_err());
    }

    #[test]
    fn zero_control_gives_zero_path() {
        let p = Partition::uniform(1.0, 16).unwrap();
        let c = ScenarioControl::constant(p, Matrix::scalar(0.0), "zero");
        let path = generate_path(&c, 3);
        assert!(path.increments().iter().all(|v| *v == 0.0));
        assert_eq!(quadratic_variation(&path, &a1()).unwrap().last(), Some(&0.0));
    }

    #[test]
    fn determinism_and_common_numbers() {
        let p = Partition::uniform(1.0, 64).unwrap();
        let c1 = ScenarioControl::constant(p.clone(), Matrix::scalar(1.0), "one");
        let c2 = ScenarioControl::constant(p, Matrix::scalar(0.5), "half");
        assert_eq!(generate_path_indexed(&c1, 9, 4), generate_path_indexed(&c1, 9, 4));
        let (x, y) = (generate_path_indexed(&c1, 9, 4), generate_path_indexed(&c2, 9, 4));
        for (u, v) in x.increments().iter().zip(y.increments()) {
            assert_eq!(0.5 * u, *v);
        }
    }

    #[test]
    fn telescoping_and_identity() {
        let p = Partition::uniform(1.0, 200).unwrap();
        let c = ScenarioControl::constant(p.clone(), Matrix::scalar(0.8), "c");
        let path = generate_path(&c, 1);
        let a = a1();
        let one = SimpleProcess::constant(p.clone(), 1.0);
        let bt = path.terminal(&a).unwrap();
        assert!((ito_integral(&one, &path, &a).unwrap() - bt).abs() < 1e-12);
        let b = SimpleProcess::adapted(&path, &a, |_, _, prefix| *prefix.last().unwrap()).unwrap();
        let qv = *quadratic_variation(&path, &a).unwrap().last().unwrap();
        let lhs = bt * bt;
        let rhs = 2.0 * ito_integral(&b, &path, &a).unwrap() + qv;
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        assert_eq!(integral_wrt_qv(&one, &path, &a).unwrap(), qv);
        let tt = SimpleProcess::deterministic(p, |t| t);
        assert!((bochner_integral(&tt, &path).unwrap() - 0.5).abs() <= 1.0 / 200.0);
    }

    #[test]
    fn mutual_variation_polarization() {
        let p = Partition::uniform(1.0, 100).unwrap();
        let c = ScenarioControl::constant(p, Matrix::diagonal(&[1.0, 0.5]), "diag");
        let path = generate_path(&c, 5);
        let a = Direction::new(vec![1.0, 0.3]).unwrap();
        let same = mutual_variation(&path, &a, &a).unwrap();
        assert_eq!(same, quadratic_variation(&path, &a).unwrap());
        let neg = mutual_variation(&path, &a, &Direction::new(vec![-1.0, -0.3]).unwrap()).unwrap();
        let qv = quadratic_variation(&path, &a).unwrap();
        for (x, y) in neg.iter().zip(&qv) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn controls_are_validated() {
        let g = UncertaintySet::interval(0.5, 1.0).unwrap();
        let p = Partition::uniform(1.0, 4).unwrap();
        let bad = ScenarioControl::constant(p.clone(), Matrix::scalar(1.2), "bad");
        let r = scenario_sup_expect(|_| 0.0, &g, &[bad], 10, 0, &Budget::default());
        assert!(matches!(r, Err(Error::ControlOutsideSet { step: 0 })));
        let ok = ScenarioControl::ladder(&g, &p, 3);
        let r = scenario_sup_expect(|_| 0.0, &g, &ok, 10, 0, &Budget { max_normals: 100 });
        assert!(matches!(r, Err(Error::BudgetExhausted { .. })));
        assert!(matches!(scenario_sup_expect(|_| 0.0, &g, &[], 10, 0, &Budget::default()), Err(Error::Empty(_))));
    }

    #[test]
    fn sup_picks_the_right_scenario() {
        let g = UncertaintySet::interval(0.5, 1.0).unwrap();
        let p = Partition::uniform(1.0, 20).unwrap();
        let controls = ScenarioControl::ladder(&g, &p, 3);
        let a = a1();
        let est =
            scenario_sup_expect(|path| path.terminal(&a).unwrap().powi(2), &g, &controls, 4000, 11, &Budget::default())
                .unwrap();
        assert_eq!(est.argmax, 2);
        assert!((est.value - 1.0).abs() < 3.0 * est.se + 1e-12);
        let est = scenario_sup_expect(
            |path| -path.terminal(&a).unwrap().powi(2),
            &g,
            &controls,
            4000,
            11,
            &Budget::default(),
        )
        .unwrap();
        assert_eq!(est.argmax, 0);
        assert!((est.value + 0.25).abs() < 3.0 * est.se);
    }
}
