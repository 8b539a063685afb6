//! Explicit monotone finite differences for the G-heat equation
//!
//! ```text
//! ∂u/∂t = ½[σ⁺ (u_xx)⁺ − |σ⁻| (u_xx)⁻],    u(0, ·) = φ,
//! ```
//!
//! which is the one-dimensional reduction of ∂u/∂t = G(D²u) along a
//! direction a, with σ⁺ = σ_{aaᵀ} and σ⁻ = σ_{−aaᵀ}.
//!
//! Each explicit step writes every node as a convex combination of itself and
//! its two neighbours (a sup over such combinations, since G is a sup of linear
//! maps), so the scheme obeys a discrete comparison principle. That gives the
//! sublinear-expectation properties on the grid: monotonicity, constants,
//! translation, positive homogeneity and subadditivity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sublinear::{directional_sigmas, Direction, UncertaintySet};

/// Uniform nodes on [−radius, radius].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    radius: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(radius: f64, n_points: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("grid radius must be positive, got {radius}")));
        }
        if n_points < 3 {
            return Err(Error::InvalidArgument(format!("grid needs >= 3 points, got {n_points}")));
        }
        Ok(Self { radius, n_points })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.radius / (self.n_points - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        // symmetric by construction: node(n-1-i) == -node(i)
        let half = (self.n_points - 1) as f64 / 2.0;
        (i as f64 - half) * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Cell index `i` and weight `w` with x ≈ (1−w)·node(i) + w·node(i+1).
    /// Outside the grid the end cell is extended linearly (w < 0 or w > 1).
    #[inline]
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = (x + self.radius) / self.dx();
        let i = (s.floor().max(0.0) as usize).min(self.n_points - 2);
        (i, s - i as f64)
    }

    /// Linear interpolation of nodal `values` at `x`.
    #[inline]
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let (i, w) = self.locate(x);
        if w == 0.0 {
            return values[i];
        }
        if w == 1.0 {
            return values[i + 1];
        }
        values[i] + w * (values[i + 1] - values[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Ghost node extrapolated linearly: the end second difference is zero,
    /// so boundary nodes keep their initial value.
    LinearExtrapolation,
    /// Ghost node equal to the boundary node (zero slope).
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// dt = cfl_factor · dx² / max(σ⁺, |σ⁻|).
    pub cfl_factor: f64,
    pub boundary_policy: BoundaryPolicy,
    /// Domain radius per unit √(σ⁺T), scaled by (1 + |x_eval|).
    pub radius_multiplier: f64,
    /// Nodes for top-level one-dimensional solves.
    pub grid_points: usize,
    /// Nodes per axis for the diagonal two-dimensional solver.
    pub grid_points_2d: usize,
    /// Nodes for the inner solves of nested conditional expectations.
    pub nested_grid_points: usize,
    /// Nodes per prefix coordinate for sampled conditional expectations.
    pub prefix_points: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_factor: 0.5,
            boundary_policy: BoundaryPolicy::LinearExtrapolation,
            radius_multiplier: 8.0,
            grid_points: 2001,
            grid_points_2d: 201,
            nested_grid_points: 401,
            prefix_points: 201,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 0.5) {
            return Err(Error::CflViolation { cfl: self.cfl_factor });
        }
        if !(self.radius_multiplier >= 4.0 && self.radius_multiplier.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "radius_multiplier must be >= 4, got {}",
                self.radius_multiplier
            )));
        }
        for (name, n) in [
            ("grid_points", self.grid_points),
            ("grid_points_2d", self.grid_points_2d),
            ("nested_grid_points", self.nested_grid_points),
            ("prefix_points", self.prefix_points),
        ] {
            if n < 3 {
                return Err(Error::InvalidArgument(format!("{name} must be >= 3, got {n}")));
            }
        }
        Ok(())
    }

    /// radius = multiplier · √(σ_top · T) · (1 + |x_eval|), floored at 1.
    pub fn radius_for(&self, sigma_top: f64, horizon: f64, x_eval: f64) -> f64 {
        let core = self.radius_multiplier * (sigma_top * horizon).sqrt();
        core.max(1.0) * (1.0 + x_eval.abs())
    }

    pub fn grid_for(&self, sigma_top: f64, horizon: f64, x_eval: f64, n_points: usize) -> Result<Grid1D> {
        Grid1D::new(self.radius_for(sigma_top, horizon, x_eval), n_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub dt: f64,
    pub steps: usize,
    pub radius: f64,
    pub dx: f64,
    pub n_points: usize,
}

/// u(t, ·) sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub time_stamp: f64,
    pub diagnostics: SolveDiagnostics,
}

impl GridFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    /// sup |self − other| over grid nodes with |x| ≤ window. Both functions must
    /// live on the same grid.
    pub fn sup_gap(&self, other: &GridFunction, window: f64) -> f64 {
        assert_eq!(self.grid, other.grid, "sup_gap needs a common grid");
        (0..self.grid.len())
            .filter(|&i| self.grid.node(i).abs() <= window)
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest slope between neighbouring nodes.
    pub fn lipschitz_constant(&self) -> f64 {
        let dx = self.grid.dx();
        self.values.windows(2).map(|w| (w[1] - w[0]).abs() / dx).fold(0.0, f64::max)
    }

    /// `x,u` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.grid.node(i), v));
        }
        out
    }
}

#[inline]
fn rates(sigma_plus: f64, sigma_minus: f64, dt: f64, dx: f64) -> (f64, f64) {
    let inv = dt / (dx * dx);
    (0.5 * sigma_plus * inv, 0.5 * sigma_minus.abs() * inv)
}

#[inline]
fn directional_rate(d2: f64, up: f64, down: f64) -> f64 {
    if d2 >= 0.0 {
        up * d2
    } else {
        down * d2
    }
}

/// Time-step size and count for a horizon, honouring dt ≤ cfl·dx²/σ_top.
pub fn time_steps(sigma_top: f64, dx: f64, horizon: f64, cfl: f64) -> (f64, usize) {
    if horizon <= 0.0 || sigma_top <= 0.0 {
        return (0.0, 0);
    }
    let dt_max = cfl * dx * dx / sigma_top;
    let steps = (horizon / dt_max).ceil().max(1.0) as usize;
    (horizon / steps as f64, steps)
}

/// Advances `values` by `steps` explicit steps of size `dt`.
///
/// The rounding error of every update is carried in a second array and fed
/// back (compensated summation), so tens of thousands of steps lose no more
/// than a few ulps.
pub fn evolve_fixed(
    values: &mut Vec<f64>,
    dx: f64,
    dt: f64,
    steps: usize,
    sigma_plus: f64,
    sigma_minus: f64,
    boundary: BoundaryPolicy,
) {
    let n = values.len();
    if steps == 0 || n < 3 {
        return;
    }
    let (up, down) = rates(sigma_plus, sigma_minus, dt, dx);
    let mut next = vec![0.0; n];
    // true value ≈ u − c
    let mut comp = vec![0.0; n];
    let mut comp_next = vec![0.0; n];
    for _ in 0..steps {
        let (u, c) = (&values[..], &comp[..]);
        for i in 1..n - 1 {
            let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) - (c[i + 1] - 2.0 * c[i] + c[i - 1]);
            (next[i], comp_next[i]) = compensated_add(u[i], c[i], directional_rate(d2, up, down));
        }
        match boundary {
            BoundaryPolicy::LinearExtrapolation => {
                (next[0], comp_next[0]) = (u[0], c[0]);
                (next[n - 1], comp_next[n - 1]) = (u[n - 1], c[n - 1]);
            }
            BoundaryPolicy::Clamp => {
                let d0 = (u[1] - u[0]) - (c[1] - c[0]);
                let dn = (u[n - 2] - u[n - 1]) - (c[n - 2] - c[n - 1]);
                (next[0], comp_next[0]) = compensated_add(u[0], c[0], directional_rate(d0, up, down));
                (next[n - 1], comp_next[n - 1]) = compensated_add(u[n - 1], c[n - 1], directional_rate(dn, up, down));
            }
        }
        std::mem::swap(values, &mut next);
        std::mem::swap(&mut comp, &mut comp_next);
    }
    for (v, c) in values.iter_mut().zip(&comp) {
        *v -= c;
    }
}

/// (u − c) + delta as a new (sum, compensation) pair.
#[inline]
fn compensated_add(u: f64, c: f64, delta: f64) -> (f64, f64) {
    let y = delta - c;
    let t = u + y;
    (t, (t - u) - y)
}

fn check_sigmas(sigma_plus: f64, sigma_minus: f64) -> Result<()> {
    if !(sigma_plus.is_finite() && sigma_minus.is_finite() && sigma_plus >= 0.0 && sigma_minus <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need sigma_plus >= 0 >= sigma_minus, got ({sigma_plus}, {sigma_minus})"
        )));
    }
    Ok(())
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Solves from nodal initial data on a given grid.
pub fn solve_on_grid(
    grid: Grid1D,
    initial: Vec<f64>,
    sigma_plus: f64,
    sigma_minus: f64,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<GridFunction> {
    cfg.validate()?;
    check_sigmas(sigma_plus, sigma_minus)?;
    check_horizon(horizon)?;
    if initial.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), actual: initial.len() });
    }
    if let Some(i) = initial.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { location: format!("payoff at x = {}", grid.node(i)) });
    }
    let dx = grid.dx();
    let sigma_top = sigma_plus.max(sigma_minus.abs());
    let (dt, steps) = time_steps(sigma_top, dx, horizon, cfg.cfl_factor);
    let mut values = initial;
    evolve_fixed(&mut values, dx, dt, steps, sigma_plus, sigma_minus, cfg.boundary_policy);
    Ok(GridFunction {
        grid,
        values,
        time_stamp: horizon,
        diagnostics: SolveDiagnostics { dt, steps, radius: grid.radius(), dx, n_points: grid.len() },
    })
}

/// u(horizon, ·) for ∂u/∂t = ½[σ⁺(u_xx)⁺ + σ⁻(u_xx)⁻] with u(0,·) = payoff,
/// on the default grid centred at zero.
pub fn solve_gheat_1d<F: Fn(f64) -> f64>(
    sigma_plus: f64,
    sigma_minus: f64,
    payoff: F,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<GridFunction> {
    cfg.validate()?;
    check_sigmas(sigma_plus, sigma_minus)?;
    check_horizon(horizon)?;
    let grid = cfg.grid_for(sigma_plus.max(-sigma_minus), horizon, 0.0, cfg.grid_points)?;
    let initial = grid.nodes().into_iter().map(&payoff).collect();
    solve_on_grid(grid, initial, sigma_plus, sigma_minus, horizon, cfg)
}

/// P_t^G(φ((a, ·)))(x) where `x` is the projected coordinate (a, x).
pub fn evaluate_pt<F: Fn(f64) -> f64>(
    gamma: &UncertaintySet,
    a: &Direction,
    payoff: F,
    t: f64,
    x: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let (sp, sm) = directional_sigmas(gamma, a)?;
    evaluate_1d(sp, sm, payoff, t, x, cfg.grid_points, cfg)
}

/// u(t, x) for the one-dimensional equation, on an `n_points` grid sized for x.
/// At t = 0 this is payoff(x) exactly.
pub fn evaluate_1d<F: Fn(f64) -> f64>(
    sigma_plus: f64,
    sigma_minus: f64,
    payoff: F,
    t: f64,
    x: f64,
    n_points: usize,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_horizon(t)?;
    if t == 0.0 {
        return Ok(payoff(x));
    }
    let grid = cfg.grid_for(sigma_plus.max(-sigma_minus), t, x, n_points)?;
    let initial = grid.nodes().into_iter().map(&payoff).collect();
    Ok(solve_on_grid(grid, initial, sigma_plus, sigma_minus, t, cfg)?.eval(x))
}

/// (P_t(P_s φ), P_{t+s} φ) on one grid covering |x| ≤ window.
pub fn semigroup_compose<F: Fn(f64) -> f64>(
    gamma: &UncertaintySet,
    a: &Direction,
    payoff: F,
    s: f64,
    t: f64,
    window: f64,
    cfg: &SolverConfig,
) -> Result<(GridFunction, GridFunction)> {
    check_horizon(s)?;
    check_horizon(t)?;
    let (sp, sm) = directional_sigmas(gamma, a)?;
    let grid = cfg.grid_for(sp.max(-sm), s + t, window, cfg.grid_points)?;
    let initial: Vec<f64> = grid.nodes().into_iter().map(&payoff).collect();
    let inner = solve_on_grid(grid, initial.clone(), sp, sm, s, cfg)?;
    let composed = solve_on_grid(grid, inner.values, sp, sm, t, cfg)?;
    let direct = solve_on_grid(grid, initial, sp, sm, s + t, cfg)?;
    Ok((GridFunction { time_stamp: s + t, ..composed }, direct))
}

/// u(t, x, y) on a tensor grid, x-major: `values[i * ny + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2 {
    pub grid_x: Grid1D,
    pub grid_y: Grid1D,
    pub values: Vec<f64>,
    pub time_stamp: f64,
    pub dt: f64,
    pub steps: usize,
}

impl GridFunction2 {
    pub fn at_node(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid_y.len() + j]
    }

    /// Bilinear interpolation.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let ny = self.grid_y.len();
        let (i, wx) = self.grid_x.locate(x);
        let (j, wy) = self.grid_y.locate(y);
        let v = |a: usize, b: usize| self.values[a * ny + b];
        let lo = v(i, j) + wy * (v(i, j + 1) - v(i, j));
        let hi = v(i + 1, j) + wy * (v(i + 1, j + 1) - v(i + 1, j));
        lo + wx * (hi - lo)
    }
}

/// Solves ∂u/∂t = ½Σᵢ[hiᵢ²(∂²ᵢu)⁺ − loᵢ²(∂²ᵢu)⁻] for a two-axis diagonal box.
pub fn solve_gheat_diag<F: Fn(f64, f64) -> f64>(
    gamma: &UncertaintySet,
    payoff: F,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<GridFunction2> {
    cfg.validate()?;
    check_horizon(horizon)?;
    let UncertaintySet::DiagonalBox { bounds } = gamma else {
        return Err(Error::Unsupported("diagonal solver needs a DiagonalBox".into()));
    };
    if bounds.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: bounds.len() });
    }
    let n = cfg.grid_points_2d;
    let grid_x = cfg.grid_for(bounds[0].1 * bounds[0].1, horizon, 0.0, n)?;
    let grid_y = cfg.grid_for(bounds[1].1 * bounds[1].1, horizon, 0.0, n)?;
    let (dx, dy) = (grid_x.dx(), grid_y.dx());

    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = payoff(grid_x.node(i), grid_y.node(j));
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("payoff at ({}, {})", grid_x.node(i), grid_y.node(j)),
                });
            }
            values.push(v);
        }
    }

    // 2D CFL: the axis constraints add up
    let load = bounds[0].1.powi(2) / (dx * dx) + bounds[1].1.powi(2) / (dy * dy);
    let (dt, steps) = if horizon > 0.0 && load > 0.0 {
        let dt_max = cfg.cfl_factor / load;
        let steps = (horizon / dt_max).ceil().max(1.0) as usize;
        (horizon / steps as f64, steps)
    } else {
        (0.0, 0)
    };
    let (ux, dxr) = rates(bounds[0].1.powi(2), -bounds[0].0.powi(2), dt, dx);
    let (uy, dyr) = rates(bounds[1].1.powi(2), -bounds[1].0.powi(2), dt, dy);

    let second = |u: &[f64], k: usize, stride: usize, at: usize, len: usize| -> f64 {
        if at == 0 || at == len - 1 {
            match cfg.boundary_policy {
                BoundaryPolicy::LinearExtrapolation => 0.0,
                BoundaryPolicy::Clamp if at == 0 => u[k + stride] - u[k],
                BoundaryPolicy::Clamp => u[k - stride] - u[k],
            }
        } else {
            u[k + stride] - 2.0 * u[k] + u[k - stride]
        }
    };

    let mut next = vec![0.0; values.len()];
    let mut comp = vec![0.0; values.len()];
    let mut comp_next = vec![0.0; values.len()];
    for _ in 0..steps {
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let d2x = second(&values, k, n, i, n) - second(&comp, k, n, i, n);
                let d2y = second(&values, k, 1, j, n) - second(&comp, k, 1, j, n);
                let delta = directional_rate(d2x, ux, dxr) + directional_rate(d2y, uy, dyr);
                (next[k], comp_next[k]) = compensated_add(values[k], comp[k], delta);
            }
        }
        std::mem::swap(&mut values, &mut next);
        std::mem::swap(&mut comp, &mut comp_next);
    }
    for (v, c) in values.iter_mut().zip(&comp) {
        *v -= c;
    }
    Ok(GridFunction2 { grid_x, grid_y, values, time_stamp: horizon, dt, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn linear_case_second_moment() {
        let u = solve_gheat_1d(1.0, -1.0, |x| x * x, 1.0, &cfg()).unwrap();
        assert!((u.eval(0.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nonlinear_quadratics() {
        let u = solve_gheat_1d(1.0, -0.25, |x| x * x, 1.0, &cfg()).unwrap();
        assert!((u.eval(0.0) - 1.0).abs() < 1e-3);
        let v = solve_gheat_1d(1.0, -0.25, |x| -x * x, 1.0, &cfg()).unwrap();
        assert!((v.eval(0.0) + 0.25).abs() < 1e-3);
    }

    #[test]
    fn evaluate_at_time_zero_is_payoff() {
        let g = UncertaintySet::interval(0.5, 1.0).unwrap();
        let a = Direction::new(vec![1.0]).unwrap();
        let phi = |x: f64| (3.0 * x).sin() + x;
        assert_eq!(evaluate_pt(&g, &a, phi, 0.0, 0.3, &cfg()).unwrap(), phi(0.3));
    }

    #[test]
    fn grid_is_symmetric() {
        let g = Grid1D::new(3.0, 11).unwrap();
        for i in 0..11 {
            assert_eq!(g.node(i), -g.node(10 - i));
        }
        assert_eq!(g.node(5), 0.0);
        assert!((g.interpolate(&g.nodes(), 0.37) - 0.37).abs() < 1e-14);
    }

    #[test]
    fn config_rejects_bad_cfl() {
        let bad = SolverConfig { cfl_factor: 0.6, ..cfg() };
        assert!(matches!(solve_gheat_1d(1.0, -0.25, |x| x, 1.0, &bad), Err(Error::CflViolation { .. })));
        let bad = SolverConfig { radius_multiplier: 2.0, ..cfg() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn non_finite_payoff_rejected() {
        let r = solve_gheat_1d(1.0, -0.25, |x| if x > 1.0 { f64::NAN } else { x }, 1.0, &cfg());
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn degenerate_lower_volatility_is_stable() {
        // lo = 0: concave payoffs do not diffuse at all
        let u = solve_gheat_1d(1.0, 0.0, |x| -x.abs(), 1.0, &cfg()).unwrap();
        assert!((u.eval(0.0) - 0.0).abs() < 1e-12);
        assert!(u.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn diag_constant_and_separable() {
        let bx = UncertaintySet::diagonal_box(vec![(0.5, 1.0), (0.5, 1.0)]).unwrap();
        let c = solve_gheat_diag(&bx, |_, _| 2.5, 1.0, &cfg()).unwrap();
        assert!(c.values.iter().all(|v| *v == 2.5));
        let q = solve_gheat_diag(&bx, |x, y| x * x + y * y, 1.0, &cfg()).unwrap();
        assert!((q.eval(0.0, 0.0) - 2.0).abs() < 5e-3);
        assert!(solve_gheat_diag(&UncertaintySet::interval(0.5, 1.0).unwrap(), |x, _| x, 1.0, &cfg()).is_err());
    }
}
