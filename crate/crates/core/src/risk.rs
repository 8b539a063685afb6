//! Two traders under one supervisor: linear scenario expectations versus the
//! sublinear bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expectation::{expect, CylinderFunctional};
use crate::paths::{quadratic_variation, sample_scenarios, Budget, Partition, ScenarioControl};
use crate::pde::SolverConfig;
use crate::sublinear::{Direction, Matrix, UncertaintySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskClaim {
    /// ⟨B⟩_T
    Qv,
    /// −⟨B⟩_T
    NegQv,
}

impl RiskClaim {
    pub fn sign(self) -> f64 {
        match self {
            Self::Qv => 1.0,
            Self::NegQv => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskDemoSpec {
    pub sigma_low: f64,
    pub sigma_high: f64,
    pub horizon: f64,
    pub claim: RiskClaim,
    pub steps: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for RiskDemoSpec {
    fn default() -> Self {
        Self {
            sigma_low: 0.49,
            sigma_high: 1.0,
            horizon: 1.0,
            claim: RiskClaim::Qv,
            steps: 1000,
            n_paths: 2000,
            seed: 7,
        }
    }
}

impl RiskDemoSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.sigma_low) {
            return Err(Error::InvalidArgument(format!("sigma_low must lie in [0, 0.5), got {}", self.sigma_low)));
        }
        if !(self.sigma_high >= 1.0 && self.sigma_high.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma_high must be >= 1, got {}", self.sigma_high)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        if self.steps == 0 || self.n_paths == 0 {
            return Err(Error::InvalidArgument("steps and n_paths must be positive".into()));
        }
        Ok(())
    }

    pub fn gamma(&self) -> Result<UncertaintySet> {
        UncertaintySet::interval(self.sigma_low, self.sigma_high)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderView {
    pub volatility: f64,
    pub mean: f64,
    pub se: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub trader_a: TraderView,
    pub trader_b: TraderView,
    /// E[X]
    pub upper: f64,
    /// −E[−X]
    pub lower: f64,
}

impl RiskReport {
    pub fn consistent(&self) -> bool {
        self.trader_a.inside && self.trader_b.inside
    }
}

/// Runs the demo. Trader means are within 3 SE of the bounds to count as inside.
pub fn risk_demo(spec: &RiskDemoSpec, cfg: &SolverConfig, budget: &Budget) -> Result<RiskReport> {
    spec.validate()?;
    let gamma = spec.gamma()?;
    let sign = spec.claim.sign();
    let vols = [1.0, 0.5];
    if spec.horizon == 0.0 {
        let view = |v: f64| TraderView { volatility: v, mean: 0.0, se: 0.0, inside: true };
        return Ok(RiskReport { trader_a: view(vols[0]), trader_b: view(vols[1]), upper: 0.0, lower: 0.0 });
    }

    // under the sublinear expectation ⟨B⟩_T and B_T² differ by a symmetric integral
    let a = Direction::unit(1, 0);
    let sq = CylinderFunctional::terminal(spec.horizon, a.clone(), move |x| sign * x * x)?;
    let upper = expect(&sq, &gamma, cfg)?;
    let lower = -expect(&sq.neg(), &gamma, cfg)?;

    let partition = Partition::uniform(spec.horizon, spec.steps)?;
    let controls: Vec<ScenarioControl> = vols
        .iter()
        .map(|&v| ScenarioControl::constant(partition.clone(), Matrix::scalar(v), format!("gamma={v}")))
        .collect();
    let samples = sample_scenarios(&gamma, &controls, spec.n_paths, spec.seed, budget, 1, |p, out| {
        out[0] = sign * quadratic_variation(p, &a).map(|q| q[q.len() - 1]).unwrap_or(f64::NAN);
    })?;
    let view = |c: usize| {
        let s = samples.control_stat(c, |v| v[0]);
        let slack = 3.0 * s.se + 1e-12;
        TraderView {
            volatility: vols[c],
            mean: s.mean,
            se: s.se,
            inside: s.mean >= lower - slack && s.mean <= upper + slack,
        }
    };
    let (trader_a, trader_b) = (view(0), view(1));
    if !(trader_a.mean.is_finite() && trader_b.mean.is_finite()) {
        return Err(Error::NonFinite { location: "trader means".into() });
    }
    Ok(RiskReport { trader_a, trader_b, upper, lower })
}
