//! The TOML run configuration.
//!
//! Every section is optional; missing keys take the defaults below. Unknown
//! keys are rejected so typos surface as config errors.

use std::path::Path;

use gcalc_core::{
    Budget, Direction, Payoff, PicardConfig, RiskDemoSpec, ScalarFunction2, SdeSpec, SolverConfig, UncertaintySet,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub gamma: UncertaintySet,
    pub pde: SolverConfig,
    pub paths: PathsSection,
    pub sde: SdeSection,
    pub suite: SuiteSection,
    pub price: PriceSection,
    pub moments: MomentsSection,
    pub jensen: JensenSection,
    pub risk: RiskDemoSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            gamma: UncertaintySet::Interval1D { sigma_low: 0.5, sigma_high: 1.0 },
            pde: SolverConfig::default(),
            paths: PathsSection::default(),
            sde: SdeSection::default(),
            suite: SuiteSection::default(),
            price: PriceSection::default(),
            moments: MomentsSection::default(),
            jensen: JensenSection::default(),
            risk: RiskDemoSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub seed: u64,
    pub n_paths: usize,
    pub steps: usize,
    pub horizon: f64,
    /// Constant volatility used by `qv`; defaults to the top of Γ.
    pub volatility: Option<f64>,
    pub max_normals: u64,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self { seed: 2024, n_paths: 10_000, steps: 1000, horizon: 1.0, volatility: None, max_normals: 20_000_000_000 }
    }
}

impl PathsSection {
    pub fn budget(&self) -> Budget {
        Budget { max_normals: self.max_normals as u128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeSection {
    pub spec: SdeSpec,
    pub picard: PicardConfig,
    /// Constant controls on the volatility ladder of Γ.
    pub ladder_levels: usize,
}

impl Default for SdeSection {
    fn default() -> Self {
        Self { spec: SdeSpec::geometric(1.0, 1.0), picard: PicardConfig::default(), ladder_levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSection {
    /// Prefix nodes with every coordinate in ±window enter pointwise checks.
    pub window: f64,
    pub numeric_tol: f64,
    pub exact_tol: f64,
    /// Paths per control for Monte Carlo checks.
    pub mc_paths: usize,
    /// Steps per path for quadratic variation checks.
    pub qv_steps: usize,
    /// Finest partition of the Itô refinement study.
    pub ito_steps: usize,
    pub ito_levels: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self {
            window: 2.0,
            numeric_tol: 5e-3,
            exact_tol: 1e-12,
            mc_paths: 4000,
            qv_steps: 2000,
            ito_steps: 512,
            ito_levels: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSection {
    pub payoff: Payoff,
    pub t: f64,
    pub x: f64,
    pub direction: Vec<f64>,
    /// Also estimate max over ladder controls of the scenario mean.
    pub scenario_bound: bool,
    pub ladder_levels: usize,
}

impl Default for PriceSection {
    fn default() -> Self {
        Self {
            payoff: Payoff::Call { strike: 0.0 },
            t: 1.0,
            x: 0.0,
            direction: vec![1.0],
            scenario_bound: false,
            ladder_levels: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSection {
    pub t: f64,
    /// n > 0 gives E[|B|ⁿ]; n < 0 (even) gives E[−B^|n|].
    pub orders: Vec<i32>,
    pub direction: Vec<f64>,
}

impl Default for MomentsSection {
    fn default() -> Self {
        Self { t: 1.0, orders: vec![1, 2, 3, 4, -2, -4], direction: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JensenSection {
    pub function: ScalarFunction2,
    pub payoff: Payoff,
    pub horizon: f64,
    pub direction: Vec<f64>,
}

impl Default for JensenSection {
    fn default() -> Self {
        Self { function: ScalarFunction2::Square, payoff: Payoff::Power { n: 1 }, horizon: 1.0, direction: vec![1.0] }
    }
}

pub fn direction(v: &[f64], field: &str) -> Result<Direction> {
    Direction::new(v.to_vec()).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| CliError::Parse { path: path.to_path_buf(), source: Box::new(e) })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::ConfigRead { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Field-level checks, reported as config errors.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, r: gcalc_core::Result<()>| r.map_err(|e| CliError::Config(format!("{name}: {e}")));
        field("pde", self.pde.validate())?;
        field("price.payoff", self.price.payoff.validate())?;
        field("jensen.payoff", self.jensen.payoff.validate())?;
        field("sde.spec", self.sde.spec.validate())?;
        field("risk", self.risk.validate())?;
        let d = self.gamma.dim();
        for (name, v) in [
            ("price.direction", &self.price.direction),
            ("moments.direction", &self.moments.direction),
            ("jensen.direction", &self.jensen.direction),
        ] {
            if direction(v, name)?.dim() != d {
                return Err(CliError::Config(format!("{name}: expected {d} components, got {}", v.len())));
            }
        }
        let nonneg = [("price.t", self.price.t), ("moments.t", self.moments.t)];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name}: must be a finite time >= 0, got {v}")));
            }
        }
        let positive = [
            ("paths.horizon", self.paths.horizon),
            ("jensen.horizon", self.jensen.horizon),
            ("suite.window", self.suite.window),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name}: must be positive, got {v}")));
            }
        }
        if self.paths.n_paths == 0 || self.paths.steps == 0 {
            return Err(CliError::Config("paths: n_paths and steps must be positive".into()));
        }
        if let Some(v) = self.paths.volatility {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("paths.volatility: must be >= 0, got {v}")));
            }
        }
        if self.moments.orders.iter().any(|&n| n == 0 || (n < 0 && n % 2 != 0) || n.abs() > 20) {
            return Err(CliError::Config(format!(
                "moments.orders: need 1..=20, or negative even, got {:?}",
                self.moments.orders
            )));
        }
        if self.suite.mc_paths < 20 || self.suite.ito_levels < 2 {
            return Err(CliError::Config("suite: mc_paths >= 20 and ito_levels >= 2 required".into()));
        }
        if self.suite.ito_steps % (1 << (self.suite.ito_levels - 1)) != 0 {
            return Err(CliError::Config("suite.ito_steps must be divisible by 2^(ito_levels - 1)".into()));
        }
        Ok(())
    }

    /// Applies command-line and environment overrides.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        grid_points: Option<usize>,
        paths: Option<usize>,
    ) -> Result<()> {
        if let Some(s) = seed {
            self.paths.seed = s;
            self.risk.seed = s;
            self.sde.picard.seed = s;
        }
        if let Some(n) = grid_points {
            self.pde.grid_points = n;
        }
        if let Some(n) = paths {
            self.paths.n_paths = n;
            self.risk.n_paths = n;
            self.sde.picard.n_paths = n;
            self.suite.mc_paths = n;
        }
        self.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = Config::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(Config::from_toml(&text, Path::new("x")).unwrap(), cfg);
    }

    #[test]
    fn sections_are_optional() {
        let cfg =
            Config::from_toml("[gamma]\nkind = \"interval1d\"\nsigma_low = 0.2\nsigma_high = 1.5\n", Path::new("x"))
                .unwrap();
        assert_eq!(cfg.gamma, UncertaintySet::Interval1D { sigma_low: 0.2, sigma_high: 1.5 });
        assert_eq!(cfg.pde, SolverConfig::default());
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        let e = Config::from_toml("[pde]\ngrid_pts = 3\n", Path::new("x")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = Config::from_toml("[pde]\ncfl_factor = 0.9\n", Path::new("x")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("pde"));
        let e = Config::from_toml("[moments]\norders = [-3]\n", Path::new("x")).unwrap_err();
        assert!(e.to_string().contains("moments.orders"));
    }
}
