//! Named one-dimensional payoffs, selectable from configuration files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payoff {
    /// max(x − strike, 0)
    Call {
        strike: f64,
    },
    /// max(strike − x, 0)
    Put {
        strike: f64,
    },
    /// xⁿ
    Power {
        n: u32,
    },
    /// |x|ⁿ
    AbsPower {
        n: u32,
    },
    Constant {
        value: f64,
    },
    /// Σ coeffs[k]·xᵏ
    Polynomial {
        coeffs: Vec<f64>,
    },
    Negated {
        of: Box<Payoff>,
    },
    /// scale · of(x)
    Scaled {
        scale: f64,
        of: Box<Payoff>,
    },
}

/// Shape of a payoff, which decides whether a closed form exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Affine,
    Convex,
    Concave,
    Unknown,
}

impl Shape {
    fn flip(self) -> Self {
        match self {
            Shape::Convex => Shape::Concave,
            Shape::Concave => Shape::Convex,
            s => s,
        }
    }
}

impl Payoff {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("payoff {what} must be finite")))
            }
        };
        match self {
            Payoff::Call { strike } | Payoff::Put { strike } => finite(*strike, "strike"),
            Payoff::Constant { value } => finite(*value, "value"),
            Payoff::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(Error::Empty("polynomial coefficients"));
                }
                coeffs.iter().try_for_each(|c| finite(*c, "coefficient"))
            }
            Payoff::Power { .. } | Payoff::AbsPower { .. } => Ok(()),
            Payoff::Negated { of } => of.validate(),
            Payoff::Scaled { scale, of } => {
                finite(*scale, "scale")?;
                of.validate()
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Payoff::Call { strike } => (x - strike).max(0.0),
            Payoff::Put { strike } => (strike - x).max(0.0),
            Payoff::Power { n } => x.powi(*n as i32),
            Payoff::AbsPower { n } => x.abs().powi(*n as i32),
            Payoff::Constant { value } => *value,
            Payoff::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Payoff::Negated { of } => -of.eval(x),
            Payoff::Scaled { scale, of } => scale * of.eval(x),
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            Payoff::Call { .. } | Payoff::Put { .. } => Shape::Convex,
            Payoff::Constant { .. } => Shape::Affine,
            Payoff::Power { n } => match n {
                0 | 1 => Shape::Affine,
                n if n % 2 == 0 => Shape::Convex,
                _ => Shape::Unknown,
            },
            Payoff::AbsPower { n } => {
                if *n == 0 {
                    Shape::Affine
                } else {
                    Shape::Convex
                }
            }
            Payoff::Polynomial { coeffs } => {
                let degree = coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0);
                match degree {
                    0 | 1 => Shape::Affine,
                    2 if coeffs[2] > 0.0 => Shape::Convex,
                    2 => Shape::Concave,
                    _ => Shape::Unknown,
                }
            }
            Payoff::Negated { of } => of.shape().flip(),
            Payoff::Scaled { scale, of } => {
                if *scale == 0.0 {
                    Shape::Affine
                } else if *scale > 0.0 {
                    of.shape()
                } else {
                    of.shape().flip()
                }
            }
        }
    }

    /// Short human label, e.g. `call(0)`.
    pub fn label(&self) -> String {
        match self {
            Payoff::Call { strike } => format!("call({strike})"),
            Payoff::Put { strike } => format!("put({strike})"),
            Payoff::Power { n } => format!("x^{n}"),
            Payoff::AbsPower { n } => format!("|x|^{n}"),
            Payoff::Constant { value } => format!("const({value})"),
            Payoff::Polynomial { coeffs } => format!("poly{coeffs:?}"),
            Payoff::Negated { of } => format!("-{}", of.label()),
            Payoff::Scaled { scale, of } => format!("{scale}*{}", of.label()),
        }
    }
}
