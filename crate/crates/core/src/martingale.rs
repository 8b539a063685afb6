//! G-martingales, G-convexity and Jensen's inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expectation::{conditional_expect, expect, ConditionalValue, CylinderFunctional};
use crate::pde::{evaluate_pt, SolverConfig};
use crate::sublinear::{g_value, Direction, SymMatrix, UncertaintySet};

const CONVEXITY_TOL: f64 = 1e-10;

/// A C² function h: R → R from a named library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFunction2 {
    Linear,
    Square,
    NegSquare,
    Exp,
    /// Σ coeffs[k]·yᵏ
    Polynomial {
        coeffs: Vec<f64>,
    },
}

impl ScalarFunction2 {
    pub fn by_name(name: &str) -> Option<Self> {
        Some(match name {
            "linear" => Self::Linear,
            "square" => Self::Square,
            "neg_square" => Self::NegSquare,
            "exp" => Self::Exp,
            _ => return None,
        })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Linear => "linear".into(),
            Self::Square => "square".into(),
            Self::NegSquare => "neg_square".into(),
            Self::Exp => "exp".into(),
            Self::Polynomial { coeffs } => format!("polynomial{coeffs:?}"),
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        match self {
            Self::Linear => y,
            Self::Square => y * y,
            Self::NegSquare => -y * y,
            Self::Exp => y.exp(),
            Self::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c),
        }
    }

    pub fn d1(&self, y: f64) -> f64 {
        match self {
            Self::Linear => 1.0,
            Self::Square => 2.0 * y,
            Self::NegSquare => -2.0 * y,
            Self::Exp => y.exp(),
            Self::Polynomial { coeffs } => {
                coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * y + k as f64 * c)
            }
        }
    }

    pub fn d2(&self, y: f64) -> f64 {
        match self {
            Self::Linear => 0.0,
            Self::Square => 2.0,
            Self::NegSquare => -2.0,
            Self::Exp => y.exp(),
            Self::Polynomial { coeffs } => {
                coeffs.iter().enumerate().skip(2).rev().fold(0.0, |acc, (k, c)| acc * y + (k * (k - 1)) as f64 * c)
            }
        }
    }
}

/// Probe points (y, z, A) for the G-convexity condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub ys: Vec<f64>,
    pub zs: Vec<Vec<f64>>,
    pub matrices: Vec<SymMatrix>,
}

impl ProbeSet {
    /// y ∈ {−2,…,2} ∪ `extra_ys`; z ∈ {0, eᵢ, (eᵢ ± eⱼ)/√2};
    /// A ∈ {0, ±eᵢeᵢᵀ, ±zzᵀ}.
    pub fn standard(dim: usize, extra_ys: &[f64]) -> Self {
        let mut ys: Vec<f64> = vec![-2.0, -1.0, 0.0, 1.0, 2.0];
        ys.extend_from_slice(extra_ys);
        let mut zs = vec![vec![0.0; dim]];
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            zs.push(e);
            for j in i + 1..dim {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; dim];
                    v[i] = std::f64::consts::FRAC_1_SQRT_2;
                    v[j] = s * std::f64::consts::FRAC_1_SQRT_2;
                    zs.push(v);
                }
            }
        }
        let mut matrices = vec![SymMatrix::zeros(dim)];
        for z in zs.iter().skip(1) {
            let zz = SymMatrix::outer(&Direction::new(z.clone()).expect("finite probe"));
            matrices.push(zz.neg());
            matrices.push(zz);
        }
        Self { ys, zs, matrices }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GConvexReport {
    pub function: String,
    /// min over probes of G(h'(y)A + h''(y)zzᵀ) − h'(y)G(A).
    pub min_value: f64,
    pub worst_y: f64,
    pub worst_z: Vec<f64>,
    pub probes: usize,
    /// True iff min_value ≥ −1e−10. Certified on the probes only.
    pub verdict: bool,
}

/// Evaluates the G-convexity condition on every probe.
pub fn is_g_convex(h: &ScalarFunction2, gamma: &UncertaintySet, probes: &ProbeSet) -> Result<GConvexReport> {
    if probes.ys.is_empty() || probes.zs.is_empty() || probes.matrices.is_empty() {
        return Err(Error::Empty("convexity probes"));
    }
    let mut best = (f64::INFINITY, 0.0, Vec::new());
    let mut count = 0;
    for &y in &probes.ys {
        let (h1, h2) = (h.d1(y), h.d2(y));
        if !(h1.is_finite() && h2.is_finite()) {
            return Err(Error::NonFinite { location: format!("derivatives of {} at {y}", h.name()) });
        }
        for z in &probes.zs {
            let zz = SymMatrix::outer(&Direction::new(z.clone())?).scale(h2);
            for a in &probes.matrices {
                let v = g_value(gamma, &a.scale(h1).add(&zz))? - h1 * g_value(gamma, a)?;
                count += 1;
                if v < best.0 {
                    best = (v, y, z.clone());
                }
            }
        }
    }
    Ok(GConvexReport {
        function: h.name(),
        min_value: best.0,
        worst_y: best.1,
        worst_z: best.2,
        probes: count,
        verdict: best.0 >= -CONVEXITY_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenReport {
    pub function: String,
    pub e_h_phi: f64,
    pub e_phi: f64,
    /// E[h(φ(B_T))] − h(E[φ(B_T)])
    pub delta: f64,
    /// min over prefix nodes of E[h(φ(B_T))|H_{T/2}] − h(E[φ(B_T)|H_{T/2}]).
    pub conditional_min_delta: f64,
}

/// Both sides of Jensen's inequality, unconditionally and given H_{T/2}.
pub fn jensen_check<F>(
    h: &ScalarFunction2,
    payoff: F,
    gamma: &UncertaintySet,
    a: &Direction,
    horizon: f64,
    window: f64,
    cfg: &SolverConfig,
) -> Result<JensenReport>
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let p2 = payoff.clone();
    let h2 = h.clone();
    let e_h_phi = evaluate_pt(gamma, a, move |x| h2.value(p2(x)), horizon, 0.0, cfg)?;
    let e_phi = evaluate_pt(gamma, a, payoff.clone(), horizon, 0.0, cfg)?;

    let mesh = vec![0.5 * horizon, horizon];
    let (p3, p4, h3) = (payoff.clone(), payoff, h.clone());
    let x_h = CylinderFunctional::new(mesh.clone(), a.clone(), move |v| h3.value(p3(v[1])))?;
    let x_plain = CylinderFunctional::new(mesh, a.clone(), move |v| p4(v[1]))?;
    let lhs = conditional_expect(&x_h, 1, gamma, cfg)?;
    let inner = conditional_expect(&x_plain, 1, gamma, cfg)?;
    let conditional_min_delta = lhs.max_over_nodes(|p, v| -(v - h.value(inner.eval(p))), window);

    Ok(JensenReport {
        function: h.name(),
        e_h_phi,
        e_phi,
        delta: e_h_phi - h.value(e_phi),
        conditional_min_delta: -conditional_min_delta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    /// max over prefix nodes of |E[M_t − M_s | H_s]|.
    pub violation: f64,
    /// min over prefix nodes of E[−(M_t − M_s) | H_s]; positive when −M is not
    /// a G-martingale.
    pub negated_gap: f64,
    pub compensator: f64,
}

/// Splits η = c·aaᵀ and φ = b·a along one unit direction a, when possible.
fn rank_one(eta: &SymMatrix, phi: &[f64]) -> Result<(Direction, f64, f64)> {
    let d = eta.dim();
    if phi.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: phi.len() });
    }
    let phi_norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a, c) = if eta.is_zero() {
        if phi_norm == 0.0 {
            return Ok((Direction::unit(d, 0), 0.0, 0.0));
        }
        (phi.iter().map(|v| v / phi_norm).collect::<Vec<_>>(), 0.0)
    } else {
        // largest diagonal entry picks a nonzero column
        let i = (0..d).max_by(|&x, &y| eta.get(x, x).abs().total_cmp(&eta.get(y, y).abs())).expect("d >= 1");
        let eii = eta.get(i, i);
        if eii == 0.0 {
            return Err(Error::Unsupported("compensator η must be rank one (c·aaᵀ)".into()));
        }
        let col: Vec<f64> = (0..d).map(|j| eta.get(i, j)).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let a: Vec<f64> = col.iter().map(|v| v / norm * eii.signum()).collect();
        let c = eii.signum() * norm * norm / eii.abs();
        let scale = eta.get(i, i).abs().max(1.0);
        for r in 0..d {
            for s in 0..d {
                if (eta.get(r, s) - c * a[r] * a[s]).abs() > 1e-12 * scale {
                    return Err(Error::Unsupported("compensator η must be rank one (c·aaᵀ)".into()));
                }
            }
        }
        (a, c)
    };
    let b: f64 = phi.iter().zip(&a).map(|(p, x)| p * x).sum();
    if phi.iter().zip(&a).any(|(p, x)| (p - b * x).abs() > 1e-12 * phi_norm.max(1.0)) {
        return Err(Error::Unsupported("φ must be parallel to the direction of η".into()));
    }
    Ok((Direction::new(a)?, b, c))
}

fn cond_or_scalar(
    x: &CylinderFunctional,
    gamma: &UncertaintySet,
    cfg: &SolverConfig,
) -> Result<Option<ConditionalValue>> {
    if x.m() == 1 {
        Ok(None)
    } else {
        conditional_expect(x, 1, gamma, cfg).map(Some)
    }
}

/// Checks E[M_t − M_s | H_s] = 0 for M_t = ∫φ·dB + ∫η d⟨B⟩ − ∫2G(η)du with
/// constant η (rank one) and φ.
pub fn compensated_martingale_check(
    eta: &SymMatrix,
    phi: &[f64],
    gamma: &UncertaintySet,
    s: f64,
    t: f64,
    window: f64,
    cfg: &SolverConfig,
) -> Result<MartingaleReport> {
    if !(s >= 0.0 && t > s) {
        return Err(Error::InvalidArgument(format!("need 0 <= s < t, got s = {s}, t = {t}")));
    }
    let (a, b, c) = rank_one(eta, phi)?;
    let compensator = 2.0 * g_value(gamma, eta)? * (t - s);
    // ∫η d⟨B⟩ over [s, t] is c(B^a_t − B^a_s)² minus a symmetric Itô integral
    let x = if s == 0.0 {
        CylinderFunctional::new(vec![t], a, move |v| b * v[0] + c * v[0] * v[0] - compensator)?
    } else {
        CylinderFunctional::new(vec![s, t], a, move |v| {
            let d = v[1] - v[0];
            b * d + c * d * d - compensator
        })?
    };
    let neg = x.neg();
    let (violation, negated_gap) = match (cond_or_scalar(&x, gamma, cfg)?, cond_or_scalar(&neg, gamma, cfg)?) {
        (Some(pos), Some(ng)) => (pos.max_deviation(|_| 0.0, window), -ng.max_over_nodes(|_, v| -v, window)),
        _ => (expect(&x, gamma, cfg)?.abs(), expect(&neg, gamma, cfg)?),
    };
    Ok(MartingaleReport { violation, negated_gap, compensator })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmartingaleReport {
    /// min over prefix nodes of E[h(E[X|H_t])|H_s] − h(E[X|H_s]).
    pub margin: f64,
}

fn time_index(x: &CylinderFunctional, t: f64) -> Result<usize> {
    if t == 0.0 {
        return Ok(0);
    }
    x.times()
        .iter()
        .position(|u| *u == t)
        .map(|i| i + 1)
        .ok_or_else(|| Error::InvalidArgument(format!("time {t} is not on the functional's mesh")))
}

/// E[X|H_t] as a functional on the first k times (X itself when k = m).
fn conditional_functional(
    x: &CylinderFunctional,
    k: usize,
    gamma: &UncertaintySet,
    cfg: &SolverConfig,
) -> Result<CylinderFunctional> {
    if k == x.m() {
        Ok(x.clone())
    } else {
        conditional_expect(x, k, gamma, cfg)?.as_functional(x)
    }
}

/// Checks E[h(E[X|H_t]) | H_s] ≥ h(E[X|H_s]) for s < t on the mesh of X (s may be 0).
pub fn submartingale_check(
    h: &ScalarFunction2,
    x: &CylinderFunctional,
    s: f64,
    t: f64,
    gamma: &UncertaintySet,
    window: f64,
    cfg: &SolverConfig,
) -> Result<SubmartingaleReport> {
    let (ks, kt) = (time_index(x, s)?, time_index(x, t)?);
    if !(ks < kt && kt >= 1) {
        return Err(Error::InvalidArgument(format!("need s < t, got s = {s}, t = {t}")));
    }
    let yt = conditional_functional(x, kt, gamma, cfg)?;
    let hh = h.clone();
    let z = yt.map(move |v| hh.value(v));
    let margin = if ks == 0 {
        expect(&z, gamma, cfg)? - h.value(expect(x, gamma, cfg)?)
    } else {
        // z lives on the first kt > ks times
        let lhs = conditional_expect(&z, ks, gamma, cfg)?;
        let rhs = conditional_expect(x, ks, gamma, cfg)?;
        -rhs.max_over_nodes(|p, v| -(lhs.eval(p) - h.value(v)), window)
    };
    if margin.is_nan() {
        return Err(Error::NonFinite { location: "submartingale margin".into() });
    }
    Ok(SubmartingaleReport { margin })
}
