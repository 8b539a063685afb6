//! The uncertainty set Γ and the sublinear generator it induces,
//!
//! ```text
//! G(A) = ½ sup_{γ∈Γ} tr[γγᵀ A],    σ_A = 2 G(A).
//! ```
//!
//! Interval and diagonal-box sets use exact closed forms; finite matrix sets
//! are evaluated by maximising over the list.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense square matrix, row-major. Used for volatility matrices γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty("matrix rows"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { location: "matrix entry".into() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn scalar(v: f64) -> Self {
        Self { dim: 1, data: vec![v] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in diag.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// `out = self · v`
    #[inline]
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// tr[γγᵀA] = Σ_k γ_{·k}ᵀ A γ_{·k}.
    pub fn trace_outer_with(&self, a: &SymMatrix) -> f64 {
        let d = self.dim;
        let mut total = 0.0;
        for k in 0..d {
            for i in 0..d {
                let gi = self.get(i, k);
                if gi == 0.0 {
                    continue;
                }
                for j in 0..d {
                    total += gi * a.get(i, j) * self.get(j, k);
                }
            }
        }
        total
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.data.chunks(m.dim).map(|r| r.to_vec()).collect()
    }
}

/// A symmetric matrix stored as its packed upper triangle, so symmetry holds
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, upper: vec![0.0; dim * (dim + 1) / 2] }
    }

    pub fn scalar(v: f64) -> Self {
        Self { dim: 1, upper: vec![v] }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds from full rows; rejects asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty("matrix rows"));
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            if rows[i].len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: rows[i].len() });
            }
            for j in i..dim {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidArgument(format!("matrix not symmetric at ({i},{j})")));
                }
                m.set(i, j, rows[i][j]);
            }
        }
        Ok(m)
    }

    /// The rank-one matrix aaᵀ.
    pub fn outer(a: &Direction) -> Self {
        let c = a.components();
        let mut m = Self::zeros(c.len());
        for i in 0..c.len() {
            for j in i..c.len() {
                m.set(i, j, c[i] * c[j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * (2 * self.dim - i + 1) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.offset(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.offset(i, j);
        self.upper[k] = v;
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, upper: self.upper.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "SymMatrix::add dimension mismatch");
        Self { dim: self.dim, upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a + b).collect() }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// (Ax, x)
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                total += self.get(i, j) * x[i] * x[j];
            }
        }
        total
    }

    pub fn is_zero(&self) -> bool {
        self.upper.iter().all(|v| *v == 0.0)
    }
}

/// A direction a ∈ Rᵈ; the zero vector is allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("direction components"));
        }
        if components.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { location: "direction".into() });
        }
        Ok(Self(components))
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[axis] = 1.0;
        Self(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn combine(&self, other: &Direction, sign: f64) -> Direction {
        Direction(self.0.iter().zip(&other.0).map(|(a, b)| a + sign * b).collect())
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Direction::new(v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.0
    }
}

/// The bounded, closed set Γ of volatility matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UncertaintySetRepr", into = "UncertaintySetRepr")]
pub enum UncertaintySet {
    /// γ ∈ [sigma_low, sigma_high], d = 1.
    Interval1D { sigma_low: f64, sigma_high: f64 },
    /// Diagonal γ with γ_ii ∈ [lo_i, hi_i].
    DiagonalBox { bounds: Vec<(f64, f64)> },
    /// A finite list of d×d matrices.
    FiniteMatrixSet { matrices: Vec<Matrix> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum UncertaintySetRepr {
    #[serde(rename = "interval1d")]
    Interval1D {
        sigma_low: f64,
        sigma_high: f64,
    },
    DiagonalBox {
        bounds: Vec<[f64; 2]>,
    },
    MatrixSet {
        matrices: Vec<Matrix>,
    },
}

impl TryFrom<UncertaintySetRepr> for UncertaintySet {
    type Error = Error;
    fn try_from(r: UncertaintySetRepr) -> Result<Self> {
        match r {
            UncertaintySetRepr::Interval1D { sigma_low, sigma_high } => UncertaintySet::interval(sigma_low, sigma_high),
            UncertaintySetRepr::DiagonalBox { bounds } => {
                UncertaintySet::diagonal_box(bounds.into_iter().map(|[l, h]| (l, h)).collect())
            }
            UncertaintySetRepr::MatrixSet { matrices } => UncertaintySet::matrix_set(matrices),
        }
    }
}

impl From<UncertaintySet> for UncertaintySetRepr {
    fn from(s: UncertaintySet) -> Self {
        match s {
            UncertaintySet::Interval1D { sigma_low, sigma_high } => {
                UncertaintySetRepr::Interval1D { sigma_low, sigma_high }
            }
            UncertaintySet::DiagonalBox { bounds } => {
                UncertaintySetRepr::DiagonalBox { bounds: bounds.into_iter().map(|(l, h)| [l, h]).collect() }
            }
            UncertaintySet::FiniteMatrixSet { matrices } => UncertaintySetRepr::MatrixSet { matrices },
        }
    }
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidUncertaintySet("non-finite volatility bound".into()));
    }
    if !(0.0 <= lo && lo <= hi) {
        return Err(Error::InvalidUncertaintySet(format!("need 0 <= low <= high, got [{lo}, {hi}]")));
    }
    Ok(())
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

#[inline]
fn neg_part(x: f64) -> f64 {
    (-x).max(0.0)
}

impl UncertaintySet {
    pub fn interval(sigma_low: f64, sigma_high: f64) -> Result<Self> {
        check_bounds(sigma_low, sigma_high)?;
        if sigma_high <= 0.0 {
            return Err(Error::InvalidUncertaintySet("sigma_high must be positive".into()));
        }
        Ok(Self::Interval1D { sigma_low, sigma_high })
    }

    pub fn diagonal_box(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidUncertaintySet("diagonal box needs at least one axis".into()));
        }
        for (lo, hi) in &bounds {
            check_bounds(*lo, *hi)?;
        }
        Ok(Self::DiagonalBox { bounds })
    }

    pub fn matrix_set(matrices: Vec<Matrix>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::InvalidUncertaintySet("matrix set is empty".into()));
        };
        let d = first.dim();
        if let Some(bad) = matrices.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: bad.dim() });
        }
        Ok(Self::FiniteMatrixSet { matrices })
    }

    /// Γ = {γ₀}: reproduces the linear (classical) case.
    pub fn singleton(gamma: Matrix) -> Self {
        Self::FiniteMatrixSet { matrices: vec![gamma] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval1D { .. } => 1,
            Self::DiagonalBox { bounds } => bounds.len(),
            Self::FiniteMatrixSet { matrices } => matrices[0].dim(),
        }
    }

    /// sup_{γ∈Γ} tr[γγᵀ]; bounds σ_{aaᵀ} for every unit direction a.
    pub fn max_trace(&self) -> f64 {
        match self {
            Self::Interval1D { sigma_high, .. } => sigma_high * sigma_high,
            Self::DiagonalBox { bounds } => bounds.iter().map(|(_, h)| h * h).sum(),
            Self::FiniteMatrixSet { matrices } => matrices.iter().map(Matrix::frobenius_sq).fold(0.0, f64::max),
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: d });
        }
        Ok(())
    }

    /// Membership of a volatility matrix, up to `tol`.
    pub fn contains(&self, gamma: &Matrix, tol: f64) -> bool {
        if gamma.dim() != self.dim() {
            return false;
        }
        match self {
            Self::Interval1D { sigma_low, sigma_high } => {
                let g = gamma.get(0, 0);
                g >= sigma_low - tol && g <= sigma_high + tol
            }
            Self::DiagonalBox { bounds } => {
                gamma.is_diagonal()
                    && bounds.iter().enumerate().all(|(i, (lo, hi))| {
                        let g = gamma.get(i, i);
                        g >= lo - tol && g <= hi + tol
                    })
            }
            Self::FiniteMatrixSet { matrices } => matrices.iter().any(|m| m.max_abs_diff(gamma) <= tol),
        }
    }

    /// Constant-volatility scenarios: `levels` evenly spaced points between the
    /// lower and upper corner for intervals and boxes, every matrix for a set.
    pub fn volatility_ladder(&self, levels: usize) -> Vec<Matrix> {
        let levels = levels.max(1);
        let frac = |k: usize| if levels == 1 { 1.0 } else { k as f64 / (levels - 1) as f64 };
        match self {
            Self::Interval1D { sigma_low, sigma_high } => {
                (0..levels).map(|k| Matrix::scalar(sigma_low + frac(k) * (sigma_high - sigma_low))).collect()
            }
            Self::DiagonalBox { bounds } => (0..levels)
                .map(|k| {
                    let diag: Vec<f64> = bounds.iter().map(|(lo, hi)| lo + frac(k) * (hi - lo)).collect();
                    Matrix::diagonal(&diag)
                })
                .collect(),
            Self::FiniteMatrixSet { matrices } => matrices.clone(),
        }
    }

    /// The corner of Γ attaining σ_{aaᵀ} (upper) or σ_{−aaᵀ} (lower) for `a`.
    pub fn extreme_matrix(&self, a: &Direction, upper: bool) -> Result<Matrix> {
        self.check_dim(a.dim())?;
        Ok(match self {
            Self::Interval1D { sigma_low, sigma_high } => Matrix::scalar(if upper { *sigma_high } else { *sigma_low }),
            Self::DiagonalBox { bounds } => {
                Matrix::diagonal(&bounds.iter().map(|(lo, hi)| if upper { *hi } else { *lo }).collect::<Vec<_>>())
            }
            Self::FiniteMatrixSet { matrices } => {
                let aat = SymMatrix::outer(a);
                let key = |m: &Matrix| m.trace_outer_with(&aat);
                let pick = matrices.iter().max_by(|x, y| {
                    let (kx, ky) = (key(x), key(y));
                    if upper {
                        kx.total_cmp(&ky)
                    } else {
                        ky.total_cmp(&kx)
                    }
                });
                pick.expect("matrix set is nonempty").clone()
            }
        })
    }
}

/// G(A) = ½ sup_{γ∈Γ} tr[γγᵀA].
pub fn g_value(gamma: &UncertaintySet, a_mat: &SymMatrix) -> Result<f64> {
    gamma.check_dim(a_mat.dim())?;
    Ok(match gamma {
        UncertaintySet::Interval1D { sigma_low, sigma_high } => {
            let a = a_mat.get(0, 0);
            0.5 * (sigma_high * sigma_high * pos(a) - sigma_low * sigma_low * neg_part(a))
        }
        // diagonal γ only sees diag(A)
        UncertaintySet::DiagonalBox { bounds } => {
            0.5 * bounds
                .iter()
                .enumerate()
                .map(|(i, (lo, hi))| {
                    let a = a_mat.get(i, i);
                    hi * hi * pos(a) - lo * lo * neg_part(a)
                })
                .sum::<f64>()
        }
        UncertaintySet::FiniteMatrixSet { matrices } => {
            0.5 * matrices.iter().map(|m| m.trace_outer_with(a_mat)).fold(f64::NEG_INFINITY, f64::max)
        }
    })
}

/// σ_A = sup_{γ∈Γ} tr[γγᵀA] = 2 G(A).
pub fn sigma_of(gamma: &UncertaintySet, a_mat: &SymMatrix) -> Result<f64> {
    Ok(2.0 * g_value(gamma, a_mat)?)
}

/// The pair (σ_{aaᵀ}, σ_{−aaᵀ}) that drives the one-dimensional reduction
/// along `a`.
pub fn directional_sigmas(gamma: &UncertaintySet, a: &Direction) -> Result<(f64, f64)> {
    let aat = SymMatrix::outer(a);
    let plus = sigma_of(gamma, &aat)?;
    let minus = sigma_of(gamma, &aat.neg())?;
    Ok((plus, minus))
}

/// G_a(β) = ½[σ_{aaᵀ} β⁺ + σ_{−aaᵀ} β⁻].
pub fn g_directional(gamma: &UncertaintySet, a: &Direction, beta: f64) -> Result<f64> {
    let (plus, minus) = directional_sigmas(gamma, a)?;
    Ok(0.5 * (plus * pos(beta) + minus * neg_part(beta)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationReport {
    /// max over samples of G_sub(A) − G_sup(A); ≤ 0 when sub ⊂ sup.
    pub max_violation: f64,
    pub worst_sample: usize,
    pub differences: Vec<f64>,
}

/// Checks G_sub(A) ≤ G_sup(A) on every sample.
pub fn check_domination(sub: &UncertaintySet, sup: &UncertaintySet, samples: &[SymMatrix]) -> Result<DominationReport> {
    sub.check_dim(sup.dim())?;
    if samples.is_empty() {
        return Err(Error::Empty("domination samples"));
    }
    let differences = samples.iter().map(|a| Ok(g_value(sub, a)? - g_value(sup, a)?)).collect::<Result<Vec<_>>>()?;
    let (worst_sample, max_violation) =
        differences.iter().copied().enumerate().max_by(|x, y| x.1.total_cmp(&y.1)).expect("nonempty");
    Ok(DominationReport { max_violation, worst_sample, differences })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv() -> UncertaintySet {
        UncertaintySet::interval(0.5, 1.0).unwrap()
    }

    #[test]
    fn interval_values() {
        assert_eq!(g_value(&iv(), &SymMatrix::scalar(2.0)).unwrap(), 1.0);
        assert_eq!(g_value(&iv(), &SymMatrix::scalar(-2.0)).unwrap(), -0.25);
        assert_eq!(g_value(&iv(), &SymMatrix::scalar(0.0)).unwrap(), 0.0);
        assert_eq!(sigma_of(&iv(), &SymMatrix::scalar(1.0)).unwrap(), 1.0);
        assert_eq!(sigma_of(&iv(), &SymMatrix::scalar(-1.0)).unwrap(), -0.25);
    }

    #[test]
    fn directional_values() {
        let a = Direction::new(vec![1.0]).unwrap();
        assert_eq!(g_directional(&iv(), &a, 2.0).unwrap(), 1.0);
        let zero = Direction::new(vec![0.0, 0.0]).unwrap();
        let bx = UncertaintySet::diagonal_box(vec![(0.5, 1.0), (0.5, 1.0)]).unwrap();
        assert_eq!(g_directional(&bx, &zero, 3.0).unwrap(), 0.0);
        let e1 = Direction::unit(2, 0);
        assert_eq!(g_directional(&bx, &e1, -2.0).unwrap(), -0.25);
    }

    #[test]
    fn domination_examples() {
        let sub = UncertaintySet::interval(0.8, 1.0).unwrap();
        let samples: Vec<_> = [1.0, -1.0, 2.0, -2.0].iter().map(|v| SymMatrix::scalar(*v)).collect();
        let r = check_domination(&sub, &iv(), &samples).unwrap();
        assert!(r.max_violation <= 0.0);
        let same = check_domination(&iv(), &iv(), &samples).unwrap();
        assert_eq!(same.max_violation, 0.0);

        let id = UncertaintySet::singleton(Matrix::identity(1));
        let a = SymMatrix::scalar(-1.0);
        assert_eq!(g_value(&id, &a).unwrap(), -0.5);
        assert_eq!(g_value(&iv(), &a).unwrap(), -0.125);
        assert!(check_domination(&id, &iv(), &[a]).unwrap().max_violation <= 0.0);
    }

    #[test]
    fn singleton_is_linear() {
        let g = UncertaintySet::singleton(Matrix::from_rows(&[vec![1.0, 0.3], vec![0.0, 0.7]]).unwrap());
        let a = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, -2.0]]).unwrap();
        let b = SymMatrix::from_rows(&[vec![-0.2, 0.1], vec![0.1, 0.4]]).unwrap();
        let lhs = g_value(&g, &a.add(&b)).unwrap();
        let rhs = g_value(&g, &a).unwrap() + g_value(&g, &b).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
        assert!((g_value(&g, &a.neg()).unwrap() + g_value(&g, &a).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(UncertaintySet::interval(1.0, 0.5).is_err());
        assert!(UncertaintySet::interval(-0.1, 0.5).is_err());
        assert!(UncertaintySet::interval(0.0, 0.0).is_err());
        assert!(UncertaintySet::matrix_set(vec![]).is_err());
        assert!(UncertaintySet::diagonal_box(vec![(0.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(g_value(&iv(), &SymMatrix::zeros(2)).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn serde_schema() {
        let json = r#"{"kind":"interval1d","sigma_low":0.5,"sigma_high":1.0}"#;
        let g: UncertaintySet = serde_json::from_str(json).unwrap();
        assert_eq!(g, iv());
        let bx: UncertaintySet =
            serde_json::from_str(r#"{"kind":"diagonal_box","bounds":[[0.5,1.0],[0.2,0.9]]}"#).unwrap();
        assert_eq!(bx.dim(), 2);
        let ms: UncertaintySet = serde_json::from_str(r#"{"kind":"matrix_set","matrices":[[[1.0]],[[0.5]]]}"#).unwrap();
        assert_eq!(ms.dim(), 1);
        let back: UncertaintySet = serde_json::from_str(&serde_json::to_string(&ms).unwrap()).unwrap();
        assert_eq!(back, ms);
        assert!(serde_json::from_str::<UncertaintySet>(r#"{"kind":"interval1d","sigma_low":2.0,"sigma_high":1.0}"#)
            .is_err());
    }

    #[test]
    fn contains_and_ladder() {
        let ladder = iv().volatility_ladder(5);
        assert_eq!(ladder.len(), 5);
        assert_eq!(ladder[0].get(0, 0), 0.5);
        assert_eq!(ladder[4].get(0, 0), 1.0);
        assert!(ladder.iter().all(|m| iv().contains(m, 0.0)));
        assert!(!iv().contains(&Matrix::scalar(1.1), 1e-12));
    }
}
