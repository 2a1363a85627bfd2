//! The eight sparse PCA problems and the two alternating steps.
//!
//! | # | variance | sparsity | usage | `f(x)` |
//! |---|---|---|---|---|
//! | 1 | L2 | L0 | constraint `‖x‖₀ ≤ s` | `‖Ax‖₂` |
//! | 2 | L1 | L0 | constraint `‖x‖₀ ≤ s` | `‖Ax‖₁` |
//! | 3 | L2 | L1 | constraint `‖x‖₁ ≤ √s` | `‖Ax‖₂` |
//! | 4 | L1 | L1 | constraint `‖x‖₁ ≤ √s` | `‖Ax‖₁` |
//! | 5 | L2 | L0 | penalty | `‖Ax‖₂² − γ‖x‖₀` |
//! | 6 | L1 | L0 | penalty | `‖Ax‖₁² − γ‖x‖₀` |
//! | 7 | L2 | L1 | penalty | `‖Ax‖₂ − γ‖x‖₁` |
//! | 8 | L1 | L1 | penalty | `‖Ax‖₁ − γ‖x‖₁` |
//!
//! Every `x` also satisfies `‖x‖₂ ≤ 1`. Writing the variance norm as a max
//! over its dual ball `Y` (`‖y‖₂ ≤ 1` for L2, `‖y‖∞ ≤ 1` for L1) turns
//! `f` into `max_y F(x, y)` with `F` bilinear up to the penalty term.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};
use crate::matrix::DataMatrix;
use crate::operators::{l0_norm, l1_norm, l2_norm, linf_norm, sgn, ThresholdParam};

/// Slack used when checking membership of `X` and `Y`.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceNorm {
    L2,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityNorm {
    L0,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SparsityMode {
    Constraint,
    Penalty,
}

/// How the sparsity norm enters the problem, with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Usage {
    /// `‖x‖₀ ≤ s` or `‖x‖₁ ≤ √s`.
    Constraint { s: usize },
    /// `− γ‖x‖₀` or `− γ‖x‖₁` in the objective.
    Penalty { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Formulation {
    pub variance: VarianceNorm,
    pub sparsity: SparsityNorm,
    pub usage: Usage,
}

/// `F(x, y)` at the current iterate pair.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct MeritValue(pub f64);

/// Why a closed-form step produced no usable iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSignal {
    /// `Ax = 0` under L2 variance: `u/‖u‖₂` is undefined.
    DegenerateIterate,
    /// The thresholded vector is identically zero.
    ZeroLoading,
}

impl Formulation {
    pub fn constrained(variance: VarianceNorm, sparsity: SparsityNorm, s: usize) -> Self {
        Formulation {
            variance,
            sparsity,
            usage: Usage::Constraint { s },
        }
    }

    pub fn penalized(variance: VarianceNorm, sparsity: SparsityNorm, gamma: f64) -> Self {
        Formulation {
            variance,
            sparsity,
            usage: Usage::Penalty { gamma },
        }
    }

    /// Formulation by table row (1..=8). `param` is `s` for rows 1–4 and `γ`
    /// for rows 5–8.
    pub fn from_index(index: usize, param: f64) -> Result<Self> {
        use SparsityNorm as S;
        use VarianceNorm as V;
        let (variance, sparsity) = match index {
            1 | 5 => (V::L2, S::L0),
            2 | 6 => (V::L1, S::L0),
            3 | 7 => (V::L2, S::L1),
            4 | 8 => (V::L1, S::L1),
            _ => {
                return Err(SpcaError::InvalidParameter(format!(
                    "formulation index must be in 1..=8, got {index}"
                )))
            }
        };
        if index <= 4 {
            if !(param >= 0.0 && param.fract() == 0.0) {
                return Err(SpcaError::InvalidParameter(format!(
                    "s must be a nonnegative integer, got {param}"
                )));
            }
            Ok(Self::constrained(variance, sparsity, param as usize))
        } else {
            Ok(Self::penalized(variance, sparsity, param))
        }
    }

    /// All eight rows for the given parameters.
    pub fn all(s: usize, gamma: f64) -> [Formulation; 8] {
        let mut out = [Self::constrained(VarianceNorm::L2, SparsityNorm::L0, s); 8];
        for (i, f) in out.iter_mut().enumerate() {
            let param = if i < 4 { s as f64 } else { gamma };
            *f = Self::from_index(i + 1, param).expect("valid row");
        }
        out
    }

    /// Row number (1..=8).
    pub fn index(&self) -> usize {
        let base = match (self.variance, self.sparsity) {
            (VarianceNorm::L2, SparsityNorm::L0) => 1,
            (VarianceNorm::L1, SparsityNorm::L0) => 2,
            (VarianceNorm::L2, SparsityNorm::L1) => 3,
            (VarianceNorm::L1, SparsityNorm::L1) => 4,
        };
        match self.usage {
            Usage::Constraint { .. } => base,
            Usage::Penalty { .. } => base + 4,
        }
    }

    pub fn mode(&self) -> SparsityMode {
        match self.usage {
            Usage::Constraint { .. } => SparsityMode::Constraint,
            Usage::Penalty { .. } => SparsityMode::Penalty,
        }
    }

    pub fn is_constrained(&self) -> bool {
        self.mode() == SparsityMode::Constraint
    }

    /// The loading-step operator.
    pub fn threshold(&self) -> ThresholdParam {
        match (self.sparsity, self.usage) {
            (SparsityNorm::L0, Usage::Constraint { s }) => ThresholdParam::HardCardinality { s },
            (SparsityNorm::L1, Usage::Constraint { s }) => ThresholdParam::L1Budget { s },
            (SparsityNorm::L0, Usage::Penalty { gamma }) => ThresholdParam::HardSquarePenalty { gamma },
            (SparsityNorm::L1, Usage::Penalty { gamma }) => ThresholdParam::SoftL1 { gamma },
        }
    }

    /// Checks `1 ≤ s ≤ p` or `γ ≥ 0`.
    pub fn validate(&self, p: usize) -> Result<()> {
        self.threshold().validate(p)
    }

    /// `‖u‖₂` or `‖u‖₁`.
    pub fn variance_of(&self, u: &[f64]) -> f64 {
        match self.variance {
            VarianceNorm::L2 => l2_norm(u),
            VarianceNorm::L1 => l1_norm(u),
        }
    }

    /// Whether `x ∈ X`, with slack `tol` and `‖x‖₀` counting `|x_i| > zero_tol`.
    pub fn x_feasible(&self, x: &[f64], tol: f64, zero_tol: f64) -> bool {
        if l2_norm(x) > 1.0 + tol {
            return false;
        }
        match (self.sparsity, self.usage) {
            (SparsityNorm::L0, Usage::Constraint { s }) => count_above(x, zero_tol) <= s,
            (SparsityNorm::L1, Usage::Constraint { s }) => l1_norm(x) <= (s as f64).sqrt() + tol,
            (_, Usage::Penalty { .. }) => true,
        }
    }

    pub fn y_feasible(&self, y: &[f64], tol: f64) -> bool {
        match self.variance {
            VarianceNorm::L2 => l2_norm(y) <= 1.0 + tol,
            VarianceNorm::L1 => linf_norm(y) <= 1.0 + tol,
        }
    }

    /// Penalty term with `‖x‖₀` counted exactly.
    fn penalty_term(&self, x: &[f64], zero_tol: f64) -> f64 {
        match (self.sparsity, self.usage) {
            (_, Usage::Constraint { .. }) => 0.0,
            (SparsityNorm::L0, Usage::Penalty { gamma }) => gamma * count_above(x, zero_tol) as f64,
            (SparsityNorm::L1, Usage::Penalty { gamma }) => gamma * l1_norm(x),
        }
    }

    /// Combines a variance-like value `t` (`‖Ax‖` in `f`, `yᵀAx` in `F`) with the penalty.
    fn combine(&self, t: f64, x: &[f64], zero_tol: f64) -> f64 {
        match (self.sparsity, self.usage) {
            (_, Usage::Constraint { .. }) => t,
            (SparsityNorm::L0, Usage::Penalty { .. }) => t * t - self.penalty_term(x, zero_tol),
            (SparsityNorm::L1, Usage::Penalty { .. }) => t - self.penalty_term(x, zero_tol),
        }
    }

    /// `F(x, y)` given `v = Aᵀy`, so `yᵀAx = vᵀx`.
    pub fn merit_from_aty(&self, v: &[f64], x: &[f64]) -> f64 {
        let t: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
        self.combine(t, x, 0.0)
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = match self.variance {
            VarianceNorm::L2 => "L2",
            VarianceNorm::L1 => "L1",
        };
        let sp = match self.sparsity {
            SparsityNorm::L0 => "L0",
            SparsityNorm::L1 => "L1",
        };
        match self.usage {
            Usage::Constraint { s } => write!(f, "#{} {sp}-constrained {var} variance (s={s})", self.index()),
            Usage::Penalty { gamma } => {
                write!(f, "#{} {sp}-penalized {var} variance (gamma={gamma})", self.index())
            }
        }
    }
}

fn count_above(x: &[f64], zero_tol: f64) -> usize {
    if zero_tol == 0.0 {
        l0_norm(x)
    } else {
        x.iter().filter(|v| v.abs() > zero_tol).count()
    }
}

/// Zero threshold for `‖x‖₀` when scoring loadings that did not come from the solver.
pub const EXTERNAL_ZERO_TOL: f64 = 1e-12;

/// `f(x)`, counting `‖x‖₀` exactly. Solver output contains literal zeros.
pub fn objective(form: &Formulation, a: &DataMatrix, x: &[f64]) -> Result<f64> {
    objective_with_zero_tol(form, a, x, 0.0)
}

/// `f(x)` for a user-supplied loading: entries with `|x_i| ≤ 1e-12` count as zero.
pub fn objective_external(form: &Formulation, a: &DataMatrix, x: &[f64]) -> Result<f64> {
    objective_with_zero_tol(form, a, x, EXTERNAL_ZERO_TOL)
}

pub fn objective_with_zero_tol(form: &Formulation, a: &DataMatrix, x: &[f64], zero_tol: f64) -> Result<f64> {
    if x.len() != a.p() {
        return Err(SpcaError::DimensionMismatch {
            expected: a.p(),
            found: x.len(),
        });
    }
    if !form.x_feasible(x, FEASIBILITY_TOL, zero_tol) {
        return Err(SpcaError::Infeasible(format!("x is outside X for {form}")));
    }
    let u = a.matvec(x)?;
    Ok(form.combine(form.variance_of(&u), x, zero_tol))
}

/// `F(x, y)` evaluated directly.
pub fn merit(form: &Formulation, a: &DataMatrix, x: &[f64], y: &[f64]) -> Result<MeritValue> {
    if y.len() != a.n() {
        return Err(SpcaError::DimensionMismatch {
            expected: a.n(),
            found: y.len(),
        });
    }
    if x.len() != a.p() {
        return Err(SpcaError::DimensionMismatch {
            expected: a.p(),
            found: x.len(),
        });
    }
    if !form.x_feasible(x, FEASIBILITY_TOL, 0.0) {
        return Err(SpcaError::Infeasible(format!("x is outside X for {form}")));
    }
    if !form.y_feasible(y, FEASIBILITY_TOL) {
        return Err(SpcaError::Infeasible(format!("y is outside Y for {form}")));
    }
    let u = a.matvec(x)?;
    let t: f64 = y.iter().zip(&u).map(|(p, q)| p * q).sum();
    Ok(MeritValue(form.combine(t, x, 0.0)))
}

/// `argmax_{y ∈ Y} F(x, y)` given `u = Ax`: `u/‖u‖₂` (L2) or `sgn(u)` (L1).
pub fn y_step(form: &Formulation, u: &[f64]) -> std::result::Result<Vec<f64>, StepSignal> {
    match form.variance {
        VarianceNorm::L2 => {
            let norm = l2_norm(u);
            if norm == 0.0 {
                return Err(StepSignal::DegenerateIterate);
            }
            Ok(u.iter().map(|v| v / norm).collect())
        }
        VarianceNorm::L1 => Ok(u.iter().map(|&v| sgn(v)).collect()),
    }
}

/// `argmax_{x ∈ X} F(x, y)` given `v = Aᵀy`, normalized to unit length.
pub fn x_step(form: &Formulation, v: &[f64]) -> std::result::Result<Vec<f64>, StepSignal> {
    let mut x = form.threshold().apply(v).map_err(|_| StepSignal::DegenerateIterate)?;
    let norm = l2_norm(&x);
    if norm == 0.0 {
        return Err(StepSignal::ZeroLoading);
    }
    x.iter_mut().for_each(|e| *e /= norm);
    Ok(x)
}
