//! Closed-form maximizers for the alternating-maximization subproblems.
//!
//! | subproblem | objective | feasible set | maximizer |
//! |---|---|---|---|
//! | S1 | `aᵀz` or `(aᵀz)²` | `‖z‖₂ ≤ 1` | `a/‖a‖₂` |
//! | S2 | `aᵀz` | `‖z‖∞ ≤ 1` | `sgn(a)` |
//! | S3 | `aᵀz` | `‖z‖₂ ≤ 1, ‖z‖₀ ≤ s` | `T_s(a)` normalized |
//! | S4 | `aᵀz` | `‖z‖₂ ≤ 1, ‖z‖₁ ≤ √s` | `V_λ(a)` normalized, `λ = λ_s(a)` |
//! | S5 | `(aᵀz)² − γ‖z‖₀` | `‖z‖₂ ≤ 1` | `U_γ(a)` normalized |
//! | S6 | `aᵀz − γ‖z‖₁` | `‖z‖₂ ≤ 1` | `V_γ(a)` normalized |
//!
//! All operators return literal zeros for discarded coordinates.

use std::cmp::Ordering;

use crate::error::{Result, SpcaError};

/// Sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn l0_norm(x: &[f64]) -> usize {
    x.iter().filter(|v| **v != 0.0).count()
}

pub fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn linf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `T_s`: keeps the `s` entries of largest magnitude, zeroes the rest.
///
/// Ties at the cutoff keep the lowest index.
pub fn hard_threshold_top_s(a: &[f64], s: usize) -> Result<Vec<f64>> {
    let m = a.len();
    if s > m {
        return Err(SpcaError::InvalidParameter(format!(
            "cardinality {s} exceeds vector length {m}"
        )));
    }
    if s == m {
        return Ok(a.to_vec());
    }
    let mut out = vec![0.0; m];
    if s == 0 {
        return Ok(out);
    }
    let mut idx: Vec<usize> = (0..m).collect();
    let order = |&i: &usize, &j: &usize| -> Ordering { a[j].abs().total_cmp(&a[i].abs()).then(i.cmp(&j)) };
    idx.select_nth_unstable_by(s - 1, order);
    for &i in &idx[..s] {
        out[i] = a[i];
    }
    Ok(out)
}

/// `U_γ`: `a_i·[sgn(a_i² − γ)]₊`, i.e. keeps `a_i` iff `a_i² > γ`.
pub fn hard_threshold_penalty(a: &[f64], gamma: f64) -> Vec<f64> {
    debug_assert!(gamma >= 0.0);
    a.iter().map(|&v| if v * v > gamma { v } else { 0.0 }).collect()
}

/// `V_γ`: soft thresholding, `sgn(a_i)·(|a_i| − γ)₊`.
pub fn soft_threshold(a: &[f64], gamma: f64) -> Vec<f64> {
    debug_assert!(gamma >= 0.0);
    a.iter().map(|&v| soft_threshold_scalar(v, gamma)).collect()
}

#[inline]
fn soft_threshold_scalar(v: f64, gamma: f64) -> f64 {
    let shrunk = v.abs() - gamma;
    if shrunk > 0.0 {
        sgn(v) * shrunk
    } else {
        0.0
    }
}

/// `‖V_λ(a)‖₁ / ‖V_λ(a)‖₂` for `λ < ‖a‖∞`.
fn shrink_ratio(a: &[f64], lambda: f64) -> f64 {
    let (mut s1, mut s2) = (0.0, 0.0);
    for v in a {
        let t = v.abs() - lambda;
        if t > 0.0 {
            s1 += t;
            s2 += t * t;
        }
    }
    s1 / s2.sqrt()
}

/// Relative width at which the bisection for [`lambda_s`] stops.
pub const LAMBDA_BISECTION_WIDTH: f64 = 1e-10;

/// `λ_s(a) = argmin_{λ ≥ 0} λ√s + ‖V_λ(a)‖₂`.
///
/// The 1-D objective is convex with derivative `√s − ‖V_λ(a)‖₁/‖V_λ(a)‖₂`, and
/// that ratio is nonincreasing in `λ`. The root is bracketed by bisection on
/// `[0, ‖a‖∞]`, then solved exactly on the support the bracket identifies:
/// with `k` surviving entries of mean `μ` and centred sum of squares `V`, the
/// stationarity condition gives `λ = μ − sqrt(sV / (k(k − s)))`.
///
/// Returns `0` when `‖a‖₁/‖a‖₂ ≤ √s` (the `L1` constraint is inactive), and
/// `‖a‖∞` when more than `s` entries tie for the largest magnitude.
pub fn lambda_s(a: &[f64], s: f64) -> Result<f64> {
    let m = a.len();
    if !(s >= 1.0 && s <= m as f64) {
        return Err(SpcaError::InvalidParameter(format!(
            "l1 budget s = {s} outside [1, {m}]"
        )));
    }
    let amax = linf_norm(a);
    if amax == 0.0 {
        return Err(SpcaError::DegenerateInput("lambda_s of the zero vector".into()));
    }
    let target = s.sqrt();
    if l1_norm(a) <= target * l2_norm(a) {
        return Ok(0.0);
    }
    let ties = a.iter().filter(|v| v.abs() == amax).count();
    if ties as f64 > s {
        return Ok(amax);
    }

    let (mut lo, mut hi) = (0.0, amax);
    while hi - lo > LAMBDA_BISECTION_WIDTH * amax {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shrink_ratio(a, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // The bracket may straddle breakpoints; walk the supports it covers.
    let mut floor = lo;
    loop {
        let support: Vec<f64> = a.iter().map(|v| v.abs()).filter(|&b| b > floor).collect();
        let k = support.len();
        let ceiling = support.iter().copied().fold(f64::INFINITY, f64::min);
        if (k as f64) > s {
            let kf = k as f64;
            let mean = support.iter().sum::<f64>() / kf;
            let var: f64 = support.iter().map(|b| (b - mean) * (b - mean)).sum();
            let root = mean - (s * var / (kf * (kf - s))).sqrt();
            if root >= lo && root <= hi && root <= ceiling {
                return Ok(root.max(0.0));
            }
        }
        if ceiling >= hi || !ceiling.is_finite() {
            return Ok(hi);
        }
        floor = ceiling;
    }
}

/// Maximizer of `aᵀz` over `‖z‖₂ ≤ 1, ‖z‖₁ ≤ √s`.
///
/// Returns the unit maximizer and the dual value `λ√s + ‖V_λ(a)‖₂`.
pub fn s4_maximizer(a: &[f64], s: f64) -> Result<(Vec<f64>, f64)> {
    let lambda = lambda_s(a, s)?;
    let mut x = soft_threshold(a, lambda);
    let norm = l2_norm(&x);
    if norm == 0.0 {
        return Err(SpcaError::DegenerateInput(
            "soft thresholding at lambda_s removed every coordinate".into(),
        ));
    }
    x.iter_mut().for_each(|v| *v /= norm);
    Ok((x, lambda * s.sqrt() + norm))
}

/// The operator applied in the loading-vector step, by sparsity mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdParam {
    /// `T_s`, for the `L0` constraint `‖x‖₀ ≤ s`.
    HardCardinality { s: usize },
    /// `V_{λ_s(v)}`, for the `L1` constraint `‖x‖₁ ≤ √s`.
    L1Budget { s: usize },
    /// `U_γ`, for the `L0` penalty `γ‖x‖₀`.
    HardSquarePenalty { gamma: f64 },
    /// `V_γ`, for the `L1` penalty `γ‖x‖₁`.
    SoftL1 { gamma: f64 },
}

impl ThresholdParam {
    /// Checks the parameter against vector length `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            ThresholdParam::HardCardinality { s } | ThresholdParam::L1Budget { s } => {
                if s == 0 || s > dim {
                    return Err(SpcaError::InvalidParameter(format!("s must be in [1, {dim}], got {s}")));
                }
            }
            ThresholdParam::HardSquarePenalty { gamma } | ThresholdParam::SoftL1 { gamma } => {
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(SpcaError::InvalidParameter(format!(
                        "gamma must be a finite value >= 0, got {gamma}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Thresholds `v` without normalizing. A zero `v` under `L1Budget` maps to zero.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match *self {
            ThresholdParam::HardCardinality { s } => hard_threshold_top_s(v, s),
            ThresholdParam::L1Budget { s } => {
                if v.iter().all(|x| *x == 0.0) {
                    return Ok(vec![0.0; v.len()]);
                }
                Ok(soft_threshold(v, lambda_s(v, s as f64)?))
            }
            ThresholdParam::HardSquarePenalty { gamma } => Ok(hard_threshold_penalty(v, gamma)),
            ThresholdParam::SoftL1 { gamma } => Ok(soft_threshold(v, gamma)),
        }
    }
}
