//! Reference solvers that do not go through the AM loop.
//!
//! * [`gpower_step`]: one "linearize and maximize" step on the reduced
//!   objective. For constrained formulations the iterate is `x` and the
//!   reduced objective is `F_Y(x) = max_y F(x, y)`; for penalized ones the
//!   iterate is `y` and it is `F_X(y) = max_x F(x, y)`. The gradient is
//!   written out explicitly for each row and maximized over the feasible set.
//! * Brute-force global optima for small instances, by enumerating supports
//!   or sign vectors.
//! * [`power_method_sigma_max`], the top singular value.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};
use crate::formulations::{Formulation, SparsityNorm, StepSignal, Usage, VarianceNorm};
use crate::matrix::DataMatrix;
use crate::operators::{hard_threshold_penalty, hard_threshold_top_s, l2_norm, s4_maximizer, sgn, soft_threshold};
use crate::solver::{generate_start, StartScheme};

/// Largest `p` accepted by [`brute_force_l0_constrained`].
pub const MAX_ENUM_P_CONSTRAINED: usize = 14;
/// Largest `p` (and `n` for `L1` variance) accepted by [`brute_force_penalized`].
pub const MAX_ENUM_PENALIZED: usize = 12;
/// Largest `n` for sign-vector enumeration under constraints.
pub const MAX_ENUM_N: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub optimum: f64,
    /// Support of a maximizer, ascending.
    pub argmax_support: Vec<usize>,
    /// `true` when the value comes from exhaustive enumeration.
    pub certified: bool,
    /// What was enumerated or searched.
    pub certificate: String,
}

fn unit(mut v: Vec<f64>) -> std::result::Result<Vec<f64>, StepSignal> {
    let norm = l2_norm(&v);
    if norm == 0.0 {
        return Err(StepSignal::ZeroLoading);
    }
    v.iter_mut().for_each(|e| *e /= norm);
    Ok(v)
}

fn support_of(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, e)| **e != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// `argmax_{z ∈ Ω} ⟨g, z⟩` where `Ω` is `X` (constrained) or `Y` (penalized).
fn linear_maximizer(form: &Formulation, g: &[f64]) -> std::result::Result<Vec<f64>, StepSignal> {
    match form.usage {
        Usage::Constraint { s } => match form.sparsity {
            SparsityNorm::L0 => unit(hard_threshold_top_s(g, s).map_err(|_| StepSignal::DegenerateIterate)?),
            SparsityNorm::L1 => {
                if g.iter().all(|e| *e == 0.0) {
                    return Err(StepSignal::ZeroLoading);
                }
                s4_maximizer(g, s as f64)
                    .map(|(z, _)| z)
                    .map_err(|_| StepSignal::DegenerateIterate)
            }
        },
        Usage::Penalty { .. } => match form.variance {
            VarianceNorm::L2 => unit(g.to_vec()),
            VarianceNorm::L1 => {
                if g.iter().all(|e| *e == 0.0) {
                    return Err(StepSignal::ZeroLoading);
                }
                Ok(g.iter().map(|&e| sgn(e)).collect())
            }
        },
    }
}

/// A (super)gradient of the reduced objective at `z`.
fn gradient(form: &Formulation, a: &DataMatrix, z: &[f64]) -> Result<std::result::Result<Vec<f64>, StepSignal>> {
    Ok(match form.usage {
        // F_Y(x) = ‖Ax‖₂ or ‖Ax‖₁.
        Usage::Constraint { .. } => {
            let ax = a.matvec(z)?;
            match form.variance {
                VarianceNorm::L2 => {
                    let norm = l2_norm(&ax);
                    if norm == 0.0 {
                        Err(StepSignal::DegenerateIterate)
                    } else {
                        let mut g = a.matvec_t(&ax)?;
                        g.iter_mut().for_each(|e| *e /= norm);
                        Ok(g)
                    }
                }
                VarianceNorm::L1 => {
                    let signs: Vec<f64> = ax.iter().map(|&e| sgn(e)).collect();
                    Ok(a.matvec_t(&signs)?)
                }
            }
        }
        // F_X(y) = Σ[(a_iᵀy)² − γ]₊ or ‖V_γ(Aᵀy)‖₂.
        Usage::Penalty { gamma } => {
            let aty = a.matvec_t(z)?;
            match form.sparsity {
                SparsityNorm::L0 => {
                    let kept = hard_threshold_penalty(&aty, gamma);
                    let mut g = a.matvec(&kept)?;
                    g.iter_mut().for_each(|e| *e *= 2.0);
                    Ok(g)
                }
                // The 1/‖V_γ(Aᵀy)‖₂ factor does not change the maximizer over Y.
                SparsityNorm::L1 => Ok(a.matvec(&soft_threshold(&aty, gamma))?),
            }
        }
    })
}

/// One GPower iteration `z ← argmax_{Ω} ⟨Ψ'(z), ·⟩`.
///
/// The outer error is a dimension problem; the inner one signals a zero
/// gradient or `Az = 0`, where the solver would stop as well.
pub fn gpower_step(form: &Formulation, a: &DataMatrix, z: &[f64]) -> Result<std::result::Result<Vec<f64>, StepSignal>> {
    form.validate(a.p())?;
    Ok(gradient(form, a, z)?.and_then(|g| linear_maximizer(form, &g)))
}

/// `z, gpower_step(z), …`, `iterations + 1` points at most.
pub fn gpower_trace(form: &Formulation, a: &DataMatrix, z0: Vec<f64>, iterations: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![z0];
    for _ in 0..iterations {
        match gpower_step(form, a, out.last().unwrap())? {
            Ok(z) => out.push(z),
            Err(_) => break,
        }
    }
    Ok(out)
}

/// Starting point of the penalized GPower stream for AM started at `x0`:
/// `y⁰ = argmax_Y F(x0, ·)`.
pub fn gpower_y0(form: &Formulation, a: &DataMatrix, x0: &[f64]) -> Result<Option<Vec<f64>>> {
    let u = a.matvec(x0)?;
    Ok(match form.variance {
        VarianceNorm::L2 => unit(u).ok(),
        VarianceNorm::L1 => Some(u.iter().map(|&e| sgn(e)).collect()),
    })
}

fn gram(a: &DataMatrix) -> DMatrix<f64> {
    let dense = DMatrix::from_column_slice(a.n(), a.p(), &a.to_dense_values());
    dense.transpose() * dense
}

/// `λ_max(G_SS)` for the principal submatrix on `support`.
fn sub_gram_lambda_max(g: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    let sub = DMatrix::from_fn(k, k, |i, j| g[(support[i], support[j])]);
    SymmetricEigen::new(sub)
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
}

/// Every subset of `0..p` as a bitmask, optionally with at most `max_size` bits.
fn subsets(p: usize, max_size: usize) -> impl ParallelIterator<Item = u32> {
    (1u32..(1u32 << p))
        .into_par_iter()
        .filter(move |m| m.count_ones() as usize <= max_size)
}

fn mask_to_support(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign vectors `y ∈ {±1}ⁿ` with `y_0 = +1` (the objectives are even in `y`),
/// tagged with their enumeration index.
fn half_sign_vectors(n: usize) -> impl ParallelIterator<Item = (usize, Vec<f64>)> {
    (0u32..(1u32 << (n - 1))).into_par_iter().map(move |m| {
        let mut y = vec![1.0; n];
        for (i, e) in y.iter_mut().enumerate().skip(1) {
            if m & (1 << (i - 1)) != 0 {
                *e = -1.0;
            }
        }
        (m as usize, y)
    })
}

/// Max-reduce with the first-enumerated candidate winning ties.
fn best_of(a: (f64, usize, Vec<usize>), b: (f64, usize, Vec<usize>)) -> (f64, usize, Vec<usize>) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn too_large(what: &str, limit: usize, got: usize) -> SpcaError {
    SpcaError::TooLarge(format!("{what} = {got} exceeds enumeration limit {limit}"))
}

/// `max ‖Ax‖` over `‖x‖₂ ≤ 1, ‖x‖₀ ≤ s` by exhaustive enumeration.
///
/// `L2` variance: all supports of size at most `s`, each scored by the top
/// eigenvalue of its Gram block. `L1` variance: all sign vectors `y`, each
/// scored by the `s` largest `(Aᵀy)_i²`, which is `max_{|S| ≤ s} ‖A_Sᵀy‖₂`.
pub fn brute_force_l0_constrained(a: &DataMatrix, s: usize, variance: VarianceNorm) -> Result<OracleResult> {
    let (n, p) = (a.n(), a.p());
    if p > MAX_ENUM_P_CONSTRAINED {
        return Err(too_large("p", MAX_ENUM_P_CONSTRAINED, p));
    }
    if s == 0 || s > p {
        return Err(SpcaError::InvalidParameter(format!("s must be in [1, {p}], got {s}")));
    }
    match variance {
        VarianceNorm::L2 => {
            let g = gram(a);
            let (lambda, _, support) = subsets(p, s)
                .map(|m| {
                    let support = mask_to_support(m);
                    (sub_gram_lambda_max(&g, &support), m as usize, support)
                })
                .reduce(|| (f64::NEG_INFINITY, usize::MAX, Vec::new()), best_of);
            Ok(OracleResult {
                optimum: lambda.max(0.0).sqrt(),
                argmax_support: support,
                certified: true,
                certificate: format!("all supports of size <= {s} out of {p}, Gram eigenvalues"),
            })
        }
        VarianceNorm::L1 => {
            if n > MAX_ENUM_N {
                return Err(too_large("n", MAX_ENUM_N, n));
            }
            let (sq, _, support) = half_sign_vectors(n)
                .map(|(idx, y)| {
                    let w = a.matvec_t(&y).expect("dimensions checked");
                    let top = hard_threshold_top_s(&w, s).expect("s <= p");
                    let value: f64 = top.iter().map(|e| e * e).sum();
                    (value, idx, support_of(&top))
                })
                .reduce(|| (f64::NEG_INFINITY, usize::MAX, Vec::new()), best_of);
            Ok(OracleResult {
                optimum: sq.sqrt(),
                argmax_support: support,
                certified: true,
                certificate: format!("all {} sign vectors, top-{s} coordinates of A^T y", 1u64 << (n - 1)),
            })
        }
    }
}

/// Global optimum of a penalized formulation on a small instance.
///
/// * `L2`/`L0`: all supports `S`, `σ_max(A_S)² − γ|S|`, and the empty support.
/// * `L1`/`L0`: all sign vectors, `Σ_i [(Aᵀy)_i² − γ]₊`.
/// * `L1`/`L1`: all sign vectors, `‖V_γ(Aᵀy)‖₂`.
/// * `L2`/`L1`: not enumerable; deterministic sphere sampling followed by
///   fixed-point polishing of `y ← A V_γ(Aᵀy)`, reported as best-found.
pub fn brute_force_penalized(a: &DataMatrix, form: &Formulation) -> Result<OracleResult> {
    let gamma = match form.usage {
        Usage::Penalty { gamma } => gamma,
        Usage::Constraint { .. } => {
            return Err(SpcaError::InvalidParameter(
                "brute_force_penalized needs a penalized formulation".into(),
            ))
        }
    };
    form.validate(a.p())?;
    let (n, p) = (a.n(), a.p());
    if p > MAX_ENUM_PENALIZED {
        return Err(too_large("p", MAX_ENUM_PENALIZED, p));
    }
    if form.variance == VarianceNorm::L1 && n > MAX_ENUM_PENALIZED {
        return Err(too_large("n", MAX_ENUM_PENALIZED, n));
    }
    let empty = (0.0, usize::MAX, Vec::new());
    match (form.variance, form.sparsity) {
        (VarianceNorm::L2, SparsityNorm::L0) => {
            let g = gram(a);
            let best = subsets(p, p)
                .map(|m| {
                    let support = mask_to_support(m);
                    let value = sub_gram_lambda_max(&g, &support) - gamma * support.len() as f64;
                    (value, m as usize, support)
                })
                .reduce(|| empty.clone(), best_of);
            Ok(OracleResult {
                optimum: best.0,
                argmax_support: best.2,
                certified: true,
                certificate: format!("all {} supports, Gram eigenvalues", 1u64 << p),
            })
        }
        (VarianceNorm::L1, sparsity) => {
            let best = half_sign_vectors(n)
                .map(|(idx, y)| {
                    let w = a.matvec_t(&y).expect("dimensions checked");
                    let (value, kept) = match sparsity {
                        SparsityNorm::L0 => {
                            let kept = hard_threshold_penalty(&w, gamma);
                            let value = kept.iter().map(|e| e * e - gamma).filter(|e| *e > 0.0).sum();
                            (value, kept)
                        }
                        SparsityNorm::L1 => {
                            let kept = soft_threshold(&w, gamma);
                            (l2_norm(&kept), kept)
                        }
                    };
                    (value, idx, support_of(&kept))
                })
                .reduce(|| empty.clone(), best_of);
            Ok(OracleResult {
                optimum: best.0,
                argmax_support: best.2,
                certified: true,
                certificate: format!("all {} sign vectors", 1u64 << (n - 1)),
            })
        }
        (VarianceNorm::L2, SparsityNorm::L1) => Ok(best_found_l2_l1(a, gamma)),
    }
}

const SPHERE_SAMPLES: usize = 20_000;
const POLISHED: usize = 64;
const POLISH_ITERATIONS: usize = 2_000;

/// `max_{‖y‖₂ ≤ 1} ‖V_γ(Aᵀy)‖₂` by sampling and polishing.
fn best_found_l2_l1(a: &DataMatrix, gamma: f64) -> OracleResult {
    let n = a.n();
    let value = |y: &[f64]| l2_norm(&soft_threshold(&a.matvec_t(y).expect("dims"), gamma));
    let mut scored: Vec<(f64, usize)> = (0..SPHERE_SAMPLES)
        .into_par_iter()
        .map(|i| (value(&generate_start(n, 0x5eed, i, StartScheme::GaussianSphere)), i))
        .collect();
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let polished = scored
        .iter()
        .take(POLISHED)
        .map(|&(_, i)| {
            let mut y = generate_start(n, 0x5eed, i, StartScheme::GaussianSphere);
            let mut best = value(&y);
            for _ in 0..POLISH_ITERATIONS {
                let next = match unit(a.matvec(&soft_threshold(&a.matvec_t(&y).unwrap(), gamma)).unwrap()) {
                    Ok(next) => next,
                    Err(_) => break,
                };
                let v = value(&next);
                y = next;
                if v <= best * (1.0 + 1e-15) {
                    best = best.max(v);
                    break;
                }
                best = v;
            }
            (best, i, support_of(&soft_threshold(&a.matvec_t(&y).unwrap(), gamma)))
        })
        .fold((0.0, usize::MAX, Vec::new()), best_of);
    OracleResult {
        optimum: polished.0,
        argmax_support: polished.2,
        certified: false,
        certificate: format!(
            "best found: {SPHERE_SAMPLES} sphere samples, top {POLISHED} polished by fixed-point iteration"
        ),
    }
}

/// `σ_max(A)` by power iteration on `AᵀA`, stopped when the residual
/// `‖AᵀAx − ρx‖₂` falls below `tol·ρ` (so `ρ` is within `tol` relative of an
/// eigenvalue). Zero matrix gives `0`.
pub fn power_method_sigma_max(a: &DataMatrix, tol: f64) -> f64 {
    const MAX_ITERATIONS: usize = 1_000_000;
    let mut x = generate_start(a.p(), 0x9e37_79b9, 0, StartScheme::GaussianSphere);
    let mut rho = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let ax = a.matvec(&x).expect("dims");
        let w = a.matvec_t(&ax).expect("dims");
        rho = ax.iter().map(|e| e * e).sum::<f64>();
        if rho == 0.0 {
            return 0.0;
        }
        let residual = w
            .iter()
            .zip(&x)
            .map(|(wi, xi)| (wi - rho * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * rho {
            break;
        }
        let norm = l2_norm(&w);
        x = w.into_iter().map(|e| e / norm).collect();
    }
    rho.sqrt()
}
