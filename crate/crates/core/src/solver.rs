//! The alternating-maximization loop, for one start or a block of starts.
//!
//! One sweep is `u = A x`, `y = y_step(u)`, `v = Aᵀ y`, `x = x_step(v)`.
//! After each sweep the merit `F(x⁺, y) = vᵀx⁺` (penalty included) is
//! appended to the history, and the run stops once
//! `F(x^{k+1}, y^k) / F(x^k, y^{k-1}) ≤ 1 + tol` or after `max_iterations`
//! sweeps. When the previous merit is not safely positive (`≤ 1e-12`) the
//! ratio is replaced by `F_new − F_old ≤ tol·max(1, |F_new|)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};
use crate::formulations::{objective, x_step, y_step, Formulation, StepSignal};
use crate::matrix::{DataMatrix, VectorBatch};
use crate::operators::l2_norm;

/// Denominator below which the ratio stopping test is not used.
const RATIO_FLOOR: f64 = 1e-12;
/// Allowed distance of a starting point's norm from 1.
const START_NORM_TOL: f64 = 1e-8;
/// Blocks narrower than this apply the step operators on the calling thread.
const PAR_COLUMNS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative merit-improvement threshold.
    pub tol: f64,
    /// Seed for starting-point generation.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 200,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(SpcaError::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SpcaError::InvalidParameter(format!(
                "tol must be a positive number, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    #[default]
    Running,
    Converged,
    MaxIterations,
    /// `Ax = 0` under L2 variance, or nothing survived a constraint step.
    Degenerate,
    /// A penalty step thresholded every coordinate away; `x = 0` is optimal.
    ZeroLoading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartScheme {
    /// Standard normal vector scaled to unit length.
    #[default]
    GaussianSphere,
    /// The basis vector `e_{index mod p}`.
    Column,
}

/// Starting point number `index` of the sequence determined by `seed`.
pub fn generate_start(p: usize, seed: u64, index: usize, scheme: StartScheme) -> Vec<f64> {
    assert!(p >= 1, "dimension must be positive");
    match scheme {
        StartScheme::Column => {
            let mut x = vec![0.0; p];
            x[index % p] = 1.0;
            x
        }
        StartScheme::GaussianSphere => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            loop {
                let mut x: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = l2_norm(&x);
                if norm > 0.0 {
                    x.iter_mut().for_each(|v| *v /= norm);
                    return x;
                }
            }
        }
    }
}

/// The iterates of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    x: Vec<f64>,
    y: Vec<f64>,
    k: usize,
    merit_history: Vec<f64>,
    status: RunStatus,
}

impl SolverState {
    pub fn new(x0: Vec<f64>) -> Self {
        SolverState {
            x: x0,
            y: Vec::new(),
            k: 0,
            merit_history: Vec::new(),
            status: RunStatus::Running,
        }
    }

    /// Current loading iterate `x^{(k)}`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Latest dummy iterate `y^{(k-1)}` (empty before the first sweep).
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn iterations(&self) -> usize {
        self.k
    }

    pub fn merit_history(&self) -> &[f64] {
        &self.merit_history
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn is_running(&self) -> bool {
        self.status == RunStatus::Running
    }

    /// First half-sweep: `y ← argmax_Y F(x, ·)` from `u = A x`.
    pub(crate) fn apply_y_step(&mut self, form: &Formulation, u: &[f64]) {
        match y_step(form, u) {
            Ok(y) => self.y = y,
            Err(_) => self.status = RunStatus::Degenerate,
        }
    }

    /// Second half-sweep: `x ← argmax_X F(·, y)` from `v = Aᵀ y`, then the stopping test.
    pub(crate) fn apply_x_step(&mut self, form: &Formulation, v: &[f64], cfg: &SolverConfig) {
        let x_new = match x_step(form, v) {
            Ok(x) => x,
            Err(StepSignal::ZeroLoading) if !form.is_constrained() => {
                self.k += 1;
                self.x = vec![0.0; v.len()];
                self.status = RunStatus::ZeroLoading;
                return;
            }
            Err(_) => {
                self.status = RunStatus::Degenerate;
                return;
            }
        };
        let merit = form.merit_from_aty(v, &x_new);
        let previous = self.merit_history.last().copied();
        self.merit_history.push(merit);
        self.x = x_new;
        self.k += 1;
        if previous.is_some_and(|prev| stop_test(prev, merit, cfg.tol)) {
            self.status = RunStatus::Converged;
        } else if self.k >= cfg.max_iterations {
            self.status = RunStatus::MaxIterations;
        }
    }

    /// One full sweep with single matrix-vector products.
    pub fn step(&mut self, form: &Formulation, a: &DataMatrix, cfg: &SolverConfig) -> Result<()> {
        if !self.is_running() {
            return Ok(());
        }
        let u = a.matvec(&self.x)?;
        self.apply_y_step(form, &u);
        if !self.is_running() {
            return Ok(());
        }
        let v = a.matvec_t(&self.y)?;
        self.apply_x_step(form, &v, cfg);
        Ok(())
    }

    /// Final loading and its objective value.
    pub fn into_result(self, form: &Formulation, a: &DataMatrix, start_index: usize) -> Result<RunResult> {
        // Before the first x-step the iterate is only a direction, possibly outside X.
        let loading = if self.k == 0 { vec![0.0; a.p()] } else { self.x };
        let objective = objective(form, a, &loading)?;
        Ok(RunResult {
            loading,
            objective,
            iterations: self.k,
            status: self.status,
            start_index,
            merit_history: self.merit_history,
        })
    }
}

/// `true` once the merit has stopped improving by more than `tol`.
pub fn stop_test(previous: f64, current: f64, tol: f64) -> bool {
    if previous > RATIO_FLOOR {
        current / previous <= 1.0 + tol
    } else {
        current - previous <= tol * current.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Unit vector, or zero under `ZeroLoading` (and `Degenerate` before any x-step).
    pub loading: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub status: RunStatus,
    pub start_index: usize,
    /// `F(x^{(k+1)}, y^{(k)})` after each sweep.
    pub merit_history: Vec<f64>,
}

fn check_inputs(form: &Formulation, a: &DataMatrix, cfg: &SolverConfig) -> Result<()> {
    form.validate(a.p())?;
    cfg.validate()
}

fn check_start(a: &DataMatrix, x0: &[f64]) -> Result<()> {
    if x0.len() != a.p() {
        return Err(SpcaError::DimensionMismatch {
            expected: a.p(),
            found: x0.len(),
        });
    }
    let norm = l2_norm(x0);
    if (norm - 1.0).abs() > START_NORM_TOL {
        return Err(SpcaError::InvalidParameter(format!(
            "starting point must have unit norm, got {norm}"
        )));
    }
    Ok(())
}

/// Runs AM from `x0` until the stopping rule or the iteration cap.
pub fn am_solve(form: &Formulation, a: &DataMatrix, x0: &[f64], cfg: &SolverConfig) -> Result<RunResult> {
    am_solve_indexed(form, a, x0, cfg, 0)
}

pub(crate) fn am_solve_indexed(
    form: &Formulation,
    a: &DataMatrix,
    x0: &[f64],
    cfg: &SolverConfig,
    start_index: usize,
) -> Result<RunResult> {
    check_inputs(form, a, cfg)?;
    check_start(a, x0)?;
    let mut state = SolverState::new(x0.to_vec());
    while state.is_running() {
        state.step(form, a, cfg)?;
    }
    state.into_result(form, a, start_index)
}

/// Iterates of an AM run that ignores the stopping rule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateTrace {
    /// `x^{(1)}, x^{(2)}, …`
    pub xs: Vec<Vec<f64>>,
    /// `y^{(0)}, y^{(1)}, …`, with `y^{(k)} = argmax_Y F(x^{(k)}, ·)`.
    pub ys: Vec<Vec<f64>>,
    /// Status when the trace ended early, `Running` otherwise.
    pub status: RunStatus,
}

/// Runs exactly `sweeps` AM iterations from `x0` (fewer if a step degenerates)
/// and records every iterate.
pub fn iterate_trace(form: &Formulation, a: &DataMatrix, x0: &[f64], sweeps: usize) -> Result<IterateTrace> {
    form.validate(a.p())?;
    check_start(a, x0)?;
    let cfg = SolverConfig {
        max_iterations: usize::MAX,
        ..SolverConfig::default()
    };
    let mut state = SolverState::new(x0.to_vec());
    let mut trace = IterateTrace::default();
    for _ in 0..sweeps {
        state.step(form, a, &cfg)?;
        match state.status {
            RunStatus::Running | RunStatus::Converged => {
                state.status = RunStatus::Running;
                trace.ys.push(state.y.clone());
                trace.xs.push(state.x.clone());
            }
            RunStatus::ZeroLoading => {
                trace.ys.push(state.y.clone());
                trace.status = state.status;
                break;
            }
            other => {
                trace.status = other;
                break;
            }
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    /// One result per input column, in column order.
    pub results: Vec<RunResult>,
    /// `true` where the column met the stopping rule.
    pub converged: Vec<bool>,
    /// Number of block sweeps executed.
    pub sweeps: usize,
}

/// Runs one AM instance per column of `x0`, advancing all of them per sweep
/// with block products. Finished columns stay in the block, frozen, until
/// the last one finishes.
pub fn am_solve_batch(
    form: &Formulation,
    a: &DataMatrix,
    x0: &VectorBatch,
    cfg: &SolverConfig,
) -> Result<BatchOutcome> {
    check_inputs(form, a, cfg)?;
    let mut engine = SweepEngine::new(form, a, cfg, x0.width());
    for (j, col) in x0.columns().enumerate() {
        check_start(a, col)?;
        engine.install(j, j, col.to_vec());
    }
    while engine.any_running() {
        engine.sweep()?;
    }
    let sweeps = engine.sweeps;
    let results = engine.drain_all()?;
    let converged = results.iter().map(|r| r.status == RunStatus::Converged).collect();
    Ok(BatchOutcome {
        results,
        converged,
        sweeps,
    })
}

pub(crate) struct Slot {
    pub start_index: usize,
    pub state: SolverState,
}

/// Fixed set of slots advanced together; each occupied slot is one column
/// of the product block.
pub(crate) struct SweepEngine<'a> {
    form: &'a Formulation,
    a: &'a DataMatrix,
    cfg: &'a SolverConfig,
    slots: Vec<Option<Slot>>,
    pub sweeps: usize,
    /// Sum of block widths over all sweeps.
    pub column_iterations: usize,
}

impl<'a> SweepEngine<'a> {
    pub fn new(form: &'a Formulation, a: &'a DataMatrix, cfg: &'a SolverConfig, width: usize) -> Self {
        SweepEngine {
            form,
            a,
            cfg,
            slots: (0..width).map(|_| None).collect(),
            sweeps: 0,
            column_iterations: 0,
        }
    }

    pub fn install(&mut self, slot: usize, start_index: usize, x0: Vec<f64>) {
        self.slots[slot] = Some(Slot {
            start_index,
            state: SolverState::new(x0),
        });
    }

    pub fn any_running(&self) -> bool {
        self.slots.iter().flatten().any(|s| s.state.is_running())
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Option::is_none)
    }

    /// Indices of occupied slots whose run has finished.
    pub fn finished_slots(&self) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Some(slot) if !slot.state.is_running() => Some(i),
                _ => None,
            })
            .collect()
    }

    /// Removes the run in `slot` and scores it.
    pub fn take(&mut self, slot: usize) -> Result<RunResult> {
        let s = self.slots[slot].take().expect("slot is occupied");
        s.state.into_result(self.form, self.a, s.start_index)
    }

    pub fn drain_all(&mut self) -> Result<Vec<RunResult>> {
        let occupied: Vec<usize> = (0..self.slots.len()).filter(|&i| self.slots[i].is_some()).collect();
        occupied.into_iter().map(|i| self.take(i)).collect()
    }

    /// Advances every running slot by one iteration. All occupied slots,
    /// finished or not, take part in the block products.
    pub fn sweep(&mut self) -> Result<()> {
        let occupied: Vec<usize> = (0..self.slots.len()).filter(|&i| self.slots[i].is_some()).collect();
        if occupied.is_empty() {
            return Ok(());
        }
        let width = occupied.len();
        let (form, cfg) = (self.form, self.cfg);

        let xs: Vec<&[f64]> = occupied
            .iter()
            .map(|&i| self.slots[i].as_ref().unwrap().state.x())
            .collect();
        let u = self.a.mult(&VectorBatch::from_columns(&xs)?)?;

        let mut block: Vec<&mut Slot> = self.slots.iter_mut().flatten().collect();
        for_each_column(&mut block, |j, slot| {
            if slot.state.is_running() {
                slot.state.apply_y_step(form, u.column(j));
            }
        });

        let n = self.a.n();
        let zeros = vec![0.0; n];
        let ys: Vec<&[f64]> = block
            .iter()
            .map(|s| {
                let y = s.state.y();
                if y.len() == n {
                    y
                } else {
                    &zeros[..]
                }
            })
            .collect();
        let v = self.a.mult_t(&VectorBatch::from_columns(&ys)?)?;

        for_each_column(&mut block, |j, slot| {
            if slot.state.is_running() {
                slot.state.apply_x_step(form, v.column(j), cfg);
            }
        });

        self.sweeps += 1;
        self.column_iterations += width;
        Ok(())
    }
}

fn for_each_column<F>(block: &mut [&mut Slot], f: F)
where
    F: Fn(usize, &mut Slot) + Sync + Send,
{
    if block.len() < PAR_COLUMNS {
        for (j, slot) in block.iter_mut().enumerate() {
            f(j, slot);
        }
    } else {
        block.par_iter_mut().enumerate().for_each(|(j, slot)| f(j, slot));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{SparsityNorm, Usage, VarianceNorm};
    use crate::operators::{l0_norm, l1_norm};
    use rand::Rng;

    fn random_matrix(seed: u64, n: usize, p: usize) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
        DataMatrix::from_col_major(n, p, v).unwrap()
    }

    #[test]
    fn column_start() {
        assert_eq!(generate_start(3, 1, 0, StartScheme::Column), vec![1.0, 0.0, 0.0]);
        assert_eq!(generate_start(3, 1, 4, StartScheme::Column), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn gaussian_start_is_deterministic_unit() {
        let a = generate_start(17, 5, 3, StartScheme::GaussianSphere);
        let b = generate_start(17, 5, 3, StartScheme::GaussianSphere);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!((l2_norm(&a) - 1.0).abs() <= 1e-12);
        assert_ne!(a, generate_start(17, 5, 4, StartScheme::GaussianSphere));
        assert_ne!(a, generate_start(17, 6, 3, StartScheme::GaussianSphere));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig {
            max_iterations: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = DataMatrix::diag(&[3.0, 1.0]);
        let form = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, 1);
        let r = am_solve(&form, &a, &[0.0, 1.0], &SolverConfig::default()).unwrap();
        // From e_2 the support {1} is a fixed point; enumerate both supports instead.
        let best = [vec![1.0, 0.0], vec![0.0, 1.0]]
            .iter()
            .map(|x0| am_solve(&form, &a, x0, &SolverConfig::default()).unwrap().objective)
            .fold(0.0, f64::max);
        assert_eq!(best, 3.0);
        assert!(r.objective == 1.0 || r.objective == 3.0);
        let from_mix = am_solve(&form, &a, &[0.6, 0.8], &SolverConfig::default()).unwrap();
        assert_eq!(
            from_mix.loading.iter().map(|v| v.abs()).collect::<Vec<_>>(),
            vec![1.0, 0.0]
        );
        assert_eq!(from_mix.objective, 3.0);
        assert_eq!(from_mix.status, RunStatus::Converged);
    }

    #[test]
    fn identity_unconstrained() {
        let p = 5;
        let a = DataMatrix::identity(p);
        let form = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, p);
        for i in 0..4 {
            let x0 = generate_start(p, 9, i, StartScheme::GaussianSphere);
            let r = am_solve(&form, &a, &x0, &SolverConfig::default()).unwrap();
            assert!((r.objective - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn large_gamma_zero_loading() {
        let a = random_matrix(2, 6, 4).with_column_norms();
        let max_sq = a.column_norms().unwrap().iter().fold(0.0f64, |m, c| m.max(c * c));
        let form = Formulation::penalized(VarianceNorm::L2, SparsityNorm::L0, max_sq * 1.01);
        let x0 = generate_start(4, 0, 0, StartScheme::GaussianSphere);
        let r = am_solve(&form, &a, &x0, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, RunStatus::ZeroLoading);
        assert_eq!(r.objective, 0.0);
        assert!(r.loading.iter().all(|v| *v == 0.0));
        // Cross-check: U_γ(Aᵀy) is zero for the y the run computed.
        let y = crate::formulations::y_step(&form, &a.matvec(&x0).unwrap()).unwrap();
        let v = a.matvec_t(&y).unwrap();
        assert!(crate::operators::hard_threshold_penalty(&v, max_sq * 1.01)
            .iter()
            .all(|e| *e == 0.0));
    }

    #[test]
    fn degenerate_start() {
        // Second column of A is zero, so A e_2 = 0.
        let a = DataMatrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        let form = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, 1);
        let r = am_solve(&form, &a, &[0.0, 1.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.status, RunStatus::Degenerate);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn rejects_bad_start() {
        let a = DataMatrix::identity(3);
        let form = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, 1);
        assert!(am_solve(&form, &a, &[1.0, 1.0, 0.0], &SolverConfig::default()).is_err());
        assert!(am_solve(&form, &a, &[1.0, 0.0], &SolverConfig::default()).is_err());
        let bad = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, 0);
        assert!(am_solve(&bad, &a, &[1.0, 0.0, 0.0], &SolverConfig::default()).is_err());
    }

    #[test]
    fn stop_test_guard() {
        assert!(stop_test(10.0, 10.0 + 1e-6, 1e-6));
        assert!(!stop_test(10.0, 10.1, 1e-6));
        // Nonpositive previous merit falls back to the absolute test.
        assert!(!stop_test(-1.0, -0.5, 1e-6));
        assert!(stop_test(-1.0, -1.0, 1e-6));
        assert!(stop_test(0.0, 1e-7, 1e-6));
    }

    #[test]
    fn runs_are_monotone_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..48 {
            let (n, p) = (rng.gen_range(3..15), rng.gen_range(3..15));
            let a = random_matrix(trial, n, p);
            let row = 1 + (trial as usize % 8);
            let param = if row <= 4 {
                rng.gen_range(1..=p) as f64
            } else {
                rng.gen_range(0.0..0.5)
            };
            let form = Formulation::from_index(row, param).unwrap();
            let x0 = generate_start(p, trial, 0, StartScheme::GaussianSphere);
            let r = am_solve(&form, &a, &x0, &SolverConfig::default()).unwrap();
            for w in r.merit_history.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "{form}: {:?}", r.merit_history);
            }
            if r.status != RunStatus::ZeroLoading {
                assert!((l2_norm(&r.loading) - 1.0).abs() <= 1e-10);
            }
            match form.usage {
                Usage::Constraint { s } if form.sparsity == SparsityNorm::L0 => {
                    assert!(l0_norm(&r.loading) <= s)
                }
                Usage::Constraint { s } => assert!(l1_norm(&r.loading) <= (s as f64).sqrt() + 1e-8),
                _ => {}
            }
            assert_eq!(r.objective, objective(&form, &a, &r.loading).unwrap());
        }
    }

    #[test]
    fn fixed_point_rerun() {
        let a = random_matrix(5, 12, 20);
        let cfg = SolverConfig::default();
        for form in Formulation::all(4, 0.2) {
            let x0 = generate_start(20, 1, 0, StartScheme::GaussianSphere);
            let r = am_solve(&form, &a, &x0, &cfg).unwrap();
            if r.status != RunStatus::Converged {
                continue;
            }
            let again = am_solve(&form, &a, &r.loading, &cfg).unwrap();
            assert!(
                (again.objective - r.objective).abs() <= cfg.tol * r.objective.abs() * 10.0 + 1e-12,
                "{form}: {} vs {}",
                again.objective,
                r.objective
            );
        }
    }

    #[test]
    fn batch_of_one_and_identical_starts() {
        let a = random_matrix(3, 10, 14);
        let cfg = SolverConfig::default();
        let form = Formulation::constrained(VarianceNorm::L1, SparsityNorm::L1, 3);
        let x0 = generate_start(14, 4, 0, StartScheme::GaussianSphere);
        let single = am_solve(&form, &a, &x0, &cfg).unwrap();
        let batch = am_solve_batch(&form, &a, &VectorBatch::from_column(x0.clone()), &cfg).unwrap();
        assert_eq!(batch.results[0], single);

        let eight = VectorBatch::from_columns(&vec![x0; 8]).unwrap();
        let out = am_solve_batch(&form, &a, &eight, &cfg).unwrap();
        for (j, r) in out.results.iter().enumerate() {
            assert_eq!(r.start_index, j);
            assert_eq!(r.loading, single.loading);
            assert_eq!(r.iterations, single.iterations);
        }
        assert_eq!(out.sweeps, single.iterations);
    }

    #[test]
    fn batch_matches_sequential() {
        let a = random_matrix(8, 20, 30);
        let cfg = SolverConfig::default();
        for form in Formulation::all(5, 0.3) {
            let starts: Vec<Vec<f64>> = (0..12)
                .map(|i| generate_start(30, 2, i, StartScheme::GaussianSphere))
                .collect();
            let out = am_solve_batch(&form, &a, &VectorBatch::from_columns(&starts).unwrap(), &cfg).unwrap();
            let max_iters = out.results.iter().map(|r| r.iterations).max().unwrap();
            assert_eq!(out.sweeps, max_iters);
            for (j, x0) in starts.iter().enumerate() {
                let mut seq = am_solve(&form, &a, x0, &cfg).unwrap();
                seq.start_index = j;
                assert_eq!(out.results[j], seq);
                assert_eq!(out.converged[j], seq.status == RunStatus::Converged);
            }
        }
    }
}
