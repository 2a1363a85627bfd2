//! Running AM from many starting points.
//!
//! Four schedules, all driven by [`SweepEngine`](crate::solver):
//!
//! * `Nai`: one run at a time.
//! * `Sfa`: all `l` runs in one block, which keeps sweeping until the last
//!   run finishes.
//! * `Bat`: consecutive batches of `r` runs, each swept to completion.
//! * `Otf`: `r` slots; as soon as a run finishes, the next unstarted start
//!   takes its slot.
//!
//! Every run sees the same starting point and the same per-column arithmetic
//! under every schedule, so the schedules differ only in sweep counts and time.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};
use crate::formulations::Formulation;
use crate::matrix::DataMatrix;
use crate::solver::{generate_start, RunResult, SolverConfig, StartScheme, SweepEngine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Nai,
    Sfa,
    Bat,
    Otf,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Nai, Strategy::Sfa, Strategy::Bat, Strategy::Otf];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Nai => "nai",
            Strategy::Sfa => "sfa",
            Strategy::Bat => "bat",
            Strategy::Otf => "otf",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = SpcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nai" => Ok(Strategy::Nai),
            "sfa" => Ok(Strategy::Sfa),
            "bat" => Ok(Strategy::Bat),
            "otf" => Ok(Strategy::Otf),
            other => Err(SpcaError::InvalidParameter(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiStartPlan {
    /// Number of starting points.
    pub l: usize,
    pub strategy: Strategy,
    /// Block width. Ignored (forced) for `Nai` and `Sfa`.
    pub r: usize,
    pub seed: u64,
    #[serde(default)]
    pub scheme: StartScheme,
}

impl MultiStartPlan {
    pub fn new(l: usize, strategy: Strategy, r: usize, seed: u64) -> Self {
        MultiStartPlan {
            l,
            strategy,
            r,
            seed,
            scheme: StartScheme::GaussianSphere,
        }
    }

    pub fn with_scheme(mut self, scheme: StartScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Block width actually used.
    pub fn width(&self) -> usize {
        match self.strategy {
            Strategy::Nai => 1,
            Strategy::Sfa => self.l,
            Strategy::Bat | Strategy::Otf => self.r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(SpcaError::InvalidParameter("number of starts must be >= 1".into()));
        }
        if matches!(self.strategy, Strategy::Bat | Strategy::Otf) && !(1..=self.l).contains(&self.r) {
            return Err(SpcaError::InvalidParameter(format!(
                "batch width must be in [1, {}], got {}",
                self.l, self.r
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStartReport {
    pub strategy: Strategy,
    pub width: usize,
    pub best: RunResult,
    /// One entry per start, ordered by start index.
    pub all_results: Vec<RunResult>,
    /// Block product sweeps (`A X` then `Aᵀ Y`) executed.
    pub total_sweeps: usize,
    /// Sum of block widths over all sweeps.
    pub column_iterations: usize,
    /// Seconds, monotonic clock.
    pub wall_time: f64,
    pub per_start_iterations: Vec<usize>,
}

impl MultiStartReport {
    pub fn objectives(&self) -> Vec<f64> {
        self.all_results.iter().map(|r| r.objective).collect()
    }
}

/// Runs `plan.l` starts of AM on `form` under the plan's schedule.
pub fn run_multistart(
    form: &Formulation,
    a: &DataMatrix,
    plan: &MultiStartPlan,
    cfg: &SolverConfig,
) -> Result<MultiStartReport> {
    plan.validate()?;
    form.validate(a.p())?;
    cfg.validate()?;
    let started = Instant::now();
    let width = plan.width();
    let start = |i: usize| generate_start(a.p(), plan.seed, i, plan.scheme);
    let mut engine = SweepEngine::new(form, a, cfg, width);
    let mut results: Vec<Option<RunResult>> = vec![None; plan.l];

    match plan.strategy {
        Strategy::Nai | Strategy::Sfa | Strategy::Bat => {
            for batch_start in (0..plan.l).step_by(width) {
                let batch_end = (batch_start + width).min(plan.l);
                for (slot, i) in (batch_start..batch_end).enumerate() {
                    engine.install(slot, i, start(i));
                }
                while engine.any_running() {
                    engine.sweep()?;
                }
                for r in engine.drain_all()? {
                    let i = r.start_index;
                    results[i] = Some(r);
                }
            }
        }
        Strategy::Otf => {
            let mut next = 0;
            while next < width {
                engine.install(next, next, start(next));
                next += 1;
            }
            while !engine.is_empty() {
                engine.sweep()?;
                for slot in engine.finished_slots() {
                    let r = engine.take(slot)?;
                    let i = r.start_index;
                    results[i] = Some(r);
                    if next < plan.l {
                        engine.install(slot, next, start(next));
                        next += 1;
                    }
                }
            }
        }
    }

    let all_results: Vec<RunResult> = results
        .into_iter()
        .map(|r| r.expect("every start produces a result"))
        .collect();
    let best = best_result(&all_results).clone();
    let per_start_iterations = all_results.iter().map(|r| r.iterations).collect();
    Ok(MultiStartReport {
        strategy: plan.strategy,
        width,
        best,
        all_results,
        total_sweeps: engine.sweeps,
        column_iterations: engine.column_iterations,
        wall_time: started.elapsed().as_secs_f64(),
        per_start_iterations,
    })
}

/// Highest objective; the lowest start index wins ties.
fn best_result(results: &[RunResult]) -> &RunResult {
    let mut best = &results[0];
    for r in &results[1..] {
        if r.objective > best.objective {
            best = r;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub strategy: Strategy,
    pub width: usize,
    pub starts: usize,
    pub mean_iterations: f64,
    pub total_sweeps: usize,
    pub column_iterations: usize,
    pub wall_time: f64,
    /// Baseline wall time divided by this report's wall time.
    pub speedup: f64,
    /// Baseline sweeps divided by this report's sweeps.
    pub sweep_ratio: f64,
}

/// Aggregates a report, relative to `baseline` (usually the `Nai` run) when given.
pub fn sweep_stats(report: &MultiStartReport, baseline: Option<&MultiStartReport>) -> SweepStats {
    let starts = report.all_results.len();
    let mean_iterations = report.per_start_iterations.iter().sum::<usize>() as f64 / starts as f64;
    let base = baseline.unwrap_or(report);
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 1.0 };
    SweepStats {
        strategy: report.strategy,
        width: report.width,
        starts,
        mean_iterations,
        total_sweeps: report.total_sweeps,
        column_iterations: report.column_iterations,
        wall_time: report.wall_time,
        speedup: ratio(base.wall_time, report.wall_time),
        sweep_ratio: ratio(base.total_sweeps as f64, report.total_sweeps as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::{SparsityNorm, VarianceNorm};
    use crate::solver::am_solve_indexed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(seed: u64, n: usize, p: usize) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
        DataMatrix::from_col_major(n, p, v).unwrap()
    }

    fn run(form: &Formulation, a: &DataMatrix, l: usize, strategy: Strategy, r: usize) -> MultiStartReport {
        run_multistart(
            form,
            a,
            &MultiStartPlan::new(l, strategy, r, 11),
            &SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn plan_validation() {
        assert!(MultiStartPlan::new(0, Strategy::Nai, 1, 0).validate().is_err());
        assert!(MultiStartPlan::new(4, Strategy::Bat, 0, 0).validate().is_err());
        assert!(MultiStartPlan::new(4, Strategy::Otf, 5, 0).validate().is_err());
        assert!(MultiStartPlan::new(4, Strategy::Sfa, 99, 0).validate().is_ok());
        assert_eq!(MultiStartPlan::new(4, Strategy::Sfa, 99, 0).width(), 4);
        assert_eq!(MultiStartPlan::new(4, Strategy::Nai, 99, 0).width(), 1);
        assert_eq!("OTF".parse::<Strategy>().unwrap(), Strategy::Otf);
        assert!("fast".parse::<Strategy>().is_err());
    }

    #[test]
    fn single_start_is_the_same_everywhere() {
        let a = random_matrix(1, 9, 12);
        let form = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, 3);
        let reports: Vec<_> = Strategy::ALL.iter().map(|&s| run(&form, &a, 1, s, 1)).collect();
        for r in &reports[1..] {
            assert_eq!(r.all_results, reports[0].all_results);
            assert_eq!(r.total_sweeps, reports[0].total_sweeps);
        }
    }

    #[test]
    fn six_starts_two_slots() {
        let a = random_matrix(2, 15, 25);
        let form = Formulation::constrained(VarianceNorm::L1, SparsityNorm::L0, 4);
        let cfg = SolverConfig::default();
        let iters: Vec<usize> = (0..6)
            .map(|i| {
                let x0 = generate_start(25, 11, i, StartScheme::GaussianSphere);
                am_solve_indexed(&form, &a, &x0, &cfg, i).unwrap().iterations
            })
            .collect();

        // Three batches, each as long as its slowest member.
        let bat = run(&form, &a, 6, Strategy::Bat, 2);
        let expected: usize = iters.chunks(2).map(|c| c[0].max(c[1])).sum();
        assert_eq!(bat.total_sweeps, expected);
        assert_eq!(bat.column_iterations, 2 * expected);

        // Two initial slots, then four replacements in ascending order.
        let otf = run(&form, &a, 6, Strategy::Otf, 2);
        let mut free_at = [iters[0], iters[1]];
        let mut started_at = vec![0, 0];
        for &it in &iters[2..] {
            let slot = if free_at[0] <= free_at[1] { 0 } else { 1 };
            started_at.push(free_at[slot]);
            free_at[slot] += it;
        }
        assert_eq!(started_at.len(), 6);
        assert_eq!(otf.total_sweeps, free_at[0].max(free_at[1]));
        assert_eq!(otf.column_iterations, iters.iter().sum::<usize>());
        assert!(otf.total_sweeps <= bat.total_sweeps);
    }

    #[test]
    fn strategies_agree_on_every_run() {
        let a = random_matrix(3, 30, 40);
        for form in Formulation::all(5, 0.5) {
            let nai = run(&form, &a, 64, Strategy::Nai, 1);
            for (s, r) in [(Strategy::Sfa, 64), (Strategy::Bat, 8), (Strategy::Otf, 8)] {
                let other = run(&form, &a, 64, s, r);
                assert_eq!(other.all_results, nai.all_results, "{form} {s}");
                assert_eq!(other.best, nai.best);
                assert!(other.column_iterations >= nai.column_iterations);
            }
            let sfa = run(&form, &a, 64, Strategy::Sfa, 64);
            let otf = run(&form, &a, 64, Strategy::Otf, 64);
            assert!(otf.total_sweeps <= sfa.total_sweeps);
            assert_eq!(nai.total_sweeps, nai.per_start_iterations.iter().sum::<usize>());
        }
    }

    #[test]
    fn otf_never_exceeds_bat() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..10 {
            let a = random_matrix(trial, rng.gen_range(5..30), rng.gen_range(5..30));
            let form = Formulation::from_index(1 + trial as usize % 8, (1 + trial % 3) as f64).unwrap();
            let l = rng.gen_range(1..40);
            let r = rng.gen_range(1..=l);
            let bat = run(&form, &a, l, Strategy::Bat, r);
            let otf = run(&form, &a, l, Strategy::Otf, r);
            assert!(otf.total_sweeps <= bat.total_sweeps);
            assert!(otf.column_iterations <= bat.column_iterations);
        }
    }

    #[test]
    fn best_is_max_with_lowest_index() {
        let a = DataMatrix::identity(4);
        let form = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, 1);
        let plan = MultiStartPlan::new(8, Strategy::Otf, 3, 0).with_scheme(StartScheme::Column);
        let rep = run_multistart(&form, &a, &plan, &SolverConfig::default()).unwrap();
        assert!(rep.all_results.iter().all(|r| r.objective == 1.0));
        assert_eq!(rep.best.start_index, 0);
    }

    #[test]
    fn best_grows_with_more_starts() {
        let a = random_matrix(6, 20, 30);
        let form = Formulation::penalized(VarianceNorm::L1, SparsityNorm::L1, 1.0);
        let mut prev = f64::NEG_INFINITY;
        for l in [1, 2, 5, 10, 20] {
            let rep = run(&form, &a, l, Strategy::Otf, l.min(4));
            assert!(rep.best.objective >= prev);
            prev = rep.best.objective;
        }
    }

    #[test]
    fn stats() {
        let a = DataMatrix::identity(3);
        let form = Formulation::constrained(VarianceNorm::L2, SparsityNorm::L0, 3);
        let nai = run(&form, &a, 4, Strategy::Nai, 1);
        let st = sweep_stats(&nai, Some(&nai));
        assert_eq!(st.speedup, 1.0);
        assert_eq!(st.sweep_ratio, 1.0);
        assert_eq!(st.mean_iterations, 2.0);
        assert_eq!(st.total_sweeps, 8);
    }
}
