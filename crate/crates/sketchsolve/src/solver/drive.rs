//! Solve drivers: loop a step rule over a strategy's sketch stream until a
//! termination criterion fires.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::Serialize;

use crate::diagnostics::StoppingTimeLog;
use crate::error::{Error, Result};
use crate::sketch::{parse_strategy, ActionSide, SketchContext, SketchStrategy, SketchVector};
use crate::system::LinearSystem;

use super::{
    base_column_step, base_row_step, full_ortho_step, partial_ortho_step, GsKind, SolverState,
    StepKind, StepOutcome,
};

/// Which update rule the driver loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Base,
    Partial { m: usize },
    Complete,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Base => "base".into(),
            Method::Partial { m } => format!("partial:{m}"),
            Method::Complete => "complete".into(),
        }
    }

    pub fn parse(token: &str, default_m: usize) -> Result<Self> {
        match token.split_once(':') {
            None => match token {
                "base" => Ok(Method::Base),
                "partial" => Ok(Method::Partial { m: default_m }),
                "complete" => Ok(Method::Complete),
                _ => Err(Error::InvalidParameter(format!("unknown method `{token}`"))),
            },
            Some(("partial", m)) => m
                .parse::<usize>()
                .map(|m| Method::Partial { m })
                .map_err(|_| Error::InvalidParameter(format!("bad memory size in `{token}`"))),
            _ => Err(Error::InvalidParameter(format!("unknown method `{token}`"))),
        }
    }
}

/// When to stop: a relative residual target, plus optional iteration and
/// wall-clock budgets. The residual is only evaluated every `check_every`
/// iterations, which keeps the memoryless methods' per-iteration cost flat.
#[derive(Clone, Debug)]
pub struct TerminationCriteria {
    pub residual_factor: f64,
    pub max_iterations: Option<usize>,
    pub wall_clock_budget: Option<Duration>,
    pub check_every: usize,
}

impl TerminationCriteria {
    pub fn residual(factor: f64) -> Self {
        assert!(factor > 0.0, "residual factor must be positive");
        Self {
            residual_factor: factor,
            max_iterations: None,
            wall_clock_budget: None,
            check_every: 10,
        }
    }

    pub fn with_max_iterations(mut self, max: usize) -> Self {
        self.max_iterations = Some(max);
        self
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.wall_clock_budget = Some(budget);
        self
    }

    pub fn with_check_every(mut self, every: usize) -> Self {
        assert!(every >= 1, "check_every must be at least 1");
        self.check_every = every;
        self
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualSample {
    pub iteration: usize,
    pub relative_residual: f64,
}

/// Everything a solve run reports.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: String,
    pub strategy: String,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub iterations: usize,
    pub advanced_steps: usize,
    pub elapsed_seconds: f64,
    pub final_relative_residual: f64,
    pub timed_out: bool,
    pub x: Vec<f64>,
    pub residual_history: Vec<ResidualSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopping_log: Option<StoppingTimeLog>,
}

impl SolveReport {
    pub fn solution(&self) -> DVector<f64> {
        DVector::from_vec(self.x.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Per-iteration record of a run, for diagnostics and replay.
#[derive(Default)]
pub struct SolveTrace {
    pub ws: Vec<SketchVector>,
    pub outcomes: Vec<StepKind>,
    /// `x_0, x_1, ..., x_K` (skipped iterations repeat the iterate).
    pub iterates: Vec<DVector<f64>>,
}

impl SolveTrace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Knobs that are not part of [`TerminationCriteria`].
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub x0: Option<DVector<f64>>,
    pub gs_kind: GsKind,
    /// Recorded in the report; the strategy was seeded by the caller.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            x0: None,
            gs_kind: GsKind::Modified,
            seed: 0,
        }
    }
}

struct LoopOutput {
    state: SolverState,
    iterations: usize,
    advanced: usize,
    timed_out: bool,
    history: Vec<ResidualSample>,
    elapsed: Duration,
}

fn drive_loop(
    system: &LinearSystem,
    strategy: &mut dyn SketchStrategy,
    criteria: &TerminationCriteria,
    mut state: SolverState,
    mut step: impl FnMut(&mut SolverState, &LinearSystem, &SketchVector) -> Result<StepOutcome>,
    mut trace: Option<&mut SolveTrace>,
) -> Result<LoopOutput> {
    let start = Instant::now();
    let r0 = system.residual_norm(&state.x)?;
    let target = criteria.residual_factor * r0;
    let mut iterations = 0usize;
    let mut advanced = 0usize;
    let mut timed_out = false;
    let mut history = Vec::new();
    if let Some(t) = trace.as_deref_mut() {
        t.iterates.push(state.x.clone());
    }
    loop {
        if iterations % criteria.check_every == 0 {
            let rn = system.residual_norm(&state.x)?;
            history.push(ResidualSample {
                iteration: iterations,
                relative_residual: if r0 > 0.0 { rn / r0 } else { 0.0 },
            });
            if rn <= target {
                break;
            }
        }
        if let Some(max) = criteria.max_iterations {
            if iterations >= max {
                timed_out = true;
                break;
            }
        }
        if let Some(budget) = criteria.wall_clock_budget {
            if start.elapsed() >= budget {
                timed_out = true;
                break;
            }
        }
        let w = match strategy.next(&SketchContext {
            system,
            x: &state.x,
            iteration: iterations,
        }) {
            Ok(w) => w,
            // An adaptive selector refusing a zero residual means we are done.
            Err(Error::ZeroResidual) => break,
            Err(e) => return Err(e),
        };
        let outcome = step(&mut state, system, &w)?;
        if outcome.advanced() {
            advanced += 1;
        }
        if let Some(t) = trace.as_deref_mut() {
            t.ws.push(w);
            t.outcomes.push(outcome.kind);
            t.iterates.push(state.x.clone());
        }
        iterations += 1;
    }
    Ok(LoopOutput {
        state,
        iterations,
        advanced,
        timed_out,
        history,
        elapsed: start.elapsed(),
    })
}

/// Runs a row-action solve with the given strategy and method.
pub fn run_solve(
    system: &LinearSystem,
    strategy: &mut dyn SketchStrategy,
    method: &Method,
    criteria: &TerminationCriteria,
    opts: &SolveOptions,
    trace: Option<&mut SolveTrace>,
) -> Result<SolveReport> {
    if strategy.side() != ActionSide::Row {
        return Err(Error::StrategySideMismatch { expected: "row" });
    }
    let x0 = match &opts.x0 {
        Some(x) => {
            if x.len() != system.d() {
                return Err(Error::DimensionMismatch {
                    context: "initial iterate",
                    expected: system.d(),
                    found: x.len(),
                });
            }
            x.clone()
        }
        None => DVector::zeros(system.d()),
    };
    let state = match method {
        Method::Base => SolverState::new_base(x0),
        Method::Partial { m } => SolverState::new_partial(x0, *m, opts.gs_kind),
        Method::Complete => SolverState::new_complete(x0),
    };
    let step = match method {
        Method::Base => base_row_step,
        Method::Partial { .. } => partial_ortho_step,
        Method::Complete => full_ortho_step,
    };
    let out = drive_loop(system, strategy, criteria, state, step, trace)?;
    finish_report(system, strategy, method.label(), opts.seed, out)
}

/// Runs the memoryless column-action solve; requires a column-side strategy.
pub fn run_solve_column(
    system: &LinearSystem,
    strategy: &mut dyn SketchStrategy,
    criteria: &TerminationCriteria,
    opts: &SolveOptions,
    trace: Option<&mut SolveTrace>,
) -> Result<SolveReport> {
    if strategy.side() != ActionSide::Column {
        return Err(Error::StrategySideMismatch { expected: "column" });
    }
    let x0 = match &opts.x0 {
        Some(x) => x.clone(),
        None => DVector::zeros(system.d()),
    };
    let state = SolverState::new_base(x0);
    let out = drive_loop(system, strategy, criteria, state, base_column_step, trace)?;
    finish_report(system, strategy, "column".into(), opts.seed, out)
}

fn finish_report(
    system: &LinearSystem,
    strategy: &dyn SketchStrategy,
    method: String,
    seed: u64,
    out: LoopOutput,
) -> Result<SolveReport> {
    let r0 = system.residual_norm(&DVector::zeros(system.d()))?;
    let final_norm = system.residual_norm(&out.state.x)?;
    let b_norm = system.b().norm();
    let baseline = if b_norm > 0.0 { b_norm } else { r0.max(1.0) };
    Ok(SolveReport {
        method,
        strategy: strategy.token(),
        n: system.n(),
        d: system.d(),
        seed,
        iterations: out.iterations,
        advanced_steps: out.advanced,
        elapsed_seconds: out.elapsed.as_secs_f64(),
        final_relative_residual: final_norm / baseline,
        timed_out: out.timed_out,
        x: out.state.x.as_slice().to_vec(),
        residual_history: out.history,
        stopping_log: None,
    })
}

/// Convenience wrapper: build the strategy from its token and run.
pub fn solve(
    system: &LinearSystem,
    strategy_token: &str,
    method: &Method,
    criteria: &TerminationCriteria,
    seed: u64,
) -> Result<SolveReport> {
    let mut strategy = parse_strategy(strategy_token, seed)?;
    let opts = SolveOptions {
        seed,
        ..SolveOptions::default()
    };
    run_solve(system, strategy.as_mut(), method, criteria, &opts, None)
}
