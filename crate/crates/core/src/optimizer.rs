//! The coupled optimization loop.
//!
//! Every loop relaxes the state with a fixed number of APT and PT steps for
//! the current material, takes one sensitivity step on the phases and one
//! Cahn-Hilliard step. Neither the state nor the design is solved to
//! completion within a loop; both converge together.

use serde::{Deserialize, Serialize};

use crate::grid::{BoundarySpec, Field, Grid};
use crate::objectives::{
    compliance, design_update, interpolate, region_objective, sensitivities, unity_objective,
    volume_fractions, volume_objective, MaterialKind, MaterialModel, ObjectiveReport, ObjectiveWeights,
    VolumeTargets,
};
use crate::phase_field::{ch_step_multi, CahnHilliardParams, PhaseSet};
use crate::state_solver::{
    hybrid_solve, residual_norm, ElasticOperator, HeatOperator, PTParams, StateHistory, StateOperator,
};
use crate::{Error, Real, Result};

/// Relative-change stopping rule on the compliance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub tolerance: f64,
    pub window: usize,
    /// No convergence is declared before this many loops.
    #[serde(default)]
    pub min_loops: usize,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence {
            tolerance: 1e-3,
            window: 50,
            min_loops: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSchedule {
    pub pt: PTParams,
    pub ch: CahnHilliardParams,
    pub max_loops: usize,
    pub convergence: Convergence,
    pub report_every: usize,
    /// When false the phases are frozen and only the state is relaxed.
    pub evolve_design: bool,
}

impl LoopSchedule {
    pub fn validate(&self, phases: usize) -> Result<()> {
        self.pt.validate()?;
        self.ch.validate(phases)?;
        if self.max_loops < 1 {
            return Err(Error::param("max_loops", "must be at least 1"));
        }
        if !(self.convergence.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        if self.convergence.window < 2 {
            return Err(Error::param("window", "must be at least 2"));
        }
        if self.report_every < 1 {
            return Err(Error::param("report_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Everything that defines one optimization problem.
#[derive(Debug, Clone)]
pub struct Problem<R> {
    pub grid: Grid,
    pub bc: BoundarySpec,
    /// Heat source (scalar) or body load (vector, entering as `div(sigma) - f`).
    pub loads: Field<R>,
    pub material: MaterialModel,
    pub targets: VolumeTargets,
    pub weights: ObjectiveWeights,
    pub phases: PhaseSet<R>,
    pub state: Field<R>,
}

impl<R: Real> Problem<R> {
    pub fn state_components(&self) -> usize {
        match self.material.kind {
            MaterialKind::Thermal => 1,
            MaterialKind::Elastic => self.grid.ndim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.phases.len();
        self.material.validate(n)?;
        self.targets.validate(n)?;
        self.weights.validate()?;
        for f in [&self.loads, &self.state, self.phases.phase(0)] {
            if f.grid() != &self.grid {
                return Err(Error::GridMismatch);
            }
        }
        self.loads.expect_components(self.state_components())?;
        self.state.expect_components(self.state_components())?;
        self.bc.constraints::<R>(&self.grid, self.state_components())?;
        Ok(())
    }

    /// Name of the state field in reports and files.
    pub fn state_name(&self) -> &'static str {
        match self.material.kind {
            MaterialKind::Thermal => "temperature",
            MaterialKind::Elastic => "displacement",
        }
    }
}

/// Step counts accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub apt_steps: usize,
    pub pt_steps: usize,
    pub design_updates: usize,
    pub ch_steps: usize,
}

/// One row of the run history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub report: ObjectiveReport,
    pub residual: f64,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxLoops,
    Aborted { loop_index: usize, field: String },
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxLoops => "max_loops",
            Termination::Aborted { .. } => "aborted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult<R> {
    pub phases: PhaseSet<R>,
    pub state: Field<R>,
    /// Effective property (conductivity or Young's modulus) of `phases`.
    pub property: Field<R>,
    pub history: Vec<HistoryRecord>,
    pub loops: usize,
    pub termination: Termination,
    pub counters: Counters,
}

/// Fraction of nodes where every phase is within 0.1 of 0 or 1.
pub fn phase_separation_metric<R: Real>(phases: &PhaseSet<R>) -> f64 {
    let n = phases.grid().node_count();
    let near = (0..n)
        .filter(|&i| {
            phases.phases().iter().all(|p| {
                let v = p.values()[i].as_f64();
                v.min(1.0 - v) < 0.1
            })
        })
        .count();
    near as f64 / n as f64
}

/// Relaxes the state for the current material; returns the residual norm at
/// the relaxed state.
fn relax<R: Real, Op: StateOperator<R>>(hist: &mut StateHistory<R>, op: &Op, pt: &PTParams) -> Result<f64> {
    hybrid_solve(hist, op, pt)?;
    Ok(residual_norm(&op.residual(&hist.current)))
}

fn solve_state<R: Real>(
    problem: &Problem<R>,
    property: &Field<R>,
    hist: &mut StateHistory<R>,
    pt: &PTParams,
) -> Result<f64> {
    match problem.material.kind {
        MaterialKind::Thermal => relax(hist, &HeatOperator::new(property, &problem.loads, &problem.bc)?, pt),
        MaterialKind::Elastic => {
            let lame = problem.material.lame_fields(property)?;
            relax(hist, &ElasticOperator::new(&lame, &problem.loads, &problem.bc)?, pt)
        }
    }
}

fn converged(values: &[f64], c: &Convergence) -> bool {
    if values.len() < c.window.max(c.min_loops) {
        return false;
    }
    let tail = &values[values.len() - c.window..];
    let last = *tail.last().unwrap();
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    last != 0.0 && (hi - lo) / last.abs() < c.tolerance
}

pub fn run<R: Real>(problem: &Problem<R>, schedule: &LoopSchedule) -> Result<OptimizationResult<R>> {
    run_with_progress(problem, schedule, |_| {})
}

/// [`run`] with a callback invoked for every recorded history row.
pub fn run_with_progress<R: Real>(
    problem: &Problem<R>,
    schedule: &LoopSchedule,
    mut progress: impl FnMut(&HistoryRecord),
) -> Result<OptimizationResult<R>> {
    problem.validate()?;
    schedule.validate(problem.phases.len())?;
    let state_name = problem.state_name();

    let mut phases = problem.phases.clone();
    let mut hist = StateHistory::at_rest(problem.state.clone());
    let mut counters = Counters::default();
    let mut history = Vec::new();
    let mut compliances = Vec::new();
    let mut termination = Termination::MaxLoops;
    let mut loops = 0;

    for loop_index in 1..=schedule.max_loops {
        let property = interpolate(&phases, &problem.material)?;
        let mut trial = hist.clone();
        let residual = match solve_state(problem, &property, &mut trial, &schedule.pt) {
            Ok(r) if r.is_finite() => r,
            Ok(_) | Err(Error::NonFinite { .. }) => {
                termination = Termination::Aborted {
                    loop_index,
                    field: state_name.into(),
                };
                break;
            }
            Err(e) => return Err(e),
        };
        hist = trial;
        counters.apt_steps += schedule.pt.n_apt;
        counters.pt_steps += schedule.pt.n_pt;
        let j = compliance(&hist.current, &phases, &problem.material)?;

        if schedule.evolve_design {
            let next = sensitivities(&phases, &hist.current, &problem.material, &problem.targets)
                .and_then(|s| design_update(&phases, &s, &problem.weights))
                .and_then(|p| {
                    counters.design_updates += 1;
                    ch_step_multi(&p, &schedule.ch)
                });
            match next {
                Ok(p) if p.all_finite() => phases = p,
                Ok(_) | Err(Error::NonFinite { .. }) => {
                    termination = Termination::Aborted {
                        loop_index,
                        field: "phi".into(),
                    };
                    break;
                }
                Err(e) => return Err(e),
            }
            counters.ch_steps += 1;
        }
        loops = loop_index;
        compliances.push(j);

        let done = converged(&compliances, &schedule.convergence);
        if loop_index % schedule.report_every == 0 || loop_index == schedule.max_loops || done {
            let record = HistoryRecord {
                report: ObjectiveReport {
                    loop_index,
                    compliance: j,
                    volume: volume_objective(&phases, &problem.targets)?,
                    unity: unity_objective(&phases),
                    region: match problem.targets.region {
                        Some(_) => region_objective(&phases, &problem.targets)?,
                        None => 0.0,
                    },
                    volume_fractions: volume_fractions(&phases),
                },
                residual,
                counters,
            };
            progress(&record);
            history.push(record);
        }
        if done {
            termination = Termination::Converged;
            break;
        }
    }

    let property = interpolate(&phases, &problem.material)?;
    Ok(OptimizationResult {
        phases,
        state: hist.current,
        property,
        history,
        loops,
        termination,
        counters,
    })
}
