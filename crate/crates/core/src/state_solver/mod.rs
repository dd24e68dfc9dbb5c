//! Pseudo-transient relaxation of the state equations.
//!
//! A stationary problem `R(u) = 0` is marched in pseudo-time, either with the
//! first-order update (PT)
//!
//! ```text
//! u' = u + dt1 * R(u)
//! ```
//!
//! or with the damped-wave update (APT), which needs one extra history level
//! and reaches a tolerance in O(n) rather than O(n^2) steps on an n-node axis.
//! [`hybrid_solve`] runs a fixed number of APT steps followed by PT steps.

mod elastic;
mod heat;

pub use elastic::{elasticity_residual, lame, ElasticMaterialField, ElasticOperator};
pub use heat::{heat_residual, HeatOperator};

use serde::{Deserialize, Serialize};

use crate::grid::{Constraints, Field, Grid};
use crate::{Error, Real, Result};

/// Placement of the first-order damping term in the APT update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AptForm {
    /// `theta (u+ - 2u + u-)/dt^2 + (u - u-)/dt = R(u)`
    ExplicitDamping,
    /// `theta (u+ - 2u + u-)/dt^2 + (u+ - u)/dt = R(u)`
    SemiImplicitDamping,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTParams {
    /// PT pseudo-time step.
    pub dt1: f64,
    /// APT pseudo-time step.
    pub dt2: f64,
    /// Weight of the second-order pseudo-time term.
    pub theta: f64,
    pub n_apt: usize,
    pub n_pt: usize,
    pub apt_form: AptForm,
}

impl PTParams {
    /// `dt1 = h^2 / (2 d)`, `dt2 = h / 2`, `theta = 1` with `h` the smallest spacing.
    pub fn for_grid(grid: &Grid, n_apt: usize, n_pt: usize, apt_form: AptForm) -> Self {
        let h = grid.min_spacing();
        PTParams {
            dt1: h * h / (2.0 * grid.ndim() as f64),
            dt2: 0.5 * h,
            theta: 1.0,
            n_apt,
            n_pt,
            apt_form,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        positive("dt1", self.dt1)?;
        positive("dt2", self.dt2)?;
        positive("theta", self.theta)?;
        if self.n_apt + self.n_pt == 0 {
            return Err(Error::param("n_apt + n_pt", "at least one step per loop"));
        }
        Ok(())
    }
}

/// Current and previous pseudo-time levels of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistory<R> {
    pub current: Field<R>,
    pub previous: Field<R>,
}

impl<R: Real> StateHistory<R> {
    /// Starts at rest: both levels equal.
    pub fn at_rest(state: Field<R>) -> Self {
        StateHistory {
            previous: state.clone(),
            current: state,
        }
    }

    pub fn new(current: Field<R>, previous: Field<R>) -> Result<Self> {
        current.same_grid(&previous)?;
        previous.expect_components(current.components())?;
        Ok(StateHistory { current, previous })
    }
}

/// A discretized stationary state equation `R(u) = 0`.
pub trait StateOperator<R: Real>: Sync {
    fn grid(&self) -> &Grid;

    fn components(&self) -> usize;

    fn constraints(&self) -> &Constraints<R>;

    /// Residual at `state`; constrained entries are written as zero.
    fn residual_into(&self, state: &[R], out: &mut [R]);

    fn residual(&self, state: &Field<R>) -> Field<R> {
        let mut out = Field::zeros(*self.grid(), self.components());
        self.residual_into(state.values(), out.values_mut());
        out
    }
}

/// `(sum r^2)^(1/2) / N` with `N` the number of grid nodes (not entries).
pub fn residual_norm<R: Real>(r: &Field<R>) -> f64 {
    norm_of(r.values(), r.node_count())
}

pub(crate) fn norm_of<R: Real>(values: &[R], nodes: usize) -> f64 {
    let sum: f64 = values.iter().map(|v| v.as_f64() * v.as_f64()).sum();
    sum.sqrt() / nodes as f64
}

fn pt_update<R: Real>(cur: &[R], res: &[R], dt: R, out: &mut [R]) {
    for ((o, c), r) in out.iter_mut().zip(cur).zip(res) {
        *o = *c + dt * *r;
    }
}

fn apt_update<R: Real>(
    cur: &[R],
    prev: &[R],
    res: &[R],
    dt: f64,
    theta: f64,
    form: AptForm,
    out: &mut [R],
) {
    match form {
        AptForm::ExplicitDamping => {
            let keep = R::lit(1.0 - dt / theta);
            let gain = R::lit(dt * dt / theta);
            for (((o, c), p), r) in out.iter_mut().zip(cur).zip(prev).zip(res) {
                *o = *c + keep * (*c - *p) + gain * *r;
            }
        }
        AptForm::SemiImplicitDamping => {
            let keep = R::lit(theta / (theta + dt));
            let gain = R::lit(dt * dt / (theta + dt));
            for (((o, c), p), r) in out.iter_mut().zip(cur).zip(prev).zip(res) {
                *o = *c + keep * (*c - *p) + gain * *r;
            }
        }
    }
}

fn check_finite<R: Real>(values: &[R], step: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            field: "state".into(),
            step,
        })
    }
}

/// One PT step: `state + dt1 * residual`, constraints reapplied.
pub fn pt_step<R: Real>(
    state: &Field<R>,
    residual: &Field<R>,
    dt1: f64,
    constraints: &Constraints<R>,
) -> Result<Field<R>> {
    state.same_grid(residual)?;
    residual.expect_components(state.components())?;
    let mut out = state.clone();
    pt_update(state.values(), residual.values(), R::lit(dt1), out.values_mut());
    constraints.apply(out.values_mut());
    check_finite(out.values(), 0)?;
    Ok(out)
}

/// One APT step; returns the rotated history.
pub fn apt_step<R: Real>(
    hist: &StateHistory<R>,
    residual: &Field<R>,
    dt2: f64,
    theta: f64,
    form: AptForm,
    constraints: &Constraints<R>,
) -> Result<StateHistory<R>> {
    hist.current.same_grid(residual)?;
    residual.expect_components(hist.current.components())?;
    let mut next = hist.current.clone();
    apt_update(
        hist.current.values(),
        hist.previous.values(),
        residual.values(),
        dt2,
        theta,
        form,
        next.values_mut(),
    );
    constraints.apply(next.values_mut());
    check_finite(next.values(), 0)?;
    Ok(StateHistory {
        previous: hist.current.clone(),
        current: next,
    })
}

/// Step counts of one [`hybrid_solve`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub apt_steps: usize,
    pub pt_steps: usize,
}

/// How often the state is scanned for NaN/Inf during a solve.
const FINITE_CHECK_EVERY: usize = 100;

/// Runs `n_apt` APT steps then `n_pt` PT steps on `hist` in place. Never fails
/// on slow convergence; aborts with [`Error::NonFinite`] on NaN/Inf.
pub fn hybrid_solve<R: Real, Op: StateOperator<R>>(
    hist: &mut StateHistory<R>,
    op: &Op,
    params: &PTParams,
) -> Result<SolveStats> {
    let mut stepper = Stepper::new(hist, op)?;
    let total = params.n_apt + params.n_pt;
    for step in 0..total {
        if step < params.n_apt {
            stepper.apt(hist, op, params);
        } else {
            stepper.pt(hist, op, params);
        }
        if (step + 1) % FINITE_CHECK_EVERY == 0 || step + 1 == total {
            check_finite(hist.current.values(), step + 1)?;
        }
    }
    Ok(SolveStats {
        apt_steps: params.n_apt,
        pt_steps: params.n_pt,
    })
}

/// Which update [`iterations_to_tolerance`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Pt,
    Apt,
}

/// Steps until `residual_norm < rel_tol * initial residual_norm`, or `None`
/// if `max_steps` is reached first.
pub fn iterations_to_tolerance<R: Real, Op: StateOperator<R>>(
    hist: &mut StateHistory<R>,
    op: &Op,
    params: &PTParams,
    kind: StepKind,
    rel_tol: f64,
    max_steps: usize,
) -> Result<Option<usize>> {
    let mut stepper = Stepper::new(hist, op)?;
    let nodes = op.grid().node_count();
    op.residual_into(hist.current.values(), &mut stepper.res);
    let r0 = norm_of(&stepper.res, nodes);
    if r0 == 0.0 {
        return Ok(Some(0));
    }
    for step in 0..max_steps {
        let r = match kind {
            StepKind::Pt => stepper.pt(hist, op, params),
            StepKind::Apt => stepper.apt(hist, op, params),
        };
        if r < rel_tol * r0 {
            // `r` is the residual before this step was taken.
            return Ok(Some(step));
        }
        if (step + 1) % FINITE_CHECK_EVERY == 0 {
            check_finite(hist.current.values(), step + 1)?;
        }
    }
    Ok(None)
}

/// Scratch buffers shared by the stepping loops.
struct Stepper<R> {
    res: Vec<R>,
    next: Vec<R>,
    nodes: usize,
}

impl<R: Real> Stepper<R> {
    fn new<Op: StateOperator<R>>(hist: &StateHistory<R>, op: &Op) -> Result<Self> {
        if hist.current.grid() != op.grid() {
            return Err(Error::GridMismatch);
        }
        hist.current.expect_components(op.components())?;
        hist.previous.expect_components(op.components())?;
        let len = hist.current.values().len();
        Ok(Stepper {
            res: vec![R::zero(); len],
            next: vec![R::zero(); len],
            nodes: op.grid().node_count(),
        })
    }

    /// Returns the residual norm at the state the step started from.
    fn pt<Op: StateOperator<R>>(&mut self, hist: &mut StateHistory<R>, op: &Op, p: &PTParams) -> f64 {
        op.residual_into(hist.current.values(), &mut self.res);
        pt_update(hist.current.values(), &self.res, R::lit(p.dt1), &mut self.next);
        self.rotate(hist, op)
    }

    fn apt<Op: StateOperator<R>>(&mut self, hist: &mut StateHistory<R>, op: &Op, p: &PTParams) -> f64 {
        op.residual_into(hist.current.values(), &mut self.res);
        apt_update(
            hist.current.values(),
            hist.previous.values(),
            &self.res,
            p.dt2,
            p.theta,
            p.apt_form,
            &mut self.next,
        );
        self.rotate(hist, op)
    }

    fn rotate<Op: StateOperator<R>>(&mut self, hist: &mut StateHistory<R>, op: &Op) -> f64 {
        op.constraints().apply(&mut self.next);
        // previous <- current <- next
        std::mem::swap(hist.previous.storage_mut(), hist.current.storage_mut());
        std::mem::swap(hist.current.storage_mut(), &mut self.next);
        norm_of(&self.res, self.nodes)
    }
}
