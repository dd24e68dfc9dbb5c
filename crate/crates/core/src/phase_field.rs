//! Cahn-Hilliard evolution of the phase densities.
//!
//! Each phase follows `dphi/dt = D lap(mu)` with `mu = w'(phi) - gamma lap(phi)`
//! and no-flux boundaries, advanced by forward Euler. Phases do not interact
//! here; coupling between them only enters through the objective sensitivities.
//!
//! The Laplacian mirrors the first interior node across every face. With the
//! lumped nodal volumes of [`Grid::cell_volume`] that operator is symmetric
//! and its columns sum to zero, so the conserved quantity is the
//! volume-weighted mass [`mass`], and `mu` is exactly the variational
//! derivative of [`ginzburg_landau_energy`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{DiffusionStencil, Field, Grid};
use crate::{Error, Real, Result};

/// Default interface parameter.
pub const DEFAULT_GAMMA: f64 = 3e-5;
/// Default step factor: `dt3 = DT3_FACTOR * h^4`.
pub const DT3_FACTOR: f64 = 500.0;

/// `w(phi) = sin^2(pi phi) / 64`.
#[inline]
pub fn double_well<R: Real>(phi: R) -> R {
    let s = (R::lit(PI) * phi).sin();
    s * s / R::lit(64.0)
}

/// `w'(phi) = pi sin(2 pi phi) / 64`.
#[inline]
pub fn dwell<R: Real>(phi: R) -> R {
    R::lit(PI / 64.0) * (R::lit(2.0 * PI) * phi).sin()
}

/// A coefficient that is either shared by all phases or given per phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerPhase {
    Shared(f64),
    Each(Vec<f64>),
}

impl PerPhase {
    pub fn get(&self, phase: usize) -> f64 {
        match self {
            PerPhase::Shared(v) => *v,
            PerPhase::Each(v) => v[phase],
        }
    }

    fn validate(&self, name: &str, phases: usize) -> Result<()> {
        let values: &[f64] = match self {
            PerPhase::Shared(v) => std::slice::from_ref(v),
            PerPhase::Each(v) => {
                if v.len() != phases {
                    return Err(Error::param(name, format!("expected {phases} values, got {}", v.len())));
                }
                v
            }
        };
        match values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            Some(v) => Err(Error::param(name, format!("must be positive, got {v}"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CahnHilliardParams {
    /// Mobility `D`.
    pub mobility: PerPhase,
    pub gamma: PerPhase,
    pub dt3: f64,
}

impl CahnHilliardParams {
    pub fn new(dt3: f64) -> Self {
        CahnHilliardParams {
            mobility: PerPhase::Shared(1.0),
            gamma: PerPhase::Shared(DEFAULT_GAMMA),
            dt3,
        }
    }

    /// Defaults with `dt3 = 500 h^4`, `h` the smallest spacing.
    pub fn for_grid(grid: &Grid) -> Self {
        Self::new(DT3_FACTOR * grid.min_spacing().powi(4))
    }

    pub fn validate(&self, phases: usize) -> Result<()> {
        self.mobility.validate("mobility", phases)?;
        self.gamma.validate("gamma", phases)?;
        if !(self.dt3 > 0.0 && self.dt3.is_finite()) {
            return Err(Error::param("dt3", format!("must be positive, got {}", self.dt3)));
        }
        Ok(())
    }

    /// Largest forward Euler step for which no Fourier mode of the
    /// linearised equation grows, for every phase.
    pub fn stable_dt(&self, grid: &Grid, phases: usize) -> f64 {
        let lam: f64 = grid.spacings().iter().map(|h| 4.0 / (h * h)).sum();
        let curvature = PI * PI / 32.0;
        (0..phases)
            .map(|i| 2.0 / (self.mobility.get(i) * lam * (self.gamma.get(i) * lam + curvature)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The ordered phase densities `phi_1 .. phi_N` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSet<R> {
    phases: Vec<Field<R>>,
}

impl<R: Real> PhaseSet<R> {
    pub fn new(phases: Vec<Field<R>>) -> Result<Self> {
        let first = phases
            .first()
            .ok_or_else(|| Error::param("phases", "at least one phase is required"))?;
        for p in &phases {
            p.expect_components(1)?;
            first.same_grid(p)?;
        }
        Ok(PhaseSet { phases })
    }

    /// Every phase constant, one value per phase.
    pub fn uniform(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|v| Field::scalar(grid, R::lit(*v))).collect())
    }

    pub fn grid(&self) -> &Grid {
        self.phases[0].grid()
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[Field<R>] {
        &self.phases
    }

    pub fn phase(&self, i: usize) -> &Field<R> {
        &self.phases[i]
    }

    pub fn phase_mut(&mut self, i: usize) -> &mut Field<R> {
        &mut self.phases[i]
    }

    pub fn into_phases(self) -> Vec<Field<R>> {
        self.phases
    }

    pub fn clamp(&mut self) {
        for p in &mut self.phases {
            clamp_unit(p.values_mut());
        }
    }

    pub fn all_finite(&self) -> bool {
        self.phases.iter().all(Field::all_finite)
    }

    /// Volume fraction of every phase.
    pub fn volume_fractions(&self) -> Vec<f64> {
        let total = self.grid().domain_volume();
        self.phases.iter().map(|p| mass(p) / total).collect()
    }
}

pub(crate) fn clamp_unit<R: Real>(values: &mut [R]) {
    for v in values {
        *v = v.max(R::zero()).min(R::one());
    }
}

/// `sum phi * cellvol`, the quantity the Cahn-Hilliard step conserves.
pub fn mass<R: Real>(phi: &Field<R>) -> f64 {
    let g = phi.grid();
    phi.component(0)
        .iter()
        .enumerate()
        .map(|(n, v)| v.as_f64() * g.cell_volume(n))
        .sum()
}

/// `sum w(phi) cellvol + (gamma / 2) sum_edges |dphi / h|^2 edgevol`, where an
/// edge's volume is its length times the dual area it crosses.
pub fn ginzburg_landau_energy<R: Real>(phi: &Field<R>, gamma: f64) -> f64 {
    let g = phi.grid();
    let v = phi.component(0);
    let dims = g.dims3();
    let mut bulk = 0.0;
    let mut grad = 0.0;
    for n in 0..g.node_count() {
        bulk += double_well(v[n].as_f64()) * g.cell_volume(n);
        let ijk = g.ijk(n);
        for axis in 0..g.ndim() {
            if ijk[axis] + 1 == dims[axis] {
                continue;
            }
            let mut edge = g.spacing(axis);
            for t in (0..g.ndim()).filter(|&t| t != axis) {
                let half = ijk[t] == 0 || ijk[t] + 1 == dims[t];
                edge *= if half { 0.5 * g.spacing(t) } else { g.spacing(t) };
            }
            let d = (v[n + g.stride(axis)].as_f64() - v[n].as_f64()) / g.spacing(axis);
            grad += edge * d * d;
        }
    }
    bulk + 0.5 * gamma * grad
}

/// `mu = w'(phi) - gamma lap(phi)`.
pub fn chemical_potential<R: Real>(phi: &Field<R>, gamma: f64) -> Result<Field<R>> {
    phi.expect_components(1)?;
    let stencil = DiffusionStencil::uniform(*phi.grid(), R::one());
    let mut mu = Field::zeros(*phi.grid(), 1);
    potential_into(&stencil, phi.values(), R::lit(gamma), mu.values_mut());
    Ok(mu)
}

fn potential_into<R: Real>(stencil: &DiffusionStencil<R>, phi: &[R], gamma: R, out: &mut [R]) {
    stencil.apply(phi, out);
    for (o, p) in out.iter_mut().zip(phi) {
        *o = dwell(*p) - gamma * *o;
    }
}

/// One forward Euler step without clamping.
pub fn step_unclamped<R: Real>(phi: &Field<R>, mobility: f64, gamma: f64, dt3: f64) -> Result<Field<R>> {
    phi.expect_components(1)?;
    let stencil = DiffusionStencil::uniform(*phi.grid(), R::one());
    let mut mu = vec![R::zero(); phi.values().len()];
    potential_into(&stencil, phi.values(), R::lit(gamma), &mut mu);
    let mut lap = vec![R::zero(); mu.len()];
    stencil.apply(&mu, &mut lap);
    let gain = R::lit(dt3 * mobility);
    let mut out = phi.clone();
    for (o, l) in out.values_mut().iter_mut().zip(&lap) {
        *o += gain * *l;
    }
    Ok(out)
}

fn step_phase<R: Real>(phi: &Field<R>, params: &CahnHilliardParams, i: usize) -> Result<Field<R>> {
    let mut out = step_unclamped(phi, params.mobility.get(i), params.gamma.get(i), params.dt3)?;
    if !out.all_finite() {
        return Err(Error::NonFinite {
            field: format!("phi{}", i + 1),
            step: 0,
        });
    }
    clamp_unit(out.values_mut());
    Ok(out)
}

/// One Cahn-Hilliard step of a single phase, clamped to `[0, 1]`.
pub fn ch_step<R: Real>(phi: &Field<R>, params: &CahnHilliardParams) -> Result<Field<R>> {
    params.validate(1)?;
    step_phase(phi, params, 0)
}

/// [`ch_step`] applied to each phase with that phase's coefficients.
pub fn ch_step_multi<R: Real>(set: &PhaseSet<R>, params: &CahnHilliardParams) -> Result<PhaseSet<R>> {
    params.validate(set.len())?;
    let phases = set
        .phases()
        .iter()
        .enumerate()
        .map(|(i, p)| step_phase(p, params, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseSet { phases })
}
