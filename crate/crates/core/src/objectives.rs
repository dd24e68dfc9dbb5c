//! Material interpolation, objective functionals and their sensitivities.
//!
//! Sensitivities hold the state (temperature or displacement) fixed, so the
//! compliance terms only differentiate through the property interpolation
//! `p = max(sum_i p_i phi_i^e, floor)`. All integrals use the lumped nodal
//! volumes; volume fractions are volume-weighted means.

use serde::{Deserialize, Serialize};

use crate::grid::{gradient, Field, Grid};
use crate::phase_field::{clamp_unit, PhaseSet};
use crate::state_solver::{lame, ElasticMaterialField};
use crate::{Error, Real, Result};

pub const DEFAULT_VOID_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Thermal,
    Elastic,
}

/// Per-phase conductivities or Young's moduli, in phase order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialModel {
    pub kind: MaterialKind,
    pub properties: Vec<f64>,
    /// Only used by elastic models.
    #[serde(default = "default_nu")]
    pub poisson_ratio: f64,
    pub penalty: f64,
    #[serde(default = "default_floor")]
    pub void_floor: f64,
}

fn default_nu() -> f64 {
    0.3
}

fn default_floor() -> f64 {
    DEFAULT_VOID_FLOOR
}

impl MaterialModel {
    pub fn thermal(properties: Vec<f64>, penalty: f64) -> Self {
        MaterialModel {
            kind: MaterialKind::Thermal,
            properties,
            poisson_ratio: default_nu(),
            penalty,
            void_floor: DEFAULT_VOID_FLOOR,
        }
    }

    pub fn elastic(properties: Vec<f64>, poisson_ratio: f64, penalty: f64) -> Self {
        MaterialModel {
            kind: MaterialKind::Elastic,
            properties,
            poisson_ratio,
            penalty,
            void_floor: DEFAULT_VOID_FLOOR,
        }
    }

    pub fn validate(&self, phases: usize) -> Result<()> {
        if self.properties.len() != phases {
            return Err(Error::CountMismatch {
                expected: phases,
                actual: self.properties.len(),
            });
        }
        if let Some(p) = self.properties.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::param("properties", format!("must be positive, got {p}")));
        }
        if !(self.penalty >= 1.0 && self.penalty.is_finite()) {
            return Err(Error::param("penalty", format!("must be at least 1, got {}", self.penalty)));
        }
        if !(self.void_floor > 0.0) {
            return Err(Error::param("void_floor", "must be positive"));
        }
        if self.kind == MaterialKind::Elastic && !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::param("poisson_ratio", "must lie in (-1, 0.5)"));
        }
        Ok(())
    }

    /// Nodal Lamé parameters for an interpolated Young's modulus field.
    pub fn lame_fields<R: Real>(&self, youngs: &Field<R>) -> Result<ElasticMaterialField<R>> {
        ElasticMaterialField::from_youngs(youngs, self.poisson_ratio)
    }
}

/// `max(sum_i p_i phi_i^e, floor)` node-wise.
pub fn interpolate<R: Real>(phases: &PhaseSet<R>, mat: &MaterialModel) -> Result<Field<R>> {
    mat.validate(phases.len())?;
    let grid = *phases.grid();
    let e = R::lit(mat.penalty);
    let floor = R::lit(mat.void_floor);
    let mut out = Field::<R>::zeros(grid, 1);
    for (phi, p) in phases.phases().iter().zip(&mat.properties) {
        let p = R::lit(*p);
        for (o, v) in out.values_mut().iter_mut().zip(phi.values()) {
            *o += p * v.powf(e);
        }
    }
    for o in out.values_mut() {
        *o = o.max(floor);
    }
    Ok(out)
}

/// `|grad T|^2` per node.
fn gradient_squared<R: Real>(t: &Field<R>) -> Result<Vec<f64>> {
    t.expect_components(1)?;
    let g = gradient(t)?;
    let n = t.node_count();
    Ok((0..n)
        .map(|i| {
            (0..g.components())
                .map(|c| g.component(c)[i].as_f64().powi(2))
                .sum()
        })
        .collect())
}

/// `(tr(eps)^2, eps:eps)` per node, strains from the grid gradient.
fn strain_invariants<R: Real>(u: &Field<R>) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = *u.grid();
    let d = grid.ndim();
    u.expect_components(d)?;
    let n = grid.node_count();
    // du[q][p] = d u_q / d x_p
    let mut du = Vec::with_capacity(d);
    for q in 0..d {
        let comp = Field::from_values(grid, 1, u.component(q).to_vec())?;
        du.push(gradient(&comp)?);
    }
    let mut tr2 = vec![0.0; n];
    let mut ee = vec![0.0; n];
    for i in 0..n {
        let grad = |q: usize, p: usize| du[q].component(p)[i].as_f64();
        let mut tr = 0.0;
        let mut sum = 0.0;
        for p in 0..d {
            tr += grad(p, p);
            for q in 0..d {
                let eps = 0.5 * (grad(q, p) + grad(p, q));
                sum += eps * eps;
            }
        }
        tr2[i] = tr * tr;
        ee[i] = sum;
    }
    Ok((tr2, ee))
}

/// Compensated running sum; the objectives are sums of many small local
/// terms, and finite-difference checks difference two of them.
#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    fn add(self, x: f64) -> Self {
        let t = self.sum + x;
        let carry = if self.sum.abs() >= x.abs() {
            self.carry + ((self.sum - t) + x)
        } else {
            self.carry + ((x - t) + self.sum)
        };
        Neumaier { sum: t, carry }
    }

    fn total(self) -> f64 {
        self.sum + self.carry
    }
}

/// `sum kappa |grad T|^2 cellvol`.
pub fn thermal_compliance<R: Real>(t: &Field<R>, kappa: &Field<R>) -> Result<f64> {
    t.same_grid(kappa)?;
    kappa.expect_components(1)?;
    let g2 = gradient_squared(t)?;
    let grid = t.grid();
    Ok(g2
        .iter()
        .zip(kappa.values())
        .enumerate()
        .map(|(n, (g, k))| k.as_f64() * g * grid.cell_volume(n))
        .fold(Neumaier::default(), Neumaier::add)
        .total())
}

/// `sum sigma:eps cellvol`.
pub fn mechanical_compliance<R: Real>(u: &Field<R>, mat: &ElasticMaterialField<R>) -> Result<f64> {
    u.same_grid(&mat.lambda)?;
    let (tr2, ee) = strain_invariants(u)?;
    let grid = u.grid();
    Ok((0..grid.node_count())
        .map(|n| {
            let l = mat.lambda.values()[n].as_f64();
            let m = mat.mu.values()[n].as_f64();
            (l * tr2[n] + 2.0 * m * ee[n]) * grid.cell_volume(n)
        })
        .fold(Neumaier::default(), Neumaier::add)
        .total())
}

/// Compliance of `state` for the material interpolated from `phases`.
pub fn compliance<R: Real>(state: &Field<R>, phases: &PhaseSet<R>, mat: &MaterialModel) -> Result<f64> {
    let p = interpolate(phases, mat)?;
    match mat.kind {
        MaterialKind::Thermal => thermal_compliance(state, &p),
        MaterialKind::Elastic => mechanical_compliance(state, &mat.lame_fields(&p)?),
    }
}

/// An optional sub-region with its own per-phase targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTargets {
    mask: Vec<bool>,
    volume: f64,
    targets: Vec<f64>,
}

impl RegionTargets {
    pub fn new(grid: &Grid, nodes: &[usize], targets: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyMask);
        }
        let mut mask = vec![false; grid.node_count()];
        for &n in nodes {
            if n >= mask.len() {
                return Err(Error::param("region", format!("node {n} outside the grid")));
            }
            mask[n] = true;
        }
        let volume = (0..mask.len()).filter(|&n| mask[n]).map(|n| grid.cell_volume(n)).sum();
        Ok(RegionTargets { mask, volume, targets })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn node_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTargets {
    pub global: Vec<f64>,
    pub region: Option<RegionTargets>,
}

impl VolumeTargets {
    pub fn new(global: Vec<f64>) -> Self {
        VolumeTargets { global, region: None }
    }

    pub fn with_region(mut self, region: RegionTargets) -> Self {
        self.region = Some(region);
        self
    }

    pub fn validate(&self, phases: usize) -> Result<()> {
        if self.global.len() != phases {
            return Err(Error::CountMismatch {
                expected: phases,
                actual: self.global.len(),
            });
        }
        let all = self
            .global
            .iter()
            .chain(self.region.iter().flat_map(|r| r.targets.iter()));
        if let Some(t) = all.clone().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::param("targets", format!("volume targets must lie in [0, 1], got {t}")));
        }
        if let Some(r) = &self.region {
            if r.targets.len() != phases {
                return Err(Error::CountMismatch {
                    expected: phases,
                    actual: r.targets.len(),
                });
            }
            if r.node_count() == 0 {
                return Err(Error::EmptyMask);
            }
        }
        Ok(())
    }
}

/// Volume fraction of one phase, optionally restricted to a mask.
fn fraction<R: Real>(phi: &Field<R>, mask: Option<(&[bool], f64)>) -> f64 {
    let g = phi.grid();
    let v = phi.values();
    match mask {
        None => {
            (0..v.len())
                .map(|n| v[n].as_f64() * g.cell_volume(n))
                .fold(Neumaier::default(), Neumaier::add)
                .total()
                / g.domain_volume()
        }
        Some((m, vol)) => {
            (0..v.len())
                .filter(|&n| m[n])
                .map(|n| v[n].as_f64() * g.cell_volume(n))
                .fold(Neumaier::default(), Neumaier::add)
                .total()
                / vol
        }
    }
}

pub fn volume_fractions<R: Real>(phases: &PhaseSet<R>) -> Vec<f64> {
    phases.phases().iter().map(|p| fraction(p, None)).collect()
}

/// `sum_i (volfrac_i - V_i)^2`.
pub fn volume_objective<R: Real>(phases: &PhaseSet<R>, targets: &VolumeTargets) -> Result<f64> {
    targets.validate(phases.len())?;
    Ok(volume_fractions(phases)
        .iter()
        .zip(&targets.global)
        .map(|(f, t)| (f - t).powi(2))
        .sum())
}

/// `sum_nodes (sum_i phi_i - 1)^2 cellvol / |Omega|`.
pub fn unity_objective<R: Real>(phases: &PhaseSet<R>) -> f64 {
    let g = phases.grid();
    let excess = unity_excess(phases);
    excess
        .iter()
        .enumerate()
        .map(|(n, e)| e * e * g.cell_volume(n))
        .fold(Neumaier::default(), Neumaier::add)
        .total()
        / g.domain_volume()
}

fn unity_excess<R: Real>(phases: &PhaseSet<R>) -> Vec<f64> {
    let mut s = vec![-1.0; phases.grid().node_count()];
    for p in phases.phases() {
        for (a, v) in s.iter_mut().zip(p.values()) {
            *a += v.as_f64();
        }
    }
    s
}

/// `sum_i (regionfrac_i - V_i^b)^2` over the masked region.
pub fn region_objective<R: Real>(phases: &PhaseSet<R>, targets: &VolumeTargets) -> Result<f64> {
    targets.validate(phases.len())?;
    let r = targets.region.as_ref().ok_or(Error::EmptyMask)?;
    Ok(phases
        .phases()
        .iter()
        .zip(&r.targets)
        .map(|(p, t)| (fraction(p, Some((&r.mask, r.volume))) - t).powi(2))
        .sum())
}

/// Partial derivatives of every objective with respect to every phase.
/// `region` is empty when no region targets are set.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivities<R> {
    pub compliance: Vec<Field<R>>,
    pub volume: Vec<Field<R>>,
    pub unity: Vec<Field<R>>,
    pub region: Vec<Field<R>>,
}

/// Sensitivities of all objectives at `phases`, with `state` held fixed.
pub fn sensitivities<R: Real>(
    phases: &PhaseSet<R>,
    state: &Field<R>,
    mat: &MaterialModel,
    targets: &VolumeTargets,
) -> Result<Sensitivities<R>> {
    mat.validate(phases.len())?;
    targets.validate(phases.len())?;
    let grid = *phases.grid();
    state.same_grid(phases.phase(0))?;
    let n = grid.node_count();
    let vol = grid.cell_volumes();
    let omega = grid.domain_volume();

    // energy density of the state per unit property
    let density = match mat.kind {
        MaterialKind::Thermal => gradient_squared(state)?,
        MaterialKind::Elastic => {
            let (cl, cm) = lame(1.0, mat.poisson_ratio);
            let (tr2, ee) = strain_invariants(state)?;
            tr2.iter().zip(&ee).map(|(t, e)| cl * t + 2.0 * cm * e).collect()
        }
    };
    let raw = interpolate_raw(phases, mat);
    let e = mat.penalty;

    let compliance = phases
        .phases()
        .iter()
        .zip(&mat.properties)
        .map(|(phi, p)| {
            let v = (0..n)
                .map(|i| {
                    if raw[i] < mat.void_floor {
                        return R::zero();
                    }
                    let x = phi.values()[i].as_f64();
                    R::lit(e * p * x.powf(e - 1.0) * density[i] * vol[i])
                })
                .collect();
            Field::from_values(grid, 1, v)
        })
        .collect::<Result<Vec<_>>>()?;

    let fracs = volume_fractions(phases);
    let volume = fracs
        .iter()
        .zip(&targets.global)
        .map(|(f, t)| {
            let c = 2.0 * (f - t) / omega;
            Field::from_values(grid, 1, vol.iter().map(|v| R::lit(c * v)).collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let excess = unity_excess(phases);
    let du: Vec<R> = (0..n).map(|i| R::lit(2.0 * excess[i] * vol[i] / omega)).collect();
    let unity = vec![Field::from_values(grid, 1, du)?; phases.len()];

    let region = match &targets.region {
        None => Vec::new(),
        Some(r) => phases
            .phases()
            .iter()
            .zip(&r.targets)
            .map(|(phi, t)| {
                let c = 2.0 * (fraction(phi, Some((&r.mask, r.volume))) - t) / r.volume;
                let v = (0..n)
                    .map(|i| if r.mask[i] { R::lit(c * vol[i]) } else { R::zero() })
                    .collect();
                Field::from_values(grid, 1, v)
            })
            .collect::<Result<Vec<_>>>()?,
    };

    Ok(Sensitivities {
        compliance,
        volume,
        unity,
        region,
    })
}

/// `sum_i p_i phi_i^e` before flooring, in f64.
fn interpolate_raw<R: Real>(phases: &PhaseSet<R>, mat: &MaterialModel) -> Vec<f64> {
    let mut out = vec![0.0; phases.grid().node_count()];
    for (phi, p) in phases.phases().iter().zip(&mat.properties) {
        for (o, v) in out.iter_mut().zip(phi.values()) {
            *o += p * v.as_f64().powf(mat.penalty);
        }
    }
    out
}

/// Step weights of the design update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    /// `alpha_h` (thermal) or `alpha_m` (elastic).
    pub compliance: f64,
    pub volume: f64,
    pub unity: f64,
    #[serde(default)]
    pub region: f64,
    #[serde(default = "yes")]
    pub normalize_compliance: bool,
    /// `+1` descends on the fixed-state partial derivative, `-1` on its
    /// negation (the total derivative of a self-adjoint compliance).
    #[serde(default = "minus_one")]
    pub compliance_sign: f64,
}

fn yes() -> bool {
    true
}

fn minus_one() -> f64 {
    -1.0
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.compliance, self.volume, self.unity, self.region];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::param("weights", "all weights must be finite and non-negative"));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::param("weights", "at least one weight must be positive"));
        }
        if self.compliance_sign != 1.0 && self.compliance_sign != -1.0 {
            return Err(Error::param("compliance_sign", "must be 1 or -1"));
        }
        Ok(())
    }
}

/// The compliance part of the step for one phase, before the sign. `None`
/// when normalization is on and the sensitivity vanishes identically.
pub fn compliance_step<R: Real>(g: &Field<R>, w: &ObjectiveWeights) -> Option<Vec<R>> {
    let alpha = R::lit(w.compliance);
    if w.normalize_compliance {
        let m = g.max_abs();
        if m == R::zero() {
            return None;
        }
        Some(g.values().iter().map(|v| alpha * (*v / m)).collect())
    } else {
        Some(g.values().iter().map(|v| alpha * *v).collect())
    }
}

/// `phi_i <- clamp(phi_i - (s alpha_c g_i/max|g_i| + alpha_v dJ_v + alpha_1 dJ_1 + alpha_b dJ_b))`.
pub fn design_update<R: Real>(
    phases: &PhaseSet<R>,
    sens: &Sensitivities<R>,
    weights: &ObjectiveWeights,
) -> Result<PhaseSet<R>> {
    let count = phases.len();
    if sens.compliance.len() != count || sens.volume.len() != count || sens.unity.len() != count {
        return Err(Error::CountMismatch {
            expected: count,
            actual: sens.compliance.len(),
        });
    }
    if !sens.region.is_empty() && sens.region.len() != count {
        return Err(Error::CountMismatch {
            expected: count,
            actual: sens.region.len(),
        });
    }
    let sign = R::lit(weights.compliance_sign);
    let (av, a1, ab) = (R::lit(weights.volume), R::lit(weights.unity), R::lit(weights.region));
    let mut out = phases.clone();
    for i in 0..count {
        let comp = compliance_step(&sens.compliance[i], weights);
        let phi = out.phase_mut(i).values_mut();
        for (n, v) in phi.iter_mut().enumerate() {
            let mut step = av * sens.volume[i].values()[n] + a1 * sens.unity[i].values()[n];
            if let Some(r) = sens.region.get(i) {
                step += ab * r.values()[n];
            }
            if let Some(c) = &comp {
                step += sign * c[n];
            }
            *v -= step;
        }
        clamp_unit(phi);
    }
    if !out.all_finite() {
        return Err(Error::NonFinite {
            field: "phi".into(),
            step: 0,
        });
    }
    Ok(out)
}

/// Objective values at one loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub loop_index: usize,
    pub compliance: f64,
    pub volume: f64,
    pub unity: f64,
    pub region: f64,
    pub volume_fractions: Vec<f64>,
}

impl ObjectiveReport {
    pub fn evaluate<R: Real>(
        loop_index: usize,
        phases: &PhaseSet<R>,
        state: &Field<R>,
        mat: &MaterialModel,
        targets: &VolumeTargets,
    ) -> Result<Self> {
        Ok(ObjectiveReport {
            loop_index,
            compliance: compliance(state, phases, mat)?,
            volume: volume_objective(phases, targets)?,
            unity: unity_objective(phases),
            region: if targets.region.is_some() {
                region_objective(phases, targets)?
            } else {
                0.0
            },
            volume_fractions: volume_fractions(phases),
        })
    }
}
