//! Problem configuration files.
//!
//! A config is a TOML document. When it names a `preset`, the file's tables
//! are merged key by key over that preset, so a file only needs the values it
//! changes:
//!
//! ```toml
//! preset = "heat2d"
//!
//! [grid]
//! dims = [64, 64]
//!
//! [schedule]
//! max_loops = 200
//! ```
//!
//! Without a preset every section must be given. [`ProblemConfig::build`]
//! turns a validated config into a [`Problem`] and a [`LoopSchedule`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::{BoundarySpec, FaceCondition, Field, Grid, NodeConstraint};
use crate::objectives::{MaterialKind, MaterialModel, ObjectiveWeights, RegionTargets, VolumeTargets};
use crate::optimizer::{Convergence, LoopSchedule, Problem};
use crate::phase_field::{CahnHilliardParams, PerPhase, PhaseSet};
use crate::presets;
use crate::state_solver::{AptForm, PTParams};
use crate::{Error, Real, Result};

/// Slack allowed when checking that volume targets sum to at most one.
const TARGET_SUM_SLACK: f64 = 1e-9;

pub const CH_STABILITY_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub grid: GridConfig,
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub loads: LoadConfig,
    pub material: MaterialModel,
    pub targets: TargetConfig,
    pub weights: WeightConfig,
    pub solver: SolverConfig,
    pub phase_field: PhaseFieldConfig,
    pub schedule: ScheduleConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaceSpec {
    Dirichlet { value: f64 },
    NeumannZero,
    TractionFree,
    /// Fixes one displacement component (0 = x) to zero.
    Roller { component: usize },
}

impl From<FaceSpec> for FaceCondition {
    fn from(f: FaceSpec) -> Self {
        match f {
            FaceSpec::Dirichlet { value } => FaceCondition::Dirichlet(value),
            FaceSpec::NeumannZero => FaceCondition::NeumannZero,
            FaceSpec::TractionFree => FaceCondition::TractionFree,
            FaceSpec::Roller { component } => FaceCondition::Roller(component),
        }
    }
}

/// Nodes picked by position: the node nearest a point, or every node in a
/// closed box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Selector {
    Point(Vec<f64>),
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Selector {
    pub fn nodes(&self, grid: &Grid) -> Result<Vec<usize>> {
        let d = grid.ndim();
        let check = |name: &str, p: &[f64]| {
            if p.len() != d {
                return Err(Error::param(name, format!("expected {d} coordinates, got {}", p.len())));
            }
            for (a, x) in p.iter().enumerate() {
                let l = grid.lengths()[a];
                if !(*x >= -1e-9 * l && *x <= l * (1.0 + 1e-9)) {
                    return Err(Error::param(name, format!("coordinate {x} lies outside [0, {l}]")));
                }
            }
            Ok(())
        };
        match self {
            Selector::Point(p) => {
                check("point", p)?;
                Ok(vec![grid.nearest_node(p)])
            }
            Selector::Box { lo, hi } => {
                check("box.lo", lo)?;
                check("box.hi", hi)?;
                // a box thinner than a cell along some axis is moved onto the
                // nearest grid line so that it still selects nodes
                let (mut lo, mut hi) = (lo.clone(), hi.clone());
                for a in 0..d {
                    let h = grid.spacing(a);
                    if hi[a] - lo[a] < h {
                        let x = (0.5 * (lo[a] + hi[a]) / h).round() * h;
                        lo[a] = x;
                        hi[a] = x;
                    }
                }
                let nodes = grid.nodes_in_box(&lo, &hi);
                if nodes.is_empty() {
                    return Err(Error::EmptyMask);
                }
                Ok(nodes)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixSpec {
    pub at: Selector,
    /// Omitted: every component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<usize>,
    #[serde(default)]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub x_min: FaceSpec,
    pub x_max: FaceSpec,
    pub y_min: FaceSpec,
    pub y_max: FaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_min: Option<FaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<FaceSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fix: Vec<FixSpec>,
}

impl BoundaryConfig {
    pub fn build(&self, grid: &Grid) -> Result<BoundarySpec> {
        let mut faces: Vec<FaceCondition> =
            [self.x_min, self.x_max, self.y_min, self.y_max].iter().map(|f| (*f).into()).collect();
        match (grid.ndim(), self.z_min, self.z_max) {
            (2, None, None) => {}
            (3, Some(lo), Some(hi)) => faces.extend([FaceCondition::from(lo), hi.into()]),
            (2, _, _) => return Err(Error::InvalidBoundary("z faces given for a 2D grid".into())),
            _ => return Err(Error::InvalidBoundary("a 3D grid needs z_min and z_max".into())),
        }
        let mut overrides = Vec::new();
        for fix in &self.fix {
            for node in fix.at.nodes(grid)? {
                overrides.push(NodeConstraint {
                    node,
                    component: fix.component,
                    value: fix.value,
                });
            }
        }
        BoundarySpec::new(faces, overrides)
    }
}

/// A force applied at selected nodes. A box selector splits the total force
/// equally among its nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSpec {
    pub at: Selector,
    pub force: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    /// Uniform heat source.
    #[serde(default)]
    pub source: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forces: Vec<ForceSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub boxes: Vec<Selector>,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub volume: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub compliance: f64,
    pub volume: f64,
    pub unity: f64,
    #[serde(default)]
    pub region: f64,
    #[serde(default = "yes")]
    pub normalize_compliance: bool,
    pub compliance_sign: f64,
    /// Node count the volume, unity and region weights were tuned for. On a
    /// grid with `N` nodes these weights are multiplied by `N / reference_nodes`,
    /// which keeps their per-node step unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_nodes: Option<usize>,
}

fn yes() -> bool {
    true
}

impl WeightConfig {
    pub fn effective(&self, grid: &Grid) -> ObjectiveWeights {
        let scale = self
            .reference_nodes
            .map_or(1.0, |r| grid.node_count() as f64 / r as f64);
        ObjectiveWeights {
            compliance: self.compliance,
            volume: self.volume * scale,
            unity: self.unity * scale,
            region: self.region * scale,
            normalize_compliance: self.normalize_compliance,
            compliance_sign: self.compliance_sign,
        }
    }
}

/// Pseudo-time steps are given relative to the smallest spacing `h`:
/// `dt1 = dt1_factor h^2`, `dt2 = dt2_factor h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub n_apt: usize,
    pub n_pt: usize,
    pub dt1_factor: f64,
    pub dt2_factor: f64,
    pub theta: f64,
    pub apt_form: AptForm,
}

/// `dt3 = dt3_factor h^4`. With `reference_spacing = h_ref` the interface
/// parameter and step are rescaled as `gamma (h / h_ref)^2` and
/// `dt3_factor h_ref^2 h^2`, which keeps the interface width and the per-step
/// evolution the same when measured in grid cells. The step is capped at
/// [`CH_STABILITY_MARGIN`] times the explicit stability limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFieldConfig {
    pub gamma: PerPhase,
    pub mobility: PerPhase,
    pub dt3_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_spacing: Option<f64>,
}

impl PhaseFieldConfig {
    pub fn effective(&self, grid: &Grid, phases: usize) -> CahnHilliardParams {
        let mut p = self.uncapped(grid);
        p.dt3 = p.dt3.min(CH_STABILITY_MARGIN * p.stable_dt(grid, phases));
        p
    }

    fn uncapped(&self, grid: &Grid) -> CahnHilliardParams {
        let h = grid.min_spacing();
        match self.reference_spacing {
            None => CahnHilliardParams {
                mobility: self.mobility.clone(),
                gamma: self.gamma.clone(),
                dt3: self.dt3_factor * h.powi(4),
            },
            Some(r) => {
                let s = (h / r).powi(2);
                let gamma = match &self.gamma {
                    PerPhase::Shared(g) => PerPhase::Shared(g * s),
                    PerPhase::Each(v) => PerPhase::Each(v.iter().map(|g| g * s).collect()),
                };
                CahnHilliardParams {
                    mobility: self.mobility.clone(),
                    gamma,
                    dt3: self.dt3_factor * r * r * h * h,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub max_loops: usize,
    pub tolerance: f64,
    pub window: usize,
    #[serde(default)]
    pub min_loops: usize,
    pub report_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub phases: Vec<f64>,
    #[serde(default)]
    pub state: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(format!("expected f32 or f64, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            precision: Precision::F64,
            threads: 1,
        }
    }
}

/// Recursively overlays `top` on `base`: tables merge, everything else is
/// replaced.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl ProblemConfig {
    /// Parses a config document, merging it over its preset if it names one.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let table = match table.remove("preset") {
            None => table,
            Some(toml::Value::String(name)) => {
                let base = presets::by_name(&name)?;
                let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Parse(e.to_string()))?;
                merge(&mut merged, table);
                merged
            }
            Some(other) => {
                return Err(Error::param("preset", format!("expected a preset name, got {other}")));
            }
        };
        let config: ProblemConfig = table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(&self.grid.dims, &self.grid.lengths)
    }

    pub fn phase_count(&self) -> usize {
        self.material.properties.len()
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let n = self.phase_count();
        self.material.validate(n)?;
        let counts = [
            ("targets.volume", self.targets.volume.len()),
            ("initial.phases", self.initial.phases.len()),
        ];
        for (name, c) in counts {
            if c != n {
                return Err(Error::param(name, format!("expected {n} entries (one per phase), got {c}")));
            }
        }
        let sum: f64 = self.targets.volume.iter().sum();
        if sum > 1.0 + TARGET_SUM_SLACK {
            return Err(Error::param("targets.volume", format!("targets sum to {sum}, more than 1")));
        }
        if let Some(r) = &self.targets.region {
            if r.boxes.is_empty() {
                return Err(Error::EmptyMask);
            }
            for b in &r.boxes {
                b.nodes(&grid)?;
            }
        }
        self.boundary.build(&grid)?;
        self.loads(&grid)?;
        self.targets(&grid)?.validate(n)?;
        self.weights.effective(&grid).validate()?;
        self.schedule(&grid)?;
        if self.output.threads == 0 {
            return Err(Error::param("output.threads", "must be at least 1"));
        }
        Ok(())
    }

    fn loads(&self, grid: &Grid) -> Result<Vec<f64>> {
        let n = grid.node_count();
        match self.material.kind {
            MaterialKind::Thermal => {
                if !self.loads.forces.is_empty() {
                    return Err(Error::param("loads.forces", "forces need an elastic material"));
                }
                Ok(vec![self.loads.source; n])
            }
            MaterialKind::Elastic => {
                if self.loads.source != 0.0 {
                    return Err(Error::param("loads.source", "a heat source needs a thermal material"));
                }
                let d = grid.ndim();
                let mut v = vec![0.0; d * n];
                for f in &self.loads.forces {
                    if f.force.len() != d {
                        return Err(Error::param("loads.forces.force", format!("expected {d} components")));
                    }
                    let nodes = f.at.nodes(grid)?;
                    let share = 1.0 / nodes.len() as f64;
                    for node in nodes {
                        // body load density entering the residual as div(sigma) - load
                        let vol = grid.cell_volume(node);
                        for c in 0..d {
                            v[c * n + node] -= f.force[c] * share / vol;
                        }
                    }
                }
                Ok(v)
            }
        }
    }

    pub fn targets(&self, grid: &Grid) -> Result<VolumeTargets> {
        let mut t = VolumeTargets::new(self.targets.volume.clone());
        if let Some(r) = &self.targets.region {
            let mut nodes = Vec::new();
            for b in &r.boxes {
                nodes.extend(b.nodes(grid)?);
            }
            nodes.sort_unstable();
            nodes.dedup();
            t = t.with_region(RegionTargets::new(grid, &nodes, r.targets.clone())?);
        }
        Ok(t)
    }

    pub fn schedule(&self, grid: &Grid) -> Result<LoopSchedule> {
        let h = grid.min_spacing();
        let s = &self.solver;
        let schedule = LoopSchedule {
            pt: PTParams {
                dt1: s.dt1_factor * h * h,
                dt2: s.dt2_factor * h,
                theta: s.theta,
                n_apt: s.n_apt,
                n_pt: s.n_pt,
                apt_form: s.apt_form,
            },
            ch: self.phase_field.effective(grid, self.phase_count()),
            max_loops: self.schedule.max_loops,
            convergence: Convergence {
                tolerance: self.schedule.tolerance,
                window: self.schedule.window,
                min_loops: self.schedule.min_loops,
            },
            report_every: self.schedule.report_every,
            evolve_design: true,
        };
        schedule.validate(self.phase_count())?;
        Ok(schedule)
    }

    /// The problem in precision `R`, ready for [`crate::optimizer::run`].
    pub fn build<R: Real>(&self) -> Result<(Problem<R>, LoopSchedule)> {
        self.validate()?;
        let grid = self.grid()?;
        let comps = match self.material.kind {
            MaterialKind::Thermal => 1,
            MaterialKind::Elastic => grid.ndim(),
        };
        let loads = Field::from_values(grid, comps, self.loads(&grid)?.into_iter().map(R::lit).collect())?;
        let bc = self.boundary.build(&grid)?;
        let state = Field::constant(grid, comps, R::lit(self.initial.state));
        let mut state_values = state.into_values();
        bc.constraints::<R>(&grid, comps)?.apply(&mut state_values);
        let problem = Problem {
            grid,
            bc,
            loads,
            material: self.material.clone(),
            targets: self.targets(&grid)?,
            weights: self.weights.effective(&grid),
            phases: PhaseSet::uniform(grid, &self.initial.phases)?,
            state: Field::from_values(grid, comps, state_values)?,
        };
        problem.validate()?;
        Ok((problem, self.schedule(&grid)?))
    }

    /// Sets the node count along `axis` and rescales the other axes that are
    /// not in `fixed` so the grid keeps its proportions.
    pub fn resize(&mut self, axis: usize, n: usize, fixed: &[usize]) -> Result<()> {
        let dims = &mut self.grid.dims;
        if axis >= dims.len() {
            return Err(Error::param("grid.dims", format!("the grid has no axis {axis}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("axis {axis} needs at least 3 nodes, got {n}")));
        }
        let ratio = (n - 1) as f64 / (dims[axis] - 1) as f64;
        for a in 0..dims.len() {
            if a == axis {
                continue;
            }
            if !fixed.contains(&a) {
                dims[a] = ((((dims[a] - 1) as f64) * ratio).round() as usize + 1).max(3);
            }
        }
        dims[axis] = n;
        Ok(())
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ProblemConfig::from_toml_str(&text)
}
