//! The four built-in benchmark problems.
//!
//! Every preset runs on a small grid by default. The weights carry the node
//! count and the phase-field parameters the grid spacing of the full-size
//! problem, so refining a preset with `--nx` approaches the full-size run
//! without retuning anything.

use crate::config::*;
use crate::objectives::MaterialModel;
use crate::phase_field::{PerPhase, DEFAULT_GAMMA, DT3_FACTOR};
use crate::state_solver::AptForm;
use crate::{Error, Result};

pub const NAMES: [&str; 4] = ["heat2d", "mbb2d", "cantilever3d", "drone3d"];

pub fn by_name(name: &str) -> Result<ProblemConfig> {
    match name {
        "heat2d" => Ok(heat2d()),
        "mbb2d" => Ok(mbb2d()),
        "cantilever3d" => Ok(cantilever3d()),
        "drone3d" => Ok(drone3d()),
        _ => Err(Error::UnknownPreset {
            name: name.to_string(),
            valid: NAMES.join(", "),
        }),
    }
}

const VOID: f64 = 1e-6;

fn free() -> FaceSpec {
    FaceSpec::TractionFree
}

fn point(p: &[f64]) -> Selector {
    Selector::Point(p.to_vec())
}

fn solver(n_apt: usize, n_pt: usize, ndim: usize, apt_form: AptForm) -> SolverConfig {
    SolverConfig {
        n_apt,
        n_pt,
        dt1_factor: 1.0 / (2 * ndim) as f64,
        dt2_factor: 0.5,
        theta: 1.0,
        apt_form,
    }
}

fn phase_field(reference_spacing: f64) -> PhaseFieldConfig {
    PhaseFieldConfig {
        gamma: PerPhase::Shared(DEFAULT_GAMMA),
        mobility: PerPhase::Shared(1.0),
        dt3_factor: DT3_FACTOR,
        reference_spacing: Some(reference_spacing),
    }
}

fn weights(volume: f64, unity: f64, region: f64, reference_nodes: usize) -> WeightConfig {
    WeightConfig {
        compliance: 0.1,
        volume,
        unity,
        region,
        normalize_compliance: true,
        compliance_sign: -1.0,
        reference_nodes: Some(reference_nodes),
    }
}

fn schedule(max_loops: usize) -> ScheduleConfig {
    ScheduleConfig {
        max_loops,
        tolerance: 1e-3,
        window: 50,
        min_loops: 0,
        report_every: 10,
    }
}

/// Square plate with a uniform heat source, held at zero temperature on the
/// left and top edges and insulated on the others.
pub fn heat2d() -> ProblemConfig {
    ProblemConfig {
        name: "heat2d".into(),
        grid: GridConfig {
            dims: vec![128, 128],
            lengths: vec![4.0, 4.0],
        },
        boundary: BoundaryConfig {
            x_min: FaceSpec::Dirichlet { value: 0.0 },
            x_max: FaceSpec::NeumannZero,
            y_min: FaceSpec::NeumannZero,
            y_max: FaceSpec::Dirichlet { value: 0.0 },
            z_min: None,
            z_max: None,
            fix: vec![],
        },
        loads: LoadConfig {
            source: 0.01,
            forces: vec![],
        },
        material: MaterialModel::thermal(vec![1.0, VOID], 3.0),
        targets: TargetConfig {
            volume: vec![0.3, 0.7],
            region: None,
        },
        weights: weights(1e5, 1e4, 0.0, 512 * 512),
        solver: solver(500, 500, 2, AptForm::ExplicitDamping),
        phase_field: phase_field(4.0 / 511.0),
        schedule: schedule(1000),
        initial: InitialConfig {
            phases: vec![1.0, 1.0],
            state: 0.0,
        },
        output: OutputConfig::default(),
    }
}

/// 4 x 1 beam on two bottom rollers with a downward point load at the top
/// centre, five materials plus void.
pub fn mbb2d() -> ProblemConfig {
    let mut properties = vec![1.0, 0.775, 0.55, 0.325, 0.1];
    properties.push(VOID);
    let mut volume = vec![0.08; 5];
    volume.push(0.6);
    ProblemConfig {
        name: "mbb2d".into(),
        grid: GridConfig {
            dims: vec![129, 33],
            lengths: vec![4.0, 1.0],
        },
        boundary: BoundaryConfig {
            x_min: free(),
            x_max: free(),
            y_min: free(),
            y_max: free(),
            z_min: None,
            z_max: None,
            fix: vec![
                FixSpec {
                    at: point(&[0.0, 0.0]),
                    component: Some(1),
                    value: 0.0,
                },
                FixSpec {
                    at: point(&[4.0, 0.0]),
                    component: Some(1),
                    value: 0.0,
                },
            ],
        },
        loads: LoadConfig {
            source: 0.0,
            forces: vec![ForceSpec {
                at: point(&[2.0, 1.0]),
                force: vec![0.0, -1.0],
            }],
        },
        material: MaterialModel::elastic(properties, 0.3, 3.0),
        targets: TargetConfig { volume, region: None },
        weights: weights(1e4, 1e3, 0.0, 513 * 128),
        solver: solver(20, 20, 2, AptForm::SemiImplicitDamping),
        phase_field: phase_field(4.0 / 512.0),
        schedule: schedule(4000),
        initial: InitialConfig {
            phases: vec![0.5; 6],
            state: 0.0,
        },
        output: OutputConfig::default(),
    }
}

/// 2 x 2/15 x 2/3 beam clamped at x = 2 with an upward line load along the
/// centreline of the x = 0 face, three materials plus void.
pub fn cantilever3d() -> ProblemConfig {
    let (lx, ly, lz) = (2.0, 2.0 / 15.0, 2.0 / 3.0);
    ProblemConfig {
        name: "cantilever3d".into(),
        grid: GridConfig {
            dims: vec![64, 9, 22],
            lengths: vec![lx, ly, lz],
        },
        boundary: BoundaryConfig {
            x_min: free(),
            x_max: FaceSpec::Dirichlet { value: 0.0 },
            y_min: free(),
            y_max: free(),
            z_min: Some(free()),
            z_max: Some(free()),
            fix: vec![],
        },
        loads: LoadConfig {
            source: 0.0,
            forces: vec![ForceSpec {
                at: Selector::Box {
                    lo: vec![0.0, 0.0, lz / 2.0],
                    hi: vec![0.0, ly, lz / 2.0],
                },
                force: vec![0.0, 0.0, 1.0],
            }],
        },
        material: MaterialModel::elastic(vec![1.0, 0.6, 0.2, VOID], 0.3, 3.0),
        targets: TargetConfig {
            volume: vec![0.1, 0.1, 0.1, 0.7],
            region: None,
        },
        weights: weights(1e4, 1e3, 0.0, 256 * 17 * 85),
        solver: solver(100, 100, 3, AptForm::SemiImplicitDamping),
        phase_field: phase_field(lx / 255.0),
        schedule: schedule(1000),
        initial: InitialConfig {
            phases: vec![0.5; 4],
            state: 0.0,
        },
        output: OutputConfig::default(),
    }
}

/// 1 x 0.5 x 1 block on rollers at its four top corners with a point load at
/// the centre of the bottom face. A centred box covering a fifth of the
/// volume is kept empty.
pub fn drone3d() -> ProblemConfig {
    ProblemConfig {
        name: "drone3d".into(),
        grid: GridConfig {
            dims: vec![48, 24, 48],
            lengths: vec![1.0, 0.5, 1.0],
        },
        boundary: BoundaryConfig {
            x_min: free(),
            x_max: free(),
            y_min: free(),
            y_max: free(),
            z_min: Some(free()),
            z_max: Some(free()),
            fix: [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
                .iter()
                .map(|[x, z]| FixSpec {
                    at: point(&[*x, 0.5, *z]),
                    component: Some(1),
                    value: 0.0,
                })
                .collect(),
        },
        loads: LoadConfig {
            source: 0.0,
            forces: vec![ForceSpec {
                at: point(&[0.5, 0.0, 0.5]),
                force: vec![0.0, -1.0, 0.0],
            }],
        },
        material: MaterialModel::elastic(vec![1.0, VOID], 0.3, 3.0),
        targets: TargetConfig {
            volume: vec![0.1, 0.9],
            region: Some(RegionConfig {
                boxes: vec![Selector::Box {
                    lo: vec![0.25, 0.05, 0.25],
                    hi: vec![0.75, 0.45, 0.75],
                }],
                targets: vec![0.0, 1.0],
            }),
        },
        weights: weights(1e4, 1e3, 1e4, 128 * 64 * 128),
        solver: solver(50, 50, 3, AptForm::SemiImplicitDamping),
        phase_field: phase_field(1.0 / 127.0),
        schedule: schedule(1000),
        initial: InitialConfig {
            phases: vec![0.5; 2],
            state: 0.0,
        },
        output: OutputConfig::default(),
    }
}
