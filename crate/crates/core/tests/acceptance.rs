//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so that every criterion reports
//! PASS or FAIL with its measured numbers. Failures do not fail the test
//! target unless `PETTO_ACCEPTANCE_STRICT` is set; `PETTO_ACCEPTANCE_ONLY=AC3,AC5`
//! restricts the run to some criteria.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use petto::config::ProblemConfig;
use petto::grid::{BoundarySpec, Face, FaceCondition, Field, Grid, NodeConstraint};
use petto::objectives::{
    compliance, design_update, region_objective, sensitivities, unity_objective, volume_objective, MaterialModel,
    ObjectiveWeights, RegionTargets, Sensitivities, VolumeTargets,
};
use petto::optimizer::{phase_separation_metric, run, HistoryRecord};
use petto::phase_field::{ch_step, ginzburg_landau_energy, mass, step_unclamped, CahnHilliardParams, PhaseSet};
use petto::presets;
use petto::state_solver::{
    apt_step, iterations_to_tolerance, pt_step, AptForm, ElasticMaterialField, ElasticOperator, HeatOperator,
    PTParams, StateHistory, StateOperator, StepKind,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit_square(n: usize) -> Grid {
    Grid::new_2d(n, n, 1.0, 1.0).unwrap()
}

fn all_dirichlet(ndim: usize) -> BoundarySpec {
    BoundarySpec::uniform(ndim, FaceCondition::Dirichlet(0.0))
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x >= lo && x <= hi
}

// ---------------------------------------------------------------- AC1

fn iteration_scaling() -> Outcome {
    let sizes = [32, 64, 128];
    let mut pt = Vec::new();
    let mut apt = Vec::new();
    for &n in &sizes {
        let g = unit_square(n);
        let op = HeatOperator::new(&Field::scalar(g, 1.0), &Field::scalar(g, 1.0), &all_dirichlet(2)).unwrap();
        let params = PTParams::for_grid(&g, 1, 1, AptForm::ExplicitDamping);
        for (kind, out) in [(StepKind::Pt, &mut pt), (StepKind::Apt, &mut apt)] {
            let mut hist = StateHistory::at_rest(Field::zeros(g, 1));
            let k = iterations_to_tolerance(&mut hist, &op, &params, kind, 1e-8, 5_000_000).unwrap();
            out.push(k.expect("no convergence") as f64);
        }
    }
    let ratios = |v: &[f64]| vec![v[1] / v[0], v[2] / v[1]];
    let (rp, ra) = (ratios(&pt), ratios(&apt));
    let pass = rp.iter().all(|r| within(*r, 3.2, 5.2)) && ra.iter().all(|r| within(*r, 1.6, 2.6));
    outcome(
        pass,
        format!("PT iterations {pt:?} ratios {rp:.2?} (need 3.2..5.2); APT iterations {apt:?} ratios {ra:.2?} (need 1.6..2.6)"),
    )
}

// ---------------------------------------------------------------- AC2

fn random_phases(g: Grid, k: usize, rng: &mut StdRng) -> PhaseSet<f64> {
    let n = g.node_count();
    let phases = (0..k)
        .map(|_| Field::from_values(g, 1, (0..n).map(|_| rng.gen_range(0.2..0.9)).collect()).unwrap())
        .collect();
    PhaseSet::new(phases).unwrap()
}

/// Random smooth field: a constant plus cosine modes up to order 2 per axis.
/// The amplitude keeps compliance O(1), so the difference quotient loses
/// about `1e-16 J / step` to rounding, well under the absolute floor.
fn random_field(g: Grid, c: usize, rng: &mut StdRng) -> Field<f64> {
    let d = g.ndim();
    let modes: Vec<[usize; 3]> = (0..27)
        .map(|k| [k % 3, (k / 3) % 3, k / 9])
        .filter(|m| m[2] == 0 || d == 3)
        .collect();
    let coef: Vec<Vec<f64>> = (0..c)
        .map(|_| modes.iter().map(|_| rng.gen_range(-0.1..0.1)).collect())
        .collect();
    Field::from_fn_vector(g, c, |x, comp| {
        modes
            .iter()
            .zip(&coef[comp])
            .map(|(m, a)| a * (0..3).map(|i| (m[i] as f64 * PI * x[i]).cos()).product::<f64>())
            .sum()
    })
}

/// Largest violation of `|a - f| <= max(1e-5 |f|, 1e-10)` over all entries;
/// values at most 1 pass.
fn worst_ratio(
    phases: &PhaseSet<f64>,
    analytic: &[Field<f64>],
    objective: &dyn Fn(&PhaseSet<f64>) -> f64,
) -> f64 {
    let step = 1e-6;
    let mut worst: f64 = 0.0;
    for (i, grad) in analytic.iter().enumerate() {
        for node in 0..phases.grid().node_count() {
            let mut plus = phases.clone();
            plus.phase_mut(i).values_mut()[node] += step;
            let mut minus = phases.clone();
            minus.phase_mut(i).values_mut()[node] -= step;
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * step);
            let a = grad.values()[node];
            worst = worst.max((a - fd).abs() / (1e-5 * fd.abs()).max(1e-10));
        }
    }
    worst
}

fn gradient_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20_240_917);
    let mut worst = [0.0f64; 5];
    let names = ["J_h", "J_m", "J_v", "J_1", "J_b"];
    let mut instances = 0;
    let grids: Vec<Grid> = std::iter::repeat_n(unit_square(8), 20)
        .chain([Grid::new_3d([6, 6, 6], [1.0, 1.0, 1.0]).unwrap()])
        .collect();
    for g in grids {
        instances += 1;
        let d = g.ndim();
        let phases = random_phases(g, 3, &mut rng);
        let lo: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..0.4)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.3..0.6)).collect();
        let region = RegionTargets::new(&g, &g.nodes_in_box(&lo, &hi), vec![0.1, 0.3, 0.6]).unwrap();
        let targets = VolumeTargets::new((0..3).map(|_| rng.gen_range(0.1..0.4)).collect()).with_region(region);

        let thermal = MaterialModel::thermal(vec![1.0, 0.5, 0.2], 3.0);
        let t = random_field(g, 1, &mut rng);
        let s = sensitivities(&phases, &t, &thermal, &targets).unwrap();
        let cases: [(&[Field<f64>], Box<dyn Fn(&PhaseSet<f64>) -> f64>); 4] = [
            (&s.compliance, Box::new(|p: &PhaseSet<f64>| compliance(&t, p, &thermal).unwrap())),
            (&s.volume, Box::new(|p: &PhaseSet<f64>| volume_objective(p, &targets).unwrap())),
            (&s.unity, Box::new(|p: &PhaseSet<f64>| unity_objective(p))),
            (&s.region, Box::new(|p: &PhaseSet<f64>| region_objective(p, &targets).unwrap())),
        ];
        for ((grad, f), slot) in cases.iter().zip([0, 2, 3, 4]) {
            worst[slot] = worst[slot].max(worst_ratio(&phases, grad, f.as_ref()));
        }

        let elastic = MaterialModel::elastic(vec![1.0, 0.6, 0.3], 0.3, 3.0);
        let u = random_field(g, d, &mut rng);
        let s = sensitivities(&phases, &u, &elastic, &targets).unwrap();
        let f = |p: &PhaseSet<f64>| compliance(&u, p, &elastic).unwrap();
        worst[1] = worst[1].max(worst_ratio(&phases, &s.compliance, &f));
    }
    let pass = worst.iter().all(|w| *w <= 1.0);
    let detail: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.2e}")).collect();
    outcome(
        pass,
        format!(
            "{instances} instances (20 of 8x8, one 6x6x6); worst error / allowed: {}",
            detail.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- AC3

fn cahn_hilliard() -> Outcome {
    let g = unit_square(64);
    let mut rng = StdRng::seed_from_u64(7);
    let mut phi = Field::from_values(g, 1, (0..g.node_count()).map(|_| rng.gen_range(0.45..0.55)).collect()).unwrap();
    let params = CahnHilliardParams::for_grid(&g);
    let gamma = params.gamma.get(0);
    let m0 = mass(&phi);
    let mut drift: f64 = 0.0;
    let mut energies = vec![ginzburg_landau_energy(&phi, gamma)];
    for step in 1..=1000 {
        phi = step_unclamped(&phi, 1.0, gamma, params.dt3).unwrap();
        drift = drift.max(((mass(&phi) - m0) / m0).abs());
        if step % 100 == 0 {
            energies.push(ginzburg_landau_energy(&phi, gamma));
        }
    }
    let descending = energies.windows(2).all(|w| w[1] <= w[0] + 1e-8 * w[0].abs());
    let lower = energies[10] < energies[0];
    let pass = drift <= 1e-10 && descending && lower;
    outcome(
        pass,
        format!(
            "mass drift {drift:.2e} (<= 1e-10); energy {:.6e} -> {:.6e}, non-increasing per 100 steps: {descending}",
            energies[0], energies[10]
        ),
    )
}

// ---------------------------------------------------------------- AC4

fn solve_steady<Op: StateOperator<f64>>(op: &Op, params: &PTParams, start: Field<f64>) -> Field<f64> {
    let mut hist = StateHistory::at_rest(start);
    iterations_to_tolerance(&mut hist, op, params, StepKind::Apt, 1e-12, 2_000_000)
        .unwrap()
        .expect("steady solve did not converge");
    hist.current
}

fn max_error(a: &Field<f64>, exact: impl Fn([f64; 3], usize) -> f64) -> f64 {
    let g = a.grid();
    let n = g.node_count();
    (0..a.components() * n)
        .map(|e| (a.values()[e] - exact(g.coords(e % n), e / n)).abs())
        .fold(0.0, f64::max)
}

fn heat_error(n: usize) -> f64 {
    let g = unit_square(n);
    let exact = |x: [f64; 3]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let kappa = Field::from_fn(g, |x| 1.0 + 0.5 * x[0] * x[1]);
    // source = -div(kappa grad u)
    let source = Field::from_fn(g, |x| {
        let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
        let k = 1.0 + 0.5 * x[0] * x[1];
        2.0 * PI * PI * k * sx * sy - 0.5 * PI * (x[1] * cx * sy + x[0] * sx * cy)
    });
    let op = HeatOperator::new(&kappa, &source, &all_dirichlet(2)).unwrap();
    let params = PTParams::for_grid(&g, 1, 1, AptForm::ExplicitDamping);
    let t = solve_steady(&op, &params, Field::zeros(g, 1));
    max_error(&t, |x, _| exact(x))
}

fn elastic_exact(x: [f64; 3], c: usize) -> f64 {
    let (sx, sy, s2x) = ((PI * x[0]).sin(), (PI * x[1]).sin(), (2.0 * PI * x[0]).sin());
    if c == 0 {
        sx * sy
    } else {
        s2x * sy
    }
}

fn elastic_error(n: usize) -> f64 {
    let g = unit_square(n);
    let (e, nu) = (1.0, 0.3);
    let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let p2 = PI * PI;
    // loads = div(sigma(u_exact)) for u_x = sin(pi x) sin(pi y), u_y = sin(2 pi x) sin(pi y)
    let loads = Field::from_fn_vector(g, 2, |x, c| {
        let (sx, sy, cx, cy) = ((PI * x[0]).sin(), (PI * x[1]).sin(), (PI * x[0]).cos(), (PI * x[1]).cos());
        let (s2x, c2x) = ((2.0 * PI * x[0]).sin(), (2.0 * PI * x[0]).cos());
        let uxx = -p2 * sx * sy;
        let uxy_x = p2 * cx * cy;
        let uyy_x = -p2 * sx * sy;
        let vxx = -4.0 * p2 * s2x * sy;
        let vxy = 2.0 * p2 * c2x * cy;
        let vyy = -p2 * s2x * sy;
        if c == 0 {
            mu * (uxx + uyy_x) + (lam + mu) * (uxx + vxy)
        } else {
            mu * (vxx + vyy) + (lam + mu) * (uxy_x + vyy)
        }
    });
    let mat = ElasticMaterialField::from_youngs(&Field::scalar(g, e), nu).unwrap();
    let op = ElasticOperator::new(&mat, &loads, &all_dirichlet(2)).unwrap();
    let params = PTParams::for_grid(&g, 1, 1, AptForm::SemiImplicitDamping);
    let u = solve_steady(&op, &params, Field::zeros(g, 2));
    max_error(&u, elastic_exact)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn solver_order() -> Outcome {
    let levels = [17, 33, 65];
    let heat: Vec<f64> = levels.iter().map(|&n| heat_error(n)).collect();
    let elastic: Vec<f64> = levels.iter().map(|&n| elastic_error(n)).collect();
    let ratios = |e: &[f64]| vec![e[0] / e[1], e[1] / e[2]];
    let (rh, re) = (ratios(&heat), ratios(&elastic));
    let pass = rh.iter().chain(&re).all(|r| within(*r, 3.5, 4.5));
    outcome(
        pass,
        format!(
            "heat errors {} ratios {rh:.2?}; elasticity errors {} ratios {re:.2?} (need 3.5..4.5)",
            sci(&heat),
            sci(&elastic)
        ),
    )
}

// ---------------------------------------------------------------- AC5 / AC6

fn relative_change_over_tail(history: &[HistoryRecord], loops: usize) -> f64 {
    let start = loops - loops / 10;
    let at = |l: usize| history.iter().find(|r| r.report.loop_index == l).unwrap().report.compliance;
    let (a, b) = (at(start), at(loops));
    (b - a).abs() / a.abs()
}

fn run_config(config: &ProblemConfig) -> (petto::OptimizationResult<f64>, usize) {
    let (problem, mut schedule) = config.build::<f64>().unwrap();
    schedule.report_every = 1;
    schedule.convergence.min_loops = schedule.max_loops;
    let result = run(&problem, &schedule).unwrap();
    (result, schedule.max_loops)
}

fn heat_benchmark() -> Outcome {
    let config = presets::heat2d();
    assert_eq!(config.grid.dims, vec![128, 128]);
    let (result, loops) = run_config(&config);
    let last = result.history.last().unwrap();
    let vf = &last.report.volume_fractions;
    let vf_ok = vf.iter().zip(&config.targets.volume).all(|(v, t)| (v - t).abs() <= 0.02);
    let sep = phase_separation_metric(&result.phases);
    let change = relative_change_over_tail(&result.history, loops);
    let early = &result.history[..loops / 10];
    let peak = early.iter().map(|r| r.residual).fold(0.0, f64::max);
    let drop = last.residual / peak;
    let checks = [vf_ok, sep >= 0.7, change < 0.01, drop <= 1e-2];
    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    outcome(
        checks.iter().all(|c| *c),
        format!(
            "{loops} loops at 128x128: (a) vf {vf:.4?} vs (0.3, 0.7) +-0.02 {}; (b) separation {sep:.3} >= 0.7 {}; \
             (c) compliance change over final 10% {:.3}% < 1% {}; (d) residual {:.2e} / early peak {peak:.2e} = {drop:.2e} <= 1e-2 {}",
            mark(checks[0]),
            mark(checks[1]),
            100.0 * change,
            mark(checks[2]),
            last.residual,
            mark(checks[3])
        ),
    )
}

const MBB_LOOPS: usize = 12_000;

fn mbb_config() -> ProblemConfig {
    let mut c = presets::mbb2d();
    c.material = MaterialModel::elastic(vec![1.0, 0.55, 1e-6], 0.3, 3.0);
    c.targets.volume = vec![0.2, 0.2, 0.6];
    c.initial.phases = vec![0.5; 3];
    c.schedule.max_loops = MBB_LOOPS;
    c
}

fn mirror_asymmetry(f: &Field<f64>) -> f64 {
    let [nx, ny, _] = f.grid().dims3();
    let v = f.values();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..ny {
        for i in 0..nx {
            num += (v[j * nx + i] - v[j * nx + nx - 1 - i]).abs();
            den += v[j * nx + i].abs();
        }
    }
    num / den
}

fn mbb_benchmark() -> Outcome {
    let config = mbb_config();
    assert_eq!(config.grid.dims, vec![129, 33]);
    let (result, loops) = run_config(&config);
    let last = result.history.last().unwrap();
    let vf = &last.report.volume_fractions;
    let vf_ok = vf.iter().zip(&config.targets.volume).all(|(v, t)| (v - t).abs() <= 0.03);
    let change = relative_change_over_tail(&result.history, loops);
    let asym = mirror_asymmetry(&result.property);
    let pass = vf_ok && change < 0.02 && asym <= 0.05;
    outcome(
        pass,
        format!(
            "{loops} loops at 129x33, E = (1, 0.55, void): vf {vf:.4?} vs (0.2, 0.2, 0.6) +-0.03; \
             compliance change over final 10% {:.3}% (< 2%); mirror L1 asymmetry of E {asym:.2e} (<= 0.05)",
            100.0 * change
        ),
    )
}

// ---------------------------------------------------------------- AC7

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_petto"))
        .args(args)
        .env_remove("PETTO_OUT")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn deterministic_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "timing.csv")
        .collect();
    names.sort();
    for n in &names {
        let (x, y) = (std::fs::read(a.join(n)), std::fs::read(b.join(n)));
        if x.is_err() || x.ok() != y.ok() {
            return Err(format!("{} differs", n.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 4] = [
        ("heat2d", &["--nx", "32", "--loops", "20"]),
        ("mbb2d", &["--nx", "65", "--loops", "40"]),
        ("cantilever3d", &["--nx", "24", "--loops", "5"]),
        ("drone3d", &["--nx", "12", "--loops", "5"]),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (preset, extra) in runs {
        let outs: Vec<String> = (0..2)
            .map(|k| dir.path().join(format!("{preset}-{k}")).to_string_lossy().into_owned())
            .collect();
        for out in &outs {
            let mut args = vec!["run", "--preset", preset, "--threads", "1", "--precision", "f64", "--quiet", "--out", out];
            args.extend_from_slice(extra);
            if !cli(&args) {
                pass = false;
                notes.push(format!("{preset}: run failed"));
            }
        }
        match deterministic_files(Path::new(&outs[0]), Path::new(&outs[1])) {
            Ok(k) => notes.push(format!("{preset}: {k} files identical")),
            Err(e) => {
                pass = false;
                notes.push(format!("{preset}: {e}"));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- AC8

fn constraints_hold() -> Result<(), String> {
    let g = Grid::new_2d(20, 14, 1.0, 0.7).unwrap();
    let n = g.node_count();

    let bc = BoundarySpec::uniform(2, FaceCondition::NeumannZero)
        .with_face(Face::parse("x_min").unwrap(), FaceCondition::Dirichlet(0.7))
        .with_constraint(NodeConstraint {
            node: g.index([10, 7, 0]),
            component: None,
            value: -0.3,
        });
    let kappa = Field::from_fn(g, |x| 1.0 + x[0] * x[1]);
    let op = HeatOperator::new(&kappa, &Field::scalar(g, 2.0), &bc).unwrap();
    let params = PTParams::for_grid(&g, 1, 1, AptForm::ExplicitDamping);
    let fixed = bc.constraints::<f64>(&g, 1).unwrap();
    let mut hist = StateHistory::at_rest(Field::from_fn(g, |x| x[0] - x[1]));
    for step in 0..200 {
        let r = op.residual(&hist.current);
        hist = if step % 2 == 0 {
            StateHistory::at_rest(pt_step(&hist.current, &r, params.dt1, &fixed).unwrap())
        } else {
            apt_step(&hist, &r, params.dt2, params.theta, params.apt_form, &fixed).unwrap()
        };
        for &(e, v) in fixed.entries() {
            if hist.current.values()[e] != v {
                return Err(format!("heat entry {e} drifted at step {step}"));
            }
        }
    }

    let bc = BoundarySpec::uniform(2, FaceCondition::TractionFree)
        .with_face(Face::parse("y_min").unwrap(), FaceCondition::Roller(1))
        .with_face(Face::parse("x_max").unwrap(), FaceCondition::Dirichlet(0.25))
        .with_constraint(NodeConstraint {
            node: 0,
            component: Some(0),
            value: 0.0,
        });
    let mat = ElasticMaterialField::from_youngs(&Field::from_fn(g, |x| 0.5 + x[1]), 0.3).unwrap();
    let loads = Field::from_fn_vector(g, 2, |x, c| if c == 1 { 0.1 * x[0] } else { 0.0 });
    let op = ElasticOperator::new(&mat, &loads, &bc).unwrap();
    let params = PTParams::for_grid(&g, 1, 1, AptForm::SemiImplicitDamping);
    let fixed = bc.constraints::<f64>(&g, 2).unwrap();
    if fixed.entries().len() < 2 * 14 + 20 {
        return Err("elastic constraints missing".into());
    }
    let mut hist = StateHistory::at_rest(Field::from_fn_vector(g, 2, |x, c| (c as f64 + 1.0) * x[0] * x[1]));
    for step in 0..200 {
        let r = op.residual(&hist.current);
        hist = if step % 2 == 1 {
            StateHistory::at_rest(pt_step(&hist.current, &r, params.dt1, &fixed).unwrap())
        } else {
            apt_step(&hist, &r, params.dt2, params.theta, params.apt_form, &fixed).unwrap()
        };
        for &(e, v) in fixed.entries() {
            if hist.current.values()[e] != v {
                return Err(format!("elastic entry {e} (node {}) drifted at step {step}", e % n));
            }
        }
    }
    Ok(())
}

fn pure_phases_fixed() -> Result<(), String> {
    let g = unit_square(33);
    let params = CahnHilliardParams::for_grid(&g);
    for v in [0.0, 1.0] {
        let phi = Field::scalar(g, v);
        let mut next = phi.clone();
        for _ in 0..50 {
            next = ch_step(&next, &params).unwrap();
        }
        if next != phi {
            return Err(format!("phi = {v} moved under the phase-field step"));
        }
    }
    Ok(())
}

fn zero_sensitivities_noop() -> Result<(), String> {
    let g = unit_square(12);
    let mut rng = StdRng::seed_from_u64(3);
    let phases = random_phases(g, 3, &mut rng);
    let zero = || vec![Field::zeros(g, 1); 3];
    let sens = Sensitivities {
        compliance: zero(),
        volume: zero(),
        unity: zero(),
        region: zero(),
    };
    let weights = ObjectiveWeights {
        compliance: 0.1,
        volume: 1e5,
        unity: 1e4,
        region: 1e4,
        normalize_compliance: true,
        compliance_sign: -1.0,
    };
    let next = design_update(&phases, &sens, &weights).map_err(|e| e.to_string())?;
    if next != phases {
        return Err("zero sensitivities changed the phases".into());
    }
    Ok(())
}

fn fixed_points() -> Outcome {
    let checks = [
        ("constraints bit-exact over 200 PT/APT steps", constraints_hold()),
        ("pure phases fixed under the phase-field step", pure_phases_fixed()),
        ("zero sensitivities leave phases unchanged", zero_sensitivities_noop()),
    ];
    let pass = checks.iter().all(|(_, r)| r.is_ok());
    let detail: Vec<String> = checks
        .iter()
        .map(|(n, r)| match r {
            Ok(()) => format!("{n}: ok"),
            Err(e) => format!("{n}: {e}"),
        })
        .collect();
    outcome(pass, detail.join("; "))
}

// ----------------------------------------------------------------

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 8] = [
        ("AC1", "iteration scaling", iteration_scaling),
        ("AC2", "gradient oracle", gradient_oracle),
        ("AC3", "phase-field conservation and descent", cahn_hilliard),
        ("AC4", "discretization order", solver_order),
        ("AC5", "heat benchmark", heat_benchmark),
        ("AC6", "MBB benchmark", mbb_benchmark),
        ("AC7", "determinism", determinism),
        ("AC8", "fixed points and constraints", fixed_points),
    ];
    let only: Option<Vec<String>> = std::env::var("PETTO_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|t| t.trim().to_string()).collect());
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == id)) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("{id} {verdict} {name} [{:.1} s]: {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {}", failed.join(", "));
        if std::env::var_os("PETTO_ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}
