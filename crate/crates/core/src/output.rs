//! Result files.
//!
//! 2D fields are written as CSV (one grid row per line, `x` varying along the
//! line, first line a `#` header with dimensions and spacing) and as binary
//! PGM images with a `.scale` sidecar recording the grey-level mapping. 3D
//! runs write one legacy ASCII VTK file holding every field. The run history
//! goes to `history.csv`; wall-clock times go to a separate `timing.csv` so
//! that everything else is byte-identical between repeated runs.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::grid::{Field, Grid};
use crate::optimizer::{HistoryRecord, OptimizationResult};
use crate::{Error, Real, Result};

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn fmt_value<R: Real>(v: R) -> String {
    format!("{:.*e}", R::DIGITS - 1, v)
}

fn join<T: std::fmt::Display>(xs: impl IntoIterator<Item = T>, sep: &str) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Writes one component of a 2D field as CSV.
pub fn write_csv<R: Real>(grid: &Grid, values: &[R], path: &Path) -> Result<()> {
    if grid.ndim() != 2 {
        return Err(Error::InvalidGrid("CSV output is for 2D grids".into()));
    }
    let [nx, ny, _] = grid.dims3();
    let mut s = format!(
        "# dims={} spacing={}\n",
        join(grid.dims(), ","),
        join(grid.spacings().iter().map(|h| format!("{h:.17e}")), ",")
    );
    for j in 0..ny {
        let row = &values[j * nx..(j + 1) * nx];
        s.push_str(&join(row.iter().map(|v| fmt_value(*v)), ","));
        s.push('\n');
    }
    write_file(path, s.as_bytes())
}

/// A CSV field read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvField {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn read_csv(path: &Path) -> Result<CsvField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Parse(format!("{}: {m}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let mut dims = None;
    let mut spacing = None;
    for tok in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = tok.strip_prefix("dims=") {
            dims = Some(v.split(',').map(str::parse).collect::<std::result::Result<Vec<usize>, _>>());
        } else if let Some(v) = tok.strip_prefix("spacing=") {
            spacing = Some(v.split(',').map(str::parse).collect::<std::result::Result<Vec<f64>, _>>());
        }
    }
    let dims = dims.ok_or_else(|| bad("missing dims"))?.map_err(|_| bad("bad dims"))?;
    let spacing = spacing.ok_or_else(|| bad("missing spacing"))?.map_err(|_| bad("bad spacing"))?;
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        for v in line.split(',') {
            values.push(v.trim().parse().map_err(|_| bad(&format!("bad value on line {}", k + 2)))?);
        }
    }
    if values.len() != dims.iter().product::<usize>() {
        return Err(bad("value count does not match dims"));
    }
    Ok(CsvField { dims, spacing, values })
}

/// Writes a 2D field as an 8-bit binary PGM with the top image row at the
/// largest `y`. Values are scaled linearly from their minimum (black) to
/// maximum (white); the two bounds go to `<path>.scale`.
pub fn write_pgm<R: Real>(grid: &Grid, values: &[R], path: &Path) -> Result<()> {
    if grid.ndim() != 2 {
        return Err(Error::InvalidGrid("PGM output is for 2D grids".into()));
    }
    let [nx, ny, _] = grid.dims3();
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.as_f64()));
    let hi = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.as_f64()));
    let range = hi - lo;
    let mut bytes = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for j in (0..ny).rev() {
        for v in &values[j * nx..(j + 1) * nx] {
            let t = if range > 0.0 { (v.as_f64() - lo) / range } else { 0.0 };
            bytes.push((t * 255.0).round() as u8);
        }
    }
    write_file(path, &bytes)?;
    let mut side = path.as_os_str().to_owned();
    side.push(".scale");
    let scale = format!("min = {lo:.17e}\nmax = {hi:.17e}\n");
    write_file(Path::new(&side), scale.as_bytes())
}

/// Writes point data as legacy ASCII VTK structured points. Scalars and
/// vectors are given as `(name, field)` pairs.
pub fn write_vtk<R: Real>(grid: &Grid, title: &str, fields: &[(&str, &Field<R>)], path: &Path) -> Result<()> {
    let [nx, ny, nz] = grid.dims3();
    let n = grid.node_count();
    let sp = grid.spacings();
    let h = |a: usize| sp.get(a).copied().unwrap_or(1.0);
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
    let _ = writeln!(s, "ORIGIN 0 0 0");
    let _ = writeln!(s, "SPACING {:.17e} {:.17e} {:.17e}", h(0), h(1), h(2));
    let _ = writeln!(s, "POINT_DATA {n}");
    let ty = if R::DIGITS > 9 { "double" } else { "float" };
    for (name, f) in fields {
        if f.grid() != grid {
            return Err(Error::GridMismatch);
        }
        match f.components() {
            1 => {
                let _ = writeln!(s, "SCALARS {name} {ty} 1");
                let _ = writeln!(s, "LOOKUP_TABLE default");
                for v in f.values() {
                    let _ = writeln!(s, "{}", fmt_value(*v));
                }
            }
            c => {
                let _ = writeln!(s, "VECTORS {name} {ty}");
                let zero = fmt_value(R::zero());
                for i in 0..n {
                    let row: Vec<String> = (0..3)
                        .map(|k| if k < c { fmt_value(f.component(k)[i]) } else { zero.clone() })
                        .collect();
                    let _ = writeln!(s, "{}", row.join(" "));
                }
            }
        }
    }
    write_file(path, s.as_bytes())
}

/// Writes the history records, one row per record.
pub fn write_history(records: &[HistoryRecord], phases: usize, path: &Path) -> Result<()> {
    let mut s = String::from("loop,apt_steps,pt_steps,design_updates,ch_steps,compliance,volume,unity,region,residual");
    for i in 0..phases {
        let _ = write!(s, ",vf{i}");
    }
    s.push('\n');
    for r in records {
        let c = &r.counters;
        let p = &r.report;
        let _ = write!(
            s,
            "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.loop_index, c.apt_steps, c.pt_steps, c.design_updates, c.ch_steps, p.compliance, p.volume, p.unity, p.region, r.residual
        );
        for v in &p.volume_fractions {
            let _ = write!(s, ",{v:.16e}");
        }
        s.push('\n');
    }
    write_file(path, s.as_bytes())
}

/// Writes `(loop, seconds since start)` pairs.
pub fn write_timing(times: &[(usize, f64)], path: &Path) -> Result<()> {
    let mut s = String::from("loop,wall_seconds\n");
    for (l, t) in times {
        let _ = writeln!(s, "{l},{t:.6}");
    }
    write_file(path, s.as_bytes())
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    name: &'a str,
    termination: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    aborted_at_loop: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aborted_field: Option<&'a str>,
    loops: usize,
    apt_steps: usize,
    pt_steps: usize,
    compliance: f64,
    volume_objective: f64,
    unity_objective: f64,
    region_objective: f64,
    residual: f64,
    volume_fractions: &'a [f64],
    phase_separation: f64,
}

/// Writes every result file of a run into `dir` and returns their paths.
pub fn write_results<R: Real>(
    dir: &Path,
    name: &str,
    state_name: &str,
    result: &OptimizationResult<R>,
    timing: &[(usize, f64)],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let grid = *result.state.grid();
    let mut written = Vec::new();
    let mut out = |file: String| {
        let p = dir.join(file);
        written.push(p.clone());
        p
    };
    let phases = result.phases.phases();
    if grid.ndim() == 2 {
        for (i, p) in phases.iter().enumerate() {
            write_csv(&grid, p.values(), &out(format!("phase{i}.csv")))?;
            write_pgm(&grid, p.values(), &out(format!("phase{i}.pgm")))?;
        }
        write_csv(&grid, result.property.values(), &out("property.csv".into()))?;
        write_pgm(&grid, result.property.values(), &out("property.pgm".into()))?;
        let axes = ["x", "y"];
        for c in 0..result.state.components() {
            let file = if result.state.components() == 1 {
                state_name.to_string()
            } else {
                format!("{state_name}_{}", axes[c])
            };
            write_csv(&grid, result.state.component(c), &out(format!("{file}.csv")))?;
        }
    } else {
        let names: Vec<String> = (0..phases.len()).map(|i| format!("phase{i}")).collect();
        let mut fields: Vec<(&str, &Field<R>)> = names.iter().map(|n| n.as_str()).zip(phases.iter()).collect();
        fields.push(("property", &result.property));
        fields.push((state_name, &result.state));
        write_vtk(&grid, name, &fields, &out("fields.vtk".into()))?;
    }
    write_history(&result.history, phases.len(), &out("history.csv".into()))?;
    write_timing(timing, &out("timing.csv".into()))?;

    let last = result.history.last();
    let (aborted_at_loop, aborted_field) = match &result.termination {
        crate::optimizer::Termination::Aborted { loop_index, field } => (Some(*loop_index), Some(field.as_str())),
        _ => (None, None),
    };
    let summary = Summary {
        name,
        termination: result.termination.label(),
        aborted_at_loop,
        aborted_field,
        loops: result.loops,
        apt_steps: result.counters.apt_steps,
        pt_steps: result.counters.pt_steps,
        compliance: last.map_or(f64::NAN, |r| r.report.compliance),
        volume_objective: last.map_or(f64::NAN, |r| r.report.volume),
        unity_objective: last.map_or(f64::NAN, |r| r.report.unity),
        region_objective: last.map_or(f64::NAN, |r| r.report.region),
        residual: last.map_or(f64::NAN, |r| r.residual),
        volume_fractions: last.map_or(&[], |r| &r.report.volume_fractions),
        phase_separation: crate::optimizer::phase_separation_metric(&result.phases),
    };
    let text = toml::to_string(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    write_file(&out("summary.toml".into()), text.as_bytes())?;
    Ok(written)
}
