use std::path::Path;
use std::process::{Command, Output};

fn petto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petto"))
        .args(args)
        .env_remove("PETTO_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn heat_smoke_run_writes_fields_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = petto(&["run", "--preset", "heat2d", "--nx", "64", "--loops", "200", "--out", out, "-q"]);
    assert!(o.status.success(), "{}", stderr(&o));

    for f in ["phase0.csv", "phase0.pgm", "phase1.csv", "property.pgm", "temperature.csv", "history.csv", "summary.toml"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let t = read(dir.path(), "temperature.csv");
    let mut lines = t.lines();
    assert!(lines.next().unwrap().starts_with("# dims=64,64 "));
    assert_eq!(lines.clone().count(), 64);
    assert!(lines.all(|l| l.split(',').count() == 64 && l.split(',').all(|v| v.parse::<f64>().is_ok())));

    let pgm = std::fs::read(dir.path().join("phase0.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    assert_eq!(pgm.len(), b"P5\n64 64\n255\n".len() + 64 * 64);

    let history = read(dir.path(), "history.csv");
    assert!(history.starts_with("loop,apt_steps,pt_steps,design_updates,ch_steps,compliance"));
    let last = history.lines().last().unwrap();
    assert!(last.starts_with("200,"), "{last}");

    let summary: toml::Table = read(dir.path(), "summary.toml").parse().unwrap();
    assert_eq!(summary["loops"].as_integer(), Some(200));
}

#[test]
fn missing_output_directory_is_a_usage_error() {
    let o = petto(&["run", "--preset", "heat2d", "--loops", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--out"), "{}", stderr(&o));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_petto"))
        .args(["run", "--preset", "mbb2d", "--nx", "33", "--loops", "3", "-q"])
        .env("PETTO_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("displacement_x.csv").is_file());
    assert!(dir.path().join("displacement_y.csv").is_file());
}

#[test]
fn unknown_preset_lists_the_valid_names() {
    let o = petto(&["run", "--preset", "bridge", "--out", "/nonexistent"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    for name in ["heat2d", "mbb2d", "cantilever3d", "drone3d"] {
        assert!(e.contains(name), "{e}");
    }
}

#[test]
fn compliance_sign_accepts_only_unit_signs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = petto(&["run", "--preset", "heat2d", "--nx", "16", "--loops", "2", "--compliance-sign", "+1", "--out", out, "-q"]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let bad = petto(&["run", "--preset", "heat2d", "--loops", "2", "--compliance-sign", "2", "--out", out]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn shown_preset_runs_as_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let shown = petto(&["show", "cantilever3d"]);
    assert!(shown.status.success());
    let path = dir.path().join("c.toml");
    std::fs::write(&path, &shown.stdout).unwrap();
    let out = dir.path().join("out");
    let o = petto(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--nx",
        "16",
        "--loops",
        "2",
        "--precision",
        "f32",
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read(&out, "fields.vtk").contains("SCALARS property float 1"));
}

/// Checks the legacy structured-points layout token by token and returns the
/// dataset dimensions and the names of the attribute blocks.
fn parse_vtk(text: &str) -> ([usize; 3], Vec<String>) {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# vtk DataFile Version 3.0"));
    let title = lines.next().unwrap();
    assert!(title.len() < 256);
    assert_eq!(lines.next(), Some("ASCII"));
    assert_eq!(lines.next(), Some("DATASET STRUCTURED_POINTS"));

    let mut dims = [0; 3];
    let mut points = None;
    let mut blocks = Vec::new();
    while let Some(line) = lines.next() {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok[0] {
            "DIMENSIONS" => {
                for (d, t) in dims.iter_mut().zip(&tok[1..]) {
                    *d = t.parse().unwrap();
                }
            }
            "ORIGIN" | "SPACING" => {
                assert_eq!(tok.len(), 4, "{line}");
                assert!(tok[1..].iter().all(|t| t.parse::<f64>().is_ok()));
            }
            "POINT_DATA" => {
                let n: usize = tok[1].parse().unwrap();
                assert_eq!(n, dims.iter().product::<usize>());
                points = Some(n);
            }
            "SCALARS" | "VECTORS" => {
                let n = points.expect("attributes before POINT_DATA");
                assert!(matches!(tok[2], "float" | "double"), "{line}");
                let width = if tok[0] == "SCALARS" {
                    assert_eq!(tok.get(3), Some(&"1"));
                    assert_eq!(lines.next(), Some("LOOKUP_TABLE default"));
                    1
                } else {
                    3
                };
                for _ in 0..n {
                    let row = lines.next().expect("truncated attribute block");
                    let vals: Vec<f64> = row.split_whitespace().map(|v| v.parse().unwrap()).collect();
                    assert_eq!(vals.len(), width, "{row}");
                }
                blocks.push(tok[1].to_string());
            }
            other => panic!("unexpected keyword {other}"),
        }
    }
    (dims, blocks)
}

#[test]
fn three_dimensional_runs_write_a_well_formed_vtk_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = petto(&[
        "run", "--preset", "drone3d", "--nx", "4", "--ny", "4", "--nz", "4", "--loops", "2", "--out", out, "-q",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (dims, blocks) = parse_vtk(&read(dir.path(), "fields.vtk"));
    assert_eq!(dims, [4, 4, 4]);
    assert_eq!(blocks, ["phase0", "phase1", "property", "displacement"]);
}
