use sczm::mesh::{build_structured_quad, read_field, write_field, write_mesh, Bounds, MeshFile, NodalField};
use sczm::surrogate::{write_grains, GrainSet};
use sczm::Vec2;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn sczm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sczm")).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SOLVE_CONFIG: &str = r#"
[mesh]
generate = { kind = "quad", nx = 4, ny = 4 }

[interface]
line = { point = [0.5, 0.0], direction = [0.0, 1.0] }

[[material]]
region = 1
e = 1000.0
nu = 0.3

[[material]]
region = 2
e = 1000.0
nu = 0.3

[tsl]
kind = "exponential"
gc = 50.0
delta0 = 0.1

[[bc]]
kind = "dirichlet"
tag = "left"
component = "x"
schedule = { kind = "constant", value = 0.0 }

[[bc]]
kind = "dirichlet"
tag = "bottom"
component = "y"
schedule = { kind = "constant", value = 0.0 }

[[bc]]
kind = "dirichlet"
tag = "right"
component = "x"
schedule = { kind = "linear", rate = 0.01 }

[solver]
dt = 10.0
t_end = 50.0

[output]
fields_at = [30.0, 50.0]
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("problem.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_writes_steps_and_fields() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SOLVE_CONFIG);
    let out_dir = dir.path().join("out");
    let out = sczm(&["solve", "--config", arg(&cfg), "--out-dir", arg(&out_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let steps = std::fs::read_to_string(out_dir.join("steps.csv")).unwrap();
    let mut lines = steps.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("step,t,imposed,"));
    assert!(header.contains("reaction_right_x"));
    assert!(header.ends_with("max_damage,incremental_work,cumulative_work,newton_iterations"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    let last: Vec<&str> = rows[4].split(',').collect();
    assert_eq!(last[1].parse::<f64>().unwrap(), 50.0);
    assert!((last[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    assert!(out_dir.join("displacement_000003.field").exists());
    assert!(out_dir.join("displacement_000005.field").exists());
    assert!(out_dir.join("solution.mesh").exists());
}

#[test]
fn misspelled_config_key_exits_with_config_code() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &SOLVE_CONFIG.replace("kind = \"exponential\"", "knd = \"exponential\""));
    let out = sczm(&["solve", "--config", arg(&cfg), "--out-dir", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("tsl.knd"), "{}", stderr(&out));
}

#[test]
fn short_schedule_table_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = SOLVE_CONFIG.replace(
        "schedule = { kind = \"linear\", rate = 0.01 }",
        "schedule = { kind = \"table\", points = [[0.0, 0.0], [20.0, 0.2]] }",
    );
    let cfg = write_config(dir.path(), &text);
    let out = sczm(&["solve", "--config", arg(&cfg), "--out-dir", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bc[2].schedule"), "{}", stderr(&out));
}

#[test]
fn missing_input_exits_with_io_code() {
    let out = sczm(&["solve", "--config", "/nonexistent/problem.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mms_csv_is_complete_and_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = sczm(&["mms", "--case", "linear", "--levels", "3..5", "--out-dir", arg(dir.path())]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let ta = std::fs::read(a.path().join("mms_convergence.csv")).unwrap();
    let tb = std::fs::read(b.path().join("mms_convergence.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "level,h,error,local_slope,error_no_sczm,fitted_slope");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("3,"));
    assert!(lines[3].starts_with("5,"));
}

#[test]
fn mms_rejects_bad_arguments() {
    let dir = TempDir::new().unwrap();
    assert_eq!(sczm(&["mms", "--case", "cubic", "--out-dir", arg(dir.path())]).status.code(), Some(2));
    assert_eq!(sczm(&["mms", "--case", "linear", "--levels", "5..3", "--out-dir", arg(dir.path())]).status.code(), Some(2));
}

fn inclined_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let mesh = build_structured_quad(6, 6, Bounds::unit()).unwrap();
    let grains = GrainSet::split_rect(Bounds::unit(), Vec2::new(0.45, 0.5), Vec2::new(0.4, 1.0), 1, 2).unwrap();
    let mesh_path = dir.join("source.mesh");
    let grain_path = dir.join("grains.txt");
    let mut buf = Vec::new();
    write_mesh(&mut buf, &MeshFile { mesh, sections: Default::default() }).unwrap();
    std::fs::write(&mesh_path, buf).unwrap();
    let mut buf = Vec::new();
    write_grains(&mut buf, &grains).unwrap();
    std::fs::write(&grain_path, buf).unwrap();
    (mesh_path, grain_path)
}

#[test]
fn assign_conformalize_project_pipeline() {
    let dir = TempDir::new().unwrap();
    let (mesh_path, grain_path) = inclined_inputs(dir.path());
    let labelled = dir.path().join("labelled.mesh");
    let ifm = dir.path().join("ifm.mesh");
    let out = sczm(&["assign", "--mesh", arg(&mesh_path), "--grains", arg(&grain_path), "--out", arg(&labelled)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = sczm(&["conformalize", "--mesh", arg(&labelled), "--grains", arg(&grain_path), "--out", arg(&ifm)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let ifm_text = std::fs::read_to_string(&ifm).unwrap();
    assert!(ifm_text.contains("node_markers") && ifm_text.contains("source_node_ids"));

    let source = sczm::mesh::read_mesh(std::fs::File::open(&labelled).map(std::io::BufReader::new).unwrap()).unwrap();
    let f = |x: &Vec2| [1.0 + 2.0 * x.x - x.y, 0.5 * x.y];
    let field = NodalField::new("u", 2, source.mesh.nodes.iter().flat_map(f).collect());
    let field_path = dir.path().join("u.field");
    let mut buf = Vec::new();
    write_field(&mut buf, &field).unwrap();
    std::fs::write(&field_path, buf).unwrap();

    let projected = dir.path().join("projected.field");
    let out = sczm(&[
        "project",
        "--ifm",
        arg(&ifm),
        "--source",
        arg(&labelled),
        "--field",
        arg(&field_path),
        "--out",
        arg(&projected),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let target = sczm::mesh::read_mesh(std::fs::File::open(&ifm).map(std::io::BufReader::new).unwrap()).unwrap();
    let v = read_field(std::fs::File::open(&projected).map(std::io::BufReader::new).unwrap()).unwrap();
    for (i, x) in target.mesh.nodes.iter().enumerate() {
        let e = f(x);
        assert!((v.values[2 * i] - e[0]).abs() < 1e-12 && (v.values[2 * i + 1] - e[1]).abs() < 1e-12);
    }
}

#[test]
fn conformalize_reports_unreadable_grains() {
    let dir = TempDir::new().unwrap();
    let (mesh_path, _) = inclined_inputs(dir.path());
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "grains 1\ngrain 1 vertices 3\n0 0\n1 0\n").unwrap();
    let out = sczm(&["conformalize", "--mesh", arg(&mesh_path), "--grains", arg(&bad), "--out", arg(&dir.path().join("x.mesh"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn classify_square_boundary() {
    let dir = TempDir::new().unwrap();
    let boundary = dir.path().join("square.boundary");
    std::fs::write(&boundary, "boundary dim 2 vertices 4 facets 4\n0 0\n1 0\n1 1\n0 1\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let points = dir.path().join("points.txt");
    std::fs::write(&points, "0.5 0.5\n2.0 0.5\n1.0 0.5\n").unwrap();
    let csv = dir.path().join("classify.csv");
    for brute in [false, true] {
        let mut args = vec!["classify", "--boundary", arg(&boundary), "--points", arg(&points), "--out", arg(&csv)];
        if brute {
            args.push("--brute-force");
        }
        let out = sczm(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = std::fs::read_to_string(&csv).unwrap();
        let sides: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(text.lines().next(), Some("x,y,sideness"));
        assert_eq!(sides, ["IN", "OUT", "ON"]);
    }
}

#[test]
fn bench_classify_writes_one_row_per_size() {
    let dir = TempDir::new().unwrap();
    let out = sczm(&["bench-classify", "--sizes", "20,40", "--grid", "16", "--out-dir", arg(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("classify_bench.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n_t,runtime_pca,runtime_brute,speedup");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("20,") && lines[2].starts_with("40,"));
    assert_eq!(sczm(&["bench-classify", "--sizes", "7", "--out-dir", arg(dir.path())]).status.code(), Some(2));
}
