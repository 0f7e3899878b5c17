use crate::config::parse_config;
use crate::{open, CliError};
use sczm::conformalize::IfmMesh;
use sczm::fmt_f64;
use sczm::geometry::{
    airfoil_query_bounds, benchmark_classification, build_classifier_index, classify_brute_force, classify_point,
    compute_boundary_pca, query_grid, read_boundary, AnyBoundary, BoundaryRep, GeometryError, Point, Sideness,
};
use sczm::mesh::{read_field, read_mesh, write_field, write_mesh, MeshFile, NodalField};
use sczm::mms::{convergence_study, fitted_slope, CaseKind};
use sczm::solver::{CorrectionFlags, Solver, StepRecord};
use sczm::surrogate::{assign_grain_ids, read_grains};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_mesh_file(path: &Path, file: &MeshFile) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_mesh(&mut buf, file)?;
    write_file(path, &buf)
}

fn read_points<const D: usize>(path: &Path) -> Result<Vec<Point<D>>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let vals: Vec<f64> = content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| GeometryError::Parse { line: i + 1, msg: format!("cannot parse `{content}`") })?;
        if vals.len() != D {
            return Err(GeometryError::Parse { line: i + 1, msg: format!("expected {D} coordinates, found {}", vals.len()) }.into());
        }
        out.push(Point::<D>::from_iterator(vals));
    }
    Ok(out)
}

fn classify_csv<const D: usize>(boundary: &BoundaryRep<D>, points: &[Point<D>], brute: bool) -> Result<String, CliError> {
    let index = if brute { None } else { Some(build_classifier_index(compute_boundary_pca(&boundary.used_vertices())?, boundary)?) };
    let mut csv = String::new();
    let header = ["x", "y", "z"][..D].join(",");
    let _ = writeln!(csv, "{header},sideness");
    for p in points {
        let side = match &index {
            Some(ix) => classify_point(p, boundary, ix)?,
            None => classify_brute_force(p, boundary),
        };
        let coords: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
        let _ = writeln!(csv, "{},{}", coords.join(","), side.as_str());
    }
    Ok(csv)
}

pub fn classify(boundary: &Path, points: &Path, brute: bool, out: &Path) -> Result<(), CliError> {
    let csv = match read_boundary(open(boundary)?)? {
        AnyBoundary::Two(b) => classify_csv(&b, &read_points::<2>(points)?, brute)?,
        AnyBoundary::Three(b) => classify_csv(&b, &read_points::<3>(points)?, brute)?,
    };
    let on = csv.lines().filter(|l| l.ends_with(Sideness::On.as_str())).count();
    if on > 0 {
        log::info!("{on} points classified ON the boundary");
    }
    write_file(out, csv.as_bytes())
}

pub fn assign(mesh: &Path, grains: &Path, out: &Path) -> Result<(), CliError> {
    let mut file = read_mesh(open(mesh)?)?;
    let grains = read_grains(open(grains)?)?;
    let ids = assign_grain_ids(&file.mesh, &grains)?;
    file.mesh = file.mesh.with_regions(ids)?;
    write_mesh_file(out, &file)
}

fn steps_csv(records: &[StepRecord]) -> String {
    let tags: Vec<&String> = records.first().map(|r| r.reactions.keys().collect()).unwrap_or_default();
    let mut csv = String::from("step,t,imposed");
    for tag in &tags {
        let _ = write!(csv, ",reaction_{tag}_x,reaction_{tag}_y");
    }
    csv.push_str(",max_damage,incremental_work,cumulative_work,newton_iterations\n");
    let mut total = 0.0;
    for (i, r) in records.iter().enumerate() {
        total += r.incremental_work;
        let _ = write!(csv, "{},{},{}", i + 1, fmt_f64(r.t), fmt_f64(r.imposed));
        for tag in &tags {
            let v = r.reactions[*tag];
            let _ = write!(csv, ",{},{}", fmt_f64(v.x), fmt_f64(v.y));
        }
        let _ = writeln!(csv, ",{},{},{},{}", fmt_f64(r.max_damage), fmt_f64(r.incremental_work), fmt_f64(total), r.newton_iterations);
    }
    csv
}

pub fn solve(config: &Path, out_dir: Option<&Path>) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config).map_err(|source| CliError::Io { path: config.to_path_buf(), source })?;
    let mut cfg = parse_config(&text)?;
    cfg.resolve(config.parent().unwrap_or(Path::new(".")));
    let dir = out_dir.map(Path::to_path_buf).or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| ".".into());
    let problem = cfg.build_problem()?;
    let solver_cfg = cfg.solver_config();
    log::info!(
        "{} nodes, {} elements, {} interface facets",
        problem.mesh.nodes.len(),
        problem.mesh.elements.len(),
        problem.interface.facets.len()
    );
    let mut solver = Solver::new(&problem, solver_cfg)?;
    let mut records = Vec::new();
    let mut fields_due: Vec<f64> = cfg.output.fields_at.clone();
    fields_due.sort_by(f64::total_cmp);
    let mut next = 0;
    while !solver.is_finished() {
        match solver.step() {
            Ok(rec) => {
                log::debug!("t = {} iterations = {}", rec.t, rec.newton_iterations);
                records.push(rec);
            }
            Err(e) => {
                write_file(&dir.join("steps.csv"), steps_csv(&records).as_bytes())?;
                return Err(e.into());
            }
        }
        let t = solver.t();
        while next < fields_due.len() && fields_due[next] <= t + 1e-9 * solver_cfg.dt {
            let field = NodalField::new("displacement", 2, solver.u().to_vec());
            let mut buf = Vec::new();
            write_field(&mut buf, &field)?;
            write_file(&dir.join(format!("displacement_{:06}.field", records.len())), &buf)?;
            next += 1;
        }
    }
    write_file(&dir.join("steps.csv"), steps_csv(&records).as_bytes())?;
    let mut mesh_buf = Vec::new();
    write_mesh(&mut mesh_buf, &MeshFile { mesh: problem.mesh.clone(), sections: Default::default() })?;
    write_file(&dir.join("solution.mesh"), &mesh_buf)
}

fn parse_levels(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::config("levels", format!("expected `a..b`, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if a > b || b > 12 {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

pub fn mms(case: &str, levels: &str, out_dir: &Path) -> Result<(), CliError> {
    let kind = CaseKind::from_name(case).ok_or_else(|| CliError::config("case", format!("unknown case `{case}`")))?;
    let levels = parse_levels(levels)?;
    let rows = convergence_study(kind, &levels, CorrectionFlags::all())?;
    let ablation = convergence_study(kind, &levels, CorrectionFlags::none())?;
    let slope = fitted_slope(&rows);
    log::info!("{} case: fitted slope {slope:.4}, ablation slope {:.4}", kind.name(), fitted_slope(&ablation));
    let mut csv = String::from("level,h,error,local_slope,error_no_sczm,fitted_slope\n");
    for (r, a) in rows.iter().zip(&ablation) {
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.level, fmt_f64(r.h), fmt_f64(r.error), fmt_f64(r.local_slope), fmt_f64(a.error), fmt_f64(slope));
    }
    write_file(&out_dir.join("mms_convergence.csv"), csv.as_bytes())
}

pub fn conformalize(mesh: &Path, grains: &Path, out: &Path) -> Result<(), CliError> {
    let file = read_mesh(open(mesh)?)?;
    let grains = read_grains(open(grains)?)?;
    let ifm = sczm::conformalize::conformalize(&file.mesh, &grains)?;
    if ifm.dropped_area > 0.0 {
        log::warn!("dropped sliver area {:e}", ifm.dropped_area);
    }
    write_mesh_file(out, &ifm.to_file())
}

pub fn project(ifm: &Path, source: &Path, field: &Path, out: &Path) -> Result<(), CliError> {
    let ifm = IfmMesh::from_file(read_mesh(open(ifm)?)?)?;
    let source = read_mesh(open(source)?)?.mesh;
    let u = read_field(open(field)?)?;
    let v = sczm::conformalize::project_solution(&ifm, &source, &u)?;
    let mut buf = Vec::new();
    write_field(&mut buf, &v)?;
    write_file(out, &buf)
}

pub fn bench_classify(sizes: &[usize], grid: usize, out_dir: &Path) -> Result<(), CliError> {
    if sizes.is_empty() || grid == 0 || sizes.iter().any(|&n| n < 4 || n % 2 == 1) {
        return Err(CliError::config("sizes", "sizes must be even and at least 4, grid positive"));
    }
    let queries = query_grid(&airfoil_query_bounds(), grid);
    let rows = benchmark_classification(sizes, &queries)?;
    let mut csv = String::from("n_t,runtime_pca,runtime_brute,speedup\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{},{}", r.n_t, fmt_f64(r.runtime_pca), fmt_f64(r.runtime_brute), fmt_f64(r.speedup));
    }
    write_file(&out_dir.join("classify_bench.csv"), csv.as_bytes())
}
