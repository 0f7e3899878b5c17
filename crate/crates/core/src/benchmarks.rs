//! Single-interface benchmark problems: the pulled two-grain square, its fitted counterpart,
//! and the inclined-interface stress profile study.

use crate::conformalize::{build_search_structure, conformalize, find_containing_elem, ConformalizeError};
use crate::constitutive::{bulk_stress, strain_from_gradient, ElasticMaterial, TslModel};
use crate::fe::{eval, inverse_map};
use crate::mesh::{build_crossed_tri, build_structured_quad, coincident_facets, split_by_regions, Bounds, Mesh, MeshError};
use crate::solver::{
    energy_release, BoundaryCondition, CorrectionFlags, Problem, Schedule, Solver, SolverConfig, SolverError, StepRecord,
};
use crate::surrogate::{assign_grain_ids, build_surrogate_interface, GrainSet, SurrogateError, SurrogateInterface};
use crate::Vec2;
use nalgebra::Matrix2;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Conformalize(#[from] ConformalizeError),
}

/// Grain id left of (or above) the interface.
pub const LOWER_GRAIN: u32 = 1;
pub const UPPER_GRAIN: u32 = 2;

/// Material, cohesive law and loading of the pulled unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullSetup {
    pub e: f64,
    pub nu: f64,
    pub gc: f64,
    pub delta0: f64,
    pub beta: f64,
    /// Right-edge displacement rate.
    pub rate: f64,
    pub t_end: f64,
}

impl Default for PullSetup {
    fn default() -> Self {
        Self { e: 1e3, nu: 0.3, gc: 50.0, delta0: 0.1, beta: 0.0, rate: 1e-2, t_end: 200.0 }
    }
}

impl PullSetup {
    pub fn material(&self) -> ElasticMaterial {
        ElasticMaterial { e: self.e, nu: self.nu }
    }

    pub fn tsl(&self) -> TslModel {
        TslModel::Exponential { gc: self.gc, delta0: self.delta0, beta: self.beta }
    }

    pub fn materials(&self) -> BTreeMap<u32, ElasticMaterial> {
        [(LOWER_GRAIN, self.material()), (UPPER_GRAIN, self.material())].into()
    }

    /// `u_x = 0` on the left, `u_y = 0` on the bottom, `u_x = rate·t` on the right.
    pub fn bcs(&self) -> Vec<BoundaryCondition> {
        vec![
            BoundaryCondition::Dirichlet { tag: "left".into(), component: 0, schedule: Schedule::Constant(0.0) },
            BoundaryCondition::Dirichlet { tag: "bottom".into(), component: 1, schedule: Schedule::Constant(0.0) },
            BoundaryCondition::Dirichlet { tag: "right".into(), component: 0, schedule: Schedule::Linear { rate: self.rate } },
        ]
    }
}

/// Grains of the unit square cut by the line through `a` along `dir`.
pub fn two_grains(a: Vec2, dir: Vec2) -> Result<GrainSet, BenchError> {
    Ok(GrainSet::split_rect(Bounds::unit(), a, dir, LOWER_GRAIN, UPPER_GRAIN)?)
}

/// SCZM problem: dominant-volume labels, surrogate interface, mesh split along it.
pub fn sczm_problem(mesh: &Mesh, grains: &GrainSet, setup: &PullSetup) -> Result<Problem, BenchError> {
    let ids = assign_grain_ids(mesh, grains)?;
    let interface = build_surrogate_interface(mesh, grains, &ids)?;
    let (split, _) = split_by_regions(&mesh.clone().with_regions(ids)?);
    Ok(Problem { mesh: split, interface, materials: setup.materials(), tsl: setup.tsl(), bcs: setup.bcs(), body_force: None })
}

/// Interface-fitted problem on a mesh whose region ids already follow the interface.
pub fn fitted_problem(labelled: &Mesh, setup: &PullSetup) -> Result<Problem, BenchError> {
    let (split, _) = split_by_regions(labelled);
    let facets = coincident_facets(&split)?;
    let interface = SurrogateInterface::fitted(&split, &facets);
    Ok(Problem { mesh: split, interface, materials: setup.materials(), tsl: setup.tsl(), bcs: setup.bcs(), body_force: None })
}

/// Crossed-triangle mesh whose cells straddle `x = 0.5` (odd cell count).
pub fn energy_mesh(cells: usize) -> Result<Mesh, BenchError> {
    Ok(build_crossed_tri(cells, cells, Bounds::unit())?)
}

/// Cells per side of the energy benchmark mesh, `h = 1/21`.
pub const ENERGY_CELLS: usize = 21;

pub fn vertical_grains() -> Result<GrainSet, BenchError> {
    two_grains(Vec2::new(0.5, 0.0), Vec2::new(0.0, 1.0))
}

pub fn energy_problem(setup: &PullSetup) -> Result<Problem, BenchError> {
    sczm_problem(&energy_mesh(ENERGY_CELLS)?, &vertical_grains()?, setup)
}

/// Run the pulled square to `t_end` and return the total cohesive work with the step records.
pub fn energy_release_run(problem: &Problem, setup: &PullSetup, dt: f64, flags: CorrectionFlags) -> Result<(f64, Vec<StepRecord>), BenchError> {
    let cfg = SolverConfig { dt, t_end: setup.t_end, flags, ..SolverConfig::default() };
    let records = crate::solver::run_load_stepping(problem, cfg)?;
    Ok((energy_release(&records), records))
}

/// Right-edge x reaction per step.
pub fn reaction_history(records: &[StepRecord]) -> Vec<f64> {
    records.iter().map(|r| r.reactions.get("right").map_or(0.0, |v| v.x)).collect()
}

/// Interface `y = √3(x − 0.5) + 0.5`, 60° from the x axis.
pub fn inclined_grains() -> Result<GrainSet, BenchError> {
    two_grains(Vec2::new(0.5, 0.5), Vec2::new(1.0, 3f64.sqrt()))
}

/// SCZM problem on an `n × n` quad mesh with the inclined interface.
pub fn inclined_problem(n: usize, setup: &PullSetup) -> Result<Problem, BenchError> {
    sczm_problem(&build_structured_quad(n, n, Bounds::unit())?, &inclined_grains()?, setup)
}

/// Interface-fitted reference: an `n × n` quad mesh conformalized against the inclined grains.
pub fn inclined_reference(n: usize, setup: &PullSetup) -> Result<Problem, BenchError> {
    let grains = inclined_grains()?;
    let mesh = build_structured_quad(n, n, Bounds::unit())?;
    let ids = assign_grain_ids(&mesh, &grains)?;
    let ifm = conformalize(&mesh.with_regions(ids)?, &grains)?;
    fitted_problem(&ifm.mesh, setup)
}

/// `count` midpoints along the diagonal from `(0,0)` to `(1,1)`.
pub fn diagonal_samples(count: usize) -> Vec<Vec2> {
    (0..count)
        .map(|i| {
            let s = (i as f64 + 0.5) / count as f64;
            Vec2::new(s, s)
        })
        .collect()
}

/// Plane-strain von Mises stress at each point, taken from the lowest-numbered containing element.
pub fn von_mises_profile(problem: &Problem, u: &[f64], points: &[Vec2]) -> Vec<f64> {
    let mesh = &problem.mesh;
    let structure = build_search_structure(mesh);
    points
        .iter()
        .map(|x| {
            let Some(e) = find_containing_elem(x, &structure, mesh) else { return f64::NAN };
            let el = &mesh.elements[e];
            let coords = mesh.element_coords(e);
            let xi = inverse_map(el.kind, &coords, *x).unwrap_or_else(Vec2::zeros);
            let s = eval(el.kind, &coords, xi);
            let mut grad = Matrix2::zeros();
            for (a, &n) in el.nodes().iter().enumerate() {
                grad += Vec2::new(u[2 * n], u[2 * n + 1]) * s.grad[a].transpose();
            }
            let mat = problem.materials[&mesh.regions[e]];
            let (stress, _) = bulk_stress(&mat, &strain_from_gradient(&grad));
            mat.von_mises(&stress)
        })
        .collect()
}

/// Discrete L² distance between two profiles sampled at spacing `ds`.
pub fn profile_distance(a: &[f64], b: &[f64], ds: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2) * ds).sum::<f64>().sqrt()
}

/// Solve to each time in `snapshots` (ascending) and return the von Mises profile at each.
pub fn profiles_at(
    problem: &Problem,
    dt: f64,
    flags: CorrectionFlags,
    snapshots: &[f64],
    points: &[Vec2],
) -> Result<Vec<Vec<f64>>, BenchError> {
    let t_end = snapshots.iter().copied().fold(0.0, f64::max);
    let cfg = SolverConfig { dt, t_end, flags, ..SolverConfig::default() };
    let mut solver = Solver::new(problem, cfg)?;
    let mut out = Vec::with_capacity(snapshots.len());
    let mut next = 0;
    while !solver.is_finished() && next < snapshots.len() {
        solver.step()?;
        while next < snapshots.len() && (solver.t() - snapshots[next]).abs() <= 1e-9 * dt {
            out.push(von_mises_profile(problem, solver.u(), points));
            next += 1;
        }
    }
    Ok(out)
}
