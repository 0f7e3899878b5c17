//! Quasi-static small-strain solver with a shifted cohesive interface.

mod assembly;

pub use assembly::{assemble, assemble_residual, assemble_tangent, shifted_jump, Assembly, Discretization};

use crate::constitutive::{commit_state, CohesiveState, ConstitutiveError, ElasticMaterial, TslModel};
use crate::mesh::{Mesh, MeshError};
use crate::surrogate::SurrogateInterface;
use crate::Vec2;
use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("Newton failed to converge at t = {t} after {} iterations", residuals.len().saturating_sub(1))]
    StepFailure { t: f64, residuals: Vec<f64> },
    #[error("singular tangent at t = {t}")]
    Singular { t: f64 },
}

/// Value of a boundary condition as a function of pseudo-time.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    Linear { rate: f64 },
    /// Piecewise-linear `(t, value)` table with increasing `t`, held constant outside its range.
    Table(Vec<(f64, f64)>),
}

impl Schedule {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Linear { rate } => rate * t,
            Schedule::Table(pts) => {
                let (first, last) = (pts[0], pts[pts.len() - 1]);
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let i = pts.partition_point(|p| p.0 <= t);
                let (a, b) = (pts[i - 1], pts[i]);
                a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Schedule::Constant(_) => true,
            Schedule::Linear { rate } => *rate == 0.0,
            Schedule::Table(p) => p.iter().all(|q| q.1 == p[0].1),
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        let ok = match self {
            Schedule::Constant(v) => v.is_finite(),
            Schedule::Linear { rate } => rate.is_finite(),
            Schedule::Table(p) => {
                !p.is_empty()
                    && p.iter().all(|q| q.0.is_finite() && q.1.is_finite())
                    && p.windows(2).all(|w| w[1].0 > w[0].0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SolverError::Config(format!("invalid schedule {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Prescribed displacement component on a tagged node set.
    Dirichlet { tag: String, component: usize, schedule: Schedule },
    /// Traction `schedule(t) · traction` on boundary edges whose nodes are all tagged.
    Neumann { tag: String, traction: Vec2, schedule: Schedule },
    /// Fixed values on individual degrees of freedom (`2·node + component`).
    DirichletNodal { values: Vec<(usize, f64)> },
}

/// Body force density as a function of position and region id.
pub type BodyForce = Box<dyn Fn(Vec2, u32) -> Vec2 + Send + Sync>;

/// A discretized boundary-value problem on a mesh split along the interface.
pub struct Problem {
    pub mesh: Mesh,
    pub interface: SurrogateInterface,
    pub materials: BTreeMap<u32, ElasticMaterial>,
    pub tsl: TslModel,
    pub bcs: Vec<BoundaryCondition>,
    pub body_force: Option<BodyForce>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("nodes", &self.mesh.nodes.len())
            .field("elements", &self.mesh.elements.len())
            .field("interface_facets", &self.interface.facets.len())
            .field("materials", &self.materials)
            .field("tsl", &self.tsl)
            .field("bcs", &self.bcs)
            .finish()
    }
}

impl Problem {
    pub fn validate(&self) -> Result<(), SolverError> {
        self.mesh.validate()?;
        self.tsl.validate()?;
        for r in &self.mesh.regions {
            if !self.materials.contains_key(r) {
                return Err(SolverError::Config(format!("no material for region {r}")));
            }
        }
        let ne = self.mesh.elements.len();
        for f in &self.interface.facets {
            if f.facet.minus >= ne || f.facet.plus >= ne {
                return Err(SolverError::Config("interface facet references a missing element".into()));
            }
        }
        let ndof = 2 * self.mesh.nodes.len();
        for bc in &self.bcs {
            match bc {
                BoundaryCondition::Dirichlet { tag, component, schedule } => {
                    schedule.validate()?;
                    if *component > 1 {
                        return Err(SolverError::Config(format!("component {component} out of range")));
                    }
                    self.check_tag(tag)?;
                }
                BoundaryCondition::Neumann { tag, traction, schedule } => {
                    schedule.validate()?;
                    if !traction.iter().all(|v| v.is_finite()) {
                        return Err(SolverError::Config("non-finite traction".into()));
                    }
                    self.check_tag(tag)?;
                }
                BoundaryCondition::DirichletNodal { values } => {
                    if values.iter().any(|&(d, v)| d >= ndof || !v.is_finite()) {
                        return Err(SolverError::Config("invalid nodal Dirichlet value".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_tag(&self, tag: &str) -> Result<(), SolverError> {
        if self.mesh.boundary_tags.contains_key(tag) {
            Ok(())
        } else {
            Err(SolverError::Config(format!("unknown boundary tag `{tag}`")))
        }
    }

    /// Constrained degrees of freedom and their values at time `t`, sorted by dof.
    pub fn dirichlet_values(&self, t: f64) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for bc in &self.bcs {
            match bc {
                BoundaryCondition::Dirichlet { tag, component, schedule } => {
                    let v = schedule.value(t);
                    for &n in self.mesh.tag(tag) {
                        out.insert(2 * n + component, v);
                    }
                }
                BoundaryCondition::DirichletNodal { values } => {
                    for &(d, v) in values {
                        out.insert(d, v);
                    }
                }
                BoundaryCondition::Neumann { .. } => {}
            }
        }
        out
    }

    /// Prescribed value of the first time-dependent Dirichlet condition.
    pub fn imposed(&self, t: f64) -> f64 {
        self.bcs
            .iter()
            .find_map(|bc| match bc {
                BoundaryCondition::Dirichlet { schedule, .. } if !schedule.is_constant() => Some(schedule.value(t)),
                _ => None,
            })
            .unwrap_or(0.0)
    }
}

/// Switches for the three SCZM corrections and the normal used by the traction law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrectionFlags {
    pub use_shifted_jump: bool,
    pub use_area_factor: bool,
    pub use_directional_correction: bool,
    /// Evaluate the traction law in the true-interface frame instead of the facet frame.
    pub use_true_normal: bool,
}

impl CorrectionFlags {
    pub fn all() -> Self {
        Self { use_shifted_jump: true, use_area_factor: true, use_directional_correction: true, use_true_normal: true }
    }

    /// Plain cohesive zone model on the surrogate facets.
    pub fn none() -> Self {
        Self {
            use_shifted_jump: false,
            use_area_factor: false,
            use_directional_correction: false,
            use_true_normal: false,
        }
    }
}

impl Default for CorrectionFlags {
    fn default() -> Self {
        Self::all()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub newton_rel_tol: f64,
    pub newton_abs_tol: f64,
    pub max_newton_iters: usize,
    pub dt: f64,
    pub t_end: f64,
    pub flags: CorrectionFlags,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_rel_tol: 1e-10,
            newton_abs_tol: 1e-10,
            max_newton_iters: 25,
            dt: 1.0,
            t_end: 1.0,
            flags: CorrectionFlags::all(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.newton_rel_tol > 0.0
            && self.newton_abs_tol > 0.0
            && self.max_newton_iters > 0
            && self.dt > 0.0
            && self.dt.is_finite()
            && self.t_end > 0.0
            && self.t_end.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SolverError::Config(format!("invalid solver settings {self:?}")))
        }
    }

    /// Time levels `dt, 2dt, …, t_end`; a final partial step lands on `t_end`.
    pub fn time_levels(&self) -> Vec<f64> {
        let n = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (1..=n).map(|k| if k == n { self.t_end } else { k as f64 * self.dt }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub imposed: f64,
    /// Summed residual force over each Dirichlet-tagged node set.
    pub reactions: BTreeMap<String, Vec2>,
    pub max_damage: f64,
    pub incremental_work: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub u: Vec<f64>,
    pub trial: Vec<CohesiveState>,
    /// Free-dof residual norm before each linear solve and after the last one.
    pub residuals: Vec<f64>,
    pub assembly: Assembly,
}

impl NewtonResult {
    pub fn iterations(&self) -> usize {
        self.residuals.len() - 1
    }
}

fn norm_free(r: &[f64], free: &[Option<usize>]) -> f64 {
    r.iter().zip(free).filter(|(_, f)| f.is_some()).map(|(v, _)| v * v).sum::<f64>().sqrt()
}

/// Newton iteration at time `t` from `u0` with committed history `states`.
pub fn newton_solve(
    disc: &Discretization,
    problem: &Problem,
    u0: &[f64],
    t: f64,
    states: &[CohesiveState],
    config: &SolverConfig,
) -> Result<NewtonResult, SolverError> {
    let ndof = 2 * problem.mesh.nodes.len();
    let bc = problem.dirichlet_values(t);
    let mut free = vec![None; ndof];
    let mut nfree = 0;
    for (d, slot) in free.iter_mut().enumerate() {
        if !bc.contains_key(&d) {
            *slot = Some(nfree);
            nfree += 1;
        }
    }
    let mut u = u0.to_vec();
    for (&d, &v) in &bc {
        u[d] = v;
    }
    let neumann = assembly::neumann_load(problem, t);
    let mut residuals = Vec::new();
    let mut r0 = 0.0;
    let mut symbolic: Option<SymbolicLu<usize>> = None;
    for it in 0..=config.max_newton_iters {
        let asm = assemble(disc, problem, &u, states, config.flags, &neumann, true)?;
        let r = norm_free(&asm.residual, &free);
        if !r.is_finite() {
            residuals.push(r);
            return Err(SolverError::StepFailure { t, residuals });
        }
        if it == 0 {
            r0 = r;
        }
        residuals.push(r);
        if r <= config.newton_abs_tol.max(config.newton_rel_tol * r0) {
            return Ok(NewtonResult { u, trial: asm.trial.clone(), residuals, assembly: asm });
        }
        if it == config.max_newton_iters {
            break;
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = asm
            .tangent
            .iter()
            .filter_map(|&(i, j, v)| match (free[i], free[j]) {
                (Some(a), Some(b)) => Some(Triplet::new(a, b, v)),
                _ => None,
            })
            .collect();
        let k = SparseColMat::<usize, f64>::try_new_from_triplets(nfree, nfree, &triplets)
            .map_err(|e| SolverError::Config(format!("sparse assembly failed: {e:?}")))?;
        if symbolic.is_none() {
            symbolic = Some(SymbolicLu::try_new(k.symbolic()).map_err(|e| SolverError::Config(format!("symbolic factorization failed: {e:?}")))?);
        }
        let pattern = symbolic.clone().expect("set above");
        let lu = Lu::try_new_with_symbolic(pattern, k.as_ref()).map_err(|_| SolverError::Singular { t })?;
        let mut rhs = Col::<f64>::zeros(nfree);
        for (d, f) in free.iter().enumerate() {
            if let Some(a) = f {
                rhs[*a] = -asm.residual[d];
            }
        }
        lu.solve_in_place(rhs.as_mat_mut());
        if !(0..nfree).all(|a| rhs[a].is_finite()) {
            return Err(SolverError::Singular { t });
        }
        for (d, f) in free.iter().enumerate() {
            if let Some(a) = f {
                u[d] += rhs[*a];
            }
        }
    }
    Err(SolverError::StepFailure { t, residuals })
}

/// Incremental load stepping with committed cohesive history and work accounting.
pub struct Solver<'a> {
    problem: &'a Problem,
    config: SolverConfig,
    disc: Discretization,
    u: Vec<f64>,
    t: f64,
    states: Vec<CohesiveState>,
    jumps: Vec<Vec2>,
    tractions: Vec<Vec2>,
    levels: Vec<f64>,
    step: usize,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a Problem, config: SolverConfig) -> Result<Self, SolverError> {
        problem.validate()?;
        config.validate()?;
        let disc = Discretization::new(problem)?;
        let nq = problem.interface.qp_count();
        Ok(Self {
            problem,
            config,
            disc,
            u: vec![0.0; 2 * problem.mesh.nodes.len()],
            t: 0.0,
            states: vec![CohesiveState::default(); nq],
            jumps: vec![Vec2::zeros(); nq],
            tractions: vec![Vec2::zeros(); nq],
            levels: config.time_levels(),
            step: 0,
        })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn states(&self) -> &[CohesiveState] {
        &self.states
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.levels.len()
    }

    /// Advance one time level. On failure the committed state is left untouched.
    pub fn step(&mut self) -> Result<StepRecord, SolverError> {
        let t = *self
            .levels
            .get(self.step)
            .ok_or_else(|| SolverError::Config("load stepping already finished".into()))?;
        let res = newton_solve(&self.disc, self.problem, &self.u, t, &self.states, &self.config)?;
        let asm = &res.assembly;
        let mut work = 0.0;
        for q in 0..self.states.len() {
            let resist_old = -self.tractions[q];
            let resist_new = -asm.qp_traction[q];
            work += 0.5 * (resist_old + resist_new).dot(&(asm.qp_jump[q] - self.jumps[q])) * asm.qp_weight[q];
        }
        let mut reactions = BTreeMap::new();
        for bc in &self.problem.bcs {
            if let BoundaryCondition::Dirichlet { tag, .. } = bc {
                let sum = self
                    .problem
                    .mesh
                    .tag(tag)
                    .iter()
                    .fold(Vec2::zeros(), |acc, &n| acc + Vec2::new(asm.residual[2 * n], asm.residual[2 * n + 1]));
                reactions.insert(tag.clone(), sum);
            }
        }
        commit_state(&mut self.states, &res.trial);
        self.jumps.clone_from(&asm.qp_jump);
        self.tractions.clone_from(&asm.qp_traction);
        self.u = res.u;
        self.t = t;
        self.step += 1;
        let max_damage = self.states.iter().map(|s| s.damage).fold(0.0, f64::max);
        Ok(StepRecord {
            t,
            imposed: self.problem.imposed(t),
            reactions,
            max_damage,
            incremental_work: work,
            newton_iterations: res.residuals.len() - 1,
        })
    }
}

/// Run every time level; stops at the first failed step.
pub fn run_load_stepping(problem: &Problem, config: SolverConfig) -> Result<Vec<StepRecord>, SolverError> {
    let mut solver = Solver::new(problem, config)?;
    let mut records = Vec::new();
    while !solver.is_finished() {
        let rec = solver.step()?;
        log::debug!("t = {} iterations = {} max damage = {}", rec.t, rec.newton_iterations, rec.max_damage);
        records.push(rec);
    }
    Ok(records)
}

/// Total cohesive work accumulated over a loading history.
pub fn energy_release(records: &[StepRecord]) -> f64 {
    records.iter().map(|r| r.incremental_work).sum()
}

/// Split `u` into per-node vectors.
pub fn nodal_vectors(u: &[f64]) -> Vec<Vec2> {
    u.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

#[cfg(test)]
mod tests;
