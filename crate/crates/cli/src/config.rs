//! TOML problem configuration for `sczm solve`.
//!
//! ```toml
//! [mesh]
//! generate = { kind = "crossed-tri", nx = 21, ny = 21, bounds = [0.0, 0.0, 1.0, 1.0] }
//! # file = "mesh.txt"
//!
//! [interface]
//! line = { point = [0.5, 0.0], direction = [0.0, 1.0], left = 1, right = 2 }
//! # grains = "grains.txt"
//!
//! [[material]]
//! region = 1
//! e = 1000.0
//! nu = 0.3
//!
//! [tsl]
//! kind = "exponential"
//! gc = 50.0
//! delta0 = 0.1
//! beta = 0.0
//!
//! [[bc]]
//! kind = "dirichlet"
//! tag = "right"
//! component = "x"
//! schedule = { kind = "linear", rate = 0.01 }
//!
//! [solver]
//! dt = 1.0
//! t_end = 200.0
//!
//! [output]
//! fields_at = [100.0, 200.0]
//! ```

use crate::CliError;
use sczm::constitutive::{ElasticMaterial, TslModel};
use sczm::mesh::{build_crossed_tri, build_structured_quad, read_mesh, Bounds, Mesh};
use sczm::solver::{BoundaryCondition, CorrectionFlags, Problem, Schedule, SolverConfig};
use sczm::surrogate::{assign_grain_ids, build_surrogate_interface, read_grains, GrainSet};
use sczm::Vec2;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub mesh: MeshConfig,
    pub interface: InterfaceConfig,
    pub material: Vec<MaterialConfig>,
    pub tsl: TslConfig,
    #[serde(default)]
    pub bc: Vec<BcConfig>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub file: Option<PathBuf>,
    pub generate: Option<GenerateConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratedKind {
    Quad,
    CrossedTri,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub kind: GeneratedKind,
    pub nx: usize,
    pub ny: usize,
    #[serde(default = "unit_bounds")]
    pub bounds: [f64; 4],
}

fn unit_bounds() -> [f64; 4] {
    [0.0, 0.0, 1.0, 1.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    pub grains: Option<PathBuf>,
    pub line: Option<LineConfig>,
}

/// Straight interface splitting the mesh bounding box; `left` lies left of `direction`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub point: [f64; 2],
    pub direction: [f64; 2],
    #[serde(default = "one")]
    pub left: u32,
    #[serde(default = "two")]
    pub right: u32,
}

fn one() -> u32 {
    1
}

fn two() -> u32 {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub region: u32,
    /// Young's modulus `E`.
    pub e: f64,
    /// Poisson's ratio `ν`.
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TslKind {
    Linear,
    Exponential,
    Bilinear,
}

/// Traction-separation law. Keys by kind:
/// linear `k`; exponential `gc` (𝒢_c), `delta0` (δ₀), `beta` (β);
/// bilinear `k` (K), `g_ic`, `g_iic`, `n` (N), `s` (S), `eta` (η), `mu` (μ).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TslConfig {
    pub kind: TslKind,
    pub k: Option<f64>,
    pub gc: Option<f64>,
    pub delta0: Option<f64>,
    pub beta: Option<f64>,
    pub g_ic: Option<f64>,
    pub g_iic: Option<f64>,
    pub n: Option<f64>,
    pub s: Option<f64>,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
}

impl TslConfig {
    fn fields(&self) -> [(&'static str, Option<f64>); 10] {
        [
            ("k", self.k),
            ("gc", self.gc),
            ("delta0", self.delta0),
            ("beta", self.beta),
            ("g_ic", self.g_ic),
            ("g_iic", self.g_iic),
            ("n", self.n),
            ("s", self.s),
            ("eta", self.eta),
            ("mu", self.mu),
        ]
    }

    /// `(required, optional)` keys of the selected kind.
    fn keys(&self) -> (&'static [&'static str], &'static [&'static str]) {
        match self.kind {
            TslKind::Linear => (&["k"], &[]),
            TslKind::Exponential => (&["gc", "delta0"], &["beta"]),
            TslKind::Bilinear => (&["k", "g_ic", "g_iic", "n", "s", "eta"], &["mu"]),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let (required, optional) = self.keys();
        for (name, v) in self.fields() {
            let key = format!("tsl.{name}");
            match v {
                None if required.contains(&name) => return Err(CliError::config(&key, "missing for this kind")),
                Some(_) if !required.contains(&name) && !optional.contains(&name) => {
                    return Err(CliError::config(&key, "not a parameter of this kind"))
                }
                _ => {}
            }
        }
        self.model().validate().map_err(|e| CliError::config("tsl", e.to_string()))
    }

    pub fn model(&self) -> TslModel {
        let v = |x: Option<f64>| x.unwrap_or(0.0);
        match self.kind {
            TslKind::Linear => TslModel::Linear { k: v(self.k) },
            TslKind::Exponential => TslModel::Exponential { gc: v(self.gc), delta0: v(self.delta0), beta: v(self.beta) },
            TslKind::Bilinear => TslModel::BilinearMixedMode {
                k: v(self.k),
                g_ic: v(self.g_ic),
                g_iic: v(self.g_iic),
                n: v(self.n),
                s: v(self.s),
                eta: v(self.eta),
                mu: v(self.mu),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Dirichlet: `tag`, `component`, `schedule`. Neumann: `tag`, `traction`, `schedule`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcConfig {
    pub kind: BcKind,
    pub tag: String,
    pub component: Option<Component>,
    pub traction: Option<[f64; 2]>,
    pub schedule: ScheduleConfig,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Constant,
    Linear,
    Table,
}

/// `constant` with `value`, `linear` with `rate`, or `table` with `points = [[t, v], …]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    pub value: Option<f64>,
    pub rate: Option<f64>,
    pub points: Option<Vec<[f64; 2]>>,
}

impl ScheduleConfig {
    fn validate(&self, t_end: f64, key: &str) -> Result<(), CliError> {
        let present = [("value", self.value.is_some()), ("rate", self.rate.is_some()), ("points", self.points.is_some())];
        let wanted = match self.kind {
            ScheduleKind::Constant => "value",
            ScheduleKind::Linear => "rate",
            ScheduleKind::Table => "points",
        };
        for (name, is_set) in present {
            if is_set != (name == wanted) {
                let msg = if is_set { "not a parameter of this kind" } else { "missing for this kind" };
                return Err(CliError::config(&format!("{key}.{name}"), msg));
            }
        }
        if let Some(points) = &self.points {
            let (Some(first), Some(last)) = (points.first(), points.last()) else {
                return Err(CliError::config(key, "empty table"));
            };
            if first[0] > 0.0 || last[0] < t_end {
                return Err(CliError::config(
                    key,
                    format!("table covers t ∈ [{}, {}] but the run needs [0, {t_end}]", first[0], last[0]),
                ));
            }
        }
        Ok(())
    }

    fn schedule(&self) -> Schedule {
        match self.kind {
            ScheduleKind::Constant => Schedule::Constant(self.value.unwrap_or(0.0)),
            ScheduleKind::Linear => Schedule::Linear { rate: self.rate.unwrap_or(0.0) },
            ScheduleKind::Table => Schedule::Table(self.points.iter().flatten().map(|p| (p[0], p[1])).collect()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_dt")]
    pub t_end: f64,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_iters")]
    pub max_newton_iters: usize,
    #[serde(default)]
    pub flags: FlagsConfig,
}

fn default_dt() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-10
}

fn default_iters() -> usize {
    25
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: default_dt(),
            rel_tol: default_tol(),
            abs_tol: default_tol(),
            max_newton_iters: default_iters(),
            flags: FlagsConfig::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsConfig {
    #[serde(default = "yes")]
    pub shifted_jump: bool,
    #[serde(default = "yes")]
    pub area_factor: bool,
    #[serde(default = "yes")]
    pub directional: bool,
    #[serde(default = "yes")]
    pub true_normal: bool,
}

fn yes() -> bool {
    true
}

impl Default for FlagsConfig {
    fn default() -> Self {
        Self { shifted_jump: true, area_factor: true, directional: true, true_normal: true }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Times at which the displacement field is written.
    #[serde(default)]
    pub fields_at: Vec<f64>,
}

/// Parse a configuration, reporting unknown keys and type errors with their key path.
pub fn parse_config(text: &str) -> Result<ProblemConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config { key: String::new(), msg: e.to_string() })?;
    let cfg: ProblemConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
        key: e.path().to_string(),
        msg: e.inner().message().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ProblemConfig {
    fn validate(&self) -> Result<(), CliError> {
        match (&self.mesh.file, &self.mesh.generate) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(CliError::config("mesh", "exactly one of `file` and `generate` is required")),
        }
        if let Some(g) = &self.mesh.generate {
            if g.nx == 0 || g.ny == 0 {
                return Err(CliError::config("mesh.generate", "nx and ny must be positive"));
            }
        }
        match (&self.interface.grains, &self.interface.line) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(CliError::config("interface", "exactly one of `grains` and `line` is required")),
        }
        let s = &self.solver;
        if !(s.dt > 0.0 && s.t_end > 0.0 && s.dt.is_finite() && s.t_end.is_finite()) {
            return Err(CliError::config("solver", "dt and t_end must be positive"));
        }
        if !(s.rel_tol > 0.0 && s.abs_tol > 0.0 && s.max_newton_iters > 0) {
            return Err(CliError::config("solver", "tolerances and max_newton_iters must be positive"));
        }
        self.tsl.validate()?;
        for (i, bc) in self.bc.iter().enumerate() {
            let key = format!("bc[{i}]");
            match (bc.kind, bc.component.is_some(), bc.traction.is_some()) {
                (BcKind::Dirichlet, true, false) | (BcKind::Neumann, false, true) => {}
                (BcKind::Dirichlet, ..) => return Err(CliError::config(&key, "dirichlet takes `component` and no `traction`")),
                (BcKind::Neumann, ..) => return Err(CliError::config(&key, "neumann takes `traction` and no `component`")),
            }
            bc.schedule.validate(s.t_end, &format!("{key}.schedule"))?;
        }
        Ok(())
    }

    /// Resolve relative paths against `base`.
    pub fn resolve(&mut self, base: &Path) {
        for p in [&mut self.mesh.file, &mut self.interface.grains, &mut self.output.dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            newton_rel_tol: s.rel_tol,
            newton_abs_tol: s.abs_tol,
            max_newton_iters: s.max_newton_iters,
            dt: s.dt,
            t_end: s.t_end,
            flags: CorrectionFlags {
                use_shifted_jump: s.flags.shifted_jump,
                use_area_factor: s.flags.area_factor,
                use_directional_correction: s.flags.directional,
                use_true_normal: s.flags.true_normal,
            },
        }
    }

    fn load_mesh(&self) -> Result<Mesh, CliError> {
        if let Some(path) = &self.mesh.file {
            let mut mesh = read_mesh(crate::open(path)?)?.mesh;
            if mesh.boundary_tags.is_empty() {
                mesh.tag_box_sides();
            }
            return Ok(mesh);
        }
        let g = self.mesh.generate.as_ref().expect("validated");
        let b = Bounds::new(g.bounds[0], g.bounds[1], g.bounds[2], g.bounds[3]);
        Ok(match g.kind {
            GeneratedKind::Quad => build_structured_quad(g.nx, g.ny, b)?,
            GeneratedKind::CrossedTri => build_crossed_tri(g.nx, g.ny, b)?,
        })
    }

    fn load_grains(&self, mesh: &Mesh) -> Result<GrainSet, CliError> {
        if let Some(path) = &self.interface.grains {
            return Ok(read_grains(crate::open(path)?)?);
        }
        let l = self.interface.line.as_ref().expect("validated");
        Ok(GrainSet::split_rect(
            mesh.bounds(),
            Vec2::new(l.point[0], l.point[1]),
            Vec2::new(l.direction[0], l.direction[1]),
            l.left,
            l.right,
        )?)
    }

    /// Mesh, grains, dominant-volume labels, surrogate interface and boundary conditions.
    pub fn build_problem(&self) -> Result<Problem, CliError> {
        let mesh = self.load_mesh()?;
        let grains = self.load_grains(&mesh)?;
        let ids = assign_grain_ids(&mesh, &grains)?;
        let interface = build_surrogate_interface(&mesh, &grains, &ids)?;
        let (split, _) = sczm::mesh::split_by_regions(&mesh.with_regions(ids)?);
        let mut materials = BTreeMap::new();
        for (i, m) in self.material.iter().enumerate() {
            let mat = ElasticMaterial::new(m.e, m.nu).map_err(|e| CliError::config(&format!("material[{i}]"), e.to_string()))?;
            if materials.insert(m.region, mat).is_some() {
                return Err(CliError::config(&format!("material[{i}].region"), format!("duplicate region {}", m.region)));
            }
        }
        let bcs = self
            .bc
            .iter()
            .map(|bc| match bc.kind {
                BcKind::Dirichlet => BoundaryCondition::Dirichlet {
                    tag: bc.tag.clone(),
                    component: (bc.component == Some(Component::Y)) as usize,
                    schedule: bc.schedule.schedule(),
                },
                BcKind::Neumann => {
                    let t = bc.traction.unwrap_or_default();
                    BoundaryCondition::Neumann { tag: bc.tag.clone(), traction: Vec2::new(t[0], t[1]), schedule: bc.schedule.schedule() }
                }
            })
            .collect();
        let problem = Problem { mesh: split, interface, materials, tsl: self.tsl.model(), bcs, body_force: None };
        problem.validate()?;
        Ok(problem)
    }
}
