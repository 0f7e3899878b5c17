//! Manufactured solutions for a single vertical interface and convergence studies.
//!
//! Domain `[−½, ½]²` with the interface at `x = x₀`. The plus side is `x < x₀` with
//! `u⁺ = (−sin πx, 0)`; the minus side carries `u⁻ = u⁺ − g` with `g = (a x² + b, 0)`.

use crate::constitutive::{ElasticMaterial, TslModel};
use crate::fe::eval;
use crate::mesh::{build_crossed_tri, split_by_regions, Bounds, Mesh};
use crate::solver::{BoundaryCondition, CorrectionFlags, Problem, Solver, SolverConfig, SolverError};
use crate::surrogate::{assign_grain_ids, build_surrogate_interface, GrainSet, SurrogateError};
use crate::Vec2;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MmsError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("invalid study: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    QuadraticJump,
    LinearJump,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::QuadraticJump => "quadratic",
            CaseKind::LinearJump => "linear",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "quadratic" => Some(CaseKind::QuadraticJump),
            "linear" => Some(CaseKind::LinearJump),
            _ => None,
        }
    }
}

/// Region id of the plus side (`x < x₀`) and of the minus side.
pub const PLUS_REGION: u32 = 2;
pub const MINUS_REGION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub x0: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
}

/// Coefficients from traction continuity and `t_coh = −g` at `x₀` (unit cohesive stiffness).
pub fn build_mms_case(kind: CaseKind) -> ManufacturedCase {
    let x0 = 0.25;
    let (e_plus, e_minus) = match kind {
        CaseKind::QuadraticJump => (0.1, 1.0),
        CaseKind::LinearJump => (0.1, 0.1),
    };
    let c = (PI * x0).cos();
    let sigma_plus = -PI * e_plus * c;
    match kind {
        CaseKind::QuadraticJump => {
            // −π E⁺ cos(πx₀) = E⁻ (−π cos(πx₀) − 2 a x₀)
            let a = (sigma_plus / e_minus + PI * c) / (-2.0 * x0);
            let b = -sigma_plus - a * x0 * x0;
            ManufacturedCase { kind, x0, e_plus, e_minus, nu: 0.0, a, b }
        }
        CaseKind::LinearJump => {
            ManufacturedCase { kind, x0, e_plus, e_minus, nu: 0.0, a: 0.0, b: -sigma_plus }
        }
    }
}

impl ManufacturedCase {
    /// Jump `g(x)` in the x component.
    pub fn jump(&self, x: f64) -> f64 {
        match self.kind {
            CaseKind::QuadraticJump => self.a * x * x + self.b,
            CaseKind::LinearJump => self.a * x + self.b,
        }
    }

    fn jump_dx(&self, x: f64) -> f64 {
        match self.kind {
            CaseKind::QuadraticJump => 2.0 * self.a * x,
            CaseKind::LinearJump => self.a,
        }
    }

    fn jump_dxx(&self) -> f64 {
        match self.kind {
            CaseKind::QuadraticJump => 2.0 * self.a,
            CaseKind::LinearJump => 0.0,
        }
    }

    pub fn is_plus(&self, x: &Vec2) -> bool {
        x.x < self.x0
    }

    /// Closed form of one side's field, extended over the whole domain.
    pub fn exact_on_side(&self, x: &Vec2, plus: bool) -> Vec2 {
        let up = -(PI * x.x).sin();
        Vec2::new(if plus { up } else { up - self.jump(x.x) }, 0.0)
    }

    pub fn stress_xx_on_side(&self, x: f64, plus: bool) -> f64 {
        let du = -PI * (PI * x).cos();
        if plus {
            self.e_plus * du
        } else {
            self.e_minus * (du - self.jump_dx(x))
        }
    }

    pub fn body_force_on_side(&self, x: &Vec2, plus: bool) -> Vec2 {
        let s = (PI * x.x).sin();
        let bx = if plus { -PI * PI * self.e_plus * s } else { -self.e_minus * (PI * PI * s - self.jump_dxx()) };
        Vec2::new(bx, 0.0)
    }

    pub fn material(&self, plus: bool) -> ElasticMaterial {
        ElasticMaterial { e: if plus { self.e_plus } else { self.e_minus }, nu: self.nu }
    }
}

pub fn exact_solution(case: &ManufacturedCase, x: &Vec2) -> Vec2 {
    case.exact_on_side(x, case.is_plus(x))
}

pub fn body_force(case: &ManufacturedCase, x: &Vec2) -> Vec2 {
    case.body_force_on_side(x, case.is_plus(x))
}

pub fn domain() -> Bounds {
    Bounds::new(-0.5, -0.5, 0.5, 0.5)
}

/// Crossed-triangle mesh with `2^level + 1` cells per side, so `x₀` never lies on a mesh line.
pub fn mms_mesh(level: u32) -> Mesh {
    let n = (1usize << level) + 1;
    let mut m = build_crossed_tri(n, n, domain()).expect("valid structured mesh");
    m.tag_box_sides();
    m
}

/// SCZM problem with body force, unit linear cohesive law and exact Dirichlet data on `∂Ω`.
pub fn mms_problem(case: &ManufacturedCase, mesh: &Mesh) -> Result<Problem, MmsError> {
    let grains = GrainSet::split_rect(domain(), Vec2::new(case.x0, 0.0), Vec2::new(0.0, 1.0), PLUS_REGION, MINUS_REGION)?;
    let ids = assign_grain_ids(mesh, &grains)?;
    let interface = build_surrogate_interface(mesh, &grains, &ids)?;
    let tagged = mesh.clone().with_regions(ids).map_err(SolverError::from)?;
    let (split, _) = split_by_regions(&tagged);
    let node_region = split.node_regions();
    let mut values = Vec::new();
    let mut boundary: Vec<usize> = ["left", "right", "bottom", "top"].iter().flat_map(|t| split.tag(t).to_vec()).collect();
    boundary.sort_unstable();
    boundary.dedup();
    for n in boundary {
        let plus = node_region[n] == Some(PLUS_REGION);
        let u = case.exact_on_side(&split.nodes[n], plus);
        values.push((2 * n, u.x));
        values.push((2 * n + 1, u.y));
    }
    let c = *case;
    let materials: BTreeMap<u32, ElasticMaterial> =
        [(PLUS_REGION, case.material(true)), (MINUS_REGION, case.material(false))].into();
    Ok(Problem {
        mesh: split,
        interface,
        materials,
        tsl: TslModel::Linear { k: 1.0 },
        bcs: vec![BoundaryCondition::DirichletNodal { values }],
        body_force: Some(Box::new(move |x, region| c.body_force_on_side(&x, region == PLUS_REGION))),
    })
}

/// `√(Σ_e ∫_e |u_h − u_exact|²)`, each element compared with its own region's closed form.
pub fn l2_error(mesh: &Mesh, u: &[f64], case: &ManufacturedCase) -> f64 {
    let mut sum = 0.0;
    for (e, el) in mesh.elements.iter().enumerate() {
        let coords = mesh.element_coords(e);
        let plus = mesh.regions[e] == PLUS_REGION;
        for q in el.kind.error_rule() {
            let s = eval(el.kind, &coords, q.xi);
            let mut uh = Vec2::zeros();
            for (a, &n) in el.nodes().iter().enumerate() {
                uh += Vec2::new(u[2 * n], u[2 * n + 1]) * s.n[a];
            }
            sum += q.weight * s.det_j * (uh - case.exact_on_side(&s.x, plus)).norm_squared();
        }
    }
    sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub error: f64,
    /// Slope against the previous level; `NaN` for the first row.
    pub local_slope: f64,
}

/// Solve one level and return `(h, error)`.
pub fn solve_level(case: &ManufacturedCase, level: u32, flags: CorrectionFlags) -> Result<(f64, f64), MmsError> {
    let mesh = mms_mesh(level);
    let problem = mms_problem(case, &mesh)?;
    let cfg = SolverConfig { dt: 1.0, t_end: 1.0, newton_rel_tol: 1e-12, newton_abs_tol: 1e-14, flags, ..SolverConfig::default() };
    let mut solver = Solver::new(&problem, cfg)?;
    solver.step()?;
    let h = 1.0 / ((1usize << level) + 1) as f64;
    Ok((h, l2_error(&problem.mesh, solver.u(), case)))
}

pub fn convergence_study(kind: CaseKind, levels: &[u32], flags: CorrectionFlags) -> Result<Vec<ConvergenceRow>, MmsError> {
    if levels.len() < 3 {
        return Err(MmsError::Invalid("at least three levels are required".into()));
    }
    let case = build_mms_case(kind);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for &level in levels {
        let (h, error) = solve_level(&case, level, flags)?;
        let local_slope = rows.last().map_or(f64::NAN, |p| (error / p.error).ln() / (h / p.h).ln());
        log::info!("mms {} level {level}: h = {h:.5} error = {error:.6e}", kind.name());
        rows.push(ConvergenceRow { level, h, error, local_slope });
    }
    Ok(rows)
}

/// Least-squares slope of `log error` against `log h`.
pub fn fitted_slope(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), r.error.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_coefficients() {
        let c = build_mms_case(CaseKind::QuadraticJump);
        assert!((c.a - -3.998_594_644).abs() < 1e-8, "{}", c.a);
        assert!((c.b - 0.472_056_312).abs() < 1e-8, "{}", c.b);
    }

    #[test]
    fn linear_case_has_zero_slope() {
        let c = build_mms_case(CaseKind::LinearJump);
        assert_eq!(c.a, 0.0);
        assert!((c.b - PI * 0.1 * (PI / 4.0).cos()).abs() < 1e-16);
    }

    #[test]
    fn interface_conditions_hold() {
        for kind in [CaseKind::QuadraticJump, CaseKind::LinearJump] {
            let c = build_mms_case(kind);
            let (sp, sm) = (c.stress_xx_on_side(c.x0, true), c.stress_xx_on_side(c.x0, false));
            assert!((sp - sm).abs() < 1e-12);
            // traction on the plus body equals −g
            assert!((sp + c.jump(c.x0)).abs() < 1e-12);
            let x = Vec2::new(c.x0, 0.3);
            let j = c.exact_on_side(&x, true) - c.exact_on_side(&x, false);
            assert!((j.x - c.jump(c.x0)).abs() < 1e-15 && j.y == 0.0);
        }
    }

    #[test]
    fn exact_solution_trivia() {
        let c = build_mms_case(CaseKind::QuadraticJump);
        assert_eq!(exact_solution(&c, &Vec2::zeros()), Vec2::zeros());
        assert_eq!(body_force(&c, &Vec2::zeros()), Vec2::zeros());
        let x = Vec2::new(0.4, 0.1);
        let diff = c.body_force_on_side(&x, false) - c.body_force_on_side(&x, true) * (c.e_minus / c.e_plus);
        assert!((diff.x - 2.0 * c.a * c.e_minus).abs() < 1e-12);
    }

    #[test]
    fn body_force_balances_stress_divergence() {
        let c = build_mms_case(CaseKind::QuadraticJump);
        let h = 1e-5;
        for &x in &[-0.41, -0.1, 0.05, 0.3, 0.47] {
            for plus in [true, false] {
                let div = (c.stress_xx_on_side(x + h, plus) - c.stress_xx_on_side(x - h, plus)) / (2.0 * h);
                let b = c.body_force_on_side(&Vec2::new(x, 0.0), plus).x;
                assert!((div + b).abs() < 1e-8, "x = {x}");
            }
        }
    }

    /// Interpolation error on an `n × n` crossed-triangle mesh; `x₀` is a mesh line when `n` is a multiple of 4.
    fn interpolant_error(c: &ManufacturedCase, n: usize) -> f64 {
        let mut m = build_crossed_tri(n, n, domain()).unwrap();
        m.regions = (0..m.elements.len()).map(|e| if m.element_centroid(e).x < c.x0 { PLUS_REGION } else { MINUS_REGION }).collect();
        let (split, _) = split_by_regions(&m);
        let regions = split.node_regions();
        let u: Vec<f64> = split
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(n, x)| {
                let v = c.exact_on_side(x, regions[n] == Some(PLUS_REGION));
                [v.x, v.y]
            })
            .collect();
        let e = l2_error(&split, &u, c);
        let shifted: Vec<f64> = u.iter().map(|v| v + 1e-3).collect();
        assert!(l2_error(&split, &shifted, c) > e);
        e
    }

    #[test]
    fn fitted_interpolant_error_decays_at_second_order() {
        for kind in [CaseKind::QuadraticJump, CaseKind::LinearJump] {
            let c = build_mms_case(kind);
            let e: Vec<f64> = [8, 16, 32].iter().map(|&n| interpolant_error(&c, n)).collect();
            for w in e.windows(2) {
                assert!((w[0] / w[1]).log2() > 1.9, "{e:?}");
            }
        }
    }
}
