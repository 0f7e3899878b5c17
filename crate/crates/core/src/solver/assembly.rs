//! Residual and consistent tangent of the shifted cohesive formulation.

use super::{BoundaryCondition, CorrectionFlags, Problem, SolverError};
use crate::constitutive::{cohesive_traction, CohesiveState, ElasticMaterial};
use crate::fe::{eval, line_rule, ShapeEval};
use crate::surrogate::InterfaceQp;
use crate::Vec2;
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Matrix3x2, Vector3};

struct BulkElement {
    nodes: Vec<usize>,
    region: u32,
    qps: Vec<(ShapeEval, f64)>,
}

/// Shape data of both sides at one interface quadrature point.
#[derive(Debug, Clone)]
pub struct InterfaceKinematics {
    pub minus_nodes: Vec<usize>,
    pub plus_nodes: Vec<usize>,
    pub minus: ShapeEval,
    pub plus: ShapeEval,
    pub minus_region: u32,
    pub plus_region: u32,
    pub facet_normal: Vec2,
    pub qp: InterfaceQp,
}

/// Precomputed shape data for a problem.
pub struct Discretization {
    bulk: Vec<BulkElement>,
    pub interface: Vec<InterfaceKinematics>,
}

impl Discretization {
    pub fn new(problem: &Problem) -> Result<Self, SolverError> {
        let mesh = &problem.mesh;
        let mut bulk = Vec::with_capacity(mesh.elements.len());
        for (e, el) in mesh.elements.iter().enumerate() {
            let coords = mesh.element_coords(e);
            let qps = el
                .kind
                .bulk_rule()
                .iter()
                .map(|q| {
                    let s = eval(el.kind, &coords, q.xi);
                    (s, q.weight * s.det_j)
                })
                .collect::<Vec<_>>();
            if qps.iter().any(|(s, _)| !(s.det_j > 0.0)) {
                return Err(SolverError::Config(format!("element {e} is inverted or degenerate")));
            }
            bulk.push(BulkElement { nodes: el.nodes().to_vec(), region: mesh.regions[e], qps });
        }
        let mut interface = Vec::with_capacity(problem.interface.qp_count());
        for f in &problem.interface.facets {
            let (em, ep) = (&mesh.elements[f.facet.minus], &mesh.elements[f.facet.plus]);
            let (cm, cp) = (mesh.element_coords(f.facet.minus), mesh.element_coords(f.facet.plus));
            for qp in &f.qps {
                let xm = em.kind.edge_point(f.facet.minus_edge, qp.s);
                let xp = ep.kind.edge_point(f.facet.plus_edge, 1.0 - qp.s);
                interface.push(InterfaceKinematics {
                    minus_nodes: em.nodes().to_vec(),
                    plus_nodes: ep.nodes().to_vec(),
                    minus: eval(em.kind, &cm, xm),
                    plus: eval(ep.kind, &cp, xp),
                    minus_region: mesh.regions[f.facet.minus],
                    plus_region: mesh.regions[f.facet.plus],
                    facet_normal: f.facet.normal,
                    qp: *qp,
                });
            }
        }
        Ok(Self { bulk, interface })
    }
}

/// Output of one assembly pass.
#[derive(Debug, Clone)]
pub struct Assembly {
    /// Internal minus external forces over all dofs.
    pub residual: Vec<f64>,
    /// `(row, col, value)` entries; duplicates are summed.
    pub tangent: Vec<(usize, usize, f64)>,
    pub trial: Vec<CohesiveState>,
    /// Jump passed to the traction law at each interface point.
    pub qp_jump: Vec<Vec2>,
    /// Traction on the plus side at each interface point.
    pub qp_traction: Vec<Vec2>,
    /// Interface quadrature weight including the area factor when active.
    pub qp_weight: Vec<f64>,
}

fn b_matrix(g: &Vec2) -> Matrix3x2<f64> {
    Matrix3x2::new(g.x, 0.0, 0.0, g.y, g.y, g.x)
}

fn strain_voigt(nodes: &[usize], s: &ShapeEval, u: &[f64]) -> Vector3<f64> {
    let mut eps = Vector3::zeros();
    for (a, &n) in nodes.iter().enumerate() {
        eps += b_matrix(&s.grad[a]) * Vec2::new(u[2 * n], u[2 * n + 1]);
    }
    eps
}

/// `σ τ` written as a linear map of the Voigt stress.
fn traction_map(tau: &Vec2) -> Matrix2x3<f64> {
    Matrix2x3::new(tau.x, 0.0, tau.y, 0.0, tau.y, tau.x)
}

/// Jump at the shifted point `x + d` using each side's own extrapolation, with the
/// coefficient of every node: `∂jump_i / ∂u[2·node + i]`.
pub fn shifted_jump(u: &[f64], kin: &InterfaceKinematics, d: &Vec2) -> (Vec2, Vec<(usize, f64)>) {
    let mut coef = Vec::with_capacity(kin.minus_nodes.len() + kin.plus_nodes.len());
    let mut jump = Vec2::zeros();
    for (sign, nodes, s) in [(1.0, &kin.plus_nodes, &kin.plus), (-1.0, &kin.minus_nodes, &kin.minus)] {
        for (a, &n) in nodes.iter().enumerate() {
            let c = sign * (s.n[a] + s.grad[a].dot(d));
            jump += Vec2::new(u[2 * n], u[2 * n + 1]) * c;
            coef.push((n, c));
        }
    }
    (jump, coef)
}

fn material(problem: &Problem, region: u32) -> Result<&ElasticMaterial, SolverError> {
    problem.materials.get(&region).ok_or_else(|| SolverError::Config(format!("no material for region {region}")))
}

/// External nodal loads from Neumann conditions at time `t`.
pub(super) fn neumann_load(problem: &Problem, t: f64) -> Vec<f64> {
    let mesh = &problem.mesh;
    let mut f = vec![0.0; 2 * mesh.nodes.len()];
    let mut edges = None;
    for bc in &problem.bcs {
        if let BoundaryCondition::Neumann { tag, traction, schedule } = bc {
            let edges = edges.get_or_insert_with(|| mesh.boundary_edges());
            let mut tagged = mesh.tag(tag).to_vec();
            tagged.sort_unstable();
            let tv = traction * schedule.value(t);
            for &(e, k) in edges.iter() {
                let (a, b) = mesh.elements[e].edge(k);
                if tagged.binary_search(&a).is_err() || tagged.binary_search(&b).is_err() {
                    continue;
                }
                let len = (mesh.nodes[b] - mesh.nodes[a]).norm();
                for (s, w) in line_rule() {
                    for (n, shape) in [(a, 1.0 - s), (b, s)] {
                        f[2 * n] += w * len * shape * tv.x;
                        f[2 * n + 1] += w * len * shape * tv.y;
                    }
                }
            }
        }
    }
    f
}

/// Residual, tangent and trial history at displacement `u`.
pub fn assemble(
    disc: &Discretization,
    problem: &Problem,
    u: &[f64],
    states: &[CohesiveState],
    flags: CorrectionFlags,
    external: &[f64],
    want_tangent: bool,
) -> Result<Assembly, SolverError> {
    let ndof = 2 * problem.mesh.nodes.len();
    if u.len() != ndof || states.len() != disc.interface.len() || external.len() != ndof {
        return Err(SolverError::Config("state vector sizes do not match the problem".into()));
    }
    let mut r: Vec<f64> = external.iter().map(|f| -f).collect();
    let mut k = Vec::new();
    if want_tangent {
        k.reserve(disc.bulk.iter().map(|e| 4 * e.nodes.len() * e.nodes.len()).sum::<usize>() + 128 * states.len());
    }

    for el in &disc.bulk {
        let mat = material(problem, el.region)?;
        let d = mat.d_matrix();
        let m = el.nodes.len();
        let mut ke = [[Matrix2::zeros(); 4]; 4];
        for (s, w) in &el.qps {
            let sigma = d * strain_voigt(&el.nodes, s, u);
            for (a, &na) in el.nodes.iter().enumerate() {
                let ba = b_matrix(&s.grad[a]);
                let fa = ba.transpose() * sigma * *w;
                r[2 * na] += fa.x;
                r[2 * na + 1] += fa.y;
                if want_tangent {
                    let bd = ba.transpose() * d;
                    for b in 0..m {
                        ke[a][b] += bd * b_matrix(&s.grad[b]) * *w;
                    }
                }
            }
            if let Some(bf) = &problem.body_force {
                let f = bf(s.x, el.region);
                for (a, &na) in el.nodes.iter().enumerate() {
                    r[2 * na] -= w * s.n[a] * f.x;
                    r[2 * na + 1] -= w * s.n[a] * f.y;
                }
            }
        }
        if want_tangent {
            for (a, &na) in el.nodes.iter().enumerate() {
                for (b, &nb) in el.nodes.iter().enumerate() {
                    push_block(&mut k, na, nb, &ke[a][b]);
                }
            }
        }
    }

    let nq = disc.interface.len();
    let mut trial = Vec::with_capacity(nq);
    let mut qp_jump = Vec::with_capacity(nq);
    let mut qp_traction = Vec::with_capacity(nq);
    let mut qp_weight = Vec::with_capacity(nq);
    for (q, kin) in disc.interface.iter().enumerate() {
        let qp = &kin.qp;
        let d = if flags.use_shifted_jump { qp.distance } else { Vec2::zeros() };
        let (jump, coef) = shifted_jump(u, kin, &d);
        let normal = if flags.use_true_normal { qp.normal } else { kin.facet_normal };
        let resp = cohesive_traction(&problem.tsl, &jump, &normal, &states[q])?;
        let w = if flags.use_area_factor { qp.weight * qp.area_factor } else { qp.weight };
        // resisting traction and its derivative with respect to the jump
        let t_res = -resp.traction;
        let k_res = -resp.tangent;
        let test = [(1.0, &kin.plus_nodes, &kin.plus), (-1.0, &kin.minus_nodes, &kin.minus)];
        for (sign, nodes, s) in test {
            for (a, &na) in nodes.iter().enumerate() {
                let c = sign * s.n[a] * w;
                r[2 * na] += c * t_res.x;
                r[2 * na + 1] += c * t_res.y;
                if want_tangent {
                    for &(nb, cb) in &coef {
                        push_block(&mut k, na, nb, &(k_res * (c * cb)));
                    }
                }
            }
        }
        if flags.use_directional_correction && qp.tangential != Vec2::zeros() {
            let tmap = traction_map(&qp.tangential);
            let sides = [
                (1.0, &kin.plus_nodes, &kin.plus, kin.plus_region),
                (-1.0, &kin.minus_nodes, &kin.minus, kin.minus_region),
            ];
            for (sign, nodes, s, region) in sides {
                let dm: Matrix3<f64> = material(problem, region)?.d_matrix();
                let st = tmap * (dm * strain_voigt(nodes, s, u));
                let td = tmap * dm;
                for (a, &na) in nodes.iter().enumerate() {
                    let c = sign * qp.weight * s.n[a];
                    r[2 * na] += c * st.x;
                    r[2 * na + 1] += c * st.y;
                    if want_tangent {
                        for (b, &nb) in nodes.iter().enumerate() {
                            push_block(&mut k, na, nb, &(td * b_matrix(&s.grad[b]) * c));
                        }
                    }
                }
            }
        }
        trial.push(resp.trial);
        qp_jump.push(jump);
        qp_traction.push(resp.traction);
        qp_weight.push(w);
    }
    Ok(Assembly { residual: r, tangent: k, trial, qp_jump, qp_traction, qp_weight })
}

fn push_block(k: &mut Vec<(usize, usize, f64)>, a: usize, b: usize, m: &Matrix2<f64>) {
    for i in 0..2 {
        for j in 0..2 {
            k.push((2 * a + i, 2 * b + j, m[(i, j)]));
        }
    }
}

/// Residual at time `t` over all dofs.
pub fn assemble_residual(
    problem: &Problem,
    u: &[f64],
    states: &[CohesiveState],
    flags: CorrectionFlags,
    t: f64,
) -> Result<Vec<f64>, SolverError> {
    let disc = Discretization::new(problem)?;
    let ext = neumann_load(problem, t);
    Ok(assemble(&disc, problem, u, states, flags, &ext, false)?.residual)
}

/// Consistent tangent over all dofs as summed `(row, col, value)` triplets, sorted by position.
pub fn assemble_tangent(
    problem: &Problem,
    u: &[f64],
    states: &[CohesiveState],
    flags: CorrectionFlags,
) -> Result<Vec<(usize, usize, f64)>, SolverError> {
    let disc = Discretization::new(problem)?;
    let ext = vec![0.0; u.len()];
    let mut k = assemble(&disc, problem, u, states, flags, &ext, true)?.tangent;
    k.sort_by_key(|&(i, j, _)| (j, i));
    let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(k.len() / 4);
    for (i, j, v) in k {
        match out.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += v,
            _ => out.push((i, j, v)),
        }
    }
    Ok(out)
}
