use super::*;
use crate::mesh::{build_crossed_tri, build_structured_quad, split_by_regions, Bounds};
use crate::surrogate::{assign_grain_ids, build_surrogate_interface, GrainSet, InterfaceQp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tagged(mut mesh: Mesh) -> Mesh {
    mesh.tag_box_sides();
    mesh
}

fn materials(e: f64) -> BTreeMap<u32, ElasticMaterial> {
    [(1, ElasticMaterial::new(e, 0.3).unwrap()), (2, ElasticMaterial::new(e, 0.3).unwrap())].into()
}

fn pull_bcs() -> Vec<BoundaryCondition> {
    vec![
        BoundaryCondition::Dirichlet { tag: "left".into(), component: 0, schedule: Schedule::Constant(0.0) },
        BoundaryCondition::Dirichlet { tag: "bottom".into(), component: 1, schedule: Schedule::Constant(0.0) },
        BoundaryCondition::Dirichlet { tag: "right".into(), component: 0, schedule: Schedule::Linear { rate: 0.01 } },
    ]
}

/// Two grains split by the line through `a` along `dir`, solved on an `n×n` mesh.
fn sczm_problem(mesh: Mesh, a: Vec2, dir: Vec2, tsl: TslModel) -> Problem {
    let grains = GrainSet::split_rect(Bounds::unit(), a, dir, 1, 2).unwrap();
    let ids = assign_grain_ids(&mesh, &grains).unwrap();
    let interface = build_surrogate_interface(&mesh, &grains, &ids).unwrap();
    let (split, _) = split_by_regions(&mesh.with_regions(ids).unwrap());
    Problem { mesh: split, interface, materials: materials(1e3), tsl, bcs: pull_bcs(), body_force: None }
}

fn exponential() -> TslModel {
    TslModel::Exponential { gc: 50.0, delta0: 0.1, beta: 0.5 }
}

fn dense(n: usize, trip: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut k = vec![vec![0.0; n]; n];
    for &(i, j, v) in trip {
        k[i][j] += v;
    }
    k
}

#[test]
fn zero_state_gives_zero_residual() {
    let p = sczm_problem(tagged(build_crossed_tri(4, 4, Bounds::unit()).unwrap()), Vec2::new(0.43, 0.0), Vec2::new(0.2, 1.0), exponential());
    let u = vec![0.0; 2 * p.mesh.nodes.len()];
    let states = vec![CohesiveState::default(); p.interface.qp_count()];
    let r = assemble_residual(&p, &u, &states, CorrectionFlags::all(), 0.0).unwrap();
    assert!(r.iter().all(|&v| v == 0.0));
}

#[test]
fn shifted_jump_examples() {
    let mesh = tagged(build_structured_quad(2, 1, Bounds::new(0.0, 0.0, 2.0, 1.0)).unwrap());
    let mesh = mesh.with_regions(vec![1, 2]).unwrap();
    let (split, _) = split_by_regions(&mesh);
    let facets = crate::mesh::interior_facets(&mesh).unwrap();
    let p = Problem {
        mesh: split.clone(),
        interface: SurrogateInterface::fitted(&mesh, &facets),
        materials: materials(1.0),
        tsl: TslModel::Linear { k: 1.0 },
        bcs: vec![],
        body_force: None,
    };
    let disc = Discretization::new(&p).unwrap();
    let kin = &disc.interface[0];
    // u⁺ = x e_x on the plus element, zero on the minus element
    let mut u = vec![0.0; 2 * split.nodes.len()];
    for &n in split.elements[1].nodes() {
        u[2 * n] = split.nodes[n].x;
    }
    let (j0, _) = shifted_jump(&u, kin, &Vec2::zeros());
    assert!((j0.x - kin.qp.point.x).abs() < 1e-14 && j0.y == 0.0);
    let (j1, coef) = shifted_jump(&u, kin, &Vec2::new(0.1, 0.0));
    assert!((j1.x - (kin.qp.point.x + 0.1)).abs() < 1e-14);
    let from_coef: f64 = coef.iter().map(|&(n, c)| c * u[2 * n]).sum();
    assert!((from_coef - j1.x).abs() < 1e-14);
    // a continuous linear field has no jump at any shift
    for (n, x) in split.nodes.iter().enumerate() {
        u[2 * n] = 0.3 * x.x - 0.2 * x.y;
        u[2 * n + 1] = 0.7 * x.y + 0.1;
    }
    let (j2, _) = shifted_jump(&u, kin, &Vec2::new(0.37, -0.21));
    assert!(j2.norm() < 1e-14);
}

#[test]
fn linear_problem_converges_in_one_iteration() {
    let mut p = sczm_problem(tagged(build_crossed_tri(5, 5, Bounds::unit()).unwrap()), Vec2::new(0.47, 0.0), Vec2::new(0.3, 1.0), TslModel::Linear { k: 50.0 });
    p.tsl = TslModel::Linear { k: 50.0 };
    let cfg = SolverConfig { dt: 1.0, t_end: 2.0, ..SolverConfig::default() };
    let recs = run_load_stepping(&p, cfg).unwrap();
    assert!(recs.iter().all(|r| r.newton_iterations == 1));
}

#[test]
fn fitted_interface_reduces_to_plain_czm() {
    let p = sczm_problem(tagged(build_structured_quad(4, 4, Bounds::unit()).unwrap()), Vec2::new(0.5, 0.0), Vec2::new(0.0, 1.0), exponential());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u: Vec<f64> = (0..2 * p.mesh.nodes.len()).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let states = vec![CohesiveState::default(); p.interface.qp_count()];
    let all = assemble_residual(&p, &u, &states, CorrectionFlags::all(), 0.0).unwrap();
    let none = assemble_residual(&p, &u, &states, CorrectionFlags::none(), 0.0).unwrap();
    assert_eq!(all, none);
    let ka = assemble_tangent(&p, &u, &states, CorrectionFlags::all()).unwrap();
    let kn = assemble_tangent(&p, &u, &states, CorrectionFlags::none()).unwrap();
    assert_eq!(ka, kn);
}

#[test]
fn tangent_matches_finite_differences_for_every_flag_combination() {
    let p = sczm_problem(tagged(build_crossed_tri(3, 3, Bounds::unit()).unwrap()), Vec2::new(0.41, 0.0), Vec2::new(0.35, 1.0), exponential());
    let n = 2 * p.mesh.nodes.len();
    let nq = p.interface.qp_count();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for mask in 0..8u8 {
        let flags = CorrectionFlags {
            use_shifted_jump: mask & 1 != 0,
            use_area_factor: mask & 2 != 0,
            use_directional_correction: mask & 4 != 0,
            use_true_normal: true,
        };
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.02..0.02)).collect();
        let states: Vec<CohesiveState> = (0..nq)
            .map(|_| {
                let m = rng.gen_range(0.0..0.05);
                CohesiveState { damage: 1.0 - (-m / 0.1f64).exp(), max_separation: m }
            })
            .collect();
        let k = dense(n, &assemble_tangent(&p, &u, &states, flags).unwrap());
        let h = 1e-7;
        let mut max_err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let rp = assemble_residual(&p, &up, &states, flags, 0.0).unwrap();
            let rm = assemble_residual(&p, &um, &states, flags, 0.0).unwrap();
            for i in 0..n {
                let fd = (rp[i] - rm[i]) / (2.0 * h);
                max_err = max_err.max((fd - k[i][j]).abs());
                scale = scale.max(k[i][j].abs());
            }
        }
        assert!(max_err <= 1e-6 * scale, "flags {flags:?}: error {max_err} scale {scale}");
    }
}

#[test]
fn bulk_tangent_is_symmetric() {
    let mut mesh = tagged(build_crossed_tri(3, 3, Bounds::unit()).unwrap());
    mesh.regions = vec![1; mesh.elements.len()];
    let p = Problem {
        mesh,
        interface: SurrogateInterface::default(),
        materials: materials(7.0),
        tsl: TslModel::Linear { k: 1.0 },
        bcs: vec![],
        body_force: None,
    };
    let n = 2 * p.mesh.nodes.len();
    let k = dense(n, &assemble_tangent(&p, &vec![0.0; n], &[], CorrectionFlags::all()).unwrap());
    for i in 0..n {
        for j in 0..n {
            assert!((k[i][j] - k[j][i]).abs() <= 1e-12 * k[i][i].abs().max(1.0));
        }
    }
}

#[test]
fn reactions_balance_on_opposite_sides() {
    let fitted = sczm_problem(tagged(build_crossed_tri(6, 6, Bounds::unit()).unwrap()), Vec2::new(0.5, 0.0), Vec2::new(0.0, 1.0), exponential());
    let inclined = sczm_problem(tagged(build_crossed_tri(6, 6, Bounds::unit()).unwrap()), Vec2::new(0.45, 0.0), Vec2::new(0.2, 1.0), exponential());
    // the directional terms carry a net force (σ⁺ − σ⁻)τ_h, so balance is exact only without them
    let no_dir = CorrectionFlags { use_directional_correction: false, ..CorrectionFlags::all() };
    for (p, flags) in [(&fitted, CorrectionFlags::all()), (&inclined, no_dir), (&inclined, CorrectionFlags::none())] {
        let recs = run_load_stepping(p, SolverConfig { dt: 2.0, t_end: 20.0, flags, ..SolverConfig::default() }).unwrap();
        for r in &recs {
            let (l, rt) = (r.reactions["left"].x, r.reactions["right"].x);
            assert!((l + rt).abs() <= 1e-8 * rt.abs().max(1e-12), "{flags:?}: {l} {rt}");
        }
    }
}

#[test]
fn damage_is_monotone_and_work_accumulates() {
    let p = sczm_problem(tagged(build_crossed_tri(6, 6, Bounds::unit()).unwrap()), Vec2::new(0.5, 0.0), Vec2::new(0.0, 1.0), exponential());
    let mut s = Solver::new(&p, SolverConfig { dt: 2.0, t_end: 40.0, ..SolverConfig::default() }).unwrap();
    let mut prev = s.states().to_vec();
    while !s.is_finished() {
        s.step().unwrap();
        for (a, b) in prev.iter().zip(s.states()) {
            assert!(b.damage >= a.damage);
        }
        prev = s.states().to_vec();
    }
    assert!(prev.iter().any(|st| st.damage > 0.5));
}

#[test]
fn oversized_step_reports_failure() {
    let p = sczm_problem(tagged(build_crossed_tri(6, 6, Bounds::unit()).unwrap()), Vec2::new(0.5, 0.0), Vec2::new(0.0, 1.0), exponential());
    let cfg = SolverConfig { dt: 100.0, t_end: 200.0, max_newton_iters: 2, ..SolverConfig::default() };
    match run_load_stepping(&p, cfg) {
        Err(SolverError::StepFailure { t, residuals }) => {
            assert_eq!(t, 100.0);
            assert_eq!(residuals.len(), 3);
        }
        other => panic!("expected a step failure, got {other:?}"),
    }
}

#[test]
fn zero_history_has_zero_energy() {
    assert_eq!(energy_release(&[]), 0.0);
}

#[test]
fn schedules() {
    let t = Schedule::Table(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)]);
    assert_eq!(t.value(0.5), 1.0);
    assert_eq!(t.value(5.0), 2.0);
    assert_eq!(Schedule::Linear { rate: 0.01 }.value(200.0), 2.0);
    let cfg = SolverConfig { dt: 0.75, t_end: 2.0, ..SolverConfig::default() };
    assert_eq!(cfg.time_levels(), vec![0.75, 1.5, 2.0]);
}

#[test]
fn interface_qp_invariants_hold_on_inclined_interface() {
    let mesh = tagged(build_structured_quad(8, 8, Bounds::unit()).unwrap());
    let p = sczm_problem(mesh, Vec2::new(0.5, 0.5), Vec2::new(0.5, 3f64.sqrt() / 2.0), exponential());
    let check = |q: &InterfaceQp| {
        assert!((q.normal.norm() - 1.0).abs() < 1e-12);
        assert!(q.tangential.dot(&q.normal).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&q.area_factor));
    };
    p.interface.facets.iter().flat_map(|f| f.qps.iter()).for_each(check);
}

#[test]
fn uniform_traction_gives_uniform_strain() {
    let mut mesh = build_crossed_tri(4, 3, Bounds::new(0.0, 0.0, 2.0, 1.0)).unwrap();
    mesh.regions = vec![1; mesh.elements.len()];
    let p = Problem {
        mesh,
        interface: SurrogateInterface::default(),
        materials: [(1, ElasticMaterial::new(4.0, 0.0).unwrap())].into(),
        tsl: TslModel::Linear { k: 1.0 },
        bcs: vec![
            BoundaryCondition::Dirichlet { tag: "left".into(), component: 0, schedule: Schedule::Constant(0.0) },
            BoundaryCondition::Dirichlet { tag: "bottom".into(), component: 1, schedule: Schedule::Constant(0.0) },
            BoundaryCondition::Neumann { tag: "right".into(), traction: Vec2::new(1.0, 0.0), schedule: Schedule::Linear { rate: 0.5 } },
        ],
        body_force: None,
    };
    let mut s = Solver::new(&p, SolverConfig { dt: 1.0, t_end: 2.0, ..SolverConfig::default() }).unwrap();
    s.step().unwrap();
    let rec = s.step().unwrap();
    for (n, x) in p.mesh.nodes.iter().enumerate() {
        assert!((s.u()[2 * n] - x.x / 4.0).abs() < 1e-12);
        assert!(s.u()[2 * n + 1].abs() < 1e-12);
    }
    assert!((rec.reactions["left"].x + 1.0).abs() < 1e-12);
}
