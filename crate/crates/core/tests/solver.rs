mod common;

use common::{gaussian_like, rng};
use nalgebra::DMatrix;
use rdrsom::problems::maxcut::{random_connected_graph, MaxcutInstance};
use rdrsom::problems::snl::{snl_generate, snl_manifold, snl_random_start, SnlObjective};
use rdrsom::problems::KsInstance;
use rdrsom::solver::subspace::build_subspace;
use rdrsom::solver::{step, IterationState};
use rdrsom::{solve, solve_baseline_bb, Manifold, SolverConfig, Variant};

fn maxcut(n: usize, seed: u64) -> (MaxcutInstance, Manifold, DMatrix<f64>) {
    let inst = MaxcutInstance::from_edges(n, &random_connected_graph(n, 6.0, seed), None).unwrap();
    let m = inst.manifold();
    let x0 = m.project_point(&gaussian_like(&mut rng(seed), n, inst.r)).unwrap();
    (inst, m, x0)
}

#[test]
fn accepted_steps_decrease_and_keep_gradient_in_span() {
    let (inst, m, x0) = maxcut(80, 1);
    let config = SolverConfig::default();
    let mut state = IterationState::new(&inst, &m, x0, config.gamma_init);
    for _ in 0..60 {
        if state.grad_norm < config.eps_grad {
            break;
        }
        let f_before = state.f;
        let out = step(&inst, &m, &mut state, &config).unwrap();
        assert!(out.gradient_in_span <= 1e-10);
        assert!(out.quadratic_decrease >= out.gamma / 4.0 * out.step_norm.powi(3) * (1.0 - 1e-10));
        if out.accepted {
            assert!(state.f < f_before);
        } else {
            assert_eq!(state.f, f_before);
        }
        assert!(m.feasibility_residual(&state.x) <= 1e-10);
    }
}

#[test]
fn parallel_momentum_collapses_subspace() {
    let m = Manifold::Euclidean { n: 4, r: 1 };
    struct Quad;
    impl rdrsom::Objective for Quad {
        fn value_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
            (0.5 * x.norm_squared(), x.clone())
        }
    }
    // On ½‖x‖² every step is along -x, so the displacement is parallel to g.
    let x_prev = DMatrix::from_element(4, 1, 2.0);
    let mut state = IterationState::new(&Quad, &m, DMatrix::from_element(4, 1, 1.0), 1.0);
    state.history.push_front(rdrsom::solver::HistoryEntry {
        x: x_prev.clone(),
        grad: x_prev,
    });
    let basis = build_subspace(&m, &state, 1).unwrap();
    assert_eq!(basis.dim(), 1);
}

#[test]
fn variants_reach_the_same_kohn_sham_value() {
    let inst = KsInstance::new(60, 4, 1.0).unwrap();
    let m = inst.manifold();
    let x0 = m.project_point(&gaussian_like(&mut rng(3), 60, 4)).unwrap();
    let mut values = Vec::new();
    for variant in [Variant::FiniteDifference, Variant::ExactHessian] {
        let cfg = SolverConfig {
            variant,
            eps_grad: 1e-7,
            ..SolverConfig::default()
        };
        let rep = solve(&inst, &m, &x0, &cfg).unwrap();
        assert!(rep.converged(), "{variant:?}: {}", rep.termination);
        values.push(rep.f);
    }
    let bb = solve_baseline_bb(&inst, &m, &x0, &SolverConfig { eps_grad: 1e-7, ..SolverConfig::default() }).unwrap();
    assert!(bb.converged());
    assert!((values[0] - values[1]).abs() < 1e-8 * values[0].abs());
    assert!((values[0] - bb.f).abs() < 1e-8 * values[0].abs());
}

#[test]
fn exact_variant_rejects_sphere_manifold() {
    let inst = snl_generate(30, 1).unwrap();
    let m = snl_manifold(&inst, 3).unwrap();
    let x0 = snl_random_start(&m, 1).unwrap();
    let cfg = SolverConfig {
        variant: Variant::ExactHessian,
        ..SolverConfig::default()
    };
    let rep = solve(&SnlObjective::new(&inst), &m, &x0, &cfg).unwrap();
    assert!(matches!(rep.termination, rdrsom::Termination::Failure(_)));
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let (inst, m, x0) = maxcut(150, 4);
    let a = solve(&inst, &m, &x0, &SolverConfig::default()).unwrap();
    let b = solve(&inst, &m, &x0, &SolverConfig::default()).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.f.to_bits(), b.f.to_bits());
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn snl_solve_stays_feasible() {
    let inst = snl_generate(80, 5).unwrap();
    let m = snl_manifold(&inst, 3).unwrap();
    let x0 = snl_random_start(&m, 5).unwrap();
    let rep = solve(&SnlObjective::new(&inst), &m, &x0, &SolverConfig { eps_grad: 1e-5, ..SolverConfig::default() }).unwrap();
    assert!(rep.converged());
    assert!(rep.feasibility <= 1e-10);
    assert!(rep.trace.windows(2).all(|w| w[1].f <= w[0].f));
}
