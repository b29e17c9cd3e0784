//! Geometric invariants of the manifolds and problem Hessians.

use crate::common::{column, gaussian_like, random_manifolds, rng};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;
use rdrsom::linalg::{inner, rank};
use rdrsom::manifold::sphere::{project_onto_spheres, reduce_constraints};
use rdrsom::problems::{KsInstance, MaxcutInstance};
use rdrsom::{Manifold, Objective};

/// Runs `test` on 100 generated cases and panics on the first failure.
fn check<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) {
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    if let Err(e) = runner.run(&strategy, test) {
        panic!("{e}");
    }
}

pub fn projection_is_idempotent_and_self_adjoint() {
    check(any::<u64>(), |seed| {
        let mut g = rng(seed ^ 0x5a5a);
        for (m, x) in random_manifolds(seed) {
            let (n, r) = m.shape();
            let v = gaussian_like(&mut g, n, r);
            let w = gaussian_like(&mut g, n, r);
            let pv = m.proj_tangent(&x, &v).unwrap();
            let ppv = m.proj_tangent(&x, &pv).unwrap();
            prop_assert!((&ppv - &pv).norm() <= 1e-12 * v.norm(), "{:?}", m.kind());
            let pw = m.proj_tangent(&x, &w).unwrap();
            let lhs = inner(&pv, &w);
            let rhs = inner(&v, &pw);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * v.norm() * w.norm(), "{:?}", m.kind());
        }
        Ok(())
    });
}

pub fn retraction_is_first_order() {
    check(any::<u64>(), |seed| {
        let mut g = rng(seed ^ 0x77);
        for (m, x) in random_manifolds(seed) {
            let (n, r) = m.shape();
            prop_assert_eq!(m.retract(&x, &DMatrix::zeros(n, r)).unwrap(), x.clone());
            let h = m.proj_tangent(&x, &gaussian_like(&mut g, n, r)).unwrap();
            let h = &h / h.norm();
            let consts: Vec<f64> = [1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&t| {
                    let y = m.retract(&x, &(&h * t)).unwrap();
                    prop_assert!(m.feasibility_residual(&y) <= 1e-10);
                    Ok((&y - (&x + &h * t)).norm() / (t * t))
                })
                .collect::<Result<_, _>>()?;
            let hi = consts.iter().cloned().fold(0.0, f64::max);
            let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
            // Euclidean (and all-free rows) retract exactly: nothing to compare.
            if hi > 1e-6 {
                prop_assert!(hi <= 4.0 * lo, "{:?}: {:?}", m.kind(), consts);
            }
        }
        Ok(())
    });
}

pub fn transport_is_linear() {
    check((any::<u64>(), -3.0..3.0f64), |(seed, alpha)| {
        let mut g = rng(seed);
        for (m, x) in random_manifolds(seed) {
            let (n, r) = m.shape();
            let u = m.proj_tangent(&x, &gaussian_like(&mut g, n, r)).unwrap();
            let y = m.retract(&x, &(&u * 0.1)).unwrap();
            let a = m.transport(&x, &y, &(&u * alpha)).unwrap();
            let b = m.transport(&x, &y, &u).unwrap() * alpha;
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + alpha.abs()) * u.norm());
            prop_assert_eq!(m.transport(&x, &x, &u).unwrap(), m.proj_tangent(&x, &u).unwrap());
        }
        Ok(())
    });
}

fn maxcut_case(seed: u64) -> (MaxcutInstance, Manifold, DMatrix<f64>) {
    let n = 30;
    let edges = rdrsom::problems::maxcut::random_connected_graph(n, 5.0, seed);
    let inst = MaxcutInstance::from_edges(n, &edges, Some(4)).unwrap();
    let m = inst.manifold();
    let x = m.project_point(&gaussian_like(&mut rng(seed), n, 4)).unwrap();
    (inst, m, x)
}

fn ks_case(seed: u64) -> (KsInstance, Manifold, DMatrix<f64>) {
    let inst = KsInstance::new(25, 3, 1.0).unwrap();
    let m = inst.manifold();
    let x = m.project_point(&gaussian_like(&mut rng(seed), 25, 3)).unwrap();
    (inst, m, x)
}

fn riemannian_hess<P: Objective>(p: &P, m: &Manifold, x: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let (_, egrad) = p.value_and_gradient(x);
    let ehess = p.hessian_vector(x, h).unwrap();
    m.hess_vec(x, &egrad, &ehess, h).unwrap()
}

fn check_symmetry<P: Objective>(p: &P, m: &Manifold, x: &DMatrix<f64>, seed: u64) {
    let mut g = rng(seed + 1);
    let (n, r) = m.shape();
    for _ in 0..10 {
        let u = m.proj_tangent(x, &gaussian_like(&mut g, n, r)).unwrap();
        let v = m.proj_tangent(x, &gaussian_like(&mut g, n, r)).unwrap();
        let hu = riemannian_hess(p, m, x, &u);
        let hv = riemannian_hess(p, m, x, &v);
        let scale = hu.norm() * v.norm() + hv.norm() * u.norm();
        assert!((inner(&hu, &v) - inner(&u, &hv)).abs() <= 1e-8 * scale);
    }
}

/// Log–log slope of the finite-difference Hessian error over `t`.
fn hessian_fd_order<P: Objective>(p: &P, m: &Manifold, x: &DMatrix<f64>, seed: u64) -> f64 {
    let (n, r) = m.shape();
    let h = m.proj_tangent(x, &gaussian_like(&mut rng(seed + 2), n, r)).unwrap();
    let h = &h / h.norm();
    let exact = riemannian_hess(p, m, x, &h);
    let grad_at = |y: &DMatrix<f64>| m.riemannian_grad(y, &p.value_and_gradient(y).1).unwrap();
    let g0 = grad_at(x);
    let ts = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            let y = m.retract(x, &(&h * t)).unwrap();
            let back = m.proj_tangent(x, &grad_at(&y)).unwrap();
            let err = (&exact - (back - &g0) / t).norm();
            (t.ln(), err.ln())
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn hessian_is_symmetric_on_oblique_and_stiefel() {
    for seed in 0..5 {
        let (p, m, x) = maxcut_case(seed);
        check_symmetry(&p, &m, &x, seed);
        let (p, m, x) = ks_case(seed);
        check_symmetry(&p, &m, &x, seed);
    }
}

pub fn hessian_matches_finite_differences_to_first_order() {
    for seed in 0..5 {
        let (p, m, x) = maxcut_case(seed);
        let order = hessian_fd_order(&p, &m, &x, seed);
        assert!(order >= 0.9, "oblique order {order}");
        let (p, m, x) = ks_case(seed);
        let order = hessian_fd_order(&p, &m, &x, seed);
        assert!(order >= 0.9, "stiefel order {order}");
    }
}

pub fn hessian_examples() {
    let m = Manifold::ObliqueRows { n: 1, r: 2 };
    let x = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let h = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
    let zero = DMatrix::zeros(1, 2);
    assert_eq!(m.hess_vec(&x, &x, &h, &h).unwrap(), zero);
    assert_eq!(m.hess_vec(&x, &x, &zero, &zero).unwrap(), zero);
    // Linear objective: only the curvature term survives.
    let egrad = DMatrix::from_row_slice(1, 2, &[3.0, 1.0]);
    assert_eq!(m.hess_vec(&x, &egrad, &zero, &h).unwrap(), &h * -3.0);
}

fn dropped_are_implied(anchors: &DMatrix<f64>, radii: &[f64], feasible: &DVector<f64>, seed: u64) {
    let report = reduce_constraints(anchors, radii, Some(feasible)).unwrap();
    assert!(!report.dropped.is_empty());
    let kept = anchors.select_rows(report.kept.iter());
    let kept_radii: Vec<f64> = report.kept.iter().map(|&i| radii[i]).collect();
    let affine = DMatrix::from_fn(kept.nrows(), kept.ncols() + 1, |i, j| if j == 0 { 1.0 } else { kept[(i, j - 1)] });
    assert_eq!(rank(&affine), report.kept.len());

    let mut g = rng(seed);
    let mut checked = 0;
    for _ in 0..20 {
        let start = feasible + DVector::from_fn(anchors.ncols(), |_, _| 2.0 * (g.random::<f64>() - 0.5));
        let Ok(z) = project_onto_spheres(&kept, &kept_radii, &start) else {
            continue;
        };
        for &(j, _) in &report.dropped {
            let res = ((&z - anchors.row(j).transpose()).norm_squared() - radii[j] * radii[j]).abs();
            assert!(res <= 1e-8, "dropped constraint {j} violated by {res}");
        }
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} feasible samples");
}

pub fn reduction_drops_only_implied_constraints() {
    // Collinear centers on the x-axis with d₁² - 2d₂² + d₃² = 8.
    let anchors = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 2.0, 0.0, 4.0, 0.0]);
    let p = column(&[1.3, 2.1]);
    let radii: Vec<f64> = (0..3).map(|j| (&p - anchors.row(j).transpose()).norm()).collect();
    let (d1, d2, d3) = (radii[0].powi(2), radii[1].powi(2), radii[2].powi(2));
    assert!((d1 - 2.0 * d2 + d3 - 8.0).abs() < 1e-12);
    dropped_are_implied(&anchors, &radii, &p, 1);

    // Random affinely dependent anchors in R³.
    for seed in 0..10 {
        let mut g = rng(seed);
        let base = gaussian_like(&mut g, 3, 3);
        let mid = (base.row(0) + base.row(1)) * 0.5;
        let mut anchors = DMatrix::zeros(4, 3);
        anchors.view_mut((0, 0), (3, 3)).copy_from(&base);
        anchors.row_mut(3).copy_from(&mid);
        let p = gaussian_like(&mut g, 3, 1).column(0).into_owned();
        let radii: Vec<f64> = (0..4).map(|j| (&p - anchors.row(j).transpose()).norm()).collect();
        dropped_are_implied(&anchors, &radii, &p, seed);
    }
}

/// Every check in this suite; the acceptance runner calls this.
#[allow(dead_code)]
pub fn all() {
    projection_is_idempotent_and_self_adjoint();
    retraction_is_first_order();
    transport_is_linear();
    hessian_is_symmetric_on_oblique_and_stiefel();
    hessian_matches_finite_differences_to_first_order();
    hessian_examples();
    reduction_drops_only_implied_constraints();
}
