#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rdrsom::manifold::{SphereProduct, SphereRow};
use rdrsom::Manifold;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rdrsom::rng::stream(seed, 99)
}

pub fn gaussian_like(rng: &mut ChaCha8Rng, n: usize, r: usize) -> DMatrix<f64> {
    // Sum of uniforms is plenty for test directions.
    DMatrix::from_fn(n, r, |_, _| (0..4).map(|_| rng.random::<f64>() - 0.5).sum::<f64>())
}

/// Rows with 0, 1 or 2 anchors in width `r`, consistent with a random point.
pub fn random_sphere_product(rng: &mut ChaCha8Rng, n: usize, r: usize) -> (Manifold, DMatrix<f64>) {
    let truth = gaussian_like(rng, n, r);
    let rows = (0..n)
        .map(|i| {
            let k = i % 3;
            let x = truth.row(i).transpose();
            let anchors = gaussian_like(rng, k, r);
            let radii: Vec<f64> = (0..k).map(|j| (&x - anchors.row(j).transpose()).norm()).collect();
            SphereRow::from_constraints(anchors, radii).unwrap()
        })
        .collect();
    let m = Manifold::SphereIntersectionProduct(SphereProduct::new(r, rows).unwrap());
    (m, truth)
}

/// A manifold of each kind together with a feasible point on it.
pub fn random_manifolds(seed: u64) -> Vec<(Manifold, DMatrix<f64>)> {
    let mut g = rng(seed);
    let (n, r) = (6, 3);
    let mut out = Vec::new();
    let e = Manifold::Euclidean { n, r };
    out.push((e, gaussian_like(&mut g, n, r)));
    let o = Manifold::ObliqueRows { n, r };
    let x = o.project_point(&gaussian_like(&mut g, n, r)).unwrap();
    out.push((o, x));
    let s = Manifold::Stiefel { n, r };
    let x = s.project_point(&gaussian_like(&mut g, n, r)).unwrap();
    out.push((s, x));
    out.push(random_sphere_product(&mut g, n, r));
    out
}

pub fn column(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
