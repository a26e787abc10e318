#![allow(dead_code)]

use dykstra_cd::harness::instance::{gaussian_matrix, gaussian_vector, gen_data, trial_rng, InstanceSpec};
use dykstra_cd::harness::oracle::reference_lasso;
use dykstra_cd::rates::{active_set, ACTIVE_TOL};
use dykstra_cd::{ConvexSet, Penalty, RegressionProblem, Vector};
use rand::Rng;

pub fn spec(n: usize, p: usize, s: usize, lambda: f64, seed: u64) -> InstanceSpec {
    InstanceSpec { n, p, s, noise_sd: 1.0, lambda, seed, trials: 1 }
}

pub fn lasso(n: usize, p: usize, lambda: f64, seed: u64) -> RegressionProblem {
    let (x, y) = gen_data(&spec(n, p, 5.min(p), lambda, seed), 0).unwrap();
    RegressionProblem::lasso(x, y, lambda).unwrap()
}

pub fn grouped(n: usize, p: usize, width: usize, penalty: Penalty, seed: u64) -> RegressionProblem {
    let (x, y) = gen_data(&spec(n, p, 6.min(p), 1.0, seed), 0).unwrap();
    RegressionProblem::grouped(x, y, width, penalty).unwrap()
}

/// Lasso instance with `lo ≤ |A| ≤ hi`: λ is lowered geometrically from
/// `‖Xᵀy‖∞` until the certified solution has an active set in range.
pub fn lasso_with_active_size(n: usize, p: usize, seed: u64, lo: usize, hi: usize) -> (RegressionProblem, Vector) {
    let (x, y) = gen_data(&spec(n, p, 5, 1.0, seed), 0).unwrap();
    let lam_max = x.tr_mul(&y).amax();
    let mut lam = lam_max;
    for _ in 0..200 {
        lam *= 0.95;
        let (w, _) = reference_lasso(&x, &y, lam, 1e-12).unwrap();
        let a = active_set(w.as_slice(), ACTIVE_TOL).len();
        if a >= lo && a <= hi {
            return (RegressionProblem::lasso(x, y, lam).unwrap(), w);
        }
        if a > hi {
            break;
        }
    }
    panic!("no lambda with active set in [{lo}, {hi}] for seed {seed}");
}

/// Halfspaces, slabs and a box in `R^n`, all containing the origin, and a
/// point to project.
pub fn polyhedral(seed: u64, n: usize, d: usize) -> (Vec<ConvexSet>, Vector) {
    let mut rng = trial_rng(seed, 77);
    let normals = gaussian_matrix(&mut rng, d, n);
    let mut sets = Vec::with_capacity(d + 1);
    for k in 0..d {
        let a: Vector = normals.row(k).transpose();
        let level = rng.random_range(0.1..1.0) * a.norm();
        if k % 2 == 0 {
            sets.push(ConvexSet::halfspace(a, level).unwrap());
        } else {
            sets.push(ConvexSet::slab(a, level).unwrap());
        }
    }
    let half = Vector::from_fn(n, |_, _| 1.5);
    sets.push(ConvexSet::boxed(-&half, half).unwrap());
    let y = gaussian_vector(&mut rng, n) * 3.0;
    (sets, y)
}
