mod common;

use approx::assert_abs_diff_eq;
use dykstra_cd::geometry::{block_update, residual_map, support_value};
use dykstra_cd::harness::oracle::{projection_oracle, reference_lasso};
use dykstra_cd::numerics::sup_dist;
use dykstra_cd::parallel::{
    admm_two_set, parallel_admm_cd, parallel_dykstra, parallel_dykstra_cd, AdmmParams, AdmmStart, WeightVector,
};
use dykstra_cd::serial::{
    alternating_projections, block_cd, dykstra, equivalence_check, hildreth, lasso_cd, Status,
};
use dykstra_cd::{ApproxProblem, ConvexSet, Error, Matrix, Penalty, RegressionProblem, RunOptions, StopRule, Vector};

fn v(x: &[f64]) -> Vector {
    Vector::from_column_slice(x)
}

fn run(max: usize, tol: f64) -> RunOptions {
    RunOptions::new(StopRule::sweeps(max).with_tol(tol))
}

fn hs(a: &[f64], b: f64) -> ConvexSet {
    ConvexSet::halfspace(v(a), b).unwrap()
}

#[test]
fn basic_projections() {
    assert_eq!(hs(&[1.0, 0.0], 1.0).project(&[2.0, 0.0]).unwrap(), v(&[1.0, 0.0]));
    let slab = ConvexSet::slab(v(&[1.0, 0.0]), 1.0).unwrap();
    assert_eq!(slab.project(&[2.0, 3.0]).unwrap(), v(&[1.0, 3.0]));
    let cons = ConvexSet::consensus(2, 2).unwrap();
    assert_eq!(cons.project(&[1.0, 1.0, 3.0, 3.0]).unwrap(), v(&[2.0, 2.0, 2.0, 2.0]));
    assert!(matches!(slab.project(&[1.0]), Err(Error::Shape(_))));
}

#[test]
fn block_updates_and_residual_maps() {
    let e1 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
    assert_eq!(block_update(&e1, &Penalty::l1(1.0), &[3.0, 5.0]).unwrap()[0], 2.0);
    assert_eq!(block_update(&e1, &Penalty::l1(1.0), &[0.5, 7.0]).unwrap()[0], 0.0);
    let w = block_update(&Matrix::identity(2, 2), &Penalty::group_l2(1.0), &[3.0, 4.0]).unwrap();
    assert_abs_diff_eq!(w[0], 2.4, epsilon = 1e-10);
    assert_abs_diff_eq!(w[1], 3.2, epsilon = 1e-10);

    assert_eq!(residual_map(&e1, &Penalty::l1(1.0), &[3.0, 5.0]).unwrap(), v(&[2.0, 0.0]));
    assert_eq!(residual_map(&e1, &Penalty::l1(10.0), &[3.0, 5.0]).unwrap(), v(&[0.0, 0.0]));
    let x = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 1.0, 1.0, 1.0]);
    for pen in [Penalty::l1(1.0), Penalty::group_l2(2.0), Penalty::linf(0.5)] {
        assert_eq!(residual_map(&x, &pen, &[0.0; 3]).unwrap().amax(), 0.0);
    }
    let dup = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(matches!(block_update(&dup, &Penalty::l1(1.0), &[1.0, 0.0]), Err(Error::Rank(_))));
}

#[test]
fn group_shrinkage_matches_a_grid_search() {
    // ½‖b − w‖² + ‖w‖ over a fine grid around the closed form
    let b = [3.0, 4.0];
    let obj = |w0: f64, w1: f64| 0.5 * ((b[0] - w0).powi(2) + (b[1] - w1).powi(2)) + (w0 * w0 + w1 * w1).sqrt();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=400 {
        for j in 0..=400 {
            let (w0, w1) = (2.0 + i as f64 * 0.001, 3.0 + j as f64 * 0.001);
            let f = obj(w0, w1);
            if f < best.0 {
                best = (f, w0, w1);
            }
        }
    }
    assert_abs_diff_eq!(best.1, 2.4, epsilon = 2e-3);
    assert_abs_diff_eq!(best.2, 3.2, epsilon = 2e-3);
}

#[test]
fn support_values_and_criterion() {
    assert_eq!(support_value(&Penalty::l1(2.0), &[1.0, -3.0]), 8.0);
    assert_eq!(support_value(&Penalty::group_l2(1.0), &[3.0, 4.0]), 5.0);
    let pr = RegressionProblem::lasso(Matrix::identity(2, 2), v(&[3.0, 0.0]), 1.0).unwrap();
    assert_eq!(pr.criterion(&[0.0, 0.0]).unwrap(), 4.5);
    assert_eq!(pr.criterion(&[2.0, 0.0]).unwrap(), 2.5);
    let free = RegressionProblem::lasso(Matrix::identity(2, 2), v(&[3.0, 0.0]), 0.0).unwrap();
    assert_eq!(free.criterion(&[3.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn dykstra_examples() {
    let ap = ApproxProblem::new(v(&[1.0, 1.0]), vec![hs(&[1.0, 0.0], 0.0), hs(&[0.0, 1.0], 0.0)]).unwrap();
    let (u, tr) = dykstra(&ap, &run(1, 1e-10)).unwrap();
    assert_eq!(u, v(&[0.0, 0.0]));
    assert_eq!(tr.sweeps(), 1);

    let ball = ConvexSet::l2_ball(v(&[0.0, 0.0]), 1.0).unwrap();
    let single = ApproxProblem::new(v(&[3.0, 4.0]), vec![ball.clone()]).unwrap();
    let (u, _) = dykstra(&single, &run(1, 1e-10)).unwrap();
    assert_eq!(u, ball.project(&[3.0, 4.0]).unwrap());

    // non-orthogonal halfspaces against the oracle
    let sets = vec![hs(&[1.0, 2.0], 1.0), hs(&[3.0, -1.0], 0.5)];
    let y = v(&[2.0, 2.0]);
    let ap = ApproxProblem::new(y.clone(), sets.clone()).unwrap();
    let (u, tr) = dykstra(&ap, &run(100_000, 1e-14)).unwrap();
    assert_eq!(tr.status, Status::Converged);
    let want = projection_oracle(&sets, &y, 1e-10).unwrap();
    assert!(sup_dist(u.as_slice(), want.as_slice()) <= 1e-8);
}

#[test]
fn alternating_projections_examples() {
    let lines = vec![
        ConvexSet::affine(&Matrix::from_column_slice(2, 1, &[1.0, 0.0]), v(&[0.0, 0.0])).unwrap(),
        ConvexSet::affine(&Matrix::from_column_slice(2, 1, &[0.0, 1.0]), v(&[0.0, 0.0])).unwrap(),
    ];
    let (u, _) = alternating_projections(&ApproxProblem::new(v(&[1.0, 1.0]), lines).unwrap(), &run(10, 1e-12)).unwrap();
    assert!(u.amax() <= 1e-12);

    let inside = vec![hs(&[1.0, 0.0], 1.0), hs(&[0.0, 1.0], 1.0)];
    let y = v(&[0.5, -2.0]);
    let (u, _) = alternating_projections(&ApproxProblem::new(y.clone(), inside).unwrap(), &run(10, 1e-12)).unwrap();
    assert_eq!(u, y);

    // an obtuse wedge: alternating projections stop at a feasible point that
    // is not the nearest one
    let sets = vec![hs(&[1.0, 0.0], 0.0), hs(&[1.0, 1.0], 0.0)];
    let y = v(&[2.0, 1.0]);
    let ap = ApproxProblem::new(y.clone(), sets.clone()).unwrap();
    let (pocs, _) = alternating_projections(&ap, &run(10_000, 1e-14)).unwrap();
    let (proj, _) = dykstra(&ap, &run(100_000, 1e-14)).unwrap();
    for s in &sets {
        assert!(s.contains(pocs.as_slice(), 1e-10).unwrap());
    }
    assert!(sup_dist(pocs.as_slice(), proj.as_slice()) > 1e-3);
    let oracle = projection_oracle(&sets, &y, 1e-10).unwrap();
    assert!(sup_dist(proj.as_slice(), oracle.as_slice()) <= 1e-8);
}

#[test]
fn coordinate_descent_examples() {
    let pr = RegressionProblem::lasso(Matrix::identity(2, 2), v(&[3.0, 0.5]), 1.0).unwrap();
    let (w, tr) = block_cd(&pr, &run(10, 1e-12), None).unwrap();
    assert_eq!(w, v(&[2.0, 0.0]));
    assert_eq!(tr.status, Status::Converged);
    // stationary from the second sweep on
    assert!(tr.records.iter().skip(1).all(|r| r.criterion == tr.records[1].criterion));

    let x = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
    let y = v(&[1.0, 2.0, 3.0]);
    let free = RegressionProblem::lasso(x.clone(), y.clone(), 0.0).unwrap();
    let (w, _) = block_cd(&free, &run(10_000, 1e-14), None).unwrap();
    let exact = x.lu().solve(&y).unwrap();
    assert!(sup_dist(w.as_slice(), exact.as_slice()) <= 1e-10);

    let pr = common::lasso(20, 30, 1.0, 3);
    let (w, _) = block_cd(&pr, &run(100_000, 1e-13), None).unwrap();
    let (ws, _) = reference_lasso(pr.x(), pr.y(), 1.0, 1e-12).unwrap();
    let (c, cs) = (pr.criterion(w.as_slice()).unwrap(), pr.criterion(ws.as_slice()).unwrap());
    assert!((c - cs).abs() <= 1e-8);
}

#[test]
fn lasso_cd_examples() {
    let pr = common::lasso(15, 10, 1.0, 4);
    let lam_max = pr.x().tr_mul(pr.y()).amax();
    let (w, _) = lasso_cd(pr.x(), pr.y(), lam_max, &run(5, 1e-12)).unwrap();
    assert!(w.iter().all(|&c| c == 0.0));

    let (w, _) = lasso_cd(&Matrix::identity(2, 2), &v(&[3.0, 0.5]), 1.0, &run(5, 1e-12)).unwrap();
    assert_eq!(w, v(&[2.0, 0.0]));

    let zero_col = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
    assert!(matches!(lasso_cd(&zero_col, &v(&[1.0, 1.0]), 1.0, &run(5, 1e-12)), Err(Error::Rank(_))));
}

#[test]
fn hildreth_examples() {
    let one = vec![hs(&[1.0, 1.0], 1.0)];
    let (u, _, _) = hildreth(&one, &v(&[2.0, 2.0]), &run(5, 1e-12)).unwrap();
    assert!(sup_dist(u.as_slice(), &[0.5, 0.5]) <= 1e-15);

    let (u, theta, _) = hildreth(&one, &v(&[0.0, 0.0]), &run(5, 1e-12)).unwrap();
    assert_eq!(u, v(&[0.0, 0.0]));
    assert!(theta.iter().all(|&t| t == 0.0));

    let ball = vec![ConvexSet::l2_ball(v(&[0.0, 0.0]), 1.0).unwrap()];
    assert!(matches!(hildreth(&ball, &v(&[2.0, 2.0]), &run(5, 1e-12)), Err(Error::Type(_))));
}

#[test]
fn equivalence_examples() {
    let pr = common::lasso(20, 30, 1.0, 11);
    assert!(equivalence_check(&pr, &StopRule::sweeps(1)).unwrap() <= 1e-10);
    let id = RegressionProblem::lasso(Matrix::identity(4, 4), v(&[3.0, -0.5, 1.5, 0.2]), 1.0).unwrap();
    assert!(equivalence_check(&id, &StopRule::sweeps(50)).unwrap() <= 1e-10);
    let gr = common::grouped(20, 30, 3, Penalty::group_l2(1.0), 12);
    assert!(equivalence_check(&gr, &StopRule::sweeps(100)).unwrap() <= 1e-9);
}

#[test]
fn parallel_dykstra_examples() {
    let ball = ConvexSet::l2_ball(v(&[1.0, 0.0]), 1.0).unwrap();
    let single = ApproxProblem::new(v(&[3.0, 3.0]), vec![ball.clone()]).unwrap();
    let (u, _) = parallel_dykstra(&single, &WeightVector::uniform(1), &run(1, 1e-12)).unwrap();
    assert_eq!(u, ball.project(&[3.0, 3.0]).unwrap());

    let ap = ApproxProblem::new(v(&[1.0, 1.0]), vec![hs(&[1.0, 0.0], 0.0), hs(&[0.0, 1.0], 0.0)]).unwrap();
    let (u, _) = parallel_dykstra(&ap, &WeightVector::uniform(2), &run(10_000, 1e-14)).unwrap();
    assert!(u.amax() <= 1e-10);

    let pr = common::lasso(20, 30, 1.0, 21);
    let slabs = ApproxProblem::new(pr.y().clone(), pr.slab_sets().unwrap()).unwrap();
    let (par, _) = parallel_dykstra(&slabs, &WeightVector::uniform(30), &run(400_000, 1e-15)).unwrap();
    let (ser, _) = dykstra(&slabs, &run(200_000, 1e-15)).unwrap();
    assert!(sup_dist(par.as_slice(), ser.as_slice()) <= 1e-8);
}

#[test]
fn parallel_cd_examples() {
    let one = RegressionProblem::new(
        v(&[1.0, 2.0, 2.0]),
        vec![dykstra_cd::Block::new(Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]), Penalty::group_l2(0.5)).unwrap()],
    )
    .unwrap();
    let exact = block_update(one.x(), &Penalty::group_l2(0.5), one.y().as_slice()).unwrap();
    let (w, _) = parallel_dykstra_cd(&one, &WeightVector::uniform(1), &run(1, 1e-12)).unwrap();
    assert!(sup_dist(w.as_slice(), exact.as_slice()) <= 1e-9);
    let (w, _) = parallel_admm_cd(&one, &AdmmParams::new(vec![1.0]).unwrap(), &run(2000, 1e-14)).unwrap();
    assert!(sup_dist(w.as_slice(), exact.as_slice()) <= 1e-8);

    let id = RegressionProblem::lasso(Matrix::identity(3, 3), v(&[3.0, -0.5, -2.0]), 1.0).unwrap();
    let (w, _) = parallel_dykstra_cd(&id, &WeightVector::uniform(3), &run(10_000, 1e-14)).unwrap();
    assert!(sup_dist(w.as_slice(), &[2.0, 0.0, -1.0]) <= 1e-10);
}

#[test]
fn two_set_admm_examples() {
    let sub = ConvexSet::affine(&Matrix::from_column_slice(2, 1, &[1.0, 1.0]), v(&[0.0, 0.0])).unwrap();
    let y = v(&[2.0, 2.0]);
    let (u1, u2, _, _) = admm_two_set(&y, &sub, &sub, 1.0, AdmmStart::Anchor, &run(20, 1e-14)).unwrap();
    assert!(sup_dist(u1.as_slice(), y.as_slice()) <= 1e-14);
    assert!(sup_dist(u2.as_slice(), y.as_slice()) <= 1e-14);

    let h = hs(&[1.0, -2.0], -0.5);
    let ball = ConvexSet::l2_ball(v(&[0.0, 0.0]), 2.0).unwrap();
    let y = v(&[3.0, 0.0]);
    let (_, u2, _, _) = admm_two_set(&y, &ball, &h, 1.0, AdmmStart::Anchor, &run(100_000, 1e-15)).unwrap();
    let ap = ApproxProblem::new(y, vec![ball, h]).unwrap();
    let (want, _) = dykstra(&ap, &run(200_000, 1e-15)).unwrap();
    assert!(sup_dist(u2.as_slice(), want.as_slice()) <= 1e-6);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(matches!(WeightVector::new(vec![0.5, 0.6]), Err(Error::Parameter(_))));
    assert!(matches!(WeightVector::new(vec![1.0, 0.0]), Err(Error::Parameter(_))));
    assert!(matches!(AdmmParams::new(vec![1.0, -1.0]), Err(Error::Parameter(_))));
    let pr = common::lasso(5, 3, 1.0, 0);
    assert!(block_cd(&pr, &run(0, 1e-10), None).is_err());
}
