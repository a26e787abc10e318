use crate::error::{Error, Result};
use crate::geometry::{Block, ConvexSet, Penalty};
use crate::numerics::{self, dot, Vector};

use super::loss::SmoothLoss;
use super::solve::{increasing_root, minimize_block};

/// Bregman projection `argmin_{c ∈ set} D_g(c, x)` for the potential derived from `loss`.
///
/// Quadratic losses use the Euclidean projection. The logistic potential
/// supports halfspaces, slabs, boxes and inverse images of blocks.
pub fn bregman_project(loss: &SmoothLoss, set: &ConvexSet, x: &[f64]) -> Result<Vector> {
    if x.len() != loss.dim() || set.dim() != loss.dim() {
        return Err(Error::shape("point, set and loss dimensions differ"));
    }
    if loss.is_quadratic() {
        return set.project(x);
    }
    if !loss.in_domain(x) {
        return Err(Error::Domain("point is outside the domain of the potential".into()));
    }
    if set.contains(x, 0.0)? {
        return Ok(Vector::from_column_slice(x));
    }
    let (theta, _) = loss.grad_g(x);
    project_theta(loss, set, theta).map(|(c, _)| c)
}

/// Projects `x = ∇g*(θ)`; returns `c` and `∇g(c)`, the latter formed in the
/// dual coordinates where possible so that no `∇g` round trip is needed.
pub(crate) fn project_theta(loss: &SmoothLoss, set: &ConvexSet, theta: Vector) -> Result<(Vector, Vector)> {
    if let SmoothLoss::Quadratic { y } = loss {
        let x = &theta + y;
        let c = set.project(x.as_slice())?;
        let tc = &c - y;
        return Ok((c, tc));
    }
    match set {
        ConvexSet::Halfspace { a, b } => hyperplane_side(loss, theta, a.as_slice(), *b, 1.0),
        ConvexSet::Slab { a, lambda } => slab(loss, theta, a.as_slice(), *lambda),
        ConvexSet::Box { lower, upper } => {
            let x = loss.grad_g_star(theta.as_slice());
            let mut c = x.clone();
            let mut tc = theta;
            for j in 0..c.len() {
                let cj = x[j].clamp(lower[j], upper[j]);
                if cj != x[j] {
                    c[j] = cj;
                    // ∇g is coordinatewise, so only entry j of the probe matters
                    let probe: Vec<f64> = (0..c.len()).map(|i| if i == j { cj } else { x[i] }).collect();
                    if !loss.in_domain(&probe) {
                        return Err(Error::Domain("box does not meet the domain of the potential".into()));
                    }
                    tc[j] = loss.grad_g(&probe).0[j];
                }
            }
            Ok((c, tc))
        }
        ConvexSet::InverseImage(block) => inverse_image(loss, block, theta),
        _ => Err(Error::Type("Bregman projection under a nonquadratic potential supports halfspaces, slabs, boxes and block inverse images".into())),
    }
}

fn slab(loss: &SmoothLoss, theta: Vector, a: &[f64], lambda: f64) -> Result<(Vector, Vector)> {
    let x = loss.grad_g_star(theta.as_slice());
    let c = dot(a, x.as_slice());
    if c > lambda {
        hyperplane_side(loss, theta, a, lambda, 1.0)
    } else if c < -lambda {
        hyperplane_side(loss, theta, a, lambda, -1.0)
    } else {
        Ok((x, theta))
    }
}

/// Projection onto `{c : s·aᵀc ≤ level}` with `s = ±1`: moves along
/// `θ − t s a`, `t ≥ 0`, until `s·aᵀc(t) = level`.
fn hyperplane_side(loss: &SmoothLoss, theta: Vector, a: &[f64], level: f64, s: f64) -> Result<(Vector, Vector)> {
    let x = loss.grad_g_star(theta.as_slice());
    let v: Vec<f64> = a.iter().map(|aj| s * aj).collect();
    if dot(&v, x.as_slice()) <= level {
        return Ok((x, theta));
    }
    let at = |t: f64| -> Vector {
        let mut th = theta.clone();
        numerics::axpy(-t, &v, th.as_mut_slice());
        th
    };
    let eval = |t: f64| -> (f64, f64) {
        let th = at(t);
        let c = loss.grad_g_star(th.as_slice());
        let h = loss.hess_g_star(th.as_slice());
        let d: f64 = v.iter().zip(h.iter()).map(|(vj, hj)| vj * vj * hj).sum();
        (level - dot(&v, c.as_slice()), d)
    };
    let (f0, d0) = eval(0.0);
    let step = if d0 > 0.0 { -f0 / d0 } else { 1.0 / dot(&v, &v) };
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    let xmax = numerics::sup_norm(x.as_slice()) + numerics::sup_norm(loss.y().as_slice());
    let ftol = 1e-14 * (1.0 + level.abs() + l1 * (1.0 + xmax));
    let t = increasing_root("Bregman hyperplane projection", eval, 0.0, step, ftol)?;
    let th = at(t);
    Ok((loss.grad_g_star(th.as_slice()), th))
}

/// Projection onto `{v : X_iᵀ v ∈ D_i}`: with `ŵ = argmin f(−θ + X_i w) + h_i(w)`,
/// the projection is `∇g*(θ − X_i ŵ)`.
fn inverse_image(loss: &SmoothLoss, block: &Block, theta: Vector) -> Result<(Vector, Vector)> {
    if block.width() == 1 {
        let a = numerics::col(block.x(), 0);
        let lam = match block.penalty() {
            Penalty::Zero => 0.0,
            p => p.lambda(),
        };
        return slab(loss, theta, a, lam);
    }
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    let w = minimize_block(loss, block, &neg, None)?;
    let mut th = theta;
    block.apply_add(-1.0, w.as_slice(), th.as_mut_slice());
    Ok((loss.grad_g_star(th.as_slice()), th))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bregman::loss::bregman_divergence;

    #[test]
    fn quadratic_is_euclidean() {
        let loss = SmoothLoss::quadratic(Vector::from_vec(vec![1.0, 2.0])).unwrap();
        let set = ConvexSet::halfspace(Vector::from_vec(vec![1.0, 1.0]), 0.0).unwrap();
        let p = bregman_project(&loss, &set, &[1.0, 1.0]).unwrap();
        assert_eq!(p, set.project(&[1.0, 1.0]).unwrap());
    }

    #[test]
    fn member_is_fixed() {
        let loss = SmoothLoss::logistic(Vector::from_vec(vec![1.0, 0.0])).unwrap();
        let set = ConvexSet::slab(Vector::from_vec(vec![1.0, 1.0]), 0.5).unwrap();
        let x = [0.3, -0.4];
        assert_eq!(bregman_project(&loss, &set, &x).unwrap().as_slice(), &x);
    }

    #[test]
    fn one_dimensional_slab_matches_grid() {
        let loss = SmoothLoss::logistic(Vector::from_vec(vec![1.0])).unwrap();
        let set = ConvexSet::slab(Vector::from_vec(vec![2.0]), 0.6).unwrap();
        let x = [0.9];
        let c = bregman_project(&loss, &set, &x).unwrap()[0];
        // the feasible part of the domain is (0, 0.3]; scan it on a fine grid
        let mut best = (f64::INFINITY, 0.0);
        let m = 300_000;
        for i in 1..=m {
            let u = 0.3 * i as f64 / m as f64;
            let d = bregman_divergence(&loss, &[u], &x).unwrap();
            if d < best.0 {
                best = (d, u);
            }
        }
        assert!((c - best.1).abs() < 1e-6, "{c} vs {}", best.1);
    }

    #[test]
    fn unsupported_set_is_a_type_error() {
        let loss = SmoothLoss::logistic(Vector::from_vec(vec![1.0, 0.0])).unwrap();
        let set = ConvexSet::l2_ball(Vector::zeros(2), 0.1).unwrap();
        assert!(matches!(bregman_project(&loss, &set, &[0.5, -0.5]), Err(Error::Type(_))));
    }

    #[test]
    fn outside_domain_is_rejected() {
        let loss = SmoothLoss::logistic(Vector::from_vec(vec![1.0])).unwrap();
        let set = ConvexSet::slab(Vector::from_vec(vec![1.0]), 0.1).unwrap();
        assert!(matches!(bregman_project(&loss, &set, &[1.5]), Err(Error::Domain(_))));
    }
}
