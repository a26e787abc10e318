//! Blockwise minimization of `f(a + X_i w) + h_i(w)` and scalar root finders.

use crate::error::{Error, Result};
use crate::geometry::{Block, Penalty};
use crate::numerics::{self, dot, Vector};

use super::loss::SmoothLoss;

/// Gradient-map tolerance for the multi-column inner solver.
pub const INNER_GRAD_TOL: f64 = 1e-10;
const INNER_MAX_STEPS: usize = 10_000;
const MAX_EXPANSIONS: usize = 200;

/// Root of an increasing scalar function `F` given as `x ↦ (F(x), F'(x))`.
///
/// Brackets by geometric expansion from `x0` (initial step `step`), then runs
/// Newton safeguarded by bisection until `|F| ≤ ftol` or the bracket collapses.
pub(crate) fn increasing_root<F>(what: &str, mut f: F, x0: f64, step: f64, ftol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (f0, _) = f(x0);
    if f0.abs() <= ftol {
        return Ok(x0);
    }
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let mut near = x0;
    let mut h = step;
    let mut far = x0 + dir * h;
    let mut n = 0;
    loop {
        let (ff, _) = f(far);
        if ff.abs() <= ftol {
            return Ok(far);
        }
        if (ff > 0.0) == (dir > 0.0) {
            break;
        }
        n += 1;
        if n > MAX_EXPANSIONS || !far.is_finite() {
            return Err(Error::convergence(format!("{what}: no sign change while bracketing"), ff.abs(), n));
        }
        near = far;
        h *= 2.0;
        far = near + dir * h;
    }
    let (mut lo, mut hi) = if dir > 0.0 { (near, far) } else { (far, near) };
    let mut x = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, x);
    for _ in 0..500 {
        let (fx, dfx) = f(x);
        if fx.abs() < best.0 {
            best = (fx.abs(), x);
        }
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            return Ok(best.1);
        }
        let newton = x - fx / dfx;
        x = if dfx > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Ok(best.1)
}

/// `argmin_w f(a + X_i w) + h_i(w)`.
///
/// Quadratic loss goes through [`Block::solve_warm`]. A single column is a
/// threshold test followed by a scalar root. Wider blocks run proximal Newton
/// with a line search and fall back to accelerated proximal gradient with
/// backtracking; both stop once the gradient map is below [`INNER_GRAD_TOL`].
pub fn minimize_block(loss: &SmoothLoss, block: &Block, a: &[f64], warm: Option<&[f64]>) -> Result<Vector> {
    if a.len() != block.nrows() || a.len() != loss.dim() {
        return Err(Error::shape("offset, block and loss dimensions differ"));
    }
    if let SmoothLoss::Quadratic { y } = loss {
        let b: Vec<f64> = y.iter().zip(a).map(|(yj, aj)| yj - aj).collect();
        return block.solve_warm(&b, warm);
    }
    if block.width() == 1 {
        return scalar_block(loss, block, a).map(|w| Vector::from_element(1, w));
    }
    match prox_newton(loss, block, a, warm) {
        Ok(w) => Ok(w),
        Err(_) => prox_gradient(loss, block, a, warm),
    }
}

fn scalar_block(loss: &SmoothLoss, block: &Block, a: &[f64]) -> Result<f64> {
    let x = numerics::col(block.x(), 0);
    let lam = match block.penalty() {
        Penalty::Zero => 0.0,
        p => p.lambda(),
    };
    let slope = |w: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut h = 0.0;
        for (j, (&xj, &aj)) in x.iter().zip(a).enumerate() {
            let z = aj + xj * w;
            g += xj * loss.grad_j(j, z);
            h += xj * xj * loss.hess_j(j, z);
        }
        (g, h)
    };
    let (g0, _) = slope(0.0);
    // optimality is g(w) + λ·sign(w) = 0
    let target = if g0 < -lam {
        lam
    } else if g0 > lam {
        -lam
    } else {
        return Ok(0.0);
    };
    let scale: f64 = x.iter().map(|v| v.abs()).sum();
    let step = 1.0 / block.column_sq_norm().unwrap_or(1.0).sqrt();
    increasing_root(
        "scalar block minimization",
        |w| {
            let (g, h) = slope(w);
            (g + target, h)
        },
        0.0,
        step,
        1e-15 * (1.0 + scale),
    )
}

struct Smooth<'a> {
    loss: &'a SmoothLoss,
    block: &'a Block,
    a: &'a [f64],
}

impl Smooth<'_> {
    fn z(&self, w: &[f64]) -> Vec<f64> {
        let mut z = self.a.to_vec();
        self.block.apply_add(1.0, w, &mut z);
        z
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.loss.value(&self.z(w))
    }

    fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let z = self.z(w);
        let g = self.loss.gradient(&z);
        (self.loss.value(&z), self.block.apply_t(g.as_slice()))
    }
}

const NEWTON_MAX_STEPS: usize = 100;

/// Each step solves the penalized quadratic model `½‖b̃ − D^{1/2}X v‖² + h(v)`
/// exactly with a [`Block`], `D = diag f''(a + Xw)`, then backtracks on `F`.
fn prox_newton(loss: &SmoothLoss, block: &Block, a: &[f64], warm: Option<&[f64]>) -> Result<Vector> {
    let k = block.width();
    let n = block.nrows();
    let pen = *block.penalty();
    let sm = Smooth { loss, block, a };
    let l_max = loss.curvature_bound() * block.sigma_max().powi(2);
    let mut w: Vec<f64> = match warm {
        Some(w0) if w0.len() == k => w0.to_vec(),
        _ => vec![0.0; k],
    };
    let mut res = f64::INFINITY;
    for _ in 0..NEWTON_MAX_STEPS {
        res = gradient_map_residual(&sm, &pen, &w, l_max);
        if res <= INNER_GRAD_TOL {
            return Ok(Vector::from_vec(w));
        }
        let z = sm.z(&w);
        let fw = loss.value(&z);
        let hw = pen.value(&w);
        let sq: Vec<f64> = (0..n).map(|j| loss.hess_j(j, z[j]).max(1e-12).sqrt()).collect();
        let xt = crate::numerics::Matrix::from_fn(n, k, |r, c| sq[r] * block.x()[(r, c)]);
        let xw = block.apply(&w);
        let bt: Vec<f64> = (0..n).map(|j| sq[j] * xw[j] - loss.grad_j(j, z[j]) / sq[j]).collect();
        let model = Block::new(xt, pen)?;
        let v = model.solve_warm(&bt, Some(&w))?;
        let dir: Vec<f64> = v.iter().zip(&w).map(|(vj, wj)| vj - wj).collect();
        let g = block.apply_t(loss.gradient(&z).as_slice());
        let decrease = dot(&g, &dir) + pen.value(v.as_slice()) - hw;
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = w.iter().zip(&dir).map(|(wj, dj)| wj + t * dj).collect();
            let fc = sm.value(&cand) + pen.value(&cand);
            if fc <= fw + hw + 1e-4 * t * decrease.min(0.0) + 1e-15 * (fw + hw).abs() {
                moved = cand != w;
                w = cand;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // the model solve can accept a point whose support is slightly
            // wrong; a prox-gradient step with the global bound corrects it
            let (_, g) = sm.value_grad(&w);
            let trial: Vec<f64> = w.iter().zip(&g).map(|(x, gj)| x - gj / l_max).collect();
            let next = pen.prox(&trial, 1.0 / l_max);
            if next == w {
                break;
            }
            w = next;
        }
    }
    if gradient_map_residual(&sm, &pen, &w, l_max) <= INNER_GRAD_TOL {
        return Ok(Vector::from_vec(w));
    }
    Err(Error::convergence("block proximal Newton minimization", res, NEWTON_MAX_STEPS))
}

fn prox_gradient(loss: &SmoothLoss, block: &Block, a: &[f64], warm: Option<&[f64]>) -> Result<Vector> {
    let k = block.width();
    let pen = *block.penalty();
    let sm = Smooth { loss, block, a };
    let l_max = loss.curvature_bound() * block.sigma_max().powi(2);
    let mut l = l_max;
    let mut w: Vec<f64> = match warm {
        Some(w0) if w0.len() == k => w0.to_vec(),
        _ => vec![0.0; k],
    };
    let mut yk = w.clone();
    let mut t = 1.0f64;
    let mut last_res = f64::INFINITY;
    for _ in 0..INNER_MAX_STEPS {
        let (fy, gy) = sm.value_grad(&yk);
        // backtracking on the local Lipschitz estimate
        let mut lk = (0.5 * l).max(1e-12 * l_max);
        let w_new = loop {
            let trial: Vec<f64> = yk.iter().zip(&gy).map(|(y, g)| y - g / lk).collect();
            let cand = pen.prox(&trial, 1.0 / lk);
            let d: Vec<f64> = cand.iter().zip(&yk).map(|(c, y)| c - y).collect();
            let bound = fy + dot(&gy, &d) + 0.5 * lk * dot(&d, &d);
            if sm.value(&cand) <= bound + 1e-15 * fy.abs().max(1.0) || lk >= l_max {
                break cand;
            }
            lk = (2.0 * lk).min(l_max);
        };
        l = lk;
        // gradient map at y
        last_res = lk * numerics::sup_dist(&w_new, &yk);
        let restart = yk.iter().zip(&w_new).zip(&w).map(|((y, n), o)| (y - n) * (n - o)).sum::<f64>() > 0.0;
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if restart {
            yk = w_new.clone();
            t = 1.0;
        } else {
            let beta = (t - 1.0) / t_new;
            yk = w_new.iter().zip(&w).map(|(n, o)| n + beta * (n - o)).collect();
            t = t_new;
        }
        w = w_new;
        if last_res <= INNER_GRAD_TOL {
            let res = gradient_map_residual(&sm, &pen, &w, l_max);
            if res <= INNER_GRAD_TOL {
                return Ok(Vector::from_vec(w));
            }
        }
    }
    Err(Error::convergence("block proximal-gradient minimization", last_res, INNER_MAX_STEPS))
}

/// `L‖w − prox_{h/L}(w − ∇F(w)/L)‖∞`.
fn gradient_map_residual(sm: &Smooth<'_>, pen: &Penalty, w: &[f64], l: f64) -> f64 {
    let (_, g) = sm.value_grad(w);
    let trial: Vec<f64> = w.iter().zip(&g).map(|(x, gj)| x - gj / l).collect();
    l * numerics::sup_dist(&pen.prox(&trial, 1.0 / l), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    #[test]
    fn root_of_cubic() {
        let r = increasing_root("cubic", |x| (x * x * x - 8.0, 3.0 * x * x), 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 2.0).abs() < 1e-14);
    }

    #[test]
    fn unbracketable_root_errors() {
        let e = increasing_root("flat", |x| (1.0 / (1.0 + (-x).exp()) - 2.0, 0.1), 0.0, 1.0, 1e-14);
        assert!(matches!(e, Err(Error::Convergence { .. })));
    }

    #[test]
    fn quadratic_loss_matches_block_solve() {
        let x = Matrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 1.0, 0.2, 0.7]);
        let blk = Block::new(x, Penalty::group_l2(0.4)).unwrap();
        let y = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let loss = SmoothLoss::quadratic(y.clone()).unwrap();
        let a = [0.1, 0.2, -0.3];
        let w = minimize_block(&loss, &blk, &a, None).unwrap();
        let b: Vec<f64> = (0..3).map(|j| y[j] - a[j]).collect();
        assert_eq!(w, blk.solve(&b).unwrap());
    }

    #[test]
    fn logistic_single_column_satisfies_kkt() {
        let x = Vector::from_vec(vec![1.0, -0.5, 2.0, 0.3]);
        let blk = Block::column(x.clone(), Penalty::l1(0.2)).unwrap();
        let loss = SmoothLoss::logistic(Vector::from_vec(vec![1.0, 0.0, 1.0, 1.0])).unwrap();
        let a = [0.1, 0.0, -0.2, 0.4];
        let w = minimize_block(&loss, &blk, &a, None).unwrap()[0];
        let z: Vec<f64> = (0..4).map(|j| a[j] + x[j] * w).collect();
        let g = dot(x.as_slice(), loss.gradient(&z).as_slice());
        assert!(w != 0.0);
        assert!((g + 0.2 * w.signum()).abs() < 1e-12);
    }

    #[test]
    fn logistic_group_block_satisfies_kkt() {
        let x = Matrix::from_fn(6, 2, |r, c| ((r + 2 * c) as f64).cos());
        let y = Vector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        let g0 = Vector::from_vec(x.tr_mul(&y.map(|v| v - 0.5)).as_slice().to_vec());
        let lam = 0.5 * g0.norm();
        let blk = Block::new(x, Penalty::group_l2(lam)).unwrap();
        let loss = SmoothLoss::logistic(y).unwrap();
        let w = minimize_block(&loss, &blk, &[0.0; 6], None).unwrap();
        let g = blk.apply_t(loss.gradient(blk.apply(w.as_slice()).as_slice()).as_slice());
        let nw = w.norm();
        assert!(nw > 0.0);
        for j in 0..2 {
            assert!((g[j] + lam * w[j] / nw).abs() < 1e-9);
        }
    }
}
