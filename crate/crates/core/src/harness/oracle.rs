use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ApproxProblem, ConvexSet, Penalty};
use crate::io_fmt;
use crate::numerics::{self, dot, Matrix, Vector};
use crate::serial::{DykstraState, LassoCdState};

/// Sweep cap for the certifying solver and the oracle's Dykstra cross-check.
pub const ORACLE_MAX_SWEEPS: usize = 1_000_000;
const CERT_CHANGE_TOL: f64 = 1e-14;
const GAP_EVERY: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub gap: f64,
    pub sweeps: usize,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub criterion: f64,
}

/// Lasso solution with a duality-gap certificate.
///
/// Runs coordinate descent until the sup-norm change is at most `1e-14`, then
/// requires the gap (dual point: residual scaled into the slabs) to be at most
/// `tol_gap`.
pub fn reference_lasso(x: &Matrix, y: &Vector, lambda: f64, tol_gap: f64) -> Result<(Vector, Certificate)> {
    if !(tol_gap > 0.0) {
        return Err(Error::Parameter(format!("tol_gap must be positive, got {tol_gap}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Parameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let mut st = LassoCdState::new(x, y, lambda, None)?;
    let mut best = f64::INFINITY;
    loop {
        let change = st.sweep();
        let settled = change <= CERT_CHANGE_TOL;
        if settled || st.k % GAP_EVERY == 0 {
            let gap = st.gap();
            best = best.min(gap);
            if settled {
                if gap <= tol_gap {
                    let cert = Certificate { gap, sweeps: st.k, criterion: st.criterion() };
                    return Ok((Vector::from_vec(st.w), cert));
                }
                // a fixed point that fails the certificate will not improve
                if change == 0.0 {
                    return Err(Error::Certification { best_gap: best, sweeps: st.k });
                }
            }
        }
        if st.k >= ORACLE_MAX_SWEEPS {
            return Err(Error::Certification { best_gap: best, sweeps: st.k });
        }
    }
}

/// Lasso optimality conditions with `r = y − Xw`: `|X_jᵀr| ≤ λ + tol` for all
/// `j`, and `X_jᵀr = sign(w_j)λ` within `tol` where `|w_j| > tol`.
pub fn kkt_check(x: &Matrix, y: &Vector, lambda: f64, w: &[f64], tol: f64) -> (bool, f64) {
    if x.nrows() != y.len() || x.ncols() != w.len() {
        return (false, f64::INFINITY);
    }
    let r = y - x * Vector::from_column_slice(w);
    let mut worst = 0.0f64;
    for (j, &wj) in w.iter().enumerate() {
        let g = dot(numerics::col(x, j), r.as_slice());
        let v = if wj.abs() > tol { (g - wj.signum() * lambda).abs() } else { (g.abs() - lambda).max(0.0) };
        worst = worst.max(v);
    }
    (worst <= tol, worst)
}

/// Halfspace rows `a_kᵀu ≤ b_k` describing a polyhedral set.
fn halfspace_rows(set: &ConvexSet, rows: &mut Vec<(Vector, f64)>) -> Result<()> {
    match set {
        ConvexSet::Halfspace { a, b } => rows.push((a.clone(), *b)),
        ConvexSet::Slab { a, lambda } => {
            rows.push((a.clone(), *lambda));
            rows.push((-a, *lambda));
        }
        ConvexSet::Box { lower, upper } => {
            let n = lower.len();
            for j in 0..n {
                let e = Vector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
                if upper[j].is_finite() {
                    rows.push((e.clone(), upper[j]));
                }
                if lower[j].is_finite() {
                    rows.push((-e, -lower[j]));
                }
            }
        }
        ConvexSet::InverseImage(block) if block.width() == 1 => {
            let a = Vector::from_column_slice(numerics::col(block.x(), 0));
            let lam = match block.penalty() {
                Penalty::Zero => 0.0,
                p => p.lambda(),
            };
            rows.push((a.clone(), lam));
            rows.push((-a, lam));
        }
        ConvexSet::Product(_) | ConvexSet::Consensus { .. } => {
            return Err(Error::Type("product-space sets are not handled by the projection oracle".into()))
        }
        _ => return Err(Error::Type("the projection oracle handles polyhedral sets only".into())),
    }
    Ok(())
}

/// Nonnegative least squares `argmin_{θ ≥ 0} ‖Eθ − f‖` (Lawson–Hanson).
pub fn nnls(e: &Matrix, f: &Vector) -> Result<Vector> {
    let (n, m) = e.shape();
    if f.len() != n {
        return Err(Error::shape("right-hand side length differs from matrix rows"));
    }
    let mut theta = Vector::zeros(m);
    let mut passive = vec![false; m];
    let scale = e.iter().fold(0.0f64, |a, v| a.max(v.abs())) * f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-13 * (1.0 + scale) * m.max(1) as f64;
    let ls = |passive: &[bool]| -> Vector {
        let idx: Vec<usize> = (0..m).filter(|&j| passive[j]).collect();
        let sub = Matrix::from_fn(n, idx.len(), |r, c| e[(r, idx[c])]);
        let z = sub.svd(true, true).solve(f, 1e-12).unwrap_or_else(|_| Vector::zeros(idx.len()));
        let mut full = Vector::zeros(m);
        for (c, &j) in idx.iter().enumerate() {
            full[j] = z[c];
        }
        full
    };
    for _ in 0..(3 * m + 10) {
        let grad = e.tr_mul(&(f - e * &theta));
        let pick = (0..m).filter(|&j| !passive[j] && grad[j] > tol).max_by(|&a, &b| grad[a].total_cmp(&grad[b]));
        let Some(j) = pick else { break };
        passive[j] = true;
        loop {
            let z = ls(&passive);
            if (0..m).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                theta = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in (0..m).filter(|&i| passive[i] && z[i] <= 0.0) {
                alpha = alpha.min(theta[i] / (theta[i] - z[i]));
            }
            theta += (z - &theta) * alpha;
            for i in 0..m {
                if passive[i] && theta[i] <= 1e-15 {
                    passive[i] = false;
                    theta[i] = 0.0;
                }
            }
        }
    }
    Ok(theta)
}

struct Polyhedron {
    a: Matrix,
    b: Vector,
}

impl Polyhedron {
    fn new(sets: &[ConvexSet], n: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for s in sets {
            if s.dim() != n {
                return Err(Error::shape("set dimension differs from the point"));
            }
            halfspace_rows(s, &mut rows)?;
        }
        let a = Matrix::from_fn(rows.len(), n, |r, c| rows[r].0[c]);
        let b = Vector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        Ok(Polyhedron { a, b })
    }

    fn violation(&self, u: &Vector) -> f64 {
        (&self.a * u - &self.b).iter().fold(0.0f64, |m, &v| m.max(v))
    }

    /// Optimality residual of `u` as the projection of `y`: infeasibility, or
    /// the distance from `y − u` to the cone of nearly active normals.
    fn kkt_residual(&self, y: &Vector, u: &Vector, active_tol: f64) -> Result<f64> {
        let slack = &self.a * u - &self.b;
        let act: Vec<usize> = (0..slack.len()).filter(|&k| slack[k] >= -active_tol).collect();
        let d = y - u;
        let fit = if act.is_empty() {
            d.norm()
        } else {
            let e = Matrix::from_fn(u.len(), act.len(), |r, c| self.a[(act[c], r)]);
            let th = nnls(&e, &d)?;
            (&e * th - &d).norm()
        };
        Ok(fit.max(self.violation(u)))
    }

    /// Projection onto `{u : A_S u = b_S}` for the rows in `act`.
    fn affine_projection(&self, y: &Vector, act: &[usize]) -> Vector {
        if act.is_empty() {
            return y.clone();
        }
        let n = y.len();
        let a_s = Matrix::from_fn(act.len(), n, |r, c| self.a[(act[r], c)]);
        let rhs = &a_s * y - Vector::from_iterator(act.len(), act.iter().map(|&k| self.b[k]));
        let gram = &a_s * a_s.transpose();
        let eps = 1e-12 * gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        match gram.svd(true, true).solve(&rhs, eps) {
            Ok(t) => y - a_s.tr_mul(&t),
            Err(_) => y.clone(),
        }
    }

    /// Least-distance form: with `x = u − y`, minimize `‖x‖` subject to
    /// `Gx ≥ h`, `G = −A`, `h = Ay − b`. The NNLS problem with
    /// `E = [Gᵀ; hᵀ]`, `f = e_{n+1}` gives `x = −r_{1..n}/r_{n+1}` from its
    /// residual `r = Eθ − f`.
    fn least_distance(&self, y: &Vector) -> Result<Vector> {
        let n = y.len();
        let m = self.b.len();
        let h = &self.a * y - &self.b;
        let e = Matrix::from_fn(n + 1, m, |r, c| if r < n { -self.a[(c, r)] } else { h[c] });
        let mut f = Vector::zeros(n + 1);
        f[n] = 1.0;
        let theta = nnls(&e, &f)?;
        let r = &e * theta - &f;
        if r[n].abs() <= 1e-12 {
            return Err(Error::Degenerate("the polyhedral sets have an empty intersection".into()));
        }
        Ok(y - r.rows(0, n) / r[n])
    }

    /// Best KKT point among `u` and its active-set polishes.
    fn polish(&self, y: &Vector, u: Vector) -> Result<(Vector, f64)> {
        let mut best_res = self.kkt_residual(y, &u, 1e-9)?;
        let mut best = u;
        let slack = &self.a * &best - &self.b;
        for tol in [1e-10, 1e-8, 1e-6] {
            let act: Vec<usize> = (0..slack.len()).filter(|&k| slack[k] >= -tol).collect();
            let cand = self.affine_projection(y, &act);
            let res = self.kkt_residual(y, &cand, 1e-9)?;
            if res < best_res {
                best_res = res;
                best = cand;
            }
        }
        Ok((best, best_res))
    }
}

/// Projection of `y` onto the intersection of polyhedral sets (halfspaces,
/// slabs, boxes, single-column inverse images).
///
/// Two independent routes are computed: a least-distance reduction to
/// nonnegative least squares and a long Dykstra run. Each is polished on its
/// estimated active set and scored by its KKT residual. The routes must agree within `10·tol`, and the
/// returned point must have residual at most `tol`.
pub fn projection_oracle(sets: &[ConvexSet], y: &Vector, tol: f64) -> Result<Vector> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("oracle tolerance must be positive, got {tol}")));
    }
    let poly = Polyhedron::new(sets, y.len())?;
    if poly.violation(y) <= 0.0 {
        return Ok(y.clone());
    }
    let (u_dual, res_dual) = poly.polish(y, poly.least_distance(y)?)?;

    let problem = ApproxProblem::new(y.clone(), sets.to_vec())?;
    let mut dy = DykstraState::new(&problem);
    while dy.k < ORACLE_MAX_SWEEPS {
        // a zero change alone can be a stall on a corner while the
        // increments are still moving
        if dy.sweep()? <= 1e-15 && poly.violation(&dy.u) <= 1e-13 {
            break;
        }
    }
    let (u_dyk, res_dyk) = poly.polish(y, dy.u.clone())?;

    let gap = numerics::sup_dist(u_dual.as_slice(), u_dyk.as_slice());
    if gap > 10.0 * tol {
        return Err(Error::OracleInconsistency(gap));
    }
    let (u, res) = if res_dual <= res_dyk { (u_dual, res_dual) } else { (u_dyk, res_dyk) };
    if res > tol {
        return Err(Error::convergence("projection oracle", res, dy.k));
    }
    Ok(u)
}

/// KKT residual of `u` as the projection of `y` onto polyhedral `sets`.
pub fn projection_residual(sets: &[ConvexSet], y: &Vector, u: &Vector) -> Result<f64> {
    Polyhedron::new(sets, y.len())?.kkt_residual(y, u, 1e-9)
}
