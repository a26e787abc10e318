use crate::error::{Error, Result};
use crate::numerics::{self, dot, Matrix, Vector, RANK_TOL};

use super::penalty::{soft_threshold, Penalty};

/// Inner-solve tolerance for iterative block updates (relative duality gap).
pub const INNER_GAP_TOL: f64 = 1e-12;
const INNER_MAX_ITERS: usize = 100_000;

#[derive(Clone, Debug)]
enum Factor {
    Column { sq_norm: f64 },
    /// Thin SVD `X = U diag(s) V^T` plus the Gram matrix.
    Svd { u: Matrix, s: Vector, v: Matrix, gram: Matrix },
}

/// One predictor block `X_i` with its penalty `h_i`.
///
/// The block solves `argmin_w ½‖b − X_i w‖² + h_i(w)`; by duality
/// `X_i ŵ = (Id − P_{C_i})(b)` with `C_i = {v : X_i^T v ∈ D_i}`.
#[derive(Clone, Debug)]
pub struct Block {
    x: Matrix,
    penalty: Penalty,
    factor: Factor,
}

impl Block {
    /// Rejects blocks without full column rank.
    pub fn new(x: Matrix, penalty: Penalty) -> Result<Self> {
        penalty.validate()?;
        let (n, k) = x.shape();
        if k == 0 || n == 0 {
            return Err(Error::shape(format!("empty block {n}x{k}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite entry in block matrix".into()));
        }
        let factor = if k == 1 {
            let sq_norm = x.norm_squared();
            if sq_norm == 0.0 {
                return Err(Error::Rank("zero predictor column".into()));
            }
            Factor::Column { sq_norm }
        } else {
            if k > n {
                return Err(Error::Rank(format!("{n}x{k} block cannot have full column rank")));
            }
            let svd = x.clone().svd(true, true);
            let s = svd.singular_values.clone();
            let smax = s.max();
            let smin = s.min();
            if smax == 0.0 || smin <= RANK_TOL * smax {
                return Err(Error::Rank(format!(
                    "block is rank deficient (sigma_min {smin:e}, sigma_max {smax:e})"
                )));
            }
            let u = svd.u.expect("requested U");
            let v = svd.v_t.expect("requested V^T").transpose();
            let gram = x.tr_mul(&x);
            Factor::Svd { u, s, v, gram }
        };
        Ok(Block { x, penalty, factor })
    }

    pub fn column(x: Vector, penalty: Penalty) -> Result<Self> {
        let n = x.len();
        Block::new(Matrix::from_column_slice(n, 1, x.as_slice()), penalty)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }

    /// `‖X_i‖²` for a single-column block.
    pub fn column_sq_norm(&self) -> Option<f64> {
        match self.factor {
            Factor::Column { sq_norm } => Some(sq_norm),
            Factor::Svd { .. } => None,
        }
    }

    /// Largest singular value of `X_i`.
    pub fn sigma_max(&self) -> f64 {
        match &self.factor {
            Factor::Column { sq_norm } => sq_norm.sqrt(),
            Factor::Svd { s, .. } => s.max(),
        }
    }

    /// `X_i w`
    pub fn apply(&self, w: &[f64]) -> Vector {
        let mut out = Vector::zeros(self.nrows());
        self.apply_add(1.0, w, out.as_mut_slice());
        out
    }

    /// `out += alpha · X_i w`
    pub fn apply_add(&self, alpha: f64, w: &[f64], out: &mut [f64]) {
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                numerics::axpy(alpha * wj, numerics::col(&self.x, j), out);
            }
        }
    }

    /// `X_i^T v`
    pub fn apply_t(&self, v: &[f64]) -> Vec<f64> {
        (0..self.width()).map(|j| dot(numerics::col(&self.x, j), v)).collect()
    }

    /// Single-column update from the correlation `c = X_i^T b`.
    #[inline]
    pub(crate) fn solve_scalar(&self, c: f64, sq_norm: f64) -> f64 {
        match self.penalty {
            Penalty::Zero => c / sq_norm,
            p => soft_threshold(c, p.lambda()) / sq_norm,
        }
    }

    /// `argmin_w ½‖b − X_i w‖² + h_i(w)`.
    pub fn solve(&self, b: &[f64]) -> Result<Vector> {
        self.solve_warm(b, None)
    }

    /// As [`Block::solve`]; `warm` seeds iterative inner solvers and does not
    /// change the minimizer.
    pub fn solve_warm(&self, b: &[f64], warm: Option<&[f64]>) -> Result<Vector> {
        if b.len() != self.nrows() {
            return Err(Error::shape(format!(
                "block has {} rows but right-hand side has length {}",
                self.nrows(),
                b.len()
            )));
        }
        match &self.factor {
            Factor::Column { sq_norm } => {
                let c = dot(numerics::col(&self.x, 0), b);
                Ok(Vector::from_element(1, self.solve_scalar(c, *sq_norm)))
            }
            Factor::Svd { u, s, v, gram } => match self.penalty {
                Penalty::Zero => {
                    let q = u.tr_mul(&Vector::from_column_slice(b));
                    Ok(v * q.component_div(s))
                }
                Penalty::GroupL2 { lambda } => group_l2_solve(u, s, v, lambda, b),
                _ => self.fista(gram, s.max(), b, warm),
            },
        }
    }

    /// Duality gap of `w` for the block problem with right-hand side `b`.
    ///
    /// With `r = b − X w` and the dual point `s·r`, `s` the largest scale keeping
    /// `X^T (s r)` in `D`, the gap is written without cancellation as
    /// `½(1−s)²‖r‖² + h(w) − s⟨X^T r, w⟩`.
    pub fn duality_gap(&self, b: &[f64], w: &[f64]) -> f64 {
        let mut r = b.to_vec();
        self.apply_add(-1.0, w, &mut r);
        let g = self.apply_t(&r);
        let s = self.penalty.dual_scaling(&g);
        let rr = dot(&r, &r);
        let gap = 0.5 * (1.0 - s) * (1.0 - s) * rr + self.penalty.value(w) - s * dot(&g, w);
        gap.max(0.0)
    }

    fn fista(&self, gram: &Matrix, smax: f64, b: &[f64], warm: Option<&[f64]>) -> Result<Vector> {
        let k = self.width();
        let step = 1.0 / (smax * smax);
        let c = Vector::from_vec(self.apply_t(b));
        let scale = 0.5 * dot(b, b);
        let tol = INNER_GAP_TOL * scale.max(f64::MIN_POSITIVE);
        let mut w = match warm {
            Some(w0) if w0.len() == k => Vector::from_column_slice(w0),
            _ => Vector::zeros(k),
        };
        let mut best_gap = self.duality_gap(b, w.as_slice());
        if best_gap <= tol {
            // an accepted warm start is still moved onto its face's exact solution
            return Ok(match self.polish(b, w.as_slice()) {
                Some((wp, gp)) if gp <= best_gap => wp,
                _ => w,
            });
        }
        let mut yk = w.clone();
        let mut t = 1.0f64;
        for it in 1..=INNER_MAX_ITERS {
            let grad = gram * &yk - &c;
            let trial: Vec<f64> = yk.iter().zip(grad.iter()).map(|(a, g)| a - step * g).collect();
            let w_new = Vector::from_vec(self.penalty.prox(&trial, step));
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let restart = (&yk - &w_new).dot(&(&w_new - &w)) > 0.0;
            if restart {
                yk = w_new.clone();
                t = 1.0;
            } else {
                yk = &w_new + (&w_new - &w) * ((t - 1.0) / t_new);
                t = t_new;
            }
            w = w_new;
            if it % 10 == 0 {
                let gap = self.duality_gap(b, w.as_slice());
                best_gap = best_gap.min(gap);
                if it % 50 == 0 || gap <= tol {
                    if let Some((wp, gp)) = self.polish(b, w.as_slice()) {
                        if gp <= tol && gp <= gap {
                            return Ok(wp);
                        }
                    }
                }
                if gap <= tol {
                    return Ok(w);
                }
            }
        }
        if let Some((wp, gp)) = self.polish(b, w.as_slice()) {
            if gp <= tol {
                return Ok(wp);
            }
        }
        Err(Error::convergence("block proximal-gradient solve", best_gap, INNER_MAX_ITERS))
    }

    /// Solves exactly on the face of `D` suggested by `w`.
    ///
    /// The face fixes `w = T θ` and makes `h` linear, `h(Tθ) = cᵀθ`, so the block
    /// problem becomes the linear system `(XT)ᵀ(XT) θ = (XT)ᵀ b − c`.
    fn polish(&self, b: &[f64], w: &[f64]) -> Option<(Vector, f64)> {
        let k = w.len();
        let lam = self.penalty.lambda();
        let (t, c): (Matrix, Vec<f64>) = match self.penalty {
            Penalty::L1 { .. } => {
                let supp: Vec<usize> = (0..k).filter(|&j| w[j] != 0.0).collect();
                if supp.is_empty() {
                    return None;
                }
                let t = Matrix::from_fn(k, supp.len(), |r, q| if r == supp[q] { 1.0 } else { 0.0 });
                let c = supp.iter().map(|&j| lam * w[j].signum()).collect();
                (t, c)
            }
            Penalty::Linf { .. } => {
                let m = w.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                if m == 0.0 {
                    return None;
                }
                let top: Vec<bool> = w.iter().map(|x| x.abs() >= m * (1.0 - 1e-6)).collect();
                let free: Vec<usize> = (0..k).filter(|&j| !top[j]).collect();
                let cols = free.len() + 1;
                let t = Matrix::from_fn(k, cols, |r, q| {
                    if q < free.len() {
                        if r == free[q] {
                            1.0
                        } else {
                            0.0
                        }
                    } else if top[r] {
                        w[r].signum()
                    } else {
                        0.0
                    }
                });
                let mut c = vec![0.0; cols];
                c[cols - 1] = lam;
                (t, c)
            }
            _ => return None,
        };
        let z = &self.x * &t;
        let rhs = z.tr_mul(&Vector::from_column_slice(b)) - Vector::from_vec(c);
        let theta = (z.tr_mul(&z)).cholesky()?.solve(&rhs);
        let wp = &t * theta;
        if wp.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let gap = self.duality_gap(b, wp.as_slice());
        Some((wp, gap))
    }

    /// `(Id − P_{C_i})(b)`, computed as `X_i ŵ`.
    pub fn residual_map(&self, b: &[f64]) -> Result<Vector> {
        let w = self.solve(b)?;
        Ok(self.apply(w.as_slice()))
    }

    /// Euclidean projection onto `C_i = {v : X_i^T v ∈ D_i}`.
    pub fn project_inverse_image(&self, b: &[f64]) -> Result<Vector> {
        if let Factor::Column { sq_norm } = self.factor {
            if b.len() != self.nrows() {
                return Err(Error::shape(format!(
                    "set has dimension {} but point has length {}",
                    self.nrows(),
                    b.len()
                )));
            }
            // C_i is a slab (or a hyperplane for Zero): clip the normal component.
            let a = numerics::col(&self.x, 0);
            let c = dot(a, b);
            let lam = self.penalty.lambda();
            let target = c.clamp(-lam, lam);
            let mut out = Vector::from_column_slice(b);
            numerics::axpy(-(c - target) / sq_norm, a, out.as_mut_slice());
            return Ok(out);
        }
        let fit = self.residual_map(b)?;
        Ok(Vector::from_column_slice(b) - fit)
    }

    pub fn inverse_image_contains(&self, v: &[f64], tol: f64) -> Result<bool> {
        let p = self.project_inverse_image(v)?;
        Ok(numerics::sup_dist(p.as_slice(), v) <= tol)
    }
}

/// Group-lasso block: with `q = diag(s) U^T b`, `w = V diag(1/(s_j² + t)) q` where
/// `t > 0` solves `Σ q_j² t²/(s_j² + t)² = λ²`.
fn group_l2_solve(u: &Matrix, s: &Vector, v: &Matrix, lambda: f64, b: &[f64]) -> Result<Vector> {
    let q = u.tr_mul(&Vector::from_column_slice(b)).component_mul(s);
    let qn = q.norm();
    if qn <= lambda {
        return Ok(Vector::zeros(s.len()));
    }
    if lambda == 0.0 {
        return Ok(v * q.zip_map(s, |qj, sj| qj / (sj * sj)));
    }
    let s2: Vec<f64> = s.iter().map(|x| x * x).collect();
    let psi = |t: f64| -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for (qj, &sj) in q.iter().zip(&s2) {
            let d = sj + t;
            f += qj * qj * t * t / (d * d);
            df += 2.0 * qj * qj * t * sj / (d * d * d);
        }
        (f - lambda * lambda, df)
    };
    let smin2 = s2.iter().copied().fold(f64::INFINITY, f64::min);
    let smax2 = s2.iter().copied().fold(0.0, f64::max);
    let mut lo = lambda * smin2 / (qn - lambda);
    let mut hi = lambda * smax2 / (qn - lambda);
    let mut t = 0.5 * (lo + hi);
    let target = 1e-14 * lambda * lambda;
    let mut converged = false;
    for _ in 0..200 {
        let (f, df) = psi(t);
        if f.abs() <= target {
            converged = true;
            break;
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - f / df;
        t = if df > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * hi {
            converged = true;
            break;
        }
    }
    if !converged {
        let (f, _) = psi(t);
        return Err(Error::convergence("group-lasso secular equation", f.abs(), 200));
    }
    Ok(v * q.zip_map(s, |qj, sj| qj / (sj * sj + t)))
}

/// `ŵ_i = argmin ½‖b − X_i w‖² + h_i(w)`.
pub fn block_update(x: &Matrix, penalty: &Penalty, b: &[f64]) -> Result<Vector> {
    Block::new(x.clone(), *penalty)?.solve(b)
}

/// `(Id − P_{C_i})(b)` for `C_i = {v : X_i^T v ∈ D_i}`.
pub fn residual_map(x: &Matrix, penalty: &Penalty, b: &[f64]) -> Result<Vector> {
    let blk = Block::new(x.clone(), *penalty)?;
    let p = blk.project_inverse_image(b)?;
    Ok(Vector::from_column_slice(b) - p)
}
