use crate::error::{Error, Result};
use crate::geometry::{soft_threshold, RegressionProblem};
use crate::numerics::{self, dot, Matrix, Vector};

use super::dykstra::DykstraState;
use super::trace::{Recorder, RunOptions, SolverTrace, StopRule};

/// Cyclic block coordinate descent on a general [`RegressionProblem`].
///
/// Keeps the full residual `r = y − Xw`; block `i` is updated from the partial
/// residual `b = r + X_i w_i`.
#[derive(Clone, Debug)]
pub struct BlockCdState<'a> {
    pub problem: &'a RegressionProblem,
    pub w: Vec<f64>,
    pub r: Vector,
    pub k: usize,
}

impl<'a> BlockCdState<'a> {
    pub fn new(problem: &'a RegressionProblem, w0: Option<&[f64]>) -> Result<Self> {
        let w = match w0 {
            Some(w0) => {
                problem.check_w(w0)?;
                w0.to_vec()
            }
            None => vec![0.0; problem.p()],
        };
        let r = problem.residual(&w)?;
        Ok(BlockCdState { problem, w, r, k: 0 })
    }

    /// One ascending sweep. `inspect(i, w_i, r)` sees each block right after its
    /// update, where `r` is the partial-sweep residual. Returns the sup-norm change of `w`.
    pub fn sweep_with<F>(&mut self, mut inspect: F) -> Result<f64>
    where
        F: FnMut(usize, &[f64], &Vector),
    {
        let mut change = 0.0f64;
        for (i, blk) in self.problem.blocks().iter().enumerate() {
            let rg = self.problem.range(i);
            let old = &self.w[rg.clone()];
            let mut b = self.r.clone();
            blk.apply_add(1.0, old, b.as_mut_slice());
            let new = blk.solve_warm(b.as_slice(), Some(old))?;
            change = change.max(numerics::sup_dist(old, new.as_slice()));
            blk.apply_add(-1.0, new.as_slice(), b.as_mut_slice());
            self.r = b;
            self.w[rg.clone()].copy_from_slice(new.as_slice());
            inspect(i, &self.w[rg], &self.r);
        }
        self.k += 1;
        Ok(change)
    }

    pub fn sweep(&mut self) -> Result<f64> {
        self.sweep_with(|_, _, _| {})
    }

    pub fn criterion(&self) -> f64 {
        0.5 * self.r.norm_squared() + self.problem.penalty_value(&self.w)
    }
}

/// Coordinate descent specialized to the lasso (single-column `L1` blocks).
#[derive(Clone, Debug)]
pub struct LassoCdState<'a> {
    pub x: &'a Matrix,
    pub lambda: f64,
    pub sq_norms: Vec<f64>,
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub k: usize,
}

impl<'a> LassoCdState<'a> {
    pub fn new(x: &'a Matrix, y: &Vector, lambda: f64, w0: Option<&[f64]>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::shape("design rows differ from response length"));
        }
        let sq_norms: Vec<f64> = (0..x.ncols()).map(|j| x.column(j).norm_squared()).collect();
        if let Some(j) = sq_norms.iter().position(|&q| q == 0.0) {
            return Err(Error::Rank(format!("column {j} is zero")));
        }
        let w = w0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; x.ncols()]);
        if w.len() != x.ncols() {
            return Err(Error::shape("initial coefficients have the wrong length"));
        }
        let r = (y - x * Vector::from_column_slice(&w)).as_slice().to_vec();
        Ok(LassoCdState { x, lambda, sq_norms, w, r, k: 0 })
    }

    /// `w_j ← soft(X_j^T r_j, λ)/‖X_j‖²` with `r_j` the partial residual including `X_j w_j`.
    pub fn sweep(&mut self) -> f64 {
        let mut change = 0.0f64;
        for j in 0..self.w.len() {
            let xj = numerics::col(self.x, j);
            let q = self.sq_norms[j];
            let old = self.w[j];
            let c = dot(xj, &self.r) + q * old;
            let new = soft_threshold(c, self.lambda) / q;
            if new != old {
                numerics::axpy(old - new, xj, &mut self.r);
                self.w[j] = new;
                change = change.max((new - old).abs());
            }
        }
        self.k += 1;
        change
    }

    pub fn criterion(&self) -> f64 {
        0.5 * dot(&self.r, &self.r) + self.lambda * self.w.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Duality gap with dual point `s·r`, `s = min(1, λ/‖X^T r‖∞)`.
    pub fn gap(&self) -> f64 {
        lasso_gap(self.x, &self.w, &self.r, self.lambda)
    }
}

pub(crate) fn lasso_gap(x: &Matrix, w: &[f64], r: &[f64], lambda: f64) -> f64 {
    let g: Vec<f64> = (0..x.ncols()).map(|j| dot(numerics::col(x, j), r)).collect();
    let gmax = numerics::sup_norm(&g);
    let s = if gmax <= lambda { 1.0 } else { lambda / gmax };
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let gap = 0.5 * (1.0 - s) * (1.0 - s) * dot(r, r) + lambda * l1 - s * dot(&g, w);
    gap.max(0.0)
}

fn nnz(w: &[f64]) -> usize {
    w.iter().filter(|&&v| v != 0.0).count()
}

/// Block coordinate descent from `w0` (zero by default).
pub fn block_cd(
    problem: &RegressionProblem,
    opts: &RunOptions,
    w0: Option<&[f64]>,
) -> Result<(Vector, SolverTrace)> {
    if let Some(lam) = problem.lasso_lambda() {
        return lasso_cd_from(problem.x(), problem.y(), lam, opts, w0);
    }
    opts.stop.validate()?;
    let mut st = BlockCdState::new(problem, w0)?;
    let d = problem.num_blocks() as u64;
    let mut rec = Recorder::new("cd", opts);
    rec.record(0, st.criterion(), nnz(&st.w), 0, Some(&st.w), None);
    loop {
        let change = st.sweep()?;
        let k = st.k;
        rec.record(k, st.criterion(), nnz(&st.w), d * k as u64, Some(&st.w), None);
        let gap = opts.stop.tol_gap.map(|_| problem.gap_from_residual(&st.w, st.r.as_slice()));
        if rec.should_stop(k, change, gap) {
            return Ok((Vector::from_vec(st.w), rec.finish()));
        }
    }
}

/// Lasso coordinate descent from zero.
pub fn lasso_cd(x: &Matrix, y: &Vector, lambda: f64, opts: &RunOptions) -> Result<(Vector, SolverTrace)> {
    lasso_cd_from(x, y, lambda, opts, None)
}

pub fn lasso_cd_from(
    x: &Matrix,
    y: &Vector,
    lambda: f64,
    opts: &RunOptions,
    w0: Option<&[f64]>,
) -> Result<(Vector, SolverTrace)> {
    opts.stop.validate()?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Parameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let mut st = LassoCdState::new(x, y, lambda, w0)?;
    let p = x.ncols() as u64;
    let mut rec = Recorder::new("cd", opts);
    rec.record(0, st.criterion(), nnz(&st.w), 0, Some(&st.w), None);
    loop {
        let change = st.sweep();
        let k = st.k;
        rec.record(k, st.criterion(), nnz(&st.w), p * k as u64, Some(&st.w), None);
        let gap = opts.stop.tol_gap.map(|_| st.gap());
        if rec.should_stop(k, change, gap) {
            return Ok((Vector::from_vec(st.w), rec.finish()));
        }
    }
}

/// Runs Dykstra on the dual problem and block CD side by side for
/// `stop.max_sweeps` sweeps and returns the largest deviation of
/// `z_i − X_i w_i` and of `u_i − (partial residual after block i)`.
pub fn equivalence_check(problem: &RegressionProblem, stop: &StopRule) -> Result<f64> {
    stop.validate()?;
    let dual = problem.dual_problem();
    let mut dy = DykstraState::new(&dual);
    let mut cd = BlockCdState::new(problem, None)?;
    let d = problem.num_blocks();
    let mut dev = 0.0f64;
    let mut cd_u = Vec::with_capacity(d);
    let mut cd_z = Vec::with_capacity(d);
    for _ in 0..stop.max_sweeps {
        cd_u.clear();
        cd_z.clear();
        cd.sweep_with(|i, wi, r| {
            cd_u.push(r.clone());
            cd_z.push(problem.blocks()[i].apply(wi));
        })?;
        dy.sweep_with(|i, u, z| {
            dev = dev
                .max(numerics::sup_dist(u.as_slice(), cd_u[i].as_slice()))
                .max(numerics::sup_dist(z.as_slice(), cd_z[i].as_slice()));
        })?;
    }
    Ok(dev)
}
