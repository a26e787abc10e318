//! Product-space parallel methods, two-set ADMM and the inertial multi-block
//! ADMM constructions.
//!
//! Every parallel sweep reads one immutable snapshot, computes all block updates
//! independently (on rayon when enabled), then forms `Xw` by an ordered
//! reduction in ascending column order.

mod admm;
mod inertial;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_blocks, try_map_blocks, Execution};
use crate::geometry::{soft_threshold, ApproxProblem, RegressionProblem};
use crate::numerics::{self, dot, Vector};
use crate::serial::{Recorder, RunOptions, SolverTrace};

pub use admm::{admm_two_set, AdmmStart, AdmmTwoSetState};
pub use inertial::{inertial_multiblock_admm, one_sweep_deviation, InertialMode, InertialState};

/// Positive weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::Parameter("weight vector is empty".into()));
        }
        if g.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("weights must be positive".into()));
        }
        let s: f64 = g.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights must sum to 1, got {s}")));
        }
        Ok(WeightVector(g))
    }

    pub fn uniform(d: usize) -> Self {
        WeightVector(vec![1.0 / d as f64; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Augmented Lagrangian parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    /// Per-block `ρ_i` for parallel-ADMM-CD.
    pub block_rhos: Vec<f64>,
}

impl AdmmParams {
    pub fn new(block_rhos: Vec<f64>) -> Result<Self> {
        if block_rhos.is_empty() || block_rhos.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("augmented Lagrangian parameters must be positive".into()));
        }
        Ok(AdmmParams { block_rhos })
    }

    /// `ρ_i = total/d` for all `d` blocks.
    pub fn uniform(d: usize, total: f64) -> Result<Self> {
        Self::new(vec![total / d as f64; d])
    }

    pub fn total(&self) -> f64 {
        self.block_rhos.iter().sum()
    }
}

const LASSO_CHUNK: usize = 64;

/// New coefficients `w_i = s_i · argmin_v ½‖base + X_i w_i/s_i − X_i v‖² + h_i(v)`
/// for every block, all from the same snapshot.
pub(crate) fn scaled_block_sweep(
    problem: &RegressionProblem,
    base: &[f64],
    w: &[f64],
    scales: &[f64],
    exec: Execution,
) -> Result<Vec<f64>> {
    if let Some(lam) = problem.lasso_lambda() {
        let x = problem.x();
        let p = problem.p();
        let blocks = problem.blocks();
        let chunks = map_blocks(p.div_ceil(LASSO_CHUNK), exec, |c| {
            let lo = c * LASSO_CHUNK;
            let hi = (lo + LASSO_CHUNK).min(p);
            (lo..hi)
                .map(|j| {
                    let q = blocks[j].column_sq_norm().expect("single column");
                    let cj = dot(numerics::col(x, j), base) + q * w[j] / scales[j];
                    scales[j] * soft_threshold(cj, lam) / q
                })
                .collect::<Vec<f64>>()
        });
        return Ok(chunks.concat());
    }
    let parts = try_map_blocks(problem.num_blocks(), exec, |i| {
        let blk = &problem.blocks()[i];
        let s = scales[i];
        let wi: Vec<f64> = w[problem.range(i)].iter().map(|v| v / s).collect();
        let mut b = base.to_vec();
        blk.apply_add(1.0, &wi, &mut b);
        let v = blk.solve_warm(&b, Some(&wi))?;
        Ok::<_, Error>(v.iter().map(|x| x * s).collect::<Vec<f64>>())
    })?;
    Ok(parts.concat())
}

/// `X w`, accumulated column by column in ascending order.
pub(crate) fn ordered_fit(problem: &RegressionProblem, w: &[f64]) -> Vector {
    let x = problem.x();
    let mut fit = Vector::zeros(problem.n());
    for (j, &wj) in w.iter().enumerate() {
        if wj != 0.0 {
            numerics::axpy(wj, numerics::col(x, j), fit.as_mut_slice());
        }
    }
    fit
}

fn nnz(w: &[f64]) -> usize {
    w.iter().filter(|&&v| v != 0.0).count()
}

fn regression_criterion(problem: &RegressionProblem, w: &[f64], fit: &Vector) -> f64 {
    0.5 * (problem.y() - fit).norm_squared() + problem.penalty_value(w)
}

/// Parallel Dykstra on the product space: `u_0 = Σ γ_i u_i`, then for all `i`
/// at once `u_i = P_i(u_0 + z_i)`, `z_i = u_0 + z_i − u_i`. Returns `u_0`.
pub fn parallel_dykstra(
    problem: &ApproxProblem,
    weights: &WeightVector,
    opts: &RunOptions,
) -> Result<(Vector, SolverTrace)> {
    opts.stop.validate()?;
    let d = problem.sets.len();
    if weights.len() != d {
        return Err(Error::shape(format!("{} weights for {d} sets", weights.len())));
    }
    let g = weights.as_slice();
    let n = problem.dim();
    let mut u = vec![Vector::zeros(n); d];
    let mut z = vec![Vector::zeros(n); d];
    let mut u0 = problem.anchor.clone();
    let mut rec = Recorder::new("parallel_dykstra", opts);
    rec.trace.parallel_width = Some(d);
    rec.record(0, 0.0, 0, 0, None, Some(u0.as_slice()));
    let mut k = 0;
    loop {
        k += 1;
        let out = try_map_blocks(d, opts.execution, |i| {
            let x = &u0 + &z[i];
            let ui = problem.sets[i].project(x.as_slice())?;
            let zi = x - &ui;
            Ok::<_, Error>((ui, zi))
        })?;
        for (i, (ui, zi)) in out.into_iter().enumerate() {
            u[i] = ui;
            z[i] = zi;
        }
        // the next sweep's u_0; this is also the reported point
        let mut next = Vector::zeros(n);
        for (gi, ui) in g.iter().zip(&u) {
            numerics::axpy(*gi, ui.as_slice(), next.as_mut_slice());
        }
        let change = numerics::sup_dist(next.as_slice(), u0.as_slice());
        u0 = next;
        let crit = 0.5 * (&problem.anchor - &u0).norm_squared();
        let active = z.iter().filter(|zi| zi.iter().any(|&v| v != 0.0)).count();
        rec.record(k, crit, active, (d * k) as u64, None, Some(u0.as_slice()));
        if rec.should_stop(k, change, None) {
            return Ok((u0, rec.finish()));
        }
    }
}

/// Parallel-Dykstra-CD state. All blocks update from the previous sweep's residual.
#[derive(Clone, Debug)]
pub struct ParallelDykstraCdState<'a> {
    pub problem: &'a RegressionProblem,
    pub scales: Vec<f64>,
    pub w: Vec<f64>,
    pub fit: Vector,
    pub k: usize,
}

impl<'a> ParallelDykstraCdState<'a> {
    pub fn new(problem: &'a RegressionProblem, weights: &WeightVector) -> Result<Self> {
        if weights.len() != problem.num_blocks() {
            return Err(Error::shape(format!(
                "{} weights for {} blocks",
                weights.len(),
                problem.num_blocks()
            )));
        }
        Ok(ParallelDykstraCdState {
            problem,
            scales: weights.as_slice().to_vec(),
            w: vec![0.0; problem.p()],
            fit: Vector::zeros(problem.n()),
            k: 0,
        })
    }

    /// `w_i ← γ_i · argmin_v ½‖y − Xw + X_i w_i/γ_i − X_i v‖² + h_i(v)`.
    pub fn sweep(&mut self, exec: Execution) -> Result<f64> {
        let r = self.problem.y() - &self.fit;
        let w_new = scaled_block_sweep(self.problem, r.as_slice(), &self.w, &self.scales, exec)?;
        let change = numerics::sup_dist(&w_new, &self.w);
        self.fit = ordered_fit(self.problem, &w_new);
        self.w = w_new;
        self.k += 1;
        Ok(change)
    }

    pub fn criterion(&self) -> f64 {
        regression_criterion(self.problem, &self.w, &self.fit)
    }
}

/// Parallel-ADMM-CD state, initialized with `u_0 = y`, `w^{(−1)} = w^{(0)} = 0`.
#[derive(Clone, Debug)]
pub struct ParallelAdmmCdState<'a> {
    pub problem: &'a RegressionProblem,
    pub rhos: Vec<f64>,
    pub u0: Vector,
    pub w: Vec<f64>,
    pub fit: Vector,
    pub fit_prev: Vector,
    pub k: usize,
}

impl<'a> ParallelAdmmCdState<'a> {
    pub fn new(problem: &'a RegressionProblem, params: &AdmmParams) -> Result<Self> {
        if params.block_rhos.len() != problem.num_blocks() {
            return Err(Error::shape(format!(
                "{} parameters for {} blocks",
                params.block_rhos.len(),
                problem.num_blocks()
            )));
        }
        let n = problem.n();
        Ok(ParallelAdmmCdState {
            problem,
            rhos: params.block_rhos.clone(),
            u0: problem.y().clone(),
            w: vec![0.0; problem.p()],
            fit: Vector::zeros(n),
            fit_prev: Vector::zeros(n),
            k: 0,
        })
    }

    /// `u_0 ← (ρ u_0 + y − Xw^{(k−1)} + X(w^{(k−2)} − w^{(k−1)}))/(1+ρ)`, then
    /// `w_i ← ρ_i · argmin_v ½‖u_0 + X_i w_i/ρ_i − X_i v‖² + h_i(v)` for all blocks.
    pub fn sweep(&mut self, exec: Execution) -> Result<f64> {
        let rho: f64 = self.rhos.iter().sum();
        let y = self.problem.y();
        let denom = 1.0 + rho;
        for j in 0..self.u0.len() {
            self.u0[j] = rho * self.u0[j] / denom
                + (y[j] - self.fit[j]) / denom
                + (self.fit_prev[j] - self.fit[j]) / denom;
        }
        let w_new = scaled_block_sweep(self.problem, self.u0.as_slice(), &self.w, &self.rhos, exec)?;
        let change = numerics::sup_dist(&w_new, &self.w);
        let fit_new = ordered_fit(self.problem, &w_new);
        self.fit_prev = std::mem::replace(&mut self.fit, fit_new);
        self.w = w_new;
        self.k += 1;
        Ok(change)
    }

    pub fn criterion(&self) -> f64 {
        regression_criterion(self.problem, &self.w, &self.fit)
    }
}

fn run_regression<S>(
    name: &str,
    problem: &RegressionProblem,
    opts: &RunOptions,
    mut sweep: S,
) -> Result<(Vector, SolverTrace)>
where
    S: FnMut() -> Result<(f64, Vec<f64>, f64)>,
{
    opts.stop.validate()?;
    let d = problem.num_blocks();
    let mut rec = Recorder::new(name, opts);
    rec.trace.parallel_width = Some(d);
    let zero = vec![0.0; problem.p()];
    rec.record(0, problem.criterion(&zero)?, 0, 0, Some(&zero), None);
    let mut k = 0;
    loop {
        k += 1;
        let (change, w, crit) = sweep()?;
        rec.record(k, crit, nnz(&w), (d * k) as u64, Some(&w), None);
        let gap = opts.stop.tol_gap.map(|_| problem.duality_gap(&w)).transpose()?;
        if rec.should_stop(k, change, gap) {
            return Ok((Vector::from_vec(w), rec.finish()));
        }
    }
}

/// Parallel-Dykstra-CD with weights `γ`.
pub fn parallel_dykstra_cd(
    problem: &RegressionProblem,
    weights: &WeightVector,
    opts: &RunOptions,
) -> Result<(Vector, SolverTrace)> {
    let mut st = ParallelDykstraCdState::new(problem, weights)?;
    let exec = opts.execution;
    run_regression("pdcd", problem, opts, || {
        let change = st.sweep(exec)?;
        Ok((change, st.w.clone(), st.criterion()))
    })
}

/// Parallel-ADMM-CD with per-block parameters `ρ_i`.
pub fn parallel_admm_cd(
    problem: &RegressionProblem,
    params: &AdmmParams,
    opts: &RunOptions,
) -> Result<(Vector, SolverTrace)> {
    let mut st = ParallelAdmmCdState::new(problem, params)?;
    let exec = opts.execution;
    let (w, tr) = run_regression("padmm", problem, opts, || {
        let change = st.sweep(exec)?;
        Ok((change, st.w.clone(), st.criterion()))
    })?;
    Ok((w, tr.with_param("rho", params.total())))
}
