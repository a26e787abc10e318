//! Parallel Dykstra-CD and ADMM-CD for smooth losses, with uniform weights.

use crate::error::{Error, Result};
use crate::exec::{try_map_blocks, Execution};
use crate::geometry::RegressionProblem;
use crate::numerics::{self, Vector};
use crate::parallel::{ordered_fit, scaled_block_sweep};
use crate::serial::{Recorder, RunOptions, SolverTrace};

use super::cd::{check_loss, nnz};
use super::loss::SmoothLoss;
use super::solve::minimize_block;

/// Acceptance threshold for the coordinatewise consensus fixed point.
pub const CONSENSUS_TOL: f64 = 1e-12;
const MAX_EXPANSIONS: usize = 200;
const MAX_BISECTIONS: usize = 400;

/// Solves `u = −f'_j(ρ(u − u_prev) − s)` for coordinate `j` by bisection on the
/// increasing function `u + f'_j(ρ(u − u_prev) − s)`.
pub fn consensus_coordinate(loss: &SmoothLoss, j: usize, rho: f64, u_prev: f64, s: f64) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
    }
    if let SmoothLoss::Quadratic { y } = loss {
        return Ok((y[j] + rho * u_prev + s) / (1.0 + rho));
    }
    let phi = |u: f64| u + loss.grad_j(j, rho * (u - u_prev) - s);
    let mut lo = u_prev - 1.0;
    let mut hi = u_prev + 1.0;
    let mut width = 1.0;
    let mut n = 0;
    while phi(lo) > 0.0 || phi(hi) < 0.0 {
        n += 1;
        if n > MAX_EXPANSIONS {
            return Err(Error::convergence(
                format!("consensus bisection bracket at coordinate {j} (u_prev {u_prev:e}, s {s:e})"),
                phi(lo).abs().min(phi(hi).abs()),
                n,
            ));
        }
        width *= 2.0;
        if phi(lo) > 0.0 {
            lo -= width;
        }
        if phi(hi) < 0.0 {
            hi += width;
        }
    }
    let mut best = (f64::INFINITY, lo);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f = phi(mid);
        if f.abs() < best.0 {
            best = (f.abs(), mid);
        }
        if f.abs() <= CONSENSUS_TOL || mid <= lo || mid >= hi {
            break;
        }
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if best.0 > CONSENSUS_TOL {
        return Err(Error::convergence(format!("consensus bisection at coordinate {j}"), best.0, MAX_BISECTIONS));
    }
    Ok(best.1)
}

/// Parallel-Dykstra-CD for a smooth loss with weights `1/d`.
#[derive(Clone, Debug)]
pub struct GeneralPdcdState<'a> {
    pub loss: &'a SmoothLoss,
    pub problem: &'a RegressionProblem,
    pub w: Vec<f64>,
    pub fit: Vector,
    pub k: usize,
}

impl<'a> GeneralPdcdState<'a> {
    pub fn new(loss: &'a SmoothLoss, problem: &'a RegressionProblem) -> Result<Self> {
        check_loss(loss, problem)?;
        Ok(GeneralPdcdState { loss, problem, w: vec![0.0; problem.p()], fit: Vector::zeros(problem.n()), k: 0 })
    }

    /// `w_i ← v_i/d` with `v_i = argmin_v f(Xw − d X_i w_i + X_i v) + h_i(v)`, all from one snapshot.
    pub fn sweep(&mut self, exec: Execution) -> Result<f64> {
        let d = self.problem.num_blocks() as f64;
        let (loss, pr, w, fit) = (self.loss, self.problem, &self.w, &self.fit);
        let parts = try_map_blocks(pr.num_blocks(), exec, |i| {
            let blk = &pr.blocks()[i];
            let wi = &w[pr.range(i)];
            let mut a = fit.as_slice().to_vec();
            blk.apply_add(-d, wi, &mut a);
            let warm: Vec<f64> = wi.iter().map(|v| v * d).collect();
            let v = minimize_block(loss, blk, &a, Some(&warm))?;
            Ok::<_, Error>(v.iter().map(|x| x / d).collect::<Vec<f64>>())
        })?;
        let w_new = parts.concat();
        let change = numerics::sup_dist(&w_new, &self.w);
        self.fit = ordered_fit(self.problem, &w_new);
        self.w = w_new;
        self.k += 1;
        Ok(change)
    }

    pub fn criterion(&self) -> f64 {
        self.loss.value(self.fit.as_slice()) + self.problem.penalty_value(&self.w)
    }
}

/// Parallel-ADMM-CD for a smooth loss with total parameter `ρ` split evenly.
///
/// Starts from `u_0 = b = −∇f(0)` so that the quadratic case coincides with
/// the quadratic-loss algorithm started at `u_0 = y`.
#[derive(Clone, Debug)]
pub struct GeneralPadmmState<'a> {
    pub loss: &'a SmoothLoss,
    pub problem: &'a RegressionProblem,
    pub rho: f64,
    pub u0: Vector,
    pub w: Vec<f64>,
    pub fit: Vector,
    pub fit_prev: Vector,
    pub k: usize,
}

impl<'a> GeneralPadmmState<'a> {
    pub fn new(loss: &'a SmoothLoss, problem: &'a RegressionProblem, rho: f64) -> Result<Self> {
        check_loss(loss, problem)?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
        }
        let n = problem.n();
        Ok(GeneralPadmmState {
            loss,
            problem,
            rho,
            u0: loss.anchor(),
            w: vec![0.0; problem.p()],
            fit: Vector::zeros(n),
            fit_prev: Vector::zeros(n),
            k: 0,
        })
    }

    /// Consensus step `u_0 = −∇f(ρ(u_0 − u_0^{prev}) − X(w^{(k−2)} − 2w^{(k−1)}))` by
    /// coordinatewise bisection, then `w_i ← (ρ/d)·argmin_v ½‖u_0 + (d/ρ)X_i w_i − X_i v‖² + h_i(v)`.
    pub fn sweep(&mut self, exec: Execution) -> Result<f64> {
        let d = self.problem.num_blocks();
        for j in 0..self.u0.len() {
            let s = self.fit_prev[j] - 2.0 * self.fit[j];
            self.u0[j] = consensus_coordinate(self.loss, j, self.rho, self.u0[j], s)?;
        }
        let scales = vec![self.rho / d as f64; d];
        let w_new = scaled_block_sweep(self.problem, self.u0.as_slice(), &self.w, &scales, exec)?;
        let change = numerics::sup_dist(&w_new, &self.w);
        let fit_new = ordered_fit(self.problem, &w_new);
        self.fit_prev = std::mem::replace(&mut self.fit, fit_new);
        self.w = w_new;
        self.k += 1;
        Ok(change)
    }

    pub fn criterion(&self) -> f64 {
        self.loss.value(self.fit.as_slice()) + self.problem.penalty_value(&self.w)
    }
}

fn run<S>(name: &str, problem: &RegressionProblem, loss: &SmoothLoss, opts: &RunOptions, mut sweep: S) -> Result<(Vector, SolverTrace)>
where
    S: FnMut() -> Result<(f64, Vec<f64>, f64)>,
{
    opts.stop.validate()?;
    let d = problem.num_blocks();
    let mut rec = Recorder::new(name, opts);
    rec.trace.parallel_width = Some(d);
    let zero = vec![0.0; problem.p()];
    rec.record(0, loss.value(&vec![0.0; problem.n()]), 0, 0, Some(&zero), None);
    let mut k = 0;
    loop {
        k += 1;
        let (change, w, crit) = sweep()?;
        rec.record(k, crit, nnz(&w), (d * k) as u64, Some(&w), None);
        if rec.should_stop(k, change, None) {
            return Ok((Vector::from_vec(w), rec.finish()));
        }
    }
}

pub fn parallel_dykstra_cd_general(
    loss: &SmoothLoss,
    problem: &RegressionProblem,
    opts: &RunOptions,
) -> Result<(Vector, SolverTrace)> {
    let mut st = GeneralPdcdState::new(loss, problem)?;
    let exec = opts.execution;
    run("pdcd_general", problem, loss, opts, || {
        let change = st.sweep(exec)?;
        Ok((change, st.w.clone(), st.criterion()))
    })
}

pub fn parallel_admm_cd_general(
    loss: &SmoothLoss,
    problem: &RegressionProblem,
    rho: f64,
    opts: &RunOptions,
) -> Result<(Vector, SolverTrace)> {
    let mut st = GeneralPadmmState::new(loss, problem, rho)?;
    let exec = opts.execution;
    let (w, tr) = run("padmm_general", problem, loss, opts, || {
        let change = st.sweep(exec)?;
        Ok((change, st.w.clone(), st.criterion()))
    })?;
    Ok((w, tr.with_param("rho", rho)))
}
