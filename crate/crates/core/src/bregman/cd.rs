use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, RegressionProblem};
use crate::numerics::{self, Vector};
use crate::serial::{Recorder, RunOptions, SolverTrace, StopRule};

use super::loss::{bregman_divergence, SmoothLoss};
use super::project::project_theta;
use super::solve::minimize_block;

pub(crate) fn check_loss(loss: &SmoothLoss, problem: &RegressionProblem) -> Result<()> {
    if loss.dim() != problem.n() {
        return Err(Error::shape(format!("loss has dimension {} but the design has {} rows", loss.dim(), problem.n())));
    }
    Ok(())
}

pub(crate) fn nnz(w: &[f64]) -> usize {
    w.iter().filter(|&&v| v != 0.0).count()
}

/// Cyclic blockwise minimization of `f(Xw) + Σ h_i(w_i)`; keeps the fit `Xw`.
#[derive(Clone, Debug)]
pub struct GeneralCdState<'a> {
    pub loss: &'a SmoothLoss,
    pub problem: &'a RegressionProblem,
    pub w: Vec<f64>,
    pub fit: Vector,
    pub k: usize,
}

impl<'a> GeneralCdState<'a> {
    pub fn new(loss: &'a SmoothLoss, problem: &'a RegressionProblem, w0: Option<&[f64]>) -> Result<Self> {
        check_loss(loss, problem)?;
        let w = match w0 {
            Some(w0) => w0.to_vec(),
            None => vec![0.0; problem.p()],
        };
        let fit = problem.fitted(&w)?;
        Ok(GeneralCdState { loss, problem, w, fit, k: 0 })
    }

    /// One ascending sweep; `inspect(i, w_i, fit)` runs after each block with the partial-sweep fit.
    pub fn sweep_with<F>(&mut self, mut inspect: F) -> Result<f64>
    where
        F: FnMut(usize, &[f64], &Vector),
    {
        let mut change = 0.0f64;
        for (i, blk) in self.problem.blocks().iter().enumerate() {
            let rg = self.problem.range(i);
            let old = &self.w[rg.clone()];
            let mut a = self.fit.clone();
            blk.apply_add(-1.0, old, a.as_mut_slice());
            let new = minimize_block(self.loss, blk, a.as_slice(), Some(old))?;
            change = change.max(numerics::sup_dist(old, new.as_slice()));
            blk.apply_add(1.0, new.as_slice(), a.as_mut_slice());
            self.fit = a;
            self.w[rg.clone()].copy_from_slice(new.as_slice());
            inspect(i, &self.w[rg], &self.fit);
        }
        self.k += 1;
        Ok(change)
    }

    pub fn sweep(&mut self) -> Result<f64> {
        self.sweep_with(|_, _, _| {})
    }

    pub fn criterion(&self) -> f64 {
        self.loss.value(self.fit.as_slice()) + self.problem.penalty_value(&self.w)
    }
}

/// Regression objective `f(Xw) + Σ h_i(w_i)`.
pub fn general_criterion(loss: &SmoothLoss, problem: &RegressionProblem, w: &[f64]) -> Result<f64> {
    check_loss(loss, problem)?;
    let fit = problem.fitted(w)?;
    Ok(loss.value(fit.as_slice()) + problem.penalty_value(w))
}

/// Blockwise coordinate descent for a smooth loss, from `w0` (zero by default).
pub fn general_cd(
    loss: &SmoothLoss,
    problem: &RegressionProblem,
    opts: &RunOptions,
    w0: Option<&[f64]>,
) -> Result<(Vector, SolverTrace)> {
    opts.stop.validate()?;
    let mut st = GeneralCdState::new(loss, problem, w0)?;
    let d = problem.num_blocks() as u64;
    let mut rec = Recorder::new("general_cd", opts);
    rec.record(0, st.criterion(), nnz(&st.w), 0, Some(&st.w), None);
    loop {
        let change = st.sweep()?;
        let k = st.k;
        rec.record(k, st.criterion(), nnz(&st.w), d * k as u64, Some(&st.w), None);
        if rec.should_stop(k, change, None) {
            return Ok((Vector::from_vec(st.w), rec.finish()));
        }
    }
}

/// Bregman Dykstra state with anchor `b = −∇f(0)`. Corrections live in the
/// dual coordinates: `θ = ∇g(u) + z_i`, `u ← P^g_i(∇g*(θ))`, `z_i = θ − ∇g(u)`.
#[derive(Clone, Debug)]
pub struct GeneralDykstraState<'a> {
    pub loss: &'a SmoothLoss,
    pub sets: &'a [ConvexSet],
    pub u: Vector,
    /// `∇g(u)`
    pub theta: Vector,
    pub z: Vec<Vector>,
    pub k: usize,
}

impl<'a> GeneralDykstraState<'a> {
    pub fn new(loss: &'a SmoothLoss, sets: &'a [ConvexSet]) -> Result<Self> {
        let n = loss.dim();
        if sets.is_empty() {
            return Err(Error::Parameter("no sets given".into()));
        }
        if let Some(s) = sets.iter().find(|s| s.dim() != n) {
            return Err(Error::shape(format!("set of dimension {} for a loss of dimension {n}", s.dim())));
        }
        let u = loss.anchor();
        if !loss.in_domain(u.as_slice()) {
            return Err(Error::Domain("anchor is outside the domain of the potential".into()));
        }
        let (theta, _) = loss.grad_g(u.as_slice());
        Ok(GeneralDykstraState { loss, sets, u, theta, z: vec![Vector::zeros(n); sets.len()], k: 0 })
    }

    /// One sweep; `inspect(i, u_i, z_i)` sees every inner step.
    pub fn sweep_with<F>(&mut self, mut inspect: F) -> Result<f64>
    where
        F: FnMut(usize, &Vector, &Vector),
    {
        let start = self.u.clone();
        for (i, set) in self.sets.iter().enumerate() {
            if self.loss.is_quadratic() {
                // exactly the Euclidean recursion
                let x = &self.u + &self.z[i];
                let u_new = set.project(x.as_slice())?;
                self.z[i] = x - &u_new;
                self.u = u_new;
            } else {
                let th = &self.theta + &self.z[i];
                let (u_new, th_new) = project_theta(self.loss, set, th.clone())?;
                self.z[i] = th - &th_new;
                self.u = u_new;
                self.theta = th_new;
            }
            inspect(i, &self.u, &self.z[i]);
        }
        self.k += 1;
        Ok(numerics::sup_dist(start.as_slice(), self.u.as_slice()))
    }

    pub fn sweep(&mut self) -> Result<f64> {
        self.sweep_with(|_, _, _| {})
    }

    /// `D_g(u, b)`
    pub fn objective(&self) -> Result<f64> {
        bregman_divergence(self.loss, self.u.as_slice(), self.loss.anchor().as_slice())
    }
}

/// Bregman Dykstra from `b = −∇f(0)` over `sets`.
pub fn general_dykstra(loss: &SmoothLoss, sets: &[ConvexSet], opts: &RunOptions) -> Result<(Vector, SolverTrace)> {
    opts.stop.validate()?;
    let mut st = GeneralDykstraState::new(loss, sets)?;
    let d = sets.len() as u64;
    let mut rec = Recorder::new("general_dykstra", opts);
    rec.record(0, 0.0, 0, 0, None, Some(st.u.as_slice()));
    loop {
        let change = st.sweep()?;
        let k = st.k;
        let active = st.z.iter().filter(|z| z.iter().any(|&v| v != 0.0)).count();
        rec.record(k, st.objective()?, active, d * k as u64, None, Some(st.u.as_slice()));
        if rec.should_stop(k, change, None) {
            return Ok((st.u, rec.finish()));
        }
    }
}

/// Runs Bregman Dykstra on the dual sets and general CD in lockstep. Returns the
/// largest deviation of `z_i` from `X_i w_i` and of `u_i` from `−∇f(partial fit)`.
pub fn theorem6_check(loss: &SmoothLoss, problem: &RegressionProblem, stop: &StopRule) -> Result<f64> {
    stop.validate()?;
    check_loss(loss, problem)?;
    let sets = problem.dual_problem().sets;
    let mut dy = GeneralDykstraState::new(loss, &sets)?;
    let mut cd = GeneralCdState::new(loss, problem, None)?;
    let mut dev = 0.0f64;
    let mut want_u = Vec::new();
    let mut want_z = Vec::new();
    for _ in 0..stop.max_sweeps {
        want_u.clear();
        want_z.clear();
        let change = cd.sweep_with(|i, wi, fit| {
            want_u.push(-loss.gradient(fit.as_slice()));
            want_z.push(problem.blocks()[i].apply(wi));
        })?;
        dy.sweep_with(|i, u, z| {
            dev = dev
                .max(numerics::sup_dist(u.as_slice(), want_u[i].as_slice()))
                .max(numerics::sup_dist(z.as_slice(), want_z[i].as_slice()));
        })?;
        if change <= stop.tol_change {
            break;
        }
    }
    Ok(dev)
}
