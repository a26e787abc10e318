//! Inertial multi-block ADMM. With the scalings below the sweeps approach
//! Dykstra's sweeps as `α → 0` (`Sip`) or `α → ∞` (`Bap`). These are
//! demonstration constructs for checking that limit, not practical solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ApproxProblem;
use crate::numerics::{self, Vector};
use crate::serial::{DykstraState, Recorder, RunOptions, SolverTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InertialMode {
    /// Set-intersection splitting: `ρ_0 = α^{d+1}`, `ρ_i = α^i`.
    Sip,
    /// Best-approximation splitting: `ρ_{−1} = α^{d+1}`, `ρ_0 = 1`, `ρ_i = α^{d+1−i}`.
    Bap,
}

/// Iterates `u_0..u_d` and duals `z_0..z_d`.
#[derive(Clone, Debug)]
pub struct InertialState<'a> {
    pub problem: &'a ApproxProblem,
    pub mode: InertialMode,
    pub alpha: f64,
    pub u: Vec<Vector>,
    pub z: Vec<Vector>,
    pub k: usize,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

/// Normalized convex weights from log-weights (avoids overflow in `α^{d+1}`).
fn normalized(logw: &[f64]) -> Vec<f64> {
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl<'a> InertialState<'a> {
    /// All `u_i = y`, all `z_i = 0`.
    pub fn new(problem: &'a ApproxProblem, mode: InertialMode, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let d = problem.sets.len();
        let n = problem.dim();
        Ok(InertialState {
            problem,
            mode,
            alpha,
            u: vec![problem.anchor.clone(); d + 1],
            z: vec![Vector::zeros(n); d + 1],
            k: 0,
        })
    }

    /// Matches a Dykstra state: every `u_i` is Dykstra's current point,
    /// `z_i` are Dykstra's corrections and `z_0 = 0`.
    pub fn from_dykstra(st: &DykstraState<'a>, mode: InertialMode, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let d = st.z.len();
        let mut z = Vec::with_capacity(d + 1);
        z.push(Vector::zeros(st.u.len()));
        z.extend(st.z.iter().cloned());
        Ok(InertialState {
            problem: st.problem,
            mode,
            alpha,
            u: vec![st.u.clone(); d + 1],
            z,
            k: st.k,
        })
    }

    /// `ρ_{i+1}/ρ_i` for `i = 1..d−1` and `ρ_0/ρ_d`; the same in both modes' scalings.
    fn ratio(&self) -> f64 {
        match self.mode {
            InertialMode::Sip => self.alpha,
            InertialMode::Bap => 1.0 / self.alpha,
        }
    }

    /// One ADMM sweep; `inspect(i, u_i, z_i)` sees each set's update (`i ≥ 1`)
    /// before the dual step, with the dual values after it.
    pub fn sweep(&mut self) -> Result<f64> {
        let d = self.problem.sets.len();
        let la = self.alpha.ln();
        let dp1 = (d + 1) as f64;
        let ud = self.u[d].clone();
        let start = ud.clone();
        let t_dz = &ud + &self.z[0];
        let t_1z = &self.u[1] - &self.z[1];
        let u0 = match self.mode {
            InertialMode::Sip => {
                let w = normalized(&[0.0, dp1 * la, la]);
                &ud * w[0] + t_dz * w[1] + t_1z * w[2]
            }
            InertialMode::Bap => {
                let w = normalized(&[0.0, dp1 * la, 0.0, d as f64 * la]);
                &self.problem.anchor * w[0] + &ud * w[1] + t_dz * w[2] + t_1z * w[3]
            }
        };
        let r = self.ratio();
        let mut new_u: Vec<Vector> = Vec::with_capacity(d + 1);
        new_u.push(u0);
        for i in 1..=d {
            let ahead = if i < d { &self.u[i + 1] - &self.z[i + 1] } else { &new_u[0] - &self.z[0] };
            let arg = (&new_u[i - 1] + &self.z[i]) / (1.0 + r) + ahead * (r / (1.0 + r));
            new_u.push(self.problem.sets[i - 1].project(arg.as_slice())?);
        }
        for i in 0..=d {
            let prev = if i == 0 { &new_u[d] } else { &new_u[i - 1] };
            self.z[i] += prev - &new_u[i];
        }
        self.u = new_u;
        self.k += 1;
        Ok(numerics::sup_dist(start.as_slice(), self.u[d].as_slice()))
    }
}

/// Runs inertial multi-block ADMM from `u_i = y`, `z_i = 0`; returns `u_0..u_d`.
pub fn inertial_multiblock_admm(
    problem: &ApproxProblem,
    mode: InertialMode,
    alpha: f64,
    opts: &RunOptions,
) -> Result<(Vec<Vector>, SolverTrace)> {
    opts.stop.validate()?;
    let mut st = InertialState::new(problem, mode, alpha)?;
    let d = problem.sets.len();
    let mut rec = Recorder::new(
        match mode {
            InertialMode::Sip => "inertial_sip",
            InertialMode::Bap => "inertial_bap",
        },
        opts,
    );
    rec.record(0, 0.0, 0, 0, None, Some(problem.anchor.as_slice()));
    loop {
        let change = st.sweep()?;
        let k = st.k;
        let crit = 0.5 * (&problem.anchor - &st.u[d]).norm_squared();
        rec.record(k, crit, 0, (d * k) as u64, None, Some(st.u[d].as_slice()));
        if rec.should_stop(k, change, None) {
            let tr = rec.finish().with_param("alpha", alpha);
            return Ok((st.u, tr));
        }
    }
}

/// Sup-norm deviation between one inertial sweep and one Dykstra sweep taken
/// from the same state, over all `u_i` and `z_i`, `i = 1..d`.
pub fn one_sweep_deviation(st: &DykstraState<'_>, mode: InertialMode, alpha: f64) -> Result<f64> {
    let mut admm = InertialState::from_dykstra(st, mode, alpha)?;
    let mut dy = st.clone();
    let mut us = Vec::new();
    dy.sweep_with(|_, u, _| us.push(u.clone()))?;
    admm.sweep()?;
    let mut dev = 0.0f64;
    for i in 1..admm.u.len() {
        dev = dev
            .max(numerics::sup_dist(admm.u[i].as_slice(), us[i - 1].as_slice()))
            .max(numerics::sup_dist(admm.z[i].as_slice(), dy.z[i - 1].as_slice()));
    }
    Ok(dev)
}
