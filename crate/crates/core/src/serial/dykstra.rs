use crate::error::{Error, Result};
use crate::geometry::{ApproxProblem, ConvexSet};
use crate::numerics::{self, Vector};

use super::trace::{Recorder, RunOptions, SolverTrace};

/// Cyclic Dykstra state: current point `u` (initially the anchor) and one
/// correction vector `z_i` per set (initially zero).
#[derive(Clone, Debug)]
pub struct DykstraState<'a> {
    pub problem: &'a ApproxProblem,
    pub u: Vector,
    pub z: Vec<Vector>,
    pub k: usize,
}

impl<'a> DykstraState<'a> {
    pub fn new(problem: &'a ApproxProblem) -> Self {
        let n = problem.dim();
        DykstraState {
            problem,
            u: problem.anchor.clone(),
            z: vec![Vector::zeros(n); problem.sets.len()],
            k: 0,
        }
    }

    /// One sweep over all sets:
    /// `x = u_{i−1} + z_i`, `u_i = P_i(x)`, `z_i = x − u_i`.
    ///
    /// `inspect(i, u_i, z_i)` sees every inner step. Returns the sup-norm
    /// change of the whole state: `u` can sit still on a corner for several
    /// sweeps while the increments move.
    pub fn sweep_with<F>(&mut self, mut inspect: F) -> Result<f64>
    where
        F: FnMut(usize, &Vector, &Vector),
    {
        let start = self.u.clone();
        let mut change = 0.0f64;
        for (i, set) in self.problem.sets.iter().enumerate() {
            let x = &self.u + &self.z[i];
            let u_new = set.project(x.as_slice())?;
            let z_new = x - &u_new;
            change = change.max(numerics::sup_dist(self.z[i].as_slice(), z_new.as_slice()));
            self.z[i] = z_new;
            self.u = u_new;
            inspect(i, &self.u, &self.z[i]);
        }
        self.k += 1;
        Ok(change.max(numerics::sup_dist(start.as_slice(), self.u.as_slice())))
    }

    pub fn sweep(&mut self) -> Result<f64> {
        self.sweep_with(|_, _, _| {})
    }

    pub fn objective(&self) -> f64 {
        0.5 * (&self.problem.anchor - &self.u).norm_squared()
    }

    pub fn active_count(&self) -> usize {
        self.z.iter().filter(|z| z.iter().any(|&v| v != 0.0)).count()
    }
}

fn run_projection<S>(
    name: &str,
    problem: &ApproxProblem,
    opts: &RunOptions,
    mut step: S,
) -> Result<(Vector, SolverTrace)>
where
    S: FnMut() -> Result<(f64, Vector, usize)>,
{
    opts.stop.validate()?;
    let d = problem.sets.len() as u64;
    let mut rec = Recorder::new(name, opts);
    rec.record(0, 0.0, 0, 0, None, Some(problem.anchor.as_slice()));
    let mut k = 0;
    loop {
        k += 1;
        let (change, u, active) = step()?;
        let crit = 0.5 * (&problem.anchor - &u).norm_squared();
        rec.record(k, crit, active, d * k as u64, None, Some(u.as_slice()));
        if rec.should_stop(k, change, None) {
            return Ok((u, rec.finish()));
        }
    }
}

/// Dykstra's algorithm for the projection of the anchor onto `∩ C_i`.
pub fn dykstra(problem: &ApproxProblem, opts: &RunOptions) -> Result<(Vector, SolverTrace)> {
    let mut st = DykstraState::new(problem);
    run_projection("dykstra", problem, opts, || {
        let change = st.sweep()?;
        Ok((change, st.u.clone(), st.active_count()))
    })
}

/// Plain cyclic projections `u ← P_i(u)` (no corrections).
pub fn alternating_projections(problem: &ApproxProblem, opts: &RunOptions) -> Result<(Vector, SolverTrace)> {
    let mut u = problem.anchor.clone();
    let sets = &problem.sets;
    run_projection("alternating_projections", problem, opts, || {
        let start = u.clone();
        for s in sets {
            u = s.project(u.as_slice())?;
        }
        let change = numerics::sup_dist(start.as_slice(), u.as_slice());
        Ok((change, u.clone(), 0))
    })
}

/// Hildreth state: one nonnegative multiplier `θ_j` per halfspace, `z_j = θ_j a_j`.
#[derive(Clone, Debug)]
pub struct HildrethState<'a> {
    normals: Vec<(&'a Vector, f64, f64)>,
    pub u: Vector,
    pub theta: Vec<f64>,
    pub k: usize,
}

impl<'a> HildrethState<'a> {
    pub fn new(halfspaces: &'a [ConvexSet], y: &Vector) -> Result<Self> {
        let mut normals = Vec::with_capacity(halfspaces.len());
        for (j, s) in halfspaces.iter().enumerate() {
            match s {
                ConvexSet::Halfspace { a, b } => {
                    if a.len() != y.len() {
                        return Err(Error::shape(format!("halfspace {j} has the wrong dimension")));
                    }
                    normals.push((a, *b, a.norm_squared()))
                }
                _ => return Err(Error::Type(format!("set {j} is not a halfspace"))),
            }
        }
        let m = normals.len();
        Ok(HildrethState { normals, u: y.clone(), theta: vec![0.0; m], k: 0 })
    }

    /// `θ_j ← max(0, θ_j + (<a_j, u> − b_j)/‖a_j‖²)`, `u ← u + (θ_j^old − θ_j) a_j`.
    pub fn sweep_with<F>(&mut self, mut inspect: F) -> f64
    where
        F: FnMut(usize, &Vector, f64),
    {
        let start = self.u.clone();
        for (j, &(a, b, sq)) in self.normals.iter().enumerate() {
            let old = self.theta[j];
            let new = (old + (a.dot(&self.u) - b) / sq).max(0.0);
            if new != old {
                numerics::axpy(old - new, a.as_slice(), self.u.as_mut_slice());
            }
            self.theta[j] = new;
            inspect(j, &self.u, new);
        }
        self.k += 1;
        numerics::sup_dist(start.as_slice(), self.u.as_slice())
    }
}

/// Hildreth's method: Dykstra specialized to halfspaces with scalar multipliers.
///
/// Returns the point, the multipliers and the trace.
pub fn hildreth(
    halfspaces: &[ConvexSet],
    y: &Vector,
    opts: &RunOptions,
) -> Result<(Vector, Vec<f64>, SolverTrace)> {
    opts.stop.validate()?;
    let mut st = HildrethState::new(halfspaces, y)?;
    let m = halfspaces.len() as u64;
    let mut rec = Recorder::new("hildreth", opts);
    rec.record(0, 0.0, 0, 0, None, Some(y.as_slice()));
    loop {
        let change = st.sweep_with(|_, _, _| {});
        let k = st.k;
        let crit = 0.5 * (y - &st.u).norm_squared();
        let active = st.theta.iter().filter(|&&t| t > 0.0).count();
        rec.record(k, crit, active, m * k as u64, None, Some(st.u.as_slice()));
        if rec.should_stop(k, change, None) {
            return Ok((st.u, st.theta, rec.finish()));
        }
    }
}
