use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::numerics::{self, Vector};
use crate::serial::{Recorder, RunOptions, SolverTrace};

/// Initial `u_2` for two-set ADMM (`z` always starts at zero).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AdmmStart {
    /// `u_2 = y`. With `C_1` a subspace containing `y` and `ρ = 1` the iterates
    /// then coincide with Dykstra's.
    #[default]
    Anchor,
    /// `u_2 = 0`.
    Zero,
}

#[derive(Clone, Debug)]
pub struct AdmmTwoSetState<'a> {
    pub y: &'a Vector,
    pub c1: &'a ConvexSet,
    pub c2: &'a ConvexSet,
    pub rho: f64,
    pub u1: Vector,
    pub u2: Vector,
    pub z: Vector,
    pub k: usize,
}

impl<'a> AdmmTwoSetState<'a> {
    pub fn new(
        y: &'a Vector,
        c1: &'a ConvexSet,
        c2: &'a ConvexSet,
        rho: f64,
        start: AdmmStart,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
        }
        if c1.dim() != y.len() || c2.dim() != y.len() {
            return Err(Error::shape("sets and anchor differ in dimension"));
        }
        let n = y.len();
        let u2 = match start {
            AdmmStart::Anchor => y.clone(),
            AdmmStart::Zero => Vector::zeros(n),
        };
        Ok(AdmmTwoSetState { y, c1, c2, rho, u1: y.clone(), u2, z: Vector::zeros(n), k: 0 })
    }

    /// `u_1 = P_1(y/(1+ρ) + ρ(u_2 − z)/(1+ρ))`, `u_2 = P_2(u_1 + z)`, `z += u_1 − u_2`.
    pub fn step(&mut self) -> Result<f64> {
        let rho = self.rho;
        let arg = self.y / (1.0 + rho) + (&self.u2 - &self.z) * (rho / (1.0 + rho));
        let u1 = self.c1.project(arg.as_slice())?;
        let u2 = self.c2.project((&u1 + &self.z).as_slice())?;
        self.z += &u1 - &u2;
        let change = numerics::sup_dist(u2.as_slice(), self.u2.as_slice());
        self.u1 = u1;
        self.u2 = u2;
        self.k += 1;
        Ok(change)
    }
}

/// Two-set ADMM for projecting `y` onto `C_1 ∩ C_2`. Returns `(u_1, u_2, z, trace)`.
pub fn admm_two_set(
    y: &Vector,
    c1: &ConvexSet,
    c2: &ConvexSet,
    rho: f64,
    start: AdmmStart,
    opts: &RunOptions,
) -> Result<(Vector, Vector, Vector, SolverTrace)> {
    opts.stop.validate()?;
    let mut st = AdmmTwoSetState::new(y, c1, c2, rho, start)?;
    let mut rec = Recorder::new("admm2", opts);
    rec.record(0, 0.5 * (y - &st.u2).norm_squared(), 0, 0, None, Some(st.u2.as_slice()));
    loop {
        let change = st.step()?;
        let k = st.k;
        let crit = 0.5 * (y - &st.u2).norm_squared();
        rec.record(k, crit, 0, 2 * k as u64, None, Some(st.u2.as_slice()));
        if rec.should_stop(k, change, None) {
            let tr = rec.finish().with_param("rho", rho);
            return Ok((st.u1, st.u2, st.z, tr));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use crate::serial::StopRule;

    #[test]
    fn same_subspace_fixed_point() {
        let basis = Matrix::from_column_slice(3, 1, &[1.0, 2.0, 0.0]);
        let c = ConvexSet::affine(&basis, Vector::zeros(3)).unwrap();
        let y = Vector::from_vec(vec![0.5, 1.0, 0.0]);
        let (u1, u2, _, _) =
            admm_two_set(&y, &c, &c, 1.0, AdmmStart::Anchor, &RunOptions::new(StopRule::sweeps(20))).unwrap();
        assert!((u1 - &y).amax() < 1e-15 && (u2 - &y).amax() < 1e-15);
    }
}
