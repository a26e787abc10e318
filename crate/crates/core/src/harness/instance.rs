use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RegressionProblem;
use crate::io_fmt;
use crate::numerics::{Matrix, Vector};

/// Name of the random stream recorded in output headers.
pub const GENERATOR: &str = "ChaCha8Rng(seed_from_u64(seed), stream = trial) + StandardNormal";

/// Sparse Gaussian linear model: rows of `X` are `N(0, I_p)`, `β₀` has `s`
/// leading ones and `y ~ N(Xβ₀, noise_sd²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub noise_sd: f64,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub lambda: f64,
    pub seed: u64,
    pub trials: usize,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec { n: 100, p: 500, s: 20, noise_sd: 1.0, lambda: 5.0, seed: 0, trials: 30 }
    }
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::Parameter("n and p must be positive".into()));
        }
        if self.s > self.p {
            return Err(Error::Parameter(format!("sparsity {} exceeds p = {}", self.s, self.p)));
        }
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Parameter("noise_sd must be finite and nonnegative".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Parameter("lambda must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// The random stream for `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `n × p` standard Gaussian matrix, drawn row by row.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, p: usize) -> Matrix {
    let rows: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_slice(n, p, &rows)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Design and response of trial `trial`.
pub fn gen_data(spec: &InstanceSpec, trial: usize) -> Result<(Matrix, Vector)> {
    spec.validate()?;
    let mut rng = trial_rng(spec.seed, trial as u64);
    let x = gaussian_matrix(&mut rng, spec.n, spec.p);
    let mut y = Vector::zeros(spec.n);
    for j in 0..spec.s {
        y += x.column(j);
    }
    let noise = gaussian_vector(&mut rng, spec.n);
    y.axpy(spec.noise_sd, &noise, 1.0);
    Ok((x, y))
}

/// Lasso instance of trial `trial`: single-column blocks with `L1(λ)`.
pub fn gen_instance(spec: &InstanceSpec, trial: usize) -> Result<RegressionProblem> {
    let (x, y) = gen_data(spec, trial)?;
    RegressionProblem::lasso(x, y, spec.lambda)
}

/// 0/1 labels `1{x_iᵀβ₀ + noise > 0}` on the design of trial `trial`.
pub fn gen_labels(spec: &InstanceSpec, trial: usize) -> Result<Vector> {
    let (_, y) = gen_data(spec, trial)?;
    Ok(y.map(|v| if v > 0.0 { 1.0 } else { 0.0 }))
}
