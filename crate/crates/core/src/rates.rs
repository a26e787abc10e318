//! Linear-rate constants for cyclic and parallel CD on the lasso, the
//! Hoffman-type `μ` lower bound, and measured contraction factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_fmt;
use crate::numerics::{self, Matrix, Vector, RANK_TOL};
use crate::parallel::WeightVector;
use crate::serial::SolverTrace;

/// Default magnitude below which a coefficient counts as zero.
pub const ACTIVE_TOL: f64 = 1e-9;
/// Ratios whose denominator falls below this are omitted.
pub const RATIO_FLOOR: f64 = 1e-14;

/// Indices with `|w_i| > tol`, ascending.
pub fn active_set(w: &[f64], tol: f64) -> Vec<usize> {
    w.iter().enumerate().filter(|(_, v)| v.abs() > tol).map(|(i, _)| i).collect()
}

fn columns(x: &Matrix, a: &[usize]) -> Result<Matrix> {
    if let Some(&j) = a.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::shape(format!("column index {j} out of range for {} columns", x.ncols())));
    }
    if a.is_empty() {
        return Err(Error::Parameter("active set is empty".into()));
    }
    Ok(x.select_columns(a))
}

/// `λ_min(X_Aᵀ X_A) / max_{i∈A} ‖X_i‖²`, after a full-rank check.
fn conditioning(x: &Matrix, a: &[usize]) -> Result<f64> {
    let xa = columns(x, a)?;
    let s = numerics::singular_values(&xa);
    let smax = s[0];
    let smin = s[s.len() - 1];
    if a.len() > x.nrows() || smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(Error::Rank(format!(
            "active columns are not in general position (sigma_min {smin:e}, sigma_max {smax:e})"
        )));
    }
    let lmin = numerics::min_eigenvalue(&xa.tr_mul(&xa))?;
    let maxnorm = (0..xa.ncols()).map(|j| xa.column(j).norm_squared()).fold(0.0, f64::max);
    Ok(lmin / maxnorm)
}

/// Cyclic-CD asymptotic rate `(a² / (a² + λ_min/max‖X_i‖²))^{1/2}`.
pub fn bound_iusem(x: &Matrix, a: &[usize]) -> Result<f64> {
    let c = conditioning(x, a)?;
    let a2 = (a.len() * a.len()) as f64;
    Ok((a2 / (a2 + c)).sqrt())
}

/// Cyclic-CD rate from successive orthocomplement projections over the
/// ascending enumeration of `A`.
pub fn bound_deutsch(x: &Matrix, a: &[usize]) -> Result<f64> {
    conditioning(x, a)?;
    let mut prod = 1.0;
    for j in 0..a.len().saturating_sub(1) {
        let xi = Vector::from_column_slice(numerics::col(x, a[j]));
        let rest = x.select_columns(&a[j + 1..]);
        let perp = numerics::orthocomplement_projection(&rest, &xi)?;
        prod *= perp.norm_squared() / xi.norm_squared();
    }
    Ok((1.0 - prod).max(0.0).sqrt())
}

/// Parallel-CD rate `((2a/γ_min) / (2a/γ_min + λ_min/max‖X_i‖²))^{1/2}`.
pub fn bound_parallel(x: &Matrix, a: &[usize], weights: &WeightVector) -> Result<f64> {
    let c = conditioning(x, a)?;
    let t = 2.0 * a.len() as f64 / weights.min();
    Ok((t / (t + c)).sqrt())
}

/// `σ_min(M) / (√s · max ‖h_i‖)` for the `s` normals `h_i` stacked as columns of `M`.
pub fn mu_lower_bound(normals: &[Vector]) -> Result<f64> {
    if normals.is_empty() {
        return Err(Error::Degenerate("no normals given".into()));
    }
    let n = normals[0].len();
    if normals.iter().any(|h| h.len() != n) {
        return Err(Error::shape("normals have different lengths"));
    }
    let maxnorm = normals.iter().map(|h| h.norm()).fold(0.0, f64::max);
    if normals.iter().any(|h| h.norm() == 0.0) {
        return Err(Error::Degenerate("zero normal".into()));
    }
    let m = Matrix::from_fn(n, normals.len(), |r, c| normals[c][r]);
    let s = numerics::singular_values(&m);
    let smin = if normals.len() > n { 0.0 } else { s[s.len() - 1] };
    Ok(smin / ((normals.len() as f64).sqrt() * maxnorm))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    /// Ratio between sweeps `k + 1` and `k`.
    pub k: usize,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub ratio: f64,
}

/// Measured contraction in `‖v‖_Σ = ‖Xv‖₂` plus support identification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRate {
    pub support_id_iter: Option<usize>,
    pub ratios: Vec<RatioPoint>,
}

fn sign_pattern(w: &[f64], tol: f64) -> Vec<i8> {
    w.iter().map(|&v| if v > tol { 1 } else if v < -tol { -1 } else { 0 }).collect()
}

pub fn empirical_rate(trace: &SolverTrace, x: &Matrix, w_star: &[f64]) -> Result<EmpiricalRate> {
    empirical_rate_tol(trace, x, w_star, ACTIVE_TOL)
}

/// As [`empirical_rate`] with an explicit sign-pattern tolerance.
pub fn empirical_rate_tol(trace: &SolverTrace, x: &Matrix, w_star: &[f64], tol: f64) -> Result<EmpiricalRate> {
    if w_star.len() != x.ncols() {
        return Err(Error::shape("reference solution length differs from the column count"));
    }
    let snaps = trace.w_snapshots()?;
    let target = sign_pattern(w_star, tol);
    let ws = Vector::from_column_slice(w_star);
    let mut support_id_iter = None;
    let mut errs = Vec::with_capacity(snaps.len());
    for (k, w) in &snaps {
        if w.len() != x.ncols() {
            return Err(Error::shape("snapshot length differs from the column count"));
        }
        if sign_pattern(w, tol) == target {
            support_id_iter.get_or_insert(*k);
        } else {
            support_id_iter = None;
        }
        let d = Vector::from_column_slice(w) - &ws;
        errs.push((*k, (x * d).norm()));
    }
    let ratios = errs
        .windows(2)
        .filter(|p| p[1].0 == p[0].0 + 1 && p[0].1 >= RATIO_FLOOR)
        .map(|p| RatioPoint { k: p[0].0, ratio: p[1].1 / p[0].1 })
        .collect();
    Ok(EmpiricalRate { support_id_iter, ratios })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub active_set: Vec<usize>,
    pub a: usize,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub bound_iusem: f64,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub bound_deutsch: f64,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub bound_parallel: f64,
    #[serde(serialize_with = "io_fmt::f64_17")]
    pub mu_lower: f64,
    pub support_id_iter: Option<usize>,
    pub empirical_ratios: Vec<RatioPoint>,
}

impl RateReport {
    /// Bounds for the active set of `w_star`, with `weights` for the parallel bound
    /// (uniform over columns when omitted), and measured ratios when `trace` is given.
    pub fn build(
        x: &Matrix,
        w_star: &[f64],
        weights: Option<&WeightVector>,
        trace: Option<&SolverTrace>,
    ) -> Result<Self> {
        let a = active_set(w_star, ACTIVE_TOL);
        let uniform = WeightVector::uniform(x.ncols());
        let g = weights.unwrap_or(&uniform);
        let normals: Vec<Vector> = a.iter().map(|&j| Vector::from_column_slice(numerics::col(x, j))).collect();
        let emp = match trace {
            Some(t) => empirical_rate(t, x, w_star)?,
            None => EmpiricalRate { support_id_iter: None, ratios: Vec::new() },
        };
        Ok(RateReport {
            a: a.len(),
            bound_iusem: bound_iusem(x, &a)?,
            bound_deutsch: bound_deutsch(x, &a)?,
            bound_parallel: bound_parallel(x, &a, g)?,
            mu_lower: mu_lower_bound(&normals)?,
            active_set: a,
            support_id_iter: emp.support_id_iter,
            empirical_ratios: emp.ratios,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
