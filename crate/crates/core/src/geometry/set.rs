use crate::error::{Error, Result};
use crate::numerics::{self, dot, Matrix, Vector};

use super::block::Block;

/// Tolerance for membership tests derived from projection distance.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A closed convex set with an exact (or, for multi-column inverse images,
/// certified iterative) Euclidean projection.
#[derive(Clone, Debug)]
pub enum ConvexSet {
    /// `{x : <a, x> ≤ b}`
    Halfspace { a: Vector, b: f64 },
    /// `{x : |<a, x>| ≤ λ}`
    Slab { a: Vector, lambda: f64 },
    Box { lower: Vector, upper: Vector },
    L2Ball { center: Vector, radius: f64 },
    /// `offset + span(basis)`; the basis is stored orthonormalized.
    AffineSubspace { basis: Matrix, offset: Vector },
    /// `{v : X_i^T v ∈ D_i}`, with `D_i` carried by the block's penalty.
    InverseImage(Block),
    Product(Vec<ConvexSet>),
    /// Diagonal of `(R^n)^d`: all `d` stacked copies equal.
    Consensus { copies: usize, block_len: usize },
}

fn check_finite(v: &Vector, what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data(format!("non-finite entry in {what}")));
    }
    Ok(())
}

impl ConvexSet {
    pub fn halfspace(a: Vector, b: f64) -> Result<Self> {
        check_finite(&a, "halfspace normal")?;
        if a.norm_squared() == 0.0 {
            return Err(Error::Degenerate("halfspace normal is zero".into()));
        }
        if !b.is_finite() {
            return Err(Error::Data("halfspace offset is not finite".into()));
        }
        Ok(ConvexSet::Halfspace { a, b })
    }

    pub fn slab(a: Vector, lambda: f64) -> Result<Self> {
        check_finite(&a, "slab normal")?;
        if a.norm_squared() == 0.0 {
            return Err(Error::Degenerate("slab normal is zero".into()));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Parameter(format!("slab halfwidth must be nonnegative, got {lambda}")));
        }
        Ok(ConvexSet::Slab { a, lambda })
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::shape("box bounds differ in length"));
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u) || l.is_nan()) {
            return Err(Error::Parameter("box needs lower <= upper componentwise".into()));
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    pub fn l2_ball(center: Vector, radius: f64) -> Result<Self> {
        check_finite(&center, "ball center")?;
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::Parameter(format!("ball radius must be nonnegative, got {radius}")));
        }
        Ok(ConvexSet::L2Ball { center, radius })
    }

    pub fn affine(basis: &Matrix, offset: Vector) -> Result<Self> {
        if basis.nrows() != offset.len() {
            return Err(Error::shape("affine basis and offset differ in dimension"));
        }
        check_finite(&offset, "affine offset")?;
        Ok(ConvexSet::AffineSubspace { basis: numerics::orthonormal_basis(basis), offset })
    }

    pub fn consensus(copies: usize, block_len: usize) -> Result<Self> {
        if copies == 0 || block_len == 0 {
            return Err(Error::Parameter("consensus set needs at least one copy of length >= 1".into()));
        }
        Ok(ConvexSet::Consensus { copies, block_len })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Halfspace { a, .. } | ConvexSet::Slab { a, .. } => a.len(),
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::L2Ball { center, .. } => center.len(),
            ConvexSet::AffineSubspace { offset, .. } => offset.len(),
            ConvexSet::InverseImage(b) => b.nrows(),
            ConvexSet::Product(parts) => parts.iter().map(ConvexSet::dim).sum(),
            ConvexSet::Consensus { copies, block_len } => copies * block_len,
        }
    }

    pub fn is_halfspace(&self) -> bool {
        matches!(self, ConvexSet::Halfspace { .. })
    }

    pub fn is_affine(&self) -> bool {
        match self {
            ConvexSet::AffineSubspace { .. } | ConvexSet::Consensus { .. } => true,
            ConvexSet::Product(parts) => parts.iter().all(ConvexSet::is_affine),
            _ => false,
        }
    }

    /// Euclidean projection of `x`.
    pub fn project(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!(
                "set has dimension {} but point has length {}",
                self.dim(),
                x.len()
            )));
        }
        let mut out = Vector::from_column_slice(x);
        match self {
            ConvexSet::Halfspace { a, b } => {
                let c = dot(a.as_slice(), x);
                if c > *b {
                    numerics::axpy(-(c - b) / a.norm_squared(), a.as_slice(), out.as_mut_slice());
                }
            }
            ConvexSet::Slab { a, lambda } => {
                let c = dot(a.as_slice(), x);
                let target = c.clamp(-lambda, *lambda);
                if c != target {
                    numerics::axpy(-(c - target) / a.norm_squared(), a.as_slice(), out.as_mut_slice());
                }
            }
            ConvexSet::Box { lower, upper } => {
                for ((o, l), u) in out.iter_mut().zip(lower.iter()).zip(upper.iter()) {
                    *o = o.clamp(*l, *u);
                }
            }
            ConvexSet::L2Ball { center, radius } => {
                let d = &out - center;
                let nrm = d.norm();
                if nrm > *radius {
                    out = center + d * (radius / nrm);
                }
            }
            ConvexSet::AffineSubspace { basis, offset } => {
                let d = &out - offset;
                out = offset + (&d - numerics::remove_span(basis, &d));
            }
            ConvexSet::InverseImage(b) => out = b.project_inverse_image(x)?,
            ConvexSet::Product(parts) => {
                let mut start = 0;
                for s in parts {
                    let m = s.dim();
                    let p = s.project(&x[start..start + m])?;
                    out.as_mut_slice()[start..start + m].copy_from_slice(p.as_slice());
                    start += m;
                }
            }
            ConvexSet::Consensus { copies, block_len } => {
                let n = *block_len;
                let mut mean = vec![0.0; n];
                for c in 0..*copies {
                    numerics::axpy(1.0, &x[c * n..(c + 1) * n], &mut mean);
                }
                let inv = 1.0 / *copies as f64;
                for c in 0..*copies {
                    for j in 0..n {
                        out[c * n + j] = mean[j] * inv;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Membership, defined as projection distance (sup-norm) at most `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        let p = self.project(x)?;
        Ok(numerics::sup_dist(p.as_slice(), x) <= tol)
    }
}

/// Best-approximation problem: project `anchor` onto the intersection of `sets`.
#[derive(Clone, Debug)]
pub struct ApproxProblem {
    pub anchor: Vector,
    pub sets: Vec<ConvexSet>,
}

impl ApproxProblem {
    pub fn new(anchor: Vector, sets: Vec<ConvexSet>) -> Result<Self> {
        check_finite(&anchor, "anchor")?;
        if sets.is_empty() {
            return Err(Error::Parameter("at least one set is required".into()));
        }
        for (i, s) in sets.iter().enumerate() {
            if s.dim() != anchor.len() {
                return Err(Error::shape(format!(
                    "set {i} has dimension {} but anchor has length {}",
                    s.dim(),
                    anchor.len()
                )));
            }
        }
        Ok(ApproxProblem { anchor, sets })
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }
}
