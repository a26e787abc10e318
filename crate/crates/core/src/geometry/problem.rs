use crate::error::{Error, Result};
use crate::numerics::{self, Matrix, Vector};

use super::block::Block;
use super::penalty::Penalty;
use super::set::{ApproxProblem, ConvexSet};

/// `min_w ½‖y − Σ X_i w_i‖² + Σ h_i(w_i)`.
///
/// Coefficients are stored as one flat vector with the blocks laid out in order.
#[derive(Clone, Debug)]
pub struct RegressionProblem {
    y: Vector,
    /// All blocks side by side, `n × p`.
    x: Matrix,
    blocks: Vec<Block>,
    offsets: Vec<usize>,
}

impl RegressionProblem {
    pub fn new(y: Vector, blocks: Vec<Block>) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite response".into()));
        }
        if blocks.is_empty() {
            return Err(Error::Parameter("at least one block is required".into()));
        }
        let n = y.len();
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != n {
                return Err(Error::shape(format!(
                    "block {i} has {} rows but response has length {n}",
                    b.nrows()
                )));
            }
            offsets.push(offsets[i] + b.width());
        }
        let p = offsets[blocks.len()];
        let mut x = Matrix::zeros(n, p);
        for (i, b) in blocks.iter().enumerate() {
            x.columns_mut(offsets[i], b.width()).copy_from(b.x());
        }
        Ok(RegressionProblem { y, x, blocks, offsets })
    }

    /// Lasso: one single-column `L1(λ)` block per column of `x`.
    pub fn lasso(x: Matrix, y: Vector, lambda: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::shape(format!(
                "design has {} rows but response has length {}",
                x.nrows(),
                y.len()
            )));
        }
        let blocks = (0..x.ncols())
            .map(|j| Block::column(x.column(j).into_owned(), Penalty::l1(lambda)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(y, blocks)
    }

    /// Equal-width blocks sharing one penalty.
    pub fn grouped(x: Matrix, y: Vector, width: usize, penalty: Penalty) -> Result<Self> {
        if width == 0 || x.ncols() % width != 0 {
            return Err(Error::shape(format!(
                "{} columns cannot be split into blocks of {width}",
                x.ncols()
            )));
        }
        let blocks = (0..x.ncols() / width)
            .map(|i| Block::new(x.columns(i * width, width).into_owned(), penalty))
            .collect::<Result<Vec<_>>>()?;
        Self::new(y, blocks)
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Coefficient range of block `i`.
    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// True when every block is a single column with an `L1` penalty of the same level.
    pub fn lasso_lambda(&self) -> Option<f64> {
        let first = match self.blocks[0].penalty() {
            Penalty::L1 { lambda } => *lambda,
            _ => return None,
        };
        self.blocks
            .iter()
            .all(|b| b.width() == 1 && *b.penalty() == Penalty::l1(first))
            .then_some(first)
    }

    pub(crate) fn check_w(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.p() {
            return Err(Error::shape(format!(
                "coefficient vector has length {} but problem has p = {}",
                w.len(),
                self.p()
            )));
        }
        Ok(())
    }

    /// `X w`
    pub fn fitted(&self, w: &[f64]) -> Result<Vector> {
        self.check_w(w)?;
        Ok(&self.x * Vector::from_column_slice(w))
    }

    /// `y − X w`
    pub fn residual(&self, w: &[f64]) -> Result<Vector> {
        Ok(&self.y - self.fitted(w)?)
    }

    pub fn penalty_value(&self, w: &[f64]) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| b.penalty().value(&w[self.range(i)]))
            .sum()
    }

    /// `½‖y − Xw‖² + Σ h_i(w_i)`
    pub fn criterion(&self, w: &[f64]) -> Result<f64> {
        let r = self.residual(w)?;
        Ok(0.5 * r.norm_squared() + self.penalty_value(w))
    }

    /// Duality gap at `w` using the scaled residual as dual point.
    pub fn duality_gap(&self, w: &[f64]) -> Result<f64> {
        let r = self.residual(w)?;
        Ok(self.gap_from_residual(w, r.as_slice()))
    }

    pub(crate) fn gap_from_residual(&self, w: &[f64], r: &[f64]) -> f64 {
        let g: Vec<f64> = self.x.tr_mul(&Vector::from_column_slice(r)).iter().copied().collect();
        let mut s = 1.0f64;
        for (i, b) in self.blocks.iter().enumerate() {
            s = s.min(b.penalty().dual_scaling(&g[self.range(i)]));
        }
        let rr = numerics::dot(r, r);
        let gap = 0.5 * (1.0 - s) * (1.0 - s) * rr + self.penalty_value(w) - s * numerics::dot(&g, w);
        gap.max(0.0)
    }

    /// The dual best-approximation problem: project `y` onto `∩ {v : X_i^T v ∈ D_i}`.
    pub fn dual_problem(&self) -> ApproxProblem {
        let sets = self.blocks.iter().cloned().map(ConvexSet::InverseImage).collect();
        ApproxProblem { anchor: self.y.clone(), sets }
    }

    /// The lasso dual as explicit slabs `{v : |X_i^T v| ≤ λ}`.
    pub fn slab_sets(&self) -> Result<Vec<ConvexSet>> {
        let lam = self
            .lasso_lambda()
            .ok_or_else(|| Error::Type("slab form needs single-column L1 blocks".into()))?;
        (0..self.p()).map(|j| ConvexSet::slab(self.x.column(j).into_owned(), lam)).collect()
    }

    /// Lasso slabs split into halfspaces `X_i^T v ≤ λ` and `−X_i^T v ≤ λ`, in that order.
    pub fn halfspace_sets(&self) -> Result<Vec<ConvexSet>> {
        let lam = self
            .lasso_lambda()
            .ok_or_else(|| Error::Type("halfspace form needs single-column L1 blocks".into()))?;
        let mut out = Vec::with_capacity(2 * self.p());
        for j in 0..self.p() {
            let a = self.x.column(j).into_owned();
            out.push(ConvexSet::halfspace(a.clone(), lam)?);
            out.push(ConvexSet::halfspace(-a, lam)?);
        }
        Ok(out)
    }
}

/// Euclidean projection of `x` onto `set`.
pub fn project(set: &ConvexSet, x: &[f64]) -> Result<Vector> {
    set.project(x)
}

/// Objective value of `problem` at `w`.
pub fn criterion(problem: &RegressionProblem, w: &[f64]) -> Result<f64> {
    problem.criterion(w)
}
