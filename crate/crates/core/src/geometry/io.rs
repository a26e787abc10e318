//! Instance files: `{n, p, y, blocks: [{cols, X_col_major, penalty}], loss?}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_fmt;
use crate::numerics::{matrix_from_col_major, Vector};

use super::block::Block;
use super::penalty::Penalty;
use super::problem::RegressionProblem;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSpec {
    pub cols: usize,
    #[serde(rename = "X_col_major", serialize_with = "io_fmt::vec_f64_17")]
    pub x_col_major: Vec<f64>,
    pub penalty: Penalty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Quadratic,
    Logistic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LossSpec {
    #[serde(rename = "type")]
    pub kind: LossKind,
    #[serde(serialize_with = "io_fmt::vec_f64_17")]
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub p: usize,
    #[serde(serialize_with = "io_fmt::vec_f64_17")]
    pub y: Vec<f64>,
    pub blocks: Vec<BlockSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSpec>,
}

impl InstanceFile {
    pub fn from_problem(pr: &RegressionProblem, loss: Option<LossSpec>) -> Self {
        let blocks = pr
            .blocks()
            .iter()
            .map(|b| BlockSpec {
                cols: b.width(),
                x_col_major: b.x().as_slice().to_vec(),
                penalty: *b.penalty(),
            })
            .collect();
        InstanceFile { n: pr.n(), p: pr.p(), y: pr.y().as_slice().to_vec(), blocks, loss }
    }

    pub fn to_problem(&self) -> Result<RegressionProblem> {
        if self.y.len() != self.n {
            return Err(Error::shape(format!("n = {} but y has length {}", self.n, self.y.len())));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block::new(matrix_from_col_major(self.n, b.cols, &b.x_col_major)?, b.penalty))
            .collect::<Result<Vec<_>>>()?;
        let pr = RegressionProblem::new(Vector::from_column_slice(&self.y), blocks)?;
        if pr.p() != self.p {
            return Err(Error::shape(format!("p = {} but blocks hold {} columns", self.p, pr.p())));
        }
        if let Some(l) = &self.loss {
            if l.y.len() != self.n {
                return Err(Error::shape("loss response length differs from n"));
            }
        }
        Ok(pr)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::harness::write_atomic(path, self.to_json()?.as_bytes())
    }
}
