//! Sketch-vector strategies.
//!
//! Every strategy implements [`SketchStrategy`] and is registered by a token
//! (`gaussian`, `countsketch:K`, `uniform`, `rownorm`, `cyclic`, `colcyclic`,
//! `maxres`, `maxdist`, `grk`, `skm:B`); [`parse_strategy`] builds one from a
//! token and a seed. Non-adaptive strategies emit a sequence that depends only
//! on `(seed, kind, dimensions)`; the adaptive selectors look at the current
//! iterate through [`SketchContext`] and nothing else.

mod adaptive;
mod nonadaptive;

pub use adaptive::{
    grk_candidates, select_grk, select_max_distance, select_max_residual, select_skm,
    GreedyRandomizedKaczmarz, MaxDistance, MaxResidual, SamplingKaczmarzMotzkin,
};
pub use nonadaptive::{
    ColumnPermutation, CountSketch, Gaussian, RowNormWeighted, RowPermutation, UniformRows,
};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::system::LinearSystem;

/// Which space a strategy's vectors live in: row-action vectors have length
/// `n`, column-action vectors length `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSide {
    Row,
    Column,
}

/// The per-iteration view a strategy gets: the system, the current iterate,
/// and the iteration counter. Only the current iterate is exposed.
pub struct SketchContext<'a> {
    pub system: &'a LinearSystem,
    pub x: &'a DVector<f64>,
    pub iteration: usize,
}

/// A sketch vector, kept structured so basis/sparse draws cost `O(d)` to
/// apply instead of `O(n d)`.
#[derive(Clone, Debug, PartialEq)]
pub enum SketchVector {
    Dense(DVector<f64>),
    Basis { index: usize, dim: usize },
    Sparse {
        dim: usize,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

impl SketchVector {
    pub fn basis(index: usize, dim: usize) -> Self {
        SketchVector::Basis { index, dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            SketchVector::Dense(v) => v.len(),
            SketchVector::Basis { dim, .. } => *dim,
            SketchVector::Sparse { dim, .. } => *dim,
        }
    }

    pub fn to_dense(&self) -> DVector<f64> {
        match self {
            SketchVector::Dense(v) => v.clone(),
            SketchVector::Basis { index, dim } => {
                let mut v = DVector::zeros(*dim);
                v[*index] = 1.0;
                v
            }
            SketchVector::Sparse {
                dim,
                indices,
                values,
            } => {
                let mut v = DVector::zeros(*dim);
                for (&i, &val) in indices.iter().zip(values) {
                    v[i] = val;
                }
                v
            }
        }
    }

    /// Indices carrying nonzero weight.
    pub fn support(&self) -> Vec<usize> {
        match self {
            SketchVector::Dense(v) => (0..v.len()).filter(|&i| v[i] != 0.0).collect(),
            SketchVector::Basis { index, .. } => vec![*index],
            SketchVector::Sparse {
                indices, values, ..
            } => indices
                .iter()
                .zip(values)
                .filter(|(_, &v)| v != 0.0)
                .map(|(&i, _)| i)
                .collect(),
        }
    }

    /// `vᵀ y` for a dense `y`.
    pub fn dot(&self, y: &DVector<f64>) -> f64 {
        match self {
            SketchVector::Dense(v) => crate::linalg::vdot(v, y),
            SketchVector::Basis { index, .. } => y[*index],
            SketchVector::Sparse {
                indices, values, ..
            } => indices
                .iter()
                .zip(values)
                .map(|(&i, &v)| v * y[i])
                .sum(),
        }
    }
}

/// One interchangeable sketch-vector generator.
pub trait SketchStrategy {
    /// Canonical registry token, e.g. `countsketch:10`.
    fn token(&self) -> String;
    /// Row-action (`R^n`) or column-action (`R^d`).
    fn side(&self) -> ActionSide;
    /// Whether the output depends on the current iterate.
    fn is_adaptive(&self) -> bool;
    /// Emits the next sketch vector.
    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector>;
}

/// Builds a strategy from its registry token. The seed feeds a per-kind
/// random stream; deterministic selectors ignore it.
pub fn parse_strategy(token: &str, seed: u64) -> Result<Box<dyn SketchStrategy>> {
    let (head, arg) = match token.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (token, None),
    };
    let parse_arg = |what: &str| -> Result<usize> {
        arg.ok_or_else(|| Error::InvalidParameter(format!("{head} requires `:{what}`")))?
            .parse::<usize>()
            .map_err(|_| Error::InvalidParameter(format!("bad {what} in `{token}`")))
    };
    match head {
        "gaussian" => Ok(Box::new(Gaussian::new(seed))),
        "countsketch" => {
            let k = match arg {
                Some(_) => parse_arg("K")?,
                None => 10,
            };
            Ok(Box::new(CountSketch::new(k, seed)?))
        }
        "uniform" => Ok(Box::new(UniformRows::new(seed))),
        "rownorm" => Ok(Box::new(RowNormWeighted::new(seed))),
        "cyclic" => Ok(Box::new(RowPermutation::new(seed))),
        "colcyclic" => Ok(Box::new(ColumnPermutation::new(seed))),
        "maxres" => Ok(Box::new(MaxResidual::new())),
        "maxdist" => {
            let exponent = match arg {
                Some(_) => parse_arg("exponent")?,
                None => 2,
            };
            Ok(Box::new(MaxDistance::new(exponent)?))
        }
        "grk" => Ok(Box::new(GreedyRandomizedKaczmarz::new(seed))),
        "skm" => {
            let beta = parse_arg("B")?;
            Ok(Box::new(SamplingKaczmarzMotzkin::new(beta, seed)?))
        }
        _ => Err(Error::UnknownStrategy(token.to_string())),
    }
}

/// All registry tokens, for help text and tests.
pub const STRATEGY_TOKENS: &[&str] = &[
    "gaussian",
    "countsketch:K",
    "uniform",
    "rownorm",
    "cyclic",
    "colcyclic",
    "maxres",
    "maxdist",
    "grk",
    "skm:B",
];
