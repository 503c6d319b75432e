//! Non-adaptive sketch sources: Gaussian, count sketch, and row/column
//! samplers. Output streams are deterministic functions of the seed and the
//! system dimensions.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, streams};

use super::{ActionSide, SketchContext, SketchStrategy, SketchVector};

/// Independent standard-normal sketch vectors.
pub struct Gaussian {
    rng: ChaCha8Rng,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, streams::GAUSSIAN),
        }
    }
}

impl SketchStrategy for Gaussian {
    fn token(&self) -> String {
        "gaussian".into()
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        let n = ctx.system.n();
        Ok(SketchVector::Dense(DVector::from_fn(n, |_, _| {
            self.rng.sample(StandardNormal)
        })))
    }
}

/// Streaming count sketch: a `K x n` block assigns each of the `n` columns a
/// uniform bucket and a Rademacher sign; rows of the block are popped in
/// order and the block is regenerated once exhausted.
pub struct CountSketch {
    k: usize,
    rng: ChaCha8Rng,
    buckets: Vec<usize>,
    signs: Vec<f64>,
    next_row: usize,
    block_n: usize,
}

impl CountSketch {
    pub fn new(k: usize, seed: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter(format!(
                "count sketch needs K >= 1, got {k}"
            )));
        }
        Ok(Self {
            k,
            rng: rng::stream(seed, streams::COUNT_SKETCH),
            buckets: Vec::new(),
            signs: Vec::new(),
            next_row: 0,
            block_n: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn regenerate(&mut self, n: usize) {
        self.buckets.clear();
        self.signs.clear();
        for _ in 0..n {
            self.buckets.push(self.rng.random_range(0..self.k));
            self.signs
                .push(if self.rng.random::<bool>() { 1.0 } else { -1.0 });
        }
        self.next_row = 0;
        self.block_n = n;
    }
}

impl SketchStrategy for CountSketch {
    fn token(&self) -> String {
        format!("countsketch:{}", self.k)
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        let n = ctx.system.n();
        if self.next_row == self.k || self.block_n != n {
            self.regenerate(n);
        }
        let row = self.next_row;
        self.next_row += 1;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            if self.buckets[j] == row {
                indices.push(j);
                values.push(self.signs[j]);
            }
        }
        Ok(SketchVector::Sparse {
            dim: n,
            indices,
            values,
        })
    }
}

/// Uniform row selection with replacement.
pub struct UniformRows {
    rng: ChaCha8Rng,
}

impl UniformRows {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, streams::UNIFORM_ROWS),
        }
    }
}

impl SketchStrategy for UniformRows {
    fn token(&self) -> String {
        "uniform".into()
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        let n = ctx.system.n();
        Ok(SketchVector::basis(self.rng.random_range(0..n), n))
    }
}

/// Row selection with probability proportional to the squared row norm.
pub struct RowNormWeighted {
    rng: ChaCha8Rng,
    cumulative: Vec<f64>,
}

impl RowNormWeighted {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, streams::ROW_NORM),
            cumulative: Vec::new(),
        }
    }
}

impl SketchStrategy for RowNormWeighted {
    fn token(&self) -> String {
        "rownorm".into()
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        let n = ctx.system.n();
        if self.cumulative.len() != n {
            let a = ctx.system.a();
            let mut acc = 0.0;
            self.cumulative = (0..n)
                .map(|i| {
                    acc += a.row(i).norm_squared();
                    acc
                })
                .collect();
            if acc <= 0.0 {
                self.cumulative.clear();
                return Err(Error::DegenerateDistribution);
            }
        }
        let total = *self.cumulative.last().unwrap();
        let u = self.rng.random::<f64>() * total;
        let index = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(n - 1);
        Ok(SketchVector::basis(index, n))
    }
}

/// Permutation sampling: each epoch of `n` draws emits every row basis vector
/// exactly once, reshuffling between epochs.
pub struct RowPermutation {
    rng: ChaCha8Rng,
    remaining: Vec<usize>,
}

impl RowPermutation {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, streams::ROW_PERMUTATION),
            remaining: Vec::new(),
        }
    }
}

fn next_from_permutation(
    remaining: &mut Vec<usize>,
    rng: &mut ChaCha8Rng,
    len: usize,
) -> usize {
    if remaining.is_empty() {
        let mut order: Vec<usize> = (0..len).collect();
        // Fisher-Yates; popped from the back below.
        for i in (1..len).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        *remaining = order;
    }
    remaining.pop().expect("refilled above")
}

impl SketchStrategy for RowPermutation {
    fn token(&self) -> String {
        "cyclic".into()
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        let n = ctx.system.n();
        if !self.remaining.is_empty() && self.remaining.iter().any(|&i| i >= n) {
            self.remaining.clear();
        }
        let index = next_from_permutation(&mut self.remaining, &mut self.rng, n);
        Ok(SketchVector::basis(index, n))
    }
}

/// Column-side permutation sampling for column-action (coordinate descent)
/// methods; emits `d`-dimensional basis vectors.
pub struct ColumnPermutation {
    rng: ChaCha8Rng,
    remaining: Vec<usize>,
}

impl ColumnPermutation {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, streams::COLUMN_PERMUTATION),
            remaining: Vec::new(),
        }
    }
}

impl SketchStrategy for ColumnPermutation {
    fn token(&self) -> String {
        "colcyclic".into()
    }

    fn side(&self) -> ActionSide {
        ActionSide::Column
    }

    fn is_adaptive(&self) -> bool {
        false
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        let d = ctx.system.d();
        if !self.remaining.is_empty() && self.remaining.iter().any(|&i| i >= d) {
            self.remaining.clear();
        }
        let index = next_from_permutation(&mut self.remaining, &mut self.rng, d);
        Ok(SketchVector::basis(index, d))
    }
}
