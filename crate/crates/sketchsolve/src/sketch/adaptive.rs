//! Residual-adaptive row selectors: maximum residual, maximum distance,
//! greedy randomized selection over a thresholded set, and greedy selection
//! over a random subset. All of them see only the current iterate, break
//! argmax ties toward the smallest row index, and are invariant to scaling
//! the error `x - P_H(x)` by any positive factor.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::vdot;
use crate::rng::{self, streams};

use super::{ActionSide, SketchContext, SketchStrategy, SketchVector};

fn squared_row_norms(ctx: &SketchContext<'_>) -> Vec<f64> {
    let a = ctx.system.a();
    (0..ctx.system.n()).map(|i| a.row(i).norm_squared()).collect()
}

fn argmax_strict(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Row index with the largest absolute residual entry.
pub fn select_max_residual(ctx: &SketchContext<'_>) -> Result<usize> {
    let r = ctx.system.signed_residual(ctx.x)?;
    Ok(argmax_strict(r.iter().map(|v| v.abs())))
}

/// Row index maximizing `|r_i| / ||A_i||^exponent`. The exponent defaults to
/// 2 elsewhere in the crate; 1 gives the classical hyperplane distance.
pub fn select_max_distance(ctx: &SketchContext<'_>, exponent: u32) -> Result<usize> {
    let r = ctx.system.signed_residual(ctx.x)?;
    let norms_sq = squared_row_norms(ctx);
    if let Some(i) = norms_sq.iter().position(|&nsq| nsq <= 0.0) {
        return Err(Error::DegenerateRow { index: i });
    }
    let score = |i: usize| {
        let denom = match exponent {
            1 => norms_sq[i].sqrt(),
            _ => norms_sq[i],
        };
        r[i].abs() / denom
    };
    Ok(argmax_strict((0..r.len()).map(score)))
}

/// The thresholded candidate set of the greedy randomized scheme: rows whose
/// normalized squared residual reaches half way between the best row and the
/// Frobenius average.
pub fn grk_candidates(ctx: &SketchContext<'_>) -> Result<Vec<usize>> {
    let r = ctx.system.signed_residual(ctx.x)?;
    let norms_sq = squared_row_norms(ctx);
    let r2 = vdot(&r, &r);
    if r2 <= 0.0 {
        return Err(Error::ZeroResidual);
    }
    let fro_sq: f64 = norms_sq.iter().sum();
    let eps = |i: usize| {
        if norms_sq[i] > 0.0 {
            r[i] * r[i] / norms_sq[i]
        } else {
            0.0
        }
    };
    let eps_max = (0..r.len()).map(eps).fold(0.0f64, f64::max);
    let threshold = 0.5 * (eps_max / r2 + 1.0 / fro_sq);
    let candidates: Vec<usize> = (0..r.len())
        .filter(|&i| norms_sq[i] > 0.0 && eps(i) >= threshold * r2)
        .collect();
    // Always contains the argmax of r_i^2 / ||A_i||^2 (the classical
    // max-distance row), so it cannot be empty.
    debug_assert!(candidates.contains(&argmax_strict((0..r.len()).map(eps))));
    Ok(candidates)
}

/// Greedy randomized selection: sample from [`grk_candidates`] with
/// probability proportional to the squared residual.
pub fn select_grk(ctx: &SketchContext<'_>, rng: &mut ChaCha8Rng) -> Result<usize> {
    let candidates = grk_candidates(ctx)?;
    let r = ctx.system.signed_residual(ctx.x)?;
    let mut cumulative = Vec::with_capacity(candidates.len());
    let mut acc = 0.0;
    for &i in &candidates {
        acc += r[i] * r[i];
        cumulative.push(acc);
    }
    let u = rng.random::<f64>() * acc;
    let pos = cumulative.partition_point(|&c| c <= u).min(candidates.len() - 1);
    Ok(candidates[pos])
}

/// Greedy over a random subset: draw `beta` distinct rows uniformly, return
/// the one with the largest absolute residual.
pub fn select_skm(ctx: &SketchContext<'_>, beta: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
    let n = ctx.system.n();
    if beta < 1 || beta > n {
        return Err(Error::InvalidParameter(format!(
            "subset size {beta} out of range 1..={n}"
        )));
    }
    let r = ctx.system.signed_residual(ctx.x)?;
    let mut subset = rand::seq::index::sample(rng, n, beta).into_vec();
    subset.sort_unstable();
    let mut best = subset[0];
    let mut best_score = r[best].abs();
    for &i in &subset[1..] {
        if r[i].abs() > best_score {
            best = i;
            best_score = r[i].abs();
        }
    }
    Ok(best)
}

pub struct MaxResidual;

impl MaxResidual {
    pub fn new() -> Self {
        Self
    }
}

impl Default for MaxResidual {
    fn default() -> Self {
        Self::new()
    }
}

impl SketchStrategy for MaxResidual {
    fn token(&self) -> String {
        "maxres".into()
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        true
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        Ok(SketchVector::basis(select_max_residual(ctx)?, ctx.system.n()))
    }
}

pub struct MaxDistance {
    exponent: u32,
}

impl MaxDistance {
    pub fn new(exponent: usize) -> Result<Self> {
        if exponent != 1 && exponent != 2 {
            return Err(Error::InvalidParameter(format!(
                "distance exponent must be 1 or 2, got {exponent}"
            )));
        }
        Ok(Self {
            exponent: exponent as u32,
        })
    }
}

impl SketchStrategy for MaxDistance {
    fn token(&self) -> String {
        if self.exponent == 2 {
            "maxdist".into()
        } else {
            format!("maxdist:{}", self.exponent)
        }
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        true
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        Ok(SketchVector::basis(
            select_max_distance(ctx, self.exponent)?,
            ctx.system.n(),
        ))
    }
}

pub struct GreedyRandomizedKaczmarz {
    rng: ChaCha8Rng,
}

impl GreedyRandomizedKaczmarz {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, streams::GRK),
        }
    }
}

impl SketchStrategy for GreedyRandomizedKaczmarz {
    fn token(&self) -> String {
        "grk".into()
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        true
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        Ok(SketchVector::basis(
            select_grk(ctx, &mut self.rng)?,
            ctx.system.n(),
        ))
    }
}

pub struct SamplingKaczmarzMotzkin {
    beta: usize,
    rng: ChaCha8Rng,
}

impl SamplingKaczmarzMotzkin {
    pub fn new(beta: usize, seed: u64) -> Result<Self> {
        if beta < 1 {
            return Err(Error::InvalidParameter(
                "subset size must be at least 1".into(),
            ));
        }
        Ok(Self {
            beta,
            rng: rng::stream(seed, streams::SKM),
        })
    }
}

impl SketchStrategy for SamplingKaczmarzMotzkin {
    fn token(&self) -> String {
        format!("skm:{}", self.beta)
    }

    fn side(&self) -> ActionSide {
        ActionSide::Row
    }

    fn is_adaptive(&self) -> bool {
        true
    }

    fn next(&mut self, ctx: &SketchContext<'_>) -> Result<SketchVector> {
        Ok(SketchVector::basis(
            select_skm(ctx, self.beta, &mut self.rng)?,
            ctx.system.n(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::LinearSystem;
    use nalgebra::{DMatrix, DVector};

    fn system(a: DMatrix<f64>, b: DVector<f64>) -> LinearSystem {
        LinearSystem::new(a, b).unwrap()
    }

    fn ctx<'a>(sys: &'a LinearSystem, x: &'a DVector<f64>) -> SketchContext<'a> {
        SketchContext {
            system: sys,
            x,
            iteration: 0,
        }
    }

    #[test]
    fn max_residual_picks_largest_violation() {
        let sys = system(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0]));
        let x = DVector::zeros(2);
        assert_eq!(select_max_residual(&ctx(&sys, &x)).unwrap(), 1);
    }

    #[test]
    fn max_residual_ties_break_to_first_index() {
        let sys = system(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0]));
        let x = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(select_max_residual(&ctx(&sys, &x)).unwrap(), 0);
    }

    #[test]
    fn max_residual_hand_case() {
        let sys = system(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]),
            DVector::zeros(2),
        );
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(select_max_residual(&ctx(&sys, &x)).unwrap(), 1);
    }

    #[test]
    fn max_distance_matches_max_residual_on_unit_rows() {
        let sys = system(DMatrix::identity(3, 3), DVector::from_vec(vec![0.3, -0.9, 0.5]));
        let x = DVector::zeros(3);
        assert_eq!(
            select_max_distance(&ctx(&sys, &x), 2).unwrap(),
            select_max_residual(&ctx(&sys, &x)).unwrap()
        );
    }

    #[test]
    fn max_distance_divides_by_squared_norm() {
        let sys = system(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            DVector::zeros(2),
        );
        let x = DVector::from_vec(vec![1.0, 1.0]);
        // scores: 1/1 vs 2/4
        assert_eq!(select_max_distance(&ctx(&sys, &x), 2).unwrap(), 0);
        // with exponent 1: 1/1 vs 2/2, tie broken to row 0
        assert_eq!(select_max_distance(&ctx(&sys, &x), 1).unwrap(), 0);
    }

    #[test]
    fn max_distance_rejects_zero_row() {
        let mut a = DMatrix::identity(2, 2);
        a.row_mut(1).scale_mut(0.0);
        let sys = system(a, DVector::zeros(2));
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            select_max_distance(&ctx(&sys, &x), 2),
            Err(Error::DegenerateRow { index: 1 })
        ));
    }

    #[test]
    fn grk_single_nonzero_residual_is_the_candidate() {
        let sys = system(DMatrix::identity(2, 2), DVector::zeros(2));
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(grk_candidates(&ctx(&sys, &x)).unwrap(), vec![0]);
        let mut rng = rng::stream(0, streams::GRK);
        assert_eq!(select_grk(&ctx(&sys, &x), &mut rng).unwrap(), 0);
    }

    #[test]
    fn grk_single_row_system_always_selected() {
        let sys = system(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![3.0]),
        );
        let x = DVector::zeros(2);
        let mut rng = rng::stream(5, streams::GRK);
        for _ in 0..5 {
            assert_eq!(select_grk(&ctx(&sys, &x), &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn grk_balanced_case_samples_both_rows_evenly() {
        let sys = system(DMatrix::identity(2, 2), DVector::zeros(2));
        let x = DVector::from_vec(vec![1.0, 1.0]);
        let cands = grk_candidates(&ctx(&sys, &x)).unwrap();
        assert_eq!(cands, vec![0, 1]);
        let mut rng = rng::stream(11, streams::GRK);
        let trials = 10_000;
        let mut first = 0usize;
        for _ in 0..trials {
            if select_grk(&ctx(&sys, &x), &mut rng).unwrap() == 0 {
                first += 1;
            }
        }
        let freq = first as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn grk_zero_residual_is_a_precondition_violation() {
        let sys = system(DMatrix::identity(2, 2), DVector::zeros(2));
        let x = DVector::zeros(2);
        assert!(matches!(
            grk_candidates(&ctx(&sys, &x)),
            Err(Error::ZeroResidual)
        ));
    }

    #[test]
    fn skm_full_subset_equals_max_residual() {
        let sys = system(
            DMatrix::identity(4, 4),
            DVector::from_vec(vec![0.1, -2.0, 0.7, 1.9]),
        );
        let x = DVector::zeros(4);
        let mut rng = rng::stream(4, streams::SKM);
        assert_eq!(
            select_skm(&ctx(&sys, &x), 4, &mut rng).unwrap(),
            select_max_residual(&ctx(&sys, &x)).unwrap()
        );
    }

    #[test]
    fn skm_beta_bounds_checked() {
        let sys = system(DMatrix::identity(2, 2), DVector::zeros(2));
        let x = DVector::zeros(2);
        let mut rng = rng::stream(4, streams::SKM);
        assert!(select_skm(&ctx(&sys, &x), 0, &mut rng).is_err());
        assert!(select_skm(&ctx(&sys, &x), 3, &mut rng).is_err());
    }

    #[test]
    fn skm_picks_heavy_row_when_sampled() {
        let sys = system(DMatrix::identity(3, 3), DVector::zeros(3));
        let x = DVector::from_vec(vec![0.0, 0.0, 5.0]);
        let mut rng = rng::stream(9, streams::SKM);
        let trials = 10_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            if select_skm(&ctx(&sys, &x), 2, &mut rng).unwrap() == 2 {
                hits += 1;
            }
        }
        // Row 2 wins exactly when it lands in the subset: probability 2/3.
        let freq = hits as f64 / trials as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn selections_are_magnitude_invariant() {
        // Consistent underdetermined system with a known solution flat.
        let a = DMatrix::from_row_slice(3, 4, &[
            1.0, 2.0, 0.0, -1.0, //
            0.5, -1.0, 3.0, 0.0, //
            2.0, 0.0, 1.0, 1.0,
        ]);
        let x_star = DVector::from_vec(vec![0.3, -0.2, 1.1, 0.7]);
        let b = &a * &x_star;
        let sys = LinearSystem::new(a.clone(), b.clone()).unwrap();
        let mut state_rng = rng::stream(31, 99);
        for _ in 0..50 {
            let x = DVector::from_fn(4, |_, _| state_rng.random::<f64>() * 4.0 - 2.0);
            let ph = &x - crate::linalg::pinv_solve(&a, &(&a * &x - &b), 1e-12);
            for lambda in [0.1, 10.0] {
                let scaled = &ph + (&x - &ph) * lambda;
                let c0 = ctx(&sys, &x);
                let c1 = ctx(&sys, &scaled);
                assert_eq!(
                    select_max_residual(&c0).unwrap(),
                    select_max_residual(&c1).unwrap()
                );
                assert_eq!(
                    select_max_distance(&c0, 2).unwrap(),
                    select_max_distance(&c1, 2).unwrap()
                );
                assert_eq!(grk_candidates(&c0).unwrap(), grk_candidates(&c1).unwrap());
                let mut r1 = rng::stream(77, streams::GRK);
                let mut r2 = r1.clone();
                assert_eq!(
                    select_grk(&c0, &mut r1).unwrap(),
                    select_grk(&c1, &mut r2).unwrap()
                );
                let mut r1 = rng::stream(78, streams::SKM);
                let mut r2 = r1.clone();
                assert_eq!(
                    select_skm(&c0, 2, &mut r1).unwrap(),
                    select_skm(&c1, 2, &mut r2).unwrap()
                );
            }
        }
    }
}
