//! Linear-system representation, synthetic generators, and dense oracles.

mod matrix_market;

pub use matrix_market::{
    load_matrix_market, read_matrix_market, write_matrix_market_array,
    write_matrix_market_coordinate,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, streams};

/// Relative singular-value cutoff for pseudoinverse solves.
pub const PINV_RTOL: f64 = 1e-12;
/// Relative threshold for feasibility checks and numerical-rank decisions.
pub const FEASIBILITY_RTOL: f64 = 1e-8;

/// A dense linear system `A x = b`, optionally carrying the solution that
/// generated `b`.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    x_star: Option<DVector<f64>>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "coefficient matrix must be nonempty".into(),
            ));
        }
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch {
                context: "constant vector",
                expected: a.nrows(),
                found: b.len(),
            });
        }
        Ok(Self { a, b, x_star: None })
    }

    pub fn with_solution(a: DMatrix<f64>, b: DVector<f64>, x_star: DVector<f64>) -> Result<Self> {
        let mut sys = Self::new(a, b)?;
        if x_star.len() != sys.d() {
            return Err(Error::DimensionMismatch {
                context: "generating solution",
                expected: sys.d(),
                found: x_star.len(),
            });
        }
        sys.x_star = Some(x_star);
        Ok(sys)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn x_star(&self) -> Option<&DVector<f64>> {
        self.x_star.as_ref()
    }

    fn check_x(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                context: "iterate",
                expected: self.d(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `b - A x`.
    pub fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_x(x)?;
        Ok(&self.b - &self.a * x)
    }

    /// `A x - b`. Kept as a separate named operation so the two sign
    /// conventions cannot be silently confused.
    pub fn signed_residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_x(x)?;
        Ok(&self.a * x - &self.b)
    }

    pub fn residual_norm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.residual(x)?.norm())
    }
}

/// Builds a consistent system from `a`: draws `x* ~ N(0, I_d)` from the
/// seeded stream and sets `b = A x*`.
pub fn make_consistent_system(a: DMatrix<f64>, seed: u64) -> LinearSystem {
    let d = a.ncols();
    let mut rng = rng::stream(seed, streams::SOLUTION_DRAW);
    let x_star = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
    let b = &a * &x_star;
    LinearSystem {
        a,
        b,
        x_star: Some(x_star),
    }
}

/// A prescribed singular-value profile for synthetic test matrices.
#[derive(Clone, Debug)]
pub struct SpectrumSpec {
    singular_values: Vec<f64>,
    seed: u64,
}

impl SpectrumSpec {
    pub fn new(singular_values: Vec<f64>, seed: u64) -> Result<Self> {
        if singular_values.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        if singular_values.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(Error::InvalidSpectrum(
                "singular values must be finite and nonnegative".into(),
            ));
        }
        if singular_values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpectrum(
                "singular values must be sorted non-increasing".into(),
            ));
        }
        if singular_values[0] == 0.0 {
            return Err(Error::InvalidSpectrum(
                "at least one singular value must be positive".into(),
            ));
        }
        Ok(Self {
            singular_values,
            seed,
        })
    }

    /// Geometrically decaying spectrum with `sigma_max / sigma_min == cond`.
    pub fn geometric(len: usize, cond: f64, seed: u64) -> Result<Self> {
        if len == 0 || cond < 1.0 || !cond.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "bad geometric spectrum: len={len}, cond={cond}"
            )));
        }
        let values = (0..len)
            .map(|i| {
                if len == 1 {
                    1.0
                } else {
                    cond.powf(-(i as f64) / (len as f64 - 1.0))
                }
            })
            .collect();
        Self::new(values, seed)
    }

    /// Power-law spectrum `sigma_i = i^(-alpha)` scaled so the condition
    /// number is `cond`. Decays smoothly like the classic ill-conditioned
    /// test operators.
    pub fn power_law(len: usize, cond: f64, seed: u64) -> Result<Self> {
        if len == 0 || cond < 1.0 || !cond.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "bad power-law spectrum: len={len}, cond={cond}"
            )));
        }
        let alpha = if len == 1 {
            0.0
        } else {
            cond.ln() / (len as f64).ln()
        };
        let values = (1..=len).map(|i| (i as f64).powf(-alpha)).collect();
        Self::new(values, seed)
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws an orthonormal `rows x cols` factor (`cols <= rows`) via QR of a
/// Gaussian matrix.
fn haar_factor(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    qr.q().columns(0, cols).into_owned()
}

/// `U diag(sigma) Vᵀ` with Haar-like orthogonal factors and the prescribed
/// singular values.
pub fn gen_prescribed_svd(n: usize, d: usize, spec: &SpectrumSpec) -> Result<DMatrix<f64>> {
    let r = n.min(d);
    if spec.singular_values.len() != r {
        return Err(Error::InvalidSpectrum(format!(
            "expected {} singular values for a {}x{} matrix, got {}",
            r,
            n,
            d,
            spec.singular_values.len()
        )));
    }
    let mut left_rng = rng::stream(spec.seed, streams::SVD_LEFT);
    let mut right_rng = rng::stream(spec.seed, streams::SVD_RIGHT);
    let u = haar_factor(n, r, &mut left_rng);
    let v = haar_factor(d, r, &mut right_rng);
    let mut scaled = v.transpose();
    for (i, &s) in spec.singular_values.iter().enumerate() {
        scaled.row_mut(i).scale_mut(s);
    }
    Ok(u * scaled)
}

/// Square banded matrix: `A[i][j] = 0` when `|i - j| > half_bandwidth`, the
/// remaining entries i.i.d. standard normal.
pub fn gen_banded(n: usize, half_bandwidth: usize, seed: u64) -> Result<DMatrix<f64>> {
    if half_bandwidth >= n {
        return Err(Error::BandwidthOutOfRange { half_bandwidth, n });
    }
    let mut rng = rng::stream(seed, streams::BANDED);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let lo = i.saturating_sub(half_bandwidth);
        let hi = (i + half_bandwidth).min(n - 1);
        for j in lo..=hi {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(a)
}

/// Minimum-norm solution `A⁺ b` of a consistent system. Fails with the
/// residual norm when `b` is not in the range of `A`.
pub fn min_norm_solution(system: &LinearSystem) -> Result<DVector<f64>> {
    let x = linalg::pinv_solve(system.a(), system.b(), PINV_RTOL);
    let defect = (system.a() * &x - system.b()).norm();
    if defect > FEASIBILITY_RTOL * system.b().norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InfeasibleSystem {
            residual_norm: defect,
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::numerical_rank;

    #[test]
    fn residual_of_zero_iterate_is_b() {
        let sys = LinearSystem::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        let r = sys.residual(&DVector::zeros(2)).unwrap();
        assert_eq!(r, DVector::from_vec(vec![1.0, 2.0]));
    }

    #[test]
    fn residual_at_solution_is_zero() {
        let sys = LinearSystem::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        let r = sys.residual(&DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn residual_single_row_hand_value() {
        let sys = LinearSystem::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![2.0]),
        )
        .unwrap();
        let r = sys.residual(&DVector::from_vec(vec![3.0, -1.0])).unwrap();
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn signed_residual_negates_residual() {
        let sys = make_consistent_system(gen_banded(6, 2, 9).unwrap(), 4);
        let x = DVector::from_fn(6, |i, _| i as f64 * 0.3 - 1.0);
        let r = sys.residual(&x).unwrap();
        let s = sys.signed_residual(&x).unwrap();
        assert!((r + s).norm() < 1e-14);
    }

    #[test]
    fn residual_rejects_bad_dimension() {
        let sys = LinearSystem::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert!(matches!(
            sys.residual(&DVector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn consistent_system_zero_matrix() {
        let sys = make_consistent_system(DMatrix::zeros(3, 2), 11);
        assert_eq!(sys.b().norm(), 0.0);
    }

    #[test]
    fn consistent_system_identity_matches_draw() {
        let sys = make_consistent_system(DMatrix::identity(3, 3), 5);
        assert_eq!(sys.b(), sys.x_star().unwrap());
    }

    #[test]
    fn consistent_system_reproducible() {
        let a = gen_banded(5, 1, 3).unwrap();
        let s1 = make_consistent_system(a.clone(), 42);
        let s2 = make_consistent_system(a, 42);
        assert_eq!(s1.b(), s2.b());
        assert_eq!(s1.x_star().unwrap(), s2.x_star().unwrap());
    }

    #[test]
    fn consistency_invariant_holds() {
        for seed in 0..5 {
            let a = gen_prescribed_svd(7, 5, &SpectrumSpec::geometric(5, 1e4, seed).unwrap())
                .unwrap();
            let sys = make_consistent_system(a, seed);
            let defect = (sys.a() * sys.x_star().unwrap() - sys.b()).norm();
            let scale = sys.a().norm() * sys.x_star().unwrap().norm() + sys.b().norm();
            assert!(defect <= 1e-12 * scale);
        }
    }

    #[test]
    fn prescribed_svd_orthogonal_case() {
        let spec = SpectrumSpec::new(vec![1.0, 1.0], 1).unwrap();
        let a = gen_prescribed_svd(2, 2, &spec).unwrap();
        let gram = &a * a.transpose();
        assert!(crate::linalg::max_abs(&(gram - DMatrix::identity(2, 2))) <= 1e-10);
    }

    #[test]
    fn prescribed_svd_matches_spectrum() {
        let spec = SpectrumSpec::new(vec![1.0, 1e-3, 1e-6], 2).unwrap();
        let a = gen_prescribed_svd(3, 3, &spec).unwrap();
        let got = a.singular_values();
        for (g, w) in got.iter().zip([1.0, 1e-3, 1e-6]) {
            assert!((g - w).abs() <= 1e-10 * w.max(1e-6));
        }
    }

    #[test]
    fn prescribed_svd_zero_value_drops_rank() {
        let spec = SpectrumSpec::new(vec![1.0, 0.5, 0.0], 3).unwrap();
        let a = gen_prescribed_svd(4, 3, &spec).unwrap();
        assert_eq!(numerical_rank(&a, FEASIBILITY_RTOL), 2);
    }

    #[test]
    fn prescribed_svd_rejects_wrong_length() {
        let spec = SpectrumSpec::new(vec![1.0], 0).unwrap();
        assert!(gen_prescribed_svd(3, 3, &spec).is_err());
    }

    #[test]
    fn banded_zero_bandwidth_is_diagonal() {
        let a = gen_banded(5, 0, 7).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(a[(i, j)], 0.0);
                } else {
                    assert!(a[(i, j)] != 0.0);
                }
            }
        }
    }

    #[test]
    fn banded_pattern_exact() {
        for seed in 0..4 {
            let q = 4;
            let a = gen_banded(20, q, seed).unwrap();
            for i in 0..20usize {
                for j in 0..20usize {
                    let inside = i.abs_diff(j) <= q;
                    assert_eq!(a[(i, j)] != 0.0, inside, "i={i}, j={j}");
                }
            }
        }
    }

    #[test]
    fn banded_full_cover_is_dense() {
        let a = gen_banded(3, 2, 5).unwrap();
        assert!(a.iter().all(|&v| v != 0.0));
    }

    #[test]
    fn banded_rejects_out_of_range() {
        assert!(matches!(
            gen_banded(3, 3, 0),
            Err(Error::BandwidthOutOfRange { .. })
        ));
    }

    #[test]
    fn min_norm_identity() {
        let sys = LinearSystem::new(
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        let x = min_norm_solution(&sys).unwrap();
        assert!((x - DVector::from_vec(vec![1.0, 2.0])).norm() < 1e-12);
    }

    #[test]
    fn min_norm_underdetermined() {
        let sys = LinearSystem::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_vec(vec![2.0]),
        )
        .unwrap();
        let x = min_norm_solution(&sys).unwrap();
        assert!((x - DVector::from_vec(vec![1.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn min_norm_rejects_inconsistent() {
        let sys = LinearSystem::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        assert!(matches!(
            min_norm_solution(&sys),
            Err(Error::InfeasibleSystem { .. })
        ));
    }

    #[test]
    fn min_norm_is_orthogonal_to_null_space() {
        let spec = SpectrumSpec::new(vec![2.0, 1.0, 0.0], 8).unwrap();
        let a = gen_prescribed_svd(3, 3, &spec).unwrap();
        let sys = make_consistent_system(a.clone(), 9);
        // The generated b = A x* is consistent by construction.
        let x = min_norm_solution(&sys).unwrap();
        // x ⟂ null(A): projecting back through the pseudoinverse keeps x.
        let back = crate::linalg::pinv_solve(&a, &(&a * &x), PINV_RTOL);
        assert!((back - &x).norm() <= 1e-10 * x.norm());
    }
}
