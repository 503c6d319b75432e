//! Orthogonalization kernels used to apply the implicit projector stored as
//! a set of orthonormal vectors.

use nalgebra::DVector;

use crate::linalg::vdot;

/// Which kernel a partial-memory solver uses to project out its buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GsKind {
    Modified,
    TwiceIterated,
}

/// Sequential modified Gram-Schmidt: subtract each stored direction from the
/// running remainder in turn.
pub fn modified_gram_schmidt<'a, I>(q: &DVector<f64>, basis: I) -> DVector<f64>
where
    I: IntoIterator<Item = &'a DVector<f64>>,
{
    let mut t = q.clone();
    for z in basis {
        let c = vdot(z, &t);
        t.axpy(-c, z, 1.0);
    }
    t
}

/// Two passes of classical Gram-Schmidt. Each pass computes every inner
/// product against the same remainder before subtracting, which is the
/// communication-friendly pattern; the second pass scrubs the first pass's
/// rounding. In exact arithmetic one pass already equals the projection.
pub fn twice_iterated_gram_schmidt<'a, I>(q: &DVector<f64>, basis: I) -> DVector<f64>
where
    I: IntoIterator<Item = &'a DVector<f64>> + Clone,
{
    let mut t = q.clone();
    for _pass in 0..2 {
        let coeffs: Vec<f64> = basis.clone().into_iter().map(|z| vdot(z, &t)).collect();
        for (z, c) in basis.clone().into_iter().zip(coeffs) {
            t.axpy(-c, z, 1.0);
        }
    }
    t
}

pub fn project_out(q: &DVector<f64>, basis: &[DVector<f64>], kind: GsKind) -> DVector<f64> {
    match kind {
        GsKind::Modified => modified_gram_schmidt(q, basis),
        GsKind::TwiceIterated => twice_iterated_gram_schmidt(q, basis),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vnorm;
    use nalgebra::DMatrix;
    use rand::Rng;

    fn random_orthonormal(d: usize, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = crate::rng::stream(seed, 50);
        let g = DMatrix::from_fn(d, count, |_, _| rng.random::<f64>() - 0.5);
        let q = g.qr().q();
        (0..count).map(|j| q.column(j).into_owned()).collect()
    }

    #[test]
    fn empty_basis_returns_input() {
        let q = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(modified_gram_schmidt(&q, []), q);
        assert_eq!(twice_iterated_gram_schmidt(&q, &[] as &[DVector<f64>; 0]), q);
    }

    #[test]
    fn vector_in_span_is_annihilated() {
        let zs = random_orthonormal(6, 3, 1);
        let q = &zs[0] * 0.4 - &zs[1] * 1.3 + &zs[2] * 0.2;
        let out = modified_gram_schmidt(&q, &zs);
        assert!(vnorm(&out) <= 1e-8 * vnorm(&q));
        let out = twice_iterated_gram_schmidt(&q, &zs);
        assert!(vnorm(&out) <= 1e-8 * vnorm(&q));
    }

    #[test]
    fn hand_projection() {
        let q = DVector::from_vec(vec![1.0, 1.0]);
        let z = DVector::from_vec(vec![1.0, 0.0]);
        let out = modified_gram_schmidt(&q, [&z]);
        assert!((out - DVector::from_vec(vec![0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn orthogonal_input_passes_through() {
        let zs = random_orthonormal(5, 2, 2);
        let mut q = DVector::from_vec(vec![0.3, -1.0, 0.4, 0.9, 0.1]);
        // Make q exactly orthogonal to the basis first.
        q = modified_gram_schmidt(&q, &zs);
        let out = twice_iterated_gram_schmidt(&q, &zs);
        assert!((out - &q).norm() <= 1e-12 * vnorm(&q));
    }

    #[test]
    fn both_kernels_match_dense_projector() {
        let d = 20;
        let zs = random_orthonormal(d, 5, 3);
        let mut rng = crate::rng::stream(9, 51);
        let q = DVector::from_fn(d, |_, _| rng.random::<f64>() - 0.5);
        let mut proj = DMatrix::identity(d, d);
        for z in &zs {
            proj -= z * z.transpose();
        }
        let expect = &proj * &q;
        let mgs = modified_gram_schmidt(&q, &zs);
        let tigs = twice_iterated_gram_schmidt(&q, &zs);
        assert!((&mgs - &expect).norm() <= 1e-10);
        assert!((&tigs - &expect).norm() <= 1e-10);
        assert!((mgs - tigs).norm() <= 1e-8 * vnorm(&q));
    }

    #[test]
    fn output_is_orthogonal_to_every_basis_vector() {
        let zs = random_orthonormal(8, 4, 4);
        let mut rng = crate::rng::stream(10, 52);
        for _ in 0..20 {
            let q = DVector::from_fn(8, |_, _| rng.random::<f64>() - 0.5);
            for kind in [GsKind::Modified, GsKind::TwiceIterated] {
                let out = project_out(&q, &zs, kind);
                for z in &zs {
                    assert!(vdot(z, &out).abs() <= 1e-8 * vnorm(&q));
                }
            }
        }
    }
}
