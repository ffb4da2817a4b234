//! Sample-set discrepancies and Gaussian summaries of particle clouds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::median_heuristic;
use crate::linalg::{min_eigenvalue, sq_dist, sym_sqrt, symmetrize};
use crate::particles::ParticleSet;

/// Added to fitted covariances.
pub const FIT_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MmdEstimator {
    /// Biased V-statistic; never negative.
    VStat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdEstimate {
    /// The MMD itself (not squared).
    pub value: f64,
    pub bandwidth: f64,
    pub estimator: MmdEstimator,
}

fn mean_kernel(a: &ParticleSet, b: &ParticleSet, s2: f64) -> f64 {
    let mut total = 0.0;
    for x in a.iter() {
        for y in b.iter() {
            total += (-sq_dist(x, y) / s2).exp();
        }
    }
    total / (a.len() * b.len()) as f64
}

/// Gaussian-kernel MMD between two sample sets. The bandwidth defaults to the
/// median pairwise distance over `a ∪ b`.
pub fn mmd(a: &ParticleSet, b: &ParticleSet, bandwidth: Option<f64>) -> Result<MmdEstimate> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("mmd needs two nonempty sets"));
    }
    check_dim(a.dim(), b.dim())?;
    let bw = match bandwidth {
        Some(b) if b > 0.0 && b.is_finite() => b,
        Some(b) => return Err(Error::invalid(format!("bandwidth must be positive, got {b}"))),
        None => median_heuristic(a, b)?,
    };
    let s2 = 2.0 * bw * bw;
    let sq = mean_kernel(a, a, s2) + mean_kernel(b, b, s2) - 2.0 * mean_kernel(a, b, s2);
    Ok(MmdEstimate {
        value: sq.max(0.0).sqrt(),
        bandwidth: bw,
        estimator: MmdEstimator::VStat,
    })
}

/// Sample mean and `1/n` covariance (plus a tiny jitter).
pub fn fit_gaussian(points: &ParticleSet) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (n, d) = (points.len(), points.dim());
    if n < d + 1 {
        return Err(Error::invalid(format!("fit_gaussian needs at least {} points, got {n}", d + 1)));
    }
    let mean = points.mean();
    let mut cov = DMatrix::zeros(d, d);
    for x in points.iter() {
        let c = DVector::from_fn(d, |i, _| x[i] - mean[i]);
        cov.ger(1.0, &c, &c, 1.0);
    }
    cov /= n as f64;
    symmetrize(&mut cov);
    for i in 0..d {
        cov[(i, i)] += FIT_JITTER;
    }
    Ok((mean, cov))
}

/// Bures–Wasserstein (2-Wasserstein) distance between two Gaussians.
pub fn gaussian_w2(
    mean1: &DVector<f64>,
    cov1: &DMatrix<f64>,
    mean2: &DVector<f64>,
    cov2: &DMatrix<f64>,
) -> Result<f64> {
    let d = mean1.len();
    check_dim(d, mean2.len())?;
    for c in [cov1, cov2] {
        if c.nrows() != d || c.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: c.nrows() });
        }
        if !c.iter().all(|v| v.is_finite()) || min_eigenvalue(c) <= 0.0 {
            return Err(Error::invalid("gaussian_w2 needs positive definite covariances"));
        }
    }
    let r2 = sym_sqrt(cov2);
    let mut inner = &r2 * cov1 * &r2;
    symmetrize(&mut inner);
    let cross = sym_sqrt(&inner);
    let trace = cov1.trace() + cov2.trace() - 2.0 * cross.trace();
    Ok(((mean1 - mean2).norm_squared() + trace).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mmd_singletons_by_hand() {
        let a = ParticleSet::from_rows(&[[0.0]]).unwrap();
        let b = ParticleSet::from_rows(&[[1.3]]).unwrap();
        let m = mmd(&a, &b, Some(0.7)).unwrap();
        let expected = (2.0 - 2.0 * (-1.3f64 * 1.3 / (2.0 * 0.49)).exp()).sqrt();
        assert!((m.value - expected).abs() < 1e-14);
    }

    #[test]
    fn mmd_identity_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ParticleSet::standard_normal(30, 3, &mut rng);
        let b = ParticleSet::standard_normal(25, 3, &mut rng);
        assert_eq!(mmd(&a, &a, None).unwrap().value, 0.0);
        let (ab, ba) = (mmd(&a, &b, None).unwrap(), mmd(&b, &a, None).unwrap());
        assert_eq!(ab.bandwidth, ba.bandwidth);
        assert!((ab.value - ba.value).abs() < 1e-12);
        assert!(ab.value > 0.0);
        assert!(mmd(&a, &ParticleSet::empty(3), None).is_err());
    }

    #[test]
    fn fit_examples() {
        let p = ParticleSet::from_rows(&[[-1.0], [1.0]]).unwrap();
        let (m, c) = fit_gaussian(&p).unwrap();
        assert_eq!(m[0], 0.0);
        assert!((c[(0, 0)] - 1.0).abs() < 1e-8);
        let tiny = ParticleSet::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(fit_gaussian(&tiny).is_err());
    }

    #[test]
    fn fit_affine_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = ParticleSet::standard_normal(200, 2, &mut rng);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -1.0, 1.0]);
        let b = DVector::from_vec(vec![3.0, -1.0]);
        let y = x.map_points(|s, o| {
            let v = &a * DVector::from_column_slice(s) + &b;
            o.copy_from_slice(v.as_slice());
        });
        let (mx, cx) = fit_gaussian(&x).unwrap();
        let (my, cy) = fit_gaussian(&y).unwrap();
        assert!((&a * &mx + &b - &my).norm() / my.norm() < 1e-10);
        // the fixed jitter is not transformed; compare with it removed
        let strip = |c: &DMatrix<f64>| c - DMatrix::identity(2, 2) * FIT_JITTER;
        let pred = &a * strip(&cx) * a.transpose();
        assert!((pred - strip(&cy)).norm() / cy.norm() < 1e-10);
    }

    #[test]
    fn w2_examples() {
        let z = DVector::zeros(1);
        let one = DMatrix::identity(1, 1);
        let four = DMatrix::from_element(1, 1, 4.0);
        assert!((gaussian_w2(&z, &one, &z, &four).unwrap() - 1.0).abs() < 1e-12);
        let m = DVector::from_vec(vec![3.0, 4.0]);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(gaussian_w2(&DVector::zeros(2), &c, &m, &c).unwrap() - 5.0 < 1e-7);
        assert!(gaussian_w2(&m, &c, &m, &c).unwrap() < 1e-7);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(gaussian_w2(&m, &bad, &m, &c).is_err());
    }
}
