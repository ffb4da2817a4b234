//! Sufficient-statistic feature maps and the manifold quantities estimated
//! from particles: mean statistics and Fisher matrices.
//!
//! A [`FeatureMap`] fixes the exponential family `exp(<θ, T(x)> - A(θ))`.
//! Nothing here ever evaluates the log-normalizer.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{cholesky_with_jitter, sq_dist, symmetrize};
use crate::particles::ParticleSet;
use crate::stein::SteinFeatureMap;

/// Default relative Fisher jitter (multiplied by `trace / dT` of the raw covariance).
pub const DEFAULT_RELATIVE_JITTER: f64 = 1e-6;
/// Absolute ceiling used when escalating jitter on an unscaled matrix.
pub const JITTER_CAP: f64 = 1e-2;
/// Default number of RBF centers drawn from the initial particles.
pub const DEFAULT_NUM_CENTERS: usize = 50;

/// A sufficient statistic `T: R^d -> R^dT` with analytic Jacobian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FeatureMap {
    /// `[x, vech(x x^T)]`, the vech taken row-major over the upper triangle
    /// (`x1², x1x2, …, x1xd, x2², …`).
    GaussianQuadratic { input_dim: usize },
    /// `[k(x, b_1), …, k(x, b_m)]` with `k(x, b) = exp(-|x-b|² / (2σ²))`.
    RbfFeatures { centers: Vec<Vec<f64>>, bandwidth: f64 },
    /// RBF features followed by `x_i x_j` for every listed index pair.
    InformedPairwise {
        input_dim: usize,
        centers: Vec<Vec<f64>>,
        bandwidth: f64,
        pairs: Vec<(usize, usize)>,
    },
    /// Stein features `S_p f` built from a base map and a target score.
    SteinFeatures(SteinFeatureMap),
    /// Affine map `W x + c`; `offset` defaults to zero.
    CustomLinear {
        weights: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
    },
}

fn rbf(x: &[f64], b: &[f64], bandwidth: f64) -> f64 {
    (-sq_dist(x, b) / (2.0 * bandwidth * bandwidth)).exp()
}

impl FeatureMap {
    pub fn gaussian_quadratic(input_dim: usize) -> Result<Self> {
        let m = FeatureMap::GaussianQuadratic { input_dim };
        m.validate()?;
        Ok(m)
    }

    pub fn rbf(centers: &ParticleSet, bandwidth: f64) -> Result<Self> {
        let m = FeatureMap::RbfFeatures {
            centers: centers.iter().map(|c| c.to_vec()).collect(),
            bandwidth,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn informed_pairwise(
        centers: &ParticleSet,
        bandwidth: f64,
        pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let m = FeatureMap::InformedPairwise {
            input_dim: centers.dim(),
            centers: centers.iter().map(|c| c.to_vec()).collect(),
            bandwidth,
            pairs,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn linear(weights: &DMatrix<f64>) -> Result<Self> {
        Self::affine(weights, None)
    }

    pub fn affine(weights: &DMatrix<f64>, offset: Option<&DVector<f64>>) -> Result<Self> {
        let m = FeatureMap::CustomLinear {
            weights: (0..weights.nrows())
                .map(|r| weights.row(r).iter().cloned().collect())
                .collect(),
            offset: offset.map(|o| o.iter().cloned().collect()),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn stein(map: SteinFeatureMap) -> Result<Self> {
        let m = FeatureMap::SteinFeatures(map);
        m.validate()?;
        Ok(m)
    }

    /// Checks the structural invariants of the map.
    pub fn validate(&self) -> Result<()> {
        let rect = |rows: &[Vec<f64>], what: &str| -> Result<usize> {
            let d = rows.first().map(|r| r.len()).unwrap_or(0);
            if rows.iter().any(|r| r.len() != d) {
                return Err(Error::invalid(format!("ragged {what}")));
            }
            Ok(d)
        };
        match self {
            FeatureMap::GaussianQuadratic { input_dim } => {
                if *input_dim == 0 {
                    return Err(Error::invalid("input_dim must be positive"));
                }
            }
            FeatureMap::RbfFeatures { centers, bandwidth } => {
                if centers.is_empty() {
                    return Err(Error::invalid("RBF features need at least one center"));
                }
                if rect(centers, "centers")? == 0 {
                    return Err(Error::invalid("centers must have positive dimension"));
                }
                if !(*bandwidth > 0.0 && bandwidth.is_finite()) {
                    return Err(Error::invalid("bandwidth must be positive"));
                }
            }
            FeatureMap::InformedPairwise {
                input_dim,
                centers,
                bandwidth,
                pairs,
            } => {
                if *input_dim == 0 {
                    return Err(Error::invalid("input_dim must be positive"));
                }
                if centers.is_empty() && pairs.is_empty() {
                    return Err(Error::invalid("informed map has no features"));
                }
                if !centers.is_empty() {
                    check_dim(*input_dim, rect(centers, "centers")?)?;
                }
                if !(*bandwidth > 0.0 && bandwidth.is_finite()) {
                    return Err(Error::invalid("bandwidth must be positive"));
                }
                if pairs.iter().any(|&(i, j)| i >= *input_dim || j >= *input_dim) {
                    return Err(Error::invalid("pair index out of range"));
                }
            }
            FeatureMap::SteinFeatures(s) => s.validate()?,
            FeatureMap::CustomLinear { weights, offset } => {
                if weights.is_empty() || rect(weights, "weights")? == 0 {
                    return Err(Error::invalid("linear map needs a non-empty weight matrix"));
                }
                if let Some(o) = offset {
                    check_dim(weights.len(), o.len())?;
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::GaussianQuadratic { input_dim } => *input_dim,
            FeatureMap::RbfFeatures { centers, .. } => centers[0].len(),
            FeatureMap::InformedPairwise { input_dim, .. } => *input_dim,
            FeatureMap::SteinFeatures(s) => s.input_dim(),
            FeatureMap::CustomLinear { weights, .. } => weights[0].len(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            FeatureMap::GaussianQuadratic { input_dim: d } => d + d * (d + 1) / 2,
            FeatureMap::RbfFeatures { centers, .. } => centers.len(),
            FeatureMap::InformedPairwise { centers, pairs, .. } => centers.len() + pairs.len(),
            FeatureMap::SteinFeatures(s) => s.feature_dim(),
            FeatureMap::CustomLinear { weights, .. } => weights.len(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FeatureMap::GaussianQuadratic { .. } => "GaussianQuadratic",
            FeatureMap::RbfFeatures { .. } => "RbfFeatures",
            FeatureMap::InformedPairwise { .. } => "InformedPairwise",
            FeatureMap::SteinFeatures(_) => "SteinFeatures",
            FeatureMap::CustomLinear { .. } => "CustomLinear",
        }
    }

    /// `T(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.feature_dim());
        match self {
            FeatureMap::GaussianQuadratic { input_dim: d } => {
                out.rows_mut(0, *d).copy_from_slice(x);
                let mut r = *d;
                for i in 0..*d {
                    for j in i..*d {
                        out[r] = x[i] * x[j];
                        r += 1;
                    }
                }
            }
            FeatureMap::RbfFeatures { centers, bandwidth } => {
                for (o, c) in out.iter_mut().zip(centers) {
                    *o = rbf(x, c, *bandwidth);
                }
            }
            FeatureMap::InformedPairwise {
                centers,
                bandwidth,
                pairs,
                ..
            } => {
                for (r, c) in centers.iter().enumerate() {
                    out[r] = rbf(x, c, *bandwidth);
                }
                let off = centers.len();
                for (r, &(i, j)) in pairs.iter().enumerate() {
                    out[off + r] = x[i] * x[j];
                }
            }
            FeatureMap::SteinFeatures(s) => return s.eval_unchecked(x),
            FeatureMap::CustomLinear { weights, offset } => {
                for (r, w) in weights.iter().enumerate() {
                    out[r] = crate::linalg::dot(w, x) + offset.as_ref().map_or(0.0, |o| o[r]);
                }
            }
        }
        out
    }

    /// `∇T(x)`, a `dT x d` matrix whose row `r` is the gradient of feature `r`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.jacobian_unchecked(x))
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.input_dim();
        let mut jac = DMatrix::zeros(self.feature_dim(), d);
        let rbf_rows = |jac: &mut DMatrix<f64>, centers: &[Vec<f64>], bw: f64| {
            let s2 = bw * bw;
            for (r, c) in centers.iter().enumerate() {
                let k = rbf(x, c, bw);
                for a in 0..d {
                    jac[(r, a)] = k * (c[a] - x[a]) / s2;
                }
            }
        };
        match self {
            FeatureMap::GaussianQuadratic { .. } => {
                for a in 0..d {
                    jac[(a, a)] = 1.0;
                }
                let mut r = d;
                for i in 0..d {
                    for j in i..d {
                        jac[(r, i)] += x[j];
                        jac[(r, j)] += x[i];
                        r += 1;
                    }
                }
            }
            FeatureMap::RbfFeatures { centers, bandwidth } => rbf_rows(&mut jac, centers, *bandwidth),
            FeatureMap::InformedPairwise {
                centers,
                bandwidth,
                pairs,
                ..
            } => {
                rbf_rows(&mut jac, centers, *bandwidth);
                let off = centers.len();
                for (r, &(i, j)) in pairs.iter().enumerate() {
                    jac[(off + r, i)] += x[j];
                    jac[(off + r, j)] += x[i];
                }
            }
            FeatureMap::SteinFeatures(s) => return s.jacobian_unchecked(x),
            FeatureMap::CustomLinear { weights, .. } => {
                for (r, w) in weights.iter().enumerate() {
                    for a in 0..d {
                        jac[(r, a)] = w[a];
                    }
                }
            }
        }
        jac
    }

    /// Per-feature Hessians (`dT` matrices of size `d x d`).
    ///
    /// Stein features would need third derivatives of the base map and are rejected.
    pub fn hessians(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        check_dim(self.input_dim(), x.len())?;
        let d = self.input_dim();
        let mut out = vec![DMatrix::zeros(d, d); self.feature_dim()];
        let rbf_hess = |out: &mut [DMatrix<f64>], centers: &[Vec<f64>], bw: f64| {
            let s2 = bw * bw;
            for (h, c) in out.iter_mut().zip(centers) {
                let k = rbf(x, c, bw);
                for a in 0..d {
                    for b in 0..d {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        h[(a, b)] = k * ((x[a] - c[a]) * (x[b] - c[b]) / (s2 * s2) - delta / s2);
                    }
                }
            }
        };
        let pair_hess = |h: &mut DMatrix<f64>, i: usize, j: usize| {
            h[(i, j)] += 1.0;
            h[(j, i)] += 1.0;
        };
        match self {
            FeatureMap::GaussianQuadratic { .. } => {
                let mut r = d;
                for i in 0..d {
                    for j in i..d {
                        pair_hess(&mut out[r], i, j);
                        r += 1;
                    }
                }
            }
            FeatureMap::RbfFeatures { centers, bandwidth } => rbf_hess(&mut out, centers, *bandwidth),
            FeatureMap::InformedPairwise {
                centers,
                bandwidth,
                pairs,
                ..
            } => {
                rbf_hess(&mut out, centers, *bandwidth);
                let off = centers.len();
                for (r, &(i, j)) in pairs.iter().enumerate() {
                    pair_hess(&mut out[off + r], i, j);
                }
            }
            FeatureMap::SteinFeatures(_) => {
                return Err(Error::invalid(
                    "Stein features cannot serve as a base map (second derivatives unavailable)",
                ))
            }
            FeatureMap::CustomLinear { .. } => {}
        }
        Ok(out)
    }

    /// `n x dT` matrix of features, one row per point.
    pub fn features(&self, points: &ParticleSet) -> Result<DMatrix<f64>> {
        check_dim(self.input_dim(), points.dim())?;
        let mut out = DMatrix::zeros(points.len(), self.feature_dim());
        for (i, x) in points.iter().enumerate() {
            out.row_mut(i).tr_copy_from(&self.eval_unchecked(x));
        }
        Ok(out)
    }

    /// Arithmetic mean of `T` over the points.
    pub fn mean_statistic(&self, points: &ParticleSet) -> Result<DVector<f64>> {
        if points.is_empty() {
            return Err(Error::invalid("mean of T over an empty point set"));
        }
        check_dim(self.input_dim(), points.dim())?;
        let mut acc = DVector::zeros(self.feature_dim());
        for x in points.iter() {
            acc += self.eval_unchecked(x);
        }
        Ok(acc / points.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: FeatureMap = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

/// An estimate of `Cov_q[T(x)]` with the jitter needed to factor it.
#[derive(Debug, Clone)]
pub struct FisherMatrix {
    /// Regularized matrix (covariance plus `jitter_applied * I`).
    pub matrix: DMatrix<f64>,
    pub jitter_applied: f64,
    factor: Cholesky<f64, Dyn>,
}

impl FisherMatrix {
    /// Factor `cov + jitter*I`, escalating the jitter up to `cap`.
    pub fn from_covariance(mut cov: DMatrix<f64>, jitter: f64, cap: f64) -> Result<Self> {
        if !cov.is_square() {
            return Err(Error::invalid("Fisher matrix must be square"));
        }
        symmetrize(&mut cov);
        let (matrix, factor, jitter_applied) = cholesky_with_jitter(&cov, jitter, cap.max(jitter))
            .ok_or(Error::SingularFisher { jitter: cap.max(jitter) })?;
        Ok(Self {
            matrix,
            jitter_applied,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Lower-triangular Cholesky factor `L` with `F = L Lᵀ`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.factor.l()
    }

    /// `F⁻¹ v`.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(v)
    }

    /// `vᵀ F⁻¹ v`.
    pub fn inverse_quadratic_form(&self, v: &DVector<f64>) -> f64 {
        let w = self
            .factor
            .l_dirty()
            .solve_lower_triangular(v)
            .expect("Cholesky factor has a positive diagonal");
        w.norm_squared()
    }
}

/// Empirical covariance `(1/n) Σ (T(x_i) - μ)(T(x_i) - μ)ᵀ`, exactly symmetric.
pub fn feature_covariance(map: &FeatureMap, points: &ParticleSet) -> Result<DMatrix<f64>> {
    let feats = map.features(points)?;
    Ok(centered_covariance(&feats))
}

pub(crate) fn centered_covariance(feats: &DMatrix<f64>) -> DMatrix<f64> {
    let n = feats.nrows() as f64;
    let mean = feats.row_mean();
    let mut centered = feats.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let mut cov = centered.transpose() * &centered / n;
    symmetrize(&mut cov);
    cov
}

/// Fisher estimate from particles with an absolute jitter.
///
/// The jitter is escalated ×10 (capped at `max(1e-2, jitter)`) until the
/// Cholesky factorization succeeds.
pub fn fisher_estimate(map: &FeatureMap, points: &ParticleSet, jitter: f64) -> Result<FisherMatrix> {
    if points.len() < 2 {
        return Err(Error::invalid("Fisher estimate needs at least two points"));
    }
    if !(jitter >= 0.0) {
        return Err(Error::invalid("jitter must be nonnegative"));
    }
    let cov = feature_covariance(map, points)?;
    FisherMatrix::from_covariance(cov, jitter, JITTER_CAP)
}

/// Scale used to make jitter relative: `trace(cov) / dT`, or 1 for a zero matrix.
pub fn jitter_scale(cov: &DMatrix<f64>) -> f64 {
    let s = cov.trace() / cov.nrows() as f64;
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// Fisher estimate with jitter `relative * trace/dT` (cap scaled the same way).
pub fn fisher_estimate_scaled(
    map: &FeatureMap,
    points: &ParticleSet,
    relative: f64,
) -> Result<FisherMatrix> {
    if points.len() < 2 {
        return Err(Error::invalid("Fisher estimate needs at least two points"));
    }
    let cov = feature_covariance(map, points)?;
    let scale = jitter_scale(&cov);
    FisherMatrix::from_covariance(cov, relative * scale, JITTER_CAP * scale)
}

/// Seeded uniform subset (without replacement) of `count` points, used as RBF centers.
pub fn select_centers(points: &ParticleSet, count: usize, seed: u64) -> ParticleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = count.min(points.len());
    let mut idx = rand::seq::index::sample(&mut rng, points.len(), count).into_vec();
    idx.sort_unstable();
    points.select(&idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn fd_jacobian(map: &FeatureMap, x: &[f64], h: f64) -> DMatrix<f64> {
        let d = x.len();
        let mut jac = DMatrix::zeros(map.feature_dim(), d);
        for a in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[a] += h;
            xm[a] -= h;
            let col = (map.eval(&xp).unwrap() - map.eval(&xm).unwrap()) / (2.0 * h);
            jac.set_column(a, &col);
        }
        jac
    }

    fn sample_maps() -> Vec<FeatureMap> {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let centers = ParticleSet::standard_normal(6, 3, &mut rng);
        vec![
            FeatureMap::gaussian_quadratic(3).unwrap(),
            FeatureMap::rbf(&centers, 1.3).unwrap(),
            FeatureMap::informed_pairwise(&centers, 0.9, vec![(0, 1), (2, 2)]).unwrap(),
            FeatureMap::affine(
                &DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0]),
                Some(&DVector::from_vec(vec![1.0, -1.0])),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn quadratic_values() {
        let m = FeatureMap::gaussian_quadratic(1).unwrap();
        assert_eq!(m.eval(&[0.0]).unwrap().as_slice(), &[0.0, 0.0]);
        let m2 = FeatureMap::gaussian_quadratic(2).unwrap();
        assert_eq!(m2.eval(&[1.0, 2.0]).unwrap().as_slice(), &[1.0, 2.0, 1.0, 2.0, 4.0]);
        let j = m.jacobian(&[3.0]).unwrap();
        assert_eq!(j.as_slice(), &[1.0, 6.0]);
    }

    #[test]
    fn rbf_at_center_is_one() {
        let c = ParticleSet::from_rows(&[[0.3, -0.7]]).unwrap();
        let m = FeatureMap::rbf(&c, 0.4).unwrap();
        assert_eq!(m.eval(&[0.3, -0.7]).unwrap()[0], 1.0);
    }

    #[test]
    fn linear_jacobian_is_weights() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let m = FeatureMap::linear(&w).unwrap();
        assert_eq!(m.jacobian(&[5.0, -1.0]).unwrap(), w);
        assert_eq!(m.eval(&[1.0, 1.0]).unwrap().as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = FeatureMap::gaussian_quadratic(2).unwrap();
        assert!(matches!(m.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(m.jacobian(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = ParticleSet::standard_normal(20, 3, &mut rng);
        for map in sample_maps() {
            for x in pts.iter() {
                let a = map.jacobian(x).unwrap();
                let f = fd_jacobian(&map, x, 1e-5);
                let err = (&a - &f).norm() / a.norm().max(1e-12);
                assert!(err < 1e-5, "{} rel err {err}", map.kind_name());
            }
        }
    }

    #[test]
    fn hessians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = ParticleSet::standard_normal(5, 3, &mut rng);
        let h = 1e-5;
        for map in sample_maps() {
            for x in pts.iter() {
                let hs = map.hessians(x).unwrap();
                for a in 0..3 {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[a] += h;
                    xm[a] -= h;
                    let col = (map.jacobian(&xp).unwrap() - map.jacobian(&xm).unwrap()) / (2.0 * h);
                    for (r, hr) in hs.iter().enumerate() {
                        for b in 0..3 {
                            assert!((hr[(b, a)] - col[(r, b)]).abs() < 1e-6);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mean_statistic_cases() {
        let m = FeatureMap::gaussian_quadratic(1).unwrap();
        let pts = ParticleSet::from_rows(&[[-1.0], [1.0]]).unwrap();
        assert_eq!(m.mean_statistic(&pts).unwrap().as_slice(), &[0.0, 1.0]);
        let one = ParticleSet::from_rows(&[[2.5]]).unwrap();
        assert_eq!(m.mean_statistic(&one).unwrap(), m.eval(&[2.5]).unwrap());
        assert!(m.mean_statistic(&ParticleSet::empty(1)).is_err());
    }

    #[test]
    fn gaussian_moments_by_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let pts = ParticleSet::standard_normal(100_000, 1, &mut rng);
        let m = FeatureMap::gaussian_quadratic(1).unwrap();
        let mean = m.mean_statistic(&pts).unwrap();
        assert!((mean[0]).abs() < 0.02 && (mean[1] - 1.0).abs() < 0.02);
        let f = fisher_estimate(&m, &pts, 0.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert!((&f.matrix - expected).abs().max() < 0.05);
    }

    #[test]
    fn identical_points_give_jitter_identity() {
        let pts = ParticleSet::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        let m = FeatureMap::gaussian_quadratic(2).unwrap();
        let f = fisher_estimate(&m, &pts, 1e-6).unwrap();
        let expected = DMatrix::identity(5, 5) * 1e-6;
        assert!((&f.matrix - expected).abs().max() < 1e-18);
        assert_eq!(f.jitter_applied, 1e-6);
    }

    #[test]
    fn fisher_needs_two_points() {
        let m = FeatureMap::gaussian_quadratic(1).unwrap();
        let one = ParticleSet::from_rows(&[[1.0]]).unwrap();
        assert!(fisher_estimate(&m, &one, 1e-6).is_err());
    }

    #[test]
    fn informed_without_pairs_equals_rbf() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = ParticleSet::standard_normal(4, 2, &mut rng);
        let a = FeatureMap::rbf(&c, 0.8).unwrap();
        let b = FeatureMap::informed_pairwise(&c, 0.8, vec![]).unwrap();
        for x in ParticleSet::standard_normal(10, 2, &mut rng).iter() {
            assert_eq!(a.eval(x).unwrap(), b.eval(x).unwrap());
            assert_eq!(a.jacobian(x).unwrap(), b.jacobian(x).unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        for map in sample_maps() {
            let s = map.to_json().unwrap();
            assert_eq!(FeatureMap::from_json(&s).unwrap(), map);
        }
        assert!(FeatureMap::from_json(r#"{"kind":"GaussianQuadratic","input_dim":2,"x":1}"#).is_err());
        assert!(FeatureMap::from_json(r#"{"kind":"RbfFeatures","centers":[],"bandwidth":1.0}"#).is_err());
    }

    #[test]
    fn centers_are_seeded_subset() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = ParticleSet::standard_normal(30, 2, &mut rng);
        let a = select_centers(&pts, 10, 42);
        let b = select_centers(&pts, 10, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert_eq!(select_centers(&pts, 100, 0).len(), 30);
    }
}
