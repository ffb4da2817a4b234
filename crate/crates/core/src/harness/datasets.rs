//! Seeded synthetic datasets.

use nalgebra::{DMatrix, DVector};
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_with_jitter, min_eigenvalue};
use crate::particles::ParticleSet;

/// Smallest eigenvalue a generated precision matrix is loaded up to.
pub const GGM_MIN_EIGENVALUE: f64 = 0.1;

/// Draw from `Σ_k w_k N(means[k], I)`.
pub fn gen_gaussian_mixture(
    dim: usize,
    means: &[Vec<f64>],
    weights: &[f64],
    n: usize,
    seed: u64,
) -> Result<ParticleSet> {
    if dim == 0 {
        return Err(Error::invalid("dim must be positive"));
    }
    if means.is_empty() || means.len() != weights.len() {
        return Err(Error::invalid("need one weight per mixture mean"));
    }
    if means.iter().any(|m| m.len() != dim) {
        return Err(Error::invalid(format!("mixture means must have length {dim}")));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("mixture weights must be nonnegative and sum to 1"));
    }
    let pick = WeightedIndex::new(weights).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let k = pick.sample(&mut rng);
        for m in &means[k] {
            let z: f64 = rng.sample(StandardNormal);
            data.push(m + z);
        }
    }
    ParticleSet::from_flat(data, dim)
}

/// `0.5 N(-a·1, I) + 0.5 N(a·1, I)`.
pub fn gen_symmetric_bimodal(dim: usize, offset: f64, n: usize, seed: u64) -> Result<ParticleSet> {
    gen_gaussian_mixture(dim, &[vec![-offset; dim], vec![offset; dim]], &[0.5, 0.5], n, seed)
}

/// 3-d S-curve `(sin u, sign(u)(cos u - 1), v)` with `u ~ U[-3π/2, 3π/2]`,
/// `v ~ U[0, 2]` and isotropic Gaussian noise.
pub fn gen_scurve(n: usize, noise_sd: f64, seed: u64) -> Result<ParticleSet> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::invalid("noise_sd must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ud = Uniform::new(-1.5 * std::f64::consts::PI, 1.5 * std::f64::consts::PI).expect("finite range");
    let vd = Uniform::new(0.0, 2.0).expect("finite range");
    let mut data = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let u: f64 = ud.sample(&mut rng);
        let v: f64 = vd.sample(&mut rng);
        let clean = [u.sin(), u.signum() * (u.cos() - 1.0), v];
        for c in clean {
            let z: f64 = rng.sample(StandardNormal);
            data.push(c + noise_sd * z);
        }
    }
    ParticleSet::from_flat(data, 3)
}

/// A Gaussian graphical model `N(0, Θ⁻¹)` on a random graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GgmSpec {
    pub dim: usize,
    pub edge_prob: f64,
    pub edge_value: f64,
    /// Precision matrix, row-major.
    pub precision: Vec<Vec<f64>>,
}

impl GgmSpec {
    /// Sample an Erdős–Rényi graph, put `edge_value` on its edges and 1 on the
    /// diagonal, then add `(0.1 - λ_min)·I` if the smallest eigenvalue is below 0.1.
    pub fn random(dim: usize, edge_prob: f64, edge_value: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(Error::invalid("edge_prob must lie in [0, 1]"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = DMatrix::identity(dim, dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if rng.random::<f64>() < edge_prob {
                    theta[(i, j)] = edge_value;
                    theta[(j, i)] = edge_value;
                }
            }
        }
        let lmin = min_eigenvalue(&theta);
        if lmin < GGM_MIN_EIGENVALUE {
            for i in 0..dim {
                theta[(i, i)] += GGM_MIN_EIGENVALUE - lmin;
            }
        }
        Ok(Self::from_precision(&theta, edge_prob, edge_value))
    }

    pub fn from_precision(theta: &DMatrix<f64>, edge_prob: f64, edge_value: f64) -> Self {
        Self {
            dim: theta.nrows(),
            edge_prob,
            edge_value,
            precision: theta.row_iter().map(|r| r.iter().cloned().collect()).collect(),
        }
    }

    pub fn precision_matrix(&self) -> Result<DMatrix<f64>> {
        if self.precision.len() != self.dim || self.precision.iter().any(|r| r.len() != self.dim) {
            return Err(Error::invalid("precision must be dim x dim"));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| self.precision[i][j]))
    }

    /// Off-diagonal nonzero pattern of `Θ`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if self.precision[i][j] != 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `Θ`'s support including the diagonal; the pair list for informed features.
    pub fn support_pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (0..self.dim).map(|i| (i, i)).collect();
        out.extend(self.edges());
        out
    }

    pub fn edge_mask(&self) -> Vec<Vec<bool>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| i != j && self.precision[i][j] != 0.0).collect())
            .collect()
    }
}

/// Samples from `N(0, Θ⁻¹)` through the Cholesky factor of `Θ⁻¹`.
pub fn gen_ggm_samples(spec: &GgmSpec, n: usize, seed: u64) -> Result<ParticleSet> {
    let theta = spec.precision_matrix()?;
    let asym = (&theta - theta.transpose()).amax();
    if asym > 1e-12 || min_eigenvalue(&theta) <= 0.0 {
        return Err(Error::invalid("precision matrix must be symmetric positive definite"));
    }
    let cov = theta
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("precision matrix is not positive definite"))?
        .inverse();
    let l = cov
        .cholesky()
        .ok_or_else(|| Error::invalid("covariance is not positive definite"))?
        .l();
    let d = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        data.extend((&l * z).iter());
    }
    ParticleSet::from_flat(data, d)
}

/// Rotate the first two coordinates; positive angles turn clockwise, so
/// `(1, 0)` rotated by `-90` becomes `(0, 1)`.
pub fn rotate_dataset(points: &ParticleSet, degrees: f64) -> Result<ParticleSet> {
    if points.dim() < 2 {
        return Err(Error::invalid("rotation needs at least two coordinates"));
    }
    let (s, c) = (-degrees.to_radians()).sin_cos();
    Ok(points.map_points(|src, dst| {
        dst.copy_from_slice(src);
        dst[0] = c * src[0] - s * src[1];
        dst[1] = s * src[0] + c * src[1];
    }))
}

/// Off-diagonal entries of the inverted sample covariance with magnitude
/// above `threshold`. The covariance gets a `1e-8·trace/d` jitter first.
pub fn precision_support(points: &ParticleSet, threshold: f64) -> Result<Vec<Vec<bool>>> {
    let (n, d) = (points.len(), points.dim());
    if n <= d {
        return Err(Error::invalid(format!("precision_support needs more than {d} samples, got {n}")));
    }
    let (_, cov) = crate::metrics::fit_gaussian(points)?;
    let scale = (cov.trace() / d as f64).max(f64::MIN_POSITIVE);
    let (_, chol, _) = cholesky_with_jitter(&cov, 1e-8 * scale, 1e-2 * scale)
        .ok_or_else(|| Error::Solver("sample covariance is singular".into()))?;
    let prec = chol.inverse();
    Ok((0..d)
        .map(|i| (0..d).map(|j| i != j && prec[(i, j)].abs() > threshold).collect())
        .collect())
}

/// Fraction of true edges present in `found` (1 when there are no true edges).
pub fn edge_recall(truth: &[Vec<bool>], found: &[Vec<bool>]) -> f64 {
    let mut total = 0;
    let mut hit = 0;
    for (i, row) in truth.iter().enumerate() {
        for (j, &t) in row.iter().enumerate() {
            if t && i < j {
                total += 1;
                if found[i][j] {
                    hit += 1;
                }
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

/// Mean distance from each point to its nearest neighbor in `reference`.
pub fn mean_nearest_distance(points: &ParticleSet, reference: &ParticleSet) -> Result<f64> {
    if points.is_empty() || reference.is_empty() {
        return Err(Error::invalid("nearest-neighbor distance needs nonempty sets"));
    }
    crate::error::check_dim(reference.dim(), points.dim())?;
    let total: f64 = points
        .iter()
        .map(|x| {
            reference
                .iter()
                .map(|y| crate::linalg::sq_dist(x, y))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    Ok(total / points.len() as f64)
}

/// Four isotropic blobs with standard deviation `spread`, centered on the axes at distance `radius`.
pub fn gen_four_blobs(n: usize, radius: f64, spread: f64, seed: u64) -> Result<ParticleSet> {
    if !(spread >= 0.0) {
        return Err(Error::invalid("spread must be nonnegative"));
    }
    let means = [[radius, 0.0], [0.0, radius], [-radius, 0.0], [0.0, -radius]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let k = rng.random_range(0..4);
        for m in means[k] {
            let z: f64 = rng.sample(StandardNormal);
            data.push(m + spread * z);
        }
    }
    ParticleSet::from_flat(data, 2)
}
