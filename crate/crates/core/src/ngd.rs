//! Natural gradient of `KL[p, q_θ]` estimated from samples, and an exact
//! parametric natural-gradient trajectory on the Gaussian family used as a
//! reference for particle flows.
//!
//! Sign convention: the update direction is `F⁻¹ (μ_p - μ_q)`, the direction
//! that decreases `KL[p, q_θ]`. The Euclidean gradient of the loss is
//! therefore `-(μ_p - μ_q)`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::manifold::{
    fisher_estimate, fisher_estimate_scaled, FeatureMap, FisherMatrix, DEFAULT_RELATIVE_JITTER,
};
use crate::particles::ParticleSet;

/// Default Monte Carlo sample count for [`exact_ngd_step`].
pub const DEFAULT_MC_SAMPLES: usize = 4096;
const MAX_HALVINGS: usize = 10;

/// Mean-statistic gap, Fisher estimate and natural direction `F⁻¹ gap`.
#[derive(Debug, Clone)]
pub struct NatGradResult {
    /// `μ_p - μ_q`.
    pub gap: DVector<f64>,
    pub fisher: FisherMatrix,
    /// `F⁻¹ (μ_p - μ_q)`.
    pub natural_direction: DVector<f64>,
}

impl NatGradResult {
    pub fn new(gap: DVector<f64>, fisher: FisherMatrix) -> Self {
        let natural_direction = fisher.solve(&gap);
        Self {
            gap,
            fisher,
            natural_direction,
        }
    }

    /// Euclidean gradient of `KL[p, q_θ]` with respect to θ.
    pub fn euclidean_gradient(&self) -> DVector<f64> {
        -&self.gap
    }
}

/// Natural gradient of `KL[p, q]` with `p` represented by `targets` and `q`
/// by `particles`; `jitter` is absolute.
pub fn natural_gradient_kl(
    map: &FeatureMap,
    targets: &ParticleSet,
    particles: &ParticleSet,
    jitter: f64,
) -> Result<NatGradResult> {
    let fisher = fisher_estimate(map, particles, jitter)?;
    let gap = map.mean_statistic(targets)? - map.mean_statistic(particles)?;
    Ok(NatGradResult::new(gap, fisher))
}

/// As [`natural_gradient_kl`] with a jitter relative to `trace(F)/dT`.
pub fn natural_gradient_kl_scaled(
    map: &FeatureMap,
    targets: &ParticleSet,
    particles: &ParticleSet,
    relative_jitter: f64,
) -> Result<NatGradResult> {
    let fisher = fisher_estimate_scaled(map, particles, relative_jitter)?;
    let gap = map.mean_statistic(targets)? - map.mean_statistic(particles)?;
    Ok(NatGradResult::new(gap, fisher))
}

/// Natural parameters of a Gaussian: `eta1 = Σ⁻¹μ`, `eta2 = -½Σ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNaturalParams {
    pub eta1: DVector<f64>,
    pub eta2: DMatrix<f64>,
}

impl GaussianNaturalParams {
    pub fn dim(&self) -> usize {
        self.eta1.len()
    }

    /// Whether `-2·eta2` is positive definite.
    pub fn is_valid(&self) -> bool {
        Cholesky::new(&self.eta2 * -2.0).is_some()
    }

    /// Coordinates paired with the `GaussianQuadratic` statistic
    /// `[x, vech(xxᵀ)]`: off-diagonal entries of `eta2` appear doubled.
    pub fn to_theta(&self) -> DVector<f64> {
        let d = self.dim();
        let mut theta = DVector::zeros(d + d * (d + 1) / 2);
        theta.rows_mut(0, d).copy_from(&self.eta1);
        let mut r = d;
        for i in 0..d {
            for j in i..d {
                theta[r] = if i == j { self.eta2[(i, i)] } else { 2.0 * self.eta2[(i, j)] };
                r += 1;
            }
        }
        theta
    }

    pub fn from_theta(theta: &DVector<f64>, d: usize) -> Result<Self> {
        check_dim(d + d * (d + 1) / 2, theta.len())?;
        let mut p = Self {
            eta1: theta.rows(0, d).into_owned(),
            eta2: DMatrix::zeros(d, d),
        };
        p.add_theta_step(&theta.rows(d, theta.len() - d).into_owned(), 1.0, d);
        Ok(p)
    }

    /// In-place `θ ← θ + step·direction` for the quadratic block.
    fn add_theta_step(&mut self, quad: &DVector<f64>, step: f64, d: usize) {
        let mut r = 0;
        for i in 0..d {
            for j in i..d {
                if i == j {
                    self.eta2[(i, i)] += step * quad[r];
                } else {
                    let v = 0.5 * step * quad[r];
                    self.eta2[(i, j)] += v;
                    self.eta2[(j, i)] += v;
                }
                r += 1;
            }
        }
    }

    fn stepped(&self, direction: &DVector<f64>, step: f64) -> Self {
        let d = self.dim();
        let mut out = self.clone();
        out.eta1 += direction.rows(0, d) * step;
        out.add_theta_step(&direction.rows(d, direction.len() - d).into_owned(), step, d);
        out
    }
}

pub fn gaussian_moment_to_natural(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<GaussianNaturalParams> {
    check_dim(cov.nrows(), mean.len())?;
    check_dim(cov.ncols(), mean.len())?;
    let ch = Cholesky::new(cov.clone())
        .ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
    let prec = ch.inverse();
    Ok(GaussianNaturalParams {
        eta1: &prec * mean,
        eta2: prec * -0.5,
    })
}

pub fn gaussian_natural_to_moment(params: &GaussianNaturalParams) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let ch = Cholesky::new(&params.eta2 * -2.0)
        .ok_or_else(|| Error::invalid("-2·eta2 is not positive definite"))?;
    let cov = ch.inverse();
    let mean = &cov * &params.eta1;
    Ok((mean, cov))
}

/// `n` exact draws from `N(mean, cov)` using the lower Cholesky factor.
pub fn sample_gaussian<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    n: usize,
    rng: &mut R,
) -> Result<ParticleSet> {
    check_dim(mean.len(), cov.nrows())?;
    let l = Cholesky::new(cov.clone())
        .ok_or_else(|| Error::invalid("covariance is not positive definite"))?
        .l();
    let d = mean.len();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        data.extend((mean + &l * z).iter());
    }
    ParticleSet::from_flat(data, d)
}

/// One natural-gradient step of the Gaussian family toward `targets`:
/// `θ' = θ + ε F⁻¹ (μ_p - μ_q)` with `F` and `μ_q` estimated from
/// `mc_samples` exact draws. Halves the step (up to ten times) if the result
/// would not be a valid Gaussian.
pub fn exact_ngd_step(
    params: &GaussianNaturalParams,
    targets: &ParticleSet,
    step: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<GaussianNaturalParams> {
    if !(step > 0.0) {
        return Err(Error::invalid("step must be positive"));
    }
    if mc_samples < 100 {
        return Err(Error::invalid("exact NGD needs at least 100 Monte Carlo samples"));
    }
    let d = params.dim();
    check_dim(d, targets.dim())?;
    let (mean, cov) = gaussian_natural_to_moment(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample_gaussian(&mean, &cov, mc_samples, &mut rng)?;
    let map = FeatureMap::gaussian_quadratic(d)?;
    let ng = natural_gradient_kl_scaled(&map, targets, &samples, DEFAULT_RELATIVE_JITTER)?;
    let mut eps = step;
    for _ in 0..=MAX_HALVINGS {
        let next = params.stepped(&ng.natural_direction, eps);
        if next.is_valid() {
            return Ok(next);
        }
        eps *= 0.5;
    }
    Err(Error::StepFailure {
        halvings: MAX_HALVINGS,
    })
}
