//! Stein exponential family: sufficient statistics `S_p f` whose mean under
//! the target `p` vanishes, so the KL natural gradient needs only the score
//! `∇ log p` and no target samples.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::manifold::{fisher_estimate, FeatureMap};
use crate::ngd::NatGradResult;
use crate::particles::ParticleSet;

/// Closed-form target scores `∇ log p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum TargetScore {
    /// `N(mean, diag(var))`.
    DiagonalGaussian { mean: Vec<f64>, var: Vec<f64> },
    /// `0.5 N(mean, var I) + 0.5 N(-mean, var I)`.
    SymmetricMixture { mean: Vec<f64>, var: f64 },
}

impl TargetScore {
    pub fn standard_normal(dim: usize) -> Self {
        TargetScore::DiagonalGaussian {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TargetScore::DiagonalGaussian { mean, .. } => mean.len(),
            TargetScore::SymmetricMixture { mean, .. } => mean.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetScore::DiagonalGaussian { mean, var } => {
                check_dim(mean.len(), var.len())?;
                if mean.is_empty() || var.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::invalid("diagonal Gaussian needs positive variances"));
                }
            }
            TargetScore::SymmetricMixture { mean, var } => {
                if mean.is_empty() || !(*var > 0.0) {
                    return Err(Error::invalid("mixture needs a mean and positive variance"));
                }
            }
        }
        Ok(())
    }

    /// Responsibility of the `+mean` component.
    fn mixture_weight(mean: &[f64], var: f64, x: &[f64]) -> f64 {
        // log N(x; m) - log N(x; -m) = 2 <x, m> / var
        let z = 2.0 * crate::linalg::dot(x, mean) / var;
        1.0 / (1.0 + (-z).exp())
    }

    pub fn score(&self, x: &[f64]) -> DVector<f64> {
        match self {
            TargetScore::DiagonalGaussian { mean, var } => {
                DVector::from_iterator(x.len(), (0..x.len()).map(|i| -(x[i] - mean[i]) / var[i]))
            }
            TargetScore::SymmetricMixture { mean, var } => {
                let w = Self::mixture_weight(mean, *var, x);
                // posterior mean of the component center is (2w - 1) m
                DVector::from_iterator(
                    x.len(),
                    (0..x.len()).map(|i| ((2.0 * w - 1.0) * mean[i] - x[i]) / var),
                )
            }
        }
    }

    /// Hessian of `log p`.
    pub fn score_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        match self {
            TargetScore::DiagonalGaussian { var, .. } => {
                DMatrix::from_diagonal(&DVector::from_iterator(d, var.iter().map(|v| -1.0 / v)))
            }
            TargetScore::SymmetricMixture { mean, var } => {
                let w = Self::mixture_weight(mean, *var, x);
                let m = DVector::from_column_slice(mean);
                // Cov of the component center under the responsibilities: w(1-w)(2m)(2m)ᵀ
                &m * m.transpose() * (4.0 * w * (1.0 - w) / (var * var))
                    - DMatrix::identity(d, d) / *var
            }
        }
    }

    /// Exact iid draws from the target.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> ParticleSet {
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            match self {
                TargetScore::DiagonalGaussian { mean, var } => {
                    for i in 0..d {
                        let z: f64 = rng.sample(StandardNormal);
                        data.push(mean[i] + var[i].sqrt() * z);
                    }
                }
                TargetScore::SymmetricMixture { mean, var } => {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    for m in mean {
                        let z: f64 = rng.sample(StandardNormal);
                        data.push(sign * m + var.sqrt() * z);
                    }
                }
            }
        }
        ParticleSet::from_flat(data, d).expect("dimension is positive")
    }
}

/// How Stein features pair base test functions with coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SteinPairing {
    /// Feature `i` uses base function `i` and coordinate `i mod d`; `dT = b`.
    #[default]
    RoundRobin,
    /// Every base function with every coordinate; `dT = b·d`, index `r·d + c`.
    Full,
}

/// `S_p f_i(x) = ∂_c log p(x) f_i(x) + ∂_c f_i(x)` for the paired coordinate `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteinFeatureMap {
    pub base: Box<FeatureMap>,
    pub score: TargetScore,
    #[serde(default)]
    pub pairing: SteinPairing,
}

impl SteinFeatureMap {
    pub fn new(base: FeatureMap, score: TargetScore, pairing: SteinPairing) -> Result<Self> {
        let s = Self {
            base: Box::new(base),
            score,
            pairing,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(*self.base, FeatureMap::SteinFeatures(_)) {
            return Err(Error::invalid("Stein base map cannot itself be a Stein map"));
        }
        self.base.validate()?;
        self.score.validate()?;
        check_dim(self.base.input_dim(), self.score.dim())
    }

    pub fn input_dim(&self) -> usize {
        self.base.input_dim()
    }

    pub fn feature_dim(&self) -> usize {
        match self.pairing {
            SteinPairing::RoundRobin => self.base.feature_dim(),
            SteinPairing::Full => self.base.feature_dim() * self.input_dim(),
        }
    }

    /// `(base feature, coordinate)` for Stein feature `i`.
    fn pairing_of(&self, i: usize) -> (usize, usize) {
        let d = self.input_dim();
        match self.pairing {
            SteinPairing::RoundRobin => (i, i % d),
            SteinPairing::Full => (i / d, i % d),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> DVector<f64> {
        let s = self.score.score(x);
        let f = self.base.eval_unchecked(x);
        let jf = self.base.jacobian_unchecked(x);
        DVector::from_iterator(
            self.feature_dim(),
            (0..self.feature_dim()).map(|i| {
                let (r, c) = self.pairing_of(i);
                s[c] * f[r] + jf[(r, c)]
            }),
        )
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.input_dim();
        let s = self.score.score(x);
        let sj = self.score.score_jacobian(x);
        let f = self.base.eval_unchecked(x);
        let jf = self.base.jacobian_unchecked(x);
        let hf = self
            .base
            .hessians(x)
            .expect("validated base map provides Hessians");
        let mut jac = DMatrix::zeros(self.feature_dim(), d);
        for i in 0..self.feature_dim() {
            let (r, c) = self.pairing_of(i);
            for k in 0..d {
                jac[(i, k)] = sj[(c, k)] * f[r] + s[c] * jf[(r, k)] + hf[r][(k, c)];
            }
        }
        jac
    }
}

/// Natural gradient of `KL[p, q]` on a Stein manifold.
///
/// Since `E_p[T] = 0`, the gap is `-mean_q T`; it vanishes when the particles
/// are distributed as `p`.
pub fn stein_natural_gradient(
    map: &FeatureMap,
    particles: &ParticleSet,
    jitter: f64,
) -> Result<NatGradResult> {
    if !matches!(map, FeatureMap::SteinFeatures(_)) {
        return Err(Error::invalid("stein_natural_gradient needs a SteinFeatures map"));
    }
    let fisher = fisher_estimate(map, particles, jitter)?;
    let gap = -map.mean_statistic(particles)?;
    Ok(NatGradResult::new(gap, fisher))
}
