//! Projection of a generative model's instantaneous change onto the
//! exponential-family manifold.
//!
//! Two routes are provided: the time-smoothed least-squares solution computed
//! by quadrature over a trajectory, and its `σ → 0` limit for drift models,
//! `δ = F⁻¹ E[∇T(X) h(X)]`. They serve as oracles for each other.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::manifold::{centered_covariance, fisher_estimate, FeatureMap, FisherMatrix, JITTER_CAP};
use crate::ngd::NatGradResult;
use crate::particles::ParticleSet;

/// Default number of quadrature nodes over `[t0 - 5σ, t0 + 5σ]`.
pub const DEFAULT_QUADRATURE_NODES: usize = 81;

/// Normalized Gaussian time-smoothing kernel
/// `λ(t) = exp(-(t-t0)²/(2σ²)) / √(2πσ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeKernel {
    pub t0: f64,
    pub sigma: f64,
}

impl TimeKernel {
    pub fn new(t0: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("time kernel sigma must be positive"));
        }
        Ok(Self { t0, sigma })
    }

    pub fn value(&self, t: f64) -> f64 {
        let z = (t - self.t0) / self.sigma;
        (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI * self.sigma * self.sigma).sqrt()
    }

    /// `∂_t λ(t) = -((t - t0)/σ²) λ(t)`.
    pub fn deriv(&self, t: f64) -> f64 {
        -(t - self.t0) / (self.sigma * self.sigma) * self.value(t)
    }

    /// Uniform grid over `[t0 - half_width·σ, t0 + half_width·σ]`.
    pub fn grid(&self, half_width: f64, nodes: usize) -> Vec<f64> {
        let lo = self.t0 - half_width * self.sigma;
        let h = 2.0 * half_width * self.sigma / (nodes - 1) as f64;
        (0..nodes).map(|i| lo + h * i as f64).collect()
    }

    /// The default 81-node grid over ±5σ.
    pub fn default_grid(&self) -> Vec<f64> {
        self.grid(5.0, DEFAULT_QUADRATURE_NODES)
    }
}

pub fn time_kernel_deriv(tk: &TimeKernel, t: f64) -> f64 {
    tk.deriv(t)
}

/// Trapezoidal weights for an increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// `∫ f` by the trapezoidal rule.
pub fn trapezoid(grid: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    trapezoid_weights(grid)
        .iter()
        .zip(grid)
        .map(|(w, t)| w * f(*t))
        .sum()
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub delta: DVector<f64>,
    pub fisher_used: FisherMatrix,
    /// Alignment objective value, when one was computed.
    pub residual: Option<f64>,
}

/// The drift model `X_t = X_{t0} + (t - t0) h(X_{t0})` evaluated at any `t`.
#[derive(Debug, Clone)]
pub struct DriftTrajectory {
    anchors: ParticleSet,
    velocities: DMatrix<f64>,
}

impl DriftTrajectory {
    pub fn new(anchors: ParticleSet, velocities: DMatrix<f64>) -> Result<Self> {
        check_dim(anchors.len(), velocities.nrows())?;
        check_dim(anchors.dim(), velocities.ncols())?;
        Ok(Self { anchors, velocities })
    }

    pub fn at(&self, t: f64) -> ParticleSet {
        let dt = t - self.anchors.time();
        self.anchors
            .advanced(&self.velocities, dt)
            .expect("shapes checked at construction")
    }
}

/// Time-smoothed projection
/// `δ = -(∫ λ Cov[T(X_t)] dt)⁻¹ ∫ ∂_tλ E[T(X_t)] dt`, both integrals by the
/// trapezoidal rule over `grid` using per-time empirical moments.
///
/// The sampler should use common random numbers across times.
pub fn project_delta_quadrature<F>(
    map: &FeatureMap,
    mut trajectory: F,
    tk: &TimeKernel,
    grid: &[f64],
    jitter: f64,
) -> Result<ProjectionResult>
where
    F: FnMut(f64) -> ParticleSet,
{
    if grid.len() < 41 {
        return Err(Error::invalid("quadrature grid needs at least 41 nodes"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("quadrature grid must be strictly increasing"));
    }
    let span = 5.0 * tk.sigma * (1.0 - 1e-9);
    if grid[0] > tk.t0 - span || grid[grid.len() - 1] < tk.t0 + span {
        return Err(Error::invalid("quadrature grid must span t0 ± 5σ"));
    }
    let dt = map.feature_dim();
    let weights = trapezoid_weights(grid);
    let mut cov_int = DMatrix::zeros(dt, dt);
    let mut mean_int = DVector::zeros(dt);
    for (t, w) in grid.iter().zip(&weights) {
        let pts = trajectory(*t);
        if pts.len() < 2 {
            return Err(Error::invalid("trajectory must yield at least two particles"));
        }
        let feats = map.features(&pts)?;
        let mean = feats.row_mean().transpose();
        cov_int += centered_covariance(&feats) * (w * tk.value(*t));
        mean_int += mean * (w * tk.deriv(*t));
    }
    let fisher = FisherMatrix::from_covariance(cov_int, jitter, JITTER_CAP.max(jitter))?;
    let delta = -fisher.solve(&mean_int);
    Ok(ProjectionResult {
        delta,
        fisher_used: fisher,
        residual: None,
    })
}

/// `E[∇T(X) h(X)] = (1/n) Σ_i ∇T(x_i) h_i`, the un-preconditioned projected change.
pub fn projected_change(
    map: &FeatureMap,
    particles: &ParticleSet,
    velocities: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    check_dim(particles.len(), velocities.nrows())?;
    check_dim(particles.dim(), velocities.ncols())?;
    check_dim(map.input_dim(), particles.dim())?;
    if particles.is_empty() {
        return Err(Error::invalid("projected change over an empty set"));
    }
    let mut acc = DVector::zeros(map.feature_dim());
    for (i, x) in particles.iter().enumerate() {
        let h = velocities.row(i).transpose();
        acc += map.jacobian_unchecked(x) * h;
    }
    Ok(acc / particles.len() as f64)
}

/// Limiting projection of a drift model, `δ = F⁻¹ E[∇T(X) h(X)]`.
pub fn project_delta_limit(
    map: &FeatureMap,
    particles: &ParticleSet,
    velocities: &DMatrix<f64>,
    jitter: f64,
) -> Result<ProjectionResult> {
    let change = projected_change(map, particles, velocities)?;
    let fisher = fisher_estimate(map, particles, jitter)?;
    Ok(ProjectionResult {
        delta: fisher.solve(&change),
        fisher_used: fisher,
        residual: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentMode {
    /// `‖F⁻¹ gap - δ‖²`.
    Euclidean,
    /// `(gap - Fδ)ᵀ F⁻¹ (gap - Fδ)`.
    FisherWeighted,
}

/// How far a projected change is from the natural-gradient update.
pub fn alignment_residual(ngd: &NatGradResult, proj: &ProjectionResult, mode: AlignmentMode) -> Result<f64> {
    check_dim(ngd.natural_direction.len(), proj.delta.len())?;
    Ok(match mode {
        AlignmentMode::Euclidean => (&ngd.natural_direction - &proj.delta).norm_squared(),
        AlignmentMode::FisherWeighted => {
            let change = &proj.fisher_used.matrix * &proj.delta;
            ngd.fisher.inverse_quadratic_form(&(&ngd.gap - change))
        }
    })
}
