//! Closed-form drift fields (KiNG with an RBF cross-gradient kernel, ntKiNG
//! with a neural tangent or diagonalized kernel), the baseline velocity
//! fields, and the forward-Euler particle stepper.
//!
//! A drift solve builds
//!
//! ```text
//! Γ = ridge·F + (1/n²) Σ_ij ∇T(x_i) K̃(x_i, x_j) ∇T(x_j)ᵀ,   coeff = Γ⁻¹ (μ_p - μ_q)
//! h(x) = U(x)ᵀ coeff,   U(x) = (1/n) Σ_i ∇T(x_i) K̃(x_i, x)
//! ```
//!
//! which is the dual (Woodbury) form of the ridge-regularized fit of the
//! projected change `E[∇T h]` to the natural-gradient update.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::{block_gram, median_heuristic, KernelSpec, MatrixKernel};
use crate::linalg::{cholesky_with_jitter, sq_dist, symmetrize};
use crate::manifold::{
    centered_covariance, jitter_scale, FeatureMap, FisherMatrix, JITTER_CAP,
};
use crate::metrics::mmd;
use crate::particles::ParticleSet;

/// Denominator guard in the MMD-flow velocity.
pub const MMD_FLOW_EPS: f64 = 1e-12;
pub const DEFAULT_RIDGE: f64 = 1e-2;
/// Default Fisher jitter inside flows, relative to `trace(F)/dT`.
pub const DEFAULT_FLOW_JITTER: f64 = 1e-3;

/// Kernels with a cheaper structure than the generic block Gram.
pub trait DriftKernel: MatrixKernel {
    /// Scalar Gram `k(x_i, x_j)` when `K̃ = k·I`.
    fn scalar_gram(&self, _points: &ParticleSet) -> Option<DMatrix<f64>> {
        None
    }

    /// An explicit factor `Φ(x)` (size `d x P`) with `K̃(x, y) = Φ(x) Φ(y)ᵀ`.
    fn explicit_factor(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

impl DriftKernel for KernelSpec {
    fn scalar_gram(&self, points: &ParticleSet) -> Option<DMatrix<f64>> {
        match self {
            KernelSpec::DiagonalizedScalar { bandwidth } => {
                let n = points.len();
                let s2 = 2.0 * bandwidth * bandwidth;
                let mut g = DMatrix::zeros(n, n);
                for i in 0..n {
                    g[(i, i)] = 1.0;
                    for j in (i + 1)..n {
                        let v = (-sq_dist(points.point(i), points.point(j)) / s2).exp();
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
                Some(g)
            }
            _ => None,
        }
    }

    fn explicit_factor(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        match self {
            KernelSpec::EmpiricalNtk(n) => Some(n.parameter_jacobian(x)),
            _ => None,
        }
    }
}

/// A solved drift field over `R^d`.
#[derive(Debug, Clone)]
pub struct DriftSolution<K = KernelSpec> {
    gamma: DMatrix<f64>,
    gamma_factor: Cholesky<f64, Dyn>,
    coeff: DVector<f64>,
    gap: DVector<f64>,
    fisher: FisherMatrix,
    map: FeatureMap,
    kernel: K,
    anchors: ParticleSet,
    ridge: f64,
    /// `∇T(x_i)ᵀ coeff` per anchor.
    anchor_weights: Vec<DVector<f64>>,
    /// Weight-space solution when the kernel has an explicit factor.
    primal: Option<DVector<f64>>,
}

impl<K: DriftKernel> DriftSolution<K> {
    /// `Γ`, reconstructed as the regularized matrix that was factored.
    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn gamma_cholesky_factor(&self) -> DMatrix<f64> {
        self.gamma_factor.l()
    }

    /// `Γ⁻¹ (μ_p - μ_q)`.
    pub fn coeff(&self) -> &DVector<f64> {
        &self.coeff
    }

    pub fn gap(&self) -> &DVector<f64> {
        &self.gap
    }

    pub fn fisher(&self) -> &FisherMatrix {
        &self.fisher
    }

    pub fn map(&self) -> &FeatureMap {
        &self.map
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn anchors(&self) -> &ParticleSet {
        &self.anchors
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Drift at every query point, one row per point.
    pub fn eval(&self, query: &ParticleSet) -> Result<DMatrix<f64>> {
        check_dim(self.anchors.dim(), query.dim())?;
        let d = query.dim();
        let mut out = DMatrix::zeros(query.len(), d);
        let inv_n = 1.0 / self.anchors.len() as f64;
        for (q, x) in query.iter().enumerate() {
            let h = match &self.primal {
                Some(w) => self.kernel.explicit_factor(x).expect("explicit factor") * w,
                None => {
                    let mut acc = DVector::zeros(d);
                    for (xi, v) in self.anchors.iter().zip(&self.anchor_weights) {
                        acc += self.kernel.apply_transposed(xi, x, v);
                    }
                    acc * inv_n
                }
            };
            out.row_mut(q).tr_copy_from(&h);
        }
        Ok(out)
    }

    /// `(gap - E[∇T h])ᵀ F⁻¹ (gap - E[∇T h])` for this drift at its anchors.
    pub fn alignment_residual(&self) -> Result<f64> {
        let vel = self.eval(&self.anchors)?;
        let change = crate::projection::projected_change(&self.map, &self.anchors, &vel)?;
        Ok(self.fisher.inverse_quadratic_form(&(&self.gap - change)))
    }
}

pub fn eval_drift<K: DriftKernel>(sol: &DriftSolution<K>, query: &ParticleSet) -> Result<DMatrix<f64>> {
    sol.eval(query)
}

/// Solve the drift for an arbitrary right-hand side `gap` and Fisher matrix.
///
/// `use_structure = false` forces the generic block-Gram route even when the
/// kernel offers a faster one.
pub fn solve_drift_with_gap<K: DriftKernel + Clone>(
    map: &FeatureMap,
    kernel: &K,
    particles: &ParticleSet,
    gap: DVector<f64>,
    fisher: FisherMatrix,
    ridge: f64,
    use_structure: bool,
) -> Result<DriftSolution<K>> {
    let n = particles.len();
    if n < 2 {
        return Err(Error::invalid("drift solve needs at least two particles"));
    }
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(Error::invalid("ridge must be positive"));
    }
    check_dim(map.input_dim(), particles.dim())?;
    check_dim(map.feature_dim(), gap.len())?;
    check_dim(map.feature_dim(), fisher.dim())?;
    let (d, dt) = (particles.dim(), map.feature_dim());
    let jacs: Vec<DMatrix<f64>> = particles.iter().map(|x| map.jacobian_unchecked(x)).collect();
    let inv_n = 1.0 / n as f64;

    let mut primal_factor = None;
    let mut kernel_part = if let (true, Some(g)) = (use_structure, kernel.scalar_gram(particles)) {
        // Σ_c Jc K Jcᵀ with Jc the dT x n matrix of Jacobian columns c
        let mut acc = DMatrix::zeros(dt, dt);
        for c in 0..d {
            let jc = DMatrix::from_fn(dt, n, |r, i| jacs[i][(r, c)]);
            acc += &jc * &g * jc.transpose();
        }
        acc * (inv_n * inv_n)
    } else if let (true, Some(_)) = (use_structure, kernel.explicit_factor(particles.point(0))) {
        let mut b = DMatrix::<f64>::zeros(0, 0);
        for (i, x) in particles.iter().enumerate() {
            let prod = &jacs[i] * kernel.explicit_factor(x).expect("explicit factor");
            if i == 0 {
                b = prod;
            } else {
                b += prod;
            }
        }
        b *= inv_n;
        let gram = &b * b.transpose();
        primal_factor = Some(b);
        gram
    } else {
        let mut jbig = DMatrix::zeros(dt, n * d);
        for (i, j) in jacs.iter().enumerate() {
            jbig.view_mut((0, i * d), (dt, d)).copy_from(j);
        }
        let kbig = block_gram(kernel, particles);
        &jbig * kbig * jbig.transpose() * (inv_n * inv_n)
    };
    symmetrize(&mut kernel_part);
    let raw = &fisher.matrix * ridge + kernel_part;
    let scale = jitter_scale(&raw);
    let (gamma, factor, _) =
        cholesky_with_jitter(&raw, 0.0, JITTER_CAP * scale).ok_or_else(|| {
            Error::Solver("Γ is not positive definite after jitter escalation".into())
        })?;
    let coeff = factor.solve(&gap);
    let anchor_weights = jacs.iter().map(|j| j.tr_mul(&coeff)).collect();
    let primal = primal_factor.map(|b| b.tr_mul(&coeff));
    Ok(DriftSolution {
        gamma,
        gamma_factor: factor,
        coeff,
        gap,
        fisher,
        map: map.clone(),
        kernel: kernel.clone(),
        anchors: particles.clone(),
        ridge,
        anchor_weights,
        primal,
    })
}

fn sample_gap_and_fisher(
    map: &FeatureMap,
    particles: &ParticleSet,
    targets: &ParticleSet,
    jitter: f64,
) -> Result<(DVector<f64>, FisherMatrix)> {
    if targets.is_empty() {
        return Err(Error::invalid("drift solve needs at least one target sample"));
    }
    let fisher = crate::manifold::fisher_estimate(map, particles, jitter)?;
    let gap = map.mean_statistic(targets)? - map.mean_statistic(particles)?;
    Ok((gap, fisher))
}

/// KiNG drift with the RBF cross-gradient kernel; `jitter` is absolute.
pub fn solve_king_drift(
    map: &FeatureMap,
    kernel: &KernelSpec,
    particles: &ParticleSet,
    targets: &ParticleSet,
    ridge: f64,
    jitter: f64,
) -> Result<DriftSolution> {
    if !matches!(kernel, KernelSpec::RbfScalar { .. }) {
        return Err(Error::invalid("KiNG uses an RbfScalar kernel"));
    }
    kernel.validate()?;
    let (gap, fisher) = sample_gap_and_fisher(map, particles, targets, jitter)?;
    solve_drift_with_gap(map, kernel, particles, gap, fisher, ridge, true)
}

/// ntKiNG drift with an empirical NTK or a diagonalized scalar kernel; `jitter` is absolute.
pub fn solve_ntking_drift(
    map: &FeatureMap,
    kernel: &KernelSpec,
    particles: &ParticleSet,
    targets: &ParticleSet,
    ridge: f64,
    jitter: f64,
) -> Result<DriftSolution> {
    match kernel {
        KernelSpec::EmpiricalNtk(n) => check_dim(n.input_dim(), particles.dim())?,
        KernelSpec::DiagonalizedScalar { .. } => kernel.validate()?,
        KernelSpec::RbfScalar { .. } => {
            return Err(Error::invalid("ntKiNG uses an EmpiricalNtk or DiagonalizedScalar kernel"))
        }
    }
    let (gap, fisher) = sample_gap_and_fisher(map, particles, targets, jitter)?;
    solve_drift_with_gap(map, kernel, particles, gap, fisher, ridge, true)
}

/// `∇ log` of a Gaussian KDE with bandwidth `bw` over `samples`, at `x`.
fn kde_score(samples: &ParticleSet, bw: f64, x: &[f64]) -> DVector<f64> {
    let s2 = bw * bw;
    let logits: Vec<f64> = samples.iter().map(|y| -sq_dist(x, y) / (2.0 * s2)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let mut acc = DVector::zeros(x.len());
    for (y, l) in samples.iter().zip(&logits) {
        let w = (l - max).exp();
        total += w;
        for (a, (yv, xv)) in acc.iter_mut().zip(y.iter().zip(x)) {
            *a += w * (yv - xv);
        }
    }
    acc / (total * s2)
}

/// Reverse-KL Wasserstein gradient flow velocity `∇log p̂ - ∇log q̂` with
/// Gaussian KDE scores; bandwidths default to the median heuristic of each set.
pub fn wgf_velocity(
    targets: &ParticleSet,
    particles: &ParticleSet,
    bandwidth_p: Option<f64>,
    bandwidth_q: Option<f64>,
) -> Result<DMatrix<f64>> {
    if targets.is_empty() || particles.is_empty() {
        return Err(Error::invalid("WGF needs nonempty target and particle sets"));
    }
    check_dim(targets.dim(), particles.dim())?;
    let empty = ParticleSet::empty(particles.dim());
    let bp = match bandwidth_p {
        Some(b) => b,
        None if targets.len() >= 2 => median_heuristic(targets, &empty)?,
        None => 1.0,
    };
    let bq = match bandwidth_q {
        Some(b) => b,
        None if particles.len() >= 2 => median_heuristic(particles, &empty)?,
        None => 1.0,
    };
    let mut out = DMatrix::zeros(particles.len(), particles.dim());
    for (i, x) in particles.iter().enumerate() {
        let v = kde_score(targets, bp, x) - kde_score(particles, bq, x);
        out.row_mut(i).tr_copy_from(&v);
    }
    Ok(out)
}

/// MMD-flow velocity
/// `N·[(1/N) Σ_i (x - x_i)/|x - x_i| - (1/M) Σ_j (x - y_j)/(|x - y_j| + ε₀)]`.
/// Coincident particles contribute zero.
pub fn mmd_flow_velocity(targets: &ParticleSet, particles: &ParticleSet) -> Result<DMatrix<f64>> {
    if targets.is_empty() || particles.is_empty() {
        return Err(Error::invalid("MMD flow needs nonempty target and particle sets"));
    }
    check_dim(targets.dim(), particles.dim())?;
    let (n, m, d) = (particles.len() as f64, targets.len() as f64, particles.dim());
    let mut out = DMatrix::zeros(particles.len(), d);
    for (k, x) in particles.iter().enumerate() {
        let mut repulse = DVector::zeros(d);
        for xi in particles.iter() {
            let r = sq_dist(x, xi).sqrt();
            if r > 0.0 {
                for a in 0..d {
                    repulse[a] += (x[a] - xi[a]) / r;
                }
            }
        }
        let mut attract = DVector::zeros(d);
        for y in targets.iter() {
            let r = sq_dist(x, y).sqrt() + MMD_FLOW_EPS;
            for a in 0..d {
                attract[a] += (x[a] - y[a]) / r;
            }
        }
        let v = (repulse / n - attract / m) * n;
        out.row_mut(k).tr_copy_from(&v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowMethod {
    King,
    NtKing,
    Wgf,
    MmdFlow,
}

impl FlowMethod {
    pub const ALL: [FlowMethod; 4] = [FlowMethod::King, FlowMethod::NtKing, FlowMethod::Wgf, FlowMethod::MmdFlow];

    pub fn name(&self) -> &'static str {
        match self {
            FlowMethod::King => "king",
            FlowMethod::NtKing => "ntking",
            FlowMethod::Wgf => "wgf",
            FlowMethod::MmdFlow => "mmd_flow",
        }
    }
}

/// Forward-Euler settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub step: f64,
    pub iterations: usize,
    /// Absolute ridge `λ` in `Γ = λF + ...`.
    pub ridge: f64,
    /// Fisher jitter relative to `trace(F)/dT`.
    pub jitter: f64,
    pub log_every: usize,
    pub seed: u64,
    /// Use the drift kernel's configured bandwidth (and, for WGF, the initial
    /// particle bandwidth) instead of refreshing by the median heuristic each step.
    pub freeze_bandwidth: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            iterations: 100,
            ridge: DEFAULT_RIDGE,
            jitter: DEFAULT_FLOW_JITTER,
            log_every: 10,
            seed: 0,
            freeze_bandwidth: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config("step must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.ridge > 0.0) {
            return Err(Error::Config("ridge must be positive".into()));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::Config("jitter must be nonnegative".into()));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// What the particles are pushed toward.
#[derive(Debug, Clone)]
pub enum FlowTarget {
    /// Samples from the target distribution.
    Samples(ParticleSet),
    /// The target encoded in a Stein feature map (`E_p[T] = 0`).
    Stein,
}

/// Everything except the particles and step settings.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    pub target: FlowTarget,
    /// Sufficient statistic (KiNG / ntKiNG only).
    pub map: Option<FeatureMap>,
    /// Drift kernel (KiNG / ntKiNG only). Scalar bandwidths are refreshed by the
    /// median heuristic unless frozen.
    pub kernel: Option<KernelSpec>,
    /// When set, snapshots report `MMD[reference, X_t]`.
    pub mmd_reference: Option<ParticleSet>,
}

impl FlowProblem {
    pub fn samples(targets: ParticleSet) -> Self {
        Self {
            target: FlowTarget::Samples(targets),
            map: None,
            kernel: None,
            mmd_reference: None,
        }
    }

    pub fn stein(map: FeatureMap, kernel: KernelSpec) -> Self {
        Self {
            target: FlowTarget::Stein,
            map: Some(map),
            kernel: Some(kernel),
            mmd_reference: None,
        }
    }

    pub fn with_manifold(mut self, map: FeatureMap, kernel: KernelSpec) -> Self {
        self.map = Some(map);
        self.kernel = Some(kernel);
        self
    }

    pub fn with_mmd_reference(mut self, reference: ParticleSet) -> Self {
        self.mmd_reference = Some(reference);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Mean Euclidean norm of the velocity applied at this iterate.
    pub drift_norm: Option<f64>,
    pub mmd: Option<f64>,
    /// Fisher-weighted alignment residual of the drift (KiNG / ntKiNG).
    pub residual: Option<f64>,
}

/// Passed to the observer; particles are borrowed read-only.
#[derive(Debug)]
pub struct FlowSnapshot<'a> {
    pub iteration: usize,
    pub t: f64,
    pub particles: &'a ParticleSet,
    pub diagnostics: Diagnostics,
}

struct VelocityOutput {
    velocity: DMatrix<f64>,
    residual: Option<f64>,
}

fn kernel_for_iteration(
    kernel: &KernelSpec,
    particles: &ParticleSet,
    targets: Option<&ParticleSet>,
    frozen: bool,
) -> Result<KernelSpec> {
    if frozen || kernel.bandwidth().is_none() {
        return Ok(kernel.clone());
    }
    let bw = median_heuristic(particles, targets.unwrap_or(&ParticleSet::empty(particles.dim())))?;
    Ok(kernel.with_bandwidth(bw))
}

fn drift_velocity(
    method: FlowMethod,
    problem: &FlowProblem,
    particles: &ParticleSet,
    cfg: &FlowConfig,
    want_residual: bool,
) -> Result<VelocityOutput> {
    let map = problem
        .map
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} needs a feature map", method.name())))?;
    let kernel = problem
        .kernel
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} needs a kernel", method.name())))?;
    let targets = match &problem.target {
        FlowTarget::Samples(t) => Some(t),
        FlowTarget::Stein => None,
    };
    let kernel = kernel_for_iteration(kernel, particles, targets, cfg.freeze_bandwidth)?;
    match (method, &kernel) {
        (FlowMethod::King, KernelSpec::RbfScalar { .. }) => {}
        (FlowMethod::NtKing, KernelSpec::EmpiricalNtk(_) | KernelSpec::DiagonalizedScalar { .. }) => {}
        _ => {
            return Err(Error::Config(format!(
                "kernel {kernel:?} is not valid for method {}",
                method.name()
            )))
        }
    }
    let cov = centered_covariance(&map.features(particles)?);
    let scale = jitter_scale(&cov);
    let fisher = FisherMatrix::from_covariance(cov, cfg.jitter * scale, JITTER_CAP * scale)?;
    let gap = match targets {
        Some(t) => map.mean_statistic(t)? - map.mean_statistic(particles)?,
        None => {
            if !matches!(map, FeatureMap::SteinFeatures(_)) {
                return Err(Error::Config("a Stein target needs a SteinFeatures map".into()));
            }
            -map.mean_statistic(particles)?
        }
    };
    let sol = solve_drift_with_gap(map, &kernel, particles, gap, fisher, cfg.ridge, true)?;
    let velocity = sol.eval(particles)?;
    let residual = if want_residual {
        let change = crate::projection::projected_change(map, particles, &velocity)?;
        Some(sol.fisher().inverse_quadratic_form(&(sol.gap() - change)))
    } else {
        None
    };
    Ok(VelocityOutput { velocity, residual })
}

/// Algorithm: repeat `iterations` times, `X ← X + ε h(X)` with the velocity
/// re-solved at the current particles. Returns the final particles with
/// `t = t_init + iterations·ε`.
///
/// The observer sees iteration 0, every `log_every`-th iterate and the final one.
pub fn run_flow<F>(
    method: FlowMethod,
    problem: &FlowProblem,
    init: &ParticleSet,
    cfg: &FlowConfig,
    mut observer: F,
) -> Result<ParticleSet>
where
    F: FnMut(&FlowSnapshot<'_>),
{
    cfg.validate()?;
    if init.len() < 2 {
        return Err(Error::invalid("flows need at least two particles"));
    }
    let targets = match &problem.target {
        FlowTarget::Samples(t) => {
            check_dim(init.dim(), t.dim())?;
            if t.is_empty() {
                return Err(Error::invalid("empty target sample"));
            }
            Some(t)
        }
        FlowTarget::Stein => {
            if matches!(method, FlowMethod::Wgf | FlowMethod::MmdFlow) {
                return Err(Error::Config(format!(
                    "{} needs target samples, not a Stein target",
                    method.name()
                )));
            }
            None
        }
    };
    let empty = ParticleSet::empty(init.dim());
    let target_bw = match targets {
        Some(t) if t.len() >= 2 => Some(median_heuristic(t, &empty)?),
        _ => Some(1.0),
    };
    let frozen_q_bw = if cfg.freeze_bandwidth {
        Some(median_heuristic(init, &empty)?)
    } else {
        None
    };

    let mut x = init.clone();
    for it in 0..cfg.iterations {
        let logging = it % cfg.log_every == 0;
        let out = match method {
            FlowMethod::King | FlowMethod::NtKing => {
                drift_velocity(method, problem, &x, cfg, logging)?
            }
            FlowMethod::Wgf => VelocityOutput {
                velocity: wgf_velocity(targets.expect("checked"), &x, target_bw, frozen_q_bw)?,
                residual: None,
            },
            FlowMethod::MmdFlow => VelocityOutput {
                velocity: mmd_flow_velocity(targets.expect("checked"), &x)?,
                residual: None,
            },
        };
        if logging {
            let drift_norm = out.velocity.row_iter().map(|r| r.norm()).sum::<f64>() / x.len() as f64;
            let diagnostics = Diagnostics {
                drift_norm: Some(drift_norm),
                mmd: problem
                    .mmd_reference
                    .as_ref()
                    .map(|r| mmd(r, &x, None).map(|m| m.value))
                    .transpose()?,
                residual: out.residual,
            };
            observer(&FlowSnapshot {
                iteration: it,
                t: x.time(),
                particles: &x,
                diagnostics,
            });
        }
        let next = x.advanced(&out.velocity, cfg.step)?;
        if !next.all_finite() {
            return Err(Error::Divergence { iteration: it + 1 });
        }
        x = next;
    }
    let diagnostics = Diagnostics {
        drift_norm: None,
        mmd: problem
            .mmd_reference
            .as_ref()
            .map(|r| mmd(r, &x, None).map(|m| m.value))
            .transpose()?,
        residual: None,
    };
    observer(&FlowSnapshot {
        iteration: cfg.iterations,
        t: x.time(),
        particles: &x,
        diagnostics,
    });
    Ok(x)
}
