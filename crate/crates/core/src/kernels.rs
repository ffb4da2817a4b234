//! Scalar RBF kernels with their cross-gradient matrices, diagonalized
//! matrix-valued kernels, and the empirical neural tangent kernel of a
//! one-hidden-layer tanh network.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, median, sq_dist};
use crate::particles::ParticleSet;

pub const DEFAULT_HIDDEN_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum KernelSpec {
    /// `k(x, y) = exp(-|x-y|² / (2σ²))`, used through `∇_x∇_y k`.
    RbfScalar { bandwidth: f64 },
    /// The same scalar RBF placed on the diagonal: `K(x, y) = k(x, y) I`.
    DiagonalizedScalar { bandwidth: f64 },
    /// Empirical NTK of a fixed random network.
    EmpiricalNtk(NtkSpec),
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::RbfScalar { bandwidth } | KernelSpec::DiagonalizedScalar { bandwidth } => {
                if !(*bandwidth > 0.0 && bandwidth.is_finite()) {
                    return Err(Error::invalid("kernel bandwidth must be positive"));
                }
            }
            KernelSpec::EmpiricalNtk(_) => {}
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match self {
            KernelSpec::RbfScalar { bandwidth } | KernelSpec::DiagonalizedScalar { bandwidth } => {
                Some(*bandwidth)
            }
            KernelSpec::EmpiricalNtk(_) => None,
        }
    }

    /// Same kind with a new bandwidth; the NTK is returned unchanged.
    pub fn with_bandwidth(&self, bw: f64) -> KernelSpec {
        match self {
            KernelSpec::RbfScalar { .. } => KernelSpec::RbfScalar { bandwidth: bw },
            KernelSpec::DiagonalizedScalar { .. } => KernelSpec::DiagonalizedScalar { bandwidth: bw },
            KernelSpec::EmpiricalNtk(n) => KernelSpec::EmpiricalNtk(n.clone()),
        }
    }
}

fn rbf_value(x: &[f64], y: &[f64], bw: f64) -> f64 {
    (-sq_dist(x, y) / (2.0 * bw * bw)).exp()
}

/// Scalar kernel value; rejects the matrix-valued NTK.
pub fn kernel_value(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    match spec {
        KernelSpec::RbfScalar { bandwidth } | KernelSpec::DiagonalizedScalar { bandwidth } => {
            Ok(rbf_value(x, y, *bandwidth))
        }
        KernelSpec::EmpiricalNtk(_) => Err(Error::invalid("the NTK is matrix-valued; use ntk_value")),
    }
}

fn rbf_cross_grad(x: &[f64], y: &[f64], bw: f64) -> DMatrix<f64> {
    let d = x.len();
    let s2 = bw * bw;
    let k = rbf_value(x, y, bw);
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let delta = if a == b { 1.0 } else { 0.0 };
            m[(a, b)] = k * (delta / s2 - (x[a] - y[a]) * (x[b] - y[b]) / (s2 * s2));
        }
    }
    m
}

/// `∇_x∇_y k(x, y)` for the RBF kernel: `k·[I/σ² - (x-y)(x-y)ᵀ/σ⁴]`.
pub fn kernel_cross_grad(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(x.len(), y.len())?;
    match spec {
        KernelSpec::RbfScalar { bandwidth } => Ok(rbf_cross_grad(x, y, *bandwidth)),
        KernelSpec::DiagonalizedScalar { .. } => Err(Error::invalid(
            "diagonalized kernels substitute k·I for the cross-gradient; no cross-gradient is defined",
        )),
        KernelSpec::EmpiricalNtk(_) => Err(Error::invalid("use ntk_value for the NTK")),
    }
}

/// A matrix-valued kernel `K̃(x, y)` (size `d x d`) that drives a drift field.
pub trait MatrixKernel {
    fn matrix(&self, x: &[f64], y: &[f64]) -> DMatrix<f64>;

    /// `K̃(x, y)ᵀ v`.
    fn apply_transposed(&self, x: &[f64], y: &[f64], v: &DVector<f64>) -> DVector<f64> {
        self.matrix(x, y).tr_mul(v)
    }
}

impl MatrixKernel for KernelSpec {
    fn matrix(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        match self {
            KernelSpec::RbfScalar { bandwidth } => rbf_cross_grad(x, y, *bandwidth),
            KernelSpec::DiagonalizedScalar { bandwidth } => {
                DMatrix::identity(x.len(), x.len()) * rbf_value(x, y, *bandwidth)
            }
            KernelSpec::EmpiricalNtk(n) => n.value_unchecked(x, y),
        }
    }

    fn apply_transposed(&self, x: &[f64], y: &[f64], v: &DVector<f64>) -> DVector<f64> {
        match self {
            KernelSpec::RbfScalar { bandwidth } => {
                // the cross-gradient is symmetric as a matrix
                let s2 = bandwidth * bandwidth;
                let k = rbf_value(x, y, *bandwidth);
                let diff = DVector::from_iterator(x.len(), x.iter().zip(y).map(|(a, b)| a - b));
                let proj = diff.dot(v);
                (v / s2 - diff * (proj / (s2 * s2))) * k
            }
            KernelSpec::DiagonalizedScalar { bandwidth } => v * rbf_value(x, y, *bandwidth),
            KernelSpec::EmpiricalNtk(n) => n.value_unchecked(x, y).tr_mul(v),
        }
    }
}

/// Stacked `nd x nd` Gram matrix with block `(i, j)` equal to `K̃(x_i, x_j)`.
pub fn block_gram<K: MatrixKernel + ?Sized>(kernel: &K, points: &ParticleSet) -> DMatrix<f64> {
    let (n, d) = (points.len(), points.dim());
    let mut g = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            let block = kernel.matrix(points.point(i), points.point(j));
            g.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    g
}

/// Architecture and seed of the NTK network; the weights are regenerated from these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NtkConfig {
    pub input_dim: usize,
    #[serde(default = "default_width")]
    pub hidden_width: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_width() -> usize {
    DEFAULT_HIDDEN_WIDTH
}

/// `φ(x) = W2 tanh(W1 x + b1) + b2` with weights frozen at initialization.
///
/// Weights are drawn from `N(0, 1/fan_in)`: fan-in `d` for `W1, b1` and `H`
/// for `W2, b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NtkConfig", into = "NtkConfig")]
pub struct NtkSpec {
    config: NtkConfig,
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DMatrix<f64>,
    b2: DVector<f64>,
}

impl From<NtkConfig> for NtkSpec {
    fn from(config: NtkConfig) -> Self {
        let (d, h) = (config.input_dim.max(1), config.hidden_width.max(1));
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut draw = |rows: usize, cols: usize, fan_in: usize| {
            let sd = (1.0 / fan_in as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
        };
        let w1 = draw(h, d, d);
        let b1 = draw(h, 1, d).column(0).into_owned();
        let w2 = draw(d, h, h);
        let b2 = draw(d, 1, h).column(0).into_owned();
        Self {
            config: NtkConfig {
                input_dim: d,
                hidden_width: h,
                seed: config.seed,
            },
            w1,
            b1,
            w2,
            b2,
        }
    }
}

impl From<NtkSpec> for NtkConfig {
    fn from(s: NtkSpec) -> Self {
        s.config
    }
}

impl NtkSpec {
    pub fn new(input_dim: usize, hidden_width: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden_width == 0 {
            return Err(Error::invalid("NTK dimensions must be positive"));
        }
        Ok(NtkConfig {
            input_dim,
            hidden_width,
            seed,
        }
        .into())
    }

    pub fn config(&self) -> NtkConfig {
        self.config
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn hidden_width(&self) -> usize {
        self.config.hidden_width
    }

    /// Number of network parameters `P`.
    pub fn num_params(&self) -> usize {
        let (d, h) = (self.input_dim(), self.hidden_width());
        h * d + h + d * h + d
    }

    /// Flattened parameters in the order `W1` (row-major), `b1`, `W2` (row-major), `b2`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        for r in 0..self.w1.nrows() {
            p.extend(self.w1.row(r).iter());
        }
        p.extend(self.b1.iter());
        for r in 0..self.w2.nrows() {
            p.extend(self.w2.row(r).iter());
        }
        p.extend(self.b2.iter());
        p
    }

    /// Network output at `x` with the given flattened parameters.
    pub fn forward_with(&self, params: &[f64], x: &[f64]) -> DVector<f64> {
        let (d, h) = (self.input_dim(), self.hidden_width());
        let w1 = &params[..h * d];
        let b1 = &params[h * d..h * d + h];
        let w2 = &params[h * d + h..h * d + h + d * h];
        let b2 = &params[h * d + h + d * h..];
        let a: Vec<f64> = (0..h).map(|k| (dot(&w1[k * d..(k + 1) * d], x) + b1[k]).tanh()).collect();
        DVector::from_iterator(d, (0..d).map(|l| dot(&w2[l * h..(l + 1) * h], &a) + b2[l]))
    }

    pub fn forward(&self, x: &[f64]) -> DVector<f64> {
        self.forward_with(&self.flat_params(), x)
    }

    /// Hidden activations `a = tanh(W1 x + b1)` and their derivatives `1 - a²`.
    fn hidden(&self, x: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let pre = &self.w1 * DVector::from_column_slice(x) + &self.b1;
        let a = pre.map(f64::tanh);
        let da = a.map(|v| 1.0 - v * v);
        (a, da)
    }

    /// Analytic parameter Jacobian `∇_β φ(x)`, size `d x P`, in [`Self::flat_params`] order.
    pub fn parameter_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let (d, h) = (self.input_dim(), self.hidden_width());
        let (a, da) = self.hidden(x);
        let mut jac = DMatrix::zeros(d, self.num_params());
        for l in 0..d {
            for k in 0..h {
                let g = self.w2[(l, k)] * da[k];
                for m in 0..d {
                    jac[(l, k * d + m)] = g * x[m];
                }
                jac[(l, h * d + k)] = g;
                jac[(l, h * d + h + l * h + k)] = a[k];
            }
            jac[(l, h * d + h + d * h + l)] = 1.0;
        }
        jac
    }

    pub(crate) fn value_unchecked(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let d = self.input_dim();
        let (ax, dax) = self.hidden(x);
        let (ay, day) = self.hidden(y);
        let scale = dot(x, y) + 1.0;
        let weights = dax.component_mul(&day) * scale;
        let scaled_w2 = DMatrix::from_fn(d, self.hidden_width(), |l, k| self.w2[(l, k)] * weights[k]);
        let mut k = scaled_w2 * self.w2.transpose();
        let diag = ax.dot(&ay) + 1.0;
        for l in 0..d {
            k[(l, l)] += diag;
        }
        k
    }
}

/// `K_NTK(x, y) = ∇_β φ(x) ∇_β φ(y)ᵀ` in closed form:
/// `(a(x)·a(y) + 1) I + (x·y + 1) Σ_h a'_h(x) a'_h(y) w2_h w2_hᵀ`.
pub fn ntk_value(spec: &NtkSpec, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(spec.input_dim(), x.len())?;
    check_dim(spec.input_dim(), y.len())?;
    Ok(spec.value_unchecked(x, y))
}

/// Median pairwise Euclidean distance over the union of two point sets.
///
/// Falls back to the smallest nonzero distance when the median is zero and
/// to 1 when every distance is zero.
pub fn median_heuristic(a: &ParticleSet, b: &ParticleSet) -> Result<f64> {
    if a.len() + b.len() < 2 {
        return Err(Error::invalid("median heuristic needs at least two points"));
    }
    let all = if b.is_empty() {
        a.clone()
    } else if a.is_empty() {
        b.clone()
    } else {
        a.union(b)?
    };
    let n = all.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_dist(all.point(i), all.point(j)).sqrt());
        }
    }
    let med = median(&mut dists).expect("at least one pair");
    if med > 0.0 {
        return Ok(med);
    }
    Ok(dists.iter().cloned().find(|v| *v > 0.0).unwrap_or(1.0))
}
