#![allow(dead_code)]

use kingflow::flows::DriftKernel;
use kingflow::kernels::{MatrixKernel, NtkSpec};
use kingflow::{FeatureMap, FisherMatrix, ParticleSet};
use nalgebra::{DMatrix, DVector};

pub fn rel_err_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rel_err_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Central-difference Jacobian of `f` at `x`, one row per output.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> DVector<f64>, x: &[f64], h: f64) -> DMatrix<f64> {
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for c in 0..x.len() {
        xp[c] = x[c] + h;
        let fp = f(&xp);
        xp[c] = x[c] - h;
        let fm = f(&xp);
        xp[c] = x[c];
        jac.set_column(c, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// `ψ(x) = [x0, x1, x0², x0·x1, sin(x1)]`; the kernel `k(x, y) = ψ(x)·ψ(y)`
/// has cross-gradient `Jψ(x)ᵀ Jψ(y)`.
#[derive(Clone)]
pub struct ExplicitFeatureKernel;

impl ExplicitFeatureKernel {
    pub fn psi(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![x[0], x[1], x[0] * x[0], x[0] * x[1], x[1].sin()])
    }

    pub fn jpsi(x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            5,
            2,
            &[1.0, 0.0, 0.0, 1.0, 2.0 * x[0], 0.0, x[1], x[0], 0.0, x[1].cos()],
        )
    }
}

impl MatrixKernel for ExplicitFeatureKernel {
    fn matrix(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        Self::jpsi(x).transpose() * Self::jpsi(y)
    }
}

impl DriftKernel for ExplicitFeatureKernel {}

/// Direct weight-space ridge solve
/// `w* = (BᵀF⁻¹B + λI)⁻¹ BᵀF⁻¹ g`, `B = (1/n) Σ ∇T(x_i) Jψ(x_i)ᵀ`,
/// returning the drift `Jψ(x)ᵀ w*` at each query point.
pub fn primal_drift(
    map: &FeatureMap,
    particles: &ParticleSet,
    gap: &DVector<f64>,
    fisher: &FisherMatrix,
    ridge: f64,
    query: &ParticleSet,
) -> DMatrix<f64> {
    let n = particles.len() as f64;
    let mut b = DMatrix::zeros(map.feature_dim(), 5);
    for x in particles.iter() {
        b += map.jacobian(x).unwrap() * ExplicitFeatureKernel::jpsi(x).transpose();
    }
    b /= n;
    let finv = fisher.matrix.clone().try_inverse().unwrap();
    let lhs = b.transpose() * &finv * &b + DMatrix::identity(5, 5) * ridge;
    let rhs = b.transpose() * &finv * gap;
    let w = lhs.lu().solve(&rhs).unwrap();
    let mut out = DMatrix::zeros(query.len(), query.dim());
    for (i, x) in query.iter().enumerate() {
        let h = ExplicitFeatureKernel::jpsi(x).transpose() * &w;
        out.row_mut(i).copy_from(&h.transpose());
    }
    out
}

/// NTK from a finite-difference parameter Jacobian: `J(x) J(y)ᵀ`.
pub fn fd_ntk(spec: &NtkSpec, x: &[f64], y: &[f64]) -> DMatrix<f64> {
    let params = spec.flat_params();
    let jac = |z: &[f64]| fd_jacobian(|p| spec.forward_with(p, z), &params, 1e-6);
    jac(x) * jac(y).transpose()
}
