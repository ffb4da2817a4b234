//! Kernelized natural-gradient particle flows.
//!
//! Particles `X_t` are moved by a drift `h` chosen so that the induced change
//! of the mean sufficient statistic `E[T(X_t)]` follows the natural gradient
//! of `KL[p, q_θ]` on the exponential family defined by `T`. The drift lives
//! in an RKHS (KiNG) or the tangent space of a wide network (ntKiNG) and is
//! obtained in closed form from one `dT x dT` linear solve per step.
//!
//! Module map:
//! - [`manifold`]: feature maps `T`, Jacobians, Fisher estimates.
//! - [`ngd`]: mean-statistic gaps, natural directions, exact Gaussian NGD.
//! - [`kernels`]: scalar RBF, diagonalized RBF and empirical NTK kernels.
//! - [`projection`]: time-kernel projection of a drift onto the manifold.
//! - [`flows`]: drift solves, baselines and the Euler stepper.
//! - [`stein`]: Stein feature maps for targets known through their score.
//! - [`metrics`]: MMD and Gaussian-fit distances.
//! - [`harness`]: configs, datasets and scenario runners behind the CLI.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flows;
pub mod harness;
pub mod kernels;
pub(crate) mod linalg;
pub mod manifold;
pub mod metrics;
pub mod ngd;
pub mod particles;
pub mod projection;
pub mod stein;

pub use error::{Error, Result};
pub use flows::{
    eval_drift, mmd_flow_velocity, run_flow, solve_drift_with_gap, solve_king_drift, solve_ntking_drift,
    wgf_velocity, Diagnostics, DriftKernel, DriftSolution, FlowConfig, FlowMethod, FlowProblem, FlowSnapshot,
    FlowTarget,
};
pub use kernels::{KernelSpec, MatrixKernel, NtkConfig, NtkSpec};
pub use manifold::{fisher_estimate, FeatureMap, FisherMatrix};
pub use metrics::{fit_gaussian, gaussian_w2, mmd, MmdEstimate};
pub use ngd::{natural_gradient_kl, NatGradResult};
pub use particles::ParticleSet;
pub use stein::{SteinFeatureMap, SteinPairing, TargetScore};
