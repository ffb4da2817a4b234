//! Projecting a linear drift onto the Gaussian manifold: time-smoothed
//! quadrature against the instantaneous limit as the time kernel narrows,
//! then how well a KiNG drift reproduces the natural gradient.
//!
//! cargo run --release --example projection_check

use kingflow::manifold::fisher_estimate;
use kingflow::projection::{
    alignment_residual, project_delta_limit, project_delta_quadrature, AlignmentMode,
    DriftTrajectory, TimeKernel,
};
use kingflow::{natural_gradient_kl, solve_king_drift, FeatureMap, KernelSpec, ParticleSet};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kingflow::Result<()> {
    let map = FeatureMap::gaussian_quadratic(2)?;
    let x = ParticleSet::standard_normal(300, 2, &mut ChaCha8Rng::seed_from_u64(0));
    let a = DMatrix::from_row_slice(2, 2, &[0.5, -0.3, 0.2, 0.4]);
    let mut vel = DMatrix::zeros(x.len(), 2);
    for (i, p) in x.iter().enumerate() {
        let h = &a * DVector::from_column_slice(p) + DVector::from_vec(vec![1.0, -0.5]);
        vel.row_mut(i).copy_from(&h.transpose());
    }
    let limit = project_delta_limit(&map, &x, &vel, 1e-10)?.delta;
    let traj = DriftTrajectory::new(x.clone(), vel)?;
    for sigma in [1.0, 0.5, 0.2, 0.1, 0.05] {
        let tk = TimeKernel::new(0.0, sigma)?;
        let q = project_delta_quadrature(&map, |t| traj.at(t), &tk, &tk.default_grid(), 1e-10)?;
        println!("sigma {sigma:<5} rel err {:.3e}", (&q.delta - &limit).norm() / limit.norm());
    }

    let y = ParticleSet::standard_normal(300, 2, &mut ChaCha8Rng::seed_from_u64(1)).map_points(|s, o| {
        o[0] = 1.0 + 0.8 * s[0];
        o[1] = -0.5 + 1.2 * s[1];
    });
    let ng = natural_gradient_kl(&map, &y, &x, 1e-8)?;
    let scale = fisher_estimate(&map, &x, 0.0)?.matrix.trace();
    for ridge in [1.0, 1e-2, 1e-4] {
        let sol = solve_king_drift(&map, &KernelSpec::RbfScalar { bandwidth: 1.0 }, &x, &y, ridge, 1e-8)?;
        let proj = project_delta_limit(&map, &x, &sol.eval(&x)?, 1e-8)?;
        println!(
            "ridge {ridge:<6} residual {:.3e} (Fisher trace {scale:.1})",
            alignment_residual(&ng, &proj, AlignmentMode::FisherWeighted)?
        );
    }
    Ok(())
}
