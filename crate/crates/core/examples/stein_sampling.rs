//! Sampling N(0, 1) from its score alone, using Stein features built on
//! f(x) = [1, x]. No target samples are involved.
//!
//! cargo run --release --example stein_sampling

use kingflow::{
    run_flow, FeatureMap, FlowConfig, FlowMethod, FlowProblem, KernelSpec, ParticleSet,
    SteinFeatureMap, SteinPairing, TargetScore,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kingflow::Result<()> {
    let base = FeatureMap::affine(
        &DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        Some(&DVector::from_vec(vec![1.0, 0.0])),
    )?;
    let stein = SteinFeatureMap::new(base, TargetScore::standard_normal(1), SteinPairing::RoundRobin)?;
    let problem = FlowProblem::stein(FeatureMap::stein(stein)?, KernelSpec::RbfScalar { bandwidth: 1.0 });

    let init = ParticleSet::standard_normal(100, 1, &mut ChaCha8Rng::seed_from_u64(0)).map_points(|s, o| o[0] = s[0] + 3.0);
    let cfg = FlowConfig { log_every: 10, ..FlowConfig::default() };
    run_flow(FlowMethod::King, &problem, &init, &cfg, |snap| {
        println!("iter {:>3}  mean {:+.4}", snap.iteration, snap.particles.mean()[0]);
    })?;
    Ok(())
}
