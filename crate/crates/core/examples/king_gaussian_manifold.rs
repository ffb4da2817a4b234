//! KiNG on the 1-d Gaussian manifold with a bimodal target. The flow can
//! only express a single Gaussian, so particles settle into one wide bump
//! covering both modes instead of splitting.
//!
//! cargo run --release --example king_gaussian_manifold

use kingflow::harness::datasets::gen_symmetric_bimodal;
use kingflow::{run_flow, FeatureMap, FlowConfig, FlowMethod, FlowProblem, KernelSpec, ParticleSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kingflow::Result<()> {
    let targets = gen_symmetric_bimodal(1, 2.0, 100, 0)?;
    let init = ParticleSet::standard_normal(100, 1, &mut ChaCha8Rng::seed_from_u64(1));
    let problem = FlowProblem::samples(targets.clone())
        .with_manifold(FeatureMap::gaussian_quadratic(1)?, KernelSpec::RbfScalar { bandwidth: 1.0 })
        .with_mmd_reference(targets);
    let cfg = FlowConfig { log_every: 20, ..FlowConfig::default() };

    let out = run_flow(FlowMethod::King, &problem, &init, &cfg, |snap| {
        println!(
            "iter {:>3}  mmd {:.4}  residual {:.2e}",
            snap.iteration,
            snap.diagnostics.mmd.unwrap_or(f64::NAN),
            snap.diagnostics.residual.unwrap_or(f64::NAN)
        );
    })?;

    let xs: Vec<f64> = out.iter().map(|x| x[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    println!("final mean {mean:.3}, std {std:.3}");
    Ok(())
}
