//! Same bimodal target, but on a manifold of RBF statistics. KiNG and
//! ntKiNG now split the particles between the two modes.
//!
//! cargo run --release --example rbf_manifold_bifurcation

use kingflow::harness::datasets::gen_symmetric_bimodal;
use kingflow::kernels::median_heuristic;
use kingflow::manifold::select_centers;
use kingflow::{
    run_flow, FeatureMap, FlowConfig, FlowMethod, FlowProblem, KernelSpec, NtkSpec, ParticleSet,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kingflow::Result<()> {
    let targets = gen_symmetric_bimodal(1, 2.0, 100, 0)?;
    let init = ParticleSet::standard_normal(100, 1, &mut ChaCha8Rng::seed_from_u64(1));
    let bw = median_heuristic(&init, &targets)?;
    let map = FeatureMap::rbf(&select_centers(&init, 50, 2), bw)?;

    let runs = [
        (FlowMethod::King, KernelSpec::RbfScalar { bandwidth: bw }, 0.01),
        (FlowMethod::NtKing, KernelSpec::EmpiricalNtk(NtkSpec::new(1, 64, 3)?), 0.1),
    ];
    for (method, kernel, ridge) in runs {
        let problem = FlowProblem::samples(targets.clone()).with_manifold(map.clone(), kernel);
        let cfg = FlowConfig { ridge, ..FlowConfig::default() };
        let out = run_flow(method, &problem, &init, &cfg, |_| {})?;
        let (pos, neg): (Vec<f64>, Vec<f64>) = out.iter().map(|x| x[0]).partition(|x| *x > 0.0);
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        println!(
            "{:<7} x>0: {:.2}  mean(x>0) {:.2}  mean(x<=0) {:.2}",
            method.name(),
            pos.len() as f64 / out.len() as f64,
            avg(&pos),
            avg(&neg)
        );
    }
    Ok(())
}
