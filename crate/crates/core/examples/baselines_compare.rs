//! KiNG, ntKiNG, Wasserstein gradient flow and MMD flow on a 5-d bimodal
//! target, all from the same initial particles.
//!
//! cargo run --release --example baselines_compare -- [seed]

use kingflow::harness::{run_scenario, RunConfig, Scenario};

fn main() -> kingflow::Result<()> {
    let mut cfg = RunConfig::new(Scenario::BimodalCompare);
    cfg.seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let report = run_scenario(&cfg)?;
    println!("{:<9} {:>9} {:>9}", "method", "initial", "final");
    for m in &report.methods {
        println!(
            "{:<9} {:>9.4} {:>9.4}",
            m.spec.method.name(),
            m.initial_mmd.unwrap_or(f64::NAN),
            m.final_mmd.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
