//! Particles driven by KiNG on the Gaussian manifold against exact
//! parametric NGD from the same start. Writes tracking.csv when an output
//! directory is given.
//!
//! cargo run --release --example ngd_tracking -- [out_dir]

use kingflow::harness::{run_scenario, RunConfig, Scenario};

fn main() -> kingflow::Result<()> {
    let mut cfg = RunConfig::new(Scenario::NgdTracking);
    cfg.output_dir = std::env::args().nth(1).map(Into::into);
    let report = run_scenario(&cfg)?;
    for key in ["king.max_tracking_w2", "king.particles_target_w2", "king.ngd_target_w2"] {
        println!("{key:<26} {:.4}", report.get(key).unwrap_or(f64::NAN));
    }
    if let Some(dir) = &report.output_dir {
        println!("checkpoints in {}", dir.join("tracking.csv").display());
    }
    Ok(())
}
