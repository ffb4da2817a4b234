//! Transporting a rotated copy of a four-blob dataset back onto the
//! original with ntKiNG.
//!
//! cargo run --release --example covariate_shift -- [degrees]

use kingflow::harness::{run_scenario, RunConfig};

fn main() -> kingflow::Result<()> {
    let degrees: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(45.0);
    let cfg = RunConfig::from_json(&format!(
        r#"{{"scenario": "CovariateShiftRotation",
            "dataset": {{"dim": 2, "n_particles": 200, "n_targets": 200,
                        "init": {{"kind": "RotatedTarget", "degrees": {degrees}}},
                        "target": {{"kind": "FourBlobs", "radius": 2.0, "spread": 0.3}}}}}}"#
    ))?;
    let r = run_scenario(&cfg)?;
    println!(
        "rotation {degrees} deg: nearest-source distance {:.3} -> {:.3}",
        r.get("ntking.nn_before").unwrap_or(f64::NAN),
        r.get("ntking.nn_after").unwrap_or(f64::NAN)
    );
    Ok(())
}
