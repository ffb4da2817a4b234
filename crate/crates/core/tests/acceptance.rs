//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails. Run with `cargo test --release --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use kingflow::flows::solve_drift_with_gap;
use kingflow::harness::{run_scenario, RunConfig, ScenarioReport};
use kingflow::kernels::{ntk_value, NtkSpec};
use kingflow::manifold::{fisher_estimate, select_centers};
use kingflow::ngd::natural_gradient_kl;
use kingflow::projection::{
    project_delta_limit, project_delta_quadrature, trapezoid, DriftTrajectory, TimeKernel,
};
use kingflow::*;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn normal(n: usize, d: usize, seed: u64, shift: f64) -> ParticleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ParticleSet::standard_normal(n, d, &mut rng).map_points(|s, o| {
        for (a, b) in o.iter_mut().zip(s) {
            *a = shift + b;
        }
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn run(json: &str, seed: u64) -> ScenarioReport {
    let mut cfg = RunConfig::from_json(json).unwrap();
    cfg.seed = seed;
    run_scenario(&cfg).unwrap()
}

fn key_median(reports: &[ScenarioReport], key: &str) -> f64 {
    median(reports.iter().map(|r| r.get(key).unwrap()).collect())
}

fn woodbury() -> Outcome {
    let x = normal(20, 2, 11, 0.0);
    let y = normal(30, 2, 12, 1.0);
    let map = FeatureMap::gaussian_quadratic(2).unwrap();
    let ng = natural_gradient_kl(&map, &y, &x, 1e-8).unwrap();
    let ridge = 1e-2;
    let sol = solve_drift_with_gap(&map, &ExplicitFeatureKernel, &x, ng.gap.clone(), ng.fisher.clone(), ridge, true)
        .unwrap();
    let query = normal(15, 2, 13, 0.5);
    let err = rel_err_mat(&sol.eval(&query).unwrap(), &primal_drift(&map, &x, &ng.gap, &ng.fisher, ridge, &query));
    (err <= 1e-8, format!("rel err {err:.2e} (tol 1e-8)"))
}

fn time_kernel_moments() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for sigma in [0.05, 0.1, 0.5] {
        let tk = TimeKernel::new(0.7, sigma).unwrap();
        let grid = tk.default_grid();
        let m0 = trapezoid(&grid, |t| tk.deriv(t));
        let m1 = trapezoid(&grid, |t| (t - tk.t0) * tk.deriv(t));
        ok &= m0.abs() <= 1e-6 && (m1 + 1.0).abs() <= 1e-4;
        parts.push(format!("σ={sigma}: {m0:.1e}, {:.1e}", m1 + 1.0));
    }
    (ok, parts.join("; "))
}

fn projection_convergence() -> Outcome {
    let map = FeatureMap::gaussian_quadratic(2).unwrap();
    let anchors = normal(300, 2, 3, 0.0);
    let a = DMatrix::from_row_slice(2, 2, &[0.5, -0.3, 0.2, 0.4]);
    let b = DVector::from_vec(vec![1.0, -0.5]);
    let mut vel = DMatrix::zeros(anchors.len(), 2);
    for (i, x) in anchors.iter().enumerate() {
        let h = &a * DVector::from_column_slice(x) + &b;
        vel.row_mut(i).copy_from(&h.transpose());
    }
    let traj = DriftTrajectory::new(anchors.clone(), vel.clone()).unwrap();
    let limit = project_delta_limit(&map, &anchors, &vel, 1e-10).unwrap().delta;
    let errs: Vec<f64> = [0.5, 0.2, 0.1]
        .iter()
        .map(|&s| {
            let tk = TimeKernel::new(0.0, s).unwrap();
            let q = project_delta_quadrature(&map, |t| traj.at(t), &tk, &tk.default_grid(), 1e-10).unwrap();
            rel_err_vec(&q.delta, &limit)
        })
        .collect();
    let ok = errs.windows(2).all(|w| w[1] < w[0]) && errs[2] < 5e-2;
    (ok, format!("rel err over σ=0.5,0.2,0.1: {:.2e}, {:.2e}, {:.2e}", errs[0], errs[1], errs[2]))
}

fn bimodal_compare() -> Outcome {
    let reports: Vec<_> = (0..5).map(|s| run(r#"{"scenario": "BimodalCompare"}"#, s)).collect();
    let init = key_median(&reports, "king.initial_mmd");
    let m = |k: &str| key_median(&reports, &format!("{k}.final_mmd"));
    let (king, ntk, wgf, mf) = (m("king"), m("ntking"), m("wgf"), m("mmd_flow"));
    let ok = king < 0.3 * init && ntk < 0.3 * init && ntk <= wgf && ntk <= mf;
    (
        ok,
        format!("median MMD initial {init:.3}, king {king:.3}, ntking {ntk:.3}, wgf {wgf:.3}, mmd_flow {mf:.3}"),
    )
}

fn guidance() -> Outcome {
    let reports: Vec<_> = (0..5).map(|s| run(r#"{"scenario": "ManifoldGuidance"}"#, s)).collect();
    let std = key_median(&reports, "king.std");
    let mean = key_median(&reports, "king.mean");
    ((1.5..=3.5).contains(&std) && mean.abs() < 0.5, format!("median std {std:.3}, mean {mean:.3}"))
}

fn bifurcation() -> Outcome {
    let json = r#"{"scenario": "ManifoldGuidance", "manifold": {"kind": "Rbf"},
                   "methods": [{"method": "King"}, {"method": "NtKing"}]}"#;
    let reports: Vec<_> = (0..5).map(|s| run(json, s)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for m in ["king", "ntking"] {
        let frac = key_median(&reports, &format!("{m}.frac_positive"));
        let pos = key_median(&reports, &format!("{m}.mean_positive"));
        let neg = key_median(&reports, &format!("{m}.mean_negative"));
        ok &= (0.3..=0.7).contains(&frac) && (1.0..=3.0).contains(&pos) && (-3.0..=-1.0).contains(&neg);
        parts.push(format!("{m}: frac+ {frac:.2}, means {pos:.2}/{neg:.2}"));
    }
    (ok, parts.join("; "))
}

fn tracking() -> Outcome {
    let r = run(r#"{"scenario": "NgdTracking"}"#, 0);
    let max = r.get("king.max_tracking_w2").unwrap();
    let pe = r.get("king.particles_target_w2").unwrap();
    let ne = r.get("king.ngd_target_w2").unwrap();
    (
        max < 0.3 && pe < 0.3 && ne < 0.3,
        format!("max tracking W2 {max:.3}, endpoints {pe:.3} (particles) {ne:.3} (ngd)"),
    )
}

fn stein_identity_and_sampling() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let base = FeatureMap::rbf(&normal(3, 2, 7, 0.0), 1.0).unwrap();
    let targets = [
        ("gaussian", TargetScore::DiagonalGaussian { mean: vec![0.5, -1.0], var: vec![1.0, 2.0] }),
        ("mixture", TargetScore::SymmetricMixture { mean: vec![1.5, 0.5], var: 0.6 }),
    ];
    for (name, score) in targets {
        let map = FeatureMap::stein(SteinFeatureMap::new(base.clone(), score.clone(), SteinPairing::Full).unwrap())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = score.sample(100_000, &mut rng);
        let feats = map.features(&x).unwrap();
        let n = feats.nrows() as f64;
        let mut worst: f64 = 0.0;
        for c in 0..feats.ncols() {
            let col = feats.column(c);
            let mean = col.mean();
            let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
            worst = worst.max(mean.abs() / (sd / n.sqrt()));
        }
        ok &= worst <= 4.0;
        parts.push(format!("{name} max |mean|/stderr {worst:.2}"));
    }
    let r = run(r#"{"scenario": "SteinSampling"}"#, 0);
    let mean = r.get("king.mean").unwrap();
    let iters = r.config.flow.as_ref().unwrap().iterations;
    ok &= mean.abs() < 0.5 && iters <= 100;
    parts.push(format!("sampling mean 3 -> {mean:.3} in {iters} steps"));
    (ok, parts.join("; "))
}

fn hygiene() -> Outcome {
    let pts = normal(40, 2, 17, 0.0);
    let centers = select_centers(&pts, 6, 1);
    let affine_base = FeatureMap::affine(
        &DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
        Some(&DVector::from_vec(vec![1.0, 0.0, 0.0])),
    )
    .unwrap();
    let stein = |score: TargetScore, pairing| {
        FeatureMap::stein(SteinFeatureMap::new(affine_base.clone(), score, pairing).unwrap()).unwrap()
    };
    let maps = vec![
        FeatureMap::gaussian_quadratic(2).unwrap(),
        FeatureMap::rbf(&centers, 0.8).unwrap(),
        FeatureMap::informed_pairwise(&centers, 0.8, vec![(0, 0), (0, 1), (1, 1)]).unwrap(),
        FeatureMap::linear(&DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 0.0, 3.0])).unwrap(),
        affine_base.clone(),
        stein(TargetScore::standard_normal(2), SteinPairing::RoundRobin),
        stein(TargetScore::SymmetricMixture { mean: vec![1.0, -0.5], var: 0.7 }, SteinPairing::Full),
    ];
    let mut worst_jac: f64 = 0.0;
    let mut all_pd = true;
    let targets = normal(40, 2, 18, 1.0);
    for map in &maps {
        for x in pts.iter().take(10) {
            let fd = fd_jacobian(|z| map.eval(z).unwrap(), x, 1e-5);
            worst_jac = worst_jac.max(rel_err_mat(&map.jacobian(x).unwrap(), &fd));
        }
        let fisher = fisher_estimate(map, &pts, 1e-8).unwrap();
        all_pd &= fisher.matrix.clone().cholesky().is_some();
        for k in [KernelSpec::RbfScalar { bandwidth: 1.0 }, KernelSpec::DiagonalizedScalar { bandwidth: 1.0 }] {
            let sol = if matches!(k, KernelSpec::RbfScalar { .. }) {
                solve_king_drift(map, &k, &pts, &targets, 1e-3, 1e-8)
            } else {
                solve_ntking_drift(map, &k, &pts, &targets, 1e-3, 1e-8)
            }
            .unwrap();
            all_pd &= sol.gamma().clone().cholesky().is_some();
        }
    }
    let mut worst_ntk: f64 = 0.0;
    for (h, d) in [(4, 2), (8, 3)] {
        let spec = NtkSpec::new(d, h, 5).unwrap();
        let q = normal(3, d, 6, 0.0);
        for x in q.iter() {
            for y in q.iter() {
                worst_ntk = worst_ntk.max(rel_err_mat(&ntk_value(&spec, x, y).unwrap(), &fd_ntk(&spec, x, y)));
            }
        }
    }
    let a = normal(30, 2, 20, 0.0);
    let b = normal(25, 2, 21, 0.5);
    let self_mmd = mmd(&a, &a, None).unwrap().value;
    let asym = (mmd(&a, &b, None).unwrap().value - mmd(&b, &a, None).unwrap().value).abs();
    let ok = worst_jac < 1e-5 && all_pd && worst_ntk < 1e-4 && self_mmd.abs() < 1e-7 && asym < 1e-12;
    (
        ok,
        format!(
            "jacobian {worst_jac:.1e}, fisher/gamma PD {all_pd}, ntk {worst_ntk:.1e}, mmd(a,a) {self_mmd:.1e}, asym {asym:.1e}"
        ),
    )
}

fn rotation() -> Outcome {
    let r = run(r#"{"scenario": "CovariateShiftRotation"}"#, 0);
    let ratio = r.get("ntking.nn_ratio").unwrap();
    (
        ratio <= 0.5,
        format!(
            "nn distance {:.3} -> {:.3}, ratio {ratio:.3}",
            r.get("ntking.nn_before").unwrap(),
            r.get("ntking.nn_after").unwrap()
        ),
    )
}

fn graphical_model() -> Outcome {
    let dataset = r#""dataset": {"dim": 10, "n_particles": 200, "n_targets": 200, "init": {"kind": "StandardNormal"},
                      "target": {"kind": "Ggm", "edge_prob": 0.15, "edge_value": 0.3}}"#;
    let informed = run(&format!(r#"{{"scenario": "GraphicalModel", {dataset}}}"#), 1);
    let rbf = run(&format!(r#"{{"scenario": "GraphicalModel", "manifold": {{"kind": "Rbf"}}, {dataset}}}"#), 1);
    let ri = informed.get("ntking.recall").unwrap();
    let rr = rbf.get("ntking.recall").unwrap();
    let iters = informed.config.flow.as_ref().unwrap().iterations;
    (
        ri >= 0.9 && rr < ri && iters == 30,
        format!(
            "recall informed {ri:.2}, rbf {rr:.2} ({} true edges, {iters} iterations)",
            informed.get("true_edges").unwrap()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("woodbury_equivalence", woodbury),
        ("time_kernel_moments", time_kernel_moments),
        ("projection_convergence", projection_convergence),
        ("bimodal_compare", bimodal_compare),
        ("gaussian_manifold_guidance", guidance),
        ("rbf_manifold_bifurcation", bifurcation),
        ("ngd_tracking", tracking),
        ("stein_identity_and_sampling", stein_identity_and_sampling),
        ("numerical_hygiene", hygiene),
        ("rotation_covariate_shift", rotation),
        ("graphical_model_contrast", graphical_model),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let secs = start.elapsed().as_secs_f64();
        println!("[{}] {:>2} {name}: {detail} ({secs:.1}s)", if ok { "PASS" } else { "FAIL" }, i + 1);
        failed += usize::from(!ok);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
