//! Scenario runner: data generation, per-method flows, summaries and output files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{DatasetSpec, InitSpec, ManifoldSpec, MethodSpec, RunConfig, Scenario, TargetSpec};
use super::datasets::{
    edge_recall, gen_four_blobs, gen_gaussian_mixture, gen_ggm_samples, mean_nearest_distance, precision_support,
    rotate_dataset, GgmSpec,
};
use crate::error::{Error, Result};
use crate::flows::{run_flow, FlowConfig, FlowMethod, FlowProblem, FlowTarget};
use crate::kernels::{median_heuristic, KernelSpec, NtkSpec, DEFAULT_HIDDEN_WIDTH};
use crate::manifold::{select_centers, FeatureMap};
use crate::metrics::{fit_gaussian, gaussian_w2, mmd};
use crate::ngd::{exact_ngd_step, gaussian_moment_to_natural, gaussian_natural_to_moment, sample_gaussian, DEFAULT_MC_SAMPLES};
use crate::particles::ParticleSet;
use crate::stein::SteinFeatureMap;

/// Independent seed streams derived from the run seed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Seeds {
    pub run: u64,
    pub targets: u64,
    pub init: u64,
    pub reference: u64,
    pub centers: u64,
    pub network: u64,
    pub graph: u64,
    pub monte_carlo: u64,
}

impl Seeds {
    pub fn derive(run: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(run);
        Self {
            run,
            targets: rng.random(),
            init: rng.random(),
            reference: rng.random(),
            centers: rng.random(),
            network: rng.random(),
            graph: rng.random(),
            monte_carlo: rng.random(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodReport {
    pub spec: MethodSpec,
    pub final_particles: ParticleSet,
    pub initial_mmd: Option<f64>,
    pub final_mmd: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    /// Fully resolved config, data-dependent parts made explicit.
    pub config: RunConfig,
    pub seeds: Seeds,
    pub methods: Vec<MethodReport>,
    /// Scenario-specific numbers, keyed `method.quantity` or `quantity`.
    pub summary: BTreeMap<String, f64>,
    pub output_dir: Option<PathBuf>,
}

impl ScenarioReport {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.summary.get(key).copied()
    }

    pub fn method(&self, m: FlowMethod) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.spec.method == m)
    }
}

struct Data {
    init: ParticleSet,
    targets: Option<ParticleSet>,
    reference: Option<ParticleSet>,
    ggm: Option<GgmSpec>,
    gaussian_target: Option<(DVector<f64>, DMatrix<f64>)>,
}

fn gaussian_params(mean: &[f64], cov: &[Vec<f64>], dim: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if mean.len() != dim || cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
        return Err(Error::Config(format!("Gaussian target must have dimension {dim}")));
    }
    Ok((DVector::from_column_slice(mean), DMatrix::from_fn(dim, dim, |i, j| cov[i][j])))
}

fn draw_targets(ds: &DatasetSpec, ggm: Option<&GgmSpec>, n: usize, seed: u64) -> Result<ParticleSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match &ds.target {
        TargetSpec::Mixture { means, weights } => gen_gaussian_mixture(ds.dim, means, weights, n, seed),
        TargetSpec::Gaussian { mean, cov } => {
            let (m, c) = gaussian_params(mean, cov, ds.dim)?;
            sample_gaussian(&m, &c, n, &mut rng)
        }
        TargetSpec::Ggm { .. } => gen_ggm_samples(ggm.expect("resolved GGM"), n, seed),
        TargetSpec::FourBlobs { radius, spread } => {
            if ds.dim != 2 {
                return Err(Error::Config("FourBlobs targets are 2-d".into()));
            }
            gen_four_blobs(n, *radius, *spread, seed)
        }
        TargetSpec::Score { score } => {
            if score.dim() != ds.dim {
                return Err(Error::Config(format!("target score must have dimension {}", ds.dim)));
            }
            Ok(score.sample(n, &mut rng))
        }
    }
}

fn generate(cfg: &mut RunConfig, seeds: &Seeds) -> Result<Data> {
    let ds = cfg.dataset.as_mut().expect("resolved");
    let ggm = match &mut ds.target {
        TargetSpec::Ggm {
            edge_prob,
            edge_value,
            precision,
        } => {
            let spec = match precision {
                Some(p) => GgmSpec {
                    dim: ds.dim,
                    edge_prob: *edge_prob,
                    edge_value: *edge_value,
                    precision: p.clone(),
                },
                None => GgmSpec::random(ds.dim, *edge_prob, *edge_value, seeds.graph)?,
            };
            *precision = Some(spec.precision.clone());
            Some(spec)
        }
        _ => None,
    };
    let ds = cfg.dataset.as_ref().expect("resolved");
    let gaussian_target = match &ds.target {
        TargetSpec::Gaussian { mean, cov } => Some(gaussian_params(mean, cov, ds.dim)?),
        _ => None,
    };
    let score_only = matches!(ds.target, TargetSpec::Score { .. });
    let targets = if score_only {
        None
    } else {
        Some(draw_targets(ds, ggm.as_ref(), ds.n_targets, seeds.targets)?)
    };
    let reference = if ds.n_reference > 0 {
        Some(draw_targets(ds, ggm.as_ref(), ds.n_reference, seeds.reference)?)
    } else {
        None
    };
    let init = match &ds.init {
        InitSpec::StandardNormal { shift } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seeds.init);
            let shift = *shift;
            ParticleSet::standard_normal(ds.n_particles, ds.dim, &mut rng).map_points(|s, o| {
                for (a, b) in o.iter_mut().zip(s) {
                    *a = b + shift;
                }
            })
        }
        InitSpec::RotatedTarget { degrees } => {
            rotate_dataset(&draw_targets(ds, ggm.as_ref(), ds.n_particles, seeds.init)?, *degrees)?
        }
    };
    Ok(Data {
        init,
        targets,
        reference,
        ggm,
        gaussian_target,
    })
}

/// Median heuristic over the initial particles and (when present) the targets.
fn initial_bandwidth(data: &Data) -> Result<f64> {
    let empty = ParticleSet::empty(data.init.dim());
    median_heuristic(&data.init, data.targets.as_ref().unwrap_or(&empty))
}

fn resolve_manifold(cfg: &mut RunConfig, data: &Data, seeds: &Seeds) -> Result<()> {
    let ds = cfg.dataset.as_ref().expect("resolved");
    let spec = cfg.manifold.clone().expect("resolved");
    let centers = |count: usize| -> Result<ParticleSet> {
        if count == 0 {
            return Err(Error::Config("num_centers must be positive".into()));
        }
        Ok(select_centers(&data.init, count, seeds.centers))
    };
    let map = match spec {
        ManifoldSpec::Explicit { map } => map,
        ManifoldSpec::GaussianQuadratic => FeatureMap::gaussian_quadratic(ds.dim)?,
        ManifoldSpec::Rbf { num_centers, bandwidth } => {
            let bw = bandwidth.map_or_else(|| initial_bandwidth(data), Ok)?;
            FeatureMap::rbf(&centers(num_centers)?, bw)?
        }
        ManifoldSpec::InformedPairwise {
            num_centers,
            bandwidth,
            pairs,
        } => {
            let bw = bandwidth.map_or_else(|| initial_bandwidth(data), Ok)?;
            let pairs = match (pairs, &data.ggm) {
                (Some(p), _) => p,
                (None, Some(g)) => g.support_pairs(),
                (None, None) => return Err(Error::Config("InformedPairwise needs pairs outside GraphicalModel".into())),
            };
            FeatureMap::informed_pairwise(&centers(num_centers)?, bw, pairs)?
        }
        ManifoldSpec::Stein { base, pairing } => {
            let score = match &ds.target {
                TargetSpec::Score { score } => score.clone(),
                _ => return Err(Error::Config("Stein manifolds need a Score target".into())),
            };
            let base = match base {
                Some(b) => *b,
                None => {
                    // f(x) = [1, x]
                    let d = ds.dim;
                    let mut w = DMatrix::zeros(d + 1, d);
                    w.view_mut((1, 0), (d, d)).fill_with_identity();
                    let mut offset = DVector::zeros(d + 1);
                    offset[0] = 1.0;
                    FeatureMap::affine(&w, Some(&offset))?
                }
            };
            FeatureMap::stein(SteinFeatureMap::new(base, score, pairing)?)?
        }
    };
    if map.input_dim() != ds.dim {
        return Err(Error::Config(format!(
            "manifold input dimension {} does not match dataset dimension {}",
            map.input_dim(),
            ds.dim
        )));
    }
    cfg.manifold = Some(ManifoldSpec::Explicit { map });
    Ok(())
}

fn resolve_methods(cfg: &mut RunConfig, data: &Data, seeds: &Seeds) -> Result<()> {
    let flow = cfg.flow.clone().expect("resolved");
    let dim = data.init.dim();
    for m in &mut cfg.methods {
        if m.ridge.is_none() && matches!(m.method, FlowMethod::King | FlowMethod::NtKing) {
            m.ridge = Some(flow.ridge);
        }
        if m.kernel.is_none() {
            m.kernel = match m.method {
                FlowMethod::King => Some(KernelSpec::RbfScalar {
                    bandwidth: initial_bandwidth(data)?,
                }),
                FlowMethod::NtKing => Some(KernelSpec::EmpiricalNtk(NtkSpec::new(
                    dim,
                    DEFAULT_HIDDEN_WIDTH,
                    seeds.network,
                )?)),
                _ => None,
            };
        }
        if let Some(KernelSpec::EmpiricalNtk(n)) = &m.kernel {
            if n.input_dim() != dim {
                return Err(Error::Config("NTK input dimension does not match the dataset".into()));
            }
        }
    }
    Ok(())
}

#[derive(Default)]
struct Trace {
    particles: String,
    metrics: String,
    snapshots: Vec<(usize, f64, ParticleSet)>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run_method(
    spec: &MethodSpec,
    cfg: &RunConfig,
    data: &Data,
    keep_snapshots: bool,
) -> Result<(ParticleSet, Trace)> {
    let flow = FlowConfig {
        ridge: spec.ridge.unwrap_or(cfg.flow.as_ref().expect("resolved").ridge),
        ..cfg.flow.clone().expect("resolved")
    };
    let map = match &cfg.manifold {
        Some(ManifoldSpec::Explicit { map }) => map.clone(),
        _ => unreachable!("manifold resolved before running"),
    };
    let target = match &data.targets {
        Some(t) => FlowTarget::Samples(t.clone()),
        None => FlowTarget::Stein,
    };
    let problem = FlowProblem {
        target,
        map: spec.kernel.as_ref().map(|_| map),
        kernel: spec.kernel.clone(),
        mmd_reference: data.reference.clone(),
    };
    let dim = data.init.dim();
    let mut trace = Trace::default();
    trace.particles.push_str("iteration,t,index");
    for i in 0..dim {
        let _ = write!(trace.particles, ",x{i}");
    }
    trace.particles.push('\n');
    trace.metrics.push_str("iteration,t,mmd,drift_norm,residual\n");
    let out = run_flow(spec.method, &problem, &data.init, &flow, |s| {
        for (k, p) in s.particles.iter().enumerate() {
            let _ = write!(trace.particles, "{},{},{}", s.iteration, s.t, k);
            for v in p {
                let _ = write!(trace.particles, ",{v}");
            }
            trace.particles.push('\n');
        }
        let d = &s.diagnostics;
        let _ = writeln!(
            trace.metrics,
            "{},{},{},{},{}",
            s.iteration,
            s.t,
            fmt_opt(d.mmd),
            fmt_opt(d.drift_norm),
            fmt_opt(d.residual)
        );
        if keep_snapshots {
            trace.snapshots.push((s.iteration, s.t, s.particles.clone()));
        }
    })?;
    Ok((out, trace))
}

fn coordinate_stats(prefix: &str, x: &ParticleSet, summary: &mut BTreeMap<String, f64>) {
    let v: Vec<f64> = x.iter().map(|p| p[0]).collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    let pos: Vec<f64> = v.iter().copied().filter(|a| *a > 0.0).collect();
    let neg: Vec<f64> = v.iter().copied().filter(|a| *a <= 0.0).collect();
    summary.insert(format!("{prefix}.mean"), mean);
    summary.insert(format!("{prefix}.std"), std);
    summary.insert(format!("{prefix}.frac_positive"), pos.len() as f64 / n);
    if !pos.is_empty() {
        summary.insert(format!("{prefix}.mean_positive"), pos.iter().sum::<f64>() / pos.len() as f64);
    }
    if !neg.is_empty() {
        summary.insert(format!("{prefix}.mean_negative"), neg.iter().sum::<f64>() / neg.len() as f64);
    }
}

/// Exact NGD steps per particle step. Euler steps in natural coordinates
/// overshoot far from the target, so the reference integrates more finely.
pub const NGD_SUBSTEPS: usize = 10;

/// Exact Gaussian NGD run alongside the particle snapshots; returns CSV rows.
fn track_ngd(
    prefix: &str,
    snapshots: &[(usize, f64, ParticleSet)],
    data: &Data,
    flow: &FlowConfig,
    init_shift: f64,
    seeds: &Seeds,
    summary: &mut BTreeMap<String, f64>,
) -> Result<String> {
    let (tm, tc) = data
        .gaussian_target
        .clone()
        .ok_or_else(|| Error::Config("NgdTracking needs a Gaussian target".into()))?;
    let targets = data.targets.as_ref().expect("sample targets");
    let d = data.init.dim();
    // exact NGD starts from the law the particles were drawn from
    let mut params = gaussian_moment_to_natural(&DVector::from_element(d, init_shift), &DMatrix::identity(d, d))?;
    let mut csv = String::from("iteration,t,w2_particles_ngd,w2_particles_target,w2_ngd_target\n");
    let mut it = 0;
    let mut worst: f64 = 0.0;
    let mut last = (0.0, 0.0);
    for (k, t, x) in snapshots {
        while it < *k {
            for sub in 0..NGD_SUBSTEPS {
                let seed = seeds.monte_carlo.wrapping_add((it * NGD_SUBSTEPS + sub) as u64);
                params = exact_ngd_step(&params, targets, flow.step / NGD_SUBSTEPS as f64, DEFAULT_MC_SAMPLES, seed)?;
            }
            it += 1;
        }
        let (pm, pc) = gaussian_natural_to_moment(&params)?;
        let (xm, xc) = fit_gaussian(x)?;
        let w_pn = gaussian_w2(&xm, &xc, &pm, &pc)?;
        let w_pt = gaussian_w2(&xm, &xc, &tm, &tc)?;
        let w_nt = gaussian_w2(&pm, &pc, &tm, &tc)?;
        worst = worst.max(w_pn);
        last = (w_pt, w_nt);
        let _ = writeln!(csv, "{k},{t},{w_pn},{w_pt},{w_nt}");
    }
    summary.insert(format!("{prefix}.max_tracking_w2"), worst);
    summary.insert(format!("{prefix}.particles_target_w2"), last.0);
    summary.insert(format!("{prefix}.ngd_target_w2"), last.1);
    Ok(csv)
}

fn support_csv(mask: &[Vec<bool>]) -> String {
    let mut s = String::new();
    for row in mask {
        let line: Vec<&str> = row.iter().map(|b| if *b { "1" } else { "0" }).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct RunRecord<'a> {
    config: &'a RunConfig,
    seeds: &'a Seeds,
    version: &'static str,
    wall_clock_seconds: f64,
}

/// Run a scenario end to end. Files are written only when `output_dir` is set.
pub fn run_scenario(cfg: &RunConfig) -> Result<ScenarioReport> {
    let started = Instant::now();
    let mut cfg = cfg.resolved()?;
    let seeds = Seeds::derive(cfg.seed);
    let data = generate(&mut cfg, &seeds)?;
    resolve_manifold(&mut cfg, &data, &seeds)?;
    resolve_methods(&mut cfg, &data, &seeds)?;
    let out_dir = cfg.output_dir.clone();
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let flow = cfg.flow.clone().expect("resolved");
    let threshold = cfg.support_threshold.expect("resolved");
    let mut summary = BTreeMap::new();
    let mut methods = Vec::new();

    if let (Some(ggm), Some(t)) = (&data.ggm, &data.targets) {
        let mask = precision_support(t, threshold)?;
        summary.insert("targets.recall".into(), edge_recall(&ggm.edge_mask(), &mask));
        summary.insert("true_edges".into(), ggm.edges().len() as f64);
    }

    for spec in cfg.methods.clone() {
        let name = spec.method.name();
        let (x, trace) = run_method(&spec, &cfg, &data, cfg.scenario == Scenario::NgdTracking)?;
        let (initial_mmd, final_mmd) = match &data.reference {
            Some(r) => (Some(mmd(r, &data.init, None)?.value), Some(mmd(r, &x, None)?.value)),
            None => (None, None),
        };
        if let Some(v) = initial_mmd {
            summary.insert(format!("{name}.initial_mmd"), v);
        }
        if let Some(v) = final_mmd {
            summary.insert(format!("{name}.final_mmd"), v);
        }
        let mut extra_files: Vec<(&str, String)> = Vec::new();
        match cfg.scenario {
            Scenario::ManifoldGuidance | Scenario::SteinSampling => coordinate_stats(name, &x, &mut summary),
            Scenario::NgdTracking => {
                let shift = match &cfg.dataset.as_ref().expect("resolved").init {
                    InitSpec::StandardNormal { shift } => *shift,
                    _ => return Err(Error::Config("NgdTracking needs a StandardNormal initialization".into())),
                };
                let csv = track_ngd(name, &trace.snapshots, &data, &flow, shift, &seeds, &mut summary)?;
                extra_files.push(("tracking.csv", csv));
            }
            Scenario::GraphicalModel => {
                let ggm = data.ggm.as_ref().expect("GGM target");
                let mask = precision_support(&x, threshold)?;
                let truth = ggm.edge_mask();
                let fp = (0..ggm.dim)
                    .flat_map(|i| ((i + 1)..ggm.dim).map(move |j| (i, j)))
                    .filter(|&(i, j)| mask[i][j] && !truth[i][j])
                    .count();
                summary.insert(format!("{name}.recall"), edge_recall(&truth, &mask));
                summary.insert(format!("{name}.false_positives"), fp as f64);
                extra_files.push(("support.csv", support_csv(&mask)));
            }
            Scenario::CovariateShiftRotation => {
                let src = data.targets.as_ref().expect("source samples");
                let before = mean_nearest_distance(&data.init, src)?;
                let after = mean_nearest_distance(&x, src)?;
                summary.insert(format!("{name}.nn_before"), before);
                summary.insert(format!("{name}.nn_after"), after);
                summary.insert(format!("{name}.nn_ratio"), after / before);
            }
            Scenario::BimodalCompare => {}
        }
        if let Some(dir) = &out_dir {
            let sub = dir.join(name);
            std::fs::create_dir_all(&sub)?;
            std::fs::write(sub.join("particles.csv"), &trace.particles)?;
            std::fs::write(sub.join("metrics.csv"), &trace.metrics)?;
            for (file, body) in extra_files {
                std::fs::write(sub.join(file), body)?;
            }
        }
        methods.push(MethodReport {
            spec,
            final_particles: x,
            initial_mmd,
            final_mmd,
        });
    }

    if let Some(dir) = &out_dir {
        write_json(&dir.join("summary.json"), &summary)?;
        let record = RunRecord {
            config: &cfg,
            seeds: &seeds,
            version: env!("CARGO_PKG_VERSION"),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        };
        write_json(&dir.join("run.json"), &record)?;
    }
    Ok(ScenarioReport {
        config: cfg,
        seeds,
        methods,
        summary,
        output_dir: out_dir,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
