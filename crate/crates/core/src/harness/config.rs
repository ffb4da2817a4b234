//! Run configuration: a single JSON document per run.
//!
//! Every optional field is filled from scenario defaults by
//! [`RunConfig::resolved`]; the resolved form is what gets written to
//! `run.json`, and feeding it back reproduces the run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{FlowConfig, FlowMethod};
use crate::kernels::KernelSpec;
use crate::manifold::{FeatureMap, DEFAULT_NUM_CENTERS};
use crate::stein::{SteinPairing, TargetScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// All four methods on a symmetric bimodal target, MMD logged per iteration.
    BimodalCompare,
    /// 1-d KiNG toward a bimodal target; the manifold decides whether particles split.
    ManifoldGuidance,
    /// KiNG particles on the Gaussian manifold against exact parametric NGD.
    NgdTracking,
    /// Flow toward a Gaussian graphical model, then read off the precision support.
    GraphicalModel,
    /// Transport a rotated copy of a 2-d dataset back onto the source.
    CovariateShiftRotation,
    /// Flow toward a density known only through its score.
    SteinSampling,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::BimodalCompare => "bimodal_compare",
            Scenario::ManifoldGuidance => "manifold_guidance",
            Scenario::NgdTracking => "ngd_tracking",
            Scenario::GraphicalModel => "graphical_model",
            Scenario::CovariateShiftRotation => "covariate_shift_rotation",
            Scenario::SteinSampling => "stein_sampling",
        }
    }
}

/// Which flow to run, with optional per-method solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: FlowMethod,
    /// Overrides `flow.ridge` for this method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    /// Drift kernel (KiNG / ntKiNG). Defaults: RBF cross-gradient for KiNG,
    /// empirical NTK for ntKiNG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
}

impl MethodSpec {
    pub fn new(method: FlowMethod) -> Self {
        Self {
            method,
            ridge: None,
            kernel: None,
        }
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = Some(ridge);
        self
    }
}

/// Sufficient statistic choice. Data-dependent kinds (centers, bandwidths,
/// GGM support) are turned into [`ManifoldSpec::Explicit`] once data exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ManifoldSpec {
    GaussianQuadratic,
    /// Centers drawn from the initial particles; bandwidth defaults to the
    /// median pairwise distance over initial particles and targets.
    Rbf {
        #[serde(default = "default_centers")]
        num_centers: usize,
        #[serde(default)]
        bandwidth: Option<f64>,
    },
    /// RBF features plus `x_i x_j` over `pairs` (default: the GGM support).
    InformedPairwise {
        #[serde(default = "default_centers")]
        num_centers: usize,
        #[serde(default)]
        bandwidth: Option<f64>,
        #[serde(default)]
        pairs: Option<Vec<(usize, usize)>>,
    },
    /// Stein features `S_p f` of a base map `f` (default `f(x) = [1, x]`).
    Stein {
        #[serde(default)]
        base: Option<Box<FeatureMap>>,
        #[serde(default)]
        pairing: SteinPairing,
    },
    Explicit {
        map: FeatureMap,
    },
}

fn default_centers() -> usize {
    DEFAULT_NUM_CENTERS
}

/// How the initial particles are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum InitSpec {
    /// `N(shift·1, I)`.
    StandardNormal {
        #[serde(default)]
        shift: f64,
    },
    /// A fresh draw from the target generator, rotated in the first two coordinates.
    RotatedTarget { degrees: f64 },
}

/// What the particles flow toward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum TargetSpec {
    /// `Σ_k w_k N(means[k], I)`.
    Mixture { means: Vec<Vec<f64>>, weights: Vec<f64> },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    /// Random-graph GGM; `precision` is filled in on resolution.
    Ggm {
        edge_prob: f64,
        edge_value: f64,
        #[serde(default)]
        precision: Option<Vec<Vec<f64>>>,
    },
    /// Four isotropic blobs on the axes.
    FourBlobs { radius: f64, spread: f64 },
    /// Known only through its score (Stein flows); samples are used for evaluation only.
    Score { score: TargetScore },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub dim: usize,
    pub n_particles: usize,
    /// Target samples driving the flow.
    pub n_targets: usize,
    /// Size of a fresh target batch for MMD logging; 0 disables it.
    #[serde(default)]
    pub n_reference: usize,
    pub init: InitSpec,
    pub target: TargetSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<MethodSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    /// Threshold for the precision-support readout (GraphicalModel).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            methods: Vec::new(),
            manifold: None,
            flow: None,
            dataset: None,
            support_threshold: None,
            output_dir: None,
            seed: 0,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fill every unset field with the scenario default (data-independent part).
    pub fn resolved(&self) -> Result<RunConfig> {
        let d = defaults(self.scenario);
        let out = RunConfig {
            scenario: self.scenario,
            methods: if self.methods.is_empty() { d.methods } else { self.methods.clone() },
            manifold: Some(self.manifold.clone().unwrap_or(d.manifold)),
            flow: Some(self.flow.clone().unwrap_or(d.flow)),
            dataset: Some(self.dataset.clone().unwrap_or(d.dataset)),
            support_threshold: Some(self.support_threshold.unwrap_or(0.1)),
            output_dir: self.output_dir.clone(),
            seed: self.seed,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = &self.flow {
            f.validate()?;
        }
        if let Some(t) = self.support_threshold {
            if !(t > 0.0) {
                return Err(Error::Config("support_threshold must be positive".into()));
            }
        }
        for m in &self.methods {
            if let Some(r) = m.ridge {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Config(format!("ridge for {} must be positive", m.method.name())));
                }
            }
            if let Some(k) = &m.kernel {
                let ok = matches!(
                    (m.method, k),
                    (FlowMethod::King, KernelSpec::RbfScalar { .. })
                        | (FlowMethod::NtKing, KernelSpec::EmpiricalNtk(_) | KernelSpec::DiagonalizedScalar { .. })
                );
                if !ok {
                    return Err(Error::Config(format!("kernel {k:?} is not valid for {}", m.method.name())));
                }
                k.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        if let Some(ds) = &self.dataset {
            if ds.dim == 0 || ds.n_particles < 2 {
                return Err(Error::Config("dataset needs dim >= 1 and at least two particles".into()));
            }
            let needs_samples = !matches!(ds.target, TargetSpec::Score { .. });
            if needs_samples && ds.n_targets == 0 {
                return Err(Error::Config("n_targets must be positive".into()));
            }
            if !needs_samples && self.methods.iter().any(|m| matches!(m.method, FlowMethod::Wgf | FlowMethod::MmdFlow)) {
                return Err(Error::Config("score-only targets support KiNG and ntKiNG only".into()));
            }
            if matches!(ds.init, InitSpec::RotatedTarget { .. }) && ds.dim < 2 {
                return Err(Error::Config("rotated initialization needs dim >= 2".into()));
            }
        }
        Ok(())
    }
}

struct Defaults {
    methods: Vec<MethodSpec>,
    manifold: ManifoldSpec,
    flow: FlowConfig,
    dataset: DatasetSpec,
}

fn rbf_manifold() -> ManifoldSpec {
    ManifoldSpec::Rbf {
        num_centers: DEFAULT_NUM_CENTERS,
        bandwidth: None,
    }
}

fn bimodal(dim: usize, offset: f64) -> TargetSpec {
    TargetSpec::Mixture {
        means: vec![vec![-offset; dim], vec![offset; dim]],
        weights: vec![0.5, 0.5],
    }
}

/// Ridge used by ntKiNG unless configured; the empirical NTK is larger in
/// scale than the RBF cross-gradient kernel.
pub const NTKING_DEFAULT_RIDGE: f64 = 0.1;

fn defaults(s: Scenario) -> Defaults {
    let flow = FlowConfig::default();
    let king = MethodSpec::new(FlowMethod::King);
    let ntking = MethodSpec::new(FlowMethod::NtKing).with_ridge(NTKING_DEFAULT_RIDGE);
    match s {
        Scenario::BimodalCompare => Defaults {
            methods: vec![
                king,
                ntking,
                MethodSpec::new(FlowMethod::Wgf),
                MethodSpec::new(FlowMethod::MmdFlow),
            ],
            manifold: rbf_manifold(),
            flow,
            dataset: DatasetSpec {
                dim: 5,
                n_particles: 100,
                n_targets: 100,
                n_reference: 100,
                init: InitSpec::StandardNormal { shift: 0.0 },
                target: bimodal(5, 2.0),
            },
        },
        Scenario::ManifoldGuidance => Defaults {
            methods: vec![king],
            manifold: ManifoldSpec::GaussianQuadratic,
            flow,
            dataset: DatasetSpec {
                dim: 1,
                n_particles: 100,
                n_targets: 100,
                n_reference: 0,
                init: InitSpec::StandardNormal { shift: 0.0 },
                target: bimodal(1, 2.0),
            },
        },
        Scenario::NgdTracking => Defaults {
            methods: vec![king.with_ridge(1e-4)],
            manifold: ManifoldSpec::GaussianQuadratic,
            flow: FlowConfig {
                step: 0.2,
                iterations: 50,
                log_every: 5,
                ..flow
            },
            dataset: DatasetSpec {
                dim: 2,
                n_particles: 200,
                n_targets: 200,
                n_reference: 0,
                init: InitSpec::StandardNormal { shift: 0.0 },
                target: TargetSpec::Gaussian {
                    mean: vec![2.0, -1.0],
                    cov: vec![vec![1.5, 0.6], vec![0.6, 0.8]],
                },
            },
        },
        Scenario::GraphicalModel => Defaults {
            methods: vec![ntking],
            manifold: ManifoldSpec::InformedPairwise {
                num_centers: DEFAULT_NUM_CENTERS,
                bandwidth: None,
                pairs: None,
            },
            flow: FlowConfig {
                iterations: 30,
                ..flow
            },
            dataset: DatasetSpec {
                dim: 30,
                n_particles: 200,
                n_targets: 200,
                n_reference: 0,
                init: InitSpec::StandardNormal { shift: 0.0 },
                target: TargetSpec::Ggm {
                    edge_prob: 0.05,
                    edge_value: 0.3,
                    precision: None,
                },
            },
        },
        Scenario::CovariateShiftRotation => Defaults {
            methods: vec![ntking],
            manifold: rbf_manifold(),
            flow: FlowConfig { step: 0.1, ..flow },
            dataset: DatasetSpec {
                dim: 2,
                n_particles: 200,
                n_targets: 200,
                n_reference: 0,
                init: InitSpec::RotatedTarget { degrees: 45.0 },
                target: TargetSpec::FourBlobs {
                    radius: 2.0,
                    spread: 0.3,
                },
            },
        },
        Scenario::SteinSampling => Defaults {
            methods: vec![king],
            manifold: ManifoldSpec::Stein {
                base: None,
                pairing: SteinPairing::RoundRobin,
            },
            flow,
            dataset: DatasetSpec {
                dim: 1,
                n_particles: 100,
                n_targets: 0,
                n_reference: 1000,
                init: InitSpec::StandardNormal { shift: 3.0 },
                target: TargetSpec::Score {
                    score: TargetScore::standard_normal(1),
                },
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Scenario; 6] = [
        Scenario::BimodalCompare,
        Scenario::ManifoldGuidance,
        Scenario::NgdTracking,
        Scenario::GraphicalModel,
        Scenario::CovariateShiftRotation,
        Scenario::SteinSampling,
    ];

    #[test]
    fn minimal_config_parses_and_resolves() {
        let cfg = RunConfig::from_json(r#"{"scenario": "BimodalCompare", "seed": 3}"#).unwrap();
        let r = cfg.resolved().unwrap();
        assert_eq!(r.methods.len(), 4);
        assert_eq!(r.dataset.as_ref().unwrap().dim, 5);
        assert_eq!(r.seed, 3);
    }

    #[test]
    fn resolved_configs_round_trip() {
        for s in ALL {
            let r = RunConfig::new(s).resolved().unwrap();
            let back = RunConfig::from_json(&r.to_json().unwrap()).unwrap();
            assert_eq!(back, r, "{s:?}");
            assert_eq!(back.resolved().unwrap(), r);
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"scenario": "BimodalCompare", "sed": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scenario": "BimodalCompare", "flow": {"stepp": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scenario": "Nope"}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let bad_step = r#"{"scenario": "BimodalCompare", "flow": {"step": -1.0}}"#;
        assert!(RunConfig::from_json(bad_step).unwrap().resolved().is_err());
        let bad_kernel = r#"{"scenario": "BimodalCompare",
            "methods": [{"method": "King", "kernel": {"kind": "DiagonalizedScalar", "bandwidth": 1.0}}]}"#;
        assert!(RunConfig::from_json(bad_kernel).unwrap().resolved().is_err());
        let stein_wgf = r#"{"scenario": "SteinSampling", "methods": [{"method": "Wgf"}]}"#;
        assert!(RunConfig::from_json(stein_wgf).unwrap().resolved().is_err());
    }
}
