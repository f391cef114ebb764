//! Declarative experiment configuration (TOML).
//!
//! One file describes one experiment: a shared model block plus per-experiment
//! analysis settings. Unknown keys are rejected; the seed is mandatory and is
//! the run's only entropy source.

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::sampler::{Algorithm, ChainConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sample,
    Stiffness,
    Cstar,
    Multiscale,
    Extremes,
    Ballot,
    Skorokhod,
    Tightness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub id: String,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub knots_x: Option<Vec<f64>>,
    #[serde(default)]
    pub knots_v: Option<Vec<f64>>,
}

impl PotentialConfig {
    pub fn build(&self) -> Result<Potential> {
        match self.id.as_str() {
            "quadratic" => Ok(Potential::quadratic()),
            "cosine-perturbed" => {
                let kappa = self
                    .kappa
                    .ok_or_else(|| Error::config("model.potential.kappa", "required"))?;
                Potential::cosine_perturbed(kappa)
            }
            "user-table" => {
                let xs = self
                    .knots_x
                    .clone()
                    .ok_or_else(|| Error::config("model.potential.knots_x", "required"))?;
                let vs = self
                    .knots_v
                    .clone()
                    .ok_or_else(|| Error::config("model.potential.knots_v", "required"))?;
                Potential::user_table(xs, vs)
            }
            other => Err(Error::config(
                "model.potential.id",
                format!("unknown potential `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub kind: String,
    #[serde(default)]
    pub value: Option<f64>,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        BoundaryConfig {
            kind: "zero".into(),
            value: None,
        }
    }
}

impl BoundaryConfig {
    pub fn value_at(&self) -> Result<f64> {
        match self.kind.as_str() {
            "zero" => Ok(0.0),
            "constant" => self
                .value
                .ok_or_else(|| Error::config("model.boundary.value", "required for constant")),
            other => Err(Error::config(
                "model.boundary.kind",
                format!("unknown boundary kind `{other}`"),
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub n: Vec<u32>,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBlock {
    pub algorithm: String,
    #[serde(default)]
    pub step_size: Option<f64>,
    /// Default when absent: 20 N sweeps.
    #[serde(default)]
    pub burn_in_sweeps: Option<usize>,
    #[serde(default = "default_thinning")]
    pub thinning_sweeps: usize,
    pub samples: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Testing aid: abort the run after this many snapshots are persisted.
    #[serde(default)]
    pub abort_after_snapshots: Option<usize>,
}

fn default_thinning() -> usize {
    1
}

fn default_replicas() -> usize {
    1
}

impl SamplerBlock {
    pub fn algorithm(&self) -> Result<Algorithm> {
        match self.algorithm.as_str() {
            "heat-bath" => Ok(Algorithm::HeatBath),
            "langevin" => Ok(Algorithm::Langevin),
            "mala" => Ok(Algorithm::Mala),
            "exact-gaussian" => Ok(Algorithm::ExactGaussian),
            other => Err(Error::config(
                "sampler.algorithm",
                format!("unknown algorithm `{other}`"),
            )),
        }
    }

    pub fn chain_config(&self, n_box: u32, seed: u128) -> Result<ChainConfig> {
        Ok(ChainConfig {
            algorithm: self.algorithm()?,
            step_size: self.step_size,
            burn_in_sweeps: self.burn_in_sweeps.unwrap_or(20 * n_box as usize),
            thinning_sweeps: self.thinning_sweeps,
            samples: self.samples,
            seed,
        })
    }
}

fn default_omega() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    #[serde(default)]
    pub sites: Vec<[i32; 2]>,
    #[serde(default)]
    pub k0: Option<i32>,
    #[serde(default)]
    pub k_inf: Option<i32>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub cstar_resolution: Option<i32>,
    #[serde(default)]
    pub m_values: Vec<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub ell: Option<usize>,
    #[serde(default)]
    pub gamma_grid: Vec<f64>,
    #[serde(default)]
    pub g_hat: Option<f64>,
    #[serde(default)]
    pub draws: Option<usize>,
    #[serde(default)]
    pub target_sd: Option<f64>,
    #[serde(default)]
    pub walk_sd: Option<f64>,
    #[serde(default)]
    pub corridor_ell_scan: Vec<usize>,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        AnalysisBlock {
            sites: Vec::new(),
            k0: None,
            k_inf: None,
            omega: default_omega(),
            cstar_resolution: None,
            m_values: Vec::new(),
            trials: None,
            ell: None,
            gamma_grid: Vec::new(),
            g_hat: None,
            draws: None,
            target_sd: None,
            walk_sd: None,
            corridor_ell_scan: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_outdir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_outdir() -> String {
    "out".into()
}

fn default_formats() -> Vec<String> {
    vec!["json".into()]
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: default_outdir(),
            formats: default_formats(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// 128-bit seed, decimal or 0x-prefixed hex.
    pub seed: String,
    pub model: ModelBlock,
    #[serde(default)]
    pub sampler: Option<SamplerBlock>,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::config("<config>", format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed_value(&self) -> Result<u128> {
        parse_seed(&self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        self.seed_value()?;
        if self.model.n.is_empty() {
            return Err(Error::config("model.n", "at least one box size required"));
        }
        for &n in &self.model.n {
            if n < 1 {
                return Err(Error::config("model.n", "box sizes must be >= 1"));
            }
        }
        let potential = self.model.potential.build()?;
        self.model.boundary.value_at()?;
        if let Some(s) = &self.sampler {
            if s.samples < 1 {
                return Err(Error::config("sampler.samples", "must be >= 1"));
            }
            if s.replicas < 1 {
                return Err(Error::config("sampler.replicas", "must be >= 1"));
            }
            if s.thinning_sweeps < 1 {
                return Err(Error::config("sampler.thinning_sweeps", "must be >= 1"));
            }
            let n0 = self.model.n[0];
            s.chain_config(n0, 0)?
                .validate(&potential)
                .map_err(|e| Error::config("sampler", e.to_string()))?;
        }
        if !(self.analysis.omega > 0.0 && self.analysis.omega < 1.0) {
            return Err(Error::config("analysis.omega", "must lie in (0,1)"));
        }
        match self.experiment {
            ExperimentKind::Sample | ExperimentKind::Stiffness | ExperimentKind::Multiscale => {
                if self.sampler.is_none() {
                    return Err(Error::config("sampler", "required for this experiment"));
                }
            }
            ExperimentKind::Ballot => {
                if self.analysis.m_values.is_empty() {
                    return Err(Error::config("analysis.m_values", "required for ballot"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub fn parse_seed(s: &str) -> Result<u128> {
    let t = s.trim();
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u128::from_str_radix(&hex.replace('_', ""), 16)
    } else {
        t.replace('_', "").parse::<u128>()
    };
    parsed.map_err(|e| Error::config("seed", format!("cannot parse 128-bit seed: {e}")))
}
