use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use pol_core::experiments::{Desk, DeskConfig};
use pol_core::proof::Precision;
use pol_core::sgd::{Activation, Dataset, InitStrategy, LossKind, ModelArch, SyntheticKind};
use pol_core::spoof::Solver;
use pol_core::verify::{Delta, Metric, VerificationConfig};

/// Everything a run needs. Every section and key is optional in the file;
/// missing keys take the defaults shown by `pol --help`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub data: DataSection,
    pub train: TrainSection,
    pub verify: VerifySection,
    pub attack: AttackSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub layer_dims: Vec<usize>,
    /// relu | tanh | identity
    pub activation: String,
    /// cross_entropy_softmax | squared_error
    pub loss: String,
    /// xavier_uniform | xavier_normal | kaiming_uniform | kaiming_normal
    pub init: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// blobs | moons | csv
    pub kind: String,
    pub n: usize,
    pub classes: usize,
    pub seed: u64,
    pub separation: f64,
    pub moons_noise: f64,
    /// Used when `kind = "csv"`; relative paths resolve against the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub eta: f64,
    /// Checkpoint interval.
    pub k: usize,
    /// Noise std relative to RMS(W_0); 0 disables noise.
    pub noise_rel: f64,
    /// f32 | f16
    pub precision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub q: usize,
    /// Fixed slack; calibrated from the proof when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub alpha: f64,
    pub bonferroni: bool,
    /// l1 | l2 | linf | cos
    pub d1: String,
    pub d2: String,
    pub extra_random: usize,
    pub n_probe: usize,
    pub safety_factor: f64,
    pub seed: u64,
    /// Reject proofs whose checkpoint interval differs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    /// Added to the train seed for the adversary's own runs.
    pub seed_offset: u64,
    /// Concat: epochs of fine-tuning after the splice.
    pub fine_tune_epochs: usize,
    /// Concat: large-rate decoy segments per epoch (0 = none).
    pub decoys_per_epoch: usize,
    pub decoy_eta: f64,
    /// Inverse: steps to invert; a multiple of the steps per epoch.
    pub steps_back: usize,
    /// fixed_point | residual_descent
    pub solver: String,
    pub tol: f64,
    pub max_iters: usize,
    /// Directed regularizer strength.
    pub lambda: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = DeskConfig::default();
        Self {
            layer_dims: d.layer_dims,
            activation: d.activation.name().into(),
            loss: d.loss.name().into(),
            init: d.init.name().into(),
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        let d = DeskConfig::default();
        Self {
            kind: "blobs".into(),
            n: d.n,
            classes: d.classes,
            seed: d.data_seed,
            separation: 5.0,
            moons_noise: 0.1,
            path: None,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = DeskConfig::default();
        Self {
            seed: 0,
            batch_size: d.batch_size,
            epochs: d.epochs,
            eta: d.eta,
            k: d.k,
            noise_rel: d.noise_rel,
            precision: d.precision.name().into(),
        }
    }
}

impl Default for VerifySection {
    fn default() -> Self {
        let v = VerificationConfig::default();
        Self {
            q: v.q,
            delta: None,
            alpha: v.alpha,
            bonferroni: v.bonferroni,
            d1: v.d1.name().into(),
            d2: v.d2.name().into(),
            extra_random: v.extra_random,
            n_probe: v.n_probe,
            safety_factor: v.safety_factor,
            seed: v.seed,
            expect_k: None,
        }
    }
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            seed_offset: 1000,
            fine_tune_epochs: 1,
            decoys_per_epoch: 0,
            decoy_eta: 5.0,
            steps_back: 40,
            solver: Solver::default().name().into(),
            tol: 1e-10,
            max_iters: 200,
            lambda: 5.0,
        }
    }
}

/// Command-line overrides; each wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML run configuration
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Training seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Learning rate
    #[arg(long)]
    pub eta: Option<f64>,
    /// Checkpoint interval
    #[arg(long)]
    pub k: Option<usize>,
    /// Noise std relative to RMS(W_0); 0 for none
    #[arg(long)]
    pub noise_rel: Option<f64>,
    /// Segments re-executed per epoch
    #[arg(long)]
    pub q: Option<usize>,
    /// Fixed segment slack instead of calibration
    #[arg(long)]
    pub delta: Option<f64>,
}

impl Overrides {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let t = &mut cfg.train;
        set(&mut t.seed, self.seed);
        set(&mut t.epochs, self.epochs);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.eta, self.eta);
        set(&mut t.k, self.k);
        set(&mut t.noise_rel, self.noise_rel);
        set(&mut cfg.verify.q, self.q);
        if self.delta.is_some() {
            cfg.verify.delta = self.delta;
        }
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let (Some(p), Some(dir)) = (&cfg.data.path, path.parent()) {
            if p.is_relative() {
                cfg.data.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn desk(&self) -> Result<Desk> {
        let m = &self.model;
        let cfg = DeskConfig {
            layer_dims: m.layer_dims.clone(),
            activation: Activation::from_name(&m.activation)?,
            loss: LossKind::from_name(&m.loss)?,
            data: match self.data.kind.as_str() {
                "blobs" | "csv" => SyntheticKind::GaussianBlobs {
                    separation: self.data.separation,
                },
                "moons" => SyntheticKind::TwoMoons {
                    noise: self.data.moons_noise,
                },
                other => bail!("unknown data kind '{other}' (blobs, moons, csv)"),
            },
            n: self.data.n,
            classes: self.data.classes,
            data_seed: self.data.seed,
            batch_size: self.train.batch_size,
            epochs: self.train.epochs,
            eta: self.train.eta,
            init: InitStrategy::from_name(&m.init)?,
            k: self.train.k,
            noise_rel: self.train.noise_rel,
            precision: Precision::from_name(&self.train.precision)?,
        };
        if self.data.kind != "csv" {
            return Ok(cfg.build()?);
        }
        let path = self
            .data
            .path
            .as_ref()
            .context("data.kind = \"csv\" needs data.path")?;
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let dataset = Dataset::from_csv(file)?;
        let hidden = cfg.layer_dims.len().saturating_sub(2);
        let arch = ModelArch::new(cfg.layer_dims.clone(), vec![cfg.activation; hidden], cfg.loss)?;
        if dataset.dim() != arch.input_dim() {
            bail!(
                "dataset has {} columns of features, model expects {}",
                dataset.dim(),
                arch.input_dim()
            );
        }
        Ok(Desk {
            cfg,
            arch,
            dataset,
        })
    }

    pub fn verification(&self) -> Result<VerificationConfig> {
        let v = &self.verify;
        let cfg = VerificationConfig {
            q: v.q,
            delta: v.delta.map_or(Delta::Auto, Delta::Fixed),
            alpha: v.alpha,
            bonferroni: v.bonferroni,
            d1: Metric::from_name(&v.d1)?,
            d2: Metric::from_name(&v.d2)?,
            k: v.expect_k,
            extra_random: v.extra_random,
            n_probe: v.n_probe,
            safety_factor: v.safety_factor,
            seed: v.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
