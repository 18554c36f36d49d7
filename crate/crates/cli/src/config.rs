//! Flat `key=value` run configuration.
//!
//! Values are layered: built-in defaults, then the config file, then the
//! `STEGO_SEED` environment variable, then `--set key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use stego_core::adam::AdamConfig;
use stego_core::losses::LossWeights;
use stego_core::lsb::LsbConfig;
use stego_core::network::NetworkConfig;
use stego_core::train::{EarlyStop, EvalOptions, Precision, TrainingConfig};

use crate::UsageError;

pub const SEED_ENV: &str = "STEGO_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub branch_channels: usize,
    pub height: usize,
    pub width: usize,
    pub cover_channels: usize,

    pub batch_size: usize,
    pub max_iterations: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    /// 0 disables early stopping.
    pub early_stop_window: usize,
    pub early_stop_min_improvement: f64,
    pub log_every: usize,
    pub precision: u32,

    pub eval_pairs: usize,
    pub delta: f64,

    /// Side of the square crop taken from each cover before resizing;
    /// 0 uses the largest square that fits.
    pub cover_crop: usize,

    pub lsb_bits: u8,

    pub secrets_dir: Option<PathBuf>,
    pub eval_secrets_dir: Option<PathBuf>,
    pub cover_dir: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainingConfig::default();
        let es = EarlyStop::default();
        Self {
            branch_channels: 50,
            height: 256,
            width: 256,
            cover_channels: 3,
            batch_size: t.batch_size,
            max_iterations: t.max_iterations,
            learning_rate: t.adam.learning_rate,
            adam_beta1: t.adam.beta1,
            adam_beta2: t.adam.beta2,
            adam_epsilon: t.adam.epsilon,
            alpha: t.loss_weights.alpha,
            beta: t.loss_weights.beta,
            seed: t.seed,
            early_stop_window: es.window,
            early_stop_min_improvement: es.min_rel_improvement,
            log_every: t.log_every,
            precision: t.precision.bits(),
            eval_pairs: t.eval_pairs,
            delta: stego_core::metrics::DEFAULT_DELTA,
            cover_crop: 0,
            lsb_bits: 1,
            secrets_dir: None,
            eval_secrets_dir: None,
            cover_dir: None,
            checkpoint: None,
            history: None,
            metrics: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| UsageError(format!("`{key}`: cannot parse `{value}`")).into())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            "branch_channels" => self.branch_channels = parse(key, value)?,
            "height" => self.height = parse(key, value)?,
            "width" => self.width = parse(key, value)?,
            "cover_channels" => self.cover_channels = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "max_iterations" => self.max_iterations = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "adam_beta1" => self.adam_beta1 = parse(key, value)?,
            "adam_beta2" => self.adam_beta2 = parse(key, value)?,
            "adam_epsilon" => self.adam_epsilon = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "early_stop_window" => self.early_stop_window = parse(key, value)?,
            "early_stop_min_improvement" => self.early_stop_min_improvement = parse(key, value)?,
            "log_every" => self.log_every = parse(key, value)?,
            "precision" => self.precision = parse(key, value)?,
            "eval_pairs" => self.eval_pairs = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "cover_crop" => self.cover_crop = parse(key, value)?,
            "lsb_bits" => self.lsb_bits = parse(key, value)?,
            "secrets_dir" => self.secrets_dir = path(),
            "eval_secrets_dir" => self.eval_secrets_dir = path(),
            "cover_dir" => self.cover_dir = path(),
            "checkpoint" => self.checkpoint = path(),
            "history" => self.history = path(),
            "metrics" => self.metrics = path(),
            _ => bail!(UsageError(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!(UsageError(format!("{origin}:{}: expected key=value, got `{line}`", i + 1)));
            };
            self.set(k.trim(), v.trim())
                .with_context(|| format!("{origin}:{}", i + 1))?;
        }
        Ok(())
    }

    /// File, then environment, then overrides.
    pub fn load(file: Option<&Path>, overrides: &[String], env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(f) = file {
            let text = std::fs::read_to_string(f)
                .map_err(|e| UsageError(format!("config {}: {e}", f.display())))?;
            cfg.apply_text(&text, &f.display().to_string())?;
        }
        if let Some(s) = env_seed {
            cfg.set("seed", s).context(SEED_ENV)?;
        }
        for o in overrides {
            let Some((k, v)) = o.split_once('=') else {
                bail!(UsageError(format!("--set expects key=value, got `{o}`")));
            };
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_env(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let env = std::env::var(SEED_ENV).ok();
        Self::load(file, overrides, env.as_deref())
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        NetworkConfig::new(self.branch_channels, self.height, self.width, self.cover_channels)
            .map_err(|e| UsageError(e.to_string()).into())
    }

    pub fn training(&self) -> Result<TrainingConfig> {
        let early_stop = (self.early_stop_window > 0).then_some(EarlyStop {
            window: self.early_stop_window,
            min_rel_improvement: self.early_stop_min_improvement,
        });
        let cfg = TrainingConfig {
            batch_size: self.batch_size,
            max_iterations: self.max_iterations,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                beta1: self.adam_beta1,
                beta2: self.adam_beta2,
                epsilon: self.adam_epsilon,
            },
            loss_weights: self.loss_weights()?,
            seed: self.seed,
            early_stop,
            log_every: self.log_every,
            eval_pairs: self.eval_pairs,
            precision: self.precision()?,
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.alpha, self.beta).map_err(|e| UsageError(e.to_string()).into())
    }

    pub fn precision(&self) -> Result<Precision> {
        Precision::from_bits(self.precision).map_err(|e| UsageError(e.to_string()).into())
    }

    pub fn eval_options(&self) -> Result<EvalOptions> {
        if self.eval_pairs == 0 {
            bail!(UsageError("eval_pairs must be positive".into()));
        }
        Ok(EvalOptions {
            n_pairs: self.eval_pairs,
            delta: self.delta,
            weights: self.loss_weights()?,
            seed: self.seed,
        })
    }

    pub fn lsb(&self) -> Result<LsbConfig> {
        LsbConfig::new(self.lsb_bits).map_err(|e| UsageError(e.to_string()).into())
    }

    /// The path stored under `key`, which must be set.
    pub fn required(&self, key: &str) -> Result<&Path> {
        let p = match key {
            "secrets_dir" => &self.secrets_dir,
            "eval_secrets_dir" => &self.eval_secrets_dir,
            "cover_dir" => &self.cover_dir,
            "checkpoint" => &self.checkpoint,
            "history" => &self.history,
            "metrics" => &self.metrics,
            _ => bail!(UsageError(format!("unknown path key `{key}`"))),
        };
        p.as_deref()
            .ok_or_else(|| UsageError(format!("config key `{key}` is required")).into())
    }
}

pub fn require_dir(path: &Path, what: &str) -> Result<()> {
    if !path.is_dir() {
        bail!(UsageError(format!("{what} {} is not a directory", path.display())));
    }
    Ok(())
}

pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        bail!(UsageError(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

/// The parent of an output file must already exist.
pub fn require_parent(path: &Path, what: &str) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        bail!(UsageError(format!(
            "{what} {}: directory {} does not exist",
            path.display(),
            parent.display()
        )));
    }
    Ok(())
}
