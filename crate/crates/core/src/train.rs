//! Mini-batch training of the three networks, evaluation, the α sweep, and
//! resumable checkpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::checkpoint::{self, NamedTensor};
use crate::error::{Error, Result};
use crate::losses::{LossBreakdown, LossWeights};
use crate::metrics::{self, MetricsReport, PsnrMode};
use crate::network::{NetworkConfig, StegoModel};
use crate::scalar::Scalar;
use crate::tape::{LayerGrad, Tape};
use crate::tensor::Tensor;

const SAMPLER_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
const EVAL_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            32 => Ok(Precision::F32),
            64 => Ok(Precision::F64),
            _ => Err(Error::InvalidConfig(format!("precision must be 32 or 64, got {bits}"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::F32 => 32,
            Precision::F64 => 64,
        }
    }
}

/// Stop once the mean of the latest `window` logged losses improves on the
/// mean of the window before it by less than `min_rel_improvement`
/// (relative). Checked only when the log length is a multiple of `window`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStop {
    pub window: usize,
    pub min_rel_improvement: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            window: 1000,
            min_rel_improvement: 1e-4,
        }
    }
}

impl EarlyStop {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidConfig("early-stop window must be at least 2".into()));
        }
        if !(self.min_rel_improvement > 0.0 && self.min_rel_improvement < 1.0) {
            return Err(Error::InvalidConfig(
                "early-stop min_rel_improvement must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn should_stop(&self, logged: &[f64]) -> bool {
        let w = self.window;
        let n = logged.len();
        if n < 2 * w || !n.is_multiple_of(w) {
            return false;
        }
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let previous = mean(&logged[n - 2 * w..n - w]);
        let current = mean(&logged[n - w..]);
        if previous == 0.0 {
            return true;
        }
        (previous - current) / previous.abs() < self.min_rel_improvement
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub max_iterations: usize,
    pub adam: AdamConfig,
    pub loss_weights: LossWeights,
    pub seed: u64,
    pub early_stop: Option<EarlyStop>,
    /// Iterations between history records; each record is the mean over
    /// the iterations since the previous one.
    pub log_every: usize,
    pub eval_pairs: usize,
    pub precision: Precision,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 6,
            max_iterations: 800_000,
            adam: AdamConfig::default(),
            loss_weights: LossWeights::default(),
            seed: 0,
            early_stop: Some(EarlyStop::default()),
            log_every: 1,
            eval_pairs: 5000,
            precision: Precision::F32,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_iterations == 0 || self.log_every == 0 || self.eval_pairs == 0 {
            return Err(Error::InvalidConfig(
                "batch_size, max_iterations, log_every and eval_pairs must be positive".into(),
            ));
        }
        let a = &self.adam;
        if a.learning_rate.is_nan() || a.learning_rate <= 0.0 || !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return Err(Error::InvalidConfig(
                "learning rate must be positive and Adam betas in [0, 1)".into(),
            ));
        }
        if let Some(es) = &self.early_stop {
            es.validate()?;
        }
        LossWeights::new(self.loss_weights.alpha, self.loss_weights.beta)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub loss_all: f64,
    pub loss_mse: f64,
    pub loss_bce: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    pub records: Vec<HistoryRecord>,
}

pub const HISTORY_HEADER: &str = "iteration,loss_all,loss_mse,loss_bce";

impl TrainingHistory {
    pub fn push(&mut self, record: HistoryRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.iteration <= last.iteration {
                return Err(Error::InvalidArgument(format!(
                    "history iterations must increase ({} after {})",
                    record.iteration, last.iteration
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(HISTORY_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{}", r.iteration, r.loss_all, r.loss_mse, r.loss_bce);
        }
        s
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss_all).collect()
    }

    pub fn at(&self, iteration: usize) -> Option<&HistoryRecord> {
        self.records.iter().find(|r| r.iteration == iteration)
    }

    fn to_named(&self) -> NamedTensor {
        let values = self
            .records
            .iter()
            .flat_map(|r| [r.iteration as f64, r.loss_all, r.loss_mse, r.loss_bce])
            .collect();
        NamedTensor::new("train.history", &[self.records.len(), 4], values)
    }

    fn from_named(t: &NamedTensor) -> Result<Self> {
        if t.shape.len() != 2 || t.shape[1] != 4 {
            return Err(Error::Checkpoint("train.history must be [n, 4]".into()));
        }
        let mut h = Self::default();
        for row in t.values.chunks_exact(4) {
            h.push(HistoryRecord {
                iteration: row[0] as usize,
                loss_all: row[1],
                loss_mse: row[2],
                loss_bce: row[3],
            })?;
        }
        Ok(h)
    }
}

/// Secret images, cover images and the payload width they were built for.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub secrets: Vec<Tensor<T>>,
    pub covers: Vec<Tensor<T>>,
    pub payload_dims: usize,
}

/// Draws `(secret, cover)` index pairs: secrets cycle through a freshly
/// shuffled order each pass, covers are drawn uniformly with replacement.
#[derive(Debug, Clone)]
pub struct PairSampler {
    n_secrets: usize,
    n_covers: usize,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
}

impl PairSampler {
    pub fn new(n_secrets: usize, n_covers: usize, seed: u64) -> Result<Self> {
        if n_secrets == 0 || n_covers == 0 {
            return Err(Error::InvalidArgument(
                "pair sampler needs at least one secret and one cover".into(),
            ));
        }
        Ok(Self {
            n_secrets,
            n_covers,
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: (0..n_secrets).collect(),
            cursor: n_secrets,
        })
    }

    pub fn next_pair(&mut self) -> (usize, usize) {
        if self.cursor == self.n_secrets {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let s = self.order[self.cursor];
        self.cursor += 1;
        let c = self.rng.random_range(0..self.n_covers);
        (s, c)
    }

    pub fn skip(&mut self, pairs: usize) {
        for _ in 0..pairs {
            self.next_pair();
        }
    }
}

/// Anything that maps a secret and a cover to a container and a reveal.
pub trait Concealer<T: Scalar> {
    fn conceal_and_reveal(&self, secret: &Tensor<T>, cover: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)>;
}

impl<T: Scalar> Concealer<T> for StegoModel<T> {
    fn conceal_and_reveal(&self, secret: &Tensor<T>, cover: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let out = self.full_forward(secret, cover)?;
        Ok((out.container, out.revealed))
    }
}

/// Degenerate oracle: container := cover, reveal := secret.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityStub;

impl<T: Scalar> Concealer<T> for IdentityStub {
    fn conceal_and_reveal(&self, secret: &Tensor<T>, cover: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        Ok((cover.clone(), secret.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub n_pairs: usize,
    pub delta: f64,
    pub weights: LossWeights,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            n_pairs: 5000,
            delta: metrics::DEFAULT_DELTA,
            weights: LossWeights::default(),
            seed: 0,
        }
    }
}

/// Averages PSNR, SSIM, bit accuracy and both losses over freshly drawn
/// pairs. Pairs whose secret has no active bit are skipped for BACC.
pub fn evaluate<T: Scalar, C: Concealer<T> + ?Sized>(
    backend: &C,
    data: &Dataset<T>,
    opts: &EvalOptions,
) -> Result<MetricsReport> {
    if opts.n_pairs == 0 {
        return Err(Error::InvalidArgument("evaluate: n_pairs must be positive".into()));
    }
    let mut sampler = PairSampler::new(data.secrets.len(), data.covers.len(), opts.seed ^ EVAL_STREAM)?;
    let (mut psnr, mut ssim, mut bacc, mut mse, mut bce) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut bacc_n = 0usize;
    for _ in 0..opts.n_pairs {
        let (si, ci) = sampler.next_pair();
        let (secret, cover) = (&data.secrets[si], &data.covers[ci]);
        let (container, revealed) = backend.conceal_and_reveal(secret, cover)?;
        psnr += metrics::psnr(cover, &container, PsnrMode::default())?;
        ssim += metrics::ssim(cover, &container)?;
        if secret.data().iter().any(|&v| v > T::zero()) {
            bacc += metrics::bit_accuracy(secret, &revealed, opts.delta)?;
            bacc_n += 1;
        }
        mse += crate::losses::cover_loss(cover, &container)?.as_f64();
        bce += crate::losses::secret_loss(secret, &revealed)?.as_f64();
    }
    if bacc_n == 0 {
        return Err(Error::InvalidArgument(
            "evaluate: no sampled secret has an active bit".into(),
        ));
    }
    let n = opts.n_pairs as f64;
    let losses = LossBreakdown::from_means(mse / n, bce / n, opts.weights);
    let shape = data.covers[0].shape();
    let (h, w, c) = (shape[1], shape[2], shape[0]);
    Ok(MetricsReport {
        bpp: metrics::bpp(data.payload_dims, h, w, c),
        alpha: opts.weights.alpha,
        beta: opts.weights.beta,
        loss_all: losses.all,
        loss_mse: losses.mse,
        loss_bce: losses.bce,
        psnr_db: psnr / n,
        ssim: ssim / n,
        bacc: bacc / bacc_n as f64,
        n_pairs: opts.n_pairs,
    })
}

/// Training state: model, optimizer moments and progress counters.
pub struct Trainer<T> {
    pub model: StegoModel<T>,
    pub config: TrainingConfig,
    kernel_state: Vec<AdamState<T>>,
    bias_state: Vec<AdamState<T>>,
    grads: Vec<LayerGrad<T>>,
    pub iteration: usize,
    pub history: TrainingHistory,
    /// Sums of (all, mse, bce) and count since the last history record.
    pending: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    EarlyStop,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(model: StegoModel<T>, config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        let kernel_state = model
            .layers()
            .iter()
            .map(|l| AdamState::new(l.layer.kernels.len()))
            .collect();
        let bias_state = model.layers().iter().map(|l| AdamState::new(l.layer.bias.len())).collect();
        let grads = model.zero_grads();
        Ok(Self {
            model,
            config,
            kernel_state,
            bias_state,
            grads,
            iteration: 0,
            history: TrainingHistory::default(),
            pending: [0.0; 4],
        })
    }

    /// Sampler positioned where this trainer left off.
    pub fn sampler(&self, data: &Dataset<T>) -> Result<PairSampler> {
        let mut s = PairSampler::new(data.secrets.len(), data.covers.len(), self.config.seed ^ SAMPLER_STREAM)?;
        s.skip(self.iteration * self.config.batch_size);
        Ok(s)
    }

    /// Forward + backward over `batch`, then one Adam update per parameter.
    pub fn step(&mut self, batch: &[(&Tensor<T>, &Tensor<T>)]) -> Result<LossBreakdown> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("training step on an empty batch".into()));
        }
        for g in &mut self.grads {
            g.kernels.iter_mut().chain(g.bias.iter_mut()).for_each(|v| *v = T::zero());
        }
        let n = batch.len() as f64;
        let w = self.config.loss_weights;
        let (alpha_n, beta_n) = (T::lit(w.alpha / n), T::lit(w.beta / n));
        let (mut mse_sum, mut bce_sum) = (0.0, 0.0);
        for &(secret, cover) in batch {
            let mut tape = Tape::new();
            let t = self.model.trace(&mut tape, secret, cover)?;
            let mse = tape.squared_error(t.container, cover)?;
            let bce = tape.binary_cross_entropy(t.revealed, secret)?;
            let total = tape.weighted_sum(&[(mse, alpha_n), (bce, beta_n)])?;
            mse_sum += tape.value(mse).data()[0].as_f64();
            bce_sum += tape.value(bce).data()[0].as_f64();
            tape.backward(total, &mut self.grads)?;
        }
        let losses = LossBreakdown::from_means(mse_sum / n, bce_sum / n, w);
        let next = self.iteration + 1;
        if !losses.all.is_finite() || !self.grads.iter().all(LayerGrad::is_finite) {
            return Err(Error::NonFiniteLoss {
                iteration: next,
                value: losses.all,
            });
        }
        for (i, l) in self.model.layers_mut().iter_mut().enumerate() {
            adam_step(l.layer.kernels.data_mut(), &self.grads[i].kernels, &mut self.kernel_state[i], &self.config.adam)?;
            adam_step(l.layer.bias.data_mut(), &self.grads[i].bias, &mut self.bias_state[i], &self.config.adam)?;
        }
        self.iteration = next;
        self.pending[0] += losses.all;
        self.pending[1] += losses.mse;
        self.pending[2] += losses.bce;
        self.pending[3] += 1.0;
        if next.is_multiple_of(self.config.log_every) {
            let c = self.pending[3];
            self.history.push(HistoryRecord {
                iteration: next,
                loss_all: self.pending[0] / c,
                loss_mse: self.pending[1] / c,
                loss_bce: self.pending[2] / c,
            })?;
            self.pending = [0.0; 4];
        }
        Ok(losses)
    }

    /// Gradients accumulated by the most recent [`Trainer::step`].
    pub fn last_gradients(&self) -> &[LayerGrad<T>] {
        &self.grads
    }

    pub fn adam_steps(&self) -> impl Iterator<Item = u64> + '_ {
        self.kernel_state.iter().chain(&self.bias_state).map(|s| s.step)
    }

    /// Trains until `max_iterations` or early stopping. `on_log` sees every
    /// new history record.
    pub fn run(
        &mut self,
        data: &Dataset<T>,
        mut on_log: impl FnMut(&HistoryRecord),
    ) -> Result<StopReason> {
        self.run_until(data, self.config.max_iterations, &mut on_log)
    }

    /// Like [`Trainer::run`] but stops at `until` (≤ `max_iterations`).
    pub fn run_until(
        &mut self,
        data: &Dataset<T>,
        until: usize,
        mut on_log: impl FnMut(&HistoryRecord),
    ) -> Result<StopReason> {
        let until = until.min(self.config.max_iterations);
        let mut sampler = self.sampler(data)?;
        let m = self.config.batch_size;
        while self.iteration < until {
            let pairs: Vec<(usize, usize)> = (0..m).map(|_| sampler.next_pair()).collect();
            let batch: Vec<(&Tensor<T>, &Tensor<T>)> = pairs
                .iter()
                .map(|&(s, c)| (&data.secrets[s], &data.covers[c]))
                .collect();
            let before = self.history.records.len();
            self.step(&batch)?;
            if self.history.records.len() > before {
                on_log(self.history.records.last().expect("just pushed"));
                if let Some(es) = &self.config.early_stop {
                    if es.should_stop(&self.history.losses()) {
                        return Ok(StopReason::EarlyStop);
                    }
                }
            }
        }
        Ok(StopReason::MaxIterations)
    }

    fn state_tensors(&self) -> Vec<NamedTensor> {
        let mut out = self.model.to_named_tensors();
        for (i, l) in self.model.layers().iter().enumerate() {
            for (suffix, st) in [("kernels", &self.kernel_state[i]), ("bias", &self.bias_state[i])] {
                let len = st.m.len();
                out.push(NamedTensor::new(
                    format!("adam.m.{}.{suffix}", l.name),
                    &[len],
                    st.m.iter().map(|v| v.as_f64()).collect(),
                ));
                out.push(NamedTensor::new(
                    format!("adam.v.{}.{suffix}", l.name),
                    &[len],
                    st.v.iter().map(|v| v.as_f64()).collect(),
                ));
                out.push(NamedTensor::new(
                    format!("adam.step.{}.{suffix}", l.name),
                    &[1],
                    vec![st.step as f64],
                ));
            }
        }
        out.push(NamedTensor::new("train.iteration", &[1], vec![self.iteration as f64]));
        out.push(NamedTensor::new("train.pending", &[4], self.pending.to_vec()));
        out.push(self.history.to_named());
        out
    }

    /// Writes the checkpoint to `path` and the network layout next to it
    /// (see [`config_path`]).
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        write_network_config(self.model.config(), path)?;
        checkpoint::write_file(path, &self.state_tensors())
    }

    /// Restores a trainer saved with [`Trainer::save_checkpoint`].
    pub fn load_checkpoint(path: &Path, config: TrainingConfig) -> Result<Self> {
        let records = checkpoint::read_file(path)?;
        let net = read_network_config(path)?;
        let model = StegoModel::<T>::from_named_tensors(net, &records)?;
        let mut trainer = Self::new(model, config)?;
        let find = |name: &str| {
            records
                .iter()
                .find(|r| r.name == name)
                .ok_or_else(|| Error::Checkpoint(format!("missing `{name}`")))
        };
        let names: Vec<String> = trainer.model.layers().iter().map(|l| l.name.clone()).collect();
        for (i, name) in names.iter().enumerate() {
            for (suffix, st) in [("kernels", &mut trainer.kernel_state[i]), ("bias", &mut trainer.bias_state[i])] {
                let m = find(&format!("adam.m.{name}.{suffix}"))?;
                let v = find(&format!("adam.v.{name}.{suffix}"))?;
                let step = find(&format!("adam.step.{name}.{suffix}"))?;
                if m.values.len() != st.m.len() || v.values.len() != st.v.len() || step.values.len() != 1 {
                    return Err(Error::Checkpoint(format!("optimizer state for `{name}` has the wrong size")));
                }
                st.m = m.values.iter().map(|&x| T::lit(x)).collect();
                st.v = v.values.iter().map(|&x| T::lit(x)).collect();
                st.step = step.values[0] as u64;
            }
        }
        trainer.iteration = find("train.iteration")?.values.first().copied().unwrap_or(0.0) as usize;
        let pending = find("train.pending")?;
        trainer.pending = pending
            .values
            .as_slice()
            .try_into()
            .map_err(|_| Error::Checkpoint("train.pending must hold 4 values".into()))?;
        trainer.history = TrainingHistory::from_named(find("train.history")?)?;
        Ok(trainer)
    }
}

/// Sidecar holding the `key=value` network layout of checkpoint `path`.
pub fn config_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".cfg");
    PathBuf::from(s)
}

fn read_network_config(path: &Path) -> Result<NetworkConfig> {
    let cfg = config_path(path);
    let text = std::fs::read_to_string(&cfg).map_err(|e| Error::io(&cfg, e))?;
    NetworkConfig::from_text(&text)
}

fn write_network_config(net: &NetworkConfig, path: &Path) -> Result<()> {
    let cfg = config_path(path);
    std::fs::write(&cfg, net.to_text()).map_err(|e| Error::io(&cfg, e))
}

/// Writes only the network parameters (plus the layout sidecar).
pub fn save_model<T: Scalar>(model: &StegoModel<T>, path: &Path) -> Result<()> {
    write_network_config(model.config(), path)?;
    checkpoint::write_file(path, &model.to_named_tensors())
}

/// Loads the network parameters from any checkpoint written by this crate.
pub fn load_model<T: Scalar>(path: &Path) -> Result<StegoModel<T>> {
    let net = read_network_config(path)?;
    let records = checkpoint::read_file(path)?;
    StegoModel::from_named_tensors(net, &records)
}

/// Builds a model from `seed`, trains it on `data` and returns it with its
/// history.
pub fn train<T: Scalar>(
    net: NetworkConfig,
    data: &Dataset<T>,
    config: &TrainingConfig,
) -> Result<(StegoModel<T>, TrainingHistory, StopReason)> {
    let model = StegoModel::build(net, config.seed)?;
    let mut trainer = Trainer::new(model, config.clone())?;
    let reason = trainer.run(data, |_| {})?;
    Ok((trainer.model, trainer.history, reason))
}

/// One independent train+evaluate run per α; run `i` uses seed
/// `base.seed + i`.
pub fn alpha_sweep<T: Scalar>(
    net: NetworkConfig,
    data: &Dataset<T>,
    base: &TrainingConfig,
    alphas: &[f64],
    eval: &EvalOptions,
) -> Result<Vec<(f64, MetricsReport)>> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("alpha sweep needs at least one alpha".into()));
    }
    alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let mut cfg = base.clone();
            cfg.seed = base.seed + i as u64;
            cfg.loss_weights = LossWeights::new(alpha, base.loss_weights.beta)?;
            let (model, _, _) = train(net, data, &cfg)?;
            let opts = EvalOptions {
                weights: cfg.loss_weights,
                seed: cfg.seed,
                ..*eval
            };
            Ok((alpha, evaluate(&model, data, &opts)?))
        })
        .collect()
}

/// Mean and (sample) standard deviation of repeated sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub alpha: f64,
    pub mean: MetricsReport,
    pub psnr_std: f64,
    pub ssim_std: f64,
    pub bacc_std: f64,
    pub runs: usize,
}

pub const SUMMARY_HEADER: &str = "BPP,alpha,beta,L_all,L_mse,L_bce,PSNR,SSIM,BACC,PSNR_std,SSIM_std,BACC_std,runs";

impl SweepSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.mean.csv_row(),
            metrics::format_value(self.psnr_std),
            metrics::format_value(self.ssim_std),
            metrics::format_value(self.bacc_std),
            self.runs
        )
    }
}

/// Repeats [`alpha_sweep`] once per base seed and summarizes each α.
pub fn alpha_sweep_seeds<T: Scalar>(
    net: NetworkConfig,
    data: &Dataset<T>,
    base: &TrainingConfig,
    alphas: &[f64],
    seeds: &[u64],
    eval: &EvalOptions,
) -> Result<Vec<SweepSummary>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("seed list is empty".into()));
    }
    let mut runs: Vec<Vec<MetricsReport>> = vec![Vec::new(); alphas.len()];
    for &seed in seeds {
        let cfg = TrainingConfig { seed, ..base.clone() };
        for (i, (_, r)) in alpha_sweep(net, data, &cfg, alphas, eval)?.into_iter().enumerate() {
            runs[i].push(r);
        }
    }
    Ok(alphas
        .iter()
        .zip(runs)
        .map(|(&alpha, rs)| summarize(alpha, &rs))
        .collect())
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 || !mean.is_finite() {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(alpha: f64, rs: &[MetricsReport]) -> SweepSummary {
    let avg = |f: fn(&MetricsReport) -> f64| mean_std(rs.iter().map(f));
    let (psnr, psnr_std) = avg(|r| r.psnr_db);
    let (ssim, ssim_std) = avg(|r| r.ssim);
    let (bacc, bacc_std) = avg(|r| r.bacc);
    SweepSummary {
        alpha,
        mean: MetricsReport {
            bpp: rs[0].bpp,
            alpha,
            beta: rs[0].beta,
            loss_all: avg(|r| r.loss_all).0,
            loss_mse: avg(|r| r.loss_mse).0,
            loss_bce: avg(|r| r.loss_bce).0,
            psnr_db: psnr,
            ssim,
            bacc,
            n_pairs: rs[0].n_pairs,
        },
        psnr_std,
        ssim_std,
        bacc_std,
        runs: rs.len(),
    }
}
