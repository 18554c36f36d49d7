//! Preparation, hiding and reveal networks.
//!
//! All three share one layout: a trunk of three parallel branches (3×3,
//! 4×4 and 5×5 kernels), each four conv+ReLU layers deep, whose outputs are
//! concatenated and fed to per-branch heads. The networks differ only in
//! their heads:
//!
//! * prep: branch heads end in a single Sigmoid channel each (3×3 and 5×5
//!   directly, 4×4 through an extra conv), concatenated to the 3-channel
//!   prepared image.
//! * hide: every head is conv+ReLU to `branch_channels` then to 1 channel;
//!   the three channels go through a 1×1 conv to the cover's channel
//!   count, then Sigmoid.
//! * reveal: heads to `branch_channels` (the 4×4 head continues to 1
//!   channel); the `2·branch_channels + 1` channels go through a 2×2 conv to
//!   1 channel, then Sigmoid.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::NamedTensor;
use crate::error::{Error, Result};
use crate::ops::ConvLayer;
use crate::scalar::Scalar;
use crate::tape::{LayerGrad, Tape, Var};
use crate::tensor::Tensor;

pub const KERNEL_SIZES: [usize; 3] = [3, 4, 5];
const TRUNK_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkConfig {
    pub branch_channels: usize,
    pub kernel_sizes: [usize; 3],
    pub height: usize,
    pub width: usize,
    pub cover_channels: usize,
}

impl NetworkConfig {
    pub fn new(branch_channels: usize, height: usize, width: usize, cover_channels: usize) -> Result<Self> {
        let cfg = Self {
            branch_channels,
            kernel_sizes: KERNEL_SIZES,
            height,
            width,
            cover_channels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 50-channel branches on 256×256 RGB covers.
    pub fn full_scale() -> Self {
        Self {
            branch_channels: 50,
            kernel_sizes: KERNEL_SIZES,
            height: 256,
            width: 256,
            cover_channels: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_sizes != KERNEL_SIZES {
            return Err(Error::InvalidConfig(format!(
                "kernel sizes must be {KERNEL_SIZES:?}, got {:?}",
                self.kernel_sizes
            )));
        }
        if self.branch_channels == 0 {
            return Err(Error::InvalidConfig("branch_channels must be positive".into()));
        }
        if self.cover_channels != 1 && self.cover_channels != 3 {
            return Err(Error::InvalidConfig(format!(
                "cover_channels must be 1 or 3, got {}",
                self.cover_channels
            )));
        }
        let kmax = KERNEL_SIZES[2];
        if self.height < kmax || self.width < kmax {
            return Err(Error::InvalidConfig(format!(
                "image {}x{} is smaller than the {kmax}x{kmax} kernel",
                self.height, self.width
            )));
        }
        Ok(())
    }

    pub fn secret_shape(&self) -> [usize; 3] {
        [1, self.height, self.width]
    }

    pub fn cover_shape(&self) -> [usize; 3] {
        [self.cover_channels, self.height, self.width]
    }

    /// Flat `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let k = self.kernel_sizes;
        let _ = writeln!(s, "branch_channels={}", self.branch_channels);
        let _ = writeln!(s, "kernel_sizes={},{},{}", k[0], k[1], k[2]);
        let _ = writeln!(s, "height={}", self.height);
        let _ = writeln!(s, "width={}", self.width);
        let _ = writeln!(s, "cover_channels={}", self.cover_channels);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut branch = None;
        let mut kernels = None;
        let mut height = None;
        let mut width = None;
        let mut cover = None;
        let bad = |line: &str| Error::InvalidConfig(format!("network config: bad line `{line}`"));
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| bad(line))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || value.parse::<usize>().map_err(|_| bad(line));
            match key {
                "branch_channels" => branch = Some(num()?),
                "height" => height = Some(num()?),
                "width" => width = Some(num()?),
                "cover_channels" => cover = Some(num()?),
                "kernel_sizes" => {
                    let ks: Vec<usize> = value
                        .split(',')
                        .map(|v| v.trim().parse().map_err(|_| bad(line)))
                        .collect::<Result<_>>()?;
                    kernels = Some(<[usize; 3]>::try_from(ks).map_err(|_| bad(line))?);
                }
                _ => return Err(Error::InvalidConfig(format!("network config: unknown key `{key}`"))),
            }
        }
        let missing = |k: &str| Error::InvalidConfig(format!("network config: missing `{k}`"));
        let cfg = Self {
            branch_channels: branch.ok_or_else(|| missing("branch_channels"))?,
            kernel_sizes: kernels.unwrap_or(KERNEL_SIZES),
            height: height.ok_or_else(|| missing("height"))?,
            width: width.ok_or_else(|| missing("width"))?,
            cover_channels: cover.ok_or_else(|| missing("cover_channels"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Stage {
    layer: usize,
    activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Plan {
    trunk: [Vec<Stage>; 3],
    head: [Vec<Stage>; 3],
    output: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedLayer<T> {
    pub name: String,
    pub layer: ConvLayer<T>,
}

/// Which of the three networks a layer belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stack {
    Prep,
    Hide,
    Reveal,
}

impl Stack {
    pub fn name(self) -> &'static str {
        match self {
            Stack::Prep => "prep",
            Stack::Hide => "hide",
            Stack::Reveal => "reveal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StegoModel<T> {
    config: NetworkConfig,
    layers: Vec<NamedLayer<T>>,
    prep: Plan,
    hide: Plan,
    reveal: Plan,
}

/// Tape handles for one pass through all three networks.
#[derive(Debug, Clone, Copy)]
pub struct Traced {
    pub secret: Var,
    pub cover: Var,
    pub prepared: Var,
    pub container: Var,
    pub revealed: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutputs<T> {
    pub prepared: Tensor<T>,
    pub container: Tensor<T>,
    pub revealed: Tensor<T>,
}

struct Builder<'a, T> {
    layers: Vec<NamedLayer<T>>,
    rng: &'a mut ChaCha8Rng,
}

impl<T: Scalar> Builder<'_, T> {
    fn add(&mut self, name: String, c_in: usize, c_out: usize, k: usize, activation: Activation) -> Stage {
        self.layers.push(NamedLayer {
            name,
            layer: ConvLayer::init_uniform(c_in, c_out, k, self.rng),
        });
        Stage {
            layer: self.layers.len() - 1,
            activation,
        }
    }

    fn trunk(&mut self, net: &str, c_in: usize, width: usize) -> [Vec<Stage>; 3] {
        KERNEL_SIZES.map(|k| {
            (0..TRUNK_DEPTH)
                .map(|d| {
                    let cin = if d == 0 { c_in } else { width };
                    self.add(format!("{net}.trunk.k{k}.l{d}"), cin, width, k, Activation::Relu)
                })
                .collect()
        })
    }

    fn head(&mut self, net: &str, k: usize, channels: &[(usize, usize, Activation)]) -> Vec<Stage> {
        channels
            .iter()
            .enumerate()
            .map(|(d, &(cin, cout, act))| self.add(format!("{net}.head.k{k}.l{d}"), cin, cout, k, act))
            .collect()
    }
}

impl<T: Scalar> StegoModel<T> {
    pub fn build(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = Builder::<T> {
            layers: Vec::new(),
            rng: &mut rng,
        };
        let bc = config.branch_channels;
        let cat = 3 * bc;
        use Activation::{Relu, Sigmoid};

        let prep = {
            let trunk = b.trunk("prep", 1, bc);
            let head = [
                b.head("prep", 3, &[(cat, 1, Sigmoid)]),
                b.head("prep", 4, &[(cat, bc, Relu), (bc, 1, Sigmoid)]),
                b.head("prep", 5, &[(cat, 1, Sigmoid)]),
            ];
            Plan { trunk, head, output: None }
        };

        let hide = {
            let trunk = b.trunk("hide", 3 + config.cover_channels, bc);
            let head = KERNEL_SIZES.map(|k| b.head("hide", k, &[(cat, bc, Relu), (bc, 1, Relu)]));
            let output = b.add("hide.out".into(), 3, config.cover_channels, 1, Sigmoid);
            Plan {
                trunk,
                head,
                output: Some(output),
            }
        };

        let reveal = {
            let trunk = b.trunk("reveal", config.cover_channels, bc);
            let head = [
                b.head("reveal", 3, &[(cat, bc, Relu)]),
                b.head("reveal", 4, &[(cat, bc, Relu), (bc, 1, Relu)]),
                b.head("reveal", 5, &[(cat, bc, Relu)]),
            ];
            let output = b.add("reveal.out".into(), 2 * bc + 1, 1, 2, Sigmoid);
            Plan {
                trunk,
                head,
                output: Some(output),
            }
        };

        let model = Self {
            config,
            layers: b.layers,
            prep,
            hide,
            reveal,
        };
        model.check_wiring()?;
        Ok(model)
    }

    /// Verifies channel arithmetic of every stage and name uniqueness.
    fn check_wiring(&self) -> Result<()> {
        let check_plan = |plan: &Plan, c_in: usize, c_out: usize, net: &str| -> Result<()> {
            let mut branch_out = [0usize; 3];
            for (bi, branch) in plan.trunk.iter().enumerate() {
                let mut c = c_in;
                for s in branch {
                    c = self.expect_in(s, c, net)?;
                }
                branch_out[bi] = c;
            }
            let cat: usize = branch_out.iter().sum();
            let mut head_out = 0;
            for branch in &plan.head {
                let mut c = cat;
                for s in branch {
                    c = self.expect_in(s, c, net)?;
                }
                head_out += c;
            }
            let end = match plan.output {
                Some(s) => self.expect_in(&s, head_out, net)?,
                None => head_out,
            };
            if end != c_out {
                return Err(Error::InvalidConfig(format!(
                    "{net}: produces {end} channels, expected {c_out}"
                )));
            }
            Ok(())
        };
        let cc = self.config.cover_channels;
        check_plan(&self.prep, 1, 3, "prep")?;
        check_plan(&self.hide, 3 + cc, cc, "hide")?;
        check_plan(&self.reveal, cc, 1, "reveal")?;
        let mut names: Vec<&str> = self.layers.iter().map(|l| l.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("duplicate layer names".into()));
        }
        Ok(())
    }

    fn expect_in(&self, stage: &Stage, channels: usize, net: &str) -> Result<usize> {
        let l = &self.layers[stage.layer];
        if l.layer.in_channels() != channels {
            return Err(Error::InvalidConfig(format!(
                "{net}: layer {} expects {} input channels, receives {channels}",
                l.name,
                l.layer.in_channels()
            )));
        }
        Ok(l.layer.out_channels())
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[NamedLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [NamedLayer<T>] {
        &mut self.layers
    }

    /// Network that owns layer `index`, derived from its name prefix.
    pub fn stack_of(&self, index: usize) -> Stack {
        let name = &self.layers[index].name;
        if name.starts_with("prep.") {
            Stack::Prep
        } else if name.starts_with("hide.") {
            Stack::Hide
        } else {
            Stack::Reveal
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.layer.parameter_count()).sum()
    }

    pub fn zero_grads(&self) -> Vec<LayerGrad<T>> {
        self.layers.iter().map(|l| LayerGrad::zeros_like(&l.layer)).collect()
    }

    pub fn cast<U: Scalar>(&self) -> StegoModel<U> {
        StegoModel {
            config: self.config,
            layers: self
                .layers
                .iter()
                .map(|l| NamedLayer {
                    name: l.name.clone(),
                    layer: ConvLayer {
                        kernels: l.layer.kernels.cast(),
                        bias: l.layer.bias.cast(),
                        kernel_size: l.layer.kernel_size,
                        padding: l.layer.padding,
                    },
                })
                .collect(),
            prep: self.prep.clone(),
            hide: self.hide.clone(),
            reveal: self.reveal.clone(),
        }
    }

    fn apply<'m>(&'m self, tape: &mut Tape<'m, T>, stage: Stage, input: Var) -> Result<Var> {
        let x = tape.conv(input, &self.layers[stage.layer].layer, stage.layer)?;
        Ok(match stage.activation {
            Activation::Relu => tape.relu(x),
            Activation::Sigmoid => tape.sigmoid(x),
        })
    }

    fn run<'m>(&'m self, tape: &mut Tape<'m, T>, plan: &'m Plan, input: Var) -> Result<Var> {
        let mut branch_out = Vec::with_capacity(3);
        for branch in &plan.trunk {
            let mut x = input;
            for &s in branch {
                x = self.apply(tape, s, x)?;
            }
            branch_out.push(x);
        }
        let cat = tape.concat(&branch_out)?;
        let mut head_out = Vec::with_capacity(3);
        for branch in &plan.head {
            let mut x = cat;
            for &s in branch {
                x = self.apply(tape, s, x)?;
            }
            head_out.push(x);
        }
        let merged = tape.concat(&head_out)?;
        match plan.output {
            Some(s) => self.apply(tape, s, merged),
            None => Ok(merged),
        }
    }

    fn check_secret(&self, secret: &Tensor<T>) -> Result<()> {
        secret.ensure_shape("prep_forward", &self.config.secret_shape())?;
        if let Some((index, &v)) = secret
            .data()
            .iter()
            .enumerate()
            .find(|(_, &v)| v != T::zero() && v != T::one())
        {
            return Err(Error::NonBinarySecret {
                index,
                value: v.as_f64(),
            });
        }
        Ok(())
    }

    fn check_cover(&self, op: &'static str, image: &Tensor<T>) -> Result<()> {
        image.ensure_shape(op, &self.config.cover_shape())
    }

    pub fn trace_prep<'m>(&'m self, tape: &mut Tape<'m, T>, secret: Var) -> Result<Var> {
        self.check_secret(tape.value(secret))?;
        self.run(tape, &self.prep, secret)
    }

    pub fn trace_hide<'m>(&'m self, tape: &mut Tape<'m, T>, prepared: Var, cover: Var) -> Result<Var> {
        tape.value(prepared)
            .ensure_shape("hide_forward", &[3, self.config.height, self.config.width])?;
        self.check_cover("hide_forward", tape.value(cover))?;
        let input = tape.concat(&[prepared, cover])?;
        self.run(tape, &self.hide, input)
    }

    pub fn trace_reveal<'m>(&'m self, tape: &mut Tape<'m, T>, container: Var) -> Result<Var> {
        self.check_cover("reveal_forward", tape.value(container))?;
        self.run(tape, &self.reveal, container)
    }

    /// Records all three networks on `tape`.
    pub fn trace<'m>(&'m self, tape: &mut Tape<'m, T>, secret: &Tensor<T>, cover: &Tensor<T>) -> Result<Traced> {
        let s = tape.input(secret.clone(), false);
        let c = tape.input(cover.clone(), false);
        let prepared = self.trace_prep(tape, s)?;
        let container = self.trace_hide(tape, prepared, c)?;
        let revealed = self.trace_reveal(tape, container)?;
        Ok(Traced {
            secret: s,
            cover: c,
            prepared,
            container,
            revealed,
        })
    }

    pub fn prep_forward(&self, secret: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let s = tape.input(secret.clone(), false);
        let out = self.trace_prep(&mut tape, s)?;
        Ok(tape.value(out).clone())
    }

    pub fn hide_forward(&self, prepared: &Tensor<T>, cover: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let p = tape.input(prepared.clone(), false);
        let c = tape.input(cover.clone(), false);
        let out = self.trace_hide(&mut tape, p, c)?;
        Ok(tape.value(out).clone())
    }

    pub fn reveal_forward(&self, container: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let c = tape.input(container.clone(), false);
        let out = self.trace_reveal(&mut tape, c)?;
        Ok(tape.value(out).clone())
    }

    pub fn full_forward(&self, secret: &Tensor<T>, cover: &Tensor<T>) -> Result<ForwardOutputs<T>> {
        let mut tape = Tape::new();
        let t = self.trace(&mut tape, secret, cover)?;
        Ok(ForwardOutputs {
            prepared: tape.value(t.prepared).clone(),
            container: tape.value(t.container).clone(),
            revealed: tape.value(t.revealed).clone(),
        })
    }

    /// Parameters as checkpoint records, `<layer>.kernels` / `<layer>.bias`.
    pub fn to_named_tensors(&self) -> Vec<NamedTensor> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            for (suffix, t) in [("kernels", &l.layer.kernels), ("bias", &l.layer.bias)] {
                out.push(NamedTensor::new(
                    format!("{}.{suffix}", l.name),
                    t.shape(),
                    t.data().iter().map(|v| v.as_f64()).collect(),
                ));
            }
        }
        out
    }

    /// Rebuilds the layout for `config` and fills every parameter from
    /// `tensors`; extra records are ignored, missing ones are an error.
    pub fn from_named_tensors(config: NetworkConfig, tensors: &[NamedTensor]) -> Result<Self> {
        let mut model = Self::build(config, 0)?;
        for l in &mut model.layers {
            let name = l.name.clone();
            for (suffix, t) in [("kernels", &mut l.layer.kernels), ("bias", &mut l.layer.bias)] {
                let key = format!("{name}.{suffix}");
                let rec = tensors
                    .iter()
                    .find(|r| r.name == key)
                    .ok_or_else(|| Error::Checkpoint(format!("missing parameter `{key}`")))?;
                if rec.shape != t.shape() {
                    return Err(Error::Checkpoint(format!(
                        "parameter `{key}` has shape {:?}, model expects {:?}",
                        rec.shape,
                        t.shape()
                    )));
                }
                for (dst, &src) in t.data_mut().iter_mut().zip(&rec.values) {
                    *dst = T::lit(src);
                }
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn desk() -> NetworkConfig {
        NetworkConfig::new(4, 8, 8, 3).unwrap()
    }

    fn random_secret(cfg: &NetworkConfig, seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = cfg.height * cfg.width;
        Tensor::new(
            &cfg.secret_shape(),
            (0..n).map(|_| if rng.random_bool(0.2) { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap()
    }

    fn random_cover(cfg: &NetworkConfig, seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = cfg.cover_shape();
        Tensor::new(&shape, (0..shape.iter().product()).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn full_scale_config_wires_up() {
        // Built in f32 without running a forward pass.
        let model = StegoModel::<f32>::build(NetworkConfig::full_scale(), 1).unwrap();
        let first_hide = model
            .layers()
            .iter()
            .find(|l| l.name == "hide.trunk.k3.l0")
            .unwrap();
        assert_eq!(first_hide.layer.in_channels(), 6);
        let head_in = model
            .layers()
            .iter()
            .find(|l| l.name == "reveal.head.k4.l0")
            .unwrap();
        assert_eq!(head_in.layer.in_channels(), 150);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(NetworkConfig::new(0, 8, 8, 3).is_err());
        assert!(NetworkConfig::new(2, 4, 8, 3).is_err());
        assert!(NetworkConfig::new(2, 8, 8, 2).is_err());
        let mut cfg = desk();
        cfg.kernel_sizes = [3, 5, 7];
        assert!(StegoModel::<f64>::build(cfg, 0).is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let cfg = NetworkConfig::new(8, 32, 48, 1).unwrap();
        assert_eq!(NetworkConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        assert!(NetworkConfig::from_text("bogus=1\n").is_err());
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = StegoModel::<f64>::build(desk(), 9).unwrap();
        let b = StegoModel::<f64>::build(desk(), 9).unwrap();
        let c = StegoModel::<f64>::build(desk(), 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn output_shapes_and_ranges() {
        let cfg = desk();
        let model = StegoModel::<f64>::build(cfg, 2).unwrap();
        let out = model
            .full_forward(&random_secret(&cfg, 1), &random_cover(&cfg, 2))
            .unwrap();
        assert_eq!(out.prepared.shape(), &[3, 8, 8]);
        assert_eq!(out.container.shape(), &[3, 8, 8]);
        assert_eq!(out.revealed.shape(), &[1, 8, 8]);
        for t in [&out.prepared, &out.container, &out.revealed] {
            assert!(t.data().iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn grayscale_hiding() {
        let cfg = NetworkConfig::new(2, 8, 8, 1).unwrap();
        let model = StegoModel::<f64>::build(cfg, 3).unwrap();
        let pre = model.prep_forward(&Tensor::zeros(&[1, 8, 8])).unwrap();
        let con = model.hide_forward(&pre, &Tensor::full(&[1, 8, 8], 0.5)).unwrap();
        assert_eq!(con.shape(), &[1, 8, 8]);
        assert!(model.hide_forward(&pre, &Tensor::full(&[3, 8, 8], 0.5)).is_err());
    }

    #[test]
    fn rejects_non_binary_secret() {
        let model = StegoModel::<f64>::build(desk(), 4).unwrap();
        let mut s = Tensor::zeros(&[1, 8, 8]);
        s.data_mut()[5] = 0.5;
        assert!(matches!(
            model.prep_forward(&s),
            Err(Error::NonBinarySecret { index: 5, .. })
        ));
        assert!(model.prep_forward(&Tensor::zeros(&[1, 8, 9])).is_err());
    }

    #[test]
    fn composition_equals_sequence() {
        let cfg = desk();
        let model = StegoModel::<f64>::build(cfg, 5).unwrap();
        let (s, c) = (random_secret(&cfg, 3), random_cover(&cfg, 4));
        let full = model.full_forward(&s, &c).unwrap();
        let pre = model.prep_forward(&s).unwrap();
        let con = model.hide_forward(&pre, &c).unwrap();
        let rev = model.reveal_forward(&con).unwrap();
        assert_eq!(full.prepared, pre);
        assert_eq!(full.container, con);
        assert_eq!(full.revealed, rev);
        assert_eq!(model.full_forward(&s, &c).unwrap(), full);
    }

    #[test]
    fn named_tensor_round_trip() {
        let model = StegoModel::<f32>::build(desk(), 6).unwrap();
        let back = StegoModel::<f32>::from_named_tensors(desk(), &model.to_named_tensors()).unwrap();
        assert_eq!(back, model);
        let mut recs = model.to_named_tensors();
        recs.pop();
        assert!(StegoModel::<f32>::from_named_tensors(desk(), &recs).is_err());
    }
}
