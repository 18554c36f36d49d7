//! Reverse-mode differentiation over a recorded sequence of operations.
//!
//! A [`Tape`] borrows the conv layers it applies, so a model stays
//! immutable for the lifetime of a forward/backward pass. Parameter
//! gradients are accumulated into caller-owned [`LayerGrad`] slots, which
//! lets one set of buffers collect a whole mini-batch.

use crate::error::{Error, Result};
use crate::losses;
use crate::ops::{self, ConvLayer};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Gradient buffers for one conv layer, laid out like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub kernels: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LayerGrad<T> {
    pub fn zeros_like(layer: &ConvLayer<T>) -> Self {
        Self {
            kernels: vec![T::zero(); layer.kernels.len()],
            bias: vec![T::zero(); layer.bias.len()],
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in self.kernels.iter_mut().chain(self.bias.iter_mut()) {
            *v *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.kernels.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

enum Op<'m, T> {
    Input,
    Conv {
        input: Var,
        layer: &'m ConvLayer<T>,
        slot: usize,
    },
    Relu(Var),
    Sigmoid(Var),
    Concat(Vec<Var>),
    SquaredError {
        pred: Var,
        target: Tensor<T>,
    },
    BinaryCrossEntropy {
        pred: Var,
        target: Tensor<T>,
    },
    WeightedSum(Vec<(Var, T)>),
}

struct Node<'m, T> {
    value: Tensor<T>,
    op: Op<'m, T>,
    needs_grad: bool,
}

pub struct Tape<'m, T> {
    nodes: Vec<Node<'m, T>>,
}

/// Gradients of the backward root with respect to tape inputs that were
/// registered with `requires_grad`.
pub struct InputGrads<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T> InputGrads<T> {
    pub fn wrt(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

impl<T: Scalar> Default for Tape<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'m, T: Scalar> Tape<'m, T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<'m, T>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn input(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Input, requires_grad)
    }

    /// `slot` indexes the [`LayerGrad`] that receives this layer's gradients.
    pub fn conv(&mut self, input: Var, layer: &'m ConvLayer<T>, slot: usize) -> Result<Var> {
        let out = ops::conv2d_forward(self.value(input), layer)?;
        Ok(self.push(out, Op::Conv { input, layer, slot }, true))
    }

    pub fn relu(&mut self, input: Var) -> Var {
        let out = ops::relu(self.value(input));
        let needs = self.needs(input);
        self.push(out, Op::Relu(input), needs)
    }

    pub fn sigmoid(&mut self, input: Var) -> Var {
        let out = ops::sigmoid(self.value(input));
        let needs = self.needs(input);
        self.push(out, Op::Sigmoid(input), needs)
    }

    pub fn concat(&mut self, inputs: &[Var]) -> Result<Var> {
        let refs: Vec<&Tensor<T>> = inputs.iter().map(|&v| self.value(v)).collect();
        let out = ops::concat_channels(&refs)?;
        let needs = inputs.iter().any(|&v| self.needs(v));
        Ok(self.push(out, Op::Concat(inputs.to_vec()), needs))
    }

    /// Scalar `Σ (target − pred)²`.
    pub fn squared_error(&mut self, pred: Var, target: &Tensor<T>) -> Result<Var> {
        let loss = losses::cover_loss(target, self.value(pred))?;
        let needs = self.needs(pred);
        Ok(self.push(
            Tensor::new(&[1], vec![loss])?,
            Op::SquaredError {
                pred,
                target: target.clone(),
            },
            needs,
        ))
    }

    /// Scalar clamped binary cross-entropy of `pred` against a binary target.
    pub fn binary_cross_entropy(&mut self, pred: Var, target: &Tensor<T>) -> Result<Var> {
        let loss = losses::secret_loss(target, self.value(pred))?;
        let needs = self.needs(pred);
        Ok(self.push(
            Tensor::new(&[1], vec![loss])?,
            Op::BinaryCrossEntropy {
                pred,
                target: target.clone(),
            },
            needs,
        ))
    }

    /// Scalar `Σ wᵢ·xᵢ` over scalar nodes.
    pub fn weighted_sum(&mut self, terms: &[(Var, T)]) -> Result<Var> {
        let mut total = T::zero();
        for &(v, w) in terms {
            let t = self.value(v);
            if t.len() != 1 {
                return Err(Error::shape("weighted_sum", &[1], t.shape()));
            }
            total += w * t.data()[0];
        }
        let needs = terms.iter().any(|&(v, _)| self.needs(v));
        Ok(self.push(Tensor::new(&[1], vec![total])?, Op::WeightedSum(terms.to_vec()), needs))
    }

    /// Propagates `d root / d ·` through the tape. `root` must be a scalar.
    pub fn backward(&self, root: Var, layer_grads: &mut [LayerGrad<T>]) -> Result<InputGrads<T>> {
        if self.value(root).len() != 1 {
            return Err(Error::shape("backward root", &[1], self.value(root).shape()));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(vec![T::one()]);
        let mut input_grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];

        fn add<T: Scalar>(slot: &mut Option<Vec<T>>, delta: Vec<T>) {
            match slot {
                Some(g) => g.iter_mut().zip(delta).for_each(|(a, b)| *a += b),
                None => *slot = Some(delta),
            }
        }

        for idx in (0..=root.0).rev() {
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => input_grads[idx] = Some(upstream),
                Op::Conv { input, layer, slot } => {
                    let lg = layer_grads.get_mut(*slot).ok_or_else(|| {
                        Error::InvalidArgument(format!("no gradient slot {slot} for conv layer"))
                    })?;
                    let gi = ops::conv2d_backward_accumulate(
                        self.value(*input),
                        layer,
                        &upstream,
                        self.needs(*input),
                        &mut lg.kernels,
                        &mut lg.bias,
                    )?;
                    if let Some(gi) = gi {
                        add(&mut grads[input.0], gi);
                    }
                }
                Op::Relu(input) => {
                    if self.needs(*input) {
                        let x = self.value(*input).data();
                        let g = x
                            .iter()
                            .zip(upstream)
                            .map(|(&x, g)| if x > T::zero() { g } else { T::zero() })
                            .collect();
                        add(&mut grads[input.0], g);
                    }
                }
                Op::Sigmoid(input) => {
                    if self.needs(*input) {
                        let s = node.value.data();
                        let g = s
                            .iter()
                            .zip(upstream)
                            .map(|(&s, g)| g * s * (T::one() - s))
                            .collect();
                        add(&mut grads[input.0], g);
                    }
                }
                Op::Concat(inputs) => {
                    let mut offset = 0;
                    for v in inputs {
                        let n = self.value(*v).len();
                        if self.needs(*v) {
                            add(&mut grads[v.0], upstream[offset..offset + n].to_vec());
                        }
                        offset += n;
                    }
                }
                Op::SquaredError { pred, target } => {
                    if self.needs(*pred) {
                        let g = losses::cover_loss_grad(target, self.value(*pred), upstream[0]);
                        add(&mut grads[pred.0], g);
                    }
                }
                Op::BinaryCrossEntropy { pred, target } => {
                    if self.needs(*pred) {
                        let g = losses::secret_loss_grad(target, self.value(*pred), upstream[0]);
                        add(&mut grads[pred.0], g);
                    }
                }
                Op::WeightedSum(terms) => {
                    for &(v, w) in terms {
                        if self.needs(v) {
                            add(&mut grads[v.0], vec![w * upstream[0]]);
                        }
                    }
                }
            }
        }
        Ok(InputGrads { grads: input_grads })
    }
}
