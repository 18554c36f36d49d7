//! Forward and backward kernels for the handful of operations the
//! steganography networks are built from.
//!
//! Convolution is stride 1 with "same" padding, computed directly over a
//! zero-bordered copy of the input (see [`crate::kernels`]).

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Zero padding around the spatial axes of a convolution input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Padding {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl Padding {
    /// Padding that keeps `H×W` unchanged at stride 1. Even kernels put the
    /// extra row/column after the image: `floor((k-1)/2)` before,
    /// `ceil((k-1)/2)` after.
    pub fn same(k: usize) -> Self {
        let before = (k - 1) / 2;
        let after = k - 1 - before;
        Self {
            top: before,
            bottom: after,
            left: before,
            right: after,
        }
    }

    pub fn uniform(p: usize) -> Self {
        Self {
            top: p,
            bottom: p,
            left: p,
            right: p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    /// `[C_out, C_in, k, k]`
    pub kernels: Tensor<T>,
    /// `[C_out]`
    pub bias: Tensor<T>,
    pub kernel_size: usize,
    pub padding: Padding,
}

impl<T: Scalar> ConvLayer<T> {
    pub fn from_parts(kernels: Tensor<T>, bias: Tensor<T>, padding: Padding) -> Result<Self> {
        let (c_out, k) = match *kernels.shape() {
            [c_out, _, kh, kw] if kh == kw => (c_out, kh),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "conv kernels must be [C_out, C_in, k, k], got {:?}",
                    kernels.shape()
                )))
            }
        };
        bias.ensure_shape("conv bias", &[c_out])?;
        if padding.top + padding.bottom != k - 1 || padding.left + padding.right != k - 1 {
            return Err(Error::InvalidArgument(format!(
                "padding {padding:?} does not preserve spatial size for k={k}"
            )));
        }
        Ok(Self {
            kernels,
            bias,
            kernel_size: k,
            padding,
        })
    }

    pub fn zeros(in_channels: usize, out_channels: usize, k: usize) -> Self {
        Self {
            kernels: Tensor::zeros(&[out_channels, in_channels, k, k]),
            bias: Tensor::zeros(&[out_channels]),
            kernel_size: k,
            padding: Padding::same(k),
        }
    }

    /// He-uniform kernels in `±sqrt(6/fan_in)`, bias zero.
    pub fn init_uniform<R: Rng + ?Sized>(
        in_channels: usize,
        out_channels: usize,
        k: usize,
        rng: &mut R,
    ) -> Self {
        let mut layer = Self::zeros(in_channels, out_channels, k);
        let bound = (6.0 / (in_channels * k * k) as f64).sqrt();
        for v in layer.kernels.data_mut() {
            *v = T::lit(rng.random_range(-bound..bound));
        }
        layer
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.kernels.len() + self.bias.len()
    }

    fn check_input(&self, op: &'static str, input: &Tensor<T>) -> Result<(usize, usize, usize)> {
        let (c, h, w) = input.chw()?;
        if c != self.in_channels() {
            return Err(Error::shape(op, &[self.in_channels(), h, w], input.shape()));
        }
        Ok((c, h, w))
    }
}

/// Gradients of a convolution with respect to its input and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub kernels: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Input copied into a zero-bordered `[C, Hp, Wp]` buffer (plus a little
/// slack so the last tap stays in bounds).
///
/// With that layout kernel tap `(ky, kx)` sees the whole image as the
/// contiguous run starting at `ky·Wp + kx`. Outputs are produced on the
/// padded row pitch `Wp`; columns `x >= W` are scratch.
struct Padded<T> {
    data: Vec<T>,
    hp: usize,
    wp: usize,
}

impl<T: Scalar> Padded<T> {
    fn zeros(c: usize, h: usize, w: usize, k: usize) -> Self {
        let (hp, wp) = (h + k - 1, w + k - 1);
        Self {
            data: vec![T::zero(); c * hp * wp + k],
            hp,
            wp,
        }
    }

    fn from_input(x: &[T], c: usize, h: usize, w: usize, k: usize, pad: Padding) -> Self {
        let mut p = Self::zeros(c, h, w, k);
        let plane = p.hp * p.wp;
        for ci in 0..c {
            for y in 0..h {
                let dst = ci * plane + (y + pad.top) * p.wp + pad.left;
                p.data[dst..dst + w].copy_from_slice(&x[(ci * h + y) * w..][..w]);
            }
        }
        p
    }

    fn plane(&self) -> usize {
        self.hp * self.wp
    }
}

/// Tap offsets into a [`Padded`] buffer in kernel layout order `(ci, ky, kx)`.
fn tap_offsets(c: usize, k: usize, plane: usize, wp: usize) -> Vec<usize> {
    let mut offs = Vec::with_capacity(c * k * k);
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                offs.push(ci * plane + ky * wp + kx);
            }
        }
    }
    offs
}

pub fn conv2d_forward<T: Scalar>(input: &Tensor<T>, layer: &ConvLayer<T>) -> Result<Tensor<T>> {
    let (c, h, w) = layer.check_input("conv2d_forward", input)?;
    let k = layer.kernel_size;
    let c_out = layer.out_channels();
    let xp = Padded::from_input(input.data(), c, h, w, k, layer.padding);
    let n = h * xp.wp;
    let mut wide = vec![T::zero(); c_out * n];
    let offs = tap_offsets(c, k, xp.plane(), xp.wp);
    kernels::gather(&mut wide, n, &xp.data, &offs, layer.kernels.data());
    let mut out = Vec::with_capacity(c_out * h * w);
    for (co, &b) in layer.bias.data().iter().enumerate() {
        for y in 0..h {
            out.extend(wide[co * n + y * xp.wp..][..w].iter().map(|&v| v + b));
        }
    }
    Tensor::new(&[c_out, h, w], out)
}

/// Accumulates parameter gradients into `grad_kernels` / `grad_bias` and
/// returns the input gradient when `want_input` is set.
pub(crate) fn conv2d_backward_accumulate<T: Scalar>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    upstream: &[T],
    want_input: bool,
    grad_kernels: &mut [T],
    grad_bias: &mut [T],
) -> Result<Option<Vec<T>>> {
    let (c, h, w) = layer.check_input("conv2d_backward", input)?;
    let k = layer.kernel_size;
    let hw = h * w;
    let c_out = layer.out_channels();
    if upstream.len() != c_out * hw {
        return Err(Error::LengthMismatch {
            op: "conv2d_backward upstream",
            expected: c_out * hw,
            actual: upstream.len(),
        });
    }
    for (gb, plane) in grad_bias.iter_mut().zip(upstream.chunks_exact(hw)) {
        *gb += plane.iter().copied().sum::<T>();
    }
    let xp = Padded::from_input(input.data(), c, h, w, k, layer.padding);
    let wp = xp.wp;
    let n = h * wp;
    let q0 = layer.padding.top * wp;
    // Each upstream row sits on the padded pitch behind `front` zeros so
    // the flipped taps of the input gradient never index below zero.
    // Scratch columns stay zero and contribute nothing.
    let front = (k - 1) * wp + (k - 1);
    let row_len = front + n + q0;
    let mut up = vec![T::zero(); c_out * row_len + 1];
    for co in 0..c_out {
        for y in 0..h {
            up[co * row_len + front + y * wp..][..w].copy_from_slice(&upstream[(co * h + y) * w..][..w]);
        }
    }
    let rows: Vec<T> = (0..c_out)
        .flat_map(|co| up[co * row_len + front..][..n].iter().copied())
        .collect();
    let offs = tap_offsets(c, k, xp.plane(), wp);
    kernels::dot_taps(grad_kernels, &rows, n, &xp.data, &offs);
    if !want_input {
        return Ok(None);
    }
    // dx(q) = Σ K[co, ci, ky, kx] · up[co](q - ky·wp - kx), over q on the
    // padded grid starting at the first interior row.
    let kk = k * k;
    let mut flipped = Vec::with_capacity(c_out * kk);
    for co in 0..c_out {
        for ky in 0..k {
            for kx in 0..k {
                flipped.push(co * row_len + front + q0 - ky * wp - kx);
            }
        }
    }
    let kern = layer.kernels.data();
    let mut weights = Vec::with_capacity(c * c_out * kk);
    for ci in 0..c {
        for co in 0..c_out {
            weights.extend_from_slice(&kern[(co * c + ci) * kk..][..kk]);
        }
    }
    let mut wide = vec![T::zero(); c * n];
    kernels::gather(&mut wide, n, &up, &flipped, &weights);
    let mut dx = Vec::with_capacity(c * hw);
    for ci in 0..c {
        for y in 0..h {
            dx.extend_from_slice(&wide[ci * n + y * wp + layer.padding.left..][..w]);
        }
    }
    Ok(Some(dx))
}

pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    upstream: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let (_, h, w) = input.chw()?;
    upstream.ensure_shape("conv2d_backward", &[layer.out_channels(), h, w])?;
    let mut gk = vec![T::zero(); layer.kernels.len()];
    let mut gb = vec![T::zero(); layer.bias.len()];
    let gi = conv2d_backward_accumulate(input, layer, upstream.data(), true, &mut gk, &mut gb)?
        .expect("input gradient requested");
    Ok(ConvGrads {
        input: Tensor::new(input.shape(), gi)?,
        kernels: Tensor::new(layer.kernels.shape(), gk)?,
        bias: Tensor::new(layer.bias.shape(), gb)?,
    })
}

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes `upstream` where the forward input was strictly positive.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    upstream.ensure_shape("relu_backward", input.shape())?;
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.shape(), data)
}

#[inline]
pub fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(sigmoid_scalar)
}

/// Uses the forward output: `d/dx σ(x) = σ(x)(1 − σ(x))`.
pub fn sigmoid_backward<T: Scalar>(output: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    upstream.ensure_shape("sigmoid_backward", output.shape())?;
    let data = output
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&s, &g)| g * s * (T::one() - s))
        .collect();
    Tensor::new(output.shape(), data)
}

/// Stacks `[C_i, H, W]` tensors along the channel axis in argument order.
pub fn concat_channels<T: Scalar>(inputs: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::InvalidArgument("concat_channels: no inputs".into()))?;
    let (_, h, w) = first.chw()?;
    let mut channels = 0;
    let mut data = Vec::new();
    for t in inputs {
        let (c, th, tw) = t.chw()?;
        if (th, tw) != (h, w) {
            return Err(Error::shape("concat_channels", &[c, h, w], t.shape()));
        }
        channels += c;
        data.extend_from_slice(t.data());
    }
    Tensor::new(&[channels, h, w], data)
}

/// Backward of [`concat_channels`]: slices `upstream` into per-input pieces.
pub fn split_channels<T: Scalar>(upstream: &Tensor<T>, channels: &[usize]) -> Result<Vec<Tensor<T>>> {
    let (c, h, w) = upstream.chw()?;
    let total: usize = channels.iter().sum();
    if total != c {
        return Err(Error::shape("split_channels", &[total, h, w], upstream.shape()));
    }
    let mut offset = 0;
    channels
        .iter()
        .map(|&ci| {
            let start = offset * h * w;
            offset += ci;
            Tensor::new(&[ci, h, w], upstream.data()[start..offset * h * w].to_vec())
        })
        .collect()
}
