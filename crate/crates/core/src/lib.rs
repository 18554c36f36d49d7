//! Deep-steganography pipeline for smuggling tabular records out through
//! ordinary-looking images.
//!
//! Records are one-hot encoded into binary secret images ([`codec`]), a
//! preparation / hiding / reveal network triple ([`network`]) learns to
//! embed them into cover images ([`media`]) and recover them, and
//! [`metrics`] scores secrecy (PSNR, SSIM) and accuracy (bit accuracy).
//! [`lsb`] is the classic least-significant-bit baseline.
//!
//! The numeric core is generic over [`Scalar`] (`f32` for training, `f64`
//! for gradient checks); the aliases below name the common instantiations.

pub mod adam;
pub mod checkpoint;
pub mod codec;
pub mod error;
pub mod gradcheck;
mod kernels;
pub mod losses;
pub mod lsb;
pub mod media;
pub mod metrics;
pub mod network;
pub mod ops;
pub mod scalar;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Tensor32 = tensor::Tensor<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type StegoModel32 = network::StegoModel<f32>;
pub type StegoModel64 = network::StegoModel<f64>;
