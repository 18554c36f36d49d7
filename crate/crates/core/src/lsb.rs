//! Classic least-significant-bit embedding on 8-bit samples.
//!
//! Samples are visited channel-major, then row-major (the natural order of a
//! `C×H×W` buffer). Within a sample, payload bits fill the low `n` bits most
//! significant first.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LsbConfig {
    n: u8,
}

impl LsbConfig {
    pub fn new(n: u8) -> Result<Self> {
        if !(1..=8).contains(&n) {
            return Err(Error::InvalidConfig(format!("LSB bit count must be in 1..=8, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn bits(&self) -> u8 {
        self.n
    }

    /// Payload bits a cover of `samples` bytes can hold.
    pub fn capacity(&self, samples: usize) -> usize {
        samples * self.n as usize
    }
}

/// Replaces the low `n` bits of consecutive samples with the payload; a
/// partial final group is zero-padded. Samples past the payload are untouched.
pub fn lsb_embed(cover: &[u8], payload: &[u8], config: LsbConfig) -> Result<Vec<u8>> {
    let capacity = config.capacity(cover.len());
    if payload.len() > capacity {
        return Err(Error::CapacityExceeded {
            bits: payload.len(),
            capacity,
        });
    }
    if let Some(i) = payload.iter().position(|&b| b > 1) {
        return Err(Error::InvalidArgument(format!(
            "payload bit {i} is {}, expected 0 or 1",
            payload[i]
        )));
    }
    let n = config.n as usize;
    let mask: u8 = if n == 8 { 0xFF } else { (1u8 << n) - 1 };
    let mut out = cover.to_vec();
    for (byte, group) in out.iter_mut().zip(payload.chunks(n)) {
        let mut v = 0u8;
        for i in 0..n {
            v = (v << 1) | group.get(i).copied().unwrap_or(0);
        }
        *byte = (*byte & !mask) | v;
    }
    Ok(out)
}

pub fn lsb_extract(container: &[u8], bit_count: usize, config: LsbConfig) -> Result<Vec<u8>> {
    let capacity = config.capacity(container.len());
    if bit_count > capacity {
        return Err(Error::CapacityExceeded {
            bits: bit_count,
            capacity,
        });
    }
    let n = config.n as usize;
    let mut bits = Vec::with_capacity(bit_count);
    'outer: for &byte in container {
        for i in (0..n).rev() {
            if bits.len() == bit_count {
                break 'outer;
            }
            bits.push((byte >> i) & 1);
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_bit_replacement() {
        let c = LsbConfig::new(1).unwrap();
        assert_eq!(lsb_embed(&[0b1011_0010], &[1], c).unwrap(), vec![0b1011_0011]);
        let c2 = LsbConfig::new(2).unwrap();
        assert_eq!(lsb_embed(&[0xFF], &[0, 0], c2).unwrap(), vec![0b1111_1100]);
    }

    #[test]
    fn config_bounds() {
        assert!(LsbConfig::new(0).is_err());
        assert!(LsbConfig::new(9).is_err());
        assert!(LsbConfig::new(8).is_ok());
    }

    #[test]
    fn round_trip_and_untouched_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cover: Vec<u8> = (0..3 * 64 * 64).map(|_| rng.random()).collect();
        let payload: Vec<u8> = (0..1000).map(|_| rng.random_range(0..2)).collect();
        for n in 1..=8 {
            let c = LsbConfig::new(n).unwrap();
            let con = lsb_embed(&cover, &payload, c).unwrap();
            assert_eq!(lsb_extract(&con, payload.len(), c).unwrap(), payload);
            let used = payload.len().div_ceil(n as usize);
            assert_eq!(&con[used..], &cover[used..]);
            let max = (1i32 << n) - 1;
            assert!(con.iter().zip(&cover).all(|(&a, &b)| (a as i32 - b as i32).abs() <= max));
        }
    }

    #[test]
    fn capacity_errors_and_empty_extract() {
        let c = LsbConfig::new(2).unwrap();
        assert!(matches!(
            lsb_embed(&[0; 3], &[1; 7], c),
            Err(Error::CapacityExceeded { bits: 7, capacity: 6 })
        ));
        assert!(lsb_extract(&[0; 3], 7, c).is_err());
        assert!(lsb_extract(&[0; 3], 0, c).unwrap().is_empty());
        assert!(lsb_embed(&[0; 3], &[2], c).is_err());
    }
}
